//! Parameter sweeps, presets and the tabular renderers used by the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bath::{BathParams, QubitParams};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::output::{json_num, json_opt, num, opt_num};
use crate::recoherence::{analyze_with, lambda_min, AnalyzeOptions, RecoherenceReport, ThresholdGrid};

/// Default resolution of preset grids.
pub const PRESET_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    Ohmicity,
    Temperature,
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ohmicity" | "s" => Ok(Self::Ohmicity),
            "temperature" | "temp" | "T" => Ok(Self::Temperature),
            _ => Err(Error::Invalid(format!(
                "unknown sweep variable '{s}' (ohmicity|temperature)"
            ))),
        }
    }
}

/// Inclusive uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let g = Self { min, max, count };
        g.validate()?;
        Ok(g)
    }

    /// A single point needs `min == max`; otherwise `min < max` and `count >= 2`.
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite bounds [{}, {}]",
                self.min, self.max
            )));
        }
        match self.count {
            0 => Err(Error::InvalidGrid("need count >= 1".into())),
            1 if self.min != self.max => Err(Error::InvalidGrid(format!(
                "a single point needs min == max, got [{}, {}]",
                self.min, self.max
            ))),
            1 => Ok(()),
            _ if self.min < self.max => Ok(()),
            _ => Err(Error::InvalidGrid(format!(
                "need min < max, got [{}, {}]",
                self.min, self.max
            ))),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = self.count - 1;
        (0..self.count)
            .map(|i| {
                if i == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub vary: SweepVariable,
    pub grid: GridSpec,
    pub fixed_lambda: f64,
    /// temperatures when sweeping s, ohmicities when sweeping T
    pub series: Vec<f64>,
    pub qubit: QubitParams,
    pub omega_c: f64,
    pub options: AnalyzeOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.qubit.validate()?;
        if self.series.is_empty() {
            return Err(Error::Invalid("sweep series is empty".into()));
        }
        if !(self.fixed_lambda >= 0.0 && self.fixed_lambda.is_finite()) {
            return Err(Error::domain("lambda", self.fixed_lambda, "lambda >= 0"));
        }
        // every point must be a valid bath with T > 0 (the threshold needs it)
        for &x in &[self.grid.min, self.grid.max] {
            for &v in &self.series {
                let bath = self.bath_at(x, v);
                bath.validate()?;
                if !(bath.temperature > 0.0) {
                    return Err(Error::domain("temperature", bath.temperature, "temperature > 0"));
                }
            }
        }
        Ok(())
    }

    fn bath_at(&self, x: f64, series_value: f64) -> BathParams {
        let (s, temperature) = match self.vary {
            SweepVariable::Ohmicity => (x, series_value),
            SweepVariable::Temperature => (series_value, x),
        };
        BathParams {
            lambda: self.fixed_lambda,
            s,
            temperature,
            omega_c: self.omega_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub series_value: f64,
    pub lambda: f64,
    pub s: f64,
    pub temperature: f64,
    pub t_star: Option<f64>,
    pub t_extr: Option<f64>,
    pub gamma_extr: Option<f64>,
    pub t_star_tot: Option<f64>,
    pub rde_count: Option<usize>,
    pub lambda_min: Option<f64>,
    pub truncated: bool,
    /// "ok" or the error that stopped this point
    pub status: String,
}

fn sweep_point(spec: &SweepSpec, x: f64, series_value: f64) -> SweepRow {
    let bath = spec.bath_at(x, series_value);
    let mut row = SweepRow {
        x,
        series_value,
        lambda: bath.lambda,
        s: bath.s,
        temperature: bath.temperature,
        t_star: None,
        t_extr: None,
        gamma_extr: None,
        t_star_tot: None,
        rde_count: None,
        lambda_min: None,
        truncated: false,
        status: "ok".into(),
    };
    let lm = lambda_min(bath.s, bath.temperature, &spec.qubit, bath.omega_c);
    let report = analyze_with(&bath, &spec.qubit, &spec.options);
    match (lm, report) {
        (Ok(lm), Ok(r)) => {
            row.lambda_min = Some(lm);
            row.t_star = r.t_star;
            row.t_extr = r.t_extr;
            row.gamma_extr = r.gamma_extr;
            row.t_star_tot = Some(r.t_star_tot);
            row.rde_count = Some(r.rde_count);
            row.truncated = r.truncated;
        }
        (lm, r) => {
            row.lambda_min = lm.as_ref().ok().copied();
            let e = lm.err().or(r.err()).expect("one side failed");
            log::warn!("sweep point s={} T={} failed: {e}", bath.s, bath.temperature);
            row.status = e.to_string();
        }
    }
    row
}

/// Runs `f` on a pool of `jobs` workers (0 = all cores).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// One row per (series value, grid point), series-major. Point failures are
/// recorded in the row status; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let xs = spec.grid.values();
    let points: Vec<(f64, f64)> = spec
        .series
        .iter()
        .flat_map(|&v| xs.iter().map(move |&x| (x, v)))
        .collect();
    with_jobs(jobs, || {
        points.par_iter().map(|&(x, v)| sweep_point(spec, x, v)).collect()
    })
}

pub const SWEEP_HEADER: [&str; 12] = [
    "lambda",
    "s",
    "T",
    "t_star",
    "t_extr",
    "gamma_extr",
    "t_star_tot",
    "rde_count",
    "lambda_min",
    "truncated",
    "status",
    "series",
];

pub fn sweep_csv_row(r: &SweepRow) -> Vec<String> {
    vec![
        num(r.lambda),
        num(r.s),
        num(r.temperature),
        opt_num(r.t_star),
        opt_num(r.t_extr),
        opt_num(r.gamma_extr),
        opt_num(r.t_star_tot),
        r.rde_count.map(|n| n.to_string()).unwrap_or_default(),
        opt_num(r.lambda_min),
        r.truncated.to_string(),
        r.status.clone(),
        num(r.series_value),
    ]
}

pub fn sweep_json(r: &SweepRow) -> Value {
    json!({
        "lambda": json_num(r.lambda),
        "s": json_num(r.s),
        "T": json_num(r.temperature),
        "t_star": json_opt(r.t_star),
        "t_extr": json_opt(r.t_extr),
        "gamma_extr": json_opt(r.gamma_extr),
        "t_star_tot": json_opt(r.t_star_tot),
        "rde_count": r.rde_count,
        "lambda_min": json_opt(r.lambda_min),
        "truncated": r.truncated,
        "status": r.status,
        "series": json_num(r.series_value),
    })
}

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "gamma", "gamma_cor", "gamma_tot", "chi", "abs_sigma"];

pub fn trajectory_csv_rows(tr: &Trajectory) -> Vec<Vec<String>> {
    (0..tr.len())
        .map(|i| {
            [
                tr.times[i],
                tr.gamma[i],
                tr.gamma_cor[i],
                tr.gamma_tot[i],
                tr.chi[i],
                tr.abs_sigma[i],
            ]
            .iter()
            .map(|&v| num(v))
            .collect()
        })
        .collect()
}

pub fn trajectory_json(tr: &Trajectory) -> Value {
    let col = |v: &[f64]| Value::Array(v.iter().map(|&x| json_num(x)).collect());
    json!({
        "t": col(&tr.times),
        "gamma": col(&tr.gamma),
        "gamma_cor": col(&tr.gamma_cor),
        "gamma_tot": col(&tr.gamma_tot),
        "chi": col(&tr.chi),
        "abs_sigma": col(&tr.abs_sigma),
    })
}

pub const REPORT_HEADER: [&str; 11] = [
    "lambda",
    "s",
    "T",
    "t_star",
    "t_extr",
    "gamma_extr",
    "t_star_tot",
    "rde_count",
    "truncated",
    "horizon",
    "intervals",
];

/// Intervals are packed as `start:end` pairs separated by `;`.
pub fn report_csv_row(bath: &BathParams, r: &RecoherenceReport) -> Vec<String> {
    let intervals = r
        .intervals
        .iter()
        .map(|&(a, b)| format!("{}:{}", num(a), num(b)))
        .collect::<Vec<_>>()
        .join(";");
    vec![
        num(bath.lambda),
        num(bath.s),
        num(bath.temperature),
        opt_num(r.t_star),
        opt_num(r.t_extr),
        opt_num(r.gamma_extr),
        num(r.t_star_tot),
        r.rde_count.to_string(),
        r.truncated.to_string(),
        num(r.horizon),
        intervals,
    ]
}

pub fn report_json(bath: &BathParams, r: &RecoherenceReport) -> Value {
    json!({
        "lambda": json_num(bath.lambda),
        "s": json_num(bath.s),
        "T": json_num(bath.temperature),
        "t_star": json_opt(r.t_star),
        "t_extr": json_opt(r.t_extr),
        "gamma_extr": json_opt(r.gamma_extr),
        "intervals": r.intervals.iter().map(|&(a, b)| json!([json_num(a), json_num(b)])).collect::<Vec<_>>(),
        "t_star_tot": json_num(r.t_star_tot),
        "rde_count": r.rde_count,
        "truncated": r.truncated,
        "horizon": json_num(r.horizon),
    })
}

pub const MAP_HEADER: [&str; 3] = ["s", "T", "lambda_min"];

pub fn map_csv_rows(g: &ThresholdGrid) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(g.s_values.len() * g.t_values.len());
    for (i, &s) in g.s_values.iter().enumerate() {
        for (j, &t) in g.t_values.iter().enumerate() {
            rows.push(vec![num(s), num(t), num(g.lambda_min[i][j])]);
        }
    }
    rows
}

pub fn map_json(g: &ThresholdGrid) -> Value {
    json!({
        "s": g.s_values.iter().map(|&x| json_num(x)).collect::<Vec<_>>(),
        "T": g.t_values.iter().map(|&x| json_num(x)).collect::<Vec<_>>(),
        "lambda_min": g.lambda_min.iter()
            .map(|row| row.iter().map(|&x| json_num(x)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

/// Threshold map evaluated in parallel, rows in grid order.
pub fn run_lambda_min_map(
    s_grid: &GridSpec,
    t_grid: &GridSpec,
    qubit: &QubitParams,
    omega_c: f64,
    jobs: usize,
) -> Result<ThresholdGrid> {
    s_grid.validate()?;
    t_grid.validate()?;
    qubit.validate()?;
    if !(s_grid.min > 0.0) {
        return Err(Error::domain("s", s_grid.min, "s > 0"));
    }
    if !(t_grid.min > 0.0) {
        return Err(Error::domain("temperature", t_grid.min, "temperature > 0"));
    }
    let (s_values, t_values) = (s_grid.values(), t_grid.values());
    let rows: Result<Vec<Vec<f64>>> = with_jobs(jobs, || {
        s_values
            .par_iter()
            .map(|&s| t_values.iter().map(|&t| lambda_min(s, t, qubit, omega_c)).collect())
            .collect()
    })?;
    Ok(ThresholdGrid {
        s_values,
        t_values,
        lambda_min: rows?,
    })
}

/// Named parameter sets for the standard plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

pub const PRESET_COUPLINGS: [f64; 3] = [0.1, 1.0, 10.0];
pub const FIG4_TEMPERATURES: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
pub const FIG5_OHMICITIES: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            _ => Err(Error::Invalid(format!("unknown preset '{s}' (fig1..fig5)"))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }

    /// Subcommand the preset belongs to.
    pub fn command(self) -> &'static str {
        match self {
            Self::Fig1 => "lambda-min-map",
            Self::Fig2 | Self::Fig3 => "trajectory",
            Self::Fig4 | Self::Fig5 => "sweep",
        }
    }

    /// (λ, s, T, t_max) for the trajectory presets.
    pub fn trajectories(self) -> Vec<(f64, f64, f64, f64)> {
        match self {
            Self::Fig2 => [0.1, 1.0, 10.0].iter().map(|&t| (1.0, 1.0, t, 20.0)).collect(),
            Self::Fig3 => vec![(1.0, 0.05, 0.1, 20.0), (1.0, 7.0, 4.0, 20.0)],
            _ => Vec::new(),
        }
    }

    /// One spec per coupling for the sweep presets.
    pub fn sweeps(self, qubit: QubitParams, omega_c: f64, options: AnalyzeOptions) -> Vec<SweepSpec> {
        let (vary, grid, series): (_, _, &[f64]) = match self {
            Self::Fig4 => (
                SweepVariable::Ohmicity,
                GridSpec {
                    min: 0.05,
                    max: 7.0,
                    count: PRESET_POINTS,
                },
                &FIG4_TEMPERATURES,
            ),
            Self::Fig5 => (
                SweepVariable::Temperature,
                GridSpec {
                    min: 0.1,
                    max: 4.0,
                    count: PRESET_POINTS,
                },
                &FIG5_OHMICITIES,
            ),
            _ => return Vec::new(),
        };
        PRESET_COUPLINGS
            .iter()
            .map(|&fixed_lambda| SweepSpec {
                vary,
                grid,
                fixed_lambda,
                series: series.to_vec(),
                qubit,
                omega_c,
                options,
            })
            .collect()
    }

    /// (s grid, T grid) for the threshold map.
    pub fn map_grids(self) -> Option<(GridSpec, GridSpec)> {
        match self {
            Self::Fig1 => Some((
                GridSpec {
                    min: 0.05,
                    max: 5.0,
                    count: PRESET_POINTS,
                },
                GridSpec {
                    min: 0.1,
                    max: 4.0,
                    count: PRESET_POINTS,
                },
            )),
            _ => None,
        }
    }
}

/// Runs every sweep of a list and concatenates the rows in order.
pub fn run_sweeps(specs: &[SweepSpec], jobs: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for spec in specs {
        rows.extend(run_sweep(spec, jobs)?);
    }
    Ok(rows)
}

/// Parses `key = value` lines. `#` starts a comment; keys may carry the
/// leading dashes of the matching flag.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Invalid(format!("config line {}: expected key=value", n + 1)));
        };
        let key = k.trim().trim_start_matches('-').replace('_', "-");
        if key.is_empty() {
            return Err(Error::Invalid(format!("config line {}: empty key", n + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Gnuplot script plotting `data` (CSV written by the given subcommand).
pub fn gnuplot_script(command: &str, data: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let quoted = data.replace('\'', "''");
    match command {
        "trajectory" => {
            let _ = writeln!(s, "set xlabel 't'\nset ylabel 'exponent'");
            let _ = writeln!(
                s,
                "plot '{quoted}' using 't':'gamma_tot' with lines, '' using 't':'gamma_cor' with lines, '' using 't':'gamma' with lines"
            );
        }
        "sweep" => {
            let _ = writeln!(s, "set ylabel 'gamma_extr'");
            let _ = writeln!(s, "plot '{quoted}' using 's':'gamma_extr' with points");
        }
        "lambda-min-map" => {
            let _ = writeln!(s, "set xlabel 's'\nset ylabel 'T'\nset view map\nset dgrid3d");
            let _ = writeln!(s, "splot '{quoted}' using 's':'T':'lambda_min' with pm3d");
        }
        _ => {
            let _ = writeln!(s, "plot '{quoted}' using 1:2");
        }
    }
    s
}
