use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qubit_dephasing::bath::{BathParams, QubitParams};
use qubit_dephasing::dynamics::{coherence_trajectory_with, refined_grid, PhaseBranch};
use qubit_dephasing::measurement::{
    gram_operator, initial_observables, is_gram_diagonal, nnd_coefficients, MeasurementScheme,
};
use qubit_dephasing::output::{json_num, write_csv};
use qubit_dephasing::recoherence::{analyze_scheme, AnalyzeOptions, ExtremumScope, TStarDefinition};
use qubit_dephasing::sweep::{self, GridSpec, Preset, SweepSpec, SweepVariable};
use qubit_dephasing::Error;

#[derive(Parser)]
#[command(
    name = "qubit-dephasing",
    version,
    about = "Recoherence of a dephasing qubit after a non-selective measurement"
)]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// key=value file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// coupling strength
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// ohmicity index s
    #[arg(long, global = true)]
    ohmicity: Option<f64>,
    /// temperature in units of the cutoff
    #[arg(long, global = true)]
    temp: Option<f64>,
    /// qubit level splitting [default: 0.1]
    #[arg(long, global = true)]
    omega0: Option<f64>,
    /// bath cutoff frequency [default: 1]
    #[arg(long = "omega-c", global = true)]
    omega_c: Option<f64>,
    /// end of the time grid [default: 20]
    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,
    /// minimum number of grid points [default: 2001]
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// output file [default: stdout]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// reported recoherence time [default: crossing]
    #[arg(long = "t-star-def", global = true, value_enum)]
    t_star_def: Option<TStarArg>,
    /// worker threads, 0 for all cores [default: 0]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// named parameter set: fig1 (lambda-min-map), fig2 and fig3 (trajectory), fig4 and fig5 (sweep)
    #[arg(long, global = true)]
    preset: Option<String>,
    /// also write a gnuplot script for the data in --out
    #[arg(long = "gnuplot-script", global = true)]
    gnuplot_script: Option<PathBuf>,
    /// polar angle of the measured axis a (radians)
    #[arg(long = "theta-a", global = true)]
    theta_a: Option<f64>,
    /// azimuth of a
    #[arg(long = "phi-a", global = true)]
    phi_a: Option<f64>,
    /// Bloch angles of the post-measurement states b₁ and b₂
    #[arg(long, global = true)]
    theta1: Option<f64>,
    #[arg(long, global = true)]
    phi1: Option<f64>,
    #[arg(long, global = true)]
    theta2: Option<f64>,
    #[arg(long, global = true)]
    phi2: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// γ, γ_cor, γ_tot, χ and |⟨σ₊⟩| on a time grid
    #[command(allow_negative_numbers = true)]
    Trajectory {
        #[arg(long = "phase-branch", value_enum)]
        phase_branch: Option<BranchArg>,
    },
    /// recoherence times, increments and negative intervals
    #[command(allow_negative_numbers = true)]
    Recoherence {
        #[arg(long = "extremum-scope", value_enum)]
        extremum_scope: Option<ScopeArg>,
        /// scan limit in units of 1/ω_c [default: 10000]
        #[arg(long = "t-cap")]
        t_cap: Option<f64>,
    },
    /// recoherence over a grid of s or T for a family of the other
    #[command(allow_negative_numbers = true)]
    Sweep {
        /// swept variable
        #[arg(long, value_enum)]
        vary: Option<VaryArg>,
        /// first grid value
        #[arg(long = "grid-min")]
        grid_min: Option<f64>,
        /// last grid value
        #[arg(long = "grid-max")]
        grid_max: Option<f64>,
        /// grid points [default: 200]
        #[arg(long = "grid-count")]
        grid_count: Option<usize>,
        /// comma-separated family values (T when varying s, s when varying T)
        #[arg(long)]
        series: Option<String>,
    },
    /// critical coupling over an (s, T) grid
    #[command(allow_negative_numbers = true)]
    LambdaMinMap {
        /// lower end of the ohmicity axis
        #[arg(long = "s-min")]
        s_min: Option<f64>,
        /// upper end of the ohmicity axis
        #[arg(long = "s-max")]
        s_max: Option<f64>,
        /// ohmicity points [default: 200]
        #[arg(long = "s-count")]
        s_count: Option<usize>,
        /// lower end of the temperature axis
        #[arg(long = "temp-min")]
        temp_min: Option<f64>,
        /// upper end of the temperature axis
        #[arg(long = "temp-max")]
        temp_max: Option<f64>,
        /// temperature points [default: 200]
        #[arg(long = "temp-count")]
        temp_count: Option<usize>,
    },
    /// diagnostics of a measurement scheme
    #[command(allow_negative_numbers = true)]
    SchemeCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TStarArg {
    Crossing,
    Extremum,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Principal,
    Unwrapped,
    Arctan,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Global,
    FirstInterval,
}

#[derive(Clone, Copy, ValueEnum)]
enum VaryArg {
    Ohmicity,
    Temperature,
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Error::Invalid(msg.into()).into()
}

const CONFIG_KEYS: &[&str] = &[
    "lambda",
    "ohmicity",
    "temp",
    "omega0",
    "omega-c",
    "t-max",
    "samples",
    "out",
    "format",
    "t-star-def",
    "jobs",
    "preset",
    "gnuplot-script",
    "theta-a",
    "phi-a",
    "theta1",
    "phi1",
    "theta2",
    "phi2",
    "phase-branch",
    "extremum-scope",
    "t-cap",
    "vary",
    "grid-min",
    "grid-max",
    "grid-count",
    "series",
    "s-min",
    "s-max",
    "s-count",
    "temp-min",
    "temp-max",
    "temp-count",
];

/// Flag values merged with the config file.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&PathBuf>) -> Result<Self, Failure> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?;
                sweep::parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(invalid(format!("unknown config key '{k}'")));
        }
        Ok(Self { file })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, Failure> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("config value '{v}' is not valid for {key}"))),
        }
    }

    fn value_enum<T: ValueEnum>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, Failure> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true)
                .map(Some)
                .map_err(|_| invalid(format!("config value '{v}' is not valid for {key}"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, cli: Option<T>, key: &str) -> Result<T, Failure> {
        self.parse(cli, key)?
            .ok_or_else(|| invalid(format!("--{key} is required")))
    }
}

struct Context {
    cfg: Settings,
    qubit: QubitParams,
    omega_c: f64,
    jobs: usize,
    format: Option<Format>,
    out: Option<PathBuf>,
    gnuplot: Option<PathBuf>,
    preset: Option<Preset>,
    options: AnalyzeOptions,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let cfg = Settings::load(c.config.as_ref())?;
    let qubit = QubitParams::new(cfg.parse(c.omega0, "omega0")?.unwrap_or(0.1))?;
    let omega_c = cfg.parse(c.omega_c, "omega-c")?.unwrap_or(1.0);
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(Error::Domain {
            name: "omega_c",
            value: omega_c,
            constraint: "omega_c > 0",
        }
        .into());
    }
    let preset = match cfg.parse(c.preset.clone(), "preset")? {
        Some(p) => Some(p.parse::<Preset>()?),
        None => None,
    };
    let t_star_def = match cfg.value_enum(c.t_star_def, "t-star-def")? {
        Some(TStarArg::Extremum) => TStarDefinition::Extremum,
        _ => TStarDefinition::Crossing,
    };
    let ctx = Context {
        qubit,
        omega_c,
        jobs: cfg.parse(c.jobs, "jobs")?.unwrap_or(0),
        format: cfg.value_enum(c.format, "format")?,
        out: cfg.parse(c.out.clone(), "out")?,
        gnuplot: cfg.parse(c.gnuplot_script.clone(), "gnuplot-script")?,
        preset,
        options: AnalyzeOptions {
            t_star_def,
            ..AnalyzeOptions::default()
        },
        cfg,
    };
    if ctx.gnuplot.is_some() && ctx.out.is_none() {
        return Err(invalid("--gnuplot-script needs --out for the data file"));
    }
    let name = match &cli.command {
        Command::Trajectory { .. } => "trajectory",
        Command::Recoherence { .. } => "recoherence",
        Command::Sweep { .. } => "sweep",
        Command::LambdaMinMap { .. } => "lambda-min-map",
        Command::SchemeCheck => "scheme-check",
    };
    if let Some(p) = ctx.preset {
        if p.command() != name {
            return Err(invalid(format!(
                "preset {} belongs to the {} subcommand",
                p.name(),
                p.command()
            )));
        }
    }

    let text = match cli.command {
        Command::Trajectory { phase_branch } => trajectory(&ctx, c, phase_branch)?,
        Command::Recoherence { extremum_scope, t_cap } => recoherence(&ctx, c, extremum_scope, t_cap)?,
        Command::Sweep {
            vary,
            grid_min,
            grid_max,
            grid_count,
            series,
        } => run_sweep(&ctx, c, vary, (grid_min, grid_max, grid_count), series)?,
        Command::LambdaMinMap {
            s_min,
            s_max,
            s_count,
            temp_min,
            temp_max,
            temp_count,
        } => lambda_min_map(&ctx, (s_min, s_max, s_count), (temp_min, temp_max, temp_count))?,
        Command::SchemeCheck => scheme_check(&ctx, c)?,
    };

    match &ctx.out {
        Some(path) => fs::write(path, &text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    if let (Some(script), Some(data)) = (&ctx.gnuplot, &ctx.out) {
        fs::write(script, sweep::gnuplot_script(name, &data.to_string_lossy()))?;
    }
    Ok(())
}

fn scheme(ctx: &Context, c: &Common) -> Result<MeasurementScheme, Failure> {
    let d = MeasurementScheme::default();
    let cfg = &ctx.cfg;
    Ok(MeasurementScheme::from_angles(
        cfg.parse(c.theta_a, "theta-a")?.unwrap_or(d.a.theta),
        cfg.parse(c.phi_a, "phi-a")?.unwrap_or(d.a.phi),
        cfg.parse(c.theta1, "theta1")?.unwrap_or(d.b1.theta),
        cfg.parse(c.phi1, "phi1")?.unwrap_or(d.b1.phi),
        cfg.parse(c.theta2, "theta2")?.unwrap_or(d.b2.theta),
        cfg.parse(c.phi2, "phi2")?.unwrap_or(d.b2.phi),
    )?)
}

fn bath_from_flags(ctx: &Context, c: &Common) -> Result<BathParams, Failure> {
    let cfg = &ctx.cfg;
    Ok(BathParams::new(
        cfg.require(c.lambda, "lambda")?,
        cfg.require(c.ohmicity, "ohmicity")?,
        cfg.require(c.temp, "temp")?,
        ctx.omega_c,
    )?)
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn trajectory(ctx: &Context, c: &Common, branch: Option<BranchArg>) -> Result<String, Failure> {
    let cfg = &ctx.cfg;
    let branch = match cfg.value_enum(branch, "phase-branch")? {
        Some(BranchArg::Unwrapped) => PhaseBranch::Unwrapped,
        Some(BranchArg::Arctan) => PhaseBranch::Arctan,
        _ => PhaseBranch::Principal,
    };
    let samples = cfg.parse(c.samples, "samples")?.unwrap_or(2001);
    let t_max_flag = cfg.parse(c.t_max, "t-max")?;
    let scheme = scheme(ctx, c)?;
    let runs: Vec<(BathParams, f64)> = match ctx.preset {
        Some(p) => p
            .trajectories()
            .into_iter()
            .map(|(l, s, t, tm)| Ok((BathParams::new(l, s, t, ctx.omega_c)?, t_max_flag.unwrap_or(tm))))
            .collect::<Result<_, Error>>()?,
        None => vec![(bath_from_flags(ctx, c)?, t_max_flag.unwrap_or(20.0))],
    };
    let multi = runs.len() > 1;
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for (bath, t_max) in &runs {
        let grid = refined_grid(*t_max, samples, bath)?;
        let tr = sweep::with_jobs(ctx.jobs, || {
            coherence_trajectory_with(&grid, &scheme, bath, &ctx.qubit, branch)
        })??;
        let params = [bath.lambda, bath.s, bath.temperature].map(qubit_dephasing::output::num);
        for r in sweep::trajectory_csv_rows(&tr) {
            rows.push(if multi {
                params.iter().cloned().chain(r).collect()
            } else {
                r
            });
        }
        let mut doc = sweep::trajectory_json(&tr);
        doc["lambda"] = json_num(bath.lambda);
        doc["s"] = json_num(bath.s);
        doc["T"] = json_num(bath.temperature);
        docs.push(doc);
    }
    Ok(match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut header: Vec<&str> = if multi { vec!["lambda", "s", "T"] } else { Vec::new() };
            header.extend(sweep::TRAJECTORY_HEADER);
            to_csv(&header, &rows)
        }
        Format::Json if multi => to_json(&Value::Array(docs)),
        Format::Json => to_json(&docs.pop().expect("one run")),
    })
}

fn recoherence(ctx: &Context, c: &Common, scope: Option<ScopeArg>, t_cap: Option<f64>) -> Result<String, Failure> {
    let cfg = &ctx.cfg;
    let bath = bath_from_flags(ctx, c)?;
    let mut options = ctx.options;
    if let Some(ScopeArg::FirstInterval) = cfg.value_enum(scope, "extremum-scope")? {
        options.extremum_scope = ExtremumScope::FirstInterval;
    }
    if let Some(cap) = cfg.parse(t_cap, "t-cap")? {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(invalid(format!("--t-cap must be positive, got {cap}")));
        }
        options.t_cap = cap;
    }
    let scheme = scheme(ctx, c)?;
    let report = analyze_scheme(&scheme, &bath, &ctx.qubit, &options)?;
    Ok(match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&sweep::REPORT_HEADER, &[sweep::report_csv_row(&bath, &report)]),
        Format::Json => to_json(&sweep::report_json(&bath, &report)),
    })
}

fn run_sweep(
    ctx: &Context,
    c: &Common,
    vary: Option<VaryArg>,
    grid: (Option<f64>, Option<f64>, Option<usize>),
    series: Option<String>,
) -> Result<String, Failure> {
    let cfg = &ctx.cfg;
    let specs = match ctx.preset {
        Some(p) => p.sweeps(ctx.qubit, ctx.omega_c, ctx.options),
        None => {
            let vary = match cfg.value_enum(vary, "vary")? {
                Some(VaryArg::Temperature) => SweepVariable::Temperature,
                Some(VaryArg::Ohmicity) => SweepVariable::Ohmicity,
                None => return Err(invalid("--vary is required")),
            };
            let series_text: String = cfg.require(series, "series")?;
            let series = series_text
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| invalid(format!("bad series value '{v}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            vec![SweepSpec {
                vary,
                grid: GridSpec::new(
                    cfg.require(grid.0, "grid-min")?,
                    cfg.require(grid.1, "grid-max")?,
                    cfg.parse(grid.2, "grid-count")?.unwrap_or(sweep::PRESET_POINTS),
                )?,
                fixed_lambda: cfg.require(c.lambda, "lambda")?,
                series,
                qubit: ctx.qubit,
                omega_c: ctx.omega_c,
                options: ctx.options,
            }]
        }
    };
    let rows = sweep::run_sweeps(&specs, ctx.jobs)?;
    Ok(match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let body: Vec<_> = rows.iter().map(sweep::sweep_csv_row).collect();
            to_csv(&sweep::SWEEP_HEADER, &body)
        }
        Format::Json => to_json(&Value::Array(rows.iter().map(sweep::sweep_json).collect())),
    })
}

type GridFlags = (Option<f64>, Option<f64>, Option<usize>);

fn lambda_min_map(ctx: &Context, s: GridFlags, t: GridFlags) -> Result<String, Failure> {
    let cfg = &ctx.cfg;
    let (s_grid, t_grid) = match ctx.preset.and_then(Preset::map_grids) {
        Some(g) => g,
        None => (
            GridSpec::new(
                cfg.require(s.0, "s-min")?,
                cfg.require(s.1, "s-max")?,
                cfg.parse(s.2, "s-count")?.unwrap_or(sweep::PRESET_POINTS),
            )?,
            GridSpec::new(
                cfg.require(t.0, "temp-min")?,
                cfg.require(t.1, "temp-max")?,
                cfg.parse(t.2, "temp-count")?.unwrap_or(sweep::PRESET_POINTS),
            )?,
        ),
    };
    let map = sweep::run_lambda_min_map(&s_grid, &t_grid, &ctx.qubit, ctx.omega_c, ctx.jobs)?;
    Ok(match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&sweep::MAP_HEADER, &sweep::map_csv_rows(&map)),
        Format::Json => to_json(&sweep::map_json(&map)),
    })
}

fn scheme_check(ctx: &Context, c: &Common) -> Result<String, Failure> {
    let scheme = scheme(ctx, c)?;
    let temp = ctx.cfg.require(c.temp, "temp")?;
    let g = gram_operator(&scheme);
    let gram: Vec<Vec<Value>> = g
        .entries
        .iter()
        .map(|row| row.iter().map(|z| json!([json_num(z.re), json_num(z.im)])).collect())
        .collect();
    let diagonal = is_gram_diagonal(&scheme, qubit_dephasing::dynamics::GRAM_DIAGONAL_TOL);
    let obs = initial_observables(&scheme, &ctx.qubit, temp)?;
    let coefficients = match nnd_coefficients(&scheme, &ctx.qubit, temp) {
        Ok(k) => json!({
            "n1": json_num(k.n1),
            "n2": json_num(k.n2),
            "d": json_num(k.d),
            "a_ratio": json_num(k.a_ratio),
            "a_ratio_imag": json_num(k.a_ratio_imag),
        }),
        Err(Error::DegenerateScheme(msg)) => json!({ "degenerate": msg }),
        Err(e) => return Err(e.into()),
    };
    let [p1, p2] = obs.probabilities;
    let mut doc = json!({
        "angles": {
            "theta_a": json_num(scheme.a.theta),
            "phi_a": json_num(scheme.a.phi),
            "theta1": json_num(scheme.b1.theta),
            "phi1": json_num(scheme.b1.phi),
            "theta2": json_num(scheme.b2.theta),
            "phi2": json_num(scheme.b2.phi),
        },
        "omega0": json_num(ctx.qubit.omega0),
        "T": json_num(temp),
        "gram": gram,
        "gram_diagonal": diagonal,
        "sigma_plus_0": [json_num(obs.sigma_plus_0.re), json_num(obs.sigma_plus_0.im)],
        "sigma3_0": json_num(obs.sigma3_0),
        "probabilities": [json_num(p1), json_num(p2)],
        "probability_sum": json_num(p1 + p2),
    });
    if let (Value::Object(d), Value::Object(k)) = (&mut doc, coefficients) {
        d.extend(k);
    }
    Ok(match ctx.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&doc),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &doc, &mut rows);
            to_csv(&["key", "value"], &rows)
        }
    })
}

/// Dotted-path key/value rows of a JSON document.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&join(k), x, rows)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&join(&i.to_string()), x, rows)),
        Value::String(s) => rows.push(vec![prefix.to_string(), s.clone()]),
        Value::Null => rows.push(vec![prefix.to_string(), String::new()]),
        Value::Number(n) => rows.push(vec![
            prefix.to_string(),
            qubit_dephasing::output::num(n.as_f64().unwrap_or(f64::NAN)),
        ]),
        Value::Bool(b) => rows.push(vec![prefix.to_string(), b.to_string()]),
    }
}
