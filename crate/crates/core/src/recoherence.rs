//! Recoherence events: intervals where γ_tot = γ + γ_cor drops below zero,
//! and the critical coupling beyond which they appear at short times.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bath::{small_t_moments, BathParams, Kernel, QubitParams};
use crate::dynamics::Correlation;
use crate::error::{Error, Result};
use crate::measurement::MeasurementScheme;
use crate::roots::{bisect, golden_section_min};
use crate::specfun::{gamma_fn, hurwitz_zeta};

/// Which time is reported as t*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TStarDefinition {
    /// end of the first negative interval
    #[default]
    Crossing,
    /// location of the minimum inside the first negative interval
    Extremum,
}

/// Which negative intervals γ_extr is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremumScope {
    #[default]
    Global,
    FirstInterval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub t_star_def: TStarDefinition,
    pub extremum_scope: ExtremumScope,
    /// scan cap in units of 1/ω_c
    pub t_cap: f64,
    pub root_tol: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            t_star_def: TStarDefinition::Crossing,
            extremum_scope: ExtremumScope::Global,
            t_cap: 1e4,
            root_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RecoherenceReport {
    pub t_star: Option<f64>,
    pub t_extr: Option<f64>,
    pub gamma_extr: Option<f64>,
    pub intervals: Vec<(f64, f64)>,
    pub t_star_tot: f64,
    pub rde_count: usize,
    /// the scan hit the time cap before negative branches were ruled out
    pub truncated: bool,
    /// last time examined
    pub horizon: f64,
}

/// (1/2)[m_coth − m1²/sinh²(βω₀/2)]: γ_tot ≈ c₂t² for a diagonal Gram operator.
pub fn small_t_curvature(bath: &BathParams, qubit: &QubitParams) -> Result<f64> {
    let corr = Correlation::diagonal(qubit, bath.temperature)?;
    let (_, q) = leading_terms(bath, &corr)?;
    Ok(q)
}

/// γ_tot ≈ a t + b t² near t = 0.
fn leading_terms(bath: &BathParams, corr: &Correlation) -> Result<(f64, f64)> {
    let m = small_t_moments(bath)?;
    let (c1, c2) = corr.small_phi_expansion();
    Ok((c1 * m.m1, 0.5 * m.m_coth + c2 * m.m1 * m.m1))
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(name, v, "finite and > 0"));
    }
    Ok(())
}

/// Coupling at which the short-time curvature of γ_tot changes sign.
pub fn lambda_min(s: f64, temperature: f64, qubit: &QubitParams, omega_c: f64) -> Result<f64> {
    check_positive("s", s)?;
    check_positive("temperature", temperature)?;
    check_positive("omega_c", omega_c)?;
    qubit.validate()?;
    let r = temperature / omega_c;
    let bracket = 1.0 + 2.0 * r.powf(s + 1.0) * hurwitz_zeta(s + 1.0, 1.0 + r)?;
    let sh = (0.5 * qubit.omega0 / temperature).sinh();
    Ok(sh * sh * s / gamma_fn(s)? * bracket)
}

/// [`lambda_min`] located by bisection on the sign of [`small_t_curvature`].
pub fn lambda_min_bisect(s: f64, temperature: f64, qubit: &QubitParams, omega_c: f64) -> Result<f64> {
    let curvature = |ln_lambda: f64| -> f64 {
        BathParams::new(ln_lambda.exp(), s, temperature, omega_c)
            .and_then(|b| small_t_curvature(&b, qubit))
            .unwrap_or(f64::NAN)
    };
    BathParams::new(1.0, s, temperature, omega_c)?;
    qubit.validate()?;
    let (lo, hi) = (1e-8f64.ln(), 1e3f64.ln());
    let (flo, fhi) = (curvature(lo), curvature(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Convergence(format!(
            "curvature does not change sign for lambda in [1e-8, 1e3] (s = {s}, T = {temperature})"
        )));
    }
    Ok(bisect(curvature, lo, hi, flo, fhi, 1e-6f64.ln_1p())?.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdGrid {
    pub s_values: Vec<f64>,
    pub t_values: Vec<f64>,
    /// indexed as `lambda_min[i_s][i_t]`
    pub lambda_min: Vec<Vec<f64>>,
}

pub fn threshold_grid(s_values: &[f64], t_values: &[f64], qubit: &QubitParams, omega_c: f64) -> Result<ThresholdGrid> {
    for &s in s_values {
        check_positive("s", s)?;
    }
    for &t in t_values {
        check_positive("temperature", t)?;
    }
    let lambda_min = s_values
        .iter()
        .map(|&s| t_values.iter().map(|&t| lambda_min(s, t, qubit, omega_c)).collect())
        .collect::<Result<_>>()?;
    Ok(ThresholdGrid {
        s_values: s_values.to_vec(),
        t_values: t_values.to_vec(),
        lambda_min,
    })
}

/// Recoherence analysis for a diagonal Gram operator.
pub fn analyze(bath: &BathParams, qubit: &QubitParams) -> Result<RecoherenceReport> {
    analyze_with(bath, qubit, &AnalyzeOptions::default())
}

pub fn analyze_with(bath: &BathParams, qubit: &QubitParams, opts: &AnalyzeOptions) -> Result<RecoherenceReport> {
    let corr = Correlation::diagonal(qubit, bath.temperature)?;
    analyze_correlation(bath, &corr, opts)
}

/// Recoherence analysis for an explicit measurement scheme.
pub fn analyze_scheme(
    scheme: &MeasurementScheme,
    bath: &BathParams,
    qubit: &QubitParams,
    opts: &AnalyzeOptions,
) -> Result<RecoherenceReport> {
    let corr = Correlation::for_scheme(scheme, qubit, bath.temperature)?;
    analyze_correlation(bath, &corr, opts)
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    v: f64,
}

struct Scanner<'a> {
    kernel: Kernel,
    corr: &'a Correlation,
    failure: RefCell<Option<Error>>,
}

impl Scanner<'_> {
    fn gamma_tot(&self, t: f64) -> f64 {
        match self.corr.gamma_cor(self.kernel.phi(t)) {
            Ok(gc) => self.kernel.gamma(t) + gc,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check(&self) -> Result<()> {
        match self.failure.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// No negative γ_tot is possible at or after `t`, given γ(t).
    fn past_horizon(&self, t: f64, gamma: f64) -> bool {
        let s = self.kernel.bath.s;
        if s < 2.0 && gamma > self.corr.max_depth() {
            return true;
        }
        if s > 1.0 {
            let reach = self.corr.depth_within(self.kernel.phi_envelope(t));
            if self.kernel.vacuum_lower_bound(t) > reach {
                return true;
            }
        }
        false
    }

    /// Times in (a, b) where Φ crosses the phases of largest γ_cor.
    fn markers(&self, a: f64, b: f64, extrema: &[f64], out: &mut Vec<f64>) {
        let flat = self.corr.flattest_phase();
        let mut cuts = vec![a];
        cuts.extend(extrema.iter().copied().filter(|&e| e > a && e < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (plo, phi_hi) = (self.kernel.phi(lo), self.kernel.phi(hi));
            let (pmin, pmax) = (plo.min(phi_hi), plo.max(phi_hi));
            let mut k = ((pmin - flat) / PI).floor() + 1.0;
            while flat + k * PI < pmax {
                let level = flat + k * PI;
                let f = |t: f64| self.kernel.phi(t) - level;
                if let Ok(t) = bisect(f, lo, hi, plo - level, phi_hi - level, 1e-13 * hi.max(1e-300)) {
                    if t > a && t < b {
                        out.push(t);
                    }
                }
                k += 1.0;
            }
            if hi < b {
                out.push(hi);
            }
        }
    }
}

fn analyze_correlation(bath: &BathParams, corr: &Correlation, opts: &AnalyzeOptions) -> Result<RecoherenceReport> {
    let kernel = Kernel::new(bath)?;
    if !(bath.temperature > 0.0) {
        return Err(Error::domain("temperature", bath.temperature, "finite and > 0"));
    }
    if !(opts.t_cap > 0.0) || !(opts.root_tol > 0.0) {
        return Err(Error::Invalid("t_cap and root_tol must be positive".into()));
    }
    if bath.lambda == 0.0 {
        return Ok(RecoherenceReport::default());
    }
    let sc = Scanner {
        kernel,
        corr,
        failure: RefCell::new(None),
    };
    let wc = bath.omega_c;
    let t_cap = opts.t_cap / wc;
    let extrema = kernel.phi_extrema();

    // sign just after t = 0 from the leading short-time terms
    let (lin, quad) = leading_terms(bath, corr)?;
    let lead = if lin != 0.0 { lin } else { quad };

    let mut samples = vec![Sample { t: 0.0, v: 0.0 }];
    let mut t = 0.0;
    let mut truncated = false;
    let mut extra = Vec::new();
    loop {
        let step = (PI / (20.0 * kernel.phi_rate_bound(t))).min(0.1 * t + 1e-6 / wc);
        let next = (t + step).min(t_cap);
        extra.clear();
        sc.markers(t, next, &extrema, &mut extra);
        extra.sort_by(f64::total_cmp);
        for &m in &extra {
            samples.push(Sample {
                t: m,
                v: sc.gamma_tot(m),
            });
        }
        let g = kernel.gamma(next);
        let v = g + corr.gamma_cor(kernel.phi(next))?;
        samples.push(Sample { t: next, v });
        sc.check()?;
        t = next;
        if sc.past_horizon(t, g) {
            break;
        }
        if t >= t_cap {
            truncated = true;
            log::warn!(
                "recoherence scan reached t = {t_cap} without ruling out further negative branches \
                 (lambda = {}, s = {}, T = {})",
                bath.lambda,
                bath.s,
                bath.temperature
            );
            break;
        }
    }
    let horizon = t;

    let sign_at = |i: usize, s: &[Sample]| -> f64 {
        if i == 0 {
            if lead != 0.0 {
                lead.signum()
            } else {
                s[1].v.signum()
            }
        } else if s[i].v < 0.0 {
            -1.0
        } else {
            1.0
        }
    };

    // excursions that fall between samples show up as local minima of |γ_tot|
    let mut found = Vec::new();
    for i in 2..samples.len().saturating_sub(1) {
        let (a, m, b) = (samples[i - 1], samples[i], samples[i + 1]);
        let flip = if m.v < 0.0 { -1.0 } else { 1.0 };
        if sign_at(i - 1, &samples) != flip || sign_at(i + 1, &samples) != flip {
            continue;
        }
        if flip * m.v < flip * a.v && flip * m.v <= flip * b.v {
            let (tm, vm) = golden_section_min(|x| flip * sc.gamma_tot(x), a.t, b.t, 1e-12 * b.t);
            if vm < 0.0 {
                found.push(Sample { t: tm, v: flip * vm });
            }
        }
    }
    sc.check()?;
    if !found.is_empty() {
        samples.extend(found);
        samples.sort_by(|x, y| x.t.total_cmp(&y.t));
        samples.dedup_by(|x, y| x.t == y.t);
    }

    // sign changes
    let mut intervals = Vec::new();
    let mut open: Option<f64> = if sign_at(0, &samples) < 0.0 { Some(0.0) } else { None };
    for i in 1..samples.len() {
        let (sa, sb) = (sign_at(i - 1, &samples), sign_at(i, &samples));
        if sa == sb {
            continue;
        }
        let (a, b) = (samples[i - 1], samples[i]);
        let fa = if i == 1 { sa * f64::MIN_POSITIVE } else { a.v };
        let root = bisect(|x| sc.gamma_tot(x), a.t, b.t, fa, b.v, opts.root_tol)?;
        sc.check()?;
        match open.take() {
            Some(start) => intervals.push((start, root)),
            None => open = Some(root),
        }
    }
    if let Some(start) = open {
        intervals.push((start, horizon));
    }

    // minimum inside each interval
    let mut minima = Vec::with_capacity(intervals.len());
    for &(lo, hi) in &intervals {
        let inside: Vec<usize> = (0..samples.len())
            .filter(|&i| samples[i].t > lo && samples[i].t < hi)
            .collect();
        let (tm, vm) = match inside
            .iter()
            .copied()
            .min_by(|&x, &y| samples[x].v.total_cmp(&samples[y].v))
        {
            Some(k) => {
                let left = if k > 0 { samples[k - 1].t.max(lo) } else { lo };
                let right = if k + 1 < samples.len() {
                    samples[k + 1].t.min(hi)
                } else {
                    hi
                };
                golden_section_min(|x| sc.gamma_tot(x), left, right, 1e-12 * right)
            }
            None => golden_section_min(|x| sc.gamma_tot(x), lo, hi, 1e-12 * hi),
        };
        sc.check()?;
        minima.push((tm, vm));
    }

    let mut report = RecoherenceReport {
        rde_count: intervals.len(),
        t_star_tot: intervals.iter().map(|(a, b)| b - a).sum(),
        truncated,
        horizon,
        ..RecoherenceReport::default()
    };
    if let (Some(first), Some(first_min)) = (intervals.first(), minima.first()) {
        report.t_star = Some(match opts.t_star_def {
            TStarDefinition::Crossing => first.1,
            TStarDefinition::Extremum => first_min.0,
        });
        let pick = match opts.extremum_scope {
            ExtremumScope::FirstInterval => *first_min,
            ExtremumScope::Global => minima
                .iter()
                .copied()
                .fold(*first_min, |best, m| if m.1 < best.1 { m } else { best }),
        };
        report.t_extr = Some(pick.0);
        report.gamma_extr = Some(pick.1);
    }
    report.intervals = intervals;
    Ok(report)
}
