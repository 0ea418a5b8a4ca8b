//! Time evolution of the qubit coherence after the measurement.
//!
//! With 𝒜 = (N₁ − iN₂)/D the coherence picks up the factor
//! cos Φ + i𝒜 sin Φ = e^{iχ − γ_cor} on top of the usual e^{iω₀t − γ}.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{decoherence_fn, phi, small_t_moments, BathParams, QubitParams};
use crate::error::{Error, Result};
use crate::measurement::{initial_observables, is_gram_diagonal, nnd_coefficients, MeasurementScheme};

/// Arguments of the logarithm in γ_cor at or below this are rejected.
pub const LN_ARG_FLOOR: f64 = 1e-14;

/// Tolerance on |G₀₁| used to pick the diagonal closed form.
pub const GRAM_DIAGONAL_TOL: f64 = 1e-10;

/// Maximum number of points a refined trajectory grid may hold.
pub const MAX_GRID_POINTS: usize = 2_000_000;

/// Branch convention for the phase shift χ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseBranch {
    /// arctan of the ratio, in (−π/2, π/2]; loses the quadrant
    Arctan,
    /// full-quadrant argument in (−π, π]
    #[default]
    Principal,
    /// continuous in Φ, starting from 0 at Φ = 0
    Unwrapped,
}

/// Measurement-induced correction as a function of Φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    /// diagonal Gram operator: 𝒜 = coth(βω₀/2)
    Diagonal {
        sinh_sq: f64,
    },
    General {
        n1: f64,
        n2: f64,
        d: f64,
    },
}

impl Correlation {
    pub fn diagonal(qubit: &QubitParams, temperature: f64) -> Result<Self> {
        qubit.validate()?;
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::domain("temperature", temperature, "finite and > 0"));
        }
        let sinh_sq = (0.5 * qubit.omega0 / temperature).sinh().powi(2);
        if !sinh_sq.is_finite() {
            return Err(Error::domain("temperature", temperature, "omega0/temperature < 1400"));
        }
        Ok(Correlation::Diagonal { sinh_sq })
    }

    /// Uses the diagonal closed form whenever the Gram operator is diagonal.
    pub fn for_scheme(scheme: &MeasurementScheme, qubit: &QubitParams, temperature: f64) -> Result<Self> {
        let c = nnd_coefficients(scheme, qubit, temperature)?;
        if is_gram_diagonal(scheme, GRAM_DIAGONAL_TOL) {
            return Self::diagonal(qubit, temperature);
        }
        Ok(Correlation::General {
            n1: c.n1,
            n2: c.n2,
            d: c.d,
        })
    }

    /// Always the general N₁/N₂/D form, even for diagonal Gram operators.
    pub fn general(scheme: &MeasurementScheme, qubit: &QubitParams, temperature: f64) -> Result<Self> {
        let c = nnd_coefficients(scheme, qubit, temperature)?;
        Ok(Correlation::General {
            n1: c.n1,
            n2: c.n2,
            d: c.d,
        })
    }

    /// cos Φ + i𝒜 sin Φ
    pub fn ratio(&self, phi: f64) -> Complex64 {
        let (s, c) = phi.sin_cos();
        match *self {
            Correlation::Diagonal { sinh_sq } => Complex64::new(c, s * (1.0 + 1.0 / sinh_sq).sqrt()),
            Correlation::General { n1, n2, d } => Complex64::new(c + n2 / d * s, n1 / d * s),
        }
    }

    pub fn gamma_cor(&self, phi: f64) -> Result<f64> {
        match *self {
            Correlation::Diagonal { sinh_sq } => Ok(-0.5 * (phi.sin().powi(2) / sinh_sq).ln_1p()),
            Correlation::General { .. } => {
                let m = self.ratio(phi).norm_sqr();
                if !(m > LN_ARG_FLOOR) {
                    log::warn!("γ_cor logarithm argument {m:.3e} at Φ = {phi}");
                    return Err(Error::DegenerateScheme(format!(
                        "logarithm argument {m:.3e} at Φ = {phi}: closed form breaks down"
                    )));
                }
                Ok(-0.5 * m.ln())
            }
        }
    }

    pub fn phase(&self, phi: f64, branch: PhaseBranch) -> f64 {
        let (n1, n2, d) = match *self {
            Correlation::Diagonal { sinh_sq } => ((1.0 + 1.0 / sinh_sq).sqrt(), 0.0, 1.0),
            Correlation::General { n1, n2, d } => (n1, n2, d),
        };
        match branch {
            PhaseBranch::Arctan => {
                let den = d * phi.cos() + n2 * phi.sin();
                let num = n1 * phi.sin();
                if den == 0.0 {
                    if num == 0.0 {
                        0.0
                    } else {
                        PI / 2.0
                    }
                } else {
                    let v = (num / den).atan();
                    if v == -PI / 2.0 {
                        PI / 2.0
                    } else {
                        v
                    }
                }
            }
            PhaseBranch::Principal => (n1 * phi.sin()).atan2(d * phi.cos() + n2 * phi.sin()),
            PhaseBranch::Unwrapped => {
                // the ratio changes sign under Φ → Φ + π and winds with sign N₁
                let k = (phi / PI).floor();
                let psi = phi - k * PI;
                let base = (n1 * psi.sin()).atan2(d * psi.cos() + n2 * psi.sin());
                base + k * PI * n1.signum()
            }
        }
    }

    /// Φ at which γ_cor is largest (least recoherent), in [0, π).
    pub fn flattest_phase(&self) -> f64 {
        match *self {
            Correlation::Diagonal { .. } => 0.0,
            Correlation::General { .. } => {
                let (a, b) = self.quadratic_form();
                // M(Φ) = 1 + A/2 − R cos(2Φ + δ)
                let delta = b.atan2(0.5 * a);
                (-0.5 * delta).rem_euclid(PI)
            }
        }
    }

    /// (A, B) in M(Φ) = 1 + A sin²Φ + B sin 2Φ.
    fn quadratic_form(&self) -> (f64, f64) {
        match *self {
            Correlation::Diagonal { sinh_sq } => (1.0 / sinh_sq, 0.0),
            Correlation::General { n1, n2, d } => ((n1 * n1 + n2 * n2) / (d * d) - 1.0, n2 / d),
        }
    }

    /// Largest possible −γ_cor over all Φ.
    pub fn max_depth(&self) -> f64 {
        match *self {
            Correlation::Diagonal { sinh_sq } => 0.5 * (1.0 / sinh_sq).ln_1p(),
            Correlation::General { .. } => {
                let (a, b) = self.quadratic_form();
                let r = (0.25 * a * a + b * b).sqrt();
                0.5 * (0.5 * a + r).ln_1p()
            }
        }
    }

    /// Largest −γ_cor over |Φ| ≤ `bound`.
    pub fn depth_within(&self, bound: f64) -> f64 {
        if bound >= PI / 2.0 {
            return self.max_depth();
        }
        match *self {
            Correlation::Diagonal { sinh_sq } => 0.5 * (bound.sin().powi(2) / sinh_sq).ln_1p(),
            Correlation::General { .. } => {
                let (a, b) = self.quadratic_form();
                let m = |p: f64| 1.0 + a * p.sin().powi(2) + b * (2.0 * p).sin();
                let deepest = self.flattest_phase() + PI / 2.0;
                let mut best = m(bound).max(m(-bound));
                for cand in [deepest - 2.0 * PI, deepest - PI, deepest, deepest + PI] {
                    if cand.abs() <= bound {
                        best = best.max(m(cand));
                    }
                }
                0.5 * best.ln().max(0.0)
            }
        }
    }

    /// Coefficients (c₁, c₂) of γ_cor ≈ c₁Φ + c₂Φ² at small Φ.
    pub(crate) fn small_phi_expansion(&self) -> (f64, f64) {
        let (a, b) = self.quadratic_form();
        (-b, -0.5 * (a - 2.0 * b * b))
    }
}

/// γ_cor for a diagonal Gram operator.
pub fn gamma_cor_diagonal(t: f64, bath: &BathParams, qubit: &QubitParams) -> Result<f64> {
    let c = Correlation::diagonal(qubit, bath.temperature)?;
    c.gamma_cor(phi(t, bath)?)
}

/// γ_cor from the N₁, N₂, D coefficients of an arbitrary scheme.
pub fn gamma_cor_general(t: f64, scheme: &MeasurementScheme, bath: &BathParams, qubit: &QubitParams) -> Result<f64> {
    let c = Correlation::general(scheme, qubit, bath.temperature)?;
    bath.validate()?;
    c.gamma_cor(phi(t, bath)?)
}

/// Phase shift χ(t) in the full-quadrant convention.
pub fn phase_shift(t: f64, scheme: &MeasurementScheme, bath: &BathParams, qubit: &QubitParams) -> Result<f64> {
    phase_shift_with(t, scheme, bath, qubit, PhaseBranch::Principal)
}

pub fn phase_shift_with(
    t: f64,
    scheme: &MeasurementScheme,
    bath: &BathParams,
    qubit: &QubitParams,
    branch: PhaseBranch,
) -> Result<f64> {
    let c = Correlation::general(scheme, qubit, bath.temperature)?;
    Ok(c.phase(phi(t, bath)?, branch))
}

/// ⟨σ₊(t)⟩ in the Schrödinger picture.
pub fn sigma_plus(t: f64, scheme: &MeasurementScheme, bath: &BathParams, qubit: &QubitParams) -> Result<Complex64> {
    let c = Correlation::general(scheme, qubit, bath.temperature)?;
    let s0 = initial_observables(scheme, qubit, bath.temperature)?.sigma_plus_0;
    let p = phi(t, bath)?;
    Ok(s0 * c.ratio(p) * Complex64::from_polar((-decoherence_fn(t, bath)?).exp(), qubit.omega0 * t))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_cor: Vec<f64>,
    pub gamma_tot: Vec<f64>,
    pub chi: Vec<f64>,
    pub abs_sigma: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidGrid("times must be finite and >= 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `samples` uniform points on [0, t_max], densified until Φ cannot move by
/// more than π/20 between neighbours.
pub fn refined_grid(t_max: f64, samples: usize, bath: &BathParams) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidGrid(format!("t_max = {t_max} must be finite and > 0")));
    }
    if samples < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 samples, got {samples}")));
    }
    let m1 = small_t_moments(bath)?.m1;
    let mut intervals = samples - 1;
    if m1 > 0.0 {
        let max_step = PI / (20.0 * m1);
        let needed = (t_max / max_step).ceil();
        if needed > intervals as f64 {
            if needed >= MAX_GRID_POINTS as f64 {
                log::warn!("trajectory grid capped at {MAX_GRID_POINTS} points; Φ may be undersampled");
                intervals = MAX_GRID_POINTS - 1;
            } else {
                intervals = needed as usize;
            }
        }
    }
    Ok((0..=intervals).map(|i| t_max * i as f64 / intervals as f64).collect())
}

/// Trajectory for a diagonal Gram operator or an explicit scheme.
pub fn coherence_trajectory(
    t_grid: &[f64],
    scheme: &MeasurementScheme,
    bath: &BathParams,
    qubit: &QubitParams,
) -> Result<Trajectory> {
    coherence_trajectory_with(t_grid, scheme, bath, qubit, PhaseBranch::Principal)
}

pub fn coherence_trajectory_with(
    t_grid: &[f64],
    scheme: &MeasurementScheme,
    bath: &BathParams,
    qubit: &QubitParams,
    branch: PhaseBranch,
) -> Result<Trajectory> {
    bath.validate()?;
    validate_grid(t_grid)?;
    let corr = Correlation::for_scheme(scheme, qubit, bath.temperature)?;
    let sigma0 = initial_observables(scheme, qubit, bath.temperature)?
        .sigma_plus_0
        .norm();

    let rows: Vec<[f64; 5]> = t_grid
        .par_iter()
        .map(|&t| -> Result<[f64; 5]> {
            let p = phi(t, bath)?;
            let g = decoherence_fn(t, bath)?;
            let gc = corr.gamma_cor(p)?;
            let chi = corr.phase(p, branch);
            let tot = g + gc;
            Ok([g, gc, tot, chi, sigma0 * (-tot).exp()])
        })
        .collect::<Result<_>>()?;

    let mut out = Trajectory {
        times: t_grid.to_vec(),
        ..Trajectory::default()
    };
    for r in rows {
        out.gamma.push(r[0]);
        out.gamma_cor.push(r[1]);
        out.gamma_tot.push(r[2]);
        out.chi.push(r[3]);
        out.abs_sigma.push(r[4]);
    }
    Ok(out)
}
