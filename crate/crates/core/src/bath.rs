//! Bosonic bath with spectral density J(ω) = λ ω_c^{1-s} ω^s e^{-ω/ω_c}: the
//! decoherence function γ(t), the phase Φ(t) and their short-time moments.
//!
//! γ(t) is evaluated from its Bose-mode expansion. Every mode contributes a
//! closed-form term; the tail of the mode sum is replaced by its
//! Euler–Maclaurin asymptotics, so the cost does not grow with temperature
//! or with t. The `*_quadrature` functions integrate the defining integrals
//! directly and serve as an independent check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{gamma_fn, hurwitz_zeta};

/// Bath parameters. `temperature` is in units where k_B = ħ = 1; zero means
/// the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub lambda: f64,
    pub s: f64,
    pub temperature: f64,
    pub omega_c: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            s: 1.0,
            temperature: 1.0,
            omega_c: 1.0,
        }
    }
}

impl BathParams {
    pub fn new(lambda: f64, s: f64, temperature: f64, omega_c: f64) -> Result<Self> {
        let p = Self {
            lambda,
            s,
            temperature,
            omega_c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::domain("lambda", self.lambda, "finite and >= 0"));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::domain("s", self.s, "finite and > 0"));
        }
        if self.s > 150.0 {
            return Err(Error::domain("s", self.s, "s <= 150"));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::domain("temperature", self.temperature, "finite and >= 0"));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(Error::domain("omega_c", self.omega_c, "finite and > 0"));
        }
        Ok(())
    }

    /// 1/T, infinite at T = 0.
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub omega0: f64,
}

impl Default for QubitParams {
    fn default() -> Self {
        Self { omega0: 0.1 }
    }
}

impl QubitParams {
    pub fn new(omega0: f64) -> Result<Self> {
        let q = Self { omega0 };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::domain("omega0", self.omega0, "finite and > 0"));
        }
        Ok(())
    }

    /// β ω₀ / 2, infinite at T = 0.
    pub fn half_x(&self, bath: &BathParams) -> f64 {
        0.5 * self.omega0 / bath.temperature
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain("t", t, "finite and >= 0"));
    }
    Ok(())
}

pub fn spectral_density(omega: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::domain("omega", omega, "finite and >= 0"));
    }
    let u = omega / bath.omega_c;
    Ok(bath.lambda * bath.omega_c * u.powf(bath.s) * (-u).exp())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// (1 + τ²)^{-p/2}
fn damping(tau: f64, p: f64) -> f64 {
    (-0.5 * p * (tau * tau).ln_1p()).exp()
}

/// Φ(t) in closed form. The sinc form is regular at s = 1.
pub fn phi(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    let tau = bath.omega_c * t;
    let theta = tau.atan();
    let s = bath.s;
    Ok(bath.lambda * gamma_fn(s)? * theta * sinc((s - 1.0) * theta) * damping(tau, s - 1.0))
}

/// dΦ/dt.
pub fn phi_rate(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    let tau = bath.omega_c * t;
    let s = bath.s;
    Ok(bath.lambda * bath.omega_c * gamma_fn(s)? * (s * tau.atan()).cos() * damping(tau, s))
}

/// Non-increasing upper bound on |dΦ/dt| over [t, ∞).
fn phi_rate_bound(t: f64, bath: &BathParams, gamma_s: f64) -> f64 {
    bath.lambda * bath.omega_c * gamma_s * damping(bath.omega_c * t, bath.s)
}

/// Upper bound on |Φ| over [t, ∞). Non-increasing in t only for s > 1.
fn phi_envelope(t: f64, bath: &BathParams, gamma_s: f64) -> f64 {
    let mut width = PI / 2.0;
    if bath.s > 1.0 {
        width = width.min(1.0 / (bath.s - 1.0));
    }
    bath.lambda * gamma_s * width * damping(bath.omega_c * t, bath.s - 1.0)
}

/// Lower bound on γ(t) for s > 1 from the vacuum part alone, increasing in t.
fn vacuum_lower_bound(t: f64, bath: &BathParams, gamma_s: f64) -> f64 {
    let x = 0.5 * (bath.omega_c * t).powi(2).ln_1p();
    let eps = bath.s - 1.0;
    // (1 - e^{-εx}) / ε, regular at ε = 0
    let y = -eps * x;
    let rel = if y.abs() < 1e-8 { 1.0 + 0.5 * y } else { y.exp_m1() / y };
    bath.lambda * gamma_s * x * rel
}

// --- complex helpers -------------------------------------------------------

fn expm1_c(w: Complex64) -> Complex64 {
    let (sn, cs) = w.im.sin_cos();
    let h = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * cs - 2.0 * h * h, w.re.exp() * sn)
}

/// (e^w - 1) / w
fn exprel_c(w: Complex64) -> Complex64 {
    if w.norm() < 1e-2 {
        let mut acc = Complex64::new(1.0 / 5040.0, 0.0);
        for d in [720.0, 120.0, 24.0, 6.0, 2.0, 1.0] {
            acc = acc * w + 1.0 / d;
        }
        acc
    } else {
        expm1_c(w) / w
    }
}

/// [e^{pℓ} - 1 - p(e^ℓ - 1)] / (p(p - 1)), regular at p = 0 and p = 1.
fn d2(p: f64, l: Complex64) -> Complex64 {
    if l.norm() * p.abs().max(1.0) < 0.5 {
        // Σ_{k≥2} ℓ^k/k! (1 + p + … + p^{k-2})
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = l;
        let mut h = 0.0;
        let mut pk = 1.0;
        let growth = p.abs().max(1.0);
        let mut bound = 1.0;
        for k in 2..60 {
            term = term * l / k as f64;
            h += pk;
            pk *= p;
            sum += term * h;
            // |h| ≤ (k - 1) max(1, |p|)^{k-2}; h itself may vanish
            bound *= growth;
            if term.norm() * k as f64 * bound < 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    } else if (p - 1.0).abs() < 0.5 {
        (l.exp() * l * exprel_c((p - 1.0) * l) - expm1_c(l)) / p
    } else {
        (l * exprel_c(p * l) - expm1_c(l)) / (p - 1.0)
    }
}

/// ln(1 - iτ/q)
fn mode_log(q: f64, tau: f64) -> Complex64 {
    let r = tau / q;
    Complex64::new(0.5 * (r * r).ln_1p(), -r.atan())
}

/// Contribution of the Bose mode with shifted frequency index q ≥ 1,
/// without the factor λ: Γ(s-1)[q^{1-s} - Re (q - iτ)^{1-s}].
fn mode_term(q: f64, tau: f64, s: f64, gamma_s: f64) -> f64 {
    let l = mode_log(q, tau);
    gamma_s * q.powf(1.0 - s) * (l * exprel_c((1.0 - s) * l)).re
}

/// k-th derivative of [`mode_term`] with respect to q, k ≥ 1.
fn mode_term_deriv(k: u32, q: f64, tau: f64, s: f64, gamma_s: f64) -> f64 {
    let pk: f64 = (1..k).map(|j| 1.0 - s - j as f64).product();
    let e = 1.0 - s - k as f64;
    gamma_s * pk * q.powf(e) * expm1_c(e * mode_log(q, tau)).re
}

/// ∫_Q^∞ mode_term(q) dq
fn mode_tail_integral(q0: f64, tau: f64, s: f64, gamma_s: f64) -> f64 {
    -gamma_s * q0.powf(2.0 - s) * d2(2.0 - s, mode_log(q0, tau)).re
}

// B_{2k}/(2k)!, k = 1..=6
const EM_COEF: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

/// Σ_{n≥1} mode_term(1 + n b), b = ω_c/T.
fn thermal_mode_sum(tau: f64, s: f64, b: f64, gamma_s: f64) -> f64 {
    let n_direct = 12 + 2 * s.ceil() as usize;
    let q0 = 1.0 + n_direct as f64 * b;
    let mut tail = mode_tail_integral(q0, tau, s, gamma_s) / b + 0.5 * mode_term(q0, tau, s, gamma_s);
    for (k, c) in EM_COEF.iter().enumerate() {
        let order = 2 * k as u32 + 1;
        tail -= c * b.powi(order as i32) * mode_term_deriv(order, q0, tau, s, gamma_s);
    }
    (1..n_direct)
        .rev()
        .fold(tail, |acc, n| acc + mode_term(1.0 + n as f64 * b, tau, s, gamma_s))
}

/// Validated bath with Γ(s) cached, for evaluating Φ and γ at many times.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub bath: BathParams,
    pub gamma_s: f64,
}

impl Kernel {
    pub fn new(bath: &BathParams) -> Result<Self> {
        bath.validate()?;
        Ok(Self {
            bath: *bath,
            gamma_s: gamma_fn(bath.s)?,
        })
    }

    pub fn phi(&self, t: f64) -> f64 {
        let b = &self.bath;
        let tau = b.omega_c * t;
        let theta = tau.atan();
        b.lambda * self.gamma_s * theta * sinc((b.s - 1.0) * theta) * damping(tau, b.s - 1.0)
    }

    pub fn gamma(&self, t: f64) -> f64 {
        let b = &self.bath;
        if b.lambda == 0.0 || t == 0.0 {
            return 0.0;
        }
        let tau = b.omega_c * t;
        let mut g = mode_term(1.0, tau, b.s, self.gamma_s);
        if b.temperature > 0.0 {
            g += 2.0 * thermal_mode_sum(tau, b.s, b.omega_c / b.temperature, self.gamma_s);
        }
        b.lambda * g
    }

    pub fn phi_rate_bound(&self, t: f64) -> f64 {
        phi_rate_bound(t, &self.bath, self.gamma_s)
    }

    pub fn phi_envelope(&self, t: f64) -> f64 {
        phi_envelope(t, &self.bath, self.gamma_s)
    }

    pub fn vacuum_lower_bound(&self, t: f64) -> f64 {
        vacuum_lower_bound(t, &self.bath, self.gamma_s)
    }

    /// Times in (0, ∞) where dΦ/dt vanishes, ascending.
    pub fn phi_extrema(&self) -> Vec<f64> {
        let s = self.bath.s;
        (0..)
            .map(|j| (0.5 * PI + j as f64 * PI) / s)
            .take_while(|theta| *theta < 0.5 * PI)
            .map(|theta| theta.tan() / self.bath.omega_c)
            .collect()
    }
}

/// Zero-temperature part of γ(t).
pub fn vacuum_decoherence(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    let gs = gamma_fn(bath.s)?;
    Ok(bath.lambda * mode_term(1.0, bath.omega_c * t, bath.s, gs))
}

/// Thermal part of γ(t); zero at T = 0.
pub fn thermal_decoherence(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    if bath.temperature == 0.0 || bath.lambda == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let gs = gamma_fn(bath.s)?;
    let b = bath.omega_c / bath.temperature;
    Ok(2.0 * bath.lambda * thermal_mode_sum(bath.omega_c * t, bath.s, b, gs))
}

/// γ(t) = ∫_0^∞ J(ω) coth(βω/2) (1 - cos ωt)/ω² dω.
pub fn decoherence_fn(t: f64, bath: &BathParams) -> Result<f64> {
    Ok(vacuum_decoherence(t, bath)? + thermal_decoherence(t, bath)?)
}

// --- quadrature route ------------------------------------------------------

/// ∫_0^∞ f(u) du for an integrand behaving like u^{s-1} at the origin,
/// decaying like e^{-u}, and oscillating with angular frequency `freq`.
/// `f` must stay finite down to the smallest normal u; write it with the
/// power of u factored out so that no intermediate overflows.
fn integrate_bath<F: Fn(f64) -> f64>(f: F, s: f64, freq: f64) -> Result<f64> {
    let opts = QuadOptions::default();
    let u_max = 40.0 + 10.0 * s;
    let half_period = if freq > 0.0 { PI / freq } else { f64::INFINITY };
    let split = half_period.min(1.0);

    // u = v^m removes the power singularity on [0, split]
    let m = if s < 2.0 { (2.0 / s).ceil() } else { 1.0 };
    let head = |v: f64| {
        let u = v.powf(m);
        if !(u > 0.0) {
            return 0.0;
        }
        let y = f(u) * m * u / v;
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    let v_split = split.powf(1.0 / m);
    let head_breaks: Vec<f64> = (0..=8).map(|k| v_split * k as f64 / 8.0).collect();
    let a = integrate_with_breaks(head, &head_breaks, &opts)?;

    let step = half_period.max(0.5);
    let mut breaks = vec![split];
    let mut x = split;
    while x + step < u_max {
        x += step;
        breaks.push(x);
    }
    breaks.push(u_max);
    let b = integrate_with_breaks(&f, &breaks, &opts)?;
    Ok(a.value + b.value)
}

fn coth_factor(u: f64, bath: &BathParams) -> f64 {
    if bath.temperature == 0.0 {
        1.0
    } else {
        1.0 / (0.5 * u * bath.omega_c / bath.temperature).tanh()
    }
}

/// γ(t) by direct quadrature of its defining integral.
pub fn decoherence_fn_quadrature(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    let tau = bath.omega_c * t;
    let s = bath.s;
    let f = |u: f64| {
        let h = (0.5 * u * tau).sin() / u;
        u.powf(s) * (-u).exp() * coth_factor(u, bath) * 2.0 * h * h
    };
    Ok(bath.lambda * integrate_bath(f, s, tau)?)
}

/// Thermal part of γ(t) by quadrature: coth - 1 = 2/(e^{βω} - 1).
pub fn thermal_decoherence_quadrature(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    if bath.temperature == 0.0 {
        return Ok(0.0);
    }
    let tau = bath.omega_c * t;
    let s = bath.s;
    let b = bath.omega_c / bath.temperature;
    let f = |u: f64| {
        let h = (0.5 * u * tau).sin() / u;
        u.powf(s) * (-u).exp() * 2.0 / (b * u).exp_m1() * 2.0 * h * h
    };
    Ok(bath.lambda * integrate_bath(f, s, tau)?)
}

/// Φ(t) = ∫_0^∞ J(ω) sin(ωt)/ω² dω by quadrature.
pub fn phi_quadrature(t: f64, bath: &BathParams) -> Result<f64> {
    bath.validate()?;
    check_t(t)?;
    let tau = bath.omega_c * t;
    let s = bath.s;
    let f = |u: f64| u.powf(s - 1.0) * (-u).exp() * ((u * tau).sin() / u);
    Ok(bath.lambda * integrate_bath(f, s, tau)?)
}

/// Short-time moments: γ(t) ≈ m_coth t²/2 and Φ(t) ≈ m1 t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallTimeMoments {
    /// ∫ J(ω) coth(βω/2) dω
    pub m_coth: f64,
    /// ∫ J(ω)/ω dω
    pub m1: f64,
}

pub fn small_t_moments(bath: &BathParams) -> Result<SmallTimeMoments> {
    bath.validate()?;
    let s = bath.s;
    let wc = bath.omega_c;
    let m1 = bath.lambda * wc * gamma_fn(s)?;
    let mut bracket = 1.0;
    if bath.temperature > 0.0 {
        let r = bath.temperature / wc;
        bracket += 2.0 * r.powf(s + 1.0) * hurwitz_zeta(s + 1.0, 1.0 + r)?;
    }
    Ok(SmallTimeMoments {
        m_coth: bath.lambda * wc * wc * gamma_fn(s + 1.0)? * bracket,
        m1,
    })
}

/// [`small_t_moments`] by quadrature.
pub fn small_t_moments_quadrature(bath: &BathParams) -> Result<SmallTimeMoments> {
    bath.validate()?;
    let s = bath.s;
    let wc = bath.omega_c;
    let m_coth = integrate_bath(|u| u.powf(s) * (-u).exp() * coth_factor(u, bath), s, 0.0)?;
    let m1 = integrate_bath(|u| u.powf(s - 1.0) * (-u).exp(), s, 0.0)?;
    Ok(SmallTimeMoments {
        m_coth: bath.lambda * wc * wc * m_coth,
        m1: bath.lambda * wc * m1,
    })
}
