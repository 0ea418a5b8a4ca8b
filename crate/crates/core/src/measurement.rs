//! Two-outcome non-selective measurements on a qubit.
//!
//! Column vectors are written with |1⟩ = (1, 0)ᵀ on top and |0⟩ = (0, 1)ᵀ
//! below. A scheme is fixed by three Bloch directions a, b₁, b₂ and yields
//! Ω₁ = |b₁⟩⟨a|, Ω₂ = |b₂⟩⟨−a|.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::QubitParams;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// D below this is treated as a degenerate scheme.
pub const DEGENERATE_D: f64 = 1e-12;

/// Polar and azimuthal angle of a Bloch direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub theta: f64,
    pub phi: f64,
}

impl EulerAngles {
    /// Checks θ ∈ [0, π] and wraps φ into [0, 2π).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !(-1e-12..=PI + 1e-12).contains(&theta) {
            return Err(Error::domain("theta", theta, "0 <= theta <= pi"));
        }
        if !phi.is_finite() {
            return Err(Error::domain("phi", phi, "finite"));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self {
            theta: theta.clamp(0.0, PI),
            phi,
        })
    }

    /// Direction of the orthogonal state: (π − θ, φ + π).
    pub fn opposite(&self) -> Self {
        Self::new(PI - self.theta, self.phi + PI).expect("opposite of valid angles is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    /// coefficient of |1⟩
    pub amp_up: Complex64,
    /// coefficient of |0⟩
    pub amp_down: Complex64,
}

impl PureState {
    pub fn new(amp_up: Complex64, amp_down: Complex64) -> Self {
        Self { amp_up, amp_down }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_up.norm_sqr() + self.amp_down.norm_sqr()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amp_up.conj() * other.amp_up + self.amp_down.conj() * other.amp_down
    }

    pub fn projector(&self) -> Operator2x2 {
        Operator2x2::outer(self, self)
    }
}

pub fn state_from_angles(angles: EulerAngles) -> PureState {
    let half = 0.5 * angles.theta;
    let ph = Complex64::from_polar(1.0, 0.5 * angles.phi);
    PureState::new(ph * half.sin(), ph.conj() * half.cos())
}

/// |−a⟩ with the phase convention (i e^{iφ/2} cos(θ/2), −i e^{−iφ/2} sin(θ/2)).
pub fn orthogonal_state(angles: EulerAngles) -> PureState {
    let half = 0.5 * angles.theta;
    let ph = Complex64::from_polar(1.0, 0.5 * angles.phi);
    PureState::new(I * ph * half.cos(), -I * ph.conj() * half.sin())
}

/// Row-major 2×2 complex matrix; index 0 is |1⟩, index 1 is |0⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2x2 {
    pub entries: [[Complex64; 2]; 2],
}

impl Operator2x2 {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn zero() -> Self {
        Self::new([[ZERO; 2]; 2])
    }

    pub fn sigma3() -> Self {
        Self::new([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// σ₊ = |1⟩⟨0|
    pub fn sigma_plus() -> Self {
        Self::new([[ZERO, ONE], [ZERO, ZERO]])
    }

    /// |ket⟩⟨bra|
    pub fn outer(ket: &PureState, bra: &PureState) -> Self {
        let k = [ket.amp_up, ket.amp_down];
        let b = [bra.amp_up.conj(), bra.amp_down.conj()];
        Self::new([[k[0] * b[0], k[0] * b[1]], [k[1] * b[0], k[1] * b[1]]])
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Self::new([[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn apply(&self, v: &PureState) -> PureState {
        let e = &self.entries;
        PureState::new(
            e[0][0] * v.amp_up + e[0][1] * v.amp_down,
            e[1][0] * v.amp_up + e[1][1] * v.amp_down,
        )
    }

    /// ⟨0|A|0⟩
    pub fn ground_element(&self) -> Complex64 {
        self.entries[1][1]
    }

    /// ⟨1|A|1⟩
    pub fn excited_element(&self) -> Complex64 {
        self.entries[0][0]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |(A†A − I)_{jk}|
    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint() * *self - Self::identity()).max_abs()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let e = &self.entries;
        Self::new([[k * e[0][0], k * e[0][1]], [k * e[1][0], k * e[1][1]]])
    }
}

impl Mul for Operator2x2 {
    type Output = Operator2x2;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.entries, &rhs.entries);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Operator2x2::new(out)
    }
}

impl Add for Operator2x2 {
    type Output = Operator2x2;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.entries, &rhs.entries);
        Operator2x2::new([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Operator2x2 {
    type Output = Operator2x2;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-ONE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScheme {
    pub a: EulerAngles,
    pub b1: EulerAngles,
    pub b2: EulerAngles,
}

impl Default for MeasurementScheme {
    /// a along the z axis, b₁ and b₂ on opposite sides of the equator.
    fn default() -> Self {
        Self::from_angles(0.0, 0.0, PI / 2.0, 0.0, PI / 2.0, PI).expect("valid default angles")
    }
}

impl MeasurementScheme {
    pub fn new(a: EulerAngles, b1: EulerAngles, b2: EulerAngles) -> Self {
        Self { a, b1, b2 }
    }

    pub fn from_angles(theta_a: f64, phi_a: f64, theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> Result<Self> {
        Ok(Self {
            a: EulerAngles::new(theta_a, phi_a)?,
            b1: EulerAngles::new(theta1, phi1)?,
            b2: EulerAngles::new(theta2, phi2)?,
        })
    }

    /// b₁ = a, b₂ = −a: the device leaves the measured basis untouched.
    pub fn undisturbed(a: EulerAngles) -> Self {
        Self::new(a, a, a.opposite())
    }

    /// b₁ = b, b₂ = −b.
    pub fn rotated(a: EulerAngles, b: EulerAngles) -> Self {
        Self::new(a, b, b.opposite())
    }

    /// φ₁ − φ₂
    pub fn delta_phi(&self) -> f64 {
        self.b1.phi - self.b2.phi
    }
}

pub fn omega_operators(scheme: &MeasurementScheme) -> (Operator2x2, Operator2x2) {
    let a = state_from_angles(scheme.a);
    let minus_a = orthogonal_state(scheme.a);
    (
        Operator2x2::outer(&state_from_angles(scheme.b1), &a),
        Operator2x2::outer(&state_from_angles(scheme.b2), &minus_a),
    )
}

/// F_m = Ω_m†Ω_m
pub fn effects(scheme: &MeasurementScheme) -> (Operator2x2, Operator2x2) {
    let (o1, o2) = omega_operators(scheme);
    (o1.adjoint() * o1, o2.adjoint() * o2)
}

/// G = Σ_m Ω_m Ω_m† = |b₁⟩⟨b₁| + |b₂⟩⟨b₂|
pub fn gram_operator(scheme: &MeasurementScheme) -> Operator2x2 {
    state_from_angles(scheme.b1).projector() + state_from_angles(scheme.b2).projector()
}

pub fn is_gram_diagonal(scheme: &MeasurementScheme, tol: f64) -> bool {
    gram_operator(scheme).entries[0][1].norm() <= tol
}

/// Equilibrium weights of |0⟩ and |1⟩, e^{±βω₀/2}/(2 cosh(βω₀/2)).
fn level_weights(qubit: &QubitParams, temperature: f64) -> Result<(f64, f64)> {
    qubit.validate()?;
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::domain("temperature", temperature, "finite and > 0"));
    }
    let x = qubit.omega0 / temperature;
    Ok((1.0 / (1.0 + (-x).exp()), 1.0 / (1.0 + x.exp())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationCoefficients {
    pub n1: f64,
    pub n2: f64,
    pub d: f64,
    /// Re 𝒜; equals N₁/D
    pub a_ratio: f64,
    /// Im 𝒜; equals −N₂/D and vanishes for diagonal Gram operators
    pub a_ratio_imag: f64,
}

impl CorrelationCoefficients {
    pub fn a_complex(&self) -> Complex64 {
        Complex64::new(self.a_ratio, self.a_ratio_imag)
    }
}

pub fn nnd_coefficients(
    scheme: &MeasurementScheme,
    qubit: &QubitParams,
    temperature: f64,
) -> Result<CorrelationCoefficients> {
    level_weights(qubit, temperature)?;
    let x = qubit.omega0 / temperature;
    let (eh, emh) = ((0.5 * x).exp(), (-0.5 * x).exp());
    if !(eh * eh).is_finite() {
        return Err(Error::domain("temperature", temperature, "omega0/temperature < 700"));
    }
    let ta = scheme.a.theta;
    let (c2, s2) = ((0.5 * ta).cos().powi(2), (0.5 * ta).sin().powi(2));
    // N₁ − iN₂ = P·conj(Q) and D = |Q|²; the factored form avoids the
    // cancellation the expanded sums suffer when D is small
    let (k1, k2) = (eh * c2 + emh * s2, eh * s2 + emh * c2);
    let (l1, l2) = (eh * c2 - emh * s2, eh * s2 - emh * c2);
    let (sin1, sin2) = (scheme.b1.theta.sin(), scheme.b2.theta.sin());
    let twist = Complex64::from_polar(sin2, scheme.delta_phi());
    let q = sin1 * k1 + twist * k2;
    let p = sin1 * l1 + twist * l2;
    let pq = p * q.conj();
    let (n1, n2, d) = (pq.re, -pq.im, q.norm_sqr());

    if !(d > DEGENERATE_D) {
        return Err(Error::DegenerateScheme(format!(
            "D = {d:.3e}: the scheme leaves no initial coherence"
        )));
    }
    let a = p / q;
    Ok(CorrelationCoefficients {
        n1,
        n2,
        d,
        a_ratio: a.re,
        a_ratio_imag: a.im,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeObservables {
    pub sigma_plus_0: Complex64,
    pub sigma3_0: f64,
    /// outcome probabilities w₁, w₂
    pub probabilities: [f64; 2],
}

pub fn initial_observables(
    scheme: &MeasurementScheme,
    qubit: &QubitParams,
    temperature: f64,
) -> Result<SchemeObservables> {
    let (w0, w1) = level_weights(qubit, temperature)?;
    let ta = scheme.a.theta;
    let (c2, s2) = ((0.5 * ta).cos().powi(2), (0.5 * ta).sin().powi(2));
    let k1 = w0 * c2 + w1 * s2;
    let k2 = w0 * s2 + w1 * c2;
    let (t1, t2) = (scheme.b1.theta, scheme.b2.theta);
    let sigma_plus_0 = Complex64::from_polar(0.5, -scheme.b1.phi)
        * (t1.sin() * k1 + Complex64::from_polar(t2.sin() * k2, scheme.delta_phi()));
    let sigma3_0 = -(t1.cos() * k1 + t2.cos() * k2);

    let (f1, f2) = effects(scheme);
    let prob = |f: &Operator2x2| f.ground_element().re * w0 + f.excited_element().re * w1;
    Ok(SchemeObservables {
        sigma_plus_0,
        sigma3_0,
        probabilities: [prob(&f1), prob(&f2)],
    })
}

/// Checks U₁|ψ₁⟩⟨ψ₁|U₁† − U₂|ψ₁⟩⟨ψ₁|U₂† = G − I entrywise within `tol`.
pub fn verify_udiag_relation(
    u1: &Operator2x2,
    u2: &Operator2x2,
    psi1: &PureState,
    g: &Operator2x2,
    tol: f64,
) -> Result<bool> {
    for u in [u1, u2] {
        let deviation = u.unitarity_deviation();
        if !(deviation <= tol) {
            return Err(Error::NonUnitary { deviation, tol });
        }
    }
    let p = psi1.projector();
    let lhs = *u1 * p * u1.adjoint() - *u2 * p * u2.adjoint();
    Ok((lhs - (*g - Operator2x2::identity())).max_abs() <= tol)
}
