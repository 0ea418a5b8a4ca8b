#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qubit_dephasing::bath::{decoherence_fn, phi, BathParams, QubitParams};
use qubit_dephasing::measurement::{omega_operators, MeasurementScheme, Operator2x2};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Arbitrary scheme with both outcomes carrying coherence.
pub fn random_scheme(r: &mut StdRng) -> MeasurementScheme {
    MeasurementScheme::from_angles(
        r.gen_range(0.0..PI),
        r.gen_range(0.0..2.0 * PI),
        r.gen_range(0.05..PI - 0.05),
        r.gen_range(0.0..2.0 * PI),
        r.gen_range(0.05..PI - 0.05),
        r.gen_range(0.0..2.0 * PI),
    )
    .unwrap()
}

/// Schemes whose Gram operator is diagonal: sin θ₂ e^{iφ₂} = −sin θ₁ e^{iφ₁}.
pub fn random_diagonal_scheme(r: &mut StdRng) -> MeasurementScheme {
    let theta1 = r.gen_range(0.05..PI - 0.05);
    let theta2 = if r.gen_bool(0.5) { theta1 } else { PI - theta1 };
    let phi1 = r.gen_range(0.0..2.0 * PI);
    MeasurementScheme::from_angles(
        r.gen_range(0.0..PI),
        r.gen_range(0.0..2.0 * PI),
        theta1,
        phi1,
        theta2,
        phi1 + PI,
    )
    .unwrap()
}

pub fn random_bath(r: &mut StdRng) -> BathParams {
    BathParams::new(
        r.gen_range(0.0..3.0),
        r.gen_range(0.3..5.0),
        r.gen_range(0.05..5.0),
        1.0,
    )
    .unwrap()
}

/// ⟨σ₊(t)⟩ assembled directly from the 2×2 measurement operators: each
/// thermal level picks up e^{±iΦ} and the common factor e^{iω₀t − γ}.
pub fn sigma_plus_direct(t: f64, scheme: &MeasurementScheme, bath: &BathParams, qubit: &QubitParams) -> Complex64 {
    let (o1, o2) = omega_operators(scheme);
    let sp = Operator2x2::sigma_plus();
    let m = o1.adjoint() * sp * o1 + o2.adjoint() * sp * o2;
    let x = qubit.omega0 / bath.temperature;
    let (w0, w1) = (1.0 / (1.0 + (-x).exp()), 1.0 / (1.0 + x.exp()));
    let p = phi(t, bath).unwrap();
    let g = decoherence_fn(t, bath).unwrap();
    let bracket =
        m.entries[1][1] * w0 * Complex64::from_polar(1.0, p) + m.entries[0][0] * w1 * Complex64::from_polar(1.0, -p);
    bracket * Complex64::from_polar((-g).exp(), qubit.omega0 * t)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
