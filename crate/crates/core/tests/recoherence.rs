mod common;

use rand::Rng;

use common::{linspace, rng};
use qubit_dephasing::bath::{decoherence_fn, BathParams, QubitParams};
use qubit_dephasing::dynamics::gamma_cor_diagonal;
use qubit_dephasing::recoherence::{
    analyze, analyze_with, lambda_min, lambda_min_bisect, small_t_curvature, AnalyzeOptions, ExtremumScope,
    TStarDefinition,
};

fn bath(lambda: f64, s: f64, temp: f64) -> BathParams {
    BathParams::new(lambda, s, temp, 1.0).unwrap()
}

fn gamma_tot(t: f64, b: &BathParams, q: &QubitParams) -> f64 {
    decoherence_fn(t, b).unwrap() + gamma_cor_diagonal(t, b, q).unwrap()
}

fn ln_coth_bound(temp: f64, q: &QubitParams) -> f64 {
    (1.0 / (0.5 * q.omega0 / temp).tanh()).ln()
}

/// Sign changes of γ_tot on a uniform grid of step `h` over (0, t_end].
fn dense_scan(b: &BathParams, q: &QubitParams, t_end: f64, h: f64) -> Vec<(f64, f64)> {
    let n = (t_end / h).ceil() as usize;
    let mut intervals = Vec::new();
    let mut start = None;
    for i in 1..=n {
        let t = i as f64 * h;
        let neg = gamma_tot(t, b, q) < 0.0;
        match (neg, start) {
            (true, None) => start = Some(if i == 1 { 0.0 } else { t - 0.5 * h }),
            (false, Some(a)) => {
                intervals.push((a, t - 0.5 * h));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        intervals.push((a, f64::INFINITY));
    }
    intervals
}

#[test]
fn intervals_match_dense_scan() {
    let q = QubitParams::default();
    let mut r = rng(41);
    let h = 1e-4;
    let mut with_events = 0;
    for _ in 0..20 {
        let b = bath(r.gen_range(0.02..5.0), r.gen_range(0.3..4.0), r.gen_range(0.1..4.0));
        let rep = analyze(&b, &q).unwrap();
        assert!(!rep.truncated);
        let t_end = rep.horizon.min(40.0);
        let scan = dense_scan(&b, &q, t_end, h);
        let reported: Vec<(f64, f64)> = rep.intervals.iter().copied().filter(|&(a, _)| a < t_end).collect();
        assert_eq!(scan.len(), reported.len(), "{b:?}: {scan:?} vs {reported:?}");
        for (s, p) in scan.iter().zip(&reported) {
            assert!((s.0 - p.0).abs() <= 2e-4, "{b:?}: {s:?} vs {p:?}");
            if s.1.is_finite() {
                assert!((s.1 - p.1).abs() <= 2e-4, "{b:?}: {s:?} vs {p:?}");
            }
        }
        with_events += usize::from(!scan.is_empty());
    }
    assert!(with_events >= 10);
}

#[test]
fn report_invariants_hold() {
    let q = QubitParams::default();
    let opts = AnalyzeOptions {
        extremum_scope: ExtremumScope::FirstInterval,
        ..AnalyzeOptions::default()
    };
    for lambda in [0.1, 1.0, 10.0] {
        for s in [0.05, 0.5, 1.0, 2.0, 3.5, 7.0] {
            for temp in [0.1, 1.0, 4.0] {
                let b = bath(lambda, s, temp);
                let rep = analyze_with(&b, &q, &opts).unwrap();
                assert_eq!(rep.rde_count, rep.intervals.len());
                let total: f64 = rep.intervals.iter().map(|(a, b)| b - a).sum();
                assert!((rep.t_star_tot - total).abs() < 1e-9);
                assert!(rep.intervals.windows(2).all(|w| w[0].1 < w[1].0));
                let Some(t_star) = rep.t_star else {
                    assert!(rep.gamma_extr.is_none() && rep.intervals.is_empty());
                    continue;
                };
                let (t_extr, g) = (rep.t_extr.unwrap(), rep.gamma_extr.unwrap());
                assert!(t_extr < t_star, "{b:?}");
                assert!(gamma_tot(t_star, &b, &q).abs() <= 1e-8, "{b:?}");
                assert!(g < 0.0 && g >= -ln_coth_bound(temp, &q), "{b:?}: {g}");
                assert!((gamma_tot(t_extr, &b, &q) - g).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn global_extremum_is_the_deepest() {
    let q = QubitParams::default();
    let b = bath(1.0, 7.0, 4.0);
    let global = analyze(&b, &q).unwrap();
    let first = analyze_with(
        &b,
        &q,
        &AnalyzeOptions {
            extremum_scope: ExtremumScope::FirstInterval,
            ..AnalyzeOptions::default()
        },
    )
    .unwrap();
    assert!(global.gamma_extr.unwrap() <= first.gamma_extr.unwrap());
    assert_eq!(global.intervals, first.intervals);
}

#[test]
fn extreme_ohmicities_approach_the_bound() {
    let q = QubitParams::default();
    for (s, temp) in [(0.05, 0.1), (7.0, 4.0)] {
        let g = analyze(&bath(1.0, s, temp), &q).unwrap().gamma_extr.unwrap();
        let bound = ln_coth_bound(temp, &q);
        assert!(g.abs() >= 0.98 * bound, "s={s}: {g} vs {bound}");
    }
}

#[test]
fn ohmic_series_in_temperature() {
    let q = QubitParams::default();
    let mut prev = f64::INFINITY;
    for temp in [0.1, 1.0, 10.0] {
        let rep = analyze(&bath(1.0, 1.0, temp), &q).unwrap();
        assert_eq!(rep.rde_count, 1);
        let g = rep.gamma_extr.unwrap();
        assert!(g < prev && rep.t_star.unwrap().is_finite());
        prev = g;
    }
}

#[test]
fn repeated_events_at_extreme_ohmicity() {
    let q = QubitParams::default();
    assert!(analyze(&bath(1.0, 0.05, 0.1), &q).unwrap().rde_count >= 2);
    assert!(analyze(&bath(1.0, 7.0, 4.0), &q).unwrap().rde_count >= 2);
}

#[test]
fn below_threshold_report_is_empty() {
    let q = QubitParams::default();
    let b = bath(0.001, 1.0, 1.0);
    let rep = analyze(&b, &q).unwrap();
    assert_eq!(rep.rde_count, 0);
    assert!(rep.t_star.is_none() && rep.gamma_extr.is_none());
    assert!(dense_scan(&b, &q, 30.0, 1e-3).is_empty());
}

#[test]
fn extremum_definition_reports_the_minimum() {
    let q = QubitParams::default();
    let b = bath(1.0, 1.0, 1.0);
    let opts = AnalyzeOptions {
        t_star_def: TStarDefinition::Extremum,
        ..AnalyzeOptions::default()
    };
    let rep = analyze_with(&b, &q, &opts).unwrap();
    assert_eq!(rep.t_star, rep.t_extr);
}

#[test]
fn threshold_closed_form_and_bisection_agree() {
    let q = QubitParams::default();
    for s in linspace(0.5, 4.0, 5) {
        for temp in linspace(0.1, 4.0, 5) {
            let a = lambda_min(s, temp, &q, 1.0).unwrap();
            let b = lambda_min_bisect(s, temp, &q, 1.0).unwrap();
            assert!((a - b).abs() <= 1e-5 * a, "s={s} T={temp}");
            let up = analyze(&bath(1.2 * a, s, temp), &q).unwrap();
            let down = analyze(&bath(0.8 * a, s, temp), &q).unwrap();
            assert!(up.rde_count >= 1 && down.rde_count == 0, "s={s} T={temp}");
            let c2 = small_t_curvature(&bath(a, s, temp), &q).unwrap();
            let m_scale = small_t_curvature(&bath(a, s, temp).with_lambda(0.0), &q)
                .unwrap()
                .abs()
                .max(a);
            assert!(c2.abs() <= 1e-9 * m_scale.max(1.0), "s={s} T={temp}: {c2}");
        }
    }
}

#[test]
fn threshold_examples() {
    let q = QubitParams::default();
    let spot = lambda_min(1.0, 1.0, &q, 1.0).unwrap();
    let exact = (std::f64::consts::PI.powi(2) / 3.0 - 1.0) * 0.05f64.sinh().powi(2);
    assert!((spot - exact).abs() <= 1e-12 * exact);
    let tiny = QubitParams::new(1e-6).unwrap();
    assert!(lambda_min(1.0, 1.0, &tiny, 1.0).unwrap() < 1e-12);
    let l: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&t| lambda_min(1.0, t, &q, 1.0).unwrap())
        .collect();
    assert!(l[0] > l[1] && l[1] > l[2]);
    let at2 = lambda_min(2.0, 0.25, &q, 1.0).unwrap();
    assert!((lambda_min_bisect(2.0, 0.25, &q, 1.0).unwrap() - at2).abs() <= 1e-5 * at2);
    assert!(lambda_min(3.0, 0.25, &q, 1.0).unwrap() < at2);
}

#[test]
fn curvature_sign_matches_finite_difference() {
    let q = QubitParams::default();
    let b = bath(1.0, 1.0, 1.0);
    let c2 = small_t_curvature(&b, &q).unwrap();
    assert!(c2 < 0.0);
    let h = 1e-3;
    // γ_tot(0) = 0 and γ_tot is even in t, so γ_tot(h) ≈ c₂h²
    let fd = gamma_tot(h, &b, &q) / (h * h);
    assert!((fd - c2).abs() <= 1e-3 * c2.abs(), "{fd} vs {c2}");
    assert_eq!(small_t_curvature(&b.with_lambda(0.0), &q).unwrap(), 0.0);
}
