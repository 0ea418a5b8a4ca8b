//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::process::Command;
use std::time::Instant;

use rand::Rng;

use common::{linspace, random_bath, random_diagonal_scheme, random_scheme, rng, sigma_plus_direct};
use qubit_dephasing::bath::{decoherence_fn, phi, phi_quadrature, BathParams, QubitParams};
use qubit_dephasing::dynamics::{gamma_cor_diagonal, gamma_cor_general, sigma_plus};
use qubit_dephasing::measurement::is_gram_diagonal;
use qubit_dephasing::recoherence::{analyze, lambda_min, lambda_min_bisect, AnalyzeOptions};
use qubit_dephasing::specfun::{gamma_fn, hurwitz_zeta};
use qubit_dephasing::sweep::{run_sweep, GridSpec, SweepSpec, SweepVariable};

type Outcome = (bool, String);

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn c1_closed_forms() -> Outcome {
    let start = Instant::now();
    let bath = BathParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
    let mut gamma_err: f64 = 0.0;
    for t in linspace(0.0, 100.0, 2001) {
        let g = decoherence_fn(t, &bath).unwrap();
        let want = 0.5 * (t * t).ln_1p();
        gamma_err = gamma_err.max(if t == 0.0 { g.abs() } else { rel(g, want) });
    }
    let mut phi_err: f64 = 0.0;
    for s in [0.3, 0.99, 1.0, 1.01, 2.0, 3.0, 7.0] {
        let b = BathParams::new(1.0, s, 0.0, 1.0).unwrap();
        for t in linspace(0.0, 50.0, 201) {
            let closed = phi(t, &b).unwrap();
            let quad = phi_quadrature(t, &b).unwrap();
            phi_err = phi_err.max((closed - quad).abs() / (1.0 + closed.abs()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        gamma_err <= 1e-8 && phi_err <= 1e-8 && secs < 10.0,
        format!("gamma rel err {gamma_err:.2e}, phi err {phi_err:.2e} (limit 1e-8), {secs:.2} s (limit 10 s)"),
    )
}

fn c2_special_functions() -> Outcome {
    let mut r = rng(2);
    let (mut zeta_err, mut gamma_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let s = r.gen_range(1.01..12.0);
        let a = r.gen_range(1e-3..100.0);
        let z = hurwitz_zeta(s, a).unwrap();
        let resid = z - hurwitz_zeta(s, a + 1.0).unwrap() - a.powf(-s);
        zeta_err = zeta_err.max(resid.abs() / z.abs());
        let x = r.gen_range(1e-3..49.0);
        let g1 = gamma_fn(x + 1.0).unwrap();
        gamma_err = gamma_err.max((g1 - x * gamma_fn(x).unwrap()).abs() / g1);
    }
    let pi2 = std::f64::consts::PI.powi(2);
    let z1 = rel(hurwitz_zeta(2.0, 1.0).unwrap(), pi2 / 6.0);
    let z2 = rel(hurwitz_zeta(2.0, 0.5).unwrap(), pi2 / 2.0);
    (
        zeta_err <= 1e-10 && gamma_err <= 1e-10 && z1 <= 1e-10 && z2 <= 1e-10,
        format!("zeta recurrence {zeta_err:.2e}, gamma recurrence {gamma_err:.2e}, zeta(2,1) {z1:.2e}, zeta(2,0.5) {z2:.2e}"),
    )
}

fn threshold_grid_points() -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for s in linspace(0.5, 4.0, 6) {
        for t in linspace(0.1, 4.0, 6) {
            pts.push((s, t));
        }
    }
    pts
}

fn c3_threshold_cross_validation() -> Outcome {
    let q = QubitParams::default();
    let mut worst: f64 = 0.0;
    for (s, t) in threshold_grid_points() {
        let a = lambda_min(s, t, &q, 1.0).unwrap();
        let b = lambda_min_bisect(s, t, &q, 1.0).unwrap();
        worst = worst.max(rel(b, a));
    }
    // at s = T = 1: m1 = 1 and m_coth = 1 + 2ζ(2,2) = π²/3 − 1
    let spot = lambda_min(1.0, 1.0, &q, 1.0).unwrap();
    let exact = (std::f64::consts::PI.powi(2) / 3.0 - 1.0) * 0.05f64.sinh().powi(2);
    let spot_err = rel(spot, exact);
    let quoted = rel(spot, 0.0057295);
    (
        worst <= 1e-5 && spot_err <= 1e-10 && quoted <= 2e-5,
        format!(
            "max rel diff {worst:.2e} (limit 1e-5), lambda_min(1,1) = {spot:.10} (exact form rel {spot_err:.1e}, vs 0.0057295 rel {quoted:.1e})"
        ),
    )
}

fn c4_dichotomy() -> Outcome {
    let q = QubitParams::default();
    let mut bad = Vec::new();
    for (s, t) in threshold_grid_points() {
        let lm = lambda_min(s, t, &q, 1.0).unwrap();
        let above = analyze(&BathParams::new(1.2 * lm, s, t, 1.0).unwrap(), &q).unwrap();
        let below = analyze(&BathParams::new(0.8 * lm, s, t, 1.0).unwrap(), &q).unwrap();
        if above.rde_count < 1 || below.rde_count != 0 {
            bad.push(format!("(s={s}, T={t}: {} / {})", above.rde_count, below.rde_count));
        }
    }
    (
        bad.is_empty(),
        format!(
            "36 grid points, violations: {}",
            if bad.is_empty() { "none".into() } else { bad.join(" ") }
        ),
    )
}

fn c5_equivalence() -> Outcome {
    let q = QubitParams::default();
    let mut r = rng(5);
    let mut cor_err: f64 = 0.0;
    let mut non_diag = 0;
    for _ in 0..1000 {
        let scheme = random_diagonal_scheme(&mut r);
        assert!(is_gram_diagonal(&scheme, 1e-10));
        let bath = random_bath(&mut r);
        let t = r.gen_range(0.0..10.0);
        let g = gamma_cor_general(t, &scheme, &bath, &q).unwrap();
        let d = gamma_cor_diagonal(t, &bath, &q).unwrap();
        cor_err = cor_err.max((g - d).abs() / d.abs().max(1.0));
    }
    let mut sigma_err: f64 = 0.0;
    for i in 0..100 {
        let scheme = if i % 4 == 0 {
            random_diagonal_scheme(&mut r)
        } else {
            random_scheme(&mut r)
        };
        non_diag += usize::from(!is_gram_diagonal(&scheme, 1e-10));
        let bath = random_bath(&mut r);
        let t = r.gen_range(0.0..10.0);
        let closed = sigma_plus(t, &scheme, &bath, &q).unwrap().norm();
        let direct = sigma_plus_direct(t, &scheme, &bath, &q).norm();
        sigma_err = sigma_err.max((closed - direct).abs() / direct.max(1.0));
    }
    (
        cor_err <= 1e-10 && sigma_err <= 1e-9 && non_diag > 0,
        format!("gamma_cor diff {cor_err:.2e} (limit 1e-10), |sigma+| diff {sigma_err:.2e} (limit 1e-9), {non_diag} non-diagonal tuples"),
    )
}

fn ln_coth_bound(temp: f64, q: &QubitParams) -> f64 {
    (1.0 / (0.5 * q.omega0 / temp).tanh()).ln()
}

fn c6_fig2() -> Outcome {
    let start = Instant::now();
    let q = QubitParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut prev = f64::INFINITY;
    for t in [0.1, 1.0, 10.0] {
        let rep = analyze(&BathParams::new(1.0, 1.0, t, 1.0).unwrap(), &q).unwrap();
        let g = rep.gamma_extr.unwrap_or(f64::NAN);
        let bound = ln_coth_bound(t, &q);
        ok &= rep.intervals.len() == 1 && g < prev && g.abs() <= bound;
        prev = g;
        parts.push(format!(
            "T={t}: {} interval(s), gamma_extr {g:.6}, bound {bound:.6}",
            rep.intervals.len()
        ));
    }
    let b10 = ln_coth_bound(10.0, &q);
    ok &= (b10 - 5.2983).abs() <= 1e-4;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    (ok, format!("{}; {secs:.2} s (limit 5 s)", parts.join("; ")))
}

fn c7_fig3() -> Outcome {
    let q = QubitParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (l, s, t) in [(1.0, 0.05, 0.1), (1.0, 7.0, 4.0)] {
        let bath = BathParams::new(l, s, t, 1.0).unwrap();
        let rep = analyze(&bath, &q).unwrap();
        let Some(&(a, b)) = rep.intervals.first() else {
            ok = false;
            parts.push(format!("s={s}: no negative interval"));
            continue;
        };
        let mid = 0.5 * (a + b);
        let cor = gamma_cor_diagonal(mid, &bath, &q).unwrap();
        let ratio = decoherence_fn(mid, &bath).unwrap().abs() / cor.abs();
        ok &= rep.rde_count >= 2 && ratio <= 0.02;
        parts.push(format!(
            "s={s}, T={t}: rde {}, midpoint ratio {ratio:.4} (limit 0.02)",
            rep.rde_count
        ));
    }
    (ok, parts.join("; "))
}

fn c8_fig1() -> Outcome {
    let q = QubitParams::default();
    let s_grid = linspace(0.05, 5.0, 991);
    let argmax = |t: f64| {
        s_grid
            .iter()
            .map(|&s| (s, lambda_min(s, t, &q, 1.0).unwrap()))
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |acc, p| if p.1 > acc.1 { p } else { acc },
            )
            .0
    };
    let peaks: Vec<f64> = [0.5, 2.0, 4.0].iter().map(|&t| argmax(t)).collect();
    let shifts_down = peaks.windows(2).all(|w| w[1] < w[0]);
    let along_t: Vec<f64> = linspace(0.1, 4.0, 200)
        .iter()
        .map(|&t| lambda_min(1.0, t, &q, 1.0).unwrap())
        .collect();
    let decreasing = along_t.windows(2).all(|w| w[1] < w[0]);
    (
        shifts_down && decreasing,
        format!(
            "argmax s at T=0.5,2,4: {:.3}, {:.3}, {:.3}; lambda_min(s=1) decreasing in T: {decreasing}",
            peaks[0], peaks[1], peaks[2]
        ),
    )
}

fn fig4_spec(lambda: f64, temps: &[f64]) -> SweepSpec {
    SweepSpec {
        vary: SweepVariable::Ohmicity,
        grid: GridSpec::new(0.05, 7.0, 200).unwrap(),
        fixed_lambda: lambda,
        series: temps.to_vec(),
        qubit: QubitParams::default(),
        omega_c: 1.0,
        options: AnalyzeOptions::default(),
    }
}

fn c9_fig4() -> Outcome {
    let rows = run_sweep(&fig4_spec(0.1, &[0.1]), 0).unwrap();
    let absent: Vec<bool> = rows.iter().map(|r| r.t_star.is_none()).collect();
    let runs = absent.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(absent[0]);
    let first = absent.iter().position(|&a| a);
    let last = absent.iter().rposition(|&a| a);
    let gap_ok = runs == 1 && absent.iter().any(|&a| !a);
    let gap = match (first, last) {
        (Some(i), Some(j)) => format!("[{:.3}, {:.3}]", rows[i].s, rows[j].s),
        _ => "none".into(),
    };

    let temps = [0.25, 0.5, 1.0];
    let rows = run_sweep(&fig4_spec(1.0, &temps), 0).unwrap();
    let mut peaks = Vec::new();
    for &t in &temps {
        let best = rows
            .iter()
            .filter(|r| r.temperature == t)
            .filter_map(|r| r.gamma_extr.map(|g| (r.s, g)))
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |acc, p| if p.1 > acc.1 { p } else { acc },
            );
        peaks.push(best.0);
    }
    let peaks_ok = peaks.iter().all(|s| (1.5..=2.5).contains(s));
    (
        gap_ok && peaks_ok,
        format!(
            "lambda=0.1, T=0.1 no-recoherence s-range {gap} ({runs} run); lambda=1 gamma_extr peak at s = {:.3}, {:.3}, {:.3}",
            peaks[0], peaks[1], peaks[2]
        ),
    )
}

fn c10_fig5() -> Outcome {
    let q = QubitParams::default();
    let best = [0.05, 0.5, 7.0]
        .iter()
        .map(|&s| {
            let rep = analyze(&BathParams::new(10.0, s, 4.0, 1.0).unwrap(), &q).unwrap();
            (-rep.gamma_extr.unwrap_or(f64::INFINITY)).exp()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    (
        (40.0..=80.0).contains(&best),
        format!("max exp(-gamma_extr) = {best:.3} (range [40, 80])"),
    )
}

fn c11_performance() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_qubit-dephasing");
    let dir = std::env::temp_dir();
    let run = |jobs: &str| -> Result<(Vec<u8>, f64), String> {
        let out = dir.join(format!("fig4-acceptance-{}-{jobs}.csv", std::process::id()));
        let start = Instant::now();
        let status = Command::new(exe)
            .args(["sweep", "--preset", "fig4", "--jobs", jobs, "--out"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        if !status.success() {
            return Err(format!("exit status {status}"));
        }
        let bytes = std::fs::read(&out).map_err(|e| e.to_string())?;
        let _ = std::fs::remove_file(&out);
        Ok((bytes, secs))
    };
    match (run("1"), run("8")) {
        (Ok((a, ta)), Ok((b, tb))) => {
            let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
            (
                a == b && ta < 300.0 && tb < 300.0 && rows == 3600,
                format!(
                    "{rows} rows; jobs 1: {ta:.1} s, jobs 8: {tb:.1} s (limit 300 s); byte-identical: {}",
                    a == b
                ),
            )
        }
        (a, b) => (false, format!("run failed: {:?} {:?}", a.err(), b.err())),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("closed-form oracles", c1_closed_forms),
        ("special functions", c2_special_functions),
        ("threshold cross-validation", c3_threshold_cross_validation),
        ("recoherence dichotomy", c4_dichotomy),
        ("scheme equivalence", c5_equivalence),
        ("ohmic temperature series", c6_fig2),
        ("repeated events", c7_fig3),
        ("threshold map trends", c8_fig1),
        ("ohmicity sweep trends", c9_fig4),
        ("strong coupling increment", c10_fig5),
        ("sweep performance and determinism", c11_performance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {} {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
