use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use rfi_core::bounds::{
    concurrence_interval_from_purities, concurrence_interval_from_q2, mems_min_q2, minimize_mems_q2, Verdict,
};
use rfi_core::entropy::{largest_pairs, s2_upper_bound_measured};
use rfi_core::measurement::{
    adaptive_q2_bound, estimate_table, rotation_model, simulate_all, state_for_fidelity, SimulatedOracle,
};
use rfi_core::montecarlo::{self, Ensemble};
use rfi_core::rfi::{self, Quantity};
use rfi_core::rng::substream;
use rfi_core::tomography::compare_tables;
use rfi_core::verify::{run_suite, Formulas, SuiteConfig, SuiteReport};
use rfi_core::{DensityMatrix, LocalRotation, Measured, MeasuredTable, PauliTable, QubitState};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn check_of(report: &SuiteReport, name: &str) -> (bool, f64) {
    let c = report.check(name).unwrap_or_else(|| panic!("missing check {name}"));
    (c.passed, c.max_residual)
}

fn criterion_1() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut worst = 0.0f64;
    let mut bells = vec![DensityMatrix::phi_minus(), DensityMatrix::phi_plus()];
    for k in 0..20 {
        let rot = LocalRotation::haar(&mut substream(101, k));
        bells.push(DensityMatrix::phi_minus().rotate(&rot));
    }
    for rho in &bells {
        let t = rho.pauli_table();
        for (v, want) in [(rfi::q2(&t), 3.0), (rfi::q3(&t), 1.0), (rfi::q4(&t), 6.0), (rfi::q5(&t), 3.0)] {
            worst = worst.max((v - want).abs());
        }
    }
    for k in 0..200 {
        let mut rng = substream(102, k);
        let mut bloch = || {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>() - 0.5);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            QubitState::from_bloch(v.map(|x| x / n)).unwrap()
        };
        let (a, b) = (bloch(), bloch());
        let t = DensityMatrix::product(&a, &b).pauli_table();
        for (v, want) in [(rfi::q2(&t), 1.0), (rfi::q3(&t), 0.0), (rfi::q4(&t), 0.0), (rfi::q5(&t), 0.0)] {
            worst = worst.max((v - want).abs());
        }
    }
    outcome(
        worst <= TOL,
        format!("{} maximally entangled + 200 pure product states, max deviation {worst:.2e} (tol {TOL:.0e})", bells.len()),
    )
}

fn criterion_2() -> Outcome {
    const TOL: f64 = 1e-9;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let report = pool.install(|| run_suite(&SuiteConfig { samples: 10_000, seed: 2 }, &Formulas::default()));
    let secs = start.elapsed().as_secs_f64();
    let names = ["table_purity", "purity_identity", "q3_identity", "q4_identity"];
    let worst = names.iter().map(|n| check_of(&report, n).1).fold(0.0, f64::max);
    let all = names.iter().all(|n| check_of(&report, n).0);
    outcome(
        all && worst <= TOL && secs < 60.0,
        format!("purity, Q3 and Q4 identities on 10^4 Ginibre states, max residual {worst:.2e} (tol {TOL:.0e}), full suite {secs:.2} s on 1 thread (limit 60 s)"),
    )
}

fn criterion_3() -> Outcome {
    const TOL: f64 = 1e-9;
    let states = [
        DensityMatrix::random(&mut substream(301, 0), 4).unwrap(),
        DensityMatrix::random(&mut substream(301, 1), 2).unwrap(),
        DensityMatrix::werner(0.7).unwrap(),
    ];
    let worst = states
        .iter()
        .map(|rho| {
            let base = rho.pauli_table();
            (0..1000u64)
                .into_par_iter()
                .map(|k| {
                    let t = rho.rotate(&LocalRotation::haar(&mut substream(302, k))).pauli_table();
                    Quantity::ALL.iter().map(|q| (q.eval(&t) - q.eval(&base)).abs()).fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max)
        })
        .fold(0.0, f64::max);
    outcome(
        worst <= TOL,
        format!("10 quantities x 10^3 Haar rotations x 3 states, max change {worst:.2e} (tol {TOL:.0e})"),
    )
}

fn criterion_4() -> Outcome {
    const GRID_TOL: f64 = 1e-6;
    let run = montecarlo::run(100_000, 4, Ensemble::Mixed).unwrap();
    let s = &run.summary;
    let grid: Vec<f64> = (0..=100)
        .into_par_iter()
        .map(|k| {
            let c = k as f64 / 100.0;
            (minimize_mems_q2(c).unwrap().0 - mems_min_q2(c)).abs()
        })
        .collect();
    let grid_worst = grid.iter().copied().fold(0.0, f64::max);
    outcome(
        s.lower_bound_violations == 0 && s.sandwich_violations == 0 && grid_worst <= GRID_TOL,
        format!(
            "10^5 states: C^2 lower-bound violations {}, purity-sandwich violations {}, MEMS violations {} (unproven bound, reported); \
             MEMS curve on 101-point grid max error {grid_worst:.2e} (tol {GRID_TOL:.0e})",
            s.lower_bound_violations, s.sandwich_violations, s.mems_violations
        ),
    )
}

fn criterion_5() -> Outcome {
    let q2 = concurrence_interval_from_q2(Measured::exact(2.60)).unwrap();
    let pur = concurrence_interval_from_purities(
        Measured::exact(0.9066),
        Measured::exact(0.5081),
        Measured::exact(0.5044),
    )
    .unwrap();
    let s2 = -(0.9066f64).ln();
    let d_q2 = (q2.lower.value - 0.895).abs().max((q2.upper.value - 0.948).abs());
    let d_pur = (pur.lower.value - 0.8968).abs().max((pur.upper.value - 0.9918).abs());
    let d_s2 = (s2 - 0.0981).abs();
    outcome(
        d_q2 <= 2e-3 && d_pur <= 2e-4 && d_s2 <= 1e-4,
        format!(
            "C from Q2=2.60 [{:.4}, {:.4}] vs [0.895, 0.948] (dev {d_q2:.1e}, tol 2e-3); \
             C from purities [{:.4}, {:.4}] vs [0.8968, 0.9918] (dev {d_pur:.1e}, tol 2e-4); \
             S2 {s2:.4} vs 0.0981 (dev {d_s2:.1e}, tol 1e-4)",
            q2.lower.value, q2.upper.value, pur.lower.value, pur.upper.value
        ),
    )
}

fn q2_run(state: &DensityMatrix, budget: u64, seed: u64) -> Measured {
    let model = rotation_model(state, budget, seed, 1).unwrap();
    let table = estimate_table(&simulate_all(&model).unwrap()).unwrap();
    table.propagate(rfi::q2).unwrap()
}

fn criterion_6() -> Outcome {
    let state = state_for_fidelity(0.91).unwrap();
    let truth = rfi::q2(&state.pauli_table());
    let runs: Vec<Measured> = (0..100u64).into_par_iter().map(|s| q2_run(&state, 100_000, s)).collect();
    let covered = runs.iter().filter(|m| (m.value - truth).abs() <= 3.0 * m.sigma).count();

    let boot: Vec<Measured> = (0..1000u64).into_par_iter().map(|s| q2_run(&state, 100_000, 10_000 + s)).collect();
    let empirical = std_dev(&boot.iter().map(|m| m.value).collect::<Vec<_>>());
    let propagated = boot.iter().map(|m| m.sigma).sum::<f64>() / boot.len() as f64;
    let rel = (propagated - empirical).abs() / empirical;

    let points: Vec<(f64, f64)> = [1_000u64, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let v: Vec<f64> = (0..100u64).into_par_iter().map(|s| q2_run(&state, n, 20_000 + s).value).collect();
            (n as f64, std_dev(&v))
        })
        .collect();
    let slope = log_slope(&points);
    outcome(
        covered >= 95 && rel <= 0.15 && (slope + 0.5).abs() <= 0.1,
        format!(
            "F=0.91, 10^5/setting: 3-sigma coverage {covered}/100 (need 95); propagated sigma {propagated:.5} vs \
             1000-run spread {empirical:.5} (rel {rel:.3}, tol 0.15); error slope over 10^3..10^6 {slope:.3} (need -0.5 +/- 0.1)"
        ),
    )
}

fn adaptive_verdicts(fidelity: f64, budget: u64, seed: u64) -> usize {
    let state = state_for_fidelity(fidelity).unwrap();
    (2..=101usize)
        .into_par_iter()
        .filter(|&k| {
            let mut oracle = SimulatedOracle {
                model: rotation_model(&state, budget, seed, k).unwrap(),
            };
            adaptive_q2_bound(&mut oracle, 3, 3.0).unwrap().verdict == Verdict::Entangled
        })
        .count()
}

fn criterion_7() -> Outcome {
    let bell = adaptive_verdicts(1.0, 1_000_000, 7);
    let noisy = adaptive_verdicts(0.91, 1_000_000, 8);
    outcome(
        bell == 100 && noisy < 100,
        format!(
            "3-setting adaptive bound, 100 Haar rotations, 10^6/setting: maximally entangled {bell}/100 entangled (need 100); \
             F=0.91 {noisy}/100 entangled, {} failures reported",
            100 - noisy
        ),
    )
}

/// A physical table consistent with the reported purities and Q₂.
fn reference_table() -> PauliTable {
    PauliTable([
        [1.0, 0.0, 0.0, 0.0938],
        [0.0, -0.9213, -0.1572, -0.0002],
        [0.0, -0.1572, 0.9213, 0.0002],
        [0.1273, -0.0001, -0.0002, 0.9244],
    ])
}

fn criterion_8() -> Outcome {
    let report = run_suite(&SuiteConfig { samples: 10_000, seed: 8 }, &Formulas::default());
    let (renyi_ok, renyi) = check_of(&report, "renyi_hierarchy");
    let (bounds_ok, bounds) = check_of(&report, "entropy_bounds");
    let (spec_ok, spectrum) = check_of(&report, "spectrum_from_moments");
    let t = reference_table();
    let table = MeasuredTable::exact(t);
    let pairs = largest_pairs(&t, 4);
    let s2_bound = s2_upper_bound_measured(&table, &pairs).unwrap().value;
    let min_eig = t.reconstruct().min_eigenvalue;
    let d = (s2_bound - 0.1188).abs();
    outcome(
        renyi_ok && bounds_ok && spec_ok && spectrum <= 1e-8 && d <= 5e-5 && min_eig >= 0.0,
        format!(
            "10^4 states: Renyi hierarchy residual {renyi:.1e}, Mercator/S2-bound residual {bounds:.1e}, \
             moment spectrum error {spectrum:.1e} (tol 1e-8); four-largest S2 bound {s2_bound:.5} vs 0.1188 (tol 5e-5)"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut exact_worst = 0.0f64;
    for k in 0..50u64 {
        let rank = 1 + (k % 4) as usize;
        let rho = DensityMatrix::random(&mut substream(901, k), rank).unwrap();
        let c = compare_tables(&MeasuredTable::exact(rho.pauli_table()), 4, 3).unwrap();
        exact_worst = exact_worst.max(c.max_abs_difference());
    }
    // a pure state makes the linear estimate unphysical at every budget
    let bell = state_for_fidelity(1.0).unwrap();
    let points: Vec<(f64, f64)> = [1_000u64, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let diffs: Vec<f64> = (0..40u64)
                .into_par_iter()
                .map(|s| {
                    let model = rotation_model(&bell, n, 30_000 + s, 2 + s as usize).unwrap();
                    let table = estimate_table(&simulate_all(&model).unwrap()).unwrap();
                    compare_tables(&table, 4, 3).unwrap().row("q2").unwrap().difference.abs()
                })
                .collect();
            (n as f64, diffs.iter().sum::<f64>() / diffs.len() as f64)
        })
        .collect();
    let slope = log_slope(&points);
    outcome(
        exact_worst <= 1e-9 && (slope + 0.5).abs() <= 0.1,
        format!(
            "exact data: max direct-tomographic difference {exact_worst:.1e} (tol 1e-9); noisy Bell data: |dQ2| slope \
             {slope:.3} over 10^3..10^6 (need -0.5 +/- 0.1; mean |dQ2| {:.2e} -> {:.2e})",
            points[0].1, points[3].1
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("extremal values", criterion_1),
        ("identity suite", criterion_2),
        ("rotation invariance", criterion_3),
        ("bound suite", criterion_4),
        ("reference values", criterion_5),
        ("statistical pipeline", criterion_6),
        ("adaptive Q2", criterion_7),
        ("entropy", criterion_8),
        ("tomography comparison", criterion_9),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failures += usize::from(!o.passed);
        println!("{} criterion {} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
