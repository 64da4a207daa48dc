//! Cross-module invariants exercised on simulated two-cause data:
//! derivative consistency, concavity, linear work growth, estimator
//! invariances, and generator calibration.

use std::time::Instant;

use fgscan_core::boot::{bootstrap_covariance, BootstrapControl};
use fgscan_core::cif::cif_band;
use fgscan_core::dataset::{Dataset, Status, Subject};
use fgscan_core::fit::{fit_unpenalized, FitOptions};
use fgscan_core::ipcw::{censoring_km, precompute_weights, WeightSet};
use fgscan_core::penfit::{bic_select, fit_path, lambda_max, log_lambda_grid, PathOptions, PenaltyKind};
use fgscan_core::scan::{brute_force, scan_all, scan_all_with_state, LinearPredictorState};
use fgscan_core::sim::{simulate, DesignMatrix, SimConfig};

const BETA_STAR: [f64; 10] = [0.40, -0.40, 0.0, -0.50, 0.0, 0.60, 0.75, 0.0, 0.0, -0.80];

/// The simulation design used throughout the toy experiments: p = 10,
/// standard normal covariates, opposite competing effect, uniform
/// censoring on (0, 1).
fn toy_config(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n,
        beta1: BETA_STAR.to_vec(),
        beta2: BETA_STAR.iter().map(|b| -b).collect(),
        design: DesignMatrix::StandardNormal { p: 10 },
        u_min: 0.0,
        u_max: 1.0,
        pi: 0.5,
        seed,
    }
}

fn toy_dataset(n: usize, seed: u64) -> Dataset {
    simulate(&toy_config(n, seed)).unwrap().0
}

fn weights_for(ds: &Dataset) -> WeightSet {
    let g = censoring_km(ds);
    precompute_weights(ds, &g).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

#[test]
fn gradient_matches_central_differences() {
    let ds = toy_dataset(200, 31);
    let w = weights_for(&ds);
    let beta: Vec<f64> = (0..10).map(|j| 0.05 * (j as f64 - 4.5)).collect();
    let out = scan_all(&ds, &w, &beta).unwrap();
    let h = 1e-6;
    for j in 0..10 {
        let mut up = beta.clone();
        let mut dn = beta.clone();
        up[j] += h;
        dn[j] -= h;
        let lu = scan_all(&ds, &w, &up).unwrap().loglik;
        let ld = scan_all(&ds, &w, &dn).unwrap().loglik;
        let fd = (lu - ld) / (2.0 * h);
        let g = out.gradient[j];
        assert!(
            (fd - g).abs() <= 1e-5 * (1.0 + g.abs()),
            "coordinate {j}: fd {fd} vs gradient {g}"
        );
        assert!(out.hessian_diag[j] >= -1e-12);
    }
}

#[test]
fn loglik_is_concave_along_segments() {
    let ds = toy_dataset(150, 37);
    let w = weights_for(&ds);
    let a: Vec<f64> = (0..10).map(|j| 0.08 * ((j % 3) as f64 - 1.0)).collect();
    let b: Vec<f64> = (0..10).map(|j| -0.06 * ((j % 4) as f64 - 1.5)).collect();
    let at = |t: f64| {
        let beta: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect();
        scan_all(&ds, &w, &beta).unwrap().loglik
    };
    let ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let ls: Vec<f64> = ts.iter().map(|&t| at(t)).collect();
    for k in 1..ts.len() - 1 {
        let midpoint_bound = 0.5 * (ls[k - 1] + ls[k + 1]);
        assert!(
            ls[k] >= midpoint_bound - 1e-9,
            "concavity violated at t = {}: {} < {}",
            ts[k],
            ls[k],
            midpoint_bound
        );
    }
}

#[test]
fn scan_work_grows_linearly_in_n_times_p() {
    let p = 4;
    for &n in &[1_000usize, 10_000, 100_000] {
        let cfg = SimConfig {
            n,
            beta1: vec![0.3, -0.3, 0.5, -0.5],
            beta2: vec![-0.3, 0.3, -0.5, 0.5],
            design: DesignMatrix::StandardNormal { p },
            u_min: 0.0,
            u_max: 1.0,
            pi: 0.5,
            seed: 41,
        };
        let (ds, _) = simulate(&cfg).unwrap();
        let w = weights_for(&ds);
        let mut state = LinearPredictorState::new(&ds, &[0.1, 0.1, 0.1, 0.1]).unwrap();
        state.reset_ops();
        scan_all_with_state(&ds, &w, &mut state).unwrap();
        let ops = state.ops();
        assert!(
            ops <= 8 * (n as u64) * (p as u64),
            "n = {n}: {ops} ops exceeds 8 n p"
        );
    }
}

#[test]
fn scan_wallclock_stays_near_linear_while_brute_force_does_not() {
    let p = 2;
    let make = |n: usize| {
        let cfg = SimConfig {
            n,
            beta1: vec![0.4, -0.4],
            beta2: vec![-0.4, 0.4],
            design: DesignMatrix::StandardNormal { p },
            u_min: 0.0,
            u_max: 1.0,
            pi: 0.5,
            seed: 43,
        };
        simulate(&cfg).unwrap().0
    };
    let time_scan = |ds: &Dataset, w: &WeightSet| {
        let reps: Vec<f64> = (0..7)
            .map(|_| {
                let start = Instant::now();
                let out = scan_all(ds, w, &[0.2, -0.2]).unwrap();
                assert!(out.loglik.is_finite());
                start.elapsed().as_secs_f64()
            })
            .collect();
        median(reps)
    };
    let time_brute = |ds: &Dataset, w: &WeightSet| {
        let reps: Vec<f64> = (0..7)
            .map(|_| {
                let start = Instant::now();
                let out = brute_force(ds, w, &[0.2, -0.2]).unwrap();
                assert!(out.loglik.is_finite());
                start.elapsed().as_secs_f64()
            })
            .collect();
        median(reps)
    };

    let small = make(10_000);
    let big = make(80_000);
    let (ws, wb) = (weights_for(&small), weights_for(&big));
    // warm-up to fault in code and allocator paths
    time_scan(&small, &ws);
    let scan_ratio = time_scan(&big, &wb) / time_scan(&small, &ws);
    assert!(
        scan_ratio <= 12.0,
        "scan time ratio for 8x n was {scan_ratio:.2}"
    );

    let small = make(500);
    let big = make(4_000);
    let (ws, wb) = (weights_for(&small), weights_for(&big));
    time_brute(&small, &ws);
    let brute_ratio = time_brute(&big, &wb) / time_brute(&small, &ws);
    assert!(
        brute_ratio >= 40.0,
        "brute-force time ratio for 8x n was only {brute_ratio:.2}"
    );
    println!("wall-clock 8x-n ratios: scan {scan_ratio:.2}, brute force {brute_ratio:.2}");
}

#[test]
fn estimates_recover_the_generating_coefficients() {
    // 100 replicates of the reference design at n = 500: the replicate
    // mean of each fitted coefficient stays near its generating value
    // (Monte Carlo standard errors are ~0.01 per coordinate)
    let reps = 100;
    let mut sums = vec![0.0f64; 10];
    for r in 0..reps {
        let (ds, _) = simulate(&toy_config(500, 90_000 + r)).unwrap();
        let fit = fit_unpenalized(&ds, &FitOptions::default()).unwrap();
        for (s, c) in sums.iter_mut().zip(&fit.coefficients) {
            *s += c;
        }
    }
    for (j, s) in sums.iter().enumerate() {
        let mean = s / reps as f64;
        assert!(
            (mean - BETA_STAR[j]).abs() < 0.05,
            "coordinate {j}: replicate mean {mean:.4} vs generating value {}",
            BETA_STAR[j]
        );
    }
}

#[test]
fn fitted_score_is_numerically_zero() {
    let (ds, _) = simulate(&toy_config(400, 71)).unwrap();
    let fit = fit_unpenalized(&ds, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let w = weights_for(&ds);
    let out = scan_all(&ds, &w, &fit.coefficients).unwrap();
    let score_norm = out.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    assert!(score_norm <= 1e-4, "score norm at the fit is {score_norm:.2e}");
}

#[test]
fn fit_is_invariant_to_row_permutation() {
    use rand::seq::SliceRandom;
    let ds = toy_dataset(300, 47);
    let fit = fit_unpenalized(&ds, &FitOptions::default()).unwrap();

    let mut subjects = ds.to_subjects();
    let mut rng = fgscan_core::rng::master_stream(99);
    subjects.shuffle(&mut rng);
    let shuffled = Dataset::canonicalize(subjects).unwrap();
    let fit2 = fit_unpenalized(&shuffled, &FitOptions::default()).unwrap();
    for (a, b) in fit.coefficients.iter().zip(&fit2.coefficients) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn fit_scales_with_covariate_rescaling() {
    let ds = toy_dataset(250, 53);
    let opts = FitOptions {
        tolerance: 1e-9,
        ..FitOptions::default()
    };
    let fit = fit_unpenalized(&ds, &opts).unwrap();

    // multiply column 3 by c; its coefficient must shrink by 1/c
    let c = 4.0;
    let subjects: Vec<Subject> = ds
        .to_subjects()
        .into_iter()
        .map(|mut s| {
            s.covariates[3] *= c;
            s
        })
        .collect();
    let scaled = Dataset::canonicalize(subjects).unwrap();
    let fit2 = fit_unpenalized(&scaled, &opts).unwrap();
    for j in 0..10 {
        let expect = if j == 3 {
            fit.coefficients[j] / c
        } else {
            fit.coefficients[j]
        };
        assert!(
            (fit2.coefficients[j] - expect).abs() < 1e-8,
            "coordinate {j}: {} vs {}",
            fit2.coefficients[j],
            expect
        );
    }
}

#[test]
fn weight_matrix_reconstruction_matches_direct_quotients() {
    let ds = toy_dataset(200, 59);
    let g = censoring_km(&ds);
    let w = precompute_weights(&ds, &g).unwrap();
    let n = ds.n();
    for i in 0..n {
        if ds.status()[i] != Status::Cause1 {
            continue;
        }
        for k in 0..n {
            let x_i = ds.times()[i];
            let x_k = ds.times()[k];
            let reconstructed = if x_k >= x_i {
                1.0
            } else if ds.status()[k] == Status::Cause2 {
                w.g_at_x()[i] * w.inv_g_at_x()[k]
            } else {
                continue;
            };
            let direct = g.evaluate(x_i) / g.evaluate(x_i.min(x_k));
            assert!(
                (reconstructed - direct).abs() <= 1e-12 * (1.0 + direct.abs()),
                "pair ({i}, {k}): {reconstructed} vs {direct}"
            );
            assert!((0.0..=1.0 + 1e-12).contains(&reconstructed));
        }
    }
}

#[test]
fn simulator_counts_bracket_the_reference_run() {
    // reference run of the same design reported (censored, cause-1,
    // cause-2) = (241, 118, 141) at n = 500; our generator must put those
    // within four Monte Carlo standard deviations of its own mean counts
    let reference = [241.0, 118.0, 141.0];
    let reps = 10_000usize;
    let mut sums = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for r in 0..reps {
        let (_, report) = simulate(&toy_config(500, 100_000 + r as u64)).unwrap();
        for s in 0..3 {
            let c = report.status_counts[s] as f64;
            sums[s] += c;
            sq[s] += c * c;
        }
    }
    for s in 0..3 {
        let mean = sums[s] / reps as f64;
        let sd = (sq[s] / reps as f64 - mean * mean).sqrt();
        assert!(
            (reference[s] - mean).abs() <= 4.0 * sd,
            "status {s}: reference {} vs mean {mean:.1} (sd {sd:.2})",
            reference[s]
        );
    }
}

#[test]
fn simulated_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let (ds, report) = simulate(&toy_config(500, 61)).unwrap();
    ds.write_csv(&path).unwrap();
    let back = Dataset::load_csv(&path).unwrap();
    assert_eq!(back.n(), 500);
    assert_eq!(back.p(), 10);
    assert_eq!(ds.times(), back.times());
    assert_eq!(ds.status(), back.status());
    for j in 0..10 {
        assert_eq!(ds.column(j), back.column(j));
    }
    assert_eq!(back.status_counts(), report.status_counts);
    assert_eq!(report.status_counts.iter().sum::<usize>(), 500);
}

/// The large-p selection design: the ten reference effects followed by
/// ninety nulls, moderately correlated covariates.
fn selection_config(n: usize, seed: u64) -> SimConfig {
    let mut beta1 = BETA_STAR.to_vec();
    beta1.extend(std::iter::repeat(0.0).take(90));
    SimConfig {
        n,
        beta2: beta1.iter().map(|b| -b).collect(),
        beta1,
        design: DesignMatrix::Ar1Normal { p: 100, rho: 0.5 },
        u_min: 0.0,
        u_max: 1.0,
        pi: 0.5,
        seed,
    }
}

#[test]
fn bic_lasso_screens_the_true_support() {
    let true_support: Vec<usize> = BETA_STAR
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect();
    let reps = 20;
    let mut hits = 0;
    for r in 0..reps {
        let (ds, _) = simulate(&selection_config(2000, 7_000 + r)).unwrap();
        let lmax = lambda_max(&ds).unwrap();
        let grid = log_lambda_grid(25, lmax / 100.0, lmax).unwrap();
        let path = fit_path(&ds, PenaltyKind::Lasso, None, &grid, &PathOptions::default())
            .unwrap();
        let selected = bic_select(&path, &ds).unwrap();
        let support: Vec<usize> = path.coefficients[selected]
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        if true_support.iter().all(|j| support.contains(j)) {
            hits += 1;
        }
    }
    println!("lasso BIC screening: {hits}/{reps} replicates kept the true support");
    assert!(
        hits * 10 >= reps * 9,
        "screening held in only {hits}/{reps} replicates"
    );
}

#[test]
fn penalty_support_nesting_is_logged() {
    // the lasso support tends to contain the scad and mcp supports at the
    // BIC optimum; observed, not guaranteed, so log without asserting
    let (ds, _) = simulate(&selection_config(1500, 971)).unwrap();
    let lmax = lambda_max(&ds).unwrap();
    let grid = log_lambda_grid(25, lmax / 100.0, lmax).unwrap();
    let support_of = |kind: PenaltyKind| -> Vec<usize> {
        let path = fit_path(&ds, kind, None, &grid, &PathOptions::default()).unwrap();
        path.coefficients[path.selected]
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    };
    let lasso = support_of(PenaltyKind::Lasso);
    let scad = support_of(PenaltyKind::Scad);
    let mcp = support_of(PenaltyKind::Mcp);
    let scad_nested = scad.iter().all(|j| lasso.contains(j));
    let mcp_nested = mcp.iter().all(|j| lasso.contains(j));
    println!(
        "support sizes: lasso {}, scad {} (nested in lasso: {scad_nested}), \
         mcp {} (nested in lasso: {mcp_nested})",
        lasso.len(),
        scad.len(),
        mcp.len()
    );
}

#[test]
fn bootstrap_and_cif_are_deterministic_across_pools() {
    let ds = toy_dataset(150, 67);
    let control = BootstrapControl {
        replicates: 20,
        seed: 9,
        sample_fraction: 1.0,
    };
    let run_cov = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bootstrap_covariance(&ds, &control, &FitOptions::default()).unwrap())
    };
    assert_eq!(run_cov(1).matrix, run_cov(3).matrix);

    let z0 = vec![0.0; 10];
    let run_band = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                cif_band(&ds, &z0, &control, 0.05, 0.2, 0.8, &FitOptions::default()).unwrap()
            })
    };
    let a = run_band(1);
    let b = run_band(3);
    assert_eq!(a.values, b.values);
    assert_eq!(a.lower, b.lower);
    assert_eq!(a.band_upper, b.band_upper);
    assert_eq!(a.critical_value, b.critical_value);
}
