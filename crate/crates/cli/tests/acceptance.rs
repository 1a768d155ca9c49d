//! End-to-end acceptance checks for the packaged benchmarks.
//!
//! Each test covers one criterion and prints a single PASS/FAIL line with
//! the measured numbers before asserting. The first four execute complete
//! benchmark runs through the same path as the binary; the property suite
//! checks the mathematical contracts of the building blocks with no
//! benchmark runs; the last test checks byte-level determinism of the CSV
//! report. Mass conservation (within 1e-2) is asserted on every benchmark
//! run as part of the first four tests.

use std::path::Path;
use std::process::Command;

use ndarray::{s, Array1, Array2};

use fptt::cheb::{cc_weights, cheb_diff1, cheb_diff2, interp_coeffs, ChebGrid};
use fptt::cross::{
    cross_approximate, cross_on_cheb_grid, maxvol, CrossConfig, CrossError, IndexBatch,
};
use fptt::models::{gaussian_ic, kramer_observables, lyapunov_solve, DumbbellParams, OuParams};
use fptt::solver::{build_stepper, solve, ProblemDef};
use fptt::tt::{
    tt_add, tt_apply_mode_matrices, tt_element, tt_from_full, tt_rank1_random, tt_rel_diff,
    tt_round, tt_to_full, FullTensor,
};
use fptt_cli::{resolve_config, run, PartialConfig, Problem, RunSummary, CSV_HEADER};

struct Row {
    erank: f64,
    err_analytic: Option<f64>,
    err_stationary: Option<f64>,
    psi: Option<f64>,
    eta: Option<f64>,
    mass: f64,
}

fn parse_rows(path: &Path) -> Vec<Row> {
    let text = std::fs::read_to_string(path).expect("report exists");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 10, "row has all columns: {line}");
            let opt = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
            Row {
                erank: f[2].parse().unwrap(),
                err_analytic: opt(f[3]),
                err_stationary: opt(f[4]),
                psi: opt(f[5]),
                eta: opt(f[6]),
                mass: f[7].parse().unwrap(),
            }
        })
        .collect()
}

/// Runs one benchmark at its default settings and returns the summary and
/// the parsed CSV rows.
fn run_benchmark(problem: Problem) -> (RunSummary, Vec<Row>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let flags = PartialConfig {
        problem: Some(problem),
        output_path: Some(out.clone()),
        ..PartialConfig::default()
    };
    let config = resolve_config(flags, PartialConfig::default()).unwrap();
    let summary = run(&config).expect("benchmark run completes");
    let rows = parse_rows(&out);
    assert_eq!(rows.len(), config.time_points - 1, "one row per step");
    (summary, rows)
}

fn worst_mass_deviation(rows: &[Row], label: &str) -> f64 {
    let worst = rows
        .iter()
        .map(|r| (r.mass - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(
        worst <= 1e-2,
        "{label}: worst mass deviation {worst:.3e} exceeds 1e-2"
    );
    worst
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_1_ou_1d_matches_analytic_and_stationary() {
    let (summary, rows) = run_benchmark(Problem::Oup1d);
    let last = rows.last().unwrap();
    let err_analytic = last.err_analytic.unwrap();
    let err_stationary = last.err_stationary.unwrap();
    let mass_dev = worst_mass_deviation(&rows, "oup1d");
    let pass = err_analytic <= 5e-5 && err_stationary <= 5e-5 && summary.total_seconds <= 60.0;
    println!(
        "criterion 1 (1-D process, N=50, M=1000): {} — final err vs analytic {:.3e} (<= 5e-5), \
         vs stationary {:.3e} (<= 5e-5), mass dev {:.1e}, {:.1} s (<= 60 s)",
        verdict(pass),
        err_analytic,
        err_stationary,
        mass_dev,
        summary.total_seconds,
    );
    assert!(pass, "err_analytic {err_analytic:.4e}, err_stationary {err_stationary:.4e}");
}

#[test]
fn criterion_2_ou_3d_error_and_rank_bounds() {
    let (summary, rows) = run_benchmark(Problem::Oup3d);
    let err = rows.last().unwrap().err_stationary.unwrap();
    let max_erank = rows.iter().map(|r| r.erank).fold(0.0, f64::max);
    let mass_dev = worst_mass_deviation(&rows, "oup3d");
    let pass = err <= 3e-3 && max_erank <= 8.0 && summary.total_seconds <= 600.0;
    println!(
        "criterion 2 (3-D process, N=30, M=100, eps=1e-4): {} — final err vs stationary \
         {:.3e} (<= 3e-3), max erank {:.2} (<= 8), mass dev {:.1e}, {:.1} s (<= 600 s)",
        verdict(pass),
        err,
        max_erank,
        mass_dev,
        summary.total_seconds,
    );
    assert!(pass, "err {err:.4e}, max erank {max_erank:.2}");
}

#[test]
fn criterion_3_ou_5d_error_and_rank_bounds() {
    let (summary, rows) = run_benchmark(Problem::Oup5d);
    let last = rows.last().unwrap();
    let err = last.err_stationary.unwrap();
    let final_erank = last.erank;
    let mass_dev = worst_mass_deviation(&rows, "oup5d");
    let pass =
        err <= 3e-3 && (3.0..=6.0).contains(&final_erank) && summary.total_seconds <= 1800.0;
    println!(
        "criterion 3 (5-D process, N=30, M=100, eps=1e-4): {} — final err vs stationary \
         {:.3e} (<= 3e-3), final erank {:.2} (within [3, 6]), mass dev {:.1e}, {:.1} s (<= 1800 s)",
        verdict(pass),
        err,
        final_erank,
        mass_dev,
        summary.total_seconds,
    );
    // The error bound is missed by a small factor at these exact settings:
    // the shared accuracy makes each of the ~200 rounding calls shed a
    // slightly signed sliver of mass, and over 99 steps the accumulated
    // amplitude deficit (~0.2%) lands directly in this error metric. All
    // tolerance knobs are fixed by the benchmark definition, so the
    // measured value is reported as is rather than tuned around.
    assert!(pass, "err {err:.4e} (bound 3e-3), final erank {final_erank:.2} (bounds [3, 6])");
}

#[test]
fn criterion_4_dumbbell_observables() {
    let (summary, rows) = run_benchmark(Problem::Dumbbell);
    let last = rows.last().unwrap();
    let psi = last.psi.unwrap();
    let eta = last.eta.unwrap();
    // Long-horizon reference values for the stationary shear observables.
    let psi_ref = 2.071143;
    let eta_ref = 1.0328125;
    let final_erank = last.erank;
    let mass_dev = worst_mass_deviation(&rows, "dumbbell");
    let pass = (psi - psi_ref).abs() <= 1e-2
        && (eta - eta_ref).abs() <= 1e-2
        && final_erank <= 12.0;
    println!(
        "criterion 4 (dumbbell, N=60, M=100, eps=1e-5): {} — psi(10) {:.6} (ref {} +/- 1e-2), \
         eta(10) {:.6} (ref {} +/- 1e-2), final erank {:.2} (<= 12), mass dev {:.1e}, {:.1} s",
        verdict(pass),
        psi,
        psi_ref,
        eta,
        eta_ref,
        final_erank,
        mass_dev,
        summary.total_seconds,
    );
    assert!(pass, "psi {psi:.6}, eta {eta:.6}, final erank {final_erank:.2}");
}

#[test]
fn criterion_5_property_suite() {
    tt_contracts();
    maxvol_dominance();
    cross_recovery();
    spectral_differentiation();
    dense_collocation_equivalence();
    dense_heat_propagator_match();
    heat_kernel_variance_growth();
    second_order_time_slope();
    lyapunov_residuals();
    symmetric_density_observables();
    println!(
        "criterion 5 (property suite): PASS — tensor-train contracts, maxvol dominance, cross \
         recovery, spectral differentiation, dense collocation equivalence, dense heat \
         propagator match, heat-kernel variance, second-order time slope, Lyapunov residuals, \
         symmetric-density observables (mass bounds are asserted on the runs of criteria 1-4)"
    );
}

/// Compression to the train and back is lossless at tight accuracy, and
/// rounding both recompresses an inflated representation and respects its
/// relative error budget.
fn tt_contracts() {
    let sizes = [7, 6, 5];
    let full = FullTensor::from_fn(&sizes, |ix| {
        let (i, j, k) = (ix[0] as f64, ix[1] as f64, ix[2] as f64);
        (0.3 * i).sin() * (0.2 * j + 0.1).cos() * (0.1 * k).exp()
            + 0.5 * (0.15 * i + 0.4).cos() * (0.3 * j).sin() * (-0.2 * k).exp()
    });
    let tt = tt_from_full(&full, 1e-12).unwrap();
    let back = tt_to_full(&tt).unwrap();
    let drift = back
        .data()
        .iter()
        .zip(full.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(
        drift <= 1e-10 * full.norm(),
        "round trip through the train drifts by {drift:.2e}"
    );

    let doubled = tt_add(&tt, &tt).unwrap();
    let rounded = tt_round(&doubled, 1e-10).unwrap();
    assert!(
        rounded
            .ranks()
            .iter()
            .zip(tt.ranks())
            .all(|(&r, s)| r <= s),
        "rounding fails to recompress a doubled representation: {:?} vs {:?}",
        rounded.ranks(),
        tt.ranks(),
    );
    assert!(tt_rel_diff(&rounded, &doubled).unwrap() <= 1e-10);
    let coarse = tt_round(&doubled, 0.5).unwrap();
    assert!(
        tt_rel_diff(&coarse, &doubled).unwrap() <= 0.5,
        "coarse rounding exceeds its relative budget"
    );
}

/// The rows picked by maxvol certify entrywise dominance: every entry of
/// the full matrix times the inverse of the picked submatrix stays within
/// 1 + delta.
fn maxvol_dominance() {
    let (rows, cols) = (40, 6);
    // A deterministic full-rank matrix; trigonometric formulas in i and j
    // are unsuitable here because angle addition makes them low-rank.
    let mut seed = 0x5EEDu64;
    let mut next = move || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let data: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
    let m = Array2::from_shape_vec((rows, cols), data).unwrap();
    let delta = 0.01;
    let picked = maxvol(&m, delta).unwrap();
    assert_eq!(picked.len(), cols);
    let sub = nalgebra::DMatrix::from_fn(cols, cols, |r, c| m[[picked[r], c]]);
    let inv = sub.try_inverse().expect("picked submatrix invertible");
    let full = nalgebra::DMatrix::from_fn(rows, cols, |r, c| m[[r, c]]);
    let b = full * inv;
    let worst = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    assert!(
        worst <= 1.0 + delta + 1e-9,
        "dominance bound violated: max |B| = {worst:.6}"
    );
}

/// Cross reconstruction recovers a separable product of per-axis profiles
/// and a tensor already stored in train form to within ten times the
/// requested accuracy.
fn cross_recovery() {
    let eps = 1e-6;
    let cfg = CrossConfig {
        eps_ca: eps,
        ..CrossConfig::default()
    };

    let sizes = vec![12, 12, 12];
    let grid = ChebGrid::new(sizes.clone(), vec![(-3.0, 3.0); 3]).unwrap();
    let f = |p: &[f64]| {
        (-0.5 * p[0] * p[0]).exp() * (0.3 * p[1]).cos() * (1.0 + 0.1 * p[2] * p[2])
    };
    let guess = tt_rank1_random(grid.sizes(), 11).unwrap();
    let out = cross_on_cheb_grid(
        |pts: &Array2<f64>| {
            Ok(pts
                .outer_iter()
                .map(|row| f(row.as_slice().unwrap()))
                .collect())
        },
        &grid,
        &guess,
        &cfg,
    )
    .unwrap();
    assert!(out.converged, "separable reconstruction fails to converge");
    let dense = FullTensor::from_fn(&sizes, |ix| f(&grid.point(ix)));
    let recovered = tt_to_full(&out.tensor).unwrap();
    let num = recovered
        .data()
        .iter()
        .zip(dense.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let rel = num / dense.norm();
    assert!(rel <= 10.0 * eps, "separable oracle recovered to {rel:.2e}");

    let stored = tt_add(
        &tt_rank1_random(&[9, 8, 7], 21).unwrap(),
        &tt_rank1_random(&[9, 8, 7], 22).unwrap(),
    )
    .unwrap();
    let oracle = |batch: &IndexBatch| -> Result<Vec<f64>, CrossError> {
        (0..batch.len())
            .map(|p| {
                let ix: Vec<usize> = batch.indices().row(p).to_vec();
                tt_element(&stored, &ix).map_err(CrossError::oracle)
            })
            .collect()
    };
    let guess = tt_rank1_random(&[9, 8, 7], 23).unwrap();
    let out = cross_approximate(oracle, &guess, &cfg).unwrap();
    let rel = tt_rel_diff(&out.tensor, &stored).unwrap();
    assert!(rel <= 10.0 * eps, "stored-low-rank oracle recovered to {rel:.2e}");
}

/// Differentiation matrices are exact on polynomials the node count can
/// represent.
fn spectral_differentiation() {
    let n = 9;
    let (a, b) = (-2.0, 3.0);
    let d1 = cheb_diff1(n, a, b).unwrap();
    let d2 = cheb_diff2(n, a, b).unwrap();
    let grid = ChebGrid::new(vec![n], vec![(a, b)]).unwrap();
    let nodes = grid.nodes(0);
    let p = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x - 4.0;
    let dp = |x: f64| 5.0 * x.powi(4) - 6.0 * x * x + 1.0;
    let ddp = |x: f64| 20.0 * x.powi(3) - 12.0 * x;
    let vals = Array1::from_iter(nodes.iter().map(|&x| p(x)));
    let d1v = d1.dot(&vals);
    let d2v = d2.dot(&vals);
    let scale1 = nodes.iter().map(|&x| dp(x).abs()).fold(1.0, f64::max);
    let scale2 = nodes.iter().map(|&x| ddp(x).abs()).fold(1.0, f64::max);
    for (i, &x) in nodes.iter().enumerate() {
        assert!(
            (d1v[i] - dp(x)).abs() <= 1e-11 * scale1,
            "first derivative at node {i}: {} vs {}",
            d1v[i],
            dp(x)
        );
        assert!(
            (d2v[i] - ddp(x)).abs() <= 1e-9 * scale2,
            "second derivative at node {i}: {} vs {}",
            d2v[i],
            ddp(x)
        );
    }
}

/// The interpolation coefficients solve the dense collocation system:
/// synthesizing nodal values from the coefficient tensor with dense
/// per-axis polynomial evaluation matrices reproduces the nodal tensor.
fn dense_collocation_equivalence() {
    let sizes = vec![9, 8, 7];
    let bounds = vec![(-1.5, 1.0), (-2.0, 2.0), (0.0, 3.0)];
    let grid = ChebGrid::new(sizes.clone(), bounds.clone()).unwrap();
    let full = FullTensor::from_fn(&sizes, |ix| {
        let p = grid.point(ix);
        (-0.5 * (p[0] * p[0] + 0.3 * p[1] * p[1] + 0.7 * p[2] * p[2])).exp()
            + 0.2 * (p[0] + p[1]).sin()
    });
    let nodal = tt_from_full(&full, 1e-12).unwrap();
    let coeffs = interp_coeffs(&nodal, &grid, 1e-12).unwrap();
    let vandermondes: Vec<Array2<f64>> = (0..3)
        .map(|k| {
            let nodes = grid.nodes(k);
            let (a, b) = bounds[k];
            let nk = sizes[k];
            Array2::from_shape_fn((nk, nk), |(i, j)| {
                let xi = ((2.0 * nodes[i] - a - b) / (b - a)).clamp(-1.0, 1.0);
                (j as f64 * xi.acos()).cos()
            })
        })
        .collect();
    let synthesized = tt_apply_mode_matrices(coeffs.tensor(), &vandermondes).unwrap();
    let rel = tt_rel_diff(&synthesized, &nodal).unwrap();
    assert!(rel <= 1e-8, "dense collocation identity violated: rel {rel:.2e}");
}

/// Small dense matrix exponential by scaling and squaring with a Taylor
/// series; oracle-grade for the tiny matrices used here.
fn dense_expm(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
    let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
    let scaled = a.mapv(|v| v / f64::powi(2.0, squarings));
    let mut term = Array2::<f64>::eye(n);
    let mut sum = Array2::<f64>::eye(n);
    for k in 1..=24 {
        term = term.dot(&scaled) / k as f64;
        sum = sum + &term;
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// One diffusion half-step in tensor form equals the dense
/// boundary-annihilating heat propagator applied to the full array (d=2).
fn dense_heat_propagator_match() {
    let n = 6;
    let d_c = 0.7;
    let problem = ProblemDef {
        dim: 2,
        drift: Box::new(|x: &Array2<f64>, _| Array2::zeros(x.raw_dim())),
        drift_div_terms: Box::new(|x: &Array2<f64>, _| vec![0.0; x.nrows()]),
        rho0: Box::new(|x| gaussian_ic(0.5, x)),
        diffusion: d_c,
        domain: vec![(-1.0, 1.0); 2],
        horizon: 0.4,
    };
    let cfg = CrossConfig {
        eps_ca: 1e-10,
        ..CrossConfig::default()
    };
    let mut stepper = build_stepper(&problem, &[n, n], 5, 1e-10, &cfg, 0).unwrap();
    let before = tt_to_full(stepper.state()).unwrap();
    stepper.diffusion_half_step().unwrap();
    let after = tt_to_full(stepper.state()).unwrap();

    let tau = 0.5 * stepper.h() * d_c;
    let d2 = cheb_diff2(n, -1.0, 1.0).unwrap();
    let interior = d2.slice(s![1..n - 1, 1..n - 1]).to_owned() * tau;
    let z_int = dense_expm(&interior);
    let mut z = Array2::<f64>::zeros((n, n));
    for i in 0..n - 2 {
        for j in 0..n - 2 {
            z[[i + 1, j + 1]] = z_int[[i, j]];
        }
    }
    let x = Array2::from_shape_vec((n, n), before.data().to_vec()).unwrap();
    let expected = z.dot(&x).dot(&z.t());
    let got = Array2::from_shape_vec((n, n), after.data().to_vec()).unwrap();
    let num = (&got - &expected).iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = expected.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(
        num / den <= 1e-8,
        "diffusion half-step vs dense heat propagator: rel {:.2e}",
        num / den
    );
}

/// Pure diffusion grows the variance of a unit Gaussian by 2 D_c t.
fn heat_kernel_variance_growth() {
    let n = 64;
    let d_c = 0.5;
    let t_end = 0.5;
    let problem = ProblemDef {
        dim: 1,
        drift: Box::new(|x: &Array2<f64>, _| Array2::zeros(x.raw_dim())),
        drift_div_terms: Box::new(|x: &Array2<f64>, _| vec![0.0; x.nrows()]),
        rho0: Box::new(|x| gaussian_ic(1.0, x)),
        diffusion: d_c,
        domain: vec![(-8.0, 8.0)],
        horizon: t_end,
    };
    let cfg = CrossConfig {
        eps_ca: 1e-10,
        ..CrossConfig::default()
    };
    let (state, _) = solve(&problem, &[n], 6, 1e-10, &cfg, &mut []).unwrap();
    let full = tt_to_full(&state).unwrap();
    let grid = ChebGrid::new(vec![n], vec![(-8.0, 8.0)]).unwrap();
    let w = cc_weights(n, -8.0, 8.0).unwrap();
    let nodes = grid.nodes(0);
    let mut mass = 0.0;
    let mut second = 0.0;
    for i in 0..n {
        mass += w[i] * full.data()[i];
        second += w[i] * nodes[i] * nodes[i] * full.data()[i];
    }
    let variance = second / mass;
    let expected = 1.0 + 2.0 * d_c * t_end;
    assert!(
        (variance - expected).abs() <= 1e-6,
        "heat-kernel variance {variance:.8} vs s + 2 D_c t = {expected}"
    );
}

/// Halving the step size cuts the 1-D error by about four: the global
/// convergence slope of the split scheme stays at or above 1.8.
fn second_order_time_slope() {
    let params = OuParams::benchmark_1d();
    let drift_params = params.clone();
    let div_params = params.clone();
    let ic_variance = params.s;
    let horizon = 2.0;
    let problem = ProblemDef {
        dim: 1,
        drift: Box::new(move |x: &Array2<f64>, t| drift_params.drift(x, t)),
        drift_div_terms: Box::new(move |x, t| div_params.div_terms(x, t)),
        rho0: Box::new(move |x| gaussian_ic(ic_variance, x)),
        diffusion: params.d_c,
        domain: vec![params.bounds],
        horizon,
    };
    let n = 40;
    let cfg = CrossConfig {
        eps_ca: 1e-9,
        ..CrossConfig::default()
    };
    let grid = ChebGrid::new(vec![n], vec![params.bounds]).unwrap();
    let mut samples = Vec::new();
    for m_points in [51usize, 101, 201] {
        let (state, _) = solve(&problem, &[n], m_points, 1e-9, &cfg, &mut []).unwrap();
        let full = tt_to_full(&state).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &x) in grid.nodes(0).iter().enumerate() {
            let truth = params.analytic_1d(x, horizon);
            num += (full.data()[i] - truth).powi(2);
            den += truth * truth;
        }
        let err = (num / den).sqrt();
        let h = horizon / (m_points - 1) as f64;
        samples.push((h.ln(), err.ln()));
    }
    let mean_x = samples.iter().map(|p| p.0).sum::<f64>() / samples.len() as f64;
    let mean_y = samples.iter().map(|p| p.1).sum::<f64>() / samples.len() as f64;
    let slope = samples
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum::<f64>()
        / samples
            .iter()
            .map(|p| (p.0 - mean_x) * (p.0 - mean_x))
            .sum::<f64>();
    assert!(slope >= 1.8, "time-stepping convergence slope {slope:.3}");
}

/// The stationary covariance solves its continuous Lyapunov equation to
/// near machine precision for both coupled drift matrices.
fn lyapunov_residuals() {
    for params in [OuParams::benchmark_3d(), OuParams::benchmark_5d()] {
        let d = params.a.nrows();
        let sigma = lyapunov_solve(&params.a, params.d_c).unwrap();
        let residual = params.a.dot(&sigma) + sigma.dot(&params.a.t())
            - Array2::<f64>::eye(d) * (2.0 * params.d_c);
        let fro = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(fro <= 1e-12, "Lyapunov residual {fro:.2e} in {d} dimensions");
    }
}

/// A centrally symmetric density has vanishing shear observables.
fn symmetric_density_observables() {
    let params = DumbbellParams::default();
    // An odd node count keeps the grid exactly mirror-symmetric (with a
    // center node), which the observables' cancellation relies on.
    let n = 31;
    let sizes = vec![n; 3];
    let grid = ChebGrid::new(sizes.clone(), vec![params.bounds; 3]).unwrap();
    let full = FullTensor::from_fn(&sizes, |ix| {
        let p = grid.point(ix);
        let r2: f64 = p.iter().map(|x| x * x).sum();
        (-0.5 * r2).exp()
    });
    let rho = tt_from_full(&full, 1e-12).unwrap();
    let cfg = CrossConfig {
        eps_ca: 1e-10,
        ..CrossConfig::default()
    };
    let (psi, eta) = kramer_observables(&rho, &grid, &params, &cfg).unwrap();
    assert!(
        psi.abs() <= 1e-6 && eta.abs() <= 1e-6,
        "symmetric density gives psi {psi:.2e}, eta {eta:.2e}"
    );
}

#[test]
fn criterion_6_reruns_reproduce_the_csv_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = Command::new(env!("CARGO_BIN_EXE_solve"))
            .args(["--problem", "oup1d", "--seed", "42", "--output", name])
            .current_dir(dir.path())
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // Everything up to the final (wall-time) column must reproduce exactly.
    let strip = |name: &str| -> String {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        text.lines()
            .map(|line| line.rsplit_once(',').expect("wall column present").0)
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip("a.csv");
    let b = strip("b.csv");
    assert_eq!(a.lines().count(), 1000, "header plus M-1 rows");
    let pass = a == b;
    println!(
        "criterion 6 (determinism): {} — two seeded 1-D runs, CSV identical up to the wall-time \
         column ({} bytes compared)",
        verdict(pass),
        a.len(),
    );
    assert!(pass);
}
