use amp_lasso::state_evolution::{boundary_alpha, initial_tau2, lambda_curve_csv, se_run_thresholds};
use amp_lasso::*;

fn reference_model() -> ModelParams {
    ModelParams::new(0.64, 0.2, DiscretePrior::three_point(0.128).unwrap()).unwrap()
}

#[test]
fn map_is_nondecreasing_and_concave() {
    let priors = [
        DiscretePrior::three_point(0.128).unwrap(),
        DiscretePrior::three_point(0.4).unwrap(),
        DiscretePrior::new(vec![0.0, 3.0], vec![0.9, 0.1]).unwrap(),
    ];
    for prior in priors {
        let p = ModelParams::new(0.64, 0.2, prior).unwrap();
        let f = |t2: f64| se_map(t2, 2.0 * t2.sqrt(), &p).unwrap();
        let h = 0.01;
        let grid: Vec<f64> = (0..=279).map(|k| 0.21 + k as f64 * h).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (f(w[0]), f(w[1]), f(w[2]));
            assert!(b >= a - 1e-14);
            assert!(a + c - 2.0 * b <= 1e-12, "convexity at {}", w[1]);
        }
    }
}

#[test]
fn iteration_and_bisection_agree() {
    let p = reference_model();
    let tr = se_run(&p, 2.0, 10_000, 1e-15).unwrap();
    let iter = tr.tau2_sequence.last().copied().unwrap();
    let ts = se_fixed_point(&p, 2.0).unwrap();

    // plain bisection on g(τ²) = F(τ², 2τ) − τ²
    let g = |t2: f64| se_map(t2, 2.0 * t2.sqrt(), &p).unwrap() - t2;
    let (mut lo, mut hi) = (0.2, initial_tau2(&p));
    assert!(g(lo) > 0.0 && g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((iter - lo).abs() < 1e-10);
    assert!((ts * ts - lo).abs() < 1e-10);
}

#[test]
fn large_alpha_kills_noise() {
    let p = ModelParams::new(0.5, 0.3, DiscretePrior::point_mass(0.0)).unwrap();
    let ts = se_fixed_point(&p, 12.0).unwrap();
    assert!((ts * ts - 0.3).abs() < 1e-12);
}

#[test]
fn fixed_thresholds_reproduce_adaptive_run() {
    let p = reference_model();
    let tr = se_run(&p, 2.0, 20, 0.0).unwrap();
    let t2 = se_run_thresholds(&p, &tr.theta_sequence, 20).unwrap();
    for (a, b) in t2.iter().zip(&tr.tau2_sequence) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn calibration_is_consistent() {
    let p = reference_model();
    for &alpha in &[1.2, 2.0, 4.0] {
        let c = calibrate(alpha, &p).unwrap();
        let keep = p.prior.st_keep_prob(c.tau_star, c.theta_star).unwrap();
        assert!((c.lambda - c.theta_star * (1.0 - keep / 0.64)).abs() <= 1e-12 * c.theta_star);
        let back = alpha_of_lambda(c.lambda, &p).unwrap();
        assert!((back - alpha).abs() < 1e-6, "{alpha} -> {} -> {back}", c.lambda);
    }
    let amin = alpha_min(0.64).unwrap();
    assert!(calibrate_lambda(amin + 0.01, &p).unwrap() < calibrate_lambda(amin + 1.0, &p).unwrap());
}

#[test]
fn alpha_of_lambda_grows_and_brackets_small_lambda() {
    let p = reference_model();
    let grid = [1e-3, 0.05, 0.25, 0.5, 1.0, 2.0, 5.0, 20.0];
    let alphas: Vec<f64> = grid.iter().map(|&l| alpha_of_lambda(l, &p).unwrap()).collect();
    assert!(alphas.windows(2).all(|w| w[1] > w[0]));
    assert!(alphas[0] > alpha_min(0.64).unwrap());
}

#[test]
fn point_mass_calibration_at_unit_delta() {
    // δ = 1, large α: λ ≈ ατ*[1 − 2Φ(−α)] for any prior concentrated near 0
    let p = ModelParams::new(1.0, 0.5, DiscretePrior::new(vec![0.0, 1e-9], vec![0.5, 0.5]).unwrap()).unwrap();
    let alpha = 4.0;
    let c = calibrate(alpha, &p).unwrap();
    let expected = alpha * c.tau_star * (1.0 - 2.0 * gauss::cdf(-alpha));
    assert!((c.lambda - expected).abs() < 1e-8);
    assert!(c.lambda > 0.0);
}

#[test]
fn lasso_risk_identity_and_u_shape() {
    let p = reference_model();
    let lambdas: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let risks: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let r = lasso_risk(l, &p).unwrap();
            assert!((r.mse - r.mse_scalar).abs() < 1e-10);
            r.mse
        })
        .collect();
    let k = (0..risks.len()).min_by(|&i, &j| risks[i].total_cmp(&risks[j])).unwrap();
    assert!(k > 0 && k < risks.len() - 1, "minimum at the grid edge");
    assert!(risks[0] > risks[k] && risks[risks.len() - 1] > risks[k]);
    let csv = lambda_curve_csv(&p, &lambdas).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.starts_with("lambda,predicted_mse,tau_star,theta_star,alpha\n"));
}

#[test]
fn lasso_risk_rejects_noiseless_and_null_priors() {
    let noiseless = ModelParams::new(0.64, 0.0, DiscretePrior::three_point(0.1).unwrap()).unwrap();
    assert!(lasso_risk(1.0, &noiseless).is_err());
    let null = ModelParams::new(0.64, 0.2, DiscretePrior::point_mass(0.0)).unwrap();
    assert!(lasso_risk(1.0, &null).is_err());
    assert!(lasso_risk(0.0, &reference_model()).is_err());
}

#[test]
fn boundary_characterizations_agree() {
    for k in 0..50 {
        let alpha = 0.2 + k as f64 * 0.2;
        let (d, r) = parametric_boundary(alpha).unwrap();
        assert!((rho_c(d).unwrap() - r).abs() < 1e-6, "alpha {alpha}");
    }
    let rc = rho_c(0.2).unwrap();
    let a = minimax_soft_threshold(rc * 0.2).unwrap().alpha_sharp;
    let (d, r) = parametric_boundary(a).unwrap();
    assert!((d - 0.2).abs() < 1e-6 && (r - rc).abs() < 1e-6);
    assert!((boundary_alpha(0.2).unwrap() - a).abs() < 1e-5);
}

#[test]
fn rho_c_increases_with_delta() {
    let v: Vec<f64> = (1..=9).map(|k| rho_c(k as f64 / 10.0).unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn phase_point_invariant() {
    for &(d, r) in &[(0.3, 0.1), (0.3, 0.5), (0.7, 0.4), (0.7, 0.9)] {
        let pp = PhasePoint::new(d, r).unwrap();
        assert_eq!(pp.m_star.is_finite(), pp.rho < pp.rho_c);
    }
}
