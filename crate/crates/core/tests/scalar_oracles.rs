use amp_lasso::rng::{stream_rng, Stream};
use amp_lasso::scalar_risk::eta;
use amp_lasso::{minimax_soft_threshold, mmse_estimate, mmse_risk, risk_m, soft_threshold, DiscretePrior};
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

// Reference values from mpmath at 30 digits, by direct quadrature over z.
const POSTERIOR_MEAN_EPS01_SIGMA03_Y1: f64 = 0.934_940_690_747_485_8;
const MMSE_EPS01_SIGMA03: f64 = 0.023_998_481_388_422_634;
const MMSE_EPS01_SIGMA1: f64 = 0.090_429_253_841_981_07;
const ST_MSE_EPS0128_TAU07_THETA14: f64 = 0.112_763_523_505_915_2;

#[test]
fn posterior_mean_matches_reference() {
    let p = DiscretePrior::three_point(0.1).unwrap();
    let v = mmse_estimate(&p, 0.3, 1.0).unwrap();
    assert_relative_eq!(v, POSTERIOR_MEAN_EPS01_SIGMA03_Y1, max_relative = 1e-13);
}

#[test]
fn mmse_risk_matches_reference() {
    let p = DiscretePrior::three_point(0.1).unwrap();
    assert!((mmse_risk(&p, 0.3).unwrap() - MMSE_EPS01_SIGMA03).abs() < 1e-9);
    assert!((mmse_risk(&p, 1.0).unwrap() - MMSE_EPS01_SIGMA1).abs() < 1e-9);
}

#[test]
fn mmse_limits() {
    let p = DiscretePrior::three_point(0.1).unwrap();
    assert!((mmse_risk(&p, 100.0).unwrap() - 0.1).abs() < 1e-3);
    assert!(mmse_risk(&p, 0.01).unwrap() <= 1e-3);
    assert!(mmse_risk(&p, 0.0).is_err());
}

#[test]
fn mmse_below_soft_threshold_risk() {
    let p = DiscretePrior::three_point(0.1).unwrap();
    let mm = minimax_soft_threshold(0.1).unwrap();
    for k in -8..=8 {
        let sigma = 10f64.powf(k as f64 / 4.0);
        let mmse = mmse_risk(&p, sigma).unwrap();
        let st = p.st_mse(sigma, mm.alpha_sharp * sigma).unwrap();
        assert!(mmse <= st + 1e-12, "sigma {sigma}: {mmse} > {st}");
        assert!(mmse <= sigma * sigma * mm.m_sharp + 1e-12);
    }
}

#[test]
fn st_mse_matches_quadrature_reference() {
    let p = DiscretePrior::three_point(0.128).unwrap();
    assert_relative_eq!(p.st_mse(0.7, 1.4).unwrap(), ST_MSE_EPS0128_TAU07_THETA14, max_relative = 1e-12);
}

#[test]
fn st_mse_and_keep_prob_agree_with_sampling() {
    let p = DiscretePrior::new(vec![-2.0, 0.0, 0.5], vec![0.1, 0.7, 0.2]).unwrap();
    let (tau, theta) = (0.8, 1.1);
    let n = 1_000_000;
    let mut rng = stream_rng(11, Stream::Other(0));
    let x = p.sample_with(n, &mut rng);
    let (mut s, mut s2, mut k) = (0.0, 0.0, 0.0);
    for &x0 in &x {
        let z: f64 = rng.sample(StandardNormal);
        let e = eta(x0 + tau * z, theta);
        let sq = (e - x0) * (e - x0);
        s += sq;
        s2 += sq * sq;
        if e != 0.0 {
            k += 1.0;
        }
    }
    let nf = n as f64;
    let mean = s / nf;
    let se = ((s2 / nf - mean * mean) / nf).sqrt();
    assert!((mean - p.st_mse(tau, theta).unwrap()).abs() < 4.0 * se);
    let keep = k / nf;
    let keep_se = (keep * (1.0 - keep) / nf).sqrt();
    assert!((keep - p.st_keep_prob(tau, theta).unwrap()).abs() < 4.0 * keep_se);
}

#[test]
fn minimax_sparse_limit() {
    let eps: f64 = 1e-6;
    let r = minimax_soft_threshold(eps).unwrap();
    let l = (1.0 / eps).ln();
    assert!((r.m_sharp / (2.0 * eps * l) - 1.0).abs() < 0.25);
    assert!((r.alpha_sharp / (2.0 * l).sqrt() - 1.0).abs() < 0.25);
}

#[test]
fn risk_is_unimodal_in_alpha() {
    for &eps in &[0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9] {
        let grid: Vec<f64> = (0..=800).map(|k| k as f64 * 0.01).collect();
        let vals: Vec<f64> = grid.iter().map(|&a| risk_m(eps, a)).collect();
        let argmin = (0..vals.len()).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
        assert!(vals[..=argmin].windows(2).all(|w| w[1] <= w[0] + 1e-15), "eps {eps}");
        assert!(vals[argmin..].windows(2).all(|w| w[1] >= w[0] - 1e-15), "eps {eps}");
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let h = 1e-7;
    for k in -40..=40 {
        let y = k as f64 * 0.1 + 0.0123;
        let theta = 1.0;
        if (y.abs() - theta).abs() <= 10.0 * h {
            continue;
        }
        let fd = (eta(y + h, theta) - eta(y - h, theta)) / (2.0 * h);
        assert!((fd - amp_lasso::soft_threshold_derivative(y, theta)).abs() < 1e-6);
    }
}

proptest! {
    #[test]
    fn soft_threshold_is_odd_shrinking_and_lipschitz(
        y in -50.0f64..50.0, y2 in -50.0f64..50.0, theta in 0.0f64..10.0
    ) {
        let a = soft_threshold(y, theta).unwrap();
        prop_assert_eq!(soft_threshold(-y, theta).unwrap(), -a);
        prop_assert!(a.abs() <= y.abs());
        let b = soft_threshold(y2, theta).unwrap();
        prop_assert!((a - b).abs() <= (y - y2).abs() + 1e-12);
    }

    #[test]
    fn keep_prob_is_a_probability_and_decreasing(
        eps in 0.01f64..0.99, tau in 0.05f64..5.0, t1 in 0.0f64..6.0, dt in 0.0f64..3.0
    ) {
        let p = DiscretePrior::three_point(eps).unwrap();
        let k1 = p.st_keep_prob(tau, t1).unwrap();
        let k2 = p.st_keep_prob(tau, t1 + dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&k1));
        prop_assert!(k2 <= k1 + 1e-15);
    }

    #[test]
    fn st_mse_bounded_by_risk_m(eps in 0.01f64..0.99, alpha in 0.0f64..5.0) {
        // the three-point prior with unit atoms is dominated by the worst case
        let p = DiscretePrior::three_point(eps).unwrap();
        let v = p.st_mse(1.0, alpha).unwrap();
        prop_assert!(v <= risk_m(eps, alpha) + 1e-12);
    }
}
