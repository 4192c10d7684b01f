use amp_lasso::instance::{read_bundle, write_bundle};
use amp_lasso::*;
use proptest::prelude::*;

fn params() -> ModelParams {
    ModelParams::new(0.64, 0.2, DiscretePrior::three_point(0.128).unwrap()).unwrap()
}

#[test]
fn residual_scale_tracks_the_fixed_point() {
    let p = params();
    let tau_star = se_fixed_point(&p, 2.0).unwrap();
    for policy in [ThresholdPolicy::rms(2.0).unwrap(), ThresholdPolicy::median(2.0).unwrap()] {
        let inst = gen_gaussian_instance(2000, &p, 17).unwrap();
        let out = amp_run(&inst, &policy, 200, 1e-9).unwrap();
        let tau_hat = out.final_state.tau_hat;
        assert!((tau_hat - tau_star).abs() < 0.05 * tau_star, "{tau_hat} vs {tau_star}");
    }
}

#[test]
fn effective_lambda_matches_calibration() {
    let p = params();
    let predicted = calibrate_lambda(2.0, &p).unwrap();
    let mut sum = 0.0;
    for seed in 0..3 {
        let inst = gen_gaussian_instance(2000, &p, seed).unwrap();
        let out = amp_run(&inst, &ThresholdPolicy::rms(2.0).unwrap(), 200, 1e-9).unwrap();
        let s = &out.final_state;
        let direct = effective_lambda(&out.x_hat, s.theta, inst.m).unwrap();
        let via_rms = effective_lambda_rms(&out.x_hat, &out.r_hat, 2.0).unwrap();
        assert!((direct - via_rms).abs() < 1e-3 * direct);
        sum += direct;
    }
    let mean = sum / 3.0;
    assert!((mean - predicted).abs() < 0.05 * predicted, "{mean} vs {predicted}");
}

#[test]
fn onsager_coefficient_is_support_fraction() {
    let inst = gen_gaussian_instance(500, &params(), 4).unwrap();
    let out = amp_run(&inst, &ThresholdPolicy::rms(1.5).unwrap(), 20, 0.0).unwrap();
    let nnz = out.x_hat.iter().filter(|v| **v != 0.0).count();
    assert_eq!(out.final_state.b, nnz as f64 / inst.m as f64);
}

#[test]
fn lambda_above_the_max_correlation_gives_zero() {
    let inst = gen_gaussian_instance(300, &params(), 8).unwrap();
    let aty = inst.a.tmul_vec(&inst.y);
    let lambda = 1.01 * aty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let out = amp_run(&inst, &ThresholdPolicy::target_lambda(lambda).unwrap(), 100, 1e-12).unwrap();
    assert!(out.x_hat.iter().all(|v| *v == 0.0));
    assert_eq!(lasso_kkt_gap(&inst, &out.x_hat, lambda).unwrap(), 0.0);
}

#[test]
fn runs_are_reproducible() {
    let p = params();
    let run = || {
        let inst = gen_rademacher_instance(400, &p, 123).unwrap();
        amp_run(&inst, &ThresholdPolicy::rms(2.0).unwrap(), 30, 0.0).unwrap().x_hat
    };
    assert_eq!(run(), run());
}

#[test]
fn ist_and_amp_agree_at_a_common_lambda() {
    let inst = gen_gaussian_instance(200, &params(), 6).unwrap();
    let policy = ThresholdPolicy::target_lambda(1.5).unwrap();
    let amp = amp_run(&inst, &policy, 3000, 1e-12).unwrap();
    let ist = ist_run(&inst, &policy, 0.95, 20_000, 1e-13).unwrap();
    let diff = amp.x_hat.iter().zip(&ist.x_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bundles_round_trip(n in 1usize..40, delta in 0.1f64..1.5, sigma2 in 0.0f64..1.0, seed: u64) {
        let p = ModelParams::new(delta, sigma2, DiscretePrior::three_point(0.3).unwrap()).unwrap();
        prop_assume!(p.measurements(n) > 0);
        let inst = gen_gaussian_instance(n, &p, seed).unwrap();
        let mut bytes = Vec::new();
        write_bundle(&inst, &mut bytes).unwrap();
        prop_assert_eq!(read_bundle(bytes.as_slice()).unwrap(), inst);
    }
}
