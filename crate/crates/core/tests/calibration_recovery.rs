mod common;

use nalgebra::Matrix4;
use proptest::prelude::*;

use tetrapol::{
    calibrate, calibration_quartet, expected_counts, reconstruct, simulate_counts,
    CalibrationRecord, PolarimeterModel, PpbsSpec, Readings, StokesVector,
};

fn noisy_records(model: &PolarimeterModel, total: f64, seed: u64) -> Vec<CalibrationRecord> {
    calibration_quartet()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let c = simulate_counts(s, model, total, seed * 4 + k as u64).unwrap();
            CalibrationRecord::new(*s, c).unwrap()
        })
        .collect()
}

#[test]
fn exact_round_trip_recovers_random_states() {
    let model = PolarimeterModel::ideal();
    let cal = common::exact_calibration(&model);
    let mut rng = common::rng(3);
    for _ in 0..100 {
        let s = common::random_pure(&mut rng);
        let rec = reconstruct(expected_counts(&s, &model, 1e5).unwrap(), &cal).unwrap();
        let err = rec.reduced.sub(&s.reduced().unwrap()).norm();
        assert!(err < 1e-10, "{err}");
        assert!((rec.raw.s_m - 1e5).abs() < 1e-6);
    }
}

#[test]
fn calibration_absorbs_nonideal_devices() {
    let mut model = PolarimeterModel::with_ppbs(PpbsSpec::lossless(0.72).unwrap().with_phases(0.2, -0.1));
    model.efficiencies = [0.6, 0.75, 0.9, 0.5];
    model.dark_rate = [0.0; 4];
    let cal = common::exact_calibration(&model);
    let mut rng = common::rng(4);
    for _ in 0..50 {
        let s = common::random_mixed(&mut rng);
        let rec = reconstruct(expected_counts(&s, &model, 1e4).unwrap(), &cal).unwrap();
        assert!(rec.reduced.sub(&s.reduced().unwrap()).norm() < 1e-10);
    }
}

#[test]
fn calibration_is_scale_equivariant() {
    let model = PolarimeterModel::ideal();
    let recs = noisy_records(&model, 1e5, 1);
    let base = calibrate(&recs).unwrap();
    let k = 7.5;
    let scaled: Vec<_> = recs
        .iter()
        .map(|r| CalibrationRecord::new(r.prepared, r.readings.scaled(k)).unwrap())
        .collect();
    let cal = calibrate(&scaled).unwrap();
    let rel = |a: &Matrix4<f64>, b: &Matrix4<f64>| (a - b).norm() / b.norm();
    assert!(rel(&cal.instrument.b, &(base.instrument.b * k)) < 1e-12);
    assert!(rel(&cal.instrument.b_inv, &(base.instrument.b_inv / k)) < 1e-12);
    // B⁻¹ scales as 1/k and its relative error as 1/√k.
    assert!(rel(&cal.instrument.sigma_inv, &(base.instrument.sigma_inv / k.powf(1.5))) < 1e-12);
}

#[test]
fn record_order_does_not_matter() {
    let model = PolarimeterModel::ideal();
    let recs = noisy_records(&model, 1e5, 2);
    let base = calibrate(&recs).unwrap();
    let permuted = vec![recs[2], recs[0], recs[3], recs[1]];
    let cal = calibrate(&permuted).unwrap();
    let rel = |a: &Matrix4<f64>, b: &Matrix4<f64>| (a - b).norm() / b.norm();
    assert!(rel(&cal.instrument.b, &base.instrument.b) < 1e-12);
    assert!(rel(&cal.instrument.sigma_inv, &base.instrument.sigma_inv) < 1e-12);
}

#[test]
fn sigma_inv_matches_monte_carlo() {
    let model = PolarimeterModel::ideal();
    let total = 1e5;
    let trials = 2000;
    let inverses: Vec<Matrix4<f64>> = (0..trials)
        .map(|t| calibrate(&noisy_records(&model, total, 1000 + t)).unwrap().instrument.b_inv)
        .collect();
    let exact: Vec<_> = calibration_quartet()
        .iter()
        .map(|s| CalibrationRecord::new(*s, expected_counts(s, &model, total).unwrap()).unwrap())
        .collect();
    let analytic = calibrate(&exact).unwrap().instrument.sigma_inv;
    for a in 0..4 {
        for c in 0..4 {
            let xs: Vec<f64> = inverses.iter().map(|m| m[(a, c)]).collect();
            let (_, sd) = common::mean_std(&xs);
            let ratio = sd / analytic[(a, c)];
            assert!((ratio - 1.0).abs() < 0.15, "({a},{c}): mc {sd} vs {}", analytic[(a, c)]);
        }
    }
}

#[test]
fn reconstruction_sigma_matches_monte_carlo() {
    let model = PolarimeterModel::ideal();
    let cal = common::exact_calibration(&model);
    let states = [
        StokesVector::new(1.0, 1.0, 0.0, 0.0),
        StokesVector::new(1.0, 0.0, 0.6, -0.8),
        StokesVector::new(1.0, 0.2, -0.3, 0.1),
    ];
    for (k, s) in states.iter().enumerate() {
        let mean_counts = expected_counts(s, &model, 1e4).unwrap();
        let analytic = reconstruct(mean_counts, &cal).unwrap();
        let recs: Vec<_> = (0..10_000)
            .map(|t| reconstruct(simulate_counts(s, &model, 1e4, (k as u64) << 20 | t).unwrap(), &cal).unwrap())
            .collect();
        for i in 0..4 {
            let xs: Vec<f64> = recs.iter().map(|r| r.raw.to_array()[i]).collect();
            let (_, sd) = common::mean_std(&xs);
            assert!((sd / analytic.sigma[i] - 1.0).abs() < 0.1, "state {k} S{i}");
        }
        let rs = analytic.reduced_sigma();
        for i in 0..3 {
            let xs: Vec<f64> = recs.iter().map(|r| r.reduced.to_array()[i]).collect();
            let (_, sd) = common::mean_std(&xs);
            assert!((sd / rs[i] - 1.0).abs() < 0.1, "state {k} r{i}: {sd} vs {}", rs[i]);
        }
    }
}

#[test]
fn unphysical_noise_is_flagged_not_altered() {
    let cal = common::exact_calibration(&PolarimeterModel::ideal());
    let rec = reconstruct(Readings([1000.0, 0.0, 0.0, 0.0]), &cal).unwrap();
    assert!(rec.reduced.norm() > 1.0);
    assert!(!rec.physical);
    assert!((rec.projected.norm() - 1.0).abs() < 1e-12);
    let dir = rec.reduced.to_unit_sphere().unwrap();
    assert!(rec.projected.sub(&dir).norm() < 1e-12);
}

proptest! {
    #[test]
    fn noisy_reconstruction_is_within_five_sigma(seed in 0u64..10_000) {
        let model = PolarimeterModel::ideal();
        let cal = common::exact_calibration(&model);
        let mut rng = common::rng(seed);
        let s = common::random_pure(&mut rng);
        let rec = reconstruct(simulate_counts(&s, &model, 1e5, seed).unwrap(), &cal).unwrap();
        let truth = s.reduced().unwrap().to_array();
        let got = rec.reduced.to_array();
        let sig = rec.reduced_sigma();
        for i in 0..3 {
            prop_assert!((got[i] - truth[i]).abs() < 5.0 * sig[i] + 1e-12);
        }
    }
}
