use evtobs_core::dynsys::{MapKind, SystemSpec};
use evtobs_core::observables::{
    phi, Metric, ObsNoiseSpec, ObservableKind, ObservableSpec, TargetSpec,
};
use evtobs_core::SimRng;
use proptest::prelude::*;

fn plane() -> evtobs_core::dynsys::System {
    SystemSpec::new(MapKind::CantorProduct2d).compile().unwrap()
}

// distance from p to the line through q0 with unit direction d
fn line_distance(p: [f64; 2], a: f64, b: f64, c: f64) -> f64 {
    let n2 = a * a + b * b;
    let q0 = [-a * c / n2, -b * c / n2];
    let len = n2.sqrt();
    let d = [-b / len, a / len];
    let v = [p[0] - q0[0], p[1] - q0[1]];
    let t = v[0] * d[0] + v[1] * d[1];
    ((v[0] - t * d[0]).powi(2) + (v[1] - t * d[1]).powi(2)).sqrt()
}

fn circle_distance_sampled(p: [f64; 2], c: [f64; 2], r: f64) -> f64 {
    (0..20_000)
        .map(|i| {
            let th = i as f64 / 20_000.0 * std::f64::consts::TAU;
            ((p[0] - c[0] - r * th.cos()).powi(2) + (p[1] - c[1] - r * th.sin()).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn additive_noise_is_unbiased() {
    let sys = plane();
    let eta = 0.05;
    let obs = ObservableSpec::new(ObservableKind::Mean2d)
        .with_noise(ObsNoiseSpec::AdditiveUniform { eta });
    let mut rng = SimRng::new(9, 0);
    let n = 100_000;
    let mean = (0..n)
        .map(|_| obs.evaluate(&sys, &[0.2, 0.6], &mut rng).unwrap()[0])
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.4).abs() < 3.0 * eta / (n as f64).sqrt(), "{mean}");
}

#[test]
fn pole_gives_infinite_value_and_nan_phi() {
    let sys = plane();
    let obs = ObservableSpec::new(ObservableKind::Reciprocal { index: 0 });
    let t = TargetSpec::value(&[2.0]).resolve(&obs, &sys).unwrap();
    let mut rng = SimRng::new(0, 0);
    assert_eq!(obs.evaluate(&sys, &[0.0, 0.5], &mut rng).unwrap()[0], f64::INFINITY);
    assert!(phi(&obs, &sys, &[0.0, 0.5], &t, &mut rng).unwrap().is_nan());
    assert_eq!(phi(&obs, &sys, &[0.5, 0.5], &t, &mut rng).unwrap(), f64::INFINITY);
}

#[test]
fn power_at_zero_is_zero() {
    let sys = SystemSpec::linear_circle(2).compile().unwrap();
    let obs = ObservableSpec::new(ObservableKind::Power { a: 0.5 });
    assert_eq!(obs.evaluate(&sys, &[0.0], &mut SimRng::new(0, 0)).unwrap(), vec![0.0]);
}

#[test]
fn output_dimensions() {
    let x = ObservableSpec::new(ObservableKind::Coordinate { index: 0 });
    let list = ObservableSpec::new(ObservableKind::VectorList {
        parts: vec![x.clone(), ObservableSpec::new(ObservableKind::Identity)],
    });
    assert_eq!(list.output_dim(3), 4);
    assert_eq!(ObservableSpec::delay(x, 5).output_dim(3), 5);
    let bad = ObservableSpec::new(ObservableKind::PiecewiseAffine {
        branches: vec![evtobs_core::observables::AffineBranch {
            lo: 0.0,
            hi: 1.0,
            slope: 0.0,
            intercept: 1.0,
        }],
    });
    assert!(bad.validate(1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exceedance_is_the_ball(x in 0.0f64..1.0, y in 0.0f64..1.0, f0 in 0.0f64..1.0, u in 0.0f64..12.0) {
        let sys = plane();
        let obs = ObservableSpec::new(ObservableKind::Mean2d);
        let t = TargetSpec::value(&[f0]).resolve(&obs, &sys).unwrap();
        let p = phi(&obs, &sys, &[x, y], &t, &mut SimRng::new(0, 0)).unwrap();
        let dist = (0.5 * (x + y) - f0).abs();
        prop_assume!((dist - (-u).exp()).abs() > 1e-12 * (1.0 + dist));
        prop_assert_eq!(p > u, dist < (-u).exp());
    }

    #[test]
    fn phi_decreases_with_distance(x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, f0 in 0.0f64..1.0) {
        let sys = SystemSpec::linear_circle(3).compile().unwrap();
        let obs = ObservableSpec::new(ObservableKind::Identity);
        let t = TargetSpec::value(&[f0]).resolve(&obs, &sys).unwrap();
        let mut rng = SimRng::new(0, 0);
        let (p1, p2) = (phi(&obs, &sys, &[x1], &t, &mut rng).unwrap(), phi(&obs, &sys, &[x2], &t, &mut rng).unwrap());
        if (x1 - f0).abs() < (x2 - f0).abs() {
            prop_assert!(p1 >= p2);
        }
    }

    #[test]
    fn delay_one_is_the_base(x in -20.0f64..20.0, y in -20.0f64..20.0, z in 0.0f64..40.0, idx in 0usize..3) {
        let sys = SystemSpec::lorenz().compile().unwrap();
        let base = ObservableSpec::new(ObservableKind::Coordinate { index: idx });
        let delay = ObservableSpec::delay(base.clone(), 1);
        let mut rng = SimRng::new(0, 0);
        prop_assert_eq!(base.evaluate(&sys, &[x, y, z], &mut rng).unwrap(), delay.evaluate(&sys, &[x, y, z], &mut rng).unwrap());
    }

    #[test]
    fn line_neighbourhood(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0, u in 0.0f64..6.0) {
        prop_assume!(a.abs() + b.abs() > 0.1);
        let sys = plane();
        let obs = ObservableSpec::new(ObservableKind::DistanceToLine { a, b, c });
        let t = TargetSpec::value(&[0.0]).resolve(&obs, &sys).unwrap();
        let p = phi(&obs, &sys, &[x, y], &t, &mut SimRng::new(0, 0)).unwrap();
        let d = line_distance([x, y], a, b, c);
        prop_assume!((d - (-u).exp()).abs() > 1e-9);
        prop_assert_eq!(p > u, d < (-u).exp());
    }

    #[test]
    fn circle_neighbourhood(cx in 0.0f64..1.0, cy in 0.0f64..1.0, r in 0.0f64..0.7, x in 0.0f64..1.0, y in 0.0f64..1.0, u in 0.0f64..5.0) {
        let sys = plane();
        let obs = ObservableSpec::new(ObservableKind::DistanceToCircle { cx, cy, radius: r });
        let t = TargetSpec::value(&[0.0]).with_metric(Metric::Chebyshev).resolve(&obs, &sys).unwrap();
        let p = phi(&obs, &sys, &[x, y], &t, &mut SimRng::new(0, 0)).unwrap();
        let d = circle_distance_sampled([x, y], [cx, cy], r);
        // the sampled circle overestimates by at most r * (pi / 20000)^2 / 2
        prop_assume!((d - (-u).exp()).abs() > 1e-6);
        prop_assert_eq!(p > u, d < (-u).exp());
    }

    #[test]
    fn metrics_agree_on_scalars(v in -3.0f64..3.0, f0 in -3.0f64..3.0) {
        prop_assert_eq!(Metric::Euclidean.dist(&[v], &[f0]), Metric::Chebyshev.dist(&[v], &[f0]));
    }
}
