use evtobs_core::dynsys::{MapKind, NoiseSpec, SystemSpec};
use evtobs_core::evt::TargetChoice;
use evtobs_core::extremal::{
    estimate_theta, orbit_data_for_points, q_hat, ternary_periodic_point, theta_analytic,
    theta_analytic_open, theta_hat, ExceedanceSeries, ThetaRun,
};
use evtobs_core::observables::{preimage_data, ObservableKind, ObservableSpec, Preimage, TargetSpec};
use evtobs_core::{Error, SimRng};
use proptest::prelude::*;

// direct reading of the definition on the boolean sequence
fn q_brute(hits: &[bool], k: usize) -> f64 {
    let mut num = 0;
    let mut den = 0;
    for i in 0..hits.len() {
        if !hits[i] || i + k + 1 >= hits.len() {
            continue;
        }
        den += 1;
        if (i + 1..=i + k).all(|j| !hits[j]) && hits[i + k + 1] {
            num += 1;
        }
    }
    num as f64 / den as f64
}

fn random_hits(seed: u64, len: usize, rate: f64, stickiness: f64) -> Vec<bool> {
    let mut rng = SimRng::new(seed, 0);
    let mut prev = false;
    (0..len)
        .map(|_| {
            let p = if prev { stickiness } else { rate };
            prev = rng.uniform() < p;
            prev
        })
        .collect()
}

#[test]
fn too_few_exceedances_is_an_error() {
    let mut v = vec![false; 10_000];
    for i in 0..99 {
        v[i * 50] = true;
    }
    let es = ExceedanceSeries::from_bools(&v);
    assert!(matches!(q_hat(&es, 0), Err(Error::TooFewExceedances { got: 99, need: 100 })));
}

#[test]
fn circle_fixed_points() {
    // the identity at a fixed point of x -> m x mod 1 clusters with q_0 = 1/m
    for m in 3..=6u32 {
        let sys = SystemSpec::linear_circle(m).compile().unwrap();
        let pre = [Preimage { w: 1.0 / (m - 1) as f64, slope: 1.0, density: 1.0 }];
        let data = orbit_data_for_points(&sys, &pre, 8).unwrap();
        let th = theta_analytic(&data).unwrap();
        assert!((th.theta - (1.0 - 1.0 / m as f64)).abs() < 1e-12, "m = {m}: {th:?}");
    }
    // doubling map: 1/3 has period 2, 0.3716 no period up to 8
    let sys = SystemSpec::linear_circle(2).compile().unwrap();
    let th = |w| {
        let data = orbit_data_for_points(&sys, &[Preimage { w, slope: 1.0, density: 1.0 }], 8).unwrap();
        theta_analytic(&data).unwrap().theta
    };
    assert!((th(1.0 / 3.0) - 0.75).abs() < 1e-12);
    assert_eq!(th(0.3716), 1.0);
}

#[test]
fn ternary_open_system() {
    let sys = SystemSpec::ternary_cantor().compile().unwrap();
    for p in 1..=5 {
        let w = ternary_periodic_point(p);
        let data = orbit_data_for_points(&sys, &[Preimage { w, slope: 1.0, density: 1.0 }], 10).unwrap();
        assert_eq!(data.points[0].return_order, Some(p as usize - 1));
        let th = theta_analytic_open(&data).unwrap();
        assert!((th.theta - (1.0 - 0.5f64.powi(p as i32))).abs() < 1e-12);
    }
}

#[test]
fn hemmer_preimages() {
    let sys = SystemSpec::new(MapKind::Hemmer).compile().unwrap();
    let pre = preimage_data(&ObservableSpec::hemmer_two_slope(), &sys, -0.5).unwrap();
    assert_eq!(pre.len(), 2);
    assert!(pre.iter().any(|p| (p.w + 0.5).abs() < 1e-12 && (p.density - 0.75).abs() < 1e-12));
}

#[test]
fn noise_destroys_clustering() {
    let obs = ObservableSpec::new(ObservableKind::Identity);
    let target = TargetChoice::from(TargetSpec::value(&[0.5]));
    let run = ThetaRun::new(10_000_000, 0.999, 2);
    let clean = SystemSpec::linear_circle(3).compile().unwrap();
    let th = estimate_theta(&clean, &obs, &target, &run, 1).unwrap();
    assert!((th.theta - 2.0 / 3.0).abs() < 0.02, "{}", th.theta);
    let noisy = |eta| {
        SystemSpec::linear_circle(3)
            .with_noise(NoiseSpec::AdditiveUniformMod1 { eta })
            .compile()
            .unwrap()
    };
    for eta in [0.05, 0.1] {
        let th = estimate_theta(&noisy(eta), &obs, &target, &run, 1).unwrap();
        assert!((th.theta - 1.0).abs() < 0.02, "eta = {eta}: {}", th.theta);
    }
    // q_0 is of order r / eta, so small noise needs a smaller ball
    let sys = noisy(0.01);
    let coarse = estimate_theta(&sys, &obs, &target, &run, 1).unwrap().theta;
    let fine_run = ThetaRun::new(10_000_000, 0.9999, 2);
    let fine = estimate_theta(&sys, &obs, &target, &fine_run, 1).unwrap().theta;
    assert!(coarse > 0.85 && fine > coarse && fine > 0.97, "{coarse} {fine}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_hat_matches_definition(seed in any::<u64>(), rate in 0.01f64..0.2, stick in 0.0f64..0.9, k in 0usize..6) {
        let v = random_hits(seed, 5_000, rate, stick);
        let es = ExceedanceSeries::from_bools(&v);
        prop_assume!(es.n_hits() >= 100);
        prop_assert!((q_hat(&es, k).unwrap() - q_brute(&v, k)).abs() < 1e-15);
    }

    #[test]
    fn coefficients_are_a_sub_probability(seed in any::<u64>(), rate in 0.01f64..0.3, stick in 0.0f64..0.95, big_k in 1usize..12) {
        let v = random_hits(seed, 5_000, rate, stick);
        let es = ExceedanceSeries::from_bools(&v);
        prop_assume!(es.n_hits() >= 100);
        let c = theta_hat(&es, big_k).unwrap();
        prop_assert_eq!(c.q.len(), big_k + 1);
        prop_assert!(c.q.iter().all(|q| (0.0..=1.0).contains(q)));
        prop_assert!(c.q.iter().sum::<f64>() <= 1.0 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&c.theta));
        prop_assert_eq!(c.theta, c.theta_raw.clamp(0.0, 1.0));
    }

    #[test]
    fn monotone_transforms_keep_theta(seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let mut rng = SimRng::new(seed, 1);
        let mut x = 0.0;
        // AR(1) process: clustered high values
        let phi: Vec<f64> = (0..20_000).map(|_| { x = 0.8 * x + rng.uniform() - 0.5; x }).collect();
        let moved: Vec<f64> = phi.iter().map(|v| (a * v + b).exp()).collect();
        let e1 = ExceedanceSeries::from_phi(&phi, 0.99).unwrap();
        let e2 = ExceedanceSeries::from_phi(&moved, 0.99).unwrap();
        prop_assert_eq!(&e1.hits, &e2.hits);
        prop_assert_eq!(theta_hat(&e1, 5).unwrap().theta, theta_hat(&e2, 5).unwrap().theta);
    }
}
