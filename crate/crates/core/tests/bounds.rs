mod common;

use phaseprior::bounds::{
    bias_interval, estimate_bilipschitz, lemma1_bound, lemma2_bound, lemma3_bound, LatentSampler,
    SignalSampler,
};
use phaseprior::measurement::{make_probes, MeasurementOperator};
use phaseprior::numerics::real_stack;
use proptest::prelude::*;

#[test]
fn trained_generator_is_an_isometry_on_latents() {
    let data = common::small_digits(6, 3);
    let latents = LatentSampler {
        model: &data.model,
        n_train: data.n_train,
    };
    let est = estimate_bilipschitz(
        |z| Ok(real_stack(&data.model.generate(z)?)),
        |rng| latents.pair(rng),
        500,
        4,
        &latents.domain(),
    )
    .unwrap();
    assert!((est.upper - 1.0).abs() <= 1e-8 && (est.lower - 1.0).abs() <= 1e-8);
}

#[test]
fn measurement_estimates_grow_monotonically() {
    let data = common::small_digits(6, 3);
    let op = MeasurementOperator::new(make_probes(16, 16, 5).unwrap()).unwrap();
    let signals = SignalSampler {
        model: &data.model,
        n_train: data.n_train,
        perturbation: 0.1,
    };
    let mut last: Option<(f64, f64)> = None;
    for pairs in [10, 100, 1000] {
        let est = estimate_bilipschitz(
            |f| op.forward(f),
            |rng| signals.pair(rng),
            pairs,
            6,
            &signals.domain(),
        )
        .unwrap();
        if let Some((u, l)) = last {
            assert!(est.upper >= u && est.lower <= l);
        }
        last = Some((est.upper, est.lower));
        assert!(est.domain.contains("gauss"));
    }
}

proptest! {
    #[test]
    fn bounds_scale_linearly(
        alpha in 1.0f64..10.0, beta in 1.0f64..10.0, gamma in 1.0f64..10.0,
        lambda in 0.0f64..10.0, bias in 0.0f64..5.0, eps in 0.0f64..5.0, c in 0.01f64..100.0,
    ) {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        prop_assert!(close(lemma1_bound(alpha, c * eps).unwrap(), c * lemma1_bound(alpha, eps).unwrap()));
        prop_assert!(close(
            lemma2_bound(alpha, beta, gamma, c * bias, c * eps).unwrap(),
            c * lemma2_bound(alpha, beta, gamma, bias, eps).unwrap()
        ));
        prop_assert!(close(
            lemma3_bound(lambda, alpha, c * bias, c * eps).unwrap(),
            c * lemma3_bound(lambda, alpha, bias, eps).unwrap()
        ));
    }

    #[test]
    fn bias_interval_is_ordered(alpha in 1.0f64..10.0, rho in 0.0f64..10.0, sigma in 0.0f64..10.0) {
        let (lo, hi) = bias_interval(alpha, rho, sigma).unwrap();
        prop_assert!(0.0 <= lo && lo <= hi);
        if rho <= sigma {
            prop_assert_eq!(lo, 0.0);
        }
    }
}
