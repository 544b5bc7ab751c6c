use super::*;
use crate::forecaster::ForecastSample;
use crate::rng::derive_rng;
use rand::RngExt;

fn example_1d(id: &str, x: f64, label: u8) -> TrainExample {
    TrainExample {
        example_id: id.to_string(),
        features: vec![x],
        label,
    }
}

#[test]
fn advantages_mean_only_worked_example() {
    let advantages = compute_advantages(&[-0.2, -0.4, -0.6, -0.8], AdvantageNorm::MeanOnly, 1e-8);
    let expected = [0.3, 0.1, -0.1, -0.3];
    for (a, e) in advantages.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12, "{a} vs {e}");
    }
}

#[test]
fn advantages_mean_std_worked_example() {
    // popstd of {−0.2,−0.4,−0.6,−0.8} is √0.05 ≈ 0.2236.
    let advantages = compute_advantages(&[-0.2, -0.4, -0.6, -0.8], AdvantageNorm::MeanStd, 1e-8);
    let expected = [1.342, 0.447, -0.447, -1.342];
    for (a, e) in advantages.iter().zip(expected) {
        assert!((a - e).abs() < 1e-3, "{a} vs {e}");
    }
}

#[test]
fn equal_rewards_give_zero_advantages_in_both_modes() {
    for norm in [AdvantageNorm::MeanOnly, AdvantageNorm::MeanStd] {
        let advantages = compute_advantages(&[-0.5, -0.5, -0.5, -0.5], norm, 1e-8);
        assert!(advantages.iter().all(|a| a.abs() < 1e-12), "{advantages:?}");
    }
}

#[test]
fn advantages_sum_to_zero() {
    let mut rng = derive_rng(21, &["adv"]);
    for _ in 0..200 {
        let g = rng.random_range(2..=8usize);
        let rewards: Vec<f64> = (0..g).map(|_| -rng.random::<f64>() * 3.0).collect();
        for norm in [AdvantageNorm::MeanOnly, AdvantageNorm::MeanStd] {
            let sum: f64 = compute_advantages(&rewards, norm, 1e-8).iter().sum();
            assert!(sum.abs() < 1e-9, "{norm:?}: sum {sum}");
        }
    }
}

#[test]
fn zero_advantages_leave_policy_unchanged() {
    let policy = LogisticPolicy::new(vec![0.4], -0.2, 0.7).unwrap();
    let example = example_1d("e0", 1.0, 1);
    let mut rng = derive_rng(1, &["r"]);
    let mut rollout = rollout_group(&policy, &example, 4, AdvantageNorm::MeanStd, 1e-8, &mut rng);
    rollout.advantages = vec![0.0; 4];
    let updated = policy_gradient_step(&policy, &[(&example, &rollout)], 0.5).unwrap();
    assert_eq!(updated, policy);
}

#[test]
fn opposite_advantages_cancel_exactly() {
    let policy = LogisticPolicy::new(vec![0.4], -0.2, 0.7).unwrap();
    let example = example_1d("e0", 1.0, 1);
    let mut rng = derive_rng(2, &["r"]);
    let rollout = rollout_group(
        &policy,
        &example,
        2,
        AdvantageNorm::MeanOnly,
        1e-8,
        &mut rng,
    );
    let mirrored = GroupRollout {
        example_id: rollout.example_id.clone(),
        samples: rollout.samples.clone(),
        rewards: rollout.rewards.clone(),
        advantages: rollout.advantages.iter().map(|a| -a).collect(),
    };
    let updated =
        policy_gradient_step(&policy, &[(&example, &rollout), (&example, &mirrored)], 0.5).unwrap();
    assert_eq!(updated, policy);
}

#[test]
fn missing_noise_record_is_an_error() {
    let policy = LogisticPolicy::new(vec![0.0], 0.0, 1.0).unwrap();
    let example = example_1d("e0", 1.0, 1);
    let rollout = GroupRollout {
        example_id: "e0".into(),
        samples: vec![ForecastSample {
            probability: 0.5,
            trace: String::new(),
            noise_record: None,
        }],
        rewards: vec![-0.7],
        advantages: vec![0.1],
    };
    let err = policy_gradient_step(&policy, &[(&example, &rollout)], 0.1).unwrap_err();
    assert!(matches!(err, TrainError::MissingNoiseRecord));
}

#[test]
fn non_finite_noise_rejected_with_diagnostics() {
    let policy = LogisticPolicy::new(vec![0.0], 0.0, 1.0).unwrap();
    let example = example_1d("e0", 1.0, 1);
    let rollout = GroupRollout {
        example_id: "e0".into(),
        samples: vec![ForecastSample {
            probability: 0.5,
            trace: String::new(),
            noise_record: Some(f64::NAN),
        }],
        rewards: vec![-0.7],
        advantages: vec![0.1],
    };
    let err = policy_gradient_step(&policy, &[(&example, &rollout)], 0.1).unwrap_err();
    assert!(matches!(err, TrainError::NonFiniteGradient { .. }));
}

#[test]
fn score_function_gradient_matches_hand_computation() {
    // Single item: weight · (z − μ)/σ² · (x, 1).
    let policy = LogisticPolicy::new(vec![0.5], 0.25, 2.0).unwrap();
    let features = [2.0];
    // μ = 0.5·2 + 0.25 = 1.25; z = 2.25 → (z−μ)/σ² = 1.0/4.0 = 0.25.
    let (gw, gb) = score_function_gradient(&policy, [(&features[..], 2.25, 3.0)]);
    assert!((gw[0] - 3.0 * 0.25 * 2.0).abs() < 1e-12);
    assert!((gb - 3.0 * 0.25).abs() < 1e-12);
}

#[test]
fn zero_learning_rate_freezes_policy() {
    let initial = LogisticPolicy::new(vec![0.3], -0.1, 1.0).unwrap();
    let examples = vec![example_1d("e0", 1.0, 1), example_1d("e1", 0.5, 0)];
    let config = TrainConfig {
        learning_rate: 0.0,
        steps: 20,
        batch_size: 4,
        seed: 5,
        ..TrainConfig::default()
    };
    let outcome = train(&initial, &examples, &config, None).unwrap();
    assert_eq!(outcome.policy, initial);
    assert_eq!(outcome.trace.len(), 20);
    assert!(outcome.diverged_at.is_none());
}

#[test]
fn same_seed_identical_reward_traces() {
    let initial = LogisticPolicy::new(vec![0.0], 0.0, 1.0).unwrap();
    let examples = vec![example_1d("e0", 1.0, 1), example_1d("e1", -1.0, 0)];
    let config = TrainConfig {
        steps: 30,
        batch_size: 8,
        learning_rate: 0.05,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = train(&initial, &examples, &config, None).unwrap();
    let b = train(&initial, &examples, &config, None).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.policy, b.policy);
}

#[test]
fn group_size_one_rejected() {
    let config = TrainConfig {
        group_size: 1,
        ..TrainConfig::default()
    };
    assert!(config.validate().is_err());
}

#[test]
fn best_checkpoint_follows_heldout_reward() {
    // Separable 1-feature task: x = +1 for positives, −1 for negatives.
    let initial = LogisticPolicy::new(vec![0.0], 0.0, 1.0).unwrap();
    let examples: Vec<TrainExample> = (0..40)
        .map(|i| {
            example_1d(
                &format!("e{i}"),
                if i % 2 == 0 { 1.0 } else { -1.0 },
                (i % 2 == 0) as u8,
            )
        })
        .collect();
    let config = TrainConfig {
        steps: 500,
        batch_size: 16,
        learning_rate: 0.2,
        eval_every: 25,
        seed: 4,
        ..TrainConfig::default()
    };
    let heldout = examples.clone();
    let mut hook = |_step: usize, policy: &LogisticPolicy| {
        heldout
            .iter()
            .map(|e| {
                let p = crate::forecaster::mean_forecast(policy, &e.features);
                crate::scoring::log_score(p, e.label, crate::scoring::DEFAULT_EPS)
            })
            .sum::<f64>()
            / heldout.len() as f64
    };
    let outcome = train(&initial, &examples, &config, Some(&mut hook)).unwrap();
    let best = outcome.best_heldout_reward.unwrap();
    // Better than the untrained policy's ~ −ln 2, and the trace improves.
    assert!(best > -std::f64::consts::LN_2, "best heldout {best}");
    assert!(outcome.best_step > 0);

    // Monotone-improvement smoke: the 100-step moving average of training
    // reward at step 500 exceeds the average over the first 100 steps.
    let early: f64 = outcome.trace[..100]
        .iter()
        .map(|r| r.mean_reward)
        .sum::<f64>()
        / 100.0;
    let late: f64 = outcome.trace[400..]
        .iter()
        .map(|r| r.mean_reward)
        .sum::<f64>()
        / 100.0;
    assert!(late > early, "late {late} <= early {early}");
}

#[test]
fn divergence_aborts_with_last_good_checkpoint() {
    // Gigantic learning rate on a huge feature overflows μ within a few
    // steps; training must stop and keep a finite policy.
    let initial = LogisticPolicy::new(vec![0.0, 0.0], 0.0, 1.0).unwrap();
    let examples = vec![
        TrainExample {
            example_id: "e0".into(),
            features: vec![1e200, 0.0],
            label: 1,
        },
        TrainExample {
            example_id: "e1".into(),
            features: vec![0.0, 1e200],
            label: 0,
        },
    ];
    let config = TrainConfig {
        steps: 50,
        batch_size: 4,
        learning_rate: 1e150,
        seed: 2,
        ..TrainConfig::default()
    };
    let outcome = train(&initial, &examples, &config, None).unwrap();
    assert!(outcome.diverged_at.is_some());
    assert!(outcome.policy.weights.iter().all(|w| w.is_finite()));
    assert!(outcome.trace.len() < 50);
}

#[test]
fn empty_examples_rejected() {
    let initial = LogisticPolicy::new(vec![0.0], 0.0, 1.0).unwrap();
    assert!(matches!(
        train(&initial, &[], &TrainConfig::default(), None),
        Err(TrainError::NoExamples)
    ));
}

#[test]
fn feature_dimension_mismatch_rejected() {
    let initial = LogisticPolicy::new(vec![0.0], 0.0, 1.0).unwrap();
    let examples = vec![TrainExample {
        example_id: "e0".into(),
        features: vec![1.0, 2.0],
        label: 1,
    }];
    assert!(train(&initial, &examples, &TrainConfig::default(), None).is_err());
}

#[test]
fn monte_carlo_gradient_matches_finite_differences_smoke() {
    // Small-sample version of the estimator identity; the acceptance suite
    // runs the full 10⁶-sample check against quadrature.
    let sigma = 0.8;
    let w = 0.3;
    let x = 1.0;
    let y = 1u8;
    let policy = LogisticPolicy::new(vec![w], 0.0, sigma).unwrap();
    let features = [x];

    let n = 200_000usize;
    let mut rng = derive_rng(31, &["mc-smoke"]);
    let normal = rand_distr::Normal::new(w * x, sigma).unwrap();
    let items: Vec<(&[f64], f64, f64)> = (0..n)
        .map(|_| {
            let z: f64 = rand_distr::Distribution::sample(&normal, &mut rng);
            let reward = crate::scoring::log_score(
                crate::forecaster::sigmoid(z),
                y,
                crate::scoring::DEFAULT_EPS,
            );
            (&features[..], z, reward)
        })
        .collect();
    let (gw, _) = score_function_gradient(&policy, items);

    // Quadrature oracle for E[r](w) and central finite difference.
    let expected_reward = |w_val: f64| {
        let mu = w_val * x;
        let steps = 20_001;
        let lo = mu - 10.0 * sigma;
        let hi = mu + 10.0 * sigma;
        let h = (hi - lo) / (steps - 1) as f64;
        let integrand = |z: f64| {
            let density = (-0.5 * ((z - mu) / sigma).powi(2)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            density
                * crate::scoring::log_score(
                    crate::forecaster::sigmoid(z),
                    y,
                    crate::scoring::DEFAULT_EPS,
                )
        };
        let mut sum = 0.0;
        for i in 0..steps {
            let z = lo + i as f64 * h;
            let weight = if i == 0 || i == steps - 1 { 0.5 } else { 1.0 };
            sum += weight * integrand(z);
        }
        sum * h
    };
    let fd = 1e-3;
    let reference = (expected_reward(w + fd) - expected_reward(w - fd)) / (2.0 * fd);
    let rel_err = (gw[0] - reference).abs() / reference.abs();
    assert!(
        rel_err < 0.10,
        "MC {} vs FD {reference}, rel err {rel_err}",
        gw[0]
    );
}
