//! Temporary training-dynamics probe. Not part of the suite.

use std::time::Instant;

use tokenaudit_core::audit::{ModelStack, Predictor};
use tokenaudit_core::data::{gen_synthetic, AuditSample, SyntheticSpec};
use tokenaudit_core::features::{extract_features, FeatureConfig};
use tokenaudit_core::grpo::{
    mean_greedy_reward, mean_nll, train_base, train_grpo, BaseConfig, GrpoConfig,
};
use tokenaudit_core::hashing::{fnv1a, mix_seed};
use tokenaudit_core::policy::forward;
use tokenaudit_core::router::{route, router_training_split, train_router, RouterConfig};
use tokenaudit_core::store::apply_delta;

#[test]
#[ignore]
fn watch_regression_dynamics() {
    let ds = gen_synthetic(&SyntheticSpec {
        domain_count: 1,
        samples_per_domain: 500,
        seed: 31,
        noise_scale: 0.0,
    });
    let (train, held) = ds.samples.split_at(400);
    let cfg = FeatureConfig { hash_width: 256 };
    for epochs in [50, 100, 200, 400, 800] {
        let params = train_base(
            train,
            &BaseConfig {
                epochs,
                hidden_dim: 16,
                seed: 3,
                ..BaseConfig::default()
            },
            &cfg,
        )
        .unwrap();
        let mut errors: Vec<f64> = Vec::new();
        let mut sigma_sum = 0.0;
        for s in held {
            let dist = forward(&params, &extract_features(s, &cfg)).unwrap();
            let pred = dist.mu.exp().round().max(1.0);
            errors.push((pred - s.reasoning_tokens as f64).abs() / s.reasoning_tokens as f64);
            sigma_sum += dist.sigma;
        }
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "epochs {:4}  train_nll {:+.4}  held median rel err {:.4}  mean sigma {:.5}",
            epochs,
            mean_nll(&params, train, &cfg).unwrap(),
            errors[errors.len() / 2],
            sigma_sum / held.len() as f64
        );
    }
}

#[test]
#[ignore]
fn watch_content_gap() {
    use tokenaudit_core::baselines::{train_len_mlp, BaselineConfig, BaselineMode};
    use tokenaudit_core::data::{gen_content_driven, ContentSpec};

    let samples = gen_content_driven(&ContentSpec::default());
    let (train, held) = samples.split_at(960);
    let features = FeatureConfig::default();
    for epochs in [200usize, 400, 800] {
        let policy = train_base(
            train,
            &BaseConfig {
                epochs,
                seed: 11,
                ..BaseConfig::default()
            },
            &features,
        )
        .unwrap();
        let mlp = train_len_mlp(
            train,
            BaselineMode::Regression,
            None,
            &BaselineConfig {
                epochs,
                seed: 11,
                ..BaselineConfig::default()
            },
        )
        .unwrap();
        let policy_counts: Vec<(u64, u64)> = held
            .iter()
            .map(|s| {
                let dist = forward(&policy, &extract_features(s, &features)).unwrap();
                (dist.mu.exp().round().max(1.0) as u64, s.reasoning_tokens)
            })
            .collect();
        let mlp_counts: Vec<(u64, u64)> = held
            .iter()
            .map(|s| (mlp.predict_count(s).unwrap(), s.reasoning_tokens))
            .collect();
        println!(
            "epochs {epochs}: policy pass1 {:.4}, mlp pass1 {:.4}",
            pass1(&policy_counts, 0.33),
            pass1(&mlp_counts, 0.33)
        );
    }
}

fn pass1(counts: &[(u64, u64)], delta: f64) -> f64 {
    let hits = counts
        .iter()
        .filter(|(p, y)| (*p as f64 - *y as f64).abs() / (*y as f64) < delta)
        .count();
    hits as f64 / counts.len() as f64
}

#[test]
#[ignore]
fn watch_full_pipeline() {
    let t0 = Instant::now();
    let spec = SyntheticSpec {
        domain_count: 4,
        samples_per_domain: 1000,
        seed: 7,
        noise_scale: 0.15,
    };
    let corpus = gen_synthetic(&spec);
    let features = FeatureConfig::default();
    let per = spec.samples_per_domain;
    let train_of = |d: usize| &corpus.samples[d * per..d * per + 800];
    let held_of = |d: usize| &corpus.samples[d * per + 800..(d + 1) * per];
    let domains: Vec<String> = corpus.rules.iter().map(|r| r.domain.clone()).collect();

    let base_epochs: usize = std::env::var("PROBE_BASE_EPOCHS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(300);
    let outer_iters: usize = std::env::var("PROBE_OUTER")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(60);
    let grpo_lr: f64 = std::env::var("PROBE_LR")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0.01);

    let base = train_base(
        train_of(0),
        &BaseConfig {
            epochs: base_epochs,
            seed: spec.seed,
            ..BaseConfig::default()
        },
        &features,
    )
    .unwrap();
    println!("base trained in {:?}", t0.elapsed());
    for (d, name) in domains.iter().enumerate() {
        println!(
            "  base reward on held {name}: {:.4}",
            mean_greedy_reward(&base, held_of(d), &features).unwrap()
        );
    }

    let grpo_cfg = |seed: u64| GrpoConfig {
        outer_iters,
        learning_rate: grpo_lr,
        seed,
        ..GrpoConfig::default()
    };
    let mut adapters = Vec::new();
    for (d, name) in domains.iter().enumerate() {
        let t = Instant::now();
        let outcome = train_grpo(
            &base,
            train_of(d),
            name,
            &grpo_cfg(mix_seed(spec.seed, fnv1a(name.as_bytes()), 1)),
            &features,
        )
        .unwrap();
        let adapted = apply_delta(&base, &outcome.delta).unwrap();
        let reward_before = mean_greedy_reward(&base, held_of(d), &features).unwrap();
        let reward_after = mean_greedy_reward(&adapted, held_of(d), &features).unwrap();
        let counts: Vec<(u64, u64)> = held_of(d)
            .iter()
            .map(|s| {
                let dist = forward(&adapted, &extract_features(s, &features)).unwrap();
                (dist.mu.exp().round().max(1.0) as u64, s.reasoning_tokens)
            })
            .collect();
        println!(
            "  adapter {name}: reward {reward_before:.4} -> {reward_after:.4} (lift {:+.4}), pass1 {:.4}, last iter reward {:.4}, {:?}",
            reward_after - reward_before,
            pass1(&counts, 0.33),
            outcome.iterations.last().unwrap().mean_reward,
            t.elapsed()
        );
        adapters.push(outcome.delta);
    }

    // Merged adapter over all domains.
    let t = Instant::now();
    let all_train: Vec<AuditSample> = (0..4).flat_map(|d| train_of(d).iter().cloned()).collect();
    let merged = train_grpo(
        &base,
        &all_train,
        "merged",
        &grpo_cfg(mix_seed(spec.seed, fnv1a(b"merged"), 1)),
        &features,
    )
    .unwrap();
    let merged_params = apply_delta(&base, &merged.delta).unwrap();
    println!("merged adapter trained in {:?}", t.elapsed());

    // Router.
    let pairs = router_training_split(&all_train, 0.1, spec.seed).unwrap();
    let router = train_router(&pairs, &RouterConfig::default()).unwrap();
    let mut routing_hits = 0usize;
    let mut routing_total = 0usize;
    for d in 0..4 {
        for s in held_of(d) {
            let (idx, _) = route(&router, &s.prompt);
            if router.labels[idx] == domains[d] {
                routing_hits += 1;
            }
            routing_total += 1;
        }
    }
    println!(
        "router held accuracy {:.4}",
        routing_hits as f64 / routing_total as f64
    );

    let stack = ModelStack::new(base.clone(), adapters, router, features).unwrap();
    for (d, name) in domains.iter().enumerate() {
        let routed: Vec<(u64, u64)> = held_of(d)
            .iter()
            .map(|s| (stack.predict(s).unwrap().count, s.reasoning_tokens))
            .collect();
        let merged_counts: Vec<(u64, u64)> = held_of(d)
            .iter()
            .map(|s| {
                let dist = forward(&merged_params, &extract_features(s, &features)).unwrap();
                (dist.mu.exp().round().max(1.0) as u64, s.reasoning_tokens)
            })
            .collect();
        println!(
            "  pass1 {name}: routed {:.4} vs merged {:.4}",
            pass1(&routed, 0.33),
            pass1(&merged_counts, 0.33)
        );
    }
    let all_held: Vec<(u64, u64)> = (0..4)
        .flat_map(|d| held_of(d).iter())
        .map(|s| (stack.predict(s).unwrap().count, s.reasoning_tokens))
        .collect();
    println!("overall routed pass1: {:.4}", pass1(&all_held, 0.33));
    println!("total pipeline time {:?}", t0.elapsed());
}
