//! Decoder checks against an independent step implementation and central
//! finite differences.

#![allow(clippy::needless_range_loop)]

use attnbeam::corpus::FeatureGrid;
use attnbeam::decoder::{
    batch_gradients, decode_step, forward_teacher_forced, gradients, init_state, train, ModelDims, ModelParams,
    TrainConfig, TrainingExample,
};
use attnbeam::TokenId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain nested-loop reference model. Matrices are `in x out`, row-major.
struct Oracle<'a>(&'a ModelParams);

impl Oracle<'_> {
    fn w(t: &attnbeam::decoder::Tensor, i: usize, j: usize) -> f64 {
        t.data[i * t.shape[1] + j]
    }

    fn init(&self, g: &FeatureGrid) -> (Vec<f64>, Vec<f64>) {
        let p = self.0;
        let (np, d) = (g.pixels(), g.dim());
        let mut mean = vec![0.0; d];
        for px in 0..np {
            for k in 0..d {
                mean[k] += f64::from(g.row(px)[k]);
            }
        }
        mean.iter_mut().for_each(|m| *m /= np as f64);
        let map = |w: &attnbeam::decoder::Tensor, b: &attnbeam::decoder::Tensor| -> Vec<f64> {
            (0..p.dims.hidden)
                .map(|j| {
                    let mut s = b.data[j];
                    for k in 0..d {
                        s += mean[k] * Self::w(w, k, j);
                    }
                    s.tanh()
                })
                .collect()
        };
        (map(&p.init_h, &p.init_h_bias), map(&p.init_c, &p.init_c_bias))
    }

    fn step(&self, h: &[f64], c: &[f64], prev: usize, g: &FeatureGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.0;
        let dm = p.dims;
        let mut scores = Vec::new();
        for px in 0..g.pixels() {
            let mut s = 0.0;
            for a in 0..dm.attn {
                let mut z = p.att_bias.data[a];
                for k in 0..dm.feature_dim {
                    z += f64::from(g.row(px)[k]) * Self::w(&p.att_feat, k, a);
                }
                for k in 0..dm.hidden {
                    z += h[k] * Self::w(&p.att_hidden, k, a);
                }
                s += z.max(0.0) * p.att_out.data[a];
            }
            scores.push(s);
        }
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - top).exp()).sum();
        let alpha: Vec<f64> = scores.iter().map(|s| (s - top).exp() / z).collect();
        let mut ctx = vec![0.0; dm.feature_dim];
        for px in 0..g.pixels() {
            for k in 0..dm.feature_dim {
                ctx[k] += alpha[px] * f64::from(g.row(px)[k]);
            }
        }
        let mut x: Vec<f64> = (0..dm.embed).map(|e| Self::w(&p.embedding, prev, e)).collect();
        x.extend(&ctx);
        let hd = dm.hidden;
        let gate = |gi: usize, j: usize| {
            let col = gi * hd + j;
            let mut s = p.lstm_bias.data[col];
            for (i, xi) in x.iter().enumerate() {
                s += xi * Self::w(&p.lstm_input, i, col);
            }
            for (i, hi) in h.iter().enumerate() {
                s += hi * Self::w(&p.lstm_hidden, i, col);
            }
            s
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h2 = vec![0.0; hd];
        let mut c2 = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, gg, o) = (sig(gate(0, j)), sig(gate(1, j)), gate(2, j).tanh(), sig(gate(3, j)));
            c2[j] = f * c[j] + i * gg;
            h2[j] = o * c2[j].tanh();
        }
        let logits: Vec<f64> = (0..dm.vocab)
            .map(|v| {
                let mut s = p.out_bias.data[v];
                for j in 0..hd {
                    s += h2[j] * Self::w(&p.out_proj, j, v);
                }
                s
            })
            .collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logits.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        (h2, c2, logits.iter().map(|l| l - lse).collect(), alpha)
    }
}

struct Case {
    params: ModelParams,
    example: TrainingExample,
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = ModelDims {
        vocab: rng.random_range(4..=10),
        embed: rng.random_range(1..=4),
        feature_dim: rng.random_range(1..=6),
        hidden: rng.random_range(1..=8),
        attn: rng.random_range(1..=4),
    };
    Case {
        params: ModelParams::random(dims, seed ^ 0x5eed, 0.5),
        example: random_example(&mut rng, dims),
    }
}

fn random_example(rng: &mut ChaCha8Rng, dims: ModelDims) -> TrainingExample {
    let pixels = rng.random_range(1..=4);
    let len = rng.random_range(1..=4);
    let values = (0..pixels * dims.feature_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let caption = (0..len).map(|_| rng.random_range(0..dims.vocab) as TokenId).collect();
    TrainingExample::new(FeatureGrid::new(pixels, dims.feature_dim, values).unwrap(), caption)
}

#[test]
fn step_matches_independent_oracle() {
    for seed in 0..20 {
        let Case { params, example } = random_case(seed);
        let g = &example.features;
        let oracle = Oracle(&params);
        let (mut oh, mut oc) = oracle.init(g);
        let mut state = init_state(g, &params).unwrap();
        for (a, b) in state.h.iter().zip(&oh).chain(state.c.iter().zip(&oc)) {
            assert!((a - b).abs() <= 1e-12);
        }
        for &tok in &example.inputs() {
            let (next, lp, alpha) = decode_step(&state, tok, g, &params).unwrap();
            let (h2, c2, olp, oalpha) = oracle.step(&oh, &oc, tok as usize, g);
            for (a, b) in lp.iter().zip(&olp).chain(alpha.iter().zip(&oalpha)) {
                assert!((a - b).abs() <= 1e-10, "seed {seed}: {a} vs {b}");
            }
            for (a, b) in next.h.iter().zip(&h2).chain(next.c.iter().zip(&c2)) {
                assert!((a - b).abs() <= 1e-10);
            }
            let total: f64 = lp.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() <= 1e-6);
            (state, oh, oc) = (next, h2, c2);
        }
    }
}

/// Largest `|analytic − numeric| / max(1, |analytic|)` over every entry.
fn worst_gradient_error(case: &Case, cfg: &TrainConfig) -> f64 {
    let eps = 1e-5;
    let (grad, _) = gradients(&case.example, &case.params, cfg).unwrap();
    let mut theta = case.params.clone();
    let mut worst: f64 = 0.0;
    let count = theta.tensors().len();
    for ti in 0..count {
        for e in 0..theta.tensors()[ti].data.len() {
            let orig = theta.tensors()[ti].data[e];
            theta.tensors_mut()[ti].data[e] = orig + eps;
            let up = forward_teacher_forced(&case.example, &theta, cfg).unwrap().loss;
            theta.tensors_mut()[ti].data[e] = orig - eps;
            let down = forward_teacher_forced(&case.example, &theta, cfg).unwrap().loss;
            theta.tensors_mut()[ti].data[e] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grad.tensors()[ti].data[e];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(1.0));
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let cfg = TrainConfig::default();
    for seed in 100..120 {
        let err = worst_gradient_error(&random_case(seed), &cfg);
        assert!(err <= 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn penalty_only_moves_attention_gradients() {
    let off = TrainConfig {
        lambda_ds: 0.0,
        ..TrainConfig::default()
    };
    let on = TrainConfig {
        lambda_ds: 2.5,
        ..TrainConfig::default()
    };
    for seed in 0..10 {
        let case = random_case(seed);
        let (g0, _) = gradients(&case.example, &case.params, &off).unwrap();
        let (g1, _) = gradients(&case.example, &case.params, &on).unwrap();
        // The output layer never sees alpha.
        assert_eq!(g0.out_proj, g1.out_proj);
        assert_eq!(g0.out_bias, g1.out_bias);
        assert!(worst_gradient_error(&case, &on) <= 1e-4);
    }
}

#[test]
fn duplicate_example_doubles_batch_gradient() {
    let case = random_case(3);
    let cfg = TrainConfig::default();
    let (single, l1) = batch_gradients(std::slice::from_ref(&case.example), &case.params, &cfg).unwrap();
    let pair = [case.example.clone(), case.example.clone()];
    let (double, l2) = batch_gradients(&pair, &case.params, &cfg).unwrap();
    assert!((l2 - 2.0 * l1).abs() <= 1e-12 * l1.abs().max(1.0));
    for (a, b) in single.tensors().iter().zip(double.tensors()) {
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((2.0 * x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn training_is_deterministic() {
    let dims = ModelDims {
        vocab: 10,
        embed: 3,
        feature_dim: 5,
        hidden: 4,
        attn: 3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let examples: Vec<_> = (0..3).map(|_| random_example(&mut rng, dims)).collect();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        epochs: 5,
        seed: 11,
        ..TrainConfig::default()
    };
    let a = train(&examples, ModelParams::init(dims, 1), &cfg).unwrap();
    let b = train(&examples, ModelParams::init(dims, 1), &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.trace.iter().map(|s| s.epoch).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
}

#[test]
fn zero_learning_rate_keeps_params() {
    let case = random_case(5);
    let cfg = TrainConfig {
        learning_rate: 0.0,
        epochs: 4,
        ..TrainConfig::default()
    };
    let out = train(std::slice::from_ref(&case.example), case.params.clone(), &cfg).unwrap();
    assert_eq!(out.params, case.params);
    assert!(out.trace.iter().all(|s| s.mean_loss == out.trace[0].mean_loss));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_uses_gold_inputs_only(seed in 0u64..10_000) {
        let case = random_case(seed);
        let cfg = TrainConfig { lambda_ds: 0.0, ..TrainConfig::default() };
        let base = forward_teacher_forced(&case.example, &case.params, &cfg).unwrap();

        // Stepping by hand on the gold inputs reproduces the loss exactly.
        let g = &case.example.features;
        let mut state = init_state(g, &case.params).unwrap();
        let mut nll = 0.0;
        for (&inp, &gold) in case.example.inputs().iter().zip(&case.example.targets()) {
            let (next, lp, _) = decode_step(&state, inp, g, &case.params).unwrap();
            nll -= lp[gold as usize];
            state = next;
        }
        let steps = case.example.targets().len() as f64;
        prop_assert!((base.loss - nll / steps).abs() <= 1e-12);

        // Shifting the output bias changes every argmax prediction but not
        // the attention or state trajectory.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perturbed = case.params.clone();
        perturbed.out_bias.data.iter_mut().for_each(|b| *b += rng.random_range(-3.0..3.0));
        let other = forward_teacher_forced(&case.example, &perturbed, &cfg).unwrap();
        prop_assert_eq!(&base.alpha, &other.alpha);
    }

    #[test]
    fn penalty_never_lowers_loss(seed in 0u64..10_000, lambda in 0.0f64..5.0) {
        let case = random_case(seed);
        let with = TrainConfig { lambda_ds: lambda, ..TrainConfig::default() };
        let without = TrainConfig { lambda_ds: 0.0, ..TrainConfig::default() };
        let a = forward_teacher_forced(&case.example, &case.params, &with).unwrap();
        let b = forward_teacher_forced(&case.example, &case.params, &without).unwrap();
        prop_assert!(a.penalty >= 0.0);
        prop_assert!(a.loss >= b.loss);
    }

    #[test]
    fn attention_rows_are_distributions(seed in 0u64..10_000) {
        let case = random_case(seed);
        let out = forward_teacher_forced(&case.example, &case.params, &TrainConfig::default()).unwrap();
        for row in &out.alpha.rows {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            prop_assert!(row.iter().all(|a| (0.0..=1.0).contains(a)));
        }
        for lp in &out.log_probs {
            prop_assert!((lp.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }
}
