//! Forward pass, teacher-forced loss and backpropagation through time.

use serde::{Deserialize, Serialize};

use super::tensor::{add_assign, log_softmax, sigmoid, softmax};
use super::{DecoderError, ModelDims, ModelParams};
use crate::corpus::{FeatureGrid, WordMap, END_ID, START_ID};
use crate::TokenId;

/// Recurrent state carried between decode steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub t: usize,
}

/// Soft attention over the pixels for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// One weight per pixel, summing to one.
    pub alpha: Vec<f64>,
    /// Attention-weighted sum of pixel features.
    pub context: Vec<f64>,
}

/// Attention rows for a whole sequence, `steps x pixels`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttentionWeights {
    pub rows: Vec<Vec<f64>>,
}

impl AttentionWeights {
    /// Sum over time of each pixel's weight.
    pub fn pixel_totals(&self) -> Vec<f64> {
        let pixels = self.rows.first().map_or(0, Vec::len);
        let mut totals = vec![0.0; pixels];
        for row in &self.rows {
            add_assign(&mut totals, row);
        }
        totals
    }

    /// `Σ_p (1 − Σ_t α[t][p])²`
    pub fn doubly_stochastic_penalty(&self) -> f64 {
        self.pixel_totals()
            .iter()
            .map(|s| (1.0 - s) * (1.0 - s))
            .sum()
    }
}

/// Hyper-parameters of teacher-forced training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the doubly stochastic attention penalty.
    pub lambda_ds: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Absolute per-entry gradient clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_ds: 1.0,
            learning_rate: 4e-4,
            epochs: 100,
            seed: 0,
            grad_clip: Some(5.0),
        }
    }
}

/// One (features, caption) pair ready for teacher forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub features: FeatureGrid,
    /// Caption ids without `<start>`/`<end>`.
    pub caption: Vec<TokenId>,
}

impl TrainingExample {
    pub fn new(features: FeatureGrid, caption: Vec<TokenId>) -> Self {
        Self { features, caption }
    }

    /// One example per reference of every record, in order.
    pub fn from_records(records: &[crate::corpus::CaptionRecord], wm: &WordMap) -> Vec<Self> {
        records
            .iter()
            .flat_map(|rec| {
                rec.refs.iter().map(|r| Self {
                    features: rec.features.clone(),
                    caption: r.iter().map(|t| wm.id_or_unk(t)).collect(),
                })
            })
            .collect()
    }

    /// Decoder inputs: `<start>` followed by the caption.
    pub fn inputs(&self) -> Vec<TokenId> {
        std::iter::once(START_ID)
            .chain(self.caption.iter().copied())
            .collect()
    }

    /// Prediction targets: the caption followed by `<end>`.
    pub fn targets(&self) -> Vec<TokenId> {
        self.caption
            .iter()
            .copied()
            .chain(std::iter::once(END_ID))
            .collect()
    }
}

/// Result of a teacher-forced forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    /// `cross_entropy + lambda_ds * penalty`
    pub loss: f64,
    /// Mean negative log-likelihood per target token.
    pub cross_entropy: f64,
    pub penalty: f64,
    pub alpha: AttentionWeights,
    /// Log-probabilities over the vocabulary at every step.
    pub log_probs: Vec<Vec<f64>>,
}

/// Features widened once, with the pixel count.
struct Grid<'a> {
    values: &'a [f64],
    pixels: usize,
    dim: usize,
}

impl Grid<'_> {
    fn row(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }
}

fn check_features(features: &FeatureGrid, dims: &ModelDims) -> Result<(), DecoderError> {
    if features.dim() != dims.feature_dim {
        return Err(DecoderError::DimMismatch {
            what: "feature dim",
            expected: dims.feature_dim,
            actual: features.dim(),
        });
    }
    Ok(())
}

fn check_token(token: TokenId, dims: &ModelDims) -> Result<(), DecoderError> {
    if token as usize >= dims.vocab {
        return Err(DecoderError::TokenOutOfRange {
            token,
            vocab: dims.vocab,
        });
    }
    Ok(())
}

fn check_hidden(state: &DecoderState, dims: &ModelDims) -> Result<(), DecoderError> {
    for v in [&state.h, &state.c] {
        if v.len() != dims.hidden {
            return Err(DecoderError::DimMismatch {
                what: "hidden state",
                expected: dims.hidden,
                actual: v.len(),
            });
        }
    }
    Ok(())
}

fn mean_feature(grid: &Grid) -> Vec<f64> {
    let mut mean = vec![0.0; grid.dim];
    for p in 0..grid.pixels {
        add_assign(&mut mean, grid.row(p));
    }
    let n = grid.pixels as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn init_from_mean(mean: &[f64], params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let mut h = params.init_h_bias.data.clone();
    params.init_h.accumulate_vec_mat(mean, &mut h);
    let mut c = params.init_c_bias.data.clone();
    params.init_c.accumulate_vec_mat(mean, &mut c);
    (
        h.into_iter().map(f64::tanh).collect(),
        c.into_iter().map(f64::tanh).collect(),
    )
}

/// Initial state from the mean pixel feature: `h = tanh(mean · W_h0 + b_h0)`,
/// and likewise for `c`.
pub fn init_state(features: &FeatureGrid, params: &ModelParams) -> Result<DecoderState, DecoderError> {
    check_features(features, &params.dims)?;
    let values = features.to_f64();
    let grid = Grid {
        values: &values,
        pixels: features.pixels(),
        dim: features.dim(),
    };
    let (h, c) = init_from_mean(&mean_feature(&grid), params);
    Ok(DecoderState { h, c, t: 0 })
}

/// Pre-activations of the attention hidden layer, `pixels x attn`.
fn attention_hidden(grid: &Grid, h: &[f64], params: &ModelParams) -> Vec<f64> {
    let mut shared = params.att_bias.data.clone();
    params.att_hidden.accumulate_vec_mat(h, &mut shared);
    let mut z = Vec::with_capacity(grid.pixels * shared.len());
    for p in 0..grid.pixels {
        let mut zp = shared.clone();
        params.att_feat.accumulate_vec_mat(grid.row(p), &mut zp);
        z.extend(zp);
    }
    z
}

fn attend_grid(grid: &Grid, h: &[f64], params: &ModelParams) -> (Vec<f64>, Attention) {
    let a = params.dims.attn;
    let z = attention_hidden(grid, h, params);
    let scores: Vec<f64> = z
        .chunks_exact(a)
        .map(|zp| {
            zp.iter()
                .zip(&params.att_out.data)
                .map(|(v, w)| v.max(0.0) * w)
                .sum()
        })
        .collect();
    let alpha = softmax(&scores);
    let mut context = vec![0.0; grid.dim];
    for (p, &w) in alpha.iter().enumerate() {
        for (c, f) in context.iter_mut().zip(grid.row(p)) {
            *c += w * f;
        }
    }
    (z, Attention { alpha, context })
}

/// Scores every pixel with `ReLU(f_p·W_f + h·W_h + b_a)·w_a`, normalises with
/// a softmax and returns the weights with the weighted feature sum.
pub fn attend(features: &FeatureGrid, h: &[f64], params: &ModelParams) -> Result<Attention, DecoderError> {
    check_features(features, &params.dims)?;
    if h.len() != params.dims.hidden {
        return Err(DecoderError::DimMismatch {
            what: "hidden state",
            expected: params.dims.hidden,
            actual: h.len(),
        });
    }
    let values = features.to_f64();
    let grid = Grid {
        values: &values,
        pixels: features.pixels(),
        dim: features.dim(),
    };
    Ok(attend_grid(&grid, h, params).1)
}

/// Everything one step computes, kept for the backward pass.
struct StepCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    z: Vec<f64>,
    attention: Attention,
    x: Vec<f64>,
    /// Activated gates i, f, g, o, packed.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    log_probs: Vec<f64>,
}

fn step_forward(grid: &Grid, h_prev: &[f64], c_prev: &[f64], token: TokenId, params: &ModelParams) -> StepCache {
    let hd = params.dims.hidden;
    let (z, attention) = attend_grid(grid, h_prev, params);

    let mut x = params.embedding.row(token as usize).to_vec();
    x.extend_from_slice(&attention.context);

    let mut gates = params.lstm_bias.data.clone();
    params.lstm_input.accumulate_vec_mat(&x, &mut gates);
    params.lstm_hidden.accumulate_vec_mat(h_prev, &mut gates);
    for (k, g) in gates.iter_mut().enumerate() {
        *g = if (2 * hd..3 * hd).contains(&k) {
            g.tanh()
        } else {
            sigmoid(*g)
        };
    }
    let (i, rest) = gates.split_at(hd);
    let (f, rest) = rest.split_at(hd);
    let (g, o) = rest.split_at(hd);
    let c: Vec<f64> = (0..hd).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();

    let mut logits = params.out_bias.data.clone();
    params.out_proj.accumulate_vec_mat(&h, &mut logits);
    let log_probs = log_softmax(&logits);

    StepCache {
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        z,
        attention,
        x,
        gates,
        tanh_c,
        h,
        c,
        log_probs,
    }
}

/// Advances the decoder by one token: attention with the current hidden
/// state, an LSTM update on `[embedding(prev), context]` and a log-softmax
/// over the vocabulary from the new hidden state.
pub fn decode_step(
    state: &DecoderState,
    prev_token: TokenId,
    features: &FeatureGrid,
    params: &ModelParams,
) -> Result<(DecoderState, Vec<f64>, Vec<f64>), DecoderError> {
    check_features(features, &params.dims)?;
    check_token(prev_token, &params.dims)?;
    check_hidden(state, &params.dims)?;
    let values = features.to_f64();
    let grid = Grid {
        values: &values,
        pixels: features.pixels(),
        dim: features.dim(),
    };
    let cache = step_forward(&grid, &state.h, &state.c, prev_token, params);
    let next = DecoderState {
        h: cache.h,
        c: cache.c,
        t: state.t + 1,
    };
    Ok((next, cache.log_probs, cache.attention.alpha))
}

/// Step function over pre-widened features, used by the beam scorer.
pub(crate) fn step_raw(
    values: &[f64],
    pixels: usize,
    state: &DecoderState,
    prev_token: TokenId,
    params: &ModelParams,
) -> (DecoderState, Vec<f64>, Vec<f64>) {
    let grid = Grid {
        values,
        pixels,
        dim: params.dims.feature_dim,
    };
    let cache = step_forward(&grid, &state.h, &state.c, prev_token, params);
    (
        DecoderState {
            h: cache.h,
            c: cache.c,
            t: state.t + 1,
        },
        cache.log_probs,
        cache.attention.alpha,
    )
}

/// Attention rows produced while feeding `<start>` and then `tokens`.
pub fn replay_attention(
    features: &FeatureGrid,
    tokens: &[TokenId],
    params: &ModelParams,
) -> Result<AttentionWeights, DecoderError> {
    let mut state = init_state(features, params)?;
    let mut rows = Vec::with_capacity(tokens.len() + 1);
    for &tok in std::iter::once(&START_ID).chain(tokens) {
        let (next, _, alpha) = decode_step(&state, tok, features, params)?;
        rows.push(alpha);
        state = next;
    }
    Ok(AttentionWeights { rows })
}

struct Trace {
    mean: Vec<f64>,
    h0: Vec<f64>,
    c0: Vec<f64>,
    steps: Vec<StepCache>,
    targets: Vec<TokenId>,
    inputs: Vec<TokenId>,
    output: ForwardOutput,
}

fn run_forward(example: &TrainingExample, params: &ModelParams, lambda_ds: f64) -> Result<(Trace, Vec<f64>), DecoderError> {
    if example.caption.is_empty() {
        return Err(DecoderError::EmptyReference);
    }
    check_features(&example.features, &params.dims)?;
    let inputs = example.inputs();
    let targets = example.targets();
    for &t in &targets {
        check_token(t, &params.dims)?;
    }
    let values = example.features.to_f64();
    let grid = Grid {
        values: &values,
        pixels: example.features.pixels(),
        dim: example.features.dim(),
    };
    let mean = mean_feature(&grid);
    let (h0, c0) = init_from_mean(&mean, params);

    let mut steps: Vec<StepCache> = Vec::with_capacity(inputs.len());
    for &tok in &inputs {
        let (h, c) = match steps.last() {
            Some(prev) => (prev.h.as_slice(), prev.c.as_slice()),
            None => (h0.as_slice(), c0.as_slice()),
        };
        let cache = step_forward(&grid, h, c, tok, params);
        steps.push(cache);
    }

    let t_len = targets.len() as f64;
    let nll: f64 = steps
        .iter()
        .zip(&targets)
        .map(|(s, &y)| -s.log_probs[y as usize])
        .sum();
    let cross_entropy = nll / t_len;
    let alpha = AttentionWeights {
        rows: steps.iter().map(|s| s.attention.alpha.clone()).collect(),
    };
    let penalty = alpha.doubly_stochastic_penalty();
    let output = ForwardOutput {
        loss: cross_entropy + lambda_ds * penalty,
        cross_entropy,
        penalty,
        alpha,
        log_probs: steps.iter().map(|s| s.log_probs.clone()).collect(),
    };
    Ok((
        Trace {
            mean,
            h0,
            c0,
            steps,
            targets,
            inputs,
            output,
        },
        values,
    ))
}

/// Teacher-forced loss of one example. Inputs at every step are the gold
/// tokens, so the loss never depends on what the model would have predicted.
pub fn forward_teacher_forced(
    example: &TrainingExample,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<ForwardOutput, DecoderError> {
    run_forward(example, params, cfg.lambda_ds).map(|(trace, _)| trace.output)
}

/// Exact gradient of [`forward_teacher_forced`]'s loss with respect to every
/// parameter. Returns the forward output alongside.
pub fn gradients(
    example: &TrainingExample,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<(ModelParams, ForwardOutput), DecoderError> {
    let (trace, values) = run_forward(example, params, cfg.lambda_ds)?;
    let mut grads = ModelParams::zeros(params.dims);
    backward(&trace, &values, example.features.pixels(), params, cfg.lambda_ds, &mut grads);
    Ok((grads, trace.output))
}

/// Summed gradient over several examples.
pub fn batch_gradients(
    examples: &[TrainingExample],
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<(ModelParams, f64), DecoderError> {
    let mut grads = ModelParams::zeros(params.dims);
    let mut loss = 0.0;
    for ex in examples {
        let (trace, values) = run_forward(ex, params, cfg.lambda_ds)?;
        backward(&trace, &values, ex.features.pixels(), params, cfg.lambda_ds, &mut grads);
        loss += trace.output.loss;
    }
    Ok((grads, loss))
}

fn backward(trace: &Trace, values: &[f64], pixels: usize, params: &ModelParams, lambda_ds: f64, grads: &mut ModelParams) {
    let dims = params.dims;
    let (hd, a, d) = (dims.hidden, dims.attn, dims.feature_dim);
    let grid = Grid {
        values,
        pixels,
        dim: d,
    };
    let inv_t = 1.0 / trace.targets.len() as f64;

    // d penalty / d alpha[t][p] = 2 (S_p - 1), identical for every t.
    let pen_grad: Vec<f64> = trace
        .output
        .alpha
        .pixel_totals()
        .iter()
        .map(|s| 2.0 * lambda_ds * (s - 1.0))
        .collect();

    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];

    for (t, step) in trace.steps.iter().enumerate().rev() {
        // Output layer.
        let mut dlogits: Vec<f64> = step.log_probs.iter().map(|lp| lp.exp() * inv_t).collect();
        dlogits[trace.targets[t] as usize] -= inv_t;
        grads.out_proj.accumulate_outer(&step.h, &dlogits);
        add_assign(&mut grads.out_bias.data, &dlogits);
        let mut dh = dh_next.clone();
        params.out_proj.accumulate_mat_vec(&dlogits, &mut dh);

        // LSTM cell.
        let (gi, rest) = step.gates.split_at(hd);
        let (gf, rest) = rest.split_at(hd);
        let (gg, go) = rest.split_at(hd);
        let mut dpre = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for j in 0..hd {
            let tc = step.tanh_c[j];
            let dc = dc_next[j] + dh[j] * go[j] * (1.0 - tc * tc);
            let d_o = dh[j] * tc;
            let d_i = dc * gg[j];
            let d_g = dc * gi[j];
            let d_f = dc * step.c_prev[j];
            dc_prev[j] = dc * gf[j];
            dpre[j] = d_i * gi[j] * (1.0 - gi[j]);
            dpre[hd + j] = d_f * gf[j] * (1.0 - gf[j]);
            dpre[2 * hd + j] = d_g * (1.0 - gg[j] * gg[j]);
            dpre[3 * hd + j] = d_o * go[j] * (1.0 - go[j]);
        }
        grads.lstm_input.accumulate_outer(&step.x, &dpre);
        grads.lstm_hidden.accumulate_outer(&step.h_prev, &dpre);
        add_assign(&mut grads.lstm_bias.data, &dpre);
        let mut dx = vec![0.0; dims.embed + d];
        params.lstm_input.accumulate_mat_vec(&dpre, &mut dx);
        let mut dh_prev = vec![0.0; hd];
        params.lstm_hidden.accumulate_mat_vec(&dpre, &mut dh_prev);

        let (demb, dctx) = dx.split_at(dims.embed);
        add_assign(grads.embedding.row_mut(trace.inputs[t] as usize), demb);

        // Attention: context and penalty both flow into alpha.
        let alpha = &step.attention.alpha;
        let dalpha: Vec<f64> = (0..pixels)
            .map(|p| {
                grid.row(p).iter().zip(dctx).map(|(f, g)| f * g).sum::<f64>() + pen_grad[p]
            })
            .collect();
        let weighted: f64 = alpha.iter().zip(&dalpha).map(|(a, g)| a * g).sum();
        let mut dz_sum = vec![0.0; a];
        for p in 0..pixels {
            let dscore = alpha[p] * (dalpha[p] - weighted);
            if dscore == 0.0 {
                continue;
            }
            let zp = &step.z[p * a..(p + 1) * a];
            let mut dz = vec![0.0; a];
            for k in 0..a {
                if zp[k] > 0.0 {
                    grads.att_out.data[k] += dscore * zp[k];
                    dz[k] = dscore * params.att_out.data[k];
                }
            }
            grads.att_feat.accumulate_outer(grid.row(p), &dz);
            add_assign(&mut dz_sum, &dz);
        }
        add_assign(&mut grads.att_bias.data, &dz_sum);
        grads.att_hidden.accumulate_outer(&step.h_prev, &dz_sum);
        params.att_hidden.accumulate_mat_vec(&dz_sum, &mut dh_prev);

        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    // Initial state maps.
    for (state, dstate, w, b) in [
        (&trace.h0, &dh_next, &mut grads.init_h, &mut grads.init_h_bias),
        (&trace.c0, &dc_next, &mut grads.init_c, &mut grads.init_c_bias),
    ] {
        let dpre: Vec<f64> = state
            .iter()
            .zip(dstate)
            .map(|(s, g)| g * (1.0 - s * s))
            .collect();
        w.accumulate_outer(&trace.mean, &dpre);
        add_assign(&mut b.data, &dpre);
    }
}

/// Total target negative log-likelihood and token count over `examples`.
pub fn cross_entropy_totals(examples: &[TrainingExample], params: &ModelParams) -> Result<(f64, usize), DecoderError> {
    let mut nll = 0.0;
    let mut tokens = 0;
    for ex in examples {
        let (trace, _) = run_forward(ex, params, 0.0)?;
        let t = trace.targets.len();
        nll += trace.output.cross_entropy * t as f64;
        tokens += t;
    }
    Ok((nll, tokens))
}
