//! Coupled-gate LSTM cell, bidirectional encoder and inverted dropout.
//!
//! The input and forget gates are normalized against each other per
//! coordinate: `(i_k, f_k) = softmax(î_k, f̂_k)`, so `i + f = 1` everywhere and
//! the cell update `c_t = c_{t-1} ⊙ f + u ⊙ i` is a convex blend.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{shape_err, Error, Result};
use crate::numerics::{sigmoid, sqrt, tanh, Matrix, Rng};

/// What the input/forget softmax is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum GateMode {
    /// Softmax over the sigmoid outputs `î = σ(·)`, `f̂ = σ(·)`.
    #[default]
    PostSigmoid,
    /// Softmax over the raw pre-activations (sigmoids dropped).
    PreActivation,
}

const I: usize = 0;
const F: usize = 1;
const O: usize = 2;
const U: usize = 3;

/// Weights of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, output, candidate: rows `g*H..(g+1)*H` of `w`, `u`, `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H x D` input weights.
    pub w: Matrix,
    /// `4H x H` recurrent weights.
    pub u: Matrix,
    /// `4H` biases.
    pub b: Vec<f64>,
    pub gate_mode: GateMode,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize, gate_mode: GateMode) -> Self {
        Self {
            w: Matrix::zeros(4 * hidden, input_dim),
            u: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
            gate_mode,
        }
    }

    /// Weights uniform in `±sqrt(6 / (D + H))`, biases zero.
    pub fn init(input_dim: usize, hidden: usize, gate_mode: GateMode, rng: &mut Rng) -> Self {
        let bound = sqrt(6.0 / (input_dim + hidden) as f64);
        Self {
            w: Matrix::uniform(4 * hidden, input_dim, bound, rng),
            u: Matrix::uniform(4 * hidden, hidden, bound, rng),
            b: vec![0.0; 4 * hidden],
            gate_mode,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden(), self.gate_mode)
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn slices(&self) -> [&[f64]; 3] {
        [self.w.as_slice(), self.u.as_slice(), &self.b]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [self.w.as_mut_slice(), self.u.as_mut_slice(), &mut self.b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub c: Vec<f64>,
    pub r: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            c: vec![0.0; hidden],
            r: vec![0.0; hidden],
        }
    }
}

/// Gate activations of one step, after coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    prev: LstmState,
    /// `î`, `f̂` as fed to the pairwise softmax.
    i_hat: Vec<f64>,
    f_hat: Vec<f64>,
    gates: Gates,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn check_step(x: &[f64], prev: &LstmState, p: &LstmParams) -> Result<()> {
    let h = p.hidden();
    if x.len() != p.input_dim() || prev.c.len() != h || prev.r.len() != h {
        return Err(shape_err(
            "lstm_step",
            format!("input {} and state {h}", p.input_dim()),
            format!("input {}, cell {}, hidden {}", x.len(), prev.c.len(), prev.r.len()),
        ));
    }
    Ok(())
}

fn step_forward(x: &[f64], prev: &LstmState, p: &LstmParams) -> StepCache {
    let h = p.hidden();
    let mut a = p.b.clone();
    p.w.matvec_acc(x, &mut a);
    p.u.matvec_acc(&prev.r, &mut a);

    let mut i_hat = vec![0.0; h];
    let mut f_hat = vec![0.0; h];
    let mut input = vec![0.0; h];
    let mut forget = vec![0.0; h];
    let mut output = vec![0.0; h];
    let mut candidate = vec![0.0; h];
    let mut c = vec![0.0; h];
    let mut tanh_c = vec![0.0; h];
    for k in 0..h {
        let (ai, af) = (a[I * h + k], a[F * h + k]);
        (i_hat[k], f_hat[k]) = match p.gate_mode {
            GateMode::PostSigmoid => (sigmoid(ai), sigmoid(af)),
            GateMode::PreActivation => (ai, af),
        };
        // Two-way softmax: i = σ(î - f̂), f = 1 - i.
        input[k] = sigmoid(i_hat[k] - f_hat[k]);
        forget[k] = 1.0 - input[k];
        output[k] = sigmoid(a[O * h + k]);
        candidate[k] = tanh(a[U * h + k]);
        c[k] = prev.c[k] * forget[k] + candidate[k] * input[k];
        tanh_c[k] = tanh(c[k]);
    }
    StepCache {
        x: x.to_vec(),
        prev: prev.clone(),
        i_hat,
        f_hat,
        gates: Gates {
            input,
            forget,
            output,
            candidate,
        },
        c,
        tanh_c,
    }
}

impl StepCache {
    fn state(&self) -> LstmState {
        let r = self
            .gates
            .output
            .iter()
            .zip(&self.tanh_c)
            .map(|(o, t)| o * t)
            .collect();
        LstmState { c: self.c.clone(), r }
    }

    /// Backpropagates `dr`, `dc` (gradients w.r.t. this step's outputs) into
    /// `grad` and `dx`; returns the gradients w.r.t. the previous state.
    fn backward(&self, dr: &[f64], dc: &[f64], p: &LstmParams, grad: &mut LstmParams, dx: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
        let h = p.hidden();
        let g = &self.gates;
        let mut da = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for k in 0..h {
            let d_o = dr[k] * self.tanh_c[k];
            let dct = dc[k] + dr[k] * g.output[k] * (1.0 - self.tanh_c[k] * self.tanh_c[k]);
            dc_prev[k] = dct * g.forget[k];
            let d_f = dct * self.prev.c[k];
            let d_i = dct * g.candidate[k];
            let d_u = dct * g.input[k];
            // i = σ(z), f = 1 - i, z = î - f̂
            let dz = (d_i - d_f) * g.input[k] * g.forget[k];
            let (dai, daf) = match p.gate_mode {
                GateMode::PostSigmoid => (
                    dz * self.i_hat[k] * (1.0 - self.i_hat[k]),
                    -dz * self.f_hat[k] * (1.0 - self.f_hat[k]),
                ),
                GateMode::PreActivation => (dz, -dz),
            };
            da[I * h + k] = dai;
            da[F * h + k] = daf;
            da[O * h + k] = d_o * g.output[k] * (1.0 - g.output[k]);
            da[U * h + k] = d_u * (1.0 - g.candidate[k] * g.candidate[k]);
        }
        grad.w.add_outer(&da, &self.x);
        grad.u.add_outer(&da, &self.prev.r);
        grad.b.iter_mut().zip(&da).for_each(|(b, d)| *b += d);
        p.w.matvec_t_acc(&da, dx);
        let mut dr_prev = vec![0.0; h];
        p.u.matvec_t_acc(&da, &mut dr_prev);
        (dr_prev, dc_prev)
    }
}

/// One recurrent transition.
pub fn lstm_step(x: &[f64], prev: &LstmState, p: &LstmParams) -> Result<LstmState> {
    check_step(x, prev, p)?;
    Ok(step_forward(x, prev, p).state())
}

/// Like [`lstm_step`], also returning the coupled gate values.
pub fn lstm_step_gates(x: &[f64], prev: &LstmState, p: &LstmParams) -> Result<(LstmState, Gates)> {
    check_step(x, prev, p)?;
    let cache = step_forward(x, prev, p);
    Ok((cache.state(), cache.gates))
}

/// Forward trace of one direction, in processing order.
#[derive(Debug, Clone)]
pub struct DirectionTrace {
    steps: Vec<StepCache>,
    reverse: bool,
}

fn run_direction(inputs: &Matrix, p: &LstmParams, init: &LstmState, reverse: bool) -> (Matrix, DirectionTrace) {
    let m = inputs.rows();
    let h = p.hidden();
    let mut out = Matrix::zeros(m, h);
    let mut steps = Vec::with_capacity(m);
    let mut state = init.clone();
    for n in 0..m {
        let t = if reverse { m - 1 - n } else { n };
        let cache = step_forward(inputs.row(t), &state, p);
        state = cache.state();
        out.row_mut(t).copy_from_slice(&state.r);
        steps.push(cache);
    }
    (out, DirectionTrace { steps, reverse })
}

fn backward_direction(trace: &DirectionTrace, d_out: &Matrix, col0: usize, p: &LstmParams, grad: &mut LstmParams, d_inputs: &mut Matrix) {
    let m = trace.steps.len();
    let h = p.hidden();
    let mut dr_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    for n in (0..m).rev() {
        let t = if trace.reverse { m - 1 - n } else { n };
        let mut dr = d_out.row(t)[col0..col0 + h].to_vec();
        dr.iter_mut().zip(&dr_next).for_each(|(a, b)| *a += b);
        let (dr_prev, dc_prev) = trace.steps[n].backward(&dr, &dc_next, p, grad, d_inputs.row_mut(t));
        dr_next = dr_prev;
        dc_next = dc_prev;
    }
}

/// One direction over all rows of `inputs`; row `t` of the output is the
/// state after consuming input `t`. `reverse` scans right to left.
pub fn lstm_forward(inputs: &Matrix, p: &LstmParams, init: &LstmState, reverse: bool) -> Result<(Matrix, DirectionTrace)> {
    if inputs.cols() != p.input_dim() {
        return Err(shape_err("lstm_forward", format!("inputs of width {}", p.input_dim()), format!("{}", inputs.cols())));
    }
    if init.c.len() != p.hidden() || init.r.len() != p.hidden() {
        return Err(shape_err("lstm_forward", format!("state of size {}", p.hidden()), format!("{}", init.r.len())));
    }
    Ok(run_direction(inputs, p, init, reverse))
}

/// Backward pass for [`lstm_forward`]; `d_out` has one row per input.
pub fn lstm_backward(trace: &DirectionTrace, d_out: &Matrix, p: &LstmParams, grad: &mut LstmParams) -> Matrix {
    let mut d_inputs = Matrix::zeros(trace.steps.len(), p.input_dim());
    backward_direction(trace, d_out, 0, p, grad, &mut d_inputs);
    d_inputs
}

fn check_encode(inputs: &Matrix, fwd: &LstmParams, bwd: &LstmParams, init: &(LstmState, LstmState)) -> Result<()> {
    if inputs.rows() == 0 {
        return Err(Error::Domain("bilstm_encode needs at least one input vector".into()));
    }
    if inputs.cols() != fwd.input_dim() || inputs.cols() != bwd.input_dim() {
        return Err(shape_err(
            "bilstm_encode",
            format!("inputs of width {} / {}", fwd.input_dim(), bwd.input_dim()),
            format!("{}", inputs.cols()),
        ));
    }
    let ok = |s: &LstmState, h: usize| s.c.len() == h && s.r.len() == h;
    if !ok(&init.0, fwd.hidden()) || !ok(&init.1, bwd.hidden()) {
        return Err(shape_err("bilstm_encode", "initial states matching hidden sizes", "mismatched state"));
    }
    Ok(())
}

/// Rows `[r→_t ; r←_t]` for an `m x D` input: the forward direction scans
/// left to right from `init.0`, the backward one right to left from `init.1`.
pub fn bilstm_encode(inputs: &Matrix, fwd: &LstmParams, bwd: &LstmParams, init: &(LstmState, LstmState)) -> Result<Matrix> {
    bilstm_forward(inputs, fwd, bwd, init).map(|(out, _)| out)
}

/// Everything the backward pass needs from [`bilstm_forward`].
#[derive(Debug, Clone)]
pub struct BiLstmTrace {
    fwd: DirectionTrace,
    bwd: DirectionTrace,
    input_dim: usize,
}

pub fn bilstm_forward(inputs: &Matrix, fwd: &LstmParams, bwd: &LstmParams, init: &(LstmState, LstmState)) -> Result<(Matrix, BiLstmTrace)> {
    check_encode(inputs, fwd, bwd, init)?;
    let (of, tf) = run_direction(inputs, fwd, &init.0, false);
    let (ob, tb) = run_direction(inputs, bwd, &init.1, true);
    let out = of.hconcat(&ob)?;
    Ok((
        out,
        BiLstmTrace {
            fwd: tf,
            bwd: tb,
            input_dim: inputs.cols(),
        },
    ))
}

/// Accumulates parameter gradients for `d_out` (same shape as the encoder
/// output) into `g_fwd`/`g_bwd` and returns the gradient w.r.t. the inputs.
pub fn bilstm_backward(
    trace: &BiLstmTrace,
    d_out: &Matrix,
    fwd: &LstmParams,
    bwd: &LstmParams,
    g_fwd: &mut LstmParams,
    g_bwd: &mut LstmParams,
) -> Matrix {
    let m = trace.fwd.steps.len();
    let mut d_inputs = Matrix::zeros(m, trace.input_dim);
    backward_direction(&trace.fwd, d_out, 0, fwd, g_fwd, &mut d_inputs);
    backward_direction(&trace.bwd, d_out, fwd.hidden(), bwd, g_bwd, &mut d_inputs);
    d_inputs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

/// Inverted dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 - rate)`. All ones in [`Phase::Eval`] or when `rate == 0`.
pub fn dropout_mask(dim: usize, rate: f64, rng: &mut Rng, phase: Phase) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if phase == Phase::Eval || rate == 0.0 {
        return Ok(vec![1.0; dim]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..dim).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect())
}
