//! Linear-chain CRF with label-pair-conditioned potentials
//! `log ψ_i(y', y, r_i) = W_{y',y} · r_i + b_{y',y}`.
//!
//! A synthetic START label (index `k`, one past the real labels) is the
//! predecessor of the first position. There is no STOP factor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::numerics::{dot, exp, log_sum_exp, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CrfMode {
    /// One weight vector per `(previous, current)` label pair.
    #[default]
    Pairwise,
    /// Emission weights per current label plus a pair bias (the usual
    /// factored BiLSTM-CRF). Offered for comparison only.
    Factored,
}

/// CRF weights over `k` real labels and `d`-dimensional features.
///
/// Layouts: pairwise `w[(prev * k + cur) * d ..]` for `prev` in `0..=k`;
/// factored `w[cur * d ..]`; bias `b[prev * k + cur]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    num_labels: usize,
    dim: usize,
    pub mode: CrfMode,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl CrfParams {
    pub fn zeros(num_labels: usize, dim: usize, mode: CrfMode) -> Self {
        let w_len = match mode {
            CrfMode::Pairwise => (num_labels + 1) * num_labels * dim,
            CrfMode::Factored => num_labels * dim,
        };
        Self {
            num_labels,
            dim,
            mode,
            w: vec![0.0; w_len],
            b: vec![0.0; (num_labels + 1) * num_labels],
        }
    }

    pub fn from_parts(num_labels: usize, dim: usize, mode: CrfMode, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let expected = Self::zeros(num_labels, dim, mode);
        if w.len() != expected.w.len() || b.len() != expected.b.len() {
            return Err(shape_err(
                "CrfParams",
                format!("w {} / b {}", expected.w.len(), expected.b.len()),
                format!("w {} / b {}", w.len(), b.len()),
            ));
        }
        Ok(Self { w, b, ..expected })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.num_labels, self.dim, self.mode)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the synthetic START label.
    pub fn start(&self) -> usize {
        self.num_labels
    }

    #[inline]
    fn weights(&self, prev: usize, cur: usize) -> &[f64] {
        let d = self.dim;
        let off = match self.mode {
            CrfMode::Pairwise => (prev * self.num_labels + cur) * d,
            CrfMode::Factored => cur * d,
        };
        &self.w[off..off + d]
    }

    #[inline]
    fn weights_mut(&mut self, prev: usize, cur: usize) -> &mut [f64] {
        let d = self.dim;
        let off = match self.mode {
            CrfMode::Pairwise => (prev * self.num_labels + cur) * d,
            CrfMode::Factored => cur * d,
        };
        &mut self.w[off..off + d]
    }

    /// Widens the feature dimension to `dim + extra`, the new weight columns
    /// set to zero.
    pub fn with_extra_dims(&self, extra: usize) -> Self {
        let mut out = Self::zeros(self.num_labels, self.dim + extra, self.mode);
        out.b.copy_from_slice(&self.b);
        let rows = self.w.len() / self.dim.max(1);
        for r in 0..rows {
            out.w[r * out.dim..r * out.dim + self.dim].copy_from_slice(&self.w[r * self.dim..(r + 1) * self.dim]);
        }
        out
    }
}

/// Log-potentials of one sentence, shape `m x (k+1) x k`.
///
/// Every entry is filled, but only `prev = START` is used at position 0 and
/// only real labels afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPotentials {
    len: usize,
    num_labels: usize,
    data: Vec<f64>,
}

impl LogPotentials {
    pub fn new(len: usize, num_labels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != len * (num_labels + 1) * num_labels {
            return Err(shape_err(
                "LogPotentials",
                format!("{} entries", len * (num_labels + 1) * num_labels),
                format!("{}", data.len()),
            ));
        }
        Ok(Self { len, num_labels, data })
    }

    pub fn zeros(len: usize, num_labels: usize) -> Self {
        Self {
            len,
            num_labels,
            data: vec![0.0; len * (num_labels + 1) * num_labels],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, prev: usize, cur: usize) -> f64 {
        self.data[(i * (self.num_labels + 1) + prev) * self.num_labels + cur]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, prev: usize, cur: usize) -> &mut f64 {
        &mut self.data[(i * (self.num_labels + 1) + prev) * self.num_labels + cur]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn start(&self) -> usize {
        self.num_labels
    }

    /// Previous-label range valid at position `i`.
    fn prevs(&self, i: usize) -> core::ops::Range<usize> {
        if i == 0 {
            self.num_labels..self.num_labels + 1
        } else {
            0..self.num_labels
        }
    }
}

pub fn log_potentials(features: &Matrix, p: &CrfParams) -> Result<LogPotentials> {
    if features.cols() != p.dim {
        return Err(shape_err(
            "log_potentials",
            format!("features of width {}", p.dim),
            format!("{}", features.cols()),
        ));
    }
    let k = p.num_labels;
    let m = features.rows();
    let mut lp = LogPotentials::zeros(m, k);
    for i in 0..m {
        let r = features.row(i);
        if p.mode == CrfMode::Factored {
            let emit: Vec<f64> = (0..k).map(|y| dot(p.weights(0, y), r)).collect();
            for prev in 0..=k {
                for (y, e) in emit.iter().enumerate() {
                    *lp.get_mut(i, prev, y) = e + p.b[prev * k + y];
                }
            }
        } else {
            for prev in 0..=k {
                for y in 0..k {
                    *lp.get_mut(i, prev, y) = dot(p.weights(prev, y), r) + p.b[prev * k + y];
                }
            }
        }
    }
    Ok(lp)
}

/// Forward recursion in log space; `alpha[i][y]` is the log-sum of all
/// prefixes ending in `y` at position `i`.
fn forward(lp: &LogPotentials) -> Vec<Vec<f64>> {
    let k = lp.num_labels;
    let mut alpha = Vec::with_capacity(lp.len);
    alpha.push((0..k).map(|y| lp.get(0, lp.start(), y)).collect::<Vec<f64>>());
    let mut terms = vec![0.0; k];
    for i in 1..lp.len {
        let prev = &alpha[i - 1];
        let row: Vec<f64> = (0..k)
            .map(|y| {
                for (yp, t) in terms.iter_mut().enumerate() {
                    *t = prev[yp] + lp.get(i, yp, y);
                }
                log_sum_exp(&terms)
            })
            .collect();
        alpha.push(row);
    }
    alpha
}

fn backward(lp: &LogPotentials) -> Vec<Vec<f64>> {
    let k = lp.num_labels;
    let m = lp.len;
    let mut beta = vec![vec![0.0; k]; m];
    let mut terms = vec![0.0; k];
    for i in (0..m.saturating_sub(1)).rev() {
        for yp in 0..k {
            for (y, t) in terms.iter_mut().enumerate() {
                *t = lp.get(i + 1, yp, y) + beta[i + 1][y];
            }
            beta[i][yp] = log_sum_exp(&terms);
        }
    }
    beta
}

/// `log Σ_y exp(score(y))` over all label sequences.
pub fn log_partition(lp: &LogPotentials) -> f64 {
    if lp.len == 0 {
        return 0.0;
    }
    log_sum_exp(&forward(lp)[lp.len - 1])
}

/// Unnormalized log-score of `labels` (START-prefixed).
pub fn sequence_score(lp: &LogPotentials, labels: &[usize]) -> Result<f64> {
    check_labels(lp, labels)?;
    let mut prev = lp.start();
    let mut s = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        s += lp.get(i, prev, y);
        prev = y;
    }
    Ok(s)
}

fn check_labels(lp: &LogPotentials, labels: &[usize]) -> Result<()> {
    if labels.len() != lp.len {
        return Err(shape_err("label sequence", format!("{} labels", lp.len), format!("{}", labels.len())));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= lp.num_labels) {
        return Err(Error::Label(format!("index {y} (labels are 0..{})", lp.num_labels)));
    }
    Ok(())
}

/// Negative log-likelihood `log Z - score(y)`.
pub fn sequence_nll(features: &Matrix, labels: &[usize], p: &CrfParams) -> Result<f64> {
    let lp = log_potentials(features, p)?;
    let score = sequence_score(&lp, labels)?;
    Ok(log_partition(&lp) - score)
}

/// Gradient of the NLL w.r.t. the log-potentials: pair marginals minus the
/// gold indicator. Returns `(nll, d_lp)`.
pub fn nll_potential_grad(lp: &LogPotentials, labels: &[usize]) -> Result<(f64, LogPotentials)> {
    let score = sequence_score(lp, labels)?;
    let k = lp.num_labels;
    let m = lp.len;
    let alpha = forward(lp);
    let beta = backward(lp);
    let log_z = log_sum_exp(&alpha[m - 1]);
    let mut grad = LogPotentials::zeros(m, k);
    for i in 0..m {
        for prev in lp.prevs(i) {
            let a = if i == 0 { 0.0 } else { alpha[i - 1][prev] };
            for y in 0..k {
                *grad.get_mut(i, prev, y) = exp(a + lp.get(i, prev, y) + beta[i][y] - log_z);
            }
        }
    }
    let mut prev = lp.start();
    for (i, &y) in labels.iter().enumerate() {
        *grad.get_mut(i, prev, y) -= 1.0;
        prev = y;
    }
    Ok((log_z - score, grad))
}

/// NLL plus its gradient: parameter gradients are accumulated into `grad`,
/// feature gradients into `d_features`.
pub fn sequence_nll_backward(
    features: &Matrix,
    labels: &[usize],
    p: &CrfParams,
    grad: &mut CrfParams,
    d_features: &mut Matrix,
) -> Result<f64> {
    let lp = log_potentials(features, p)?;
    let (nll, d_lp) = nll_potential_grad(&lp, labels)?;
    let k = p.num_labels;
    for i in 0..lp.len {
        let r = features.row(i);
        for prev in lp.prevs(i) {
            for y in 0..k {
                let g = d_lp.get(i, prev, y);
                if g == 0.0 {
                    continue;
                }
                grad.b[prev * k + y] += g;
                grad.weights_mut(prev, y).iter_mut().zip(r).for_each(|(w, x)| *w += g * x);
                let w = p.weights(prev, y);
                d_features.row_mut(i).iter_mut().zip(w).for_each(|(d, wi)| *d += g * wi);
            }
        }
    }
    Ok(nll)
}

/// Highest-scoring sequence and its score. Ties go to the smaller label
/// index at every step.
pub fn viterbi(lp: &LogPotentials) -> (Vec<usize>, f64) {
    let k = lp.num_labels;
    let m = lp.len;
    if m == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..k).map(|y| lp.get(0, lp.start(), y)).collect();
    let mut back = vec![vec![0usize; k]; m];
    for i in 1..m {
        let mut next = vec![f64::NEG_INFINITY; k];
        for y in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for yp in 0..k {
                let s = delta[yp] + lp.get(i, yp, y);
                if s > best {
                    best = s;
                    arg = yp;
                }
            }
            next[y] = best;
            back[i][y] = arg;
        }
        delta = next;
    }
    let mut last = 0;
    for y in 1..k {
        if delta[y] > delta[last] {
            last = y;
        }
    }
    let score = delta[last];
    let mut path = vec![0; m];
    path[m - 1] = last;
    for i in (1..m).rev() {
        path[i - 1] = back[i][path[i]];
    }
    (path, score)
}

pub fn viterbi_decode(features: &Matrix, p: &CrfParams) -> Result<Vec<usize>> {
    if features.rows() == 0 {
        return Err(Error::Domain("cannot decode an empty sentence".into()));
    }
    Ok(viterbi(&log_potentials(features, p)?).0)
}
