//! Finite-difference verification of the hand-written backward passes on
//! random tiny configurations.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;

use crate::corpus::{Tag, TagSet, Vocab};
use crate::crf::{sequence_nll, sequence_nll_backward, CrfMode, CrfParams};
use crate::error::{Error, Result};
use crate::numerics::{dot, finite_difference_gradient, max_relative_error, seeded_rng, Matrix, Rng};
use crate::seqmodel::{bilstm_backward, bilstm_encode, bilstm_forward, GateMode, LstmParams, LstmState, Phase};
use crate::training::{Dropout, Example, ExampleInput, InputLayer, Tagger};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Largest accepted relative error between analytic and numeric gradients.
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Lstm,
    Crf,
    /// The whole tagger loss: embeddings, BiLSTM, fusion and CRF.
    Full,
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Module::Lstm => "lstm",
            Module::Crf => "crf",
            Module::Full => "full",
        })
    }
}

impl FromStr for Module {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(Module::Lstm),
            "crf" => Ok(Module::Crf),
            "full" => Ok(Module::Full),
            _ => Err(Error::Domain(format!("unknown module {s:?} (expected lstm, crf or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub module: Module,
    pub cases: usize,
    pub max_relative_error: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.max_relative_error < TOLERANCE
    }
}

/// Checks `cases` random configurations. With `corrupt` the analytic
/// gradient is deliberately perturbed, which must make the check fail.
pub fn run(module: Module, cases: usize, seed: u64, corrupt: bool) -> Result<Report> {
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (mut analytic, numeric) = match module {
            Module::Lstm => lstm_case(&mut rng)?,
            Module::Crf => crf_case(&mut rng)?,
            Module::Full => full_case(&mut rng)?,
        };
        if corrupt {
            analytic[0] += 0.1 * (1.0 + analytic[0].abs());
        }
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    Ok(Report {
        module,
        cases,
        max_relative_error: worst,
    })
}

fn random_lstm(d: usize, h: usize, mode: GateMode, rng: &mut Rng) -> LstmParams {
    let mut p = LstmParams::init(d, h, mode, rng);
    p.b.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
    p
}

fn gate_mode(rng: &mut Rng) -> GateMode {
    if rng.gen::<bool>() {
        GateMode::PostSigmoid
    } else {
        GateMode::PreActivation
    }
}

fn flat(parts: &[&[f64]]) -> Vec<f64> {
    parts.concat()
}

fn unflatten(flat: &[f64], parts: &mut [&mut [f64]]) {
    let mut off = 0;
    for s in parts.iter_mut() {
        s.copy_from_slice(&flat[off..off + s.len()]);
        off += s.len();
    }
}

/// Loss `Σ C ⊙ BiLSTM(x)` for a fixed random `C`; gradient w.r.t. both
/// directions' parameters and the inputs.
fn lstm_case(rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = rng.gen_range(1..=3);
    let h = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=4);
    let mode = gate_mode(rng);
    let fwd = random_lstm(d, h, mode, rng);
    let bwd = random_lstm(d, h, mode, rng);
    let x = Matrix::uniform(m, d, 1.0, rng);
    let c = Matrix::uniform(m, 2 * h, 1.0, rng);
    let init = (LstmState::zeros(h), LstmState::zeros(h));

    let (_, trace) = bilstm_forward(&x, &fwd, &bwd, &init)?;
    let (mut gf, mut gb) = (fwd.zeros_like(), bwd.zeros_like());
    let dx = bilstm_backward(&trace, &c, &fwd, &bwd, &mut gf, &mut gb);
    let mut analytic = flat(&[&gf.slices()[..], &gb.slices()[..]].concat());
    analytic.extend_from_slice(dx.as_slice());

    let mut p0 = flat(&[&fwd.slices()[..], &bwd.slices()[..]].concat());
    p0.extend_from_slice(x.as_slice());
    let numeric = finite_difference_gradient(
        |p| {
            let (mut f, mut b) = (fwd.clone(), bwd.clone());
            let mut xs = x.clone();
            let mut parts: Vec<&mut [f64]> = f.slices_mut().into();
            parts.extend(b.slices_mut());
            parts.push(xs.as_mut_slice());
            unflatten(p, &mut parts);
            let out = bilstm_encode(&xs, &f, &b, &init).expect("shapes fixed");
            dot(out.as_slice(), c.as_slice())
        },
        &p0,
        FD_STEP,
    )?;
    Ok((analytic, numeric))
}

fn crf_case(rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = rng.gen_range(1..=3);
    let d = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=3);
    let mode = if rng.gen::<bool>() { CrfMode::Pairwise } else { CrfMode::Factored };
    let mut p = CrfParams::zeros(k, d, mode);
    p.w.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
    p.b.iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
    let feats = Matrix::uniform(m, d, 1.0, rng);
    let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();

    let mut g = p.zeros_like();
    let mut df = Matrix::zeros(m, d);
    sequence_nll_backward(&feats, &labels, &p, &mut g, &mut df)?;
    let analytic = flat(&[&g.w, &g.b, df.as_slice()]);
    let p0 = flat(&[&p.w, &p.b, feats.as_slice()]);
    let (nw, nb) = (p.w.len(), p.b.len());
    let numeric = finite_difference_gradient(
        |x| {
            let q = CrfParams::from_parts(k, d, mode, x[..nw].to_vec(), x[nw..nw + nb].to_vec()).expect("sizes fixed");
            let f = Matrix::from_vec(m, d, x[nw + nb..].to_vec()).expect("sizes fixed");
            sequence_nll(&f, &labels, &q).expect("labels valid")
        },
        &p0,
        FD_STEP,
    )?;
    Ok((analytic, numeric))
}

fn full_case(rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=3);
    let k = rng.gen_range(1..=3);
    let dim = rng.gen_range(1..=3);
    let transfer_dim = rng.gen_range(0..=2);
    let all = [Tag::Outside, Tag::Single("A".into()), Tag::Single("B".into())];
    let tags = TagSet::from_tags(all[..k].iter());
    let lookup = rng.gen::<bool>();
    let (input, ex_input) = if lookup {
        let vocab = Vocab::from_tokens(["w", "x", "y"]);
        let ids = (0..m).map(|_| rng.gen_range(0..vocab.len())).collect();
        let embeddings = Matrix::uniform(vocab.len(), dim, 1.0, rng);
        (
            InputLayer::Lookup {
                vocab,
                embeddings,
                trainable: true,
            },
            ExampleInput::Ids(ids),
        )
    } else {
        (InputLayer::Features { dim }, ExampleInput::Features(Matrix::uniform(m, dim, 1.0, rng)))
    };
    let crf_mode = if rng.gen::<bool>() { CrfMode::Pairwise } else { CrfMode::Factored };
    let mode = gate_mode(rng);
    let mut model = Tagger::new(input, h, tags, transfer_dim, mode, crf_mode, rng);
    model.forward = random_lstm(dim, h, mode, rng);
    model.backward = random_lstm(dim, h, mode, rng);
    model.crf.w.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
    model.crf.b.iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
    let ex = Example {
        input: ex_input,
        labels: (0..m).map(|_| rng.gen_range(0..k)).collect(),
        transfer: (transfer_dim > 0).then(|| Matrix::uniform(m, transfer_dim, 1.0, rng)),
    };

    let mut g = model.grads();
    model.loss_and_grad(&ex, Dropout::NONE, Phase::Eval, rng, &mut g)?;
    let numeric = finite_difference_gradient(
        |p| {
            let mut q = model.clone();
            q.load_flat_params(p).expect("length fixed");
            q.forward_loss(&ex).expect("example valid")
        },
        &model.flat_params(),
        FD_STEP,
    )?;
    Ok((g.flatten(), numeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn all_modules_pass() {
        for module in [Module::Lstm, Module::Crf, Module::Full] {
            let r = run(module, 20, 1, false).unwrap();
            assert!(r.passed(), "{module}: {}", r.max_relative_error);
            assert_eq!(r.cases, 20);
        }
    }

    #[test]
    fn corruption_is_detected() {
        for module in [Module::Lstm, Module::Crf, Module::Full] {
            assert!(!run(module, 3, 2, true).unwrap().passed());
        }
    }

    #[test]
    fn module_names() {
        for m in [Module::Lstm, Module::Crf, Module::Full] {
            assert_eq!(m.to_string().parse::<Module>().unwrap(), m);
        }
        assert!("gru".parse::<Module>().is_err());
    }
}
