//! Target-language BiLSTM-CRF tagger, plain SGD with loss-plateau annealing
//! and the multi-seed experiment runner.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::attention::AttentionMode;
use crate::corpus::{build_vocab, convert_scheme, EmbeddingTable, LabeledCorpus, Scheme, Tag, TagSet, Vocab};
use crate::crf::{log_potentials, sequence_nll_backward, viterbi, CrfMode, CrfParams};
use crate::error::{shape_err, Error, Result};
use crate::eval::{entity_prf, EntityScores, Prf};
use crate::numerics::{seeded_rng, sqrt, Matrix, Rng};
use crate::seqmodel::{bilstm_backward, bilstm_forward, dropout_mask, GateMode, LstmParams, LstmState, Phase};

/// How tokens become input vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum InputLayer {
    /// Word-id lookup into a `V x D` table.
    Lookup {
        vocab: Vocab,
        embeddings: Matrix,
        trainable: bool,
    },
    /// Precomputed `m x dim` feature rows per sentence.
    Features { dim: usize },
}

impl InputLayer {
    pub fn dim(&self) -> usize {
        match self {
            InputLayer::Lookup { embeddings, .. } => embeddings.cols(),
            InputLayer::Features { dim } => *dim,
        }
    }
}

/// Embedding → BiLSTM → optional fusion with transferred vectors → CRF.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger {
    pub input: InputLayer,
    pub forward: LstmParams,
    pub backward: LstmParams,
    pub crf: CrfParams,
    pub tags: TagSet,
    /// Width of the transferred vectors appended to every BiLSTM state; 0
    /// disables fusion.
    pub transfer_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub embed: f64,
    pub recurrent: f64,
}

impl Dropout {
    pub const NONE: Dropout = Dropout {
        embed: 0.0,
        recurrent: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExampleInput {
    Ids(Vec<usize>),
    Features(Matrix),
}

/// One training or evaluation sentence in model-ready form.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: ExampleInput,
    pub labels: Vec<usize>,
    /// `m x transfer_dim`; `None` means zero-filled.
    pub transfer: Option<Matrix>,
}

impl Example {
    pub fn len(&self) -> usize {
        match &self.input {
            ExampleInput::Ids(ids) => ids.len(),
            ExampleInput::Features(f) => f.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Gradient buffers shaped like a [`Tagger`]'s trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerGrads {
    pub embeddings: Option<Matrix>,
    pub forward: LstmParams,
    pub backward: LstmParams,
    pub crf: CrfParams,
}

impl TaggerGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        if let Some(e) = &self.embeddings {
            out.push(e.as_slice());
        }
        out.extend(self.forward.slices());
        out.extend(self.backward.slices());
        out.push(&self.crf.w[..]);
        out.push(&self.crf.b[..]);
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        if let Some(e) = &mut self.embeddings {
            out.push(e.as_mut_slice());
        }
        out.extend(self.forward.slices_mut());
        out.extend(self.backward.slices_mut());
        out.push(&mut self.crf.w[..]);
        out.push(&mut self.crf.b[..]);
        out
    }

    pub fn zero(&mut self) {
        self.slices_mut().into_iter().for_each(|s| s.fill(0.0));
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

impl Tagger {
    /// Fresh model: LSTM weights uniform, CRF at zero.
    pub fn new(
        input: InputLayer,
        hidden: usize,
        tags: TagSet,
        transfer_dim: usize,
        gate_mode: GateMode,
        crf_mode: CrfMode,
        rng: &mut Rng,
    ) -> Self {
        let d = input.dim();
        let forward = LstmParams::init(d, hidden, gate_mode, rng);
        let backward = LstmParams::init(d, hidden, gate_mode, rng);
        let crf = CrfParams::zeros(tags.len(), 2 * hidden + transfer_dim, crf_mode);
        Self {
            input,
            forward,
            backward,
            crf,
            tags,
            transfer_dim,
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn grads(&self) -> TaggerGrads {
        let embeddings = match &self.input {
            InputLayer::Lookup {
                embeddings,
                trainable: true,
                ..
            } => Some(Matrix::zeros(embeddings.rows(), embeddings.cols())),
            _ => None,
        };
        TaggerGrads {
            embeddings,
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
            crf: self.crf.zeros_like(),
        }
    }

    /// Trainable parameters in the same order as [`TaggerGrads::slices`].
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        if let InputLayer::Lookup {
            embeddings,
            trainable: true,
            ..
        } = &self.input
        {
            out.push(embeddings.as_slice());
        }
        out.extend(self.forward.slices());
        out.extend(self.backward.slices());
        out.push(&self.crf.w[..]);
        out.push(&self.crf.b[..]);
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        if let InputLayer::Lookup {
            embeddings,
            trainable: true,
            ..
        } = &mut self.input
        {
            out.push(embeddings.as_mut_slice());
        }
        out.extend(self.forward.slices_mut());
        out.extend(self.backward.slices_mut());
        out.push(&mut self.crf.w[..]);
        out.push(&mut self.crf.b[..]);
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn load_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.param_slices().iter().map(|s| s.len()).sum();
        if flat.len() != total {
            return Err(shape_err("load_flat_params", format!("{total} values"), format!("{}", flat.len())));
        }
        let mut off = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        }
        Ok(())
    }

    /// `p ← p − lr · g` over every trainable parameter.
    pub fn sgd_step(&mut self, grads: &TaggerGrads, lr: f64) {
        for (p, g) in self.param_slices_mut().into_iter().zip(grads.slices()) {
            p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
        }
    }

    fn embed(&self, input: &ExampleInput) -> Result<Matrix> {
        match (&self.input, input) {
            (InputLayer::Lookup { embeddings, .. }, ExampleInput::Ids(ids)) => {
                let mut x = Matrix::zeros(ids.len(), embeddings.cols());
                for (t, &id) in ids.iter().enumerate() {
                    if id >= embeddings.rows() {
                        return Err(Error::Index {
                            index: id,
                            len: embeddings.rows(),
                        });
                    }
                    x.row_mut(t).copy_from_slice(embeddings.row(id));
                }
                Ok(x)
            }
            (InputLayer::Features { dim }, ExampleInput::Features(f)) => {
                if f.cols() != *dim {
                    return Err(shape_err("input features", format!("width {dim}"), format!("{}", f.cols())));
                }
                Ok(f.clone())
            }
            (InputLayer::Lookup { .. }, ExampleInput::Features(_)) => {
                Err(shape_err("example input", "word ids", "feature rows"))
            }
            (InputLayer::Features { .. }, ExampleInput::Ids(_)) => {
                Err(shape_err("example input", "feature rows", "word ids"))
            }
        }
    }

    fn transfer_block(&self, ex: &Example) -> Result<Option<Matrix>> {
        let m = ex.len();
        match (&ex.transfer, self.transfer_dim) {
            (None, 0) => Ok(None),
            (Some(t), 0) => Err(shape_err("transfer", "none (fusion disabled)", format!("{} x {}", t.rows(), t.cols()))),
            (None, d) => Ok(Some(Matrix::zeros(m, d))),
            (Some(t), d) => {
                if t.rows() != m || t.cols() != d {
                    return Err(shape_err("transfer", format!("{m} x {d}"), format!("{} x {}", t.rows(), t.cols())));
                }
                Ok(Some(t.clone()))
            }
        }
    }

    fn check_labels(&self, ex: &Example) -> Result<()> {
        if ex.labels.len() != ex.len() {
            return Err(shape_err("labels", format!("{}", ex.len()), format!("{}", ex.labels.len())));
        }
        Ok(())
    }

    /// CRF input features `[r_s ; t_e]` (evaluation mode).
    pub fn features(&self, ex: &Example) -> Result<Matrix> {
        let x = self.embed(&ex.input)?;
        let init = (LstmState::zeros(self.hidden()), LstmState::zeros(self.hidden()));
        let (h, _) = bilstm_forward(&x, &self.forward, &self.backward, &init)?;
        match self.transfer_block(ex)? {
            Some(t) => h.hconcat(&t),
            None => Ok(h),
        }
    }

    /// Sentence NLL with dropout disabled.
    pub fn forward_loss(&self, ex: &Example) -> Result<f64> {
        self.check_labels(ex)?;
        let feats = self.features(ex)?;
        let mut scratch = self.crf.zeros_like();
        let mut d = Matrix::zeros(feats.rows(), feats.cols());
        sequence_nll_backward(&feats, &ex.labels, &self.crf, &mut scratch, &mut d)
    }

    /// Sentence NLL; gradients are added into `grads`.
    pub fn loss_and_grad(&self, ex: &Example, dropout: Dropout, phase: Phase, rng: &mut Rng, grads: &mut TaggerGrads) -> Result<f64> {
        self.check_labels(ex)?;
        let m = ex.len();
        let mut x = self.embed(&ex.input)?;
        let emb_mask = dropout_mask(x.as_slice().len(), dropout.embed, rng, phase)?;
        x.as_mut_slice().iter_mut().zip(&emb_mask).for_each(|(v, k)| *v *= k);

        let hdim = 2 * self.hidden();
        let init = (LstmState::zeros(self.hidden()), LstmState::zeros(self.hidden()));
        let (mut h, trace) = bilstm_forward(&x, &self.forward, &self.backward, &init)?;
        let rec_mask = dropout_mask(m * hdim, dropout.recurrent, rng, phase)?;
        h.as_mut_slice().iter_mut().zip(&rec_mask).for_each(|(v, k)| *v *= k);

        let feats = match self.transfer_block(ex)? {
            Some(t) => h.hconcat(&t)?,
            None => h,
        };
        let mut d_feats = Matrix::zeros(m, feats.cols());
        let nll = sequence_nll_backward(&feats, &ex.labels, &self.crf, &mut grads.crf, &mut d_feats)?;

        let mut d_h = Matrix::zeros(m, hdim);
        for t in 0..m {
            d_h.row_mut(t).copy_from_slice(&d_feats.row(t)[..hdim]);
        }
        d_h.as_mut_slice().iter_mut().zip(&rec_mask).for_each(|(v, k)| *v *= k);
        let mut d_x = bilstm_backward(&trace, &d_h, &self.forward, &self.backward, &mut grads.forward, &mut grads.backward);
        d_x.as_mut_slice().iter_mut().zip(&emb_mask).for_each(|(v, k)| *v *= k);

        if let (Some(ge), ExampleInput::Ids(ids)) = (&mut grads.embeddings, &ex.input) {
            for (t, &id) in ids.iter().enumerate() {
                ge.row_mut(id).iter_mut().zip(d_x.row(t)).for_each(|(g, d)| *g += d);
            }
        }
        Ok(nll)
    }

    /// Viterbi label indices.
    pub fn decode(&self, ex: &Example) -> Result<Vec<usize>> {
        if ex.is_empty() {
            return Err(Error::Domain("cannot decode an empty sentence".into()));
        }
        let feats = self.features(ex)?;
        Ok(viterbi(&log_potentials(&feats, &self.crf)?).0)
    }

    pub fn predict_tags(&self, ex: &Example) -> Result<Vec<Tag>> {
        Ok(self.tags.decode(&self.decode(ex)?))
    }

    /// Entity scores of the model's predictions against each example's labels.
    pub fn evaluate(&self, examples: &[Example]) -> Result<EntityScores> {
        let mut gold = Vec::with_capacity(examples.len());
        let mut pred = Vec::with_capacity(examples.len());
        for ex in examples {
            gold.push(self.tags.decode(&ex.labels));
            pred.push(self.predict_tags(ex)?);
        }
        entity_prf(&gold, &pred)
    }
}

/// Learning-rate schedule: multiply by `factor` once the epoch loss has
/// failed to beat the best loss so far for `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Annealer {
    pub lr: f64,
    patience: usize,
    factor: f64,
    best: f64,
    stale: usize,
}

impl Annealer {
    pub fn new(lr: f64, patience: usize, factor: f64) -> Self {
        Self {
            lr,
            patience,
            factor,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    /// Records one epoch's loss; returns true when the rate was reduced.
    pub fn observe(&mut self, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.stale = 0;
            return false;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            self.lr *= self.factor;
            self.stale = 0;
            return true;
        }
        false
    }
}

/// Hyper-parameters of a target-model experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ExperimentConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub hidden: usize,
    /// Width of randomly initialized word embeddings.
    pub word_dim: usize,
    pub batch_size: usize,
    pub embed_dropout: f64,
    pub recurrent_dropout: f64,
    pub anneal_patience: usize,
    pub anneal_factor: f64,
    pub attention: AttentionMode,
    pub renormalize: bool,
    pub seeds: Vec<u64>,
    pub transfer: bool,
    /// Use the transferred vectors as the only input (no word embeddings,
    /// no fusion). Takes precedence over `transfer`.
    pub embedding_only: bool,
    pub freeze_embeddings: bool,
    pub gate_mode: GateMode,
    pub crf_mode: CrfMode,
    pub min_count: usize,
    /// Tag scheme the model is trained in.
    pub scheme: Scheme,
}

pub const DESK_HIDDEN: usize = 32;
pub const PAPER_HIDDEN: usize = 256;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 150,
            hidden: DESK_HIDDEN,
            word_dim: 32,
            batch_size: 8,
            embed_dropout: 0.1,
            recurrent_dropout: 0.05,
            anneal_patience: 3,
            anneal_factor: 0.5,
            attention: AttentionMode::Average,
            renormalize: true,
            seeds: vec![1, 2, 3, 4, 5],
            transfer: true,
            embedding_only: false,
            freeze_embeddings: false,
            gate_mode: GateMode::PostSigmoid,
            crf_mode: CrfMode::Pairwise,
            min_count: 1,
            scheme: Scheme::Bioes,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Domain(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.anneal_patience == 0 {
            return fail("anneal patience must be at least 1".into());
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor < 1.0) {
            return fail(format!("anneal factor must lie in (0, 1), got {}", self.anneal_factor));
        }
        if ![8, 16, 32].contains(&self.batch_size) {
            return fail(format!("batch size must be 8, 16 or 32, got {}", self.batch_size));
        }
        for (name, r) in [("embedding", self.embed_dropout), ("recurrent", self.recurrent_dropout)] {
            if !(0.0..1.0).contains(&r) {
                return fail(format!("{name} dropout must lie in [0, 1), got {r}"));
            }
        }
        if self.epochs == 0 || self.hidden == 0 || self.word_dim == 0 {
            return fail("epochs, hidden size and word dimension must be positive".into());
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        Ok(())
    }

    pub fn dropout(&self) -> Dropout {
        Dropout {
            embed: self.embed_dropout,
            recurrent: self.recurrent_dropout,
        }
    }

    pub fn uses_transfer(&self) -> bool {
        self.transfer || self.embedding_only
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev F1 (the last epoch when
    /// there is no dev data).
    pub model: Tagger,
    pub curve: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Mini-batch SGD. Batch loss is the mean of sentence losses; every epoch's
/// mean loss drives the annealer and, with dev data, the checkpoint choice.
pub fn sgd_train(mut model: Tagger, train: &[Example], dev: &[Example], config: &ExperimentConfig, rng: &mut Rng) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Domain("training corpus is empty".into()));
    }
    config.validate()?;
    let mut annealer = Annealer::new(config.learning_rate, config.anneal_patience, config.anneal_factor);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grads = model.grads();
    let mut curve = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Tagger)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let lr = annealer.lr;
        let mut total = 0.0;
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            grads.zero();
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += model.loss_and_grad(&train[i], config.dropout(), Phase::Train, rng, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch + 1,
                    learning_rate: lr,
                });
            }
            total += batch_loss;
            model.sgd_step(&grads, lr / chunk.len() as f64);
        }
        let loss = total / train.len() as f64;
        let dev_f1 = if dev.is_empty() {
            None
        } else {
            Some(model.evaluate(dev)?.overall.f1)
        };
        curve.push(EpochRecord { epoch, loss, lr, dev_f1 });
        if let Some(f1) = dev_f1 {
            if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                best = Some((f1, epoch, model.clone()));
            }
        }
        annealer.observe(loss);
    }
    let (model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, config.epochs),
    };
    Ok(TrainOutcome { model, curve, best_epoch })
}

/// A corpus split with its optional per-sentence transferred vectors
/// (`None` entries: no alignment, zero-filled).
#[derive(Debug, Clone)]
pub struct SplitData {
    pub corpus: LabeledCorpus,
    pub transfers: Option<Vec<Option<Matrix>>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: SplitData,
    pub dev: SplitData,
    pub test: SplitData,
    /// Pretrained target-language embeddings; random init otherwise.
    pub embeddings: Option<EmbeddingTable>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedReport {
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_type: BTreeMap<String, Prf>,
    pub best_epoch: usize,
    pub best_dev_f1: Option<f64>,
    pub curve: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransferProvenance {
    pub attention: AttentionMode,
    pub renormalize: bool,
    pub embedding_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub per_seed: Vec<SeedReport>,
    pub mean: Prf,
    pub per_type: BTreeMap<String, Prf>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub transfer: Option<TransferProvenance>,
}

impl MetricsReport {
    pub fn f1s(&self) -> Vec<f64> {
        self.per_seed.iter().map(|s| s.f1).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: MetricsReport,
    /// Best-dev model of every seed, in seed order.
    pub models: Vec<Tagger>,
}

/// Turns a split into examples. `transfers` must have one entry per
/// sentence and each matrix one row per token; violations name the
/// offending sentence.
pub fn build_examples(
    corpus: &LabeledCorpus,
    tags: &TagSet,
    vocab: Option<&Vocab>,
    transfers: Option<&[Option<Matrix>]>,
    transfer_dim: usize,
    embedding_only: bool,
) -> Result<Vec<Example>> {
    if let Some(t) = transfers {
        if t.len() != corpus.len() {
            return Err(Error::Data {
                index: t.len().min(corpus.len()),
                message: format!("{} sentences but {} alignment records", corpus.len(), t.len()),
            });
        }
    }
    corpus
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let transfer = match transfers.and_then(|t| t[i].as_ref()) {
                Some(t) if t.rows() != s.len() || t.cols() != transfer_dim => {
                    return Err(Error::Data {
                        index: i,
                        message: format!(
                            "sentence has {} tokens but its transfer matrix is {} x {} (expected width {transfer_dim})",
                            s.len(),
                            t.rows(),
                            t.cols()
                        ),
                    })
                }
                other => other.cloned(),
            };
            let labels = tags.encode(&s.tags)?;
            let ex = if embedding_only {
                Example {
                    input: ExampleInput::Features(transfer.unwrap_or_else(|| Matrix::zeros(s.len(), transfer_dim))),
                    labels,
                    transfer: None,
                }
            } else {
                let vocab = vocab.ok_or_else(|| Error::Domain("word-id input needs a vocabulary".into()))?;
                Example {
                    input: ExampleInput::Ids(s.tokens.iter().map(|t| vocab.lookup(t)).collect()),
                    labels,
                    transfer: if transfer_dim > 0 { transfer } else { None },
                }
            };
            Ok(ex)
        })
        .collect()
}

fn transfer_width(data: &ExperimentData) -> Result<usize> {
    [&data.train, &data.dev, &data.test]
        .iter()
        .filter_map(|s| s.transfers.as_ref())
        .flat_map(|t| t.iter().flatten())
        .map(|m| m.cols())
        .next()
        .ok_or_else(|| Error::Domain("transfer is enabled but no transferred vectors were supplied".into()))
}

fn random_embeddings(vocab: &Vocab, dim: usize, rng: &mut Rng) -> Matrix {
    let mut m = Matrix::uniform(vocab.len(), dim, sqrt(3.0 / dim as f64), rng);
    m.row_mut(Vocab::PAD).fill(0.0);
    m
}

/// Trains one model per seed, keeps each seed's best-dev checkpoint and
/// scores it on the test split.
pub fn run_experiment(config: &ExperimentConfig, data: &ExperimentData) -> Result<ExperimentOutcome> {
    config.validate()?;
    let train = convert_scheme(&data.train.corpus, config.scheme);
    let dev = convert_scheme(&data.dev.corpus, config.scheme);
    let test = convert_scheme(&data.test.corpus, config.scheme);
    let tags = TagSet::from_corpora(&[&train, &dev, &test]);
    let transfer_dim = if config.uses_transfer() { transfer_width(data)? } else { 0 };
    let vocab = match &data.embeddings {
        Some(table) => table.vocab.clone(),
        None => build_vocab(&train, config.min_count),
    };
    let fused_dim = if config.transfer && !config.embedding_only { transfer_dim } else { 0 };
    let split = |s: &LabeledCorpus, d: &SplitData| {
        let transfers = if config.uses_transfer() { d.transfers.as_deref() } else { None };
        build_examples(s, &tags, Some(&vocab), transfers, transfer_dim, config.embedding_only).map(|mut exs| {
            if fused_dim == 0 {
                exs.iter_mut().for_each(|e| e.transfer = None);
            }
            exs
        })
    };
    let train_ex = split(&train, &data.train)?;
    let dev_ex = split(&dev, &data.dev)?;
    let test_ex = split(&test, &data.test)?;

    let mut per_seed = Vec::with_capacity(config.seeds.len());
    let mut models = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let mut rng = seeded_rng(seed);
        let input = if config.embedding_only {
            InputLayer::Features { dim: transfer_dim }
        } else {
            let embeddings = match &data.embeddings {
                Some(table) => table.vectors.clone(),
                None => random_embeddings(&vocab, config.word_dim, &mut rng),
            };
            InputLayer::Lookup {
                vocab: vocab.clone(),
                embeddings,
                trainable: !config.freeze_embeddings,
            }
        };
        let model = Tagger::new(input, config.hidden, tags.clone(), fused_dim, config.gate_mode, config.crf_mode, &mut rng);
        let outcome = sgd_train(model, &train_ex, &dev_ex, config, &mut rng)?;
        let scores = outcome.model.evaluate(&test_ex)?;
        per_seed.push(SeedReport {
            seed,
            precision: scores.overall.precision,
            recall: scores.overall.recall,
            f1: scores.overall.f1,
            per_type: scores.per_type,
            best_epoch: outcome.best_epoch,
            best_dev_f1: outcome.curve.get(outcome.best_epoch - 1).and_then(|r| r.dev_f1),
            curve: outcome.curve,
        });
        models.push(outcome.model);
    }
    let report = summarize(per_seed, config);
    Ok(ExperimentOutcome { report, models })
}

fn summarize(per_seed: Vec<SeedReport>, config: &ExperimentConfig) -> MetricsReport {
    let overall: Vec<Prf> = per_seed
        .iter()
        .map(|s| Prf {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        })
        .collect();
    let mut kinds: Vec<&String> = per_seed.iter().flat_map(|s| s.per_type.keys()).collect();
    kinds.sort();
    kinds.dedup();
    let per_type = kinds
        .into_iter()
        .map(|k| {
            let items: Vec<Prf> = per_seed.iter().map(|s| s.per_type.get(k).copied().unwrap_or_default()).collect();
            (k.clone(), Prf::mean(&items))
        })
        .collect();
    MetricsReport {
        mean: Prf::mean(&overall),
        per_type,
        transfer: config.uses_transfer().then_some(TransferProvenance {
            attention: config.attention,
            renormalize: config.renormalize,
            embedding_only: config.embedding_only,
        }),
        per_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledSentence;
    use crate::numerics::{ln, max_relative_error};

    fn tagset() -> TagSet {
        let tags = [
            Tag::Outside,
            Tag::Single("PER".into()),
            Tag::Begin("LOC".into()),
            Tag::End("LOC".into()),
        ];
        TagSet::from_tags(tags.iter())
    }

    fn lookup_tagger(transfer_dim: usize, rng: &mut Rng) -> Tagger {
        let vocab = Vocab::from_tokens(["a", "b", "c"]);
        let embeddings = Matrix::uniform(vocab.len(), 3, 0.5, rng);
        let input = InputLayer::Lookup {
            vocab,
            embeddings,
            trainable: true,
        };
        Tagger::new(input, 2, tagset(), transfer_dim, GateMode::PostSigmoid, CrfMode::Pairwise, rng)
    }

    fn randomize_crf(t: &mut Tagger, rng: &mut Rng) {
        let n = t.crf.w.len();
        t.crf.w = Matrix::uniform(1, n, 0.5, rng).into_vec();
        let n = t.crf.b.len();
        t.crf.b = Matrix::uniform(1, n, 0.5, rng).into_vec();
    }

    #[test]
    fn annealing_rule() {
        let mut a = Annealer::new(0.1, 3, 0.5);
        let halved: Vec<bool> = [5.0, 5.0, 5.0, 5.0].iter().map(|&l| a.observe(l)).collect();
        assert_eq!(halved, [false, false, false, true]);
        assert_eq!(a.lr, 0.05);
        let mut a = Annealer::new(0.1, 3, 0.5);
        for l in [5.0, 4.0, 3.0, 2.0] {
            assert!(!a.observe(l));
        }
    }

    #[test]
    fn uniform_crf_loss() {
        let mut rng = seeded_rng(3);
        let t = lookup_tagger(0, &mut rng);
        let ex = Example {
            input: ExampleInput::Ids(vec![2, 3, 4]),
            labels: vec![0, 1, 2],
            transfer: None,
        };
        let loss = t.forward_loss(&ex).unwrap();
        assert!((loss - 3.0 * ln(4.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_transfer_with_zero_weights_matches_baseline() {
        let mut rng = seeded_rng(8);
        let mut base = lookup_tagger(0, &mut rng);
        randomize_crf(&mut base, &mut rng);
        let mut fused = base.clone();
        fused.transfer_dim = 2;
        fused.crf = base.crf.with_extra_dims(2);
        let ex = Example {
            input: ExampleInput::Ids(vec![2, 4]),
            labels: vec![1, 0],
            transfer: None,
        };
        let with = Example {
            transfer: Some(Matrix::zeros(2, 2)),
            ..ex.clone()
        };
        assert_eq!(base.forward_loss(&ex).unwrap(), fused.forward_loss(&with).unwrap());
    }

    #[test]
    fn transfer_shape_errors() {
        let mut rng = seeded_rng(1);
        let t = lookup_tagger(2, &mut rng);
        let ex = Example {
            input: ExampleInput::Ids(vec![2, 4]),
            labels: vec![1, 0],
            transfer: Some(Matrix::zeros(3, 2)),
        };
        assert!(matches!(t.forward_loss(&ex), Err(Error::Shape { .. })));
        let t = lookup_tagger(0, &mut rng);
        assert!(t.forward_loss(&ex).is_err());
    }

    #[test]
    fn full_gradient_matches_finite_differences() {
        let mut rng = seeded_rng(31);
        let mut t = lookup_tagger(2, &mut rng);
        randomize_crf(&mut t, &mut rng);
        let ex = Example {
            input: ExampleInput::Ids(vec![2, 3, 1]),
            labels: vec![1, 2, 3],
            transfer: Some(Matrix::uniform(3, 2, 1.0, &mut rng)),
        };
        let mut g = t.grads();
        t.loss_and_grad(&ex, Dropout::NONE, Phase::Eval, &mut rng, &mut g).unwrap();
        let p0 = t.flat_params();
        let numeric = crate::numerics::finite_difference_gradient(
            |p| {
                let mut q = t.clone();
                q.load_flat_params(p).unwrap();
                q.forward_loss(&ex).unwrap()
            },
            &p0,
            1e-5,
        )
        .unwrap();
        assert!(max_relative_error(&g.flatten(), &numeric) < 1e-4);
    }

    fn memorization_corpus() -> LabeledCorpus {
        let raw: [(&str, &str); 10] = [
            ("alice visited paris", "S-PER O S-LOC"),
            ("bob likes new york", "S-PER O B-LOC E-LOC"),
            ("the city of rome", "O O O S-LOC"),
            ("carol met dave", "S-PER O S-PER"),
            ("london is big", "S-LOC O O"),
            ("we saw eve in oslo", "O O S-PER O S-LOC"),
            ("frank stayed home", "S-PER O O"),
            ("nothing happened today", "O O O"),
            ("grace flew to new york", "S-PER O O B-LOC E-LOC"),
            ("heidi and ivan left", "S-PER O S-PER O"),
        ];
        let sentences = raw
            .iter()
            .map(|(w, t)| {
                let tokens = w.split(' ').map(String::from).collect();
                let tags = t.split(' ').map(|t| Tag::parse(t, Scheme::Bioes).unwrap()).collect();
                LabeledSentence::new(tokens, tags).unwrap()
            })
            .collect();
        LabeledCorpus::new(sentences, Scheme::Bioes)
    }

    #[test]
    fn memorizes_small_corpus() {
        let corpus = memorization_corpus();
        let config = ExperimentConfig {
            epochs: 150,
            hidden: 16,
            word_dim: 16,
            embed_dropout: 0.0,
            recurrent_dropout: 0.0,
            transfer: false,
            seeds: vec![7],
            ..ExperimentConfig::default()
        };
        let data = ExperimentData {
            train: SplitData {
                corpus: corpus.clone(),
                transfers: None,
            },
            dev: SplitData {
                corpus: corpus.clone(),
                transfers: None,
            },
            test: SplitData { corpus, transfers: None },
            embeddings: None,
        };
        let out = run_experiment(&config, &data).unwrap();
        assert_eq!(out.report.per_seed.len(), 1);
        assert_eq!(out.report.mean.f1, out.report.per_seed[0].f1);
        assert_eq!(out.report.per_seed[0].f1, 1.0);
        assert!(out.report.transfer.is_none());
        let curve = &out.report.per_seed[0].curve;
        assert!(curve.windows(2).all(|w| w[1].lr <= w[0].lr));
        let best = curve.iter().map(|r| r.dev_f1.unwrap()).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(curve[out.report.per_seed[0].best_epoch - 1].dev_f1, Some(best));

        let again = run_experiment(&config, &data).unwrap();
        assert_eq!(out.report, again.report);
    }

    #[test]
    fn evaluation_is_pure() {
        let mut rng = seeded_rng(5);
        let mut t = lookup_tagger(0, &mut rng);
        randomize_crf(&mut t, &mut rng);
        let exs = vec![Example {
            input: ExampleInput::Ids(vec![2, 3, 4, 2]),
            labels: vec![0, 2, 3, 1],
            transfer: None,
        }];
        assert_eq!(t.evaluate(&exs).unwrap(), t.evaluate(&exs).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        for bad in [
            ExperimentConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            ExperimentConfig {
                anneal_patience: 0,
                ..Default::default()
            },
            ExperimentConfig {
                anneal_factor: 1.0,
                ..Default::default()
            },
            ExperimentConfig {
                batch_size: 10,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn alignment_count_mismatch_names_sentence() {
        let corpus = memorization_corpus();
        let transfers = vec![Some(Matrix::zeros(3, 2)), Some(Matrix::zeros(5, 2))];
        let tags = TagSet::from_corpora(&[&corpus]);
        let vocab = build_vocab(&corpus, 1);
        let err = build_examples(&corpus, &tags, Some(&vocab), Some(&transfers), 2, false).unwrap_err();
        assert!(matches!(err, Error::Data { index: 2, .. }));
        let transfers: Vec<Option<Matrix>> = (0..10).map(|_| Some(Matrix::zeros(3, 2))).collect();
        let err = build_examples(&corpus, &tags, Some(&vocab), Some(&transfers), 2, false).unwrap_err();
        assert!(matches!(err, Error::Data { index: 1, .. }));
    }
}
