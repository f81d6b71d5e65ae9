//! The high-resource-side NER model: a bidirectional character language
//! model for contextual word vectors, a static embedding table, and a
//! BiLSTM-CRF trained on top. Once frozen it only serves hidden states.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::corpus::{convert_scheme, EmbeddingTable, LabeledCorpus, Tag, TagSet};
use crate::crf::{viterbi, log_potentials, CrfParams};
use crate::error::{shape_err, Error, Result};
use crate::numerics::{dot, ln, seeded_rng, softmax, sqrt, Matrix, Rng};
use crate::seqmodel::{bilstm_encode, lstm_backward, lstm_forward, GateMode, LstmParams, LstmState};
use crate::training::{sgd_train, EpochRecord, Example, ExampleInput, ExperimentConfig, InputLayer, Tagger};

/// Marks sentence edges in the rendered character stream.
pub const BOUNDARY_CHAR: char = '\n';
/// Stands in for characters never seen while building the vocabulary.
pub const UNKNOWN_CHAR: char = '\u{fffd}';

/// Character inventory: boundary at 0, unknown at 1, the rest sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
}

impl CharVocab {
    pub const BOUNDARY: usize = 0;
    pub const UNKNOWN: usize = 1;

    pub fn from_text<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen: Vec<char> = lines.into_iter().flat_map(|l| l.chars()).collect();
        seen.sort_unstable();
        seen.dedup();
        Self::from_chars(seen)
    }

    /// Reserved symbols are added (and deduplicated) automatically.
    pub fn from_chars(chars: impl IntoIterator<Item = char>) -> Self {
        let mut rest: Vec<char> = chars.into_iter().filter(|&c| c != BOUNDARY_CHAR && c != UNKNOWN_CHAR).collect();
        rest.sort_unstable();
        rest.dedup();
        let mut all = vec![BOUNDARY_CHAR, UNKNOWN_CHAR];
        all.extend(rest);
        Self { chars: all }
    }

    pub fn index(&self, c: char) -> usize {
        if c == BOUNDARY_CHAR {
            return Self::BOUNDARY;
        }
        self.chars[2..].binary_search(&c).map_or(Self::UNKNOWN, |i| i + 2)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Boundary-delimited character ids of one line of text.
    pub fn encode_line(&self, line: &str) -> Vec<usize> {
        let mut ids = vec![Self::BOUNDARY];
        ids.extend(line.chars().map(|c| self.index(c)));
        ids.push(Self::BOUNDARY);
        ids
    }
}

/// One direction of the character LM: an LSTM over one-hot characters and
/// a softmax projection predicting the next character.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLmDirection {
    pub lstm: LstmParams,
    /// `V x H`.
    pub proj: Matrix,
    pub proj_bias: Vec<f64>,
}

impl CharLmDirection {
    fn init(vocab: usize, hidden: usize, rng: &mut Rng) -> Self {
        let lstm = LstmParams::init(vocab, hidden, GateMode::PostSigmoid, rng);
        let proj = Matrix::uniform(vocab, hidden, sqrt(6.0 / (vocab + hidden) as f64), rng);
        Self {
            lstm,
            proj,
            proj_bias: vec![0.0; vocab],
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            lstm: self.lstm.zeros_like(),
            proj: Matrix::zeros(self.proj.rows(), self.proj.cols()),
            proj_bias: vec![0.0; self.proj_bias.len()],
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.lstm.slices().into();
        out.push(self.proj.as_slice());
        out.push(&self.proj_bias);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.lstm.slices_mut().into();
        out.push(self.proj.as_mut_slice());
        out.push(&mut self.proj_bias);
        out
    }

    /// Summed next-character cross-entropy over `ids` (scanned right to left
    /// when `reverse`) with gradients added into `grad`; returns the loss
    /// and the number of predictions.
    fn loss_and_grad(&self, ids: &[usize], reverse: bool, grad: &mut Self) -> Result<(f64, usize)> {
        let v = self.proj.rows();
        let x = one_hot(ids, v);
        let (out, trace) = lstm_forward(&x, &self.lstm, &LstmState::zeros(self.lstm.hidden()), reverse)?;
        let mut d_out = Matrix::zeros(out.rows(), out.cols());
        let mut loss = 0.0;
        let steps = ids.len() - 1;
        for s in 0..steps {
            let (t, next) = if reverse { (s + 1, s) } else { (s, s + 1) };
            let r = out.row(t);
            let mut logits = self.proj.matvec(r)?;
            logits.iter_mut().zip(&self.proj_bias).for_each(|(l, b)| *l += b);
            let mut probs = softmax(&logits)?;
            loss -= ln(probs[ids[next]]);
            probs[ids[next]] -= 1.0;
            grad.proj.add_outer(&probs, r);
            grad.proj_bias.iter_mut().zip(&probs).for_each(|(g, p)| *g += p);
            self.proj.matvec_t_acc(&probs, d_out.row_mut(t));
        }
        lstm_backward(&trace, &d_out, &self.lstm, &mut grad.lstm);
        Ok((loss, steps))
    }
}

fn one_hot(ids: &[usize], v: usize) -> Matrix {
    let mut x = Matrix::zeros(ids.len(), v);
    for (t, &id) in ids.iter().enumerate() {
        x.set(t, id, 1.0);
    }
    x
}

/// Forward and backward character language models over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLm {
    pub vocab: CharVocab,
    pub forward: CharLmDirection,
    pub backward: CharLmDirection,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CharLmConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Global gradient-norm cap per update.
    pub clip: f64,
    pub seed: u64,
}

impl Default for CharLmConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 5,
            learning_rate: 0.5,
            clip: 5.0,
            seed: 1,
        }
    }
}

impl CharLm {
    pub fn init(vocab: CharVocab, hidden: usize, rng: &mut Rng) -> Self {
        let v = vocab.len();
        let forward = CharLmDirection::init(v, hidden, rng);
        let backward = CharLmDirection::init(v, hidden, rng);
        Self { vocab, forward, backward }
    }

    pub fn hidden(&self) -> usize {
        self.forward.lstm.hidden()
    }

    /// Mean per-character cross-entropy of both directions on one line.
    pub fn line_loss(&self, line: &str) -> Result<f64> {
        let ids = self.vocab.encode_line(line);
        let (f, n) = self.forward.loss_and_grad(&ids, false, &mut self.forward.zeros_like())?;
        let (b, _) = self.backward.loss_and_grad(&ids, true, &mut self.backward.zeros_like())?;
        Ok((f + b) / (2 * n) as f64)
    }

    /// Contextual vectors `[forward ; backward]`, one row (`2 H`) per token.
    ///
    /// Tokens are rendered with single spaces between them and a boundary
    /// symbol at each end. The forward half is the state after the character
    /// that follows the word; the backward half is the state after the
    /// character that precedes it.
    pub fn embed(&self, tokens: &[String]) -> Result<Matrix> {
        if tokens.is_empty() {
            return Err(Error::Domain("cannot embed an empty sentence".into()));
        }
        let mut ids = vec![CharVocab::BOUNDARY];
        let mut spans = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if i > 0 {
                ids.push(self.vocab.index(' '));
            }
            let start = ids.len();
            ids.extend(tok.chars().map(|c| self.vocab.index(c)));
            spans.push((start, ids.len() - 1));
        }
        ids.push(CharVocab::BOUNDARY);
        let x = one_hot(&ids, self.vocab.len());
        let h = self.hidden();
        let (fwd, _) = lstm_forward(&x, &self.forward.lstm, &LstmState::zeros(h), false)?;
        let (bwd, _) = lstm_forward(&x, &self.backward.lstm, &LstmState::zeros(h), true)?;
        let mut out = Matrix::zeros(tokens.len(), 2 * h);
        for (i, &(start, end)) in spans.iter().enumerate() {
            let row = out.row_mut(i);
            row[..h].copy_from_slice(fwd.row(end + 1));
            row[h..].copy_from_slice(bwd.row(start - 1));
        }
        Ok(out)
    }
}

fn clip_and_step(params: &mut CharLm, grads: &CharLm, lr: f64, clip: f64) {
    let norm_sq: f64 = grads
        .forward
        .slices()
        .into_iter()
        .chain(grads.backward.slices())
        .map(|s| dot(s, s))
        .sum();
    let norm = sqrt(norm_sq);
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (p, g) in params
        .forward
        .slices_mut()
        .into_iter()
        .chain(params.backward.slices_mut())
        .zip(grads.forward.slices().into_iter().chain(grads.backward.slices()))
    {
        p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * scale * g);
    }
}

/// Trains both directions by next-character cross-entropy, one SGD update
/// per line (lines shuffled each epoch). Returns the model and the mean
/// per-character loss of every epoch.
pub fn train_charlm(lines: &[String], config: &CharLmConfig) -> Result<(CharLm, Vec<f64>)> {
    if lines.iter().all(|l| l.is_empty()) {
        return Err(Error::Domain("character LM corpus is empty".into()));
    }
    if config.hidden == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::Domain("character LM needs a positive hidden size and learning rate".into()));
    }
    let mut rng = seeded_rng(config.seed);
    let vocab = CharVocab::from_text(lines.iter().map(String::as_str).chain([" "]));
    let mut model = CharLm::init(vocab, config.hidden, &mut rng);
    let mut order: Vec<usize> = (0..lines.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for &i in &order {
            let ids = model.vocab.encode_line(&lines[i]);
            let mut grads = CharLm {
                vocab: model.vocab.clone(),
                forward: model.forward.zeros_like(),
                backward: model.backward.zeros_like(),
            };
            let (f, n) = model.forward.loss_and_grad(&ids, false, &mut grads.forward)?;
            let (b, _) = model.backward.loss_and_grad(&ids, true, &mut grads.backward)?;
            if !(f + b).is_finite() {
                return Err(Error::Diverged {
                    epoch: losses.len() + 1,
                    batch: i + 1,
                    learning_rate: config.learning_rate,
                });
            }
            total += f + b;
            count += 2 * n;
            let per = 1.0 / n as f64;
            for s in grads.forward.slices_mut().into_iter().chain(grads.backward.slices_mut()) {
                s.iter_mut().for_each(|g| *g *= per);
            }
            clip_and_step(&mut model, &grads, config.learning_rate, config.clip);
        }
        losses.push(total / count as f64);
    }
    Ok((model, losses))
}

/// A trainable source-side tagger over `[char LM ; static]` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NerModel {
    pub char_lm: CharLm,
    pub static_table: EmbeddingTable,
    pub tagger: Tagger,
}

fn source_embed_parts(char_lm: &CharLm, table: &EmbeddingTable, tokens: &[String]) -> Result<Matrix> {
    let ctx = char_lm.embed(tokens)?;
    let mut stat = Matrix::zeros(tokens.len(), table.dim());
    for (i, tok) in tokens.iter().enumerate() {
        stat.row_mut(i).copy_from_slice(table.vector(tok));
    }
    ctx.hconcat(&stat)
}

impl NerModel {
    pub fn source_embed(&self, tokens: &[String]) -> Result<Matrix> {
        source_embed_parts(&self.char_lm, &self.static_table, tokens)
    }

    pub fn freeze(self) -> FrozenNerModel {
        FrozenNerModel {
            char_lm: self.char_lm,
            static_table: self.static_table,
            forward: self.tagger.forward,
            backward: self.tagger.backward,
            crf: self.tagger.crf,
            tags: self.tagger.tags,
        }
    }
}

/// Trains the source tagger with the char LM and static table held fixed.
pub fn train_source_model(
    corpus: &LabeledCorpus,
    char_lm: CharLm,
    static_table: EmbeddingTable,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(NerModel, Vec<EpochRecord>)> {
    let corpus = convert_scheme(corpus, config.scheme);
    let tags = TagSet::from_corpora(&[&corpus]);
    let mut examples = Vec::with_capacity(corpus.len());
    for s in &corpus.sentences {
        let feats = source_embed_parts(&char_lm, &static_table, &s.tokens)?;
        examples.push(Example {
            input: ExampleInput::Features(feats),
            labels: tags.encode(&s.tags)?,
            transfer: None,
        });
    }
    let dim = 2 * char_lm.hidden() + static_table.dim();
    let mut rng = seeded_rng(seed);
    let tagger = Tagger::new(InputLayer::Features { dim }, config.hidden, tags, 0, config.gate_mode, config.crf_mode, &mut rng);
    let outcome = sgd_train(tagger, &examples, &[], config, &mut rng)?;
    Ok((
        NerModel {
            char_lm,
            static_table,
            tagger: outcome.model,
        },
        outcome.curve,
    ))
}

/// The source model after freezing. Fields are private and only borrowed
/// out, so nothing downstream can change a parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNerModel {
    char_lm: CharLm,
    static_table: EmbeddingTable,
    forward: LstmParams,
    backward: LstmParams,
    crf: CrfParams,
    tags: TagSet,
}

impl FrozenNerModel {
    /// Reassembles a frozen model, checking that the parts fit together.
    pub fn from_parts(
        char_lm: CharLm,
        static_table: EmbeddingTable,
        forward: LstmParams,
        backward: LstmParams,
        crf: CrfParams,
        tags: TagSet,
    ) -> Result<Self> {
        let dim = 2 * char_lm.hidden() + static_table.dim();
        if forward.input_dim() != dim || backward.input_dim() != dim {
            return Err(shape_err("source encoder input", format!("{dim}"), format!("{}", forward.input_dim())));
        }
        if crf.dim() != forward.hidden() + backward.hidden() || crf.num_labels() != tags.len() {
            return Err(shape_err(
                "source CRF",
                format!("{} labels over {} features", tags.len(), forward.hidden() + backward.hidden()),
                format!("{} labels over {} features", crf.num_labels(), crf.dim()),
            ));
        }
        if char_lm.forward.proj.rows() != char_lm.vocab.len() || char_lm.backward.lstm.hidden() != char_lm.hidden() {
            return Err(shape_err("character LM", "matching directions", "mismatched directions"));
        }
        Ok(Self {
            char_lm,
            static_table,
            forward,
            backward,
            crf,
            tags,
        })
    }

    pub fn is_frozen(&self) -> bool {
        true
    }

    pub fn char_lm(&self) -> &CharLm {
        &self.char_lm
    }

    pub fn static_table(&self) -> &EmbeddingTable {
        &self.static_table
    }

    pub fn encoder(&self) -> (&LstmParams, &LstmParams) {
        (&self.forward, &self.backward)
    }

    pub fn crf(&self) -> &CrfParams {
        &self.crf
    }

    pub fn tags(&self) -> &TagSet {
        &self.tags
    }

    /// Width of the hidden states, `2 H`.
    pub fn state_dim(&self) -> usize {
        self.forward.hidden() + self.backward.hidden()
    }

    pub fn charlm_embed(&self, tokens: &[String]) -> Result<Matrix> {
        self.char_lm.embed(tokens)
    }

    /// `[char LM ; static]` per token.
    pub fn source_embed(&self, tokens: &[String]) -> Result<Matrix> {
        source_embed_parts(&self.char_lm, &self.static_table, tokens)
    }

    /// `n x 2H` BiLSTM outputs over [`Self::source_embed`].
    pub fn english_hidden_states(&self, tokens: &[String]) -> Result<Matrix> {
        let x = self.source_embed(tokens)?;
        let init = (LstmState::zeros(self.forward.hidden()), LstmState::zeros(self.backward.hidden()));
        bilstm_encode(&x, &self.forward, &self.backward, &init)
    }

    /// The frozen model's own tag predictions.
    pub fn predict(&self, tokens: &[String]) -> Result<Vec<Tag>> {
        let r = self.english_hidden_states(tokens)?;
        let (path, _) = viterbi(&log_potentials(&r, &self.crf)?);
        Ok(self.tags.decode(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocab;
    use crate::numerics::{finite_difference_gradient, max_relative_error};

    fn words(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn toy_lm(hidden: usize, seed: u64) -> CharLm {
        let vocab = CharVocab::from_text(["the cat sat on a mat"]);
        CharLm::init(vocab, hidden, &mut seeded_rng(seed))
    }

    #[test]
    fn vocab_reserves_boundary_and_unknown() {
        let v = CharVocab::from_text(["ba", "ab c"]);
        assert_eq!(v.chars(), &[BOUNDARY_CHAR, UNKNOWN_CHAR, ' ', 'a', 'b', 'c']);
        assert_eq!(v.index('z'), CharVocab::UNKNOWN);
        assert_eq!(v.index('\n'), CharVocab::BOUNDARY);
        assert_eq!(v.encode_line("ab"), vec![0, 3, 4, 0]);
    }

    #[test]
    fn embed_shape_and_determinism() {
        let lm = toy_lm(3, 1);
        let toks = words("the cat zzz");
        let a = lm.embed(&toks).unwrap();
        assert_eq!(a.shape(), (3, 6));
        assert_eq!(a, lm.embed(&toks).unwrap());
        assert!(lm.embed(&[]).is_err());
    }

    #[test]
    fn embed_is_causal() {
        let lm = toy_lm(4, 2);
        let a = lm.embed(&words("the cat sat")).unwrap();
        let b = lm.embed(&words("the cat mat")).unwrap();
        // Word 1's forward half reads up to the space after "cat".
        assert_eq!(a.row(1)[..4], b.row(1)[..4]);
        assert_ne!(a.row(1)[4..], b.row(1)[4..]);
        let c = lm.embed(&words("a cat sat")).unwrap();
        assert_eq!(a.row(1)[4..], c.row(1)[4..]);
        assert_ne!(a.row(1)[..4], c.row(1)[..4]);
    }

    #[test]
    fn charlm_gradient_matches_finite_differences() {
        let dir = toy_lm(3, 9).forward;
        let vocab = CharVocab::from_text(["the cat sat on a mat"]);
        let ids = vocab.encode_line("a cat");
        for reverse in [false, true] {
            let mut g = dir.zeros_like();
            dir.loss_and_grad(&ids, reverse, &mut g).unwrap();
            let analytic: Vec<f64> = g.slices().concat();
            let p0: Vec<f64> = dir.slices().concat();
            let numeric = finite_difference_gradient(
                |p| {
                    let mut d = dir.clone();
                    let mut off = 0;
                    for s in d.slices_mut() {
                        s.copy_from_slice(&p[off..off + s.len()]);
                        off += s.len();
                    }
                    d.loss_and_grad(&ids, reverse, &mut d.zeros_like()).unwrap().0
                },
                &p0,
                1e-5,
            )
            .unwrap();
            assert!(max_relative_error(&analytic, &numeric) < 1e-4);
        }
    }

    fn toy_text(chars: usize) -> Vec<String> {
        let words = ["the", "cat", "sat", "on", "a", "mat", "and", "dog", "ran", "to", "it"];
        let mut rng = seeded_rng(11);
        let mut lines = Vec::new();
        let mut n = 0;
        while n < chars {
            let len = 4 + (lines.len() % 5);
            let line: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
            let line = line.join(" ");
            n += line.len() + 1;
            lines.push(line);
        }
        lines
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let text = toy_text(10_000);
        let config = CharLmConfig {
            hidden: 16,
            epochs: 5,
            ..CharLmConfig::default()
        };
        let (lm, losses) = train_charlm(&text, &config).unwrap();
        assert_eq!(losses.len(), 5);
        assert!(losses[4] < losses[0], "{losses:?}");
        let (again, losses2) = train_charlm(&text, &config).unwrap();
        assert_eq!(lm, again);
        assert_eq!(losses, losses2);

        // The same word in two different contexts.
        let a = lm.embed(&words("the cat sat")).unwrap();
        let b = lm.embed(&words("a dog ran to the cat")).unwrap();
        assert_ne!(a.row(1), b.row(5));
    }

    #[test]
    fn single_character_alphabet_is_learned() {
        let text: Vec<String> = (0..4).map(|_| "a".repeat(400)).collect();
        let config = CharLmConfig {
            hidden: 4,
            epochs: 30,
            ..CharLmConfig::default()
        };
        let (lm, losses) = train_charlm(&text, &config).unwrap();
        assert!(*losses.last().unwrap() < 0.05, "{losses:?}");
        assert!(lm.line_loss(&"a".repeat(400)).unwrap() < 0.05);
    }

    fn toy_source(seed: u64) -> FrozenNerModel {
        let mut rng = seeded_rng(seed);
        let lm = toy_lm(2, seed);
        let vocab = Vocab::from_tokens(["the", "cat"]);
        let table = EmbeddingTable::from_entries(vocab, 3, Vec::<(String, Vec<f64>)>::new(), &mut rng).unwrap();
        let tags = TagSet::from_tags([Tag::Outside, Tag::Single("X".into())].iter());
        let tagger = Tagger::new(
            InputLayer::Features { dim: 7 },
            3,
            tags,
            0,
            GateMode::PostSigmoid,
            crate::crf::CrfMode::Pairwise,
            &mut rng,
        );
        NerModel {
            char_lm: lm,
            static_table: table,
            tagger,
        }
        .freeze()
    }

    #[test]
    fn frozen_model_outputs() {
        let m = toy_source(3);
        let toks = words("the cat sat");
        let e = m.source_embed(&toks).unwrap();
        assert_eq!(e.shape(), (3, 7));
        let ctx = m.charlm_embed(&toks).unwrap();
        for i in 0..3 {
            assert_eq!(&e.row(i)[..4], ctx.row(i));
            assert_eq!(&e.row(i)[4..], m.static_table().vector(&toks[i]));
        }
        let r = m.english_hidden_states(&toks).unwrap();
        assert_eq!(r.shape(), (3, 6));
        assert_eq!(r, m.english_hidden_states(&toks).unwrap());
        let (f, b) = m.encoder();
        let init = (LstmState::zeros(3), LstmState::zeros(3));
        assert_eq!(r, bilstm_encode(&e, f, b, &init).unwrap());
        assert!(m.is_frozen());
        assert_eq!(m.predict(&toks).unwrap().len(), 3);
    }

    #[test]
    fn zero_static_table_gives_zero_block() {
        let m = toy_source(4);
        let mut table = m.static_table().clone();
        table.vectors = Matrix::zeros(table.vectors.rows(), 3);
        let (f, b) = m.encoder();
        let z = FrozenNerModel::from_parts(m.char_lm().clone(), table, f.clone(), b.clone(), m.crf().clone(), m.tags().clone()).unwrap();
        let e = z.source_embed(&words("the cat")).unwrap();
        assert!(e.row_iter().all(|r| r[4..].iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn from_parts_rejects_mismatch() {
        let m = toy_source(5);
        let (f, b) = m.encoder();
        let bad = CrfParams::zeros(3, 6, crate::crf::CrfMode::Pairwise);
        assert!(FrozenNerModel::from_parts(m.char_lm().clone(), m.static_table().clone(), f.clone(), b.clone(), bad, m.tags().clone()).is_err());
    }
}
