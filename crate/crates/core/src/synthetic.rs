//! A synthetic bilingual NER world for end-to-end checks.
//!
//! The high-resource side has entity words whose static embeddings cluster
//! by type, so a source model trained on it generalizes to unseen names.
//! Low-resource sentences are word-by-word translations with permuted
//! chunk order and inserted particles; sentence templates accept any entity
//! type in any slot, so the low-resource context alone does not reveal the
//! type. Attention stacks put `1 - ε` of each row on the true alignment and
//! spread `ε` at random, with `ε` given per layer.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::attention::AttentionStack;
use crate::corpus::{AlignedPair, LabeledCorpus, LabeledSentence, Scheme, Tag};
use crate::error::Result;
use crate::numerics::{seeded_rng, Matrix, Rng};

pub const ENTITY_TYPES: [&str; 3] = ["LOC", "ORG", "PER"];

const TEMPLATES: [&str; 14] = [
    "{} met {} in the morning",
    "yesterday {} spoke about {}",
    "the report mentions {}",
    "{} was seen near {}",
    "people talked about {} and {}",
    "news from {} reached {}",
    "everyone knows {}",
    "{} is famous",
    "they wrote to {} last week",
    "nothing happened here today",
    "a letter about {} came from {}",
    "we heard that {} likes {}",
    "{} and {} were in the news",
    "the old story of {} is long",
];

const PARTICLES: [&str; 3] = ["na", "ko", "zi"];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SyntheticConfig {
    pub seed: u64,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    /// Sentences of the high-resource NER corpus.
    pub source_sentences: usize,
    /// Lines of plain high-resource text for the character LM.
    pub charlm_lines: usize,
    /// Distinct entity words per type.
    pub entities_per_type: usize,
    /// Fraction of each type's entity words that occur in the source corpus.
    pub source_coverage: f64,
    pub static_dim: usize,
    /// Spread `ε` of every attention layer; the length is the stack depth.
    pub attention_noise: Vec<f64>,
    /// Copy the first layer into every layer.
    pub identical_layers: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            train: 50,
            dev: 50,
            test: 500,
            source_sentences: 300,
            charlm_lines: 200,
            entities_per_type: 60,
            source_coverage: 0.6,
            static_dim: 16,
            attention_noise: vec![0.6, 0.35, 0.1],
            identical_layers: false,
        }
    }
}

/// Everything needed to train a source model and run target experiments.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    /// High-resource static word vectors.
    pub static_entries: Vec<(String, Vec<f64>)>,
    pub source_corpus: LabeledCorpus,
    pub charlm_text: Vec<String>,
    pub train: LabeledCorpus,
    pub dev: LabeledCorpus,
    pub test: LabeledCorpus,
    pub train_align: Vec<AlignedPair>,
    pub dev_align: Vec<AlignedPair>,
    pub test_align: Vec<AlignedPair>,
}

struct Lexicon {
    entities: BTreeMap<&'static str, Vec<String>>,
    translation: BTreeMap<String, String>,
}

fn pseudo_word(rng: &mut Rng, used: &mut BTreeSet<String>) -> String {
    const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "sh"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    loop {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        if used.insert(w.clone()) {
            return w;
        }
    }
}

fn context_words() -> BTreeSet<&'static str> {
    TEMPLATES.iter().flat_map(|t| t.split(' ')).filter(|w| *w != "{}").collect()
}

fn build_lexicon(config: &SyntheticConfig, rng: &mut Rng) -> Lexicon {
    let mut used: BTreeSet<String> = context_words().into_iter().map(String::from).collect();
    used.extend(PARTICLES.iter().map(|p| String::from(*p)));
    let mut entities = BTreeMap::new();
    for kind in ENTITY_TYPES {
        let names = (0..config.entities_per_type).map(|_| pseudo_word(rng, &mut used)).collect();
        entities.insert(kind, names);
    }
    let mut translation = BTreeMap::new();
    let high: Vec<String> = context_words()
        .into_iter()
        .map(String::from)
        .chain(entities.values().flatten().cloned())
        .collect();
    for w in high {
        let f = pseudo_word(rng, &mut used);
        translation.insert(w, f);
    }
    Lexicon { entities, translation }
}

fn static_vectors(config: &SyntheticConfig, lex: &Lexicon, rng: &mut Rng) -> Vec<(String, Vec<f64>)> {
    let d = config.static_dim;
    let mut out = Vec::new();
    for w in context_words() {
        out.push((String::from(w), (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()));
    }
    for names in lex.entities.values() {
        let centroid: Vec<f64> = (0..d).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        for name in names {
            let v = centroid.iter().map(|c| c + rng.gen_range(-0.3..0.3)).collect();
            out.push((name.clone(), v));
        }
    }
    out
}

/// A high-resource sentence as chunks: `(words, entity type)`.
type Chunks = Vec<(Vec<String>, Option<&'static str>)>;

fn sample_entity(lex: &Lexicon, pool_fraction: f64, rng: &mut Rng) -> (Vec<String>, &'static str) {
    let kind = *ENTITY_TYPES.choose(rng).unwrap();
    let names = &lex.entities[kind];
    let pool = (libm::ceil(names.len() as f64 * pool_fraction) as usize).clamp(1, names.len());
    let len = if rng.gen::<f64>() < 0.3 { 2 } else { 1 };
    let words = (0..len).map(|_| names[rng.gen_range(0..pool)].clone()).collect();
    (words, kind)
}

fn sample_sentence(lex: &Lexicon, pool_fraction: f64, rng: &mut Rng) -> Chunks {
    let template = TEMPLATES.choose(rng).unwrap();
    let mut chunks = Vec::new();
    for w in template.split(' ') {
        if w == "{}" {
            let (words, kind) = sample_entity(lex, pool_fraction, rng);
            chunks.push((words, Some(kind)));
        } else {
            chunks.push((vec![String::from(w)], None));
        }
    }
    chunks
}

fn chunk_tags(words: &[String], kind: Option<&str>) -> Vec<Tag> {
    match kind {
        None => vec![Tag::Outside; words.len()],
        Some(k) => (0..words.len())
            .map(|i| if i == 0 { Tag::Begin(k.into()) } else { Tag::Inside(k.into()) })
            .collect(),
    }
}

fn to_sentence(chunks: &Chunks) -> Result<LabeledSentence> {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for (words, kind) in chunks {
        tags.extend(chunk_tags(words, *kind));
        tokens.extend(words.iter().cloned());
    }
    LabeledSentence::new(tokens, tags)
}

fn noisy_layer(hard: &[usize], m: usize, eps: f64, rng: &mut Rng) -> Matrix {
    let n = hard.len();
    let mut layer = Matrix::zeros(n, m);
    for (j, &k) in hard.iter().enumerate() {
        let noise: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = noise.iter().sum();
        let row = layer.row_mut(j);
        for (c, v) in row.iter_mut().enumerate() {
            *v = eps * noise[c] / total;
        }
        row[k] += 1.0 - eps;
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    layer
}

/// Translates one high-resource sentence: per-chunk word translation,
/// chunk order reversed or pairwise swapped, particles after some
/// entities. Returns the low-resource sentence and its aligned pair.
fn translate(chunks: &Chunks, lex: &Lexicon, config: &SyntheticConfig, rng: &mut Rng) -> Result<(LabeledSentence, AlignedPair)> {
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    if rng.gen::<bool>() {
        order.reverse();
    } else {
        for pair in order.chunks_mut(2) {
            pair.reverse();
        }
    }
    let mut high_pos = Vec::with_capacity(chunks.len());
    let mut pos = 0;
    for (words, _) in chunks {
        high_pos.push(pos);
        pos += words.len();
    }
    let n = pos;
    let mut low_tokens = Vec::new();
    let mut low_tags = Vec::new();
    let mut hard = vec![0usize; n];
    for &c in &order {
        let (words, kind) = &chunks[c];
        for (i, w) in words.iter().enumerate() {
            hard[high_pos[c] + i] = low_tokens.len();
            low_tokens.push(lex.translation[w].clone());
        }
        low_tags.extend(chunk_tags(words, *kind));
        if kind.is_some() && rng.gen::<f64>() < 0.5 {
            low_tokens.push(String::from(*PARTICLES.choose(rng).unwrap()));
            low_tags.push(Tag::Outside);
        }
    }
    let m = low_tokens.len();
    let high_tokens: Vec<String> = chunks.iter().flat_map(|(w, _)| w.iter().cloned()).collect();
    let layers: Vec<Matrix> = if config.identical_layers {
        let eps = config.attention_noise.first().copied().unwrap_or(0.0);
        let layer = noisy_layer(&hard, m, eps, rng);
        vec![layer; config.attention_noise.len().max(1)]
    } else {
        config.attention_noise.iter().map(|&eps| noisy_layer(&hard, m, eps, rng)).collect()
    };
    let stack = AttentionStack::new(layers)?;
    let sentence = LabeledSentence::new(low_tokens.clone(), low_tags)?;
    let pair = AlignedPair::new(low_tokens, high_tokens, stack)?;
    Ok((sentence, pair))
}

fn split(n: usize, lex: &Lexicon, config: &SyntheticConfig, rng: &mut Rng) -> Result<(LabeledCorpus, Vec<AlignedPair>)> {
    let mut sentences = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let chunks = sample_sentence(lex, 1.0, rng);
        let (s, p) = translate(&chunks, lex, config, rng)?;
        sentences.push(s);
        pairs.push(p);
    }
    Ok((LabeledCorpus::new(sentences, Scheme::Bio), pairs))
}

/// Generates the whole world deterministically from `config.seed`.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticWorld> {
    let mut rng = seeded_rng(config.seed);
    let lex = build_lexicon(config, &mut rng);
    let static_entries = static_vectors(config, &lex, &mut rng);

    let source_sentences = (0..config.source_sentences)
        .map(|_| to_sentence(&sample_sentence(&lex, config.source_coverage, &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    let source_corpus = LabeledCorpus::new(source_sentences, Scheme::Bio);

    let charlm_text = (0..config.charlm_lines)
        .map(|_| {
            let chunks = sample_sentence(&lex, 1.0, &mut rng);
            let words: Vec<String> = chunks.into_iter().flat_map(|(w, _)| w).collect();
            words.join(" ")
        })
        .collect();

    let (train, train_align) = split(config.train, &lex, config, &mut rng)?;
    let (dev, dev_align) = split(config.dev, &lex, config, &mut rng)?;
    let (test, test_align) = split(config.test, &lex, config, &mut rng)?;
    Ok(SyntheticWorld {
        static_entries,
        source_corpus,
        charlm_text,
        train,
        dev,
        test,
        train_align,
        dev_align,
        test_align,
    })
}

impl SyntheticWorld {
    /// Source-side vocabulary words: static-table words plus corpus words.
    pub fn source_words(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let corpus_words = self.source_corpus.sentences.iter().flat_map(|s| s.tokens.iter());
        for w in self.static_entries.iter().map(|(w, _)| w).chain(corpus_words) {
            if seen.insert(w.as_str()) {
                out.push(w.as_str());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{select_matrix, to_source_major, AttentionMode};
    use crate::eval::extract_spans;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            train: 5,
            dev: 5,
            test: 20,
            source_sentences: 10,
            charlm_lines: 5,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn deterministic_and_sized() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.test_align, b.test_align);
        assert_eq!(a.train.len(), 5);
        assert_eq!(a.test_align.len(), 20);
        assert_eq!(a.test_align[0].attention.depth(), 3);
    }

    #[test]
    fn hard_alignment_recovers_entities() {
        let w = generate(&small()).unwrap();
        for (s, p) in w.test.sentences.iter().zip(&w.test_align) {
            assert_eq!(s.tokens, p.source_tokens);
            let a = to_source_major(&select_matrix(&p.attention, AttentionMode::Layer(3)).unwrap(), true);
            for span in extract_spans(&s.tags) {
                for j in span.start..=span.end {
                    let row = a.matrix.row(j);
                    let best = (0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b });
                    assert!(!p.target_tokens[best].is_empty());
                }
            }
        }
    }

    #[test]
    fn identical_layers_option() {
        let w = generate(&SyntheticConfig {
            identical_layers: true,
            ..small()
        })
        .unwrap();
        let layers = w.dev_align[0].attention.layers();
        assert!(layers.iter().all(|l| l == &layers[0]));
    }

    #[test]
    fn source_words_cover_static_and_corpus() {
        let w = generate(&small()).unwrap();
        let words = w.source_words();
        assert!(words.contains(&"morning"));
        let n_static = w.static_entries.len();
        assert!(words.len() >= n_static);
    }
}
