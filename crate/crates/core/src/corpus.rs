//! Labeled corpora in CoNLL column format, tag schemes, vocabularies, static
//! embedding tables and aligned sentence pairs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::attention::AttentionStack;
use crate::error::{Error, Result};
use crate::eval::extract_spans;
use crate::numerics::{sqrt, Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scheme {
    Bio,
    Bioes,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bio => "BIO",
            Scheme::Bioes => "BIOES",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One position's label: `O` or `<prefix>-<type>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
    End(String),
    Single(String),
}

impl Tag {
    /// Parses a tag under `scheme`; `E-`/`S-` are rejected for BIO.
    pub fn parse(s: &str, scheme: Scheme) -> Option<Tag> {
        if s == "O" {
            return Some(Tag::Outside);
        }
        let (prefix, kind) = s.split_once('-')?;
        if kind.is_empty() {
            return None;
        }
        let kind = kind.to_string();
        match (prefix, scheme) {
            ("B", _) => Some(Tag::Begin(kind)),
            ("I", _) => Some(Tag::Inside(kind)),
            ("E", Scheme::Bioes) => Some(Tag::End(kind)),
            ("S", Scheme::Bioes) => Some(Tag::Single(kind)),
            _ => None,
        }
    }

    pub fn kind(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(k) | Tag::Inside(k) | Tag::End(k) | Tag::Single(k) => Some(k),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(k) => write!(f, "B-{k}"),
            Tag::Inside(k) => write!(f, "I-{k}"),
            Tag::End(k) => write!(f, "E-{k}"),
            Tag::Single(k) => write!(f, "S-{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<String>, tags: Vec<Tag>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != tags.len() {
            return Err(Error::Domain(format!(
                "sentence needs equal, non-zero token and tag counts (got {} and {})",
                tokens.len(),
                tags.len()
            )));
        }
        Ok(Self { tokens, tags })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub sentences: Vec<LabeledSentence>,
    pub scheme: Scheme,
}

impl LabeledCorpus {
    pub fn new(sentences: Vec<LabeledSentence>, scheme: Scheme) -> Self {
        Self { sentences, scheme }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Canonical CoNLL rendering: `token SP tag` lines, one blank line after
    /// every sentence.
    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            for (tok, tag) in s.tokens.iter().zip(&s.tags) {
                out.push_str(tok);
                out.push(' ');
                out.push_str(&tag.to_string());
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }

    pub fn tag_sequences(&self) -> Vec<Vec<Tag>> {
        self.sentences.iter().map(|s| s.tags.clone()).collect()
    }
}

/// Parses CoNLL column text: one token per line, whitespace-separated
/// columns with the tag last, blank lines between sentences. Columns between
/// the first and the last are ignored, as are `-DOCSTART-` lines.
pub fn parse_conll(text: &str, scheme: Scheme) -> Result<LabeledCorpus> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut flush = |tokens: &mut Vec<String>, tags: &mut Vec<Tag>| {
        if !tokens.is_empty() {
            sentences.push(LabeledSentence {
                tokens: core::mem::take(tokens),
                tags: core::mem::take(tags),
            });
        }
    };
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags);
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols[0] == "-DOCSTART-" {
            continue;
        }
        if cols.len() < 2 {
            return Err(Error::Format {
                line: line_no,
                message: "expected at least two columns (token and tag)".into(),
            });
        }
        let raw = cols[cols.len() - 1];
        let tag = Tag::parse(raw, scheme).ok_or_else(|| Error::Tag {
            line: line_no,
            tag: raw.into(),
            scheme: scheme.name(),
        })?;
        tokens.push(cols[0].to_string());
        tags.push(tag);
    }
    flush(&mut tokens, &mut tags);
    Ok(LabeledCorpus { sentences, scheme })
}

/// Rewrites a tag sequence in `target` from its spans. Malformed input is
/// repaired by [`extract_spans`], so the span set is preserved exactly.
pub fn convert_tags(tags: &[Tag], target: Scheme) -> Vec<Tag> {
    let mut out = vec![Tag::Outside; tags.len()];
    for span in extract_spans(tags) {
        let k = &span.kind;
        if span.start == span.end {
            out[span.start] = match target {
                Scheme::Bio => Tag::Begin(k.clone()),
                Scheme::Bioes => Tag::Single(k.clone()),
            };
            continue;
        }
        out[span.start] = Tag::Begin(k.clone());
        for t in &mut out[span.start + 1..span.end] {
            *t = Tag::Inside(k.clone());
        }
        out[span.end] = match target {
            Scheme::Bio => Tag::Inside(k.clone()),
            Scheme::Bioes => Tag::End(k.clone()),
        };
    }
    out
}

pub fn convert_scheme(corpus: &LabeledCorpus, target: Scheme) -> LabeledCorpus {
    LabeledCorpus {
        sentences: corpus
            .sentences
            .iter()
            .map(|s| LabeledSentence {
                tokens: s.tokens.clone(),
                tags: convert_tags(&s.tags, target),
            })
            .collect(),
        scheme: target,
    }
}

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token vocabulary. Index 0 is padding, index 1 is the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;

    /// A vocabulary with only the reserved entries.
    pub fn new() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: BTreeMap::new(),
        };
        v.insert(PAD_TOKEN);
        v.insert(UNK_TOKEN);
        v
    }

    /// Adds `token` if absent and returns its index.
    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::new();
        for t in tokens {
            v.insert(t);
        }
        v
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or [`Vocab::UNK`].
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(Self::UNK)
    }

    pub fn token(&self, i: usize) -> Option<&str> {
        self.tokens.get(i).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

/// Tokens with frequency `>= min_count`, ordered by frequency (descending)
/// and then lexicographically, after the reserved entries.
pub fn build_vocab(corpus: &LabeledCorpus, min_count: usize) -> Vocab {
    let min_count = min_count.max(1);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &corpus.sentences {
        for t in &s.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    // BTreeMap iteration is already lexicographic; a stable sort keeps it within equal counts.
    ranked.sort_by_key(|&(_, c)| core::cmp::Reverse(c));
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t))
}

/// A static word-vector table aligned with a [`Vocab`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub vectors: Matrix,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    /// Builds a table from `(word, vector)` entries.
    ///
    /// In-vocabulary words get their file vector; every other row is drawn
    /// uniformly from `[-sqrt(3/dim), sqrt(3/dim)]`. The unknown row is the mean
    /// of the loaded rows (or random when nothing was loaded) and padding is
    /// zero. Entries for words outside the vocabulary are skipped; the first
    /// occurrence of a repeated word wins.
    pub fn from_entries<I, S>(vocab: Vocab, dim: usize, entries: I, rng: &mut Rng) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        if dim == 0 {
            return Err(Error::Domain("embedding dimension must be positive".into()));
        }
        let bound = sqrt(3.0 / dim as f64);
        let mut vectors = Matrix::zeros(vocab.len(), dim);
        for r in 0..vocab.len() {
            for v in vectors.row_mut(r) {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        vectors.row_mut(Vocab::PAD).iter_mut().for_each(|v| *v = 0.0);

        let mut loaded = vec![false; vocab.len()];
        let mut mean = vec![0.0; dim];
        let mut n_loaded = 0usize;
        for (line, (word, vec)) in entries.into_iter().enumerate() {
            if vec.len() != dim {
                return Err(Error::Format {
                    line: line + 1,
                    message: format!("expected {dim} values, found {}", vec.len()),
                });
            }
            if let Some(i) = vec.iter().position(|v| !v.is_finite()) {
                return Err(Error::Format {
                    line: line + 1,
                    message: format!("value {} is not finite", i + 1),
                });
            }
            let Some(idx) = vocab.get(word.as_ref()) else { continue };
            if idx == Vocab::PAD || loaded[idx] {
                continue;
            }
            loaded[idx] = true;
            n_loaded += 1;
            vectors.row_mut(idx).copy_from_slice(&vec);
            mean.iter_mut().zip(&vec).for_each(|(m, v)| *m += v);
        }
        if n_loaded > 0 && !loaded[Vocab::UNK] {
            mean.iter_mut().for_each(|m| *m /= n_loaded as f64);
            vectors.row_mut(Vocab::UNK).copy_from_slice(&mean);
        }
        Ok(Self { vocab, vectors })
    }

    pub fn vector(&self, token: &str) -> &[f64] {
        self.vectors.row(self.vocab.lookup(token))
    }
}

/// A low-resource sentence, its translation and the translation attention.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    pub attention: AttentionStack,
}

impl AlignedPair {
    /// Every layer of `attention` must be `|target| x |source|`.
    pub fn new(source_tokens: Vec<String>, target_tokens: Vec<String>, attention: AttentionStack) -> Result<Self> {
        let (n, m) = (target_tokens.len(), source_tokens.len());
        for (l, layer) in attention.layers().iter().enumerate() {
            if layer.shape() != (n, m) {
                return Err(Error::Shape {
                    context: "AlignedPair",
                    expected: format!("layer {} of shape {n}x{m}", l + 1),
                    actual: format!("{}x{}", layer.rows(), layer.cols()),
                });
            }
        }
        Ok(Self {
            source_tokens,
            target_tokens,
            attention,
        })
    }
}

/// Label inventory for a tagger. `O` is always index 0; the remaining tags
/// follow in lexicographic order of their string form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    tags: Vec<Tag>,
    index: BTreeMap<String, usize>,
}

impl TagSet {
    pub fn from_tags<'a>(tags: impl IntoIterator<Item = &'a Tag>) -> Self {
        let mut names: Vec<String> = tags
            .into_iter()
            .filter(|t| **t != Tag::Outside)
            .map(|t| t.to_string())
            .collect();
        names.sort();
        names.dedup();
        let mut all = vec![Tag::Outside];
        all.extend(names.iter().map(|n| Tag::parse(n, Scheme::Bioes).expect("tag parsed before")));
        let index = all.iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
        Self { tags: all, index }
    }

    pub fn from_corpora(corpora: &[&LabeledCorpus]) -> Self {
        Self::from_tags(corpora.iter().flat_map(|c| c.sentences.iter().flat_map(|s| s.tags.iter())))
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: &Tag) -> Result<usize> {
        self.index
            .get(&tag.to_string())
            .copied()
            .ok_or_else(|| Error::Label(tag.to_string()))
    }

    pub fn encode(&self, tags: &[Tag]) -> Result<Vec<usize>> {
        tags.iter().map(|t| self.index_of(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<Tag> {
        ids.iter().map(|&i| self.tags[i].clone()).collect()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;
    use proptest::prelude::*;

    fn bio(s: &[&str]) -> Vec<Tag> {
        s.iter().map(|t| Tag::parse(t, Scheme::Bio).unwrap()).collect()
    }

    fn bioes(s: &[&str]) -> Vec<Tag> {
        s.iter().map(|t| Tag::parse(t, Scheme::Bioes).unwrap()).collect()
    }

    #[test]
    fn parse_examples() {
        let c = parse_conll("John B-PER\n. O\n\n", Scheme::Bio).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.sentences[0].tokens, vec!["John", "."]);
        assert_eq!(c.sentences[0].tags, bio(&["B-PER", "O"]));

        assert!(parse_conll("", Scheme::Bio).unwrap().is_empty());

        assert_eq!(
            parse_conll("John\n", Scheme::Bio).unwrap_err(),
            Error::Format {
                line: 1,
                message: "expected at least two columns (token and tag)".into()
            }
        );
    }

    #[test]
    fn parse_errors_and_extra_columns() {
        let err = parse_conll("a O\nb E-PER\n", Scheme::Bio).unwrap_err();
        assert!(matches!(err, Error::Tag { line: 2, .. }));
        assert!(parse_conll("a X-PER\n", Scheme::Bioes).is_err());
        assert!(parse_conll("a B-\n", Scheme::Bioes).is_err());

        let c = parse_conll("-DOCSTART- -X- O\n\nEU NNP B-NP B-ORG\nrejects VBZ B-VP O\n", Scheme::Bio).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.sentences[0].tokens, vec!["EU", "rejects"]);
        assert_eq!(c.sentences[0].tags, bio(&["B-ORG", "O"]));

        let c = parse_conll("a\tO\r\nb\tS-LOC\r\n\r\n\r\nc O", Scheme::Bioes).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn convert_examples() {
        assert_eq!(convert_tags(&bio(&["B-PER", "I-PER"]), Scheme::Bioes), bioes(&["B-PER", "E-PER"]));
        assert_eq!(convert_tags(&bio(&["B-LOC"]), Scheme::Bioes), bioes(&["S-LOC"]));
        assert_eq!(convert_tags(&bio(&["O", "O"]), Scheme::Bioes), bioes(&["O", "O"]));
        assert_eq!(
            convert_tags(&bio(&["O", "I-PER", "I-PER", "B-PER"]), Scheme::Bioes),
            bioes(&["O", "B-PER", "E-PER", "S-PER"])
        );
    }

    #[test]
    fn vocab_examples() {
        let corpus = LabeledCorpus::new(
            vec![LabeledSentence::new(
                vec!["a".into(), "b".into(), "a".into()],
                vec![Tag::Outside; 3],
            )
            .unwrap()],
            Scheme::Bio,
        );
        let v = build_vocab(&corpus, 2);
        assert_eq!(v.tokens(), &[PAD_TOKEN, UNK_TOKEN, "a"]);
        let v = build_vocab(&corpus, 1);
        assert_eq!(v.tokens(), &[PAD_TOKEN, UNK_TOKEN, "a", "b"]);
        assert_eq!(v.lookup("zzz"), Vocab::UNK);
        let v = build_vocab(&LabeledCorpus::new(vec![], Scheme::Bio), 1);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn embedding_table_rules() {
        let vocab = Vocab::from_tokens(["x", "y"]);
        let entries = vec![("x", vec![1.0, 2.0]), ("y", vec![3.0, 4.0]), ("z", vec![9.0, 9.0])];
        let t = EmbeddingTable::from_entries(vocab.clone(), 2, entries, &mut seeded_rng(1)).unwrap();
        assert_eq!(t.vector("x"), &[1.0, 2.0]);
        assert_eq!(t.vector("y"), &[3.0, 4.0]);
        assert_eq!(t.vector("unseen"), &[2.0, 3.0]);
        assert_eq!(t.vectors.row(Vocab::PAD), &[0.0, 0.0]);

        let none: Vec<(&str, Vec<f64>)> = vec![];
        let a = EmbeddingTable::from_entries(vocab.clone(), 4, none.clone(), &mut seeded_rng(5)).unwrap();
        let b = EmbeddingTable::from_entries(vocab.clone(), 4, none, &mut seeded_rng(5)).unwrap();
        assert_eq!(a, b);
        let bound = sqrt(3.0 / 4.0);
        assert!(a.vectors.as_slice().iter().all(|v| v.abs() <= bound));

        let bad = vec![("x", vec![1.0])];
        let err = EmbeddingTable::from_entries(vocab, 2, bad, &mut seeded_rng(1)).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn tagset_orders_outside_first() {
        let tags = bioes(&["S-PER", "O", "B-LOC", "E-LOC"]);
        let ts = TagSet::from_tags(&tags);
        assert_eq!(ts.tags()[0], Tag::Outside);
        assert_eq!(ts.len(), 4);
        let ids = ts.encode(&tags).unwrap();
        assert_eq!(ts.decode(&ids), tags);
        assert!(ts.index_of(&Tag::Single("ORG".into())).is_err());
    }

    fn arb_bio_tags() -> impl Strategy<Value = Vec<Tag>> {
        let tag = prop_oneof![
            Just(Tag::Outside),
            Just(Tag::Begin("PER".into())),
            Just(Tag::Inside("PER".into())),
            Just(Tag::Begin("LOC".into())),
            Just(Tag::Inside("LOC".into())),
        ];
        proptest::collection::vec(tag, 1..12)
    }

    proptest! {
        #[test]
        fn conversion_preserves_spans(tags in arb_bio_tags()) {
            let spans = extract_spans(&tags);
            let bioes = convert_tags(&tags, Scheme::Bioes);
            prop_assert_eq!(extract_spans(&bioes), spans.clone());
            let back = convert_tags(&bioes, Scheme::Bio);
            prop_assert_eq!(extract_spans(&back), spans);
            // Normalisation is idempotent.
            prop_assert_eq!(convert_tags(&back, Scheme::Bio), back.clone());
        }

        #[test]
        fn conll_text_round_trip(tags in arb_bio_tags(), n in 1usize..4) {
            let sentences: Vec<LabeledSentence> = (0..n)
                .map(|k| LabeledSentence::new(
                    (0..tags.len()).map(|i| format!("w{k}_{i}")).collect(),
                    tags.clone(),
                ).unwrap())
                .collect();
            let corpus = LabeledCorpus::new(sentences, Scheme::Bio);
            let text = corpus.to_conll();
            let parsed = parse_conll(&text, Scheme::Bio).unwrap();
            prop_assert_eq!(parsed.to_conll(), text);
            prop_assert_eq!(parsed, corpus);
        }
    }
}
