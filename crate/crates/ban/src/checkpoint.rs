//! Versioned JSON checkpoints: named tensors with shapes plus a small
//! metadata map. Output is deterministic, so equal models give
//! byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use ban_core::corpus::{EmbeddingTable, Scheme, Tag, TagSet, Vocab};
use ban_core::crf::{CrfMode, CrfParams};
use ban_core::seqmodel::{GateMode, LstmParams};
use ban_core::source_model::{CharLm, CharLmDirection, CharVocab, FrozenNerModel};
use ban_core::training::{InputLayer, Tagger};
use ban_core::Matrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AppError, Result};
use crate::io::{read_text, write_text};

pub const FORMAT: &str = "ban-checkpoint";
pub const VERSION: u32 = 1;

pub const KIND_SOURCE: &str = "source-model";
pub const KIND_TAGGER: &str = "tagger";
pub const KIND_TRANSFER_CACHE: &str = "transfer-cache";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub frozen: bool,
    pub meta: BTreeMap<String, Value>,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn new(kind: &str, frozen: bool) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            kind: kind.into(),
            frozen,
            meta: BTreeMap::new(),
            tensors: Vec::new(),
        }
    }

    pub fn set_meta<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("metadata values always serialize");
        self.meta.insert(key.into(), v);
    }

    pub fn meta<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| AppError::Data(format!("checkpoint is missing metadata `{key}`")))?;
        serde_json::from_value(v.clone()).map_err(|e| AppError::Data(format!("checkpoint metadata `{key}`: {e}")))
    }

    pub fn push_vec(&mut self, name: &str, data: &[f64]) {
        self.tensors.push(Tensor {
            name: name.into(),
            shape: vec![data.len()],
            data: data.to_vec(),
        });
    }

    pub fn push_matrix(&mut self, name: &str, m: &Matrix) {
        self.tensors.push(Tensor {
            name: name.into(),
            shape: vec![m.rows(), m.cols()],
            data: m.as_slice().to_vec(),
        });
    }

    fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| AppError::Data(format!("checkpoint is missing tensor `{name}`")))
    }

    pub fn vec(&self, name: &str) -> Result<Vec<f64>> {
        let t = self.tensor(name)?;
        if t.shape.len() != 1 || t.shape[0] != t.data.len() {
            return Err(AppError::Data(format!("tensor `{name}` has shape {:?}, expected a vector", t.shape)));
        }
        Ok(t.data.clone())
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        let t = self.tensor(name)?;
        match t.shape[..] {
            [r, c] if r * c == t.data.len() => Ok(Matrix::from_vec(r, c, t.data.clone()).expect("size checked")),
            _ => Err(AppError::Data(format!("tensor `{name}` has shape {:?}, expected a matrix", t.shape))),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoints always serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }

    /// Loads a checkpoint and checks format, version and kind.
    pub fn load(path: &Path, kind: &str) -> Result<Self> {
        let text = read_text(path)?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(AppError::Data(format!(
                "{}: unsupported checkpoint {} v{} (expected {FORMAT} v{VERSION})",
                path.display(),
                ck.format,
                ck.version
            )));
        }
        if ck.kind != kind {
            return Err(AppError::Data(format!("{}: checkpoint holds a {}, expected a {kind}", path.display(), ck.kind)));
        }
        Ok(ck)
    }
}

fn push_lstm(ck: &mut Checkpoint, prefix: &str, p: &LstmParams) {
    ck.push_matrix(&format!("{prefix}.w"), &p.w);
    ck.push_matrix(&format!("{prefix}.u"), &p.u);
    ck.push_vec(&format!("{prefix}.b"), &p.b);
}

fn read_lstm(ck: &Checkpoint, prefix: &str, gate_mode: GateMode) -> Result<LstmParams> {
    let w = ck.matrix(&format!("{prefix}.w"))?;
    let u = ck.matrix(&format!("{prefix}.u"))?;
    let b = ck.vec(&format!("{prefix}.b"))?;
    let h = u.cols();
    if w.rows() != 4 * h || u.rows() != 4 * h || b.len() != 4 * h {
        return Err(AppError::Data(format!("LSTM tensors under `{prefix}` have inconsistent shapes")));
    }
    Ok(LstmParams { w, u, b, gate_mode })
}

fn push_crf(ck: &mut Checkpoint, p: &CrfParams) {
    ck.set_meta("crf_mode", p.mode);
    ck.push_vec("crf.w", &p.w);
    ck.push_vec("crf.b", &p.b);
}

fn read_crf(ck: &Checkpoint, num_labels: usize, dim: usize) -> Result<CrfParams> {
    let mode: CrfMode = ck.meta("crf_mode")?;
    CrfParams::from_parts(num_labels, dim, mode, ck.vec("crf.w")?, ck.vec("crf.b")?).map_err(|e| AppError::Core {
        context: "checkpoint CRF".into(),
        source: e,
    })
}

fn tag_strings(tags: &TagSet) -> Vec<String> {
    tags.tags().iter().map(Tag::to_string).collect()
}

fn read_tags(ck: &Checkpoint) -> Result<TagSet> {
    let names: Vec<String> = ck.meta("tags")?;
    let tags = names
        .iter()
        .map(|n| Tag::parse(n, Scheme::Bioes).ok_or_else(|| AppError::Data(format!("checkpoint tag `{n}` is invalid"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(TagSet::from_tags(tags.iter()))
}

fn read_vocab(ck: &Checkpoint, key: &str) -> Result<Vocab> {
    let tokens: Vec<String> = ck.meta(key)?;
    let vocab = Vocab::from_tokens(tokens.iter().map(String::as_str));
    if vocab.len() != tokens.len() {
        return Err(AppError::Data(format!("checkpoint vocabulary `{key}` has duplicates")));
    }
    Ok(vocab)
}

/// Serializes a frozen source model.
pub fn source_to_checkpoint(model: &FrozenNerModel) -> Checkpoint {
    let mut ck = Checkpoint::new(KIND_SOURCE, model.is_frozen());
    let lm = model.char_lm();
    let chars: Vec<String> = lm.vocab.chars().iter().map(char::to_string).collect();
    ck.set_meta("char_vocab", chars);
    ck.set_meta("static_vocab", model.static_table().vocab.tokens());
    ck.set_meta("tags", tag_strings(model.tags()));
    let (fwd, bwd) = model.encoder();
    ck.set_meta("gate_mode", fwd.gate_mode);
    for (name, dir) in [("forward", &lm.forward), ("backward", &lm.backward)] {
        push_lstm(&mut ck, &format!("charlm.{name}.lstm"), &dir.lstm);
        ck.push_matrix(&format!("charlm.{name}.proj"), &dir.proj);
        ck.push_vec(&format!("charlm.{name}.proj_bias"), &dir.proj_bias);
    }
    ck.push_matrix("static.vectors", &model.static_table().vectors);
    push_lstm(&mut ck, "encoder.forward", fwd);
    push_lstm(&mut ck, "encoder.backward", bwd);
    push_crf(&mut ck, model.crf());
    ck
}

/// Rebuilds a frozen source model; checkpoints not marked frozen are
/// rejected.
pub fn source_from_checkpoint(ck: &Checkpoint) -> Result<FrozenNerModel> {
    if !ck.frozen {
        return Err(AppError::Data("source checkpoint is not marked frozen".into()));
    }
    let chars: Vec<String> = ck.meta("char_vocab")?;
    let chars = chars
        .iter()
        .map(|s| {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(AppError::Data(format!("char vocabulary entry {s:?} is not one character"))),
            }
        })
        .collect::<Result<Vec<char>>>()?;
    let vocab = CharVocab::from_chars(chars.iter().copied());
    if vocab.chars() != chars.as_slice() {
        return Err(AppError::Data("char vocabulary is not in canonical order".into()));
    }
    let direction = |name: &str| -> Result<CharLmDirection> {
        Ok(CharLmDirection {
            lstm: read_lstm(ck, &format!("charlm.{name}.lstm"), GateMode::PostSigmoid)?,
            proj: ck.matrix(&format!("charlm.{name}.proj"))?,
            proj_bias: ck.vec(&format!("charlm.{name}.proj_bias"))?,
        })
    };
    let char_lm = CharLm {
        vocab,
        forward: direction("forward")?,
        backward: direction("backward")?,
    };
    let static_vocab = read_vocab(ck, "static_vocab")?;
    let vectors = ck.matrix("static.vectors")?;
    if vectors.rows() != static_vocab.len() {
        return Err(AppError::Data("static vectors do not match the static vocabulary".into()));
    }
    let static_table = EmbeddingTable {
        vocab: static_vocab,
        vectors,
    };
    let gate_mode: GateMode = ck.meta("gate_mode")?;
    let forward = read_lstm(ck, "encoder.forward", gate_mode)?;
    let backward = read_lstm(ck, "encoder.backward", gate_mode)?;
    let tags = read_tags(ck)?;
    let crf = read_crf(ck, tags.len(), forward.hidden() + backward.hidden())?;
    FrozenNerModel::from_parts(char_lm, static_table, forward, backward, crf, tags).map_err(|e| AppError::Core {
        context: "source checkpoint".into(),
        source: e,
    })
}

pub fn load_source(path: &Path) -> Result<FrozenNerModel> {
    source_from_checkpoint(&Checkpoint::load(path, KIND_SOURCE)?)
}

/// Serializes a target tagger.
pub fn tagger_to_checkpoint(model: &Tagger) -> Checkpoint {
    let mut ck = Checkpoint::new(KIND_TAGGER, false);
    ck.set_meta("tags", tag_strings(&model.tags));
    ck.set_meta("gate_mode", model.forward.gate_mode);
    ck.set_meta("transfer_dim", model.transfer_dim);
    match &model.input {
        InputLayer::Lookup {
            vocab,
            embeddings,
            trainable,
        } => {
            ck.set_meta("input", "lookup");
            ck.set_meta("vocab", vocab.tokens());
            ck.set_meta("trainable_embeddings", trainable);
            ck.push_matrix("embeddings", embeddings);
        }
        InputLayer::Features { dim } => {
            ck.set_meta("input", "features");
            ck.set_meta("input_dim", dim);
        }
    }
    push_lstm(&mut ck, "encoder.forward", &model.forward);
    push_lstm(&mut ck, "encoder.backward", &model.backward);
    push_crf(&mut ck, &model.crf);
    ck
}

pub fn tagger_from_checkpoint(ck: &Checkpoint) -> Result<Tagger> {
    let input_kind: String = ck.meta("input")?;
    let input = match input_kind.as_str() {
        "lookup" => {
            let vocab = read_vocab(ck, "vocab")?;
            let embeddings = ck.matrix("embeddings")?;
            if embeddings.rows() != vocab.len() {
                return Err(AppError::Data("embedding rows do not match the vocabulary".into()));
            }
            InputLayer::Lookup {
                vocab,
                embeddings,
                trainable: ck.meta("trainable_embeddings")?,
            }
        }
        "features" => InputLayer::Features { dim: ck.meta("input_dim")? },
        other => return Err(AppError::Data(format!("unknown tagger input `{other}`"))),
    };
    let gate_mode: GateMode = ck.meta("gate_mode")?;
    let forward = read_lstm(ck, "encoder.forward", gate_mode)?;
    let backward = read_lstm(ck, "encoder.backward", gate_mode)?;
    if forward.input_dim() != input.dim() || backward.input_dim() != input.dim() {
        return Err(AppError::Data("encoder input width does not match the input layer".into()));
    }
    let transfer_dim: usize = ck.meta("transfer_dim")?;
    let tags = read_tags(ck)?;
    let crf = read_crf(ck, tags.len(), forward.hidden() + backward.hidden() + transfer_dim)?;
    Ok(Tagger {
        input,
        forward,
        backward,
        crf,
        tags,
        transfer_dim,
    })
}

/// Transferred matrices for the three splits, keyed `split.index`.
/// Sentences without an alignment have no entry.
pub fn transfer_cache_to_checkpoint(meta: &BTreeMap<String, Value>, splits: &[(&str, &[Option<Matrix>])]) -> Checkpoint {
    let mut ck = Checkpoint::new(KIND_TRANSFER_CACHE, false);
    ck.meta = meta.clone();
    for (name, transfers) in splits {
        ck.set_meta(&format!("{name}.sentences"), transfers.len());
        for (i, t) in transfers.iter().enumerate() {
            if let Some(t) = t {
                ck.push_matrix(&format!("{name}.{i}"), t);
            }
        }
    }
    ck
}

pub fn transfer_cache_split(ck: &Checkpoint, name: &str) -> Result<Vec<Option<Matrix>>> {
    let n: usize = ck.meta(&format!("{name}.sentences"))?;
    let mut out = vec![None; n];
    let prefix = format!("{name}.");
    for t in &ck.tensors {
        let Some(idx) = t.name.strip_prefix(&prefix) else { continue };
        let i: usize = idx
            .parse()
            .ok()
            .filter(|&i| i < n)
            .ok_or_else(|| AppError::Data(format!("transfer cache tensor `{}` has a bad index", t.name)))?;
        out[i] = Some(ck.matrix(&t.name)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ban_core::numerics::seeded_rng;
    use ban_core::source_model::NerModel;

    fn tiny_source() -> FrozenNerModel {
        let mut rng = seeded_rng(3);
        let char_lm = CharLm::init(CharVocab::from_text(["ab c"]), 2, &mut rng);
        let vocab = Vocab::from_tokens(["ab", "c"]);
        let static_table = EmbeddingTable::from_entries(vocab, 3, [("ab", vec![1.0, 2.0, 3.0])], &mut rng).unwrap();
        let tags = TagSet::from_tags([Tag::Outside, Tag::Single("PER".into())].iter());
        let tagger = Tagger::new(
            InputLayer::Features { dim: 7 },
            2,
            tags,
            0,
            GateMode::PostSigmoid,
            CrfMode::Pairwise,
            &mut rng,
        );
        NerModel {
            char_lm,
            static_table,
            tagger,
        }
        .freeze()
    }

    #[test]
    fn source_round_trip_is_exact() {
        let model = tiny_source();
        let ck = source_to_checkpoint(&model);
        assert!(ck.frozen);
        let back: Checkpoint = serde_json::from_str(&ck.to_json()).unwrap();
        assert_eq!(source_from_checkpoint(&back).unwrap(), model);
        assert_eq!(back.to_json(), ck.to_json());
    }

    #[test]
    fn unfrozen_source_is_rejected() {
        let mut ck = source_to_checkpoint(&tiny_source());
        ck.frozen = false;
        assert!(source_from_checkpoint(&ck).is_err());
    }

    #[test]
    fn tagger_round_trip_is_exact() {
        let mut rng = seeded_rng(4);
        let tags = TagSet::from_tags([Tag::Outside, Tag::Begin("LOC".into()), Tag::End("LOC".into())].iter());
        let vocab = Vocab::from_tokens(["x", "y"]);
        let embeddings = Matrix::uniform(vocab.len(), 3, 1.0, &mut rng);
        let input = InputLayer::Lookup {
            vocab,
            embeddings,
            trainable: true,
        };
        let mut model = Tagger::new(input, 2, tags, 4, GateMode::PreActivation, CrfMode::Factored, &mut rng);
        model.crf.w.iter_mut().enumerate().for_each(|(i, w)| *w = i as f64 / 7.0);
        let ck = tagger_to_checkpoint(&model);
        let back: Checkpoint = serde_json::from_str(&ck.to_json()).unwrap();
        assert_eq!(tagger_from_checkpoint(&back).unwrap(), model);
    }

    #[test]
    fn transfer_cache_round_trip() {
        let a = Matrix::from_rows(&[[0.5, 1.0 / 3.0]]).unwrap();
        let train = vec![Some(a.clone()), None];
        let ck = transfer_cache_to_checkpoint(&BTreeMap::new(), &[("train", &train), ("dev", &[])]);
        assert_eq!(transfer_cache_split(&ck, "train").unwrap(), train);
        assert!(transfer_cache_split(&ck, "dev").unwrap().is_empty());
        assert!(transfer_cache_split(&ck, "test").is_err());
    }
}
