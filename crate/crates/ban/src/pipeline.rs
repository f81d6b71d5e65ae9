//! Glue between files and the core library: source-model training,
//! transfer computation, experiment data assembly and the layer sweep.

use std::path::Path;

use ban_core::attention::AttentionMode;
use ban_core::corpus::{build_vocab, AlignedPair, EmbeddingTable, LabeledCorpus, Scheme, Vocab};
use ban_core::numerics::seeded_rng;
use ban_core::source_model::{train_charlm, train_source_model, FrozenNerModel};
use ban_core::synthetic::SyntheticWorld;
use ban_core::training::{run_experiment, ExperimentConfig, ExperimentData, ExperimentOutcome};
use ban_core::transfer::{ban_embedding_records, transfer_for_sentence};
use ban_core::Matrix;

use crate::config::Settings;
use crate::error::{AppError, Context, Result};
use crate::io::{format_alignments, format_embeddings, write_conll, write_text};

/// Output of source training, with the per-epoch losses for logging.
pub struct SourceRun {
    pub model: FrozenNerModel,
    pub charlm_losses: Vec<f64>,
    pub tagger_losses: Vec<f64>,
}

/// Trains the character LM and the source tagger, then freezes them. The
/// static vocabulary is the embedding-file words followed by the corpus
/// words; without a file the table is random.
pub fn train_source(
    corpus: &LabeledCorpus,
    charlm_text: &[String],
    embeddings: Option<(usize, Vec<(String, Vec<f64>)>)>,
    settings: &Settings,
) -> Result<SourceRun> {
    if corpus.is_empty() || charlm_text.is_empty() {
        return Err(AppError::Data("source corpus and char LM text must be non-empty".into()));
    }
    let (char_lm, charlm_losses) = train_charlm(charlm_text, &settings.charlm).context("char LM training")?;
    let (dim, entries) = embeddings.unwrap_or((settings.source.static_dim, Vec::new()));
    let corpus_words = corpus.sentences.iter().flat_map(|s| s.tokens.iter());
    let vocab = Vocab::from_tokens(entries.iter().map(|(w, _)| w).chain(corpus_words).map(String::as_str));
    let mut rng = seeded_rng(settings.source.seed);
    let table = EmbeddingTable::from_entries(vocab, dim, entries, &mut rng).context("static embeddings")?;
    let (model, curve) = train_source_model(corpus, char_lm, table, &settings.source_experiment(), settings.source.seed)
        .context("source tagger training")?;
    Ok(SourceRun {
        model: model.freeze(),
        charlm_losses,
        tagger_losses: curve.iter().map(|r| r.loss).collect(),
    })
}

/// Checks that alignment records line up with corpus sentences. Sentence
/// numbers in errors are 1-based.
pub fn check_alignment(corpus: &LabeledCorpus, pairs: &[Option<AlignedPair>], what: &str) -> Result<()> {
    if pairs.len() != corpus.len() {
        let first = pairs.len().min(corpus.len()) + 1;
        return Err(AppError::Data(format!(
            "{what}: {} sentences but {} alignment records (sentence {first} has no counterpart)",
            corpus.len(),
            pairs.len()
        )));
    }
    for (i, (s, p)) in corpus.sentences.iter().zip(pairs).enumerate() {
        if let Some(p) = p {
            if p.source_tokens != s.tokens {
                return Err(AppError::Data(format!(
                    "{what}: sentence {}: alignment tokens do not match the corpus tokens",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// Smallest attention depth over the present records.
pub fn min_depth(pairs: &[Option<AlignedPair>]) -> Option<usize> {
    pairs.iter().flatten().map(|p| p.attention.depth()).min()
}

/// `T` for every sentence with an alignment record.
pub fn compute_transfers(
    pairs: &[Option<AlignedPair>],
    mode: AttentionMode,
    renormalize: bool,
    source: &FrozenNerModel,
) -> Result<Vec<Option<Matrix>>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.as_ref()
                .map(|p| {
                    transfer_for_sentence(p, mode, renormalize, source)
                        .map(|t| t.matrix)
                        .map_err(|e| AppError::Data(format!("sentence {}: {e}", i + 1)))
                })
                .transpose()
        })
        .collect()
}

/// Per-sentence embedding records; sentences without an alignment are
/// skipped and reported by 1-based number.
pub fn export_records(
    pairs: &[Option<AlignedPair>],
    mode: AttentionMode,
    renormalize: bool,
    source: &FrozenNerModel,
) -> Result<(Vec<Vec<(String, Vec<f64>)>>, Vec<usize>)> {
    let mut blocks = Vec::new();
    let mut skipped = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let Some(p) = p else {
            skipped.push(i + 1);
            continue;
        };
        let t = transfer_for_sentence(p, mode, renormalize, source).map_err(|e| AppError::Data(format!("sentence {}: {e}", i + 1)))?;
        blocks.push(ban_embedding_records(p, &t).context("embedding export")?);
    }
    Ok((blocks, skipped))
}

/// A pretrained target table over the file words plus the training words.
pub fn target_embeddings(train: &LabeledCorpus, min_count: usize, dim: usize, entries: Vec<(String, Vec<f64>)>, seed: u64) -> Result<EmbeddingTable> {
    let mut vocab = build_vocab(train, min_count);
    for (w, _) in &entries {
        vocab.insert(w);
    }
    EmbeddingTable::from_entries(vocab, dim, entries, &mut seeded_rng(seed)).context("target embeddings")
}

/// One sweep row: attention label, mean and sample standard deviation of
/// test F1 over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub layer: String,
    pub f1_mean: f64,
    pub f1_std: f64,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Inputs of a sweep: corpora with their alignments, the frozen source
/// model and an optional target embedding table.
pub struct SweepInputs<'a> {
    pub corpora: [&'a LabeledCorpus; 3],
    pub alignments: [&'a [Option<AlignedPair>]; 3],
    pub source: &'a FrozenNerModel,
    pub embeddings: Option<EmbeddingTable>,
}

/// Assembles experiment data with transfers for one attention mode.
pub fn experiment_data(inputs: &SweepInputs<'_>, mode: AttentionMode, renormalize: bool) -> Result<ExperimentData> {
    let split = |i: usize| -> Result<ban_core::training::SplitData> {
        Ok(ban_core::training::SplitData {
            corpus: inputs.corpora[i].clone(),
            transfers: Some(compute_transfers(inputs.alignments[i], mode, renormalize, inputs.source)?),
        })
    };
    Ok(ExperimentData {
        train: split(0)?,
        dev: split(1)?,
        test: split(2)?,
        embeddings: inputs.embeddings.clone(),
    })
}

pub fn run(config: &ExperimentConfig, data: &ExperimentData) -> Result<ExperimentOutcome> {
    run_experiment(config, data).map_err(|e| match e {
        ban_core::Error::Data { index, message } => AppError::Data(format!("sentence {}: {message}", index + 1)),
        other => AppError::Core {
            context: "experiment".into(),
            source: other,
        },
    })
}

/// Runs the experiment once per layer, then once with the layer average.
/// Layers beyond the shallowest stack are rejected before any training.
pub fn sweep_layers(config: &ExperimentConfig, inputs: &SweepInputs<'_>, layers: &[usize]) -> Result<Vec<SweepRow>> {
    let depth = inputs
        .alignments
        .iter()
        .filter_map(|a| min_depth(a))
        .min()
        .ok_or_else(|| AppError::Data("no alignment records to sweep over".into()))?;
    if let Some(&bad) = layers.iter().find(|&&l| l == 0 || l > depth) {
        return Err(AppError::Data(format!("layer {bad} requested but the attention stacks have depth {depth}")));
    }
    let modes = layers.iter().map(|&l| AttentionMode::Layer(l)).chain([AttentionMode::Average]);
    let mut rows = Vec::new();
    for mode in modes {
        let cfg = ExperimentConfig {
            attention: mode,
            transfer: true,
            ..config.clone()
        };
        let data = experiment_data(inputs, mode, cfg.renormalize)?;
        let outcome = run(&cfg, &data)?;
        let (f1_mean, f1_std) = mean_std(&outcome.report.f1s());
        rows.push(SweepRow {
            layer: mode.to_string(),
            f1_mean,
            f1_std,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("layer,f1_mean,f1_std\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.layer, r.f1_mean, r.f1_std));
    }
    out
}

/// File names written by [`write_world`].
pub const WORLD_FILES: [&str; 9] = [
    "en.conll",
    "en.txt",
    "en.vec",
    "train.conll",
    "dev.conll",
    "test.conll",
    "train.align.jsonl",
    "dev.align.jsonl",
    "test.align.jsonl",
];

pub fn write_world(dir: &Path, world: &SyntheticWorld) -> Result<()> {
    let as_bio = |c: &LabeledCorpus| ban_core::corpus::convert_scheme(c, Scheme::Bio);
    write_conll(&dir.join("en.conll"), &as_bio(&world.source_corpus))?;
    let mut text = world.charlm_text.join("\n");
    text.push('\n');
    write_text(&dir.join("en.txt"), &text)?;
    write_text(
        &dir.join("en.vec"),
        &format_embeddings(world.static_entries.iter().map(|(w, v)| (w.as_str(), v.as_slice()))),
    )?;
    for (name, corpus, pairs) in [
        ("train", &world.train, &world.train_align),
        ("dev", &world.dev, &world.dev_align),
        ("test", &world.test, &world.test_align),
    ] {
        write_conll(&dir.join(format!("{name}.conll")), &as_bio(corpus))?;
        let pairs: Vec<Option<AlignedPair>> = pairs.iter().cloned().map(Some).collect();
        write_text(&dir.join(format!("{name}.align.jsonl")), &format_alignments(&pairs))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let rows = [
            SweepRow {
                layer: "1".into(),
                f1_mean: 0.5,
                f1_std: 0.0,
            },
            SweepRow {
                layer: "ave".into(),
                f1_mean: 0.25,
                f1_std: 0.125,
            },
        ];
        assert_eq!(sweep_csv(&rows), "layer,f1_mean,f1_std\n1,0.5,0\nave,0.25,0.125\n");
    }
}
