//! Text file formats: CoNLL corpora, whitespace embedding tables, JSONL
//! alignment records.

use std::fs;
use std::path::Path;

use ban_core::attention::AttentionStack;
use ban_core::corpus::{parse_conll, AlignedPair, LabeledCorpus, Scheme};
use ban_core::{Error as CoreError, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// Accepted deviation of an attention row sum from 1 in alignment files.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-6;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

/// BIOES when any tag carries an `E-` or `S-` prefix, BIO otherwise.
pub fn infer_scheme(text: &str) -> Scheme {
    let bioes = text
        .lines()
        .filter_map(|l| l.split_whitespace().last())
        .any(|t| t.starts_with("E-") || t.starts_with("S-"));
    if bioes {
        Scheme::Bioes
    } else {
        Scheme::Bio
    }
}

fn core_parse_error(path: &Path, err: CoreError) -> AppError {
    match err {
        CoreError::Format { line, message } => AppError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        CoreError::Tag { line, tag, scheme } => AppError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("tag `{tag}` is not valid under the {scheme} scheme"),
        },
        other => AppError::Core {
            context: path.display().to_string(),
            source: other,
        },
    }
}

/// Reads a CoNLL file, inferring its tag scheme.
pub fn read_conll(path: &Path) -> Result<LabeledCorpus> {
    let text = read_text(path)?;
    parse_conll(&text, infer_scheme(&text)).map_err(|e| core_parse_error(path, e))
}

pub fn write_conll(path: &Path, corpus: &LabeledCorpus) -> Result<()> {
    write_text(path, &corpus.to_conll())
}

/// Non-empty lines of a plain text file.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(String::from)
        .collect())
}

fn parse_vector_line(path: &Path, line_no: usize, line: &str) -> Result<(String, Vec<f64>)> {
    let mut parts = line.split_whitespace();
    let word = parts.next().unwrap_or_default().to_string();
    let values = parts
        .enumerate()
        .map(|(i, v)| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| AppError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("value {} (`{v}`) is not a finite number", i + 1),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((word, values))
}

/// Reads `word v1 ... vD` lines. A leading `count dim` header line is
/// skipped. All vectors must share one dimension.
pub fn read_embeddings(path: &Path) -> Result<(usize, Vec<(String, Vec<f64>)>)> {
    let text = read_text(path)?;
    let mut entries = Vec::new();
    let mut dim = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if idx == 0 && cols.len() == 2 && cols.iter().all(|c| c.parse::<usize>().is_ok()) {
            continue;
        }
        let (word, values) = parse_vector_line(path, idx + 1, line)?;
        match dim {
            None if values.is_empty() => {
                return Err(AppError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: "embedding line has no values".into(),
                })
            }
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(AppError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected {d} values, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        entries.push((word, values));
    }
    let dim = dim.ok_or_else(|| AppError::Data(format!("{}: no embedding vectors", path.display())))?;
    Ok((dim, entries))
}

fn format_vector_line(out: &mut String, word: &str, values: &[f64]) {
    out.push_str(word);
    for v in values {
        // `{}` prints the shortest representation that parses back exactly.
        out.push(' ');
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

/// Embedding-file text for a flat list of records.
pub fn format_embeddings<'a>(records: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> String {
    let mut out = String::new();
    for (w, v) in records {
        format_vector_line(&mut out, w, v);
    }
    out
}

/// Per-sentence records, one block per sentence, blank line after each.
pub fn format_embedding_blocks(blocks: &[Vec<(String, Vec<f64>)>]) -> String {
    let mut out = String::new();
    for block in blocks {
        for (w, v) in block {
            format_vector_line(&mut out, w, v);
        }
        out.push('\n');
    }
    out
}

/// Reads blank-line separated blocks written by [`format_embedding_blocks`].
pub fn read_embedding_blocks(path: &Path) -> Result<Vec<Vec<(String, Vec<f64>)>>> {
    let text = read_text(path)?;
    let mut blocks = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(parse_vector_line(path, idx + 1, line)?);
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    Ok(blocks)
}

/// Matches embedding blocks to corpus sentences in order; a sentence whose
/// tokens differ from the next block has no vectors.
pub fn align_blocks(corpus: &LabeledCorpus, blocks: Vec<Vec<(String, Vec<f64>)>>) -> Result<Vec<Option<Matrix>>> {
    let mut blocks = blocks.into_iter().peekable();
    let mut out = Vec::with_capacity(corpus.len());
    for s in &corpus.sentences {
        let matches = blocks
            .peek()
            .is_some_and(|b| b.len() == s.tokens.len() && b.iter().zip(&s.tokens).all(|((w, _), t)| w == t));
        if !matches {
            out.push(None);
            continue;
        }
        let block = blocks.next().expect("peeked");
        let rows: Vec<Vec<f64>> = block.into_iter().map(|(_, v)| v).collect();
        out.push(Some(Matrix::from_rows(&rows).map_err(|e| AppError::Core {
            context: "embedding block".into(),
            source: e,
        })?));
    }
    if blocks.next().is_some() {
        return Err(AppError::Data("embedding blocks do not follow the corpus sentence order".into()));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlignmentRecord {
    /// Low-resource tokens.
    src: Vec<String>,
    /// Translation tokens.
    tgt: Vec<String>,
    /// Attention layers, each `|tgt| x |src|`.
    layers: Vec<Vec<Vec<f64>>>,
}

/// Parses JSONL alignment records; a `null` line marks a sentence without
/// an alignment. Errors name the 1-based record and, for attention
/// problems, the layer.
pub fn parse_alignments(path: &Path, text: &str) -> Result<Vec<Option<AlignedPair>>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record = out.len() + 1;
        let parsed: Option<AlignmentRecord> = serde_json::from_str(line).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: format!("record {record}: {e}"),
        })?;
        let Some(rec) = parsed else {
            out.push(None);
            continue;
        };
        let layers = rec
            .layers
            .iter()
            .enumerate()
            .map(|(l, rows)| {
                Matrix::from_rows(rows).map_err(|e| {
                    AppError::Data(format!("{}: record {record}, layer {}: {e}", path.display(), l + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let stack = AttentionStack::with_tolerance(layers, ALIGNMENT_TOLERANCE).map_err(|e| match e {
            CoreError::Validation { layer, message, .. } => {
                AppError::Data(format!("{}: record {record}, layer {layer}: {message}", path.display()))
            }
            other => AppError::Data(format!("{}: record {record}: {other}", path.display())),
        })?;
        let pair = AlignedPair::new(rec.src, rec.tgt, stack)
            .map_err(|e| AppError::Data(format!("{}: record {record}: {e}", path.display())))?;
        out.push(Some(pair));
    }
    Ok(out)
}

pub fn read_alignments(path: &Path) -> Result<Vec<Option<AlignedPair>>> {
    parse_alignments(path, &read_text(path)?)
}

pub fn format_alignments(pairs: &[Option<AlignedPair>]) -> String {
    let mut out = String::new();
    for p in pairs {
        let line = match p {
            None => "null".to_string(),
            Some(p) => {
                let rec = AlignmentRecord {
                    src: p.source_tokens.clone(),
                    tgt: p.target_tokens.clone(),
                    layers: p.attention.layers().iter().map(Matrix::to_rows).collect(),
                };
                serde_json::to_string(&rec).expect("alignment records always serialize")
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_inference() {
        assert_eq!(infer_scheme("a B-PER\nb I-PER\n"), Scheme::Bio);
        assert_eq!(infer_scheme("a B-PER\nb E-PER\n"), Scheme::Bioes);
        assert_eq!(infer_scheme("a S-LOC\n"), Scheme::Bioes);
        assert_eq!(infer_scheme("a O\n"), Scheme::Bio);
    }

    #[test]
    fn alignment_round_trip() {
        let text = "{\"src\":[\"a\",\"b\"],\"tgt\":[\"x\"],\"layers\":[[[0.25,0.75]],[[1.0,0.0]]]}\nnull\n";
        let pairs = parse_alignments(Path::new("t.jsonl"), text).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs[1].is_none());
        assert_eq!(pairs[0].as_ref().unwrap().attention.depth(), 2);
        let again = parse_alignments(Path::new("t.jsonl"), &format_alignments(&pairs)).unwrap();
        assert_eq!(pairs, again);
    }

    #[test]
    fn alignment_errors_name_record_and_layer() {
        let text = "null\n{\"src\":[\"a\",\"b\"],\"tgt\":[\"x\"],\"layers\":[[[0.5,0.5]],[[0.5,0.6]]]}\n";
        let err = parse_alignments(Path::new("t.jsonl"), text).unwrap_err().to_string();
        assert!(err.contains("record 2, layer 2"), "{err}");
        let near = "{\"src\":[\"a\",\"b\"],\"tgt\":[\"x\"],\"layers\":[[[0.5,0.5000001]]]}\n";
        let pairs = parse_alignments(Path::new("t.jsonl"), near).unwrap();
        let row = pairs[0].as_ref().unwrap().attention.layers()[0].row(0).to_vec();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let bad_shape = "{\"src\":[\"a\"],\"tgt\":[\"x\"],\"layers\":[[[0.5,0.5]]]}\n";
        assert!(parse_alignments(Path::new("t.jsonl"), bad_shape).is_err());
        assert!(parse_alignments(Path::new("t.jsonl"), "{not json}\n").is_err());
    }

    #[test]
    fn embedding_text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.vec");
        let v = [0.1, -1.0 / 3.0, 2.5e-17];
        write_text(&path, &format_embeddings([("w", &v[..]), ("x", &v[..])])).unwrap();
        let (dim, entries) = read_embeddings(&path).unwrap();
        assert_eq!(dim, 3);
        assert_eq!(entries[0].1, v);

        write_text(&path, "2 2\na 1 2\nb 1\n").unwrap();
        match read_embeddings(&path) {
            Err(AppError::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        write_text(&path, "a 1 nan\n").unwrap();
        assert!(read_embeddings(&path).is_err());
    }
}
