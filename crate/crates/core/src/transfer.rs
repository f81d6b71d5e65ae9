//! Back-attention knowledge transfer: the frozen source model's hidden states
//! `R` (`n x d`, one row per translated token) are carried back onto the
//! original sentence through source-major attention, `T = A · R` (`m x d`).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::attention::{select_matrix, to_source_major, AttentionMode, SourceMajorAttention};
use crate::corpus::AlignedPair;
use crate::error::{shape_err, Result};
use crate::numerics::{concat, Matrix};
use crate::source_model::FrozenNerModel;

/// Transferred vectors for one sentence with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferKnowledge {
    /// `m x d`: row `j` belongs to original-sentence token `j`.
    pub matrix: Matrix,
    pub mode: Option<AttentionMode>,
    pub renormalized: bool,
}

impl TransferKnowledge {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

/// `T = A · R`; row `j` is the attention-weighted mix of the rows of `R`.
pub fn back_transfer(a: &SourceMajorAttention, r: &Matrix) -> Result<TransferKnowledge> {
    if a.matrix.cols() != r.rows() {
        return Err(shape_err(
            "back_transfer",
            format!("{} hidden-state rows", a.matrix.cols()),
            format!("{}", r.rows()),
        ));
    }
    Ok(TransferKnowledge {
        matrix: a.matrix.matmul(r)?,
        mode: None,
        renormalized: a.renormalized,
    })
}

/// `[r_s ; t_e]`.
pub fn fuse(r_s: &[f64], t_e: &[f64]) -> Vec<f64> {
    concat(r_s, t_e)
}

/// Full pipeline for one aligned pair: pick the attention matrix, flip it to
/// source-major, run the frozen model over the translation and transfer.
pub fn transfer_for_sentence(
    pair: &AlignedPair,
    mode: AttentionMode,
    renormalize: bool,
    source: &FrozenNerModel,
) -> Result<TransferKnowledge> {
    let selected = select_matrix(&pair.attention, mode)?;
    let a = to_source_major(&selected, renormalize);
    let r = source.english_hidden_states(&pair.target_tokens)?;
    let mut t = back_transfer(&a, &r)?;
    t.mode = Some(mode);
    Ok(t)
}

/// One `(token, vector)` record per original-sentence token, for use of the
/// transferred vectors as a contextual embedding.
pub fn ban_embedding_records(pair: &AlignedPair, t: &TransferKnowledge) -> Result<Vec<(String, Vec<f64>)>> {
    if t.len() != pair.source_tokens.len() {
        return Err(shape_err(
            "ban_embedding_records",
            format!("{} rows", pair.source_tokens.len()),
            format!("{}", t.len()),
        ));
    }
    Ok(pair
        .source_tokens
        .iter()
        .zip(t.matrix.row_iter())
        .map(|(tok, row)| (tok.clone(), row.to_vec()))
        .collect())
}
