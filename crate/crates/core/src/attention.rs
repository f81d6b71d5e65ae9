//! Translation attention: dot-product weights from decoder summaries and
//! encoder outputs, layer selection, and the transpose into the
//! source-major orientation used by the transfer step.
//!
//! Target-major matrices are `n x m` (one row per translated token, one
//! column per low-resource token).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{shape_err, Error, Result};
use crate::numerics::{dot, softmax, Matrix};

/// Row sums must be within this of 1 for an [`AttentionStack`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionStack {
    layers: Vec<Matrix>,
}

fn check_layer(layer: &Matrix, tol: f64) -> core::result::Result<(), alloc::string::String> {
    for (r, row) in layer.row_iter().enumerate() {
        if let Some(c) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("entry ({}, {}) = {} outside [0, 1]", r + 1, c + 1, row[c]));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(format!("row {} sums to {s}", r + 1));
        }
    }
    Ok(())
}

impl AttentionStack {
    /// Layers must share one non-empty shape and be row-stochastic within
    /// [`ROW_SUM_TOLERANCE`].
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        Self::validate(&layers, ROW_SUM_TOLERANCE)?;
        Ok(Self { layers })
    }

    /// Accepts rows summing to 1 within `tol`, then rescales each row to sum
    /// to 1 so the stack invariant holds. Errors carry the 1-based layer.
    pub fn with_tolerance(mut layers: Vec<Matrix>, tol: f64) -> Result<Self> {
        Self::validate(&layers, tol)?;
        for layer in &mut layers {
            for r in 0..layer.rows() {
                let row = layer.row_mut(r);
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(Self { layers })
    }

    fn validate(layers: &[Matrix], tol: f64) -> Result<()> {
        let Some(first) = layers.first() else {
            return Err(Error::Validation {
                record: 0,
                layer: 0,
                message: "attention stack needs at least one layer".into(),
            });
        };
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(shape_err("AttentionStack", "non-empty layers", "0-sized layer"));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.shape() != shape {
                return Err(shape_err(
                    "AttentionStack",
                    format!("{}x{} in every layer", shape.0, shape.1),
                    format!("{}x{} in layer {}", layer.rows(), layer.cols(), l + 1),
                ));
            }
            check_layer(layer, tol).map_err(|message| Error::Validation {
                record: 0,
                layer: l + 1,
                message,
            })?;
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `(n, m)`: target length by source length.
    pub fn shape(&self) -> (usize, usize) {
        self.layers[0].shape()
    }
}

/// Which attention matrix drives the transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionMode {
    First,
    Last,
    #[default]
    Average,
    /// 1-based layer index.
    Layer(usize),
}

impl fmt::Display for AttentionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttentionMode::First => f.write_str("first"),
            AttentionMode::Last => f.write_str("last"),
            AttentionMode::Average => f.write_str("ave"),
            AttentionMode::Layer(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for AttentionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "last" => Ok(Self::Last),
            "ave" | "average" => Ok(Self::Average),
            _ => match s.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Self::Layer(k)),
                _ => Err(Error::Domain(format!(
                    "attention mode must be first, last, ave or a layer number >= 1, got `{s}`"
                ))),
            },
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for AttentionMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for AttentionMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = alloc::string::String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Decoder state summary `W_d h + b_d + g`.
pub fn decoder_summary(h: &[f64], g: &[f64], w_d: &Matrix, b_d: &[f64]) -> Result<Vec<f64>> {
    if w_d.cols() != h.len() || w_d.rows() != g.len() || b_d.len() != g.len() {
        return Err(shape_err(
            "decoder_summary",
            format!("W_d {}x{}, b_d {}", g.len(), h.len(), g.len()),
            format!("W_d {}x{}, b_d {}", w_d.rows(), w_d.cols(), b_d.len()),
        ));
    }
    let mut out = w_d.matvec(h)?;
    for ((o, b), gi) in out.iter_mut().zip(b_d).zip(g) {
        *o += b + gi;
    }
    Ok(out)
}

/// Row `j` is the softmax over source positions `i` of `D_j . Z_i`.
pub fn attention_weights(summaries: &Matrix, encoder_outputs: &Matrix) -> Result<Matrix> {
    if summaries.cols() != encoder_outputs.cols() {
        return Err(shape_err(
            "attention_weights",
            format!("state dimension {}", encoder_outputs.cols()),
            format!("{}", summaries.cols()),
        ));
    }
    if summaries.rows() == 0 || encoder_outputs.rows() == 0 {
        return Err(shape_err("attention_weights", "at least one row", "empty input"));
    }
    let (n, m) = (summaries.rows(), encoder_outputs.rows());
    let mut out = Matrix::zeros(n, m);
    let mut scores = vec![0.0; m];
    for j in 0..n {
        let d = summaries.row(j);
        for (i, s) in scores.iter_mut().enumerate() {
            *s = dot(d, encoder_outputs.row(i));
        }
        out.row_mut(j).copy_from_slice(&softmax(&scores)?);
    }
    Ok(out)
}

/// Picks the transfer matrix from a stack.
///
/// The average is a running mean, so a stack of identical layers averages to
/// that layer bit for bit.
pub fn select_matrix(stack: &AttentionStack, mode: AttentionMode) -> Result<Matrix> {
    let layers = stack.layers();
    match mode {
        AttentionMode::First => Ok(layers[0].clone()),
        AttentionMode::Last => Ok(layers[layers.len() - 1].clone()),
        AttentionMode::Layer(k) => {
            if k == 0 || k > layers.len() {
                return Err(Error::Index {
                    index: k,
                    len: layers.len(),
                });
            }
            Ok(layers[k - 1].clone())
        }
        AttentionMode::Average => {
            let mut mean = layers[0].clone();
            for (l, layer) in layers.iter().enumerate().skip(1) {
                let count = (l + 1) as f64;
                for (acc, x) in mean.as_mut_slice().iter_mut().zip(layer.as_slice()) {
                    *acc += (x - *acc) / count;
                }
            }
            Ok(mean)
        }
    }
}

/// Attention in `m x n` orientation: row `j` weights the translated tokens
/// for low-resource token `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMajorAttention {
    pub matrix: Matrix,
    pub renormalized: bool,
}

/// Transposes a target-major matrix. With `renormalize`, each row is rescaled
/// to sum to 1 and an all-zero row becomes uniform `1/n`.
pub fn to_source_major(target_major: &Matrix, renormalize: bool) -> SourceMajorAttention {
    let mut matrix = target_major.transpose();
    if renormalize {
        let n = matrix.cols();
        for r in 0..matrix.rows() {
            let row = matrix.row_mut(r);
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / n as f64);
            }
        }
    }
    SourceMajorAttention { matrix, renormalized: renormalize }
}

impl SourceMajorAttention {
    pub fn source_len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn target_len(&self) -> usize {
        self.matrix.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn decoder_summary_examples() {
        let h = [0.5, -1.0];
        let g = [2.0, 3.0];
        assert_eq!(decoder_summary(&h, &[0.0, 0.0], &Matrix::identity(2), &[0.0, 0.0]).unwrap(), h.to_vec());
        let w = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(decoder_summary(&[0.0, 0.0], &g, &w, &[0.0, 0.0]).unwrap(), g.to_vec());
        assert_eq!(decoder_summary(&h, &g, &Matrix::zeros(2, 2), &[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
        assert!(decoder_summary(&h, &g, &Matrix::zeros(3, 2), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn attention_weight_examples() {
        let z = m(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let d = m(&[&[0.3, -0.7], &[5.0, 1.0]]);
        let a = attention_weights(&d, &z).unwrap();
        for v in a.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }

        let z = m(&[&[4.0, -1.0]]);
        assert_eq!(attention_weights(&d, &z).unwrap(), m(&[&[1.0], &[1.0]]));

        // softmax([50, 0])[0] = 1 / (1 + e^-50)
        let z = m(&[&[50.0, 0.0], &[0.0, 50.0]]);
        let a = attention_weights(&m(&[&[1.0, 0.0]]), &z).unwrap();
        assert!(a.get(0, 0) > 0.999);
        assert!((a.get(0, 0) - 1.0 / (1.0 + libm::exp(-50.0))).abs() < 1e-15);

        assert!(attention_weights(&m(&[&[1.0]]), &z).is_err());
    }

    #[test]
    fn select_examples() {
        let layer = m(&[&[0.2, 0.3, 0.5], &[0.1, 0.1, 0.8]]);
        let stack = AttentionStack::new(vec![layer.clone(); 3]).unwrap();
        assert_eq!(select_matrix(&stack, AttentionMode::Average).unwrap(), layer);

        let stack = AttentionStack::new(vec![m(&[&[1.0, 0.0]]), m(&[&[0.0, 1.0]])]).unwrap();
        assert_eq!(select_matrix(&stack, AttentionMode::Average).unwrap(), m(&[&[0.5, 0.5]]));

        let layers = vec![
            m(&[&[1.0, 0.0]]),
            m(&[&[0.5, 0.5]]),
            m(&[&[0.0, 1.0]]),
        ];
        let stack = AttentionStack::new(layers.clone()).unwrap();
        assert_eq!(select_matrix(&stack, AttentionMode::First).unwrap(), layers[0]);
        assert_eq!(select_matrix(&stack, AttentionMode::Last).unwrap(), layers[2]);
        assert_eq!(select_matrix(&stack, AttentionMode::Layer(2)).unwrap(), layers[1]);
        assert_eq!(
            select_matrix(&stack, AttentionMode::Layer(4)).unwrap_err(),
            Error::Index { index: 4, len: 3 }
        );
        assert!(select_matrix(&stack, AttentionMode::Layer(0)).is_err());
    }

    #[test]
    fn stack_validation() {
        assert!(AttentionStack::new(vec![]).is_err());
        let err = AttentionStack::new(vec![m(&[&[1.0]]), m(&[&[0.8]])]).unwrap_err();
        assert!(matches!(err, Error::Validation { layer: 2, .. }));
        assert!(AttentionStack::new(vec![m(&[&[1.0]]), m(&[&[0.5, 0.5]])]).is_err());
        let s = AttentionStack::with_tolerance(vec![m(&[&[0.5, 0.5000001]])], 1e-6).unwrap();
        assert!((s.layers()[0].row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn source_major_examples() {
        let id = Matrix::identity(3);
        assert_eq!(to_source_major(&id, true).matrix, id);
        assert_eq!(to_source_major(&id, false).matrix, id);

        let a = m(&[&[1.0], &[1.0]]);
        assert_eq!(to_source_major(&a, false).matrix, m(&[&[1.0, 1.0]]));
        assert_eq!(to_source_major(&a, true).matrix, m(&[&[0.5, 0.5]]));

        // Source token 2 is attended by nobody.
        let a = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let s = to_source_major(&a, true);
        assert_eq!(s.matrix.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("ave".parse::<AttentionMode>().unwrap(), AttentionMode::Average);
        assert_eq!("3".parse::<AttentionMode>().unwrap(), AttentionMode::Layer(3));
        assert!("0".parse::<AttentionMode>().is_err());
        assert!("middle".parse::<AttentionMode>().is_err());
        assert_eq!(AttentionMode::Layer(7).to_string(), "7");
    }

    proptest! {
        #[test]
        fn weights_are_row_stochastic(seed in any::<u64>(), n in 1usize..6, m_ in 1usize..7, d in 1usize..5) {
            let mut rng = seeded_rng(seed);
            let dm = Matrix::uniform(n, d, 5.0, &mut rng);
            let z = Matrix::uniform(m_, d, 5.0, &mut rng);
            let a = attention_weights(&dm, &z).unwrap();
            for row in a.row_iter() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            let stack = AttentionStack::new(vec![a.clone()]).unwrap();
            prop_assert_eq!(select_matrix(&stack, AttentionMode::Average).unwrap(), a.clone());
            let s = to_source_major(&a, true);
            for row in s.matrix.row_iter() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
