//! Entity-level scoring: span extraction with the conlleval repair rule and
//! exact-match precision / recall / F1.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Tag;
use crate::error::{Error, Result};

/// An entity span over token positions `start..=end` (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

fn ends_chunk(prev: &Tag, cur: &Tag) -> bool {
    match prev {
        Tag::Outside => false,
        Tag::End(_) | Tag::Single(_) => true,
        Tag::Begin(t) | Tag::Inside(t) => match cur {
            Tag::Begin(_) | Tag::Single(_) | Tag::Outside => true,
            Tag::Inside(u) | Tag::End(u) => t != u,
        },
    }
}

fn starts_chunk(prev: Option<&Tag>, cur: &Tag) -> bool {
    match cur {
        Tag::Outside => false,
        Tag::Begin(_) | Tag::Single(_) => true,
        Tag::Inside(t) | Tag::End(t) => match prev {
            None | Some(Tag::Outside) | Some(Tag::End(_)) | Some(Tag::Single(_)) => true,
            Some(p) => p.kind() != Some(t.as_str()),
        },
    }
}

/// Maximal spans of a tag sequence in either scheme.
///
/// Malformed continuations (`I-X`/`E-X` after `O`, a sentence boundary, a
/// closed span or a different type) open a new span, following conlleval.
pub fn extract_spans(tags: &[Tag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let prev = if i == 0 { None } else { Some(&tags[i - 1]) };
        if let (Some((start, kind)), Some(p)) = (open, prev) {
            if ends_chunk(p, tag) {
                spans.push(Span {
                    start,
                    end: i - 1,
                    kind: kind.into(),
                });
                open = None;
            }
        }
        if starts_chunk(prev, tag) {
            if let Some((start, kind)) = open.take() {
                spans.push(Span {
                    start,
                    end: i - 1,
                    kind: kind.into(),
                });
            }
            open = tag.kind().map(|k| (i, k));
        }
    }
    if let Some((start, kind)) = open {
        spans.push(Span {
            start,
            end: tags.len() - 1,
            kind: kind.into(),
        });
    }
    spans
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Empty denominators score 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    pub fn mean(items: &[Prf]) -> Prf {
        if items.is_empty() {
            return Prf::default();
        }
        let n = items.len() as f64;
        Prf {
            precision: items.iter().map(|p| p.precision).sum::<f64>() / n,
            recall: items.iter().map(|p| p.recall).sum::<f64>() / n,
            f1: items.iter().map(|p| p.f1).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntityScores {
    pub overall: Prf,
    pub per_type: BTreeMap<String, Prf>,
    pub counts: Counts,
}

/// Exact-span, exact-type scoring over a corpus of tag sequences.
pub fn entity_prf<G, P>(gold: &[G], pred: &[P]) -> Result<EntityScores>
where
    G: AsRef<[Tag]>,
    P: AsRef<[Tag]>,
{
    if gold.len() != pred.len() {
        return Err(Error::Domain(format!(
            "gold has {} sentences, prediction has {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut per_type: BTreeMap<String, Counts> = BTreeMap::new();
    let mut total = Counts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g.len() != p.len() {
            return Err(Error::Data {
                index: i,
                message: format!("gold has {} tags, prediction has {}", g.len(), p.len()),
            });
        }
        let gs = extract_spans(g);
        let ps = extract_spans(p);
        for s in &ps {
            let c = per_type.entry(s.kind.clone()).or_default();
            if gs.contains(s) {
                c.tp += 1;
                total.tp += 1;
            } else {
                c.fp += 1;
                total.fp += 1;
            }
        }
        for s in &gs {
            if !ps.contains(s) {
                per_type.entry(s.kind.clone()).or_default().fn_ += 1;
                total.fn_ += 1;
            }
        }
    }
    Ok(EntityScores {
        overall: Prf::from_counts(total.tp, total.fp, total.fn_),
        per_type: per_type
            .into_iter()
            .map(|(k, c)| (k, Prf::from_counts(c.tp, c.fp, c.fn_)))
            .collect(),
        counts: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Scheme, Tag};
    use alloc::vec;

    fn tags(s: &[&str]) -> Vec<Tag> {
        s.iter().map(|t| Tag::parse(t, Scheme::Bioes).unwrap()).collect()
    }

    fn span(start: usize, end: usize, kind: &str) -> Span {
        Span {
            start,
            end,
            kind: kind.into(),
        }
    }

    #[test]
    fn span_examples() {
        assert_eq!(extract_spans(&tags(&["B-PER", "E-PER", "O"])), vec![span(0, 1, "PER")]);
        assert_eq!(extract_spans(&tags(&["S-LOC"])), vec![span(0, 0, "LOC")]);
        assert_eq!(extract_spans(&tags(&["I-PER", "O"])), vec![span(0, 0, "PER")]);
    }

    #[test]
    fn span_repair_cases() {
        assert_eq!(
            extract_spans(&tags(&["B-PER", "I-LOC", "E-LOC"])),
            vec![span(0, 0, "PER"), span(1, 2, "LOC")]
        );
        assert_eq!(
            extract_spans(&tags(&["S-PER", "E-PER"])),
            vec![span(0, 0, "PER"), span(1, 1, "PER")]
        );
        assert_eq!(
            extract_spans(&tags(&["B-ORG", "I-ORG"])),
            vec![span(0, 1, "ORG")]
        );
        assert_eq!(
            extract_spans(&tags(&["B-ORG", "B-ORG", "O", "E-ORG"])),
            vec![span(0, 0, "ORG"), span(1, 1, "ORG"), span(3, 3, "ORG")]
        );
        assert!(extract_spans(&[]).is_empty());
    }

    #[test]
    fn prf_examples() {
        let gold = vec![tags(&["B-PER", "E-PER", "O"])];
        let s = entity_prf(&gold, &gold).unwrap();
        assert_eq!(s.overall, Prf { precision: 1.0, recall: 1.0, f1: 1.0 });

        let empty = vec![tags(&["O", "O", "O"])];
        let s = entity_prf(&gold, &empty).unwrap();
        assert_eq!(s.overall, Prf::default());

        let gold = vec![tags(&["S-PER", "O", "S-LOC"])];
        let pred = vec![tags(&["S-PER", "O", "O"])];
        let s = entity_prf(&gold, &pred).unwrap();
        assert_eq!(s.overall.precision, 1.0);
        assert_eq!(s.overall.recall, 0.5);
        assert!((s.overall.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.per_type["LOC"], Prf::default());
    }

    #[test]
    fn prf_length_mismatch() {
        let gold = vec![tags(&["O"])];
        let pred: Vec<Vec<Tag>> = vec![];
        assert!(entity_prf(&gold, &pred).is_err());
        let pred = vec![tags(&["O", "O"])];
        assert!(matches!(entity_prf(&gold, &pred), Err(Error::Data { index: 0, .. })));
    }
}
