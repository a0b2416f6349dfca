//! Merit domination between equal-size sets of individuals: sorted pointwise
//! comparison with at least one strict improvement.

use thiserror::Error;

use crate::ids::IndividualId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DominationError {
    #[error("SIZE_MISMATCH: comparing sets of size {left} and {right}")]
    SizeMismatch { left: usize, right: usize },
}

/// The pairing certifying a domination: `pairing[k]` matches the k-th best of
/// the dominating set against the k-th best of the dominated one, and the
/// comparison is strict at `strict_at`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationWitness {
    pub pairing: Vec<(IndividualId, IndividualId)>,
    pub strict_at: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationVerdict {
    pub dominates: bool,
    pub witness: Option<DominationWitness>,
}

/// Does `a` merit-dominate `b` under `rank` (lower rank = higher merit)?
/// Requires equal sizes: all uses compare chosen sets of acceptant rules at
/// one capacity, where the sizes agree by construction.
pub fn merit_dominates(
    a: &[IndividualId],
    b: &[IndividualId],
    rank: impl Fn(IndividualId) -> u32,
) -> Result<DominationVerdict, DominationError> {
    if a.len() != b.len() {
        return Err(DominationError::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut a_sorted = a.to_vec();
    a_sorted.sort_by_key(|&i| rank(i));
    let mut b_sorted = b.to_vec();
    b_sorted.sort_by_key(|&i| rank(i));

    let mut strict_at = None;
    for (k, (&x, &y)) in a_sorted.iter().zip(&b_sorted).enumerate() {
        let rx = rank(x);
        let ry = rank(y);
        if rx > ry {
            return Ok(DominationVerdict {
                dominates: false,
                witness: None,
            });
        }
        if rx < ry && strict_at.is_none() {
            strict_at = Some(k);
        }
    }
    match strict_at {
        Some(strict_at) => Ok(DominationVerdict {
            dominates: true,
            witness: Some(DominationWitness {
                pairing: a_sorted.into_iter().zip(b_sorted).collect(),
                strict_at,
            }),
        }),
        None => Ok(DominationVerdict {
            dominates: false,
            witness: None,
        }),
    }
}
