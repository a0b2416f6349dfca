//! The within-category hierarchical choice rule.
//!
//! Horizontal types are processed leaf to root. Each type fills its remaining
//! quota with the highest-scoring available holders; every selection counts
//! against the overall capacity and against the quota of every containing
//! type (one-to-all counting). Whatever capacity is left after all types have
//! been considered goes to the remaining pool purely by merit, which makes
//! the rule acceptant: it always chooses `min(|pool|, capacity)` individuals.

use serde::Serialize;
use thiserror::Error;

use crate::hierarchy::HierarchyForest;
use crate::ids::{HorizontalType, IndividualId};

/// A pool member: identity plus held horizontal types as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Applicant {
    pub id: IndividualId,
    pub types: u64,
}

impl Applicant {
    pub fn new(id: IndividualId, types: u64) -> Self {
        Applicant { id, types }
    }

    pub fn holds(&self, t: HorizontalType) -> bool {
        self.types & t.bit() != 0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChoiceError {
    #[error("QUOTA_INDEX_MISMATCH: quota vector has {kappa} entries but the forest declares {forest} types")]
    QuotaIndexMismatch { kappa: usize, forest: usize },
}

/// Selection record for one horizontal type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeSelection {
    pub htype: HorizontalType,
    /// Quota remaining for this type when its turn came (declared quota minus
    /// fills propagated from contained types).
    pub quota_remaining: u32,
    /// Quota actually applied after clamping to the remaining capacity.
    pub quota_applied: u32,
    /// Whether clamping changed the quota.
    pub clamped: bool,
    /// Available holders of the type at this point, best first.
    pub considered: Vec<IndividualId>,
    pub selected: Vec<IndividualId>,
    pub capacity_before: u32,
    pub capacity_after: u32,
}

/// Selection record for one peel level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub selections: Vec<TypeSelection>,
    /// Remaining quotas of the types not yet considered, after this level.
    pub pending_quotas: Vec<(HorizontalType, u32)>,
}

/// Full audit trace of a hierarchical choice run.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ChoiceTrace {
    pub initial_capacity: u32,
    pub levels: Vec<LevelRecord>,
    pub merit_phase: Vec<IndividualId>,
    pub remaining_capacity: u32,
}

impl ChoiceTrace {
    /// All selected individuals in selection order.
    pub fn selected(&self) -> Vec<IndividualId> {
        let mut out = Vec::new();
        for level in &self.levels {
            for sel in &level.selections {
                out.extend_from_slice(&sel.selected);
            }
        }
        out.extend_from_slice(&self.merit_phase);
        out
    }

    /// Whether quota clamping changed any applied quota.
    pub fn any_clamped(&self) -> bool {
        self.levels
            .iter()
            .flat_map(|l| &l.selections)
            .any(|s| s.clamped)
    }
}

/// Run the hierarchical choice rule and return the chosen individuals in
/// selection order together with the full trace.
///
/// `pool` must be sorted best-first under the category's merit ranking;
/// `kappa` is indexed by the forest's types.
pub fn choose_hierarchical(
    pool: &[Applicant],
    kappa: &[u32],
    capacity: u32,
    forest: &HierarchyForest,
) -> Result<(Vec<IndividualId>, ChoiceTrace), ChoiceError> {
    let mut trace = ChoiceTrace {
        initial_capacity: capacity,
        ..ChoiceTrace::default()
    };
    let chosen = run(pool, kappa, capacity, forest, Some(&mut trace))?;
    Ok((chosen, trace))
}

/// Trace-free variant for hot paths.
pub fn choose_hierarchical_set(
    pool: &[Applicant],
    kappa: &[u32],
    capacity: u32,
    forest: &HierarchyForest,
) -> Result<Vec<IndividualId>, ChoiceError> {
    run(pool, kappa, capacity, forest, None)
}

fn run(
    pool: &[Applicant],
    kappa: &[u32],
    capacity: u32,
    forest: &HierarchyForest,
    mut trace: Option<&mut ChoiceTrace>,
) -> Result<Vec<IndividualId>, ChoiceError> {
    if kappa.len() != forest.len() {
        return Err(ChoiceError::QuotaIndexMismatch {
            kappa: kappa.len(),
            forest: forest.len(),
        });
    }

    let mut remaining_quota: Vec<u32> = kappa.to_vec();
    let mut cap = capacity;
    let mut taken = vec![false; pool.len()];
    let mut chosen: Vec<IndividualId> =
        Vec::with_capacity(capacity.min(pool.len() as u32) as usize);

    'levels: for (level_idx, level) in forest.levels().iter().enumerate() {
        let mut record = trace.as_ref().map(|_| LevelRecord {
            level: level_idx,
            selections: Vec::new(),
            pending_quotas: Vec::new(),
        });
        for &t in level {
            if cap == 0 || chosen.len() == pool.len() {
                // No positions or individuals left: the process ends here.
                if let (Some(trace), Some(record)) = (trace.as_deref_mut(), record.take()) {
                    trace.levels.push(record);
                }
                break 'levels;
            }
            let quota_remaining = remaining_quota[t.idx()];
            let quota_applied = quota_remaining.min(cap);
            let capacity_before = cap;

            let mut considered = Vec::new();
            let mut selected = Vec::new();
            for (slot, applicant) in pool.iter().enumerate() {
                if taken[slot] || !applicant.holds(t) {
                    continue;
                }
                if record.is_some() {
                    considered.push(applicant.id);
                }
                if (selected.len() as u32) < quota_applied {
                    selected.push(applicant.id);
                    taken[slot] = true;
                } else if record.is_none() {
                    break;
                }
            }
            let count = selected.len() as u32;
            cap -= count;
            chosen.extend_from_slice(&selected);
            for &anc in forest.ancestors(t) {
                remaining_quota[anc.idx()] = remaining_quota[anc.idx()].saturating_sub(count);
            }
            remaining_quota[t.idx()] = quota_remaining - count;

            if let Some(record) = record.as_mut() {
                record.selections.push(TypeSelection {
                    htype: t,
                    quota_remaining,
                    quota_applied,
                    clamped: quota_applied < quota_remaining,
                    considered,
                    selected,
                    capacity_before,
                    capacity_after: cap,
                });
            }
        }
        if let (Some(trace), Some(mut record)) = (trace.as_deref_mut(), record.take()) {
            for later in &forest.levels()[level_idx + 1..] {
                for &t in later {
                    record.pending_quotas.push((t, remaining_quota[t.idx()]));
                }
            }
            trace.levels.push(record);
        }
    }

    // Merit phase: fill whatever capacity is left from the remaining pool.
    for (slot, applicant) in pool.iter().enumerate() {
        if cap == 0 {
            break;
        }
        if !taken[slot] {
            taken[slot] = true;
            cap -= 1;
            chosen.push(applicant.id);
            if let Some(trace) = trace.as_deref_mut() {
                trace.merit_phase.push(applicant.id);
            }
        }
    }

    if let Some(trace) = trace {
        trace.remaining_capacity = cap;
    }
    Ok(chosen)
}
