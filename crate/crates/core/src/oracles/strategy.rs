//! Strategy-proofness probing by exhaustive misreport enumeration: for every
//! individual, every strict ordering of every subset of their eligible pairs
//! is submitted against the others' truthful lists, and the outcome must
//! never improve under the truthful preferences.

use serde_json::json;
use thiserror::Error;

use crate::category::VerticalCategory;
use crate::contract::Contract;
use crate::cop::{run_cop_with_prefs, CopOptions};
use crate::exec::map_trials;
use crate::ids::{IndividualId, InstitutionId};
use crate::instance::Instance;
use crate::RuleVariant;

use super::AuditReport;

type Pair = (InstitutionId, VerticalCategory);

/// A direct mechanism under audit: given preference lists, produce each
/// individual's assignment.
pub trait Mechanism: Sync {
    fn name(&self) -> &'static str;
    fn assign(&self, instance: &Instance, prefs: &[&[Pair]]) -> Vec<Option<Contract>>;
}

/// The cumulative offer mechanism.
pub struct CopMechanism {
    pub variant: RuleVariant,
}

impl Mechanism for CopMechanism {
    fn name(&self) -> &'static str {
        match self.variant {
            RuleVariant::Plain => "cumulative-offer",
            RuleVariant::Transfer => "cumulative-offer-transfer",
        }
    }

    fn assign(&self, instance: &Instance, prefs: &[&[Pair]]) -> Vec<Option<Contract>> {
        run_cop_with_prefs(instance, prefs, &CopOptions::new(self.variant))
            .expect("offer process settles on valid instances")
            .assignment
    }
}

/// Immediate acceptance: every round, unassigned individuals apply to their
/// next pair and institutions accept irrevocably in merit order while
/// category seats remain. Known to be manipulable; used to show the probe
/// finds profitable misreports when they exist.
pub struct ImmediateAcceptance;

impl Mechanism for ImmediateAcceptance {
    fn name(&self) -> &'static str {
        "immediate-acceptance"
    }

    fn assign(&self, instance: &Instance, prefs: &[&[Pair]]) -> Vec<Option<Contract>> {
        let n = instance.n_individuals();
        let m = instance.n_institutions();
        let mut assigned: Vec<Option<Contract>> = vec![None; n];
        let mut cursor = vec![0usize; n];
        let mut remaining: Vec<[u32; 5]> = (0..m)
            .map(|s| {
                let s = InstitutionId(s as u32);
                let mut caps = [0u32; 5];
                for v in VerticalCategory::ALL {
                    caps[v.index()] = instance.category_capacity(s, v);
                }
                caps
            })
            .collect();

        loop {
            let mut proposals: Vec<Vec<Contract>> = vec![Vec::new(); m];
            let mut any = false;
            for i in 0..n {
                if assigned[i].is_some() || cursor[i] >= prefs[i].len() {
                    continue;
                }
                let (s, v) = prefs[i][cursor[i]];
                cursor[i] += 1;
                proposals[s.idx()].push(Contract::new(IndividualId(i as u32), s, v));
                any = true;
            }
            if !any {
                break;
            }
            for (s_idx, mut batch) in proposals.into_iter().enumerate() {
                let s = InstitutionId(s_idx as u32);
                batch.sort_by_key(|c| instance.rank(s, c.individual));
                for c in batch {
                    let slot = &mut remaining[s_idx][c.category.index()];
                    if *slot > 0 {
                        *slot -= 1;
                        assigned[c.individual.idx()] = Some(c);
                    }
                }
            }
        }
        assigned
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("ENUMERATION_CAP_EXCEEDED: {needed} mechanism runs needed, cap is {cap}")]
    EnumerationCapExceeded { needed: u64, cap: u64 },
}

/// Number of strict lists over any subset of `pairs` distinct pairs.
pub fn count_preference_lists(pairs: usize) -> u64 {
    // sum over k of pairs! / (pairs - k)!
    let mut total = 0u64;
    let mut falling = 1u64;
    for k in 0..=pairs {
        if k > 0 {
            falling = falling.saturating_mul((pairs - k + 1) as u64);
        }
        total = total.saturating_add(falling);
    }
    total
}

/// All strict orderings of all subsets of `pairs`, including the empty list.
pub fn enumerate_preference_lists(pairs: &[Pair]) -> Vec<Vec<Pair>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn extend(current: &mut Vec<Pair>, remaining: &[Pair], out: &mut Vec<Vec<Pair>>) {
        out.push(current.clone());
        for (k, &pair) in remaining.iter().enumerate() {
            let mut rest = remaining.to_vec();
            rest.remove(k);
            current.push(pair);
            extend(current, &rest, out);
            current.pop();
        }
    }
    extend(&mut current, pairs, &mut out);
    out
}

fn eligible_pairs(instance: &Instance, i: IndividualId) -> Vec<Pair> {
    let mut pairs = Vec::new();
    let reserved = instance.individual(i).membership.reserved_category();
    for s in instance.institution_ids() {
        pairs.push((s, VerticalCategory::Open));
        if let Some(r) = reserved {
            pairs.push((s, r));
        }
    }
    pairs
}

/// Search for a profitable misreport for any individual. `cap` bounds the
/// total number of mechanism re-runs.
pub fn probe_strategyproofness(
    instance: &Instance,
    mechanism: &dyn Mechanism,
    cap: u64,
) -> Result<AuditReport, ProbeError> {
    let mut report = AuditReport::new(format!("strategy-proofness[{}]", mechanism.name()));
    let truth: Vec<&[Pair]> = instance
        .individuals
        .iter()
        .map(|ind| ind.prefs.as_slice())
        .collect();

    let mut needed = 0u64;
    for i in instance.individual_ids() {
        needed = needed.saturating_add(count_preference_lists(eligible_pairs(instance, i).len()));
    }
    if needed > cap {
        return Err(ProbeError::EnumerationCapExceeded { needed, cap });
    }

    let truthful = mechanism.assign(instance, &truth);

    // Flatten (individual, alternative list) into one work list.
    let mut work: Vec<(IndividualId, Vec<Pair>)> = Vec::new();
    for i in instance.individual_ids() {
        for list in enumerate_preference_lists(&eligible_pairs(instance, i)) {
            if list.as_slice() != truth[i.idx()] {
                work.push((i, list));
            }
        }
    }

    let found = map_trials(work.len(), |k| {
        let (i, list) = &work[k];
        let mut prefs = truth.clone();
        prefs[i.idx()] = list.as_slice();
        let outcome = mechanism.assign(instance, &prefs);
        let honest = truthful[i.idx()].map(|c| (c.institution, c.category));
        let misreported = outcome[i.idx()].map(|c| (c.institution, c.category));
        if instance.prefers(*i, misreported, honest) {
            Some(json!({
                "individual": instance.individual(*i).name,
                "misreport": list
                    .iter()
                    .map(|(s, v)| format!("({}, {v})", instance.institution(*s).name))
                    .collect::<Vec<_>>(),
                "honest_assignment": honest
                    .map(|(s, v)| format!("({}, {v})", instance.institution(s).name)),
                "misreport_assignment": misreported
                    .map(|(s, v)| format!("({}, {v})", instance.institution(s).name)),
            }))
        } else {
            None
        }
    });
    for (k, hit) in found.into_iter().enumerate() {
        if let Some(context) = hit {
            let (i, _) = &work[k];
            report.push(
                format!(
                    "individual {} gains by misreporting",
                    instance.individual(*i).name
                ),
                context,
            );
        }
    }
    Ok(report)
}
