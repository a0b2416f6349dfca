//! Stability audit: individual rationality, the chosen-set fixed point at
//! every institution, and blocking-set search. Singleton blocks are always
//! enumerated; on request, and only for small instances, every block of up to
//! three contracts is enumerated exhaustively.

use itertools::Itertools;
use serde_json::json;
use thiserror::Error;

use crate::aggregate::{aggregate_choice_set, RuleVariant};
use crate::contract::{Contract, Matching};
use crate::instance::Instance;

use super::AuditReport;

/// Instances larger than this refuse exhaustive blocking-set enumeration.
pub const EXHAUSTIVE_INDIVIDUAL_LIMIT: usize = 6;
const EXHAUSTIVE_BLOCK_SIZE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(
        "INSTANCE_TOO_LARGE_FOR_EXHAUSTIVE: {individuals} individuals exceed the cap of {cap}"
    )]
    InstanceTooLargeForExhaustive { individuals: usize, cap: usize },
}

pub fn check_stability(
    instance: &Instance,
    matching: &Matching,
    variant: RuleVariant,
    exhaustive: bool,
) -> Result<AuditReport, StabilityError> {
    if exhaustive && instance.n_individuals() > EXHAUSTIVE_INDIVIDUAL_LIMIT {
        return Err(StabilityError::InstanceTooLargeForExhaustive {
            individuals: instance.n_individuals(),
            cap: EXHAUSTIVE_INDIVIDUAL_LIMIT,
        });
    }
    let mut report = AuditReport::new("stability");

    // (1) individual rationality: every held contract is acceptable.
    for c in matching.contracts() {
        if instance
            .pref_index(c.individual, c.institution, c.category)
            .is_none()
        {
            report.push(
                format!("{} holds an unacceptable contract", c.display(instance)),
                json!({ "contract": c.display(instance) }),
            );
        }
    }

    // (2) chosen-set fixed point at every institution.
    for s in instance.institution_ids() {
        let held = matching.at_institution(s);
        let chosen = aggregate_choice_set(instance, s, &held, variant)
            .expect("held sets are valid offer sets");
        let mut held_sorted = held.clone();
        held_sorted.sort();
        if chosen != held_sorted {
            report.push(
                format!(
                    "institution {} would not re-choose its own assignment",
                    instance.institution(s).name
                ),
                json!({
                    "held": held_sorted.iter().map(|c| c.display(instance)).collect::<Vec<_>>(),
                    "chosen": chosen.iter().map(|c| c.display(instance)).collect::<Vec<_>>(),
                }),
            );
        }
    }

    // (3) blocking sets drawn from acceptable contracts outside the matching.
    let outside: Vec<Contract> = instance
        .acceptable_universe()
        .into_iter()
        .filter(|c| !matching.contains(c))
        .collect();
    let max_block = if exhaustive { EXHAUSTIVE_BLOCK_SIZE } else { 1 };
    for size in 1..=max_block.min(outside.len().max(1)) {
        if size > outside.len() {
            break;
        }
        for combo in (0..outside.len()).combinations(size) {
            let block: Vec<Contract> = combo.iter().map(|&k| outside[k]).collect();
            if is_blocking(instance, matching, variant, &block) {
                report.push(
                    format!(
                        "blocked via {{{}}}",
                        block
                            .iter()
                            .map(|c| c.display(instance))
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                    json!({
                        "block": block.iter().map(|c| c.display(instance)).collect::<Vec<_>>(),
                    }),
                );
            }
        }
    }
    Ok(report)
}

fn is_blocking(
    instance: &Instance,
    matching: &Matching,
    variant: RuleVariant,
    block: &[Contract],
) -> bool {
    // at most one contract per individual, and each strictly preferred
    let mut individuals = Vec::new();
    for z in block {
        if individuals.contains(&z.individual) {
            return false;
        }
        individuals.push(z.individual);
        let current = matching.assignment_pair(z.individual);
        if !instance.prefers(z.individual, Some((z.institution, z.category)), current) {
            return false;
        }
    }
    // every touched institution keeps its block contracts when they arrive
    let mut institutions: Vec<_> = block.iter().map(|z| z.institution).collect();
    institutions.sort();
    institutions.dedup();
    for s in institutions {
        let mut offered = matching.at_institution(s);
        offered.extend(block.iter().filter(|z| z.institution == s));
        let chosen =
            aggregate_choice_set(instance, s, &offered, variant).expect("offer sets are valid");
        for z in block.iter().filter(|z| z.institution == s) {
            if chosen.binary_search(z).is_err() {
                return false;
            }
        }
    }
    true
}
