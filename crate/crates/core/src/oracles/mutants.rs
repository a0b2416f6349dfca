//! Deliberately broken rules used to prove the checkers can detect failures.
//! Each mutant perturbs exactly one aspect of the shipped rules.

use crate::aggregate::{choose_with_precedence, AuditLevel, RuleVariant};
use crate::category::{SeatPool, VerticalCategory};
use crate::choice::Applicant;
use crate::contract::Contract;
use crate::hierarchy::HierarchyForest;
use crate::ids::{IndividualId, InstitutionId};
use crate::instance::Instance;

use super::properties::CategoryRule;

#[derive(Debug, Clone, Copy, Default)]
struct MutantConfig {
    /// Process levels root-first instead of leaf-first.
    reversed_levels: bool,
    /// Fill quotas with the lowest-scoring holders instead of the highest.
    pick_lowest: bool,
    /// Only fill a type when at least two holders are available.
    pair_coupled: bool,
}

fn run_mutant(
    pool: &[Applicant],
    kappa: &[u32],
    capacity: u32,
    forest: &HierarchyForest,
    cfg: MutantConfig,
) -> Vec<IndividualId> {
    let mut remaining_quota = kappa.to_vec();
    let mut cap = capacity;
    let mut taken = vec![false; pool.len()];
    let mut chosen = Vec::new();

    let mut levels: Vec<_> = forest.levels().to_vec();
    if cfg.reversed_levels {
        levels.reverse();
    }
    'levels: for level in &levels {
        for &t in level {
            if cap == 0 || chosen.len() == pool.len() {
                break 'levels;
            }
            let quota = remaining_quota[t.idx()].min(cap);
            let holders: Vec<usize> = (0..pool.len())
                .filter(|&k| !taken[k] && pool[k].holds(t))
                .collect();
            if cfg.pair_coupled && holders.len() < 2 {
                continue;
            }
            let picks: Vec<usize> = if cfg.pick_lowest {
                holders.iter().rev().take(quota as usize).copied().collect()
            } else {
                holders.iter().take(quota as usize).copied().collect()
            };
            let count = picks.len() as u32;
            for k in picks {
                taken[k] = true;
                chosen.push(pool[k].id);
            }
            cap -= count;
            for &anc in forest.ancestors(t) {
                remaining_quota[anc.idx()] = remaining_quota[anc.idx()].saturating_sub(count);
            }
            remaining_quota[t.idx()] -= count.min(remaining_quota[t.idx()]);
        }
    }
    for (k, applicant) in pool.iter().enumerate() {
        if cap == 0 {
            break;
        }
        if !taken[k] {
            taken[k] = true;
            cap -= 1;
            chosen.push(applicant.id);
        }
    }
    chosen
}

/// Ignores horizontal quotas entirely and takes the top of the merit list.
pub struct MeritFirstIgnoreQuotas;

impl CategoryRule for MeritFirstIgnoreQuotas {
    fn name(&self) -> &'static str {
        "merit-first-ignore-quotas"
    }
    fn choose(
        &self,
        pool: &[Applicant],
        _kappa: &[u32],
        capacity: u32,
        _forest: &HierarchyForest,
    ) -> Vec<IndividualId> {
        pool.iter().take(capacity as usize).map(|a| a.id).collect()
    }
}

/// Processes containment levels root-first instead of leaf-first.
pub struct ReversedPeelRule;

impl CategoryRule for ReversedPeelRule {
    fn name(&self) -> &'static str {
        "reversed-peel-order"
    }
    fn choose(
        &self,
        pool: &[Applicant],
        kappa: &[u32],
        capacity: u32,
        forest: &HierarchyForest,
    ) -> Vec<IndividualId> {
        run_mutant(
            pool,
            kappa,
            capacity,
            forest,
            MutantConfig {
                reversed_levels: true,
                ..MutantConfig::default()
            },
        )
    }
}

/// Fills quotas with the lowest-scoring holders.
pub struct QuotaGreedyLowestScore;

impl CategoryRule for QuotaGreedyLowestScore {
    fn name(&self) -> &'static str {
        "quota-greedy-lowest-score"
    }
    fn choose(
        &self,
        pool: &[Applicant],
        kappa: &[u32],
        capacity: u32,
        forest: &HierarchyForest,
    ) -> Vec<IndividualId> {
        run_mutant(
            pool,
            kappa,
            capacity,
            forest,
            MutantConfig {
                pick_lowest: true,
                ..MutantConfig::default()
            },
        )
    }
}

/// Fills a type's quota only when at least two holders are available;
/// the resulting complementarity breaks the substitutes condition.
pub struct PairwiseLeafRule;

impl CategoryRule for PairwiseLeafRule {
    fn name(&self) -> &'static str {
        "pairwise-leaf-fill"
    }
    fn choose(
        &self,
        pool: &[Applicant],
        kappa: &[u32],
        capacity: u32,
        forest: &HierarchyForest,
    ) -> Vec<IndividualId> {
        run_mutant(
            pool,
            kappa,
            capacity,
            forest,
            MutantConfig {
                pair_coupled: true,
                ..MutantConfig::default()
            },
        )
    }
}

/// The precedence sequence run back to front (de-reserved pool first when
/// transferring).
pub fn scrambled_precedence(variant: RuleVariant) -> Vec<SeatPool> {
    let mut stages = variant.precedence();
    stages.reverse();
    stages
}

/// Aggregate choice under the scrambled precedence.
pub fn scrambled_aggregate_choice(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    variant: RuleVariant,
) -> Vec<Contract> {
    let outcome = choose_with_precedence(
        instance,
        s,
        offered,
        &scrambled_precedence(variant),
        AuditLevel::Fast,
    )
    .expect("mutant evaluation on valid offer sets");
    outcome.chosen_set()
}

/// An aggregate rule that fills every category with the lowest-scoring
/// eligible applicants; plainly unfair, used to prove the fairness checker
/// has teeth.
pub fn lowest_score_aggregate_choice(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
) -> Vec<Contract> {
    let mut offered: Vec<Contract> = offered.to_vec();
    offered.sort();
    offered.dedup();
    let mut chosen_individual = vec![false; instance.n_individuals()];
    let mut chosen = Vec::new();
    for v in VerticalCategory::ALL {
        let capacity = instance.category_capacity(s, v);
        let mut pool: Vec<Contract> = offered
            .iter()
            .copied()
            .filter(|c| c.category == v && !chosen_individual[c.individual.idx()])
            .collect();
        pool.sort_by_key(|c| std::cmp::Reverse(instance.rank(s, c.individual)));
        for c in pool.into_iter().take(capacity as usize) {
            chosen_individual[c.individual.idx()] = true;
            chosen.push(c);
        }
    }
    chosen.sort();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracles::check_fairness;

    #[test]
    fn lowest_score_aggregate_is_unfair_and_detected() {
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let offered = instance.acceptable_universe();
        let chosen = lowest_score_aggregate_choice(&instance, s, &offered);
        let report = check_fairness(&instance, s, &offered, &chosen);
        assert!(!report.passed());
    }

    #[test]
    fn scrambled_precedence_reverses_the_stage_list() {
        let stages = scrambled_precedence(RuleVariant::Transfer);
        assert_eq!(stages.first(), Some(&SeatPool::Dereserved));
        assert_eq!(
            stages.last(),
            Some(&SeatPool::Vertical(VerticalCategory::Open))
        );
    }
}
