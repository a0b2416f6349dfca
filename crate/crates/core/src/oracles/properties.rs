//! Seeded fuzz campaigns over category-level choice rules: acceptance,
//! substitutes, size monotonicity, irrelevance of rejected contracts and
//! quota monotonicity, each checked on independently sampled pools.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::choice::{choose_hierarchical_set, Applicant};
use crate::exec::map_trials;
use crate::hierarchy::HierarchyForest;
use crate::ids::IndividualId;
use crate::sampler::{sample_pool, PoolParams, SampledPool};

use super::AuditReport;

/// A category-level choice rule under audit.
pub trait CategoryRule: Sync {
    fn name(&self) -> &'static str;
    fn choose(
        &self,
        pool: &[Applicant],
        kappa: &[u32],
        capacity: u32,
        forest: &HierarchyForest,
    ) -> Vec<IndividualId>;
}

/// The shipped hierarchical rule.
pub struct HierarchicalRule;

impl CategoryRule for HierarchicalRule {
    fn name(&self) -> &'static str {
        "hierarchical"
    }

    fn choose(
        &self,
        pool: &[Applicant],
        kappa: &[u32],
        capacity: u32,
        forest: &HierarchyForest,
    ) -> Vec<IndividualId> {
        choose_hierarchical_set(pool, kappa, capacity, forest).expect("aligned quota vector")
    }
}

#[derive(Debug, Clone)]
pub struct FuzzParams {
    pub pool: PoolParams,
    pub trials: u32,
    pub seed: u64,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams {
            pool: PoolParams::default(),
            trials: 1000,
            seed: 0,
        }
    }
}

fn without(pool: &[Applicant], drop: &[usize]) -> Vec<Applicant> {
    pool.iter()
        .enumerate()
        .filter(|(k, _)| !drop.contains(k))
        .map(|(_, a)| *a)
        .collect()
}

fn sorted_ids(mut ids: Vec<IndividualId>) -> Vec<IndividualId> {
    ids.sort();
    ids
}

/// Run `trials` independent cases against `rule`, checking all five
/// properties on each. Violations carry the sampled case and the trial seed,
/// so any failure replays from the report alone.
pub fn fuzz_choice_properties(rule: &dyn CategoryRule, params: &FuzzParams) -> AuditReport {
    let reports = map_trials(params.trials as usize, |trial| {
        let trial_seed = params
            .seed
            .wrapping_add(trial as u64)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let case = sample_pool(&params.pool, trial_seed);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed ^ 0xA5A5_A5A5);
        check_case(rule, &case, &mut rng, trial as u64)
    });
    let mut merged = AuditReport::new(format!("choice-rule-axioms[{}]", rule.name()));
    for r in reports {
        merged.merge(r);
    }
    merged
}

fn check_case(
    rule: &dyn CategoryRule,
    case: &SampledPool,
    rng: &mut ChaCha8Rng,
    trial: u64,
) -> AuditReport {
    let mut report = AuditReport::new("case");
    let SampledPool {
        forest,
        kappa,
        capacity,
        pool,
    } = case;
    let n = pool.len();
    let context = || {
        let mut ctx = case.to_json();
        ctx["trial"] = json!(trial);
        ctx
    };

    // acceptance
    let full = rule.choose(pool, kappa, *capacity, forest);
    if full.len() != (n as u32).min(*capacity) as usize {
        report.push(
            format!("acceptance: chose {} of min({n}, {capacity})", full.len()),
            context(),
        );
    }

    // substitutes: a rejected individual stays rejected when the pool grows
    if n >= 2 {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        if j == i {
            j = (j + 1) % n;
        }
        let small = without(pool, &[j]);
        let chosen_small = rule.choose(&small, kappa, *capacity, forest);
        if !chosen_small.contains(&pool[i].id) {
            let chosen_big = rule.choose(pool, kappa, *capacity, forest);
            if chosen_big.contains(&pool[i].id) {
                report.push(
                    format!(
                        "substitutes: individual {} rejected without {} but chosen with them",
                        pool[i].id.0, pool[j].id.0
                    ),
                    context(),
                );
            }
        }
    }

    // size monotonicity
    if n >= 1 {
        let i = rng.random_range(0..n);
        let smaller = without(pool, &[i]);
        let chosen_smaller = rule.choose(&smaller, kappa, *capacity, forest);
        if chosen_smaller.len() > full.len() {
            report.push(
                format!(
                    "size-monotonicity: |C| dropped from {} to {} when individual {} arrived",
                    chosen_smaller.len(),
                    full.len(),
                    pool[i].id.0
                ),
                context(),
            );
        }
    }

    // irrelevance of rejected contracts
    if n >= 1 {
        let x = rng.random_range(0..n);
        if !full.contains(&pool[x].id) {
            let reduced = without(pool, &[x]);
            let chosen_reduced = rule.choose(&reduced, kappa, *capacity, forest);
            if sorted_ids(chosen_reduced) != sorted_ids(full.clone()) {
                report.push(
                    format!(
                        "irrelevance-of-rejected: removing rejected individual {} changed the choice",
                        pool[x].id.0
                    ),
                    context(),
                );
            }
        }
    }

    // quota monotonicity in the capacity
    {
        let bigger = rule.choose(pool, kappa, capacity + 1, forest);
        let bigger_sorted = sorted_ids(bigger.clone());
        for chosen in &full {
            if bigger_sorted.binary_search(chosen).is_err() {
                report.push(
                    format!(
                        "quota-monotonicity: individual {} chosen at capacity {capacity} but dropped at {}",
                        chosen.0,
                        capacity + 1
                    ),
                    context(),
                );
            }
        }
        if bigger.len() > full.len() + 1 {
            report.push(
                format!(
                    "quota-monotonicity: one extra seat grew the choice from {} to {}",
                    full.len(),
                    bigger.len()
                ),
                context(),
            );
        }
    }

    report
}
