//! Exhaustive merit-undomination audit: among all same-size subsets of the
//! pool that reach the minimum shortfall, none may merit-dominate the chosen
//! set, and the chosen set itself must reach that minimum.

use itertools::Itertools;
use serde_json::json;

use crate::choice::Applicant;
use crate::hierarchy::HierarchyForest;
use crate::ids::IndividualId;

use super::domination::merit_dominates;
use super::shortfall::shortfall_of;
use super::AuditReport;

/// Audit `chosen` against every same-size subset of `pool`. The pool must be
/// sorted best-first; `chosen` must have `min(|pool|, size)` members.
pub fn assert_merit_undominated(
    pool: &[Applicant],
    kappa: &[u32],
    size: usize,
    forest: &HierarchyForest,
    chosen: &[IndividualId],
) -> AuditReport {
    let mut report = AuditReport::new("merit-undominated");
    let _ = forest;
    let expected = size.min(pool.len());
    assert_eq!(
        chosen.len(),
        expected,
        "audited choice must be acceptant: got {} of {expected}",
        chosen.len()
    );
    if chosen.is_empty() {
        return report;
    }

    let rank_of = |i: IndividualId| -> u32 {
        pool.iter()
            .position(|a| a.id == i)
            .expect("chosen individuals come from the pool") as u32
    };
    let mask_of = |i: IndividualId| -> u64 { pool[rank_of(i) as usize].types };

    let chosen_shortfall = shortfall_of(chosen.iter().map(|&i| mask_of(i)), kappa);

    let mut minimum = u64::MAX;
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for subset in (0..pool.len()).combinations(chosen.len()) {
        let s = shortfall_of(subset.iter().map(|&i| pool[i].types), kappa);
        if s < minimum {
            minimum = s;
            candidates.clear();
        }
        if s == minimum {
            candidates.push(subset);
        }
    }

    if chosen_shortfall > minimum {
        report.push(
            format!(
                "chosen set leaves {chosen_shortfall} quota units unfilled but {minimum} is achievable"
            ),
            json!({
                "chosen": chosen.iter().map(|i| i.0).collect::<Vec<_>>(),
                "chosen_shortfall": chosen_shortfall,
                "min_shortfall": minimum,
            }),
        );
    }

    let chosen_sorted: Vec<u32> = {
        let mut v: Vec<u32> = chosen.iter().map(|i| i.0).collect();
        v.sort();
        v
    };
    for subset in &candidates {
        let rival: Vec<IndividualId> = subset.iter().map(|&i| pool[i].id).collect();
        let rival_sorted: Vec<u32> = {
            let mut v: Vec<u32> = rival.iter().map(|i| i.0).collect();
            v.sort();
            v
        };
        if rival_sorted == chosen_sorted {
            continue;
        }
        let verdict =
            merit_dominates(&rival, chosen, rank_of).expect("equal sizes by construction");
        if verdict.dominates {
            let witness = verdict
                .witness
                .expect("dominating verdicts carry a witness");
            report.push(
                format!(
                    "a subset with shortfall {minimum} merit-dominates the chosen set (strict at position {})",
                    witness.strict_at
                ),
                json!({
                    "chosen": chosen_sorted,
                    "dominating": rival_sorted,
                    "strict_at": witness.strict_at,
                }),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::choose_hierarchical_set;
    use crate::hierarchy::HierarchyForest;

    fn fixture() -> (HierarchyForest, Vec<u32>, Vec<Applicant>) {
        let forest = HierarchyForest::build(&[
            ("pwd".to_string(), None),
            ("blind".to_string(), Some("pwd".to_string())),
        ])
        .unwrap();
        let pwd = forest.type_by_name("pwd").unwrap();
        let blind = forest.type_by_name("blind").unwrap();
        let mut kappa = vec![0u32; 2];
        kappa[pwd.idx()] = 2;
        kappa[blind.idx()] = 1;
        let pool = vec![
            Applicant::new(IndividualId(1), 0),
            Applicant::new(IndividualId(2), pwd.bit()),
            Applicant::new(IndividualId(3), pwd.bit() | blind.bit()),
            Applicant::new(IndividualId(4), 0),
            Applicant::new(IndividualId(5), pwd.bit()),
        ];
        (forest, kappa, pool)
    }

    #[test]
    fn hierarchical_output_is_undominated_on_the_fixture() {
        let (forest, kappa, pool) = fixture();
        let chosen = choose_hierarchical_set(&pool, &kappa, 4, &forest).unwrap();
        let report = assert_merit_undominated(&pool, &kappa, 4, &forest, &chosen);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn swapping_in_a_weaker_member_is_caught() {
        let (forest, kappa, pool) = fixture();
        // i5 swapped in for i2: still minimal shortfall, but dominated
        let chosen = vec![
            IndividualId(3),
            IndividualId(5),
            IndividualId(1),
            IndividualId(4),
        ];
        let report = assert_merit_undominated(&pool, &kappa, 4, &forest, &chosen);
        assert!(!report.passed());
        let witness = &report.counterexamples[0].context["dominating"];
        assert_eq!(witness.as_array().unwrap().len(), 4);
        // the witness keeps i3 and brings i2 back
        let ids: Vec<u64> = witness
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        assert!(ids.contains(&2) && ids.contains(&3));
    }

    #[test]
    fn empty_pool_passes_vacuously() {
        let forest = HierarchyForest::empty();
        let report = assert_merit_undominated(&[], &[], 3, &forest, &[]);
        assert!(report.passed());
    }
}
