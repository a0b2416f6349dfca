//! Fairness of a choice-rule application: whenever an individual gets nothing
//! from an offered set, every chosen contract must be explained by a higher
//! score, a different vertical category, or an extra horizontal type.

use serde_json::json;

use crate::contract::Contract;
use crate::ids::InstitutionId;
use crate::instance::Instance;

use super::AuditReport;

/// Check every (rejected contract, chosen contract) pair of one aggregate
/// evaluation at institution `s`. `chosen` must be a subset of `offered`.
pub fn check_fairness(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    chosen: &[Contract],
) -> AuditReport {
    let mut report = AuditReport::new("fair-choice");
    let mut is_chosen = vec![false; instance.n_individuals()];
    for c in chosen {
        is_chosen[c.individual.idx()] = true;
    }

    for x in offered {
        if is_chosen[x.individual.idx()] {
            continue;
        }
        let x_rank = instance.rank(s, x.individual);
        let x_types = instance.individual(x.individual).types;
        for y in chosen {
            let higher_score = instance.rank(s, y.individual) < x_rank;
            let different_category = x.category != y.category;
            let extra_type = instance.individual(y.individual).types & !x_types != 0;
            if !(higher_score || different_category || extra_type) {
                report.push(
                    format!(
                        "{} was rejected while {} was chosen with a lower score, the same category and no extra horizontal type",
                        x.display(instance),
                        y.display(instance)
                    ),
                    json!({
                        "rejected": x.display(instance),
                        "chosen": y.display(instance),
                        "rejected_score": instance.score(s, x.individual),
                        "chosen_score": instance.score(s, y.individual),
                    }),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{aggregate_choice_set, RuleVariant};
    use crate::category::VerticalCategory;
    use crate::fixtures;

    #[test]
    fn aggregate_outputs_are_fair_on_the_fixture() {
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let offered = instance.acceptable_universe();
        let chosen = aggregate_choice_set(&instance, s, &offered, RuleVariant::Plain).unwrap();
        let report = check_fairness(&instance, s, &offered, &chosen);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn admitting_a_weaker_same_type_individual_is_caught() {
        // A mutant picks the lower-scored of two open-category rivals.
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let a = instance.individual_by_name("a").unwrap();
        let b = instance.individual_by_name("b").unwrap();
        let c = instance.individual_by_name("c").unwrap();
        let offered = instance.acceptable_universe();
        let mutant_chosen = vec![
            Contract::new(c, s, VerticalCategory::Open),
            Contract::new(b, s, VerticalCategory::Obc),
        ];
        // a (90) rejected although c (85) holds the open seat
        let report = check_fairness(&instance, s, &offered, &mutant_chosen);
        assert!(!report.passed());
        assert!(report.counterexamples[0]
            .summary
            .contains(&format!("({}, s, o)", instance.individual(a).name)));
    }

    #[test]
    fn accepting_everyone_passes_vacuously() {
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let offered = instance.acceptable_universe();
        let report = check_fairness(&instance, s, &offered, &offered);
        assert!(report.passed());
    }
}
