//! Justified envy: an individual envies a held contract they rank above their
//! own assignment. The envy is justified (a violation) when the envier also
//! scores higher at that institution and holds every horizontal type the
//! holder has.

use serde_json::json;

use crate::contract::Matching;
use crate::instance::Instance;

use super::AuditReport;

pub fn check_justified_envy(instance: &Instance, matching: &Matching) -> AuditReport {
    let mut report = AuditReport::new("justified-envy-elimination");
    for j in instance.individual_ids() {
        let own = matching.assignment_pair(j);
        let j_types = instance.individual(j).types;
        for x in matching.contracts() {
            if x.individual == j {
                continue;
            }
            if !instance.prefers(j, Some((x.institution, x.category)), own) {
                continue;
            }
            let holder_scores_higher =
                instance.rank(x.institution, x.individual) < instance.rank(x.institution, j);
            let holder_extra_type = instance.individual(x.individual).types & !j_types != 0;
            if !(holder_scores_higher || holder_extra_type) {
                report.push(
                    format!(
                        "{} envies {} despite scoring higher and covering the holder's horizontal types",
                        instance.individual(j).name,
                        x.display(instance)
                    ),
                    json!({
                        "envier": instance.individual(j).name,
                        "envied_contract": x.display(instance),
                        "envier_score": instance.score(x.institution, j),
                        "holder_score": instance.score(x.institution, x.individual),
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
    use crate::category::VerticalCategory;
    use crate::contract::Contract;
    use crate::fixtures::{self, ConflictPrefs};

    #[test]
    fn both_on_open_seats_is_envy_free() {
        // Both candidates prefer the reserved seat but hold open seats; no
        // held contract offers what they want, so nobody envies.
        let instance = fixtures::reserved_conflict_instance(ConflictPrefs::ReservedFirst);
        let s = instance.institution_by_name("s").unwrap();
        let i = instance.individual_by_name("i").unwrap();
        let j = instance.individual_by_name("j").unwrap();
        let matching = Matching::new(
            &instance,
            vec![
                Contract::new(i, s, VerticalCategory::Open),
                Contract::new(j, s, VerticalCategory::Open),
            ],
        )
        .unwrap();
        assert!(check_justified_envy(&instance, &matching).passed());
    }

    #[test]
    fn higher_scorer_envies_the_reserved_seat() {
        // i holds open, j holds the reserved seat both prefer; i scores
        // higher and has the same (empty) type set: justified envy.
        let instance = fixtures::reserved_conflict_instance(ConflictPrefs::ReservedFirst);
        let s = instance.institution_by_name("s").unwrap();
        let i = instance.individual_by_name("i").unwrap();
        let j = instance.individual_by_name("j").unwrap();
        let matching = Matching::new(
            &instance,
            vec![
                Contract::new(i, s, VerticalCategory::Open),
                Contract::new(j, s, VerticalCategory::Obc),
            ],
        )
        .unwrap();
        let report = check_justified_envy(&instance, &matching);
        assert!(!report.passed());
        assert!(report.counterexamples[0].summary.starts_with("i envies"));
    }

    #[test]
    fn extra_horizontal_type_justifies_the_allocation() {
        let instance = fixtures::hierarchical_open_instance();
        let s = instance.institution_by_name("s").unwrap();
        let i1 = instance.individual_by_name("i1").unwrap();
        let i3 = instance.individual_by_name("i3").unwrap();
        // i3 (typed, score 70) holds the seat; i1 (untyped, 90) is out.
        let matching = Matching::new(
            &instance,
            vec![Contract::new(i3, s, VerticalCategory::Open)],
        )
        .unwrap();
        let report = check_justified_envy(&instance, &matching);
        assert!(report.passed(), "{report:?}");
        let _ = i1;
    }
}
