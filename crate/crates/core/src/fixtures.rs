//! Small named instances shared by tests, benchmarks and examples.

use std::collections::BTreeMap;

use crate::instance::{
    Instance, RawIndividual, RawInstance, RawInstitution, RawTypeDecl, ValidateOptions,
};

fn build(raw: RawInstance) -> Instance {
    Instance::validate(&raw, &ValidateOptions::default())
        .expect("fixture instances validate")
        .instance
}

fn institution(
    id: &str,
    total: u32,
    reserved: &[(&str, u32)],
    scores: &[(&str, i64)],
) -> RawInstitution {
    RawInstitution {
        id: id.to_string(),
        total_capacity: total,
        vertical_capacities: reserved.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        horizontal_reservations: BTreeMap::new(),
        merit_scores: scores.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn individual(id: &str, membership: &str, prefs: &[(&str, &str)]) -> RawIndividual {
    RawIndividual {
        id: id.to_string(),
        membership: membership.to_string(),
        horizontal_types: Vec::new(),
        preferences: prefs
            .iter()
            .map(|(s, v)| (s.to_string(), v.to_string()))
            .collect(),
    }
}

/// One institution with one open and one OBC seat; OBC member `a` (90) ranks
/// open then OBC, OBC member `b` (80) ranks only OBC, general `c` (85) ranks
/// only open. The top OBC member takes the open seat over and above the
/// reservation, so `b` gets the OBC seat and `c` is rejected.
pub fn over_and_above_instance() -> Instance {
    build(RawInstance {
        institutions: vec![institution(
            "s",
            2,
            &[("OBC", 1)],
            &[("a", 90), ("b", 80), ("c", 85)],
        )],
        individuals: vec![
            individual("a", "OBC", &[("s", "o"), ("s", "OBC")]),
            individual("b", "OBC", &[("s", "OBC")]),
            individual("c", "general", &[("s", "o")]),
        ],
        ..RawInstance::default()
    })
}

/// Two OBC seats, no open seats; one OBC proposer (50) and one general
/// proposer (95). Under transfer the vacant OBC seat reverts to open
/// competition and the general proposer takes it.
pub fn transfer_instance() -> Instance {
    build(RawInstance {
        institutions: vec![institution("s", 2, &[("OBC", 2)], &[("g", 95), ("r", 50)])],
        individuals: vec![
            individual("g", "general", &[("s", "o")]),
            individual("r", "OBC", &[("s", "OBC")]),
        ],
        ..RawInstance::default()
    })
}

/// Three OBC seats, no open seats, three general proposers and no OBC member
/// anywhere: the de-reserved pool admits all three by merit.
pub fn no_obc_proposers_instance() -> Instance {
    build(RawInstance {
        institutions: vec![institution(
            "s",
            3,
            &[("OBC", 3)],
            &[("g1", 90), ("g2", 80), ("g3", 70)],
        )],
        individuals: vec![
            individual("g1", "general", &[("s", "o")]),
            individual("g2", "general", &[("s", "o")]),
            individual("g3", "general", &[("s", "o")]),
        ],
        ..RawInstance::default()
    })
}

/// One institution with `obc_seats` OBC seats and one open seat, populated by
/// two general individuals only.
pub fn general_only_instance(obc_seats: u32) -> Instance {
    build(RawInstance {
        institutions: vec![institution(
            "s",
            obc_seats + 1,
            &[("OBC", obc_seats)],
            &[("g1", 90), ("g2", 80)],
        )],
        individuals: vec![
            individual("g1", "general", &[("s", "o")]),
            individual("g2", "general", &[("s", "o")]),
        ],
        ..RawInstance::default()
    })
}

/// Two institutions with one open seat each and a single general individual
/// ranking both.
pub fn two_institution_instance() -> Instance {
    build(RawInstance {
        institutions: vec![
            institution("a", 1, &[], &[("i", 1)]),
            institution("b", 1, &[], &[("i", 1)]),
        ],
        individuals: vec![individual("i", "general", &[("a", "o"), ("b", "o")])],
        ..RawInstance::default()
    })
}

/// Preference pattern for [`reserved_conflict_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictPrefs {
    /// Both rank the open seat above the reserved seat.
    OpenFirst,
    /// Both rank the reserved seat above the open seat.
    ReservedFirst,
}

/// The two-candidate stress fixture: one institution with one open and one
/// OBC seat, two OBC members `i` (90) and `j` (80). With reserved-first
/// preferences it separates stability from justified-envy elimination; with
/// open-first preferences it exercises displacement during the offer process.
pub fn reserved_conflict_instance(prefs: ConflictPrefs) -> Instance {
    let list: &[(&str, &str)] = match prefs {
        ConflictPrefs::OpenFirst => &[("s", "o"), ("s", "OBC")],
        ConflictPrefs::ReservedFirst => &[("s", "OBC"), ("s", "o")],
    };
    build(RawInstance {
        institutions: vec![institution("s", 2, &[("OBC", 1)], &[("i", 90), ("j", 80)])],
        individuals: vec![individual("i", "OBC", list), individual("j", "OBC", list)],
        ..RawInstance::default()
    })
}

/// One institution, one individual, one acceptable contract.
pub fn singleton_instance() -> Instance {
    build(RawInstance {
        institutions: vec![institution("s", 1, &[], &[("i", 1)])],
        individuals: vec![individual("i", "general", &[("s", "o")])],
        ..RawInstance::default()
    })
}

/// A disability-style instance with a two-level type chain and horizontal
/// reservations in the open category.
pub fn hierarchical_open_instance() -> Instance {
    let mut inst = institution(
        "s",
        4,
        &[],
        &[("i1", 90), ("i2", 80), ("i3", 70), ("i4", 60), ("i5", 50)],
    );
    inst.horizontal_reservations = [(
        "o".to_string(),
        [("pwd".to_string(), 2u32), ("blind".to_string(), 1u32)]
            .into_iter()
            .collect::<BTreeMap<String, u32>>(),
    )]
    .into_iter()
    .collect();
    let mut i2 = individual("i2", "general", &[("s", "o")]);
    i2.horizontal_types = vec!["pwd".to_string()];
    let mut i3 = individual("i3", "general", &[("s", "o")]);
    i3.horizontal_types = vec!["pwd".to_string(), "blind".to_string()];
    let mut i5 = individual("i5", "general", &[("s", "o")]);
    i5.horizontal_types = vec!["pwd".to_string()];
    build(RawInstance {
        horizontal_types: vec![
            RawTypeDecl {
                id: "pwd".into(),
                parent: None,
            },
            RawTypeDecl {
                id: "blind".into(),
                parent: Some("pwd".into()),
            },
        ],
        institutions: vec![inst],
        individuals: vec![
            individual("i1", "general", &[("s", "o")]),
            i2,
            i3,
            individual("i4", "general", &[("s", "o")]),
            i5,
        ],
        ..RawInstance::default()
    })
}
