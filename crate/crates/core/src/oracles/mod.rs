//! Independent brute-force reference implementations of the definitions the
//! engine's guarantees quantify over. Oracles never share code with the
//! selection paths they certify: shortfall minimization enumerates subsets,
//! stability enumerates blocking sets, strategy-proofness enumerates
//! misreports.

mod domination;
mod envy;
mod fairness;
pub mod mutants;
mod properties;
mod shortfall;
mod stability;
mod strategy;
mod undominated;

use serde::{Deserialize, Serialize};

pub use domination::{merit_dominates, DominationError, DominationVerdict, DominationWitness};
pub use envy::check_justified_envy;
pub use fairness::check_fairness;
pub use properties::{fuzz_choice_properties, CategoryRule, FuzzParams, HierarchicalRule};
pub use shortfall::{
    min_shortfall, min_shortfall_exhaustive, min_shortfall_laminar, shortfall_of, ShortfallError,
    EXHAUSTIVE_POOL_LIMIT,
};
pub use stability::{check_stability, StabilityError};
pub use strategy::{
    count_preference_lists, enumerate_preference_lists, probe_strategyproofness, CopMechanism,
    ImmediateAcceptance, Mechanism, ProbeError,
};
pub use undominated::assert_merit_undominated;

/// One failed case, carrying enough context to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub summary: String,
    pub context: serde_json::Value,
}

/// Outcome of one audited property: it failed exactly when counterexamples
/// were found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub property: String,
    pub counterexamples: Vec<Counterexample>,
}

impl AuditReport {
    pub fn new(property: impl Into<String>) -> Self {
        AuditReport {
            property: property.into(),
            counterexamples: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn push(&mut self, summary: impl Into<String>, context: serde_json::Value) {
        self.counterexamples.push(Counterexample {
            summary: summary.into(),
            context,
        });
    }

    pub fn merge(&mut self, other: AuditReport) {
        self.counterexamples.extend(other.counterexamples);
    }
}
