//! Contracts and matchings. A contract admits one individual at one
//! institution under one vertical category; a matching is a set of contracts
//! with at most one per individual and no institution over its total
//! capacity. Per-category and horizontal compliance are audit checks, not
//! feasibility bars.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::VerticalCategory;
use crate::ids::{IndividualId, InstitutionId};
use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Contract {
    pub individual: IndividualId,
    pub institution: InstitutionId,
    pub category: VerticalCategory,
}

impl Contract {
    pub fn new(
        individual: IndividualId,
        institution: InstitutionId,
        category: VerticalCategory,
    ) -> Self {
        Contract {
            individual,
            institution,
            category,
        }
    }

    /// Human-readable triple using the instance's external names.
    pub fn display(&self, instance: &Instance) -> String {
        format!(
            "({}, {}, {})",
            instance.individual(self.individual).name,
            instance.institution(self.institution).name,
            self.category
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("individual `{0}` holds more than one contract")]
    MultipleContracts(String),
    #[error(
        "institution `{institution}` is assigned {assigned} contracts but has capacity {capacity}"
    )]
    OverCapacity {
        institution: String,
        assigned: usize,
        capacity: u32,
    },
    #[error("individual `{individual}` is not eligible for category `{category}`")]
    Ineligible {
        individual: String,
        category: VerticalCategory,
    },
    #[error("contract references an unknown individual or institution")]
    UnknownReference,
}

/// A weakly feasible matching: at most one contract per individual, total
/// capacity respected, every contract eligibility-consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    contracts: Vec<Contract>,
    by_individual: Vec<Option<Contract>>,
}

impl Matching {
    pub fn new(instance: &Instance, mut contracts: Vec<Contract>) -> Result<Self, MatchingError> {
        contracts.sort();
        contracts.dedup();
        let mut by_individual: Vec<Option<Contract>> = vec![None; instance.n_individuals()];
        let mut per_institution = vec![0usize; instance.n_institutions()];
        for c in &contracts {
            if c.individual.idx() >= instance.n_individuals()
                || c.institution.idx() >= instance.n_institutions()
            {
                return Err(MatchingError::UnknownReference);
            }
            if !instance
                .individual(c.individual)
                .membership
                .eligible(c.category)
            {
                return Err(MatchingError::Ineligible {
                    individual: instance.individual(c.individual).name.clone(),
                    category: c.category,
                });
            }
            if by_individual[c.individual.idx()].is_some() {
                return Err(MatchingError::MultipleContracts(
                    instance.individual(c.individual).name.clone(),
                ));
            }
            by_individual[c.individual.idx()] = Some(*c);
            per_institution[c.institution.idx()] += 1;
        }
        for (s, &assigned) in per_institution.iter().enumerate() {
            let capacity = instance.institutions[s].total_capacity;
            if assigned > capacity as usize {
                return Err(MatchingError::OverCapacity {
                    institution: instance.institutions[s].name.clone(),
                    assigned,
                    capacity,
                });
            }
        }
        Ok(Matching {
            contracts,
            by_individual,
        })
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    pub fn assignment(&self, i: IndividualId) -> Option<Contract> {
        self.by_individual[i.idx()]
    }

    pub fn assignment_pair(&self, i: IndividualId) -> Option<(InstitutionId, VerticalCategory)> {
        self.by_individual[i.idx()].map(|c| (c.institution, c.category))
    }

    /// Contracts held at institution `s`.
    pub fn at_institution(&self, s: InstitutionId) -> Vec<Contract> {
        self.contracts
            .iter()
            .copied()
            .filter(|c| c.institution == s)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    pub fn contains(&self, c: &Contract) -> bool {
        self.contracts.binary_search(c).is_ok()
    }
}
