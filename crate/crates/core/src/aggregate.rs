//! Institution-level aggregate choice: vertical categories select in the
//! fixed precedence order (open first, so reserved-category members compete
//! for open seats over and above their reservation), each via the
//! hierarchical choice rule. The transfer variant appends a de-reserved pool
//! that refills vacant OBC seats by pure merit at the end.

use serde::Serialize;
use thiserror::Error;

use crate::category::{SeatPool, VerticalCategory};
use crate::choice::{
    choose_hierarchical, choose_hierarchical_set, Applicant, ChoiceError, ChoiceTrace,
};
use crate::contract::Contract;
use crate::ids::{IndividualId, InstitutionId};
use crate::instance::Instance;

/// Which aggregate rule an institution runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleVariant {
    /// Hard reserves everywhere: vacant reserved seats stay vacant.
    Plain,
    /// Vacant OBC seats revert to open competition at the end.
    Transfer,
}

impl RuleVariant {
    /// The seat pools in selection order.
    pub fn precedence(self) -> Vec<SeatPool> {
        let mut stages: Vec<SeatPool> = VerticalCategory::ALL
            .iter()
            .map(|&v| SeatPool::Vertical(v))
            .collect();
        if self == RuleVariant::Transfer {
            stages.push(SeatPool::Dereserved);
        }
        stages
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RuleVariant::Plain => "plain",
            RuleVariant::Transfer => "transfer",
        }
    }

    pub fn parse(token: &str) -> Option<RuleVariant> {
        match token {
            "plain" => Some(RuleVariant::Plain),
            "transfer" => Some(RuleVariant::Transfer),
            _ => None,
        }
    }
}

/// How much audit detail an aggregate evaluation records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditLevel {
    /// Chosen set and fill counts only.
    Fast,
    /// Also record per-stage availability snapshots for offer-process
    /// monitoring.
    Snapshots,
    /// Snapshots plus full hierarchical choice traces.
    Full,
}

/// Fill summary of one stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageFill {
    pub pool: SeatPool,
    pub capacity: u32,
    pub filled: u32,
    /// Chosen holders of each horizontal type (one-to-all counts).
    pub horizontal_fill: Vec<u32>,
}

/// Availability snapshot of one stage inside one aggregate evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSnapshot {
    pub pool: SeatPool,
    pub capacity: u32,
    /// Contracts the stage could see: the individual was not chosen by any
    /// earlier stage and the contract's category matches the stage.
    pub available: Vec<Contract>,
    pub chosen: Vec<Contract>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateOutcome {
    /// Chosen contracts across all stages, in selection order.
    pub chosen: Vec<Contract>,
    pub fills: Vec<StageFill>,
    /// Vacant OBC seats after the OBC stage.
    pub obc_vacancies: u32,
    /// Capacity the de-reserved stage ran with (0 unless transfer).
    pub dereserved_capacity: u32,
    pub snapshots: Option<Vec<StageSnapshot>>,
    pub traces: Option<Vec<(SeatPool, ChoiceTrace)>>,
}

impl AggregateOutcome {
    pub fn chosen_set(&self) -> Vec<Contract> {
        let mut out = self.chosen.clone();
        out.sort();
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error(
        "FOREIGN_CONTRACT: contract for institution {found:?} offered to institution {expected:?}"
    )]
    ForeignContract {
        expected: InstitutionId,
        found: InstitutionId,
    },
    #[error(
        "MIXED_INDIVIDUAL_STATE: individual {0:?} chosen twice during one aggregate evaluation"
    )]
    MixedIndividualState(IndividualId),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

/// A borrowed preference profile: one ranked pair list per individual. The
/// de-reserved stage consults it to bind an individual's preferred remaining
/// contract, so rules evaluated under a misreported profile must see that
/// profile here too.
pub type PrefsView<'a> = &'a [&'a [(InstitutionId, VerticalCategory)]];

/// The instance's own declared preference lists as a profile view.
pub fn instance_prefs(instance: &Instance) -> Vec<&[(InstitutionId, VerticalCategory)]> {
    instance
        .individuals
        .iter()
        .map(|ind| ind.prefs.as_slice())
        .collect()
}

/// Evaluate one stage as a pure choice over a contract set.
///
/// Vertical stages run the hierarchical choice rule on the contracts'
/// individuals under the stage's reservation vector; the de-reserved stage is
/// responsive: it takes the highest-scoring distinct individuals and binds,
/// for each, the contract the individual ranks best among theirs in the set.
pub fn stage_choice(
    instance: &Instance,
    s: InstitutionId,
    stage: SeatPool,
    contracts: &[Contract],
    capacity: u32,
    prefs: PrefsView<'_>,
) -> Result<Vec<Contract>, ChoiceError> {
    match stage {
        SeatPool::Vertical(v) => {
            let pool = sorted_pool(instance, s, contracts, v);
            let kappa = &instance.institution(s).kappa[v.index()];
            let chosen = choose_hierarchical_set(&pool, kappa, capacity, &instance.forest)?;
            Ok(chosen.into_iter().map(|i| Contract::new(i, s, v)).collect())
        }
        SeatPool::Dereserved => Ok(dereserved_choice(instance, s, contracts, capacity, prefs)),
    }
}

fn sorted_pool(
    instance: &Instance,
    s: InstitutionId,
    contracts: &[Contract],
    v: VerticalCategory,
) -> Vec<Applicant> {
    let mut pool: Vec<Applicant> = contracts
        .iter()
        .filter(|c| c.category == v)
        .map(|c| Applicant::new(c.individual, instance.individual(c.individual).types))
        .collect();
    pool.sort_by_key(|a| instance.rank(s, a.id));
    pool
}

fn dereserved_choice(
    instance: &Instance,
    s: InstitutionId,
    contracts: &[Contract],
    capacity: u32,
    prefs: PrefsView<'_>,
) -> Vec<Contract> {
    let mut individuals: Vec<IndividualId> = contracts.iter().map(|c| c.individual).collect();
    individuals.sort();
    individuals.dedup();
    individuals.sort_by_key(|&i| instance.rank(s, i));
    individuals
        .into_iter()
        .take(capacity as usize)
        .map(|i| {
            // Bind the contract this individual ranks best among theirs here;
            // unranked contracts sort last, then by category order.
            *contracts
                .iter()
                .filter(|c| c.individual == i)
                .min_by_key(|c| {
                    let rank = prefs[i.idx()]
                        .iter()
                        .position(|&p| p == (c.institution, c.category))
                        .unwrap_or(usize::MAX);
                    (rank, c.category.index())
                })
                .expect("individual came from this contract set")
        })
        .collect()
}

/// Run an explicit stage sequence under the instance's declared preferences.
/// The shipped rules use the fixed precedences from
/// [`RuleVariant::precedence`]; this entry point exists so audits can run
/// deliberately scrambled sequences against the checkers.
pub fn choose_with_precedence(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    stages: &[SeatPool],
    audit: AuditLevel,
) -> Result<AggregateOutcome, AggregateError> {
    let prefs = instance_prefs(instance);
    choose_with_precedence_prefs(instance, s, offered, stages, audit, &prefs)
}

/// [`choose_with_precedence`] under an explicit preference profile.
pub fn choose_with_precedence_prefs(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    stages: &[SeatPool],
    audit: AuditLevel,
    prefs: PrefsView<'_>,
) -> Result<AggregateOutcome, AggregateError> {
    for c in offered {
        if c.institution != s {
            return Err(AggregateError::ForeignContract {
                expected: s,
                found: c.institution,
            });
        }
    }
    let mut offered: Vec<Contract> = offered.to_vec();
    offered.sort();
    offered.dedup();

    let inst = instance.institution(s);
    let q_obc = instance.category_capacity(s, VerticalCategory::Obc);
    let mut chosen_individual = vec![false; instance.n_individuals()];
    let mut chosen: Vec<Contract> = Vec::new();
    let mut fills: Vec<StageFill> = Vec::new();
    let mut snapshots = matches!(audit, AuditLevel::Snapshots | AuditLevel::Full).then(Vec::new);
    let mut traces = matches!(audit, AuditLevel::Full).then(Vec::new);
    let mut obc_filled = 0u32;
    let mut obc_seen = false;
    let mut dereserved_capacity = 0u32;

    for &stage in stages {
        let available: Vec<Contract> = offered
            .iter()
            .copied()
            .filter(|c| {
                !chosen_individual[c.individual.idx()]
                    && match stage {
                        SeatPool::Vertical(v) => c.category == v,
                        SeatPool::Dereserved => true,
                    }
            })
            .collect();
        let capacity = match stage {
            SeatPool::Vertical(v) => instance.category_capacity(s, v),
            SeatPool::Dereserved => {
                dereserved_capacity = q_obc - obc_filled;
                dereserved_capacity
            }
        };

        let stage_chosen = match (stage, traces.as_mut()) {
            (SeatPool::Vertical(v), Some(traces)) => {
                let pool = sorted_pool(instance, s, &available, v);
                let kappa = &inst.kappa[v.index()];
                let (ids, trace) = choose_hierarchical(&pool, kappa, capacity, &instance.forest)?;
                traces.push((stage, trace));
                ids.into_iter().map(|i| Contract::new(i, s, v)).collect()
            }
            _ => stage_choice(instance, s, stage, &available, capacity, prefs)?,
        };

        for c in &stage_chosen {
            if chosen_individual[c.individual.idx()] {
                return Err(AggregateError::MixedIndividualState(c.individual));
            }
            chosen_individual[c.individual.idx()] = true;
        }
        if stage == SeatPool::Vertical(VerticalCategory::Obc) {
            obc_filled = stage_chosen.len() as u32;
            obc_seen = true;
        }

        let mut horizontal_fill = vec![0u32; instance.forest.len()];
        for c in &stage_chosen {
            let mask = instance.individual(c.individual).types;
            for t in instance.forest.iter() {
                if mask & t.bit() != 0 {
                    horizontal_fill[t.idx()] += 1;
                }
            }
        }
        fills.push(StageFill {
            pool: stage,
            capacity,
            filled: stage_chosen.len() as u32,
            horizontal_fill,
        });
        if let Some(snapshots) = snapshots.as_mut() {
            snapshots.push(StageSnapshot {
                pool: stage,
                capacity,
                available,
                chosen: stage_chosen.clone(),
            });
        }
        chosen.extend(stage_chosen);
    }

    let obc_vacancies = if obc_seen { q_obc - obc_filled } else { q_obc };
    Ok(AggregateOutcome {
        chosen,
        fills,
        obc_vacancies,
        dereserved_capacity,
        snapshots,
        traces,
    })
}

/// The institution's aggregate choice over a set of its contracts, under the
/// instance's declared preferences.
pub fn choose_aggregate(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    variant: RuleVariant,
    audit: AuditLevel,
) -> Result<AggregateOutcome, AggregateError> {
    choose_with_precedence(instance, s, offered, &variant.precedence(), audit)
}

/// [`choose_aggregate`] under an explicit preference profile.
pub fn choose_aggregate_with_prefs(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    variant: RuleVariant,
    audit: AuditLevel,
    prefs: PrefsView<'_>,
) -> Result<AggregateOutcome, AggregateError> {
    choose_with_precedence_prefs(instance, s, offered, &variant.precedence(), audit, prefs)
}

/// Just the chosen set, sorted.
pub fn aggregate_choice_set(
    instance: &Instance,
    s: InstitutionId,
    offered: &[Contract],
    variant: RuleVariant,
) -> Result<Vec<Contract>, AggregateError> {
    Ok(choose_aggregate(instance, s, offered, variant, AuditLevel::Fast)?.chosen_set())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn top_reserved_member_takes_the_open_seat() {
        // q_o = 1, q_OBC = 1; OBC member a (90) holds both contracts, OBC
        // member b (80) holds only the OBC contract, general c (85) holds the
        // open contract. Over-and-above: a wins open, b the reservation.
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let a = instance.individual_by_name("a").unwrap();
        let b = instance.individual_by_name("b").unwrap();
        let offered = instance.acceptable_universe();
        let outcome =
            choose_aggregate(&instance, s, &offered, RuleVariant::Plain, AuditLevel::Fast).unwrap();
        let chosen = outcome.chosen_set();
        assert_eq!(
            chosen,
            vec![
                Contract::new(a, s, VerticalCategory::Open),
                Contract::new(b, s, VerticalCategory::Obc),
            ]
        );
        assert_eq!(outcome.obc_vacancies, 0);
    }

    #[test]
    fn empty_offer_set_reports_all_vacancies() {
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let outcome =
            choose_aggregate(&instance, s, &[], RuleVariant::Plain, AuditLevel::Fast).unwrap();
        assert!(outcome.chosen.is_empty());
        assert_eq!(outcome.obc_vacancies, 1);
        assert!(outcome.fills.iter().all(|f| f.filled == 0));
    }

    #[test]
    fn hard_reserves_stay_vacant_without_eligible_contracts() {
        let instance = fixtures::general_only_instance(2);
        let s = instance.institution_by_name("s").unwrap();
        let offered = instance.acceptable_universe();
        let outcome =
            choose_aggregate(&instance, s, &offered, RuleVariant::Plain, AuditLevel::Fast).unwrap();
        assert_eq!(outcome.obc_vacancies, 2);
        let obc_fill = outcome
            .fills
            .iter()
            .find(|f| f.pool == SeatPool::Vertical(VerticalCategory::Obc))
            .unwrap();
        assert_eq!(obc_fill.filled, 0);
    }

    #[test]
    fn transfer_refills_vacant_obc_seats_by_merit() {
        // q_OBC = 2 with one OBC proposer, q_o = 0, one general proposer with
        // an open contract: OBC fills one, the transfer seat goes to the
        // general proposer.
        let instance = fixtures::transfer_instance();
        let s = instance.institution_by_name("s").unwrap();
        let g = instance.individual_by_name("g").unwrap();
        let offered = instance.acceptable_universe();
        let outcome = choose_aggregate(
            &instance,
            s,
            &offered,
            RuleVariant::Transfer,
            AuditLevel::Fast,
        )
        .unwrap();
        assert_eq!(outcome.obc_vacancies, 1);
        assert_eq!(outcome.dereserved_capacity, 1);
        assert!(outcome
            .chosen
            .iter()
            .any(|c| c.individual == g && c.category == VerticalCategory::Open));
        let d_fill = outcome
            .fills
            .iter()
            .find(|f| f.pool == SeatPool::Dereserved)
            .unwrap();
        assert_eq!(d_fill.filled, 1);
    }

    #[test]
    fn transfer_with_full_obc_matches_plain() {
        let instance = fixtures::over_and_above_instance();
        let s = instance.institution_by_name("s").unwrap();
        let offered = instance.acceptable_universe();
        let plain = aggregate_choice_set(&instance, s, &offered, RuleVariant::Plain).unwrap();
        let transfer = aggregate_choice_set(&instance, s, &offered, RuleVariant::Transfer).unwrap();
        assert_eq!(plain, transfer);
    }

    #[test]
    fn transfer_admits_all_remaining_when_no_obc_proposers() {
        // q_OBC = 3, no OBC members at all, three general proposers: the
        // de-reserved pool admits all three in merit order.
        let instance = fixtures::no_obc_proposers_instance();
        let s = instance.institution_by_name("s").unwrap();
        let offered = instance.acceptable_universe();
        let outcome = choose_aggregate(
            &instance,
            s,
            &offered,
            RuleVariant::Transfer,
            AuditLevel::Fast,
        )
        .unwrap();
        assert_eq!(outcome.dereserved_capacity, 3);
        let d_fill = outcome
            .fills
            .iter()
            .find(|f| f.pool == SeatPool::Dereserved)
            .unwrap();
        assert_eq!(d_fill.filled, 3);
        assert_eq!(outcome.chosen.len(), 3);
    }

    #[test]
    fn foreign_contract_is_rejected() {
        let instance = fixtures::two_institution_instance();
        let s0 = InstitutionId(0);
        let s1 = InstitutionId(1);
        let foreign = Contract::new(IndividualId(0), s1, VerticalCategory::Open);
        let err = choose_aggregate(
            &instance,
            s0,
            &[foreign],
            RuleVariant::Plain,
            AuditLevel::Fast,
        )
        .unwrap_err();
        assert!(matches!(err, AggregateError::ForeignContract { .. }));
    }
}
