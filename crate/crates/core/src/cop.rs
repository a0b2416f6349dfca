//! The cumulative offer process. Individuals propose institution-category
//! pairs in preference order; each institution chooses from the cumulative
//! set of contracts ever proposed to it and holds the chosen ones. The
//! process ends when nobody can propose; the final held sets are the
//! matching.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::aggregate::{
    choose_aggregate_with_prefs, AggregateError, AuditLevel, RuleVariant, StageSnapshot,
};
use crate::category::VerticalCategory;
use crate::contract::{Contract, Matching, MatchingError};
use crate::ids::{IndividualId, InstitutionId};
use crate::instance::Instance;

/// How the next proposer is picked among those able to propose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProposalOrder {
    /// Lowest individual id first. The default; reproducible by construction.
    ById,
    /// Uniformly random among the proposable, from the given seed.
    Random(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct CopOptions {
    pub variant: RuleVariant,
    pub order: ProposalOrder,
    /// Record the full offer-process log (per-stage availability snapshots
    /// at every institution evaluation).
    pub log: bool,
}

impl CopOptions {
    pub fn new(variant: RuleVariant) -> Self {
        CopOptions {
            variant,
            order: ProposalOrder::ById,
            log: false,
        }
    }

    pub fn with_order(mut self, order: ProposalOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_log(mut self, log: bool) -> Self {
        self.log = log;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfferStep {
    pub proposer: IndividualId,
    pub contract: Contract,
}

/// One institution evaluation: the proposal that triggered it and the
/// per-stage availability snapshots of the aggregate rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstitutionEval {
    /// Index into [`OfferProcessLog::steps`].
    pub global_step: usize,
    pub proposed: Contract,
    pub stages: Vec<StageSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfferProcessLog {
    pub variant: RuleVariant,
    /// The preference profile the run used (possibly a misreport overlay),
    /// making the log self-contained for replay and monitoring.
    pub preferences: Vec<Vec<(InstitutionId, VerticalCategory)>>,
    pub steps: Vec<OfferStep>,
    /// Evaluation sequence per institution.
    pub evals: Vec<Vec<InstitutionEval>>,
    pub final_held: Vec<Vec<Contract>>,
}

#[derive(Debug, Clone)]
pub struct MechanismOutcome {
    pub matching: Matching,
    /// Final contract of each individual.
    pub assignment: Vec<Option<Contract>>,
    pub log: Option<OfferProcessLog>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopError {
    #[error(
        "NONTERMINATION_GUARD: more proposals than contracts; the offer process did not settle"
    )]
    NonterminationGuard,
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

/// Run the cumulative offer mechanism under the instance's declared
/// preference lists.
pub fn run_cop(instance: &Instance, opts: &CopOptions) -> Result<MechanismOutcome, CopError> {
    let prefs: Vec<&[(InstitutionId, VerticalCategory)]> = instance
        .individuals
        .iter()
        .map(|ind| ind.prefs.as_slice())
        .collect();
    run_cop_with_prefs(instance, &prefs, opts)
}

/// Run the cumulative offer mechanism with explicit preference lists,
/// overriding the instance's declared ones. Misreport probes use this to
/// substitute a single individual's list.
pub fn run_cop_with_prefs(
    instance: &Instance,
    prefs: &[&[(InstitutionId, VerticalCategory)]],
    opts: &CopOptions,
) -> Result<MechanismOutcome, CopError> {
    let n = instance.n_individuals();
    let m = instance.n_institutions();
    assert_eq!(prefs.len(), n, "one preference list per individual");

    let mut cursor = vec![0usize; n];
    let mut held: Vec<Option<Contract>> = vec![None; n];
    let mut held_at: Vec<Vec<Contract>> = vec![Vec::new(); m];
    let mut cumulative: Vec<Vec<Contract>> = vec![Vec::new(); m];
    let mut log = opts.log.then(|| OfferProcessLog {
        variant: opts.variant,
        preferences: prefs.iter().map(|p| p.to_vec()).collect(),
        steps: Vec::new(),
        evals: vec![Vec::new(); m],
        final_held: Vec::new(),
    });
    let mut rng = match opts.order {
        ProposalOrder::ById => None,
        ProposalOrder::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let max_steps: usize = prefs.iter().map(|p| p.len()).sum();
    let mut steps = 0usize;

    loop {
        let proposer = match rng.as_mut() {
            None => (0..n)
                .map(|i| IndividualId(i as u32))
                .find(|&i| held[i.idx()].is_none() && cursor[i.idx()] < prefs[i.idx()].len()),
            Some(rng) => {
                let proposable: Vec<IndividualId> = (0..n)
                    .map(|i| IndividualId(i as u32))
                    .filter(|&i| held[i.idx()].is_none() && cursor[i.idx()] < prefs[i.idx()].len())
                    .collect();
                if proposable.is_empty() {
                    None
                } else {
                    Some(proposable[rng.random_range(0..proposable.len())])
                }
            }
        };
        let Some(i) = proposer else { break };
        if steps == max_steps {
            return Err(CopError::NonterminationGuard);
        }
        steps += 1;

        let (s, v) = prefs[i.idx()][cursor[i.idx()]];
        cursor[i.idx()] += 1;
        let contract = Contract::new(i, s, v);
        cumulative[s.idx()].push(contract);

        let audit = if log.is_some() {
            AuditLevel::Snapshots
        } else {
            AuditLevel::Fast
        };
        let outcome = choose_aggregate_with_prefs(
            instance,
            s,
            &cumulative[s.idx()],
            opts.variant,
            audit,
            prefs,
        )?;
        let new_held = outcome.chosen;

        for c in &held_at[s.idx()] {
            held[c.individual.idx()] = None;
        }
        for c in &new_held {
            held[c.individual.idx()] = Some(*c);
        }
        held_at[s.idx()] = new_held;

        if let Some(log) = log.as_mut() {
            let global_step = log.steps.len();
            log.steps.push(OfferStep {
                proposer: i,
                contract,
            });
            log.evals[s.idx()].push(InstitutionEval {
                global_step,
                proposed: contract,
                stages: outcome.snapshots.expect("snapshots requested"),
            });
        }
    }

    let contracts: Vec<Contract> = held.iter().flatten().copied().collect();
    let matching = Matching::new(instance, contracts)?;
    if let Some(log) = log.as_mut() {
        log.final_held = held_at;
    }
    Ok(MechanismOutcome {
        matching,
        assignment: held,
        log,
    })
}
