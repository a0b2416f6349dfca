//! Runtime monitors over offer-process logs.
//!
//! For every institution, stage and evaluation step the monitor re-evaluates
//! the stage choice on the recorded availability set `H` and on the
//! cumulative availability `F` (everything the stage ever saw) and checks
//! five monotonicity conditions that the sequential rules are supposed to
//! maintain along any observable offer process:
//!
//! 1. contracts a stage chose remain available to it at the next step;
//! 2. a choice from the cumulative set only adds newly available contracts
//!    to the previous choice;
//! 3. choosing from the current availability equals choosing from the
//!    cumulative availability;
//! 4. the stage's dynamic capacity never grows;
//! 5. rejections from the cumulative set only accumulate.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::aggregate::stage_choice;
use crate::category::{SeatPool, VerticalCategory};
use crate::contract::Contract;
use crate::cop::OfferProcessLog;
use crate::ids::InstitutionId;
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionViolation {
    pub institution: InstitutionId,
    pub stage: SeatPool,
    /// 1-based evaluation step at the institution.
    pub step: usize,
    /// Condition number, 1 through 5.
    pub condition: u8,
    pub detail: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("MALFORMED_LOG: {0}")]
    Malformed(String),
}

/// Check conditions (1)-(5) for every institution, stage and step of a
/// complete offer-process log. Returns all violations; a well-formed run of
/// the shipped rules produces none.
pub fn monitor_offer_process(
    instance: &Instance,
    log: &OfferProcessLog,
) -> Result<Vec<ConditionViolation>, MonitorError> {
    let precedence = log.variant.precedence();
    let mut violations = Vec::new();
    if log.preferences.len() != instance.n_individuals() {
        return Err(MonitorError::Malformed(format!(
            "log records {} preference lists for {} individuals",
            log.preferences.len(),
            instance.n_individuals()
        )));
    }
    let prefs: Vec<&[(InstitutionId, VerticalCategory)]> =
        log.preferences.iter().map(|p| p.as_slice()).collect();

    for (s_idx, evals) in log.evals.iter().enumerate() {
        let s = InstitutionId(s_idx as u32);
        let mut proposed: BTreeSet<Contract> = BTreeSet::new();
        let stage_count = precedence.len();

        // Per-stage rolling state.
        let mut prev_h: Vec<Vec<Contract>> = vec![Vec::new(); stage_count];
        let mut prev_q: Vec<u32> = precedence
            .iter()
            .map(|&stage| match stage {
                SeatPool::Vertical(v) => instance.category_capacity(s, v),
                SeatPool::Dereserved => instance.category_capacity(s, VerticalCategory::Obc),
            })
            .collect();
        let mut prev_h_choice: Vec<Vec<Contract>> = vec![Vec::new(); stage_count];
        let mut cumulative: Vec<BTreeSet<Contract>> = vec![BTreeSet::new(); stage_count];
        let mut prev_f_choice: Vec<Vec<Contract>> = vec![Vec::new(); stage_count];

        for (m_idx, eval) in evals.iter().enumerate() {
            let m = m_idx + 1;
            if eval.proposed.institution != s {
                return Err(MonitorError::Malformed(format!(
                    "institution {} records a proposal addressed to institution {}",
                    instance.institution(s).name,
                    instance.institution(eval.proposed.institution).name
                )));
            }
            if !proposed.insert(eval.proposed) {
                return Err(MonitorError::Malformed(format!(
                    "contract {} proposed twice to institution {}",
                    eval.proposed.display(instance),
                    instance.institution(s).name
                )));
            }
            if eval.stages.len() != stage_count {
                return Err(MonitorError::Malformed(format!(
                    "evaluation {m} at institution {} records {} stages, expected {}",
                    instance.institution(s).name,
                    eval.stages.len(),
                    stage_count
                )));
            }

            // Observability: the proposer was not chosen here before proposing.
            let proposer = eval.proposed.individual;
            if prev_h_choice
                .iter()
                .flatten()
                .any(|c| c.individual == proposer)
            {
                return Err(MonitorError::Malformed(format!(
                    "individual {} proposed to institution {} while chosen there",
                    instance.individual(proposer).name,
                    instance.institution(s).name
                )));
            }

            for (k, snapshot) in eval.stages.iter().enumerate() {
                let stage = precedence[k];
                if snapshot.pool != stage {
                    return Err(MonitorError::Malformed(format!(
                        "evaluation {m} at institution {} records stage `{}` where `{}` was expected",
                        instance.institution(s).name,
                        snapshot.pool,
                        stage
                    )));
                }
                let h_m: Vec<Contract> = snapshot.available.clone();
                for c in &h_m {
                    if !proposed.contains(c) {
                        return Err(MonitorError::Malformed(format!(
                            "stage `{stage}` at institution {} saw {} before it was proposed",
                            instance.institution(s).name,
                            c.display(instance)
                        )));
                    }
                }
                let q_m = snapshot.capacity;

                let h_choice = stage_choice(instance, s, stage, &h_m, q_m, &prefs)
                    .map_err(|e| MonitorError::Malformed(e.to_string()))?;
                {
                    let mut recorded = snapshot.chosen.clone();
                    recorded.sort();
                    let mut derived = h_choice.clone();
                    derived.sort();
                    if recorded != derived {
                        return Err(MonitorError::Malformed(format!(
                            "stage `{stage}` at institution {} step {m}: recorded choice disagrees with the rule",
                            instance.institution(s).name
                        )));
                    }
                }

                cumulative[k].extend(h_m.iter().copied());
                let f_m: Vec<Contract> = cumulative[k].iter().copied().collect();
                let f_choice = stage_choice(instance, s, stage, &f_m, q_m, &prefs)
                    .map_err(|e| MonitorError::Malformed(e.to_string()))?;

                let mut report = |condition: u8, detail: String| {
                    violations.push(ConditionViolation {
                        institution: s,
                        stage,
                        step: m,
                        condition,
                        detail,
                    });
                };

                // (1) previously chosen contracts remain available.
                for c in &prev_h_choice[k] {
                    if !h_m.contains(c) {
                        report(
                            1,
                            format!(
                                "{} was chosen at step {} but is no longer available",
                                c.display(instance),
                                m - 1
                            ),
                        );
                    }
                }
                // (2) the cumulative choice adds only newly available contracts.
                for c in &f_choice {
                    let newly_available = h_m.contains(c) && !prev_h[k].contains(c);
                    if !prev_h_choice[k].contains(c) && !newly_available {
                        report(
                            2,
                            format!(
                                "{} chosen from the cumulative set is neither previously chosen nor newly available",
                                c.display(instance)
                            ),
                        );
                    }
                }
                // (3) current and cumulative availability choose the same set.
                {
                    let mut a = h_choice.clone();
                    a.sort();
                    let mut b = f_choice.clone();
                    b.sort();
                    if a != b {
                        report(
                            3,
                            format!(
                                "choice from availability ({}) differs from choice from cumulative availability ({})",
                                a.len(),
                                b.len()
                            ),
                        );
                    }
                }
                // (4) dynamic capacity never grows.
                if q_m > prev_q[k] {
                    report(4, format!("capacity grew from {} to {}", prev_q[k], q_m));
                }
                // (5) rejections from the cumulative set accumulate.
                if m > 1 {
                    let prev_f: BTreeSet<Contract> = {
                        let mut set = cumulative[k].clone();
                        for c in &h_m {
                            if !prev_h[k].contains(c) {
                                // contracts first seen this step were not in F_{m-1}
                                set.remove(c);
                            }
                        }
                        set
                    };
                    for c in &prev_f {
                        let rejected_before = !prev_f_choice[k].contains(c);
                        let rejected_now = !f_choice.contains(c);
                        if rejected_before && !rejected_now {
                            report(
                                5,
                                format!(
                                    "{} was rejected from the cumulative set and is now chosen",
                                    c.display(instance)
                                ),
                            );
                        }
                    }
                }

                prev_h[k] = h_m;
                prev_q[k] = q_m;
                prev_h_choice[k] = h_choice;
                prev_f_choice[k] = f_choice;
            }
        }
    }
    Ok(violations)
}

/// Structural invariants of an offer-process log: proposals follow the
/// recorded preference lists in order, nobody proposes while held anywhere,
/// and cumulative sets grow by exactly the proposed contract.
pub fn check_log_invariants(
    instance: &Instance,
    log: &OfferProcessLog,
) -> Result<(), MonitorError> {
    let n = instance.n_individuals();
    if log.preferences.len() != n {
        return Err(MonitorError::Malformed(format!(
            "log records {} preference lists for {n} individuals",
            log.preferences.len()
        )));
    }
    let mut held: Vec<Option<Contract>> = vec![None; n];
    let mut proposed_count = vec![0usize; n];

    // Map global step -> institution eval for held-state replay.
    let mut eval_of_step: Vec<Option<(usize, usize)>> = vec![None; log.steps.len()];
    for (s_idx, evals) in log.evals.iter().enumerate() {
        for (e_idx, eval) in evals.iter().enumerate() {
            if eval.global_step >= log.steps.len() {
                return Err(MonitorError::Malformed(
                    "evaluation references a step beyond the log".into(),
                ));
            }
            if eval_of_step[eval.global_step].is_some() {
                return Err(MonitorError::Malformed(
                    "two institution evaluations share one global step".into(),
                ));
            }
            eval_of_step[eval.global_step] = Some((s_idx, e_idx));
        }
    }

    for (g, step) in log.steps.iter().enumerate() {
        let i = step.proposer;
        if step.contract.individual != i {
            return Err(MonitorError::Malformed(format!(
                "step {g}: proposer and contract individual disagree"
            )));
        }
        if held[i.idx()].is_some() {
            return Err(MonitorError::Malformed(format!(
                "step {g}: individual {} proposed while held",
                instance.individual(i).name
            )));
        }
        let prefs = &log.preferences[i.idx()];
        let expected = prefs.get(proposed_count[i.idx()]).copied();
        if expected != Some((step.contract.institution, step.contract.category)) {
            return Err(MonitorError::Malformed(format!(
                "step {g}: individual {} did not propose their best unproposed pair",
                instance.individual(i).name
            )));
        }
        proposed_count[i.idx()] += 1;

        let Some((s_idx, e_idx)) = eval_of_step[g] else {
            return Err(MonitorError::Malformed(format!(
                "step {g} has no institution evaluation"
            )));
        };
        let eval = &log.evals[s_idx][e_idx];
        if eval.proposed != step.contract {
            return Err(MonitorError::Malformed(format!(
                "step {g}: evaluation records a different contract"
            )));
        }
        // Replay held state from the chosen sets of this evaluation.
        let newly_held: Vec<Contract> = eval
            .stages
            .iter()
            .flat_map(|st| st.chosen.clone())
            .collect();
        for (idx, h) in held.iter_mut().enumerate() {
            if let Some(c) = h {
                if c.institution.idx() == s_idx && !newly_held.contains(c) {
                    *h = None;
                    let _ = idx;
                }
            }
        }
        for c in &newly_held {
            held[c.individual.idx()] = Some(*c);
        }
    }

    for (s_idx, final_held) in log.final_held.iter().enumerate() {
        for c in final_held {
            if held[c.individual.idx()] != Some(*c) {
                return Err(MonitorError::Malformed(format!(
                    "final held set of institution {} disagrees with the replayed state",
                    instance.institutions[s_idx].name
                )));
            }
        }
    }
    Ok(())
}
