//! File formats and serialization: instance documents, outcome documents
//! (matching, fill reports, optional offer log and audits) and the legacy
//! rank-order-list expansion. One canonical JSON layout, sorted keys, so
//! outputs diff cleanly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{choose_aggregate, AuditLevel, RuleVariant, StageSnapshot};
use crate::category::{Membership, SeatPool, VerticalCategory};
use crate::contract::{Contract, Matching};
use crate::cop::{InstitutionEval, MechanismOutcome, OfferProcessLog, OfferStep};
use crate::instance::{
    Instance, RawIndividual, RawInstance, RawInstitution, RawTypeDecl, ValidateOptions, Validated,
    ValidationError, SCHEMA_VERSION,
};
use crate::oracles::AuditReport;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("PARSE_ERROR: {path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("IO_ERROR: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {count} validation error(s)", count = errors.len())]
    Validation {
        path: String,
        errors: Vec<ValidationError>,
    },
    #[error("UNKNOWN_REFERENCE: {0}")]
    UnknownReference(String),
}

/// Parse and validate an instance document.
pub fn parse_instance(text: &str, opts: &ValidateOptions) -> Result<Validated, LoadError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: "<memory>".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Instance::validate(&raw, opts).map_err(|errors| LoadError::Validation {
        path: "<memory>".into(),
        errors,
    })
}

/// Load and validate an instance document from disk.
pub fn load_instance(path: &Path, opts: &ValidateOptions) -> Result<Validated, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match parse_instance(&text, opts) {
        Ok(v) => Ok(v),
        Err(LoadError::Parse {
            line,
            column,
            message,
            ..
        }) => Err(LoadError::Parse {
            path: path.display().to_string(),
            line,
            column,
            message,
        }),
        Err(LoadError::Validation { errors, .. }) => Err(LoadError::Validation {
            path: path.display().to_string(),
            errors,
        }),
        Err(e) => Err(e),
    }
}

/// Export a validated instance back to its canonical raw form (entities in
/// name order, maps sorted).
pub fn instance_to_raw(instance: &Instance) -> RawInstance {
    let forest = &instance.forest;
    RawInstance {
        generator: None,
        schema_version: SCHEMA_VERSION,
        horizontal_types: forest
            .iter()
            .map(|t| RawTypeDecl {
                id: forest.name(t).to_string(),
                parent: forest.parent(t).map(|p| forest.name(p).to_string()),
            })
            .collect(),
        institutions: instance
            .institutions
            .iter()
            .map(|inst| RawInstitution {
                id: inst.name.clone(),
                total_capacity: inst.total_capacity,
                vertical_capacities: VerticalCategory::RESERVED
                    .iter()
                    .filter(|v| inst.reserved_capacity[v.index() - 1] > 0)
                    .map(|v| {
                        (
                            v.as_str().to_string(),
                            inst.reserved_capacity[v.index() - 1],
                        )
                    })
                    .collect(),
                horizontal_reservations: VerticalCategory::ALL
                    .iter()
                    .filter_map(|v| {
                        let entries: BTreeMap<String, u32> = forest
                            .iter()
                            .filter(|t| inst.kappa[v.index()][t.idx()] > 0)
                            .map(|t| (forest.name(t).to_string(), inst.kappa[v.index()][t.idx()]))
                            .collect();
                        (!entries.is_empty()).then(|| (v.as_str().to_string(), entries))
                    })
                    .collect(),
                merit_scores: instance
                    .individuals
                    .iter()
                    .enumerate()
                    .map(|(i, ind)| (ind.name.clone(), inst.scores[i]))
                    .collect(),
            })
            .collect(),
        individuals: instance
            .individuals
            .iter()
            .map(|ind| RawIndividual {
                id: ind.name.clone(),
                membership: ind.membership.as_str().to_string(),
                horizontal_types: forest
                    .iter()
                    .filter(|t| ind.types & t.bit() != 0)
                    .map(|t| forest.name(t).to_string())
                    .collect(),
                preferences: ind
                    .prefs
                    .iter()
                    .map(|&(s, v)| (instance.institution(s).name.clone(), v.as_str().to_string()))
                    .collect(),
            })
            .collect(),
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    text
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<(), LoadError> {
    let raw = instance_to_raw(instance);
    std::fs::write(path, to_canonical_json(&raw)).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Expand a legacy institutions-only rank-order list into the pair domain:
/// with disclosure each institution contributes its open pair followed by
/// the member's reserved pair, without it only the open pair.
pub fn expand_rol(
    institutions: &[String],
    membership: Membership,
    disclose: bool,
) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in institutions {
        out.push((s.clone(), "o".to_string()));
        if disclose {
            if let Some(r) = membership.reserved_category() {
                out.push((s.clone(), r.as_str().to_string()));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Outcome documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Provenance {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
pub struct TripleRecord {
    pub individual: String,
    pub institution: String,
    pub category: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AssignmentRecord {
    pub individual: String,
    pub institution: String,
    pub category: String,
    pub seat_pool: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CategoryFillRecord {
    pub capacity: u32,
    pub filled: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub horizontal_fill: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FillReport {
    pub total_capacity: u32,
    pub assigned: u32,
    pub categories: BTreeMap<String, CategoryFillRecord>,
    pub obc_vacancies: u32,
    pub dereserved_capacity: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageRecord {
    pub pool: String,
    pub capacity: u32,
    pub available: Vec<TripleRecord>,
    pub chosen: Vec<TripleRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalRecord {
    pub step: usize,
    pub proposed: TripleRecord,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StepRecord {
    pub proposer: String,
    pub contract: TripleRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OfferLogFile {
    pub variant: String,
    /// The profile the run used, keyed by individual.
    pub preferences: BTreeMap<String, Vec<(String, String)>>,
    pub steps: Vec<StepRecord>,
    pub evaluations: BTreeMap<String, Vec<EvalRecord>>,
    pub final_held: BTreeMap<String, Vec<TripleRecord>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutcomeFile {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub matching: Vec<AssignmentRecord>,
    pub unmatched: Vec<String>,
    pub fill_reports: BTreeMap<String, FillReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offer_log: Option<OfferLogFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audits: Option<Vec<AuditReport>>,
}

fn triple(instance: &Instance, c: &Contract) -> TripleRecord {
    TripleRecord {
        individual: instance.individual(c.individual).name.clone(),
        institution: instance.institution(c.institution).name.clone(),
        category: c.category.as_str().to_string(),
    }
}

fn untriple(instance: &Instance, t: &TripleRecord) -> Result<Contract, LoadError> {
    let individual = instance
        .individual_by_name(&t.individual)
        .ok_or_else(|| LoadError::UnknownReference(format!("individual `{}`", t.individual)))?;
    let institution = instance
        .institution_by_name(&t.institution)
        .ok_or_else(|| LoadError::UnknownReference(format!("institution `{}`", t.institution)))?;
    let category = VerticalCategory::parse(&t.category)
        .ok_or_else(|| LoadError::UnknownReference(format!("category `{}`", t.category)))?;
    Ok(Contract::new(individual, institution, category))
}

/// Turn an aggregate evaluation into a named fill report.
pub fn aggregate_fill_report(
    instance: &Instance,
    s: crate::ids::InstitutionId,
    outcome: &crate::aggregate::AggregateOutcome,
) -> FillReport {
    let categories: BTreeMap<String, CategoryFillRecord> = outcome
        .fills
        .iter()
        .map(|f| {
            (
                f.pool.as_str().to_string(),
                CategoryFillRecord {
                    capacity: f.capacity,
                    filled: f.filled,
                    horizontal_fill: instance
                        .forest
                        .iter()
                        .filter(|t| f.horizontal_fill[t.idx()] > 0)
                        .map(|t| {
                            (
                                instance.forest.name(t).to_string(),
                                f.horizontal_fill[t.idx()],
                            )
                        })
                        .collect(),
                },
            )
        })
        .collect();
    FillReport {
        total_capacity: instance.institution(s).total_capacity,
        assigned: outcome.chosen.len() as u32,
        categories,
        obc_vacancies: outcome.obc_vacancies,
        dereserved_capacity: outcome.dereserved_capacity,
    }
}

/// Compute every institution's fill report and the seat-pool label of each
/// held contract by re-running the aggregate rule on the final held sets.
pub fn fill_reports(
    instance: &Instance,
    matching: &Matching,
    variant: RuleVariant,
) -> (BTreeMap<String, FillReport>, BTreeMap<Contract, SeatPool>) {
    let mut reports = BTreeMap::new();
    let mut seat_pools = BTreeMap::new();
    for s in instance.institution_ids() {
        let held = matching.at_institution(s);
        let outcome = choose_aggregate(instance, s, &held, variant, AuditLevel::Snapshots)
            .expect("held sets re-evaluate");
        for snapshot in outcome.snapshots.as_deref().unwrap_or(&[]) {
            for c in &snapshot.chosen {
                seat_pools.insert(*c, snapshot.pool);
            }
        }
        reports.insert(
            instance.institution(s).name.clone(),
            aggregate_fill_report(instance, s, &outcome),
        );
    }
    (reports, seat_pools)
}

pub fn log_to_file(instance: &Instance, log: &OfferProcessLog) -> OfferLogFile {
    OfferLogFile {
        variant: log.variant.as_str().to_string(),
        preferences: log
            .preferences
            .iter()
            .enumerate()
            .map(|(i, prefs)| {
                (
                    instance.individuals[i].name.clone(),
                    prefs
                        .iter()
                        .map(|&(s, v)| {
                            (instance.institution(s).name.clone(), v.as_str().to_string())
                        })
                        .collect(),
                )
            })
            .collect(),
        steps: log
            .steps
            .iter()
            .map(|s| StepRecord {
                proposer: instance.individual(s.proposer).name.clone(),
                contract: triple(instance, &s.contract),
            })
            .collect(),
        evaluations: log
            .evals
            .iter()
            .enumerate()
            .filter(|(_, evals)| !evals.is_empty())
            .map(|(s_idx, evals)| {
                (
                    instance.institutions[s_idx].name.clone(),
                    evals
                        .iter()
                        .map(|e| EvalRecord {
                            step: e.global_step,
                            proposed: triple(instance, &e.proposed),
                            stages: e
                                .stages
                                .iter()
                                .map(|st| StageRecord {
                                    pool: st.pool.as_str().to_string(),
                                    capacity: st.capacity,
                                    available: st
                                        .available
                                        .iter()
                                        .map(|c| triple(instance, c))
                                        .collect(),
                                    chosen: st.chosen.iter().map(|c| triple(instance, c)).collect(),
                                })
                                .collect(),
                        })
                        .collect(),
                )
            })
            .collect(),
        final_held: log
            .final_held
            .iter()
            .enumerate()
            .filter(|(_, held)| !held.is_empty())
            .map(|(s_idx, held)| {
                (
                    instance.institutions[s_idx].name.clone(),
                    held.iter().map(|c| triple(instance, c)).collect(),
                )
            })
            .collect(),
    }
}

pub fn file_to_log(instance: &Instance, file: &OfferLogFile) -> Result<OfferProcessLog, LoadError> {
    let variant = RuleVariant::parse(&file.variant)
        .ok_or_else(|| LoadError::UnknownReference(format!("variant `{}`", file.variant)))?;
    let mut preferences = vec![Vec::new(); instance.n_individuals()];
    for (ind_name, pairs) in &file.preferences {
        let i = instance
            .individual_by_name(ind_name)
            .ok_or_else(|| LoadError::UnknownReference(format!("individual `{ind_name}`")))?;
        preferences[i.idx()] = pairs
            .iter()
            .map(|(inst_name, cat)| {
                let s = instance.institution_by_name(inst_name).ok_or_else(|| {
                    LoadError::UnknownReference(format!("institution `{inst_name}`"))
                })?;
                let v = VerticalCategory::parse(cat)
                    .ok_or_else(|| LoadError::UnknownReference(format!("category `{cat}`")))?;
                Ok((s, v))
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
    }
    let mut evals = vec![Vec::new(); instance.n_institutions()];
    for (inst_name, records) in &file.evaluations {
        let s = instance
            .institution_by_name(inst_name)
            .ok_or_else(|| LoadError::UnknownReference(format!("institution `{inst_name}`")))?;
        let mut converted = Vec::with_capacity(records.len());
        for e in records {
            let mut stages = Vec::with_capacity(e.stages.len());
            for st in &e.stages {
                let pool = SeatPool::parse(&st.pool).ok_or_else(|| {
                    LoadError::UnknownReference(format!("seat pool `{}`", st.pool))
                })?;
                let available = st
                    .available
                    .iter()
                    .map(|t| untriple(instance, t))
                    .collect::<Result<Vec<_>, _>>()?;
                let chosen = st
                    .chosen
                    .iter()
                    .map(|t| untriple(instance, t))
                    .collect::<Result<Vec<_>, _>>()?;
                stages.push(StageSnapshot {
                    pool,
                    capacity: st.capacity,
                    available,
                    chosen,
                });
            }
            converted.push(InstitutionEval {
                global_step: e.step,
                proposed: untriple(instance, &e.proposed)?,
                stages,
            });
        }
        evals[s.idx()] = converted;
    }
    let mut final_held = vec![Vec::new(); instance.n_institutions()];
    for (inst_name, held) in &file.final_held {
        let s = instance
            .institution_by_name(inst_name)
            .ok_or_else(|| LoadError::UnknownReference(format!("institution `{inst_name}`")))?;
        final_held[s.idx()] = held
            .iter()
            .map(|t| untriple(instance, t))
            .collect::<Result<Vec<_>, _>>()?;
    }
    let steps = file
        .steps
        .iter()
        .map(|s| {
            let proposer = instance.individual_by_name(&s.proposer).ok_or_else(|| {
                LoadError::UnknownReference(format!("individual `{}`", s.proposer))
            })?;
            Ok(OfferStep {
                proposer,
                contract: untriple(instance, &s.contract)?,
            })
        })
        .collect::<Result<Vec<_>, LoadError>>()?;
    Ok(OfferProcessLog {
        variant,
        preferences,
        steps,
        evals,
        final_held,
    })
}

/// Build an outcome document from a mechanism run.
pub fn outcome_to_file(
    instance: &Instance,
    outcome: &MechanismOutcome,
    variant: RuleVariant,
    provenance: Provenance,
) -> OutcomeFile {
    let (fills, seat_pools) = fill_reports(instance, &outcome.matching, variant);
    let matching = outcome
        .matching
        .contracts()
        .iter()
        .map(|c| AssignmentRecord {
            individual: instance.individual(c.individual).name.clone(),
            institution: instance.institution(c.institution).name.clone(),
            category: c.category.as_str().to_string(),
            seat_pool: seat_pools
                .get(c)
                .copied()
                .unwrap_or(SeatPool::Vertical(c.category))
                .as_str()
                .to_string(),
        })
        .collect();
    let unmatched = instance
        .individual_ids()
        .filter(|&i| outcome.assignment[i.idx()].is_none())
        .map(|i| instance.individual(i).name.clone())
        .collect();
    OutcomeFile {
        schema_version: SCHEMA_VERSION,
        provenance,
        matching,
        unmatched,
        fill_reports: fills,
        offer_log: outcome.log.as_ref().map(|log| log_to_file(instance, log)),
        audits: None,
    }
}

/// Reconstruct the matching named by an outcome document, requiring every
/// triple to be a contract the individual actually ranked.
pub fn matching_from_file(instance: &Instance, file: &OutcomeFile) -> Result<Matching, LoadError> {
    let mut contracts = Vec::with_capacity(file.matching.len());
    for record in &file.matching {
        let c = untriple(
            instance,
            &TripleRecord {
                individual: record.individual.clone(),
                institution: record.institution.clone(),
                category: record.category.clone(),
            },
        )?;
        if instance
            .pref_index(c.individual, c.institution, c.category)
            .is_none()
        {
            return Err(LoadError::UnknownReference(format!(
                "individual `{}` never ranked ({}, {})",
                record.individual, record.institution, record.category
            )));
        }
        contracts.push(c);
    }
    Matching::new(instance, contracts).map_err(|e| LoadError::UnknownReference(e.to_string()))
}

pub fn load_outcome(path: &Path) -> Result<OutcomeFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| LoadError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn save_outcome(path: &Path, outcome: &OutcomeFile) -> Result<(), LoadError> {
    std::fs::write(path, to_canonical_json(outcome)).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}
