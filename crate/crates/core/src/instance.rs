//! Problem instances: institutions with capacities, reservations and merit
//! rankings, individuals with memberships, horizontal types and preference
//! lists, plus the all-or-nothing validation gate that every loader goes
//! through.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{Membership, VerticalCategory};
use crate::contract::Contract;
use crate::hierarchy::{HierarchyError, HierarchyForest};
use crate::ids::{IndividualId, InstitutionId};

pub const SCHEMA_VERSION: u32 = 1;

/// Unvalidated instance description, exactly as it appears on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawInstance {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    #[serde(default)]
    pub horizontal_types: Vec<RawTypeDecl>,
    #[serde(default)]
    pub institutions: Vec<RawInstitution>,
    #[serde(default)]
    pub individuals: Vec<RawIndividual>,
    /// Generator provenance (seed and parameters), echoed by `gen` and
    /// ignored by validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

impl Default for RawInstance {
    fn default() -> Self {
        RawInstance {
            schema_version: SCHEMA_VERSION,
            horizontal_types: Vec::new(),
            institutions: Vec::new(),
            individuals: Vec::new(),
            generator: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawTypeDecl {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawInstitution {
    pub id: String,
    pub total_capacity: u32,
    /// Reserved-category capacities keyed by `SC`/`ST`/`OBC`/`EWS`; the open
    /// capacity is always derived as the residual.
    #[serde(default)]
    pub vertical_capacities: BTreeMap<String, u32>,
    /// Horizontal reservation vectors keyed by vertical category, then by
    /// horizontal type. Missing entries are zero.
    #[serde(default)]
    pub horizontal_reservations: BTreeMap<String, BTreeMap<String, u32>>,
    /// Merit scores keyed by individual id; higher is better. Must cover
    /// every individual and contain no ties.
    #[serde(default)]
    pub merit_scores: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawIndividual {
    pub id: String,
    pub membership: String,
    #[serde(default)]
    pub horizontal_types: Vec<String>,
    /// Strictly ranked `(institution, category)` pairs, best first. Pairs not
    /// listed are unacceptable.
    #[serde(default)]
    pub preferences: Vec<(String, String)>,
}

/// Machine-readable validation error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationCode {
    UnsupportedSchema,
    DuplicateId,
    CapacityOverflow,
    IneligiblePreference,
    DuplicatePreference,
    ScoreTie,
    MissingScore,
    HierarchyViolation,
    Cycle,
    UnknownType,
    UnknownIndividual,
    UnknownInstitution,
    UnknownCategory,
    TooManyTypes,
}

impl ValidationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationCode::UnsupportedSchema => "UNSUPPORTED_SCHEMA",
            ValidationCode::DuplicateId => "DUPLICATE_ID",
            ValidationCode::CapacityOverflow => "CAPACITY_OVERFLOW",
            ValidationCode::IneligiblePreference => "INELIGIBLE_PREFERENCE",
            ValidationCode::DuplicatePreference => "DUPLICATE_PREFERENCE",
            ValidationCode::ScoreTie => "SCORE_TIE",
            ValidationCode::MissingScore => "MISSING_SCORE",
            ValidationCode::HierarchyViolation => "HIERARCHY_VIOLATION",
            ValidationCode::Cycle => "CYCLE",
            ValidationCode::UnknownType => "UNKNOWN_TYPE",
            ValidationCode::UnknownIndividual => "UNKNOWN_INDIVIDUAL",
            ValidationCode::UnknownInstitution => "UNKNOWN_INSTITUTION",
            ValidationCode::UnknownCategory => "UNKNOWN_CATEGORY",
            ValidationCode::TooManyTypes => "TOO_MANY_TYPES",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Error)]
#[error("{}: {message}", code.as_str())]
pub struct ValidationError {
    pub code: ValidationCode,
    pub message: String,
}

impl ValidationError {
    fn new(code: ValidationCode, message: impl Into<String>) -> Self {
        ValidationError {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationWarning {
    pub code: &'static str,
    pub message: String,
}

/// Record of a score tie converted to lexicographic-id order under the
/// `tiebreak = id` policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiebreakNote {
    pub institution: String,
    pub score: i64,
    pub resolved_order: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiebreakPolicy {
    /// Score ties are a load-time error.
    #[default]
    Reject,
    /// Ties resolve to lexicographic-id order; every conversion is recorded.
    ById,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    pub tiebreak: TiebreakPolicy,
}

/// A fully validated instance together with validation by-products.
#[derive(Debug, Clone)]
pub struct Validated {
    pub instance: Instance,
    pub warnings: Vec<ValidationWarning>,
    pub tiebreaks: Vec<TiebreakNote>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub name: String,
    pub membership: Membership,
    /// Horizontal types as a bit mask over the forest; always a root path.
    pub types: u64,
    /// Strictly ranked acceptable pairs, best first.
    pub prefs: Vec<(InstitutionId, VerticalCategory)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Institution {
    pub name: String,
    pub total_capacity: u32,
    /// Capacities of SC, ST, OBC, EWS in that order.
    pub reserved_capacity: [u32; 4],
    /// Horizontal reservation vector per vertical category (index via
    /// `VerticalCategory::index`), each over all forest types.
    pub kappa: [Vec<u32>; 5],
    /// Score of each individual; higher is better.
    pub scores: Vec<i64>,
    /// Merit position of each individual, 0 = best.
    pub rank: Vec<u32>,
    /// Individuals in merit order, best first.
    pub by_rank: Vec<IndividualId>,
}

/// A validated problem instance. Individuals, institutions and horizontal
/// types are indexed in lexicographic order of their external names.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub individuals: Vec<Individual>,
    pub institutions: Vec<Institution>,
    pub forest: HierarchyForest,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeritError {
    #[error("UNKNOWN_INDIVIDUAL: no individual with index {0}")]
    UnknownIndividual(u32),
    #[error("UNKNOWN_INSTITUTION: no institution with index {0}")]
    UnknownInstitution(u32),
    #[error("merit comparison requires two distinct individuals")]
    IdenticalIds,
}

/// Result of a strict merit comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeritOrder {
    FirstRanksHigher,
    SecondRanksHigher,
}

impl Instance {
    pub fn n_individuals(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_institutions(&self) -> usize {
        self.institutions.len()
    }

    pub fn individual(&self, i: IndividualId) -> &Individual {
        &self.individuals[i.idx()]
    }

    pub fn institution(&self, s: InstitutionId) -> &Institution {
        &self.institutions[s.idx()]
    }

    pub fn individual_ids(&self) -> impl Iterator<Item = IndividualId> {
        (0..self.individuals.len() as u32).map(IndividualId)
    }

    pub fn institution_ids(&self) -> impl Iterator<Item = InstitutionId> {
        (0..self.institutions.len() as u32).map(InstitutionId)
    }

    pub fn individual_by_name(&self, name: &str) -> Option<IndividualId> {
        self.individuals
            .binary_search_by(|ind| ind.name.as_str().cmp(name))
            .ok()
            .map(|i| IndividualId(i as u32))
    }

    pub fn institution_by_name(&self, name: &str) -> Option<InstitutionId> {
        self.institutions
            .binary_search_by(|inst| inst.name.as_str().cmp(name))
            .ok()
            .map(|i| InstitutionId(i as u32))
    }

    /// Seats of vertical category `v` at `s`; the open capacity is the
    /// residual left by the reserved categories.
    pub fn category_capacity(&self, s: InstitutionId, v: VerticalCategory) -> u32 {
        let inst = self.institution(s);
        match v {
            VerticalCategory::Open => {
                inst.total_capacity - inst.reserved_capacity.iter().sum::<u32>()
            }
            _ => inst.reserved_capacity[v.index() - 1],
        }
    }

    /// Merit position of `i` at `s`, 0 = best.
    pub fn rank(&self, s: InstitutionId, i: IndividualId) -> u32 {
        self.institutions[s.idx()].rank[i.idx()]
    }

    pub fn score(&self, s: InstitutionId, i: IndividualId) -> i64 {
        self.institutions[s.idx()].scores[i.idx()]
    }

    /// Strict merit comparison of two distinct individuals at `s`.
    pub fn merit_compare(
        &self,
        s: InstitutionId,
        a: IndividualId,
        b: IndividualId,
    ) -> Result<MeritOrder, MeritError> {
        if s.idx() >= self.institutions.len() {
            return Err(MeritError::UnknownInstitution(s.0));
        }
        let n = self.individuals.len();
        if a.idx() >= n {
            return Err(MeritError::UnknownIndividual(a.0));
        }
        if b.idx() >= n {
            return Err(MeritError::UnknownIndividual(b.0));
        }
        if a == b {
            return Err(MeritError::IdenticalIds);
        }
        if self.rank(s, a) < self.rank(s, b) {
            Ok(MeritOrder::FirstRanksHigher)
        } else {
            Ok(MeritOrder::SecondRanksHigher)
        }
    }

    /// Position of `i` in the category-restricted ranking of `r` at `s`:
    /// members of `r` in merit order, non-members below the outside option
    /// (`None`).
    pub fn category_position(
        &self,
        s: InstitutionId,
        r: VerticalCategory,
        i: IndividualId,
    ) -> Option<u32> {
        if !self.individual(i).membership.eligible(r) {
            return None;
        }
        if r == VerticalCategory::Open {
            return Some(self.rank(s, i));
        }
        let mut position = 0;
        for &j in &self.institution(s).by_rank {
            if j == i {
                return Some(position);
            }
            if self.individual(j).membership.reserved_category() == Some(r) {
                position += 1;
            }
        }
        None
    }

    /// The full contract universe: one open contract per individual and
    /// institution, plus one reserved contract per declared member.
    pub fn contract_universe(&self) -> Vec<Contract> {
        let mut out = Vec::new();
        for i in self.individual_ids() {
            let reserved = self.individual(i).membership.reserved_category();
            for s in self.institution_ids() {
                out.push(Contract::new(i, s, VerticalCategory::Open));
                if let Some(r) = reserved {
                    out.push(Contract::new(i, s, r));
                }
            }
        }
        out
    }

    /// The sub-universe of contracts individuals actually rank.
    pub fn acceptable_universe(&self) -> Vec<Contract> {
        let mut out = Vec::new();
        for i in self.individual_ids() {
            for &(s, v) in &self.individual(i).prefs {
                out.push(Contract::new(i, s, v));
            }
        }
        out
    }

    /// Position of `(s, v)` on `i`'s preference list.
    pub fn pref_index(
        &self,
        i: IndividualId,
        s: InstitutionId,
        v: VerticalCategory,
    ) -> Option<usize> {
        self.individual(i).prefs.iter().position(|&p| p == (s, v))
    }

    /// Comparison key for an assignment under `i`'s true list; lower is
    /// better. Unmatched sits right after the last ranked pair, and a pair
    /// not on the list is worse than staying unmatched.
    pub fn assignment_utility(
        &self,
        i: IndividualId,
        assigned: Option<(InstitutionId, VerticalCategory)>,
    ) -> usize {
        let len = self.individual(i).prefs.len();
        match assigned {
            None => len,
            Some((s, v)) => self.pref_index(i, s, v).unwrap_or(len + 1),
        }
    }

    /// Whether `i` strictly prefers assignment `a` to assignment `b`.
    pub fn prefers(
        &self,
        i: IndividualId,
        a: Option<(InstitutionId, VerticalCategory)>,
        b: Option<(InstitutionId, VerticalCategory)>,
    ) -> bool {
        self.assignment_utility(i, a) < self.assignment_utility(i, b)
    }

    /// Validate a raw description into an instance, reporting every violated
    /// constraint at once.
    pub fn validate(
        raw: &RawInstance,
        opts: &ValidateOptions,
    ) -> Result<Validated, Vec<ValidationError>> {
        let mut errors: Vec<ValidationError> = Vec::new();
        let mut warnings: Vec<ValidationWarning> = Vec::new();
        let mut tiebreaks: Vec<TiebreakNote> = Vec::new();

        if raw.schema_version != SCHEMA_VERSION {
            errors.push(ValidationError::new(
                ValidationCode::UnsupportedSchema,
                format!(
                    "schema_version {} is not supported (expected {})",
                    raw.schema_version, SCHEMA_VERSION
                ),
            ));
        }

        // Forest first; everything about horizontal types hangs off it.
        let decls: Vec<(String, Option<String>)> = raw
            .horizontal_types
            .iter()
            .map(|d| (d.id.clone(), d.parent.clone()))
            .collect();
        let forest = match HierarchyForest::build(&decls) {
            Ok(forest) => Some(forest),
            Err(errs) => {
                for e in errs {
                    let code = match e {
                        HierarchyError::UnknownParent { .. } => ValidationCode::UnknownType,
                        HierarchyError::Cycle { .. } => ValidationCode::Cycle,
                        HierarchyError::DuplicateType { .. } => ValidationCode::DuplicateId,
                        HierarchyError::TooManyTypes { .. } => ValidationCode::TooManyTypes,
                    };
                    errors.push(ValidationError::new(code, e.to_string()));
                }
                None
            }
        };

        // Sorted entity tables. Duplicate names are fatal for index mapping.
        let mut inst_decls: Vec<&RawInstitution> = raw.institutions.iter().collect();
        inst_decls.sort_by(|a, b| a.id.cmp(&b.id));
        for w in inst_decls.windows(2) {
            if w[0].id == w[1].id {
                errors.push(ValidationError::new(
                    ValidationCode::DuplicateId,
                    format!("institution id `{}` declared more than once", w[0].id),
                ));
            }
        }
        let mut ind_decls: Vec<&RawIndividual> = raw.individuals.iter().collect();
        ind_decls.sort_by(|a, b| a.id.cmp(&b.id));
        for w in ind_decls.windows(2) {
            if w[0].id == w[1].id {
                errors.push(ValidationError::new(
                    ValidationCode::DuplicateId,
                    format!("individual id `{}` declared more than once", w[0].id),
                ));
            }
        }
        if !errors.is_empty() && errors.iter().any(|e| e.code == ValidationCode::DuplicateId) {
            return Err(errors);
        }

        let institution_index = |name: &str| -> Option<InstitutionId> {
            inst_decls
                .binary_search_by(|probe| probe.id.as_str().cmp(name))
                .ok()
                .map(|i| InstitutionId(i as u32))
        };
        let individual_index = |name: &str| -> Option<IndividualId> {
            ind_decls
                .binary_search_by(|probe| probe.id.as_str().cmp(name))
                .ok()
                .map(|i| IndividualId(i as u32))
        };

        // Individuals: membership, type sets, preference lists.
        let mut individuals: Vec<Individual> = Vec::with_capacity(ind_decls.len());
        for decl in &ind_decls {
            let membership = match Membership::parse(&decl.membership) {
                Some(m) => m,
                None => {
                    errors.push(ValidationError::new(
                        ValidationCode::UnknownCategory,
                        format!(
                            "individual `{}` has unknown membership `{}`",
                            decl.id, decl.membership
                        ),
                    ));
                    Membership::General
                }
            };

            let mut mask = 0u64;
            if let Some(forest) = &forest {
                for ty in &decl.horizontal_types {
                    match forest.type_by_name(ty) {
                        Some(t) => mask |= t.bit(),
                        None => errors.push(ValidationError::new(
                            ValidationCode::UnknownType,
                            format!(
                                "individual `{}` has unknown horizontal type `{ty}`",
                                decl.id
                            ),
                        )),
                    }
                }
                if let Err((a, b)) = forest.check_root_path(mask) {
                    errors.push(ValidationError::new(
                        ValidationCode::HierarchyViolation,
                        format!(
                            "individual `{}` holds `{}` and `{}` which are not nested along one chain",
                            decl.id,
                            forest.name(a),
                            forest.name(b)
                        ),
                    ));
                }
            } else if !decl.horizontal_types.is_empty() {
                // forest failed to build; type sets cannot be checked
            }

            let mut prefs: Vec<(InstitutionId, VerticalCategory)> = Vec::new();
            for (inst_name, cat_name) in &decl.preferences {
                let s = match institution_index(inst_name) {
                    Some(s) => s,
                    None => {
                        errors.push(ValidationError::new(
                            ValidationCode::UnknownInstitution,
                            format!(
                                "individual `{}` ranks unknown institution `{inst_name}`",
                                decl.id
                            ),
                        ));
                        continue;
                    }
                };
                let v = match VerticalCategory::parse(cat_name) {
                    Some(v) => v,
                    None => {
                        errors.push(ValidationError::new(
                            ValidationCode::UnknownCategory,
                            format!(
                                "individual `{}` ranks unknown category `{cat_name}`",
                                decl.id
                            ),
                        ));
                        continue;
                    }
                };
                if !membership.eligible(v) {
                    errors.push(ValidationError::new(
                        ValidationCode::IneligiblePreference,
                        format!(
                            "individual `{}` ({}) is not eligible for category `{}` at `{inst_name}`",
                            decl.id, membership, v
                        ),
                    ));
                    continue;
                }
                if prefs.contains(&(s, v)) {
                    errors.push(ValidationError::new(
                        ValidationCode::DuplicatePreference,
                        format!(
                            "individual `{}` ranks ({inst_name}, {v}) more than once",
                            decl.id
                        ),
                    ));
                    continue;
                }
                prefs.push((s, v));
            }

            individuals.push(Individual {
                name: decl.id.clone(),
                membership,
                types: mask,
                prefs,
            });
        }

        // Institutions: capacities, reservations, scores.
        let n = ind_decls.len();
        let mut institutions: Vec<Institution> = Vec::with_capacity(inst_decls.len());
        for decl in &inst_decls {
            let mut reserved = [0u32; 4];
            for (key, &value) in &decl.vertical_capacities {
                match VerticalCategory::parse(key) {
                    Some(VerticalCategory::Open) | None => {
                        errors.push(ValidationError::new(
                            ValidationCode::UnknownCategory,
                            format!(
                                "institution `{}` declares capacity for `{key}`; only SC/ST/OBC/EWS may be declared, the open capacity is derived",
                                decl.id
                            ),
                        ));
                    }
                    Some(v) => reserved[v.index() - 1] = value,
                }
            }
            let reserved_total: u32 = reserved.iter().sum();
            if reserved_total > decl.total_capacity {
                errors.push(ValidationError::new(
                    ValidationCode::CapacityOverflow,
                    format!(
                        "institution `{}` reserves {reserved_total} seats but has only {} in total",
                        decl.id, decl.total_capacity
                    ),
                ));
            }

            let type_count = forest.as_ref().map(|f| f.len()).unwrap_or(0);
            let mut kappa: [Vec<u32>; 5] = std::array::from_fn(|_| vec![0u32; type_count]);
            for (cat_name, quotas) in &decl.horizontal_reservations {
                let v = match VerticalCategory::parse(cat_name) {
                    Some(v) => v,
                    None => {
                        errors.push(ValidationError::new(
                            ValidationCode::UnknownCategory,
                            format!(
                                "institution `{}` declares horizontal reservations for unknown category `{cat_name}`",
                                decl.id
                            ),
                        ));
                        continue;
                    }
                };
                for (ty_name, &q) in quotas {
                    match forest.as_ref().and_then(|f| f.type_by_name(ty_name)) {
                        Some(t) => kappa[v.index()][t.idx()] = q,
                        None => {
                            if forest.is_some() {
                                errors.push(ValidationError::new(
                                    ValidationCode::UnknownType,
                                    format!(
                                        "institution `{}` reserves `{cat_name}` seats for unknown horizontal type `{ty_name}`",
                                        decl.id
                                    ),
                                ));
                            }
                        }
                    }
                }
            }

            let mut scores = vec![0i64; n];
            let mut scored = vec![false; n];
            for (ind_name, &score) in &decl.merit_scores {
                match individual_index(ind_name) {
                    Some(i) => {
                        scores[i.idx()] = score;
                        scored[i.idx()] = true;
                    }
                    None => errors.push(ValidationError::new(
                        ValidationCode::UnknownIndividual,
                        format!(
                            "institution `{}` scores unknown individual `{ind_name}`",
                            decl.id
                        ),
                    )),
                }
            }
            for (i, &has) in scored.iter().enumerate() {
                if !has {
                    errors.push(ValidationError::new(
                        ValidationCode::MissingScore,
                        format!(
                            "institution `{}` has no merit score for individual `{}`",
                            decl.id, ind_decls[i].id
                        ),
                    ));
                }
            }

            // Merit order: score descending; ties are rejected or broken by id.
            let mut by_rank: Vec<IndividualId> = (0..n as u32).map(IndividualId).collect();
            by_rank.sort_by(|&a, &b| {
                scores[b.idx()]
                    .cmp(&scores[a.idx()])
                    .then_with(|| ind_decls[a.idx()].id.cmp(&ind_decls[b.idx()].id))
            });
            let mut k = 0;
            while k + 1 < by_rank.len() {
                let score = scores[by_rank[k].idx()];
                let mut end = k + 1;
                while end < by_rank.len() && scores[by_rank[end].idx()] == score {
                    end += 1;
                }
                if end > k + 1 {
                    let group: Vec<String> = by_rank[k..end]
                        .iter()
                        .map(|i| ind_decls[i.idx()].id.clone())
                        .collect();
                    match opts.tiebreak {
                        TiebreakPolicy::Reject => errors.push(ValidationError::new(
                            ValidationCode::ScoreTie,
                            format!(
                                "institution `{}` scores {} identically ({score})",
                                decl.id,
                                group.join(", ")
                            ),
                        )),
                        TiebreakPolicy::ById => tiebreaks.push(TiebreakNote {
                            institution: decl.id.clone(),
                            score,
                            resolved_order: group,
                        }),
                    }
                }
                k = end;
            }
            let mut rank = vec![0u32; n];
            for (pos, &i) in by_rank.iter().enumerate() {
                rank[i.idx()] = pos as u32;
            }

            institutions.push(Institution {
                name: decl.id.clone(),
                total_capacity: decl.total_capacity,
                reserved_capacity: reserved,
                kappa,
                scores,
                rank,
                by_rank,
            });
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        let forest = forest.expect("forest errors already returned");

        // Reservations that can exceed a category's capacity make selection
        // order-dependent when capacity runs out mid-level; warn, don't fail.
        for inst in &institutions {
            for v in VerticalCategory::ALL {
                let capacity = match v {
                    VerticalCategory::Open => {
                        inst.total_capacity - inst.reserved_capacity.iter().sum::<u32>()
                    }
                    _ => inst.reserved_capacity[v.index() - 1],
                };
                let demand = forest.laminar_demand(&inst.kappa[v.index()]);
                if demand > capacity as u64 {
                    warnings.push(ValidationWarning {
                        code: "QUOTA_OVER_CAPACITY",
                        message: format!(
                            "institution `{}` category `{v}`: horizontal reservations demand up to {demand} seats but the category has {capacity}",
                            inst.name
                        ),
                    });
                }
            }
        }

        Ok(Validated {
            instance: Instance {
                individuals,
                institutions,
                forest,
            },
            warnings,
            tiebreaks,
        })
    }
}

impl fmt::Display for MeritOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeritOrder::FirstRanksHigher => f.write_str("first"),
            MeritOrder::SecondRanksHigher => f.write_str("second"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn validate(raw: &RawInstance) -> Result<Validated, Vec<ValidationError>> {
        Instance::validate(raw, &ValidateOptions::default())
    }

    #[test]
    fn open_capacity_is_the_residual() {
        let raw = RawInstance {
            institutions: vec![institution(
                "s",
                10,
                &[("SC", 2), ("ST", 1), ("OBC", 3), ("EWS", 1)],
                &[],
            )],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        let s = v.instance.institution_by_name("s").unwrap();
        assert_eq!(v.instance.category_capacity(s, VerticalCategory::Open), 3);
    }

    #[test]
    fn reserving_more_than_total_overflows() {
        let raw = RawInstance {
            institutions: vec![institution("s", 2, &[("SC", 2), ("OBC", 1)], &[])],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.code == ValidationCode::CapacityOverflow));
        assert!(errs[0].message.contains("`s`"));
    }

    #[test]
    fn general_member_cannot_rank_reserved_seats() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("i", 1)])],
            individuals: vec![individual("i", "general", &[("s", "OBC")])],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, ValidationCode::IneligiblePreference);
    }

    #[test]
    fn member_of_one_category_cannot_rank_another() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("i", 1)])],
            individuals: vec![individual("i", "SC", &[("s", "ST")])],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::IneligiblePreference);
    }

    #[test]
    fn empty_instance_is_valid() {
        let v = validate(&RawInstance::default()).unwrap();
        assert_eq!(v.instance.n_individuals(), 0);
        assert_eq!(v.instance.n_institutions(), 0);
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn duplicate_preference_rejected() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("i", 1)])],
            individuals: vec![individual("i", "general", &[("s", "o"), ("s", "o")])],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::DuplicatePreference);
    }

    #[test]
    fn score_ties_rejected_by_default_broken_by_id_on_request() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("a", 5), ("b", 5)])],
            individuals: vec![
                individual("a", "general", &[]),
                individual("b", "general", &[]),
            ],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::ScoreTie);

        let v = Instance::validate(
            &raw,
            &ValidateOptions {
                tiebreak: TiebreakPolicy::ById,
            },
        )
        .unwrap();
        assert_eq!(v.tiebreaks.len(), 1);
        assert_eq!(v.tiebreaks[0].resolved_order, vec!["a", "b"]);
        let s = v.instance.institution_by_name("s").unwrap();
        let a = v.instance.individual_by_name("a").unwrap();
        let b = v.instance.individual_by_name("b").unwrap();
        assert_eq!(
            v.instance.merit_compare(s, a, b).unwrap(),
            MeritOrder::FirstRanksHigher
        );
    }

    #[test]
    fn missing_scores_are_reported() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[])],
            individuals: vec![individual("i", "general", &[])],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::MissingScore);
    }

    #[test]
    fn merit_compare_orders_by_score() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("a", 90), ("b", 80)])],
            individuals: vec![
                individual("a", "general", &[]),
                individual("b", "general", &[]),
            ],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        let s = v.instance.institution_by_name("s").unwrap();
        let a = v.instance.individual_by_name("a").unwrap();
        let b = v.instance.individual_by_name("b").unwrap();
        assert_eq!(
            v.instance.merit_compare(s, a, b).unwrap(),
            MeritOrder::FirstRanksHigher
        );
        assert_eq!(
            v.instance.merit_compare(s, b, a).unwrap(),
            MeritOrder::SecondRanksHigher
        );
        assert_eq!(
            v.instance.merit_compare(s, a, a),
            Err(MeritError::IdenticalIds)
        );
    }

    #[test]
    fn non_members_rank_below_the_outside_option() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("a", 90), ("b", 80)])],
            individuals: vec![individual("a", "general", &[]), individual("b", "OBC", &[])],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        let s = v.instance.institution_by_name("s").unwrap();
        let a = v.instance.individual_by_name("a").unwrap();
        let b = v.instance.individual_by_name("b").unwrap();
        assert_eq!(
            v.instance.category_position(s, VerticalCategory::Obc, a),
            None
        );
        assert_eq!(
            v.instance.category_position(s, VerticalCategory::Obc, b),
            Some(0)
        );
    }

    #[test]
    fn universe_counts_follow_membership() {
        let raw = RawInstance {
            institutions: vec![
                institution("a", 1, &[], &[("g", 1), ("r", 2)]),
                institution("b", 1, &[], &[("g", 1), ("r", 2)]),
            ],
            individuals: vec![individual("g", "general", &[]), individual("r", "OBC", &[])],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        let universe = v.instance.contract_universe();
        // 1 general x 2 institutions + 1 reserved x 2 institutions x 2
        assert_eq!(universe.len(), 6);
        let g = v.instance.individual_by_name("g").unwrap();
        assert!(universe
            .iter()
            .filter(|c| c.individual == g)
            .all(|c| c.category == VerticalCategory::Open));
        let r = v.instance.individual_by_name("r").unwrap();
        assert_eq!(universe.iter().filter(|c| c.individual == r).count(), 4);
    }

    #[test]
    fn withheld_membership_is_general() {
        // Non-disclosure is modeled as membership `general` on input.
        let raw = RawInstance {
            institutions: vec![institution("a", 1, &[], &[("r", 1)])],
            individuals: vec![individual("r", "general", &[("a", "o")])],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        let universe = v.instance.contract_universe();
        assert_eq!(universe.len(), 1);
        assert_eq!(universe[0].category, VerticalCategory::Open);
    }

    #[test]
    fn type_sets_must_be_closed_upward() {
        let raw = RawInstance {
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
            institutions: vec![institution("s", 1, &[], &[("i", 1)])],
            individuals: vec![RawIndividual {
                id: "i".into(),
                membership: "general".into(),
                horizontal_types: vec!["blind".into()],
                preferences: vec![],
            }],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::HierarchyViolation);
        assert!(errs[0].message.contains("`i`"));
    }

    #[test]
    fn incomparable_type_pairs_are_rejected_with_the_pair() {
        let raw = RawInstance {
            horizontal_types: vec![
                RawTypeDecl {
                    id: "pwd".into(),
                    parent: None,
                },
                RawTypeDecl {
                    id: "blind".into(),
                    parent: Some("pwd".into()),
                },
                RawTypeDecl {
                    id: "deaf".into(),
                    parent: Some("pwd".into()),
                },
            ],
            institutions: vec![institution("s", 1, &[], &[("i", 1)])],
            individuals: vec![RawIndividual {
                id: "i".into(),
                membership: "general".into(),
                horizontal_types: vec!["pwd".into(), "blind".into(), "deaf".into()],
                preferences: vec![],
            }],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::HierarchyViolation);
        assert!(errs[0].message.contains("blind") && errs[0].message.contains("deaf"));
    }

    #[test]
    fn unknown_horizontal_types_are_rejected() {
        let raw = RawInstance {
            institutions: vec![institution("s", 1, &[], &[("i", 1)])],
            individuals: vec![RawIndividual {
                id: "i".into(),
                membership: "general".into(),
                horizontal_types: vec!["ghost".into()],
                preferences: vec![],
            }],
            ..RawInstance::default()
        };
        let errs = validate(&raw).unwrap_err();
        assert_eq!(errs[0].code, ValidationCode::UnknownType);
    }

    #[test]
    fn quota_over_capacity_warns_but_validates() {
        let raw = RawInstance {
            horizontal_types: vec![RawTypeDecl {
                id: "h".into(),
                parent: None,
            }],
            institutions: vec![RawInstitution {
                id: "s".into(),
                total_capacity: 1,
                vertical_capacities: BTreeMap::new(),
                horizontal_reservations: [(
                    "o".to_string(),
                    [("h".to_string(), 2u32)].into_iter().collect(),
                )]
                .into_iter()
                .collect(),
                merit_scores: BTreeMap::new(),
            }],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        assert_eq!(v.warnings.len(), 1);
        assert_eq!(v.warnings[0].code, "QUOTA_OVER_CAPACITY");
    }

    #[test]
    fn preference_lists_map_into_the_acceptable_universe() {
        let raw = RawInstance {
            institutions: vec![
                institution("a", 1, &[], &[("r", 1)]),
                institution("b", 1, &[], &[("r", 1)]),
            ],
            individuals: vec![individual(
                "r",
                "OBC",
                &[("a", "o"), ("a", "OBC"), ("b", "o")],
            )],
            ..RawInstance::default()
        };
        let v = validate(&raw).unwrap();
        let acceptable = v.instance.acceptable_universe();
        assert_eq!(acceptable.len(), 3);
        let r = v.instance.individual_by_name("r").unwrap();
        for c in &acceptable {
            assert!(v
                .instance
                .pref_index(c.individual, c.institution, c.category)
                .is_some());
            assert_eq!(c.individual, r);
        }
    }
}
