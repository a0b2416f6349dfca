//! Seeded random generation of category-level pools and whole instances.
//! Everything is deterministic per seed; samplers draw through ChaCha so the
//! same seed reproduces the same case on any platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::category::{Membership, VerticalCategory};
use crate::choice::Applicant;
use crate::hierarchy::HierarchyForest;
use crate::ids::IndividualId;
use crate::instance::{
    Instance, RawIndividual, RawInstance, RawInstitution, RawTypeDecl, ValidateOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("BAD_PARAMS: {0}")]
    BadParams(String),
}

/// Parameters for category-level pool sampling.
#[derive(Debug, Clone)]
pub struct PoolParams {
    pub max_types: u32,
    pub max_pool: u32,
    pub max_capacity: u32,
    pub max_quota: u32,
    /// Probability that a pool member has no horizontal type.
    pub untyped_share: f64,
    /// Keep reservation vectors within the category capacity (no quota
    /// clamping can bind during selection).
    pub feasible_only: bool,
}

impl Default for PoolParams {
    fn default() -> Self {
        PoolParams {
            max_types: 4,
            max_pool: 10,
            max_capacity: 6,
            max_quota: 3,
            untyped_share: 0.35,
            feasible_only: false,
        }
    }
}

/// One sampled category-level case. Pool order is merit order (best first)
/// and `IndividualId(k)` has merit rank `k`.
#[derive(Debug, Clone)]
pub struct SampledPool {
    pub forest: HierarchyForest,
    pub kappa: Vec<u32>,
    pub capacity: u32,
    pub pool: Vec<Applicant>,
}

impl SampledPool {
    pub fn rank(&self, i: IndividualId) -> u32 {
        i.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "types": self
                .forest
                .iter()
                .map(|t| json!({
                    "id": self.forest.name(t),
                    "parent": self.forest.parent(t).map(|p| self.forest.name(p)),
                }))
                .collect::<Vec<_>>(),
            "kappa": self.kappa,
            "capacity": self.capacity,
            "pool": self
                .pool
                .iter()
                .map(|a| json!({
                    "id": a.id.0,
                    "types": self
                        .forest
                        .iter()
                        .filter(|t| a.holds(*t))
                        .map(|t| self.forest.name(t).to_string())
                        .collect::<Vec<_>>(),
                }))
                .collect::<Vec<_>>(),
        })
    }
}

/// Sample a random forest with zero-padded names so index order matches name
/// order.
pub fn sample_forest(rng: &mut ChaCha8Rng, max_types: u32) -> HierarchyForest {
    let count = rng.random_range(0..=max_types) as usize;
    let mut decls: Vec<(String, Option<String>)> = Vec::with_capacity(count);
    for t in 0..count {
        let parent = if t > 0 && rng.random_bool(0.6) {
            Some(format!("h{:02}", rng.random_range(0..t)))
        } else {
            None
        };
        decls.push((format!("h{t:02}"), parent));
    }
    HierarchyForest::build(&decls).expect("generated forests are acyclic")
}

pub fn sample_pool(params: &PoolParams, seed: u64) -> SampledPool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forest = sample_forest(&mut rng, params.max_types);
    let capacity = rng.random_range(0..=params.max_capacity);
    let mut kappa: Vec<u32> = (0..forest.len())
        .map(|_| rng.random_range(0..=params.max_quota))
        .collect();
    if params.feasible_only && !kappa.is_empty() {
        while forest.laminar_demand(&kappa) > capacity as u64 {
            let positive: Vec<usize> = kappa
                .iter()
                .enumerate()
                .filter(|(_, &q)| q > 0)
                .map(|(i, _)| i)
                .collect();
            let pick = positive[rng.random_range(0..positive.len())];
            kappa[pick] -= 1;
        }
    }
    let n = rng.random_range(0..=params.max_pool);
    let pool = (0..n)
        .map(|i| {
            let mask = if forest.is_empty() || rng.random_bool(params.untyped_share) {
                0
            } else {
                let t = crate::ids::HorizontalType(rng.random_range(0..forest.len() as u32));
                forest.path_mask(t)
            };
            Applicant::new(IndividualId(i), mask)
        })
        .collect();
    SampledPool {
        forest,
        kappa,
        capacity,
        pool,
    }
}

/// Parameters for whole-instance generation.
#[derive(Debug, Clone)]
pub struct InstanceParams {
    pub individuals: u32,
    pub institutions: u32,
    pub max_types: u32,
    pub untyped_share: f64,
    /// Relative draw weights of general, SC, ST, OBC, EWS membership.
    pub membership_weights: [u32; 5],
    pub max_capacity: u32,
    pub max_quota: u32,
    /// Bounds on how many institutions an individual ranks.
    pub list_institutions: (u32, u32),
    /// Probability that a reserved member lists their reserved pairs.
    pub disclose_prob: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            individuals: 6,
            institutions: 2,
            max_types: 3,
            untyped_share: 0.5,
            membership_weights: [4, 1, 1, 2, 1],
            max_capacity: 4,
            max_quota: 2,
            list_institutions: (1, 2),
            disclose_prob: 0.8,
        }
    }
}

impl InstanceParams {
    fn check(&self) -> Result<(), SamplerError> {
        if !(0.0..=1.0).contains(&self.untyped_share) {
            return Err(SamplerError::BadParams(
                "untyped_share must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.disclose_prob) {
            return Err(SamplerError::BadParams(
                "disclose_prob must lie in [0, 1]".into(),
            ));
        }
        if self.membership_weights.iter().sum::<u32>() == 0 {
            return Err(SamplerError::BadParams(
                "membership weights must not all be zero".into(),
            ));
        }
        if self.list_institutions.0 > self.list_institutions.1 {
            return Err(SamplerError::BadParams(
                "list_institutions bounds are inverted".into(),
            ));
        }
        if self.max_types as usize > crate::hierarchy::MAX_TYPES {
            return Err(SamplerError::BadParams(format!(
                "at most {} horizontal types supported",
                crate::hierarchy::MAX_TYPES
            )));
        }
        Ok(())
    }
}

fn draw_membership(rng: &mut ChaCha8Rng, weights: &[u32; 5]) -> Membership {
    let total: u32 = weights.iter().sum();
    let mut draw = rng.random_range(0..total);
    for (k, &w) in weights.iter().enumerate() {
        if draw < w {
            return match k {
                0 => Membership::General,
                1 => Membership::Sc,
                2 => Membership::St,
                3 => Membership::Obc,
                _ => Membership::Ews,
            };
        }
        draw -= w;
    }
    Membership::General
}

/// Generate a raw instance description. The result always passes validation
/// with default options and triggers no quota-over-capacity warnings.
pub fn generate_raw_instance(
    params: &InstanceParams,
    seed: u64,
) -> Result<RawInstance, SamplerError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.individuals as usize;
    let m = params.institutions as usize;

    let forest = sample_forest(&mut rng, params.max_types);
    let horizontal_types: Vec<RawTypeDecl> = forest
        .iter()
        .map(|t| RawTypeDecl {
            id: forest.name(t).to_string(),
            parent: forest.parent(t).map(|p| forest.name(p).to_string()),
        })
        .collect();

    let ind_name = |i: usize| format!("i{i:03}");
    let inst_name = |s: usize| format!("s{s:02}");

    // Memberships and horizontal types first; preference lists depend on them.
    let memberships: Vec<Membership> = (0..n)
        .map(|_| draw_membership(&mut rng, &params.membership_weights))
        .collect();
    let masks: Vec<Vec<String>> = (0..n)
        .map(|_| {
            if forest.is_empty() || rng.random_bool(params.untyped_share) {
                Vec::new()
            } else {
                let t = crate::ids::HorizontalType(rng.random_range(0..forest.len() as u32));
                let mask = forest.path_mask(t);
                forest
                    .iter()
                    .filter(|u| mask & u.bit() != 0)
                    .map(|u| forest.name(u).to_string())
                    .collect()
            }
        })
        .collect();

    let individuals: Vec<RawIndividual> = (0..n)
        .map(|i| {
            let lo = params.list_institutions.0.min(m as u32);
            let hi = params.list_institutions.1.min(m as u32);
            let count = if m == 0 {
                0
            } else {
                rng.random_range(lo..=hi) as usize
            };
            let mut ranked: Vec<usize> = (0..m).collect();
            // partial shuffle, take the first `count`
            for k in 0..count.min(m) {
                let pick = rng.random_range(k..m);
                ranked.swap(k, pick);
            }
            ranked.truncate(count);

            let mut pairs: Vec<(String, String)> = Vec::new();
            for &s in &ranked {
                match memberships[i].reserved_category() {
                    Some(r) if rng.random_bool(params.disclose_prob) => {
                        // Some members prefer the reserved seat first.
                        if rng.random_bool(0.3) {
                            pairs.push((inst_name(s), r.as_str().to_string()));
                            pairs.push((inst_name(s), "o".to_string()));
                        } else {
                            pairs.push((inst_name(s), "o".to_string()));
                            pairs.push((inst_name(s), r.as_str().to_string()));
                        }
                        // Occasionally drop the open pair entirely.
                        if rng.random_bool(0.1) {
                            let len = pairs.len();
                            pairs.remove(len - if pairs[len - 1].1 == "o" { 1 } else { 2 });
                        }
                    }
                    _ => pairs.push((inst_name(s), "o".to_string())),
                }
            }
            RawIndividual {
                id: ind_name(i),
                membership: memberships[i].as_str().to_string(),
                horizontal_types: masks[i].clone(),
                preferences: pairs,
            }
        })
        .collect();

    let institutions: Vec<RawInstitution> = (0..m)
        .map(|s| {
            let total = rng.random_range(0..=params.max_capacity);
            let mut remaining = total;
            let mut reserved: Vec<(VerticalCategory, u32)> = Vec::new();
            let mut order = VerticalCategory::RESERVED.to_vec();
            for k in 0..order.len() {
                let pick = rng.random_range(k..order.len());
                order.swap(k, pick);
            }
            for v in order {
                if remaining == 0 {
                    break;
                }
                let q = rng.random_range(0..=remaining / 2);
                if q > 0 {
                    reserved.push((v, q));
                    remaining -= q;
                }
            }

            let mut horizontal = std::collections::BTreeMap::new();
            for v in VerticalCategory::ALL {
                let capacity = match v {
                    VerticalCategory::Open => remaining,
                    _ => reserved
                        .iter()
                        .find(|(r, _)| *r == v)
                        .map(|(_, q)| *q)
                        .unwrap_or(0),
                };
                if forest.is_empty() || capacity == 0 {
                    continue;
                }
                let mut kappa: Vec<u32> = (0..forest.len())
                    .map(|_| rng.random_range(0..=params.max_quota))
                    .collect();
                while forest.laminar_demand(&kappa) > capacity as u64 {
                    let positive: Vec<usize> = kappa
                        .iter()
                        .enumerate()
                        .filter(|(_, &q)| q > 0)
                        .map(|(i, _)| i)
                        .collect();
                    let pick = positive[rng.random_range(0..positive.len())];
                    kappa[pick] -= 1;
                }
                let entries: std::collections::BTreeMap<String, u32> = forest
                    .iter()
                    .filter(|t| kappa[t.idx()] > 0)
                    .map(|t| (forest.name(t).to_string(), kappa[t.idx()]))
                    .collect();
                if !entries.is_empty() {
                    horizontal.insert(v.as_str().to_string(), entries);
                }
            }

            // Distinct scores: a random permutation of 0..n.
            let mut scores: Vec<i64> = (0..n as i64).collect();
            for k in (1..scores.len()).rev() {
                let pick = rng.random_range(0..=k);
                scores.swap(k, pick);
            }
            RawInstitution {
                id: inst_name(s),
                total_capacity: total,
                vertical_capacities: reserved
                    .iter()
                    .map(|(v, q)| (v.as_str().to_string(), *q))
                    .collect(),
                horizontal_reservations: horizontal,
                merit_scores: (0..n).map(|i| (ind_name(i), scores[i])).collect(),
            }
        })
        .collect();

    Ok(RawInstance {
        horizontal_types,
        institutions,
        individuals,
        ..RawInstance::default()
    })
}

/// Generate and validate an instance.
pub fn sample_instance(params: &InstanceParams, seed: u64) -> Result<Instance, SamplerError> {
    let raw = generate_raw_instance(params, seed)?;
    let validated = Instance::validate(&raw, &ValidateOptions::default())
        .expect("generated instances validate");
    debug_assert!(validated.warnings.is_empty());
    Ok(validated.instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let params = InstanceParams::default();
        let a = generate_raw_instance(&params, 7).unwrap();
        let b = generate_raw_instance(&params, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_raw_instance(&params, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_individuals_is_a_valid_empty_instance() {
        let params = InstanceParams {
            individuals: 0,
            ..InstanceParams::default()
        };
        let instance = sample_instance(&params, 1).unwrap();
        assert_eq!(instance.n_individuals(), 0);
    }

    #[test]
    fn generated_instances_always_validate() {
        let params = InstanceParams::default();
        for seed in 0..200 {
            sample_instance(&params, seed).unwrap();
        }
    }

    #[test]
    fn thousand_individuals_validate_quickly() {
        let params = InstanceParams {
            individuals: 1000,
            institutions: 5,
            ..InstanceParams::default()
        };
        let raw = generate_raw_instance(&params, 3).unwrap();
        let start = std::time::Instant::now();
        Instance::validate(&raw, &ValidateOptions::default()).unwrap();
        assert!(start.elapsed() < std::time::Duration::from_secs(1));
    }

    #[test]
    fn bad_params_are_rejected() {
        let params = InstanceParams {
            untyped_share: 1.5,
            ..InstanceParams::default()
        };
        assert!(matches!(
            generate_raw_instance(&params, 0),
            Err(SamplerError::BadParams(_))
        ));
    }

    #[test]
    fn feasible_pools_never_exceed_capacity_demand() {
        let params = PoolParams {
            feasible_only: true,
            ..PoolParams::default()
        };
        for seed in 0..200 {
            let case = sample_pool(&params, seed);
            assert!(case.forest.laminar_demand(&case.kappa) <= case.capacity as u64);
        }
    }
}
