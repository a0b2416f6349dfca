//! Reservation shortfall: how many quota units a set of individuals leaves
//! unfilled under one-to-all counting, and the minimum achievable over all
//! subsets of a given size. Small pools are enumerated exhaustively; larger
//! ones use an exact dynamic program over the laminar forest, cross-checked
//! against enumeration in tests.

use itertools::Itertools;
use thiserror::Error;

use crate::choice::Applicant;
use crate::hierarchy::HierarchyForest;
use crate::ids::HorizontalType;

/// Pools up to this size go through exhaustive subset enumeration.
pub const EXHAUSTIVE_POOL_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShortfallError {
    #[error("SIZE_TOO_LARGE: requested subsets of size {size} from a pool of {pool}")]
    SizeTooLarge { size: usize, pool: usize },
}

/// Total unfilled quota units of a chosen set given by its members' type
/// masks.
pub fn shortfall_of(masks: impl IntoIterator<Item = u64>, kappa: &[u32]) -> u64 {
    let mut coverage = vec![0u64; kappa.len()];
    for mask in masks {
        let mut bits = mask;
        while bits != 0 {
            let t = bits.trailing_zeros() as usize;
            if t < coverage.len() {
                coverage[t] += 1;
            }
            bits &= bits - 1;
        }
    }
    kappa
        .iter()
        .zip(&coverage)
        .map(|(&k, &c)| (k as u64).saturating_sub(c))
        .sum()
}

/// Minimum shortfall over all subsets of `pool` with exactly `size` members.
pub fn min_shortfall(
    pool: &[Applicant],
    kappa: &[u32],
    size: usize,
    forest: &HierarchyForest,
) -> Result<u64, ShortfallError> {
    if pool.len() <= EXHAUSTIVE_POOL_LIMIT {
        min_shortfall_exhaustive(pool, kappa, size)
    } else {
        min_shortfall_laminar(pool, kappa, size, forest)
    }
}

/// Enumerate every subset of the given size.
pub fn min_shortfall_exhaustive(
    pool: &[Applicant],
    kappa: &[u32],
    size: usize,
) -> Result<u64, ShortfallError> {
    if size > pool.len() {
        return Err(ShortfallError::SizeTooLarge {
            size,
            pool: pool.len(),
        });
    }
    Ok((0..pool.len())
        .combinations(size)
        .map(|subset| shortfall_of(subset.into_iter().map(|i| pool[i].types), kappa))
        .min()
        .expect("at least the empty combination exists"))
}

/// Exact dynamic program over the laminar forest.
///
/// Every pool member's type set is a root path, so each member is fully
/// described by their deepest type. For each subtree the program tabulates
/// the best reachable quota fill using at most `j` members resident in that
/// subtree; sibling tables merge by knapsack. Placing a member deeper never
/// hurts: deep residents cover every level above them.
pub fn min_shortfall_laminar(
    pool: &[Applicant],
    kappa: &[u32],
    size: usize,
    forest: &HierarchyForest,
) -> Result<u64, ShortfallError> {
    if size > pool.len() {
        return Err(ShortfallError::SizeTooLarge {
            size,
            pool: pool.len(),
        });
    }
    let total: u64 = kappa.iter().map(|&k| k as u64).sum();
    if total == 0 {
        return Ok(0);
    }
    if size == 0 {
        return Ok(total);
    }

    // Residents per deepest type.
    let mut residents = vec![0usize; forest.len()];
    for applicant in pool {
        if applicant.types == 0 {
            continue;
        }
        let deepest = forest
            .iter()
            .find(|t| forest.path_mask(*t) == applicant.types)
            .expect("validated type sets are root paths");
        residents[deepest.idx()] += 1;
    }

    fn merge(a: &[u64], b: &[u64], cap: usize) -> Vec<u64> {
        let len = (a.len() + b.len() - 1).min(cap + 1);
        let mut out = vec![0u64; len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                if i + j < len {
                    out[i + j] = out[i + j].max(x + y);
                }
            }
        }
        out
    }

    // best fill using at most j members resident in subtree(t)
    fn subtree_table(
        forest: &HierarchyForest,
        kappa: &[u32],
        residents: &[usize],
        t: HorizontalType,
        cap: usize,
    ) -> Vec<u64> {
        let mut comb = vec![0u64];
        for &c in forest.children(t) {
            let child = subtree_table(forest, kappa, residents, c, cap);
            comb = merge(&comb, &child, cap);
        }
        let own = residents[t.idx()];
        let subtree_size = (comb.len() - 1) + own;
        let len = subtree_size.min(cap) + 1;
        let mut out = vec![0u64; len];
        for (j, slot) in out.iter_mut().enumerate() {
            let deep = j.min(comb.len() - 1);
            *slot = comb[deep] + (kappa[t.idx()] as u64).min(j as u64);
        }
        out
    }

    let mut table = vec![0u64];
    for root in forest.roots() {
        let sub = subtree_table(forest, kappa, &residents, root, size);
        table = merge(&table, &sub, size);
    }
    let typed_used = size.min(table.len() - 1);
    Ok(total - table[typed_used])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::IndividualId;

    fn forest_two_level() -> HierarchyForest {
        HierarchyForest::build(&[
            ("pwd".to_string(), None),
            ("blind".to_string(), Some("pwd".to_string())),
        ])
        .unwrap()
    }

    fn applicant(i: u32, mask: u64) -> Applicant {
        Applicant::new(IndividualId(i), mask)
    }

    #[test]
    fn fixture_pool_reaches_zero_shortfall() {
        let forest = forest_two_level();
        let pwd = forest.type_by_name("pwd").unwrap();
        let blind = forest.type_by_name("blind").unwrap();
        let mut kappa = vec![0u32; 2];
        kappa[pwd.idx()] = 2;
        kappa[blind.idx()] = 1;
        let pool = vec![
            applicant(1, 0),
            applicant(2, pwd.bit()),
            applicant(3, pwd.bit() | blind.bit()),
            applicant(4, 0),
            applicant(5, pwd.bit()),
        ];
        assert_eq!(min_shortfall(&pool, &kappa, 4, &forest).unwrap(), 0);
    }

    #[test]
    fn unreachable_quota_floors_the_shortfall() {
        let forest = forest_two_level();
        let blind = forest.type_by_name("blind").unwrap();
        let mut kappa = vec![0u32; 2];
        kappa[blind.idx()] = 1;
        let pool = vec![applicant(0, 0), applicant(1, 0)];
        assert_eq!(min_shortfall(&pool, &kappa, 1, &forest).unwrap(), 1);
    }

    #[test]
    fn zero_quotas_mean_zero_shortfall() {
        let forest = forest_two_level();
        let pool = vec![applicant(0, 0)];
        assert_eq!(min_shortfall(&pool, &[0, 0], 1, &forest).unwrap(), 0);
    }

    #[test]
    fn size_beyond_pool_is_an_error() {
        let forest = forest_two_level();
        assert!(matches!(
            min_shortfall(&[], &[0, 0], 1, &forest),
            Err(ShortfallError::SizeTooLarge { .. })
        ));
    }

    #[test]
    fn laminar_table_matches_enumeration_on_small_cases() {
        use crate::sampler::{sample_pool, PoolParams};
        let params = PoolParams {
            max_pool: 9,
            ..PoolParams::default()
        };
        for seed in 0..400 {
            let case = sample_pool(&params, seed);
            for size in 0..=case.pool.len() {
                let exhaustive = min_shortfall_exhaustive(&case.pool, &case.kappa, size).unwrap();
                let laminar =
                    min_shortfall_laminar(&case.pool, &case.kappa, size, &case.forest).unwrap();
                assert_eq!(
                    exhaustive,
                    laminar,
                    "seed {seed} size {size}: {:?}",
                    case.to_json()
                );
            }
        }
    }
}
