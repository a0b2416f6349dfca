//! The laminar containment forest over horizontal types.
//!
//! Horizontal reservations are nested: whenever the populations of two types
//! can intersect, one type contains the other. We declare that containment
//! structurally as a parent map and require every individual's type set to be
//! a root path of the declared forest, which implies laminarity on any
//! realized population regardless of who applies.

use serde::Serialize;
use thiserror::Error;

use crate::ids::HorizontalType;

/// Hard cap on the number of horizontal types; type sets are stored as `u64`
/// bit masks.
pub const MAX_TYPES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum HierarchyError {
    #[error("UNKNOWN_TYPE: `{child}` declares parent `{parent}` which is not a declared type")]
    UnknownParent { child: String, parent: String },
    #[error("CYCLE: containment chain starting at `{type_id}` never reaches a root")]
    Cycle { type_id: String },
    #[error("DUPLICATE_TYPE: type id `{type_id}` declared more than once")]
    DuplicateType { type_id: String },
    #[error("TOO_MANY_TYPES: {count} horizontal types declared, at most {max} supported")]
    TooManyTypes { count: usize, max: usize },
}

/// A validated laminar forest. Type ids are indices in lexicographic order of
/// the external type names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyForest {
    names: Vec<String>,
    parent: Vec<Option<HorizontalType>>,
    children: Vec<Vec<HorizontalType>>,
    /// Strict ancestors of each type, nearest first.
    ancestors: Vec<Vec<HorizontalType>>,
    /// `ancestors[t]` as a bit mask.
    ancestor_mask: Vec<u64>,
    /// `t` plus its ancestors: the unique valid type set of an individual
    /// whose deepest type is `t`.
    path_mask: Vec<u64>,
    /// Peeling order: level 0 holds the current leaves, each later level the
    /// leaves of the forest after all earlier levels are removed. Types are
    /// listed in ascending id order within a level.
    levels: Vec<Vec<HorizontalType>>,
}

impl HierarchyForest {
    /// Build a forest from `(name, parent name)` declarations. Names are
    /// sorted internally, so declaration order does not matter.
    pub fn build(declarations: &[(String, Option<String>)]) -> Result<Self, Vec<HierarchyError>> {
        let mut errors = Vec::new();
        if declarations.len() > MAX_TYPES {
            errors.push(HierarchyError::TooManyTypes {
                count: declarations.len(),
                max: MAX_TYPES,
            });
            return Err(errors);
        }

        let mut sorted: Vec<(String, Option<String>)> = declarations.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for window in sorted.windows(2) {
            if window[0].0 == window[1].0 {
                errors.push(HierarchyError::DuplicateType {
                    type_id: window[0].0.clone(),
                });
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let names: Vec<String> = sorted.iter().map(|(n, _)| n.clone()).collect();
        let index_of = |name: &str| -> Option<HorizontalType> {
            names
                .binary_search_by(|probe| probe.as_str().cmp(name))
                .ok()
                .map(|i| HorizontalType(i as u32))
        };

        let mut parent: Vec<Option<HorizontalType>> = vec![None; names.len()];
        for (i, (child, parent_name)) in sorted.iter().enumerate() {
            if let Some(parent_name) = parent_name {
                match index_of(parent_name) {
                    Some(p) => parent[i] = Some(p),
                    None => errors.push(HierarchyError::UnknownParent {
                        child: child.clone(),
                        parent: parent_name.clone(),
                    }),
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        // Walk each parent chain; a chain longer than the type count is a cycle.
        let mut ancestors: Vec<Vec<HorizontalType>> = Vec::with_capacity(names.len());
        for start in 0..names.len() {
            let mut chain = Vec::new();
            let mut cursor = parent[start];
            while let Some(p) = cursor {
                chain.push(p);
                if chain.len() > names.len() {
                    errors.push(HierarchyError::Cycle {
                        type_id: names[start].clone(),
                    });
                    chain.clear();
                    break;
                }
                cursor = parent[p.idx()];
            }
            ancestors.push(chain);
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let mut children: Vec<Vec<HorizontalType>> = vec![Vec::new(); names.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[p.idx()].push(HorizontalType(i as u32));
            }
        }

        let ancestor_mask: Vec<u64> = ancestors
            .iter()
            .map(|chain| chain.iter().fold(0u64, |m, t| m | t.bit()))
            .collect();
        let path_mask: Vec<u64> = (0..names.len())
            .map(|i| ancestor_mask[i] | (1u64 << i))
            .collect();

        // Height of each node: leaves peel first, a node peels only after all
        // of its descendants have peeled.
        let mut height = vec![0usize; names.len()];
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(ancestors[i].len()));
        for &i in &order {
            height[i] = 1 + children[i]
                .iter()
                .map(|c| height[c.idx()])
                .max()
                .unwrap_or(0);
        }
        let max_height = height.iter().copied().max().unwrap_or(0);
        let mut levels: Vec<Vec<HorizontalType>> = vec![Vec::new(); max_height];
        for i in 0..names.len() {
            levels[height[i] - 1].push(HorizontalType(i as u32));
        }

        Ok(HierarchyForest {
            names,
            parent,
            children,
            ancestors,
            ancestor_mask,
            path_mask,
            levels,
        })
    }

    /// Forest with no horizontal types at all.
    pub fn empty() -> Self {
        HierarchyForest::build(&[]).expect("empty forest is always valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, t: HorizontalType) -> &str {
        &self.names[t.idx()]
    }

    pub fn type_by_name(&self, name: &str) -> Option<HorizontalType> {
        self.names
            .binary_search_by(|probe| probe.as_str().cmp(name))
            .ok()
            .map(|i| HorizontalType(i as u32))
    }

    pub fn parent(&self, t: HorizontalType) -> Option<HorizontalType> {
        self.parent[t.idx()]
    }

    /// Containing types of `t`, nearest first; empty for roots.
    pub fn ancestors(&self, t: HorizontalType) -> &[HorizontalType] {
        &self.ancestors[t.idx()]
    }

    pub fn children(&self, t: HorizontalType) -> &[HorizontalType] {
        &self.children[t.idx()]
    }

    /// `t` and everything above it as a bit mask.
    pub fn path_mask(&self, t: HorizontalType) -> u64 {
        self.path_mask[t.idx()]
    }

    /// The peeling order driving hierarchical selection.
    pub fn levels(&self) -> &[Vec<HorizontalType>] {
        &self.levels
    }

    pub fn roots(&self) -> impl Iterator<Item = HorizontalType> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| HorizontalType(i as u32))
    }

    pub fn iter(&self) -> impl Iterator<Item = HorizontalType> {
        (0..self.names.len() as u32).map(HorizontalType)
    }

    /// Check that `mask` is a root path: all types on one containment chain
    /// and closed upward. Returns the offending pair `(held, missing-or-
    /// incomparable)` otherwise.
    pub fn check_root_path(&self, mask: u64) -> Result<(), (HorizontalType, HorizontalType)> {
        if mask == 0 {
            return Ok(());
        }
        // A valid root path equals path_mask(t) for its deepest member t.
        for t in self.iter() {
            if mask & t.bit() != 0 && self.path_mask[t.idx()] == mask {
                return Ok(());
            }
        }
        // Diagnose: either some held type's parent is missing, or two held
        // types are incomparable.
        for t in self.iter() {
            if mask & t.bit() == 0 {
                continue;
            }
            if let Some(p) = self.parent[t.idx()] {
                if mask & p.bit() == 0 {
                    return Err((t, p));
                }
            }
        }
        let held: Vec<HorizontalType> = self.iter().filter(|t| mask & t.bit() != 0).collect();
        for (i, &a) in held.iter().enumerate() {
            for &b in &held[i + 1..] {
                let comparable = self.ancestor_mask[a.idx()] & b.bit() != 0
                    || self.ancestor_mask[b.idx()] & a.bit() != 0;
                if !comparable {
                    return Err((a, b));
                }
            }
        }
        unreachable!("an upward-closed chain is a root path")
    }

    /// Worst-case seat demand of the reservation vector `kappa` under
    /// one-to-all counting: the subtree demand of a type is the larger of its
    /// own quota and the summed demands of its children. Selection never runs
    /// out of capacity mid-level when this stays within the category capacity.
    pub fn laminar_demand(&self, kappa: &[u32]) -> u64 {
        fn demand(forest: &HierarchyForest, kappa: &[u32], t: HorizontalType) -> u64 {
            let from_children: u64 = forest.children[t.idx()]
                .iter()
                .map(|&c| demand(forest, kappa, c))
                .sum();
            from_children.max(kappa[t.idx()] as u64)
        }
        self.roots().map(|r| demand(self, kappa, r)).sum()
    }
}
