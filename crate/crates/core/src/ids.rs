//! Compact index newtypes for individuals, institutions and horizontal types.
//!
//! Instances sort their entities by external name at load time, so the index
//! order of each id space coincides with lexicographic name order.

use serde::{Deserialize, Serialize};

/// Index of an individual within an [`crate::instance::Instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndividualId(pub u32);

/// Index of an institution within an [`crate::instance::Instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstitutionId(pub u32);

/// Index of a horizontal type within a [`crate::hierarchy::HierarchyForest`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HorizontalType(pub u32);

impl IndividualId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl InstitutionId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl HorizontalType {
    pub fn idx(self) -> usize {
        self.0 as usize
    }

    /// Bit mask with only this type set.
    pub fn bit(self) -> u64 {
        1u64 << self.0
    }
}
