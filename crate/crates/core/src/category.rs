//! Vertical category vocabulary: position categories, individual membership,
//! and seat-pool labels (which add the de-reserved pool used by the transfer
//! rule).

use std::fmt;

use serde::{Deserialize, Serialize};

/// A vertical position category. Open seats are filled by merit among all
/// applicants; the four reserved categories are minimum guarantees operated
/// over and above open competition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerticalCategory {
    #[serde(rename = "o")]
    Open,
    #[serde(rename = "SC")]
    Sc,
    #[serde(rename = "ST")]
    St,
    #[serde(rename = "OBC")]
    Obc,
    #[serde(rename = "EWS")]
    Ews,
}

impl VerticalCategory {
    /// All categories in precedence order: open first, then the reserved ones.
    pub const ALL: [VerticalCategory; 5] = [
        VerticalCategory::Open,
        VerticalCategory::Sc,
        VerticalCategory::St,
        VerticalCategory::Obc,
        VerticalCategory::Ews,
    ];

    /// The reserved categories, in precedence order.
    pub const RESERVED: [VerticalCategory; 4] = [
        VerticalCategory::Sc,
        VerticalCategory::St,
        VerticalCategory::Obc,
        VerticalCategory::Ews,
    ];

    pub fn index(self) -> usize {
        match self {
            VerticalCategory::Open => 0,
            VerticalCategory::Sc => 1,
            VerticalCategory::St => 2,
            VerticalCategory::Obc => 3,
            VerticalCategory::Ews => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerticalCategory::Open => "o",
            VerticalCategory::Sc => "SC",
            VerticalCategory::St => "ST",
            VerticalCategory::Obc => "OBC",
            VerticalCategory::Ews => "EWS",
        }
    }

    pub fn parse(token: &str) -> Option<VerticalCategory> {
        match token {
            "o" | "open" | "Open" => Some(VerticalCategory::Open),
            "SC" => Some(VerticalCategory::Sc),
            "ST" => Some(VerticalCategory::St),
            "OBC" => Some(VerticalCategory::Obc),
            "EWS" => Some(VerticalCategory::Ews),
            _ => None,
        }
    }
}

impl fmt::Display for VerticalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Vertical category membership of an individual. Non-disclosure is modeled
/// upstream as `General`: an undeclared membership never reaches this type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Membership {
    #[serde(rename = "general")]
    General,
    #[serde(rename = "SC")]
    Sc,
    #[serde(rename = "ST")]
    St,
    #[serde(rename = "OBC")]
    Obc,
    #[serde(rename = "EWS")]
    Ews,
}

impl Membership {
    /// The reserved category this member may claim, if any.
    pub fn reserved_category(self) -> Option<VerticalCategory> {
        match self {
            Membership::General => None,
            Membership::Sc => Some(VerticalCategory::Sc),
            Membership::St => Some(VerticalCategory::St),
            Membership::Obc => Some(VerticalCategory::Obc),
            Membership::Ews => Some(VerticalCategory::Ews),
        }
    }

    /// Whether a member may hold a contract in vertical category `v`.
    pub fn eligible(self, v: VerticalCategory) -> bool {
        v == VerticalCategory::Open || self.reserved_category() == Some(v)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Membership::General => "general",
            Membership::Sc => "SC",
            Membership::St => "ST",
            Membership::Obc => "OBC",
            Membership::Ews => "EWS",
        }
    }

    pub fn parse(token: &str) -> Option<Membership> {
        match token {
            "general" | "g" => Some(Membership::General),
            "SC" => Some(Membership::Sc),
            "ST" => Some(Membership::St),
            "OBC" => Some(Membership::Obc),
            "EWS" => Some(Membership::Ews),
            _ => None,
        }
    }
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Label of the seat pool a chosen contract was charged to. Every vertical
/// category is a pool; the de-reserved pool `D` holds open-competition seats
/// reverted from vacant OBC positions by the transfer rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeatPool {
    Vertical(VerticalCategory),
    Dereserved,
}

impl SeatPool {
    pub fn as_str(self) -> &'static str {
        match self {
            SeatPool::Vertical(v) => v.as_str(),
            SeatPool::Dereserved => "D",
        }
    }

    pub fn parse(token: &str) -> Option<SeatPool> {
        if token == "D" {
            Some(SeatPool::Dereserved)
        } else {
            VerticalCategory::parse(token).map(SeatPool::Vertical)
        }
    }
}

impl fmt::Display for SeatPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for SeatPool {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SeatPool {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        SeatPool::parse(&token)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown seat pool `{token}`")))
    }
}
