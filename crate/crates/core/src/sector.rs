//! GICS top-level sectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// One of the 11 GICS sectors. Declaration order is the row order used in
/// sector reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    CommunicationServices,
    ConsumerDiscretionary,
    Energy,
    InformationTechnology,
    HealthCare,
    Financials,
    Utilities,
    ConsumerStaples,
    Industrials,
    RealEstate,
    Materials,
}

impl Sector {
    pub const ALL: [Sector; 11] = [
        Sector::CommunicationServices,
        Sector::ConsumerDiscretionary,
        Sector::Energy,
        Sector::InformationTechnology,
        Sector::HealthCare,
        Sector::Financials,
        Sector::Utilities,
        Sector::ConsumerStaples,
        Sector::Industrials,
        Sector::RealEstate,
        Sector::Materials,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sector::CommunicationServices => "Communication Services",
            Sector::ConsumerDiscretionary => "Consumer Discretionary",
            Sector::Energy => "Energy",
            Sector::InformationTechnology => "Information Technology",
            Sector::HealthCare => "Health Care",
            Sector::Financials => "Financials",
            Sector::Utilities => "Utilities",
            Sector::ConsumerStaples => "Consumer Staples",
            Sector::Industrials => "Industrials",
            Sector::RealEstate => "Real Estate",
            Sector::Materials => "Materials",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        Sector::ALL
            .iter()
            .copied()
            .find(|sector| sector.name().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| Error::UnknownSector(s.to_string()))
    }
}

impl Serialize for Sector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Sector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
