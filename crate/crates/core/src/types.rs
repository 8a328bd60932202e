use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SpotError;

/// Industry sectors covered by the corpus. Three consumer-facing, three
/// commodity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    Tech,
    Media,
    Retail,
    OilGas,
    MetalsMining,
    Chemicals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SectorGroup {
    Commodities,
    Consumer,
}

impl Sector {
    pub const ALL: [Sector; 6] = [
        Sector::Tech,
        Sector::Media,
        Sector::Retail,
        Sector::OilGas,
        Sector::MetalsMining,
        Sector::Chemicals,
    ];

    pub fn group(self) -> SectorGroup {
        match self {
            Sector::Tech | Sector::Media | Sector::Retail => SectorGroup::Consumer,
            Sector::OilGas | Sector::MetalsMining | Sector::Chemicals => SectorGroup::Commodities,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sector::Tech => "Tech",
            Sector::Media => "Media",
            Sector::Retail => "Retail",
            Sector::OilGas => "OilGas",
            Sector::MetalsMining => "MetalsMining",
            Sector::Chemicals => "Chemicals",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sector {
    type Err = SpotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "tech" | "technology" => Ok(Sector::Tech),
            "media" => Ok(Sector::Media),
            "retail" => Ok(Sector::Retail),
            "oilgas" => Ok(Sector::OilGas),
            "metalsmining" | "metal" | "metals" => Ok(Sector::MetalsMining),
            "chemicals" => Ok(Sector::Chemicals),
            _ => Err(SpotError::Validation(format!("unknown sector {s:?}"))),
        }
    }
}

/// SEC form type of a filing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocType {
    #[serde(rename = "8-K")]
    EightK,
    #[serde(rename = "10-Q")]
    TenQ,
    #[serde(rename = "10-K")]
    TenK,
    #[serde(rename = "other")]
    Other,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::EightK => "8-K",
            DocType::TenQ => "10-Q",
            DocType::TenK => "10-K",
            DocType::Other => "other",
        }
    }

    /// Lenient parse: anything unrecognised becomes [`DocType::Other`].
    pub fn parse_lenient(s: &str) -> DocType {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match key.as_str() {
            "8K" => DocType::EightK,
            "10Q" => DocType::TenQ,
            "10K" => DocType::TenK,
            _ => DocType::Other,
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
