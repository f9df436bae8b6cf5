use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinal level used for both risk and benefit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    L,
    M,
    H,
    VH,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::L, Level::M, Level::H, Level::VH];
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::L => "L",
            Level::M => "M",
            Level::H => "H",
            Level::VH => "VH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Release,
    ReleaseWithControls,
    DoNotRelease,
}

impl Decision {
    fn permissiveness(self) -> u8 {
        match self {
            Decision::Release => 2,
            Decision::ReleaseWithControls => 1,
            Decision::DoNotRelease => 0,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Release => "Release",
            Decision::ReleaseWithControls => "Release with controls",
            Decision::DoNotRelease => "Do not release",
        })
    }
}

/// Risk percentages in `[min, max)` map to `level`; the range ending at 100
/// includes 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRange {
    pub level: Level,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskCutoffs {
    pub ranges: Vec<LevelRange>,
}

impl Default for RiskCutoffs {
    fn default() -> Self {
        let r = |level, min, max| LevelRange { level, min, max };
        RiskCutoffs {
            ranges: vec![
                r(Level::L, 0.0, 5.0),
                r(Level::M, 5.0, 20.0),
                r(Level::H, 20.0, 50.0),
                r(Level::VH, 50.0, 100.0),
            ],
        }
    }
}

impl RiskCutoffs {
    /// Ranges must tile [0, 100] without gaps or overlaps, with levels
    /// strictly increasing.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("risk cutoffs: {m}")));
        let mut ranges = self.ranges.clone();
        ranges.sort_by(|a, b| a.min.total_cmp(&b.min));
        let (Some(first), Some(last)) = (ranges.first(), ranges.last()) else {
            return bad("no ranges".into());
        };
        if first.min != 0.0 {
            return bad(format!("coverage starts at {}, not 0", first.min));
        }
        if last.max != 100.0 {
            return bad(format!("coverage ends at {}, not 100", last.max));
        }
        for r in &ranges {
            if !(r.min < r.max) {
                return bad(format!("empty range [{}, {}) for {}", r.min, r.max, r.level));
            }
        }
        for w in ranges.windows(2) {
            if w[1].min > w[0].max {
                return bad(format!("gap between {} and {}", w[0].max, w[1].min));
            }
            if w[1].min < w[0].max {
                return bad(format!("{} and {} overlap", w[0].level, w[1].level));
            }
            if w[1].level <= w[0].level {
                return bad(format!("level {} follows {}", w[1].level, w[0].level));
            }
        }
        Ok(())
    }
}

pub fn risk_to_level(risk_percent: f64, cutoffs: &RiskCutoffs) -> Result<Level> {
    cutoffs.validate()?;
    if !(0.0..=100.0).contains(&risk_percent) {
        return Err(Error::InvalidParameter(format!("risk {risk_percent} outside [0, 100]")));
    }
    cutoffs
        .ranges
        .iter()
        .find(|r| (r.min <= risk_percent && risk_percent < r.max) || (r.max == 100.0 && risk_percent == 100.0))
        .map(|r| r.level)
        .ok_or_else(|| Error::InvalidParameter(format!("no level covers {risk_percent}")))
}

/// Release decision per (risk level, benefit level). Serialized as
/// `{"<risk>": {"<benefit>": decision}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskBenefitMatrix {
    pub cells: BTreeMap<Level, BTreeMap<Level, Decision>>,
}

impl Default for RiskBenefitMatrix {
    fn default() -> Self {
        use Decision::*;
        let rows = [
            (Level::L, [Release; 4]),
            (Level::M, [ReleaseWithControls; 4]),
            (Level::H, [DoNotRelease, DoNotRelease, ReleaseWithControls, ReleaseWithControls]),
            (Level::VH, [DoNotRelease; 4]),
        ];
        let cells = rows
            .into_iter()
            .map(|(risk, row)| (risk, Level::ALL.into_iter().zip(row).collect()))
            .collect();
        RiskBenefitMatrix { cells }
    }
}

impl RiskBenefitMatrix {
    fn get(&self, risk: Level, benefit: Level) -> Option<Decision> {
        self.cells.get(&risk)?.get(&benefit).copied()
    }

    /// All 16 cells present; never more permissive as risk rises or less
    /// permissive as benefit rises.
    pub fn validate(&self) -> Result<()> {
        for risk in Level::ALL {
            for benefit in Level::ALL {
                let Some(here) = self.get(risk, benefit) else {
                    return Err(Error::InvalidParameter(format!("decision matrix lacks ({risk}, {benefit})")));
                };
                let p = here.permissiveness();
                let riskier = Level::ALL.iter().find(|l| **l > risk).and_then(|r| self.get(*r, benefit));
                let richer = Level::ALL.iter().find(|l| **l > benefit).and_then(|b| self.get(risk, *b));
                if riskier.is_some_and(|d| d.permissiveness() > p) {
                    return Err(Error::InvalidParameter(format!(
                        "decision matrix loosens as risk rises past ({risk}, {benefit})"
                    )));
                }
                if richer.is_some_and(|d| d.permissiveness() < p) {
                    return Err(Error::InvalidParameter(format!(
                        "decision matrix tightens as benefit rises past ({risk}, {benefit})"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn decide(matrix: &RiskBenefitMatrix, risk: Level, benefit: Level) -> Result<Decision> {
    matrix
        .get(risk, benefit)
        .ok_or_else(|| Error::InvalidParameter(format!("decision matrix lacks ({risk}, {benefit})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cutoffs() {
        let c = RiskCutoffs::default();
        assert_eq!(risk_to_level(0.0, &c).unwrap(), Level::L);
        assert_eq!(risk_to_level(4.99, &c).unwrap(), Level::L);
        assert_eq!(risk_to_level(5.0, &c).unwrap(), Level::M);
        assert_eq!(risk_to_level(49.9, &c).unwrap(), Level::H);
        assert_eq!(risk_to_level(100.0, &c).unwrap(), Level::VH);
        assert!(risk_to_level(100.5, &c).is_err());
    }

    #[test]
    fn broken_cutoffs() {
        let mut gap = RiskCutoffs::default();
        gap.ranges[1].max = 19.0;
        assert!(risk_to_level(1.0, &gap).is_err());
        let mut overlap = RiskCutoffs::default();
        overlap.ranges[2].min = 15.0;
        assert!(overlap.validate().is_err());
        let mut short = RiskCutoffs::default();
        short.ranges.pop();
        assert!(short.validate().is_err());
    }

    #[test]
    fn default_matrix() {
        let m = RiskBenefitMatrix::default();
        m.validate().unwrap();
        assert_eq!(decide(&m, Level::M, Level::VH).unwrap(), Decision::ReleaseWithControls);
        assert_eq!(decide(&m, Level::VH, Level::L).unwrap(), Decision::DoNotRelease);
        assert_eq!(decide(&m, Level::L, Level::VH).unwrap(), Decision::Release);
        for benefit in Level::ALL {
            assert_eq!(decide(&m, Level::M, benefit).unwrap(), Decision::ReleaseWithControls);
        }
    }

    #[test]
    fn matrix_must_be_monotone_and_total() {
        let mut m = RiskBenefitMatrix::default();
        m.cells.get_mut(&Level::VH).unwrap().insert(Level::VH, Decision::Release);
        assert!(m.validate().is_err());
        let mut m = RiskBenefitMatrix::default();
        m.cells.get_mut(&Level::L).unwrap().insert(Level::VH, Decision::DoNotRelease);
        assert!(m.validate().is_err());
        let mut m = RiskBenefitMatrix::default();
        m.cells.remove(&Level::H);
        assert!(m.validate().is_err());
    }

    #[test]
    fn matrix_json_shape() {
        let json = serde_json::to_value(RiskBenefitMatrix::default()).unwrap();
        assert_eq!(json["H"]["M"], "DoNotRelease");
        assert_eq!(json["H"]["H"], "ReleaseWithControls");
    }
}
