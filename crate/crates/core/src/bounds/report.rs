use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The inequalities checked by this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum InequalityId {
    THM1,
    THM2,
    COR3,
    THM4_CLAIMED,
    THM4_PROOF_DERIVED,
    GENERAL_EQ5,
    LEMMA_VDOTN_CLAIMED,
    LEMMA_VDOTN_PROOF_DERIVED,
    MEASURE_LEMMA,
    DIV_THEOREM,
    COR_2D,
    MINIMAL_SET_PROBE,
}

impl InequalityId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::THM1 => "THM1",
            Self::THM2 => "THM2",
            Self::COR3 => "COR3",
            Self::THM4_CLAIMED => "THM4_CLAIMED",
            Self::THM4_PROOF_DERIVED => "THM4_PROOF_DERIVED",
            Self::GENERAL_EQ5 => "GENERAL_EQ5",
            Self::LEMMA_VDOTN_CLAIMED => "LEMMA_VDOTN_CLAIMED",
            Self::LEMMA_VDOTN_PROOF_DERIVED => "LEMMA_VDOTN_PROOF_DERIVED",
            Self::MEASURE_LEMMA => "MEASURE_LEMMA",
            Self::DIV_THEOREM => "DIV_THEOREM",
            Self::COR_2D => "COR_2D",
            Self::MINIMAL_SET_PROBE => "MINIMAL_SET_PROBE",
        }
    }

    /// Proven statements whose violation is a failure of the toolkit.
    pub fn is_proven(self) -> bool {
        matches!(
            self,
            Self::THM1
                | Self::THM2
                | Self::COR3
                | Self::GENERAL_EQ5
                | Self::MEASURE_LEMMA
                | Self::DIV_THEOREM
                | Self::COR_2D
        )
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Holds => "HOLDS",
            Self::Violated => "VIOLATED",
            Self::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Annotations that change how a verdict is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flag {
    /// The surface is not the boundary of a regular domain.
    NotARegularDomain,
    /// Factor-1/2 variant of the convex bound; never gates the exit code.
    ClaimedStatement,
    /// The simplicity guard was disabled by the caller.
    NonSimpleOverride,
    /// `D1` is not convex; the check is an empirical probe.
    NonConvexD1,
}

/// Where an ingredient value came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Mesh { resolution: f64 },
    Grid { resolution: f64 },
    Sampled { samples: usize },
    MonteCarlo { samples: usize, seed: u64 },
    Integrator { tolerance: f64 },
    Analytic,
    Exact,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ingredient {
    pub value: f64,
    pub error: f64,
    pub provenance: Provenance,
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inequality_id: InequalityId,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub combined_error: f64,
    pub verdict: Verdict,
    pub ingredients: BTreeMap<String, Ingredient>,
    pub flags: Vec<Flag>,
}

/// `3 * combined_error + 1e-9 * |rhs|`.
pub fn default_tolerance(rhs: f64, combined_error: f64) -> f64 {
    3.0 * combined_error + 1e-9 * rhs.abs()
}

/// Verdict rule shared by every check.
pub fn verdict(lhs: f64, rhs: f64, tolerance: f64, combined_error: f64) -> Verdict {
    if !(lhs.is_finite() && rhs.is_finite() && tolerance.is_finite()) {
        return Verdict::Inconclusive;
    }
    if lhs <= rhs + tolerance {
        Verdict::Holds
    } else if lhs > rhs + 3.0 * combined_error {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

impl BoundReport {
    /// Builds a report with the default tolerance.
    pub fn new(id: InequalityId, label: impl Into<String>, lhs: f64, rhs: f64, combined_error: f64) -> Self {
        Self::with_tolerance(
            id,
            label,
            lhs,
            rhs,
            combined_error,
            default_tolerance(rhs, combined_error),
        )
    }

    pub fn with_tolerance(
        id: InequalityId,
        label: impl Into<String>,
        lhs: f64,
        rhs: f64,
        combined_error: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            inequality_id: id,
            label: label.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance,
            combined_error,
            verdict: verdict(lhs, rhs, tolerance, combined_error),
            ingredients: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn ingredient(mut self, name: &str, value: f64, error: f64, provenance: Provenance) -> Self {
        self.ingredients.insert(
            name.to_string(),
            Ingredient {
                value,
                error,
                provenance,
            },
        );
        self
    }

    pub fn flag(mut self, flag: Flag) -> Self {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
        self
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// A proven bound reported VIOLATED on an unflagged configuration.
    pub fn is_gating_violation(&self) -> bool {
        self.verdict == Verdict::Violated && self.inequality_id.is_proven() && self.flags.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(1.0, 2.0, 0.0, 0.0), Verdict::Holds);
        assert_eq!(verdict(2.0 + 1e-12, 2.0, 1e-9, 0.0), Verdict::Holds);
        assert_eq!(verdict(3.0, 2.0, 0.1, 0.01), Verdict::Violated);
        assert_eq!(verdict(2.2, 2.0, 0.1, 0.1), Verdict::Inconclusive);
        assert_eq!(verdict(f64::NAN, 2.0, 0.1, 0.1), Verdict::Inconclusive);
    }

    #[test]
    fn report_serializes_ids_verbatim() {
        let r = BoundReport::new(InequalityId::THM4_CLAIMED, "chord", 2.0, 1.0, 0.001)
            .flag(Flag::ClaimedStatement)
            .ingredient("diameter", 2.0, 0.0, Provenance::Mesh { resolution: 0.01 });
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"THM4_CLAIMED\""));
        assert!(json.contains("\"VIOLATED\""));
        assert!(json.contains("\"CLAIMED_STATEMENT\""));
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(!r.is_gating_violation());
    }
}
