//! Verdicts of sampled property checks.
//!
//! A pass means no violation was found at the stated resolution. It is
//! evidence, not a proof.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::fibration::Orientation;

/// Witnesses kept per certificate; the rest are only counted.
pub const MAX_WITNESSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Skew,
    Nondegenerate,
    Covering,
    ContinuityAtInfinity,
    LineField,
    ClaimIdentity,
    Definite,
    Contact,
    Homotopy,
    Surjectivity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub label: String,
    pub points: Vec<Vec<f64>>,
    pub value: f64,
}

impl Witness {
    pub fn new(label: impl Into<String>, points: Vec<Vec<f64>>, value: f64) -> Self {
        Self { label: label.into(), points, value }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub property: Property,
    pub verdict: Verdict,
    pub margin: f64,
    pub orientation: Option<Orientation>,
    pub witnesses: Vec<Witness>,
    pub violations: usize,
    pub grid: String,
    pub tolerances: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
}

impl Certificate {
    pub fn new(property: Property, grid: impl Into<String>) -> Self {
        Self {
            property,
            verdict: Verdict::Inconclusive,
            margin: f64::NAN,
            orientation: None,
            witnesses: Vec::new(),
            violations: 0,
            grid: grid.into(),
            tolerances: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Records violations; `ranked` must already be ordered most severe first.
    pub fn add_violations(&mut self, ranked: impl IntoIterator<Item = Witness>) {
        for w in ranked {
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
    }

    /// Pass when no violation was recorded, fail otherwise.
    pub fn settle(&mut self) {
        self.verdict = if self.violations == 0 { Verdict::Pass } else { Verdict::Fail };
    }
}
