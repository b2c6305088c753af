//! Structured record of a single inequality or identity check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How `value` is compared against `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value <= bound + tolerance`
    AtMost,
    /// `value >= bound - tolerance`
    AtLeast,
    /// `|value - bound| <= tolerance`
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub quantities: BTreeMap<String, f64>,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub tolerance: f64,
    /// Signed slack; nonnegative means the inequality holds without
    /// using the tolerance.
    pub margin: f64,
    pub pass: bool,
    /// Sub-checks that must also pass for `pass` to be true.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<VerificationReport>,
}

impl VerificationReport {
    pub fn new(check: &str, value: f64, relation: Relation, bound: f64, tolerance: f64) -> Self {
        let margin = match relation {
            Relation::AtMost => bound - value,
            Relation::AtLeast => value - bound,
            Relation::Equal => -(value - bound).abs(),
        };
        let pass = margin.is_finite() && margin >= -tolerance;
        VerificationReport {
            check: check.to_string(),
            inputs: BTreeMap::new(),
            quantities: BTreeMap::new(),
            value,
            relation,
            bound,
            tolerance,
            margin,
            pass,
            steps: Vec::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl Serialize) -> Self {
        self.inputs.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn quantity(mut self, key: &str, value: f64) -> Self {
        self.quantities.insert(key.to_string(), value);
        self
    }

    pub fn step(mut self, step: VerificationReport) -> Self {
        self.pass &= step.pass;
        self.steps.push(step);
        self
    }

    /// True when this check and every step passed.
    pub fn all_pass(&self) -> bool {
        self.pass && self.steps.iter().all(|s| s.all_pass())
    }
}
