//! Machine-checkable records of verified guarantees.

use serde::Serialize;
use serde_json::Value;

/// One verified bound: what was claimed, what was measured, and whether it held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Guarantee {
    pub name: String,
    pub claimed: Value,
    pub measured: Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub anchor: String,
}

/// Ordered list of guarantees produced by one operation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Certificate {
    pub guarantees: Vec<Guarantee>,
}

impl Certificate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        anchor: &str,
        name: &str,
        claimed: impl Into<Value>,
        measured: impl Into<Value>,
        pass: bool,
        witness: Option<String>,
    ) {
        self.guarantees.push(Guarantee {
            name: name.to_string(),
            claimed: claimed.into(),
            measured: measured.into(),
            pass,
            witness,
            anchor: anchor.to_string(),
        });
    }

    /// Records `measured ≤ bound`.
    pub fn at_most(&mut self, anchor: &str, name: &str, bound: f64, measured: f64, witness: Option<String>) {
        let pass = measured <= bound + 1e-9;
        self.push(anchor, name, format!("<= {}", fmt_num(bound)), num(measured), pass, witness);
    }

    /// Records `measured ≥ bound`.
    pub fn at_least(&mut self, anchor: &str, name: &str, bound: f64, measured: f64, witness: Option<String>) {
        let pass = measured >= bound - 1e-9;
        self.push(anchor, name, format!(">= {}", fmt_num(bound)), num(measured), pass, witness);
    }

    /// Records a boolean property.
    pub fn holds(&mut self, anchor: &str, name: &str, pass: bool, witness: Option<String>) {
        self.push(anchor, name, true, pass, pass, witness);
    }

    pub fn extend(&mut self, other: Certificate) {
        self.guarantees.extend(other.guarantees);
    }

    pub fn all_pass(&self) -> bool {
        self.guarantees.iter().all(|g| g.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Guarantee> {
        self.guarantees.iter().filter(|g| !g.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Guarantee> {
        self.guarantees.iter().find(|g| g.name == name)
    }
}

/// JSON value for a float; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    } else {
        Value::String(fmt_num(x))
    }
}

pub fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}
