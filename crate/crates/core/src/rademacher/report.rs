use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantTag {
    pub value: Scalar,
    pub formula: String,
}

/// `rhs / lhs`, infinite when `lhs = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Slack {
    Infinite,
    Finite(Scalar),
}

impl Slack {
    pub fn of(lhs: &Scalar, rhs: &Scalar) -> Slack {
        if lhs.is_zero() {
            return Slack::Infinite;
        }
        match (lhs, rhs) {
            (Scalar::Exact(l), Scalar::Exact(r)) => Slack::Finite(Scalar::Exact(r / l)),
            _ => Slack::Finite(Scalar::Approx(rhs.to_f64() / lhs.to_f64())),
        }
    }
}

impl fmt::Display for Slack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slack::Infinite => f.write_str("inf"),
            Slack::Finite(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for Slack {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Outcome of one inequality check. `satisfied` means `lhs <= rhs` held
/// exactly (when `exact`) or under outward rounding / Monte-Carlo tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub inequality: String,
    pub lhs: Scalar,
    pub rhs: Scalar,
    pub constant: ConstantTag,
    pub satisfied: bool,
    pub slack: Slack,
    pub exact: bool,
    pub witness: Value,
}

impl InequalityReport {
    pub fn new(
        inequality: &str,
        lhs: Scalar,
        rhs: Scalar,
        constant: ConstantTag,
        satisfied: bool,
        exact: bool,
        witness: Value,
    ) -> Self {
        let slack = Slack::of(&lhs, &rhs);
        InequalityReport { inequality: inequality.to_string(), lhs, rhs, constant, satisfied, slack, exact, witness }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn slack_values() {
        assert_eq!(Slack::of(&Scalar::zero(), &Scalar::from_int(3)).to_string(), "inf");
        assert_eq!(Slack::of(&Scalar::from_int(2), &Scalar::from_int(3)), Slack::Finite(Scalar::Exact(ratio(3, 2))));
        let r = InequalityReport::new(
            "demo",
            Scalar::from_int(1),
            Scalar::from_int(1),
            ConstantTag { value: Scalar::from_int(1), formula: "C_{p,q}=1".into() },
            true,
            true,
            Value::Null,
        );
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["slack"], "1/1");
        assert_eq!(v["constant"]["formula"], "C_{p,q}=1");
        assert_eq!(v["lhs"], "1/1");
    }
}
