use num::{BigRational, One};
use serde_json::{json, Value};

use crate::algebra::MetricSemigroup;
use crate::error::{Error, Result};
use crate::instances::{group_from_json, Element, GroupInstance};
use crate::scalar::{format_rational, rational_from_json};

/// Elements `x_1..x_n` of an abelian group with exponents `p, q >= 1`.
///
/// JSON form: `{"group": <spec>, "elements": [...], "p": "1/1", "q": "3/2"}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RademacherScenario {
    pub instance: GroupInstance,
    pub elements: Vec<Element>,
    pub p: BigRational,
    pub q: BigRational,
}

impl RademacherScenario {
    pub fn new(instance: GroupInstance, elements: Vec<Element>, p: BigRational, q: BigRational) -> Result<Self> {
        let s = RademacherScenario { instance, elements, p, q };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let caps = self.instance.capabilities();
        if !caps.is_abelian || !caps.has_inverses {
            return Err(Error::InvalidParameter(format!(
                "Rademacher sums need an abelian group; {} does not qualify",
                self.instance.kind().name()
            )));
        }
        if self.elements.is_empty() {
            return Err(Error::InvalidParameter("at least one element is required".into()));
        }
        if self.p < BigRational::one() || self.q < BigRational::one() {
            return Err(Error::InvalidParameter("p and q must be at least 1".into()));
        }
        self.elements.iter().try_for_each(|e| self.instance.validate(e))
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::InvalidParameter("scenario must be a JSON object".into()))?;
        let group = obj.get("group").ok_or_else(|| Error::InvalidParameter("scenario is missing `group`".into()))?;
        let instance = group_from_json(group)?;
        let elements = obj
            .get("elements")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidParameter("scenario is missing `elements`".into()))?
            .iter()
            .map(|e| instance.element_from_json(e))
            .collect::<Result<Vec<_>>>()?;
        let exponent = |key: &str| -> Result<BigRational> {
            match obj.get(key) {
                Some(x) => rational_from_json(x),
                None => Ok(BigRational::one()),
            }
        };
        Self::new(instance, elements, exponent("p")?, exponent("q")?)
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let v: Value = serde_json::from_slice(text)?;
        Self::from_json(&v)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "group": self.instance.to_json(),
            "elements": self.elements.iter().map(|e| self.instance.element_to_json(e)).collect::<Vec<_>>(),
            "p": format_rational(&self.p),
            "q": format_rational(&self.q),
        })
    }
}
