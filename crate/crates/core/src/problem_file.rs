//! The JSON problem file: labels, generators, convexity flag and an optional loss.
//!
//! Every number is a rational string such as `"1/3"`; floats are rejected.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::credal::{CredalSet, DecisionProblem, JointDistribution, LossFunction, ProblemSpace};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

/// A rational that travels as a string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact(pub Rational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExactVisitor;
        impl Visitor<'_> for ExactVisitor {
            type Value = Exact;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational string such as \"1/3\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exact, E> {
                parse_rational(v)
                    .map(Exact)
                    .map_err(|e| E::custom(e.to_string()))
            }
        }
        d.deserialize_str(ExactVisitor)
    }
}

fn exact_rows(rows: &[Vec<Rational>]) -> Vec<Vec<Exact>> {
    rows.iter()
        .map(|r| r.iter().cloned().map(Exact).collect())
        .collect()
}

fn plain_rows(rows: &[Vec<Exact>]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|e| e.0.clone()).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossSpec {
    /// Only `"classification"`: loss 0 when the action label equals the outcome label, else 1.
    Named(String),
    /// Row per outcome, column per action.
    Matrix(Vec<Vec<Exact>>),
}

/// One expected result in a corpus case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub op: String,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub args: serde_json::Map<String, serde_json::Value>,
    pub expected: serde_json::Value,
    /// `stated` for values given in the source, or `derived: <oracle>`.
    pub basis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// How a constraint-specified set was reduced to its vertex list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<String>,
    pub x_labels: Vec<String>,
    pub y_labels: Vec<String>,
    /// Defaults to the outcome labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
    pub convex: bool,
    /// One matrix per generator, row per observation, column per outcome.
    pub generators: Vec<Vec<Vec<Exact>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expectations: Vec<Expectation>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Invalid(format!("field `{path}`: {}", e.inner()))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Builds a file from a decision problem, with an explicit loss matrix.
    pub fn from_problem(dp: &DecisionProblem) -> Self {
        let mut f = Self::from_credal(dp.credal());
        f.actions = Some(dp.space().action_labels().to_vec());
        f.loss = Some(LossSpec::Matrix(exact_rows(&dp.loss().rows())));
        f
    }

    pub fn from_credal(p: &CredalSet) -> Self {
        let s = p.space();
        Self {
            id: None,
            description: None,
            derivation: None,
            x_labels: s.x_labels().to_vec(),
            y_labels: s.y_labels().to_vec(),
            actions: Some(s.action_labels().to_vec()),
            convex: p.is_convex(),
            generators: p
                .generators()
                .iter()
                .map(|g| exact_rows(&g.rows()))
                .collect(),
            loss: None,
            expectations: Vec::new(),
        }
    }

    pub fn space(&self) -> Result<Arc<ProblemSpace>> {
        let actions = self
            .actions
            .clone()
            .unwrap_or_else(|| self.y_labels.clone());
        ProblemSpace::new(self.x_labels.clone(), self.y_labels.clone(), actions)
            .map(Arc::new)
            .map_err(|e| Error::Invalid(format!("labels: {e}")))
    }

    pub fn credal(&self) -> Result<CredalSet> {
        let space = self.space()?;
        let gens = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                if g.len() != space.nx() || g.iter().any(|r| r.len() != space.ny()) {
                    return Err(Error::Invalid(format!(
                        "field `generators[{i}]`: expected a {}×{} matrix",
                        space.nx(),
                        space.ny()
                    )));
                }
                JointDistribution::from_rows(plain_rows(g))
                    .map_err(|e| Error::Invalid(format!("field `generators[{i}]`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CredalSet::new(space, gens, self.convex)
            .map_err(|e| Error::Invalid(format!("field `generators`: {e}")))
    }

    pub fn loss_function(&self, space: &ProblemSpace) -> Result<LossFunction> {
        match &self.loss {
            None => Err(Error::Invalid(
                "field `loss`: required for this command".into(),
            )),
            Some(LossSpec::Named(n)) if n == "classification" => {
                Ok(LossFunction::classification(space))
            }
            Some(LossSpec::Named(n)) => Err(Error::Invalid(format!(
                "field `loss`: unknown named loss {n:?} (only \"classification\")"
            ))),
            Some(LossSpec::Matrix(m)) => LossFunction::new(space, plain_rows(m))
                .map_err(|e| Error::Invalid(format!("field `loss`: {e}"))),
        }
    }

    pub fn problem(&self) -> Result<DecisionProblem> {
        let credal = self.credal()?;
        let loss = self.loss_function(credal.space())?;
        DecisionProblem::new(credal, loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    const SAMPLE: &str = r#"{
        "x_labels": ["0", "1"],
        "y_labels": ["0", "1"],
        "convex": true,
        "generators": [
            [["1/3", "0"], ["0", "2/3"]],
            [["0", "2/3"], ["1/3", "0"]]
        ],
        "loss": "classification"
    }"#;

    #[test]
    fn parses_and_builds() {
        let f = ProblemFile::parse(SAMPLE).unwrap();
        let dp = f.problem().unwrap();
        assert_eq!(dp.credal().generators().len(), 2);
        assert_eq!(
            dp.space().action_labels(),
            &["0".to_string(), "1".to_string()]
        );
        assert_eq!(*dp.loss().get(0, 1), rat(1, 1));
        assert_eq!(*dp.credal().generators()[0].get(1, 1), rat(2, 3));
    }

    #[test]
    fn round_trip() {
        let f = ProblemFile::parse(SAMPLE).unwrap();
        assert_eq!(ProblemFile::parse(&f.to_json()).unwrap(), f);
        let explicit = ProblemFile::from_problem(&f.problem().unwrap());
        let again = ProblemFile::parse(&explicit.to_json()).unwrap();
        assert_eq!(again, explicit);
        assert_eq!(again.problem().unwrap().loss(), f.problem().unwrap().loss());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = SAMPLE.replace("\"2/3\"], [\"1/3\"", "\"0.66\"], [\"1/3\"");
        let msg = ProblemFile::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("generators[1]"), "{msg}");
        let missing = SAMPLE.replace("\"convex\": true,", "");
        assert!(ProblemFile::parse(&missing)
            .unwrap_err()
            .to_string()
            .contains("convex"));
        let unsummed = SAMPLE.replace("\"2/3\"]]", "\"1/3\"]]");
        let msg = ProblemFile::parse(&unsummed)
            .unwrap()
            .credal()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("generators[0]"), "{msg}");
        let no_loss = SAMPLE.replace(",\n        \"loss\": \"classification\"", "");
        let msg = ProblemFile::parse(&no_loss)
            .unwrap()
            .problem()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("loss"), "{msg}");
    }
}
