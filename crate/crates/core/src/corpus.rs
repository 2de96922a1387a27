//! The bundled worked examples and the replay of their recorded expectations.
//!
//! Each case is a problem file whose `expectations` name an operation, its arguments
//! and the expected result. Replaying a case runs every operation through the library
//! and compares exact values.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::calibration::{
    check_calibration, equivalence_classes, is_sharply_calibrated, narrower, refine_partition,
    sharp_partition, UpdateRule,
};
use crate::consistency::{
    check_time_consistency, check_weak_time_consistency, falsify_dynamic_consistency,
    sufficient_conditions, walley_prefers, ConsistencyVerdict, Preference, Witness,
};
use crate::credal::{
    dilation_report, hull, is_conservative, is_rectangular, marginal_y, parse_action, posterior_y,
    DecisionProblem, DecisionRule, JointDistribution, Partition, ProblemSpace, RandomizedAction,
};
use crate::error::{Error, Result};
use crate::minimax::{
    brute_force_value, check_independence_cover, solve_a_posteriori, solve_a_priori,
    solve_ignoring, worst_case_loss, worst_case_posterior_loss, CoverResult,
};
use crate::polytope::member;
use crate::problem_file::{Expectation, ProblemFile};
use crate::rational::{format_rational, parse_rational, Rational};

/// Samples tried by the independence-cover check during replay.
const COVER_SAMPLES: usize = 32;

/// Budget used by `dynamic` expectations without a `budget` argument.
const DEFAULT_BUDGET: usize = 20;

const EMBEDDED: &[(&str, &str)] = &[
    (
        "example-2.1-extended",
        include_str!("../../../corpus/example-2.1-extended.json"),
    ),
    (
        "example-2.1",
        include_str!("../../../corpus/example-2.1.json"),
    ),
    (
        "example-4.2",
        include_str!("../../../corpus/example-4.2.json"),
    ),
    (
        "example-4.3",
        include_str!("../../../corpus/example-4.3.json"),
    ),
    (
        "example-4.5",
        include_str!("../../../corpus/example-4.5.json"),
    ),
    (
        "example-4.6",
        include_str!("../../../corpus/example-4.6.json"),
    ),
    (
        "example-6.5",
        include_str!("../../../corpus/example-6.5.json"),
    ),
    (
        "example-6.6",
        include_str!("../../../corpus/example-6.6.json"),
    ),
    (
        "example-6.7",
        include_str!("../../../corpus/example-6.7.json"),
    ),
    (
        "monty-hall-switch-cost",
        include_str!("../../../corpus/monty-hall-switch-cost.json"),
    ),
    (
        "monty-hall",
        include_str!("../../../corpus/monty-hall.json"),
    ),
    (
        "walley-two-coins",
        include_str!("../../../corpus/walley-two-coins.json"),
    ),
];

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusCase {
    pub name: String,
    pub file: ProblemFile,
}

impl CorpusCase {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Corpus {
            case: self.name.clone(),
            message: message.into(),
        }
    }
}

/// The cases compiled into the library, in file-name order.
pub fn load_corpus() -> Result<Vec<CorpusCase>> {
    EMBEDDED
        .iter()
        .map(|(name, text)| parse_case(name, text))
        .collect()
}

/// Every `*.json` file in `dir`, in file-name order.
pub fn load_corpus_from(dir: &Path) -> Result<Vec<CorpusCase>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", p.display())))?;
            parse_case(&name, &text)
        })
        .collect()
}

fn parse_case(name: &str, text: &str) -> Result<CorpusCase> {
    let file = ProblemFile::parse(text).map_err(|e| Error::Corpus {
        case: name.to_string(),
        message: e.to_string(),
    })?;
    Ok(CorpusCase {
        name: name.to_string(),
        file,
    })
}

/// One replayed expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub op: String,
    pub args: Map<String, Value>,
    pub expected: Value,
    pub actual: Value,
    pub basis: String,
    pub passed: bool,
}

impl Outcome {
    /// The operation with its arguments, e.g. `posterior_value {"x":"1"}`.
    pub fn label(&self) -> String {
        if self.args.is_empty() {
            self.op.clone()
        } else {
            format!("{} {}", self.op, Value::Object(self.args.clone()))
        }
    }
}

/// Replays every expectation of `case`. Malformed expectations and library errors are
/// reported as errors naming the case; mismatches are outcomes with `passed == false`.
pub fn replay(case: &CorpusCase) -> Result<Vec<Outcome>> {
    let credal = case.file.credal().map_err(|e| case.error(e.to_string()))?;
    let problem = match case.file.loss {
        Some(_) => Some(case.file.problem().map_err(|e| case.error(e.to_string()))?),
        None => None,
    };
    let ctx = Context {
        space: credal.space().clone(),
        credal,
        problem,
    };
    case.file
        .expectations
        .iter()
        .enumerate()
        .map(|(i, exp)| {
            ctx.check(exp)
                .map_err(|e| case.error(format!("expectation {i} ({}): {e}", exp.op)))
        })
        .collect()
}

struct Context {
    space: std::sync::Arc<ProblemSpace>,
    credal: crate::credal::CredalSet,
    problem: Option<DecisionProblem>,
}

fn rational_value(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn vector_value(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rational_value).collect())
}

/// Reformats every string that parses as a rational, so `"2/4"` and `"1/2"` compare equal.
fn canonical(v: &Value) -> Value {
    match v {
        Value::String(s) => match parse_rational(s) {
            Ok(r) => rational_value(&r),
            Err(_) => v.clone(),
        },
        Value::Array(items) => Value::Array(items.iter().map(canonical).collect()),
        Value::Object(m) => {
            Value::Object(m.iter().map(|(k, v)| (k.clone(), canonical(v))).collect())
        }
        other => other.clone(),
    }
}

fn sorted(v: Value) -> Value {
    match v {
        Value::Array(mut items) => {
            items.sort_by_key(|i| i.to_string());
            Value::Array(items)
        }
        other => other,
    }
}

fn arg<'a>(args: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    args.get(key)
        .ok_or_else(|| Error::Invalid(format!("missing argument `{key}`")))
}

fn arg_str<'a>(args: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
    arg(args, key)?
        .as_str()
        .ok_or_else(|| Error::Invalid(format!("argument `{key}` must be a string")))
}

fn arg_usize(args: &Map<String, Value>, key: &str, default: usize) -> Result<usize> {
    match args.get(key) {
        None => Ok(default),
        Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| {
            Error::Invalid(format!("argument `{key}` must be a nonnegative integer"))
        }),
    }
}

impl Context {
    fn problem(&self) -> Result<&DecisionProblem> {
        self.problem
            .as_ref()
            .ok_or_else(|| Error::Invalid("this operation needs a loss".into()))
    }

    fn x_index(&self, v: &Value) -> Result<usize> {
        let label = v
            .as_str()
            .ok_or_else(|| Error::Invalid("observation labels are strings".into()))?;
        self.space
            .x_index(label)
            .ok_or_else(|| Error::Invalid(format!("unknown observation {label:?}")))
    }

    fn x_labels(&self, v: &Value) -> Result<Vec<usize>> {
        v.as_array()
            .ok_or_else(|| Error::Invalid("expected an array of observation labels".into()))?
            .iter()
            .map(|l| self.x_index(l))
            .collect()
    }

    fn action(&self, v: &Value) -> Result<RandomizedAction> {
        match v {
            Value::String(label) => parse_action(&self.space, label),
            Value::Array(ws) => {
                let weights = ws
                    .iter()
                    .map(|w| {
                        w.as_str()
                            .ok_or_else(|| Error::Invalid("weights are rational strings".into()))
                            .and_then(parse_rational)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if weights.len() != self.space.na() {
                    return Err(Error::DimensionMismatch(format!(
                        "action weights have length {}, expected {}",
                        weights.len(),
                        self.space.na()
                    )));
                }
                RandomizedAction::new(weights)
            }
            _ => Err(Error::Invalid(
                "an action is a label or a weight array".into(),
            )),
        }
    }

    /// A rule as an object from observation label to action.
    fn rule(&self, v: &Value) -> Result<DecisionRule> {
        let m = v.as_object().ok_or_else(|| {
            Error::Invalid("a rule is an object from observation label to action".into())
        })?;
        if m.len() != self.space.nx() {
            return Err(Error::Invalid("a rule must list every observation".into()));
        }
        let mut per_x = vec![None; self.space.nx()];
        for (label, a) in m {
            per_x[self.x_index(&Value::String(label.clone()))?] = Some(self.action(a)?);
        }
        DecisionRule::new(
            per_x
                .into_iter()
                .map(|a| a.expect("every label seen"))
                .collect(),
        )
    }

    fn action_value(&self, a: &RandomizedAction) -> Value {
        match a.as_pure() {
            Some(i) => Value::String(self.space.action_labels()[i].clone()),
            None => vector_value(a.weights()),
        }
    }

    fn rule_value(&self, r: &DecisionRule) -> Value {
        Value::Object(
            r.actions()
                .iter()
                .enumerate()
                .map(|(x, a)| (self.space.x_labels()[x].clone(), self.action_value(a)))
                .collect(),
        )
    }

    fn partition_value(&self, c: &Partition) -> Value {
        Value::Array(
            c.cells()
                .iter()
                .map(|cell| {
                    cell.iter()
                        .map(|&x| Value::String(self.space.x_labels()[x].clone()))
                        .collect()
                })
                .collect(),
        )
    }

    fn update_rule(&self, args: &Map<String, Value>, key: &str) -> Result<UpdateRule> {
        match args.get(key) {
            None => Ok(UpdateRule::Standard),
            Some(_) => UpdateRule::parse(&self.space, arg_str(args, key)?),
        }
    }

    fn point(&self, v: &Value) -> Result<JointDistribution> {
        let rows = v
            .as_array()
            .ok_or_else(|| Error::Invalid("a point is a matrix of rational strings".into()))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| {
                        Error::Invalid("a point is a matrix of rational strings".into())
                    })?
                    .iter()
                    .map(|c| {
                        c.as_str()
                            .ok_or_else(|| Error::Invalid("entries are rational strings".into()))
                            .and_then(parse_rational)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != self.space.nx() || rows.iter().any(|r| r.len() != self.space.ny()) {
            return Err(Error::DimensionMismatch(
                "point does not match the problem".into(),
            ));
        }
        JointDistribution::from_rows(rows)
    }

    /// Rewrites rules and actions inside `expected` into the encoding used for results.
    fn normalise_expected(&self, op: &str, expected: &Value) -> Result<Value> {
        let mut e = canonical(expected);
        match op {
            "a_priori_rule" => e = self.rule_value(&self.rule(&e)?),
            "posterior_actions" => {
                let items = e
                    .as_array()
                    .ok_or_else(|| Error::Invalid("expected an array of actions".into()))?;
                e = items
                    .iter()
                    .map(|a| self.action(a).map(|a| self.action_value(&a)))
                    .collect::<Result<Vec<_>>>()?
                    .into();
            }
            "weak_time_witness" | "dynamic_witness" | "time_witness" => {
                if let Value::Object(m) = &mut e {
                    for key in ["rule", "better", "worse"] {
                        if let Some(r) = m.get(key) {
                            let r = self.rule_value(&self.rule(r)?);
                            m.insert(key.to_string(), r);
                        }
                    }
                    if let Some(a) = m.get("action") {
                        let a = self.action_value(&self.action(a)?);
                        m.insert("action".into(), a);
                    }
                }
            }
            "y_projection" => e = sorted(e),
            _ => {}
        }
        Ok(e)
    }

    fn verdict_witness(&self, v: &ConsistencyVerdict) -> Value {
        match &v.witness {
            None => Value::Null,
            Some(Witness::NotAPrioriOptimal {
                rule,
                worst_case,
                value,
            }) => json!({
                "rule": self.rule_value(rule),
                "worst_case": rational_value(worst_case),
                "value": rational_value(value),
            }),
            Some(Witness::NotAPosterioriOptimal {
                rule,
                x,
                posterior,
                value,
            }) => json!({
                "x": self.space.x_labels()[*x],
                "action": self.action_value(rule.action(*x)),
                "posterior": rational_value(posterior),
                "value": rational_value(value),
            }),
            Some(Witness::Pair { better, worse, .. }) => json!({
                "better": self.rule_value(better),
                "worse": self.rule_value(worse),
            }),
        }
    }

    fn evaluate(&self, op: &str, args: &Map<String, Value>) -> Result<Value> {
        let p = &self.credal;
        Ok(match op {
            "a_priori_value" => rational_value(&solve_a_priori(self.problem()?)?.value),
            "a_priori_rule" => self.rule_value(&solve_a_priori(self.problem()?)?.rule),
            "a_priori_unique" => match solve_a_priori(self.problem()?)?.is_unique() {
                Some(u) => Value::Bool(u),
                None => Value::String("unknown".into()),
            },
            "posterior_value" | "posterior_actions" => {
                let x = self.x_index(arg(args, "x")?)?;
                let sol = solve_a_posteriori(self.problem()?)?;
                match sol.at(x) {
                    None => Value::Null,
                    Some(s) if op == "posterior_value" => rational_value(&s.value),
                    Some(s) => s
                        .action_vertices
                        .iter()
                        .map(|a| self.action_value(a))
                        .collect(),
                }
            }
            "worst_case_loss" => {
                let dp = self.problem()?;
                let rule = self.rule(arg(args, "rule")?)?;
                rational_value(&worst_case_loss(p, &rule, dp.loss()).0)
            }
            "posterior_worst_case" => {
                let dp = self.problem()?;
                let rule = self.rule(arg(args, "rule")?)?;
                let x = self.x_index(arg(args, "x")?)?;
                rational_value(&worst_case_posterior_loss(p, &rule, dp.loss(), x)?)
            }
            "member" => {
                let point = self.point(arg(args, "point")?)?;
                let set = match arg_str(args, "set")? {
                    "P" => p.as_polytope(),
                    "hull" => hull(p)?.as_polytope(),
                    other => {
                        return Err(Error::Invalid(format!(
                            "unknown set {other:?} (expected P or hull)"
                        )))
                    }
                };
                Value::Bool(member(point.mass(), &set)?)
            }
            "generator_count" => p.pruned()?.generators().len().into(),
            "hull_generator_count" => hull(p)?.generators().len().into(),
            "is_rectangular" => Value::Bool(is_rectangular(p)?),
            "is_conservative" => Value::Bool(is_conservative(p)),
            "y_projection" => {
                let set = match args.get("event") {
                    None => marginal_y(p)?,
                    Some(ev) => posterior_y(p, &self.x_labels(ev)?)?,
                };
                sorted(set.generators().iter().map(|g| vector_value(g)).collect())
            }
            "dilation" => {
                let event = arg(args, "event")?
                    .as_array()
                    .ok_or_else(|| {
                        Error::Invalid("argument `event` is an array of outcome labels".into())
                    })?
                    .iter()
                    .map(|l| {
                        l.as_str()
                            .and_then(|l| self.space.y_index(l))
                            .ok_or_else(|| Error::Invalid(format!("unknown outcome {l}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut event = event;
                event.sort_unstable();
                let row = dilation_report(p)?
                    .into_iter()
                    .find(|r| r.event == event)
                    .ok_or_else(|| {
                        Error::Invalid("event must be a nonempty proper subset of Y".into())
                    })?;
                let interval = |i: &crate::credal::Interval| {
                    json!([format_rational(&i.lo), format_rational(&i.hi)])
                };
                let posteriors: Map<String, Value> = row
                    .posteriors
                    .iter()
                    .map(|(x, i)| (self.space.x_labels()[*x].clone(), interval(i)))
                    .collect();
                json!({
                    "prior": interval(&row.prior),
                    "posteriors": posteriors,
                    "dilation": row.strict_dilation,
                })
            }
            "weak_time" => check_weak_time_consistency(self.problem()?)?
                .result
                .to_string()
                .into(),
            "time" => check_time_consistency(self.problem()?)?
                .result
                .to_string()
                .into(),
            "dynamic" => {
                let budget = arg_usize(args, "budget", DEFAULT_BUDGET)?;
                falsify_dynamic_consistency(self.problem()?, budget, 0)?
                    .result
                    .to_string()
                    .into()
            }
            "weak_time_witness" => {
                self.verdict_witness(&check_weak_time_consistency(self.problem()?)?)
            }
            "time_witness" => self.verdict_witness(&check_time_consistency(self.problem()?)?),
            "dynamic_witness" => {
                let budget = arg_usize(args, "budget", DEFAULT_BUDGET)?;
                self.verdict_witness(&falsify_dynamic_consistency(self.problem()?, budget, 0)?)
            }
            "sufficient_conditions" => sufficient_conditions(self.problem()?)?.summary().into(),
            "ignoring_optimal" => Value::Bool(solve_ignoring(self.problem()?)?.ignoring_optimal),
            "ignoring_value" => rational_value(&solve_ignoring(self.problem()?)?.solution.value),
            "independence_cover" => match check_independence_cover(p, COVER_SAMPLES, 0)? {
                CoverResult::HoldsAtTestedPoints { .. } => "holds".into(),
                CoverResult::Counterexample { .. } => "counterexample".into(),
            },
            "oracle_upper" => {
                let grid = arg_usize(args, "grid", 1)?;
                rational_value(&brute_force_value(self.problem()?, grid)?.upper)
            }
            "walley" => {
                let d1 = self.rule(arg(args, "first")?)?;
                let d2 = self.rule(arg(args, "second")?)?;
                match walley_prefers(self.problem()?, &d1, &d2)?.preference {
                    Preference::FirstOverSecond => "first",
                    Preference::SecondOverFirst => "second",
                    Preference::Both => "both",
                    Preference::Incomparable => "incomparable",
                }
                .into()
            }
            "classes" => self.partition_value(
                &equivalence_classes(&self.update_rule(args, "rule")?, p)?.partition,
            ),
            "calibrated" => {
                Value::Bool(check_calibration(&self.update_rule(args, "rule")?, p)?.calibrated)
            }
            "semi_calibrated" => {
                Value::Bool(check_calibration(&self.update_rule(args, "rule")?, p)?.semi_calibrated)
            }
            "narrower" => {
                let r1 = UpdateRule::parse(&self.space, arg_str(args, "first")?)?;
                let r2 = UpdateRule::parse(&self.space, arg_str(args, "second")?)?;
                narrower(&r1, &r2, p)?.to_string().into()
            }
            "refine" => {
                let cells = arg(args, "partition")?
                    .as_array()
                    .ok_or_else(|| {
                        Error::Invalid("argument `partition` is an array of label arrays".into())
                    })?
                    .iter()
                    .map(|c| self.x_labels(c))
                    .collect::<Result<Vec<_>>>()?;
                let c = Partition::new(self.space.nx(), cells)?;
                self.partition_value(&refine_partition(&c, p)?)
            }
            "sharp_partition" => self.partition_value(&sharp_partition(p)?.partition),
            "sharply_calibrated" => {
                Value::Bool(is_sharply_calibrated(&self.update_rule(args, "rule")?, p)?.sharp)
            }
            other => return Err(Error::Invalid(format!("unknown operation {other:?}"))),
        })
    }

    fn check(&self, exp: &Expectation) -> Result<Outcome> {
        let actual = canonical(&self.evaluate(&exp.op, &exp.args)?);
        let expected = self.normalise_expected(&exp.op, &exp.expected)?;
        Ok(Outcome {
            op: exp.op.clone(),
            args: exp.args.clone(),
            passed: actual == expected,
            expected: exp.expected.clone(),
            actual,
            basis: exp.basis.clone(),
        })
    }
}
