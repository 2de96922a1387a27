//! Time consistency, weak time consistency and dynamic consistency of decision problems.
//!
//! Time and weak time consistency are decided by vertex enumeration. The a priori worst-case
//! loss is a maximum of functions linear in the rule, hence convex, so over a product of
//! optimal-action polytopes it peaks at a vertex product. Dynamic consistency quantifies over
//! all pairs of rules and is only ever falsified here.

use std::fmt;
use std::sync::Arc;

use crate::credal::{
    conditionals_at, is_conservative, is_rectangular, support_x, DecisionProblem, DecisionRule,
    LossFunction, ProblemSpace, RandomizedAction,
};
use crate::error::{Error, Result};
use crate::minimax::{
    a_priori_value, risk_table, solve_a_posteriori, solve_a_priori, worst_case_from_table,
    worst_case_loss, worst_case_posterior_loss, PosteriorSolution,
};
use crate::rational::{format_rational, zero, Rational};
use crate::sampling::{random_rule, rng_from_seed};

/// Most vertex products examined by the exact checks.
pub const MAX_VERTEX_PRODUCTS: usize = 100_000;

/// Cap on each deterministic candidate family of the dynamic falsifier.
pub const MAX_FAMILY_SIZE: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsistencyKind {
    Time,
    WeakTime,
    Dynamic,
}

impl fmt::Display for ConsistencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Time => "time",
            Self::WeakTime => "weak-time",
            Self::Dynamic => "dynamic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsistencyResult {
    Consistent,
    Inconsistent,
    Unknown,
}

impl fmt::Display for ConsistencyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Consistent => "consistent",
            Self::Inconsistent => "inconsistent",
            Self::Unknown => "unknown",
        })
    }
}

/// Which half of the dynamic consistency definition a pair violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DynamicCondition {
    /// `m_δ ≤ m_δ′` at every observation, yet `δ` is strictly worse a priori.
    Weak,
    /// `m_δ < m_δ′` at every observation, yet `δ` is not strictly better a priori.
    Strict,
    /// `m_δ ≤ m_δ′` everywhere and `<` somewhere, yet `δ` is not strictly better a priori.
    Strong,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// A posteriori optimal rule whose a priori worst case exceeds the a priori value.
    NotAPrioriOptimal {
        rule: DecisionRule,
        worst_case: Rational,
        value: Rational,
    },
    /// A priori optimal rule that is not minimax after observing `x`.
    NotAPosterioriOptimal {
        rule: DecisionRule,
        x: usize,
        posterior: Rational,
        value: Rational,
    },
    /// `better` is weakly preferred after every observation but not before.
    Pair {
        better: DecisionRule,
        worse: DecisionRule,
        condition: DynamicCondition,
        better_posterior: Vec<(usize, Rational)>,
        worse_posterior: Vec<(usize, Rational)>,
        better_prior: Rational,
        worse_prior: Rational,
    },
}

/// Which guarantees follow from the structure of the credal set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SufficientConditions {
    /// `None` when the hull is too large to build.
    pub rectangular: Option<bool>,
    pub conservative: bool,
    pub convex: bool,
}

impl SufficientConditions {
    pub fn weak_time_guaranteed(&self) -> bool {
        self.rectangular == Some(true)
    }

    pub fn time_guaranteed(&self) -> bool {
        self.weak_time_guaranteed() && self.conservative
    }

    /// Closed, conservative and rectangular sets are dynamically consistent; convexity is not needed.
    pub fn dynamic_guaranteed(&self) -> bool {
        self.time_guaranteed()
    }

    pub fn summary(&self) -> String {
        match (self.weak_time_guaranteed(), self.time_guaranteed()) {
            (true, true) => "weak time consistency guaranteed; time consistency guaranteed; \
                             dynamic consistency guaranteed"
                .into(),
            (true, false) => {
                "weak time consistency guaranteed; time consistency not guaranteed".into()
            }
            _ => "no guarantee either way".into(),
        }
    }
}

impl fmt::Display for SufficientConditions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rect = match self.rectangular {
            Some(true) => "yes",
            Some(false) => "no",
            None => "unknown (hull too large)",
        };
        write!(
            f,
            "rectangular: {rect}; conservative: {}; convex: {}; {}",
            yes_no(self.conservative),
            yes_no(self.convex),
            self.summary()
        )
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyVerdict {
    pub kind: ConsistencyKind,
    pub result: ConsistencyResult,
    pub witness: Option<Witness>,
    /// For dynamic verdicts: a pair violating the strong variant, if one was found.
    pub strong_witness: Option<Witness>,
    pub notes: SufficientConditions,
}

pub fn sufficient_conditions(dp: &DecisionProblem) -> Result<SufficientConditions> {
    let p = dp.credal();
    let rectangular = match is_rectangular(p) {
        Ok(r) => Some(r),
        Err(Error::SizeLimit(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SufficientConditions {
        rectangular,
        conservative: is_conservative(p),
        convex: p.is_convex(),
    })
}

fn product_count(post: &PosteriorSolution) -> Option<usize> {
    post.per_x
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.action_vertices.len()))
}

/// Every combination of per-observation optimal vertices, uniform off `X⁺`, in odometer order.
fn vertex_products(
    post: &PosteriorSolution,
    nx: usize,
    na: usize,
    limit: usize,
) -> Result<Vec<DecisionRule>> {
    let count = product_count(post).filter(|&c| c <= limit).ok_or_else(|| {
        Error::SizeLimit(format!(
            "more than {limit} products of a posteriori optimal vertices"
        ))
    })?;
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; post.per_x.len()];
    loop {
        let mut per_x = vec![RandomizedAction::uniform(na); nx];
        for (s, &i) in post.per_x.iter().zip(&idx) {
            per_x[s.x] = s.action_vertices[i].clone();
        }
        out.push(DecisionRule::new(per_x)?);
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < post.per_x[k].action_vertices.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Whether every a posteriori minimax rule is also a priori minimax.
pub fn check_weak_time_consistency(dp: &DecisionProblem) -> Result<ConsistencyVerdict> {
    let notes = sufficient_conditions(dp)?;
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let value = a_priori_value(dp)?;
    let post = solve_a_posteriori(dp)?;
    let table = risk_table(dp.credal(), dp.loss());
    let mut witness = None;
    for rule in vertex_products(&post, nx, na, MAX_VERTEX_PRODUCTS)? {
        let worst = worst_case_from_table(&table, &rule);
        if worst > value {
            witness = Some(Witness::NotAPrioriOptimal {
                rule,
                worst_case: worst,
                value: value.clone(),
            });
            break;
        }
    }
    Ok(ConsistencyVerdict {
        kind: ConsistencyKind::WeakTime,
        result: if witness.is_some() {
            ConsistencyResult::Inconsistent
        } else {
            ConsistencyResult::Consistent
        },
        witness,
        strong_witness: None,
        notes,
    })
}

/// Whether the a priori and a posteriori minimax rules coincide.
pub fn check_time_consistency(dp: &DecisionProblem) -> Result<ConsistencyVerdict> {
    let weak = check_weak_time_consistency(dp)?;
    if weak.result == ConsistencyResult::Inconsistent {
        return Ok(ConsistencyVerdict {
            kind: ConsistencyKind::Time,
            ..weak
        });
    }
    let prior = solve_a_priori(dp)?;
    let face = prior.optimal_rule_vertices.ok_or_else(|| {
        Error::SizeLimit("the a priori optimal face is too large to enumerate".into())
    })?;
    if face.len() > MAX_VERTEX_PRODUCTS {
        return Err(Error::SizeLimit(format!(
            "{} a priori optimal vertices exceed {MAX_VERTEX_PRODUCTS}",
            face.len()
        )));
    }
    let post = solve_a_posteriori(dp)?;
    let conds = PosteriorTable::new(dp)?;
    // Deterministic witnesses read more easily, so the first failing deterministic vertex wins.
    let mut witness: Option<Witness> = None;
    for rule in face {
        let failure = post.per_x.iter().find_map(|s| {
            let m = conds.at(dp.loss(), &rule, s.x);
            (m > s.value).then(|| (s.x, m, s.value.clone()))
        });
        let Some((x, posterior, value)) = failure else {
            continue;
        };
        let deterministic = rule.is_deterministic();
        if witness.is_none() || deterministic {
            witness = Some(Witness::NotAPosterioriOptimal {
                rule,
                x,
                posterior,
                value,
            });
        }
        if deterministic {
            break;
        }
    }
    Ok(ConsistencyVerdict {
        kind: ConsistencyKind::Time,
        result: if witness.is_some() {
            ConsistencyResult::Inconsistent
        } else {
            ConsistencyResult::Consistent
        },
        witness,
        strong_witness: None,
        notes: weak.notes,
    })
}

/// Conditionals `P | X = x` for each `x ∈ X⁺`, computed once.
struct PosteriorTable {
    support: Vec<usize>,
    conds: Vec<Vec<Vec<Rational>>>,
}

impl PosteriorTable {
    fn new(dp: &DecisionProblem) -> Result<Self> {
        let support = support_x(dp.credal());
        let conds = support
            .iter()
            .map(|&x| Ok(conditionals_at(dp.credal(), x)?.unwrap_or_default()))
            .collect::<Result<_>>()?;
        Ok(Self { support, conds })
    }

    fn at(&self, loss: &LossFunction, rule: &DecisionRule, x: usize) -> Rational {
        let i = self.support.binary_search(&x).expect("x in support");
        self.conds[i]
            .iter()
            .map(|c| loss.expected(c, rule.action(x)))
            .max()
            .expect("nonempty conditionals")
    }

    fn profile(&self, loss: &LossFunction, rule: &DecisionRule) -> Vec<Rational> {
        self.support
            .iter()
            .map(|&x| self.at(loss, rule, x))
            .collect()
    }
}

struct Candidate {
    rule: DecisionRule,
    prior: Rational,
    posterior: Vec<Rational>,
}

fn normalise(rule: &DecisionRule, support: &[usize], na: usize) -> DecisionRule {
    let per_x = (0..rule.nx())
        .map(|x| {
            if support.contains(&x) {
                rule.action(x).clone()
            } else {
                RandomizedAction::uniform(na)
            }
        })
        .collect();
    DecisionRule::new(per_x).expect("nonempty rule")
}

/// The problem with only the actions in `keep`, or `None` when fewer than two remain.
fn restrict_actions(dp: &DecisionProblem, keep: &[usize]) -> Result<Option<DecisionProblem>> {
    if keep.len() < 2 {
        return Ok(None);
    }
    let s = dp.space();
    let space = Arc::new(ProblemSpace::new(
        s.x_labels().to_vec(),
        s.y_labels().to_vec(),
        keep.iter().map(|&a| s.action_labels()[a].clone()).collect(),
    )?);
    let rows = dp
        .loss()
        .rows()
        .iter()
        .map(|r| keep.iter().map(|&a| r[a].clone()).collect())
        .collect();
    let loss = LossFunction::new(&space, rows)?;
    let credal = crate::credal::CredalSet::new(
        space.clone(),
        dp.credal().generators().to_vec(),
        dp.credal().is_convex(),
    )?;
    Ok(Some(DecisionProblem::new(credal, loss)?))
}

fn widen(rule: &DecisionRule, keep: &[usize], na: usize) -> DecisionRule {
    let per_x = rule
        .actions()
        .iter()
        .map(|a| {
            let mut w = vec![zero(); na];
            for (&k, v) in keep.iter().zip(a.weights()) {
                w[k] = v.clone();
            }
            RandomizedAction::new(w).expect("widened action")
        })
        .collect();
    DecisionRule::new(per_x).expect("nonempty rule")
}

/// Deterministic candidate rules: for every action subset of size at least two, the
/// a posteriori vertex products and the a priori optimal face of the restricted problem;
/// then every deterministic rule.
fn candidate_rules(dp: &DecisionProblem) -> Result<Vec<DecisionRule>> {
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let mut subsets: Vec<Vec<usize>> = if na <= 8 {
        (1u32..(1 << na))
            .map(|m| (0..na).filter(|a| m >> a & 1 == 1).collect::<Vec<_>>())
            .filter(|s| s.len() >= 2)
            .collect()
    } else {
        vec![(0..na).collect()]
    };
    subsets.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut rules = Vec::new();
    for keep in &subsets {
        let Some(sub) = restrict_actions(dp, keep)? else {
            continue;
        };
        let post = solve_a_posteriori(&sub)?;
        if product_count(&post).is_some_and(|c| c <= MAX_FAMILY_SIZE) {
            for r in vertex_products(&post, nx, keep.len(), MAX_FAMILY_SIZE)? {
                rules.push(widen(&r, keep, na));
            }
        }
        if let Some(face) = solve_a_priori(&sub)?.optimal_rule_vertices {
            for r in face.iter().take(MAX_FAMILY_SIZE) {
                rules.push(widen(r, keep, na));
            }
        }
    }
    let deterministic = (na as u128).checked_pow(nx as u32).unwrap_or(u128::MAX);
    if deterministic <= MAX_FAMILY_SIZE as u128 {
        let mut actions = vec![0usize; nx];
        loop {
            rules.push(DecisionRule::deterministic(na, &actions));
            let Some(k) = (0..nx).rev().find(|&k| actions[k] + 1 < na) else {
                break;
            };
            actions[k] += 1;
            for a in &mut actions[k + 1..] {
                *a = 0;
            }
        }
    } else {
        for a in 0..na {
            rules.push(DecisionRule::constant(nx, RandomizedAction::pure(na, a)));
        }
    }
    Ok(rules)
}

fn classify(better: &Candidate, worse: &Candidate) -> (Option<DynamicCondition>, bool) {
    let weakly = better
        .posterior
        .iter()
        .zip(&worse.posterior)
        .all(|(a, b)| a <= b);
    if !weakly {
        return (None, false);
    }
    let strictly_all = better
        .posterior
        .iter()
        .zip(&worse.posterior)
        .all(|(a, b)| a < b);
    let strictly_some = better
        .posterior
        .iter()
        .zip(&worse.posterior)
        .any(|(a, b)| a < b);
    let violation = if better.prior > worse.prior {
        Some(DynamicCondition::Weak)
    } else if strictly_all && better.prior >= worse.prior {
        Some(DynamicCondition::Strict)
    } else {
        None
    };
    let strong = strictly_some && better.prior >= worse.prior;
    (violation, strong)
}

fn pair_witness(
    support: &[usize],
    better: &Candidate,
    worse: &Candidate,
    condition: DynamicCondition,
) -> Witness {
    let tag = |c: &Candidate| {
        support
            .iter()
            .copied()
            .zip(c.posterior.iter().cloned())
            .collect()
    };
    Witness::Pair {
        better: better.rule.clone(),
        worse: worse.rule.clone(),
        condition,
        better_posterior: tag(better),
        worse_posterior: tag(worse),
        better_prior: better.prior.clone(),
        worse_prior: worse.prior.clone(),
    }
}

/// Searches for a pair of rules violating dynamic consistency. `budget` random rules are
/// added to the deterministic families. The first violating pair in candidate order is
/// returned; without one the result is unknown.
pub fn falsify_dynamic_consistency(
    dp: &DecisionProblem,
    budget: usize,
    seed: u64,
) -> Result<ConsistencyVerdict> {
    let notes = sufficient_conditions(dp)?;
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let support = support_x(dp.credal());
    let conds = PosteriorTable::new(dp)?;
    let table = risk_table(dp.credal(), dp.loss());

    let mut rules = candidate_rules(dp)?;
    let mut rng = rng_from_seed(seed);
    rules.extend((0..budget).map(|_| random_rule(&mut rng, nx, na)));
    let mut seen = std::collections::HashSet::new();
    let candidates: Vec<Candidate> = rules
        .iter()
        .map(|r| normalise(r, &support, na))
        .filter(|r| seen.insert(r.to_vector()))
        .map(|rule| Candidate {
            prior: worst_case_from_table(&table, &rule),
            posterior: conds.profile(dp.loss(), &rule),
            rule,
        })
        .collect();

    let mut witness = None;
    let mut strong_witness = None;
    'search: for b in &candidates {
        for w in &candidates {
            let (violation, strong) = classify(b, w);
            if let (Some(c), None) = (violation, &witness) {
                witness = Some(pair_witness(&support, b, w, c));
            }
            if strong && strong_witness.is_none() {
                strong_witness = Some(pair_witness(&support, b, w, DynamicCondition::Strong));
            }
            if witness.is_some() && strong_witness.is_some() {
                break 'search;
            }
        }
    }
    if let Some(w) = &witness {
        debug_assert!(verify_witness(dp, w).unwrap_or(false));
    }
    Ok(ConsistencyVerdict {
        kind: ConsistencyKind::Dynamic,
        result: if witness.is_some() {
            ConsistencyResult::Inconsistent
        } else {
            ConsistencyResult::Unknown
        },
        witness,
        strong_witness,
        notes,
    })
}

/// Replays a witness through the worst-case primitives and checks that it violates the
/// defining inequality exactly.
pub fn verify_witness(dp: &DecisionProblem, witness: &Witness) -> Result<bool> {
    let p = dp.credal();
    let loss = dp.loss();
    Ok(match witness {
        Witness::NotAPrioriOptimal { rule, .. } => {
            let value = a_priori_value(dp)?;
            let post = solve_a_posteriori(dp)?;
            let optimal_after = post.per_x.iter().try_fold(true, |ok, s| {
                Ok::<_, Error>(ok && worst_case_posterior_loss(p, rule, loss, s.x)? == s.value)
            })?;
            optimal_after && worst_case_loss(p, rule, loss).0 > value
        }
        Witness::NotAPosterioriOptimal { rule, x, .. } => {
            let value = a_priori_value(dp)?;
            let post = solve_a_posteriori(dp)?;
            let mm = post.at(*x).map(|s| s.value.clone());
            worst_case_loss(p, rule, loss).0 == value
                && mm.is_some_and(|mm| {
                    worst_case_posterior_loss(p, rule, loss, *x).unwrap_or(mm.clone()) > mm
                })
        }
        Witness::Pair {
            better,
            worse,
            condition,
            ..
        } => {
            let mut le_all = true;
            let mut lt_all = true;
            let mut lt_some = false;
            for x in support_x(p) {
                let a = worst_case_posterior_loss(p, better, loss, x)?;
                let b = worst_case_posterior_loss(p, worse, loss, x)?;
                le_all &= a <= b;
                lt_all &= a < b;
                lt_some |= a < b;
            }
            let pb = worst_case_loss(p, better, loss).0;
            let pw = worst_case_loss(p, worse, loss).0;
            match condition {
                DynamicCondition::Weak => le_all && pb > pw,
                DynamicCondition::Strict => lt_all && pb >= pw,
                DynamicCondition::Strong => le_all && lt_some && pb >= pw,
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preference {
    /// The first rule is at least as good as the second, not conversely.
    FirstOverSecond,
    SecondOverFirst,
    Both,
    Incomparable,
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FirstOverSecond => "d1 ⪰ d2",
            Self::SecondOverFirst => "d2 ⪰ d1",
            Self::Both => "both",
            Self::Incomparable => "incomparable",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalleyComparison {
    pub preference: Preference,
    /// `max_Pr E_Pr[L_d1 − L_d2]`.
    pub first_minus_second: Rational,
    /// `max_Pr E_Pr[L_d2 − L_d1]`.
    pub second_minus_first: Rational,
}

/// The preorder ranking `d1` at least as good as `d2` when `max_Pr E_Pr[L_d1 − L_d2] ≤ 0`.
pub fn walley_prefers(
    dp: &DecisionProblem,
    d1: &DecisionRule,
    d2: &DecisionRule,
) -> Result<WalleyComparison> {
    let nx = dp.space().nx();
    if d1.nx() != nx || d2.nx() != nx {
        return Err(Error::DimensionMismatch(
            "rules must cover every observation".into(),
        ));
    }
    let table = risk_table(dp.credal(), dp.loss());
    let diffs: Vec<Rational> = table
        .iter()
        .map(|risk| {
            let e = |d: &DecisionRule| {
                d.to_vector()
                    .iter()
                    .zip(risk)
                    .fold(zero(), |acc, (w, r)| acc + w * r)
            };
            e(d1) - e(d2)
        })
        .collect();
    let first_minus_second = diffs.iter().max().expect("nonempty").clone();
    let second_minus_first = -diffs.iter().min().expect("nonempty").clone();
    let zero = zero();
    let preference = match (first_minus_second <= zero, second_minus_first <= zero) {
        (true, true) => Preference::Both,
        (true, false) => Preference::FirstOverSecond,
        (false, true) => Preference::SecondOverFirst,
        (false, false) => Preference::Incomparable,
    };
    Ok(WalleyComparison {
        preference,
        first_minus_second,
        second_minus_first,
    })
}

/// One-line description of a witness.
pub fn describe_witness(space: &ProblemSpace, witness: &Witness) -> String {
    let f = format_rational;
    match witness {
        Witness::NotAPrioriOptimal {
            rule,
            worst_case,
            value,
        } => format!(
            "a posteriori optimal rule {} has a priori worst case {} > {}",
            rule.display(space),
            f(worst_case),
            f(value)
        ),
        Witness::NotAPosterioriOptimal {
            rule,
            x,
            posterior,
            value,
        } => format!(
            "a priori optimal rule {} has worst case {} > {} after observing {}",
            rule.display(space),
            f(posterior),
            f(value),
            space.x_labels()[*x]
        ),
        Witness::Pair {
            better,
            worse,
            condition,
            better_posterior,
            worse_posterior,
            better_prior,
            worse_prior,
        } => {
            let post = |v: &[(usize, Rational)]| {
                v.iter()
                    .map(|(x, m)| format!("{}:{}", space.x_labels()[*x], f(m)))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let cond = match condition {
                DynamicCondition::Weak => "weak",
                DynamicCondition::Strict => "strict",
                DynamicCondition::Strong => "strong",
            };
            format!(
                "{} vs {} breaks the {cond} condition: a posteriori [{}] vs [{}], a priori {} vs {}",
                better.display(space),
                worse.display(space),
                post(better_posterior),
                post(worse_posterior),
                f(better_prior),
                f(worse_prior)
            )
        }
    }
}
