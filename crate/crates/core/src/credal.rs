//! Decision settings over finite `X × Y × A`: joint distributions, credal sets, loss
//! functions, decision rules and the set constructions built on them (marginals,
//! conditioning, the hull, rectangularity and dilation).

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::polytope::{prune, subset, VPolytope};
use crate::rational::{format_rational, int, one, parse_rational, sum, zero, Rational};

/// Largest number of generators the hull construction will emit.
pub const MAX_HULL_GENERATORS: usize = 100_000;

/// The observation, outcome and action label sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemSpace {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    action_labels: Vec<String>,
}

fn check_labels(kind: &str, labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Invalid(format!("{kind} labels must be nonempty")));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::Invalid(format!("duplicate {kind} label `{l}`")));
        }
    }
    Ok(())
}

impl ProblemSpace {
    pub fn new(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        action_labels: Vec<String>,
    ) -> Result<Self> {
        check_labels("x", &x_labels)?;
        check_labels("y", &y_labels)?;
        check_labels("action", &action_labels)?;
        if action_labels.len() < 2 {
            return Err(Error::Invalid("at least two actions are required".into()));
        }
        Ok(Self {
            x_labels,
            y_labels,
            action_labels,
        })
    }

    /// Convenience constructor from string slices.
    pub fn from_strs(x: &[&str], y: &[&str], a: &[&str]) -> Result<Self> {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self::new(own(x), own(y), own(a))
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    pub fn nx(&self) -> usize {
        self.x_labels.len()
    }

    pub fn ny(&self) -> usize {
        self.y_labels.len()
    }

    pub fn na(&self) -> usize {
        self.action_labels.len()
    }

    pub fn x_index(&self, label: &str) -> Option<usize> {
        self.x_labels.iter().position(|l| l == label)
    }

    pub fn y_index(&self, label: &str) -> Option<usize> {
        self.y_labels.iter().position(|l| l == label)
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.action_labels.iter().position(|l| l == label)
    }

    pub fn format_x_set(&self, xs: &[usize]) -> String {
        let names: Vec<&str> = xs.iter().map(|&x| self.x_labels[x].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// A probability assignment on `X × Y`, stored row-major by `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointDistribution {
    nx: usize,
    ny: usize,
    mass: Vec<Rational>,
}

impl JointDistribution {
    pub fn new(nx: usize, ny: usize, mass: Vec<Rational>) -> Result<Self> {
        if mass.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "{} masses for a {nx}×{ny} space",
                mass.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| m.is_negative()) {
            return Err(Error::Invalid(format!("negative mass {m}")));
        }
        let total = sum(&mass);
        if !total.is_one() {
            return Err(Error::Invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { nx, ny, mass })
    }

    /// Builds a distribution from rows indexed by `x`, columns by `y`.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("ragged distribution rows".into()));
        }
        Self::new(nx, ny, rows.into_iter().flatten().collect())
    }

    /// The product `Pr(x, y) = q(x)·r_x(y)`; `conditionals[x]` may be `None` when `q(x) = 0`.
    pub fn product(
        q: &[Rational],
        conditionals: &[Option<&Vec<Rational>>],
        ny: usize,
    ) -> Result<Self> {
        let mut mass = Vec::with_capacity(q.len() * ny);
        for (qx, r) in q.iter().zip(conditionals) {
            match r {
                Some(r) if !qx.is_zero() => mass.extend(r.iter().map(|v| qx * v)),
                _ => mass.extend(std::iter::repeat_n(zero(), ny)),
            }
        }
        Self::new(q.len(), ny, mass)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn mass(&self) -> &[Rational] {
        &self.mass
    }

    pub fn get(&self, x: usize, y: usize) -> &Rational {
        &self.mass[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[Rational] {
        &self.mass[x * self.ny..(x + 1) * self.ny]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        (0..self.nx).map(|x| self.row(x).to_vec()).collect()
    }

    pub fn prob_x(&self, x: usize) -> Rational {
        sum(self.row(x))
    }

    pub fn x_marginal(&self) -> Vec<Rational> {
        (0..self.nx).map(|x| self.prob_x(x)).collect()
    }

    pub fn y_marginal(&self) -> Vec<Rational> {
        (0..self.ny)
            .map(|y| (0..self.nx).fold(zero(), |a, x| a + self.get(x, y)))
            .collect()
    }

    pub fn prob_event(&self, event: &[usize]) -> Rational {
        event.iter().fold(zero(), |a, &x| a + self.prob_x(x))
    }

    /// `Pr(· | X ∈ event)` as a joint distribution, or `None` when the event has probability 0.
    pub fn condition(&self, event: &[usize]) -> Option<Self> {
        let pe = self.prob_event(event);
        if pe.is_zero() {
            return None;
        }
        let mut mass = vec![zero(); self.mass.len()];
        for &x in event {
            for y in 0..self.ny {
                mass[x * self.ny + y] = self.get(x, y) / &pe;
            }
        }
        Some(Self {
            nx: self.nx,
            ny: self.ny,
            mass,
        })
    }

    /// `(Pr | X = x)_Y`, or `None` when `Pr(X = x) = 0`.
    pub fn conditional_y(&self, x: usize) -> Option<Vec<Rational>> {
        let px = self.prob_x(x);
        if px.is_zero() {
            return None;
        }
        Some(self.row(x).iter().map(|v| v / &px).collect())
    }

    pub fn mix(&self, other: &Self, weight: &Rational) -> Self {
        let w2 = one() - weight;
        Self {
            nx: self.nx,
            ny: self.ny,
            mass: self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| weight * a + &w2 * b)
                .collect(),
        }
    }
}

/// A credal set: the convex hull of `generators` when `convex`, the finite list otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CredalSet {
    space: Arc<ProblemSpace>,
    generators: Vec<JointDistribution>,
    convex: bool,
}

impl CredalSet {
    /// Builds a credal set, dropping duplicate generators.
    pub fn new(
        space: Arc<ProblemSpace>,
        generators: Vec<JointDistribution>,
        convex: bool,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Invalid(
                "a credal set needs at least one generator".into(),
            ));
        }
        let mut unique: Vec<JointDistribution> = Vec::with_capacity(generators.len());
        for g in generators {
            if g.nx != space.nx() || g.ny != space.ny() {
                return Err(Error::DimensionMismatch(format!(
                    "generator over {}×{} in a {}×{} space",
                    g.nx,
                    g.ny,
                    space.nx(),
                    space.ny()
                )));
            }
            if !unique.contains(&g) {
                unique.push(g);
            }
        }
        Ok(Self {
            space,
            generators: unique,
            convex,
        })
    }

    pub fn space(&self) -> &Arc<ProblemSpace> {
        &self.space
    }

    pub fn generators(&self) -> &[JointDistribution] {
        &self.generators
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn with_convex(&self, convex: bool) -> Self {
        Self {
            convex,
            ..self.clone()
        }
    }

    /// The set as points of `Δ(X × Y)`.
    pub fn as_polytope(&self) -> VPolytope {
        let dim = self.space.nx() * self.space.ny();
        VPolytope::new(
            dim,
            self.generators.iter().map(|g| g.mass.clone()).collect(),
            self.convex,
        )
        .expect("credal sets are nonempty and dimensionally consistent")
    }

    /// `P_X`, pruned.
    pub fn marginal_x(&self) -> Result<VPolytope> {
        let s = VPolytope::new(
            self.space.nx(),
            self.generators.iter().map(|g| g.x_marginal()).collect(),
            self.convex,
        )?;
        prune(&s)
    }

    /// Drops generators that are not extreme points (no-op for finite sets).
    pub fn pruned(&self) -> Result<Self> {
        if !self.convex {
            return Ok(self.clone());
        }
        let p = prune(&self.as_polytope())?;
        let (nx, ny) = (self.space.nx(), self.space.ny());
        let generators = p
            .generators()
            .iter()
            .map(|m| JointDistribution {
                nx,
                ny,
                mass: m.clone(),
            })
            .collect();
        Self::new(self.space.clone(), generators, true)
    }
}

/// `L : Y × A → ℚ`, stored row-major by `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossFunction {
    ny: usize,
    na: usize,
    loss: Vec<Rational>,
}

impl LossFunction {
    /// Builds a loss from rows indexed by `y`, columns by action.
    pub fn new(space: &ProblemSpace, rows: Vec<Vec<Rational>>) -> Result<Self> {
        if rows.len() != space.ny() || rows.iter().any(|r| r.len() != space.na()) {
            return Err(Error::DimensionMismatch(format!(
                "loss must be a {}×{} matrix",
                space.ny(),
                space.na()
            )));
        }
        Ok(Self {
            ny: space.ny(),
            na: space.na(),
            loss: rows.into_iter().flatten().collect(),
        })
    }

    /// Loss 0 when the action label equals the outcome label, 1 otherwise.
    pub fn classification(space: &ProblemSpace) -> Self {
        let rows = space
            .y_labels()
            .iter()
            .map(|y| {
                space
                    .action_labels()
                    .iter()
                    .map(|a| if a == y { zero() } else { one() })
                    .collect()
            })
            .collect();
        Self::new(space, rows).expect("shape follows the space")
    }

    pub fn get(&self, y: usize, a: usize) -> &Rational {
        &self.loss[y * self.na + a]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        (0..self.ny)
            .map(|y| self.loss[y * self.na..(y + 1) * self.na].to_vec())
            .collect()
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn na(&self) -> usize {
        self.na
    }

    /// `max L − min L`.
    pub fn range(&self) -> Rational {
        let hi = self.loss.iter().max().cloned().unwrap_or_else(zero);
        let lo = self.loss.iter().min().cloned().unwrap_or_else(zero);
        hi - lo
    }

    /// Expected loss of a randomized action under a distribution on `Y`.
    pub fn expected(&self, y_dist: &[Rational], action: &RandomizedAction) -> Rational {
        let mut total = zero();
        for (y, py) in y_dist.iter().enumerate() {
            if py.is_zero() {
                continue;
            }
            for (a, w) in action.weights.iter().enumerate() {
                if !w.is_zero() {
                    total += py * w * self.get(y, a);
                }
            }
        }
        total
    }
}

/// `DP = (X, Y, A, P, L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionProblem {
    credal: CredalSet,
    loss: LossFunction,
}

impl DecisionProblem {
    pub fn new(credal: CredalSet, loss: LossFunction) -> Result<Self> {
        let s = credal.space();
        if loss.ny != s.ny() || loss.na != s.na() {
            return Err(Error::DimensionMismatch(
                "loss function and credal set use different spaces".into(),
            ));
        }
        Ok(Self { credal, loss })
    }

    pub fn space(&self) -> &Arc<ProblemSpace> {
        self.credal.space()
    }

    pub fn credal(&self) -> &CredalSet {
        &self.credal
    }

    pub fn loss(&self) -> &LossFunction {
        &self.loss
    }

    pub fn with_credal(&self, credal: CredalSet) -> Result<Self> {
        Self::new(credal, self.loss.clone())
    }
}

/// `α ∈ Δ(A)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RandomizedAction {
    weights: Vec<Rational>,
}

impl RandomizedAction {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| w.is_negative()) || !sum(&weights).is_one()
        {
            return Err(Error::Invalid(
                "action weights must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(Self { weights })
    }

    pub fn pure(na: usize, a: usize) -> Self {
        let mut weights = vec![zero(); na];
        weights[a] = one();
        Self { weights }
    }

    pub fn uniform(na: usize) -> Self {
        Self {
            weights: vec![Rational::new(1.into(), (na as i64).into()); na],
        }
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// The action played with certainty, if any.
    pub fn as_pure(&self) -> Option<usize> {
        self.weights.iter().position(|w| w.is_one())
    }
}

/// `δ : X → Δ(A)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecisionRule {
    per_x: Vec<RandomizedAction>,
}

impl DecisionRule {
    pub fn new(per_x: Vec<RandomizedAction>) -> Result<Self> {
        if per_x.is_empty() {
            return Err(Error::Invalid("a rule needs an action for every x".into()));
        }
        let na = per_x[0].weights.len();
        if per_x.iter().any(|a| a.weights.len() != na) {
            return Err(Error::DimensionMismatch(
                "actions of different lengths".into(),
            ));
        }
        Ok(Self { per_x })
    }

    pub fn constant(nx: usize, action: RandomizedAction) -> Self {
        Self {
            per_x: vec![action; nx],
        }
    }

    pub fn deterministic(na: usize, actions: &[usize]) -> Self {
        Self {
            per_x: actions
                .iter()
                .map(|&a| RandomizedAction::pure(na, a))
                .collect(),
        }
    }

    /// Rebuilds a rule from its flattened weight vector (row-major by `x`).
    pub fn from_vector(nx: usize, na: usize, v: &[Rational]) -> Result<Self> {
        if v.len() != nx * na {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {nx} observations and {na} actions",
                v.len()
            )));
        }
        let per_x = v
            .chunks(na)
            .map(|c| RandomizedAction::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(per_x)
    }

    pub fn to_vector(&self) -> Vec<Rational> {
        self.per_x.iter().flat_map(|a| a.weights.clone()).collect()
    }

    pub fn action(&self, x: usize) -> &RandomizedAction {
        &self.per_x[x]
    }

    pub fn actions(&self) -> &[RandomizedAction] {
        &self.per_x
    }

    pub fn nx(&self) -> usize {
        self.per_x.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.per_x.iter().all(|a| a.as_pure().is_some())
    }

    /// Ordering key under which rules are compared "in label order": earlier
    /// observations first, and within one observation, more weight on earlier
    /// actions ranks first.
    pub fn order_key(&self) -> Vec<Rational> {
        self.to_vector().into_iter().map(|w| -w).collect()
    }

    pub fn display<'a>(&'a self, space: &'a ProblemSpace) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, space }
    }
}

/// Formats a rule as `x→a` pairs, with randomized actions listed as weight vectors.
pub struct RuleDisplay<'a> {
    rule: &'a DecisionRule,
    space: &'a ProblemSpace,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .rule
            .per_x
            .iter()
            .enumerate()
            .map(|(x, a)| {
                format!(
                    "{}→{}",
                    self.space.x_labels()[x],
                    format_action(self.space, a)
                )
            })
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Splits on `sep` outside square brackets.
fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

/// Parses an action label or `[a:w, b:w]`; unlisted actions get weight 0.
pub fn parse_action(space: &ProblemSpace, text: &str) -> Result<RandomizedAction> {
    let text = text.trim();
    let action_index = |label: &str| {
        space
            .action_index(label.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown action {:?}", label.trim())))
    };
    let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
        return Ok(RandomizedAction::pure(space.na(), action_index(text)?));
    };
    let mut weights = vec![zero(); space.na()];
    for part in inner.split(',') {
        let (label, w) = part.split_once(':').ok_or_else(|| {
            Error::Invalid(format!("expected `action:weight`, got {:?}", part.trim()))
        })?;
        weights[action_index(label)?] += parse_rational(w)?;
    }
    RandomizedAction::new(weights)
}

impl DecisionRule {
    /// Parses `x→a, x→[a:w, b:w]` (the display format); `=` and `->` also separate.
    /// Every observation must be listed once.
    pub fn parse(space: &ProblemSpace, text: &str) -> Result<Self> {
        let mut per_x: Vec<Option<RandomizedAction>> = vec![None; space.nx()];
        for entry in split_top_level(text, ',')
            .into_iter()
            .filter(|e| !e.trim().is_empty())
        {
            let (x, a) = ["→", "->", "="]
                .iter()
                .find_map(|sep| entry.split_once(sep))
                .ok_or_else(|| {
                    Error::Invalid(format!("expected `x→action`, got {:?}", entry.trim()))
                })?;
            let xi = space
                .x_index(x.trim())
                .ok_or_else(|| Error::Invalid(format!("unknown observation {:?}", x.trim())))?;
            if per_x[xi].replace(parse_action(space, a)?).is_some() {
                return Err(Error::Invalid(format!(
                    "observation {:?} listed twice",
                    x.trim()
                )));
            }
        }
        let per_x = per_x
            .into_iter()
            .enumerate()
            .map(|(x, a)| {
                a.ok_or_else(|| {
                    Error::Invalid(format!(
                        "no action for observation {:?}",
                        space.x_labels()[x]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(per_x)
    }
}

/// `a` for a pure action, otherwise `[a:w, b:w]` over the support.
pub fn format_action(space: &ProblemSpace, action: &RandomizedAction) -> String {
    match action.as_pure() {
        Some(a) => space.action_labels()[a].clone(),
        None => {
            let parts: Vec<String> = action
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(a, w)| format!("{}:{}", space.action_labels()[a], format_rational(w)))
                .collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

/// A partition of `X` into nonempty disjoint cells, stored in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(nx: usize, cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; nx];
        let mut canonical = Vec::with_capacity(cells.len());
        for mut cell in cells {
            if cell.is_empty() {
                return Err(Error::Invalid("partition cells must be nonempty".into()));
            }
            cell.sort_unstable();
            for &x in &cell {
                if x >= nx {
                    return Err(Error::Invalid(format!(
                        "observation index {x} out of range"
                    )));
                }
                if seen[x] {
                    return Err(Error::Invalid("partition cells must be disjoint".into()));
                }
                seen[x] = true;
            }
            canonical.push(cell);
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invalid("partition cells must cover X".into()));
        }
        canonical.sort();
        Ok(Self { cells: canonical })
    }

    /// Builds the partition from a block label per observation.
    pub fn from_blocks(blocks: &[usize]) -> Self {
        let mut cells: Vec<Vec<usize>> = Vec::new();
        let mut order: Vec<usize> = Vec::new();
        for (x, &b) in blocks.iter().enumerate() {
            match order.iter().position(|&o| o == b) {
                Some(i) => cells[i].push(x),
                None => {
                    order.push(b);
                    cells.push(vec![x]);
                }
            }
        }
        Self::new(blocks.len(), cells).expect("block labelling is a partition")
    }

    pub fn singletons(nx: usize) -> Self {
        Self {
            cells: (0..nx).map(|x| vec![x]).collect(),
        }
    }

    pub fn whole(nx: usize) -> Self {
        Self {
            cells: vec![(0..nx).collect()],
        }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_of(&self, x: usize) -> &[usize] {
        self.cells
            .iter()
            .find(|c| c.contains(&x))
            .expect("partitions cover X")
    }

    /// Parses cells separated by `|`, labels within a cell by `,` (the display format).
    pub fn parse(space: &ProblemSpace, text: &str) -> Result<Self> {
        let cells = text
            .split('|')
            .map(|cell| {
                cell.trim()
                    .trim_start_matches('{')
                    .trim_end_matches('}')
                    .split(',')
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| {
                        space.x_index(l.trim()).ok_or_else(|| {
                            Error::Invalid(format!("unknown observation {:?}", l.trim()))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space.nx(), cells)
    }

    pub fn display(&self, space: &ProblemSpace) -> String {
        let parts: Vec<String> = self.cells.iter().map(|c| space.format_x_set(c)).collect();
        parts.join(" | ")
    }
}

/// `P_Y`, pruned, with the convex flag of `p`.
pub fn marginal_y(p: &CredalSet) -> Result<VPolytope> {
    let s = VPolytope::new(
        p.space().ny(),
        p.generators().iter().map(|g| g.y_marginal()).collect(),
        p.is_convex(),
    )?;
    prune(&s)
}

/// `P | E` for `E ⊆ X` (regular extension: generators with `Pr(E) = 0` are dropped).
pub fn condition(p: &CredalSet, event: &[usize]) -> Result<CredalSet> {
    if event.is_empty() {
        return Err(Error::Invalid("cannot condition on the empty event".into()));
    }
    if let Some(&x) = event.iter().find(|&&x| x >= p.space().nx()) {
        return Err(Error::Invalid(format!(
            "observation index {x} out of range"
        )));
    }
    let generators: Vec<JointDistribution> = p
        .generators()
        .iter()
        .filter_map(|g| g.condition(event))
        .collect();
    if generators.is_empty() {
        return Err(Error::UndefinedConditional(p.space().format_x_set(event)));
    }
    CredalSet::new(p.space().clone(), generators, p.is_convex())?.pruned()
}

/// `(P | E)_Y`.
pub fn posterior_y(p: &CredalSet, event: &[usize]) -> Result<VPolytope> {
    marginal_y(&condition(p, event)?)
}

/// `P | C(x)` for the cell of `partition` containing `x`.
pub fn c_condition(p: &CredalSet, partition: &Partition, x: usize) -> Result<CredalSet> {
    if x >= p.space().nx() {
        return Err(Error::Invalid(format!(
            "observation index {x} out of range"
        )));
    }
    condition(p, partition.cell_of(x))
}

/// `(P | X = x)_Y` as generators (pruned), or `None` when every generator gives `x` probability 0.
pub fn conditionals_at(p: &CredalSet, x: usize) -> Result<Option<Vec<Vec<Rational>>>> {
    let conds: Vec<Vec<Rational>> = p
        .generators()
        .iter()
        .filter_map(|g| g.conditional_y(x))
        .collect();
    if conds.is_empty() {
        return Ok(None);
    }
    let s = prune(&VPolytope::new(p.space().ny(), conds, p.is_convex())?)?;
    Ok(Some(s.generators().to_vec()))
}

/// `⟨P⟩`: every joint whose `X`-marginal comes from `P_X` and whose conditionals on each
/// positive-probability `x` come from `P | X = x`. Generators are the products of extreme
/// marginals with extreme conditionals.
pub fn hull(p: &CredalSet) -> Result<CredalSet> {
    let ny = p.space().ny();
    let marginals = p.marginal_x()?;
    let per_x: Vec<Option<Vec<Vec<Rational>>>> = (0..p.space().nx())
        .map(|x| conditionals_at(p, x))
        .collect::<Result<_>>()?;
    let mut generators = Vec::new();
    for q in marginals.generators() {
        let support: Vec<usize> = (0..q.len()).filter(|&x| !q[x].is_zero()).collect();
        let count = support
            .iter()
            .map(|&x| per_x[x].as_ref().map_or(1, Vec::len))
            .product::<usize>();
        if generators.len() + count > MAX_HULL_GENERATORS {
            return Err(Error::SizeLimit(format!(
                "hull would exceed {MAX_HULL_GENERATORS} generators"
            )));
        }
        let mut choice = vec![0usize; support.len()];
        loop {
            let mut conds: Vec<Option<&Vec<Rational>>> = vec![None; q.len()];
            for (k, &x) in support.iter().enumerate() {
                conds[x] = per_x[x].as_ref().map(|c| &c[choice[k]]);
            }
            generators.push(JointDistribution::product(q, &conds, ny)?);
            let mut k = 0;
            loop {
                if k == support.len() {
                    break;
                }
                choice[k] += 1;
                if choice[k] < per_x[support[k]].as_ref().map_or(1, Vec::len) {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == support.len() {
                break;
            }
        }
    }
    CredalSet::new(p.space().clone(), generators, p.is_convex())
}

/// `P = ⟨P⟩`. Since `P ⊆ ⟨P⟩` always holds, only the reverse inclusion is tested.
pub fn is_rectangular(p: &CredalSet) -> Result<bool> {
    subset(&hull(p)?.as_polytope(), &p.as_polytope())
}

/// Every generator gives every `x` positive probability.
pub fn is_conservative(p: &CredalSet) -> bool {
    p.generators()
        .iter()
        .all(|g| (0..g.nx).all(|x| g.prob_x(x).is_positive()))
}

/// `X⁺`: observations with positive probability under some member of `P`.
pub fn support_x(p: &CredalSet) -> Vec<usize> {
    (0..p.space().nx())
        .filter(|&x| p.generators().iter().any(|g| g.prob_x(x).is_positive()))
        .collect()
}

/// A closed interval of probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    fn of(values: impl Iterator<Item = Rational>) -> Self {
        let v: Vec<Rational> = values.collect();
        Self {
            lo: v.iter().min().cloned().unwrap_or_else(zero),
            hi: v.iter().max().cloned().unwrap_or_else(zero),
        }
    }

    /// Both endpoints lie strictly outside `other`.
    pub fn strictly_contains(&self, other: &Interval) -> bool {
        self.lo < other.lo && self.hi > other.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            format_rational(&self.lo),
            format_rational(&self.hi)
        )
    }
}

/// One `Y`-event of a dilation report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DilationRow {
    /// Indices into `Y`.
    pub event: Vec<usize>,
    pub prior: Interval,
    /// `(x, interval)` for every `x ∈ X⁺`.
    pub posteriors: Vec<(usize, Interval)>,
    /// The posterior interval strictly contains the prior one at every `x ∈ X⁺`.
    pub strict_dilation: bool,
}

/// Prior and posterior probability intervals for every nonempty proper `Y`-event.
pub fn dilation_report(p: &CredalSet) -> Result<Vec<DilationRow>> {
    let ny = p.space().ny();
    let support = support_x(p);
    let conds: Vec<(usize, Vec<Vec<Rational>>)> = support
        .iter()
        .map(|&x| Ok((x, conditionals_at(p, x)?.unwrap_or_default())))
        .collect::<Result<_>>()?;
    let marginals: Vec<Vec<Rational>> = p.generators().iter().map(|g| g.y_marginal()).collect();
    let mut rows = Vec::new();
    for mask in 1..(1usize << ny) - 1 {
        let event: Vec<usize> = (0..ny).filter(|y| mask >> y & 1 == 1).collect();
        let prob = |d: &Vec<Rational>| event.iter().fold(zero(), |a, &y| a + &d[y]);
        let prior = Interval::of(marginals.iter().map(prob));
        let posteriors: Vec<(usize, Interval)> = conds
            .iter()
            .map(|(x, cs)| (*x, Interval::of(cs.iter().map(prob))))
            .collect();
        let strict_dilation =
            !posteriors.is_empty() && posteriors.iter().all(|(_, i)| i.strictly_contains(&prior));
        rows.push(DilationRow {
            event,
            prior,
            posteriors,
            strict_dilation,
        });
    }
    Ok(rows)
}

/// Expected loss `E_Pr[L_δ]`.
pub fn expected_loss(pr: &JointDistribution, rule: &DecisionRule, loss: &LossFunction) -> Rational {
    let mut total = zero();
    for x in 0..pr.nx {
        let row = pr.row(x);
        if row.iter().all(Zero::is_zero) {
            continue;
        }
        total += loss.expected(row, rule.action(x));
    }
    total
}

/// The point mass at `(x, y)`.
pub fn point_mass(nx: usize, ny: usize, x: usize, y: usize) -> JointDistribution {
    let mut mass = vec![zero(); nx * ny];
    mass[x * ny + y] = int(1);
    JointDistribution { nx, ny, mass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{member, set_equal};
    use crate::rational::rat;

    fn binary_space() -> Arc<ProblemSpace> {
        Arc::new(ProblemSpace::from_strs(&["0", "1"], &["0", "1"], &["0", "1"]).unwrap())
    }

    fn joint(rows: Vec<Vec<Rational>>) -> JointDistribution {
        JointDistribution::from_rows(rows).unwrap()
    }

    /// All joints on {0,1}² with Pr(Y=1) = 2/3: the 1/3 of Y=0 mass and the 2/3 of Y=1
    /// mass each sit on a single x at an extreme point.
    fn prediction_set() -> CredalSet {
        let mut gens = Vec::new();
        for x0 in 0..2 {
            for x1 in 0..2 {
                let mut rows = vec![vec![zero(), zero()], vec![zero(), zero()]];
                rows[x0][0] += rat(1, 3);
                rows[x1][1] += rat(2, 3);
                gens.push(joint(rows));
            }
        }
        CredalSet::new(binary_space(), gens, true).unwrap()
    }

    #[test]
    fn space_validation() {
        assert!(ProblemSpace::from_strs(&["0"], &["0"], &["a"]).is_err());
        assert!(ProblemSpace::from_strs(&["0", "0"], &["0"], &["a", "b"]).is_err());
        assert!(ProblemSpace::from_strs(&[], &["0"], &["a", "b"]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(JointDistribution::from_rows(vec![vec![rat(1, 2), rat(1, 3)]]).is_err());
        assert!(JointDistribution::from_rows(vec![vec![rat(3, 2), rat(-1, 2)]]).is_err());
        let d = joint(vec![vec![rat(1, 6), rat(1, 3)], vec![rat(1, 6), rat(1, 3)]]);
        assert_eq!(d.x_marginal(), vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(d.y_marginal(), vec![rat(1, 3), rat(2, 3)]);
        assert_eq!(d.conditional_y(0).unwrap(), vec![rat(1, 3), rat(2, 3)]);
    }

    #[test]
    fn marginal_of_prediction_set_is_a_point() {
        let m = marginal_y(&prediction_set()).unwrap();
        assert_eq!(m.generators(), &[vec![rat(1, 3), rat(2, 3)]]);
    }

    #[test]
    fn conditioning_prediction_set_gives_whole_simplex() {
        let p = prediction_set();
        let post = posterior_y(&p, &[0]).unwrap();
        let simplex =
            VPolytope::new(2, vec![vec![int(1), int(0)], vec![int(0), int(1)]], true).unwrap();
        assert!(set_equal(&post, &simplex).unwrap());
        let full = condition(&p, &[0, 1]).unwrap();
        assert!(set_equal(&full.as_polytope(), &p.as_polytope()).unwrap());
    }

    #[test]
    fn undefined_conditional() {
        let p = CredalSet::new(binary_space(), vec![point_mass(2, 2, 0, 0)], true).unwrap();
        assert!(matches!(
            condition(&p, &[1]),
            Err(Error::UndefinedConditional(_))
        ));
        assert_eq!(support_x(&p), vec![0]);
    }

    #[test]
    fn hull_of_prediction_set_is_everything() {
        let h = hull(&prediction_set()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!(member(point_mass(2, 2, x, y).mass(), &h.as_polytope()).unwrap());
            }
        }
        assert!(!is_rectangular(&prediction_set()).unwrap());
    }

    #[test]
    fn hull_of_a_product_singleton_is_itself() {
        let d = joint(vec![vec![rat(1, 6), rat(1, 3)], vec![rat(1, 6), rat(1, 3)]]);
        let p = CredalSet::new(binary_space(), vec![d], true).unwrap();
        assert!(is_rectangular(&p).unwrap());
        assert!(is_conservative(&p));
        assert_eq!(hull(&p).unwrap(), p);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(2, vec![vec![0], vec![]]).is_err());
        let p = Partition::new(3, vec![vec![2], vec![1, 0]]).unwrap();
        assert_eq!(p.cells(), &[vec![0, 1], vec![2]]);
        assert_eq!(p.cell_of(1), &[0, 1]);
        assert_eq!(
            Partition::from_blocks(&[5, 2, 5]).cells(),
            &[vec![0, 2], vec![1]]
        );
    }

    #[test]
    fn dilation_on_prediction_set() {
        let rows = dilation_report(&prediction_set()).unwrap();
        let y1 = rows.iter().find(|r| r.event == vec![1]).unwrap();
        assert_eq!(
            y1.prior,
            Interval {
                lo: rat(2, 3),
                hi: rat(2, 3)
            }
        );
        assert!(y1.posteriors.iter().all(|(_, i)| *i
            == Interval {
                lo: int(0),
                hi: int(1)
            }));
        assert!(y1.strict_dilation);
    }

    #[test]
    fn expected_loss_of_point_mass() {
        let space = binary_space();
        let loss = LossFunction::classification(&space);
        let rule = DecisionRule::deterministic(2, &[1, 0]);
        assert_eq!(expected_loss(&point_mass(2, 2, 0, 0), &rule, &loss), int(1));
        assert_eq!(expected_loss(&point_mass(2, 2, 1, 0), &rule, &loss), int(0));
    }

    #[test]
    fn rule_order_prefers_earlier_actions() {
        let a = DecisionRule::deterministic(2, &[0, 1]);
        let b = DecisionRule::deterministic(2, &[1, 0]);
        assert!(a.order_key() < b.order_key());
    }

    #[test]
    fn rules_parse_their_display() {
        let s = ProblemSpace::from_strs(&["G2", "G3"], &["1", "2", "3"], &["1", "2", "3"]).unwrap();
        let r = DecisionRule::parse(&s, "G2→3, G3→[1:1/3, 2:2/3]").unwrap();
        assert_eq!(r.action(0).as_pure(), Some(2));
        assert_eq!(r.action(1).weights(), &[rat(1, 3), rat(2, 3), zero()]);
        assert_eq!(
            DecisionRule::parse(&s, &r.display(&s).to_string()).unwrap(),
            r
        );
        assert_eq!(
            DecisionRule::parse(&s, "G3=2,G2->3")
                .unwrap()
                .action(1)
                .as_pure(),
            Some(1)
        );
        assert!(DecisionRule::parse(&s, "G2→3").is_err());
        assert!(DecisionRule::parse(&s, "G2→3, G2→1, G3→2").is_err());
        assert!(DecisionRule::parse(&s, "G2→[1:1/2], G3→2").is_err());
        assert!(DecisionRule::parse(&s, "G2→4, G3→2").is_err());
    }

    #[test]
    fn partitions_parse_their_display() {
        let s = ProblemSpace::from_strs(&["a", "b", "c"], &["0", "1"], &["0", "1"]).unwrap();
        let c = Partition::parse(&s, "c,a|b").unwrap();
        assert_eq!(c.cells(), &[vec![0, 2], vec![1]]);
        assert_eq!(Partition::parse(&s, &c.display(&s)).unwrap(), c);
        assert!(Partition::parse(&s, "a|b").is_err());
        assert!(Partition::parse(&s, "a,b|b,c").is_err());
    }
}
