//! The two minimax games: a priori (the bookie commits before `x` is seen) and
//! a posteriori (the bookie picks a conditional after `x` is seen), together with
//! saddle-point verification, the ignore-information restriction and a grid oracle.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::credal::{
    condition, conditionals_at, expected_loss, marginal_y, support_x, CredalSet, DecisionProblem,
    DecisionRule, JointDistribution, LossFunction, RandomizedAction,
};
use crate::error::{Error, Result};
use crate::lp::{
    cut_vertices, lp_solve, optimal_face_vertices, zero_sum_lp, zero_sum_value, HalfSpace,
    LinearProgram, LpStatus, Sense, MAX_FACE_DIMENSION,
};
use crate::rational::{dot, int, one, zero, Rational};

/// Largest number of vertices tracked while enumerating an optimal rule face.
pub const MAX_RULE_VERTICES: usize = 100_000;

/// Largest number of grid rules [`brute_force_value`] will enumerate.
pub const MAX_GRID_RULES: u128 = 10_000_000;

/// Solution of the a priori game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimaxSolution {
    /// The game value `min_δ max_Pr E_Pr[L_δ]`.
    pub value: Rational,
    /// The first optimal vertex in label order (see [`DecisionRule::order_key`]).
    pub rule: DecisionRule,
    /// The bookie's equilibrium mixture over generator indices (positive weights only).
    pub bookie_mixture: Vec<(usize, Rational)>,
    /// `Σ π(i)·Pr_i`.
    pub aggregate: JointDistribution,
    /// Vertices of the optimal rule face in label order, or `None` when the face is
    /// too large to enumerate.
    pub optimal_rule_vertices: Option<Vec<DecisionRule>>,
    /// Observations outside `X⁺`; the rule plays the uniform action there.
    pub unconstrained_x: Vec<usize>,
}

impl MinimaxSolution {
    /// The optimal rule is unique (the optimal face is a single vertex).
    pub fn is_unique(&self) -> Option<bool> {
        self.optimal_rule_vertices.as_ref().map(|v| v.len() == 1)
    }
}

/// `Σ_y Pr(x, y)·L(y, a)` for every `(x, a)`, row-major by `x`.
pub fn risk_vector(pr: &JointDistribution, loss: &LossFunction) -> Vec<Rational> {
    let na = loss.na();
    let mut out = vec![zero(); pr.nx() * na];
    for x in 0..pr.nx() {
        for y in 0..pr.ny() {
            let m = pr.get(x, y);
            if m.is_zero() {
                continue;
            }
            for a in 0..na {
                out[x * na + a] += m * loss.get(y, a);
            }
        }
    }
    out
}

/// `max_{Pr ∈ P} E_Pr[L_δ]` with the index of the first generator attaining it.
pub fn worst_case_loss(
    p: &CredalSet,
    rule: &DecisionRule,
    loss: &LossFunction,
) -> (Rational, usize) {
    let mut best: Option<(Rational, usize)> = None;
    for (i, g) in p.generators().iter().enumerate() {
        let v = expected_loss(g, rule, loss);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, i));
        }
    }
    best.expect("credal sets are nonempty")
}

/// `m_δ(x) = max_{Pr ∈ P|X=x} E_Pr[L_δ]`, and 0 when `x ∉ X⁺`.
pub fn worst_case_posterior_loss(
    p: &CredalSet,
    rule: &DecisionRule,
    loss: &LossFunction,
    x: usize,
) -> Result<Rational> {
    Ok(match conditionals_at(p, x)? {
        None => zero(),
        Some(conds) => conds
            .iter()
            .map(|c| loss.expected(c, rule.action(x)))
            .max()
            .expect("nonempty conditionals"),
    })
}

/// The agent's LP for the a priori game: variables `δ(x)(a)` row-major by `x`, then `t`;
/// minimise `t` subject to `Σ_{x,a} (Σ_y Pr_i(x,y) L(y,a)) δ(x)(a) ≤ t` for every
/// generator and `δ(x) ∈ Δ(A)`.
pub fn a_priori_program(dp: &DecisionProblem) -> LinearProgram {
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let n = nx * na;
    let mut objective = vec![zero(); n + 1];
    objective[n] = one();
    let mut lp = LinearProgram::new(objective);
    lp.set_free(n);
    for g in dp.credal().generators() {
        let mut row = risk_vector(g, dp.loss());
        row.push(-one());
        lp.add_row(row, Sense::Le, zero());
    }
    for x in 0..nx {
        let mut row = vec![zero(); n + 1];
        for a in 0..na {
            row[x * na + a] = one();
        }
        lp.add_row(row, Sense::Eq, one());
    }
    lp
}

fn mixture_aggregate(p: &CredalSet, mixture: &[(usize, Rational)]) -> JointDistribution {
    let g = p.generators();
    let (nx, ny) = (p.space().nx(), p.space().ny());
    let mut mass = vec![zero(); nx * ny];
    for (i, w) in mixture {
        for (m, v) in mass.iter_mut().zip(g[*i].mass()) {
            *m += w * v;
        }
    }
    JointDistribution::new(nx, ny, mass).expect("a mixture of distributions is a distribution")
}

fn embed_rule(nx: usize, na: usize, support: &[usize], weights: &[Rational]) -> DecisionRule {
    let mut per_x = vec![RandomizedAction::uniform(na); nx];
    for (k, &x) in support.iter().enumerate() {
        per_x[x] = RandomizedAction::new(weights[k * na..(k + 1) * na].to_vec())
            .expect("face vertices lie in the simplex product");
    }
    DecisionRule::new(per_x).expect("nonempty rule")
}

/// Vertices of `{δ ∈ ∏_{x ∈ support} Δ(A) : Σ c_i·δ ≤ bound ∀ i}`, in the coordinates of
/// `support` only. `priority` lists cut indices to apply first.
fn rule_face(
    risks: &[Vec<Rational>],
    support: &[usize],
    na: usize,
    bound: &Rational,
    priority: &[usize],
) -> Result<Vec<Vec<Rational>>> {
    let n = support.len() * na;
    let eqs: Vec<Vec<Rational>> = (0..support.len())
        .map(|k| {
            let mut r = vec![zero(); n];
            for a in 0..na {
                r[k * na + a] = one();
            }
            r
        })
        .collect();
    let ineqs: Vec<HalfSpace> = (0..n)
        .map(|j| {
            let mut r = vec![zero(); n];
            r[j] = -one();
            (r, zero())
        })
        .collect();
    let mut start = vec![Vec::new()];
    for _ in support {
        let mut next = Vec::with_capacity(start.len() * na);
        for prefix in &start {
            for a in 0..na {
                let mut v: Vec<Rational> = prefix.clone();
                v.extend((0..na).map(|b| if a == b { one() } else { zero() }));
                next.push(v);
            }
        }
        start = next;
    }
    let restricted: Vec<Vec<Rational>> = risks
        .iter()
        .map(|r| {
            support
                .iter()
                .flat_map(|&x| r[x * na..(x + 1) * na].to_vec())
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = priority.to_vec();
    order.extend((0..risks.len()).filter(|i| !priority.contains(i)));
    let cuts: Vec<HalfSpace> = order
        .iter()
        .map(|&i| (restricted[i].clone(), bound.clone()))
        .collect();
    cut_vertices(&eqs, &ineqs, start, &cuts, MAX_RULE_VERTICES)
}

/// Optimal rules of the a priori game, as vertices sorted in label order; `None`
/// when `|X⁺|·|A|` exceeds [`MAX_FACE_DIMENSION`].
pub fn a_priori_face(
    dp: &DecisionProblem,
    value: &Rational,
    priority: &[usize],
) -> Result<Option<Vec<DecisionRule>>> {
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let support = support_x(dp.credal());
    if support.len() * na > MAX_FACE_DIMENSION {
        return Ok(None);
    }
    let risks: Vec<Vec<Rational>> = dp
        .credal()
        .generators()
        .iter()
        .map(|g| risk_vector(g, dp.loss()))
        .collect();
    let verts = rule_face(&risks, &support, na, value, priority)?;
    let mut rules: Vec<DecisionRule> = verts
        .iter()
        .map(|v| embed_rule(nx, na, &support, v))
        .collect();
    rules.sort_by_key(DecisionRule::order_key);
    Ok(Some(rules))
}

/// Solves the a priori game exactly.
///
/// The LP solved is the bookie's side (a mixture `π` over generators and one free
/// variable per observation); the agent's optimal rule is read off its duals and the
/// optimal face is then enumerated in rule space.
pub fn solve_a_priori(dp: &DecisionProblem) -> Result<MinimaxSolution> {
    let p = dp.credal();
    let nx = dp.space().nx();
    let support = support_x(p);
    let unconstrained_x: Vec<usize> = (0..nx).filter(|x| !support.contains(x)).collect();
    let (value, bookie_mixture, dual_rule) = solve_bookie_program(dp)?;
    let aggregate = mixture_aggregate(p, &bookie_mixture);
    let priority: Vec<usize> = bookie_mixture.iter().map(|(i, _)| *i).collect();
    let optimal_rule_vertices = a_priori_face(dp, &value, &priority)?;
    let rule = match &optimal_rule_vertices {
        Some(v) if !v.is_empty() => v[0].clone(),
        _ => dual_rule,
    };
    Ok(MinimaxSolution {
        value,
        rule,
        bookie_mixture,
        aggregate,
        optimal_rule_vertices,
        unconstrained_x,
    })
}

/// The a priori value alone, without enumerating the optimal face.
pub fn a_priori_value(dp: &DecisionProblem) -> Result<Rational> {
    Ok(solve_bookie_program(dp)?.0)
}

type BookieSolution = (Rational, Vec<(usize, Rational)>, DecisionRule);

fn solve_bookie_program(dp: &DecisionProblem) -> Result<BookieSolution> {
    let p = dp.credal();
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let support = support_x(p);
    let risks: Vec<Vec<Rational>> = p
        .generators()
        .iter()
        .map(|g| risk_vector(g, dp.loss()))
        .collect();
    let ng = risks.len();
    let nu = support.len();

    let mut objective = vec![zero(); ng + nu];
    for o in objective.iter_mut().skip(ng) {
        *o = -one();
    }
    let mut lp = LinearProgram::new(objective);
    for k in 0..nu {
        lp.set_free(ng + k);
    }
    for (k, &x) in support.iter().enumerate() {
        for a in 0..na {
            let mut row: Vec<Rational> = risks.iter().map(|r| -r[x * na + a].clone()).collect();
            row.extend((0..nu).map(|j| if j == k { one() } else { zero() }));
            lp.add_row(row, Sense::Le, zero());
        }
    }
    let mut simplex = vec![one(); ng];
    simplex.extend(std::iter::repeat_n(zero(), nu));
    lp.add_row(simplex, Sense::Eq, one());
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    let value = -sol.value.clone();
    let bookie_mixture: Vec<(usize, Rational)> = sol.primal[..ng]
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_positive())
        .map(|(i, w)| (i, w.clone()))
        .collect();
    let dual_weights: Vec<Rational> = sol.dual[..nu * na].iter().map(|y| -y.clone()).collect();
    let dual_rule = embed_rule(nx, na, &support, &dual_weights);
    Ok((value, bookie_mixture, dual_rule))
}

/// The a posteriori game at one observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosteriorAtX {
    pub x: usize,
    /// `MM(x)`.
    pub value: Rational,
    /// Vertices of the optimal randomized actions, in label order.
    pub action_vertices: Vec<RandomizedAction>,
    /// The bookie's equilibrium mixture over generators of `conditioned`.
    pub bookie_mixture: Vec<(usize, Rational)>,
    /// `P | X = x` (pruned).
    pub conditioned: CredalSet,
}

/// Solution of the a posteriori game at every `x ∈ X⁺`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosteriorSolution {
    pub per_x: Vec<PosteriorAtX>,
}

impl PosteriorSolution {
    pub fn at(&self, x: usize) -> Option<&PosteriorAtX> {
        self.per_x.iter().find(|s| s.x == x)
    }

    /// The rule playing the first optimal vertex at every `x ∈ X⁺` and uniform elsewhere.
    pub fn canonical_rule(&self, nx: usize, na: usize) -> DecisionRule {
        let mut per_x = vec![RandomizedAction::uniform(na); nx];
        for s in &self.per_x {
            per_x[s.x] = s.action_vertices[0].clone();
        }
        DecisionRule::new(per_x).expect("nonempty rule")
    }
}

fn action_face(payoff: &[Vec<Rational>], value: &Rational) -> Result<Vec<RandomizedAction>> {
    let na = payoff.len();
    let lp = zero_sum_lp(payoff)?;
    let mut actions: Vec<RandomizedAction> = optimal_face_vertices(&lp, value)?
        .into_iter()
        .map(|v| RandomizedAction::new(v[..na].to_vec()))
        .collect::<Result<_>>()?;
    actions.sort_by_key(|a| a.weights().iter().map(|w| -w.clone()).collect::<Vec<_>>());
    actions.dedup();
    Ok(actions)
}

/// Solves the a posteriori game: for each `x ∈ X⁺`, a zero-sum game between randomized
/// actions and the generators of `P | X = x`.
pub fn solve_a_posteriori(dp: &DecisionProblem) -> Result<PosteriorSolution> {
    let p = dp.credal();
    let loss = dp.loss();
    let na = dp.space().na();
    let mut per_x = Vec::new();
    for x in support_x(p) {
        let conditioned = condition(p, &[x])?;
        let payoff: Vec<Vec<Rational>> = (0..na)
            .map(|a| {
                let pure = RandomizedAction::pure(na, a);
                conditioned
                    .generators()
                    .iter()
                    .map(|g| loss.expected(g.row(x), &pure))
                    .collect()
            })
            .collect();
        let game = zero_sum_value(&payoff)?;
        let action_vertices = action_face(&payoff, &game.value)?;
        let bookie_mixture = game
            .col_mix
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_positive())
            .map(|(i, w)| (i, w.clone()))
            .collect();
        per_x.push(PosteriorAtX {
            x,
            value: game.value,
            action_vertices,
            bookie_mixture,
            conditioned,
        });
    }
    Ok(PosteriorSolution { per_x })
}

/// Clause-by-clause outcome of [`verify_saddle`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaddleReport {
    /// `E_π E_Pr[L_δ]`.
    pub mixture_loss: Rational,
    /// `min_δ' E_{Pr*}[L_δ']`.
    pub best_response: Rational,
    /// `max_{Pr ∈ P} E_Pr[L_δ]`.
    pub worst_case: Rational,
    /// (i) `E_π E_Pr[L_δ] = min_δ' E_{Pr*}[L_δ']`: the rule is a best response to the aggregate.
    pub agent_best_response: bool,
    /// (ii) `min_δ' E_{Pr*}[L_δ'] = max_Pr E_Pr[L_δ]`: the guaranteed losses of both sides meet.
    pub bookie_best_response: bool,
    /// (iii) every generator in the mixture's support attains the worst case.
    pub support_attains_max: bool,
}

impl SaddleReport {
    pub fn holds(&self) -> bool {
        self.agent_best_response && self.bookie_best_response && self.support_attains_max
    }

    /// Names of the failing clauses, in order.
    pub fn failing_clauses(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.agent_best_response {
            out.push("(i) agent best response");
        }
        if !self.bookie_best_response {
            out.push("(ii) bookie best response");
        }
        if !self.support_attains_max {
            out.push("(iii) support attains the maximum");
        }
        out
    }
}

/// Checks that `(mixture, rule)` is a saddle point of the a priori game.
pub fn verify_saddle(
    dp: &DecisionProblem,
    mixture: &[(usize, Rational)],
    rule: &DecisionRule,
) -> Result<SaddleReport> {
    let p = dp.credal();
    let loss = dp.loss();
    let ng = p.generators().len();
    if mixture.is_empty()
        || mixture.iter().any(|(i, w)| *i >= ng || !w.is_positive())
        || mixture.iter().fold(zero(), |a, (_, w)| a + w) != one()
    {
        return Err(Error::Invalid(
            "mixture must put positive weights summing to 1 on generator indices".into(),
        ));
    }
    if rule.nx() != dp.space().nx() || rule.action(0).weights().len() != dp.space().na() {
        return Err(Error::DimensionMismatch(
            "rule does not match the problem".into(),
        ));
    }
    let aggregate = mixture_aggregate(p, mixture);
    let mixture_loss = expected_loss(&aggregate, rule, loss);
    let na = dp.space().na();
    let best_response = (0..aggregate.nx()).fold(zero(), |acc, x| {
        let row = aggregate.row(x);
        let best = (0..na)
            .map(|a| loss.expected(row, &RandomizedAction::pure(na, a)))
            .min()
            .expect("at least two actions");
        acc + best
    });
    let (worst_case, _) = worst_case_loss(p, rule, loss);
    let support_attains_max = mixture
        .iter()
        .all(|(i, _)| expected_loss(&p.generators()[*i], rule, loss) == worst_case);
    Ok(SaddleReport {
        agent_best_response: mixture_loss == best_response,
        bookie_best_response: best_response == worst_case,
        support_attains_max,
        mixture_loss,
        best_response,
        worst_case,
    })
}

/// The a priori game restricted to rules that ignore the observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IgnoringSolution {
    /// Solution over constant rules; `value` is the restricted value.
    pub solution: MinimaxSolution,
    /// Value of the unrestricted a priori game.
    pub unrestricted_value: Rational,
    /// The restricted value equals the unrestricted one.
    pub ignoring_optimal: bool,
    /// `max` over generators of `P_Y` of the expected loss of the constant action.
    pub marginal_value: Rational,
}

/// Solves the a priori game over constant rules `δ(x) = α` and compares it with the
/// unrestricted game.
pub fn solve_ignoring(dp: &DecisionProblem) -> Result<IgnoringSolution> {
    let p = dp.credal();
    let loss = dp.loss();
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let marginals: Vec<Vec<Rational>> = p.generators().iter().map(|g| g.y_marginal()).collect();
    let payoff: Vec<Vec<Rational>> = (0..na)
        .map(|a| {
            let pure = RandomizedAction::pure(na, a);
            marginals.iter().map(|m| loss.expected(m, &pure)).collect()
        })
        .collect();
    let game = zero_sum_value(&payoff)?;
    let actions = action_face(&payoff, &game.value)?;
    let rules: Vec<DecisionRule> = actions
        .iter()
        .map(|a| DecisionRule::constant(nx, a.clone()))
        .collect();
    let bookie_mixture: Vec<(usize, Rational)> = game
        .col_mix
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_positive())
        .map(|(i, w)| (i, w.clone()))
        .collect();
    let aggregate = mixture_aggregate(p, &bookie_mixture);
    let unrestricted = a_priori_value(dp)?;
    let support = support_x(p);
    let alpha = &actions[0];
    let marginal_value = marginal_y(p)?
        .generators()
        .iter()
        .map(|m| loss.expected(m, alpha))
        .max()
        .expect("nonempty marginal set");
    let solution = MinimaxSolution {
        value: game.value.clone(),
        rule: rules[0].clone(),
        bookie_mixture,
        aggregate,
        optimal_rule_vertices: Some(rules),
        unconstrained_x: (0..nx).filter(|x| !support.contains(x)).collect(),
    };
    Ok(IgnoringSolution {
        ignoring_optimal: game.value == unrestricted,
        unrestricted_value: unrestricted,
        marginal_value,
        solution,
    })
}

/// Outcome of [`check_independence_cover`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverResult {
    /// Every tested `Y`-marginal had a product distribution in `P`; not a proof for all of `P_Y`.
    HoldsAtTestedPoints { checked: usize },
    /// No `q ∈ Δ(X)` makes `q ⊗ r` a member of `P`.
    Counterexample { y_marginal: Vec<Rational> },
}

/// Whether some `q ∈ Δ(X)` makes `q ⊗ r` a member of `p`.
pub fn has_product_with_marginal(p: &CredalSet, r: &[Rational]) -> Result<bool> {
    let (nx, ny) = (p.space().nx(), p.space().ny());
    let gens = p.generators();
    if !p.is_convex() {
        return Ok(gens.iter().any(|g| {
            (0..nx).all(|x| {
                let px = g.prob_x(x);
                (0..ny).all(|y| *g.get(x, y) == &px * &r[y])
            })
        }));
    }
    let ng = gens.len();
    let mut lp = LinearProgram::new(vec![zero(); nx + ng]);
    for x in 0..nx {
        for (y, ry) in r.iter().enumerate() {
            let mut row = vec![zero(); nx + ng];
            row[x] = -ry.clone();
            for (i, g) in gens.iter().enumerate() {
                row[nx + i] = g.get(x, y).clone();
            }
            lp.add_row(row, Sense::Eq, zero());
        }
    }
    let mut qsum = vec![zero(); nx + ng];
    for v in qsum.iter_mut().take(nx) {
        *v = one();
    }
    lp.add_row(qsum, Sense::Eq, one());
    let mut lsum = vec![zero(); nx + ng];
    for v in lsum.iter_mut().skip(nx) {
        *v = one();
    }
    lp.add_row(lsum, Sense::Eq, one());
    Ok(lp_solve(&lp)?.status == LpStatus::Optimal)
}

/// Tests the independence-cover hypothesis (for each `Y`-marginal some product
/// distribution with that marginal lies in `P`) at every vertex of `P_Y` and at
/// `samples` random mixtures of them.
pub fn check_independence_cover(p: &CredalSet, samples: usize, seed: u64) -> Result<CoverResult> {
    let vertices = marginal_y(p)?.generators().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vertices.clone();
    if p.is_convex() && vertices.len() > 1 {
        for _ in 0..samples {
            let w: Vec<i64> = vertices.iter().map(|_| rng.gen_range(1..=24)).collect();
            let total: i64 = w.iter().sum();
            let mut point = vec![zero(); p.space().ny()];
            for (v, wi) in vertices.iter().zip(&w) {
                let c = Rational::new((*wi).into(), total.into());
                for (pt, vy) in point.iter_mut().zip(v) {
                    *pt += &c * vy;
                }
            }
            points.push(point);
        }
    }
    for r in &points {
        if !has_product_with_marginal(p, r)? {
            return Ok(CoverResult::Counterexample {
                y_marginal: r.clone(),
            });
        }
    }
    Ok(CoverResult::HoldsAtTestedPoints {
        checked: points.len(),
    })
}

/// Bounds from [`brute_force_value`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleBounds {
    pub lower: Rational,
    pub upper: Rational,
    /// A grid rule attaining `upper`.
    pub best_rule: DecisionRule,
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Grid oracle for the a priori value: the minimum worst-case loss over rules whose
/// weights are multiples of `1/grid` (an upper bound), minus a Lipschitz slack
/// `|A|·range(L)/grid` (a lower bound).
pub fn brute_force_value(dp: &DecisionProblem, grid: usize) -> Result<OracleBounds> {
    if grid == 0 {
        return Err(Error::Invalid("grid must be at least 1".into()));
    }
    let (nx, na) = (dp.space().nx(), dp.space().na());
    let exponent = u32::try_from(nx * (na - 1)).unwrap_or(u32::MAX);
    let count = (grid as u128 + 1)
        .checked_pow(exponent)
        .unwrap_or(u128::MAX);
    if count > MAX_GRID_RULES {
        return Err(Error::SizeLimit(format!(
            "grid {grid} needs more than {MAX_GRID_RULES} rules"
        )));
    }
    let support = support_x(dp.credal());
    let g = Rational::from_integer((grid as i64).into());
    let actions: Vec<RandomizedAction> = compositions(grid, na)
        .into_iter()
        .map(|c| {
            RandomizedAction::new(c.into_iter().map(|k| int(k as i64) / &g).collect())
                .expect("grid weights sum to 1")
        })
        .collect();
    let mut choice = vec![0usize; support.len()];
    let mut best: Option<(Rational, DecisionRule)> = None;
    loop {
        let mut per_x = vec![RandomizedAction::uniform(na); nx];
        for (k, &x) in support.iter().enumerate() {
            per_x[x] = actions[choice[k]].clone();
        }
        let rule = DecisionRule::new(per_x)?;
        let (v, _) = worst_case_loss(dp.credal(), &rule, dp.loss());
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, rule));
        }
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < actions.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    let (upper, best_rule) = best.expect("at least one grid rule");
    let slack = int(na as i64) * dp.loss().range() / &g;
    Ok(OracleBounds {
        lower: &upper - slack,
        upper,
        best_rule,
    })
}

/// `E_Pr[L_δ]` for every generator, useful when many rules are compared on one set.
pub fn risk_table(p: &CredalSet, loss: &LossFunction) -> Vec<Vec<Rational>> {
    p.generators()
        .iter()
        .map(|g| risk_vector(g, loss))
        .collect()
}

/// `max_i risk_i · δ`.
pub fn worst_case_from_table(table: &[Vec<Rational>], rule: &DecisionRule) -> Rational {
    let v = rule.to_vector();
    table
        .iter()
        .map(|r| dot(r, &v))
        .max()
        .expect("nonempty risk table")
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::credal::{point_mass, ProblemSpace};
    use crate::rational::rat;

    fn prediction_problem(extra_action: bool) -> DecisionProblem {
        let actions: &[&str] = if extra_action {
            &["0", "1", "2"]
        } else {
            &["0", "1"]
        };
        let space = Arc::new(ProblemSpace::from_strs(&["0", "1"], &["0", "1"], actions).unwrap());
        let mut gens = Vec::new();
        for x0 in 0..2 {
            for x1 in 0..2 {
                let mut rows = vec![vec![zero(), zero()], vec![zero(), zero()]];
                rows[x0][0] += rat(1, 3);
                rows[x1][1] += rat(2, 3);
                gens.push(JointDistribution::from_rows(rows).unwrap());
            }
        }
        let p = CredalSet::new(space.clone(), gens, true).unwrap();
        let mut rows = LossFunction::classification(&space).rows();
        if extra_action {
            for r in rows.iter_mut() {
                r[2] = int(-1);
            }
        }
        DecisionProblem::new(p, LossFunction::new(&space, rows).unwrap()).unwrap()
    }

    #[test]
    fn agent_program_matches_bookie_program() {
        let dp = prediction_problem(false);
        let sol = lp_solve(&a_priori_program(&dp)).unwrap();
        assert_eq!(sol.value, rat(1, 3));
        assert_eq!(solve_a_priori(&dp).unwrap().value, rat(1, 3));
    }

    #[test]
    fn a_priori_prediction() {
        let dp = prediction_problem(false);
        let s = solve_a_priori(&dp).unwrap();
        assert_eq!(s.rule, DecisionRule::deterministic(2, &[1, 1]));
        assert_eq!(s.is_unique(), Some(true));
        assert!(verify_saddle(&dp, &s.bookie_mixture, &s.rule)
            .unwrap()
            .holds());
    }

    #[test]
    fn suboptimal_rule_fails_bookie_clause() {
        let dp = prediction_problem(false);
        let s = solve_a_priori(&dp).unwrap();
        let bad = DecisionRule::deterministic(2, &[0, 0]);
        let r = verify_saddle(&dp, &s.bookie_mixture, &bad).unwrap();
        assert!(!r.holds());
        assert_eq!(r.worst_case, rat(2, 3));
        assert!(!r.bookie_best_response);
    }

    #[test]
    fn posterior_prediction_randomizes() {
        let dp = prediction_problem(false);
        let post = solve_a_posteriori(&dp).unwrap();
        for x in 0..2 {
            let s = post.at(x).unwrap();
            assert_eq!(s.value, rat(1, 2));
            assert_eq!(
                s.action_vertices,
                vec![RandomizedAction::new(vec![rat(1, 2), rat(1, 2)]).unwrap()]
            );
        }
    }

    #[test]
    fn posterior_worst_case_off_support_is_zero() {
        let space =
            Arc::new(ProblemSpace::from_strs(&["0", "1"], &["0", "1"], &["0", "1"]).unwrap());
        let p = CredalSet::new(space.clone(), vec![point_mass(2, 2, 0, 1)], true).unwrap();
        let loss = LossFunction::classification(&space);
        let rule = DecisionRule::deterministic(2, &[0, 0]);
        assert_eq!(
            worst_case_posterior_loss(&p, &rule, &loss, 1).unwrap(),
            int(0)
        );
        assert_eq!(
            worst_case_posterior_loss(&p, &rule, &loss, 0).unwrap(),
            int(1)
        );
    }

    #[test]
    fn abstaining_action_dominates() {
        let dp = prediction_problem(true);
        let s = solve_a_priori(&dp).unwrap();
        assert_eq!(s.value, int(-1));
        assert_eq!(
            s.optimal_rule_vertices.unwrap(),
            vec![DecisionRule::deterministic(3, &[2, 2])]
        );
    }

    #[test]
    fn ignoring_is_optimal_for_prediction() {
        let dp = prediction_problem(false);
        let ig = solve_ignoring(&dp).unwrap();
        assert_eq!(ig.solution.value, rat(1, 3));
        assert!(ig.ignoring_optimal);
        assert_eq!(ig.marginal_value, rat(1, 3));
    }

    #[test]
    fn independence_cover_of_prediction_set() {
        let dp = prediction_problem(false);
        assert!(matches!(
            check_independence_cover(dp.credal(), 5, 0).unwrap(),
            CoverResult::HoldsAtTestedPoints { .. }
        ));
    }

    #[test]
    fn grid_oracle_brackets_value() {
        let dp = prediction_problem(false);
        let b = brute_force_value(&dp, 3).unwrap();
        assert_eq!(b.upper, rat(1, 3));
        assert!(b.lower <= rat(1, 3));
        assert!(brute_force_value(&dp, 0).is_err());
        assert!(matches!(
            brute_force_value(&dp, 10_000_000),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn compositions_cover_the_grid() {
        assert_eq!(compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(compositions(3, 3).len(), 10);
    }
}
