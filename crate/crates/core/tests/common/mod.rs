//! Shared setup for the property suites: a fixed proptest seed and seeded instances.

#![allow(dead_code)]

use std::sync::Arc;

use proptest::test_runner::{Config, RngSeed};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use credal::credal::{hull, CredalSet, DecisionProblem, JointDistribution, ProblemSpace};
use credal::lp::{lp_solve, LinearProgram, LpStatus, Sense};
use credal::polytope::VPolytope;
use credal::rational::{one, rat, zero};
use credal::sampling::{
    numbered_space, random_credal, random_distribution, random_loss, random_problem, rng_from_seed,
    seed_from_env, ProblemShape,
};
use credal::Rational;

/// Instances per property.
pub const CASES: u32 = 200;

/// `cases` instances drawn from the seed in `CREDAL_SEED` (default 0); nothing persisted.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed_from_env()),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_from_seed(seed)
}

pub fn problem(seed: u64, conservative: bool, convex: bool) -> DecisionProblem {
    let mut r = rng(seed);
    let shape = ProblemShape::random(&mut r, conservative, convex);
    random_problem(&mut r, &shape)
}

pub fn credal_set(seed: u64, conservative: bool, convex: bool) -> CredalSet {
    let mut r = rng(seed);
    let shape = ProblemShape::random(&mut r, conservative, convex);
    let space = numbered_space(shape.nx, shape.ny, shape.na);
    random_credal(&mut r, &space, &shape)
}

/// A rectangular set: the hull of a random set with two or three generators.
pub fn rectangular_set(seed: u64, conservative: bool) -> CredalSet {
    let mut r = rng(seed);
    let mut shape = ProblemShape::random(&mut r, conservative, true);
    shape.generators = 2 + (seed % 2) as usize;
    let space = numbered_space(shape.nx, shape.ny, shape.na);
    hull(&random_credal(&mut r, &space, &shape)).expect("small hulls fit")
}

pub fn rectangular_problem(seed: u64, conservative: bool) -> DecisionProblem {
    let p = rectangular_set(seed, conservative);
    let loss = random_loss(&mut rng(seed ^ 0x9e37_79b9), p.space());
    DecisionProblem::new(p, loss).expect("valid problem")
}

pub fn space_of(p: &CredalSet) -> Arc<ProblemSpace> {
    p.space().clone()
}

pub fn midpoint(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(u, v)| (u + v) * rat(1, 2)).collect()
}

pub fn nonempty_subset<R: Rng>(r: &mut R, of: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = of.iter().copied().filter(|_| r.gen_bool(0.5)).collect();
    if s.is_empty() {
        s.push(*of.choose(r).unwrap());
    }
    s.sort_unstable();
    s
}

/// A vertex of `∩ sets` minimising `c·y`, or `None` when the intersection is empty.
pub fn intersection_vertex(sets: &[VPolytope], c: &[Rational]) -> Option<Vec<Rational>> {
    let d = sets[0].dim();
    let total: usize = sets.iter().map(|s| s.generators().len()).sum();
    let mut objective = c.to_vec();
    objective.extend(vec![zero(); total]);
    let mut lp = LinearProgram::new(objective);
    for j in 0..d {
        lp.set_free(j);
    }
    let mut offset = d;
    for s in sets {
        let k = s.generators().len();
        for j in 0..d {
            let mut row = vec![zero(); d + total];
            row[j] = -one();
            for (i, g) in s.generators().iter().enumerate() {
                row[offset + i] = g[j].clone();
            }
            lp.add_row(row, Sense::Eq, zero());
        }
        let mut row = vec![zero(); d + total];
        for i in 0..k {
            row[offset + i] = one();
        }
        lp.add_row(row, Sense::Eq, one());
        offset += k;
    }
    let sol = lp_solve(&lp).unwrap();
    (sol.status == LpStatus::Optimal).then(|| sol.primal[..d].to_vec())
}

/// A convex set whose conditional at every `x` is the convex hull of the same points,
/// each generator pairing them in a different order.
pub fn shared_conditionals(seed: u64) -> CredalSet {
    let mut r = rng(seed);
    let (nx, ny) = (r.gen_range(2..=3), r.gen_range(2..=3));
    let k = r.gen_range(2..=3);
    let points: Vec<Vec<Rational>> = (0..k)
        .map(|_| random_distribution(&mut r, ny, false))
        .collect();
    let orders: Vec<Vec<usize>> = (0..nx)
        .map(|_| {
            let mut o: Vec<usize> = (0..k).collect();
            o.shuffle(&mut r);
            o
        })
        .collect();
    let gens = (0..k)
        .map(|g| {
            let q = random_distribution(&mut r, nx, true);
            let rows = (0..nx)
                .map(|x| points[orders[x][g]].iter().map(|v| v * &q[x]).collect())
                .collect();
            JointDistribution::from_rows(rows).unwrap()
        })
        .collect();
    CredalSet::new(numbered_space(nx, ny, 2), gens, true).unwrap()
}
