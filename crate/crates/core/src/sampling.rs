//! Seeded random instances: rational distributions, credal sets, losses and rules.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::credal::{
    CredalSet, DecisionProblem, DecisionRule, JointDistribution, LossFunction, ProblemSpace,
    RandomizedAction,
};
use crate::rational::{rat, zero, Rational};

/// Largest denominator used by the samplers.
pub const MAX_DENOMINATOR: i64 = 24;

/// Environment variable that fixes the sampling seed.
pub const SEED_VAR: &str = "CREDAL_SEED";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed from `CREDAL_SEED`, or 0 when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_VAR)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

/// A distribution on `n` points with a common denominator of at most [`MAX_DENOMINATOR`].
/// With `positive`, every point gets mass, which needs `n ≤ MAX_DENOMINATOR`.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize, positive: bool) -> Vec<Rational> {
    assert!(n >= 1 && (!positive || n as i64 <= MAX_DENOMINATOR));
    let low = if positive { n as i64 } else { 1 };
    let d = rng.gen_range(low..=MAX_DENOMINATOR);
    let mut cuts: Vec<i64> = if positive {
        let mut inner: Vec<i64> = (1..d).collect();
        inner.shuffle(rng);
        inner.truncate(n - 1);
        inner
    } else {
        (0..n - 1).map(|_| rng.gen_range(0..=d)).collect()
    };
    cuts.push(0);
    cuts.push(d);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| rat(w[1] - w[0], d)).collect()
}

/// Shape of a random decision problem.
#[derive(Clone, Copy, Debug)]
pub struct ProblemShape {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub generators: usize,
    /// Every generator gives every `x` positive mass.
    pub conservative: bool,
    pub convex: bool,
}

impl ProblemShape {
    /// Sizes drawn from {2, 3}, 2 to 4 generators.
    pub fn random<R: Rng>(rng: &mut R, conservative: bool, convex: bool) -> Self {
        Self {
            nx: rng.gen_range(2..=3),
            ny: rng.gen_range(2..=3),
            na: rng.gen_range(2..=3),
            generators: rng.gen_range(2..=4),
            conservative,
            convex,
        }
    }

    pub fn fixed(nx: usize, ny: usize, na: usize) -> Self {
        Self {
            nx,
            ny,
            na,
            generators: 2,
            conservative: false,
            convex: true,
        }
    }
}

pub fn numbered_space(nx: usize, ny: usize, na: usize) -> Arc<ProblemSpace> {
    let labels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
    Arc::new(ProblemSpace::new(labels(nx), labels(ny), labels(na)).expect("valid sizes"))
}

/// A joint distribution. Without `conservative`, a third of the draws put no mass on one `x`.
pub fn random_joint<R: Rng>(
    rng: &mut R,
    nx: usize,
    ny: usize,
    conservative: bool,
) -> JointDistribution {
    let dead = (!conservative && nx > 1 && rng.gen_ratio(1, 3)).then(|| rng.gen_range(0..nx));
    let live = nx - usize::from(dead.is_some());
    let masses = random_distribution(rng, live * ny, conservative);
    let mut it = masses.into_iter();
    let rows = (0..nx)
        .map(|x| {
            if Some(x) == dead {
                vec![zero(); ny]
            } else {
                it.by_ref().take(ny).collect()
            }
        })
        .collect();
    JointDistribution::from_rows(rows).expect("sampled rows form a distribution")
}

pub fn random_credal<R: Rng>(
    rng: &mut R,
    space: &Arc<ProblemSpace>,
    shape: &ProblemShape,
) -> CredalSet {
    let gens = (0..shape.generators)
        .map(|_| random_joint(rng, space.nx(), space.ny(), shape.conservative))
        .collect();
    CredalSet::new(space.clone(), gens, shape.convex).expect("sampled set is valid")
}

/// Losses of the form `k/2` with `0 ≤ k ≤ 8`.
pub fn random_loss<R: Rng>(rng: &mut R, space: &ProblemSpace) -> LossFunction {
    let rows = (0..space.ny())
        .map(|_| {
            (0..space.na())
                .map(|_| rat(rng.gen_range(0..=8), 2))
                .collect()
        })
        .collect();
    LossFunction::new(space, rows).expect("sampled loss matches the space")
}

pub fn random_problem<R: Rng>(rng: &mut R, shape: &ProblemShape) -> DecisionProblem {
    let space = numbered_space(shape.nx, shape.ny, shape.na);
    let credal = random_credal(rng, &space, shape);
    let loss = random_loss(rng, &space);
    DecisionProblem::new(credal, loss).expect("sampled problem is valid")
}

pub fn random_action<R: Rng>(rng: &mut R, na: usize) -> RandomizedAction {
    RandomizedAction::new(random_distribution(rng, na, false))
        .expect("sampled action is a distribution")
}

pub fn random_rule<R: Rng>(rng: &mut R, nx: usize, na: usize) -> DecisionRule {
    DecisionRule::new((0..nx).map(|_| random_action(rng, na)).collect()).expect("nonempty rule")
}

/// A random point of the convex hull of `points`.
pub fn random_mixture<R: Rng>(rng: &mut R, points: &[Vec<Rational>]) -> Vec<Rational> {
    let w = random_distribution(rng, points.len(), false);
    let dim = points[0].len();
    let mut out = vec![zero(); dim];
    for (p, wi) in points.iter().zip(&w) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += wi * v;
        }
    }
    out
}

/// A random partition of `0..n` as canonical block labels.
pub fn random_blocks<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

#[cfg(test)]
mod tests {
    use num_traits::Signed;

    use super::*;
    use crate::credal::is_conservative;
    use crate::rational::is_distribution;

    #[test]
    fn distributions_are_exact_and_bounded() {
        let mut rng = rng_from_seed(7);
        for n in (1..=9).chain([30]) {
            for positive in [false, n <= 24] {
                let d = random_distribution(&mut rng, n, positive);
                assert!(is_distribution(&d));
                assert!(d.iter().all(|v| *v.denom() <= MAX_DENOMINATOR.into()));
                if positive {
                    assert!(d.iter().all(Signed::is_positive));
                }
            }
        }
    }

    #[test]
    fn conservative_sets_are_conservative() {
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let shape = ProblemShape::random(&mut rng, true, true);
            let dp = random_problem(&mut rng, &shape);
            assert!(is_conservative(dp.credal()));
        }
    }

    #[test]
    fn same_seed_same_problem() {
        let shape = ProblemShape::fixed(3, 3, 2);
        let a = random_problem(&mut rng_from_seed(11), &shape);
        let b = random_problem(&mut rng_from_seed(11), &shape);
        assert_eq!(a.credal().generators(), b.credal().generators());
        assert_eq!(a.loss(), b.loss());
    }
}
