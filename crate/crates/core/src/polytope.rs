//! Finitely generated point sets: convex hulls of generators, or the generator list itself.

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Sense};
use crate::rational::{one, zero, Rational};

/// A V-represented set. When `convex` is true the set is the convex hull of
/// `generators`; otherwise it is exactly the finite list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VPolytope {
    dim: usize,
    generators: Vec<Vec<Rational>>,
    convex: bool,
}

impl VPolytope {
    /// Builds a set, dropping duplicate generators (first occurrence wins).
    pub fn new(dim: usize, generators: Vec<Vec<Rational>>, convex: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(
                "dimension must be positive".into(),
            ));
        }
        if generators.is_empty() {
            return Err(Error::Invalid("a set needs at least one generator".into()));
        }
        if let Some(g) = generators.iter().find(|g| g.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "generator of length {} in dimension {dim}",
                g.len()
            )));
        }
        let mut unique: Vec<Vec<Rational>> = Vec::with_capacity(generators.len());
        for g in generators {
            if !unique.contains(&g) {
                unique.push(g);
            }
        }
        Ok(Self {
            dim,
            generators: unique,
            convex,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<Rational>] {
        &self.generators
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn is_singleton(&self) -> bool {
        self.generators.len() == 1
    }
}

/// Whether `point` lies in the convex hull of `generators`, decided by LP feasibility.
pub fn in_convex_hull(point: &[Rational], generators: &[Vec<Rational>]) -> Result<bool> {
    if generators.is_empty() {
        return Ok(false);
    }
    if generators.iter().any(|g| g.as_slice() == point) {
        return Ok(true);
    }
    let k = generators.len();
    let mut lp = LinearProgram::new(vec![zero(); k]);
    for (d, p) in point.iter().enumerate() {
        lp.add_row(
            generators.iter().map(|g| g[d].clone()).collect(),
            Sense::Eq,
            p.clone(),
        );
    }
    lp.add_row(vec![one(); k], Sense::Eq, one());
    Ok(lp_solve(&lp)?.status == LpStatus::Optimal)
}

/// Exact membership of `point` in `s`.
pub fn member(point: &[Rational], s: &VPolytope) -> Result<bool> {
    if point.len() != s.dim {
        return Err(Error::DimensionMismatch(format!(
            "point of length {} against a set of dimension {}",
            point.len(),
            s.dim
        )));
    }
    if s.convex {
        in_convex_hull(point, &s.generators)
    } else {
        Ok(s.generators.iter().any(|g| g.as_slice() == point))
    }
}

/// Whether every point of `a` lies in `b`.
pub fn subset(a: &VPolytope, b: &VPolytope) -> Result<bool> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "comparing sets of dimension {} and {}",
            a.dim, b.dim
        )));
    }
    if a.convex && !b.convex && !a.is_singleton() {
        return Err(Error::Unsupported(
            "a convex set with several points compared against a finite set".into(),
        ));
    }
    for g in &a.generators {
        if !member(g, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn set_equal(a: &VPolytope, b: &VPolytope) -> Result<bool> {
    Ok(subset(a, b)? && subset(b, a)?)
}

/// Minimal generator list for the same point set: extreme points when convex.
pub fn prune(s: &VPolytope) -> Result<VPolytope> {
    if !s.convex {
        return Ok(s.clone());
    }
    let mut kept: Vec<Vec<Rational>> = s.generators.clone();
    let mut i = 0;
    while i < kept.len() {
        if kept.len() > 1 {
            let others: Vec<Vec<Rational>> = kept
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g.clone())
                .collect();
            if in_convex_hull(&kept[i], &others)? {
                kept.remove(i);
                continue;
            }
        }
        i += 1;
    }
    VPolytope::new(s.dim, kept, true)
}
