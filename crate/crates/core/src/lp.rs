//! Exact linear programming: a two-phase simplex method with Bland's rule, dual
//! extraction from the final basis, zero-sum matrix games and vertex enumeration
//! of optimal faces.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{rank, solve, Echelon};
use crate::rational::{dot, one, zero, Rational};

/// Largest number of variables accepted by [`optimal_face_vertices`].
pub const MAX_FACE_DIMENSION: usize = 12;

const MAX_FACE_NODES: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// `minimize objective·x` subject to `rows[i]·x (sense) rhs[i]` and `x[j] ≥ lower[j]`
/// (a `None` lower bound means the variable is free).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub rows: Vec<Vec<Rational>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<Rational>,
    pub lower: Vec<Option<Rational>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`lp_solve`]. `dual` has one entry per row; for a minimisation its sign
/// is `≤ 0` on `≤` rows and `≥ 0` on `≥` rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: Rational,
    pub primal: Vec<Rational>,
    pub dual: Vec<Rational>,
}

impl LinearProgram {
    /// A program with the given objective, no rows and every variable `≥ 0`.
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![Some(zero()); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<Rational>, sense: Sense, rhs: Rational) -> usize {
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn set_free(&mut self, var: usize) {
        self.lower[var] = None;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} lower bounds for {} variables",
                self.lower.len(),
                n
            )));
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows, {} senses, {} right-hand sides",
                self.rows.len(),
                self.senses.len(),
                self.rhs.len()
            )));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} columns, expected {n}",
                r.len()
            )));
        }
        Ok(())
    }

    pub fn value_at(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }

    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let bounds_ok = self
            .lower
            .iter()
            .zip(x)
            .all(|(l, v)| l.as_ref().is_none_or(|l| v >= l));
        bounds_ok
            && self
                .rows
                .iter()
                .zip(&self.senses)
                .zip(&self.rhs)
                .all(|((row, s), b)| satisfies(&dot(row, x), *s, b))
    }

    /// Reduced cost `c_j − A_jᵀ y` of every variable.
    pub fn reduced_costs(&self, y: &[Rational]) -> Vec<Rational> {
        (0..self.num_vars())
            .map(|j| {
                let col: Rational = self
                    .rows
                    .iter()
                    .zip(y)
                    .fold(zero(), |acc, (row, yi)| acc + &row[j] * yi);
                &self.objective[j] - col
            })
            .collect()
    }

    pub fn is_dual_feasible(&self, y: &[Rational]) -> bool {
        if y.len() != self.num_rows() {
            return false;
        }
        let signs_ok = self.senses.iter().zip(y).all(|(s, v)| match s {
            Sense::Le => !v.is_positive(),
            Sense::Ge => !v.is_negative(),
            Sense::Eq => true,
        });
        signs_ok
            && self.reduced_costs(y).iter().zip(&self.lower).all(|(d, l)| {
                if l.is_some() {
                    !d.is_negative()
                } else {
                    d.is_zero()
                }
            })
    }

    /// Dual objective `bᵀy + Σ_j l_j (c_j − A_jᵀ y)` over bounded variables.
    pub fn dual_value(&self, y: &[Rational]) -> Rational {
        let bounds: Rational = self
            .reduced_costs(y)
            .iter()
            .zip(&self.lower)
            .filter_map(|(d, l)| l.as_ref().map(|l| l * d))
            .fold(zero(), |a, b| a + b);
        dot(&self.rhs, y) + bounds
    }
}

fn satisfies(lhs: &Rational, sense: Sense, rhs: &Rational) -> bool {
    match sense {
        Sense::Le => lhs <= rhs,
        Sense::Eq => lhs == rhs,
        Sense::Ge => lhs >= rhs,
    }
}

struct Tableau {
    /// `m` constraint rows followed by the reduced-cost row; the last column is the rhs.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        if !p.is_one() {
            for v in self.t[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[Rational]) {
        let m = self.m();
        let mut obj: Vec<Rational> = cost.to_vec();
        obj.push(zero());
        for i in 0..m {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (o, v) in obj.iter_mut().zip(&self.t[i]) {
                if !v.is_zero() {
                    *o -= cb * v;
                }
            }
        }
        self.t[m] = obj;
    }

    /// Runs Bland's rule over the allowed columns. Returns false when unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        let m = self.m();
        let rhs = self.ncols;
        loop {
            let Some(j) = (0..allowed).find(|&j| self.t[m][j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..m {
                if self.t[i][j].is_positive() {
                    let ratio = &self.t[i][rhs] / &self.t[i][j];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return false,
            }
        }
    }
}

/// Solves `lp` exactly.
#[allow(clippy::needless_range_loop)]
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();

    // Standard-form columns: shifted or split structural variables, then slacks, then artificials.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for l in &lp.lower {
        if l.is_some() {
            var_cols.push((ncols, None));
            ncols += 1;
        } else {
            var_cols.push((ncols, Some(ncols + 1)));
            ncols += 2;
        }
    }
    let n_struct = ncols;
    let mut slack_col: Vec<Option<(usize, Rational)>> = Vec::with_capacity(m);
    for s in &lp.senses {
        match s {
            Sense::Le => {
                slack_col.push(Some((ncols, one())));
                ncols += 1;
            }
            Sense::Ge => {
                slack_col.push(Some((ncols, -one())));
                ncols += 1;
            }
            Sense::Eq => slack_col.push(None),
        }
    }
    let art_start = ncols;

    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rational> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    for i in 0..m {
        let mut row = vec![zero(); n_struct];
        let mut b = lp.rhs[i].clone();
        for j in 0..n {
            let a = &lp.rows[i][j];
            if a.is_zero() {
                continue;
            }
            let (p, neg) = var_cols[j];
            row[p] = a.clone();
            if let Some(q) = neg {
                row[q] = -a.clone();
            }
            if let Some(l) = &lp.lower[j] {
                b -= a * l;
            }
        }
        if b.is_negative() {
            flipped[i] = true;
            b = -b;
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        rows.push(row);
        rhs.push(b);
    }

    let mut init_col = vec![0usize; m];
    let mut n_art = 0;
    for i in 0..m {
        match &slack_col[i] {
            Some((c, sign)) if (sign.is_positive()) != flipped[i] => init_col[i] = *c,
            _ => {
                init_col[i] = art_start + n_art;
                n_art += 1;
            }
        }
    }
    ncols = art_start + n_art;

    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = rows[i].clone();
        row.resize(ncols + 1, zero());
        if let Some((c, sign)) = &slack_col[i] {
            row[*c] = if flipped[i] {
                -sign.clone()
            } else {
                sign.clone()
            };
        }
        if init_col[i] >= art_start {
            row[init_col[i]] = one();
        }
        row[ncols] = rhs[i].clone();
        t.push(row);
    }
    t.push(vec![zero(); ncols + 1]);
    let mut tab = Tableau {
        t,
        basis: init_col.clone(),
        ncols,
    };

    if n_art > 0 {
        let mut cost = vec![zero(); ncols];
        for c in cost.iter_mut().skip(art_start) {
            *c = one();
        }
        tab.set_costs(&cost);
        tab.run(ncols);
        if !tab.t[m][ncols].is_zero() {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: zero(),
                primal: Vec::new(),
                dual: Vec::new(),
            });
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| !tab.t[r][c].is_zero()) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    let mut cost = vec![zero(); ncols];
    for (j, (p, neg)) in var_cols.iter().enumerate() {
        cost[*p] = lp.objective[j].clone();
        if let Some(q) = neg {
            cost[*q] = -lp.objective[j].clone();
        }
    }
    tab.set_costs(&cost);
    if !tab.run(art_start) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: zero(),
            primal: Vec::new(),
            dual: Vec::new(),
        });
    }

    let mut std_x = vec![zero(); ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        std_x[b] = tab.t[i][ncols].clone();
    }
    let primal: Vec<Rational> = (0..n)
        .map(|j| {
            let (p, neg) = var_cols[j];
            match (&lp.lower[j], neg) {
                (Some(l), _) => l + &std_x[p],
                (None, Some(q)) => &std_x[p] - &std_x[q],
                (None, None) => unreachable!(),
            }
        })
        .collect();
    let dual: Vec<Rational> = (0..m)
        .map(|i| {
            let y = -tab.t[m][init_col[i]].clone();
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    let value = lp.value_at(&primal);
    debug_assert!(lp.is_feasible(&primal));
    debug_assert!(lp.is_dual_feasible(&dual));
    debug_assert_eq!(value, lp.dual_value(&dual));
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        dual,
    })
}

/// Solution of a zero-sum matrix game whose entries are the row player's losses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameSolution {
    pub value: Rational,
    pub row_mix: Vec<Rational>,
    pub col_mix: Vec<Rational>,
}

/// The row player's loss-minimising LP for `payoff`: variables `(α, v)`, minimise `v`
/// subject to `Σ_i α_i M[i][j] ≤ v` for every column and `α ∈ Δ`.
pub fn zero_sum_lp(payoff: &[Vec<Rational>]) -> Result<LinearProgram> {
    let rows = payoff.len();
    let cols = payoff.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch("empty payoff matrix".into()));
    }
    if payoff.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged payoff matrix".into()));
    }
    let mut objective = vec![zero(); rows + 1];
    objective[rows] = one();
    let mut lp = LinearProgram::new(objective);
    lp.set_free(rows);
    for j in 0..cols {
        let mut coeffs: Vec<Rational> = payoff.iter().map(|r| r[j].clone()).collect();
        coeffs.push(-one());
        lp.add_row(coeffs, Sense::Le, zero());
    }
    let mut simplex = vec![one(); rows];
    simplex.push(zero());
    lp.add_row(simplex, Sense::Eq, one());
    Ok(lp)
}

/// Value and optimal mixed strategies of the zero-sum game `payoff` (row player minimises).
pub fn zero_sum_value(payoff: &[Vec<Rational>]) -> Result<GameSolution> {
    let lp = zero_sum_lp(payoff)?;
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    let rows = payoff.len();
    let cols = payoff[0].len();
    let row_mix = sol.primal[..rows].to_vec();
    let col_mix: Vec<Rational> = sol.dual[..cols].iter().map(|y| -y.clone()).collect();
    let value = sol.value;
    let row_guarantee = (0..cols)
        .map(|j| (0..rows).fold(zero(), |a, i| a + &row_mix[i] * &payoff[i][j]))
        .max()
        .unwrap();
    let col_guarantee = (0..rows).map(|i| dot(&payoff[i], &col_mix)).min().unwrap();
    if row_guarantee != value || col_guarantee != value {
        return Err(Error::Invalid(
            "zero-sum solution is not a saddle point".into(),
        ));
    }
    Ok(GameSolution {
        value,
        row_mix,
        col_mix,
    })
}

/// Returns the vertices of `{x feasible for lp : objective·x = optimum}`, sorted
/// lexicographically. Active sets are enumerated by brute force, so the program may
/// have at most [`MAX_FACE_DIMENSION`] variables.
pub fn optimal_face_vertices(lp: &LinearProgram, optimum: &Rational) -> Result<Vec<Vec<Rational>>> {
    lp.validate()?;
    let n = lp.num_vars();
    if n > MAX_FACE_DIMENSION {
        return Err(Error::SizeLimit(format!(
            "optimal face enumeration supports at most {MAX_FACE_DIMENSION} variables, got {n}"
        )));
    }
    let mut face = lp.clone();
    face.add_row(lp.objective.clone(), Sense::Eq, optimum.clone());
    let probe = lp_solve(&LinearProgram {
        objective: vec![zero(); n],
        ..face.clone()
    })?;
    if probe.status != LpStatus::Optimal {
        return Ok(Vec::new());
    }
    for j in 0..n {
        for sign in [1i64, -1] {
            let mut objective = vec![zero(); n];
            objective[j] = Rational::from_integer(sign.into());
            let sol = lp_solve(&LinearProgram {
                objective,
                ..face.clone()
            })?;
            if sol.status == LpStatus::Unbounded {
                return Err(Error::UnboundedFace);
            }
        }
    }

    let mut eq_rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    let mut ineq_rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for ((row, s), b) in face.rows.iter().zip(&face.senses).zip(&face.rhs) {
        match s {
            Sense::Eq => eq_rows.push((row.clone(), b.clone())),
            _ => ineq_rows.push((row.clone(), b.clone())),
        }
    }
    for (j, l) in face.lower.iter().enumerate() {
        if let Some(l) = l {
            let mut row = vec![zero(); n];
            row[j] = one();
            ineq_rows.push((row, l.clone()));
        }
    }

    let mut echelon = Echelon::new();
    let mut base: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for (row, b) in &eq_rows {
        if echelon.insert(row) {
            base.push((row.clone(), b.clone()));
        }
    }
    let need = n - echelon.rank();
    let mut found: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut nodes = 0usize;
    let mut chosen: Vec<usize> = Vec::new();
    enumerate_active(
        &ineq_rows,
        0,
        need,
        &echelon,
        &mut chosen,
        &base,
        &face,
        &mut found,
        &mut nodes,
    )?;
    Ok(found.into_iter().collect())
}

#[allow(clippy::too_many_arguments)]
fn enumerate_active(
    ineq: &[(Vec<Rational>, Rational)],
    start: usize,
    need: usize,
    echelon: &Echelon,
    chosen: &mut Vec<usize>,
    base: &[(Vec<Rational>, Rational)],
    face: &LinearProgram,
    found: &mut BTreeSet<Vec<Rational>>,
    nodes: &mut usize,
) -> Result<()> {
    *nodes += 1;
    if *nodes > MAX_FACE_NODES {
        return Err(Error::SizeLimit(
            "too many active-set combinations in optimal face enumeration".into(),
        ));
    }
    if chosen.len() == need {
        let mut a: Vec<Vec<Rational>> = base.iter().map(|(r, _)| r.clone()).collect();
        let mut b: Vec<Rational> = base.iter().map(|(_, v)| v.clone()).collect();
        for &i in chosen.iter() {
            a.push(ineq[i].0.clone());
            b.push(ineq[i].1.clone());
        }
        if let Some(x) = solve(&a, &b) {
            if face.is_feasible(&x) {
                found.insert(x);
            }
        }
        return Ok(());
    }
    let remaining = need - chosen.len();
    for i in start..ineq.len() {
        if ineq.len() - i < remaining {
            break;
        }
        if !echelon.is_independent(&ineq[i].0) {
            continue;
        }
        let mut next = echelon.clone();
        next.insert(&ineq[i].0);
        chosen.push(i);
        enumerate_active(ineq, i + 1, need, &next, chosen, base, face, found, nodes)?;
        chosen.pop();
    }
    Ok(())
}

/// A linear inequality `a·x ≤ b`.
pub type HalfSpace = (Vec<Rational>, Rational);

/// Double-description step: given the vertices of the bounded polytope
/// `{x : eqs, ineqs}`, intersects it with each of `cuts` in turn and returns the
/// vertices of the result, sorted lexicographically.
pub fn cut_vertices(
    eqs: &[Vec<Rational>],
    ineqs: &[HalfSpace],
    vertices: Vec<Vec<Rational>>,
    cuts: &[HalfSpace],
    limit: usize,
) -> Result<Vec<Vec<Rational>>> {
    let mut verts: Vec<Vec<Rational>> = vertices
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let Some(n) = verts.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    let eq_rank = rank(eqs);
    let mut cons: Vec<HalfSpace> = ineqs.to_vec();
    for (a, b) in cuts {
        let slack: Vec<Rational> = verts.iter().map(|v| dot(a, v) - b).collect();
        if slack.iter().all(|s| !s.is_positive()) {
            cons.push((a.clone(), b.clone()));
            continue;
        }
        let tight: Vec<Vec<usize>> = verts
            .iter()
            .map(|v| {
                cons.iter()
                    .enumerate()
                    .filter(|(_, (ca, cb))| dot(ca, v) == *cb)
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();
        let mut next: BTreeSet<Vec<Rational>> = BTreeSet::new();
        for (v, s) in verts.iter().zip(&slack) {
            if !s.is_positive() {
                next.insert(v.clone());
            }
        }
        for (ui, su) in slack.iter().enumerate() {
            if !su.is_negative() {
                continue;
            }
            for (wi, sw) in slack.iter().enumerate() {
                if !sw.is_positive() {
                    continue;
                }
                let common: Vec<usize> = tight[ui]
                    .iter()
                    .filter(|k| tight[wi].binary_search(k).is_ok())
                    .copied()
                    .collect();
                if common.len() + eq_rank + 1 < n {
                    continue;
                }
                let mut rows: Vec<Vec<Rational>> = eqs.to_vec();
                rows.extend(common.iter().map(|&k| cons[k].0.clone()));
                if rank(&rows) != n - 1 {
                    continue;
                }
                let lambda = -su.clone() / (sw - su);
                let p: Vec<Rational> = verts[ui]
                    .iter()
                    .zip(&verts[wi])
                    .map(|(u, w)| u + &lambda * (w - u))
                    .collect();
                next.insert(p);
            }
        }
        cons.push((a.clone(), b.clone()));
        verts = next.into_iter().collect();
        if verts.len() > limit {
            return Err(Error::SizeLimit(format!(
                "more than {limit} vertices during enumeration"
            )));
        }
        if verts.is_empty() {
            break;
        }
    }
    Ok(verts)
}
