//! Dense exact linear algebra used by vertex enumeration.

use num_traits::Zero;

use crate::rational::Rational;

/// Incrementally built row-echelon basis, used to test linear independence.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, row: &[Rational]) -> Vec<Rational> {
        let mut r = row.to_vec();
        for (pivot, basis) in &self.rows {
            if !r[*pivot].is_zero() {
                let f = r[*pivot].clone() / &basis[*pivot];
                for (ri, bi) in r.iter_mut().zip(basis) {
                    if !bi.is_zero() {
                        *ri -= &f * bi;
                    }
                }
            }
        }
        r
    }

    /// Adds `row` if it is independent of the rows already present.
    pub fn insert(&mut self, row: &[Rational]) -> bool {
        let r = self.reduce(row);
        match r.iter().position(|v| !v.is_zero()) {
            Some(p) => {
                self.rows.push((p, r));
                true
            }
            None => false,
        }
    }

    pub fn is_independent(&self, row: &[Rational]) -> bool {
        self.reduce(row).iter().any(|v| !v.is_zero())
    }
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Solves the square system `a x = b`; `None` when singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    if !pv.is_zero() {
                        *v -= &f * pv;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn rank_detects_dependence() {
        let rows = vec![
            vec![int(1), int(2)],
            vec![int(2), int(4)],
            vec![int(0), int(1)],
        ];
        assert_eq!(rank(&rows), 2);
    }

    #[test]
    fn solves_small_system() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let x = solve(&a, &[int(3), int(5)]).unwrap();
        assert_eq!(x, vec![rat(4, 5), rat(7, 5)]);
        assert!(solve(
            &[vec![int(1), int(1)], vec![int(2), int(2)]],
            &[int(1), int(2)]
        )
        .is_none());
    }
}
