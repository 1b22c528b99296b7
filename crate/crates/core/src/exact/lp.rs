//! Dense two-phase simplex with Bland's rule, for exact ordered fields.
//!
//! All variables are nonnegative. Intended for [`Rational`] and
//! [`Real`](super::Real); floating point would need pivot tolerances this
//! code does not apply.
//!
//! [`Rational`]: crate::scalar::Rational

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult<T> {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<T>, value: T },
}

impl<T> LpResult<T> {
    pub fn point(self) -> Option<Vec<T>> {
        match self {
            LpResult::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Row<T> {
    coeffs: Vec<(usize, T)>,
    cmp: Cmp,
    rhs: T,
}

/// A linear program over nonnegative variables.
#[derive(Debug, Clone)]
pub struct Lp<T> {
    n: usize,
    rows: Vec<Row<T>>,
}

impl<T: Scalar> Lp<T> {
    pub fn new(n_vars: usize) -> Self {
        Lp {
            n: n_vars,
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn add_var(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    /// Adds `sum coeffs <cmp> rhs`; repeated indices are summed.
    pub fn constrain(&mut self, coeffs: Vec<(usize, T)>, cmp: Cmp, rhs: T) {
        debug_assert!(coeffs.iter().all(|(k, _)| *k < self.n));
        self.rows.push(Row { coeffs, cmp, rhs });
    }

    pub fn feasible_point(&self) -> Option<Vec<T>> {
        self.maximize(&[]).point()
    }

    /// Maximizes `objective . x`.
    pub fn maximize(&self, objective: &[(usize, T)]) -> LpResult<T> {
        let mut tab = Tableau::build(self);
        let n_art = tab.n_art;
        if n_art > 0 {
            let first_art = tab.cols - n_art;
            let phase1: Vec<T> = (0..tab.cols)
                .map(|j| if j >= first_art { -T::one() } else { T::zero() })
                .collect();
            tab.set_objective(&phase1);
            if !tab.optimize(tab.cols) {
                unreachable!("phase one is bounded");
            }
            if tab.objective_value().lt_zero() {
                return LpResult::Infeasible;
            }
            tab.drive_out_artificials(first_art);
            tab.limit = first_art;
        }
        let mut c = vec![T::zero(); tab.cols];
        for (k, a) in objective {
            c[*k] = c[*k].clone() + a.clone();
        }
        tab.set_objective(&c);
        if !tab.optimize(tab.limit) {
            return LpResult::Unbounded;
        }
        let mut x = vec![T::zero(); self.n];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < self.n {
                x[b] = tab.rhs(r).clone();
            }
        }
        let value = objective
            .iter()
            .fold(T::zero(), |acc, (k, a)| acc + a.clone() * x[*k].clone());
        LpResult::Optimal { x, value }
    }
}

struct Tableau<T> {
    /// Rows of `cols + 1` entries, the last being the right-hand side.
    a: Vec<Vec<T>>,
    /// Reduced costs, last entry minus the objective value.
    z: Vec<T>,
    basis: Vec<usize>,
    cols: usize,
    n_art: usize,
    /// Columns at or beyond this index may not enter.
    limit: usize,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &Lp<T>) -> Self {
        let n = lp.n;
        let n_slack = lp.rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
        // Normalize to nonnegative right-hand sides.
        let rows: Vec<(Vec<T>, Cmp, T)> = lp
            .rows
            .iter()
            .map(|r| {
                let mut dense = vec![T::zero(); n];
                for (k, a) in &r.coeffs {
                    dense[*k] = dense[*k].clone() + a.clone();
                }
                if r.rhs.lt_zero() {
                    let cmp = match r.cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    (dense.into_iter().map(|a| -a).collect(), cmp, -r.rhs.clone())
                } else {
                    (dense, r.cmp, r.rhs.clone())
                }
            })
            .collect();
        let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let cols = n + n_slack + n_art;
        let mut a = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut s, mut t) = (n, n + n_slack);
        for (dense, cmp, rhs) in rows {
            let mut row = dense;
            row.resize(cols + 1, T::zero());
            match cmp {
                Cmp::Le => {
                    row[s] = T::one();
                    basis.push(s);
                    s += 1;
                }
                Cmp::Ge => {
                    row[s] = -T::one();
                    s += 1;
                    row[t] = T::one();
                    basis.push(t);
                    t += 1;
                }
                Cmp::Eq => {
                    row[t] = T::one();
                    basis.push(t);
                    t += 1;
                }
            }
            row[cols] = rhs;
            a.push(row);
        }
        Tableau {
            a,
            z: vec![T::zero(); cols + 1],
            basis,
            cols,
            n_art,
            limit: cols,
        }
    }

    fn rhs(&self, r: usize) -> &T {
        &self.a[r][self.cols]
    }

    fn set_objective(&mut self, c: &[T]) {
        let mut z: Vec<T> = c.iter().cloned().chain([T::zero()]).collect();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (j, zj) in z.iter_mut().enumerate() {
                let arj = &self.a[r][j];
                if !arj.is_zero() {
                    *zj = zj.clone() - cb.clone() * arj.clone();
                }
            }
        }
        self.z = z;
    }

    fn objective_value(&self) -> T {
        -self.z[self.cols].clone()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.a[r][j].clone();
        for e in self.a[r].iter_mut() {
            if !e.is_zero() {
                *e = e.clone() / p.clone();
            }
        }
        let pivot_row = self.a[r].clone();
        let eliminate = |row: &mut Vec<T>| {
            let f = row[j].clone();
            if f.is_zero() {
                return;
            }
            for (e, pe) in row.iter_mut().zip(&pivot_row) {
                if !pe.is_zero() {
                    *e = e.clone() - f.clone() * pe.clone();
                }
            }
        };
        for (i, row) in self.a.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.z);
        self.basis[r] = j;
    }

    /// Bland's rule; returns false when unbounded.
    fn optimize(&mut self, limit: usize) -> bool {
        loop {
            let Some(j) = (0..limit).find(|&j| self.z[j].gt_zero()) else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.a.len() {
                let arj = &self.a[r][j];
                if !arj.gt_zero() {
                    continue;
                }
                let ratio = self.rhs(r).clone() / arj.clone();
                let better = match &best {
                    None => true,
                    Some((br, bv)) => {
                        ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, j);
        }
    }

    fn drive_out_artificials(&mut self, first_art: usize) {
        let mut r = 0;
        while r < self.a.len() {
            if self.basis[r] < first_art {
                r += 1;
                continue;
            }
            match (0..first_art).find(|&j| !self.a[r][j].is_zero()) {
                Some(j) => {
                    self.pivot(r, j);
                    r += 1;
                }
                None => {
                    self.a.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }
}
