//! Exhaustive equilibrium enumeration for tiny markets.
//!
//! Multiplier space is partitioned into cells by
//! - the exact winner set of every good (winners strictly above the rest),
//! - the price setter of every single-winner good (the lowest-index bidder
//!   among those with the second-highest score), and
//! - for every bidder that wins something, whether it sits at the cap
//!   (`spend <= value`) or strictly below it (`spend = value`).
//!
//! Each cell's multiplier region is a system of ratio bounds
//! `alpha_a / alpha_b <= q` (some strict), kept in closed form as a
//! difference-bound matrix over the rationals, which both prunes empty cells
//! and groups bidders whose ratios are pinned into components. Inside a cell
//! prices are linear in the multipliers, so the equilibrium conditions are
//! linear except for the spend on tied goods, `x_ij * alpha_i * v_ij`.
//!
//! - When every tied good belongs to a component whose multipliers are
//!   pinned, the cell is one exact linear program.
//! - Otherwise one free component with scale `t` carries tied goods.
//!   Eliminating shares leaves constraints polynomial in `t` and linear in
//!   at most one other free multiplier; feasibility is constant between
//!   consecutive real roots of a finite set of critical polynomials, so
//!   testing one point per root and per gap is exhaustive. Roots are kept
//!   exact as real algebraic numbers.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iterative::same_equilibrium;
use crate::market::{
    check_equilibrium, run_auctions, Allocation, MarketConfig, MultiplierProfile, PriceVector,
    ValuationMatrix,
};
use crate::scalar::{Rational, Scalar};

use super::lp::{Cmp, Lp, LpResult};
use super::poly::{Poly, RealRoot};
use super::real::Real;

/// Hard size limits of the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct OracleLimits {
    pub max_bidders: usize,
    pub max_goods: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_bidders: 3,
            max_goods: 4,
        }
    }
}

/// Winner set and price setter of one good.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodRole {
    pub winners: Vec<usize>,
    /// Bidder whose score sets a lone winner's price.
    pub second: Option<usize>,
}

/// One equilibrium class: a cell of multiplier space (or a connected piece
/// of it) whose points are equilibria, with an exact witness.
#[derive(Debug, Clone)]
pub struct OracleEquilibrium {
    pub alpha: MultiplierProfile<Real>,
    pub allocation: Allocation<Real>,
    pub prices: PriceVector<Real>,
    pub roles: Vec<GoodRole>,
    pub capped: Vec<bool>,
    /// Per-bidder acquired value at the witness.
    pub values: Vec<f64>,
    pub revenue: f64,
    pub welfare: f64,
    /// All witness numbers are rational.
    pub rational: bool,
    /// For classes on a free tie component: the range of that component's
    /// scale (its lowest-index bidder's multiplier), and that bidder.
    pub scale_span: Option<(usize, f64, f64)>,
    cells: Vec<usize>,
    span: Option<(Real, Real, Real)>,
}

impl OracleEquilibrium {
    pub fn alpha_f64(&self) -> Vec<f64> {
        self.alpha.0.iter().map(Scalar::to_f64_lossy).collect()
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub equilibria: Vec<OracleEquilibrium>,
    /// Structures (winner sets and price setters) with a nonempty region.
    pub structures: usize,
    /// Structure and cap-status combinations examined.
    pub cells: usize,
    v: ValuationMatrix<Rational>,
    cell_data: Vec<Cell>,
}

impl OracleReport {
    /// First equilibrium class containing a point whose per-bidder values
    /// agree with `values` within `rel` (see [`same_equilibrium`]).
    /// `alpha` locates the point inside classes on a free tie component.
    pub fn find_match(&self, alpha: &[f64], values: &[f64], rel: f64) -> Option<usize> {
        self.equilibria
            .iter()
            .position(|e| same_equilibrium(&e.values, values, rel))
            .or_else(|| {
                self.equilibria
                    .iter()
                    .position(|e| self.distance(e, alpha, values).is_some_and(|d| d <= rel))
            })
    }

    /// Smallest relative per-bidder value distance between `values` and the
    /// class.
    pub fn distance(&self, e: &OracleEquilibrium, alpha: &[f64], values: &[f64]) -> Option<f64> {
        if same_equilibrium(&e.values, values, 0.0) {
            return Some(0.0);
        }
        e.cells
            .iter()
            .filter_map(|&c| self.cell_distance(e, c, alpha, values))
            .min_by(f64::total_cmp)
    }

    fn cell_distance(
        &self,
        e: &OracleEquilibrium,
        c: usize,
        alpha: &[f64],
        values: &[f64],
    ) -> Option<f64> {
        let cell = &self.cell_data[c];
        let total: f64 = values.iter().map(|x| x.abs()).sum();
        let target: Vec<Real> = values.iter().map(|x| Real::from_f64_exact(*x)).collect();
        let scale: Vec<Real> = values
            .iter()
            .map(|x| Real::from_f64_exact(x.abs().max(1e-3 * total).max(1e-300)))
            .collect();
        let goal = Goal::Distance(&target, &scale);
        let solve = |fixed: Option<(usize, Real)>| -> Option<f64> {
            match build(&self.v, cell, fixed, goal.clone()).maximize_goal() {
                LpResult::Optimal { value, .. } => Some((-value).to_f64_lossy()),
                _ => None,
            }
        };
        match (&e.span, cell.bilinear) {
            (Some((lo, hi, at)), Some(k)) => {
                let rep = cell.comps[k].rep;
                let mut points = vec![at.clone(), lo.clone(), hi.clone()];
                if let Some(a) = alpha.get(rep).filter(|a| a.is_finite()) {
                    let guess = Real::from_f64_exact(*a);
                    if guess > *lo && guess < *hi {
                        points.insert(0, guess);
                    }
                }
                points
                    .into_iter()
                    .filter_map(|t| solve(Some((k, t))))
                    .min_by(f64::total_cmp)
            }
            _ => solve(None),
        }
    }
}

/// Enumerates every equilibrium class of a tiny market without boosts or
/// reserves.
pub fn enumerate_equilibria_tiny(
    v: &ValuationMatrix<Rational>,
    cfg: &MarketConfig<Rational>,
    limits: &OracleLimits,
) -> Result<OracleReport> {
    let (n, m) = (v.n_bidders(), v.n_goods());
    cfg.validate(n, m)?;
    if n > limits.max_bidders || m > limits.max_goods {
        return Err(Error::Limits(format!(
            "oracle handles at most {} bidders and {} goods, got {n}x{m}",
            limits.max_bidders, limits.max_goods
        )));
    }
    if cfg.has_boosts() || cfg.has_reserves() {
        return Err(Error::Invalid(
            "the oracle does not support boosts or reserves".into(),
        ));
    }
    let cap = cfg.cap.clone();
    let options: Vec<Vec<GoodOption>> = (0..m).map(|j| good_options(v, j)).collect();
    let mut structures = Vec::new();
    let mut roles = Vec::with_capacity(m);
    descend(&options, 0, Dbm::new(n, &cap), &mut roles, &mut structures);

    let mut cells = Vec::new();
    for (roles, dbm) in &structures {
        let winners: Vec<usize> = (0..n)
            .filter(|i| roles.iter().any(|r| r.winners.contains(i)))
            .collect();
        for mask in 0..(1usize << winners.len()) {
            let mut d = dbm.clone();
            let mut capped = vec![false; n];
            let mut ok = true;
            for (b, &i) in winners.iter().enumerate() {
                ok &= if mask >> b & 1 == 1 {
                    capped[i] = true;
                    d.add(0, i + 1, cap.recip(), false)
                } else {
                    d.add(i + 1, 0, cap.clone(), true)
                };
                if !ok {
                    break;
                }
            }
            if ok {
                cells.push(Cell::new(v, roles.clone(), capped, d)?);
            }
        }
    }

    let cell_count = cells.len();
    let found: Vec<Result<Vec<OracleEquilibrium>>> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, cell)| solve_cell(v, cfg, cell, idx))
        .collect();
    let mut equilibria = Vec::new();
    for f in found {
        equilibria.extend(f?);
    }
    let equilibria = merge_cap_faces(v, &cells, equilibria);
    Ok(OracleReport {
        equilibria,
        structures: structures.len(),
        cells: cell_count,
        v: v.clone(),
        cell_data: cells,
    })
}

// ---------------------------------------------------------------------------
// Ratio bounds

#[derive(Debug, Clone, PartialEq)]
struct Bound {
    q: Rational,
    strict: bool,
}

impl Bound {
    fn tighter(&self, other: &Bound) -> bool {
        self.q < other.q || (self.q == other.q && self.strict && !other.strict)
    }

    fn then(&self, other: &Bound) -> Bound {
        Bound {
            q: &self.q * &other.q,
            strict: self.strict || other.strict,
        }
    }
}

/// Closed system of bounds `alpha_a / alpha_b <= u[a][b]`; node 0 is the
/// constant 1, node `i + 1` is bidder `i`.
#[derive(Debug, Clone)]
struct Dbm {
    u: Vec<Vec<Bound>>,
}

impl Dbm {
    fn new(n: usize, cap: &Rational) -> Self {
        let one = Bound {
            q: Rational::one(),
            strict: false,
        };
        let capb = Bound {
            q: cap.clone(),
            strict: false,
        };
        let u = (0..=n)
            .map(|a| {
                (0..=n)
                    .map(|b| match (a, b) {
                        _ if a == b => one.clone(),
                        (0, _) => one.clone(),
                        _ => capb.clone(),
                    })
                    .collect()
            })
            .collect();
        Dbm { u }
    }

    /// Adds `alpha_a / alpha_b <= q` (`<` when strict); false if empty.
    fn add(&mut self, a: usize, b: usize, q: Rational, strict: bool) -> bool {
        let e = Bound { q, strict };
        if !e.tighter(&self.u[a][b]) {
            return true;
        }
        let k = self.u.len();
        let into_a: Vec<Bound> = (0..k).map(|c| self.u[c][a].clone()).collect();
        let from_b: Vec<Bound> = self.u[b].clone();
        for c in 0..k {
            let ca = into_a[c].then(&e);
            for d in 0..k {
                let cand = ca.then(&from_b[d]);
                if cand.tighter(&self.u[c][d]) {
                    self.u[c][d] = cand;
                }
            }
        }
        let unit = Bound {
            q: Rational::one(),
            strict: false,
        };
        (0..k).all(|c| !self.u[c][c].tighter(&unit))
    }

    fn fixed(&self, a: usize, b: usize) -> bool {
        let (x, y) = (&self.u[a][b], &self.u[b][a]);
        !x.strict && !y.strict && (&x.q * &y.q).is_one()
    }
}

// ---------------------------------------------------------------------------
// Structures

#[derive(Debug, Clone)]
struct GoodOption {
    role: GoodRole,
    /// `(a, b, q, strict)`: `alpha_a / alpha_b <= q` on nodes.
    edges: Vec<(usize, usize, Rational, bool)>,
}

/// Edge for `alpha_a v_a <= alpha_b v_b` (strict when asked).
fn below(a: usize, va: &Rational, b: usize, vb: &Rational, strict: bool) -> (usize, usize, Rational, bool) {
    (a + 1, b + 1, vb / va, strict)
}

fn good_options(v: &ValuationMatrix<Rational>, j: usize) -> Vec<GoodOption> {
    let p = v.good(j);
    let q = p.len();
    let mut out = Vec::new();
    for mask in 1usize..(1 << q) {
        let win: Vec<usize> = (0..q).filter(|k| mask >> k & 1 == 1).collect();
        let lose: Vec<usize> = (0..q).filter(|k| mask >> k & 1 == 0).collect();
        let mut edges = Vec::new();
        let (w0, v0) = (p[win[0]].0, &p[win[0]].1);
        for &k in &win[1..] {
            let (i, vi) = (p[k].0, &p[k].1);
            edges.push(below(w0, v0, i, vi, false));
            edges.push(below(i, vi, w0, v0, false));
        }
        for &k in &lose {
            edges.push(below(p[k].0, &p[k].1, w0, v0, true));
        }
        let winners: Vec<usize> = win.iter().map(|&k| p[k].0).collect();
        if win.len() > 1 || lose.is_empty() {
            out.push(GoodOption {
                role: GoodRole {
                    winners,
                    second: None,
                },
                edges,
            });
            continue;
        }
        for &s in &lose {
            let mut e = edges.clone();
            let (si, sv) = (p[s].0, &p[s].1);
            for &l in &lose {
                if l != s {
                    e.push(below(p[l].0, &p[l].1, si, sv, p[l].0 < si));
                }
            }
            out.push(GoodOption {
                role: GoodRole {
                    winners: winners.clone(),
                    second: Some(si),
                },
                edges: e,
            });
        }
    }
    out
}

fn descend(
    options: &[Vec<GoodOption>],
    j: usize,
    dbm: Dbm,
    roles: &mut Vec<GoodRole>,
    out: &mut Vec<(Vec<GoodRole>, Dbm)>,
) {
    if j == options.len() {
        out.push((roles.clone(), dbm));
        return;
    }
    for opt in &options[j] {
        let mut d = dbm.clone();
        if opt
            .edges
            .iter()
            .all(|(a, b, q, s)| d.add(*a, *b, q.clone(), *s))
        {
            roles.push(opt.role.clone());
            descend(options, j + 1, d, roles, out);
            roles.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Cells

#[derive(Debug, Clone)]
enum Mult {
    Pinned(Rational),
    Free { comp: usize, ratio: Rational },
}

#[derive(Debug, Clone)]
struct Comp {
    rep: usize,
    members: Vec<usize>,
    lo: Bound,
    hi: Bound,
    tied: bool,
}

#[derive(Debug, Clone)]
struct Cell {
    roles: Vec<GoodRole>,
    capped: Vec<bool>,
    /// Capped bidders whose surplus is nevertheless held at zero.
    tight: Vec<bool>,
    winner: Vec<bool>,
    dbm: Dbm,
    mult: Vec<Mult>,
    comps: Vec<Comp>,
    /// The free component carrying tied goods, if any.
    bilinear: Option<usize>,
}

impl Cell {
    fn new(
        v: &ValuationMatrix<Rational>,
        roles: Vec<GoodRole>,
        capped: Vec<bool>,
        dbm: Dbm,
    ) -> Result<Self> {
        let n = v.n_bidders();
        let winner: Vec<bool> = (0..n)
            .map(|i| roles.iter().any(|r| r.winners.contains(&i)))
            .collect();
        let mut mult = Vec::with_capacity(n);
        let mut comps: Vec<Comp> = Vec::new();
        for i in 0..n {
            if dbm.fixed(i + 1, 0) {
                mult.push(Mult::Pinned(dbm.u[i + 1][0].q.clone()));
                continue;
            }
            match comps.iter().position(|c| dbm.fixed(i + 1, c.rep + 1)) {
                Some(k) => {
                    comps[k].members.push(i);
                    let ratio = dbm.u[i + 1][comps[k].rep + 1].q.clone();
                    mult.push(Mult::Free { comp: k, ratio });
                }
                None => {
                    let inv = &dbm.u[0][i + 1];
                    comps.push(Comp {
                        rep: i,
                        members: vec![i],
                        lo: Bound {
                            q: inv.q.recip(),
                            strict: inv.strict,
                        },
                        hi: dbm.u[i + 1][0].clone(),
                        tied: false,
                    });
                    mult.push(Mult::Free {
                        comp: comps.len() - 1,
                        ratio: Rational::one(),
                    });
                }
            }
        }
        for r in roles.iter().filter(|r| r.winners.len() > 1) {
            if let Mult::Free { comp, .. } = &mult[r.winners[0]] {
                comps[*comp].tied = true;
            }
        }
        let tied: Vec<usize> = (0..comps.len()).filter(|&k| comps[k].tied).collect();
        if tied.len() > 1 {
            return Err(Error::Limits(
                "more than one free tie component in a cell".into(),
            ));
        }
        Ok(Cell {
            roles,
            tight: vec![false; capped.len()],
            capped,
            winner,
            dbm,
            mult,
            comps,
            bilinear: tied.first().copied(),
        })
    }

    /// Goods won alone by `i`.
    fn sole_goods(&self, i: usize) -> impl Iterator<Item = (usize, &GoodRole)> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.winners.len() == 1 && r.winners[0] == i)
    }

    fn tied_goods(&self) -> impl Iterator<Item = (usize, &GoodRole)> + '_ {
        self.roles.iter().enumerate().filter(|(_, r)| r.winners.len() > 1)
    }
}

// ---------------------------------------------------------------------------
// Linear programs of a cell

/// Exact fields the cell programs run over.
pub(crate) trait ExactField: Scalar + From<Rational> {
    fn into_real(self) -> Real;
}

impl ExactField for Rational {
    fn into_real(self) -> Real {
        Real::Rat(self)
    }
}

impl ExactField for Real {
    fn into_real(self) -> Real {
        self
    }
}

#[derive(Debug, Clone)]
struct LinExpr<T> {
    c: T,
    terms: Vec<(usize, T)>,
}

impl<T: ExactField> LinExpr<T> {
    fn constant(c: T) -> Self {
        LinExpr {
            c,
            terms: Vec::new(),
        }
    }

    fn add_scaled(&mut self, other: &LinExpr<T>, k: &T) {
        self.c = self.c.clone() + other.c.clone() * k.clone();
        self.terms
            .extend(other.terms.iter().map(|(v, a)| (*v, a.clone() * k.clone())));
    }

    fn eval(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(self.c.clone(), |acc, (v, a)| acc + a.clone() * x[*v].clone())
    }
}

#[derive(Clone)]
enum Goal<'a, T> {
    /// Maximize the slack of the strict inequalities.
    Strictness,
    /// Keep that slack above a floor; maximize the smallest tied share.
    Witness(T),
    /// Minimize the worst relative value gap to targets (closure of the cell).
    Distance(&'a [T], &'a [T]),
    /// Feasibility of the closure, with tie spend relaxed when bilinear.
    Relaxed,
}

struct Model<T> {
    lp: Lp<T>,
    alpha: Vec<LinExpr<T>>,
    shares: Vec<(usize, usize, usize)>,
    eps: usize,
    objective: Vec<(usize, T)>,
}

impl<T: ExactField> Model<T> {
    fn maximize_goal(&self) -> LpResult<T> {
        self.lp.maximize(&self.objective)
    }
}

fn q<T: ExactField>(r: &Rational) -> T {
    T::from(r.clone())
}

/// Builds a cell's program; `fixed` pins one free component's scale.
fn build<T: ExactField>(
    v: &ValuationMatrix<Rational>,
    cell: &Cell,
    fixed: Option<(usize, T)>,
    goal: Goal<'_, T>,
) -> Model<T> {
    let n = v.n_bidders();
    let mut lp = Lp::<T>::new(0);
    let scale_of: Vec<LinExpr<T>> = (0..cell.comps.len())
        .map(|k| match &fixed {
            Some((f, t)) if *f == k => LinExpr::constant(t.clone()),
            _ => LinExpr {
                c: T::zero(),
                terms: vec![(lp.add_var(), T::one())],
            },
        })
        .collect();
    let alpha: Vec<LinExpr<T>> = (0..n)
        .map(|i| match &cell.mult[i] {
            Mult::Pinned(a) => LinExpr::constant(q(a)),
            Mult::Free { comp, ratio } => {
                let mut e = LinExpr::constant(T::zero());
                e.add_scaled(&scale_of[*comp], &q(ratio));
                e
            }
        })
        .collect();
    let mut shares = Vec::new();
    for (j, r) in cell.tied_goods() {
        for &i in &r.winners {
            shares.push((j, i, lp.add_var()));
        }
    }
    let eps = lp.add_var();
    let strict_mode = !matches!(goal, Goal::Distance(..) | Goal::Relaxed);

    // Region: bounds between the unit node and component representatives.
    let mut nodes: Vec<(usize, LinExpr<T>)> = vec![(0, LinExpr::constant(T::one()))];
    for (k, c) in cell.comps.iter().enumerate() {
        nodes.push((c.rep + 1, scale_of[k].clone()));
    }
    for (a, ea) in &nodes {
        for (b, eb) in &nodes {
            if a == b {
                continue;
            }
            let bound = &cell.dbm.u[*a][*b];
            let mut e = ea.clone();
            e.add_scaled(eb, &-q::<T>(&bound.q));
            push_le(&mut lp, &e, bound.strict && strict_mode, eps);
        }
    }
    // Tied goods are fully allocated.
    for (j, _) in cell.tied_goods() {
        let row = shares
            .iter()
            .filter(|s| s.0 == j)
            .map(|s| (s.2, T::one()))
            .collect();
        lp.constrain(row, Cmp::Eq, T::one());
    }
    // ROI.
    let mut value: Vec<LinExpr<T>> = (0..n).map(|_| LinExpr::constant(T::zero())).collect();
    for i in (0..n).filter(|&i| cell.winner[i]) {
        let mut roi = LinExpr::constant(T::zero());
        for (j, r) in cell.sole_goods(i) {
            let vij: T = q(&v.value(i, j));
            roi.c = roi.c.clone() + vij.clone();
            value[i].c = value[i].c.clone() + vij;
            if let Some(s) = r.second {
                roi.add_scaled(&alpha[s], &-q::<T>(&v.value(s, j)));
            }
        }
        for &(j, b, var) in shares.iter().filter(|s| s.1 == i) {
            let vij: T = q(&v.value(b, j));
            match alpha[i].terms.as_slice() {
                [] => {
                    let coef = vij.clone() - alpha[i].c.clone() * vij.clone();
                    roi.terms.push((var, coef));
                }
                [(scale, r)] => {
                    // McCormick envelope of `y = scale * x` over the
                    // component's closed range: a relaxation, used only
                    // to discard empty cells.
                    let Mult::Free { comp, .. } = &cell.mult[i] else {
                        unreachable!("free multiplier")
                    };
                    let (lo, hi): (T, T) = (q(&cell.comps[*comp].lo.q), q(&cell.comps[*comp].hi.q));
                    let y = lp.add_var();
                    let one = T::one();
                    lp.constrain(vec![(y, one.clone()), (var, -lo.clone())], Cmp::Ge, T::zero());
                    lp.constrain(vec![(y, one.clone()), (var, -hi.clone())], Cmp::Le, T::zero());
                    lp.constrain(
                        vec![(y, one.clone()), (var, -hi.clone()), (*scale, -one.clone())],
                        Cmp::Ge,
                        -hi,
                    );
                    lp.constrain(
                        vec![(y, one.clone()), (var, -lo.clone()), (*scale, -one)],
                        Cmp::Le,
                        -lo,
                    );
                    roi.terms.push((var, vij.clone()));
                    roi.terms.push((y, -(vij.clone() * r.clone())));
                }
                _ => unreachable!("multiplier is linear in one scale"),
            }
            value[i].terms.push((var, vij));
        }
        let cmp = if cell.capped[i] && !cell.tight[i] { Cmp::Ge } else { Cmp::Eq };
        lp.constrain(roi.terms.clone(), cmp, -roi.c.clone());
    }

    let objective = match goal {
        Goal::Strictness => {
            lp.constrain(vec![(eps, T::one())], Cmp::Le, T::one());
            vec![(eps, T::one())]
        }
        Goal::Witness(floor) => {
            lp.constrain(vec![(eps, T::one())], Cmp::Ge, floor);
            lp.constrain(vec![(eps, T::one())], Cmp::Le, T::one());
            if shares.is_empty() {
                vec![(eps, T::one())]
            } else {
                let t = lp.add_var();
                lp.constrain(vec![(t, T::one())], Cmp::Le, T::one());
                for s in &shares {
                    lp.constrain(vec![(s.2, T::one()), (t, -T::one())], Cmp::Ge, T::zero());
                }
                vec![(t, T::one())]
            }
        }
        Goal::Relaxed => Vec::new(),
        Goal::Distance(target, scale) => {
            lp.constrain(vec![(eps, T::one())], Cmp::Le, T::zero());
            let t = lp.add_var();
            for i in 0..n {
                let mut row = value[i].terms.clone();
                row.push((t, -scale[i].clone()));
                lp.constrain(row, Cmp::Le, target[i].clone() - value[i].c.clone());
                let mut row: Vec<(usize, T)> =
                    value[i].terms.iter().map(|(k, a)| (*k, -a.clone())).collect();
                row.push((t, -scale[i].clone()));
                lp.constrain(row, Cmp::Le, value[i].c.clone() - target[i].clone());
            }
            vec![(t, -T::one())]
        }
    };
    Model {
        lp,
        alpha,
        shares,
        eps,
        objective,
    }
}

/// `e <= 0`, or `e + eps <= 0` when strict.
fn push_le<T: ExactField>(lp: &mut Lp<T>, e: &LinExpr<T>, strict: bool, eps: usize) {
    let mut row = e.terms.clone();
    if strict {
        row.push((eps, T::one()));
    }
    lp.constrain(row, Cmp::Le, -e.c.clone());
}

/// Largest slack of the strict inequalities, when positive.
fn strict_slack<T: ExactField>(
    v: &ValuationMatrix<Rational>,
    cell: &Cell,
    fixed: Option<(usize, T)>,
) -> Option<T> {
    match build(v, cell, fixed, Goal::Strictness).maximize_goal() {
        LpResult::Optimal { value, .. } if value.gt_zero() => Some(value),
        _ => None,
    }
}

struct Witness {
    alpha: Vec<Real>,
    shares: Vec<(usize, usize, Real)>,
}

fn witness<T: ExactField>(
    v: &ValuationMatrix<Rational>,
    cell: &Cell,
    fixed: Option<(usize, T)>,
    slack: T,
) -> Option<Witness> {
    let floor = slack / T::from(Rational::from_integer(2.into()));
    let model = build(v, cell, fixed, Goal::Witness(floor));
    let x = model.maximize_goal().point()?;
    let _ = model.eps;
    Some(Witness {
        alpha: model.alpha.iter().map(|e| e.eval(&x).into_real()).collect(),
        shares: model
            .shares
            .iter()
            .map(|&(j, i, k)| (j, i, x[k].clone().into_real()))
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Solving cells

fn solve_cell(
    v: &ValuationMatrix<Rational>,
    cfg: &MarketConfig<Rational>,
    cell: &Cell,
    idx: usize,
) -> Result<Vec<OracleEquilibrium>> {
    match cell.bilinear {
        None => {
            let Some(slack) = strict_slack::<Rational>(v, cell, None) else {
                return Ok(Vec::new());
            };
            let w = witness::<Rational>(v, cell, None, slack)
                .ok_or_else(|| Error::Numerical("witness program failed".into()))?;
            Ok(vec![finish(v, cfg, cell, idx, w, None)?])
        }
        Some(k) => {
            let relaxed = build::<Rational>(v, cell, None, Goal::Relaxed);
            if relaxed.maximize_goal().point().is_none() {
                return Ok(Vec::new());
            }
            solve_bilinear(v, cfg, cell, idx, k)
        }
    }
}

fn finish(
    v: &ValuationMatrix<Rational>,
    cfg: &MarketConfig<Rational>,
    cell: &Cell,
    idx: usize,
    w: Witness,
    span: Option<(Real, Real, Real)>,
) -> Result<OracleEquilibrium> {
    let (n, m) = (v.n_bidders(), v.n_goods());
    let vr = v.map(|x| Real::Rat(x.clone()));
    let cr = cfg.map(|x| Real::Rat(x.clone()));
    let mut entries: Vec<(usize, usize, Real)> = Vec::new();
    for (j, r) in cell.roles.iter().enumerate() {
        if r.winners.len() == 1 {
            entries.push((r.winners[0], j, Real::one()));
        }
    }
    entries.extend(
        w.shares
            .into_iter()
            .filter(|s| s.2.gt_zero())
            .map(|(j, i, x)| (i, j, x)),
    );
    let alpha = MultiplierProfile(w.alpha);
    let allocation = Allocation::from_entries(n, m, entries)?;
    let outcome = run_auctions(&vr, &alpha, &cr)?;
    for (j, r) in cell.roles.iter().enumerate() {
        if outcome.goods[j].winners != r.winners {
            return Err(Error::Numerical(format!(
                "witness winners {:?} differ from cell winners {:?} on good {j}",
                outcome.goods[j].winners, r.winners
            )));
        }
    }
    let cert = check_equilibrium(&vr, &alpha, &allocation, &cr, &Real::zero())?;
    if !cert.pass {
        return Err(Error::Numerical(format!(
            "oracle witness fails {:?}",
            cert.failing_names()
        )));
    }
    let prices = outcome.prices;
    let mut values = vec![0.0; n];
    let mut welfare = 0.0;
    let mut revenue = 0.0;
    for (i, j, x) in allocation.entries() {
        let val = (x.clone() * vr.value(i, j)).to_f64_lossy();
        values[i] += val;
        welfare += val;
        revenue += (x.clone() * prices.get(j).clone()).to_f64_lossy();
    }
    let rational = alpha.0.iter().all(Real::is_rational);
    let scale_span = match (&span, cell.bilinear) {
        (Some((lo, hi, _)), Some(k)) => Some((
            cell.comps[k].rep,
            lo.to_f64_lossy(),
            hi.to_f64_lossy(),
        )),
        _ => None,
    };
    Ok(OracleEquilibrium {
        alpha,
        allocation,
        prices,
        roles: cell.roles.clone(),
        capped: cell.capped.clone(),
        values,
        revenue,
        welfare,
        rational,
        scale_span,
        cells: vec![idx],
        span,
    })
}

/// Joins linear-cell classes with equal winner structure whose cap sets
/// differ in one bidder `i` when they touch: the class with `i` at the cap
/// has a point where `i`'s surplus is zero. Both cells are then convex
/// pieces of one convex set, hence connected.
fn merge_cap_faces(
    v: &ValuationMatrix<Rational>,
    cells: &[Cell],
    eqs: Vec<OracleEquilibrium>,
) -> Vec<OracleEquilibrium> {
    let k = eqs.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..k {
        for b in 0..k {
            let (ea, eb) = (&eqs[a], &eqs[b]);
            if ea.span.is_some() || eb.span.is_some() || ea.roles != eb.roles {
                continue;
            }
            let extra: Vec<usize> = (0..ea.capped.len())
                .filter(|&i| ea.capped[i] != eb.capped[i])
                .collect();
            if extra.len() != 1 || !eb.capped[extra[0]] {
                continue;
            }
            let mut face = cells[eb.cells[0]].clone();
            face.tight[extra[0]] = true;
            if strict_slack::<Rational>(v, &face, None).is_some() {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[rb] = ra;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for x in 0..k {
        let r = root(&mut parent, x);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(x);
    }
    let mut eqs: Vec<Option<OracleEquilibrium>> = eqs.into_iter().map(Some).collect();
    groups
        .into_iter()
        .map(|g| {
            let rep = *g
                .iter()
                .min_by_key(|&&x| eqs[x].as_ref().map_or(0, |e| e.capped.iter().filter(|c| **c).count()))
                .expect("nonempty group");
            let cells: Vec<usize> = g
                .iter()
                .flat_map(|&x| eqs[x].as_ref().expect("unmoved").cells.clone())
                .collect();
            let mut e = eqs[rep].take().expect("unmoved");
            e.cells = cells;
            e
        })
        .collect()
}

/// `A(t) + B(t) mu <cmp> 0` with `cmp` one of `<=`, `<`, `=`.
#[derive(Debug, Clone)]
struct PolyRow {
    a: Poly,
    b: Poly,
}

/// Multiplier of bidder `i` as `A(t) + b mu`.
fn alpha_poly(cell: &Cell, k: usize, mu_comp: Option<usize>, i: usize) -> (Poly, Rational) {
    match &cell.mult[i] {
        Mult::Pinned(a) => (Poly::constant(a.clone()), Rational::zero()),
        Mult::Free { comp, ratio } if *comp == k => {
            (Poly::linear(Rational::zero(), ratio.clone()), Rational::zero())
        }
        Mult::Free { comp, ratio } => {
            debug_assert_eq!(Some(*comp), mu_comp);
            (Poly::zero(), ratio.clone())
        }
    }
}

/// Surplus of `i` on the goods it wins alone, as `A(t) + b mu`.
fn sole_surplus(
    v: &ValuationMatrix<Rational>,
    cell: &Cell,
    k: usize,
    mu_comp: Option<usize>,
    i: usize,
) -> (Poly, Rational) {
    let mut a = Poly::zero();
    let mut b = Rational::zero();
    for (j, r) in cell.sole_goods(i) {
        a = &a + &Poly::constant(v.value(i, j));
        if let Some(s) = r.second {
            let (sa, sb) = alpha_poly(cell, k, mu_comp, s);
            let vs = v.value(s, j);
            a = &a - &sa.scale(&vs);
            b -= sb * vs;
        }
    }
    (a, b)
}

/// Linear rows over `vars`, `coeffs . z <= rhs` or `= rhs`.
#[derive(Debug, Clone, PartialEq)]
struct FmRow {
    a: Vec<Rational>,
    rhs: Rational,
    eq: bool,
}

impl FmRow {
    fn normalized(mut self) -> Option<FmRow> {
        let Some(lead) = self.a.iter().find(|x| !x.is_zero()).cloned() else {
            let ok = if self.eq {
                self.rhs.is_zero()
            } else {
                !self.rhs.is_negative()
            };
            // An infeasible constant row cannot arise from a nonempty polytope.
            debug_assert!(ok);
            return None;
        };
        let s = if self.eq { lead.recip() } else { lead.abs().recip() };
        for x in self.a.iter_mut() {
            *x = &*x * &s;
        }
        self.rhs = &self.rhs * &s;
        Some(self)
    }
}

/// Projects out variable `k`.
fn fm_eliminate(rows: Vec<FmRow>, k: usize) -> Vec<FmRow> {
    let combine = |p: &FmRow, cp: &Rational, r: &FmRow, cr: &Rational| FmRow {
        a: p.a.iter().zip(&r.a).map(|(x, y)| x * cp + y * cr).collect(),
        rhs: &p.rhs * cp + &r.rhs * cr,
        eq: p.eq && r.eq,
    };
    let mut out = Vec::new();
    if let Some(pos) = rows.iter().position(|r| r.eq && !r.a[k].is_zero()) {
        let pivot = rows[pos].clone();
        for (idx, r) in rows.into_iter().enumerate() {
            if idx == pos {
                continue;
            }
            if r.a[k].is_zero() {
                out.push(r);
            } else {
                let f = -(&r.a[k] / &pivot.a[k]);
                let mut c = combine(&r, &Rational::one(), &pivot, &f);
                c.eq = r.eq;
                out.push(c);
            }
        }
    } else {
        let (mut up, mut down) = (Vec::new(), Vec::new());
        for r in rows {
            if r.a[k].is_positive() {
                up.push(r);
            } else if r.a[k].is_negative() {
                down.push(r);
            } else {
                out.push(r);
            }
        }
        for p in &up {
            for d in &down {
                out.push(combine(p, &-d.a[k].clone(), d, &p.a[k]));
            }
        }
    }
    let mut dedup: Vec<FmRow> = Vec::new();
    for r in out.into_iter().filter_map(FmRow::normalized) {
        if !dedup.contains(&r) {
            dedup.push(r);
        }
    }
    dedup
}

/// A point or an open gap of the scale axis.
struct Piece {
    at: Real,
    lo: Real,
    hi: Real,
    gap: bool,
}

fn solve_bilinear(
    v: &ValuationMatrix<Rational>,
    cfg: &MarketConfig<Rational>,
    cell: &Cell,
    idx: usize,
    k: usize,
) -> Result<Vec<OracleEquilibrium>> {
    let n = v.n_bidders();
    let comp = &cell.comps[k];
    let others: Vec<usize> = (0..cell.comps.len()).filter(|&c| c != k).collect();
    if others.len() > 1 {
        return Err(Error::Limits(
            "tie component alongside more than one other free component".into(),
        ));
    }
    let mu_comp = others.first().copied();
    if cell
        .tied_goods()
        .any(|(_, r)| !matches!(cell.mult[r.winners[0]], Mult::Free { comp, .. } if comp == k))
    {
        return Err(Error::Limits("ties outside the free tie component".into()));
    }

    let mut rows: Vec<PolyRow> = Vec::new();
    // Region bounds involving the other free component.
    if let Some(mc) = mu_comp {
        let c = comp.rep + 1;
        let o = cell.comps[mc].rep + 1;
        let t = Poly::linear(Rational::zero(), Rational::one());
        let one = Poly::constant(Rational::one());
        let u = &cell.dbm.u;
        rows.push(PolyRow {
            a: t.clone(),
            b: Poly::constant(-u[c][o].q.clone()),
        });
        rows.push(PolyRow {
            a: -t.scale(&u[o][c].q),
            b: one.clone(),
        });
        rows.push(PolyRow {
            a: Poly::constant(-u[o][0].q.clone()),
            b: one.clone(),
        });
        rows.push(PolyRow {
            a: one,
            b: Poly::constant(-u[0][o].q.clone()),
        });
    }
    // Members of the tie component that take part in tied goods.
    let tied_members: Vec<usize> = comp
        .members
        .iter()
        .copied()
        .filter(|i| cell.tied_goods().any(|(_, r)| r.winners.contains(i)))
        .collect();
    let ratio = |i: usize| match &cell.mult[i] {
        Mult::Free { ratio, .. } => ratio.clone(),
        Mult::Pinned(_) => unreachable!("member of a free component"),
    };
    // Every other winner: binding (or, at the cap, nonnegative) surplus.
    for i in (0..n).filter(|&i| cell.winner[i] && !tied_members.contains(&i)) {
        let (a, b) = sole_surplus(v, cell, k, mu_comp, i);
        rows.push(PolyRow {
            a,
            b: Poly::constant(b),
        });
    }
    // Achievable tied values X_i, then X_i = surplus_i / (r_i t - 1).
    let shares: Vec<(usize, usize)> = cell
        .tied_goods()
        .flat_map(|(j, r)| r.winners.iter().map(move |&i| (j, i)))
        .collect();
    let nx = shares.len();
    let width = nx + tied_members.len();
    let mut fm = Vec::new();
    for (j, _) in cell.tied_goods() {
        let mut a = vec![Rational::zero(); width];
        for (s, (g, _)) in shares.iter().enumerate() {
            if *g == j {
                a[s] = Rational::one();
            }
        }
        fm.push(FmRow {
            a,
            rhs: Rational::one(),
            eq: true,
        });
    }
    for s in 0..nx {
        let mut a = vec![Rational::zero(); width];
        a[s] = -Rational::one();
        fm.push(FmRow {
            a,
            rhs: Rational::zero(),
            eq: false,
        });
    }
    for (t, &i) in tied_members.iter().enumerate() {
        let mut a = vec![Rational::zero(); width];
        a[nx + t] = Rational::one();
        for (s, (j, b)) in shares.iter().enumerate() {
            if *b == i {
                a[s] = -v.value(i, *j);
            }
        }
        fm.push(FmRow {
            a,
            rhs: Rational::zero(),
            eq: true,
        });
    }
    for s in 0..nx {
        fm = fm_eliminate(fm, s);
    }
    let lin: Vec<Poly> = tied_members
        .iter()
        .map(|&i| Poly::linear(-Rational::one(), ratio(i)))
        .collect();
    let surplus: Vec<(Poly, Rational)> = tied_members
        .iter()
        .map(|&i| sole_surplus(v, cell, k, mu_comp, i))
        .collect();
    let denom = lin
        .iter()
        .fold(Poly::constant(Rational::one()), |acc, l| &acc * l);
    for r in &fm {
        let mut a = -denom.scale(&r.rhs);
        let mut b = Poly::zero();
        for (t, (sa, sb)) in surplus.iter().enumerate() {
            let h = &r.a[nx + t];
            if h.is_zero() {
                continue;
            }
            let rest = lin
                .iter()
                .enumerate()
                .filter(|(u, _)| *u != t)
                .fold(Poly::constant(h.clone()), |acc, (_, l)| &acc * l);
            a = &a + &(&rest * sa);
            b = &b + &rest.scale(sb);
        }
        rows.push(PolyRow { a, b });
    }

    // Critical polynomials.
    let mut critical: Vec<Poly> = lin.clone();
    for r in &rows {
        critical.push(r.a.clone());
        critical.push(r.b.clone());
    }
    let with_mu: Vec<&PolyRow> = rows.iter().filter(|r| !r.b.is_zero()).collect();
    for (x, p) in with_mu.iter().enumerate() {
        for r in &with_mu[x + 1..] {
            critical.push(&(&p.a * &r.b) - &(&r.a * &p.b));
        }
    }
    let (lo, hi) = (&comp.lo, &comp.hi);
    let mut roots: Vec<RealRoot> = Vec::new();
    for p in critical.iter().filter(|p| !p.is_constant()) {
        for mut r in p.roots_in(&lo.q, &hi.q) {
            let mut dup = false;
            let mut pos = roots.len();
            for (x, e) in roots.iter_mut().enumerate() {
                match r.compare(e) {
                    Ordering::Equal => {
                        dup = true;
                        break;
                    }
                    Ordering::Less => {
                        pos = x;
                        break;
                    }
                    Ordering::Greater => {}
                }
            }
            if !dup {
                roots.insert(pos, r);
            }
        }
    }

    // Pieces of the scale axis in increasing order.
    let mut marks: Vec<RealRoot> = vec![RealRoot::exact(lo.q.clone())];
    marks.extend(roots);
    marks.push(RealRoot::exact(hi.q.clone()));
    let reals: Vec<Real> = marks.iter().cloned().map(Real::from_root).collect();
    let mut pieces = Vec::new();
    for x in 0..marks.len() {
        let closed = (x > 0 && x + 1 < marks.len())
            || (x == 0 && !lo.strict)
            || (x + 1 == marks.len() && !hi.strict);
        if closed {
            pieces.push(Piece {
                at: reals[x].clone(),
                lo: reals[x].clone(),
                hi: reals[x].clone(),
                gap: false,
            });
        }
        if x + 1 < marks.len() {
            let (left, right) = marks.split_at_mut(x + 1);
            let mid = RealRoot::rational_between(&mut left[x], &mut right[0]);
            pieces.push(Piece {
                at: Real::Rat(mid),
                lo: reals[x].clone(),
                hi: reals[x + 1].clone(),
                gap: true,
            });
        }
    }
    let feasible: Vec<Option<Real>> = pieces
        .iter()
        .map(|p| strict_slack::<Real>(v, cell, Some((k, p.at.clone()))))
        .collect();

    let mut out = Vec::new();
    let mut x = 0;
    while x < pieces.len() {
        if feasible[x].is_none() {
            x += 1;
            continue;
        }
        let start = x;
        while x + 1 < pieces.len() && feasible[x + 1].is_some() {
            x += 1;
        }
        let run = start..=x;
        let pick = run
            .clone()
            .find(|&p| pieces[p].gap)
            .unwrap_or(start);
        let at = pieces[pick].at.clone();
        let slack = feasible[pick].clone().expect("feasible piece");
        let w = witness::<Real>(v, cell, Some((k, at.clone())), slack)
            .ok_or_else(|| Error::Numerical("witness program failed".into()))?;
        let span = (pieces[start].lo.clone(), pieces[x].hi.clone(), at);
        out.push(finish(v, cfg, cell, idx, w, Some(span))?);
        x += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn dense(rows: &[&[Rational]]) -> ValuationMatrix<Rational> {
        ValuationMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn run(v: &ValuationMatrix<Rational>) -> OracleReport {
        enumerate_equilibria_tiny(v, &MarketConfig::with_cap(rat_int(10)), &OracleLimits::default())
            .unwrap()
    }

    #[test]
    fn fixture_has_exactly_one_equilibrium() {
        let v = dense(&[&[rat_int(1), rat_int(1)], &[rat_int(0), rat_int(3)]]);
        let r = run(&v);
        assert_eq!(r.equilibria.len(), 1, "{:#?}", r.equilibria);
        let e = &r.equilibria[0];
        assert_eq!(e.alpha.0, vec![Real::from(rat_int(3)), Real::from(rat_int(1))]);
        assert_eq!(e.allocation.share(0, 1), Real::from(rat(1, 2)));
        assert!(e.rational);
        assert!((e.revenue - 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_single_good() {
        let v = dense(&[&[rat_int(1)], &[rat_int(1)]]);
        let r = run(&v);
        let tie = r
            .equilibria
            .iter()
            .find(|e| e.roles[0].winners.len() == 2)
            .expect("tied class");
        assert_eq!(tie.alpha.0, vec![Real::one(), Real::one()]);
        assert_eq!(tie.allocation.share(0, 0), Real::from(rat(1, 2)));
        // Plus one class per sole winner, whose rival sits at 1.
        assert_eq!(r.equilibria.len(), 3);
    }

    #[test]
    fn variable_gadget_has_low_multiplier_equilibrium() {
        let v = dense(&[
            &[rat(5, 100), rat(25, 1000)],
            &[rat(25, 1000), rat(5, 100)],
        ]);
        let r = run(&v);
        assert!(!r.equilibria.is_empty());
        assert!(r.equilibria.iter().any(|e| {
            let a = e.alpha_f64();
            a[0].min(a[1]) <= 2.0
        }));
    }

    #[test]
    fn irrational_equilibrium_is_exact() {
        // Both bidders win one good alone and tie on a third with both
        // multipliers interior, so the scale solves a quadratic.
        let v = dense(&[
            &[rat(9, 10), rat(2, 10), rat(3, 10)],
            &[rat(1, 10), rat(7, 10), rat(4, 10)],
        ]);
        let r = run(&v);
        assert!(!r.equilibria.is_empty());
        for e in &r.equilibria {
            let a = e.alpha_f64();
            assert!(a.iter().all(|x| (1.0..=10.0).contains(x)));
        }
    }

    #[test]
    fn limits_and_unsupported_inputs() {
        let v = dense(&[&[rat_int(1)], &[rat_int(1)], &[rat_int(1)], &[rat_int(1)]]);
        let e = enumerate_equilibria_tiny(
            &v,
            &MarketConfig::with_cap(rat_int(10)),
            &OracleLimits::default(),
        );
        assert!(matches!(e, Err(Error::Limits(_))));
        let mut cfg = MarketConfig::with_cap(rat_int(10));
        cfg.reserves = Some(vec![rat(1, 2)]);
        let v = dense(&[&[rat_int(1)], &[rat_int(1)]]);
        assert!(enumerate_equilibria_tiny(&v, &cfg, &OracleLimits::default()).is_err());
    }

    #[test]
    fn ratio_bounds_close_and_detect_emptiness() {
        let mut d = Dbm::new(2, &rat_int(10));
        assert!(d.add(1, 2, rat_int(2), false));
        assert!(d.add(2, 1, rat(1, 2), false));
        assert!(d.fixed(1, 2));
        assert!(!d.add(1, 2, rat_int(2), true));
    }
}
