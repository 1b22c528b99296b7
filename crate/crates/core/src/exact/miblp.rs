//! Mixed-integer bilinear program whose feasible points are the equilibria
//! in which every bidder's ROI constraint binds.
//!
//! Variables, for bidder `i` and good `j` (all pairs, zero values included):
//!
//! | name      | meaning                                   | domain     |
//! |-----------|-------------------------------------------|------------|
//! | `alpha_i` | multiplier                                | `[1, A]`   |
//! | `p_j`     | price                                     | `>= 0`     |
//! | `h_j`     | highest bid                               | `>= 0`     |
//! | `d_i_j`   | `i` bids the highest bid                  | binary     |
//! | `w_i_j`   | `i` is the winner excluded from the price | binary     |
//! | `r_i_j`   | `i`'s bid sets the price                  | binary     |
//! | `s_i_j`   | spend of `i` on `j`                       | `>= 0`     |
//! | `u_i_j`   | value `i` acquires from `j`               | `>= 0`     |
//!
//! Constraint families, named `F<k>_...` in the text output:
//!
//! 1. `sum_i s_ij = p_j`
//! 2. `s_ij <= M d_ij`
//! 3. `h_j >= alpha_i v_ij`
//! 4. `h_j <= alpha_i v_ij + (1 - d_ij) M`
//! 5. `p_j >= alpha_i v_ij - w_ij M`
//! 6. `p_j <= alpha_i v_ij + (1 - r_ij) M`
//! 7. `w_ij <= d_ij`
//! 8. `sum_i w_ij = 1`
//! 9. `sum_i r_ij = 1`
//! 10. `r_ij + w_ij <= 1`
//! 11. `v_ij s_ij = p_j u_ij` (bilinear)
//! 12. `sum_j s_ij = sum_j u_ij`
//!
//! with `M = A * max v`. The text format follows the CPLEX LP layout:
//! comment header lines start with `\`, bilinear terms are written
//! `[ p_j * u_i_j ]`, numbers are decimal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    check_candidate, run_auctions, Allocation, Certificate, MarketConfig, MultiplierProfile,
    PriceVector, ValuationMatrix,
};
use crate::scalar::Scalar;

use super::lp::Cmp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiblpObjective {
    /// Maximize `sum_j p_j`.
    Revenue,
    /// Maximize `sum_ij u_ij`.
    Welfare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MiblpVar {
    Alpha(usize),
    Price(usize),
    High(usize),
    D(usize, usize),
    W(usize, usize),
    R(usize, usize),
    S(usize, usize),
    U(usize, usize),
}

impl MiblpVar {
    pub fn name(&self) -> String {
        match self {
            MiblpVar::Alpha(i) => format!("alpha_{i}"),
            MiblpVar::Price(j) => format!("p_{j}"),
            MiblpVar::High(j) => format!("h_{j}"),
            MiblpVar::D(i, j) => format!("d_{i}_{j}"),
            MiblpVar::W(i, j) => format!("w_{i}_{j}"),
            MiblpVar::R(i, j) => format!("r_{i}_{j}"),
            MiblpVar::S(i, j) => format!("s_{i}_{j}"),
            MiblpVar::U(i, j) => format!("u_{i}_{j}"),
        }
    }

    pub fn parse(name: &str) -> Option<MiblpVar> {
        let (head, rest) = name.split_once('_')?;
        let idx: Vec<usize> = rest.split('_').map(str::parse).collect::<std::result::Result<_, _>>().ok()?;
        Some(match (head, idx.as_slice()) {
            ("alpha", [i]) => MiblpVar::Alpha(*i),
            ("p", [j]) => MiblpVar::Price(*j),
            ("h", [j]) => MiblpVar::High(*j),
            ("d", [i, j]) => MiblpVar::D(*i, *j),
            ("w", [i, j]) => MiblpVar::W(*i, *j),
            ("r", [i, j]) => MiblpVar::R(*i, *j),
            ("s", [i, j]) => MiblpVar::S(*i, *j),
            ("u", [i, j]) => MiblpVar::U(*i, *j),
            _ => return None,
        })
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, MiblpVar::D(..) | MiblpVar::W(..) | MiblpVar::R(..))
    }
}

/// `sum lin + sum quad <cmp> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiblpRow<T> {
    pub name: String,
    /// Family number, 1 to 12.
    pub family: usize,
    pub lin: Vec<(T, MiblpVar)>,
    pub quad: Vec<(T, MiblpVar, MiblpVar)>,
    pub cmp: Cmp,
    pub rhs: T,
}

impl<T: Scalar> MiblpRow<T> {
    /// Amount by which the row is violated at `x` (0 when satisfied).
    pub fn violation(&self, x: &impl Fn(MiblpVar) -> T) -> T {
        let lhs = self.lin.iter().fold(T::zero(), |a, (c, v)| a + c.clone() * x(*v));
        let lhs = self
            .quad
            .iter()
            .fold(lhs, |a, (c, u, v)| a + c.clone() * x(*u) * x(*v));
        let d = lhs - self.rhs.clone();
        match self.cmp {
            Cmp::Le => T::max_of(d, T::zero()),
            Cmp::Ge => T::max_of(-d, T::zero()),
            Cmp::Eq => d.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiblpModel<T = f64> {
    pub n_bidders: usize,
    pub n_goods: usize,
    pub cap: T,
    pub big_m: T,
    pub objective: MiblpObjective,
    pub rows: Vec<MiblpRow<T>>,
}

impl<T: Scalar> MiblpModel<T> {
    pub fn variables(&self) -> Vec<MiblpVar> {
        let (n, m) = (self.n_bidders, self.n_goods);
        let mut out: Vec<MiblpVar> = (0..n).map(MiblpVar::Alpha).collect();
        out.extend((0..m).map(MiblpVar::Price));
        out.extend((0..m).map(MiblpVar::High));
        for make in [MiblpVar::D, MiblpVar::W, MiblpVar::R, MiblpVar::S, MiblpVar::U] {
            for i in 0..n {
                out.extend((0..m).map(|j| make(i, j)));
            }
        }
        out
    }

    /// Rows per family, index 0 holding family 1.
    pub fn family_counts(&self) -> [usize; 12] {
        let mut c = [0; 12];
        for r in &self.rows {
            c[r.family - 1] += 1;
        }
        c
    }

    /// Bound and integrality violation of one variable's value.
    fn domain_violation(&self, var: MiblpVar, x: &T) -> T {
        let below = |lo: T| T::max_of(lo - x.clone(), T::zero());
        match var {
            MiblpVar::Alpha(_) => T::max_of(below(T::one()), x.clone() - self.cap.clone()),
            _ if var.is_binary() => T::min_of(x.clone().abs(), (x.clone() - T::one()).abs()),
            _ => below(T::zero()),
        }
    }

    /// Checks every row, bound and integrality requirement.
    pub fn check(&self, values: &BTreeMap<MiblpVar, T>, tol: &T) -> ConstraintReport {
        let x = |v: MiblpVar| values[&v].clone();
        let mut worst = T::zero();
        let mut violated = Vec::new();
        for var in self.variables() {
            let e = self.domain_violation(var, &values[&var]);
            if e > *tol {
                violated.push(format!("bound {}", var.name()));
            }
            worst = T::max_of(worst, e);
        }
        for row in &self.rows {
            let e = row.violation(&x);
            if e > *tol {
                violated.push(row.name.clone());
            }
            worst = T::max_of(worst, e);
        }
        ConstraintReport {
            pass: violated.is_empty(),
            max_violation: worst.to_f64_lossy(),
            violated,
        }
    }

    /// CPLEX-LP-style text.
    pub fn to_lp_string(&self) -> String {
        let (n, m) = (self.n_bidders, self.n_goods);
        let num = |x: &T| format!("{:?}", x.to_f64_lossy());
        let mut s = String::new();
        let _ = writeln!(s, "\\ auto-bidding equilibrium MIBLP");
        let _ = writeln!(s, "\\ bidders {n} goods {m} cap {} big_m {}", num(&self.cap), num(&self.big_m));
        let _ = writeln!(
            s,
            "\\ variables alpha {n} p {m} h {m} binary {} continuous {}",
            3 * n * m,
            2 * n * m
        );
        for (k, c) in self.family_counts().iter().enumerate() {
            let _ = writeln!(s, "\\ family F{} rows {c}", k + 1);
        }
        let _ = writeln!(s, "Maximize");
        let obj: Vec<String> = match self.objective {
            MiblpObjective::Revenue => (0..m).map(|j| MiblpVar::Price(j).name()).collect(),
            MiblpObjective::Welfare => (0..n)
                .flat_map(|i| (0..m).map(move |j| MiblpVar::U(i, j).name()))
                .collect(),
        };
        let _ = writeln!(s, " obj: {}", obj.join(" + "));
        let _ = writeln!(s, "Subject To");
        for row in &self.rows {
            let mut terms = Vec::new();
            for (c, v) in &row.lin {
                terms.push(format!("{} {}", num(c), v.name()));
            }
            if !row.quad.is_empty() {
                let q: Vec<String> = row
                    .quad
                    .iter()
                    .map(|(c, u, v)| format!("{} {} * {}", num(c), u.name(), v.name()))
                    .collect();
                terms.push(format!("[ {} ]", q.join(" + ")));
            }
            let op = match row.cmp {
                Cmp::Le => "<=",
                Cmp::Eq => "=",
                Cmp::Ge => ">=",
            };
            let _ = writeln!(s, " {}: {} {op} {}", row.name, terms.join(" + "), num(&row.rhs));
        }
        let _ = writeln!(s, "Bounds");
        for i in 0..n {
            let _ = writeln!(s, " 1 <= {} <= {}", MiblpVar::Alpha(i).name(), num(&self.cap));
        }
        for v in self.variables().iter().filter(|v| !matches!(v, MiblpVar::Alpha(_))) {
            if !v.is_binary() {
                let _ = writeln!(s, " {} >= 0", v.name());
            }
        }
        let _ = writeln!(s, "Binaries");
        for v in self.variables().iter().filter(|v| v.is_binary()) {
            let _ = writeln!(s, " {}", v.name());
        }
        let _ = writeln!(s, "End");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub pass: bool,
    pub max_violation: f64,
    /// Names of violated rows, and `bound <var>` entries.
    pub violated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiblpVerification {
    pub pass: bool,
    pub constraints: ConstraintReport,
    pub certificate: Certificate,
}

/// Bidders every one of whose positive-value goods has no other
/// positive-value bidder; such a bidder may win everything it wants with
/// slack ROI, outside the binding regime the model encodes.
pub fn uncontested_bidders<T: Scalar>(v: &ValuationMatrix<T>) -> Vec<usize> {
    (0..v.n_bidders())
        .filter(|&i| {
            let goods = v.bidder(i);
            goods.iter().any(|(_, x)| x.gt_zero())
                && goods
                    .iter()
                    .filter(|(_, x)| x.gt_zero())
                    .all(|(j, _)| v.good(*j).iter().all(|(k, x)| *k == i || !x.gt_zero()))
        })
        .collect()
}

pub fn export_miblp<T: Scalar>(
    v: &ValuationMatrix<T>,
    cfg: &MarketConfig<T>,
    objective: MiblpObjective,
) -> Result<MiblpModel<T>> {
    let (n, m) = (v.n_bidders(), v.n_goods());
    cfg.validate(n, m)?;
    if cfg.has_boosts() || cfg.has_reserves() {
        return Err(Error::Invalid("the model has no boosts or reserves".into()));
    }
    let lone = uncontested_bidders(v);
    if !lone.is_empty() {
        return Err(Error::Refused(format!(
            "bidders {lone:?} face no competition on any positive-value good"
        )));
    }
    let one = T::one();
    let big_m = cfg.cap.clone() * v.max_value();
    let mut rows = Vec::new();
    let mut row = |family: usize, name: String, lin: Vec<(T, MiblpVar)>, cmp: Cmp, rhs: T| {
        rows.push(MiblpRow {
            name: format!("F{family}_{name}"),
            family,
            lin,
            quad: Vec::new(),
            cmp,
            rhs,
        })
    };
    use MiblpVar::*;
    for j in 0..m {
        let mut lin: Vec<(T, MiblpVar)> = (0..n).map(|i| (one.clone(), S(i, j))).collect();
        lin.push((-one.clone(), Price(j)));
        row(1, format!("g{j}"), lin, Cmp::Eq, T::zero());
    }
    for i in 0..n {
        for j in 0..m {
            let vij = v.value(i, j);
            let name = format!("b{i}_g{j}");
            row(2, name.clone(), vec![(one.clone(), S(i, j)), (-big_m.clone(), D(i, j))], Cmp::Le, T::zero());
            row(3, name.clone(), vec![(one.clone(), High(j)), (-vij.clone(), Alpha(i))], Cmp::Ge, T::zero());
            row(
                4,
                name.clone(),
                vec![(one.clone(), High(j)), (-vij.clone(), Alpha(i)), (big_m.clone(), D(i, j))],
                Cmp::Le,
                big_m.clone(),
            );
            row(
                5,
                name.clone(),
                vec![(one.clone(), Price(j)), (-vij.clone(), Alpha(i)), (big_m.clone(), W(i, j))],
                Cmp::Ge,
                T::zero(),
            );
            row(
                6,
                name.clone(),
                vec![(one.clone(), Price(j)), (-vij.clone(), Alpha(i)), (big_m.clone(), R(i, j))],
                Cmp::Le,
                big_m.clone(),
            );
            row(7, name.clone(), vec![(one.clone(), W(i, j)), (-one.clone(), D(i, j))], Cmp::Le, T::zero());
        }
    }
    for j in 0..m {
        row(8, format!("g{j}"), (0..n).map(|i| (one.clone(), W(i, j))).collect(), Cmp::Eq, one.clone());
        row(9, format!("g{j}"), (0..n).map(|i| (one.clone(), R(i, j))).collect(), Cmp::Eq, one.clone());
    }
    for i in 0..n {
        for j in 0..m {
            row(10, format!("b{i}_g{j}"), vec![(one.clone(), R(i, j)), (one.clone(), W(i, j))], Cmp::Le, one.clone());
        }
    }
    for i in 0..n {
        for j in 0..m {
            rows.push(MiblpRow {
                name: format!("F11_b{i}_g{j}"),
                family: 11,
                lin: vec![(v.value(i, j), S(i, j))],
                quad: vec![(-one.clone(), Price(j), U(i, j))],
                cmp: Cmp::Eq,
                rhs: T::zero(),
            });
        }
    }
    for i in 0..n {
        let mut lin: Vec<(T, MiblpVar)> = (0..m).map(|j| (one.clone(), S(i, j))).collect();
        lin.extend((0..m).map(|j| (-one.clone(), U(i, j))));
        rows.push(MiblpRow {
            name: format!("F12_b{i}"),
            family: 12,
            lin,
            quad: Vec::new(),
            cmp: Cmp::Eq,
            rhs: T::zero(),
        });
    }
    Ok(MiblpModel {
        n_bidders: n,
        n_goods: m,
        cap: cfg.cap.clone(),
        big_m,
        objective,
        rows,
    })
}

/// Model variables encoding an equilibrium: `d` marks top bidders, `w` the
/// lowest-index top bidder, `r` the price setter (another top bidder on a
/// tie, else the highest-scoring other bidder, lowest index first).
pub fn encode_solution<T: Scalar>(
    v: &ValuationMatrix<T>,
    alpha: &MultiplierProfile<T>,
    x: &Allocation<T>,
    cfg: &MarketConfig<T>,
) -> Result<BTreeMap<String, T>> {
    let (n, m) = (v.n_bidders(), v.n_goods());
    if n < 2 {
        return Err(Error::Invalid("encoding needs two bidders".into()));
    }
    let out = run_auctions(v, alpha, cfg)?;
    let mut sol = BTreeMap::new();
    let mut put = |var: MiblpVar, x: T| {
        sol.insert(var.name(), x);
    };
    for i in 0..n {
        put(MiblpVar::Alpha(i), alpha.get(i).clone());
    }
    for j in 0..m {
        let bid = |i: usize| alpha.get(i).clone() * v.value(i, j);
        let top = (0..n).map(bid).fold(T::zero(), T::max_of);
        let price = out.prices.get(j).clone();
        let tops: Vec<usize> = (0..n).filter(|&i| bid(i) == top).collect();
        let w = tops[0];
        let r = if tops.len() > 1 {
            tops[1]
        } else {
            let rest = (0..n).filter(|&i| i != w);
            let second = rest.clone().map(bid).fold(T::zero(), T::max_of);
            rest.clone().find(|&i| bid(i) == second).expect("another bidder")
        };
        put(MiblpVar::Price(j), price.clone());
        put(MiblpVar::High(j), top);
        for i in 0..n {
            let flag = |b: bool| if b { T::one() } else { T::zero() };
            put(MiblpVar::D(i, j), flag(tops.contains(&i)));
            put(MiblpVar::W(i, j), flag(i == w));
            put(MiblpVar::R(i, j), flag(i == r));
            let share = x.share(i, j);
            put(MiblpVar::S(i, j), share.clone() * price.clone());
            put(MiblpVar::U(i, j), share * v.value(i, j));
        }
    }
    Ok(sol)
}

/// Re-checks every model constraint, then rebuilds `(alpha, x, p)` with
/// `x_ij = u_ij / v_ij` (0 where `v_ij = 0`) and certifies it.
pub fn verify_miblp_solution<T: Scalar>(
    v: &ValuationMatrix<T>,
    cfg: &MarketConfig<T>,
    solution: &BTreeMap<String, T>,
    tol: &T,
) -> Result<MiblpVerification> {
    let model = export_miblp(v, cfg, MiblpObjective::Revenue)?;
    let mut values = BTreeMap::new();
    for var in model.variables() {
        let x = solution
            .get(&var.name())
            .ok_or_else(|| Error::MissingVariable(var.name()))?;
        if !x.is_finite_value() {
            return Err(Error::NonFinite(var.name()));
        }
        values.insert(var, x.clone());
    }
    let constraints = model.check(&values, tol);
    let (n, m) = (v.n_bidders(), v.n_goods());
    let alpha = MultiplierProfile((0..n).map(|i| values[&MiblpVar::Alpha(i)].clone()).collect());
    let alpha = MultiplierProfile(
        alpha
            .0
            .into_iter()
            .map(|a| T::min_of(T::max_of(a, T::one()), cfg.cap.clone()))
            .collect(),
    );
    let entries = v.triplets().filter_map(|(i, j, vij)| {
        let share = values[&MiblpVar::U(i, j)].clone() / vij.clone();
        (!share.is_zero()).then_some((i, j, share))
    });
    let x = Allocation::from_entries(n, m, entries)?;
    let p = PriceVector(
        (0..m)
            .map(|j| T::max_of(values[&MiblpVar::Price(j)].clone(), T::zero()))
            .collect(),
    );
    let certificate = check_candidate(v, &alpha, &x, &p, cfg, tol)?;
    Ok(MiblpVerification {
        pass: constraints.pass && certificate.pass,
        constraints,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rational};
    use num_traits::Zero;

    fn fixture() -> ValuationMatrix<Rational> {
        ValuationMatrix::from_dense(&[
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(0), rat_int(3)],
        ])
        .unwrap()
    }

    fn cfg() -> MarketConfig<Rational> {
        MarketConfig::with_cap(rat_int(10))
    }

    fn fixture_solution() -> BTreeMap<String, Rational> {
        let x = Allocation::from_entries(
            2,
            2,
            [(0, 0, rat_int(1)), (0, 1, rat(1, 2)), (1, 1, rat(1, 2))],
        )
        .unwrap();
        let alpha = MultiplierProfile(vec![rat_int(3), rat_int(1)]);
        encode_solution(&fixture(), &alpha, &x, &cfg()).unwrap()
    }

    #[test]
    fn fixture_model_shape() {
        let model = export_miblp(&fixture(), &cfg(), MiblpObjective::Revenue).unwrap();
        assert_eq!(model.big_m, rat_int(30));
        let vars = model.variables();
        assert_eq!(vars.len(), 2 + 2 + 2 + 12 + 8);
        assert_eq!(vars.iter().filter(|v| v.is_binary()).count(), 12);
        assert_eq!(model.family_counts(), [2, 4, 4, 4, 4, 4, 4, 2, 2, 4, 4, 2]);
        let text = model.to_lp_string();
        assert!(text.contains("big_m 30.0"));
        assert!(text.contains("F11_b1_g1: 3.0 s_1_1 + [ -1.0 p_1 * u_1_1 ] = 0.0"));
        assert!(text.contains("\\ family F12 rows 2"));
        assert!(text.trim_end().ends_with("End"));
    }

    #[test]
    fn variable_names_round_trip() {
        let model = export_miblp(&fixture(), &cfg(), MiblpObjective::Welfare).unwrap();
        for var in model.variables() {
            assert_eq!(MiblpVar::parse(&var.name()), Some(var));
        }
        assert_eq!(MiblpVar::parse("q_1"), None);
        assert_eq!(MiblpVar::parse("d_1"), None);
    }

    #[test]
    fn fixture_equilibrium_satisfies_model_exactly() {
        let ver = verify_miblp_solution(&fixture(), &cfg(), &fixture_solution(), &Rational::zero())
            .unwrap();
        assert!(ver.pass, "{ver:?}");
        assert_eq!(ver.constraints.max_violation, 0.0);
    }

    #[test]
    fn perturbed_spend_breaks_bilinear_row() {
        let mut sol = fixture_solution();
        *sol.get_mut("s_0_1").unwrap() += rat(1, 10);
        let ver = verify_miblp_solution(&fixture(), &cfg(), &sol, &Rational::zero()).unwrap();
        assert!(!ver.pass);
        assert!(ver.constraints.violated.iter().any(|r| r == "F11_b0_g1"));
    }

    #[test]
    fn zero_solution_fails_full_allocation() {
        let sol: BTreeMap<String, Rational> = fixture_solution()
            .into_keys()
            .map(|k| (k, Rational::zero()))
            .collect();
        let ver = verify_miblp_solution(&fixture(), &cfg(), &sol, &Rational::zero()).unwrap();
        assert!(!ver.pass);
        assert!(ver.certificate.failing_names().contains(&"full-allocation"));
    }

    #[test]
    fn missing_variable_is_an_error() {
        let mut sol = fixture_solution();
        sol.remove("h_0");
        let err = verify_miblp_solution(&fixture(), &cfg(), &sol, &Rational::zero()).unwrap_err();
        assert!(matches!(err, Error::MissingVariable(ref v) if v == "h_0"));
    }

    #[test]
    fn refuses_exactly_uncontested_bidders() {
        let v = ValuationMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let cfg = MarketConfig::default();
        assert!(matches!(
            export_miblp(&v, &cfg, MiblpObjective::Revenue),
            Err(Error::Refused(_))
        ));
        assert_eq!(uncontested_bidders(&v), vec![0, 1]);
        let v = ValuationMatrix::from_dense(&[vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert!(uncontested_bidders(&v).is_empty());
        assert!(export_miblp(&v, &cfg, MiblpObjective::Revenue).is_ok());
    }
}
