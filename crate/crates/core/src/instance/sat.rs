use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Allocation, EquilibriumCandidate, MultiplierProfile, PriceVector, ValuationMatrix};
use crate::scalar::{rat, rat_int, Rational};

/// CNF formula with exactly three literals per clause. Literals are signed,
/// 1-based variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatFormula {
    pub n_vars: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl SatFormula {
    pub fn new(n_vars: usize, clauses: Vec<[i32; 3]>) -> Result<Self> {
        let f = Self { n_vars, clauses };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vars == 0 {
            return Err(Error::Invalid("formula has no variables".into()));
        }
        if self.clauses.is_empty() {
            return Err(Error::Invalid("formula has no clauses".into()));
        }
        for (c, clause) in self.clauses.iter().enumerate() {
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > self.n_vars {
                    return Err(Error::Invalid(format!(
                        "clause {c}: literal {lit} outside 1..={}",
                        self.n_vars
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.n_vars
            && self.clauses.iter().all(|clause| {
                clause
                    .iter()
                    .any(|&lit| assignment[lit.unsigned_abs() as usize - 1] == (lit > 0))
            })
    }

    /// First satisfying assignment in lexicographic order (small formulas).
    pub fn solve_brute_force(&self) -> Option<Vec<bool>> {
        if self.n_vars > 24 {
            return None;
        }
        (0u32..1 << self.n_vars)
            .map(|mask| (0..self.n_vars).map(|k| mask >> k & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.is_satisfied_by(a))
    }

    /// DIMACS text: `p cnf <vars> <clauses>` followed by clauses of three
    /// signed integers terminated by `0`. Lines starting with `c` are
    /// comments.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<(i32, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(parse_err("expected `p cnf <vars> <clauses>`".into()));
                }
                let nv = parts[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad variable count {:?}", parts[2])))?;
                let nc = parts[3]
                    .parse()
                    .map_err(|_| parse_err(format!("bad clause count {:?}", parts[3])))?;
                header = Some((nv, nc));
                continue;
            }
            if header.is_none() {
                return Err(parse_err("clause before `p cnf` header".into()));
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| parse_err(format!("bad literal {tok:?}")))?;
                if lit == 0 {
                    if current.len() != 3 {
                        return Err(parse_err(format!(
                            "clause has {} literals, expected 3",
                            current.len()
                        )));
                    }
                    clauses.push([current[0].0, current[1].0, current[2].0]);
                    current.clear();
                } else {
                    current.push((lit, line_no));
                }
            }
        }
        if let Some(&(_, line)) = current.first() {
            return Err(Error::Parse {
                line,
                message: "unterminated clause".into(),
            });
        }
        let (n_vars, n_clauses) =
            header.ok_or_else(|| Error::Parse {
                line: 0,
                message: "missing `p cnf` header".into(),
            })?;
        if clauses.len() != n_clauses {
            return Err(Error::Invalid(format!(
                "header declares {n_clauses} clauses, found {}",
                clauses.len()
            )));
        }
        Self::new(n_vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.n_vars, self.clauses.len());
        for c in &self.clauses {
            s.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        s
    }
}

/// Output of [`gen_3sat_reduction`].
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub valuations: ValuationMatrix<Rational>,
    /// Revenue target `0.075 + m`.
    pub target: Rational,
    /// Equilibrium built from a satisfying assignment (needs cap at least 5).
    pub candidate: Option<EquilibriumCandidate<Rational>>,
    pub bidder_labels: Vec<String>,
    pub good_labels: Vec<String>,
}

/// Bidder indices of variable `j` (0-based): `2j` is `1^x`, `2j + 1` is `2^x`.
/// Clause `c` owns bidders `2n + 3c .. 2n + 3c + 3` and goods
/// `2n + 2c, 2n + 2c + 1`.
pub fn gen_3sat_reduction(
    f: &SatFormula,
    assignment: Option<&[bool]>,
) -> Result<ReductionInstance> {
    f.validate()?;
    if let Some(a) = assignment {
        if !f.is_satisfied_by(a) {
            return Err(Error::Invalid("assignment does not satisfy the formula".into()));
        }
    }
    let n = f.n_vars;
    let m = f.clauses.len();
    let nb = 2 * n + 3 * m;
    let ng = 2 * n + 2 * m;
    let nn = i64::try_from(n).map_err(|_| Error::Invalid("too many variables".into()))?;
    let high = rat(5, 100 * nn);
    let low = rat(25, 1000 * nn);
    let mut entries: Vec<(usize, usize, Rational)> = Vec::new();
    for j in 0..n {
        let (b1, b2, g1, g2) = (2 * j, 2 * j + 1, 2 * j, 2 * j + 1);
        entries.push((b1, g1, high.clone()));
        entries.push((b2, g2, high.clone()));
        entries.push((b1, g2, low.clone()));
        entries.push((b2, g1, low.clone()));
    }
    for (c, clause) in f.clauses.iter().enumerate() {
        let (b3, b4, b5) = (2 * n + 3 * c, 2 * n + 3 * c + 1, 2 * n + 3 * c + 2);
        let (g3, g4) = (2 * n + 2 * c, 2 * n + 2 * c + 1);
        entries.push((b3, g3, rat(1, 2)));
        entries.push((b3, g4, rat(1, 10)));
        entries.push((b4, g4, rat(1, 2)));
        entries.push((b5, g4, rat(1, 2)));
        let mut linked: Vec<usize> = clause
            .iter()
            .map(|&lit| 2 * (lit.unsigned_abs() as usize - 1) + usize::from(lit < 0))
            .collect();
        linked.sort_unstable();
        linked.dedup();
        for b in linked {
            entries.push((b, g3, rat(1, 10)));
        }
    }
    let valuations = ValuationMatrix::from_triplets(nb, ng, entries)?;
    let target = rat(3, 40) + rat_int(m as i64);

    let candidate = assignment.map(|a| {
        let mut alpha = vec![rat_int(1); nb];
        let mut x = Allocation::empty(nb, ng);
        let mut p = vec![rat_int(0); ng];
        for (j, &truth) in a.iter().enumerate() {
            let (winner, loser) = if truth { (2 * j, 2 * j + 1) } else { (2 * j + 1, 2 * j) };
            alpha[winner] = rat_int(5);
            x.set(winner, 2 * j, rat_int(1));
            x.set(winner, 2 * j + 1, rat_int(1));
            // The loser's bid (alpha 1) sets both prices.
            p[2 * j] = valuations.value(loser, 2 * j);
            p[2 * j + 1] = valuations.value(loser, 2 * j + 1);
        }
        for c in 0..m {
            let (b3, b4, b5) = (2 * n + 3 * c, 2 * n + 3 * c + 1, 2 * n + 3 * c + 2);
            let (g3, g4) = (2 * n + 2 * c, 2 * n + 2 * c + 1);
            x.set(b3, g3, rat_int(1));
            x.set(b4, g4, rat(1, 2));
            x.set(b5, g4, rat(1, 2));
            p[g3] = rat(1, 2);
            p[g4] = rat(1, 2);
        }
        EquilibriumCandidate {
            alpha: MultiplierProfile(alpha),
            allocation: x,
            prices: PriceVector(p),
        }
    });

    let mut bidder_labels = Vec::with_capacity(nb);
    let mut good_labels = Vec::with_capacity(ng);
    for j in 1..=n {
        bidder_labels.push(format!("1^x{j}"));
        bidder_labels.push(format!("2^x{j}"));
        good_labels.push(format!("1^x{j}"));
        good_labels.push(format!("2^x{j}"));
    }
    for c in 1..=m {
        for k in 3..=5 {
            bidder_labels.push(format!("{k}^c{c}"));
        }
        good_labels.push(format!("3^c{c}"));
        good_labels.push(format!("4^c{c}"));
    }
    Ok(ReductionInstance {
        valuations,
        target,
        candidate,
        bidder_labels,
        good_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{check_candidate, check_equilibrium, market_metrics, MarketConfig};

    fn one_clause() -> SatFormula {
        SatFormula::new(3, vec![[1, -2, 3]]).unwrap()
    }

    #[test]
    fn dimacs_round_trip_and_errors() {
        let f = SatFormula::parse_dimacs("c demo\np cnf 3 2\n1 -2 3 0\n-1 2\n 3 0\n").unwrap();
        assert_eq!(f.clauses, vec![[1, -2, 3], [-1, 2, 3]]);
        assert_eq!(SatFormula::parse_dimacs(&f.to_dimacs()).unwrap(), f);
        let e = SatFormula::parse_dimacs("p cnf 3 1\n1 2 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(SatFormula::parse_dimacs("p cnf 2 1\n1 2 3 0\n").is_err());
        assert!(SatFormula::parse_dimacs("p cnf 2 0\n").is_err());
    }

    #[test]
    fn reduction_sizes_and_target() {
        let r = gen_3sat_reduction(&one_clause(), None).unwrap();
        assert_eq!(r.valuations.n_bidders(), 9);
        assert_eq!(r.valuations.n_goods(), 8);
        assert_eq!(r.target, rat(43, 40));
        assert!(r.candidate.is_none());
    }

    #[test]
    fn candidate_is_exact_equilibrium() {
        let f = one_clause();
        let a = f.solve_brute_force().unwrap();
        let r = gen_3sat_reduction(&f, Some(&a)).unwrap();
        let cand = r.candidate.unwrap();
        let cfg = MarketConfig::with_cap(rat_int(10));
        let zero = rat_int(0);
        let c = check_equilibrium(&r.valuations, &cand.alpha, &cand.allocation, &cfg, &zero).unwrap();
        assert!(c.pass, "{c:?}");
        let c = check_candidate(
            &r.valuations,
            &cand.alpha,
            &cand.allocation,
            &cand.prices,
            &cfg,
            &zero,
        )
        .unwrap();
        assert!(c.pass, "{c:?}");
        let m = market_metrics(&r.valuations, &cand.allocation, &cand.prices, &cfg);
        assert!((m.revenue - 1.075).abs() < 1e-12);
        assert_eq!(cand.prices.0[7], rat(1, 2));
    }

    #[test]
    fn unsatisfying_assignment_rejected() {
        let f = SatFormula::new(1, vec![[1, 1, 1]]).unwrap();
        assert!(gen_3sat_reduction(&f, Some(&[false])).is_err());
        assert!(gen_3sat_reduction(&f, Some(&[true])).is_ok());
    }
}
