//! Market primitives: valuations, configuration, multipliers, allocations and
//! prices, plus the auction engine, the equilibrium certificate and market
//! metrics built on top of them.

mod auction;
mod certificate;
mod metrics;

pub use auction::{run_auctions, AuctionOutcome, GoodOutcome};
pub use certificate::{check_candidate, check_equilibrium, Certificate, Condition};
pub use metrics::{market_metrics, BidderMetrics, MarketMetrics, NetworkMetrics, METRICS_CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Sparse nonnegative valuations of `n_bidders` over `n_goods`.
///
/// Only strictly positive entries are stored; an absent entry has value 0
/// and means the bidder does not participate in that auction.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationMatrix<T = f64> {
    n_bidders: usize,
    n_goods: usize,
    by_good: Vec<Vec<(usize, T)>>,
    by_bidder: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> ValuationMatrix<T> {
    /// Builds a matrix from `(bidder, good, value)` triplets. Zero values are
    /// accepted and dropped; duplicates, negative or non-finite values and
    /// goods nobody values are rejected.
    pub fn from_triplets<I>(n_bidders: usize, n_goods: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut by_good: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_goods];
        let mut seen = std::collections::HashSet::new();
        for (i, j, v) in entries {
            if i >= n_bidders || j >= n_goods {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside {n_bidders}x{n_goods}"
                )));
            }
            if !v.is_finite_value() {
                return Err(Error::NonFinite(format!("value of ({i}, {j})")));
            }
            if v.lt_zero() {
                return Err(Error::Invalid(format!("negative value at ({i}, {j})")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Invalid(format!("duplicate entry ({i}, {j})")));
            }
            if v.gt_zero() {
                by_good[j].push((i, v));
            }
        }
        Self::from_columns(n_bidders, by_good)
    }

    /// Builds a matrix from dense rows (`rows[i][j]` is bidder `i`'s value
    /// for good `j`).
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged dense matrix".into()));
        }
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, v)| (i, j, v.clone())));
        Self::from_triplets(n, m, entries)
    }

    fn from_columns(n_bidders: usize, mut by_good: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let mut by_bidder: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_bidders];
        for (j, col) in by_good.iter_mut().enumerate() {
            if col.is_empty() {
                return Err(Error::Invalid(format!(
                    "good {j} has no bidder with positive value"
                )));
            }
            col.sort_by_key(|e| e.0);
            for (i, v) in col.iter() {
                by_bidder[*i].push((j, v.clone()));
            }
        }
        Ok(Self {
            n_bidders,
            n_goods: by_good.len(),
            by_good,
            by_bidder,
        })
    }

    pub fn n_bidders(&self) -> usize {
        self.n_bidders
    }

    pub fn n_goods(&self) -> usize {
        self.n_goods
    }

    /// Positive entries of good `j`, sorted by bidder id.
    pub fn good(&self, j: usize) -> &[(usize, T)] {
        &self.by_good[j]
    }

    /// Positive entries of bidder `i`, sorted by good id.
    pub fn bidder(&self, i: usize) -> &[(usize, T)] {
        &self.by_bidder[i]
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.by_good[j]
            .binary_search_by_key(&i, |e| e.0)
            .map(|k| self.by_good[j][k].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    /// All positive entries in `(bidder, good, value)` form, ordered by good
    /// then bidder.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        self.by_good
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |(i, v)| (*i, j, v)))
    }

    pub fn nnz(&self) -> usize {
        self.by_good.iter().map(Vec::len).sum()
    }

    pub fn max_value(&self) -> T {
        self.triplets()
            .map(|(_, _, v)| v.clone())
            .fold(T::zero(), T::max_of)
    }

    /// Highest value for good `j`.
    pub fn good_max(&self, j: usize) -> T {
        self.by_good[j]
            .iter()
            .map(|e| e.1.clone())
            .fold(T::zero(), T::max_of)
    }

    /// Sum of bidder `i`'s values over all goods.
    pub fn bidder_total(&self, i: usize) -> T {
        self.by_bidder[i]
            .iter()
            .fold(T::zero(), |acc, e| acc + e.1.clone())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut rows = vec![vec![T::zero(); self.n_goods]; self.n_bidders];
        for (i, j, v) in self.triplets() {
            rows[i][j] = v.clone();
        }
        rows
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ValuationMatrix<U> {
        let by_good = self
            .by_good
            .iter()
            .map(|col| col.iter().map(|(i, v)| (*i, f(v))).collect())
            .collect();
        ValuationMatrix::from_columns(self.n_bidders, by_good)
            .expect("mapping preserves positivity")
    }

    /// Multiplies every value by `factor > 0`.
    pub fn scaled(&self, factor: &T) -> Self {
        self.map(|v| v.clone() * factor.clone())
    }

    /// Multiplies bidder `i`'s row by `factor > 0` (a target-CPA change).
    pub fn with_scaled_row(&self, bidder: usize, factor: &T) -> Self {
        let by_good = self
            .by_good
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(i, v)| {
                        if *i == bidder {
                            (*i, v.clone() * factor.clone())
                        } else {
                            (*i, v.clone())
                        }
                    })
                    .collect()
            })
            .collect();
        ValuationMatrix::from_columns(self.n_bidders, by_good).expect("positive factor")
    }

    /// Multiplies each bidder's row by its own factor.
    pub fn with_scaled_rows(&self, factors: &[T]) -> Self {
        let by_good = self
            .by_good
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(i, v)| (*i, v.clone() * factors[*i].clone()))
                    .collect()
            })
            .collect();
        ValuationMatrix::from_columns(self.n_bidders, by_good).expect("positive factors")
    }

    /// Restricts the matrix to a subset of goods, renumbered in the given
    /// order.
    pub fn select_goods(&self, goods: &[usize]) -> Result<Self> {
        let cols = goods.iter().map(|&j| self.by_good[j].clone()).collect();
        ValuationMatrix::from_columns(self.n_bidders, cols)
    }
}

impl ValuationMatrix<f64> {
    pub fn to_exact(&self) -> ValuationMatrix<Rational> {
        self.map(|v| Rational::from_f64_exact(*v))
    }
}

/// Market-wide auction options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct MarketConfig<T = f64> {
    /// Multiplier cap `A >= 1`.
    pub cap: T,
    /// Per-good reserve prices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserves: Option<Vec<T>>,
    /// Additive score boosts `c_{i,j}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boosts: Option<Vec<Boost<T>>>,
    /// Per-good ad-network labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub networks: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boost<T = f64> {
    pub bidder: usize,
    pub good: usize,
    pub value: T,
}

/// Default multiplier cap.
pub const DEFAULT_CAP: f64 = 10.0;

impl Default for MarketConfig<f64> {
    fn default() -> Self {
        Self::with_cap(DEFAULT_CAP)
    }
}

impl<T: Scalar> MarketConfig<T> {
    pub fn with_cap(cap: T) -> Self {
        Self {
            cap,
            reserves: None,
            boosts: None,
            networks: None,
        }
    }

    pub fn validate(&self, n_bidders: usize, n_goods: usize) -> Result<()> {
        if !self.cap.is_finite_value() {
            return Err(Error::NonFinite("cap".into()));
        }
        if self.cap < T::one() {
            return Err(Error::Invalid("cap must be at least 1".into()));
        }
        if let Some(r) = &self.reserves {
            if r.len() != n_goods {
                return Err(Error::Dimension(format!(
                    "{} reserves for {n_goods} goods",
                    r.len()
                )));
            }
            for (j, x) in r.iter().enumerate() {
                if !x.is_finite_value() || x.lt_zero() {
                    return Err(Error::Invalid(format!("reserve of good {j}")));
                }
            }
        }
        if let Some(bs) = &self.boosts {
            for b in bs {
                if b.bidder >= n_bidders || b.good >= n_goods {
                    return Err(Error::Dimension(format!(
                        "boost ({}, {}) outside market",
                        b.bidder, b.good
                    )));
                }
                if !b.value.is_finite_value() || b.value.lt_zero() {
                    return Err(Error::Invalid(format!(
                        "boost of ({}, {})",
                        b.bidder, b.good
                    )));
                }
            }
        }
        if let Some(nw) = &self.networks {
            if nw.len() != n_goods {
                return Err(Error::Dimension(format!(
                    "{} network labels for {n_goods} goods",
                    nw.len()
                )));
            }
        }
        Ok(())
    }

    pub fn reserve(&self, j: usize) -> T {
        self.reserves
            .as_ref()
            .map_or_else(T::zero, |r| r[j].clone())
    }

    pub fn has_reserves(&self) -> bool {
        self.reserves
            .as_ref()
            .is_some_and(|r| r.iter().any(|x| x.gt_zero()))
    }

    pub fn has_boosts(&self) -> bool {
        self.boosts
            .as_ref()
            .is_some_and(|b| b.iter().any(|x| x.value.gt_zero()))
    }

    /// Boosts arranged per good, aligned with `v.good(j)`.
    pub fn boost_table(&self, v: &ValuationMatrix<T>) -> Vec<Vec<T>> {
        let mut table: Vec<Vec<T>> = (0..v.n_goods())
            .map(|j| vec![T::zero(); v.good(j).len()])
            .collect();
        if let Some(bs) = &self.boosts {
            for b in bs {
                if let Ok(k) = v.good(b.good).binary_search_by_key(&b.bidder, |e| e.0) {
                    table[b.good][k] = table[b.good][k].clone() + b.value.clone();
                }
            }
        }
        table
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MarketConfig<U> {
        MarketConfig {
            cap: f(&self.cap),
            reserves: self.reserves.as_ref().map(|r| r.iter().map(&f).collect()),
            boosts: self.boosts.as_ref().map(|bs| {
                bs.iter()
                    .map(|b| Boost {
                        bidder: b.bidder,
                        good: b.good,
                        value: f(&b.value),
                    })
                    .collect()
            }),
            networks: self.networks.clone(),
        }
    }
}

impl MarketConfig<f64> {
    pub fn to_exact(&self) -> MarketConfig<Rational> {
        self.map(|x| Rational::from_f64_exact(*x))
    }
}

/// One multiplier per bidder, each in `[1, A]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct MultiplierProfile<T = f64>(pub Vec<T>);

impl<T: Scalar> MultiplierProfile<T> {
    pub fn uniform(n: usize, alpha: T) -> Self {
        Self(vec![alpha; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &T {
        &self.0[i]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn validate(&self, n_bidders: usize, cap: &T) -> Result<()> {
        if self.0.len() != n_bidders {
            return Err(Error::Dimension(format!(
                "{} multipliers for {n_bidders} bidders",
                self.0.len()
            )));
        }
        for (i, a) in self.0.iter().enumerate() {
            if !a.is_finite_value() {
                return Err(Error::NonFinite(format!("multiplier of bidder {i}")));
            }
            if *a < T::one() || a > cap {
                return Err(Error::Invalid(format!(
                    "multiplier of bidder {i} outside [1, cap]"
                )));
            }
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MultiplierProfile<U> {
        MultiplierProfile(self.0.iter().map(f).collect())
    }
}

/// Fractional allocation, stored sparsely per good.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T = f64> {
    n_bidders: usize,
    by_good: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Allocation<T> {
    pub fn empty(n_bidders: usize, n_goods: usize) -> Self {
        Self {
            n_bidders,
            by_good: vec![Vec::new(); n_goods],
        }
    }

    pub fn from_entries<I>(n_bidders: usize, n_goods: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut x = Self::empty(n_bidders, n_goods);
        for (i, j, s) in entries {
            if i >= n_bidders || j >= n_goods {
                return Err(Error::Dimension(format!(
                    "allocation entry ({i}, {j}) outside {n_bidders}x{n_goods}"
                )));
            }
            if !s.is_finite_value() {
                return Err(Error::NonFinite(format!("share of ({i}, {j})")));
            }
            x.add(i, j, s);
        }
        Ok(x)
    }

    pub fn n_bidders(&self) -> usize {
        self.n_bidders
    }

    pub fn n_goods(&self) -> usize {
        self.by_good.len()
    }

    /// Adds `share` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, share: T) {
        let col = &mut self.by_good[j];
        match col.binary_search_by_key(&i, |e| e.0) {
            Ok(k) => col[k].1 = col[k].1.clone() + share,
            Err(k) => col.insert(k, (i, share)),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, share: T) {
        let col = &mut self.by_good[j];
        match col.binary_search_by_key(&i, |e| e.0) {
            Ok(k) => col[k].1 = share,
            Err(k) => col.insert(k, (i, share)),
        }
    }

    pub fn share(&self, i: usize, j: usize) -> T {
        let col = &self.by_good[j];
        col.binary_search_by_key(&i, |e| e.0)
            .map(|k| col[k].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    /// Nonzero shares of good `j`, sorted by bidder.
    pub fn good(&self, j: usize) -> &[(usize, T)] {
        &self.by_good[j]
    }

    pub fn good_total(&self, j: usize) -> T {
        self.by_good[j]
            .iter()
            .fold(T::zero(), |acc, e| acc + e.1.clone())
    }

    /// All stored entries ordered by good then bidder.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        self.by_good
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |(i, s)| (*i, j, s)))
    }

    /// Drops explicit zeros.
    pub fn pruned(mut self) -> Self {
        for col in &mut self.by_good {
            col.retain(|e| !e.1.is_zero());
        }
        self
    }

    pub fn scaled(&self, factor: &T) -> Self {
        self.map(|s| s.clone() * factor.clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Allocation<U> {
        Allocation {
            n_bidders: self.n_bidders,
            by_good: self
                .by_good
                .iter()
                .map(|col| col.iter().map(|(i, s)| (*i, f(s))).collect())
                .collect(),
        }
    }
}

/// One price per good.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PriceVector<T = f64>(pub Vec<T>);

impl<T: Scalar> PriceVector<T> {
    pub fn zeros(n_goods: usize) -> Self {
        Self(vec![T::zero(); n_goods])
    }

    pub fn get(&self, j: usize) -> &T {
        &self.0[j]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> PriceVector<U> {
        PriceVector(self.0.iter().map(f).collect())
    }
}

/// Multipliers, allocation and prices proposed as an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCandidate<T = f64> {
    pub alpha: MultiplierProfile<T>,
    pub allocation: Allocation<T>,
    pub prices: PriceVector<T>,
}

/// JSON form of a candidate (`alpha`, sparse `allocation`, `prices`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateFile {
    pub alpha: Vec<f64>,
    pub allocation: Vec<ShareEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShareEntry {
    pub bidder: usize,
    pub good: usize,
    pub share: f64,
}

impl EquilibriumCandidate<f64> {
    pub fn to_file(&self) -> CandidateFile {
        CandidateFile {
            alpha: self.alpha.0.clone(),
            allocation: self
                .allocation
                .entries()
                .map(|(i, j, s)| ShareEntry {
                    bidder: i,
                    good: j,
                    share: *s,
                })
                .collect(),
            prices: Some(self.prices.0.clone()),
        }
    }
}

impl CandidateFile {
    /// Converts to typed form; prices default to zero when absent.
    pub fn into_parts(
        self,
        n_bidders: usize,
        n_goods: usize,
    ) -> Result<(MultiplierProfile, Allocation, Option<PriceVector>)> {
        let alloc = Allocation::from_entries(
            n_bidders,
            n_goods,
            self.allocation.iter().map(|e| (e.bidder, e.good, e.share)),
        )?;
        let prices = match self.prices {
            Some(p) if p.len() != n_goods => {
                return Err(Error::Dimension(format!(
                    "{} prices for {n_goods} goods",
                    p.len()
                )))
            }
            other => other.map(PriceVector),
        };
        Ok((MultiplierProfile(self.alpha), alloc, prices))
    }
}
