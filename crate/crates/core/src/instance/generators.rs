use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::ValuationMatrix;

use super::rng::{cell_rng, good_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueDistribution {
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// Lognormal with location 0 and scale 1.
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Complete,
    Sampled,
    Correlated,
    AdsideStochastic,
}

/// Parameters of a seeded synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    /// Goods; for the ad-side family, episodes times auctions per episode.
    pub m: usize,
    #[serde(default = "default_distribution")]
    pub distribution: ValueDistribution,
    /// Correlated family only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Ad-side family only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auctions_per_episode: Option<usize>,
    pub seed: u64,
}

fn default_distribution() -> ValueDistribution {
    ValueDistribution::Uniform01
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<ValuationMatrix> {
        match self.family {
            Family::Complete => gen_complete(self.n, self.m, self.distribution, self.seed),
            Family::Sampled => gen_sampled(self.n, self.m, self.distribution, self.seed),
            Family::Correlated => {
                let sigma = self
                    .sigma
                    .ok_or_else(|| Error::Invalid("correlated family needs sigma".into()))?;
                gen_correlated(self.n, self.m, sigma, self.seed)
            }
            Family::AdsideStochastic => {
                let per = self.auctions_per_episode.unwrap_or(self.m);
                if per == 0 || self.m % per != 0 {
                    return Err(Error::Invalid(
                        "goods must be a whole number of episodes".into(),
                    ));
                }
                gen_adside_stochastic(self.n, self.m / per, per, self.seed)?.to_matrix()
            }
        }
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Invalid(format!("need at least 2 bidders, got {n}")));
    }
    if m < 1 {
        return Err(Error::Invalid("need at least 1 good".into()));
    }
    if n > u32::MAX as usize - 1 {
        return Err(Error::Invalid("too many bidders".into()));
    }
    Ok(())
}

fn draw(dist: ValueDistribution, rng: &mut impl Rng) -> f64 {
    match dist {
        ValueDistribution::Uniform01 => rng.random::<f64>(),
        ValueDistribution::Lognormal => LogNormal::new(0.0, 1.0).expect("valid").sample(rng),
    }
}

fn dense_columns(
    n: usize,
    m: usize,
    cell: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<Vec<f64>> {
    (0..m)
        .into_par_iter()
        .map(|j| (0..n).map(|i| cell(i, j)).collect())
        .collect()
}

fn from_columns(n: usize, cols: Vec<Vec<f64>>) -> Result<ValuationMatrix> {
    let m = cols.len();
    let entries = cols
        .into_iter()
        .enumerate()
        .flat_map(|(j, col)| col.into_iter().enumerate().map(move |(i, x)| (i, j, x)));
    ValuationMatrix::from_triplets(n, m, entries)
}

/// Every bidder values every good, i.i.d. from `dist`.
pub fn gen_complete(
    n: usize,
    m: usize,
    dist: ValueDistribution,
    seed: u64,
) -> Result<ValuationMatrix> {
    check_sizes(n, m)?;
    let cols = dense_columns(n, m, |i, j| {
        let mut rng = cell_rng(seed, j as u64, i as u32);
        draw(dist, &mut rng)
    });
    from_columns(n, cols)
}

/// Bidders dropped from good `j`: `k ~ U{0..n-2}`, then `k` distinct bidders.
fn dropped(seed: u64, j: usize, n: usize, mu: Option<&mut f64>) -> Vec<bool> {
    let mut rng = good_rng(seed, j as u64);
    if let Some(mu) = mu {
        *mu = rng.random::<f64>();
    }
    let k = rng.random_range(0..=n - 2);
    let mut out = vec![false; n];
    for i in sample(&mut rng, n, k) {
        out[i] = true;
    }
    out
}

/// A complete instance with a random number of bidders removed per good;
/// at least two bidders remain on every good.
pub fn gen_sampled(
    n: usize,
    m: usize,
    dist: ValueDistribution,
    seed: u64,
) -> Result<ValuationMatrix> {
    check_sizes(n, m)?;
    let cols = (0..m)
        .into_par_iter()
        .map(|j| {
            let drop = dropped(seed, j, n, None);
            (0..n)
                .map(|i| {
                    if drop[i] {
                        0.0
                    } else {
                        draw(dist, &mut cell_rng(seed, j as u64, i as u32))
                    }
                })
                .collect()
        })
        .collect();
    from_columns(n, cols)
}

/// Good-level mean `mu_j ~ U[0, 1]`, values `max(0, N(mu_j, sigma^2))`, then
/// the sampled dropping step.
///
/// Truncation can zero out kept bidders; a good left with fewer than two
/// positive values redraws its kept cells (continuing each cell's stream)
/// until two are positive.
pub fn gen_correlated(n: usize, m: usize, sigma: f64, seed: u64) -> Result<ValuationMatrix> {
    check_sizes(n, m)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Invalid(format!("sigma must be positive, got {sigma}")));
    }
    let cols = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut mu = 0.0;
            let drop = dropped(seed, j, n, Some(&mut mu));
            let normal = Normal::new(mu, sigma).expect("positive sigma");
            let mut rngs: Vec<_> = (0..n)
                .map(|i| (!drop[i]).then(|| cell_rng(seed, j as u64, i as u32)))
                .collect();
            loop {
                let col: Vec<f64> = rngs
                    .iter_mut()
                    .map(|r| r.as_mut().map_or(0.0, |r| normal.sample(r).max(0.0)))
                    .collect();
                if col.iter().filter(|x| **x > 0.0).count() >= 2 {
                    return col;
                }
            }
        })
        .collect();
    from_columns(n, cols)
}

/// Seeded ad-side stream: `n` bidders and `episodes * auctions_per_episode`
/// goods indexed `(episode, slot)`.
///
/// Cell `(i, j)` draws `v = min(|X|, 1)` with `X ~ N(0, 0.1^2)` and then a
/// Bernoulli(`v`) realized value, both from the cell's own stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdSideStream {
    pub n: usize,
    pub episodes: usize,
    pub auctions_per_episode: usize,
    pub seed: u64,
}

/// One episode of the ad-side stream, stored slot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub n: usize,
    /// `values[slot * n + bidder]`.
    pub values: Vec<f64>,
    /// Whether the bidder would receive a conversion on winning.
    pub realized: Vec<bool>,
}

impl Episode {
    pub fn slots(&self) -> usize {
        self.values.len() / self.n.max(1)
    }

    pub fn value(&self, slot: usize, bidder: usize) -> f64 {
        self.values[slot * self.n + bidder]
    }

    pub fn realized(&self, slot: usize, bidder: usize) -> bool {
        self.realized[slot * self.n + bidder]
    }
}

pub const ADSIDE_SIGMA: f64 = 0.1;

pub fn gen_adside_stochastic(
    n: usize,
    episodes: usize,
    auctions_per_episode: usize,
    seed: u64,
) -> Result<AdSideStream> {
    if n == 0 || episodes == 0 || auctions_per_episode == 0 {
        return Err(Error::Invalid("ad-side counts must be at least 1".into()));
    }
    Ok(AdSideStream {
        n,
        episodes,
        auctions_per_episode,
        seed,
    })
}

impl AdSideStream {
    pub fn goods(&self) -> usize {
        self.episodes * self.auctions_per_episode
    }

    pub fn cell(&self, good: usize, bidder: usize) -> (f64, bool) {
        let mut rng = cell_rng(self.seed, good as u64, bidder as u32);
        let x: f64 = Normal::new(0.0, ADSIDE_SIGMA).expect("valid").sample(&mut rng);
        let v = x.abs().min(1.0);
        let hit = rng.random::<f64>() < v;
        (v, hit)
    }

    pub fn episode(&self, e: usize) -> Episode {
        let per = self.auctions_per_episode;
        let n = self.n;
        let cells: Vec<(f64, bool)> = (0..per)
            .into_par_iter()
            .flat_map_iter(|s| (0..n).map(move |i| (e * per + s, i)))
            .map(|(j, i)| self.cell(j, i))
            .collect();
        let (values, realized) = cells.into_iter().unzip();
        Episode {
            n,
            values,
            realized,
        }
    }

    pub fn to_matrix(&self) -> Result<ValuationMatrix> {
        let n = self.n;
        let cols = dense_columns(n, self.goods(), |i, j| self.cell(j, i).0);
        from_columns(n, cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_is_dense_unit_interval_and_deterministic() {
        let a = gen_complete(10, 14, ValueDistribution::Uniform01, 1).unwrap();
        assert_eq!(a.nnz(), 140);
        assert!(a.triplets().all(|(_, _, v)| *v > 0.0 && *v <= 1.0));
        assert_eq!(a, gen_complete(10, 14, ValueDistribution::Uniform01, 1).unwrap());
        assert_ne!(a, gen_complete(10, 14, ValueDistribution::Uniform01, 2).unwrap());
    }

    #[test]
    fn lognormal_entries_are_positive() {
        let a = gen_complete(2, 1, ValueDistribution::Lognormal, 7).unwrap();
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn sampled_keeps_two_bidders() {
        for seed in 0..20 {
            let a = gen_sampled(6, 30, ValueDistribution::Uniform01, seed).unwrap();
            assert!((0..30).all(|j| a.good(j).len() >= 2));
        }
        let two = gen_sampled(2, 50, ValueDistribution::Lognormal, 3).unwrap();
        assert_eq!(two.nnz(), 100);
    }

    #[test]
    fn correlated_is_nonnegative_and_sampled() {
        let a = gen_correlated(10, 14, 1.0, 5).unwrap();
        assert!((0..14).all(|j| a.good(j).len() >= 2));
        assert!(a.triplets().all(|(_, _, v)| *v > 0.0));
        assert_eq!(a, gen_correlated(10, 14, 1.0, 5).unwrap());
        assert!(gen_correlated(10, 14, 0.0, 5).is_err());
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(gen_complete(1, 3, ValueDistribution::Uniform01, 0).is_err());
        assert!(gen_sampled(3, 0, ValueDistribution::Uniform01, 0).is_err());
    }

    #[test]
    fn adside_values_clamped_and_reproducible() {
        let s = gen_adside_stochastic(5, 2, 10, 9).unwrap();
        let e = s.episode(1);
        assert_eq!(e.slots(), 10);
        assert!(e.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(e, s.episode(1));
        assert_eq!(e.value(3, 2), s.cell(13, 2).0);
    }
}
