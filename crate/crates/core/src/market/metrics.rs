use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{Allocation, MarketConfig, PriceVector, ValuationMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderMetrics {
    pub bidder: usize,
    pub value: f64,
    pub spend: f64,
    /// `value / spend`; `None` when spend is zero.
    pub roas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub network: String,
    pub revenue: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketMetrics {
    pub revenue: f64,
    pub welfare: f64,
    pub bidders: Vec<BidderMetrics>,
    /// Sorted by label; empty without network labels.
    pub networks: Vec<NetworkMetrics>,
}

/// Column order of [`MarketMetrics::to_csv`].
pub const METRICS_CSV_HEADER: &str = "scope,id,value,spend,roas,revenue,welfare";

impl MarketMetrics {
    /// One `market` row, one `bidder` row per bidder, one `network` row per
    /// label. Unused cells are empty; an undefined ROAS is empty too.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_CSV_HEADER);
        out.push('\n');
        let _ = writeln!(out, "market,,,,,{},{}", self.revenue, self.welfare);
        for b in &self.bidders {
            let roas = b.roas.map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(out, "bidder,{},{},{},{},,", b.bidder, b.value, b.spend, roas);
        }
        for nw in &self.networks {
            let _ = writeln!(out, "network,{},,,,{},{}", nw.network, nw.revenue, nw.welfare);
        }
        out
    }
}

/// Revenue, welfare and per-bidder accounting of an allocation at prices `p`.
///
/// Sums run in ascending good order so results are reproducible bit for bit.
pub fn market_metrics<T: Scalar>(
    v: &ValuationMatrix<T>,
    x: &Allocation<T>,
    p: &PriceVector<T>,
    cfg: &MarketConfig<T>,
) -> MarketMetrics {
    let n = v.n_bidders();
    let mut value = vec![T::zero(); n];
    let mut spend = vec![T::zero(); n];
    let mut revenue = T::zero();
    let mut welfare = T::zero();
    let mut networks: BTreeMap<String, (T, T)> = BTreeMap::new();
    for j in 0..x.n_goods() {
        let pj = p.get(j).clone();
        let mut good_rev = T::zero();
        let mut good_wel = T::zero();
        for (i, share) in x.good(j) {
            let vij = v.value(*i, j);
            let pay = share.clone() * pj.clone();
            let got = share.clone() * vij;
            value[*i] = value[*i].clone() + got.clone();
            spend[*i] = spend[*i].clone() + pay.clone();
            good_rev = good_rev + pay;
            good_wel = good_wel + got;
        }
        revenue = revenue + good_rev.clone();
        welfare = welfare + good_wel.clone();
        if let Some(labels) = &cfg.networks {
            let e = networks
                .entry(labels[j].clone())
                .or_insert_with(|| (T::zero(), T::zero()));
            e.0 = e.0.clone() + good_rev;
            e.1 = e.1.clone() + good_wel;
        }
    }
    let bidders = (0..n)
        .map(|i| {
            let vf = value[i].to_f64_lossy();
            let sf = spend[i].to_f64_lossy();
            BidderMetrics {
                bidder: i,
                value: vf,
                spend: sf,
                roas: spend[i].gt_zero().then(|| vf / sf),
            }
        })
        .collect();
    MarketMetrics {
        revenue: revenue.to_f64_lossy(),
        welfare: welfare.to_f64_lossy(),
        bidders,
        networks: networks
            .into_iter()
            .map(|(network, (r, w))| NetworkMetrics {
                network,
                revenue: r.to_f64_lossy(),
                welfare: w.to_f64_lossy(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_revenue_and_welfare() {
        let v = ValuationMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let x = Allocation::from_entries(2, 2, [(0, 0, 1.0), (0, 1, 0.5), (1, 1, 0.5)]).unwrap();
        let mut cfg = MarketConfig::default();
        cfg.networks = Some(vec!["b".into(), "a".into()]);
        let m = market_metrics(&v, &x, &PriceVector(vec![0.0, 3.0]), &cfg);
        assert_eq!(m.revenue, 3.0);
        assert_eq!(m.welfare, 3.0);
        assert_eq!(m.bidders[0].roas, Some(1.0));
        assert_eq!(m.networks[0].network, "a");
        assert_eq!(m.networks[0].revenue, 3.0);
        assert_eq!(m.networks[1].welfare, 1.0);
        let csv = m.to_csv();
        assert!(csv.starts_with(METRICS_CSV_HEADER));
        assert!(csv.contains("network,a,,,,3,2"));
    }

    #[test]
    fn empty_allocation_is_zero() {
        let v = ValuationMatrix::from_dense(&[vec![1.0]]).unwrap();
        let m = market_metrics(
            &v,
            &Allocation::empty(1, 1),
            &PriceVector(vec![0.0]),
            &MarketConfig::default(),
        );
        assert_eq!((m.revenue, m.welfare), (0.0, 0.0));
        assert_eq!(m.bidders[0].roas, None);
    }
}
