use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::statistics::{Data, Distribution, OrderStatistics};

/// Summary quantiles of a sample; all `None` when empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Quantiles {
    pub count: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub p25: Option<f64>,
    pub median: Option<f64>,
    pub p75: Option<f64>,
    pub p90: Option<f64>,
    pub max: Option<f64>,
}

impl Quantiles {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Quantiles::default();
        }
        let mut data = Data::new(xs.to_vec());
        Quantiles {
            count: xs.len(),
            mean: data.mean(),
            min: Some(data.quantile(0.0)),
            p25: Some(data.quantile(0.25)),
            median: Some(data.quantile(0.5)),
            p75: Some(data.quantile(0.75)),
            p90: Some(data.quantile(0.9)),
            max: Some(data.quantile(1.0)),
        }
    }
}

/// Equal-tailed percentile interval at coverage `level`.
pub fn percentile_interval(xs: &[f64], level: f64) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let mut data = Data::new(xs.to_vec());
    let tail = (1.0 - level) / 2.0;
    Some((data.quantile(tail), data.quantile(1.0 - tail)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    StudentT,
    Normal,
    /// Zero spread: significant exactly when the mean is nonzero.
    Degenerate,
}

/// Test of zero mean for a sample of per-run differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationTest {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub significant: bool,
    pub method: TestMethod,
}

/// Runs below this count use the normal approximation.
pub const MIN_T_SAMPLES: usize = 3;

/// Two-sided test that the mean of `diffs` is zero at level `alpha`; paired
/// two-sample comparisons pass their per-run differences.
pub fn paired_location_test(diffs: &[f64], alpha: f64) -> LocationTest {
    let n = diffs.len();
    if n == 0 {
        return LocationTest {
            n,
            mean: 0.0,
            std_error: 0.0,
            p_value: 1.0,
            significant: false,
            method: TestMethod::Degenerate,
        };
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let se = (var / n as f64).sqrt();
    if !(se > 0.0) {
        let p_value = if mean == 0.0 { 1.0 } else { 0.0 };
        return LocationTest {
            n,
            mean,
            std_error: 0.0,
            p_value,
            significant: p_value < alpha,
            method: TestMethod::Degenerate,
        };
    }
    let stat = (mean / se).abs();
    let (p_value, method) = if n >= MIN_T_SAMPLES {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive dof");
        (2.0 * (1.0 - t.cdf(stat)), TestMethod::StudentT)
    } else {
        let z = Normal::standard();
        (2.0 * (1.0 - z.cdf(stat)), TestMethod::Normal)
    };
    LocationTest {
        n,
        mean,
        std_error: se,
        p_value,
        significant: p_value < alpha,
        method,
    }
}

/// `(a - b) / b`, or `a - b` when `b` is zero.
pub fn relative_delta(a: f64, b: f64) -> f64 {
    if b != 0.0 {
        (a - b) / b
    } else {
        a - b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_small_sample() {
        let q = Quantiles::of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(q.count, 5);
        assert_eq!(q.median, Some(3.0));
        assert_eq!(q.min, Some(1.0));
        assert_eq!(q.max, Some(5.0));
        assert_eq!(q.mean, Some(3.0));
        assert_eq!(Quantiles::of(&[]).median, None);
    }

    #[test]
    fn t_test_matches_reference() {
        // mean 1, variance 4/3, n 4: t = sqrt 3 on 3 dof
        let d = [0.0, 0.0, 2.0, 2.0];
        let r = paired_location_test(&d, 0.05);
        assert!((r.std_error - (4.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        let t = 1.0 / r.std_error;
        assert!((t - 1.7320508).abs() < 1e-6);
        assert!((r.p_value - 0.18169).abs() < 1e-4, "{}", r.p_value);
        assert!(!r.significant);
        assert_eq!(r.method, TestMethod::StudentT);
    }

    #[test]
    fn small_samples_fall_back_to_normal() {
        let r = paired_location_test(&[1.0, 3.0], 0.05);
        assert_eq!(r.method, TestMethod::Normal);
        // z = 2 / 1 = 2, p = 0.0455
        assert!((r.p_value - 0.04550).abs() < 1e-4);
        assert!(r.significant);
    }

    #[test]
    fn degenerate_samples() {
        assert!(!paired_location_test(&[0.0; 5], 0.05).significant);
        assert!(paired_location_test(&[0.5; 5], 0.05).significant);
        assert!(!paired_location_test(&[], 0.05).significant);
    }

    #[test]
    fn relative_delta_fallback() {
        assert_eq!(relative_delta(3.0, 2.0), 0.5);
        assert_eq!(relative_delta(0.25, 0.0), 0.25);
    }
}
