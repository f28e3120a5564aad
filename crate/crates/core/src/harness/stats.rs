use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dynamics::stream_rng;
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Bootstrap resamples used unless a caller asks otherwise.
pub const BOOTSTRAP_RESAMPLES: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    Wilson,
    Bootstrap,
}

/// A point estimate with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub method: CiMethod,
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson(successes: usize, n: usize) -> Result<EstimateWithCI> {
    if n == 0 || successes > n {
        return Err(Error::InvalidArgument(format!("bad proportion {successes}/{n}")));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Ok(EstimateWithCI {
        point: p,
        ci_low: (centre - half).max(0.0).min(p),
        ci_high: (centre + half).min(1.0).max(p),
        n,
        method: CiMethod::Wilson,
    })
}

/// Sample mean with a seeded percentile-bootstrap interval.
pub fn bootstrap_mean(samples: &[f64], resamples: usize, seed: u64, stream: u64) -> Result<EstimateWithCI> {
    let n = samples.len();
    if n == 0 || resamples == 0 {
        return Err(Error::InvalidArgument("bootstrap needs samples and resamples".into()));
    }
    let point = samples.iter().sum::<f64>() / n as f64;
    let mut rng = stream_rng(seed, stream);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut acc = 0.0;
            for _ in 0..n {
                acc += samples[rng.random_range(0..n)];
            }
            acc / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let pick = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok(EstimateWithCI {
        point,
        ci_low: pick(0.025).min(point),
        ci_high: pick(0.975).max(point),
        n,
        method: CiMethod::Bootstrap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MannKendall {
    pub s: f64,
    pub z: f64,
    /// One-sided p-value against an increasing trend.
    pub p_increasing: f64,
    /// Increasing trend at the 5% level.
    pub increasing: bool,
}

/// Mann-Kendall trend test with tie correction.
pub fn mann_kendall(series: &[f64]) -> Result<MannKendall> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InvalidArgument("Mann-Kendall needs at least 3 points".into()));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (series[j] - series[i]).partial_cmp(&0.0).map_or(0.0, |o| o as i8 as f64);
        }
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut run = 1usize;
    for k in 1..=n {
        if k < n && sorted[k] == sorted[k - 1] {
            run += 1;
        } else {
            let t = run as f64;
            ties += t * (t - 1.0) * (2.0 * t + 5.0);
            run = 1;
        }
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    let z = if var <= 0.0 {
        0.0
    } else if s > 0.0 {
        (s - 1.0) / var.sqrt()
    } else if s < 0.0 {
        (s + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let p_increasing = 1.0 - Normal::standard().cdf(z);
    Ok(MannKendall {
        s,
        z,
        p_increasing,
        increasing: p_increasing < 0.05,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InvalidArgument("OLS needs at least 3 paired points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("regressor has no spread".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        slope_se: (rss / (nf - 2.0) / sxx).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Bernoulli, Distribution};

    #[test]
    fn wilson_known_values() {
        // 0 of 10: upper end z²/(n + z²)
        let e = wilson(0, 10).unwrap();
        assert_eq!(e.point, 0.0);
        assert!((e.ci_high - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-12);
        let e = wilson(50, 100).unwrap();
        assert!((e.ci_low + e.ci_high - 1.0).abs() < 1e-12);
        assert!(wilson(3, 2).is_err());
    }

    #[test]
    fn wilson_calibration() {
        let p = 0.3;
        let mut rng = stream_rng(11, 0);
        let d = Bernoulli::new(p).unwrap();
        let runs = 2000;
        let covered = (0..runs)
            .filter(|_| {
                let k = (0..200).filter(|_| d.sample(&mut rng)).count();
                let e = wilson(k, 200).unwrap();
                e.ci_low <= p && p <= e.ci_high
            })
            .count();
        assert!(covered as f64 / runs as f64 >= 0.93);
    }

    #[test]
    fn bootstrap_is_seeded_and_brackets() {
        let xs: Vec<f64> = (0..500).map(|k| (k % 17) as f64).collect();
        let a = bootstrap_mean(&xs, 200, 3, 1).unwrap();
        let b = bootstrap_mean(&xs, 200, 3, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.point && a.point <= a.ci_high);
        // standard error of the mean is about 4.9/√500 ≈ 0.22
        assert!(a.ci_high - a.ci_low > 0.5 && a.ci_high - a.ci_low < 1.3);
    }

    #[test]
    fn mann_kendall_trends() {
        let up: Vec<f64> = (0..30).map(|k| k as f64).collect();
        assert!(mann_kendall(&up).unwrap().increasing);
        let down: Vec<f64> = up.iter().map(|v| -v).collect();
        assert!(!mann_kendall(&down).unwrap().increasing);
        let flat = vec![1.0; 30];
        let m = mann_kendall(&flat).unwrap();
        assert_eq!(m.s, 0.0);
        assert!(!m.increasing);
        // S for a small hand-counted series: (1,3,2) has pairs +,+,−
        assert_eq!(mann_kendall(&[1.0, 3.0, 2.0]).unwrap().s, 1.0);
    }

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!(f.slope_se < 1e-10);
        assert!(ols(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }
}
