use crate::error::{Error, Result};
use crate::io::{csv_text, fmt_f64};

/// Sample moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) standard deviation.
    pub std: f64,
    /// `m3 / m2^1.5`; `None` for fewer than 4 samples or zero spread.
    pub skewness: Option<f64>,
    /// `m4 / m2^2 - 3`; `None` under the same conditions as skewness.
    pub ex_kurtosis: Option<f64>,
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::input(format!(
            "summary needs at least 2 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in samples {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    // spread below rounding noise of the mean counts as none
    let degenerate = m2 <= (f64::EPSILON * mean.abs()).powi(2) || m2 == 0.0;
    let (skewness, ex_kurtosis) = if n < 4 || degenerate {
        (None, None)
    } else {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    };
    Ok(Summary {
        n,
        mean,
        std: if degenerate { 0.0 } else { std },
        skewness,
        ex_kurtosis,
    })
}

/// Fraction of samples `>= y_target`; 0 for an empty slice.
pub fn empirical_reliability(samples: &[f64], y_target: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|v| **v >= y_target).count() as f64 / samples.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub width: f64,
    pub count: usize,
    /// `count / (n * width)`.
    pub density: f64,
}

/// Equal-width histogram over `[min, max]` of the samples, normalized to
/// unit area. If every sample is equal the range becomes `[v - 0.5, v + 0.5]`.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins < 2 {
        return Err(Error::input(format!(
            "histogram needs at least 2 bins, got {bins}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::input("histogram of an empty sample"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("histogram samples must be finite"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            center: lo + (k as f64 + 0.5) * width,
            width,
            count,
            density: count as f64 / (n * width),
        })
        .collect())
}

/// Two-column sample file: `index,value`.
pub fn samples_csv(samples: &[f64]) -> Result<String> {
    csv_text(
        &["index", "value"],
        samples
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]),
    )
}

/// Histogram file: `bin_center,density`.
pub fn histogram_csv(bins: &[HistogramBin]) -> Result<String> {
    csv_text(
        &["bin_center", "density"],
        bins.iter()
            .map(|b| vec![fmt_f64(b.center), fmt_f64(b.density)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    #[test]
    fn constant_samples_have_no_shape() {
        let s = summarize(&[2.5; 10]).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.skewness, None);
        assert_eq!(s.ex_kurtosis, None);
    }

    #[test]
    fn normal_and_exponential_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let z: Vec<f64> = (0..1_000_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let s = summarize(&z).unwrap();
        assert!(s.skewness.unwrap().abs() < 0.01);
        assert!(s.ex_kurtosis.unwrap().abs() < 0.02);
        let e: Vec<f64> = (0..1_000_000).map(|_| Exp1.sample(&mut rng)).collect();
        assert!((summarize(&e).unwrap().skewness.unwrap() - 2.0).abs() < 0.02);
    }

    #[test]
    fn reliability_counts_ties() {
        assert_eq!(empirical_reliability(&[1.0, 2.0, 3.0, 4.0], 2.0), 0.75);
        assert_eq!(empirical_reliability(&[1.0, 2.0], -5.0), 1.0);
    }

    #[test]
    fn histogram_of_equal_values_has_one_occupied_bin() {
        let h = histogram(&[7.0; 50], 5).unwrap();
        assert_eq!(h.iter().filter(|b| b.count > 0).count(), 1);
        let area: f64 = h.iter().map(|b| b.density * b.width).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_histogram_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let u: Vec<f64> = (0..n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let h = histogram(&u, 10).unwrap();
        let area: f64 = h.iter().map(|b| b.density * b.width).sum();
        assert!((area - 1.0).abs() < 1e-9);
        for b in &h {
            let p = b.density * b.width;
            assert!((p - 0.1).abs() < 4.0 * (0.09f64 / n as f64).sqrt(), "{b:?}");
        }
    }
}
