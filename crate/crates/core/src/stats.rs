//! Small statistics toolkit for Monte Carlo checks.

/// Asymptotic Kolmogorov tail `P(K > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.18 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    let nf = n as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f)
    });
    let sq = nf.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d),
        n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ~ intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_reference_values() {
        // classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_accepts_uniform_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_test(&xs, |x| x.clamp(0.0, 1.0));
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn ks_rejects_shifted_sample() {
        let xs: Vec<f64> = (0..1000).map(|i| 0.2 + 0.8 * i as f64 / 1000.0).collect();
        assert!(ks_test(&xs, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.r_squared - 1.0).abs() < 1e-14);
    }
}
