//! Statistical primitives: quantile group assignment, relative effect size,
//! Welch's two-sample t-test, and the two-sample Kolmogorov-Smirnov test.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("sample contains NaN")]
    NotComparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WelchT,
    KsTwoSample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n_a: usize,
    pub n_b: usize,
    /// Set when both samples were constant and equal, where the test is
    /// meaningless and p = 1 by convention.
    pub degenerate: bool,
}

/// Partition units into `k` near-equal groups by ascending value using
/// nearest-rank cutoffs. Units whose value ties a boundary cutoff all go to
/// the lower group, so assignment is purely value-based and deterministic.
/// Returned groups hold indices into `values`.
pub fn quantile_groups(values: &[f64], k: usize) -> Result<Vec<Vec<usize>>, StatsError> {
    if k < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: k });
    }
    if values.len() < k {
        return Err(StatsError::TooFewValues {
            needed: k,
            got: values.len(),
        });
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(StatsError::NotComparable);
    }
    let n = values.len();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Upper cutoff value of groups 1..k-1 (group i spans (cut[i-1], cut[i]]).
    let cuts: Vec<f64> = (1..k)
        .map(|i| sorted[((i * n) as f64 / k as f64).ceil() as usize - 1])
        .collect();
    let mut groups = vec![Vec::new(); k];
    for (idx, &v) in values.iter().enumerate() {
        let g = cuts.partition_point(|&c| c < v);
        groups[g].push(idx);
    }
    Ok(groups)
}

/// Percent change of the treatment mean relative to the control mean.
/// `None` when the control mean is not positive.
pub fn relative_delta(imp_control: f64, imp_treatment: f64) -> Option<f64> {
    if imp_control <= 0.0 {
        return None;
    }
    Some(100.0 * (imp_treatment - imp_control) / imp_control)
}

fn mean_and_variance(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let ss: f64 = sample.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Welch's unequal-variance t-test, two-sided.
///
/// The p-value uses the Student-t distribution function via the regularized
/// incomplete beta. Samples that are constant and identical on both sides
/// yield t = 0, p = 1, flagged degenerate; constant samples with different
/// means yield p = 0.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<TestResult, StatsError> {
    if sample_a.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: sample_a.len(),
        });
    }
    if sample_b.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: sample_b.len(),
        });
    }
    if sample_a.iter().chain(sample_b).any(|v| v.is_nan()) {
        return Err(StatsError::NotComparable);
    }
    let (mean_a, var_a) = mean_and_variance(sample_a);
    let (mean_b, var_b) = mean_and_variance(sample_b);
    let n_a = sample_a.len() as f64;
    let n_b = sample_b.len() as f64;
    let se2 = var_a / n_a + var_b / n_b;
    if se2 == 0.0 {
        let equal = mean_a == mean_b;
        return Ok(TestResult {
            statistic: if equal {
                0.0
            } else if mean_a > mean_b {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            p_value: if equal { 1.0 } else { 0.0 },
            method: TestMethod::WelchT,
            n_a: sample_a.len(),
            n_b: sample_b.len(),
            degenerate: equal,
        });
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    // Welch-Satterthwaite degrees of freedom.
    let df = se2 * se2
        / ((var_a / n_a) * (var_a / n_a) / (n_a - 1.0)
            + (var_b / n_b) * (var_b / n_b) / (n_b - 1.0));
    let p = student_t_two_sided_p(t, df);
    Ok(TestResult {
        statistic: t,
        p_value: p,
        method: TestMethod::WelchT,
        n_a: sample_a.len(),
        n_b: sample_b.len(),
        degenerate: false,
    })
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    statrs::function::beta::beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// D is the exact supremum distance between the two empirical distribution
/// functions. The p-value uses the asymptotic Kolmogorov distribution at
/// `sqrt(n*m/(n+m)) * D`.
pub fn ks_two_sample(sample_a: &[f64], sample_b: &[f64]) -> Result<TestResult, StatsError> {
    if sample_a.is_empty() {
        return Err(StatsError::TooFewValues { needed: 1, got: 0 });
    }
    if sample_b.is_empty() {
        return Err(StatsError::TooFewValues { needed: 1, got: 0 });
    }
    if sample_a.iter().chain(sample_b).any(|v| v.is_nan()) {
        return Err(StatsError::NotComparable);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        if gap > d {
            d = gap;
        }
    }
    let en = ((n as f64 * m as f64) / (n as f64 + m as f64)).sqrt();
    let p = kolmogorov_sf(en * d);
    Ok(TestResult {
        statistic: d,
        p_value: p,
        method: TestMethod::KsTwoSample,
        n_a: n,
        n_b: m,
        degenerate: false,
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
///
/// The alternating series converges fast for x above ~1; below that the
/// Jacobi-theta form of the CDF is used instead, which converges fast for
/// small x.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        let factor = (2.0 * std::f64::consts::PI).sqrt() / x;
        let w = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut cdf = 0.0;
        for k in 0..20 {
            let odd = (2 * k + 1) as f64;
            let term = (-odd * odd * w).exp();
            cdf += term;
            if term < 1e-18 {
                break;
            }
        }
        (1.0 - factor * cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        let mut sign = 1.0;
        for k in 1..=20 {
            let kk = (k * k) as f64;
            let term = (-2.0 * kk * x * x).exp();
            sf += sign * term;
            sign = -sign;
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}
