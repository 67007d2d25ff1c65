//! Welch's unequal-variance t-test with the one-sided "greater" alternative.
//!
//! Used to ask whether a treatment arm's per-run metric population sits
//! significantly above a control arm's. The one-sided form matches how the
//! comparisons are reported: a claim that transfer helps, not merely that
//! the arms differ.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    /// Welch–Satterthwaite effective degrees of freedom.
    pub dof: f64,
    /// One-sided p-value: P(T > t) under the null of equal means.
    pub p: f64,
    pub alpha: f64,
    pub significant: bool,
}

pub(crate) fn mean_and_variance(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Tests whether `a` has a greater mean than `b` at level `alpha`.
pub fn welch_t_greater(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::InvalidInput(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    for (name, sample) in [("first", a), ("second", b)] {
        if sample.len() < 2 {
            return Err(Error::DegenerateTest(format!(
                "{name} sample has {} value(s), need at least 2",
                sample.len()
            )));
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value in {name} sample")));
        }
    }
    let (mean_a, var_a) = mean_and_variance(a);
    let (mean_b, var_b) = mean_and_variance(b);
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::DegenerateTest(
            "sample variance is zero; the t statistic is undefined".into(),
        ));
    }

    let na = a.len() as f64;
    let nb = b.len() as f64;
    let sa = var_a / na;
    let sb = var_b / nb;
    let t = (mean_a - mean_b) / (sa + sb).sqrt();
    let dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));

    let p = 1.0 - student_t_cdf(t, dof)?;
    Ok(TTestResult {
        t,
        dof,
        p,
        alpha,
        significant: p < alpha,
    })
}

/// CDF of the standard Student t distribution with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Numeric(format!("t distribution with dof {dof}: {e}")))?;
    Ok(dist.cdf(t))
}
