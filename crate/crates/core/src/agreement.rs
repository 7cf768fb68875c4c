//! Universal R agreement between observed and predicted values, with a
//! t-based lower confidence bound.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AgreementScore {
    pub delta: f64,
    pub mu: f64,
    pub r: f64,
    pub moe_delta: f64,
    pub r_lower: f64,
    pub n: usize,
    pub sigma: f64,
    pub t_critical: f64,
    /// Set when every observed and predicted value coincides (mu = 0).
    pub degenerate: bool,
}

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn population_variance(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

/// Mean squared disagreement `delta` and the expected squared disagreement
/// over all cross pairs `mu`.
///
/// `mu` uses the identity `(1/n^2) sum_i sum_j (yhat_j - y_i)^2 =
/// var(y) + var(yhat) + (mean(yhat) - mean(y))^2`.
pub fn delta_mu(y: &[f64], yhat: &[f64]) -> Result<(f64, f64)> {
    check_pair(y, yhat)?;
    let delta = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (b - a).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    let my = mean(y);
    let mh = mean(yhat);
    let mu = population_variance(y, my) + population_variance(yhat, mh) + (mh - my).powi(2);
    Ok((delta, mu))
}

fn is_degenerate(y: &[f64], yhat: &[f64], mu: f64) -> bool {
    let scale = y
        .iter()
        .chain(yhat)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    mu <= (1e-12 * scale).powi(2)
}

/// `1 - delta / mu`; a degenerate pair (mu = 0) scores 0.
pub fn universal_r(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let (delta, mu) = delta_mu(y, yhat)?;
    if is_degenerate(y, yhat, mu) {
        return Ok(0.0);
    }
    Ok(1.0 - delta / mu)
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

fn t_pdf(t: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let ln_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - (df + 1.0) / 2.0 * (1.0 + t * t / df).ln()).exp()
}

fn invert_t(df: f64, p: f64) -> f64 {
    // Bracket, then Newton steps kept inside the bracket.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_cdf(t, df) - p;
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let step = f / t_pdf(t, df);
        let mut next = t - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-12 * t.max(1.0) || hi - lo <= 1e-13 * hi.max(1.0) {
            return next;
        }
        t = next;
    }
    t
}

fn quantile_cache() -> &'static Mutex<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Two-sided critical value: `P(|T_df| <= t) = confidence`.
pub fn t_quantile(df: u64, confidence: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidArgument("degrees of freedom must be >= 1".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let key = (df, confidence.to_bits());
    if let Some(&t) = quantile_cache().lock().unwrap().get(&key) {
        return Ok(t);
    }
    let t = invert_t(df as f64, 0.5 * (1.0 + confidence));
    quantile_cache().lock().unwrap().insert(key, t);
    Ok(t)
}

/// Full agreement score with the lower bound `1 - (delta + MOE) / mu`,
/// where `MOE = t_{n-1} * sigma / sqrt(n)` and `sigma` is the sample std of
/// the per-point squared residuals.
pub fn r_lower_bound(y: &[f64], yhat: &[f64], confidence: f64) -> Result<AgreementScore> {
    check_pair(y, yhat)?;
    let n = y.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let t_critical = t_quantile((n - 1) as u64, confidence)?;
    let (delta, mu) = delta_mu(y, yhat)?;
    let sq: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| (b - a).powi(2)).collect();
    let sq_mean = mean(&sq);
    let sigma = (sq.iter().map(|v| (v - sq_mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let moe_delta = t_critical * sigma / (n as f64).sqrt();
    if is_degenerate(y, yhat, mu) {
        return Ok(AgreementScore {
            delta,
            mu,
            r: 0.0,
            moe_delta,
            r_lower: 0.0,
            n,
            sigma,
            t_critical,
            degenerate: true,
        });
    }
    Ok(AgreementScore {
        delta,
        mu,
        r: 1.0 - delta / mu,
        moe_delta,
        r_lower: 1.0 - (delta + moe_delta) / mu,
        n,
        sigma,
        t_critical,
        degenerate: false,
    })
}
