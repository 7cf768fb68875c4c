//! Centered second-order statistics of a design matrix and response.
//!
//! Every linear fit in the crate (VIF, Lasso, OLS, held-out error) only
//! needs these sums, so a neighborhood is reduced once and each model is
//! then solved in `O(p^2)` per coordinate sweep regardless of row count.

/// Means and centered scatter of `(X, y)` over a set of rows.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Moments {
    pub n: usize,
    pub p: usize,
    pub mean_x: Vec<f64>,
    pub mean_y: f64,
    /// Row-major `p x p`, `sum (x - mean_x)(x - mean_x)^T`.
    pub sxx: Vec<f64>,
    pub sxy: Vec<f64>,
    pub syy: f64,
}

impl Moments {
    /// Two-pass computation over row-major `data` with `p` columns.
    pub fn from_rows(data: &[f64], p: usize, y: &[f64]) -> Self {
        let n = y.len();
        debug_assert_eq!(data.len(), n * p);
        let mut mean_x = vec![0.0; p];
        let mut mean_y = 0.0;
        for (row, yi) in data.chunks_exact(p.max(1)).zip(y) {
            for (m, v) in mean_x.iter_mut().zip(row) {
                *m += v;
            }
            mean_y += yi;
        }
        if n > 0 {
            let inv = 1.0 / n as f64;
            mean_x.iter_mut().for_each(|m| *m *= inv);
            mean_y *= inv;
        }
        let mut sxx = vec![0.0; p * p];
        let mut sxy = vec![0.0; p];
        let mut syy = 0.0;
        let mut centered = vec![0.0; p];
        for (row, yi) in data.chunks_exact(p.max(1)).zip(y) {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean_x) {
                *c = v - m;
            }
            let dy = yi - mean_y;
            for a in 0..p {
                let ca = centered[a];
                let base = a * p;
                for b in a..p {
                    sxx[base + b] += ca * centered[b];
                }
                sxy[a] += ca * dy;
            }
            syy += dy * dy;
        }
        for a in 0..p {
            for b in 0..a {
                sxx[a * p + b] = sxx[b * p + a];
            }
        }
        Self {
            n,
            p,
            mean_x,
            mean_y,
            sxx,
            sxy,
            syy,
        }
    }

    /// Pooled statistics of two disjoint row sets.
    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return other.clone();
        }
        if other.n == 0 {
            return self.clone();
        }
        let p = self.p;
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let w = na * nb / n;
        let dx: Vec<f64> = other
            .mean_x
            .iter()
            .zip(&self.mean_x)
            .map(|(b, a)| b - a)
            .collect();
        let dy = other.mean_y - self.mean_y;
        let mean_x = self
            .mean_x
            .iter()
            .zip(&dx)
            .map(|(a, d)| a + d * nb / n)
            .collect();
        let mut sxx = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..p {
                let k = a * p + b;
                sxx[k] = self.sxx[k] + other.sxx[k] + dx[a] * dx[b] * w;
            }
        }
        let sxy = (0..p)
            .map(|a| self.sxy[a] + other.sxy[a] + dx[a] * dy * w)
            .collect();
        Self {
            n: self.n + other.n,
            p,
            mean_x,
            mean_y: self.mean_y + dy * nb / n,
            sxx,
            sxy,
            syy: self.syy + other.syy + dy * dy * w,
        }
    }

    /// Restriction to a subset of columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> Self {
        let k = cols.len();
        let mut sxx = Vec::with_capacity(k * k);
        for &a in cols {
            for &b in cols {
                sxx.push(self.sxx[a * self.p + b]);
            }
        }
        Self {
            n: self.n,
            p: k,
            mean_x: cols.iter().map(|&c| self.mean_x[c]).collect(),
            mean_y: self.mean_y,
            sxx,
            sxy: cols.iter().map(|&c| self.sxy[c]).collect(),
            syy: self.syy,
        }
    }

    /// Sum of squared errors of `y ~ intercept + x^T beta` on these rows,
    /// where the model was centered at `(center_x, center_y)`.
    pub fn sse(&self, beta: &[f64], center_x: &[f64], center_y: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut shift = self.mean_y - center_y;
        for a in 0..p {
            let ba = beta[a];
            if ba == 0.0 {
                continue;
            }
            lin += ba * self.sxy[a];
            shift -= ba * (self.mean_x[a] - center_x[a]);
            let row = &self.sxx[a * p..(a + 1) * p];
            let mut s = 0.0;
            for (b, &bb) in beta.iter().enumerate() {
                if bb != 0.0 {
                    s += row[b] * bb;
                }
            }
            quad += ba * s;
        }
        (self.syy - 2.0 * lin + quad + self.n as f64 * shift * shift).max(0.0)
    }
}
