//! Local linear surrogate: collinearity filter, Lasso selection by
//! contiguous 5-fold CV with the one-standard-error rule, and an OLS refit
//! on the selected support.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};
use crate::moments::Moments;

/// Columns whose VIF exceeds this are dropped, worst first.
pub const VIF_CUTOFF: f64 = 10.0;
pub const CV_FOLDS: usize = 5;
pub const LAMBDA_GRID_LEN: usize = 100;
/// Smallest lambda on the grid, relative to `lambda_max`.
pub const LAMBDA_MIN_RATIO: f64 = 1e-3;
pub const CD_TOLERANCE: f64 = 1e-8;
pub const CD_MAX_SWEEPS: usize = 100_000;

/// R^2 at or above `1 - 1e-10` is treated as exact collinearity.
const VIF_INFINITE: f64 = 1e10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    #[serde(skip)]
    pub index: usize,
    #[serde(rename = "column")]
    pub name: String,
    #[serde(rename = "coefficient")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurrogateModel {
    pub intercept: f64,
    /// Nonzero coefficients in encoded column order.
    pub coefficients: Vec<Coefficient>,
    pub lambda: f64,
    pub neighborhood_size: usize,
    #[serde(skip)]
    pub train_rmse: f64,
    #[serde(skip)]
    pub removed_by_vif: Vec<String>,
}

impl SurrogateModel {
    fn intercept_only(intercept: f64, n: usize, lambda: f64, removed: Vec<String>) -> Self {
        Self {
            intercept,
            coefficients: Vec::new(),
            lambda,
            neighborhood_size: n,
            train_rmse: 0.0,
            removed_by_vif: removed,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .fold(self.intercept, |acc, c| acc + c.value * row[c.index])
    }

    pub fn selected_columns(&self) -> Vec<usize> {
        self.coefficients.iter().map(|c| c.index).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoPath {
    /// Non-increasing grid.
    pub lambdas: Vec<f64>,
    pub cv_mean: Vec<f64>,
    pub cv_std_err: Vec<f64>,
    pub chosen: usize,
}

impl LassoPath {
    pub fn lambda(&self) -> f64 {
        self.lambdas[self.chosen]
    }
}

/// Fold boundaries: with `n = 5q + r`, the first `r` folds hold `q + 1`
/// rows and the rest `q`, all contiguous.
pub fn fold_bounds(n: usize) -> [(usize, usize); CV_FOLDS] {
    let q = n / CV_FOLDS;
    let r = n % CV_FOLDS;
    let mut out = [(0, 0); CV_FOLDS];
    let mut start = 0;
    for (k, slot) in out.iter_mut().enumerate() {
        let len = q + usize::from(k < r);
        *slot = (start, start + len);
        start += len;
    }
    out
}

fn check_xy(m: &EncodedMatrix, y: &[f64]) -> Result<()> {
    if m.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: m.nrows(),
            right: y.len(),
        });
    }
    Ok(())
}

fn singular_tolerance(diag_max: f64) -> f64 {
    1e-12 * diag_max.max(1.0)
}

/// Symmetric pseudo-inverse solve `g beta = c` (minimum-norm on singular
/// systems).
fn solve_symmetric(g: &[f64], c: &[f64]) -> Vec<f64> {
    let k = c.len();
    if k == 0 {
        return Vec::new();
    }
    let gm = DMatrix::from_row_slice(k, k, g);
    let svd = gm.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * k as f64;
    match svd.solve(&DVector::from_column_slice(c), eps) {
        Ok(b) => b.iter().copied().collect(),
        Err(_) => vec![0.0; k],
    }
}

fn vif_values(sxx: &[f64], p: usize, cols: &[usize]) -> Vec<f64> {
    let k = cols.len();
    let diag: Vec<f64> = cols.iter().map(|&c| sxx[c * p + c]).collect();
    let dmax = diag.iter().fold(0.0f64, |m, v| m.max(*v));
    let tiny = singular_tolerance(dmax) * 1e-2;
    let mut out = vec![f64::INFINITY; k];
    for j in 0..k {
        if diag[j] <= tiny {
            continue;
        }
        let others: Vec<usize> = (0..k).filter(|&o| o != j && diag[o] > tiny).collect();
        if others.is_empty() {
            out[j] = 1.0;
            continue;
        }
        // Work on the correlation scale for conditioning.
        let scale: Vec<f64> = others.iter().map(|&o| diag[o].sqrt()).collect();
        let mut g = Vec::with_capacity(others.len() * others.len());
        for (a, &oa) in others.iter().enumerate() {
            for (b, &ob) in others.iter().enumerate() {
                g.push(sxx[cols[oa] * p + cols[ob]] / (scale[a] * scale[b]));
            }
        }
        let sj = diag[j].sqrt();
        let c: Vec<f64> = others
            .iter()
            .enumerate()
            .map(|(a, &o)| sxx[cols[o] * p + cols[j]] / (scale[a] * sj))
            .collect();
        let beta = solve_symmetric(&g, &c);
        let r2: f64 = beta.iter().zip(&c).map(|(b, c)| b * c).sum();
        let vif = 1.0 / (1.0 - r2);
        out[j] = if !(0.0..VIF_INFINITE).contains(&vif) {
            f64::INFINITY
        } else {
            vif.max(1.0)
        };
    }
    out
}

/// All VIFs from one eigendecomposition of the correlation matrix:
/// `VIF_j = (R^-1)_jj = sum_k v_jk^2 / s_k`. A column loading on a null
/// direction is exactly collinear and gets an infinite VIF.
fn vif_values_spectral(sxx: &[f64], p: usize, cols: &[usize]) -> Vec<f64> {
    let k = cols.len();
    let diag: Vec<f64> = cols.iter().map(|&c| sxx[c * p + c]).collect();
    let dmax = diag.iter().fold(0.0f64, |m, v| m.max(*v));
    let tiny = singular_tolerance(dmax) * 1e-2;
    let live: Vec<usize> = (0..k).filter(|&j| diag[j] > tiny).collect();
    let mut out = vec![f64::INFINITY; k];
    if live.len() == 1 {
        out[live[0]] = 1.0;
    }
    if live.len() <= 1 {
        return out;
    }
    let m = live.len();
    let scale: Vec<f64> = live.iter().map(|&j| diag[j].sqrt()).collect();
    let r = DMatrix::from_fn(m, m, |a, b| {
        sxx[cols[live[a]] * p + cols[live[b]]] / (scale[a] * scale[b])
    });
    let eig = r.symmetric_eigen();
    let smax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let null = smax * 1e-12 * m as f64;
    for (a, &j) in live.iter().enumerate() {
        let mut vif = 0.0;
        for (kk, &s) in eig.eigenvalues.iter().enumerate() {
            let v2 = eig.eigenvectors[(a, kk)].powi(2);
            if s <= null {
                if v2 > 1e-12 {
                    vif = f64::INFINITY;
                    break;
                }
            } else {
                vif += v2 / s;
            }
        }
        out[j] = if !(vif.is_finite()) || vif >= VIF_INFINITE {
            f64::INFINITY
        } else {
            vif.max(1.0)
        };
    }
    out
}

/// Iterative VIF elimination on centered scatter. Returns kept column
/// indices (ascending) and removed ones in removal order.
fn vif_select(sxx: &[f64], p: usize) -> (Vec<usize>, Vec<usize>) {
    let mut kept: Vec<usize> = (0..p).collect();
    let mut removed = Vec::new();
    while kept.len() >= 3 {
        let vifs = vif_values_spectral(sxx, p, &kept);
        let mut worst = 0;
        for (j, v) in vifs.iter().enumerate() {
            // ties go to the later column
            if *v >= vifs[worst] {
                worst = j;
            }
        }
        if vifs[worst] > VIF_CUTOFF {
            removed.push(kept.remove(worst));
        } else {
            break;
        }
    }
    (kept, removed)
}

/// Variance inflation factor of every column (infinite for constant or
/// exactly collinear columns).
pub fn variance_inflation_factors(m: &EncodedMatrix) -> Vec<f64> {
    let p = m.ncols();
    let zeros = vec![0.0; m.nrows()];
    let mom = Moments::from_rows(m.values(), p, &zeros);
    let cols: Vec<usize> = (0..p).collect();
    vif_values(&mom.sxx, p, &cols)
}

/// Drops the column with the largest VIF while it exceeds the cut-off.
/// Skipped entirely for fewer than three columns.
pub fn vif_filter(m: &EncodedMatrix) -> Result<(EncodedMatrix, Vec<String>)> {
    if m.ncols() == 0 {
        return Err(Error::AllColumnsRemoved(Vec::new()));
    }
    if m.nrows() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: m.nrows(),
        });
    }
    let p = m.ncols();
    let zeros = vec![0.0; m.nrows()];
    let mom = Moments::from_rows(m.values(), p, &zeros);
    let (kept, removed) = vif_select(&mom.sxx, p);
    let removed: Vec<String> = removed
        .iter()
        .map(|&j| m.column_names()[j].clone())
        .collect();
    if kept.is_empty() {
        return Err(Error::AllColumnsRemoved(removed));
    }
    Ok((m.select_columns(&kept), removed))
}

/// Jumps to the exact minimizer on the current active set with its signs
/// held fixed, `G_AA b = c_A - (lambda/2) s_A`. Rejected (returns false)
/// when the system is not positive definite or a sign would flip.
fn active_set_solve(
    g: &[f64],
    c: &[f64],
    half: f64,
    active: &[usize],
    beta: &mut [f64],
    rho: &mut [f64],
) -> bool {
    let k = active.len();
    if k == 0 {
        return false;
    }
    let p = c.len();
    let gm = DMatrix::from_fn(k, k, |a, b| g[active[a] * p + active[b]]);
    let Some(chol) = gm.cholesky() else {
        return false;
    };
    let rhs = DVector::from_fn(k, |a, _| {
        let j = active[a];
        c[j] - half * beta[j].signum()
    });
    let b = chol.solve(&rhs);
    if active
        .iter()
        .zip(b.iter())
        .any(|(&j, v)| !v.is_finite() || *v == 0.0 || v.signum() != beta[j].signum())
    {
        return false;
    }
    for (&j, &v) in active.iter().zip(b.iter()) {
        let d = v - beta[j];
        if d != 0.0 {
            beta[j] = v;
            let col = &g[j * p..(j + 1) * p];
            for (r, gk) in rho.iter_mut().zip(col) {
                *r -= gk * d;
            }
        }
    }
    true
}

/// Warm-start state: coefficients and the residual correlation
/// `c - g beta`, kept in sync by every update.
struct CdState {
    beta: Vec<f64>,
    rho: Vec<f64>,
}

impl CdState {
    fn new(c: &[f64]) -> Self {
        Self {
            beta: vec![0.0; c.len()],
            rho: c.to_vec(),
        }
    }
}

/// Cyclic coordinate descent for `min ||y0 - X0 b||^2 + lambda ||b||_1` on
/// centered scatter `g = X0^T X0`, `c = X0^T y0`, warm-started from `st`.
fn coordinate_descent(g: &[f64], c: &[f64], lambda: f64, st: &mut CdState) -> Result<usize> {
    let p = c.len();
    let dmax = (0..p).fold(0.0f64, |m, j| m.max(g[j * p + j]));
    let tiny = singular_tolerance(dmax) * 1e-2;
    let half = 0.5 * lambda;
    let CdState { beta, rho } = st;
    let update = |j: usize, beta: &mut [f64], rho: &mut [f64]| -> f64 {
        let gjj = g[j * p + j];
        let old = beta[j];
        let new = if gjj <= tiny {
            0.0
        } else {
            let z = rho[j] + gjj * old;
            let mag = z.abs() - half;
            if mag > 0.0 {
                mag.copysign(z) / gjj
            } else {
                0.0
            }
        };
        let d = new - old;
        if d != 0.0 {
            beta[j] = new;
            let col = &g[j * p..(j + 1) * p];
            for (r, gk) in rho.iter_mut().zip(col) {
                *r -= gk * d;
            }
        }
        d.abs()
    };
    // Full sweeps decide convergence; between them only the active set is
    // cycled until it settles.
    let mut sweeps = 0;
    let mut active = Vec::with_capacity(p);
    while sweeps < CD_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            max_change = max_change.max(update(j, beta, rho));
        }
        if max_change < CD_TOLERANCE {
            return Ok(sweeps);
        }
        active.clear();
        active.extend((0..p).filter(|&j| beta[j] != 0.0));
        if active_set_solve(g, c, half, &active, beta, rho) {
            continue;
        }
        while sweeps < CD_MAX_SWEEPS {
            sweeps += 1;
            let mut max_change = 0.0f64;
            for &j in &active {
                max_change = max_change.max(update(j, beta, rho));
            }
            if max_change < CD_TOLERANCE {
                break;
            }
        }
    }
    Err(Error::NonConvergence {
        sweeps: CD_MAX_SWEEPS,
    })
}

/// Lasso coefficients for `||y - X b||^2 + lambda ||b||_1` with an
/// unpenalized intercept (handled by centering).
pub fn lasso_fit(m: &EncodedMatrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_xy(m, y)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let mom = Moments::from_rows(m.values(), m.ncols(), y);
    let mut st = CdState::new(&mom.sxy);
    coordinate_descent(&mom.sxx, &mom.sxy, lambda, &mut st)?;
    Ok(st.beta)
}

/// Smallest lambda at which every coefficient is zero.
pub fn lambda_max(m: &EncodedMatrix, y: &[f64]) -> Result<f64> {
    check_xy(m, y)?;
    let mom = Moments::from_rows(m.values(), m.ncols(), y);
    Ok(lambda_max_of(&mom))
}

fn lambda_max_of(mom: &Moments) -> f64 {
    2.0 * mom.sxy.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn lambda_grid(lmax: f64) -> Vec<f64> {
    if !(lmax > 0.0) {
        return vec![0.0; LAMBDA_GRID_LEN];
    }
    let ratio = LAMBDA_MIN_RATIO.powf(1.0 / (LAMBDA_GRID_LEN - 1) as f64);
    let mut out = Vec::with_capacity(LAMBDA_GRID_LEN);
    let mut l = lmax;
    for _ in 0..LAMBDA_GRID_LEN {
        out.push(l);
        l *= ratio;
    }
    out
}

fn cv_path(folds: &[Moments], full: &Moments) -> Result<LassoPath> {
    let lambdas = lambda_grid(lambda_max_of(full));
    let mut errors = vec![[0.0; CV_FOLDS]; lambdas.len()];
    for k in 0..CV_FOLDS {
        let train = folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .fold(None::<Moments>, |acc, (_, f)| {
                Some(match acc {
                    None => f.clone(),
                    Some(a) => a.merge(f),
                })
            })
            .expect("at least two folds");
        let held = &folds[k];
        let mut st = CdState::new(&train.sxy);
        for (li, &lambda) in lambdas.iter().enumerate() {
            coordinate_descent(&train.sxx, &train.sxy, lambda, &mut st)?;
            let sse = held.sse(&st.beta, &train.mean_x, train.mean_y);
            errors[li][k] = sse / held.n as f64;
        }
    }
    let f = CV_FOLDS as f64;
    let cv_mean: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / f).collect();
    let cv_std_err: Vec<f64> = errors
        .iter()
        .zip(&cv_mean)
        .map(|(e, m)| {
            let var = e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (f - 1.0);
            (var / f).sqrt()
        })
        .collect();
    let mut best = 0;
    for (i, m) in cv_mean.iter().enumerate() {
        if *m < cv_mean[best] {
            best = i;
        }
    }
    let threshold = cv_mean[best] + cv_std_err[best];
    let chosen = cv_mean
        .iter()
        .position(|m| *m <= threshold)
        .unwrap_or(best);
    Ok(LassoPath {
        lambdas,
        cv_mean,
        cv_std_err,
        chosen,
    })
}

fn fold_moments(data: &[f64], p: usize, y: &[f64]) -> Vec<Moments> {
    fold_bounds(y.len())
        .iter()
        .map(|&(a, b)| Moments::from_rows(&data[a * p..b * p], p, &y[a..b]))
        .collect()
}

/// 5-fold contiguous cross-validation over a 100-point geometric lambda
/// grid, choosing lambda by the one-standard-error rule.
pub fn lasso_cv(m: &EncodedMatrix, y: &[f64]) -> Result<LassoPath> {
    check_xy(m, y)?;
    if y.len() < CV_FOLDS {
        return Err(Error::TooFewSamples {
            needed: CV_FOLDS,
            got: y.len(),
        });
    }
    let folds = fold_moments(m.values(), m.ncols(), y);
    let full = folds[1..].iter().fold(folds[0].clone(), |a, f| a.merge(f));
    cv_path(&folds, &full)
}

/// OLS on the given columns, minimum-norm when singular. Returns
/// `(intercept, coefficients)`.
fn ols_on(mom: &Moments) -> (f64, Vec<f64>) {
    let beta = solve_symmetric(&mom.sxx, &mom.sxy);
    let intercept = mom.mean_y - mom.mean_x.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    (intercept, beta)
}

/// Ordinary least squares with intercept over every column.
pub fn ols_fit(m: &EncodedMatrix, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_xy(m, y)?;
    if y.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(ols_on(&Moments::from_rows(m.values(), m.ncols(), y)))
}

/// Fit on row-major `data` (`p` columns) without copying it into an
/// [`EncodedMatrix`]; the neighborhood scan passes prefixes of a
/// distance-sorted matrix.
pub(crate) fn fit_rows(data: &[f64], p: usize, y: &[f64], names: &[String]) -> Result<SurrogateModel> {
    let n = y.len();
    if n < CV_FOLDS {
        return Err(Error::TooFewSamples {
            needed: CV_FOLDS,
            got: n,
        });
    }
    if y.iter().all(|v| *v == y[0]) {
        return Ok(SurrogateModel::intercept_only(y[0], n, 0.0, Vec::new()));
    }

    let folds = fold_moments(data, p, y);
    let full = folds[1..].iter().fold(folds[0].clone(), |a, f| a.merge(f));
    let (kept, removed) = if p >= 3 {
        vif_select(&full.sxx, p)
    } else {
        ((0..p).collect(), Vec::new())
    };
    let removed: Vec<String> = removed.iter().map(|&j| names[j].clone()).collect();
    if kept.is_empty() {
        return Ok(SurrogateModel::intercept_only(full.mean_y, n, 0.0, removed));
    }

    let kfolds: Vec<Moments> = folds.iter().map(|f| f.select(&kept)).collect();
    let kfull = full.select(&kept);
    let path = cv_path(&kfolds, &kfull)?;

    let mut st = CdState::new(&kfull.sxy);
    for &lambda in &path.lambdas[..=path.chosen] {
        coordinate_descent(&kfull.sxx, &kfull.sxy, lambda, &mut st)?;
    }
    let beta = st.beta;
    let selected: Vec<usize> = (0..kept.len()).filter(|&j| beta[j] != 0.0).collect();
    if selected.is_empty() {
        return Ok(finish(
            SurrogateModel::intercept_only(full.mean_y, n, path.lambda(), removed),
            data,
            p,
            y,
        ));
    }

    let sel = kfull.select(&selected);
    let (intercept, coefs) = ols_on(&sel);
    let coefficients = selected
        .iter()
        .zip(coefs)
        .filter(|(_, v)| *v != 0.0)
        .map(|(&j, value)| Coefficient {
            index: kept[j],
            name: names[kept[j]].clone(),
            value,
        })
        .collect();
    let model = SurrogateModel {
        intercept,
        coefficients,
        lambda: path.lambda(),
        neighborhood_size: n,
        train_rmse: 0.0,
        removed_by_vif: removed,
    };
    Ok(finish(model, data, p, y))
}

fn finish(mut model: SurrogateModel, data: &[f64], p: usize, y: &[f64]) -> SurrogateModel {
    let sse: f64 = data
        .chunks_exact(p.max(1))
        .zip(y)
        .map(|(row, yi)| (yi - model.predict(row)).powi(2))
        .sum();
    model.train_rmse = (sse / y.len() as f64).sqrt();
    model
}

/// VIF filter, Lasso CV selection, then OLS on the selected columns. An
/// empty selection yields an intercept-only model at `mean(y)`.
pub fn train_local_surrogate(neighborhood: &EncodedMatrix, y: &[f64]) -> Result<SurrogateModel> {
    check_xy(neighborhood, y)?;
    fit_rows(
        neighborhood.values(),
        neighborhood.ncols(),
        y,
        neighborhood.column_names(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(names: &[&str], rows: &[Vec<f64>]) -> EncodedMatrix {
        EncodedMatrix::from_rows(names.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect()
    }

    /// R^2 of column j regressed on the others via explicit normal
    /// equations (Gaussian elimination), independent of the SVD path.
    fn vif_oracle(rows: &[Vec<f64>], j: usize) -> f64 {
        let n = rows.len();
        let p = rows[0].len();
        let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let k = others.len() + 1;
        let design: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut v = vec![1.0];
                v.extend(others.iter().map(|&o| r[o]));
                v
            })
            .collect();
        let mut a = vec![vec![0.0; k + 1]; k];
        for (r, d) in rows.iter().zip(&design) {
            for u in 0..k {
                for v in 0..k {
                    a[u][v] += d[u] * d[v];
                }
                a[u][k] += d[u] * r[j];
            }
        }
        for col in 0..k {
            let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, piv);
            for row in 0..k {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for c in col..=k {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
        let coef: Vec<f64> = (0..k).map(|u| a[u][k] / a[u][u]).collect();
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let (mut sse, mut sst) = (0.0, 0.0);
        for (r, d) in rows.iter().zip(&design) {
            let pred: f64 = d.iter().zip(&coef).map(|(x, c)| x * c).sum();
            sse += (r[j] - pred).powi(2);
            sst += (r[j] - mean).powi(2);
        }
        1.0 / (sse / sst)
    }

    #[test]
    fn fold_sizes() {
        assert_eq!(fold_bounds(12), [(0, 3), (3, 6), (6, 8), (8, 10), (10, 12)]);
        assert_eq!(fold_bounds(10), [(0, 2), (2, 4), (4, 6), (6, 8), (8, 10)]);
        assert_eq!(fold_bounds(5), [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
    }

    #[test]
    fn orthogonal_columns_survive() {
        let rows = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        let m = matrix(&["a", "b", "c"], &rows);
        for v in variance_inflation_factors(&m) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let (kept, removed) = vif_filter(&m).unwrap();
        assert_eq!(kept.ncols(), 3);
        assert!(removed.is_empty());
    }

    #[test]
    fn duplicate_column_later_copy_removed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = random_rows(&mut rng, 20, 2)
            .into_iter()
            .map(|r| vec![r[0], r[1], r[0]])
            .collect();
        let m = matrix(&["a", "b", "a2"], &rows);
        let (kept, removed) = vif_filter(&m).unwrap();
        assert_eq!(removed, vec!["a2".to_string()]);
        assert_eq!(kept.column_names(), &["a", "b"]);
    }

    #[test]
    fn near_linear_combination_single_removal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = random_rows(&mut rng, 40, 3)
            .into_iter()
            .map(|r| vec![r[0], r[1], r[0] + r[1] + 1e-3 * r[2]])
            .collect();
        let vifs = variance_inflation_factors(&matrix(&["c1", "c2", "c3"], &rows));
        for j in 0..3 {
            let oracle = vif_oracle(&rows, j);
            assert!(((vifs[j] - oracle) / oracle).abs() < 1e-6, "{} vs {}", vifs[j], oracle);
        }
        let (kept, removed) = vif_filter(&matrix(&["c1", "c2", "c3"], &rows)).unwrap();
        assert_eq!(removed.len(), 1);
        assert_eq!(kept.ncols(), 2);
        let worst = (0..3).max_by(|&a, &b| vif_oracle(&rows, a).total_cmp(&vif_oracle(&rows, b))).unwrap();
        assert_eq!(removed[0], ["c1", "c2", "c3"][worst]);
    }

    #[test]
    fn spectral_vifs_match_regressions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let p = 3 + trial % 5;
            let mut rows = random_rows(&mut rng, 40, p);
            for r in rows.iter_mut() {
                r[1] = 0.8 * r[0] + 0.3 * r[1];
            }
            let m = Moments::from_rows(&rows.concat(), p, &vec![0.0; rows.len()]);
            let cols: Vec<usize> = (0..p).collect();
            let a = vif_values(&m.sxx, p, &cols);
            let b = vif_values_spectral(&m.sxx, p, &cols);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-8 * x.abs(), "{a:?} vs {b:?}");
            }
        }
        // exact collinearity: every column in the dependency is infinite
        let rows: Vec<Vec<f64>> = random_rows(&mut rng, 30, 3)
            .into_iter()
            .map(|r| vec![r[0], r[1], r[0] - r[1], r[2]])
            .collect();
        let m = Moments::from_rows(&rows.concat(), 4, &vec![0.0; rows.len()]);
        let b = vif_values_spectral(&m.sxx, 4, &[0, 1, 2, 3]);
        assert!(b[..3].iter().all(|v| v.is_infinite()), "{b:?}");
        assert!(b[3].is_finite());
    }

    #[test]
    fn vif_skipped_below_three_columns() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let (kept, removed) = vif_filter(&matrix(&["a", "b"], &rows)).unwrap();
        assert_eq!(kept.ncols(), 2);
        assert!(removed.is_empty());
    }

    #[test]
    fn lambda_zero_is_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = random_rows(&mut rng, 30, 4);
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 + 2.0 * r[0] - r[1] + 0.5 * r[3] + rng.gen_range(-0.1..0.1))
            .collect();
        let m = matrix(&["a", "b", "c", "d"], &rows);
        let lasso = lasso_fit(&m, &y, 0.0).unwrap();
        let (_, ols) = ols_fit(&m, &y).unwrap();
        for (a, b) in lasso.iter().zip(&ols) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn lambda_max_kills_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows = random_rows(&mut rng, 25, 5);
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 3.0 - r[2]).collect();
        let m = matrix(&["a", "b", "c", "d", "e"], &rows);
        let lmax = lambda_max(&m, &y).unwrap();
        assert!(lasso_fit(&m, &y, lmax).unwrap().iter().all(|b| *b == 0.0));
        assert!(lasso_fit(&m, &y, 2.0 * lmax).unwrap().iter().all(|b| *b == 0.0));
        assert!(lasso_fit(&m, &y, 0.9 * lmax).unwrap().iter().any(|b| *b != 0.0));
    }

    #[test]
    fn closed_form_soft_threshold() {
        let m = matrix(&["x"], &[vec![1.0], vec![-1.0]]);
        let b = lasso_fit(&m, &[1.0, -1.0], 1.0).unwrap();
        // (x'y - lambda/2) / x'x
        assert!((b[0] - 0.75).abs() < 1e-9);
        assert!(lasso_fit(&m, &[1.0, -1.0], -1.0).is_err());
    }

    #[test]
    fn kkt_conditions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let n = rng.gen_range(20..60);
            let p = rng.gen_range(1..12);
            let rows = random_rows(&mut rng, n, p);
            let y: Vec<f64> = rows
                .iter()
                .map(|r| r.iter().enumerate().map(|(j, v)| v * (j as f64 - 3.0)).sum::<f64>() + rng.gen_range(-1.0..1.0))
                .collect();
            let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
            let m = EncodedMatrix::from_rows(names, &rows).unwrap();
            let lambda = lambda_max(&m, &y).unwrap() * rng.gen_range(0.01..0.9);
            let beta = lasso_fit(&m, &y, lambda).unwrap();
            let my = y.iter().sum::<f64>() / n as f64;
            let mx: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
            for j in 0..p {
                let grad: f64 = rows
                    .iter()
                    .zip(&y)
                    .map(|(r, yi)| {
                        let fit: f64 = (0..p).map(|k| (r[k] - mx[k]) * beta[k]).sum();
                        2.0 * (r[j] - mx[j]) * (fit - (yi - my))
                    })
                    .sum();
                if beta[j] == 0.0 {
                    assert!(grad.abs() <= lambda + 1e-5);
                } else {
                    assert!((grad + lambda * beta[j].signum()).abs() <= 1e-5, "{grad} {lambda}");
                }
            }
        }
    }

    #[test]
    fn cv_requires_five_rows() {
        let m = matrix(&["a"], &[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        assert!(matches!(lasso_cv(&m, &[1.0, 2.0, 3.0, 4.0]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn noiseless_cv_picks_largest_exact_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows = random_rows(&mut rng, 40, 3);
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = matrix(&["a", "b", "c"], &rows);
        let path = lasso_cv(&m, &y).unwrap();
        let best = path.cv_mean.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmin = path.cv_mean.iter().position(|v| *v == best).unwrap();
        let threshold = best + path.cv_std_err[argmin];
        assert!(path.cv_mean[path.chosen] <= threshold);
        assert!(path.cv_mean[..path.chosen].iter().all(|v| *v > threshold));
        assert!(path.lambdas.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(path.lambdas.len(), LAMBDA_GRID_LEN);
        assert!((path.lambdas[99] / path.lambdas[0] - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn pure_noise_selects_null_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows = random_rows(&mut rng, 60, 4);
        let y: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = matrix(&["a", "b", "c", "d"], &rows);
        let path = lasso_cv(&m, &y).unwrap();
        assert_eq!(path.chosen, 0);
        let model = train_local_surrogate(&m, &y).unwrap();
        assert!(model.coefficients.is_empty());
        let mean = y.iter().sum::<f64>() / 60.0;
        assert!((model.intercept - mean).abs() < 1e-12);
    }

    #[test]
    fn recovers_exact_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = random_rows(&mut rng, 10, 3);
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let model = train_local_surrogate(&matrix(&["x1", "x2", "x3"], &rows), &y).unwrap();
        assert_eq!(model.selected_columns(), vec![0]);
        assert!((model.coefficients[0].value - 2.0).abs() < 1e-6);
        assert!((model.intercept - 1.0).abs() < 1e-6);
        assert!(model.train_rmse < 1e-9);
    }

    #[test]
    fn constant_target_is_intercept_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows = random_rows(&mut rng, 12, 3);
        let model = train_local_surrogate(&matrix(&["a", "b", "c"], &rows), &[0.1; 12]).unwrap();
        assert!(model.coefficients.is_empty());
        assert_eq!(model.intercept, 0.1);
    }

    #[test]
    fn duplicate_columns_refit() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<Vec<f64>> = random_rows(&mut rng, 30, 2)
            .into_iter()
            .map(|r| vec![r[0], r[0], r[1]])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let model = train_local_surrogate(&matrix(&["x1", "x2", "x3"], &rows), &y).unwrap();
        assert_eq!(model.removed_by_vif, vec!["x2".to_string()]);
        assert_eq!(model.selected_columns(), vec![0]);
        assert!((model.coefficients[0].value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn refit_never_worse_in_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let rows = random_rows(&mut rng, 50, 5);
            let y: Vec<f64> = rows
                .iter()
                .map(|r| 3.0 * r[0] - 2.0 * r[1] + 0.3 * r[4] + rng.gen_range(-1.5..1.5))
                .collect();
            let names: Vec<String> = (0..5).map(|j| format!("x{j}")).collect();
            let m = EncodedMatrix::from_rows(names, &rows).unwrap();
            let model = train_local_surrogate(&m, &y).unwrap();
            let sel = model.selected_columns();
            if sel.is_empty() {
                continue;
            }
            let sub = m.select_columns(&sel);
            let beta = lasso_fit(&sub, &y, model.lambda).unwrap();
            let my = y.iter().sum::<f64>() / 50.0;
            let mx: Vec<f64> = (0..sel.len()).map(|j| sub.column(j).iter().sum::<f64>() / 50.0).collect();
            let b0 = my - mx.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
            let lasso_sse: f64 = (0..50)
                .map(|i| {
                    let pred = b0 + sub.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
                    (y[i] - pred).powi(2)
                })
                .sum();
            assert!(model.train_rmse <= (lasso_sse / 50.0).sqrt() + 1e-12);
        }
    }

    #[test]
    fn deterministic_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rows = random_rows(&mut rng, 40, 6);
        let y: Vec<f64> = rows.iter().map(|r| r[1] - r[2] + rng.gen_range(-0.2..0.2)).collect();
        let names: Vec<String> = (0..6).map(|j| format!("x{j}")).collect();
        let m = EncodedMatrix::from_rows(names, &rows).unwrap();
        let a = train_local_surrogate(&m, &y).unwrap();
        let b = train_local_surrogate(&m, &y).unwrap();
        assert_eq!(a.intercept.to_bits(), b.intercept.to_bits());
        assert_eq!(a, b);
    }

    /// Sanity report only: Lasso is not best-subset selection.
    #[test]
    fn best_subset_overlap_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rows = random_rows(&mut rng, 60, 5);
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 2.0 * r[0] - 1.0 * r[3] + rng.gen_range(-0.5..0.5))
            .collect();
        let names: Vec<String> = (0..5).map(|j| format!("x{j}")).collect();
        let m = EncodedMatrix::from_rows(names, &rows).unwrap();
        let model = train_local_surrogate(&m, &y).unwrap();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..32 {
            let cols: Vec<usize> = (0..5).filter(|j| mask & (1 << j) != 0).collect();
            let sub = m.select_columns(&cols);
            let mut err = 0.0;
            for &(a, b) in &fold_bounds(60) {
                let train: Vec<usize> = (0..60).filter(|i| *i < a || *i >= b).collect();
                let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let (b0, beta) = ols_fit(&sub.select_rows(&train), &ty).unwrap();
                for i in a..b {
                    let pred = b0 + sub.row(i).iter().zip(&beta).map(|(x, c)| x * c).sum::<f64>();
                    err += (y[i] - pred).powi(2);
                }
            }
            if err < best.0 {
                best = (err, mask);
            }
        }
        let chosen: Vec<usize> = (0..5).filter(|j| best.1 & (1 << j) != 0).collect();
        let sel = model.selected_columns();
        let overlap = sel.iter().filter(|c| chosen.contains(c)).count();
        println!("lasso {sel:?} best-subset {chosen:?} overlap {overlap}");
        assert!(sel.contains(&0) && sel.contains(&3));
    }
}
