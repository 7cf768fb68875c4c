//! Seeded synthetic tables shared by the integration and acceptance tests.
#![allow(dead_code)]

use lsx_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Header plus string cells; the target is always the column `y`.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::from_records(None, Some("y"), &self.header, &self.rows).expect("valid table")
    }
}

fn header(names: &[String]) -> Vec<String> {
    let mut h = names.to_vec();
    h.push("y".into());
    h
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sparse linear generator: ten standard normal features, three of them
/// active, noise std equal to 5% of the signal std.
pub struct SparseLinear {
    pub table: Table,
    pub intercept: f64,
    /// `(feature index, raw-unit coefficient)` of the active features.
    pub truth: Vec<(usize, f64)>,
}

pub const SPARSE_FEATURES: usize = 10;

pub fn sparse_linear(n: usize, seed: u64) -> SparseLinear {
    let mut rng = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let truth = vec![(1usize, 3.0), (4, -2.0), (7, 1.5)];
    let intercept = 0.0;
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..SPARSE_FEATURES).map(|_| normal.sample(&mut rng)).collect())
        .collect();
    let signal: Vec<f64> = xs
        .iter()
        .map(|x| truth.iter().map(|(j, b)| b * x[*j]).sum())
        .collect();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let sd = (signal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let noise = Normal::new(0.0, 0.05 * sd).unwrap();
    let names: Vec<String> = (0..SPARSE_FEATURES).map(|j| format!("x{j}")).collect();
    let rows = xs
        .iter()
        .zip(&signal)
        .map(|(x, s)| {
            let y = intercept + s + noise.sample(&mut rng);
            x.iter().chain(std::iter::once(&y)).map(|v| v.to_string()).collect()
        })
        .collect();
    SparseLinear {
        table: Table {
            header: header(&names),
            rows,
        },
        intercept,
        truth,
    }
}

/// Two well-separated clusters flagged by a binary `regime` column, each
/// with its own linear law in `x1, x2`, plus Gaussian noise of std
/// `noise`.
pub fn two_regime(n: usize, noise: f64, seed: u64) -> Table {
    let mut rng = rng(seed);
    let eps = Normal::new(0.0, noise).unwrap();
    let names: Vec<String> = ["x0", "x1", "x2", "regime"].iter().map(|s| s.to_string()).collect();
    let rows = (0..n)
        .map(|_| {
            let r = rng.gen_range(0..2u8);
            let center = if r == 0 { -10.0 } else { 10.0 };
            let x0 = center + rng.gen_range(-1.0..1.0);
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let x2: f64 = rng.gen_range(-1.0..1.0);
            let y = if r == 0 {
                10.0 + 2.0 * x1 - x2
            } else {
                -5.0 - x1 + 3.0 * x2
            } + eps.sample(&mut rng);
            vec![
                x0.to_string(),
                x1.to_string(),
                x2.to_string(),
                r.to_string(),
                y.to_string(),
            ]
        })
        .collect();
    Table {
        header: header(&names),
        rows,
    }
}

/// Mixed table: three numerics, two categoricals, one binary and a
/// mildly nonlinear target.
pub fn mixed(n: usize, seed: u64) -> Table {
    let mut rng = rng(seed);
    let eps = Normal::new(0.0, 0.5).unwrap();
    let plans = ["basic", "plus", "pro", "max"];
    let regions = ["north", "south", "east"];
    let names: Vec<String> = ["a", "b", "c", "plan", "region", "flag"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = (0..n)
        .map(|_| {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(0.0..10.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            let plan = rng.gen_range(0..plans.len());
            // region correlates with plan so co-occurrence carries signal
            let region = if rng.gen_bool(0.6) {
                plan % regions.len()
            } else {
                rng.gen_range(0..regions.len())
            };
            let flag = u8::from(rng.gen_bool(0.3));
            let y = 20.0 + 3.0 * a + 0.5 * b * b - 2.0 * c + 4.0 * plan as f64
                - 3.0 * f64::from(flag)
                + eps.sample(&mut rng);
            vec![
                a.to_string(),
                b.to_string(),
                c.to_string(),
                plans[plan].to_string(),
                regions[region].to_string(),
                flag.to_string(),
                y.to_string(),
            ]
        })
        .collect();
    Table {
        header: header(&names),
        rows,
    }
}

/// Small random categorical table for distance oracles: `attrs`
/// categorical attributes with up to `max_labels` labels, one binary
/// attribute and a numeric target.
pub fn random_categorical(n: usize, attrs: usize, max_labels: usize, seed: u64) -> Table {
    let mut rng = rng(seed);
    let labels: Vec<usize> = (0..attrs).map(|_| rng.gen_range(2..=max_labels)).collect();
    let mut names: Vec<String> = (0..attrs).map(|j| format!("c{j}")).collect();
    names.push("bin".into());
    let rows = (0..n)
        .map(|i| {
            let mut r: Vec<String> = labels
                .iter()
                .enumerate()
                .map(|(j, &l)| {
                    // guarantees every label appears at least once
                    let v = if i < l { i } else { rng.gen_range(0..l) };
                    format!("L{j}_{v}")
                })
                .collect();
            r.push(if i == 0 { "0".into() } else if i == 1 { "1".into() } else { rng.gen_range(0..2u8).to_string() });
            r.push(rng.gen_range(0.0..1.0f64).to_string());
            r
        })
        .collect();
    Table {
        header: header(&names),
        rows,
    }
}

/// Exhaustive step-1 neighborhood scan coded without the library's scan:
/// own distance sort, prefix fits through the public surrogate API, own
/// agreement bound and argmax. Returns the winning size.
pub fn exhaustive_best_size(ds: &Dataset, row: usize, confidence: f64) -> usize {
    use lsx_core::agreement::t_quantile;
    use lsx_core::{generalized_distance, train_local_surrogate};

    let model = ds.cooccurrence();
    let x = &ds.rows()[row];
    let mut d: Vec<(f64, usize)> = ds
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (generalized_distance(ds, model, x, r).unwrap(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let order: Vec<usize> = d.iter().map(|p| p.1).collect();
    let enc = ds.encoded();
    let n = ds.len();
    let start = 5.max((2 * enc.ncols()).min(n));

    let mut best: Option<(usize, f64, bool)> = None;
    for k in start..=n {
        let m = enc.select_rows(&order[..k]);
        let y: Vec<f64> = order[..k].iter().map(|&i| ds.targets()[i]).collect();
        let s = train_local_surrogate(&m, &y).unwrap();
        let yhat: Vec<f64> = (0..k).map(|i| s.predict(m.row(i))).collect();

        let kf = k as f64;
        let sq: Vec<f64> = y.iter().zip(&yhat).map(|(a, b)| (b - a).powi(2)).collect();
        let delta = sq.iter().sum::<f64>() / kf;
        let my = y.iter().sum::<f64>() / kf;
        let mh = yhat.iter().sum::<f64>() / kf;
        let vy = y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / kf;
        let vh = yhat.iter().map(|v| (v - mh).powi(2)).sum::<f64>() / kf;
        let mu = vy + vh + (mh - my).powi(2);
        let scale = y.iter().chain(&yhat).fold(0.0f64, |a, v| a.max(v.abs()));
        let degenerate = mu <= (1e-12 * scale).powi(2);
        let sd = (sq.iter().map(|v| (v - delta).powi(2)).sum::<f64>() / (kf - 1.0)).sqrt();
        let t = t_quantile((k - 1) as u64, confidence).unwrap();
        let r_lower = if degenerate {
            0.0
        } else {
            1.0 - (delta + t * sd / kf.sqrt()) / mu
        };

        let take = match best {
            None => true,
            Some((_, br, bdeg)) => match (degenerate, bdeg) {
                (false, true) => true,
                (true, false) => false,
                _ => r_lower > br,
            },
        };
        if take {
            best = Some((k, r_lower, degenerate));
        }
    }
    best.unwrap().0
}

/// Brute-force categorical value distance: for each context attribute,
/// the maximum over every subset `w` of its values of
/// `P(w | x) + P(not w | y) - 1`, in exact integer arithmetic, then the
/// mean over context attributes. Returns `(numerator, denominator)` pairs
/// per context attribute so callers can compare exactly.
pub fn omega_exhaustive(
    xs: &[usize],
    contexts: &[Vec<usize>],
    context_values: &[usize],
    x: usize,
    y: usize,
) -> Vec<(i64, i64)> {
    let nx = xs.iter().filter(|&&v| v == x).count() as i64;
    let ny = xs.iter().filter(|&&v| v == y).count() as i64;
    contexts
        .iter()
        .zip(context_values)
        .map(|(col, &values)| {
            let mut cx = vec![0i64; values];
            let mut cy = vec![0i64; values];
            for (&a, &v) in xs.iter().zip(col) {
                if a == x {
                    cx[v] += 1;
                }
                if a == y {
                    cy[v] += 1;
                }
            }
            // value * nx * ny = sum_{w} cx*ny + sum_{not w} cy*nx - nx*ny
            let mut best = i64::MIN;
            for mask in 0u32..(1 << values) {
                let mut s = -nx * ny;
                for v in 0..values {
                    if mask & (1 << v) != 0 {
                        s += cx[v] * ny;
                    } else {
                        s += cy[v] * nx;
                    }
                }
                best = best.max(s);
            }
            (best, nx * ny)
        })
        .collect()
}

/// The greedy rule `sum_v max(P(v|x), P(v|y)) - 1` in the same exact
/// integer form as [`omega_exhaustive`].
pub fn omega_greedy(
    xs: &[usize],
    contexts: &[Vec<usize>],
    context_values: &[usize],
    x: usize,
    y: usize,
) -> Vec<(i64, i64)> {
    let nx = xs.iter().filter(|&&v| v == x).count() as i64;
    let ny = xs.iter().filter(|&&v| v == y).count() as i64;
    contexts
        .iter()
        .zip(context_values)
        .map(|(col, &values)| {
            let mut cx = vec![0i64; values];
            let mut cy = vec![0i64; values];
            for (&a, &v) in xs.iter().zip(col) {
                if a == x {
                    cx[v] += 1;
                }
                if a == y {
                    cy[v] += 1;
                }
            }
            let s: i64 = (0..values).map(|v| (cx[v] * ny).max(cy[v] * nx)).sum::<i64>() - nx * ny;
            (s, nx * ny)
        })
        .collect()
}

/// Per-row discrete codes of every categorical and binary column of a
/// [`Table`], in column order, with value counts.
pub fn discrete_columns(ds: &Dataset) -> Vec<(usize, Vec<usize>, usize)> {
    use lsx_core::FeatureKind;
    let schema = ds.schema();
    schema
        .features()
        .iter()
        .enumerate()
        .filter_map(|(fi, f)| {
            let slot = schema.slot(fi);
            match f.kind {
                FeatureKind::Categorical => Some((
                    fi,
                    ds.rows().iter().map(|r| r.categorical[slot] as usize).collect(),
                    ds.categories(slot).len(),
                )),
                FeatureKind::Binary => Some((
                    fi,
                    ds.rows().iter().map(|r| r.binary[slot] as usize).collect(),
                    2,
                )),
                FeatureKind::Numeric => None,
            }
        })
        .collect()
}
