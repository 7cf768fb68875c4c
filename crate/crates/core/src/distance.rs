//! Mixed-type distance: L1 on standardized numerics, co-occurrence based
//! value distance on categoricals, Hamming on binaries.

use rayon::prelude::*;

use crate::dataset::{DataPoint, Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Conditional distribution table of one context attribute given one
/// categorical attribute: `cond[x * values + v] = P(A_j = v | A_i = x)`.
#[derive(Clone, Debug)]
struct ContextTable {
    feature: usize,
    values: usize,
    cond: Vec<f64>,
}

#[derive(Clone, Debug)]
struct CategoricalTable {
    feature: usize,
    labels: usize,
    context: Vec<ContextTable>,
    /// `delta[x * labels + y]`, averaged over the context attributes.
    delta: Vec<f64>,
}

/// Co-occurrence statistics of the categorical and binary attributes.
///
/// Every categorical attribute gets a precomputed label-by-label distance
/// table. Numeric attributes never act as context.
#[derive(Clone, Debug)]
pub struct CoOccurrenceModel {
    tables: Vec<CategoricalTable>,
}

/// Pairwise value distance with respect to a single context attribute.
///
/// The maximizing set contains every value at least as likely under `x` as
/// under `y`, so the sum collapses to `sum_v max(p_x(v), p_y(v)) - 1`.
pub fn pairwise_value_distance(p_x: &[f64], p_y: &[f64]) -> f64 {
    let in_x: f64 = p_x
        .iter()
        .zip(p_y)
        .filter(|(a, b)| a >= b)
        .map(|(a, _)| a)
        .sum();
    let out_y: f64 = p_x
        .iter()
        .zip(p_y)
        .filter(|(a, b)| a < b)
        .map(|(_, b)| b)
        .sum();
    (in_x + out_y - 1.0).clamp(0.0, 1.0)
}

impl CoOccurrenceModel {
    pub fn fit(ds: &Dataset) -> Self {
        let schema = ds.schema();
        // (feature index, value count, per-row value) for every discrete attribute
        let discrete: Vec<(usize, usize, Vec<usize>)> = schema
            .features()
            .iter()
            .enumerate()
            .filter_map(|(fi, f)| {
                let slot = schema.slot(fi);
                match f.kind {
                    FeatureKind::Categorical => Some((
                        fi,
                        ds.categories(slot).len(),
                        ds.rows()
                            .iter()
                            .map(|r| r.categorical[slot] as usize)
                            .collect(),
                    )),
                    FeatureKind::Binary => Some((
                        fi,
                        2,
                        ds.rows().iter().map(|r| r.binary[slot] as usize).collect(),
                    )),
                    FeatureKind::Numeric => None,
                }
            })
            .collect();

        let tables = discrete
            .iter()
            .filter(|(fi, _, _)| schema.features()[*fi].kind == FeatureKind::Categorical)
            .map(|(fi, labels, xs)| {
                let mut label_count = vec![0usize; *labels];
                for &x in xs {
                    label_count[x] += 1;
                }
                let context: Vec<ContextTable> = discrete
                    .iter()
                    .filter(|(fj, _, _)| fj != fi)
                    .map(|(fj, values, vs)| {
                        let mut counts = vec![0usize; labels * values];
                        for (&x, &v) in xs.iter().zip(vs) {
                            counts[x * values + v] += 1;
                        }
                        let cond = counts
                            .iter()
                            .enumerate()
                            .map(|(k, &c)| {
                                let total = label_count[k / values];
                                if total == 0 {
                                    0.0
                                } else {
                                    c as f64 / total as f64
                                }
                            })
                            .collect();
                        ContextTable {
                            feature: *fj,
                            values: *values,
                            cond,
                        }
                    })
                    .collect();

                let mut delta = vec![0.0; labels * labels];
                for x in 0..*labels {
                    for y in (x + 1)..*labels {
                        let d = if context.is_empty() {
                            1.0
                        } else {
                            context
                                .iter()
                                .map(|t| {
                                    let px = &t.cond[x * t.values..(x + 1) * t.values];
                                    let py = &t.cond[y * t.values..(y + 1) * t.values];
                                    pairwise_value_distance(px, py)
                                })
                                .sum::<f64>()
                                / context.len() as f64
                        };
                        delta[x * labels + y] = d;
                        delta[y * labels + x] = d;
                    }
                }
                CategoricalTable {
                    feature: *fi,
                    labels: *labels,
                    context,
                    delta,
                }
            })
            .collect();
        Self { tables }
    }

    /// Number of categorical attributes covered.
    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Context attributes (feature indices) used for categorical slot `slot`.
    pub fn context_features(&self, slot: usize) -> Vec<usize> {
        self.tables[slot].context.iter().map(|t| t.feature).collect()
    }

    /// `P(A_j = . | A_i = x)` for categorical slot `slot` and context
    /// feature `feature`.
    pub fn conditional(&self, slot: usize, feature: usize, x: u32) -> Option<&[f64]> {
        let table = self.tables.get(slot)?;
        let ctx = table.context.iter().find(|t| t.feature == feature)?;
        let x = x as usize;
        if x >= table.labels {
            return None;
        }
        Some(&ctx.cond[x * ctx.values..(x + 1) * ctx.values])
    }

    /// Feature index of categorical slot `slot`.
    pub fn feature(&self, slot: usize) -> usize {
        self.tables[slot].feature
    }

    fn lookup(&self, slot: usize, x: u32, y: u32) -> f64 {
        let t = &self.tables[slot];
        t.delta[x as usize * t.labels + y as usize]
    }
}

/// Sum of absolute coordinate differences.
pub fn numeric_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

pub fn binary_distance(a: u8, b: u8) -> Result<f64> {
    if a > 1 || b > 1 {
        return Err(Error::InvalidArgument(format!(
            "binary values must be 0 or 1, got ({a}, {b})"
        )));
    }
    Ok(if a == b { 0.0 } else { 1.0 })
}

/// Distance between two labels of categorical slot `slot`, in `[0, 1]`.
pub fn categorical_value_distance(
    ds: &Dataset,
    model: &CoOccurrenceModel,
    slot: usize,
    x: u32,
    y: u32,
) -> Result<f64> {
    let table = model
        .tables
        .get(slot)
        .ok_or_else(|| Error::InvalidArgument(format!("no categorical slot {slot}")))?;
    for label in [x, y] {
        if label as usize >= table.labels {
            return Err(Error::UnseenLabel {
                feature: ds.schema().features()[table.feature].name.clone(),
                label: format!("#{label}"),
            });
        }
    }
    Ok(model.lookup(slot, x, y))
}

pub(crate) fn distance_unchecked(model: &CoOccurrenceModel, a: &DataPoint, b: &DataPoint) -> f64 {
    let numeric: f64 = a
        .numeric
        .iter()
        .zip(&b.numeric)
        .map(|(x, y)| (x - y).abs())
        .sum();
    let categorical: f64 = a
        .categorical
        .iter()
        .zip(&b.categorical)
        .enumerate()
        .map(|(slot, (&x, &y))| model.lookup(slot, x, y))
        .sum();
    let binary = a
        .binary
        .iter()
        .zip(&b.binary)
        .filter(|(x, y)| x != y)
        .count() as f64;
    numeric + categorical + binary
}

/// Generalized distance: numeric L1 plus categorical value distances plus
/// binary mismatches.
pub fn generalized_distance(
    ds: &Dataset,
    model: &CoOccurrenceModel,
    x1: &DataPoint,
    x2: &DataPoint,
) -> Result<f64> {
    ds.check_point(x1)?;
    ds.check_point(x2)?;
    if model.len() != ds.schema().counts().categorical {
        return Err(Error::SchemaMismatch(
            "co-occurrence model does not belong to this dataset".into(),
        ));
    }
    Ok(distance_unchecked(model, x1, x2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub row: usize,
    pub distance: f64,
}

/// Every row of a dataset ordered by distance to a query, ties broken by
/// row index.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceVector {
    entries: Vec<Neighbor>,
}

impl DistanceVector {
    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Row indices in ascending distance order.
    pub fn order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.row).collect()
    }

    fn from_unsorted(mut entries: Vec<Neighbor>) -> Self {
        entries.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.row.cmp(&b.row))
        });
        Self { entries }
    }
}

pub fn compute_distances(
    ds: &Dataset,
    model: &CoOccurrenceModel,
    x: &DataPoint,
) -> Result<DistanceVector> {
    ds.check_point(x)?;
    if model.len() != ds.schema().counts().categorical {
        return Err(Error::SchemaMismatch(
            "co-occurrence model does not belong to this dataset".into(),
        ));
    }
    let entries = ds
        .rows()
        .par_iter()
        .enumerate()
        .map(|(row, r)| Neighbor {
            row,
            distance: distance_unchecked(model, x, r),
        })
        .collect();
    Ok(DistanceVector::from_unsorted(entries))
}
