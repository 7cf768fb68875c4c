//! Quantitative evaluation over a test split: fidelity, generality,
//! simplicity, robustness, counterfactual fidelity and top-k recovery.
//!
//! Test points are rows of the dataset and are explained against the whole
//! table. Explanations are computed once per row and shared between
//! metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::counterfactual::{
    counterfactual_with, epsilon_for, find_candidates, CounterfactualQuery, DEFAULT_EPSILON_PERCENT,
};
use crate::dataset::Dataset;
use crate::distance::compute_distances;
use crate::error::{Error, Result};
use crate::explainer::{explain, ExplainOptions, Explanation, OutputFormat, Query};
use crate::surrogate::ols_fit;

pub const DEFAULT_KNN: usize = 10;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_TOP_K: usize = 5;
/// Reference offset, as a fraction of the target range.
pub const COUNTERFACTUAL_OFFSET: f64 = 0.3;

/// Trailing contiguous block holding `fraction` of the rows (at least one).
pub fn test_split(rows: usize, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let count = ((rows as f64 * fraction).round() as usize).clamp(1, rows.max(1));
    Ok((rows.saturating_sub(count)..rows).collect())
}

pub fn default_test_split(rows: usize) -> Vec<usize> {
    test_split(rows, DEFAULT_TEST_FRACTION).expect("default fraction is valid")
}

/// Explanations of dataset rows, computed on demand in parallel.
pub struct ExplanationCache<'a> {
    ds: &'a Dataset,
    options: ExplainOptions,
    cache: BTreeMap<usize, Explanation>,
}

impl<'a> ExplanationCache<'a> {
    pub fn new(ds: &'a Dataset, options: ExplainOptions) -> Result<Self> {
        options.validate()?;
        Ok(Self {
            ds,
            options,
            cache: BTreeMap::new(),
        })
    }

    pub fn ensure(&mut self, rows: impl IntoIterator<Item = usize>) -> Result<()> {
        let missing: Vec<usize> = rows
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|r| !self.cache.contains_key(r))
            .collect();
        let (ds, options) = (self.ds, self.options);
        let computed: Vec<(usize, Explanation)> = missing
            .par_iter()
            .map(|&r| explain(ds, &Query::Row(r), &options).map(|e| (r, e)))
            .collect::<Result<_>>()?;
        self.cache.extend(computed);
        Ok(())
    }

    pub fn get(&self, row: usize) -> Option<&Explanation> {
        self.cache.get(&row)
    }

    fn expect(&self, row: usize) -> &Explanation {
        self.cache.get(&row).expect("explanation computed by ensure")
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }
}

fn check_test(ds: &Dataset, test: &[usize]) -> Result<()> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if let Some(&bad) = test.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::RowOutOfRange {
            index: bad,
            rows: ds.len(),
        });
    }
    Ok(())
}

/// `(1/n) sum_i |b1_i - b2_i| / (|b1_i| + |b2_i|)` over the union of
/// features in either explanation; missing coefficients are 0 and a 0/0
/// term contributes 0.
pub fn explanation_distance(a: &Explanation, b: &Explanation) -> f64 {
    let mut union: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (f, c) in a.coefficients() {
        union.entry(f).or_default().0 = c;
    }
    for (f, c) in b.coefficients() {
        union.entry(f).or_default().1 = c;
    }
    if union.is_empty() {
        return 0.0;
    }
    let total: f64 = union
        .values()
        .map(|(x, y)| {
            let denom = x.abs() + y.abs();
            if denom == 0.0 {
                0.0
            } else {
                (x - y).abs() / denom
            }
        })
        .sum();
    total / union.len() as f64
}

fn fidelity_of(ds: &Dataset, cache: &ExplanationCache, test: &[usize]) -> f64 {
    let sse: f64 = test
        .iter()
        .map(|&r| (cache.expect(r).predicted - ds.targets()[r]).powi(2))
        .sum();
    (sse / test.len() as f64).sqrt()
}

fn generality_of(ds: &Dataset, cache: &ExplanationCache, test: &[usize]) -> f64 {
    let n = ds.len() as f64;
    test.iter()
        .map(|&r| 100.0 * (cache.expect(r).neighborhood_size as f64 - 1.0) / n)
        .sum::<f64>()
        / test.len() as f64
}

fn simplicity_of(cache: &ExplanationCache, test: &[usize]) -> f64 {
    test.iter()
        .map(|&r| cache.expect(r).terms.len() as f64)
        .sum::<f64>()
        / test.len() as f64
}

fn knn_rows(ds: &Dataset, row: usize, k: usize) -> Result<Vec<usize>> {
    let d = compute_distances(ds, ds.cooccurrence(), &ds.rows()[row])?;
    Ok(d.entries()
        .iter()
        .map(|e| e.row)
        .filter(|&r| r != row)
        .take(k)
        .collect())
}

/// Per-point robustness and the neighbor lists it was computed from.
fn robustness_of(cache: &ExplanationCache, test: &[usize], knn: &[Vec<usize>]) -> Vec<f64> {
    test.iter()
        .zip(knn)
        .map(|(&r, neigh)| {
            let e = cache.expect(r);
            neigh
                .iter()
                .map(|&o| 1.0 - explanation_distance(e, cache.expect(o)))
                .sum::<f64>()
                / neigh.len() as f64
        })
        .collect()
}

fn prepare<'a>(
    ds: &'a Dataset,
    test: &[usize],
    options: &ExplainOptions,
) -> Result<ExplanationCache<'a>> {
    check_test(ds, test)?;
    let mut cache = ExplanationCache::new(ds, *options)?;
    cache.ensure(test.iter().copied())?;
    Ok(cache)
}

/// RMSE between each test point's explained value and its target.
pub fn fidelity(ds: &Dataset, test: &[usize], options: &ExplainOptions) -> Result<f64> {
    let cache = prepare(ds, test, options)?;
    Ok(fidelity_of(ds, &cache, test))
}

/// Mean share of the table, in percent, covered by each explanation
/// beyond the point itself.
pub fn generality(ds: &Dataset, test: &[usize], options: &ExplainOptions) -> Result<f64> {
    let cache = prepare(ds, test, options)?;
    Ok(generality_of(ds, &cache, test))
}

/// Mean number of terms per explanation.
pub fn simplicity(ds: &Dataset, test: &[usize], options: &ExplainOptions) -> Result<f64> {
    let cache = prepare(ds, test, options)?;
    Ok(simplicity_of(&cache, test))
}

fn knn_lists(ds: &Dataset, test: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("knn must be >= 1".into()));
    }
    if ds.len() < k + 1 {
        return Err(Error::TooFewSamples {
            needed: k + 1,
            got: ds.len(),
        });
    }
    test.iter().map(|&r| knn_rows(ds, r, k)).collect()
}

/// Mean over test points of the mean `1 - explanation distance` to the
/// explanations of their `k` nearest rows.
pub fn robustness(ds: &Dataset, test: &[usize], k: usize, options: &ExplainOptions) -> Result<f64> {
    check_test(ds, test)?;
    let knn = knn_lists(ds, test, k)?;
    let mut cache = prepare(ds, test, options)?;
    cache.ensure(knn.iter().flatten().copied())?;
    let per = robustness_of(&cache, test, &knn);
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterfactualFidelity {
    pub rmse: Option<f64>,
    pub solved: usize,
    pub skipped: usize,
}

fn counterfactual_queries(ds: &Dataset, test: &[usize]) -> Vec<CounterfactualQuery> {
    let (lo, hi) = ds.target_range();
    let offset = COUNTERFACTUAL_OFFSET * (hi - lo);
    test.iter()
        .flat_map(|&r| {
            let y = ds.targets()[r];
            [y + offset, y - offset]
                .into_iter()
                .map(move |reference| CounterfactualQuery::new(Query::Row(r), reference))
        })
        .collect()
}

fn counterfactual_fidelity_with(
    ds: &Dataset,
    cache: &mut ExplanationCache,
    test: &[usize],
) -> Result<CounterfactualFidelity> {
    let queries = counterfactual_queries(ds, test);
    let mut bands = Vec::with_capacity(queries.len());
    for q in &queries {
        match find_candidates(ds, q) {
            Ok(c) => bands.push(Some(c)),
            Err(Error::NoCandidates { .. }) => bands.push(None),
            Err(e) => return Err(e),
        }
    }
    cache.ensure(bands.iter().flatten().flatten().copied())?;
    let cache = &*cache;
    let mut sse = 0.0;
    let mut solved = 0;
    let mut skipped = 0;
    for (q, band) in queries.iter().zip(&bands) {
        if band.is_none() {
            skipped += 1;
            continue;
        }
        match counterfactual_with(ds, q, |row| Ok(cache.expect(row).clone())) {
            Ok(ce) => {
                sse += (ce.predicted_at_modified - q.reference_value).powi(2);
                solved += 1;
            }
            Err(Error::NoChangeNeeded) | Err(Error::NoCandidates { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(CounterfactualFidelity {
        rmse: (solved > 0).then(|| (sse / solved as f64).sqrt()),
        solved,
        skipped,
    })
}

/// For each test point, references at `y +/- 0.3 * range`; RMSE of the
/// candidate formula at the modified point against the reference.
/// Unreachable references are skipped and counted.
pub fn counterfactual_fidelity(
    ds: &Dataset,
    test: &[usize],
    options: &ExplainOptions,
) -> Result<CounterfactualFidelity> {
    let mut cache = prepare(ds, test, options)?;
    // validates that the default epsilon exists for this table
    epsilon_for(ds, 1.0, DEFAULT_EPSILON_PERCENT)?;
    counterfactual_fidelity_with(ds, &mut cache, test)
}

/// Column indices of the `k` largest absolute global OLS coefficients.
pub fn global_top_k(ds: &Dataset, k: usize) -> Result<Vec<usize>> {
    let m = ds.encoded();
    if m.ncols() < k {
        return Err(Error::InvalidArgument(format!(
            "top-{k} recovery needs at least {k} encoded columns, found {}",
            m.ncols()
        )));
    }
    let (_, beta) = ols_fit(m, ds.targets())?;
    let mut idx: Vec<usize> = (0..beta.len()).collect();
    idx.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

fn topk_of(cache: &ExplanationCache, test: &[usize], top: &[usize]) -> f64 {
    test.iter()
        .map(|&r| {
            let e = cache.expect(r);
            let hit = top
                .iter()
                .filter(|c| e.terms.iter().any(|t| t.column == **c))
                .count();
            100.0 * hit as f64 / top.len() as f64
        })
        .sum::<f64>()
        / test.len() as f64
}

/// Mean percentage of the global OLS top-k columns present in each test
/// point's explanation.
pub fn topk_recovery(ds: &Dataset, test: &[usize], k: usize, options: &ExplainOptions) -> Result<f64> {
    let top = global_top_k(ds, k)?;
    let cache = prepare(ds, test, options)?;
    Ok(topk_of(&cache, test, &top))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvaluationOptions {
    pub explain: ExplainOptions,
    pub knn: usize,
    pub counterfactual: bool,
    pub top_k: Option<usize>,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            explain: ExplainOptions::default(),
            knn: DEFAULT_KNN,
            counterfactual: false,
            top_k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointDetail {
    pub row: usize,
    pub target: f64,
    pub predicted: f64,
    pub neighborhood_size: usize,
    pub terms: usize,
    pub robustness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub test_points: usize,
    pub fidelity_rmse: f64,
    pub generality_percent: f64,
    pub simplicity_mean: f64,
    pub robustness_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterfactual_rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterfactual_skipped: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topk_recovery: Option<f64>,
    pub per_point: Vec<PointDetail>,
}

/// Every metric over one shared set of explanations.
pub fn evaluate(ds: &Dataset, test: &[usize], options: &EvaluationOptions) -> Result<EvaluationReport> {
    check_test(ds, test)?;
    let knn = knn_lists(ds, test, options.knn)?;
    let top = options.top_k.map(|k| global_top_k(ds, k)).transpose()?;
    let mut cache = ExplanationCache::new(ds, options.explain)?;
    cache.ensure(test.iter().copied().chain(knn.iter().flatten().copied()))?;

    let robust = robustness_of(&cache, test, &knn);
    let cf = if options.counterfactual {
        Some(counterfactual_fidelity_with(ds, &mut cache, test)?)
    } else {
        None
    };
    let per_point = test
        .iter()
        .zip(&robust)
        .map(|(&r, &rob)| {
            let e = cache.expect(r);
            PointDetail {
                row: r,
                target: ds.targets()[r],
                predicted: e.predicted,
                neighborhood_size: e.neighborhood_size,
                terms: e.terms.len(),
                robustness: rob,
            }
        })
        .collect();
    Ok(EvaluationReport {
        test_points: test.len(),
        fidelity_rmse: fidelity_of(ds, &cache, test),
        generality_percent: generality_of(ds, &cache, test),
        simplicity_mean: simplicity_of(&cache, test),
        robustness_mean: robust.iter().sum::<f64>() / robust.len() as f64,
        counterfactual_rmse: cf.as_ref().and_then(|c| c.rmse),
        counterfactual_skipped: cf.as_ref().map(|c| c.skipped),
        top_k: options.top_k,
        topk_recovery: top.map(|t| topk_of(&cache, test, &t)),
        per_point,
    })
}

/// Aligned two-column table of the aggregate metrics.
pub fn render_report_text(r: &EvaluationReport) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("test points".into(), r.test_points.to_string()),
        ("fidelity (RMSE)".into(), format!("{:.4}", r.fidelity_rmse)),
        ("generality (%)".into(), format!("{:.2}", r.generality_percent)),
        ("simplicity (features)".into(), format!("{:.2}", r.simplicity_mean)),
        ("robustness".into(), format!("{:.4}", r.robustness_mean)),
    ];
    if let Some(skipped) = r.counterfactual_skipped {
        let v = r
            .counterfactual_rmse
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        rows.push(("counterfactual (RMSE)".into(), v));
        rows.push(("counterfactual skipped".into(), skipped.to_string()));
    }
    if let (Some(k), Some(v)) = (r.top_k, r.topk_recovery) {
        rows.push((format!("top-{k} recovery (%)"), format!("{v:.2}")));
    }
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max("metric".len());
    let vw = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max("value".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<w$}  {:>vw$}", "metric", "value");
    let _ = writeln!(out, "{}  {}", "-".repeat(w), "-".repeat(vw));
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<w$}  {v:>vw$}");
    }
    out
}

pub fn render_report(r: &EvaluationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => render_report_text(r),
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
    }
}
