//! Neighborhood search and explanation assembly.
//!
//! Rows are sorted by distance to the query, a surrogate is fitted on every
//! candidate prefix, and the prefix with the highest lower confidence bound
//! of its agreement score wins. The winning model, evaluated at the query,
//! is the explanation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::agreement::{r_lower_bound, AgreementScore};
use crate::dataset::{DataPoint, Dataset};
use crate::distance::{compute_distances, DistanceVector};
use crate::error::{Error, Result};
use crate::surrogate::{fit_rows, SurrogateModel, CV_FOLDS};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_STEP_PERCENT: f64 = 1.0;
/// Width of the longest contribution bar in text output.
pub const BAR_WIDTH: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplainOptions {
    pub confidence: f64,
    pub step_percent: f64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self {
            confidence: DEFAULT_CONFIDENCE,
            step_percent: DEFAULT_STEP_PERCENT,
        }
    }
}

impl ExplainOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if !(self.step_percent > 0.0 && self.step_percent <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "step percent must lie in (0, 100], got {}",
                self.step_percent
            )));
        }
        Ok(())
    }
}

/// What to explain: a row of the dataset or an external point.
#[derive(Clone, Debug, PartialEq)]
pub enum Query {
    Row(usize),
    Point { point: DataPoint, tag: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointId {
    Row(usize),
    External(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub feature: String,
    pub coefficient: f64,
    pub value: f64,
    pub contribution: f64,
    /// Encoded column index.
    #[serde(skip)]
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Explanation {
    pub point_id: PointId,
    pub base_value: f64,
    pub terms: Vec<Term>,
    pub predicted: f64,
    pub neighborhood_size: usize,
    pub r_lower: f64,
    pub confidence: f64,
}

impl Explanation {
    /// The explanation's formula evaluated at an encoded row.
    pub fn evaluate_at(&self, encoded: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.base_value, |acc, t| acc + t.coefficient * encoded[t.column])
    }

    /// Coefficients keyed by encoded column name.
    pub fn coefficients(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms.iter().map(|t| (t.feature.as_str(), t.coefficient))
    }
}

#[derive(Clone, Debug)]
pub struct NeighborhoodScan {
    pub candidate_sizes: Vec<usize>,
    pub scores: Vec<AgreementScore>,
    pub best_size: usize,
    pub best_model: SurrogateModel,
    /// Row indices sorted by distance; the neighborhood is a prefix.
    pub order: Vec<usize>,
}

impl NeighborhoodScan {
    pub fn best_score(&self) -> &AgreementScore {
        let i = self
            .candidate_sizes
            .iter()
            .position(|&s| s == self.best_size)
            .expect("best size is a candidate");
        &self.scores[i]
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.order[..self.best_size]
    }
}

/// Full result of [`explain_full`].
#[derive(Clone, Debug)]
pub struct ExplainOutcome {
    pub explanation: Explanation,
    pub scan: NeighborhoodScan,
}

/// First neighborhood size tried: two rows per encoded column when the
/// table allows it, and never fewer than the CV floor.
pub fn start_size(rows: usize, encoded_columns: usize) -> usize {
    CV_FOLDS.max((2 * encoded_columns).min(rows))
}

pub fn step_from_percent(rows: usize, step_percent: f64) -> usize {
    ((rows as f64 * step_percent / 100.0).round() as usize).max(1)
}

/// Ascending sizes from [`start_size`] in increments of `step`, always
/// ending at `rows`.
pub fn candidate_sizes(rows: usize, encoded_columns: usize, step: usize) -> Result<Vec<usize>> {
    if step == 0 {
        return Err(Error::InvalidArgument("step must be >= 1".into()));
    }
    if rows < CV_FOLDS {
        return Err(Error::TooFewSamples {
            needed: CV_FOLDS,
            got: rows,
        });
    }
    let mut sizes: Vec<usize> = (start_size(rows, encoded_columns)..=rows).step_by(step).collect();
    if sizes.last() != Some(&rows) {
        sizes.push(rows);
    }
    Ok(sizes)
}

/// Whether `candidate` beats `incumbent`. Any non-degenerate score beats a
/// degenerate one; otherwise only a strictly larger lower bound wins.
fn improves(candidate: &AgreementScore, incumbent: &AgreementScore) -> bool {
    match (candidate.degenerate, incumbent.degenerate) {
        (false, true) => true,
        (true, false) => false,
        _ => candidate.r_lower > incumbent.r_lower,
    }
}

pub fn optimal_neighborhood_search(
    ds: &Dataset,
    d: &DistanceVector,
    step: usize,
    confidence: f64,
) -> Result<NeighborhoodScan> {
    if d.len() != ds.len() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: ds.len(),
        });
    }
    let encoded = ds.encoded();
    let p = encoded.ncols();
    let sizes = candidate_sizes(ds.len(), p, step)?;
    let order = d.order();

    let mut sorted = Vec::with_capacity(order.len() * p);
    for &r in &order {
        sorted.extend_from_slice(encoded.row(r));
    }
    let ys: Vec<f64> = order.iter().map(|&r| ds.targets()[r]).collect();
    let names = encoded.column_names();

    let fitted: Vec<(SurrogateModel, AgreementScore)> = sizes
        .par_iter()
        .map(|&size| {
            let data = &sorted[..size * p];
            let y = &ys[..size];
            let model = fit_rows(data, p, y, names)?;
            let yhat: Vec<f64> = data.chunks_exact(p.max(1)).take(size).map(|row| model.predict(row)).collect();
            let yhat = if p == 0 { vec![model.intercept; size] } else { yhat };
            let score = r_lower_bound(y, &yhat, confidence)?;
            Ok((model, score))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, (_, score)) in fitted.iter().enumerate().skip(1) {
        if improves(score, &fitted[best].1) {
            best = i;
        }
    }
    let best_size = sizes[best];
    let (models, scores): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let best_model = models.into_iter().nth(best).expect("index in range");
    Ok(NeighborhoodScan {
        candidate_sizes: sizes,
        scores,
        best_size,
        best_model,
        order,
    })
}

fn resolve<'a>(ds: &'a Dataset, query: &'a Query) -> Result<(&'a DataPoint, PointId)> {
    match query {
        Query::Row(i) => Ok((ds.row(*i)?, PointId::Row(*i))),
        Query::Point { point, tag } => {
            ds.check_point(point)?;
            Ok((point, PointId::External(tag.clone())))
        }
    }
}

/// Builds the user-facing explanation of `model` at `point`.
pub fn explanation_from_model(
    ds: &Dataset,
    model: &SurrogateModel,
    point: &DataPoint,
    point_id: PointId,
    r_lower: f64,
    confidence: f64,
) -> Explanation {
    let x = ds.encode_point(point);
    let terms: Vec<Term> = model
        .coefficients
        .iter()
        .map(|c| Term {
            feature: c.name.clone(),
            coefficient: c.value,
            value: x[c.index],
            contribution: c.value * x[c.index] + 0.0,
            column: c.index,
        })
        .collect();
    let predicted = terms
        .iter()
        .fold(model.intercept, |acc, t| acc + t.contribution);
    Explanation {
        point_id,
        base_value: model.intercept,
        terms,
        predicted,
        neighborhood_size: model.neighborhood_size,
        r_lower,
        confidence,
    }
}

pub fn explain_full(ds: &Dataset, query: &Query, options: &ExplainOptions) -> Result<ExplainOutcome> {
    options.validate()?;
    let (point, point_id) = resolve(ds, query)?;
    let distances = compute_distances(ds, ds.cooccurrence(), point)?;
    let step = step_from_percent(ds.len(), options.step_percent);
    let scan = optimal_neighborhood_search(ds, &distances, step, options.confidence)?;
    let explanation = explanation_from_model(
        ds,
        &scan.best_model,
        point,
        point_id,
        scan.best_score().r_lower,
        options.confidence,
    );
    Ok(ExplainOutcome { explanation, scan })
}

/// Distances, neighborhood scan, then the winning surrogate evaluated at
/// the query point.
pub fn explain(ds: &Dataset, query: &Query, options: &ExplainOptions) -> Result<Explanation> {
    explain_full(ds, query, options).map(|o| o.explanation)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Text,
    #[default]
    Structured,
}

fn bar(contribution: f64, max_abs: f64) -> String {
    if max_abs <= 0.0 {
        return String::new();
    }
    let len = ((BAR_WIDTH as f64) * contribution.abs() / max_abs).round() as usize;
    let glyph = if contribution < 0.0 { "-" } else { "+" };
    glyph.repeat(len)
}

/// Text layout: base value, one bar per term by descending absolute
/// contribution, total, and the neighborhood size.
pub fn render_text(e: &Explanation) -> String {
    let mut terms: Vec<&Term> = e.terms.iter().collect();
    // stable: equal magnitudes keep column order
    terms.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
    let width = terms
        .iter()
        .map(|t| t.feature.chars().count())
        .chain(std::iter::once("base value".len()))
        .max()
        .unwrap_or(0);
    let max_abs = terms
        .iter()
        .fold(0.0f64, |m, t| m.max(t.contribution.abs()));
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>14.4}", "base value", e.base_value);
    for t in terms {
        let _ = writeln!(
            out,
            "{:<width$}  {:>+14.4}  {}",
            t.feature,
            t.contribution,
            bar(t.contribution, max_abs)
        );
    }
    let _ = writeln!(out, "{:<width$}  {:>14.4}", "total", e.predicted);
    let _ = writeln!(
        out,
        "applies to {} neighbors (r_lower {:.4} at confidence {})",
        e.neighborhood_size, e.r_lower, e.confidence
    );
    out
}

pub fn render_explanation(e: &Explanation, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => render_text(e),
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(e).expect("explanation serializes");
            s.push('\n');
            s
        }
    }
}
