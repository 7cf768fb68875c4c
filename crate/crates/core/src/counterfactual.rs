//! Counterfactuals: move a point toward a reference value by copying the
//! explanatory features of a real row whose target lies near that value.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{DataPoint, Dataset, FeatureValue};
use crate::distance::{compute_distances, distance_unchecked};
use crate::error::{Error, Result};
use crate::explainer::{explain, ExplainOptions, Explanation, OutputFormat, Query};

/// Default band half-width as a percentage of the reference value.
pub const DEFAULT_EPSILON_PERCENT: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CounterfactualQuery {
    pub point: Query,
    pub reference_value: f64,
    /// Absolute band half-width; overrides `epsilon_percent`.
    pub epsilon: Option<f64>,
    /// Band half-width as a percentage of `|reference_value|`.
    pub epsilon_percent: f64,
    pub max_candidates: Option<usize>,
}

impl CounterfactualQuery {
    pub fn new(point: Query, reference_value: f64) -> Self {
        Self {
            point,
            reference_value,
            epsilon: None,
            epsilon_percent: DEFAULT_EPSILON_PERCENT,
            max_candidates: None,
        }
    }
}

/// `percent`% of `|reference|`, or of the target range when the reference
/// is zero. The flag reports the range fallback.
pub fn epsilon_for(ds: &Dataset, reference: f64, percent: f64) -> Result<(f64, bool)> {
    if !(percent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon percent must be > 0, got {percent}"
        )));
    }
    let (base, from_range) = if reference != 0.0 {
        (reference.abs(), false)
    } else {
        let (lo, hi) = ds.target_range();
        (hi - lo, true)
    };
    let eps = base * percent / 100.0;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(
            "epsilon is zero: reference is 0 and all targets are equal".into(),
        ));
    }
    Ok((eps, from_range))
}

fn resolve_epsilon(ds: &Dataset, q: &CounterfactualQuery) -> Result<(f64, bool)> {
    match q.epsilon {
        Some(e) if e > 0.0 => Ok((e, false)),
        Some(e) => Err(Error::InvalidArgument(format!("epsilon must be > 0, got {e}"))),
        None => epsilon_for(ds, q.reference_value, q.epsilon_percent),
    }
}

fn resolve_point<'a>(ds: &'a Dataset, q: &'a Query) -> Result<&'a DataPoint> {
    match q {
        Query::Row(i) => ds.row(*i),
        Query::Point { point, .. } => {
            ds.check_point(point)?;
            Ok(point)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Change {
    pub feature: String,
    pub old: FeatureValue,
    pub new: FeatureValue,
    #[serde(skip)]
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterfactualExplanation {
    pub original: DataPoint,
    pub modified: DataPoint,
    pub changed_features: Vec<Change>,
    pub candidate_row: usize,
    pub candidate_explanation: Explanation,
    pub objective: f64,
    pub distance_to_candidate: f64,
    pub distance_to_modified: f64,
    pub predicted_at_modified: f64,
    pub reference_value: f64,
    pub epsilon: f64,
    pub epsilon_from_range: bool,
}

/// Serialized form of a counterfactual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterfactualDocument {
    pub reference_value: f64,
    pub epsilon: f64,
    pub candidate_row: usize,
    pub changes: Vec<Change>,
    pub objective: f64,
    pub predicted_at_modified: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub epsilon_from_range: bool,
}

impl CounterfactualExplanation {
    pub fn document(&self) -> CounterfactualDocument {
        CounterfactualDocument {
            reference_value: self.reference_value,
            epsilon: self.epsilon,
            candidate_row: self.candidate_row,
            changes: self.changed_features.clone(),
            objective: self.objective,
            predicted_at_modified: self.predicted_at_modified,
            epsilon_from_range: self.epsilon_from_range,
        }
    }

    /// Number of modified features.
    pub fn change_count(&self) -> usize {
        self.changed_features.len()
    }
}

/// Rows whose target lies in `[reference - epsilon, reference + epsilon]`,
/// nearest first.
pub fn find_candidates(ds: &Dataset, q: &CounterfactualQuery) -> Result<Vec<usize>> {
    let (epsilon, _) = resolve_epsilon(ds, q)?;
    let point = resolve_point(ds, &q.point)?;
    candidates_in_band(ds, point, q.reference_value, epsilon, q.max_candidates)
}

fn candidates_in_band(
    ds: &Dataset,
    point: &DataPoint,
    reference: f64,
    epsilon: f64,
    max: Option<usize>,
) -> Result<Vec<usize>> {
    let (lo, hi) = (reference - epsilon, reference + epsilon);
    let order = compute_distances(ds, ds.cooccurrence(), point)?;
    let mut rows: Vec<usize> = order
        .entries()
        .iter()
        .map(|e| e.row)
        .filter(|&r| {
            let y = ds.targets()[r];
            y >= lo && y <= hi
        })
        .collect();
    if rows.is_empty() {
        let (tlo, thi) = ds.target_range();
        let gap = if reference < tlo {
            tlo - reference
        } else if reference > thi {
            reference - thi
        } else {
            epsilon
        };
        return Err(Error::NoCandidates {
            reference,
            epsilon,
            suggested: (2.0 * epsilon).max(gap * 1.05),
        });
    }
    if let Some(k) = max {
        rows.truncate(k.max(1));
    }
    Ok(rows)
}

struct Proposal {
    row: usize,
    modified: DataPoint,
    changed: Vec<usize>,
    objective: f64,
    d_candidate: f64,
    d_modified: f64,
}

fn propose(ds: &Dataset, x: &DataPoint, row: usize, explanation: &Explanation) -> Option<Proposal> {
    let candidate = &ds.rows()[row];
    let origin = ds.encoded().origin();
    let mut features: Vec<usize> = explanation.terms.iter().map(|t| origin[t.column]).collect();
    features.sort_unstable();
    features.dedup();
    let mut modified = x.clone();
    for &f in &features {
        ds.copy_value(&mut modified, candidate, f);
    }
    let changed: Vec<usize> = features
        .into_iter()
        .filter(|&f| !ds.same_value(x, &modified, f))
        .collect();
    if changed.is_empty() {
        return None;
    }
    let model = ds.cooccurrence();
    let d_candidate = distance_unchecked(model, x, candidate);
    let d_modified = distance_unchecked(model, x, &modified);
    Some(Proposal {
        row,
        modified,
        objective: d_candidate + d_modified / changed.len() as f64,
        changed,
        d_candidate,
        d_modified,
    })
}

fn better(a: &Proposal, b: &Proposal) -> bool {
    a.objective
        .total_cmp(&b.objective)
        .then(a.d_candidate.total_cmp(&b.d_candidate))
        .then(a.row.cmp(&b.row))
        == Ordering::Less
}

/// Same as [`counterfactual`] with a caller-supplied explanation source,
/// so callers can share explanations across queries.
pub fn counterfactual_with<F>(
    ds: &Dataset,
    q: &CounterfactualQuery,
    explain_row: F,
) -> Result<CounterfactualExplanation>
where
    F: Fn(usize) -> Result<Explanation> + Sync,
{
    let (epsilon, epsilon_from_range) = resolve_epsilon(ds, q)?;
    let x = resolve_point(ds, &q.point)?;
    let candidates = candidates_in_band(ds, x, q.reference_value, epsilon, q.max_candidates)?;

    let evaluated: Vec<(Explanation, Option<Proposal>)> = candidates
        .par_iter()
        .map(|&row| {
            let e = explain_row(row)?;
            let p = propose(ds, x, row, &e);
            Ok((e, p))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, &Proposal)> = None;
    for (i, (_, p)) in evaluated.iter().enumerate() {
        if let Some(p) = p {
            if best.is_none_or(|(_, b)| better(p, b)) {
                best = Some((i, p));
            }
        }
    }
    let (i, p) = best.ok_or(Error::NoChangeNeeded)?;
    let explanation = evaluated[i].0.clone();
    let predicted_at_modified = explanation.evaluate_at(&ds.encode_point(&p.modified));
    let names = ds.schema().features();
    let changed_features = p
        .changed
        .iter()
        .map(|&f| Change {
            feature: names[f].name.clone(),
            old: ds.raw_value(x, f),
            new: ds.raw_value(&p.modified, f),
            index: f,
        })
        .collect();
    Ok(CounterfactualExplanation {
        original: x.clone(),
        modified: p.modified.clone(),
        changed_features,
        candidate_row: p.row,
        candidate_explanation: explanation,
        objective: p.objective,
        distance_to_candidate: p.d_candidate,
        distance_to_modified: p.d_modified,
        predicted_at_modified,
        reference_value: q.reference_value,
        epsilon,
        epsilon_from_range,
    })
}

/// Explains every candidate in the band and returns the modification that
/// minimizes `d(x, x_i) + d(x, x') / |changes|`.
pub fn counterfactual(
    ds: &Dataset,
    q: &CounterfactualQuery,
    options: &ExplainOptions,
) -> Result<CounterfactualExplanation> {
    options.validate()?;
    counterfactual_with(ds, q, |row| explain(ds, &Query::Row(row), options))
}

/// Text: band, candidate, one line per change, then the formula's value
/// at the modified point.
pub fn render_counterfactual_text(ce: &CounterfactualExplanation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "reference value {:.4} (epsilon {:.4}{})",
        ce.reference_value,
        ce.epsilon,
        if ce.epsilon_from_range { ", from target range" } else { "" }
    );
    let _ = writeln!(out, "candidate row {}", ce.candidate_row);
    let width = ce
        .changed_features
        .iter()
        .map(|c| c.feature.chars().count())
        .max()
        .unwrap_or(0);
    for c in &ce.changed_features {
        let _ = writeln!(out, "  {:<width$}  {} -> {}", c.feature, c.old, c.new);
    }
    let _ = writeln!(out, "predicted at modified {:.4}", ce.predicted_at_modified);
    let _ = writeln!(out, "objective {:.6}", ce.objective);
    out
}

pub fn render_counterfactual(ce: &CounterfactualExplanation, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => render_counterfactual_text(ce),
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(&ce.document()).expect("document serializes");
            s.push('\n');
            s
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub reference_value: f64,
    pub epsilon: f64,
    pub predicted_at_modified: f64,
    pub deviation: f64,
    pub within_epsilon: bool,
}

/// Re-evaluates the candidate's formula at the modified point.
pub fn verify_counterfactual(
    ds: &Dataset,
    ce: &CounterfactualExplanation,
    q: &CounterfactualQuery,
) -> VerificationReport {
    let predicted = ce
        .candidate_explanation
        .evaluate_at(&ds.encode_point(&ce.modified));
    let deviation = (predicted - q.reference_value).abs();
    VerificationReport {
        reference_value: q.reference_value,
        epsilon: ce.epsilon,
        predicted_at_modified: predicted,
        deviation,
        within_epsilon: deviation <= ce.epsilon,
    }
}
