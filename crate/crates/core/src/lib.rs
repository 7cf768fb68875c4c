//! Local surrogate explanations for regression tables with mixed numeric,
//! categorical and binary features.
//!
//! A query point is explained by a sparse linear formula fitted on the
//! neighborhood of rows, ordered by a mixed-type distance, whose size
//! maximizes a lower confidence bound on agreement with the targets.

pub mod agreement;
pub mod counterfactual;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod evaluation;
pub mod explainer;
mod moments;
pub mod surrogate;

pub use agreement::{r_lower_bound, universal_r, AgreementScore};
pub use counterfactual::{
    counterfactual, CounterfactualExplanation, CounterfactualQuery,
};
pub use dataset::{
    encode, load_csv, DataPoint, Dataset, EncodedMatrix, FeatureKind, FeatureSchema,
    FeatureSpec,
};
pub use distance::{compute_distances, generalized_distance, CoOccurrenceModel, DistanceVector};
pub use error::{Error, Result};
pub use evaluation::{evaluate, EvaluationOptions, EvaluationReport};
pub use explainer::{
    explain, optimal_neighborhood_search, render_explanation, ExplainOptions, Explanation,
    OutputFormat, Query,
};
pub use surrogate::{train_local_surrogate, SurrogateModel};
