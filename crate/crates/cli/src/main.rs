use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsx_core::counterfactual::{render_counterfactual, CounterfactualQuery};
use lsx_core::evaluation::{
    evaluate, render_report, test_split, EvaluationOptions, DEFAULT_KNN, DEFAULT_TEST_FRACTION,
};
use lsx_core::explainer::{explain, render_explanation, ExplainOptions, OutputFormat, Query};
use lsx_core::{counterfactual, load_csv, Dataset, FeatureSchema};

/// Local linear explanations for tabular regression data.
#[derive(Debug, Parser)]
#[command(name = "lsx", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explain the target value of one point.
    Explain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Find a minimal change moving a point's value to a reference value.
    Counterfactual {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long = "ref-value", allow_negative_numbers = true)]
        ref_value: f64,
        /// Band half-width as a percentage of |ref-value|.
        #[arg(long = "epsilon-percent", default_value_t = 5.0, value_parser = positive)]
        epsilon_percent: f64,
        /// Only consider this many nearest rows from the band.
        #[arg(long = "max-candidates", value_parser = clap::value_parser!(u64).range(1..))]
        max_candidates: Option<u64>,
    },
    /// Fidelity, generality, simplicity and robustness over a test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Neighbors used by the robustness metric.
        #[arg(long, default_value_t = DEFAULT_KNN as u64, value_parser = clap::value_parser!(u64).range(1..))]
        knn: u64,
        /// Trailing share of rows used as test points.
        #[arg(long = "test-fraction", default_value_t = DEFAULT_TEST_FRACTION, value_parser = fraction)]
        test_fraction: f64,
        /// Also report counterfactual fidelity.
        #[arg(long)]
        counterfactual: bool,
        /// Also report recovery of the global OLS top-k features.
        #[arg(long = "top-k", value_parser = clap::value_parser!(u64).range(1..))]
        top_k: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long = "data-path", visible_alias = "data", value_name = "CSV")]
    data_path: PathBuf,
    /// Feature kinds and target, as JSON or TOML.
    #[arg(long = "schema-path", visible_alias = "schema", value_name = "FILE")]
    schema_path: Option<PathBuf>,
    /// Overrides the schema's target.
    #[arg(long = "target-column", visible_alias = "target", value_name = "NAME")]
    target_column: Option<String>,
    #[arg(long, default_value_t = 0.95, value_parser = open_unit)]
    confidence: f64,
    #[arg(long = "step-percent", default_value_t = 1.0, value_parser = step_percent)]
    step_percent: f64,
    #[arg(long = "output-format", visible_alias = "format", value_enum, default_value_t = Format::Structured)]
    output_format: Format,
    /// Worker threads; output does not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct PointArgs {
    #[arg(long = "row-index", visible_alias = "index")]
    row_index: Option<usize>,
    /// Inline point, `name=value,...` covering every feature.
    #[arg(long, value_name = "NAME=VALUE,...", value_parser = inline_point)]
    point: Option<InlinePoint>,
}

#[derive(Clone, Debug)]
struct InlinePoint {
    text: String,
    pairs: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Structured,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => OutputFormat::Text,
            Format::Structured => OutputFormat::Structured,
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{s}` is not a finite number"))
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn step_percent(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v <= 100.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 100], got {v}"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

fn inline_point(s: &str) -> Result<InlinePoint, String> {
    let pairs = s
        .split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, found `{kv}`"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(format!("empty feature name in `{kv}`"));
            }
            Ok((k.to_string(), v.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InlinePoint {
        text: s.to_string(),
        pairs,
    })
}

impl Common {
    fn load(&self) -> lsx_core::Result<Dataset> {
        let schema = self
            .schema_path
            .as_ref()
            .map(FeatureSchema::from_path)
            .transpose()?;
        load_csv(&self.data_path, schema.as_ref(), self.target_column.as_deref())
    }

    fn options(&self) -> ExplainOptions {
        ExplainOptions {
            confidence: self.confidence,
            step_percent: self.step_percent,
        }
    }
}

impl PointArgs {
    fn query(&self, ds: &Dataset) -> lsx_core::Result<Query> {
        match (&self.row_index, &self.point) {
            (Some(i), _) => {
                ds.row(*i)?;
                Ok(Query::Row(*i))
            }
            (None, Some(p)) => {
                let point = ds.point_from_raw(p.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
                Ok(Query::Point {
                    point,
                    tag: p.text.clone(),
                })
            }
            (None, None) => unreachable!("clap requires one of --row-index or --point"),
        }
    }
}

fn run(command: &Command) -> lsx_core::Result<String> {
    match command {
        Command::Explain { common, point } => {
            let ds = common.load()?;
            let e = explain(&ds, &point.query(&ds)?, &common.options())?;
            Ok(render_explanation(&e, common.output_format.into()))
        }
        Command::Counterfactual {
            common,
            point,
            ref_value,
            epsilon_percent,
            max_candidates,
        } => {
            let ds = common.load()?;
            let mut q = CounterfactualQuery::new(point.query(&ds)?, *ref_value);
            q.epsilon_percent = *epsilon_percent;
            q.max_candidates = max_candidates.map(|k| k as usize);
            let ce = counterfactual(&ds, &q, &common.options())?;
            Ok(render_counterfactual(&ce, common.output_format.into()))
        }
        Command::Evaluate {
            common,
            knn,
            test_fraction,
            counterfactual,
            top_k,
        } => {
            let ds = common.load()?;
            let test = test_split(ds.len(), *test_fraction)?;
            let options = EvaluationOptions {
                explain: common.options(),
                knn: *knn as usize,
                counterfactual: *counterfactual,
                top_k: top_k.map(|k| k as usize),
            };
            let report = evaluate(&ds, &test, &options)?;
            Ok(render_report(&report, common.output_format.into()))
        }
    }
}

fn threads(command: &Command) -> Option<u64> {
    match command {
        Command::Explain { common, .. }
        | Command::Counterfactual { common, .. }
        | Command::Evaluate { common, .. } => common.threads,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads(&cli.command) {
        pool = pool.num_threads(n as usize);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(&cli.command)),
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::FAILURE;
        }
    };
    match result {
        Ok(doc) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(doc.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
