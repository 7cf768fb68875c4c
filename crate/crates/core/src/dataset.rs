//! Tabular input: schema, loading, standardization and one-hot encoding.
//!
//! A [`Dataset`] is built once and never mutated. Numeric columns are
//! standardized with the population standard deviation; categorical labels
//! are interned in first-appearance order so every downstream ordering is
//! reproducible from the file alone.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::distance::CoOccurrenceModel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Binary,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Categorical => "categorical",
            FeatureKind::Binary => "binary",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Number of features of each kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub numeric: usize,
    pub categorical: usize,
    pub binary: usize,
}

impl KindCounts {
    pub fn total(&self) -> usize {
        self.numeric + self.categorical + self.binary
    }
}

#[derive(Deserialize)]
struct RawSchema {
    target: String,
    features: Vec<FeatureSpec>,
}

/// Ordered feature declarations plus the name of the target column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct FeatureSchema {
    target: String,
    features: Vec<FeatureSpec>,
    #[serde(skip)]
    slots: Vec<usize>,
    #[serde(skip)]
    counts: KindCounts,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        FeatureSchema::new(raw.features, raw.target)
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>, target: impl Into<String>) -> Result<Self> {
        let target = target.into();
        let mut seen = BTreeSet::new();
        for f in &features {
            if f.name == target {
                return Err(Error::Schema(format!(
                    "feature `{}` is also the target",
                    f.name
                )));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
        }
        let mut counts = KindCounts::default();
        let slots = features
            .iter()
            .map(|f| {
                let slot = match f.kind {
                    FeatureKind::Numeric => &mut counts.numeric,
                    FeatureKind::Categorical => &mut counts.categorical,
                    FeatureKind::Binary => &mut counts.binary,
                };
                *slot += 1;
                *slot - 1
            })
            .collect();
        Ok(Self {
            target,
            features,
            slots,
            counts,
        })
    }

    /// Reads a schema document. Files ending in `.toml` are parsed as TOML,
    /// anything else as JSON.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            toml::from_str(&text).map_err(|e| Error::Schema(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))
        }
    }

    /// Same features, different target column.
    pub fn with_target(&self, target: impl Into<String>) -> Result<Self> {
        Self::new(self.features.clone(), target)
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn counts(&self) -> KindCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Position of feature `index` inside the vector of its own kind.
    pub fn slot(&self, index: usize) -> usize {
        self.slots[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

/// One row in standardized units, split by feature kind.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPoint {
    pub numeric: Vec<f64>,
    /// Category ids, interned per feature in first-appearance order.
    pub categorical: Vec<u32>,
    pub binary: Vec<u8>,
}

/// Original-unit value of a single feature.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Number(f64),
    Label(String),
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Number(v) => write!(f, "{v}"),
            FeatureValue::Label(s) => f.write_str(s),
        }
    }
}

/// Per-column standardization parameters (population std).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    fn fit(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    /// Zero-variance columns map to all zeros.
    pub fn is_constant(&self) -> bool {
        self.std == 0.0
    }

    pub fn apply(&self, raw: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (raw - self.mean) / self.std
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        self.mean + z * self.std
    }
}

/// Real-valued design matrix produced by [`encode`].
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedMatrix {
    column_names: Vec<String>,
    origin: Vec<usize>,
    values: Vec<f64>,
}

impl EncodedMatrix {
    /// `values` is row-major with `column_names.len()` columns.
    pub fn new(column_names: Vec<String>, origin: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let p = column_names.len();
        if origin.len() != p {
            return Err(Error::LengthMismatch {
                left: origin.len(),
                right: p,
            });
        }
        if p == 0 && !values.is_empty() || p > 0 && !values.len().is_multiple_of(p) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill rows of {p} columns",
                values.len()
            )));
        }
        Ok(Self {
            column_names,
            origin,
            values,
        })
    }

    /// Builds a matrix from rows, each column originating from itself.
    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::LengthMismatch {
                    left: r.len(),
                    right: p,
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(column_names, (0..p).collect(), values)
    }

    pub fn nrows(&self) -> usize {
        if self.column_names.is_empty() {
            0
        } else {
            self.values.len() / self.column_names.len()
        }
    }

    pub fn ncols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Source feature index (schema order) of each encoded column.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.ncols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ncols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.ncols());
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        Self {
            column_names: self.column_names.clone(),
            origin: self.origin.clone(),
            values,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.nrows() * cols.len());
        for i in 0..self.nrows() {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        Self {
            column_names: cols.iter().map(|&j| self.column_names[j].clone()).collect(),
            origin: cols.iter().map(|&j| self.origin[j]).collect(),
            values,
        }
    }
}

/// Immutable standardized table with its target values.
#[derive(Debug)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Vec<DataPoint>,
    targets: Vec<f64>,
    standardization: Vec<Standardization>,
    categories: Vec<Vec<String>>,
    encoded: OnceLock<EncodedMatrix>,
    cooccurrence: OnceLock<CoOccurrenceModel>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.rows == other.rows
            && self.targets == other.targets
            && self.standardization == other.standardization
            && self.categories == other.categories
    }
}

/// Loads a CSV file. Without a schema, feature kinds are inferred; `target`
/// overrides the schema's target (or picks it when inferring; the last
/// column is used otherwise).
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: Option<&FeatureSchema>,
    target: Option<&str>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Dataset::from_csv_reader(file, schema, target)
}

/// One-hot encodes a dataset. Equivalent to a clone of [`Dataset::encoded`].
pub fn encode(ds: &Dataset) -> EncodedMatrix {
    let (column_names, origin) = ds.encoded_layout();
    let mut values = Vec::with_capacity(ds.len() * column_names.len());
    for row in &ds.rows {
        values.extend(ds.encode_point(row));
    }
    EncodedMatrix {
        column_names,
        origin,
        values,
    }
}

fn infer_kind(values: &[&str]) -> FeatureKind {
    let parsed: Option<Vec<f64>> = values.iter().map(|v| v.trim().parse().ok()).collect();
    match parsed {
        Some(nums) => {
            let distinct: BTreeSet<u64> = nums.iter().map(|v| v.to_bits()).collect();
            let zero = 0.0f64.to_bits();
            let one = 1.0f64.to_bits();
            if distinct.len() == 2 && distinct.contains(&zero) && distinct.contains(&one) {
                FeatureKind::Binary
            } else {
                FeatureKind::Numeric
            }
        }
        None => FeatureKind::Categorical,
    }
}

fn parse_binary(raw: &str) -> Option<u8> {
    match raw.trim() {
        "0" => Some(0),
        "1" => Some(1),
        other => match other.parse::<f64>() {
            Ok(0.0) => Some(0),
            Ok(1.0) => Some(1),
            _ => None,
        },
    }
}

impl Dataset {
    pub fn from_csv_reader<R: Read>(
        reader: R,
        schema: Option<&FeatureSchema>,
        target: Option<&str>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Arity {
                    row,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
        }
        Self::from_records(schema, target, &header, &records)
    }

    /// Builds a dataset from a header and string cells.
    pub fn from_records(
        schema: Option<&FeatureSchema>,
        target: Option<&str>,
        header: &[String],
        records: &[Vec<String>],
    ) -> Result<Self> {
        let position: HashMap<&str, usize> = header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.as_str(), i))
            .collect();
        if position.len() != header.len() {
            return Err(Error::Schema("duplicate column names in header".into()));
        }
        for (row, rec) in records.iter().enumerate() {
            if rec.len() != header.len() {
                return Err(Error::Arity {
                    row,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            for (col, cell) in rec.iter().enumerate() {
                if cell.trim().is_empty() {
                    return Err(Error::MissingValue {
                        row,
                        column: header[col].clone(),
                    });
                }
            }
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }

        let schema = match (schema, target) {
            (Some(s), Some(t)) => s.with_target(t)?,
            (Some(s), None) => s.clone(),
            (None, _) => {
                let target = match target {
                    Some(t) => t.to_string(),
                    None => header
                        .last()
                        .cloned()
                        .ok_or_else(|| Error::Schema("empty header".into()))?,
                };
                if !position.contains_key(target.as_str()) {
                    return Err(Error::UnknownTarget(target));
                }
                let features = header
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| **h != target)
                    .map(|(col, h)| {
                        let cells: Vec<&str> = records.iter().map(|r| r[col].as_str()).collect();
                        FeatureSpec::new(h.clone(), infer_kind(&cells))
                    })
                    .collect();
                FeatureSchema::new(features, target)?
            }
        };

        let target_col = *position
            .get(schema.target())
            .ok_or_else(|| Error::UnknownTarget(schema.target().to_string()))?;
        let mut columns = Vec::with_capacity(schema.len());
        for f in schema.features() {
            let col = *position
                .get(f.name.as_str())
                .ok_or_else(|| Error::UnknownColumn(f.name.clone()))?;
            columns.push(col);
        }

        let parse_num = |row: usize, col: usize| -> Result<f64> {
            let cell = records[row][col].trim();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ParseNumber {
                    row,
                    column: header[col].clone(),
                    value: cell.to_string(),
                })
        };

        let n = records.len();
        let targets = (0..n)
            .map(|r| parse_num(r, target_col))
            .collect::<Result<Vec<_>>>()?;

        let counts = schema.counts();
        let mut raw_numeric = vec![Vec::with_capacity(n); counts.numeric];
        let mut categorical_ids = vec![Vec::with_capacity(n); counts.categorical];
        let mut categories: Vec<Vec<String>> = vec![Vec::new(); counts.categorical];
        let mut binary = vec![Vec::with_capacity(n); counts.binary];

        for (fi, f) in schema.features().iter().enumerate() {
            let col = columns[fi];
            let slot = schema.slot(fi);
            match f.kind {
                FeatureKind::Numeric => {
                    for r in 0..n {
                        raw_numeric[slot].push(parse_num(r, col)?);
                    }
                }
                FeatureKind::Categorical => {
                    let mut ids: HashMap<&str, u32> = HashMap::new();
                    for rec in records {
                        let label = rec[col].trim();
                        let next = ids.len() as u32;
                        let id = *ids.entry(label).or_insert_with(|| {
                            categories[slot].push(label.to_string());
                            next
                        });
                        categorical_ids[slot].push(id);
                    }
                }
                FeatureKind::Binary => {
                    for (r, rec) in records.iter().enumerate() {
                        let b = parse_binary(&rec[col]).ok_or_else(|| Error::NotBinary {
                            row: r,
                            column: header[col].clone(),
                            value: rec[col].trim().to_string(),
                        })?;
                        binary[slot].push(b);
                    }
                }
            }
        }

        let standardization: Vec<Standardization> =
            raw_numeric.iter().map(|c| Standardization::fit(c)).collect();
        let rows = (0..n)
            .map(|r| DataPoint {
                numeric: raw_numeric
                    .iter()
                    .zip(&standardization)
                    .map(|(c, s)| s.apply(c[r]))
                    .collect(),
                categorical: categorical_ids.iter().map(|c| c[r]).collect(),
                binary: binary.iter().map(|c| c[r]).collect(),
            })
            .collect();

        Ok(Self {
            schema,
            rows,
            targets,
            standardization,
            categories,
            encoded: OnceLock::new(),
            cooccurrence: OnceLock::new(),
        })
    }

    /// All-numeric dataset from raw (unstandardized) rows.
    pub fn from_numeric(names: &[&str], rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: targets.len(),
            });
        }
        let mut header: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let target = "__target__";
        header.push(target.to_string());
        let records: Vec<Vec<String>> = rows
            .iter()
            .zip(targets)
            .map(|(r, y)| {
                r.iter()
                    .chain(std::iter::once(y))
                    .map(|v| format!("{v:?}"))
                    .collect()
            })
            .collect();
        let schema = FeatureSchema::new(
            names
                .iter()
                .map(|n| FeatureSpec::new(*n, FeatureKind::Numeric))
                .collect(),
            target,
        )?;
        Self::from_records(Some(&schema), None, &header, &records)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[DataPoint] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> Result<&DataPoint> {
        self.rows.get(index).ok_or(Error::RowOutOfRange {
            index,
            rows: self.rows.len(),
        })
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Standardization parameters, one per numeric feature.
    pub fn standardization(&self) -> &[Standardization] {
        &self.standardization
    }

    /// Labels of categorical feature slot `slot`, indexed by category id.
    pub fn categories(&self, slot: usize) -> &[String] {
        &self.categories[slot]
    }

    /// Cached one-hot encoding of every row.
    pub fn encoded(&self) -> &EncodedMatrix {
        self.encoded.get_or_init(|| encode(self))
    }

    /// Cached co-occurrence statistics for categorical distances.
    pub fn cooccurrence(&self) -> &CoOccurrenceModel {
        self.cooccurrence
            .get_or_init(|| CoOccurrenceModel::fit(self))
    }

    pub fn target_range(&self) -> (f64, f64) {
        self.targets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                (lo.min(y), hi.max(y))
            })
    }

    fn encoded_layout(&self) -> (Vec<String>, Vec<usize>) {
        let mut names = Vec::new();
        let mut origin = Vec::new();
        for (fi, f) in self.schema.features().iter().enumerate() {
            match f.kind {
                FeatureKind::Numeric | FeatureKind::Binary => {
                    names.push(f.name.clone());
                    origin.push(fi);
                }
                FeatureKind::Categorical => {
                    for label in &self.categories[self.schema.slot(fi)] {
                        names.push(format!("{}={}", f.name, label));
                        origin.push(fi);
                    }
                }
            }
        }
        (names, origin)
    }

    /// Encodes a single point with the same column layout as [`encode`].
    pub fn encode_point(&self, point: &DataPoint) -> Vec<f64> {
        let mut out = Vec::new();
        for (fi, f) in self.schema.features().iter().enumerate() {
            let slot = self.schema.slot(fi);
            match f.kind {
                FeatureKind::Numeric => out.push(point.numeric[slot]),
                FeatureKind::Binary => out.push(f64::from(point.binary[slot])),
                FeatureKind::Categorical => {
                    let id = point.categorical[slot] as usize;
                    out.extend((0..self.categories[slot].len()).map(|c| f64::from(u8::from(c == id))));
                }
            }
        }
        out
    }

    /// Checks that a point has the component counts and label ids this
    /// dataset expects.
    pub fn check_point(&self, point: &DataPoint) -> Result<()> {
        let c = self.schema.counts();
        if point.numeric.len() != c.numeric
            || point.categorical.len() != c.categorical
            || point.binary.len() != c.binary
        {
            return Err(Error::SchemaMismatch(format!(
                "expected {}/{}/{} numeric/categorical/binary components, got {}/{}/{}",
                c.numeric,
                c.categorical,
                c.binary,
                point.numeric.len(),
                point.categorical.len(),
                point.binary.len()
            )));
        }
        if point.numeric.iter().any(|v| !v.is_finite()) {
            return Err(Error::SchemaMismatch("non-finite numeric value".into()));
        }
        if let Some(b) = point.binary.iter().find(|&&b| b > 1) {
            return Err(Error::SchemaMismatch(format!("binary value {b}")));
        }
        for (slot, &id) in point.categorical.iter().enumerate() {
            if id as usize >= self.categories[slot].len() {
                return Err(Error::SchemaMismatch(format!(
                    "category id {id} out of range for categorical slot {slot}"
                )));
            }
        }
        Ok(())
    }

    /// Builds a point from original-unit strings keyed by feature name.
    /// Every feature must be present; unknown names are rejected.
    pub fn point_from_raw<'a, I>(&self, values: I) -> Result<DataPoint>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut given: HashMap<&str, &str> = HashMap::new();
        for (k, v) in values {
            if self.schema.index_of(k).is_none() {
                return Err(Error::UnknownColumn(k.to_string()));
            }
            given.insert(k, v);
        }
        let c = self.schema.counts();
        let mut point = DataPoint {
            numeric: vec![0.0; c.numeric],
            categorical: vec![0; c.categorical],
            binary: vec![0; c.binary],
        };
        for (fi, f) in self.schema.features().iter().enumerate() {
            let raw = given
                .get(f.name.as_str())
                .ok_or_else(|| Error::SchemaMismatch(format!("missing feature `{}`", f.name)))?
                .trim();
            let slot = self.schema.slot(fi);
            match f.kind {
                FeatureKind::Numeric => {
                    let v: f64 = raw
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| Error::ParseNumber {
                            row: 0,
                            column: f.name.clone(),
                            value: raw.to_string(),
                        })?;
                    point.numeric[slot] = self.standardization[slot].apply(v);
                }
                FeatureKind::Binary => {
                    point.binary[slot] = parse_binary(raw).ok_or_else(|| Error::NotBinary {
                        row: 0,
                        column: f.name.clone(),
                        value: raw.to_string(),
                    })?;
                }
                FeatureKind::Categorical => {
                    let id = self.categories[slot]
                        .iter()
                        .position(|l| l == raw)
                        .ok_or_else(|| Error::UnseenLabel {
                            feature: f.name.clone(),
                            label: raw.to_string(),
                        })?;
                    point.categorical[slot] = id as u32;
                }
            }
        }
        Ok(point)
    }

    /// Value of feature `feature` of `point` in original units.
    pub fn raw_value(&self, point: &DataPoint, feature: usize) -> FeatureValue {
        let slot = self.schema.slot(feature);
        match self.schema.features()[feature].kind {
            FeatureKind::Numeric => {
                FeatureValue::Number(self.standardization[slot].invert(point.numeric[slot]))
            }
            FeatureKind::Binary => FeatureValue::Number(f64::from(point.binary[slot])),
            FeatureKind::Categorical => {
                FeatureValue::Label(self.categories[slot][point.categorical[slot] as usize].clone())
            }
        }
    }

    /// Whether two points agree on feature `feature`.
    pub fn same_value(&self, a: &DataPoint, b: &DataPoint, feature: usize) -> bool {
        let slot = self.schema.slot(feature);
        match self.schema.features()[feature].kind {
            FeatureKind::Numeric => a.numeric[slot] == b.numeric[slot],
            FeatureKind::Binary => a.binary[slot] == b.binary[slot],
            FeatureKind::Categorical => a.categorical[slot] == b.categorical[slot],
        }
    }

    /// Copies feature `feature` from `src` into `dst`.
    pub fn copy_value(&self, dst: &mut DataPoint, src: &DataPoint, feature: usize) {
        let slot = self.schema.slot(feature);
        match self.schema.features()[feature].kind {
            FeatureKind::Numeric => dst.numeric[slot] = src.numeric[slot],
            FeatureKind::Binary => dst.binary[slot] = src.binary[slot],
            FeatureKind::Categorical => dst.categorical[slot] = src.categorical[slot],
        }
    }
}
