use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Role};
use crate::error::{Error, Result};

/// How a source column becomes model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Parsed as a real number.
    Numeric,
    /// First level maps to 0, second to 1.
    Binary([String; 2]),
    /// Level `k` maps to `k`.
    Ordinal(Vec<String>),
    /// One indicator column per level after the first.
    OneHot(Vec<String>),
}

impl Encoding {
    pub fn width(&self) -> usize {
        match self {
            Encoding::OneHot(levels) => levels.len().saturating_sub(1),
            _ => 1,
        }
    }

    fn encode(&self, raw: &str, out: &mut Vec<f64>) -> std::result::Result<(), String> {
        let level = |levels: &[String]| {
            levels
                .iter()
                .position(|l| l == raw)
                .ok_or_else(|| format!("unknown level {raw:?}, expected one of {levels:?}"))
        };
        match self {
            Encoding::Numeric => out.push(
                raw.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("cannot parse {raw:?} as a number"))?,
            ),
            Encoding::Binary(levels) => out.push(level(levels)? as f64),
            Encoding::Ordinal(levels) => out.push(level(levels)? as f64),
            Encoding::OneHot(levels) => {
                let k = level(levels)?;
                out.extend((1..levels.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
            }
        }
        Ok(())
    }

    fn feature_names(&self, column: &str) -> Vec<String> {
        match self {
            Encoding::OneHot(levels) => levels[1..].iter().map(|l| format!("{column}_{l}")).collect(),
            _ => vec![column.to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub column: String,
    pub encoding: Encoding,
}

impl FeatureColumn {
    pub fn numeric(column: &str) -> Self {
        Self {
            column: column.to_string(),
            encoding: Encoding::Numeric,
        }
    }
}

/// Names of the model inputs produced by `columns`, in order.
pub fn feature_names(columns: &[FeatureColumn]) -> Vec<String> {
    columns
        .iter()
        .flat_map(|c| c.encoding.feature_names(&c.column))
        .collect()
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "NA"
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Data {
            line: 1,
            message: format!("{}: column {name:?} not found", path.display()),
        })
}

/// Reads a CSV file with a header row. Rows with a missing value (empty
/// field or `NA`) in any of the chosen columns are dropped; `labels` lists
/// the label values, whose position becomes the class index.
pub fn load_csv_dataset(
    path: impl AsRef<Path>,
    features: &[FeatureColumn],
    label_column: &str,
    labels: &[String],
    role: Role,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    if labels.len() < 2 {
        return Err(Error::InvalidConfig("at least two label values are required".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::io(path, source),
            other => Error::Data {
                line: 0,
                message: format!("{}: {other:?}", path.display()),
            },
        })?;
    let headers = reader.headers()?.clone();
    let feature_idx: Vec<usize> = features
        .iter()
        .map(|f| column_index(&headers, &f.column, path))
        .collect::<Result<_>>()?;
    let label_idx = column_index(&headers, label_column, path)?;
    let label_map: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let width: usize = features.iter().map(|f| f.encoding.width()).sum();
    let mut values = Vec::new();
    let mut classes = Vec::new();
    let mut row = Vec::with_capacity(width);
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: format!("{}: {e}", path.display()),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let chosen = feature_idx.iter().chain(std::iter::once(&label_idx));
        if chosen.map(|&i| &record[i]).any(is_missing) {
            continue;
        }
        row.clear();
        for (f, &i) in features.iter().zip(&feature_idx) {
            f.encoding
                .encode(record[i].trim(), &mut row)
                .map_err(|message| Error::Data {
                    line,
                    message: format!("{}: column {:?}: {message}", path.display(), f.column),
                })?;
        }
        let raw_label = record[label_idx].trim();
        let class = *label_map.get(raw_label).ok_or_else(|| Error::Data {
            line,
            message: format!("{}: unknown label {raw_label:?}", path.display()),
        })?;
        values.extend_from_slice(&row);
        classes.push(class);
    }
    LabeledDataset::new(values, width, classes, labels.len(), role)
}

/// Writes a prepared dataset: header row, feature columns, then an integer
/// `label` column holding class indices. Values are written in shortest
/// round-trip form.
pub fn write_dataset(path: impl AsRef<Path>, data: &LabeledDataset, names: &[String]) -> Result<()> {
    let path = path.as_ref();
    if names.len() != data.num_features() {
        return Err(Error::DimensionMismatch {
            what: "feature names",
            expected: data.num_features(),
            actual: names.len(),
        });
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
    })?;
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.push("label");
    writer.write_record(&header)?;
    let mut fields = Vec::with_capacity(names.len() + 1);
    for (x, y) in data.rows() {
        fields.clear();
        fields.extend(x.iter().map(|v| v.to_string()));
        fields.push(y.to_string());
        writer.write_record(&fields)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_dataset`]: every column but the last is a
/// numeric feature, the last holds class indices below `num_classes`.
pub fn read_dataset(path: impl AsRef<Path>, num_classes: usize, role: Role) -> Result<(LabeledDataset, Vec<String>)> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
    })?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Data {
            line: 1,
            message: format!("{}: need at least one feature and a label column", path.display()),
        });
    }
    let names: Vec<String> = headers.iter().take(headers.len() - 1).map(str::to_string).collect();
    let labels: Vec<String> = (0..num_classes).map(|k| k.to_string()).collect();
    let columns: Vec<FeatureColumn> = names.iter().map(|n| FeatureColumn::numeric(n)).collect();
    let data = load_csv_dataset(path, &columns, &headers[headers.len() - 1], &labels, role)?;
    Ok((data, names))
}

/// Describes a raw dataset on disk: split files, label column and values,
/// and the encoding of each feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
    pub label_column: String,
    pub labels: Vec<String>,
    pub features: Vec<FeatureColumn>,
    #[serde(default)]
    pub standardize: bool,
}

impl DatasetManifest {
    /// Reads a manifest; relative file paths are resolved against the
    /// manifest's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Self = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.train = dir.join(&manifest.train);
        manifest.test = dir.join(&manifest.test);
        if manifest.features.is_empty() {
            return Err(Error::InvalidConfig(format!("{}: no feature columns", path.display())));
        }
        Ok(manifest)
    }

    pub fn feature_names(&self) -> Vec<String> {
        feature_names(&self.features)
    }
}
