//! Typed mixed-attribute tables: loading, cleaning and standardization.
//!
//! A [`MixedDataset`] holds one column per attribute. Categorical columns
//! (nominal or ordinal) are stored as integer codes into the attribute's level
//! list; continuous columns are stored as `f64`. Every operation returns a new
//! dataset, so a loaded table can be shared freely across threads.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Name of the optional identifier column carried through every CSV artifact.
pub const ROW_ID_COLUMN: &str = "row_id";

/// Level label substituted for empty categorical cells when requested.
pub const MISSING_LEVEL: &str = "__NA__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Nominal,
    /// Treated exactly like [`AttributeKind::Nominal`] by every computation.
    Ordinal,
    Continuous,
}

impl AttributeKind {
    pub fn is_categorical(self) -> bool {
        !matches!(self, AttributeKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    /// Distinct level labels in code order; empty for continuous attributes.
    pub levels: Vec<String>,
}

impl AttributeSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous,
            levels: Vec::new(),
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Nominal,
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Categorical(Vec<u32>),
    Continuous(Vec<f64>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Categorical(c) => c.len(),
            Column::Continuous(v) => v.len(),
        }
    }
}

/// On-disk schema description: `{"columns":[{"name":"CARRIER","kind":"nominal"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub columns: Vec<SchemaColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub kind: AttributeKind,
}

impl SchemaFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(file)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Map empty categorical cells to the synthetic level [`MISSING_LEVEL`].
    pub missing_as_level: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    schema: Vec<AttributeSchema>,
    columns: Vec<Column>,
    row_ids: Vec<u64>,
}

impl MixedDataset {
    /// Builds a dataset, checking that codes, lengths and names are consistent.
    ///
    /// Zero rows are accepted here (row subsets may be empty); [`load_csv`]
    /// rejects empty inputs.
    pub fn new(schema: Vec<AttributeSchema>, columns: Vec<Column>, row_ids: Vec<u64>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::InvalidSchema(format!(
                "{} attributes but {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut names = HashMap::new();
        for (j, (attr, col)) in schema.iter().zip(&columns).enumerate() {
            if names.insert(attr.name.as_str(), j).is_some() {
                return Err(Error::InvalidSchema(format!("duplicate attribute `{}`", attr.name)));
            }
            if col.len() != row_ids.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} rows in `{}`", row_ids.len(), attr.name),
                    actual: col.len().to_string(),
                });
            }
            match (attr.kind.is_categorical(), col) {
                (true, Column::Categorical(codes)) => {
                    let mut seen = std::collections::HashSet::new();
                    if !attr.levels.iter().all(|l| seen.insert(l)) {
                        return Err(Error::InvalidSchema(format!("duplicate level in `{}`", attr.name)));
                    }
                    let l = attr.levels.len();
                    if let Some(bad) = codes.iter().find(|&&c| c as usize >= l) {
                        return Err(Error::InvalidSchema(format!(
                            "code {bad} out of range for `{}` with {l} levels",
                            attr.name
                        )));
                    }
                }
                (false, Column::Continuous(_)) if attr.levels.is_empty() => {}
                _ => {
                    return Err(Error::InvalidSchema(format!(
                        "column storage does not match kind of `{}`",
                        attr.name
                    )))
                }
            }
        }
        Ok(Self {
            schema,
            columns,
            row_ids,
        })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn n_categorical(&self) -> usize {
        self.schema.iter().filter(|a| a.kind.is_categorical()).count()
    }

    pub fn n_continuous(&self) -> usize {
        self.schema.len() - self.n_categorical()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::NoSuchAttribute(name.to_string()))
    }

    /// Categorical attributes in schema order with their code columns.
    pub fn categorical(&self) -> impl Iterator<Item = (&AttributeSchema, &[u32])> {
        self.schema.iter().zip(&self.columns).filter_map(|(a, c)| match c {
            Column::Categorical(codes) => Some((a, codes.as_slice())),
            Column::Continuous(_) => None,
        })
    }

    /// Continuous attributes in schema order with their values.
    pub fn continuous(&self) -> impl Iterator<Item = (&AttributeSchema, &[f64])> {
        self.schema.iter().zip(&self.columns).filter_map(|(a, c)| match c {
            Column::Continuous(v) => Some((a, v.as_slice())),
            Column::Categorical(_) => None,
        })
    }

    pub fn continuous_column(&self, name: &str) -> Result<&[f64]> {
        match &self.columns[self.attribute_index(name)?] {
            Column::Continuous(v) => Ok(v),
            Column::Categorical(_) => Err(Error::NotContinuous(name.to_string())),
        }
    }

    /// Hash of the categorical attribute names and kinds, in schema order.
    pub fn categorical_fingerprint(&self) -> String {
        categorical_fingerprint(self.categorical().map(|(a, _)| a.name.as_str()))
    }

    /// New dataset holding the given rows (in the given order), schema unchanged.
    pub fn select_rows(&self, rows: &[usize]) -> MixedDataset {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Categorical(codes) => Column::Categorical(rows.iter().map(|&i| codes[i]).collect()),
                Column::Continuous(v) => Column::Continuous(rows.iter().map(|&i| v[i]).collect()),
            })
            .collect();
        MixedDataset {
            schema: self.schema.clone(),
            columns,
            row_ids: rows.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    pub fn schema_file(&self) -> SchemaFile {
        SchemaFile {
            columns: self
                .schema
                .iter()
                .map(|a| SchemaColumn {
                    name: a.name.clone(),
                    kind: a.kind,
                })
                .collect(),
        }
    }
}

pub(crate) fn categorical_fingerprint<'a>(names: impl Iterator<Item = &'a str>) -> String {
    let mut hasher = Sha256::new();
    for name in names {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Loads a CSV file typed by a JSON schema file.
pub fn load_csv(path: impl AsRef<Path>, schema_path: impl AsRef<Path>, opts: LoadOptions) -> Result<MixedDataset> {
    let path = path.as_ref();
    let schema = SchemaFile::read(schema_path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &schema, opts)
}

/// Parses CSV text from any reader. Columns absent from the schema are
/// ignored, except a `row_id` column, which supplies row identifiers.
pub fn read_csv<R: Read>(reader: R, schema: &SchemaFile, opts: LoadOptions) -> Result<MixedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::EmptyFile);
    }
    let position = |name: &str| header.iter().position(|h| h == name);

    let mut sources = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let idx = position(&col.name).ok_or_else(|| Error::UnknownColumn(col.name.clone()))?;
        sources.push(idx);
    }
    let row_id_idx = if schema.columns.iter().any(|c| c.name == ROW_ID_COLUMN) {
        None
    } else {
        position(ROW_ID_COLUMN)
    };

    struct Builder {
        levels: Vec<String>,
        lookup: HashMap<String, u32>,
        codes: Vec<u32>,
        values: Vec<f64>,
    }
    let mut builders: Vec<Builder> = schema
        .columns
        .iter()
        .map(|_| Builder {
            levels: Vec::new(),
            lookup: HashMap::new(),
            codes: Vec::new(),
            values: Vec::new(),
        })
        .collect();
    let mut row_ids = Vec::new();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        match row_id_idx {
            Some(i) => {
                let token = record.get(i).unwrap_or("").trim();
                let id = token.parse::<u64>().map_err(|_| Error::ParseFailure {
                    row,
                    column: ROW_ID_COLUMN.to_string(),
                    token: token.to_string(),
                })?;
                row_ids.push(id);
            }
            None => row_ids.push(row as u64),
        }
        for ((col, &src), b) in schema.columns.iter().zip(&sources).zip(builders.iter_mut()) {
            let raw = record.get(src).unwrap_or("");
            if col.kind.is_categorical() {
                let label = if raw.is_empty() {
                    if !opts.missing_as_level {
                        return Err(Error::MissingValue {
                            row,
                            column: col.name.clone(),
                        });
                    }
                    MISSING_LEVEL
                } else {
                    raw
                };
                let code = match b.lookup.get(label) {
                    Some(&c) => c,
                    None => {
                        let c = b.levels.len() as u32;
                        b.levels.push(label.to_string());
                        b.lookup.insert(label.to_string(), c);
                        c
                    }
                };
                b.codes.push(code);
            } else {
                let token = raw.trim();
                if token.is_empty() {
                    return Err(Error::MissingValue {
                        row,
                        column: col.name.clone(),
                    });
                }
                let v = token
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::ParseFailure {
                        row,
                        column: col.name.clone(),
                        token: token.to_string(),
                    })?;
                b.values.push(v);
            }
        }
    }
    if row_ids.is_empty() {
        return Err(Error::EmptyFile);
    }

    let mut attrs = Vec::with_capacity(builders.len());
    let mut columns = Vec::with_capacity(builders.len());
    for (col, b) in schema.columns.iter().zip(builders) {
        if col.kind.is_categorical() {
            attrs.push(AttributeSchema {
                name: col.name.clone(),
                kind: col.kind,
                levels: b.levels,
            });
            columns.push(Column::Categorical(b.codes));
        } else {
            attrs.push(AttributeSchema::continuous(col.name.clone()));
            columns.push(Column::Continuous(b.values));
        }
    }
    MixedDataset::new(attrs, columns, row_ids)
}

/// Writes the dataset as CSV with a leading `row_id` column.
pub fn write_csv(d: &MixedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(d, std::io::BufWriter::new(file))
}

pub fn write_csv_to<W: Write>(d: &MixedDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![ROW_ID_COLUMN.to_string()];
    header.extend(d.schema.iter().map(|a| a.name.clone()));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..d.n_rows() {
        record.clear();
        record.push(d.row_ids[i].to_string());
        for (attr, col) in d.schema.iter().zip(&d.columns) {
            match col {
                Column::Categorical(codes) => record.push(attr.levels[codes[i] as usize].clone()),
                Column::Continuous(v) => record.push(format_real(v[i])),
            }
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v}")
}

fn mean_and_population_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // second pass corrects the rounding error of the first
    let correction = values.iter().map(|v| v - mean).sum::<f64>() / n;
    let mean = mean + correction;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Rescales every continuous column to mean 0 and population standard deviation 1.
pub fn standardize(d: &MixedDataset) -> Result<MixedDataset> {
    let mut out = d.clone();
    for (attr, col) in out.schema.iter().zip(out.columns.iter_mut()) {
        if let Column::Continuous(values) = col {
            let (mean, sd) = mean_and_population_sd(values);
            if !(sd > 0.0) {
                return Err(Error::ConstantColumn(attr.name.clone()));
            }
            for v in values.iter_mut() {
                *v = (*v - mean) / sd;
            }
        }
    }
    Ok(out)
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Keeps only rows whose `attr` value is at most the `q`-quantile of that column.
pub fn clip_upper_quantile(d: &MixedDataset, attr: &str, q: f64) -> Result<MixedDataset> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::QuantileOutOfRange(q));
    }
    let values = d.continuous_column(attr)?;
    if values.is_empty() {
        return Ok(d.clone());
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = quantile_sorted(&sorted, q);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] <= cut).collect();
    Ok(d.select_rows(&keep))
}
