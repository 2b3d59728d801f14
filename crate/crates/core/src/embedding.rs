//! Euclidean representation of a mixed dataset: continuous columns followed by
//! the quantified categorical columns.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::{format_real, MixedDataset, ROW_ID_COLUMN};
use crate::error::{Error, Result};
use crate::homals::Quantifications;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    pub matrix: Array2<f64>,
    /// `attr` for continuous columns, `attr#dim<s>` for quantified ones.
    pub column_names: Vec<String>,
    pub row_index: Vec<u64>,
}

impl EmbeddedDataset {
    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.matrix.row(i)
    }

    pub fn select_rows(&self, rows: &[usize]) -> EmbeddedDataset {
        EmbeddedDataset {
            matrix: self.matrix.select(ndarray::Axis(0), rows),
            column_names: self.column_names.clone(),
            row_index: rows.iter().map(|&i| self.row_index[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmbedOptions {
    /// Rescale quantified columns to mean 0 / population sd 1 after mapping.
    pub restandardize_quantified: bool,
}

/// Maps every row of `d` through the fitted quantifications.
pub fn embed(d: &MixedDataset, q: &Quantifications, opts: EmbedOptions) -> Result<EmbeddedDataset> {
    let mut e = score_new(d, q)?;
    if opts.restandardize_quantified {
        let first = d.n_continuous();
        for s in first..e.dim() {
            let mut col = e.matrix.column_mut(s);
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                col.mapv_inplace(|v| (v - mean) / sd);
            }
        }
    }
    Ok(e)
}

/// Applies fitted quantifications to arbitrary rows with the same schema.
/// Levels without a quantification are an error.
pub fn score_new(rows: &MixedDataset, q: &Quantifications) -> Result<EmbeddedDataset> {
    let expected = q.schema_fingerprint();
    let actual = rows.categorical_fingerprint();
    if expected != actual {
        return Err(Error::SchemaMismatch { expected, actual });
    }
    let r = q.r();
    let n = rows.n_rows();
    let p_n = rows.n_continuous();
    let p_c = rows.n_categorical();
    let mut matrix = Array2::zeros((n, p_n + r * p_c));
    let mut names = Vec::with_capacity(matrix.ncols());

    for (s, (attr, values)) in rows.continuous().enumerate() {
        names.push(attr.name.clone());
        matrix.column_mut(s).assign(&ArrayView1::from(values));
    }
    let mut offset = p_n;
    for ((attr, codes), (qa, block)) in rows.categorical().zip(q.attributes.iter().zip(&q.blocks)) {
        let lookup: HashMap<&str, usize> = qa.levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        // dataset code -> quantification row
        let mut resolved: Vec<Option<usize>> = vec![None; attr.levels.len()];
        for (code, label) in attr.levels.iter().enumerate() {
            resolved[code] = lookup.get(label.as_str()).copied();
        }
        for s in 1..=r {
            names.push(format!("{}#dim{s}", attr.name));
        }
        for (i, &c) in codes.iter().enumerate() {
            let row = resolved[c as usize].ok_or_else(|| Error::UnseenLevel {
                attribute: attr.name.clone(),
                level: attr.levels[c as usize].clone(),
            })?;
            for s in 0..r {
                matrix[[i, offset + s]] = block[[row, s]];
            }
        }
        offset += r;
    }
    Ok(EmbeddedDataset {
        matrix,
        column_names: names,
        row_index: rows.row_ids().to_vec(),
    })
}

/// Sidecar JSON written next to an embedded CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub solution_fingerprint: String,
    pub schema_fingerprint: String,
    pub column_names: Vec<String>,
    pub n_rows: usize,
    pub restandardized_quantified: bool,
}

pub fn write_embedded_csv(e: &EmbeddedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|err| Error::io(path, err))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec![ROW_ID_COLUMN.to_string()];
    header.extend(e.column_names.iter().cloned());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for (row, id) in e.matrix.rows().into_iter().zip(&e.row_index) {
        rec.clear();
        rec.push(id.to_string());
        rec.extend(row.iter().map(|v| format_real(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|err| Error::io(path, err))?;
    Ok(())
}

/// Reads a CSV whose first column is `row_id` and whose remaining columns are reals.
pub fn read_embedded_csv(path: impl AsRef<Path>) -> Result<EmbeddedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|err| Error::io(path, err))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = rdr.headers()?.clone();
    if header.get(0) != Some(ROW_ID_COLUMN) {
        return Err(Error::UnknownColumn(ROW_ID_COLUMN.to_string()));
    }
    let column_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let dim = column_names.len();
    let mut data = Vec::new();
    let mut row_index = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let parse_err = |col: usize, token: &str| Error::ParseFailure {
            row,
            column: header.get(col).unwrap_or("?").to_string(),
            token: token.to_string(),
        };
        let id_tok = record.get(0).unwrap_or("");
        row_index.push(id_tok.parse::<u64>().map_err(|_| parse_err(0, id_tok))?);
        for c in 1..=dim {
            let tok = record.get(c).unwrap_or("");
            data.push(tok.parse::<f64>().map_err(|_| parse_err(c, tok))?);
        }
    }
    let matrix = Array2::from_shape_vec((row_index.len(), dim), data).map_err(|e| Error::ShapeMismatch {
        expected: format!("{dim} columns"),
        actual: e.to_string(),
    })?;
    Ok(EmbeddedDataset {
        matrix,
        column_names,
        row_index,
    })
}
