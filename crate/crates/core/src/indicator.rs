//! Sparse one-hot indicator matrix of the categorical sub-table.
//!
//! Each block `G_j` is stored as one level code per row, so products with
//! `G_j` and `G_j'` are a gather and a scatter respectively and the dense
//! `n x ncc` matrix is never formed outside of test tooling.

use std::io::Write;

use ndarray::{Array2, ArrayView2};

use crate::dataset::MixedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorBlock {
    pub attribute: String,
    /// Observed level labels; column `c` of the block corresponds to `levels[c]`.
    pub levels: Vec<String>,
    /// Block column of each row.
    pub codes: Vec<u32>,
    /// Diagonal of `D_j = G_j' G_j`.
    pub counts: Vec<usize>,
    /// Dataset level code for each retained block column.
    pub source_codes: Vec<u32>,
}

impl IndicatorBlock {
    /// Builds a block from raw codes, dropping levels that never occur.
    pub fn from_codes(attribute: impl Into<String>, levels: &[String], raw: &[u32]) -> Self {
        let mut counts = vec![0usize; levels.len()];
        for &c in raw {
            counts[c as usize] += 1;
        }
        let mut remap = vec![u32::MAX; levels.len()];
        let mut kept_levels = Vec::new();
        let mut kept_counts = Vec::new();
        let mut source_codes = Vec::new();
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                remap[c] = kept_levels.len() as u32;
                kept_levels.push(levels[c].clone());
                kept_counts.push(count);
                source_codes.push(c as u32);
            }
        }
        Self {
            attribute: attribute.into(),
            levels: kept_levels,
            codes: raw.iter().map(|&c| remap[c as usize]).collect(),
            counts: kept_counts,
            source_codes,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_rows(&self) -> usize {
        self.codes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    n_rows: usize,
    blocks: Vec<IndicatorBlock>,
}

impl IndicatorMatrix {
    pub fn from_blocks(blocks: Vec<IndicatorBlock>) -> Result<Self> {
        let first = blocks.first().ok_or(Error::NoCategoricalAttributes)?;
        let n_rows = first.n_rows();
        if let Some(b) = blocks.iter().find(|b| b.n_rows() != n_rows) {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_rows} rows"),
                actual: format!("{} rows in `{}`", b.n_rows(), b.attribute),
            });
        }
        Ok(Self { n_rows, blocks })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn blocks(&self) -> &[IndicatorBlock] {
        &self.blocks
    }

    /// Number of categorical attributes, `p_c`.
    pub fn n_attributes(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of indicator columns, `ncc = sum_j l_j`.
    pub fn ncc(&self) -> usize {
        self.blocks.iter().map(IndicatorBlock::n_levels).sum()
    }

    /// Dense `n x ncc` materialization; for tests and small diagnostics only.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.n_rows, self.ncc()));
        let mut offset = 0;
        for b in &self.blocks {
            for (i, &c) in b.codes.iter().enumerate() {
                g[[i, offset + c as usize]] = 1.0;
            }
            offset += b.n_levels();
        }
        g
    }

    /// Writes the nonzeros as `row col 1` lines, one per row per attribute.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.n_rows {
            let mut offset = 0;
            for b in &self.blocks {
                writeln!(w, "{} {} 1", i, offset + b.codes[i] as usize)?;
                offset += b.n_levels();
            }
        }
        Ok(())
    }
}

/// Builds the indicator matrix of every categorical attribute of `d`.
pub fn build_indicator(d: &MixedDataset) -> Result<IndicatorMatrix> {
    let blocks: Vec<IndicatorBlock> = d
        .categorical()
        .map(|(attr, codes)| IndicatorBlock::from_codes(attr.name.clone(), &attr.levels, codes))
        .collect();
    if blocks.is_empty() {
        return Err(Error::NoCategoricalAttributes);
    }
    Ok(IndicatorMatrix {
        n_rows: d.n_rows(),
        blocks,
    })
}

/// `G_j * v`: row `i` of the result is row `code(i)` of `v`.
pub fn apply_block(block: &IndicatorBlock, v: ArrayView2<f64>) -> Result<Array2<f64>> {
    if v.nrows() != block.n_levels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows", block.n_levels()),
            actual: format!("{} rows", v.nrows()),
        });
    }
    let mut out = Array2::zeros((block.n_rows(), v.ncols()));
    for (mut row, &c) in out.rows_mut().into_iter().zip(&block.codes) {
        row.assign(&v.row(c as usize));
    }
    Ok(out)
}

/// `G_j' * x`: row `l` of the result is the sum of the rows of `x` carrying level `l`.
pub fn apply_block_transpose(block: &IndicatorBlock, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != block.n_rows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows", block.n_rows()),
            actual: format!("{} rows", x.nrows()),
        });
    }
    let r = x.ncols();
    let mut out = Array2::zeros((block.n_levels(), r));
    for (row, &c) in x.rows().into_iter().zip(&block.codes) {
        let mut target = out.row_mut(c as usize);
        target += &row;
    }
    Ok(out)
}
