//! Disjunctive (one-hot), correspondence, and Burt matrices.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataio::{CategoricalTable, CategoryVocabulary};
use crate::error::{Error, Result};

/// Indicator matrix G: one row per respondent, one column per category.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjunctiveMatrix {
    values: DMatrix<f64>,
    n_vars: usize,
    grand_total: usize,
}

impl DisjunctiveMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// N, the sum of all entries (rows x d).
    pub fn grand_total(&self) -> usize {
        self.grand_total
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Number of ones in each category column.
    pub fn column_counts(&self) -> Vec<usize> {
        self.values
            .column_iter()
            .map(|c| c.iter().filter(|&&x| x != 0.0).count())
            .collect()
    }
}

pub fn one_hot(table: &CategoricalTable, vocab: &CategoryVocabulary) -> Result<DisjunctiveMatrix> {
    let (p, d) = (table.n_rows(), table.n_vars());
    let mut columns = Vec::with_capacity(d);
    for schema in table.schemas() {
        let cols = schema
            .levels
            .iter()
            .map(|level| vocab.position(&schema.name, level))
            .collect::<Vec<_>>();
        columns.push(cols);
    }
    let mut values = DMatrix::zeros(p, vocab.len());
    for r in 0..p {
        for (v, cols) in columns.iter().enumerate() {
            let li = table.level_index(r, v);
            let k = cols[li].ok_or_else(|| Error::OutsideVocabulary {
                variable: table.schemas()[v].name.clone(),
                level: table.level(r, v).to_string(),
            })?;
            values[(r, k)] = 1.0;
        }
    }
    Ok(DisjunctiveMatrix {
        values,
        n_vars: d,
        grand_total: p * d,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Z = G / N.
    Raw,
    /// G / N with each column's mean removed.
    #[default]
    Centered,
    /// Standardized residuals of G / N under row/column independence.
    #[serde(alias = "ca")]
    CaStandardized,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "centered" => Ok(Normalization::Centered),
            "ca" | "ca_standardized" => Ok(Normalization::CaStandardized),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization `{other}` (expected raw, centered or ca)"
            ))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Raw => "raw",
            Normalization::Centered => "centered",
            Normalization::CaStandardized => "ca",
        })
    }
}

/// Correspondence matrix Z derived from G, together with the column masses
/// of G / N (which stay meaningful even when Z itself is centered).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMatrix {
    values: DMatrix<f64>,
    mode: Normalization,
    column_masses: Vec<f64>,
}

impl CorrespondenceMatrix {
    pub fn new(values: DMatrix<f64>, mode: Normalization, column_masses: Vec<f64>) -> Result<Self> {
        if column_masses.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} masses for {} columns",
                column_masses.len(),
                values.ncols()
            )));
        }
        Ok(Self {
            values,
            mode,
            column_masses,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mode(&self) -> Normalization {
        self.mode
    }

    /// Column sums of G / N.
    pub fn column_masses(&self) -> &[f64] {
        &self.column_masses
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

pub fn correspondence(g: &DisjunctiveMatrix, mode: Normalization) -> Result<CorrespondenceMatrix> {
    if g.grand_total == 0 || g.values.is_empty() {
        return Err(Error::InvalidArgument("empty disjunctive matrix".into()));
    }
    let n = g.grand_total as f64;
    let mut z = &g.values / n;
    let masses: Vec<f64> = z.column_iter().map(|c| c.sum()).collect();
    match mode {
        Normalization::Raw => {}
        Normalization::Centered => {
            let rows = z.nrows() as f64;
            for (mut col, mass) in z.column_iter_mut().zip(&masses) {
                col.add_scalar_mut(-mass / rows);
            }
        }
        Normalization::CaStandardized => {
            let row_masses: Vec<f64> = z.row_iter().map(|r| r.sum()).collect();
            for (k, mut col) in z.column_iter_mut().enumerate() {
                let c = masses[k];
                for (i, x) in col.iter_mut().enumerate() {
                    let expected = row_masses[i] * c;
                    *x = if expected > 0.0 {
                        (*x - expected) / expected.sqrt()
                    } else {
                        0.0
                    };
                }
            }
        }
    }
    CorrespondenceMatrix::new(z, mode, masses)
}

/// Symmetric cross-product B = ZᵀZ.
#[derive(Debug, Clone, PartialEq)]
pub struct BurtMatrix {
    values: DMatrix<f64>,
    source_rows: usize,
    // Z itself, when known. Quadratic forms are then ‖Zu‖², which stays
    // nonnegative and accurate for u near the null space.
    factor: Option<DMatrix<f64>>,
}

impl BurtMatrix {
    /// Wraps an explicit matrix; it must be square and exactly symmetric.
    pub fn from_matrix(values: DMatrix<f64>, source_rows: usize) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch(
                "Burt matrix must be square".into(),
            ));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Burt matrix"));
        }
        if values != values.transpose() {
            return Err(Error::InvalidArgument(
                "Burt matrix must be symmetric".into(),
            ));
        }
        Ok(Self {
            values,
            source_rows,
            factor: None,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    /// uᵀBu.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        if let Some(z) = &self.factor {
            return z
                .row_iter()
                .map(|row| {
                    let x: f64 = row.iter().zip(u).map(|(a, b)| a * b).sum();
                    x * x
                })
                .sum();
        }
        let k = self.dim();
        let mut acc = 0.0;
        for j in 0..k {
            let bu: f64 = (0..k).map(|i| self.values[(i, j)] * u[i]).sum();
            acc += u[j] * bu;
        }
        acc
    }
}

pub fn burt(z: &CorrespondenceMatrix) -> BurtMatrix {
    let k = z.ncols();
    let zv = &z.values;
    let mut values = DMatrix::zeros(k, k);
    for i in 0..k {
        let ci = zv.column(i);
        for j in i..k {
            let x = ci.dot(&zv.column(j));
            values[(i, j)] = x;
            values[(j, i)] = x;
        }
    }
    BurtMatrix {
        values,
        source_rows: z.nrows(),
        factor: Some(zv.clone()),
    }
}

/// One-hot, normalize, and cross-multiply in one step.
pub fn encode_group(
    table: &CategoricalTable,
    vocab: &CategoryVocabulary,
    mode: Normalization,
) -> Result<(CorrespondenceMatrix, BurtMatrix)> {
    let z = correspondence(&one_hot(table, vocab)?, mode)?;
    let b = burt(&z);
    Ok((z, b))
}

/// Writes `m` as CSV: a header of column labels followed by one line per row.
pub fn write_matrix_csv<W: Write>(out: W, labels: &[String], m: &DMatrix<f64>) -> Result<()> {
    if labels.len() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} columns",
            labels.len(),
            m.ncols()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(labels)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
