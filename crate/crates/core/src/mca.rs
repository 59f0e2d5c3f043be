//! Standard (Burt-matrix) multiple correspondence analysis.

use nalgebra::DMatrix;

use crate::eigen::top_eigenpairs;
use crate::encode::{BurtMatrix, CorrespondenceMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_K_PRIME: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct McaModel {
    eigenvectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    column_masses: Vec<f64>,
}

impl McaModel {
    pub fn new(eigenvectors: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvectors, {} eigenvalues",
                eigenvectors.ncols(),
                eigenvalues.len()
            )));
        }
        Ok(Self {
            eigenvectors,
            eigenvalues,
            column_masses: Vec::new(),
        })
    }

    /// Attaches the diagonal D (column sums of G / N) used for category
    /// coordinates.
    pub fn with_column_masses(mut self, masses: &[f64]) -> Self {
        self.column_masses = masses.to_vec();
        self
    }

    /// W, K x K'.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn column_masses(&self) -> &[f64] {
        &self.column_masses
    }

    pub fn k_prime(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Top-`k_prime` eigenpairs of B.
pub fn fit_mca(b: &BurtMatrix, k_prime: usize) -> Result<McaModel> {
    let (w, lambda) = top_eigenpairs(b.values(), k_prime)?;
    McaModel::new(w, lambda)
}

/// Y = Z W.
pub fn mca_row_coordinates(z: &CorrespondenceMatrix, model: &McaModel) -> Result<DMatrix<f64>> {
    project(z.values(), model.eigenvectors())
}

/// Y_col = D W.
pub fn mca_category_coordinates(model: &McaModel) -> Result<DMatrix<f64>> {
    let w = model.eigenvectors();
    if model.column_masses.len() != w.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} column masses for {} categories",
            model.column_masses.len(),
            w.nrows()
        )));
    }
    let mut y = w.clone();
    for (mut row, mass) in y.row_iter_mut().zip(&model.column_masses) {
        row *= *mass;
    }
    Ok(y)
}

pub(crate) fn project(z: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if z.ncols() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Z has {} columns, eigenvectors have {} rows",
            z.ncols(),
            u.nrows()
        )));
    }
    Ok(z * u)
}
