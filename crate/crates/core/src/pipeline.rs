//! End-to-end fits shared by the command line and the HTTP layer.

use nalgebra::DMatrix;

use crate::alpha::{alpha_sweep, auto_alpha, AlphaTrace, AutoAlphaConfig, SweepPoint};
use crate::cmca::{
    category_coordinates, category_loadings, fit_cmca, row_coordinates, CategoryCoordinates,
    CategoryLoadings, CmcaModel,
};
use crate::dataio::{split_groups, CategoricalTable, CategoryVocabulary};
use crate::encode::{encode_group, BurtMatrix, CorrespondenceMatrix, Normalization};
use crate::error::Result;
use crate::mca::{fit_mca, mca_category_coordinates, mca_row_coordinates, McaModel};

/// One group's rows with their correspondence and Burt matrices.
#[derive(Debug, Clone)]
pub struct GroupEncoding {
    pub label: String,
    pub table: CategoricalTable,
    pub z: CorrespondenceMatrix,
    pub burt: BurtMatrix,
}

impl GroupEncoding {
    pub fn new(
        label: &str,
        table: CategoricalTable,
        vocab: &CategoryVocabulary,
        normalization: Normalization,
    ) -> Result<Self> {
        let (z, burt) = encode_group(&table, vocab, normalization)?;
        Ok(Self {
            label: label.to_string(),
            table,
            z,
            burt,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    Fixed(f64),
    Auto(AutoAlphaConfig),
}

/// Target and background encoded over one shared vocabulary.
#[derive(Debug, Clone)]
pub struct ContrastSetup {
    pub vocab: CategoryVocabulary,
    pub target: GroupEncoding,
    pub background: GroupEncoding,
    pub normalization: Normalization,
}

impl ContrastSetup {
    pub fn new(
        table: &CategoricalTable,
        target_label: &str,
        background_label: &str,
        normalization: Normalization,
    ) -> Result<Self> {
        let (t, b, vocab) = split_groups(table, target_label, background_label)?;
        let target = GroupEncoding::new(target_label, t, &vocab, normalization)?;
        let background = GroupEncoding::new(background_label, b, &vocab, normalization)?;
        Ok(Self {
            vocab,
            target,
            background,
            normalization,
        })
    }

    pub fn fit(&self, alpha: AlphaChoice, k_prime: usize) -> Result<ContrastiveFit> {
        let (b_t, b_b) = (&self.target.burt, &self.background.burt);
        let (model, trace) = match alpha {
            AlphaChoice::Fixed(a) => (fit_cmca(b_t, b_b, a, k_prime)?, None),
            AlphaChoice::Auto(cfg) => {
                let (m, t) = auto_alpha(b_t, b_b, k_prime, &cfg)?;
                (m, Some(t))
            }
        };
        let target_rows = row_coordinates(&self.target.z, &model)?;
        let background_rows = row_coordinates(&self.background.z, &model)?;
        Ok(ContrastiveFit {
            model,
            trace,
            target_rows,
            background_rows,
        })
    }

    pub fn sweep(&self, grid: &[f64], k_prime: usize) -> Result<Vec<SweepPoint>> {
        alpha_sweep(&self.target.burt, &self.background.burt, k_prime, grid)
    }
}

#[derive(Debug, Clone)]
pub struct ContrastiveFit {
    pub model: CmcaModel,
    pub trace: Option<AlphaTrace>,
    /// n x K′.
    pub target_rows: DMatrix<f64>,
    /// m x K′, projected through the target-derived cPCs.
    pub background_rows: DMatrix<f64>,
}

impl ContrastiveFit {
    pub fn category_coordinates(&self, setup: &ContrastSetup) -> Result<CategoryCoordinates> {
        category_coordinates(&setup.target.z, &self.target_rows, &self.model)
    }

    pub fn loadings(&self, setup: &ContrastSetup) -> Result<CategoryLoadings> {
        category_loadings(&self.model, &setup.vocab)
    }
}

/// Standard MCA of one table over a given vocabulary.
#[derive(Debug, Clone)]
pub struct McaFit {
    pub group: GroupEncoding,
    pub model: McaModel,
    pub rows: DMatrix<f64>,
}

impl McaFit {
    pub fn category_coordinates(&self) -> Result<DMatrix<f64>> {
        mca_category_coordinates(&self.model)
    }
}

pub fn fit_mca_table(
    label: &str,
    table: &CategoricalTable,
    vocab: &CategoryVocabulary,
    normalization: Normalization,
    k_prime: usize,
) -> Result<McaFit> {
    let group = GroupEncoding::new(label, table.clone(), vocab, normalization)?;
    let model = fit_mca(&group.burt, k_prime)?.with_column_masses(group.z.column_masses());
    let rows = mca_row_coordinates(&group.z, &model)?;
    Ok(McaFit { group, model, rows })
}
