//! Contrastive MCA: eigenvectors of B_T - αB_B and the coordinates and
//! loadings used to interpret them.

use nalgebra::DMatrix;

use crate::dataio::CategoryVocabulary;
use crate::eigen::top_eigenpairs;
use crate::encode::{BurtMatrix, CorrespondenceMatrix};
use crate::error::{Error, Result};
use crate::mca::project;

/// Eigenvalues at or below this fraction of ‖B_T − αB_B‖_F count as zero.
///
/// Centered Burt matrices share exact null directions (one per variable), so
/// roundoff-sized eigenvalues of either sign are routine.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-10;

/// A fitted contrastive space at one value of the contrast parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcaModel {
    alpha: f64,
    eigenvectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// Frobenius norm of the decomposed matrix; 0 when built by hand.
    scale: f64,
}

impl CmcaModel {
    pub fn new(alpha: f64, eigenvectors: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvectors, {} eigenvalues",
                eigenvectors.ncols(),
                eigenvalues.len()
            )));
        }
        Ok(Self {
            alpha,
            eigenvectors,
            eigenvalues,
            scale: 0.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// U, K x K'; column j is cPC j+1.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Descending; may contain nonpositive values.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn k_prime(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// The first `k` components only.
    pub fn truncated(&self, k: usize) -> Result<CmcaModel> {
        if k == 0 || k > self.k_prime() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {k} of {} components",
                self.k_prime()
            )));
        }
        Ok(CmcaModel {
            alpha: self.alpha,
            eigenvectors: self.eigenvectors.columns(0, k).into_owned(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            scale: self.scale,
        })
    }

    /// Fails with `NonpositiveEigenvalue` unless every retained λ is
    /// positive beyond roundoff (see [`ZERO_EIGENVALUE_RTOL`]).
    pub fn require_positive_spectrum(&self) -> Result<()> {
        let floor = ZERO_EIGENVALUE_RTOL * self.scale;
        match self.eigenvalues.iter().position(|&l| l <= floor) {
            Some(index) => Err(Error::NonpositiveEigenvalue {
                index,
                value: self.eigenvalues[index],
            }),
            None => Ok(()),
        }
    }

    /// Column `j` of U as a vector.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    /// tr(UᵀBU).
    pub fn trace_of(&self, b: &BurtMatrix) -> f64 {
        (0..self.k_prime())
            .map(|j| b.quadratic_form(&self.component(j)))
            .sum()
    }
}

/// B_T - αB_B, computed entrywise so the result is exactly symmetric.
pub fn contrast_matrix(b_t: &BurtMatrix, b_b: &BurtMatrix, alpha: f64) -> DMatrix<f64> {
    if alpha == 0.0 {
        return b_t.values().clone();
    }
    b_t.values() - b_b.values() * alpha
}

/// Top-`k_prime` eigenpairs of B_T - αB_B.
pub fn fit_cmca(
    b_t: &BurtMatrix,
    b_b: &BurtMatrix,
    alpha: f64,
    k_prime: usize,
) -> Result<CmcaModel> {
    if b_t.dim() != b_b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target Burt is {0}x{0}, background Burt is {1}x{1}",
            b_t.dim(),
            b_b.dim()
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    if alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let m = contrast_matrix(b_t, b_b, alpha);
    let (u, lambda) = top_eigenpairs(&m, k_prime)?;
    let mut model = CmcaModel::new(alpha, u, lambda)?;
    model.scale = m.norm();
    Ok(model)
}

/// Y = Z U, for either group's correspondence matrix.
pub fn row_coordinates(z: &CorrespondenceMatrix, model: &CmcaModel) -> Result<DMatrix<f64>> {
    project(z.values(), model.eigenvectors())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCoordinates {
    /// K x K'.
    pub values: DMatrix<f64>,
    /// Categories absent from the target group; their coordinates are zero.
    pub zero_frequency: Vec<bool>,
}

/// Target category coordinates by the translation formula
/// Y_col = D⁻¹ Zᵀ Y_row diag(λ)^(-1/2), where D holds the target column masses.
pub fn category_coordinates(
    z_t: &CorrespondenceMatrix,
    y_row_t: &DMatrix<f64>,
    model: &CmcaModel,
) -> Result<CategoryCoordinates> {
    model.require_positive_spectrum()?;
    let k = model.dim();
    let kp = model.k_prime();
    if z_t.ncols() != k || y_row_t.nrows() != z_t.nrows() || y_row_t.ncols() != kp {
        return Err(Error::DimensionMismatch(format!(
            "Z is {}x{}, row coordinates are {}x{}, model is {k}x{kp}",
            z_t.nrows(),
            z_t.ncols(),
            y_row_t.nrows(),
            y_row_t.ncols()
        )));
    }
    let mut values = z_t.values().transpose() * y_row_t;
    let masses = z_t.column_masses();
    let zero_frequency: Vec<bool> = masses.iter().map(|&m| m == 0.0).collect();
    for (c, mut row) in values.row_iter_mut().enumerate() {
        if zero_frequency[c] {
            row.fill(0.0);
        } else {
            row /= masses[c];
        }
    }
    for (j, mut col) in values.column_iter_mut().enumerate() {
        col /= model.eigenvalues[j].sqrt();
    }
    Ok(CategoryCoordinates {
        values,
        zero_frequency,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryLoadings {
    variables: Vec<String>,
    /// L = U diag(λ)^(1/2), K x K'.
    per_category: DMatrix<f64>,
    /// d x K'; each column sums to one.
    per_variable_total: DMatrix<f64>,
}

impl CategoryLoadings {
    pub fn per_category(&self) -> &DMatrix<f64> {
        &self.per_category
    }

    pub fn per_variable_total(&self) -> &DMatrix<f64> {
        &self.per_variable_total
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn n_components(&self) -> usize {
        self.per_category.ncols()
    }
}

pub fn category_loadings(
    model: &CmcaModel,
    vocab: &CategoryVocabulary,
) -> Result<CategoryLoadings> {
    model.require_positive_spectrum()?;
    if vocab.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vocabulary has {} entries, model has {}",
            vocab.len(),
            model.dim()
        )));
    }
    let mut per_category = model.eigenvectors.clone();
    for (j, mut col) in per_category.column_iter_mut().enumerate() {
        col *= model.eigenvalues[j].sqrt();
    }
    Ok(CategoryLoadings {
        variables: vocab.variables().to_vec(),
        per_variable_total: variable_totals(&per_category, vocab),
        per_category,
    })
}

/// Sums, per variable, each category's |loading| divided by the column's
/// total |loading| over all categories.
fn variable_totals(per_category: &DMatrix<f64>, vocab: &CategoryVocabulary) -> DMatrix<f64> {
    let d = vocab.variables().len();
    let mut totals = DMatrix::zeros(d, per_category.ncols());
    for (j, col) in per_category.column_iter().enumerate() {
        let sum: f64 = col.iter().map(|x| x.abs()).sum();
        if sum == 0.0 {
            continue;
        }
        for (k, x) in col.iter().enumerate() {
            totals[(vocab.variable_of(k), j)] += x.abs() / sum;
        }
    }
    totals
}

/// The `n` variables with the largest total loading on `component`
/// (0-based), ties broken by schema order.
pub fn top_variables(
    loadings: &CategoryLoadings,
    component: usize,
    n: usize,
) -> Result<Vec<(String, f64)>> {
    let d = loadings.variables.len();
    if component >= loadings.n_components() {
        return Err(Error::InvalidArgument(format!(
            "component {} out of range (model has {})",
            component + 1,
            loadings.n_components()
        )));
    }
    if n == 0 || n > d {
        return Err(Error::InvalidArgument(format!(
            "top-n must be in 1..={d}, got {n}"
        )));
    }
    let mut ranked: Vec<(usize, f64)> = (0..d)
        .map(|v| (v, loadings.per_variable_total[(v, component)]))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(n)
        .map(|(v, t)| (loadings.variables[v].clone(), t))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::CategoricalTable;
    use crate::encode::Normalization;
    use crate::mca::fit_mca;

    fn diag(values: &[f64]) -> BurtMatrix {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values));
        BurtMatrix::from_matrix(m, 0).unwrap()
    }

    #[test]
    fn diagonal_difference() {
        let m = fit_cmca(&diag(&[2.0, 1.0]), &diag(&[0.0, 3.0]), 1.0, 1).unwrap();
        assert_eq!(m.eigenvalues(), &[2.0]);
        assert_eq!(m.eigenvectors().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn alpha_zero_is_target_mca() {
        let a = DMatrix::from_fn(4, 4, |i, j| ((3 * i + j) % 4) as f64);
        let bt = BurtMatrix::from_matrix(a.transpose() * &a, 4).unwrap();
        let bb = diag(&[1.0, 2.0, 3.0, 4.0]);
        let c = fit_cmca(&bt, &bb, 0.0, 3).unwrap();
        let m = fit_mca(&bt, 3).unwrap();
        assert_eq!(c.eigenvalues(), m.eigenvalues());
        assert_eq!(c.eigenvectors(), m.eigenvectors());
    }

    #[test]
    fn input_validation() {
        let two = diag(&[1.0, 1.0]);
        let three = diag(&[1.0, 1.0, 1.0]);
        assert_eq!(
            fit_cmca(&two, &three, 1.0, 1).unwrap_err().kind(),
            "DimensionMismatch"
        );
        assert_eq!(
            fit_cmca(&two, &two, f64::NAN, 1).unwrap_err().kind(),
            "NonFinite"
        );
        assert_eq!(
            fit_cmca(&two, &two, -1.0, 1).unwrap_err().kind(),
            "InvalidArgument"
        );
        assert!(fit_cmca(&two, &two, 1.0, 3).is_err());
    }

    fn z_of(values: DMatrix<f64>) -> CorrespondenceMatrix {
        let masses = values.column_iter().map(|c| c.sum()).collect();
        CorrespondenceMatrix::new(values, Normalization::Raw, masses).unwrap()
    }

    #[test]
    fn row_projection_cases() {
        let u = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        let model = CmcaModel::new(1.0, u, vec![1.0]).unwrap();
        let z = z_of(DMatrix::from_fn(3, 4, |i, j| (1 + i * 4 + j) as f64));
        let y = row_coordinates(&z, &model).unwrap();
        assert_eq!(y, z.values().columns(0, 1).into_owned());
        // Same Z for both groups gives the same coordinates.
        assert_eq!(y, row_coordinates(&z.clone(), &model).unwrap());
        let zero = z_of(DMatrix::zeros(3, 4));
        assert!(row_coordinates(&zero, &model)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn translation_identity_and_annihilation() {
        let model = CmcaModel::new(0.0, DMatrix::from_element(1, 1, 1.0), vec![1.0]).unwrap();
        let z = z_of(DMatrix::from_element(1, 1, 1.0));
        let y = DMatrix::from_element(1, 1, 0.37);
        let c = category_coordinates(&z, &y, &model).unwrap();
        assert_eq!(c.values[(0, 0)], 0.37);

        let z = z_of(DMatrix::from_fn(3, 2, |i, j| (i + j) as f64 / 10.0));
        let model = CmcaModel::new(0.0, DMatrix::identity(2, 2), vec![1.0, 2.0]).unwrap();
        let c = category_coordinates(&z, &DMatrix::zeros(3, 2), &model).unwrap();
        assert!(c.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_frequency_category_is_flagged() {
        let z = z_of(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.5, 0.0]));
        let model = CmcaModel::new(0.0, DMatrix::identity(2, 2), vec![1.0, 1.0]).unwrap();
        let y = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let c = category_coordinates(&z, &y, &model).unwrap();
        assert_eq!(c.zero_frequency, vec![false, true]);
        assert_eq!(
            c.values.row(1).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 0.0]
        );
        assert!(c.values.row(0).iter().all(|x| x.is_finite()));
    }

    #[test]
    fn nonpositive_eigenvalue_is_refused() {
        let model = CmcaModel::new(2.0, DMatrix::identity(2, 2), vec![1.0, -0.5]).unwrap();
        let z = z_of(DMatrix::identity(2, 2));
        let err = category_coordinates(&z, &DMatrix::zeros(2, 2), &model).unwrap_err();
        assert!(matches!(err, Error::NonpositiveEigenvalue { index: 1, .. }));
        let vocab = two_var_vocab();
        assert_eq!(
            category_loadings(&model, &vocab).unwrap_err().kind(),
            "NonpositiveEigenvalue"
        );
    }

    fn two_var_vocab() -> CategoryVocabulary {
        let t =
            CategoricalTable::from_rows(&["a", "b"], &[vec!["x", "y"]], "g", &["t"], "99").unwrap();
        CategoryVocabulary::from_table(&t)
    }

    #[test]
    fn roundoff_eigenvalue_counts_as_zero() {
        // diag(1, 1e-14, -1): the middle eigenvalue is below the relative floor.
        let bt = diag(&[1.0, 1e-14, 0.0]);
        let bb = diag(&[0.0, 0.0, 1.0]);
        let m = fit_cmca(&bt, &bb, 1.0, 2).unwrap();
        assert_eq!(
            m.require_positive_spectrum().unwrap_err().kind(),
            "NonpositiveEigenvalue"
        );
        let first = m.truncated(1).unwrap();
        first.require_positive_spectrum().unwrap();
        assert_eq!(first.eigenvalues(), &[1.0]);
        assert!(m.truncated(0).is_err() && m.truncated(3).is_err());
    }

    #[test]
    fn loadings_scale_by_root_eigenvalue() {
        let model = CmcaModel::new(0.0, DMatrix::identity(2, 2), vec![1.0, 4.0]).unwrap();
        let l = category_loadings(&model, &two_var_vocab()).unwrap();
        assert_eq!(
            l.per_category(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])
        );
        for col in l.per_variable_total().column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-15);
        }
    }

    fn loadings_with_totals(names: &[&str], totals: &[f64]) -> CategoryLoadings {
        CategoryLoadings {
            variables: names.iter().map(|s| s.to_string()).collect(),
            per_category: DMatrix::zeros(names.len(), 1),
            per_variable_total: DMatrix::from_column_slice(totals.len(), 1, totals),
        }
    }

    #[test]
    fn variable_total_sums_normalized_categories() {
        // Variable v has two categories with normalized |loading| 0.2 and 0.3.
        let t = CategoricalTable::from_rows(
            &["v", "w"],
            &[vec!["1", "a"], vec!["2", "b"], vec!["2", "c"]],
            "g",
            &["t", "t", "t"],
            "99",
        )
        .unwrap();
        let vocab = CategoryVocabulary::from_table(&t);
        let l = DMatrix::from_column_slice(5, 1, &[0.2, -0.3, 0.1, 0.25, -0.15]);
        let totals = variable_totals(&l, &vocab);
        assert!((totals[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((totals[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ranking() {
        let l = loadings_with_totals(&["a", "b", "c"], &[0.5, 0.3, 0.2]);
        let top = top_variables(&l, 0, 2).unwrap();
        assert_eq!(top, vec![("a".to_string(), 0.5), ("b".to_string(), 0.3)]);
        assert_eq!(top_variables(&l, 0, 3).unwrap().len(), 3);
        assert!(top_variables(&l, 1, 1).is_err());
        assert!(top_variables(&l, 0, 4).is_err());
        assert!(top_variables(&l, 0, 0).is_err());

        let tied = loadings_with_totals(&["x", "y", "z"], &[0.25, 0.5, 0.25]);
        let names: Vec<String> = top_variables(&tied, 0, 3)
            .unwrap()
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        assert_eq!(names, vec!["y", "x", "z"]);
    }
}
