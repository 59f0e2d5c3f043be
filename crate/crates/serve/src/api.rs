//! Request and response bodies.

use cmca_core::alpha::AlphaTrace;
use cmca_core::encode::Normalization;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_TOP_N: usize = 9;

fn default_k_prime() -> usize {
    cmca_core::mca::DEFAULT_K_PRIME
}

fn default_top_n() -> usize {
    DEFAULT_TOP_N
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaKeyword {
    Auto,
}

/// Either a fixed contrast parameter or the literal string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaParam {
    Value(f64),
    Keyword(AlphaKeyword),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub target: String,
    pub background: String,
    pub alpha: AlphaParam,
    #[serde(default = "default_k_prime")]
    pub k_prime: usize,
    #[serde(default)]
    pub normalization: Normalization,
    pub epsilon: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub target: String,
    pub background: String,
    pub grid: Vec<f64>,
    #[serde(default = "default_k_prime")]
    pub k_prime: usize,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableMeta {
    pub name: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaResponse {
    pub group_column: String,
    pub rows: usize,
    pub groups: BTreeMap<String, usize>,
    /// Group labels in order of first appearance.
    pub group_order: Vec<String>,
    pub variables: Vec<VariableMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Background,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowPoint {
    pub row_id: usize,
    pub group: String,
    pub role: Role,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryPoint {
    pub variable: String,
    pub level: String,
    pub zero_frequency: bool,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryLoading {
    pub variable: String,
    pub level: String,
    pub loadings: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableTotal {
    pub variable: String,
    pub totals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedVariable {
    pub variable: String,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResponse {
    pub target: String,
    pub background: String,
    pub normalization: Normalization,
    pub k_prime: usize,
    pub alpha: f64,
    pub eigenvalues: Vec<f64>,
    /// Target rows first, then background rows, each in data order.
    pub rows: Vec<RowPoint>,
    pub categories: Vec<CategoryPoint>,
    pub loadings: Vec<CategoryLoading>,
    pub variable_totals: Vec<VariableTotal>,
    /// One ranking per component.
    pub top_variables: Vec<Vec<RankedVariable>>,
    pub trace: Option<AlphaTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub alpha: f64,
    pub status: PointStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResponse {
    pub target: String,
    pub background: String,
    pub normalization: Normalization,
    pub k_prime: usize,
    pub points: Vec<SweepEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<AlphaTrace>,
}
