//! Choosing the contrast parameter: automatic trace-ratio iteration and
//! manual grid sweeps.
//!
//! The automatic selector alternates two steps starting from α₀ = 0:
//!
//! 1. α ← tr(UᵀB_T U) / (tr(UᵀB_B U) + ε·tr(UᵀB_T U))
//! 2. U ← top-K′ eigenvectors of B_T − αB_B
//!
//! The ε term bounds α by 1/ε when B_B is (nearly) singular along the
//! directions the target cares about.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cmca::{fit_cmca, CmcaModel};
use crate::encode::BurtMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoAlphaConfig {
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AutoAlphaConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            tol: 1e-6,
            max_iter: 50,
        }
    }
}

/// One iteration of the selector. Step 0 is the fixed start α₀ = 0 and has
/// no traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaStep {
    pub t: usize,
    pub alpha: f64,
    /// tr(U_tᵀ B_T U_t).
    pub numerator: Option<f64>,
    /// tr(U_tᵀ B_B U_t), before the ε term is added.
    pub denominator: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaTrace {
    pub steps: Vec<AlphaStep>,
    pub converged: bool,
    pub final_alpha: f64,
    pub epsilon: f64,
}

impl AlphaTrace {
    /// Number of eigen-solve/update rounds performed.
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.alpha)
    }

    /// `t,alpha,numerator,denominator`; the first step leaves the traces empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "alpha", "numerator", "denominator"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for s in &self.steps {
            w.write_record([
                s.t.to_string(),
                s.alpha.to_string(),
                opt(s.numerator),
                opt(s.denominator),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Regularized ratio update. With `epsilon == 0` this is the plain trace
/// ratio, and a zero denominator is an error.
pub fn ratio_step(numerator: f64, denominator: f64, epsilon: f64, t: usize) -> Result<f64> {
    if !numerator.is_finite() || !denominator.is_finite() {
        return Err(Error::NonFinite("alpha trace"));
    }
    let den = denominator + epsilon * numerator;
    if den == 0.0 {
        return Err(Error::ZeroDenominator(t));
    }
    let alpha = numerator / den;
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha update"));
    }
    Ok(alpha)
}

/// Runs the trace-ratio iteration and returns the model fit at the final α.
///
/// On exhaustion of `max_iter` the error carries the full trace.
pub fn auto_alpha(
    b_t: &BurtMatrix,
    b_b: &BurtMatrix,
    k_prime: usize,
    config: &AutoAlphaConfig,
) -> Result<(CmcaModel, AlphaTrace)> {
    let AutoAlphaConfig {
        epsilon,
        tol,
        max_iter,
    } = *config;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }

    let mut alpha = 0.0;
    let mut steps = vec![AlphaStep {
        t: 0,
        alpha,
        numerator: None,
        denominator: None,
    }];
    let mut converged = false;
    for t in 1..=max_iter {
        let model = fit_cmca(b_t, b_b, alpha, k_prime)?;
        let numerator = model.trace_of(b_t);
        let denominator = model.trace_of(b_b);
        let next = ratio_step(numerator, denominator, epsilon, t)?;
        steps.push(AlphaStep {
            t,
            alpha: next,
            numerator: Some(numerator),
            denominator: Some(denominator),
        });
        let delta = (next - alpha).abs();
        alpha = next;
        if delta <= tol {
            converged = true;
            break;
        }
    }
    let trace = AlphaTrace {
        steps,
        converged,
        final_alpha: alpha,
        epsilon,
    };
    if !converged {
        return Err(Error::NonconvergenceWithinBudget {
            iterations: max_iter,
            trace: Box::new(trace),
        });
    }
    let model = fit_cmca(b_t, b_b, alpha, k_prime)?;
    Ok((model, trace))
}

/// Per-α diagnostics of a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub lambda1: f64,
    pub lambda2: Option<f64>,
    /// σ²_T(u₁) = u₁ᵀB_T u₁.
    pub target_variance: f64,
    /// σ²_B(u₁) = u₁ᵀB_B u₁.
    pub background_variance: f64,
}

impl SweepSummary {
    pub fn of(model: &CmcaModel, b_t: &BurtMatrix, b_b: &BurtMatrix) -> Self {
        let u1 = model.component(0);
        Self {
            lambda1: model.eigenvalues()[0],
            lambda2: model.eigenvalues().get(1).copied(),
            target_variance: b_t.quadratic_form(&u1),
            background_variance: b_b.quadratic_form(&u1),
        }
    }
}

#[derive(Debug)]
pub struct SweepPoint {
    pub alpha: f64,
    pub outcome: Result<(CmcaModel, SweepSummary)>,
}

/// One independent fit per grid value, computed in parallel and returned in
/// grid order. Failures are recorded per point.
pub fn alpha_sweep(
    b_t: &BurtMatrix,
    b_b: &BurtMatrix,
    k_prime: usize,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha grid values must be finite and >= 0, got {bad}"
        )));
    }
    Ok(grid
        .par_iter()
        .map(|&alpha| SweepPoint {
            alpha,
            outcome: fit_cmca(b_t, b_b, alpha, k_prime).and_then(|m| {
                m.require_positive_spectrum()?;
                let s = SweepSummary::of(&m, b_t, b_b);
                Ok((m, s))
            }),
        })
        .collect())
}

/// `lo, lo+step, …, hi` with the endpoint included when it falls on the grid.
/// Values are rounded to 10 decimals to keep labels like 1.1 exact.
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo || lo < 0.0
    {
        return Err(Error::InvalidArgument(format!(
            "invalid sweep {lo}:{hi}:{step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}
