//! The check engine: expected invariants plus the always-on identity
//! suite, swept over sample grids into machine-readable reports.

mod checks;
mod mesh;
mod render;

pub use mesh::{emit_figure, figure_surface, mesh_defining_residual, MeshFile};
pub use render::{render_json, render_text};

use crate::catalog::{Catalog, SurfaceSpec};
use crate::error::{Error, Result};
use crate::riemann::MetricJet;

/// Metric data of a catalog surface at a chart point (Calabi metric for
/// the constant-transversal geometry, centroaffine metric otherwise).
pub fn surface_metric(spec: &SurfaceSpec, point: &[f64]) -> Result<MetricJet> {
    checks::surface_metric(spec, point)
}
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub citation: String,
    pub grid: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Chart point attaining the max residual.
    pub worst_point: Vec<f64>,
    /// Recorded scales, evaluation errors, and similar annotations.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub surface_id: String,
    pub grid: String,
    pub overall_pass: bool,
    pub exit_status: i32,
    pub evaluation_error: bool,
    pub checks: Vec<CheckResult>,
    /// Not serialized: byte-identical reports across runs are part of the
    /// contract, so timing lives only in the text rendering.
    #[serde(skip)]
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Per-axis grid resolution override.
    pub grid: Option<Vec<usize>>,
    /// Tolerance override applied to every check.
    pub tolerance: Option<f64>,
    /// Constant overrides (name, value).
    pub set: Vec<(String, f64)>,
}

/// Verify every expected invariant of `id` plus the identity suite.
pub fn run_verify(catalog: &Catalog, id: &str, opts: &VerifyOptions) -> Result<VerificationReport> {
    let start = Instant::now();
    let spec = catalog.get_with(id, &opts.set)?;
    let grid = spec.sample_grid(opts.grid.clone());
    let grid_label = spec.grid_label(opts.grid.as_deref());
    let mut results = Vec::new();

    for expect in &spec.expects {
        let tol = opts
            .tolerance
            .or(expect.tolerance)
            .unwrap_or_else(|| checks::default_tolerance(&expect.name));
        let label = if checks::is_stencil_check(&expect.name)
            && checks::surface_uses_sparse_stencils(&spec)
        {
            vec!["3"; spec.chart_dim()].join("x")
        } else {
            grid_label.clone()
        };
        let r = checks::run_expected(&spec, expect, &grid, tol, &label);
        results.push(finish_check(
            r,
            &expect.name,
            &expect.reference,
            tol,
            &label,
        ));
    }
    for auto in checks::identity_suite(&spec) {
        let tol = opts.tolerance.unwrap_or(auto.tolerance);
        let r = checks::run_auto(&spec, &auto, &grid, tol);
        results.push(finish_check(
            r,
            auto.name,
            auto.citation,
            tol,
            &auto.grid_label(&spec),
        ));
    }

    let evaluation_error = results.iter().any(|c| {
        c.detail
            .as_deref()
            .is_some_and(|d| d.starts_with("evaluation error"))
    });
    let overall_pass = results.iter().all(|c| c.pass);
    let exit_status = if evaluation_error {
        3
    } else if overall_pass {
        0
    } else {
        1
    };
    Ok(VerificationReport {
        schema_version: 1,
        surface_id: spec.id.clone(),
        grid: grid_label,
        overall_pass,
        exit_status,
        evaluation_error,
        checks: results,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

fn finish_check(
    r: Result<checks::Sweep>,
    name: &str,
    citation: &str,
    tol: f64,
    grid_label: &str,
) -> CheckResult {
    match r {
        Ok(sweep) => CheckResult {
            name: name.to_string(),
            citation: citation.to_string(),
            grid: grid_label.to_string(),
            max_residual: sweep.max_residual,
            tolerance: tol,
            pass: sweep.max_residual <= tol && sweep.max_residual.is_finite(),
            worst_point: sweep.worst_point,
            detail: sweep.detail,
        },
        Err(e) => CheckResult {
            name: name.to_string(),
            citation: citation.to_string(),
            grid: grid_label.to_string(),
            max_residual: f64::INFINITY,
            tolerance: tol,
            pass: false,
            worst_point: Vec::new(),
            detail: Some(format!("evaluation error: {e}")),
        },
    }
}

/// Max of a residual function over sample points, parallelized by point
/// with a deterministic ordered reduction. Evaluation errors carry the
/// failing point.
pub(crate) fn sweep_max<F>(points: &[Vec<f64>], f: F) -> Result<checks::Sweep>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let vals: Vec<(usize, Result<f64>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, f(p)))
        .collect();
    let mut max_residual = f64::NEG_INFINITY;
    let mut worst = Vec::new();
    for (i, v) in vals {
        match v {
            Ok(r) => {
                if r > max_residual {
                    max_residual = r;
                    worst = points[i].clone();
                }
            }
            Err(e) => {
                return Err(Error::Domain(format!(
                    "{e} at sample point {:?}",
                    points[i]
                )))
            }
        }
    }
    Ok(checks::Sweep {
        max_residual,
        worst_point: worst,
        detail: None,
    })
}
