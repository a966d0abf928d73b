//! Quadrature of scalar densities against the metric volume element.

use super::MetricField;
use crate::error::Result;
use crate::quad::rectangle_quadrature;

/// Integral of phi(x) sqrt(det G(x)) over a chart rectangle with a
/// composite Gauss-Legendre rule; `panels` panels per axis (doubled once
/// for the error estimate). Returns (value, error estimate).
pub fn integrate_density<F>(
    phi: F,
    field: &dyn MetricField,
    xr: (f64, f64),
    yr: (f64, f64),
    panels: usize,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut f = |x: f64, y: f64| -> Result<f64> {
        let p = [x, y];
        let m = field.metric(&p)?;
        let det = m.det();
        if det <= 0.0 {
            return Err(crate::error::Error::SingularMetric(format!(
                "det G = {det} at ({x}, {y})"
            )));
        }
        Ok(phi(&p)? * det.sqrt())
    };
    let (v, e, _) = rectangle_quadrature(&mut f, xr, yr, panels)?;
    Ok((v, e))
}
