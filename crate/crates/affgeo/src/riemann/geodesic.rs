//! Geodesic shooting with an embedded Dormand-Prince 5(4) integrator.
//!
//! The initial velocity is normalized to unit metric length, so the
//! integration parameter is arclength. Traces stop at the length budget,
//! at the chart bounding box, or on step-size underflow.

use super::{christoffel, MetricField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicStatus {
    CompletedBudget,
    LeftChart,
    StepFailure,
}

#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    /// (arclength, chart point, velocity) at every accepted step.
    pub samples: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub status: GeodesicStatus,
    /// max |G(v,v) - 1| observed along the trace.
    pub speed_drift: f64,
}

impl GeodesicTrace {
    pub fn endpoint(&self) -> &(f64, Vec<f64>, Vec<f64>) {
        self.samples.last().expect("trace has at least the start")
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Chart bounding box as (lo, hi) per coordinate.
    pub chart: Vec<(f64, f64)>,
    pub max_steps: usize,
}

impl GeodesicControls {
    pub fn with_chart(chart: Vec<(f64, f64)>) -> Self {
        GeodesicControls {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            chart,
            max_steps: 100_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rhs(field: &dyn MetricField, y: &[f64], n: usize) -> Result<Vec<f64>> {
    let x = &y[..n];
    let v = &y[n..];
    let m = field.metric(x)?;
    let c = christoffel(&m)?;
    let mut dy = vec![0.0; 2 * n];
    dy[..n].copy_from_slice(v);
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc -= c.gamma[k][i][j] * v[i] * v[j];
            }
        }
        dy[n + k] = acc;
    }
    Ok(dy)
}

fn inside(chart: &[(f64, f64)], x: &[f64]) -> bool {
    chart
        .iter()
        .zip(x)
        .all(|(&(lo, hi), &xi)| xi >= lo && xi <= hi)
}

/// Shoot a unit-speed geodesic of `field` from `start` toward `direction`
/// for at most `length_budget` of arclength.
pub fn geodesic_ray(
    field: &dyn MetricField,
    start: &[f64],
    direction: &[f64],
    length_budget: f64,
    controls: &GeodesicControls,
) -> Result<GeodesicTrace> {
    let n = start.len();
    if direction.iter().all(|&d| d == 0.0) {
        return Err(Error::Domain("zero initial direction".into()));
    }
    if !inside(&controls.chart, start) {
        return Err(Error::Domain("start point outside chart".into()));
    }
    let m0 = field.metric(start)?;
    let speed0 = m0.norm_sq(direction).sqrt();
    if speed0 <= 0.0 || speed0.is_nan() {
        return Err(Error::SingularMetric(
            "direction has non-positive metric length".into(),
        ));
    }
    let mut y = vec![0.0; 2 * n];
    y[..n].copy_from_slice(start);
    for i in 0..n {
        y[n + i] = direction[i] / speed0;
    }
    let mut s = 0.0;
    let mut h = (length_budget / 100.0).clamp(1e-6, 0.1);
    let mut samples = vec![(0.0, start.to_vec(), y[n..].to_vec())];
    let mut drift: f64 = 0.0;
    let mut status = GeodesicStatus::CompletedBudget;

    let mut steps = 0;
    let mut consecutive_shrinks = 0;
    let mut eval_failures = 0;
    'outer: while s < length_budget {
        if steps > controls.max_steps {
            return Err(Error::StepFailure("step limit exceeded".into()));
        }
        steps += 1;
        if consecutive_shrinks > 60 || eval_failures > 300 {
            // The frontier of evaluability has been bracketed to below
            // any useful step size.
            status = GeodesicStatus::LeftChart;
            break 'outer;
        }
        if s + h > length_budget {
            h = length_budget - s;
        }
        // One embedded step.
        let mut k = vec![vec![0.0; 2 * n]; 7];
        k[0] = rhs(field, &y, n)?;
        let mut failed_eval = false;
        for stage in 1..7 {
            let mut yt = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage - 1][j];
                if a != 0.0 {
                    for i in 0..2 * n {
                        yt[i] += h * a * kj[i];
                    }
                }
            }
            match rhs(field, &yt, n) {
                Ok(v) => k[stage] = v,
                Err(_) => {
                    failed_eval = true;
                    break;
                }
            }
        }
        if failed_eval {
            // Metric not evaluable inside the step: shrink toward the chart.
            h *= 0.5;
            consecutive_shrinks += 1;
            eval_failures += 1;
            if h < 1e-13 * (1.0 + s) {
                status = GeodesicStatus::LeftChart;
                break 'outer;
            }
            continue;
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for i in 0..2 * n {
            for j in 0..7 {
                y5[i] += h * B5[j] * k[j][i];
                y4[i] += h * B4[j] * k[j][i];
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..2 * n {
            let sc = controls.abs_tol + controls.rel_tol * y5[i].abs().max(y[i].abs());
            err = err.max(((y5[i] - y4[i]) / sc).abs());
        }
        if err <= 1.0 {
            // Accept; clip against the chart.
            if !inside(&controls.chart, &y5[..n]) {
                h *= 0.5;
                consecutive_shrinks += 1;
                if h < 1e-12 * (1.0 + s) {
                    status = GeodesicStatus::LeftChart;
                    break 'outer;
                }
                continue;
            }
            consecutive_shrinks = 0;
            s += h;
            y = y5;
            let m = field.metric(&y[..n])?;
            drift = drift.max((m.norm_sq(&y[n..]) - 1.0).abs());
            samples.push((s, y[..n].to_vec(), y[n..].to_vec()));
        }
        // PI-free step controller.
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h < 1e-14 * (1.0 + s) {
            status = GeodesicStatus::StepFailure;
            break;
        }
    }
    if status == GeodesicStatus::StepFailure {
        return Err(Error::StepFailure(format!(
            "step underflow at arclength {s}"
        )));
    }
    Ok(GeodesicTrace {
        samples,
        status,
        speed_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::MetricJet;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_rays_are_straight() {
        let field = |_: &[f64]| Ok(MetricJet::euclidean(2));
        let controls = GeodesicControls::with_chart(vec![(-20.0, 20.0), (-20.0, 20.0)]);
        let tr = geodesic_ray(&field, &[0.0, 0.0], &[3.0, 4.0], 10.0, &controls).unwrap();
        assert_eq!(tr.status, GeodesicStatus::CompletedBudget);
        let (s, x, _) = tr.endpoint();
        assert_relative_eq!(*s, 10.0, epsilon = 1e-12);
        assert_relative_eq!(x[0], 6.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 8.0, epsilon = 1e-9);
        assert!(tr.speed_drift < 1e-12);
    }

    #[test]
    fn hyperbolic_half_plane_vertical_ray() {
        // g = (du1^2 + du2^2)/u2^2; from (0,1) toward (0,-1) the geodesic
        // is u2(s) = exp(-s): it never reaches the boundary u2 = 0.
        let field = |x: &[f64]| {
            let u2 = x[1];
            if u2 <= 0.0 {
                return Err(crate::error::Error::Domain("u2 <= 0".into()));
            }
            let mut m = MetricJet::euclidean(2);
            let f = 1.0 / (u2 * u2);
            m.g[0][0] = f;
            m.g[1][1] = f;
            m.dg[0][0][1] = -2.0 / (u2 * u2 * u2);
            m.dg[1][1][1] = -2.0 / (u2 * u2 * u2);
            m.d2g[0][0][1][1] = 6.0 / (u2 * u2 * u2 * u2);
            m.d2g[1][1][1][1] = 6.0 / (u2 * u2 * u2 * u2);
            Ok(m)
        };
        let controls = GeodesicControls::with_chart(vec![(-10.0, 10.0), (1e-6, 10.0)]);
        let tr = geodesic_ray(&field, &[0.0, 1.0], &[0.0, -1.0], 5.0, &controls).unwrap();
        assert_eq!(tr.status, GeodesicStatus::CompletedBudget);
        for (s, x, _) in &tr.samples {
            assert_relative_eq!(x[1], (-s).exp(), epsilon = 1e-6);
            assert!(x[0].abs() < 1e-9);
        }
        assert!(tr.speed_drift <= 1e-6, "drift {}", tr.speed_drift);
    }

    #[test]
    fn leaving_the_chart_is_reported() {
        let field = |_: &[f64]| Ok(MetricJet::euclidean(2));
        let controls = GeodesicControls::with_chart(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let tr = geodesic_ray(&field, &[0.0, 0.0], &[1.0, 0.0], 10.0, &controls).unwrap();
        assert_eq!(tr.status, GeodesicStatus::LeftChart);
        let (_, x, _) = tr.endpoint();
        assert!(x[0] <= 1.0 && x[0] > 0.9);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let field = |_: &[f64]| Ok(MetricJet::euclidean(2));
        let controls = GeodesicControls::with_chart(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        assert!(geodesic_ray(&field, &[0.0, 0.0], &[0.0, 0.0], 1.0, &controls).is_err());
    }
}
