//! The extremal orthonormal frame of a surface cubic form.
//!
//! F(u) = G(A_u u, u) restricted to the unit circle of G is a degree-3
//! trigonometric polynomial in the frame angle, so a 360-point scan
//! followed by Newton refinement on the angle cannot miss the global
//! maximum.

use super::CalabiReport;
use crate::error::{Error, Result};
use crate::riemann::cholesky_lower;

#[derive(Debug, Clone)]
pub struct EjiriFrame {
    /// Angle of e1 in the orthonormal parameterization.
    pub angle: f64,
    /// e1, e2 in chart coordinates.
    pub e1: [f64; 2],
    pub e2: [f64; 2],
    /// lambda = F(e1) = max of F.
    pub lambda: f64,
    /// mu = G(A_{e1} e2, e2).
    pub mu: f64,
    /// theta = max_u F(u), identical to lambda by definition.
    pub theta: f64,
}

const CUBIC_FLOOR: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-9;

/// Maximize F over the unit circle of G and return the frame data.
pub fn ejiri_frame(report: &CalabiReport) -> Result<EjiriFrame> {
    if report.dim != 2 {
        return Err(Error::Domain(
            "extremal frames implemented for n = 2".into(),
        ));
    }
    let a = &report.cubic;
    let a_max = a
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if a_max < CUBIC_FLOOR {
        return Err(Error::ZeroCubicForm(format!(
            "cubic form vanishes at {:?}",
            report.point
        )));
    }
    // G = L L^T; u(theta) = L^{-T} (cos, sin) has G(u,u) = 1.
    let l = cholesky_lower(&report.metric.g)
        .ok_or_else(|| Error::SingularMetric("metric not positive definite".into()))?;
    // Solve L^T u = e.
    let linv_t = |e: [f64; 2]| -> [f64; 2] {
        let u1 = e[1] / l[1][1];
        let u0 = (e[0] - l[1][0] * u1) / l[0][0];
        [u0, u1]
    };
    let cubic_at = |x: &[f64; 2], y: &[f64; 2], z: &[f64; 2]| -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    s += a[i][j][k] * x[i] * y[j] * z[k];
                }
            }
        }
        s
    };
    let frame = |theta: f64| -> ([f64; 2], [f64; 2]) {
        let u = linv_t([theta.cos(), theta.sin()]);
        let du = linv_t([-theta.sin(), theta.cos()]);
        (u, du)
    };
    let f_val = |theta: f64| {
        let (u, _) = frame(theta);
        cubic_at(&u, &u, &u)
    };
    // Coarse scan.
    let scan = 360;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut values = Vec::with_capacity(scan);
    for s in 0..scan {
        let theta = 2.0 * std::f64::consts::PI * s as f64 / scan as f64;
        let v = f_val(theta);
        values.push(v);
        if v > best.1 {
            best = (s, v);
        }
    }
    // Newton on F'(theta) from every near-maximal scan cell; ties within
    // TIE_TOL resolve to the smallest refined angle.
    let refine = |theta0: f64| -> f64 {
        let mut theta = theta0;
        for _ in 0..60 {
            let (u, du) = frame(theta);
            let f1 = 3.0 * cubic_at(&u, &u, &du);
            let f2 = 6.0 * cubic_at(&u, &du, &du) - 3.0 * cubic_at(&u, &u, &u);
            if f2.abs() < 1e-300 {
                break;
            }
            let step = f1 / f2;
            theta -= step;
            if f1.abs() <= ANGLE_TOL * (1.0 + a_max) {
                break;
            }
            let _ = step;
        }
        theta
    };
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for (s, &v) in values.iter().enumerate() {
        if v >= best.1 - TIE_TOL * (1.0 + a_max) {
            let theta0 = 2.0 * std::f64::consts::PI * s as f64 / scan as f64;
            let t = refine(theta0);
            // Normalize to [0, 2pi).
            let two_pi = 2.0 * std::f64::consts::PI;
            let t = ((t % two_pi) + two_pi) % two_pi;
            candidates.push((t, f_val(t)));
        }
    }
    let peak = candidates
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, |m, (_, v)| m.max(v));
    let (angle, lambda) = candidates
        .into_iter()
        .filter(|(_, v)| *v >= peak - TIE_TOL * (1.0 + a_max))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap();
    let (e1, e2) = frame(angle);
    // mu = G(A_{e1} e2, e2) = A(e1, e2, e2) via the lowered form.
    let mu = cubic_at(&e1, &e2, &e2);
    if lambda < 2.0 * mu - 1e-9 {
        return Err(Error::Domain(format!(
            "frame inequality violated: lambda {lambda} < 2 mu {mu}"
        )));
    }
    Ok(EjiriFrame {
        angle,
        e1,
        e2,
        lambda,
        mu,
        theta: lambda,
    })
}
