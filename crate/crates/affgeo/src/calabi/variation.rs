//! Second variation of the area integral and graph area comparison.
//!
//! Two independent evaluations of V''(0):
//!
//! * the direct quadrature of the integrand (dphi)^2 minus
//!   n^2 <grad phi, T>^2 minus 2n dphi <grad phi, T> minus
//!   2n f^{ik} f^{lj} T_ij phi_k phi_l, all times -1/4, where T_ij is the
//!   plain coordinate derivative d_j(G_ik T^k) of the lowered Tchebychev
//!   form (the covariant correction is exactly what the
//!   divergence-theorem step of the derivation absorbs);
//! * the trace-free form -1/2 [ (L phi, L phi) + (A^ phi, A^ phi) ] with
//!   (L phi)_ij = phi_{,ij} - 1/2 (dphi) G_ij and
//!   (A^ phi)_ij = A^h_ij phi_h - (T^h phi_h) G_ij.
//!
//! They agree only through integration by parts, so their numerical match
//! is a real test of the whole pointwise stack.

use super::{graph_tchebychev_jets, hessian_jets};
use crate::error::{Error, Result};
use crate::expr::ExpressionProgram;
use crate::jet::{jet_eval, Jet, MultiIndex};
use crate::quad::rectangle_quadrature_vec;
use crate::riemann::{christoffel, covariant_hessian, laplace_beltrami, MetricJet};

/// Rectangle plus resolution settings for the variational quadratures.
#[derive(Debug, Clone, Copy)]
pub struct BumpSpec {
    pub xr: (f64, f64),
    pub yr: (f64, f64),
    /// Quadrature panels per axis (doubled once for the error estimate).
    pub panels: usize,
    /// Verification lattice resolution per axis for gates.
    pub grid: usize,
}

impl BumpSpec {
    pub fn new(xr: (f64, f64), yr: (f64, f64)) -> Self {
        BumpSpec {
            xr,
            yr,
            panels: 16,
            grid: 11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariationResult {
    /// Direct evaluation of the second-variation integral.
    pub direct: f64,
    /// Trace-free-form evaluation -1/2 [(L,L) + (A^,A^)].
    pub trace_free: f64,
    pub l_inner: f64,
    pub ahat_inner: f64,
    /// Summed quadrature error estimates of the two paths.
    pub quad_error: f64,
}

const MAXIMALITY_GATE: f64 = 1e-7;
const BOUNDARY_GATE: f64 = 1e-12;

fn lattice(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

fn boundary_points(spec: &BumpSpec) -> Vec<[f64; 2]> {
    let per_edge = 4 * spec.grid;
    let xs = lattice(spec.xr, per_edge);
    let ys = lattice(spec.yr, per_edge);
    let mut points = Vec::new();
    for &x in &xs {
        points.push([x, spec.yr.0]);
        points.push([x, spec.yr.1]);
    }
    for &y in &ys {
        points.push([spec.xr.0, y]);
        points.push([spec.xr.1, y]);
    }
    points
}

fn check_boundary(phi: &ExpressionProgram, spec: &BumpSpec, tol: f64) -> Result<()> {
    for p in boundary_points(spec) {
        let j = jet_eval(phi, &p, 1)?;
        let g = crate::riemann::gradient(&j);
        if j.value().abs() > tol || g.iter().any(|v| v.abs() > tol) {
            return Err(Error::BoundaryViolation(format!(
                "phi or grad phi nonzero at boundary point {p:?}"
            )));
        }
    }
    Ok(())
}

/// Second variation of the area of a maximal graph under the normal
/// variation phi, by both routes.
pub fn second_variation(
    f: &ExpressionProgram,
    phi: &ExpressionProgram,
    spec: &BumpSpec,
) -> Result<VariationResult> {
    let n = f.arity();
    if n != 2 {
        return Err(Error::Domain(
            "second variation implemented for n = 2".into(),
        ));
    }
    // Maximality gate over the verification lattice.
    for x in lattice(spec.xr, spec.grid) {
        for y in lattice(spec.yr, spec.grid) {
            let r = super::maximal_residual(f, &[x, y])?;
            if r.abs() > MAXIMALITY_GATE {
                return Err(Error::NotMaximal(format!(
                    "maximality residual {r:.3e} at ({x}, {y})"
                )));
            }
        }
    }
    check_boundary(phi, spec, BOUNDARY_GATE)?;

    // One fused pass: [direct integrand, |L phi|^2, |A^ phi|^2] * dV.
    let mut integrands = |x: f64, y: f64| -> Result<Vec<f64>> {
        let pd = pointwise(f, phi, &[x, y])?;
        let nf = n as f64;
        let direct = -0.25
            * (pd.dphi * pd.dphi
                - nf * nf * pd.grad_t * pd.grad_t
                - 2.0 * nf * pd.dphi * pd.grad_t
                - 2.0 * nf * pd.tij_term)
            * pd.sqrt_det;
        Ok(vec![
            direct,
            pd.l_sq * pd.sqrt_det,
            pd.ahat_sq * pd.sqrt_det,
        ])
    };
    let (vals, errs, _) = rectangle_quadrature_vec(&mut integrands, spec.xr, spec.yr, spec.panels)?;
    let (direct, l_inner, ahat_inner) = (vals[0], vals[1], vals[2]);
    let trace_free = -0.5 * (l_inner + ahat_inner);
    Ok(VariationResult {
        direct,
        trace_free,
        l_inner,
        ahat_inner,
        quad_error: errs[0] + 0.5 * (errs[1] + errs[2]),
    })
}

struct PointData {
    sqrt_det: f64,
    dphi: f64,
    grad_t: f64,
    tij_term: f64,
    l_sq: f64,
    ahat_sq: f64,
}

fn pointwise(f: &ExpressionProgram, phi: &ExpressionProgram, p: &[f64]) -> Result<PointData> {
    let n = p.len();
    let f4 = jet_eval(f, p, 4)?;
    let hess = hessian_jets(&f4);
    let metric = MetricJet::from_component_jets(n, &hess);
    if !metric.is_positive_definite() {
        return Err(Error::NonConvex(format!("Hessian not PD at {p:?}")));
    }
    let ginv = metric.inverse()?;
    let chris = christoffel(&metric)?;
    let phi2 = jet_eval(phi, p, 2)?;
    let dphi = laplace_beltrami(&phi2, &metric, &chris)?;
    let phi_cov = covariant_hessian(&phi2, &metric, &chris)?;
    let grad_phi = crate::riemann::gradient(&phi2);

    let t_jets = graph_tchebychev_jets(&f4)?;
    let t_vals: Vec<f64> = t_jets.iter().map(|t| t.value()).collect();
    // Lowered form T_i = G_ik T^k as order-1 jets; T_ij = d_j T_i.
    let hess1: Vec<Vec<Jet>> = hess
        .iter()
        .map(|r| r.iter().map(|j| j.truncate(1)).collect())
        .collect();
    let mut t_low_d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut ti = Jet::constant(n, 1, 0.0);
        for k in 0..n {
            ti = ti.add(&hess1[i][k].mul(&t_jets[k]));
        }
        for j in 0..n {
            let mut e = vec![0u8; n];
            e[j] = 1;
            t_low_d[i][j] = ti.partial(&MultiIndex(e));
        }
    }
    // <grad phi, T> = phi_k T^k.
    let grad_t: f64 = grad_phi.iter().zip(&t_vals).map(|(a, b)| a * b).sum();
    // f^{ik} f^{lj} T_ij phi_k phi_l.
    let mut tij_term = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    tij_term += ginv[i][k] * ginv[l][j] * t_low_d[i][j] * grad_phi[k] * grad_phi[l];
                }
            }
        }
    }
    // Trace-free operators.
    let a_low = super::lowered_cubic(&f4);
    let a_up = super::raise_first(&ginv, &a_low);
    let mut l_op = vec![vec![0.0; n]; n];
    let mut ahat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            l_op[i][j] = phi_cov[i][j] - 0.5 * dphi * metric.g[i][j];
            let mut a_term = 0.0;
            for h in 0..n {
                a_term += a_up[h][i][j] * grad_phi[h];
            }
            ahat[i][j] = a_term - grad_t * metric.g[i][j];
        }
    }
    let sq = |m: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += m[i][j] * m[k][l] * ginv[i][k] * ginv[j][l];
                    }
                }
            }
        }
        s
    };
    Ok(PointData {
        sqrt_det: metric.det().sqrt(),
        dphi,
        grad_t,
        tij_term,
        l_sq: sq(&l_op),
        ahat_sq: sq(&ahat),
    })
}

/// Areas of two graphs over the same domain under the relative metric
/// volume, with boundary compatibility checks. The maximal graph's area
/// dominates.
pub fn area_compare(
    f: &ExpressionProgram,
    f_sharp: &ExpressionProgram,
    spec: &BumpSpec,
) -> Result<(f64, f64, f64)> {
    for p in boundary_points(spec) {
        let a = jet_eval(f, &p, 1)?;
        let b = jet_eval(f_sharp, &p, 1)?;
        let ga = crate::riemann::gradient(&a);
        let gb = crate::riemann::gradient(&b);
        let dv = (a.value() - b.value()).abs();
        let dg = ga
            .iter()
            .zip(&gb)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0f64, f64::max);
        if dv > 1e-10 || dg > 1e-10 {
            return Err(Error::BoundaryViolation(format!(
                "graphs disagree on the boundary at {p:?} (dv {dv:.2e}, dgrad {dg:.2e})"
            )));
        }
    }
    let density = |g: &ExpressionProgram, x: f64, y: f64| -> Result<f64> {
        let j = jet_eval(g, &[x, y], 2)?;
        let hess = hessian_jets(&j);
        let m = MetricJet::from_component_jets(g.arity(), &hess);
        let det = m.det();
        if det <= 0.0 || !m.is_positive_definite() {
            return Err(Error::NonConvex(format!(
                "Hessian not positive definite at ({x}, {y})"
            )));
        }
        Ok(det.sqrt())
    };
    let mut both = |x: f64, y: f64| -> Result<Vec<f64>> {
        Ok(vec![density(f, x, y)?, density(f_sharp, x, y)?])
    };
    let (vals, errs, _) = rectangle_quadrature_vec(&mut both, spec.xr, spec.yr, spec.panels)?;
    let (area, area_sharp) = (vals[0], vals[1]);
    let err = errs[0] + errs[1];
    if area_sharp > area + err {
        return Err(Error::Domain(format!(
            "comparison area {area_sharp} exceeds maximal area {area} beyond quadrature error {err:.3e}"
        )));
    }
    Ok((area, area_sharp, err))
}
