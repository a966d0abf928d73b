//! Geometry of immersions with the position vector as transversal.
//!
//! The basis solve x_{u_i u_j} = c^k_ij x_{u_k} + b_ij x determines the
//! type and the metric: when -b is positive definite the immersion is
//! elliptic with h = -b, when +b is positive definite it is hyperbolic
//! with h = b. The difference tensor C^k_ij = c^k_ij - Gamma^k_ij(h) is
//! the centroaffine analogue of the cubic form (the letter K is reserved
//! for the Gaussian curvature throughout this crate).

mod product;

pub use product::{calabi_product, calabi_product_eval};

use crate::calabi::frame_solve;
use crate::calabi::jets::{christoffel_jets, divergence, tchebychev_jets};
use crate::error::{Error, Result};
use crate::expr::ExpressionProgram;
use crate::jet::{eval_value, jet_eval, Jet, MultiIndex};
use crate::riemann::{christoffel, curvature, laplace_beltrami, MetricField, MetricJet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentroaffineType {
    Elliptic,
    Hyperbolic,
}

impl CentroaffineType {
    /// Sign epsilon in the structure equations: -1 hyperbolic, +1 elliptic.
    pub fn epsilon(&self) -> f64 {
        match self {
            CentroaffineType::Elliptic => 1.0,
            CentroaffineType::Hyperbolic => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CentroaffineDecomposition {
    pub dim: usize,
    pub point: Vec<f64>,
    pub kind: CentroaffineType,
    /// Centroaffine metric (positive definite after type resolution).
    pub metric: MetricJet,
    /// Metric components as order-2 jets.
    pub metric_jets: Vec<Vec<Jet>>,
    /// Induced connection coefficients c^k_ij.
    pub conn: Vec<Vec<Vec<f64>>>,
    /// Difference tensor C^k_ij values and order-1 jets.
    pub diff: Vec<Vec<Vec<f64>>>,
    pub diff_jets: Vec<Vec<Vec<Jet>>>,
    /// Tchebychev components T^k and |T|^2.
    pub tchebychev: Vec<f64>,
    pub tchebychev_norm_sq: f64,
    /// Relative residual of the basis solve.
    pub residual: f64,
}

/// Decompose a parametric centroaffine immersion against the frame
/// {x_{u_1} .. x_{u_n}, x}.
pub fn decompose_centroaffine(
    components: &[ExpressionProgram],
    point: &[f64],
) -> Result<CentroaffineDecomposition> {
    let ambient = components.len();
    let n = ambient - 1;
    let (conn_jets, b_jets, residual) =
        frame_solve(components, point, &|x_jets: &[Jet]| x_jets.to_vec())?;
    // Type resolution by definiteness of the position coefficient.
    let neg_b: Vec<Vec<Jet>> = b_jets
        .iter()
        .map(|r| r.iter().map(|j| j.neg()).collect())
        .collect();
    let m_neg = MetricJet::from_component_jets(n, &neg_b);
    let m_pos = MetricJet::from_component_jets(n, &b_jets);
    let (kind, metric, metric_jets) = if m_neg.is_positive_definite() {
        (CentroaffineType::Elliptic, m_neg, neg_b)
    } else if m_pos.is_positive_definite() {
        (CentroaffineType::Hyperbolic, m_pos, b_jets)
    } else {
        return Err(Error::IndefiniteType(format!(
            "neither sign of the position coefficient is definite at {point:?}"
        )));
    };
    let gamma_jets = christoffel_jets(&metric_jets)?;
    let mut diff_jets = Vec::with_capacity(n);
    for k in 0..n {
        let mut plane = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(conn_jets[k][i][j].truncate(1).sub(&gamma_jets[k][i][j]));
            }
            plane.push(row);
        }
        diff_jets.push(plane);
    }
    let t_jets = tchebychev_jets(&metric_jets, &diff_jets)?;
    let tche: Vec<f64> = t_jets.iter().map(|t| t.value()).collect();
    let mut t_norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            t_norm += metric.g[i][j] * tche[i] * tche[j];
        }
    }
    let values = |t: &Vec<Vec<Vec<Jet>>>| -> Vec<Vec<Vec<f64>>> {
        t.iter()
            .map(|p| {
                p.iter()
                    .map(|r| r.iter().map(|j| j.value()).collect())
                    .collect()
            })
            .collect()
    };
    Ok(CentroaffineDecomposition {
        dim: n,
        point: point.to_vec(),
        kind,
        conn: values(&conn_jets),
        diff: values(&diff_jets),
        diff_jets,
        tchebychev: tche,
        tchebychev_norm_sq: t_norm,
        metric,
        metric_jets,
        residual,
    })
}

/// Trace of the Tchebychev operator (the h-divergence of T), computed by
/// 5-point central differencing of the T components across the chart and
/// Christoffel correction at the center. Jets feed only the pointwise
/// solves, never the differentiation.
pub fn extremal_residual_parametric(
    components: &[ExpressionProgram],
    point: &[f64],
) -> Result<f64> {
    let n = components.len() - 1;
    let center = decompose_centroaffine(components, point)?;
    const OFFS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
    const WTS: [f64; 4] = [1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0];
    let mut div = 0.0;
    for k in 0..n {
        let h = 1e-4 * (1.0 + point[k].abs());
        let mut d = 0.0;
        for (o, w) in OFFS.iter().zip(&WTS) {
            let mut p = point.to_vec();
            p[k] += o * h;
            let dec = decompose_centroaffine(components, &p)?;
            if dec.kind != center.kind {
                return Err(Error::IndefiniteType(format!(
                    "type flips across the stencil at {p:?}"
                )));
            }
            d += w * dec.tchebychev[k];
        }
        div += d / h;
    }
    let chris = christoffel(&center.metric)?;
    for k in 0..n {
        for l in 0..n {
            div += chris.gamma[k][k][l] * center.tchebychev[l];
        }
    }
    Ok(div)
}

/// Trace of the Tchebychev operator through jets only; the cross-check
/// route for the stencil version.
pub fn extremal_residual_jets(components: &[ExpressionProgram], point: &[f64]) -> Result<f64> {
    let dec = decompose_centroaffine(components, point)?;
    let t_jets = tchebychev_jets(&dec.metric_jets, &dec.diff_jets)?;
    let g1: Vec<Vec<Jet>> = dec
        .metric_jets
        .iter()
        .map(|r| r.iter().map(|j| j.truncate(1)).collect())
        .collect();
    divergence(&t_jets, &g1)
}

/// Centroaffine data of a graph x_{n+1} = f(x): support, determinant, the
/// extremal argument w = det(Hess f)/support^{n+2}, and the fourth-order
/// residual Delta_h ln w.
#[derive(Debug, Clone)]
pub struct GraphCentroaffineData {
    pub support: f64,
    pub hessian_det: f64,
    pub extremal_argument: f64,
    pub kind: CentroaffineType,
    pub residual: f64,
}

const ZERO_SUPPORT_FACTOR: f64 = 1e-10;

/// Evaluate the graph extremality residual Delta_h ln(det f_ij / rho^{n+2})
/// at `point`, with h the centroaffine metric of the graph immersion.
pub fn extremal_residual_graph(
    f: &ExpressionProgram,
    point: &[f64],
) -> Result<GraphCentroaffineData> {
    let n = f.arity();
    let f4 = jet_eval(f, point, 4)?;
    let hess: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f4.derivative(i).derivative(j))
                .collect::<Vec<_>>()
        })
        .collect();
    let hess_m = MetricJet::from_component_jets(n, &hess);
    if !hess_m.is_positive_definite() {
        return Err(Error::NonConvex(format!(
            "Hessian not positive definite at {point:?}"
        )));
    }
    // Support rho = f - sum x_i f_i as an order-2 jet.
    let mut rho = f4.truncate(2);
    for i in 0..n {
        let xi = Jet::variable(n, 2, i, point[i]);
        rho = rho.sub(&xi.mul(&f4.derivative(i).truncate(2)));
    }
    let rho_val = rho.value();
    if rho_val.abs() <= ZERO_SUPPORT_FACTOR * (1.0 + f4.value().abs()) {
        return Err(Error::ZeroSupport(format!(
            "support {rho_val} vanishes at {point:?}"
        )));
    }
    // Centroaffine metric of the graph immersion (x, f(x)).
    let graph_immersion: Vec<ExpressionProgram> = (0..n)
        .map(|i| ExpressionProgram::variable(n, i))
        .chain(std::iter::once(f.clone()))
        .collect();
    let dec = decompose_centroaffine(&graph_immersion, point)?;
    let chris = christoffel(&dec.metric)?;
    // ln w = ln det Hess - (n+2) ln |rho|.
    let det = crate::calabi::jets::det_jets(&hess);
    let abs_rho = if rho_val < 0.0 { rho.neg() } else { rho };
    let ln_w = det.ln()?.sub(&abs_rho.ln()?.scale((n + 2) as f64));
    let residual = laplace_beltrami(&ln_w, &dec.metric, &chris)?;
    Ok(GraphCentroaffineData {
        support: rho_val,
        hessian_det: det.value(),
        extremal_argument: det.value() / rho_val.powi(n as i32 + 2),
        kind: dec.kind,
        residual,
    })
}

/// Max deviation of J^T g(image) J from h(source) over the samples, with
/// the Jacobian J taken from first-order jets of the map.
pub fn pullback_isometry_check(
    map: &[ExpressionProgram],
    source_metric: &dyn MetricField,
    target_metric: &dyn MetricField,
    samples: &[Vec<f64>],
) -> Result<f64> {
    let s_dim = map[0].arity();
    let t_dim = map.len();
    let mut worst = 0.0f64;
    for p in samples {
        let jets: Vec<Jet> = map
            .iter()
            .map(|c| jet_eval(c, p, 1))
            .collect::<Result<_>>()?;
        let image: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        let mut jac = vec![vec![0.0; s_dim]; t_dim];
        for (a, jet) in jets.iter().enumerate() {
            for i in 0..s_dim {
                let mut e = vec![0u8; s_dim];
                e[i] = 1;
                jac[a][i] = jet.partial(&MultiIndex(e));
            }
        }
        let g = target_metric.metric(&image)?;
        let h = source_metric.metric(p)?;
        for i in 0..s_dim {
            for j in 0..s_dim {
                let mut pulled = 0.0;
                for a in 0..t_dim {
                    for b in 0..t_dim {
                        pulled += jac[a][i] * g.g[a][b] * jac[b][j];
                    }
                }
                worst = worst.max((pulled - h.g[i][j]).abs());
            }
        }
    }
    Ok(worst)
}

/// Value of an implicit defining function at an ambient point.
pub fn implicit_residual(implicit: &ExpressionProgram, point: &[f64]) -> Result<f64> {
    eval_value(implicit, point, 1e-12)
}

/// Gaussian curvature of the centroaffine metric at a decomposition.
pub fn gaussian_curvature(dec: &CentroaffineDecomposition) -> Result<Option<f64>> {
    let chris = christoffel(&dec.metric)?;
    let curv = curvature(&dec.metric, &chris)?;
    Ok(curv.gaussian)
}

#[cfg(test)]
mod tests;
