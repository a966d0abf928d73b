//! Geometry of convex graphs and immersions under the constant
//! transversal normalization Y = (0, ..., 0, 1).
//!
//! For a graph x_{n+1} = f(x_1..x_n) the relative metric is G = Hess f
//! and the cubic form is A_ijk = -1/2 f_ijk. For a parametric immersion
//! the same data comes out of the basis solve
//! x_{u_i u_j} = c^k_ij x_{u_k} + b_ij Y, with G = b and the difference
//! tensor A^k_ij = c^k_ij - Gamma^k_ij(G). The two paths must agree on
//! graphs, which the tests pin down.

mod ejiri;
pub(crate) mod jets;
mod variation;

pub use ejiri::{ejiri_frame, EjiriFrame};
pub use variation::{area_compare, second_variation, BumpSpec, VariationResult};

use crate::error::{Error, Result};
use crate::expr::ExpressionProgram;
use crate::jet::{jet_eval, solve_jet_columns, Jet, MultiIndex};
use crate::riemann::{
    christoffel, curvature, laplace_beltrami, ChristoffelData, CurvatureData, MetricJet,
};
use jets::{christoffel_jets, det_jets, divergence, inverse_jets, tchebychev_jets};

/// All pointwise invariants of a Calabi structure at one chart point.
#[derive(Debug, Clone)]
pub struct CalabiReport {
    pub point: Vec<f64>,
    pub dim: usize,
    pub metric: MetricJet,
    pub ginv: Vec<Vec<f64>>,
    /// Totally symmetric lowered cubic form A_ijk.
    pub cubic: Vec<Vec<Vec<f64>>>,
    /// Raised difference tensor A^k_ij (first index up).
    pub cubic_up: Vec<Vec<Vec<f64>>>,
    /// Tchebychev components T^l.
    pub tchebychev: Vec<f64>,
    pub tchebychev_norm_sq: f64,
    /// Relative Pick invariant J.
    pub pick: f64,
    pub scalar_curvature: f64,
    /// Gaussian curvature when dim == 2.
    pub gaussian: Option<f64>,
    /// D = det Hess f (det G for immersions).
    pub hessian_det: f64,
    /// Laplace-Beltrami of ln D: the maximality residual.
    pub maximal_residual: f64,
    pub curvature: CurvatureData,
    pub christoffel: ChristoffelData,
}

/// Hessian of a graph function as order-2 jets, from an order-4 jet of f.
fn hessian_jets(f4: &Jet) -> Vec<Vec<Jet>> {
    let n = f4.dim();
    (0..n)
        .map(|i| (0..n).map(|j| f4.derivative(i).derivative(j)).collect())
        .collect()
}

fn lowered_cubic(f4: &Jet) -> Vec<Vec<Vec<f64>>> {
    let n = f4.dim();
    let mut a = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut e = vec![0u8; n];
                e[i] += 1;
                e[j] += 1;
                e[k] += 1;
                a[i][j][k] = -0.5 * f4.partial(&MultiIndex(e));
            }
        }
    }
    a
}

fn raise_first(ginv: &[Vec<f64>], low: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let n = ginv.len();
    let mut up = vec![vec![vec![0.0; n]; n]; n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += ginv[l][k] * low[k][i][j];
                }
                up[l][i][j] = s;
            }
        }
    }
    up
}

fn pick_invariant(ginv: &[Vec<f64>], a: &[Vec<Vec<f64>>]) -> f64 {
    let n = ginv.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for p in 0..n {
                        for q in 0..n {
                            s += ginv[i][l] * ginv[j][p] * ginv[k][q] * a[i][j][k] * a[l][p][q];
                        }
                    }
                }
            }
        }
    }
    s / (n * (n - 1)) as f64
}

fn norm_sq(g: &[Vec<f64>], v: &[f64]) -> f64 {
    let n = g.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i][j] * v[i] * v[j];
        }
    }
    s
}

/// Raised difference tensor of a graph as order-1 jets.
fn graph_cubic_up_jets(f4: &Jet) -> Result<Vec<Vec<Vec<Jet>>>> {
    let n = f4.dim();
    let hess1: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f4.derivative(i).derivative(j).truncate(1))
                .collect()
        })
        .collect();
    let ginv_jets = inverse_jets(&hess1)?;
    let mut a_up = Vec::with_capacity(n);
    for l in 0..n {
        let mut plane = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut s = Jet::constant(n, 1, 0.0);
                for k in 0..n {
                    let alow = f4.derivative(k).derivative(i).derivative(j).scale(-0.5);
                    s = s.add(&ginv_jets[l][k].mul(&alow));
                }
                row.push(s);
            }
            plane.push(row);
        }
        a_up.push(plane);
    }
    Ok(a_up)
}

/// Tchebychev component jets (order 1) for a graph.
pub(crate) fn graph_tchebychev_jets(f4: &Jet) -> Result<Vec<Jet>> {
    let hess = hessian_jets(f4);
    let a_up = graph_cubic_up_jets(f4)?;
    tchebychev_jets(&hess, &a_up)
}

/// All invariants of the graph of `f` at `point`.
pub fn calabi_invariants(f: &ExpressionProgram, point: &[f64]) -> Result<CalabiReport> {
    let n = f.arity();
    let f4 = jet_eval(f, point, 4)?;
    let hess = hessian_jets(&f4);
    let metric = MetricJet::from_component_jets(n, &hess);
    if !metric.is_positive_definite() {
        return Err(Error::NonConvex(format!(
            "Hessian not positive definite at {point:?}"
        )));
    }
    let ginv = metric.inverse()?;
    let cubic = lowered_cubic(&f4);
    let cubic_up = raise_first(&ginv, &cubic);

    let a_up_jets = graph_cubic_up_jets(&f4)?;
    let t_jets = tchebychev_jets(&hess, &a_up_jets)?;
    let tche: Vec<f64> = t_jets.iter().map(|t| t.value()).collect();

    let chris = christoffel(&metric)?;
    let curv = curvature(&metric, &chris)?;

    let d_jet = det_jets(&hess);
    let ln_d = d_jet.ln()?;
    let residual = laplace_beltrami(&ln_d, &metric, &chris)?;

    Ok(CalabiReport {
        point: point.to_vec(),
        dim: n,
        tchebychev_norm_sq: norm_sq(&metric.g, &tche),
        pick: pick_invariant(&ginv, &cubic),
        scalar_curvature: curv.scalar,
        gaussian: curv.gaussian,
        hessian_det: d_jet.value(),
        maximal_residual: residual,
        tchebychev: tche,
        cubic,
        cubic_up,
        ginv,
        metric,
        curvature: curv,
        christoffel: chris,
    })
}

/// Laplace-Beltrami of ln det Hess f: zero exactly on maximal graphs.
pub fn maximal_residual(f: &ExpressionProgram, point: &[f64]) -> Result<f64> {
    Ok(calabi_invariants(f, point)?.maximal_residual)
}

/// Residuals of the power-determinant equation sum f^{ij} (D^a)_{ij} = 0
/// and of the trace identity tr(nabla T) = n(2a+1)|T|^2. On solutions of
/// the PDE both vanish together.
pub fn maximal_type_residual(f: &ExpressionProgram, a: f64, point: &[f64]) -> Result<(f64, f64)> {
    if a == 0.0 {
        return Err(Error::Domain("exponent a must be nonzero".into()));
    }
    let n = f.arity();
    let f4 = jet_eval(f, point, 4)?;
    let hess = hessian_jets(&f4);
    let metric = MetricJet::from_component_jets(n, &hess);
    if !metric.is_positive_definite() {
        return Err(Error::NonConvex(format!(
            "Hessian not positive definite at {point:?}"
        )));
    }
    let ginv = metric.inverse()?;
    let d_jet = det_jets(&hess);
    let da = d_jet.powf(a)?;
    let mut pde = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0u8; n];
            e[i] += 1;
            e[j] += 1;
            pde += ginv[i][j] * da.partial(&MultiIndex(e));
        }
    }

    // Trace of the Tchebychev operator as div T, an independent route.
    let t_jets = graph_tchebychev_jets(&f4)?;
    let tche: Vec<f64> = t_jets.iter().map(|t| t.value()).collect();
    let hess1: Vec<Vec<Jet>> = hess
        .iter()
        .map(|r| r.iter().map(|j| j.truncate(1)).collect())
        .collect();
    let trace_t = divergence(&t_jets, &hess1)?;
    let t_norm_sq = norm_sq(&metric.g, &tche);
    let trace_identity = trace_t - (n as f64) * (2.0 * a + 1.0) * t_norm_sq;
    Ok((pde, trace_identity))
}

/// Result of the moving-frame solve for a parametric Calabi immersion.
#[derive(Debug, Clone)]
pub struct ImmersionDecomposition {
    pub dim: usize,
    pub point: Vec<f64>,
    pub metric: MetricJet,
    /// Induced connection coefficients c^k_ij.
    pub conn: Vec<Vec<Vec<f64>>>,
    /// Difference tensor A^k_ij = c^k_ij - Gamma^k_ij.
    pub cubic_up: Vec<Vec<Vec<f64>>>,
    /// Metric components as order-2 jets.
    pub metric_jets: Vec<Vec<Jet>>,
    /// Difference tensor as order-1 jets.
    pub cubic_up_jets: Vec<Vec<Vec<Jet>>>,
    /// Relative residual of the basis solve.
    pub residual: f64,
}

const CONDITION_LIMIT: f64 = 1e12;

/// Solve x_{u_i u_j} = c^k_ij x_{u_k} + b_ij * transversal with jets,
/// where the transversal column is supplied by the caller. Shared by the
/// Calabi path (constant Y) and the centroaffine path (position vector).
pub(crate) fn frame_solve(
    components: &[ExpressionProgram],
    point: &[f64],
    transversal: &dyn Fn(&[Jet]) -> Vec<Jet>,
) -> Result<(Vec<Vec<Vec<Jet>>>, Vec<Vec<Jet>>, f64)> {
    let ambient = components.len();
    let n = ambient - 1;
    if components.iter().any(|c| c.arity() != n) {
        return Err(Error::Domain(format!(
            "expected {n}-parameter programs for an {ambient}-component immersion"
        )));
    }
    let order = 2usize;
    let x_jets: Vec<Jet> = components
        .iter()
        .map(|c| jet_eval(c, point, order + 2))
        .collect::<Result<_>>()?;
    // Columns: tangents, then the transversal.
    let tangents: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            x_jets
                .iter()
                .map(|x| x.derivative(i).truncate(order))
                .collect()
        })
        .collect();
    let trans = transversal(&x_jets);
    let mut mat = vec![Vec::with_capacity(ambient); ambient];
    for (row, m) in mat.iter_mut().enumerate() {
        for tang in &tangents {
            m.push(tang[row].clone());
        }
        m.push(trans[row].truncate(order));
    }
    // Condition gate on the column-equilibrated value matrix: a frame is
    // degenerate when its directions nearly coincide, not when a tangent
    // is merely long.
    let scales: Vec<f64> = (0..ambient)
        .map(|c| {
            (0..ambient)
                .map(|r| mat[r][c].value().abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    if scales.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::DegenerateFrame(format!(
            "zero or non-finite frame column at {point:?}"
        )));
    }
    let vm = nalgebra::DMatrix::from_fn(ambient, ambient, |r, c| mat[r][c].value() / scales[c]);
    let norm1 = |m: &nalgebra::DMatrix<f64>| {
        (0..m.ncols())
            .map(|c| (0..m.nrows()).map(|r| m[(r, c)].abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    };
    let cond = match vm.clone().try_inverse() {
        Some(inv) => norm1(&vm) * norm1(&inv),
        None => f64::INFINITY,
    };
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::DegenerateFrame(format!(
            "basis condition number {cond:.3e} at {point:?}"
        )));
    }
    // Right-hand sides: all second derivatives (i <= j).
    let mut rhs = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i..n {
            let col: Vec<Jet> = x_jets
                .iter()
                .map(|x| x.derivative(i).derivative(j))
                .collect();
            rhs.push(col);
            pairs.push((i, j));
        }
    }
    let sols = solve_jet_columns(&mat, &rhs)?;
    // Solve residual at value level, relative to the data size.
    let mut residual = 0.0f64;
    for (col, sol) in rhs.iter().zip(&sols) {
        for row in 0..ambient {
            let mut s = 0.0;
            for v in 0..ambient {
                s += mat[row][v].value() * sol[v].value();
            }
            let r = (s - col[row].value()).abs() / (1.0 + col[row].value().abs());
            residual = residual.max(r);
        }
    }
    // Scatter into symmetric tensors.
    let zero = Jet::constant(n, order, 0.0);
    let mut conn = vec![vec![vec![zero.clone(); n]; n]; n];
    let mut b = vec![vec![zero.clone(); n]; n];
    for ((i, j), sol) in pairs.iter().zip(&sols) {
        for k in 0..n {
            conn[k][*i][*j] = sol[k].clone();
            conn[k][*j][*i] = sol[k].clone();
        }
        b[*i][*j] = sol[n].clone();
        b[*j][*i] = sol[n].clone();
    }
    Ok((conn, b, residual))
}

/// Decompose a parametric Calabi immersion (n+1 components in n
/// parameters) against the frame {x_{u_1} .. x_{u_n}, Y}.
pub fn decompose_calabi_immersion(
    components: &[ExpressionProgram],
    point: &[f64],
) -> Result<ImmersionDecomposition> {
    let ambient = components.len();
    let n = ambient - 1;
    let (conn_jets, b_jets, residual) = frame_solve(components, point, &|x_jets: &[Jet]| {
        let dim = x_jets[0].dim();
        let mut y = vec![Jet::constant(dim, 2, 0.0); x_jets.len()];
        *y.last_mut().unwrap() = Jet::constant(dim, 2, 1.0);
        y
    })?;
    let metric = MetricJet::from_component_jets(n, &b_jets);
    if !metric.is_positive_definite() {
        return Err(Error::NonConvex(format!(
            "relative metric not positive definite at {point:?}"
        )));
    }
    let gamma_jets = christoffel_jets(&b_jets)?;
    let mut cubic_up_jets = Vec::with_capacity(n);
    for k in 0..n {
        let mut plane = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(conn_jets[k][i][j].truncate(1).sub(&gamma_jets[k][i][j]));
            }
            plane.push(row);
        }
        cubic_up_jets.push(plane);
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
    Ok(ImmersionDecomposition {
        dim: n,
        point: point.to_vec(),
        conn: values(&conn_jets),
        cubic_up: values(&cubic_up_jets),
        metric,
        metric_jets: b_jets,
        cubic_up_jets,
        residual,
    })
}

/// Full invariant report for a parametric Calabi immersion. D is det G
/// and the maximality residual comes through the divergence identity
/// Delta ln D = -2n div T.
pub fn calabi_invariants_parametric(
    components: &[ExpressionProgram],
    point: &[f64],
) -> Result<CalabiReport> {
    let dec = decompose_calabi_immersion(components, point)?;
    let n = dec.dim;
    let ginv = dec.metric.inverse()?;
    let mut cubic = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += dec.metric.g[k][l] * dec.cubic_up[l][i][j];
                }
                cubic[i][j][k] = s;
            }
        }
    }
    let t_jets = tchebychev_jets(&dec.metric_jets, &dec.cubic_up_jets)?;
    let tche: Vec<f64> = t_jets.iter().map(|t| t.value()).collect();
    let g1: Vec<Vec<Jet>> = dec
        .metric_jets
        .iter()
        .map(|r| r.iter().map(|j| j.truncate(1)).collect())
        .collect();
    let div_t = divergence(&t_jets, &g1)?;
    let chris = christoffel(&dec.metric)?;
    let curv = curvature(&dec.metric, &chris)?;
    Ok(CalabiReport {
        point: point.to_vec(),
        dim: n,
        tchebychev_norm_sq: norm_sq(&dec.metric.g, &tche),
        pick: pick_invariant(&ginv, &cubic),
        scalar_curvature: curv.scalar,
        gaussian: curv.gaussian,
        hessian_det: dec.metric.det(),
        maximal_residual: -2.0 * n as f64 * div_t,
        tchebychev: tche,
        cubic,
        cubic_up: dec.cubic_up.clone(),
        ginv,
        metric: dec.metric.clone(),
        curvature: curv,
        christoffel: chris,
    })
}

/// Identity-suite residuals shared by both normalizations.
pub mod identities {
    use super::*;

    /// Gauss equation: R^l_kij - sum_m (A^m_ik A^l_jm - A^m_jk A^l_im)
    /// minus, when `eps` is given, the constant-curvature term
    /// eps (g_jk delta^l_i - g_ik delta^l_j). Returns the max abs entry.
    pub fn gauss_residual(
        curv: &CurvatureData,
        g: &[Vec<f64>],
        a_up: &[Vec<Vec<f64>>],
        eps: Option<f64>,
    ) -> f64 {
        let n = curv.dim;
        let mut worst = 0.0f64;
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut rhs = 0.0;
                        for m in 0..n {
                            rhs += a_up[m][i][k] * a_up[l][j][m] - a_up[m][j][k] * a_up[l][i][m];
                        }
                        if let Some(e) = eps {
                            let di = if l == i { 1.0 } else { 0.0 };
                            let dj = if l == j { 1.0 } else { 0.0 };
                            rhs += e * (g[j][k] * di - g[i][k] * dj);
                        }
                        worst = worst.max((curv.riemann[l][k][i][j] - rhs).abs());
                    }
                }
            }
        }
        worst
    }

    /// Scalar identity R = n(n-1)J - n^2 |T|^2 (plus eps n(n-1) when the
    /// structure equations carry a constant-curvature term).
    pub fn scalar_identity_residual(
        scalar: f64,
        pick: f64,
        t_norm_sq: f64,
        n: usize,
        eps: Option<f64>,
    ) -> f64 {
        let nf = n as f64;
        let mut rhs = nf * (nf - 1.0) * pick - nf * nf * t_norm_sq;
        if let Some(e) = eps {
            rhs += e * nf * (nf - 1.0);
        }
        (scalar - rhs).abs()
    }

    /// Metric compatibility nabla G = 0: max abs of
    /// d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il.
    pub fn metric_compat_residual(m: &MetricJet, c: &ChristoffelData) -> f64 {
        let n = m.dim;
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = m.dg[i][j][k];
                    for l in 0..n {
                        v -= c.gamma[l][k][i] * m.g[l][j] + c.gamma[l][k][j] * m.g[i][l];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// First Bianchi identity: max abs of the cyclic sum of R^l_kij.
    pub fn bianchi_residual(curv: &CurvatureData) -> f64 {
        let n = curv.dim;
        let mut worst = 0.0f64;
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let s = curv.riemann[l][k][i][j]
                            + curv.riemann[l][i][j][k]
                            + curv.riemann[l][j][k][i];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Codazzi symmetry of the covariant derivative of the difference
    /// tensor, probed by central differences of an A-field:
    /// A^k_{ij,l} = d_l A^k_ij + Gamma^k_lm A^m_ij - Gamma^m_li A^k_mj
    /// - Gamma^m_lj A^k_im must be symmetric in (j, l).
    pub fn codazzi_residual(
        a_field: &dyn Fn(&[f64]) -> Result<Vec<Vec<Vec<f64>>>>,
        gamma: &ChristoffelData,
        point: &[f64],
    ) -> Result<f64> {
        let n = point.len();
        let a0 = a_field(point)?;
        const OFFS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
        const WTS: [f64; 4] = [1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0];
        let mut da = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for l in 0..n {
            let h = 1e-4 * (1.0 + point[l].abs());
            let mut acc = vec![vec![vec![0.0; n]; n]; n];
            for (o, w) in OFFS.iter().zip(&WTS) {
                let mut p = point.to_vec();
                p[l] += o * h;
                let a = a_field(&p)?;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            acc[k][i][j] += w * a[k][i][j];
                        }
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        da[k][i][j][l] = acc[k][i][j] / h;
                    }
                }
            }
        }
        let cov = |k: usize, i: usize, j: usize, l: usize| -> f64 {
            let mut v = da[k][i][j][l];
            for m in 0..n {
                v += gamma.gamma[k][l][m] * a0[m][i][j]
                    - gamma.gamma[m][l][i] * a0[k][m][j]
                    - gamma.gamma[m][l][j] * a0[k][i][m];
            }
            v
        };
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        worst = worst.max((cov(k, i, j, l) - cov(k, i, l, j)).abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}
