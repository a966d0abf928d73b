//! Pointwise Riemannian computations for metrics delivered as jets.
//!
//! Index conventions used throughout:
//!
//! * Christoffel symbols of the Levi-Civita connection:
//!   Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_il - d_l g_ij).
//! * Curvature: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
//!   `nabla_[X,Y] Z`, with components R(d_i, d_j) d_k = R^l_kij d_l, i.e.
//!   R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik
//!   + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik.
//! * Ricci: R_kj = sum_l R^l_klj; scalar R = g^{kj} R_kj; for surfaces the
//!   Gaussian curvature is K = R/2.

mod density;
mod geodesic;

pub use density::integrate_density;
pub use geodesic::{geodesic_ray, GeodesicControls, GeodesicStatus, GeodesicTrace};

use crate::error::{Error, Result};
use crate::jet::{Jet, MultiIndex};
use nalgebra::DMatrix;

/// Metric data at one chart point: components, first and second partials.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub dim: usize,
    /// `g[i][j]`
    pub g: Vec<Vec<f64>>,
    /// `dg[i][j][k]` = d_k g_ij
    pub dg: Vec<Vec<Vec<f64>>>,
    /// `d2g[i][j][k][l]` = d_k d_l g_ij
    pub d2g: Vec<Vec<Vec<Vec<f64>>>>,
}

impl MetricJet {
    /// Assemble from order-2 jets of the metric components (symmetric in
    /// the component indices; only the upper triangle of `comps` is read).
    pub fn from_component_jets(dim: usize, comps: &[Vec<Jet>]) -> MetricJet {
        let mut g = vec![vec![0.0; dim]; dim];
        let mut dg = vec![vec![vec![0.0; dim]; dim]; dim];
        let mut d2g = vec![vec![vec![vec![0.0; dim]; dim]; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let jet = if j >= i { &comps[i][j] } else { &comps[j][i] };
                g[i][j] = jet.value();
                for k in 0..dim {
                    let mut e = vec![0u8; dim];
                    e[k] += 1;
                    dg[i][j][k] = jet.partial(&MultiIndex(e));
                    for l in 0..dim {
                        let mut e2 = vec![0u8; dim];
                        e2[k] += 1;
                        e2[l] += 1;
                        d2g[i][j][k][l] = jet.partial(&MultiIndex(e2));
                    }
                }
            }
        }
        MetricJet { dim, g, dg, d2g }
    }

    pub fn euclidean(dim: usize) -> MetricJet {
        let mut g = vec![vec![0.0; dim]; dim];
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        MetricJet {
            dim,
            g,
            dg: vec![vec![vec![0.0; dim]; dim]; dim],
            d2g: vec![vec![vec![vec![0.0; dim]; dim]; dim]; dim],
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.g[i][j])
    }

    /// Positive definiteness by Cholesky with a pivot threshold relative
    /// to the trace.
    pub fn is_positive_definite(&self) -> bool {
        cholesky_lower(&self.g).is_some()
    }

    pub fn inverse(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.matrix();
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::SingularMetric("metric is not invertible".into()))?;
        if !self.is_positive_definite() {
            return Err(Error::SingularMetric(
                "metric is not positive definite".into(),
            ));
        }
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| inv[(i, j)]).collect())
            .collect())
    }

    pub fn det(&self) -> f64 {
        self.matrix().determinant()
    }

    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.g[i][j] * v[i] * v[j];
            }
        }
        s
    }
}

/// Lower Cholesky factor, or None when a pivot falls below
/// 1e-12 * trace(g).
pub fn cholesky_lower(g: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = g.len();
    let trace: f64 = (0..n).map(|i| g[i][i]).sum();
    let threshold = 1e-12 * trace.abs().max(f64::MIN_POSITIVE);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s < threshold {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Christoffel symbols of the second kind with their first partials.
#[derive(Debug, Clone)]
pub struct ChristoffelData {
    pub dim: usize,
    /// `gamma[k][i][j]` = Gamma^k_ij
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// `dgamma[k][i][j][l]` = d_l Gamma^k_ij
    pub dgamma: Vec<Vec<Vec<Vec<f64>>>>,
}

pub fn christoffel(m: &MetricJet) -> Result<ChristoffelData> {
    let n = m.dim;
    let ginv = m.inverse()?;
    // First kind: [ij,l] = 1/2 (d_i g_lj + d_j g_il - d_l g_ij)
    let mut first = vec![vec![vec![0.0; n]; n]; n];
    let mut dfirst = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                first[i][j][l] = 0.5 * (m.dg[l][j][i] + m.dg[i][l][j] - m.dg[i][j][l]);
                for p in 0..n {
                    dfirst[i][j][l][p] =
                        0.5 * (m.d2g[l][j][i][p] + m.d2g[i][l][j][p] - m.d2g[i][j][l][p]);
                }
            }
        }
    }
    // d g^{kl} = -g^{ka} (d g_ab) g^{bl}
    let mut dginv = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        for l in 0..n {
            for p in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s -= ginv[k][a] * m.dg[a][b][p] * ginv[b][l];
                    }
                }
                dginv[k][l][p] = s;
            }
        }
    }
    let mut gamma = vec![vec![vec![0.0; n]; n]; n];
    let mut dgamma = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[k][l] * first[i][j][l];
                }
                gamma[k][i][j] = s;
                for p in 0..n {
                    let mut d = 0.0;
                    for l in 0..n {
                        d += dginv[k][l][p] * first[i][j][l] + ginv[k][l] * dfirst[i][j][l][p];
                    }
                    dgamma[k][i][j][p] = d;
                }
            }
        }
    }
    Ok(ChristoffelData {
        dim: n,
        gamma,
        dgamma,
    })
}

/// Curvature tensors at a point.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub dim: usize,
    /// `riemann[l][k][i][j]` = R^l_kij
    pub riemann: Vec<Vec<Vec<Vec<f64>>>>,
    /// `ricci[k][j]`
    pub ricci: Vec<Vec<f64>>,
    pub scalar: f64,
    /// Gaussian curvature, populated when dim == 2.
    pub gaussian: Option<f64>,
}

pub fn curvature(m: &MetricJet, c: &ChristoffelData) -> Result<CurvatureData> {
    let n = m.dim;
    let ginv = m.inverse()?;
    let mut riemann = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = c.dgamma[l][j][k][i] - c.dgamma[l][i][k][j];
                    for mm in 0..n {
                        r += c.gamma[l][i][mm] * c.gamma[mm][j][k]
                            - c.gamma[l][j][mm] * c.gamma[mm][i][k];
                    }
                    riemann[l][k][i][j] = r;
                }
            }
        }
    }
    let mut ricci = vec![vec![0.0; n]; n];
    for k in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..n {
                s += riemann[l][k][l][j];
            }
            ricci[k][j] = s;
        }
    }
    let mut scalar = 0.0;
    for k in 0..n {
        for j in 0..n {
            scalar += ginv[k][j] * ricci[k][j];
        }
    }
    let gaussian = (n == 2).then_some(scalar / 2.0);
    Ok(CurvatureData {
        dim: n,
        riemann,
        ricci,
        scalar,
        gaussian,
    })
}

/// Laplace-Beltrami of a scalar delivered as an order-2 jet:
/// g^{ij} (u_ij - Gamma^k_ij u_k).
pub fn laplace_beltrami(u: &Jet, m: &MetricJet, c: &ChristoffelData) -> Result<f64> {
    let hess = covariant_hessian(u, m, c)?;
    let ginv = m.inverse()?;
    let n = m.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += ginv[i][j] * hess[i][j];
        }
    }
    Ok(s)
}

/// Covariant Hessian u_{,ij} = d_i d_j u - Gamma^k_ij d_k u.
pub fn covariant_hessian(u: &Jet, m: &MetricJet, c: &ChristoffelData) -> Result<Vec<Vec<f64>>> {
    let n = m.dim;
    if u.dim() != n || u.order() < 2 {
        return Err(Error::Domain(
            "covariant hessian needs an order-2 jet over the chart".into(),
        ));
    }
    let grad = gradient(u);
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0u8; n];
            e[i] += 1;
            e[j] += 1;
            let mut v = u.partial(&MultiIndex(e));
            for k in 0..n {
                v -= c.gamma[k][i][j] * grad[k];
            }
            out[i][j] = v;
        }
    }
    Ok(out)
}

/// Plain gradient vector of a jet.
pub fn gradient(u: &Jet) -> Vec<f64> {
    let n = u.dim();
    (0..n)
        .map(|i| {
            let mut e = vec![0u8; n];
            e[i] = 1;
            u.partial(&MultiIndex(e))
        })
        .collect()
}

/// A field assigning metric data to chart points.
pub trait MetricField: Sync {
    fn metric(&self, point: &[f64]) -> Result<MetricJet>;
}

impl<F> MetricField for F
where
    F: Fn(&[f64]) -> Result<MetricJet> + Sync,
{
    fn metric(&self, point: &[f64]) -> Result<MetricJet> {
        self(point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Warped product dt^2 + rho(t)^2 du^2 as a closed-form metric field.
    pub fn warped_metric(rho: impl Fn(f64) -> (f64, f64, f64), t: f64) -> MetricJet {
        let (r, dr, d2r) = rho(t);
        let mut m = MetricJet::euclidean(2);
        m.g[1][1] = r * r;
        m.dg[1][1][0] = 2.0 * r * dr;
        m.d2g[1][1][0][0] = 2.0 * (dr * dr + r * d2r);
        m
    }

    fn cosh_metric(t: f64) -> MetricJet {
        // rho = sqrt(3)/2 cosh t
        let s = 3.0f64.sqrt() / 2.0;
        warped_metric(|t| (s * t.cosh(), s * t.sinh(), s * t.cosh()), t)
    }

    #[test]
    fn flat_chart_has_zero_christoffels_and_curvature() {
        let m = MetricJet::euclidean(3);
        let c = christoffel(&m).unwrap();
        assert!(c.gamma.iter().flatten().flatten().all(|&v| v.abs() < 1e-15));
        let r = curvature(&m, &c).unwrap();
        assert!(r
            .riemann
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .all(|&v| v.abs() < 1e-15));
        assert_eq!(r.scalar, 0.0);
    }

    #[test]
    fn warped_metric_christoffels_match_closed_form() {
        // dt^2 + (3/4) cosh^2 t du^2: Gamma^t_uu = -rho rho',
        // Gamma^u_tu = rho'/rho = tanh t.
        for t in [0.0f64, 0.7, -1.1] {
            let m = cosh_metric(t);
            let c = christoffel(&m).unwrap();
            let s2 = 3.0 / 4.0;
            assert_relative_eq!(c.gamma[0][1][1], -s2 * t.cosh() * t.sinh(), epsilon = 1e-12);
            assert_relative_eq!(c.gamma[1][0][1], t.tanh(), epsilon = 1e-12);
            assert_relative_eq!(c.gamma[1][1][0], t.tanh(), epsilon = 1e-12);
            assert!(c.gamma[0][0][0].abs() < 1e-14);
        }
    }

    #[test]
    fn warped_cosh_metric_has_curvature_minus_one() {
        for t in [0.0f64, 0.5, -0.9, 1.3] {
            let m = cosh_metric(t);
            let c = christoffel(&m).unwrap();
            let r = curvature(&m, &c).unwrap();
            assert_relative_eq!(r.gaussian.unwrap(), -1.0, epsilon = 1e-11);
            // Ricci = -h for a surface of curvature -1.
            assert_relative_eq!(r.ricci[0][0], -m.g[0][0], epsilon = 1e-11);
            assert_relative_eq!(r.ricci[1][1], -m.g[1][1], epsilon = 1e-10);
        }
    }

    #[test]
    fn metric_compatibility_and_bianchi_hold() {
        for t in [0.3f64, -0.8] {
            let m = cosh_metric(t);
            let c = christoffel(&m).unwrap();
            let n = 2;
            // nabla g = 0
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = m.dg[i][j][k];
                        for l in 0..n {
                            v -= c.gamma[l][k][i] * m.g[l][j] + c.gamma[l][k][j] * m.g[i][l];
                        }
                        assert!(v.abs() < 1e-12, "compat {v}");
                    }
                }
            }
            // First Bianchi: R^l_kij + R^l_ijk + R^l_jki = 0.
            let r = curvature(&m, &c).unwrap();
            for l in 0..n {
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let s = r.riemann[l][k][i][j]
                                + r.riemann[l][i][j][k]
                                + r.riemann[l][j][k][i];
                            assert!(s.abs() < 1e-11, "bianchi {s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn covariant_hessian_of_t_on_warped_metric() {
        // u = t: u_{,uu} = -Gamma^t_uu = rho rho' = (3/4) sinh t cosh t.
        let t = 1.0f64;
        let m = cosh_metric(t);
        let c = christoffel(&m).unwrap();
        let u = Jet::variable(2, 2, 0, t);
        let h = covariant_hessian(&u, &m, &c).unwrap();
        assert_relative_eq!(h[1][1], 0.75 * t.sinh() * t.cosh(), epsilon = 1e-12);
        assert!(h[0][0].abs() < 1e-14);
        // Trace against laplace_beltrami.
        let lb = laplace_beltrami(&u, &m, &c).unwrap();
        let ginv = m.inverse().unwrap();
        let mut tr = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                tr += ginv[i][j] * h[i][j];
            }
        }
        assert_relative_eq!(lb, tr, epsilon = 1e-14);
    }

    #[test]
    fn flat_laplacian_of_quadratic() {
        let m = MetricJet::euclidean(2);
        let c = christoffel(&m).unwrap();
        // u = u1^2 + u2^2 at any point: Laplacian 4.
        let u1 = Jet::variable(2, 2, 0, 0.3);
        let u2 = Jet::variable(2, 2, 1, -0.8);
        let u = u1.mul(&u1).add(&u2.mul(&u2));
        assert_relative_eq!(laplace_beltrami(&u, &m, &c).unwrap(), 4.0, epsilon = 1e-13);
        // Constant -> 0.
        let k = Jet::constant(2, 2, 42.0);
        assert_relative_eq!(laplace_beltrami(&k, &m, &c).unwrap(), 0.0, epsilon = 1e-15);
        // u = u1^2 covariant hessian = diag(2, 0).
        let h = covariant_hessian(&u1.mul(&u1), &m, &c).unwrap();
        assert_relative_eq!(h[0][0], 2.0, epsilon = 1e-14);
        assert!(h[0][1].abs() < 1e-14 && h[1][1].abs() < 1e-14);
    }

    #[test]
    fn singular_metric_is_rejected() {
        let mut m = MetricJet::euclidean(2);
        m.g[1][1] = -1.0;
        assert!(matches!(
            christoffel(&m),
            Err(crate::error::Error::SingularMetric(_))
        ));
    }
}
