//! Individual check implementations behind the verification engine.

use super::sweep_max;
use crate::calabi::{self, identities};
use crate::catalog::{ExpectSpec, Geometry, SurfaceKind, SurfaceSpec};
use crate::centroaffine::{self, CentroaffineType};
use crate::error::{Error, Result};
use crate::expr::{ExpressionProgram, Node};
use crate::jet::{eval_value, fd_derivative, jet_eval, Jet, MultiIndex};
use crate::riemann::{christoffel, curvature, MetricJet};

pub struct Sweep {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub detail: Option<String>,
}

/// Checks that differentiate through repeated pointwise solves; they run
/// on the sparse oracle lattice when the surface carries integral nodes.
pub fn is_stencil_check(name: &str) -> bool {
    matches!(name, "extremal-residual" | "tchebychev-covariant-norm-sq")
}

pub fn surface_uses_sparse_stencils(spec: &SurfaceSpec) -> bool {
    surface_has_integrals(spec)
}

pub fn default_tolerance(name: &str) -> f64 {
    match name {
        // Stencil-based residuals.
        "extremal-residual" | "tchebychev-covariant-norm-sq" | "codazzi" => 1e-6,
        "metric-compatibility"
        | "first-bianchi"
        | "warped-metric"
        | "gauss-system"
        | "gauss-system-flat"
        | "implicit-on-surface" => 1e-9,
        "metric-identity" => 1e-10,
        "elliptic-type" | "hyperbolic-type" => 0.5,
        "jet-fd-oracle" => 1e-6,
        // Jet-based residuals.
        _ => 1e-8,
    }
}

fn has_integrals(p: &ExpressionProgram) -> bool {
    p.nodes().iter().any(|n| matches!(n, Node::Integral { .. }))
}

fn surface_has_integrals(spec: &SurfaceSpec) -> bool {
    spec.programs.iter().any(has_integrals)
}

/// Pointwise geometry of a surface, independent of normalization.
enum PointGeometry {
    Calabi(calabi::CalabiReport),
    Centro(centroaffine::CentroaffineDecomposition),
}

impl PointGeometry {
    fn metric(&self) -> &MetricJet {
        match self {
            PointGeometry::Calabi(r) => &r.metric,
            PointGeometry::Centro(d) => &d.metric,
        }
    }

    fn diff_up(&self) -> &Vec<Vec<Vec<f64>>> {
        match self {
            PointGeometry::Calabi(r) => &r.cubic_up,
            PointGeometry::Centro(d) => &d.diff,
        }
    }

    fn tchebychev_norm_sq(&self) -> f64 {
        match self {
            PointGeometry::Calabi(r) => r.tchebychev_norm_sq,
            PointGeometry::Centro(d) => d.tchebychev_norm_sq,
        }
    }

    fn tchebychev(&self) -> &[f64] {
        match self {
            PointGeometry::Calabi(r) => &r.tchebychev,
            PointGeometry::Centro(d) => &d.tchebychev,
        }
    }

    fn epsilon(&self) -> Option<f64> {
        match self {
            PointGeometry::Calabi(_) => None,
            PointGeometry::Centro(d) => Some(d.kind.epsilon()),
        }
    }

    fn kind(&self) -> Option<CentroaffineType> {
        match self {
            PointGeometry::Calabi(_) => None,
            PointGeometry::Centro(d) => Some(d.kind),
        }
    }
}

/// Metric data of a catalog surface at a chart point, honoring its
/// normalization; feeds geodesic probes and the isometry checks.
pub(crate) fn surface_metric(spec: &SurfaceSpec, p: &[f64]) -> Result<MetricJet> {
    Ok(geometry_at(spec, p)?.metric().clone())
}

/// Per-(surface, point) geometry memoization: every check sweeps the same
/// lattice, and the stencil checks share their offset points too.
fn geometry_at(spec: &SurfaceSpec, p: &[f64]) -> Result<std::sync::Arc<PointGeometry>> {
    use std::collections::hash_map::DefaultHasher;
    use std::collections::HashMap;
    use std::hash::{Hash, Hasher};
    use std::sync::{Arc, Mutex, OnceLock};

    static CACHE: OnceLock<Mutex<HashMap<(u64, Vec<u64>), Arc<PointGeometry>>>> = OnceLock::new();
    const CAP: usize = 1 << 17;

    let mut hasher = DefaultHasher::new();
    spec.id.hash(&mut hasher);
    for (k, v) in &spec.constants {
        k.hash(&mut hasher);
        v.to_bits().hash(&mut hasher);
    }
    for (_, src) in &spec.component_sources {
        src.hash(&mut hasher);
    }
    let key = (
        hasher.finish(),
        p.iter().map(|v| v.to_bits()).collect::<Vec<u64>>(),
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let computed = match (spec.kind, spec.geometry) {
        (SurfaceKind::Graph, Geometry::Calabi) => {
            PointGeometry::Calabi(calabi::calabi_invariants(&spec.programs[0], p)?)
        }
        (SurfaceKind::Parametric, Geometry::Calabi) => {
            PointGeometry::Calabi(calabi::calabi_invariants_parametric(&spec.programs, p)?)
        }
        (SurfaceKind::Parametric, Geometry::Centroaffine) => {
            PointGeometry::Centro(centroaffine::decompose_centroaffine(&spec.programs, p)?)
        }
        (SurfaceKind::Graph, Geometry::Centroaffine) => {
            let n = spec.programs[0].arity();
            let immersion: Vec<ExpressionProgram> = (0..n)
                .map(|i| ExpressionProgram::variable(n, i))
                .chain(std::iter::once(spec.programs[0].clone()))
                .collect();
            PointGeometry::Centro(centroaffine::decompose_centroaffine(&immersion, p)?)
        }
        (SurfaceKind::Implicit, _) => {
            return Err(Error::Domain(
                "implicit-only surfaces carry no chart geometry".into(),
            ))
        }
    };
    let arc = Arc::new(computed);
    let mut guard = cache.lock().unwrap();
    if guard.len() < CAP {
        guard.insert(key, arc.clone());
    }
    Ok(arc)
}

pub fn run_expected(
    spec: &SurfaceSpec,
    expect: &ExpectSpec,
    grid: &[Vec<f64>],
    _tol: f64,
    _grid_label: &str,
) -> Result<Sweep> {
    let expected_expr = |idx: usize| -> Result<ExpressionProgram> {
        let src = expect.params.get(idx).ok_or_else(|| {
            Error::Parse(format!("check '{}' needs parameter {idx}", expect.name))
        })?;
        spec.compile_chart_expr(src)
    };
    let stencil_points = if surface_has_integrals(spec) {
        spec.oracle_points()
    } else {
        grid.to_vec()
    };
    match expect.name.as_str() {
        "metric-identity" => sweep_max(grid, |p| {
            let g = geometry_at(spec, p)?;
            let m = g.metric();
            let mut worst = 0.0f64;
            for i in 0..m.dim {
                for j in 0..m.dim {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((m.g[i][j] - expect).abs());
                }
            }
            Ok(worst)
        }),
        "tchebychev-norm-sq" => {
            let e = expected_expr(0)?;
            sweep_max(grid, |p| {
                let g = geometry_at(spec, p)?;
                Ok((g.tchebychev_norm_sq() - eval_value(&e, p, 1e-12)?).abs())
            })
        }
        "tchebychev-covariant-norm-sq" => {
            let e = expected_expr(0)?;
            sweep_max(&stencil_points, |p| {
                let v = covariant_tchebychev_norm_sq(spec, p)?;
                Ok((v - eval_value(&e, p, 1e-12)?).abs())
            })
        }
        "gaussian-curvature" => {
            let e = expected_expr(0)?;
            sweep_max(grid, |p| {
                let g = geometry_at(spec, p)?;
                let chris = christoffel(g.metric())?;
                let curv = curvature(g.metric(), &chris)?;
                let k = curv
                    .gaussian
                    .ok_or_else(|| Error::Domain("Gaussian curvature needs n = 2".into()))?;
                Ok((k - eval_value(&e, p, 1e-12)?).abs())
            })
        }
        "maximal-residual" => sweep_max(grid, |p| {
            let g = geometry_at(spec, p)?;
            match &*g {
                PointGeometry::Calabi(r) => Ok(r.maximal_residual.abs()),
                PointGeometry::Centro(_) => Err(Error::Domain(
                    "maximal-residual applies to the constant-transversal normalization".into(),
                )),
            }
        }),
        "maxtype-residual" => {
            let a_prog = expected_expr(0)?;
            let a = crate::expr::fold_constant(&a_prog)
                .ok_or_else(|| Error::Parse("maxtype-residual exponent must fold".into()))?;
            sweep_max(grid, |p| {
                let (pde, trace) = calabi::maximal_type_residual(&spec.programs[0], a, p)?;
                Ok(pde.abs().max(trace.abs()))
            })
        }
        "extremal-residual" => sweep_max(&stencil_points, |p| {
            Ok(centroaffine::extremal_residual_parametric(&spec.programs, p)?.abs())
        }),
        "graph-extremal-residual" => sweep_max(grid, |p| {
            Ok(centroaffine::extremal_residual_graph(&spec.programs[0], p)?
                .residual
                .abs())
        }),
        "difference-tensor-zero" => sweep_max(grid, |p| {
            let g = geometry_at(spec, p)?;
            Ok(g.diff_up()
                .iter()
                .flatten()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs())))
        }),
        "difference-tensor-warped" => {
            let kappa = match &*geometry_at(spec, &grid[0])? {
                PointGeometry::Centro(d) => d.diff[1][1][1],
                _ => {
                    return Err(Error::Domain(
                        "difference-tensor-warped needs centroaffine geometry".into(),
                    ))
                }
            };
            let mut sweep = sweep_max(grid, |p| {
                let g = geometry_at(spec, p)?;
                let c = g.diff_up();
                let mut worst = (c[1][1][1] - kappa).abs();
                for v in [c[0][0][0], c[1][0][0], c[0][0][1], c[1][0][1], c[0][1][1]] {
                    worst = worst.max(v.abs());
                }
                Ok(worst)
            })?;
            sweep.detail = Some(format!("difference-tensor scale kappa = {kappa:.12}"));
            Ok(sweep)
        }
        "warped-metric" => {
            let rho = expected_expr(0)?;
            sweep_max(grid, |p| {
                let g = geometry_at(spec, p)?;
                let m = g.metric();
                let r = eval_value(&rho, p, 1e-12)?;
                let worst = (m.g[0][0] - 1.0)
                    .abs()
                    .max(m.g[0][1].abs())
                    .max((m.g[1][1] - r * r).abs());
                Ok(worst)
            })
        }
        "gauss-system" => {
            let rho = expected_expr(0)?;
            let kappa = match &*geometry_at(spec, &grid[0])? {
                PointGeometry::Centro(d) => d.diff[1][1][1],
                _ => {
                    return Err(Error::Domain(
                        "gauss-system needs centroaffine geometry".into(),
                    ))
                }
            };
            let mut sweep = sweep_max(grid, |p| warped_gauss_system(spec, &rho, kappa, p))?;
            sweep.detail = Some(format!("u-direction scale kappa = {kappa:.12}"));
            Ok(sweep)
        }
        "gauss-system-flat" => {
            let p1 = expected_expr(0)?;
            let p2 = expected_expr(1)?;
            sweep_max(grid, |p| flat_gauss_system(spec, &p1, &p2, p))
        }
        "implicit-on-surface" => {
            let implicit = spec
                .implicit
                .as_ref()
                .ok_or_else(|| Error::Parse("surface has no implicit block".into()))?;
            sweep_max(grid, |p| {
                let image: Vec<f64> = spec
                    .programs
                    .iter()
                    .map(|c| eval_value(c, p, 1e-12))
                    .collect::<Result<_>>()?;
                Ok(centroaffine::implicit_residual(implicit, &image)?.abs())
            })
        }
        "elliptic-type" | "hyperbolic-type" => {
            let want = if expect.name.starts_with("elliptic") {
                CentroaffineType::Elliptic
            } else {
                CentroaffineType::Hyperbolic
            };
            sweep_max(grid, |p| {
                let g = geometry_at(spec, p)?;
                match g.kind() {
                    Some(k) if k == want => Ok(0.0),
                    Some(_) => Ok(1.0),
                    None => Err(Error::Domain(
                        "type checks need centroaffine geometry".into(),
                    )),
                }
            })
        }
        other => Err(Error::Parse(format!("unknown check '{other}'"))),
    }
}

/// |nabla T|^2 by 5-point stencils on the T components plus Christoffel
/// correction at the center.
fn covariant_tchebychev_norm_sq(spec: &SurfaceSpec, point: &[f64]) -> Result<f64> {
    let n = spec.chart_dim();
    let t_at = |q: &[f64]| -> Result<Vec<f64>> { Ok(geometry_at(spec, q)?.tchebychev().to_vec()) };
    let center = geometry_at(spec, point)?;
    let m = center.metric();
    let chris = christoffel(m)?;
    const OFFS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
    const WTS: [f64; 4] = [1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0];
    let mut dt = vec![vec![0.0; n]; n];
    for i in 0..n {
        let h = 1e-4 * (1.0 + point[i].abs());
        let mut acc = vec![0.0; n];
        for (o, w) in OFFS.iter().zip(&WTS) {
            let mut q = point.to_vec();
            q[i] += o * h;
            let t = t_at(&q)?;
            for k in 0..n {
                acc[k] += w * t[k];
            }
        }
        for k in 0..n {
            dt[k][i] = acc[k] / h;
        }
    }
    let t0 = center.tchebychev();
    let mut cov = vec![vec![0.0; n]; n];
    for k in 0..n {
        for i in 0..n {
            let mut v = dt[k][i];
            for l in 0..n {
                v += chris.gamma[k][i][l] * t0[l];
            }
            cov[k][i] = v;
        }
    }
    let ginv = m.inverse()?;
    let mut s = 0.0;
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    s += m.g[k][l] * ginv[i][j] * cov[k][i] * cov[l][j];
                }
            }
        }
    }
    Ok(s)
}

/// Residual of the warped-product frame system
/// x_tt = x, x_tu = (rho'/rho) x_u, x_uu = -rho rho' x_t + kappa x_u
/// + rho^2 x, checked directly on second-derivative jets.
fn warped_gauss_system(
    spec: &SurfaceSpec,
    rho: &ExpressionProgram,
    kappa: f64,
    p: &[f64],
) -> Result<f64> {
    let jets: Vec<Jet> = spec
        .programs
        .iter()
        .map(|c| jet_eval(c, p, 2))
        .collect::<Result<_>>()?;
    let rho_jet = jet_eval(rho, p, 1)?;
    let r = rho_jet.value();
    let mut e_t = vec![0u8; p.len()];
    e_t[0] = 1;
    let dr = rho_jet.partial(&MultiIndex(e_t));
    let mut worst = 0.0f64;
    for x in &jets {
        let v = x.value();
        let xt = x.derivative(0).value();
        let xu = x.derivative(1).value();
        let xtt = x.derivative(0).derivative(0).value();
        let xtu = x.derivative(0).derivative(1).value();
        let xuu = x.derivative(1).derivative(1).value();
        worst = worst.max((xtt - v).abs());
        worst = worst.max((xtu - dr / r * xu).abs());
        worst = worst.max((xuu - (-r * dr * xt + kappa * xu + r * r * v)).abs());
    }
    Ok(worst)
}

/// Residual of the flat frame system x_{u1u1} = p1 x_{u1} + Y,
/// x_{u2u2} = p2 x_{u2} + Y, x_{u1u2} = 0 with Y = (0, .., 0, 1).
fn flat_gauss_system(
    spec: &SurfaceSpec,
    p1: &ExpressionProgram,
    p2: &ExpressionProgram,
    p: &[f64],
) -> Result<f64> {
    let jets: Vec<Jet> = spec
        .programs
        .iter()
        .map(|c| jet_eval(c, p, 2))
        .collect::<Result<_>>()?;
    let a1 = eval_value(p1, p, 1e-12)?;
    let a2 = eval_value(p2, p, 1e-12)?;
    let last = jets.len() - 1;
    let mut worst = 0.0f64;
    for (idx, x) in jets.iter().enumerate() {
        let y = if idx == last { 1.0 } else { 0.0 };
        let x1 = x.derivative(0).value();
        let x2 = x.derivative(1).value();
        let x11 = x.derivative(0).derivative(0).value();
        let x12 = x.derivative(0).derivative(1).value();
        let x22 = x.derivative(1).derivative(1).value();
        worst = worst.max((x11 - a1 * x1 - y).abs());
        worst = worst.max((x22 - a2 * x2 - y).abs());
        worst = worst.max(x12.abs());
    }
    Ok(worst)
}

/// Always-on identity checks appended to every report.
pub struct AutoCheck {
    pub name: &'static str,
    pub citation: &'static str,
    pub tolerance: f64,
    /// Stencil-heavy checks always run on the sparse oracle lattice.
    pub sparse: bool,
}

impl AutoCheck {
    pub fn grid_label(&self, spec: &SurfaceSpec) -> String {
        if self.sparse || surface_has_integrals(spec) {
            vec!["3"; spec.chart_dim()].join("x")
        } else {
            spec.grid_label(None)
        }
    }
}

pub fn identity_suite(spec: &SurfaceSpec) -> Vec<AutoCheck> {
    let mut suite = vec![
        AutoCheck {
            name: "metric-compatibility",
            citation: "vanishing covariant derivative of the metric",
            tolerance: 1e-9,
            sparse: false,
        },
        AutoCheck {
            name: "first-bianchi",
            citation: "cyclic symmetry of the curvature tensor",
            tolerance: 1e-9,
            sparse: false,
        },
        AutoCheck {
            name: "gauss-equation",
            citation: "curvature from Christoffels vs quadratic difference-tensor form",
            tolerance: 1e-8,
            sparse: false,
        },
        AutoCheck {
            name: "scalar-identity",
            citation: "scalar curvature vs Pick invariant and Tchebychev norm",
            tolerance: 1e-8,
            sparse: false,
        },
        AutoCheck {
            name: "codazzi",
            citation: "symmetry of the covariant difference-tensor derivative",
            tolerance: 1e-6,
            sparse: true,
        },
        AutoCheck {
            name: "jet-fd-oracle",
            citation: "jet derivatives vs central differences, orders <= 3",
            tolerance: 1e-6,
            sparse: true,
        },
    ];
    if spec.kind == SurfaceKind::Implicit {
        suite.retain(|c| c.name == "jet-fd-oracle");
    }
    suite
}

pub fn run_auto(
    spec: &SurfaceSpec,
    auto: &AutoCheck,
    grid: &[Vec<f64>],
    _tol: f64,
) -> Result<Sweep> {
    let points = if auto.sparse || surface_has_integrals(spec) {
        spec.oracle_points()
    } else {
        grid.to_vec()
    };
    match auto.name {
        "metric-compatibility" => sweep_max(&points, |p| {
            let g = geometry_at(spec, p)?;
            let chris = christoffel(g.metric())?;
            Ok(identities::metric_compat_residual(g.metric(), &chris))
        }),
        "first-bianchi" => sweep_max(&points, |p| {
            let g = geometry_at(spec, p)?;
            let chris = christoffel(g.metric())?;
            let curv = curvature(g.metric(), &chris)?;
            Ok(identities::bianchi_residual(&curv))
        }),
        "gauss-equation" => sweep_max(&points, |p| {
            let g = geometry_at(spec, p)?;
            let chris = christoffel(g.metric())?;
            let curv = curvature(g.metric(), &chris)?;
            Ok(identities::gauss_residual(
                &curv,
                &g.metric().g,
                g.diff_up(),
                g.epsilon(),
            ))
        }),
        "scalar-identity" => sweep_max(&points, |p| {
            let g = geometry_at(spec, p)?;
            let chris = christoffel(g.metric())?;
            let curv = curvature(g.metric(), &chris)?;
            let pick = pick_of(&g)?;
            Ok(identities::scalar_identity_residual(
                curv.scalar,
                pick,
                g.tchebychev_norm_sq(),
                g.metric().dim,
                g.epsilon(),
            ))
        }),
        "codazzi" => sweep_max(&points, |p| {
            let g = geometry_at(spec, p)?;
            let chris = christoffel(g.metric())?;
            let a_field = |q: &[f64]| -> Result<Vec<Vec<Vec<f64>>>> {
                Ok(geometry_at(spec, q)?.diff_up().clone())
            };
            identities::codazzi_residual(&a_field, &chris, p)
        }),
        "jet-fd-oracle" => fd_oracle(spec, &points),
        other => Err(Error::Parse(format!("unknown auto check '{other}'"))),
    }
}

fn pick_of(g: &PointGeometry) -> Result<f64> {
    match g {
        PointGeometry::Calabi(r) => Ok(r.pick),
        PointGeometry::Centro(d) => {
            let n = d.dim;
            let ginv = d.metric.inverse()?;
            let mut low = vec![vec![vec![0.0; n]; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += d.metric.g[k][l] * d.diff[l][i][j];
                        }
                        low[i][j][k] = s;
                    }
                }
            }
            let mut pick = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            for p in 0..n {
                                for q in 0..n {
                                    pick += ginv[i][l]
                                        * ginv[j][p]
                                        * ginv[k][q]
                                        * low[i][j][k]
                                        * low[l][p][q];
                                }
                            }
                        }
                    }
                }
            }
            Ok(pick / (n * (n - 1)) as f64)
        }
    }
}

fn multi_indices(dim: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    fn rec(dim: usize, pos: usize, left: u8, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if pos == dim - 1 {
            cur[pos] = left;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for take in (0..=left).rev() {
            cur[pos] = take;
            rec(dim, pos + 1, left - take, cur, out);
        }
    }
    let mut cur = vec![0u8; dim];
    for total in 1..=max_order {
        rec(dim, 0, total as u8, &mut cur, &mut out);
    }
    out
}

/// Jets against the central-difference oracle: all component programs to
/// order 3 on the oracle lattice, and the implicit program to order 2 at
/// the image points (its fractional powers put order-3 differences out
/// of reach of any fixed step policy).
fn fd_oracle(spec: &SurfaceSpec, points: &[Vec<f64>]) -> Result<Sweep> {
    let dim = spec.chart_dim();
    let indices = multi_indices(dim, 3);
    let mut sweep = sweep_max(points, |p| {
        let mut worst = 0.0f64;
        for prog in &spec.programs {
            let jet = jet_eval(prog, p, 3)?;
            for idx in &indices {
                let exact = jet.partial(idx);
                let approx = fd_derivative(prog, p, idx)?;
                worst = worst.max((approx - exact).abs() / (1.0 + exact.abs()));
            }
        }
        Ok(worst)
    })?;
    if let Some(implicit) = &spec.implicit {
        let ambient_indices = multi_indices(implicit.arity(), 2);
        let image_sweep = sweep_max(points, |p| {
            let image: Vec<f64> = spec
                .programs
                .iter()
                .map(|c| eval_value(c, p, 1e-12))
                .collect::<Result<_>>()?;
            let jet = jet_eval(implicit, &image, 2)?;
            let mut worst = 0.0f64;
            for idx in &ambient_indices {
                let exact = jet.partial(idx);
                let approx = fd_derivative(implicit, &image, idx)?;
                worst = worst.max((approx - exact).abs() / (1.0 + exact.abs()));
            }
            Ok(worst)
        })?;
        if image_sweep.max_residual > sweep.max_residual {
            sweep.max_residual = image_sweep.max_residual;
            sweep.worst_point = image_sweep.worst_point;
        }
        sweep.detail = Some("implicit program checked to order 2 at image points".into());
    }
    Ok(sweep)
}
