use super::*;
use crate::calabi::identities;
use crate::expr::{parse_program, ParseContext};
use approx::assert_relative_eq;

fn hyperboloid() -> Vec<ExpressionProgram> {
    let ctx = ParseContext::new(&["t", "u"]);
    vec![
        parse_program("sinh(t)", &ctx).unwrap(),
        parse_program("exp(u)*cosh(t)", &ctx).unwrap(),
        parse_program("exp(-u)*cosh(t)", &ctx).unwrap(),
    ]
}

fn thm62_i(c2: f64) -> Vec<ExpressionProgram> {
    let ctx = ParseContext::new(&["t", "u"]).with_constant("c2", c2);
    vec![
        parse_program("exp(t)", &ctx).unwrap(),
        parse_program("exp(u + t)", &ctx).unwrap(),
        parse_program("exp(-t) - 2*c2^2*u*exp(t)", &ctx).unwrap(),
    ]
}

fn thm62_ii(c4: f64) -> Vec<ExpressionProgram> {
    let ctx = ParseContext::new(&["t", "u"]).with_constant("c4", c4);
    vec![
        parse_program("sinh(t)", &ctx).unwrap(),
        parse_program("exp((1 + sqrt(1 + 4*c4^2))/2 * u) * cosh(t)", &ctx).unwrap(),
        parse_program("exp((1 - sqrt(1 + 4*c4^2))/2 * u) * cosh(t)", &ctx).unwrap(),
    ]
}

fn flat_maximal_base() -> Vec<ExpressionProgram> {
    let ctx = ParseContext::new(&["u1", "u2"]);
    vec![
        parse_program("integral(t, 0, u1, exp(t^2))", &ctx).unwrap(),
        parse_program("integral(t, 0, u2, exp(-t^2))", &ctx).unwrap(),
        parse_program(
            "integral(t, 0, u1, exp(t^2) * integral(s, 0, t, exp(-s^2))) \
             + integral(t, 0, u2, exp(-t^2) * integral(s, 0, t, exp(s^2)))",
            &ctx,
        )
        .unwrap(),
    ]
}

#[test]
fn hyperboloid_is_a_quadric() {
    let comps = hyperboloid();
    for p in [[0.0, 0.0], [0.6, -0.4], [-0.8, 0.7]] {
        let d = decompose_centroaffine(&comps, &p).unwrap();
        assert_eq!(d.kind, CentroaffineType::Hyperbolic);
        assert!(d.diff.iter().flatten().flatten().all(|v| v.abs() < 1e-10));
        assert!(d.tchebychev.iter().all(|v| v.abs() < 1e-10));
        assert!(d.residual < 1e-10);
        // h = dt^2 + cosh^2 t du^2, curvature -1.
        assert_relative_eq!(d.metric.g[0][0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(d.metric.g[1][1], p[0].cosh().powi(2), epsilon = 1e-10);
        let k = gaussian_curvature(&d).unwrap().unwrap();
        assert_relative_eq!(k, -1.0, epsilon = 1e-9);
        let r = extremal_residual_parametric(&comps, &p).unwrap();
        assert!(r.abs() < 1e-8, "{r}");
    }
}

#[test]
fn theorem_62_ii_metric_curvature_and_tchebychev() {
    let c4 = 3.0f64.sqrt() / 2.0;
    let comps = thm62_ii(c4);
    let d = decompose_centroaffine(&comps, &[0.0, 0.0]).unwrap();
    assert_eq!(d.kind, CentroaffineType::Hyperbolic);
    assert_relative_eq!(d.metric.g[0][0], 1.0, epsilon = 1e-11);
    assert_relative_eq!(d.metric.g[1][1], 0.75, epsilon = 1e-11);
    assert!(d.metric.g[0][1].abs() < 1e-11);
    assert_relative_eq!(d.tchebychev_norm_sq, 1.0 / 3.0, epsilon = 1e-10);
    let k = gaussian_curvature(&d).unwrap().unwrap();
    assert_relative_eq!(k, -1.0, epsilon = 1e-9);
    // Difference tensor form: C(du, du) = du, everything else zero.
    for t in [-0.7, 0.0, 0.9] {
        let d = decompose_centroaffine(&comps, &[t, 0.3]).unwrap();
        assert_relative_eq!(d.diff[1][1][1], 1.0, epsilon = 1e-9);
        assert!(d.diff[0][0][0].abs() < 1e-9);
        assert!(d.diff[0][0][1].abs() < 1e-9);
        assert!(d.diff[1][0][1].abs() < 1e-9);
        assert!(d.diff[0][1][1].abs() < 1e-9);
        // |T|^2 = 1/(3 cosh^2 t) for this constant.
        assert_relative_eq!(
            d.tchebychev_norm_sq,
            1.0 / (3.0 * t.cosh().powi(2)),
            epsilon = 1e-9
        );
    }
}

#[test]
fn theorem_62_i_extremal_and_warped() {
    let comps = thm62_i(1.0);
    let p = [0.5, 0.2];
    let d = decompose_centroaffine(&comps, &p).unwrap();
    assert_eq!(d.kind, CentroaffineType::Hyperbolic);
    // h = dt^2 + e^{2t} du^2 (c2 = 1).
    assert_relative_eq!(d.metric.g[0][0], 1.0, epsilon = 1e-10);
    assert_relative_eq!(d.metric.g[1][1], (2.0 * p[0]).exp(), epsilon = 1e-9);
    let r = extremal_residual_parametric(&comps, &p).unwrap();
    assert!(r.abs() < 1e-6, "{r}");
    let rj = extremal_residual_jets(&comps, &p).unwrap();
    assert!(rj.abs() < 1e-10, "{rj}");
    let k = gaussian_curvature(&d).unwrap().unwrap();
    assert_relative_eq!(k, -1.0, epsilon = 1e-9);
}

#[test]
fn gauss_identity_with_curvature_term_on_hyperbolic_surfaces() {
    for comps in [hyperboloid(), thm62_i(1.0), thm62_ii(3.0f64.sqrt() / 2.0)] {
        let p = [0.4, -0.3];
        let d = decompose_centroaffine(&comps, &p).unwrap();
        let chris = christoffel(&d.metric).unwrap();
        let curv = curvature(&d.metric, &chris).unwrap();
        let g = identities::gauss_residual(&curv, &d.metric.g, &d.diff, Some(d.kind.epsilon()));
        assert!(g < 1e-8, "gauss {g}");
        // Scalar identity with the epsilon term: R = nJ(n-1) - n^2|T|^2
        // + eps n(n-1).
        let n = 2;
        let mut pick = 0.0;
        let ginv = d.metric.inverse().unwrap();
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
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for pp in 0..n {
                            for q in 0..n {
                                pick += ginv[i][l]
                                    * ginv[j][pp]
                                    * ginv[k][q]
                                    * low[i][j][k]
                                    * low[l][pp][q];
                            }
                        }
                    }
                }
            }
        }
        pick /= (n * (n - 1)) as f64;
        let s = identities::scalar_identity_residual(
            curv.scalar,
            pick,
            d.tchebychev_norm_sq,
            n,
            Some(d.kind.epsilon()),
        );
        assert!(s < 1e-8, "scalar {s}");
    }
}

#[test]
fn calabi_product_reproduces_the_elliptic_example() {
    let product = calabi_product(&flat_maximal_base()).unwrap();
    assert_eq!(product.len(), 4);
    // t = 0, base origin -> (1, 0, 0, 0).
    let jets = calabi_product_eval(&product, 0.0, &[0.0, 0.0], 0).unwrap();
    let v: Vec<f64> = jets.iter().map(|j| j.value()).collect();
    assert_relative_eq!(v[0], 1.0, epsilon = 1e-13);
    assert!(v[1].abs() < 1e-13 && v[2].abs() < 1e-13 && v[3].abs() < 1e-13);
    // t = 1, base origin -> (e, 0, 0, e).
    let jets = calabi_product_eval(&product, 1.0, &[0.0, 0.0], 0).unwrap();
    let v: Vec<f64> = jets.iter().map(|j| j.value()).collect();
    assert_relative_eq!(v[0], std::f64::consts::E, epsilon = 1e-12);
    assert_relative_eq!(v[3], std::f64::consts::E, epsilon = 1e-12);
    // t -> -inf: the curve approaches the origin of the ambient space.
    let jets = calabi_product_eval(&product, -40.0, &[0.0, 0.0], 0).unwrap();
    assert!(jets.iter().all(|j| j.value().abs() < 1e-15));
}

#[test]
fn calabi_product_is_flat_elliptic_extremal() {
    let product = calabi_product(&flat_maximal_base()).unwrap();
    let p = [0.0, 0.0, 0.0];
    let d = decompose_centroaffine(&product, &p).unwrap();
    assert_eq!(d.kind, CentroaffineType::Elliptic);
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert_relative_eq!(d.metric.g[i][j], expect, epsilon = 1e-10);
        }
    }
    assert_relative_eq!(d.tchebychev_norm_sq, 16.0 / 9.0, epsilon = 1e-9);
    // |T|^2 = (4/9)(4 + u1^2 + u2^2) away from the axis, and the trace of
    // the Tchebychev operator vanishes.
    let q = [0.3, 0.1, -0.2];
    let d = decompose_centroaffine(&product, &q).unwrap();
    assert_relative_eq!(
        d.tchebychev_norm_sq,
        4.0 / 9.0 * (4.0 + 0.01 + 0.04),
        epsilon = 1e-9
    );
    let r = extremal_residual_parametric(&product, &q).unwrap();
    assert!(r.abs() < 1e-6, "{r}");
}

#[test]
fn graph_residual_of_the_log_surface() {
    // x3 = 1/x1 + x1 (ln x1 - ln x2): support 2, det Hess 2, w = 1/8 at
    // (1, 1); the extremality residual vanishes.
    let ctx = ParseContext::new(&["x1", "x2"]);
    let f = parse_program("1/x1 + x1*(ln(x1) - ln(x2))", &ctx).unwrap();
    let d = extremal_residual_graph(&f, &[1.0, 1.0]).unwrap();
    assert_relative_eq!(d.support, 2.0, epsilon = 1e-12);
    assert_relative_eq!(d.hessian_det, 2.0, epsilon = 1e-12);
    assert_relative_eq!(d.extremal_argument, 0.125, epsilon = 1e-12);
    assert_eq!(d.kind, CentroaffineType::Hyperbolic);
    assert!(d.residual.abs() < 1e-8, "{}", d.residual);
    let d = extremal_residual_graph(&f, &[2.0, 3.0]).unwrap();
    assert!(d.residual.abs() < 1e-8, "{}", d.residual);
}

#[test]
fn hyperboloid_graph_is_extremal() {
    let ctx = ParseContext::new(&["x1", "x2"]);
    let f = parse_program("(1 + x1^2)/x2", &ctx).unwrap();
    let d = extremal_residual_graph(&f, &[0.5, 1.5]).unwrap();
    assert!(d.residual.abs() < 1e-9, "{}", d.residual);
}

#[test]
fn zero_support_is_rejected() {
    // The tangent plane of f = (x1-1)^2 + (x2-1)^2 at (1,1) passes
    // through the origin, so the support quantity vanishes there.
    let ctx = ParseContext::new(&["x1", "x2"]);
    let f = parse_program("(x1 - 1)^2 + (x2 - 1)^2", &ctx).unwrap();
    assert!(matches!(
        extremal_residual_graph(&f, &[1.0, 1.0]),
        Err(Error::ZeroSupport(_))
    ));
}

#[test]
fn upper_half_plane_isometry() {
    // Map (t, u) -> (e^{su} tanh t, e^{su} / cosh t) with s = sqrt(3)/2
    // pulls the hyperbolic metric back to dt^2 + (3/4) cosh^2 t du^2.
    let s = 3.0f64.sqrt() / 2.0;
    let ctx = ParseContext::new(&["t", "u"]).with_constant("s", s);
    let map = vec![
        parse_program("exp(s*u) * tanh(t)", &ctx).unwrap(),
        parse_program("exp(s*u) / cosh(t)", &ctx).unwrap(),
    ];
    let source = |p: &[f64]| {
        let t = p[0];
        let mut m = MetricJet::euclidean(2);
        m.g[1][1] = 0.75 * t.cosh().powi(2);
        m.dg[1][1][0] = 1.5 * t.cosh() * t.sinh();
        m.d2g[1][1][0][0] = 1.5 * (2.0 * t.cosh().powi(2) - 1.0);
        Ok(m)
    };
    let target = |p: &[f64]| {
        let u2 = p[1];
        if u2 <= 0.0 {
            return Err(Error::Domain("u2 <= 0".into()));
        }
        let mut m = MetricJet::euclidean(2);
        let f = 1.0 / (u2 * u2);
        m.g[0][0] = f;
        m.g[1][1] = f;
        m.dg[0][0][1] = -2.0 / u2.powi(3);
        m.dg[1][1][1] = -2.0 / u2.powi(3);
        m.d2g[0][0][1][1] = 6.0 / u2.powi(4);
        m.d2g[1][1][1][1] = 6.0 / u2.powi(4);
        Ok(m)
    };
    let mut samples = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            samples.push(vec![
                -1.0 + 2.0 * i as f64 / 8.0,
                -1.0 + 2.0 * j as f64 / 8.0,
            ]);
        }
    }
    let dev = pullback_isometry_check(&map, &source, &target, &samples).unwrap();
    assert!(dev <= 1e-10, "deviation {dev}");
    // Identity map between equal metrics.
    let ctx2 = ParseContext::new(&["t", "u"]);
    let ident = vec![
        parse_program("t", &ctx2).unwrap(),
        parse_program("u", &ctx2).unwrap(),
    ];
    let flat = |_: &[f64]| Ok(MetricJet::euclidean(2));
    let dev = pullback_isometry_check(&ident, &flat, &flat, &samples).unwrap();
    assert!(dev < 1e-14);
    // Perturbed exponent: a genuine negative control.
    let ctx3 = ParseContext::new(&["t", "u"]).with_constant("s", 0.9);
    let bad = vec![
        parse_program("exp(s*u) * tanh(t)", &ctx3).unwrap(),
        parse_program("exp(s*u) / cosh(t)", &ctx3).unwrap(),
    ];
    let dev = pullback_isometry_check(&bad, &source, &target, &samples).unwrap();
    assert!(dev > 1e-2, "deviation {dev}");
}

#[test]
fn implicit_forms_hold_on_parametric_points() {
    // (ii) with alpha = 1/2: x2^(1/2) x3^(3/2) - x1^2 = 1.
    let c4 = 3.0f64.sqrt() / 2.0;
    let comps = thm62_ii(c4);
    let ctx = ParseContext::new(&["x1", "x2", "x3"]);
    let implicit = parse_program("x2^(1/2) * x3^(3/2) - x1^2 - 1", &ctx).unwrap();
    for (t, u) in [(0.0, 0.0), (0.8, -0.5), (-1.1, 0.7)] {
        let x: Vec<f64> = comps
            .iter()
            .map(|c| eval_value(c, &[t, u], 1e-12).unwrap())
            .collect();
        let r = implicit_residual(&implicit, &x).unwrap();
        assert!(r.abs() < 1e-12, "({t}, {u}): {r}");
    }
    // Case (i): x3 - 1/x1 - x1 (ln x1 - ln x2) = 0. The raw
    // parameterization lies on this graph exactly when 2 c2^2 = 1: the
    // classification statement normalizes a residual centroaffine scale.
    let comps = thm62_i(0.5f64.sqrt());
    let implicit = parse_program("x3 - 1/x1 - x1*(ln(x1) - ln(x2))", &ctx).unwrap();
    let x: Vec<f64> = comps
        .iter()
        .map(|c| eval_value(c, &[0.7, -0.3], 1e-12).unwrap())
        .collect();
    let r = implicit_residual(&implicit, &x).unwrap();
    assert!(r.abs() < 1e-10, "{r}");
    // Case (v) limit convention on the axis x1 = x2 = 0: the arctan
    // factor multiplies zero, so the residual collapses to x3^2 - 1.
    let alpha = -1.0;
    let ctx_v = ParseContext::new(&["x1", "x2", "x3"]).with_constant("alpha", alpha);
    let implicit_v = parse_program(
        "x3^2 - (x1^2 + x2^2) * exp(alpha * atan2(x2, x1)) - 1",
        &ctx_v,
    )
    .unwrap();
    let r = implicit_residual(&implicit_v, &[0.0, 0.0, 1.0]).unwrap();
    assert!(r.abs() < 1e-14, "{r}");
}

#[test]
fn stencil_and_jet_extremal_routes_agree() {
    let comps = thm62_ii(3.0f64.sqrt() / 2.0);
    let p = [0.3, -0.2];
    let a = extremal_residual_parametric(&comps, &p).unwrap();
    let b = extremal_residual_jets(&comps, &p).unwrap();
    assert!((a - b).abs() < 1e-6, "stencil {a} vs jets {b}");
}
