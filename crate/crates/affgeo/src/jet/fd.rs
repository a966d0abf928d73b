//! Central finite differences: the independent oracle for the jet engine.
//!
//! Tensor products of one-dimensional central stencils estimate mixed
//! partials up to total order 3. Step sizes balance truncation against
//! roundoff per total order; order-3 stencils are fourth-order accurate
//! because the catalog contains functions (exp(t^2), logarithms near
//! their pole) whose fifth derivatives are large enough to sink a plain
//! second-order stencil below the 1e-6 oracle target.

use super::MultiIndex;
use crate::error::{Error, Result};
use crate::expr::ExpressionProgram;
use crate::jet::eval::eval_value;

/// Step-size rule per total derivative order.
#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    /// Multipliers of (1 + |coordinate|) per total order 1..=3.
    pub scale: [f64; 3],
}

impl Default for StepPolicy {
    fn default() -> Self {
        let eps = f64::EPSILON;
        StepPolicy {
            scale: [
                eps.powf(1.0 / 3.0),
                eps.powf(1.0 / 6.0) / 2.0,
                eps.powf(1.0 / 7.0) / 3.0,
            ],
        }
    }
}

impl StepPolicy {
    fn step(&self, total_order: usize, coordinate: f64) -> f64 {
        self.scale[total_order - 1] * (1.0 + coordinate.abs())
    }
}

/// One-dimensional stencil: offsets in units of h and matching weights;
/// the estimate is sum w_i f(x + o_i h) / h^k. Totals above 1 use the
/// fourth-order-accurate variants, which the catalog's fast-growing
/// derivatives (exp(t^2) iterates, logs and ratios near their poles)
/// need to stay inside the oracle tolerance.
fn stencil(partial_order: u8, total_order: usize) -> (&'static [f64], &'static [f64]) {
    const O1: [f64; 2] = [-1.0, 1.0];
    const W1: [f64; 2] = [-0.5, 0.5];
    const O1H: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
    const W1H: [f64; 4] = [1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0];
    const O2H: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
    const W2H: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    const O3H: [f64; 6] = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
    const W3H: [f64; 6] = [1.0 / 8.0, -1.0, 13.0 / 8.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];
    match (partial_order, total_order) {
        (1, 1) => (&O1, &W1),
        (1, _) => (&O1H, &W1H),
        (2, _) => (&O2H, &W2H),
        (3, _) => (&O3H, &W3H),
        _ => unreachable!("stencils exist for partial orders 1..=3"),
    }
}

/// Central-difference estimate of the mixed partial `index` of `program`
/// at `point` with the default step policy.
pub fn fd_derivative(
    program: &ExpressionProgram,
    point: &[f64],
    index: &MultiIndex,
) -> Result<f64> {
    fd_derivative_with(program, point, index, &StepPolicy::default())
}

pub fn fd_derivative_with(
    program: &ExpressionProgram,
    point: &[f64],
    index: &MultiIndex,
    policy: &StepPolicy,
) -> Result<f64> {
    let total = index.order();
    if total == 0 {
        return eval_value(program, point, FD_QUAD_TOL);
    }
    if total > 3 {
        return Err(Error::Domain(format!(
            "central differences degrade above order 3 (requested {total})"
        )));
    }
    if index.len() != point.len() {
        return Err(Error::Domain(
            "multi-index length does not match point dimension".into(),
        ));
    }
    // Active coordinates with their stencils.
    let mut active: Vec<(usize, &[f64], &[f64], f64)> = Vec::new();
    for (i, &e) in index.0.iter().enumerate() {
        if e > 0 {
            let (offs, wts) = stencil(e, total);
            let h = policy.step(total, point[i]);
            active.push((i, offs, wts, h));
        }
    }
    let mut sum = 0.0;
    let mut denom = 1.0;
    for &(i, _, _, h) in &active {
        denom *= h.powi(index.0[i] as i32);
    }
    // Tensor-product walk over the stencil grid.
    let mut counters = vec![0usize; active.len()];
    let mut x = point.to_vec();
    loop {
        let mut w = 1.0;
        for (slot, &(i, offs, wts, h)) in active.iter().enumerate() {
            let c = counters[slot];
            x[i] = point[i] + offs[c] * h;
            w *= wts[c];
        }
        if w != 0.0 {
            sum += w * eval_value(program, &x, FD_QUAD_TOL)?;
        }
        // Advance the odometer.
        let mut slot = 0;
        loop {
            if slot == active.len() {
                return Ok(sum / denom);
            }
            counters[slot] += 1;
            if counters[slot] < active[slot].1.len() {
                break;
            }
            counters[slot] = 0;
            x[active[slot].0] = point[active[slot].0];
            slot += 1;
        }
    }
}

/// Quadrature tolerance used inside the oracle; tight, because the
/// difference quotient divides quadrature noise by h^3.
const FD_QUAD_TOL: f64 = 1e-13;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_program, ParseContext};
    use crate::jet::jet_eval;
    use approx::assert_relative_eq;

    fn prog(text: &str, vars: &[&str]) -> ExpressionProgram {
        parse_program(text, &ParseContext::new(vars)).unwrap()
    }

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::new(e)
    }

    #[test]
    fn constant_hessian_of_quadratic() {
        let p = prog("(x1^2 + x2^2)/2", &["x1", "x2"]);
        for pt in [[0.0, 0.0], [1.3, -2.4], [10.0, 5.0]] {
            let d = fd_derivative(&p, &pt, &mi(&[2, 0])).unwrap();
            assert_relative_eq!(d, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn third_derivative_of_log() {
        // d^3/dx^3 of -ln x at x=1 is -2.
        let p = prog("-ln(x)", &["x"]);
        let d = fd_derivative(&p, &[1.0], &mi(&[3])).unwrap();
        assert_relative_eq!(d, -2.0, epsilon = 1e-7);
    }

    #[test]
    fn mixed_partials_match_jets_on_transcendentals() {
        let p = prog("exp(x*y) * sin(x) + ln(2 + y)", &["x", "y"]);
        let pt = [0.8, -0.4];
        let j = jet_eval(&p, &pt, 3).unwrap();
        for idx in [
            mi(&[1, 0]),
            mi(&[0, 1]),
            mi(&[1, 1]),
            mi(&[2, 0]),
            mi(&[2, 1]),
            mi(&[1, 2]),
            mi(&[3, 0]),
            mi(&[0, 3]),
        ] {
            let fd = fd_derivative(&p, &pt, &idx).unwrap();
            let exact = j.partial(&idx);
            let rel = (fd - exact).abs() / (1.0 + exact.abs());
            assert!(
                rel <= 1e-6,
                "index {idx:?}: fd={fd}, jet={exact}, rel={rel}"
            );
        }
    }

    #[test]
    fn order_four_is_rejected() {
        let p = prog("x^5", &["x"]);
        assert!(fd_derivative(&p, &[1.0], &mi(&[4])).is_err());
    }

    #[test]
    fn cross_derivative_of_integral_component() {
        // d^2/du1 du2 of a function with separated integrals is zero.
        let p = prog(
            "integral(t, 0, u1, exp(t^2)) + integral(t, 0, u2, exp(-t^2))",
            &["u1", "u2"],
        );
        let d = fd_derivative(&p, &[0.3, 0.4], &mi(&[1, 1])).unwrap();
        assert!(d.abs() < 1e-8, "{d}");
        let j = jet_eval(&p, &[0.3, 0.4], 2).unwrap();
        let rel = (d - j.partial(&mi(&[1, 1]))).abs() / (1.0 + j.partial(&mi(&[1, 1])).abs());
        assert!(rel <= 1e-6);
    }
}
