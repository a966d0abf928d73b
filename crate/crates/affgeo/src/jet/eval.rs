//! Program evaluation: fast scalar values and full Taylor jets.
//!
//! Integral nodes are where the two meet. The value of
//! int_a^{u(x)} g dt comes from adaptive quadrature; the derivative
//! coefficients come from the fundamental theorem of calculus: with
//! H(v) = int_a^v g, the univariate series of H at v0 = u(x) is
//! [quadrature, g(v0), g'(v0)/2!, ...], which is then composed with the
//! jet of the upper limit like any other analytic function.

use super::Jet;
use crate::error::{Error, Result};
use crate::expr::{ExpressionProgram, Node};
use crate::quad::adaptive_quadrature;

/// Default absolute tolerance for integral nodes met during evaluation.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

/// Inner integrals are evaluated this much tighter than their parent.
const NESTING_FACTOR: f64 = 100.0;

const MAX_QUAD_EVALS: usize = 400_000;

/// Definite integral of a univariate program over [a, b] to absolute
/// tolerance `tol` (with the relative floor described in `quad`). Any
/// nested integral nodes inside the integrand run at `tol / 100`.
pub fn quad_integrate(
    integrand: &ExpressionProgram,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<crate::quad::QuadratureResult> {
    if integrand.arity() != 1 {
        return Err(Error::Domain(format!(
            "integrand must be univariate, has arity {}",
            integrand.arity()
        )));
    }
    adaptive_quadrature(
        |t| eval_value(integrand, &[t], tol / NESTING_FACTOR),
        a,
        b,
        tol,
        MAX_QUAD_EVALS,
    )
}

/// Plain f64 evaluation of a program at a point. `quad_tol` applies to any
/// integral nodes met along the way.
pub fn eval_value(p: &ExpressionProgram, point: &[f64], quad_tol: f64) -> Result<f64> {
    if point.len() != p.arity() {
        return Err(Error::Domain(format!(
            "point dimension {} does not match program arity {}",
            point.len(),
            p.arity()
        )));
    }
    let mut vals: Vec<f64> = Vec::with_capacity(p.nodes().len());
    for node in p.nodes() {
        let v = match node {
            Node::Var(i) => point[*i],
            Node::Const(c) => *c,
            Node::Add(a, b) => vals[*a as usize] + vals[*b as usize],
            Node::Sub(a, b) => vals[*a as usize] - vals[*b as usize],
            Node::Mul(a, b) => vals[*a as usize] * vals[*b as usize],
            Node::Div(a, b) => {
                let d = vals[*b as usize];
                if d == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                vals[*a as usize] / d
            }
            Node::Neg(a) => -vals[*a as usize],
            Node::Pow(a, r) => {
                let base = vals[*a as usize];
                scalar_pow(base, *r)?
            }
            Node::Exp(a) => vals[*a as usize].exp(),
            Node::Ln(a) => {
                let x = vals[*a as usize];
                if x <= 0.0 {
                    return Err(Error::Domain(format!("ln of {x}")));
                }
                x.ln()
            }
            Node::Sqrt(a) => {
                let x = vals[*a as usize];
                if x < 0.0 {
                    return Err(Error::Domain(format!("sqrt of {x}")));
                }
                x.sqrt()
            }
            Node::Sin(a) => vals[*a as usize].sin(),
            Node::Cos(a) => vals[*a as usize].cos(),
            Node::Sinh(a) => vals[*a as usize].sinh(),
            Node::Cosh(a) => vals[*a as usize].cosh(),
            Node::Tanh(a) => vals[*a as usize].tanh(),
            Node::Atan(a) => vals[*a as usize].atan(),
            Node::Atan2(a, b) => {
                let (y, x) = (vals[*a as usize], vals[*b as usize]);
                if y == 0.0 && x == 0.0 {
                    0.0 // documented limit convention for the origin
                } else {
                    y.atan2(x)
                }
            }
            Node::Integral {
                integrand,
                lower,
                upper,
            } => {
                let hi = vals[*upper as usize];
                integral_value(integrand, *lower, hi, quad_tol)?
            }
        };
        if !v.is_finite() {
            return Err(Error::Domain("non-finite intermediate value".into()));
        }
        vals.push(v);
    }
    Ok(vals[p.root() as usize])
}

fn scalar_pow(base: f64, r: f64) -> Result<f64> {
    if r.fract() == 0.0 && r.abs() < 1e15 {
        if base == 0.0 && r < 0.0 {
            return Err(Error::Domain("zero base with negative exponent".into()));
        }
        return Ok(base.powi(r as i32));
    }
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "fractional power {r} of non-positive base {base}"
        )));
    }
    Ok(base.powf(r))
}

fn integral_value(
    integrand: &std::sync::Arc<ExpressionProgram>,
    lo: f64,
    hi: f64,
    quad_tol: f64,
) -> Result<f64> {
    if let Some(v) = cache::get(integrand, lo, hi, quad_tol) {
        return Ok(v);
    }
    let inner_tol = quad_tol / NESTING_FACTOR;
    let r = adaptive_quadrature(
        |t| eval_value(integrand, &[t], inner_tol),
        lo,
        hi,
        quad_tol,
        MAX_QUAD_EVALS,
    )?;
    cache::put(integrand, lo, hi, quad_tol, r.value);
    Ok(r.value)
}

/// Sharded memoization of integral-node values. Verification sweeps and
/// finite-difference stencils revisit the same (integrand, limits)
/// queries constantly. Integrand identity is the address of the shared
/// sub-program; each entry retains a clone of the Arc so an address can
/// never be recycled by a different program while it is cached.
mod cache {
    use crate::expr::ExpressionProgram;
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    const SHARDS: usize = 16;
    const SHARD_CAP: usize = 1 << 18;

    type Key = (usize, u64, u64, u64);
    type Shard = Mutex<HashMap<Key, (Arc<ExpressionProgram>, f64)>>;

    fn shards() -> &'static [Shard; SHARDS] {
        static CACHE: OnceLock<[Shard; SHARDS]> = OnceLock::new();
        CACHE.get_or_init(|| std::array::from_fn(|_| Mutex::new(HashMap::new())))
    }

    fn key(p: &Arc<ExpressionProgram>, lo: f64, hi: f64, tol: f64) -> Key {
        (
            Arc::as_ptr(p) as usize,
            lo.to_bits(),
            hi.to_bits(),
            tol.to_bits(),
        )
    }

    fn shard_of(k: &Key) -> usize {
        let mix = (k.0 >> 4) ^ k.1 as usize ^ (k.2 as usize).rotate_left(17);
        mix % SHARDS
    }

    pub fn get(p: &Arc<ExpressionProgram>, lo: f64, hi: f64, tol: f64) -> Option<f64> {
        let k = key(p, lo, hi, tol);
        shards()[shard_of(&k)]
            .lock()
            .unwrap()
            .get(&k)
            .map(|(_, v)| *v)
    }

    pub fn put(p: &Arc<ExpressionProgram>, lo: f64, hi: f64, tol: f64, v: f64) {
        let k = key(p, lo, hi, tol);
        let mut map = shards()[shard_of(&k)].lock().unwrap();
        if map.len() < SHARD_CAP {
            map.insert(k, (p.clone(), v));
        }
    }
}

/// Evaluate a program as a truncated Taylor jet at `point`.
pub fn jet_eval(p: &ExpressionProgram, point: &[f64], order: usize) -> Result<Jet> {
    jet_eval_with(p, point, order, DEFAULT_QUAD_TOL)
}

/// Like [`jet_eval`] but with an explicit quadrature tolerance for any
/// integral nodes.
pub fn jet_eval_with(
    p: &ExpressionProgram,
    point: &[f64],
    order: usize,
    quad_tol: f64,
) -> Result<Jet> {
    if point.len() != p.arity() {
        return Err(Error::Domain(format!(
            "point dimension {} does not match program arity {}",
            point.len(),
            p.arity()
        )));
    }
    let dim = p.arity();
    let mut jets: Vec<Jet> = Vec::with_capacity(p.nodes().len());
    for node in p.nodes() {
        let j = match node {
            Node::Var(i) => Jet::variable(dim, order, *i, point[*i]),
            Node::Const(c) => Jet::constant(dim, order, *c),
            Node::Add(a, b) => jets[*a as usize].add(&jets[*b as usize]),
            Node::Sub(a, b) => jets[*a as usize].sub(&jets[*b as usize]),
            Node::Mul(a, b) => jets[*a as usize].mul(&jets[*b as usize]),
            Node::Div(a, b) => jets[*a as usize].div(&jets[*b as usize])?,
            Node::Neg(a) => jets[*a as usize].neg(),
            Node::Pow(a, r) => jets[*a as usize].powf(*r)?,
            Node::Exp(a) => jets[*a as usize].exp(),
            Node::Ln(a) => jets[*a as usize].ln()?,
            Node::Sqrt(a) => jets[*a as usize].sqrt()?,
            Node::Sin(a) => jets[*a as usize].sin(),
            Node::Cos(a) => jets[*a as usize].cos(),
            Node::Sinh(a) => jets[*a as usize].sinh(),
            Node::Cosh(a) => jets[*a as usize].cosh(),
            Node::Tanh(a) => jets[*a as usize].tanh()?,
            Node::Atan(a) => jets[*a as usize].atan(),
            Node::Atan2(a, b) => Jet::atan2(&jets[*a as usize], &jets[*b as usize])?,
            Node::Integral {
                integrand,
                lower,
                upper,
            } => {
                let up = &jets[*upper as usize];
                let v0 = up.value();
                let value = integral_value(integrand, *lower, v0, quad_tol)?;
                if order == 0 {
                    Jet::constant(dim, 0, value)
                } else {
                    // Series of H(v) = int_lower^v g at v0: H' = g, so the
                    // k-th normalized coefficient is g-coefficient (k-1)/k.
                    let g = jet_eval_with(integrand, &[v0], order - 1, quad_tol)?;
                    let mut series = vec![0.0; order + 1];
                    series[0] = value;
                    for (k, s) in series.iter_mut().enumerate().skip(1) {
                        *s = g.coeff(&super::MultiIndex::new(&[(k - 1) as u8])) / k as f64;
                    }
                    up.compose_univariate(&series)
                }
            }
        };
        if !j.is_finite() {
            return Err(Error::Domain("non-finite jet coefficient".into()));
        }
        jets.push(j);
    }
    Ok(jets[p.root() as usize].clone())
}
