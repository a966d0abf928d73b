//! Type-II product of a point with a Calabi hypersurface:
//! y(t, p) = e^t (1, phi_1(p), ..., phi_{n-1}(p), phi_n(p) + t),
//! an elliptic centroaffine immersion whenever the base is a Calabi
//! hypersurface.

use crate::error::{Error, Result};
use crate::expr::{ExpressionProgram, ProgramBuilder};
use crate::jet::{jet_eval, Jet};

/// Build the product immersion programs over (t, u_1, .., u_{n-1}) from
/// the base components over (u_1, .., u_{n-1}).
pub fn calabi_product(base: &[ExpressionProgram]) -> Result<Vec<ExpressionProgram>> {
    let base_arity = base
        .first()
        .ok_or_else(|| Error::Domain("empty base immersion".into()))?
        .arity();
    if base.iter().any(|c| c.arity() != base_arity) {
        return Err(Error::Domain("base components disagree on arity".into()));
    }
    let arity = base_arity + 1;
    let map: Vec<usize> = (0..base_arity).map(|i| i + 1).collect();
    let mut out = Vec::with_capacity(base.len() + 1);
    // y_1 = e^t.
    let mut b = ProgramBuilder::new(arity);
    let t = b.var(0);
    let et = b.unary("exp", t)?;
    out.push(b.finish(et));
    // y_{i+1} = e^t phi_i, and the last picks up the extra + t.
    for (idx, comp) in base.iter().enumerate() {
        let remapped = comp.remap(arity, &map);
        let mut b = ProgramBuilder::new(arity);
        let t = b.var(0);
        let et = b.unary("exp", t)?;
        let inner = b.embed(&remapped);
        let inner = if idx + 1 == base.len() {
            b.add(inner, t)
        } else {
            inner
        };
        let root = b.mul(et, inner);
        out.push(b.finish(root));
    }
    Ok(out)
}

/// Evaluate the product immersion at (t, p): ambient point and jets.
pub fn calabi_product_eval(
    product: &[ExpressionProgram],
    t: f64,
    base_point: &[f64],
    order: usize,
) -> Result<Vec<Jet>> {
    let mut point = Vec::with_capacity(base_point.len() + 1);
    point.push(t);
    point.extend_from_slice(base_point);
    product.iter().map(|c| jet_eval(c, &point, order)).collect()
}
