//! Truncated multivariate Taylor expansions ("jets") up to order 4.
//!
//! A [`Jet`] stores the normalized coefficients c_alpha = d^alpha f(p) / alpha!
//! of a scalar function at a point, for every multi-index alpha with
//! |alpha| <= order. With normalized coefficients the truncated product of
//! two jets is plain polynomial multiplication, so no factorial bookkeeping
//! appears anywhere in the arithmetic.
//!
//! Analytic functions of a jet are evaluated by univariate composition:
//! if w = g - g(p) is the nilpotent part of a jet g, then
//! phi(g) = sum_k phi^(k)(g(p))/k! * w^k truncated at the jet order.

mod eval;
mod fd;

pub use eval::{eval_value, jet_eval, jet_eval_with, quad_integrate, DEFAULT_QUAD_TOL};
pub use fd::{fd_derivative, fd_derivative_with, StepPolicy};

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Hard cap on jet order. Order 4 is what the fourth-order PDEs need;
/// nothing in the library asks for more.
pub const MAX_ORDER: usize = 4;

/// A derivative multi-index: one non-negative exponent per chart variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u8>);

impl MultiIndex {
    pub fn new(entries: &[u8]) -> Self {
        MultiIndex(entries.to_vec())
    }

    /// Total derivative order |alpha|.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// alpha! = product of entry factorials.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| FACTORIALS[e as usize]).product()
    }
}

const FACTORIALS: [f64; 9] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];

/// Shared per-(dimension, order) lookup tables: the graded-lex list of
/// multi-indices, the rank map, and the truncated-product triple list.
struct JetTable {
    indices: Vec<MultiIndex>,
    rank: HashMap<MultiIndex, usize>,
    /// (i, j, k) meaning indices[i] + indices[j] = indices[k].
    products: Vec<(u32, u32, u32)>,
}

fn enumerate_indices(dim: usize, order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; dim];
    // Graded order: all indices of total order 0, then 1, ...
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
    for total in 0..=order {
        rec(dim, 0, total as u8, &mut cur, &mut out);
    }
    out
}

fn build_table(dim: usize, order: usize) -> JetTable {
    let indices = enumerate_indices(dim, order);
    let mut rank = HashMap::new();
    for (i, idx) in indices.iter().enumerate() {
        rank.insert(idx.clone(), i);
    }
    let mut products = Vec::new();
    for (i, a) in indices.iter().enumerate() {
        for (j, b) in indices.iter().enumerate() {
            if a.order() + b.order() <= order {
                let sum = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                let k = rank[&sum];
                products.push((i as u32, j as u32, k as u32));
            }
        }
    }
    JetTable {
        indices,
        rank,
        products,
    }
}

fn table(dim: usize, order: usize) -> Arc<JetTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((dim, order))
        .or_insert_with(|| Arc::new(build_table(dim, order)))
        .clone()
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Clone)]
pub struct Jet {
    dim: usize,
    order: usize,
    coeffs: Vec<f64>,
    tab: Arc<JetTable>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, v: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order capped at {MAX_ORDER}");
        let tab = table(dim, order);
        let mut coeffs = vec![0.0; tab.indices.len()];
        coeffs[0] = v;
        Jet {
            dim,
            order,
            coeffs,
            tab,
        }
    }

    /// The jet of the coordinate function x_i at a point where x_i = v.
    pub fn variable(dim: usize, order: usize, i: usize, v: f64) -> Jet {
        assert!(i < dim);
        let mut j = Jet::constant(dim, order, v);
        if order >= 1 {
            // The first-order indices follow the constant index; in graded
            // order, index e_i sits at position 1 + rank of e_i among order-1.
            let mut e = vec![0u8; dim];
            e[i] = 1;
            let r = j.tab.rank[&MultiIndex(e)];
            j.coeffs[r] = 1.0;
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Value of the underlying function at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Normalized coefficient c_alpha = d^alpha f / alpha!.
    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        match self.tab.rank.get(idx) {
            Some(&r) => self.coeffs[r],
            None => 0.0,
        }
    }

    /// Raw partial derivative d^alpha f.
    pub fn partial(&self, idx: &MultiIndex) -> f64 {
        self.coeff(idx) * idx.factorial()
    }

    /// Number of stored coefficients: binomial(dim + order, order).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Jet of the partial derivative df/dx_i, one order lower.
    pub fn derivative(&self, i: usize) -> Jet {
        assert!(self.order >= 1, "cannot lower an order-0 jet");
        let mut out = Jet::constant(self.dim, self.order - 1, 0.0);
        for (r, idx) in out.tab.indices.iter().enumerate() {
            let mut up = idx.0.clone();
            up[i] += 1;
            let src = MultiIndex(up);
            out.coeffs[r] = self.coeff(&src) * (idx.0[i] as f64 + 1.0);
        }
        out
    }

    /// Reduce order by truncation (identity if already at `order`).
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order);
        if order == self.order {
            return self.clone();
        }
        let mut out = Jet::constant(self.dim, order, 0.0);
        for (r, idx) in out.tab.indices.iter().enumerate() {
            out.coeffs[r] = self.coeff(idx);
        }
        out
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    fn zip(&self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.order, rhs.order);
        let mut out = self.clone();
        for (c, r) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c = f(*c, *r);
        }
        out
    }

    /// Truncated product; exact for the represented polynomial ring.
    pub fn mul(&self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.order, rhs.order);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.tab.products {
            coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet {
            dim: self.dim,
            order: self.order,
            coeffs,
            tab: self.tab.clone(),
        }
    }

    /// Nilpotent part g - g(p).
    fn nilpotent(&self) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] = 0.0;
        out
    }

    /// phi(g) for a univariate analytic phi given its Taylor coefficients
    /// at g(p): `series[k] = phi^(k)(g(p)) / k!`.
    pub fn compose_univariate(&self, series: &[f64]) -> Jet {
        let w = self.nilpotent();
        // Horner over the nilpotent part.
        let mut acc = Jet::constant(
            self.dim,
            self.order,
            series[self.order.min(series.len() - 1)],
        );
        for k in (0..self.order.min(series.len() - 1)).rev() {
            acc = acc.mul(&w);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let c = self.value();
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("reciprocal of {c}")));
        }
        let mut series = [0.0; MAX_ORDER + 1];
        let mut p = 1.0 / c;
        for (k, s) in series.iter_mut().enumerate().take(self.order + 1) {
            *s = if k % 2 == 0 { p } else { -p };
            p /= c;
        }
        Ok(self.compose_univariate(&series[..=self.order]))
    }

    pub fn div(&self, rhs: &Jet) -> Result<Jet> {
        Ok(self.mul(&rhs.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut series = [0.0; MAX_ORDER + 1];
        for (k, s) in series.iter_mut().enumerate().take(self.order + 1) {
            *s = e / FACTORIALS[k];
        }
        self.compose_univariate(&series[..=self.order])
    }

    pub fn ln(&self) -> Result<Jet> {
        let c = self.value();
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("ln of {c}")));
        }
        let mut series = [0.0; MAX_ORDER + 1];
        series[0] = c.ln();
        let mut p = 1.0 / c;
        for k in 1..=self.order {
            // d^k ln = (-1)^(k-1) (k-1)! / c^k, divided by k!.
            series[k] = if k % 2 == 1 { p } else { -p } / k as f64;
            p /= c;
        }
        Ok(self.compose_univariate(&series[..=self.order]))
    }

    /// Integer power by repeated squaring; valid for every base.
    pub fn powi(&self, mut n: i64) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Jet::constant(self.dim, self.order, 1.0);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        Ok(acc)
    }

    /// Real power. Integer exponents are delegated to `powi` so negative
    /// bases stay legal there; fractional exponents demand a positive base
    /// rather than guessing a branch.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        if r.fract() == 0.0 && r.abs() < 1e15 {
            return self.powi(r as i64);
        }
        let c = self.value();
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!(
                "fractional power {r} of non-positive base {c}"
            )));
        }
        let mut series = [0.0; MAX_ORDER + 1];
        let mut binom = 1.0;
        for (k, s) in series.iter_mut().enumerate().take(self.order + 1) {
            if k > 0 {
                binom *= (r - (k as f64 - 1.0)) / k as f64;
            }
            *s = binom * c.powf(r - k as f64);
        }
        Ok(self.compose_univariate(&series[..=self.order]))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let c = self.value();
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("sqrt of {c}")));
        }
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        self.circular(true)
    }

    pub fn cos(&self) -> Jet {
        self.circular(false)
    }

    fn circular(&self, sin_first: bool) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = if sin_first {
            [s, c, -s, -c]
        } else {
            [c, -s, -c, s]
        };
        let mut series = [0.0; MAX_ORDER + 1];
        for (k, v) in series.iter_mut().enumerate().take(self.order + 1) {
            *v = cycle[k % 4] / FACTORIALS[k];
        }
        self.compose_univariate(&series[..=self.order])
    }

    pub fn sinh(&self) -> Jet {
        self.hyperbolic(true)
    }

    pub fn cosh(&self) -> Jet {
        self.hyperbolic(false)
    }

    fn hyperbolic(&self, sinh_first: bool) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let cycle = if sinh_first { [s, c] } else { [c, s] };
        let mut series = [0.0; MAX_ORDER + 1];
        for (k, v) in series.iter_mut().enumerate().take(self.order + 1) {
            *v = cycle[k % 2] / FACTORIALS[k];
        }
        self.compose_univariate(&series[..=self.order])
    }

    pub fn tanh(&self) -> Result<Jet> {
        // cosh >= 1, division is always safe.
        self.sinh().div(&self.cosh())
    }

    pub fn atan(&self) -> Jet {
        let c = self.value();
        let d = 1.0 + c * c;
        let mut series = [0.0; MAX_ORDER + 1];
        series[0] = c.atan();
        if self.order >= 1 {
            series[1] = 1.0 / d;
        }
        if self.order >= 2 {
            series[2] = -c / (d * d);
        }
        if self.order >= 3 {
            series[3] = (3.0 * c * c - 1.0) / (3.0 * d * d * d);
        }
        if self.order >= 4 {
            series[4] = c * (1.0 - c * c) / (d * d * d * d);
        }
        self.compose_univariate(&series[..=self.order])
    }

    /// Continuous two-argument angle. Differentiable wherever (x,y) != 0;
    /// at the origin the value 0 is returned by convention and derivative
    /// data is rejected.
    pub fn atan2(y: &Jet, x: &Jet) -> Result<Jet> {
        let (yv, xv) = (y.value(), x.value());
        if yv == 0.0 && xv == 0.0 {
            if y.order == 0 {
                return Ok(Jet::constant(y.dim, 0, 0.0));
            }
            return Err(Error::Domain("atan2 derivatives at the origin".into()));
        }
        let angle = yv.atan2(xv);
        if xv.abs() >= yv.abs() {
            // atan2(y,x) = atan(y/x) + locally constant branch shift.
            let base = y.div(x)?.atan();
            let shift = angle - (yv / xv).atan();
            Ok(base.add(&Jet::constant(y.dim, y.order, shift)))
        } else {
            // atan2(y,x) = -atan(x/y) + locally constant branch shift.
            let base = x.div(y)?.atan().neg();
            let shift = angle + (xv / yv).atan();
            Ok(base.add(&Jet::constant(y.dim, y.order, shift)))
        }
    }
}

/// Solve the square jet-valued system M w = r for several right-hand
/// sides by LU with partial pivoting on the value parts. The jet ring has
/// zero divisors, but a pivot is usable exactly when its value part is
/// nonzero, which pivoting maximizes.
pub fn solve_jet_columns(mat: &[Vec<Jet>], rhs: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = mat.len();
    let mut a: Vec<Vec<Jet>> = mat.to_vec();
    let mut cols: Vec<Vec<Jet>> = rhs.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (pivot_row, pivot_abs) = (k..n)
            .map(|r| (r, a[r][k].value().abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs == 0.0 {
            return Err(Error::DegenerateFrame(
                "singular jet system (zero pivot)".into(),
            ));
        }
        a.swap(k, pivot_row);
        perm.swap(k, pivot_row);
        let inv_pivot = a[k][k].recip()?;
        for r in (k + 1)..n {
            let factor = a[r][k].mul(&inv_pivot);
            for c in (k + 1)..n {
                let t = factor.mul(&a[k][c]);
                a[r][c] = a[r][c].sub(&t);
            }
            a[r][k] = factor;
        }
    }
    let mut out = Vec::with_capacity(cols.len());
    for col in cols.iter_mut() {
        let mut b: Vec<Jet> = perm.iter().map(|&p| col[p].clone()).collect();
        for k in 0..n {
            for r in (k + 1)..n {
                let t = a[r][k].mul(&b[k]);
                b[r] = b[r].sub(&t);
            }
        }
        for k in (0..n).rev() {
            for c in (k + 1)..n {
                let t = a[k][c].mul(&b[c]);
                b[k] = b[k].sub(&t);
            }
            b[k] = b[k].mul(&a[k][k].recip()?);
        }
        out.push(b);
    }
    Ok(out)
}

/// Inverse of a square jet matrix via `solve_jet_columns` on the identity.
pub fn jet_matrix_inverse(mat: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = mat.len();
    let dim = mat[0][0].dim();
    let order = mat[0][0].order();
    let eye: Vec<Vec<Jet>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| Jet::constant(dim, order, if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    let cols = solve_jet_columns(mat, &eye)?;
    // cols[j] is the j-th column of the inverse; transpose to rows.
    Ok((0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
        .collect())
}
