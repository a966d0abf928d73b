//! Jet-valued tensor helpers shared by the graph and immersion paths.

use crate::error::Result;
use crate::jet::{jet_matrix_inverse, Jet};

/// Christoffel symbols as jets, one order below the metric jets:
/// gamma[k][i][j] = 1/2 g^{kl} (d_i g_lj + d_j g_il - d_l g_ij).
pub fn christoffel_jets(g: &[Vec<Jet>]) -> Result<Vec<Vec<Vec<Jet>>>> {
    let n = g.len();
    let order = g[0][0].order();
    assert!(
        order >= 1,
        "christoffel jets need metric jets of order >= 1"
    );
    let gt: Vec<Vec<Jet>> = g
        .iter()
        .map(|row| row.iter().map(|j| j.truncate(order - 1)).collect())
        .collect();
    let ginv = jet_matrix_inverse(&gt)?;
    let dg: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| g[i][j].derivative(k)).collect())
                .collect()
        })
        .collect();
    let mut gamma = Vec::with_capacity(n);
    for k in 0..n {
        let mut plane = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut s = Jet::constant(g[0][0].dim(), order - 1, 0.0);
                for l in 0..n {
                    let first = dg[l][j][i].add(&dg[i][l][j]).sub(&dg[i][j][l]);
                    s = s.add(&ginv[k][l].mul(&first));
                }
                row.push(s.scale(0.5));
            }
            plane.push(row);
        }
        gamma.push(plane);
    }
    Ok(gamma)
}

/// Inverse metric as jets at the order of the input.
pub fn inverse_jets(g: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    jet_matrix_inverse(g)
}

/// Determinant of a jet matrix (n <= 3 by cofactor expansion).
pub fn det_jets(g: &[Vec<Jet>]) -> Jet {
    let n = g.len();
    match n {
        1 => g[0][0].clone(),
        2 => g[0][0].mul(&g[1][1]).sub(&g[0][1].mul(&g[1][0])),
        3 => {
            let m00 = g[1][1].mul(&g[2][2]).sub(&g[1][2].mul(&g[2][1]));
            let m01 = g[1][0].mul(&g[2][2]).sub(&g[1][2].mul(&g[2][0]));
            let m02 = g[1][0].mul(&g[2][1]).sub(&g[1][1].mul(&g[2][0]));
            g[0][0]
                .mul(&m00)
                .sub(&g[0][1].mul(&m01))
                .add(&g[0][2].mul(&m02))
        }
        _ => unimplemented!("determinant jets implemented for n <= 3"),
    }
}

/// Tchebychev field as jets: T^l = (1/n) g^{ij} a^l_ij, from metric jets
/// and the raised difference tensor as jets.
pub fn tchebychev_jets(g: &[Vec<Jet>], a_up: &[Vec<Vec<Jet>>]) -> Result<Vec<Jet>> {
    let n = g.len();
    let order = a_up[0][0][0].order();
    let gt: Vec<Vec<Jet>> = g
        .iter()
        .map(|row| row.iter().map(|j| j.truncate(order)).collect())
        .collect();
    let ginv = inverse_jets(&gt)?;
    let mut t = Vec::with_capacity(n);
    for l in 0..n {
        let mut s = Jet::constant(g[0][0].dim(), order, 0.0);
        for i in 0..n {
            for j in 0..n {
                s = s.add(&ginv[i][j].mul(&a_up[l][i][j]));
            }
        }
        t.push(s.scale(1.0 / n as f64));
    }
    Ok(t)
}

/// Divergence of a vector field given component jets of order >= 1 and the
/// metric jets: div T = d_k T^k + Gamma^k_{km} T^m, with the contracted
/// Christoffel taken from d_m ln sqrt(det g).
pub fn divergence(t: &[Jet], g: &[Vec<Jet>]) -> Result<f64> {
    let det = det_jets(g);
    let log_det = det.ln()?;
    let mut s = 0.0;
    for (k, tk) in t.iter().enumerate() {
        s += tk.derivative(k).value();
        s += 0.5 * log_det.derivative(k).value() * tk.value();
    }
    Ok(s)
}
