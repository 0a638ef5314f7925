//! Finite-difference stencils on the uniform vertical grid.
//!
//! Weights come from Fornberg's recursion, so centered, skewed and one-sided
//! rows all fall out of a single window-selection rule. Stencil tables are
//! cached per `(n2, deriv, order, boost)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

/// Weights for the `deriv`-th derivative at `z` over arbitrary nodes.
///
/// Exact for polynomials of degree < nodes.len(); Fornberg (1988).
pub fn fd_weights(z: f64, nodes: &[f64], deriv: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(deriv < n, "need more nodes than the derivative order");
    let m = deriv;
    let mut c = vec![vec![0.0f64; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = ((nodes[i] - z) * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = (nodes[i] - z) * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(m)
}

/// One stencil row: `out[j] = sum_w weights[w] * v[start + w]`.
#[derive(Debug, Clone)]
pub struct StencilRow {
    pub start: usize,
    pub weights: Vec<f64>,
}

/// Per-row stencils for one vertical derivative on an `n2`-node grid.
#[derive(Debug, Clone)]
pub struct DerivStencils {
    pub rows: Vec<StencilRow>,
}

impl DerivStencils {
    /// Apply to one contiguous column of length `n2`.
    pub fn apply_column(&self, column: &[f64], out: &mut [f64]) {
        for (j, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for (w, &c) in row.weights.iter().enumerate() {
                acc += c * column[row.start + w];
            }
            out[j] = acc;
        }
    }
}

/// Centered window width giving order `order` for the `deriv`-th derivative.
/// Symmetric stencils of even derivatives gain one order, hence the smaller
/// widths for even `deriv`.
fn centered_width(deriv: usize, order: usize) -> usize {
    let w = if (deriv + order) % 2 == 0 { deriv + order - 1 } else { deriv + order };
    w | 1
}

/// Build the stencil table for the `deriv`-th vertical derivative with target
/// truncation order `order`. Rows whose centered window would leave the grid
/// use a shifted window of `deriv + order + boost` nodes (one-sided at the
/// walls), i.e. generic order `order + boost`.
pub fn vertical_stencils(n2: usize, deriv: usize, order: usize, boost: usize) -> Arc<DerivStencils> {
    static CACHE: Lazy<Mutex<HashMap<(usize, usize, usize, usize), Arc<DerivStencils>>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    let key = (n2, deriv, order, boost);
    if let Some(hit) = CACHE.lock().unwrap().get(&key) {
        return Arc::clone(hit);
    }

    let dx2 = 1.0 / (n2 - 1) as f64;
    let x = |j: usize| j as f64 * dx2;
    let wc = centered_width(deriv, order);
    let wb = deriv + order + boost;
    assert!(wc <= n2 && wb <= n2, "grid too small for requested stencil");
    let half = wc / 2;

    let mut rows = Vec::with_capacity(n2);
    for j in 0..n2 {
        let (start, width) = if j >= half && j + half < n2 {
            (j - half, wc)
        } else {
            let start = if j < half { 0 } else { n2 - wb };
            (start, wb)
        };
        let nodes: Vec<f64> = (start..start + width).map(x).collect();
        let weights = fd_weights(x(j), &nodes, deriv);
        rows.push(StencilRow { start, weights });
    }

    let table = Arc::new(DerivStencils { rows });
    CACHE.lock().unwrap().insert(key, Arc::clone(&table));
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_eval(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
    }

    fn poly_deriv(c: &[f64]) -> Vec<f64> {
        c.iter().enumerate().skip(1).map(|(p, &ck)| p as f64 * ck).collect()
    }

    #[test]
    fn weights_are_exact_on_polynomials() {
        let nodes = [0.0, 0.13, 0.31, 0.42, 0.77, 1.0];
        let c = [1.0, -2.0, 0.5, 3.0, -1.2, 0.7];
        for m in 0..=4usize {
            let mut dc = c.to_vec();
            for _ in 0..m {
                dc = poly_deriv(&dc);
            }
            for &z in &[0.0, 0.31, 0.55, 1.0] {
                let w = fd_weights(z, &nodes, m);
                let approx: f64 =
                    w.iter().zip(&nodes).map(|(wi, &xi)| wi * poly_eval(&c, xi)).sum();
                let exact = poly_eval(&dc, z);
                assert!(
                    (approx - exact).abs() <= 1e-9 * (1.0 + exact.abs()),
                    "m={m} z={z}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn classic_centered_first_derivative() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-14);
        assert!(w[1].abs() < 1e-14);
        assert!((w[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn table_rows_are_exact_on_matching_polynomials() {
        // Every row must differentiate x^p exactly for p <= order (+ boost at
        // the walls); check the plain order on the whole table.
        for &(m, order) in &[(1usize, 2usize), (1, 4), (2, 2), (2, 4), (4, 2), (4, 4)] {
            let n2 = 17;
            let table = vertical_stencils(n2, m, order, 0);
            let dx2 = 1.0 / (n2 - 1) as f64;
            // f(x) = x^(order + m - 1) keeps the m-th derivative polynomial of
            // degree order - 1, inside every row's exactness range.
            let p = order + m - 1;
            let col: Vec<f64> = (0..n2).map(|j| (j as f64 * dx2).powi(p as i32)).collect();
            let mut out = vec![0.0; n2];
            table.apply_column(&col, &mut out);
            let falling: f64 = (0..m).map(|q| (p - q) as f64).product();
            for j in 0..n2 {
                let x = j as f64 * dx2;
                let exact = falling * x.powi((p - m) as i32);
                assert!(
                    (out[j] - exact).abs() < 1e-8,
                    "m={m} order={order} j={j}: {} vs {exact}",
                    out[j]
                );
            }
        }
    }
}
