// temporary probe: E_P of the frozen target vs s-grid refinement
use stratlab::grid::{Grid, Profile, ScalarField};
use stratlab::rearrange::{potential_energy, superlevel_measure, vertical_rearrangement};

fn rearrange_fine(f: &ScalarField, ns: usize) -> Profile {
    let grid = f.grid();
    let n2 = grid.n2();
    let lo = f.values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s_at = |q: usize| lo + (hi - lo) * q as f64 / (ns - 1) as f64;
    let mu: Vec<f64> = (0..ns).map(|q| superlevel_measure(f, s_at(q))).collect();
    let mut values = Vec::with_capacity(n2);
    for j in 0..n2 {
        let x = grid.x2(j);
        let v = if mu[0] <= x { lo } else {
            let qhi = mu.partition_point(|&m| m > x).min(ns - 1);
            let (m0, m1) = (mu[qhi - 1], mu[qhi]);
            let t = if m0 - m1 > 0.0 { (m0 - x) / (m0 - m1) } else { 1.0 };
            s_at(qhi - 1) + t * (hi - lo) / (ns - 1) as f64
        };
        values.push(v.clamp(lo, hi));
    }
    for j in 1..n2 { if values[j] > values[j-1] { values[j] = values[j-1]; } }
    Profile::from_values(grid, values).unwrap()
}

fn main() {
    let g = Grid::new(128, 129, 4).unwrap();
    let eps = 0.01;
    let rho0 = ScalarField::from_fn(g, |x1, x2| {
        1.0 - x2 + eps * x1.sin() * (std::f64::consts::PI * x2).sin().powi(2)
    });
    let e_rho0 = potential_energy(&rho0);
    let coarse = vertical_rearrangement(&rho0);
    println!("E_P(rho0)        = {:.10e}", e_rho0);
    println!("ns = 2 n2 (impl) : E_P* = {:.10e}  E(0) = {:.6e}", potential_energy(&coarse.lift()), e_rho0 - potential_energy(&coarse.lift()));
    for ns in [516, 1032, 4128, 16512] {
        let fine = rearrange_fine(&rho0, ns);
        let ep = potential_energy(&fine.lift());
        println!("ns = {ns:6}      : E_P* = {:.10e}  E(0) = {:.6e}  sup|d profile| = {:.3e}", ep, e_rho0 - ep, fine.sup_distance(&coarse));
    }
}
