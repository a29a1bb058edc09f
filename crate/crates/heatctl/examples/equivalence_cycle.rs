//! The three problems are one problem: starting from an optimal target
//! solve at (tau, M), its value r maps to the norm problem (r, tau) and the
//! time problem (M, r), and all three return the same bang-bang control.
//!
//!     cargo run --release --example equivalence_cycle

use heatctl::{build_domain, optimal_norm, optimal_time, solve_bvp, Field, TimeGrid};

fn main() {
    let domain = build_domain((0.2, 0.8), 8).expect("valid control window");
    let grid = TimeGrid::new(0.0, 1.0, 200).expect("valid grid");
    let y0 = Field(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let z_d = Field(vec![-0.3, 0.4, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0]);

    let tau = grid.node(50);
    let m = 1.0;

    // Anchor: optimal target problem at (tau, M) with value r.
    let op = solve_bvp(&domain, &grid, tau, m, &y0, &z_d, 1e-10, 100_000).unwrap();
    let r = op.reach_distance;
    println!("target problem:  (tau, M) = ({tau}, {m})  ->  r = {r:.12}");

    // Optimal norm problem at (r, tau) recovers M.
    let np = optimal_norm(&domain, &grid, tau, r, None, 1e-9, 1e-10, 100_000, &y0, &z_d).unwrap();
    println!("norm problem:    (r, tau)  ->  M(r, tau) = {:.12}", np.m_star);

    // Optimal time problem at (M, r) recovers tau.
    let tp = optimal_time(&domain, &grid, m, r, 1e-5, 1e-10, 100_000, &y0, &z_d).unwrap();
    println!("time problem:    (M, r)  ->  tau(M, r) = {:.12}", tp.tau_grid);

    // All three optimal controls coincide in L^2(0,T; L^2).
    let d_on = op.control.l2_distance(&np.solution.control);
    let d_ot = op.control.l2_distance(&tp.solution.control);
    let d_nt = np.solution.control.l2_distance(&tp.solution.control);
    println!("control distances: target/norm = {d_on:.3e}, target/time = {d_ot:.3e}, norm/time = {d_nt:.3e}");
}
