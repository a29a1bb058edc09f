//! Optimal norm control: the smallest norm bound M(r, tau) whose optimal
//! control still reaches the ball B(z_d, r) at the horizon, found by
//! bisection on the strictly decreasing map M -> r(tau, M).
//!
//!     cargo run --release --example solve_norm

use heatctl::{build_domain, free_reach, optimal_norm, reach_distance, Field, TimeGrid};

fn main() {
    let domain = build_domain((0.2, 0.8), 8).expect("valid control window");
    let grid = TimeGrid::new(0.0, 1.0, 200).expect("valid grid");
    let y0 = Field(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let z_d = Field(vec![-0.3, 0.4, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0]);

    let tau = 0.0;
    let r_t = free_reach(&domain, &grid, &y0, &z_d).expect("free flow");
    let r = 0.4 * r_t; // must lie in (0, r_T)
    println!("r_T = {r_t:.12}, target radius r = {r:.12}");

    let tol_m = 1e-8;
    let sol = optimal_norm(
        &domain, &grid, tau, r, None, tol_m, 1e-10, 100_000, &y0, &z_d,
    )
    .expect("norm search converges");

    println!("M(r, tau) = {:.12}", sol.m_star);
    println!("bisection steps = {}", sol.trace.bracket_history.len());
    for step in sol.trace.bracket_history.iter().take(6) {
        println!(
            "  [{:.9}, {:.9}]  mid = {:.9}  r(mid) = {:.9}",
            step.a, step.b, step.midpoint, step.r_mid
        );
    }
    println!("  ...");

    // Inverse identity: pushing M* back through the reach map recovers r.
    let r_back = reach_distance(&domain, &grid, tau, sol.m_star, &y0, &z_d, 1e-10, 100_000)
        .expect("reach at M*");
    println!("r(tau, M*) = {r_back:.12}  (|error| = {:.3e})", (r_back - r).abs());
}
