//! Closed-loop control under the optimal-norm feedback law: at every grid
//! node the controller re-solves the norm-minimal problem from the current
//! state and applies the first cell of that control. Along the resulting
//! trajectory the optimal norm value N(t, y(t)) stays constant — a dynamic
//! programming principle — and the state lands in the target ball at T.
//!
//!     cargo run --release --example feedback_loop

use heatctl::{build_domain, simulate_closed_loop, Field, FeedbackScenario, TimeGrid};

fn main() {
    let domain = build_domain((0.2, 0.8), 8).expect("valid control window");
    let grid = TimeGrid::new(0.0, 1.0, 100).expect("valid grid");
    let y0 = Field(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let z_d = Field(vec![-0.3, 0.4, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0]);

    let scenario = FeedbackScenario {
        radius: 0.2,
        t0: 0.0,
        y0,
        z_d: z_d.clone(),
        grid,
        tol_m: 1e-8,
        tol_bvp: 1e-10,
        max_iter: 100_000,
    };

    let run = simulate_closed_loop(&domain, &scenario).expect("closed loop runs");

    let n0 = run.norm_values[0];
    println!("initial optimal norm N(0, y0) = {n0:.9}");
    for i in (0..run.norm_values.len()).step_by(20) {
        println!(
            "  t = {:.2}: N = {:.9}, applied ||u|| = {:.9}",
            run.grid.node(i),
            run.norm_values[i],
            run.controls[i].norm()
        );
    }
    let drift = run
        .norm_values
        .iter()
        .map(|n| (n - n0).abs())
        .fold(0.0, f64::max);
    println!("max |N(t) - N(0)| along the loop = {drift:.3e}");
    println!(
        "terminal miss ||y(T) - z_d|| = {:.9} (radius r = {})",
        run.terminal_miss(&z_d),
        scenario.radius
    );
}
