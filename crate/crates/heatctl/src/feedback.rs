//! Optimal-norm feedback: the value functional N(t0, y0), the feedback law
//! built from it, and the sampled-data closed-loop simulator.
//!
//! N(t0, y0) is the smallest norm bound that still reaches B(z_d, r) at T
//! when starting from y0 at t0; it is zero exactly when the free flow
//! already lands in the ball. The feedback value at (t0, y0) is the first
//! active cell of the norm-optimal control solved afresh from (t0, y0).
//! Along optimal trajectories N is constant (a dynamic programming
//! principle), which the simulator exploits by warm-starting each step's
//! norm bisection from the previous step's bracket.

use crate::error::{Error, Result};
use crate::norm::{bisect_norm, free_reach, optimal_norm, NormSolution};
use crate::spectral::{Field, SpectralDomain, TimeGrid};

#[derive(Debug, Clone)]
pub struct FeedbackScenario {
    /// Target ball radius.
    pub radius: f64,
    /// Start time; must be a grid node in [t_start, T).
    pub t0: f64,
    pub y0: Field,
    pub z_d: Field,
    pub grid: TimeGrid,
    pub tol_m: f64,
    pub tol_bvp: f64,
    pub max_iter: usize,
}

impl FeedbackScenario {
    fn validate(&self, domain: &SpectralDomain) -> Result<usize> {
        if self.radius <= 0.0 {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        if self.y0.len() != domain.num_modes || self.z_d.len() != domain.num_modes {
            return Err(Error::InvalidArgument("field dimension mismatch".into()));
        }
        node_index(&self.grid, self.t0)
    }
}

fn node_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    let idx = grid.nearest_node(t);
    if (t - grid.node(idx)).abs() > 1e-9 * grid.dt() || idx >= grid.n_steps {
        return Err(Error::InvalidArgument(format!(
            "t = {t} is not a grid node in [{}, {})",
            grid.t_start, grid.t_end
        )));
    }
    Ok(idx)
}

/// One closed-loop run: states at the nodes of the tail grid from t0,
/// applied control per cell, and the per-step norm values.
#[derive(Debug)]
pub struct ClosedLoopRun {
    pub grid: TimeGrid,
    pub states: Vec<Field>,
    pub controls: Vec<Field>,
    pub norm_values: Vec<f64>,
    pub masked_adjoint_norms: Vec<f64>,
}

impl ClosedLoopRun {
    pub fn terminal_miss(&self, z_d: &Field) -> f64 {
        self.states
            .last()
            .expect("closed loop has at least one state")
            .sub(z_d)
            .norm()
    }
}

/// Solve the norm problem from (t0, y0), optionally warm-started from a
/// bracket; falls back to the cold search when the bracket does not hold.
fn norm_solution_at(
    domain: &SpectralDomain,
    scenario: &FeedbackScenario,
    t0: f64,
    y0: &Field,
    warm: Option<(f64, f64)>,
) -> Result<Option<NormSolution>> {
    let idx = node_index(&scenario.grid, t0)?;
    let sub = scenario.grid.tail(idx)?;
    let free_dist = free_reach(domain, &sub, y0, &scenario.z_d)?;
    if free_dist <= scenario.radius {
        return Ok(None);
    }
    if let Some((a, b)) = warm {
        if a >= 0.0 && a < b {
            let reach = |m: f64| {
                crate::bvp::reach_distance(
                    domain,
                    &sub,
                    t0,
                    m,
                    y0,
                    &scenario.z_d,
                    scenario.tol_bvp,
                    scenario.max_iter,
                )
            };
            let r_a = if a == 0.0 { free_dist } else { reach(a)? };
            if r_a > scenario.radius && reach(b)? <= scenario.radius {
                return Ok(Some(bisect_norm(
                    domain,
                    &sub,
                    t0,
                    scenario.radius,
                    a,
                    b,
                    scenario.tol_m,
                    scenario.tol_bvp,
                    scenario.max_iter,
                    y0,
                    &scenario.z_d,
                )?));
            }
        }
    }
    Ok(Some(optimal_norm(
        domain,
        &sub,
        t0,
        scenario.radius,
        None,
        scenario.tol_m,
        scenario.tol_bvp,
        scenario.max_iter,
        y0,
        &scenario.z_d,
    )?))
}

/// Optimal norm value N(t0, y0); zero when the free flow already reaches
/// the target ball.
pub fn optimal_norm_value(
    domain: &SpectralDomain,
    scenario: &FeedbackScenario,
    t0: f64,
    y0: &Field,
) -> Result<f64> {
    Ok(norm_solution_at(domain, scenario, t0, y0, None)?
        .map(|s| s.m_star)
        .unwrap_or(0.0))
}

/// Feedback value at (t0, y0): the first active cell of the norm-optimal
/// control from (t0, y0). Its norm equals N(t0, y0); zero when N = 0.
pub fn feedback_control(
    domain: &SpectralDomain,
    scenario: &FeedbackScenario,
    t0: f64,
    y0: &Field,
) -> Result<Field> {
    match norm_solution_at(domain, scenario, t0, y0, None)? {
        None => Ok(Field::zeros(domain.num_modes)),
        Some(sol) => Ok(sol.solution.control.values[0].clone()),
    }
}

/// Run the sampled-data closed loop from scenario.t0: at each grid node
/// evaluate the feedback afresh, hold it over the cell, advance exactly.
pub fn simulate_closed_loop(
    domain: &SpectralDomain,
    scenario: &FeedbackScenario,
) -> Result<ClosedLoopRun> {
    let idx0 = scenario.validate(domain)?;
    run_loop(domain, scenario, idx0, scenario.y0.clone())
}

/// Interval-activated variant: free flow from t0 until tau, then close the
/// loop from tau onward.
pub fn simulate_activated(
    domain: &SpectralDomain,
    scenario: &FeedbackScenario,
    tau: f64,
) -> Result<ClosedLoopRun> {
    let idx0 = scenario.validate(domain)?;
    let idx_tau = node_index(&scenario.grid, tau)?;
    if idx_tau < idx0 {
        return Err(Error::InvalidArgument(
            "activation time precedes scenario start".into(),
        ));
    }
    let drift = scenario.grid.node(idx_tau) - scenario.grid.node(idx0);
    let y_tau = domain.propagate(&scenario.y0, drift)?;
    run_loop(domain, scenario, idx_tau, y_tau)
}

fn run_loop(
    domain: &SpectralDomain,
    scenario: &FeedbackScenario,
    idx0: usize,
    y_start: Field,
) -> Result<ClosedLoopRun> {
    let grid = &scenario.grid;
    let dt = grid.dt();
    let tail = grid.tail(idx0)?;
    let mut states = vec![y_start.clone()];
    let mut controls = Vec::new();
    let mut norm_values = Vec::new();
    let mut masked_adjoint_norms = Vec::new();

    let mut y = y_start;
    let mut warm: Option<(f64, f64)> = None;
    let mut initial_norm: Option<f64> = None;

    for i in idx0..grid.n_steps {
        let t_i = grid.node(i);
        let (n_value, control, adjoint_norm, bracket) =
            match norm_solution_at(domain, scenario, t_i, &y, warm)? {
                None => (0.0, Field::zeros(domain.num_modes), 0.0, None),
                Some(sol) => {
                    let adjoint_norm = domain.masked_norm(&sol.solution.psi.states[0])?;
                    let control = sol.solution.control.values[0].clone();
                    let width = (sol.trace.final_tolerance).max(f64::EPSILON);
                    // Next step's warm bracket: centered, width x4.
                    let bracket = Some(((sol.m_star - 2.0 * width).max(0.0), sol.m_star + 2.0 * width));
                    (sol.m_star, control, adjoint_norm, bracket)
                }
            };
        let n0 = *initial_norm.get_or_insert(n_value);
        if n0 > 0.0 && n_value > 10.0 * n0 {
            return Err(Error::Instability {
                norm: n_value,
                initial: n0,
            });
        }
        warm = bracket;

        let masked = domain.apply_mask(&control)?;
        y = domain.step_with_source(&y, &masked, dt);
        states.push(y.clone());
        controls.push(control);
        norm_values.push(n_value);
        masked_adjoint_norms.push(adjoint_norm);
    }

    Ok(ClosedLoopRun {
        grid: tail,
        states,
        controls,
        norm_values,
        masked_adjoint_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_domain;

    fn scenario() -> (SpectralDomain, FeedbackScenario) {
        let domain = build_domain((0.2, 0.8), 3).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 40).unwrap();
        let y0 = Field(vec![1.0, 0.0, 0.0]);
        let z_d = Field(vec![-0.5, 0.2, 0.0]);
        let scenario = FeedbackScenario {
            radius: 0.3,
            t0: 0.0,
            y0,
            z_d,
            grid,
            tol_m: 1e-7,
            tol_bvp: 1e-10,
            max_iter: 50_000,
        };
        (domain, scenario)
    }

    #[test]
    fn zero_norm_when_free_flow_reaches_ball() {
        let (domain, mut scenario) = scenario();
        scenario.z_d = domain.propagate(&scenario.y0, 1.0).unwrap().add_scaled(
            &Field(vec![0.0, 0.01, 0.0]),
            1.0,
        );
        let n = optimal_norm_value(&domain, &scenario, 0.0, &scenario.y0.clone()).unwrap();
        assert_eq!(n, 0.0);
        let f = feedback_control(&domain, &scenario, 0.0, &scenario.y0.clone()).unwrap();
        assert_eq!(f.norm(), 0.0);
        let run = simulate_closed_loop(&domain, &scenario).unwrap();
        // Closed loop equals free flow.
        let free = domain.propagate(&scenario.y0, 1.0).unwrap();
        assert!(run.states.last().unwrap().sub(&free).norm() < 1e-14);
        assert!(run.norm_values.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn value_matches_open_loop_norm_search() {
        let (domain, scenario) = scenario();
        let n = optimal_norm_value(&domain, &scenario, 0.0, &scenario.y0.clone()).unwrap();
        let open = crate::norm::optimal_norm(
            &domain,
            &scenario.grid,
            0.0,
            scenario.radius,
            None,
            scenario.tol_m,
            scenario.tol_bvp,
            scenario.max_iter,
            &scenario.y0,
            &scenario.z_d,
        )
        .unwrap();
        assert!((n - open.m_star).abs() <= scenario.tol_m);
    }

    #[test]
    fn feedback_value_has_norm_n() {
        let (domain, scenario) = scenario();
        let n = optimal_norm_value(&domain, &scenario, 0.0, &scenario.y0.clone()).unwrap();
        let f = feedback_control(&domain, &scenario, 0.0, &scenario.y0.clone()).unwrap();
        assert!((f.norm() - n).abs() <= 1e-12 * n.max(1.0));
    }

    #[test]
    fn closed_loop_reaches_ball_with_steady_norm() {
        let (domain, scenario) = scenario();
        let run = simulate_closed_loop(&domain, &scenario).unwrap();
        let miss = run.terminal_miss(&scenario.z_d);
        assert!(miss <= scenario.radius + 1e-3, "terminal miss {miss}");
        let n0 = run.norm_values[0];
        assert!(n0 > 0.0);
        for &n in &run.norm_values {
            assert!((n - n0).abs() <= 1e-3 * n0, "norm drifted: {n} vs {n0}");
        }
    }
}
