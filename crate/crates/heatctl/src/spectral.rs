//! Sine spectral discretization of the Dirichlet heat equation on (0,1).
//!
//! The basis e_k(x) = sqrt(2) sin(k pi x) diagonalizes the Laplacian, so the
//! semigroup acts exactly per mode and all approximation error is confined to
//! mode truncation and piecewise-constant-in-time controls. The control
//! window chi_omega becomes the Gram matrix G with entries over omega,
//! computed in closed form.

use crate::error::{Error, Result};

/// Spectral model of the domain: eigenvalues, control-window Gram matrix.
#[derive(Debug, Clone)]
pub struct SpectralDomain {
    pub num_modes: usize,
    /// mu_k = (k pi)^2, k = 1..N.
    pub eigenvalues: Vec<f64>,
    /// N x N row-major Gram matrix G_{jk} = int_omega e_j e_k dx.
    pub gram: Vec<f64>,
    pub omega: (f64, f64),
}

/// An element of L^2(0,1) as a vector of modal coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// L^2(0,1) norm; equals the Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add_scaled(&self, other: &Field, s: f64) -> Field {
        Field(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.add_scaled(other, -1.0)
    }
}

/// Uniform time grid on [t_start, t_end].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    // `!(a < b)` rather than `a >= b`: it also rejects NaN endpoints.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(Error::InvalidArgument(format!(
                "time grid requires t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be positive".into()));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// Node i, i = 0..=n_steps.
    pub fn node(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt()
    }

    /// Index of the grid node nearest to t, clamped to [0, n_steps].
    pub fn nearest_node(&self, t: f64) -> usize {
        let raw = ((t - self.t_start) / self.dt()).round();
        (raw.max(0.0) as usize).min(self.n_steps)
    }

    /// Subgrid from node `start` to the end, preserving dt.
    pub fn tail(&self, start: usize) -> Result<TimeGrid> {
        if start >= self.n_steps {
            return Err(Error::InvalidArgument(format!(
                "tail start {start} leaves no cells (n_steps = {})",
                self.n_steps
            )));
        }
        TimeGrid::new(self.node(start), self.t_end, self.n_steps - start)
    }

    /// Grid with dt halved k times.
    pub fn refined(&self, k: u32) -> TimeGrid {
        TimeGrid {
            t_start: self.t_start,
            t_end: self.t_end,
            n_steps: self.n_steps << k,
        }
    }
}

/// Piecewise-constant-in-time control u(t) with activation time tau.
///
/// `values[i]` holds on the cell [node(i), node(i+1)); cells entirely before
/// tau carry the zero field. Callers snap tau to a grid node.
#[derive(Debug, Clone)]
pub struct ControlTrajectory {
    pub grid: TimeGrid,
    pub tau: f64,
    pub values: Vec<Field>,
}

impl ControlTrajectory {
    pub fn zero(grid: TimeGrid, tau: f64, num_modes: usize) -> Self {
        ControlTrajectory {
            grid,
            tau,
            values: vec![Field::zeros(num_modes); grid.n_steps],
        }
    }

    /// Index of the first active cell.
    pub fn active_from(&self) -> usize {
        self.grid.nearest_node(self.tau)
    }

    /// Discrete L^2(0,T; L^2) distance to another control on the same grid.
    pub fn l2_distance(&self, other: &ControlTrajectory) -> f64 {
        let dt = self.grid.dt();
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let d = a.sub(b);
                d.dot(&d) * dt
            })
            .sum();
        sum.sqrt()
    }
}

/// State trajectory y(t) sampled at grid nodes (n_steps + 1 entries).
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<Field>,
}

impl StateTrajectory {
    pub fn terminal(&self) -> &Field {
        self.states.last().expect("trajectory has at least one node")
    }
}

/// Closed-form entry of int_a^b 2 sin(j pi x) sin(k pi x) dx (1-based j, k).
fn gram_entry(j: usize, k: usize, a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let anti = |x: f64| -> f64 {
        if j == k {
            let kk = k as f64;
            x - (2.0 * kk * pi * x).sin() / (2.0 * kk * pi)
        } else {
            let d = (j as f64 - k as f64) * pi;
            let s = (j as f64 + k as f64) * pi;
            (d * x).sin() / d - (s * x).sin() / s
        }
    };
    anti(b) - anti(a)
}

/// Build the spectral model for omega = (a, b) with N sine modes.
pub fn build_domain(omega: (f64, f64), num_modes: usize) -> Result<SpectralDomain> {
    let (a, b) = omega;
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::Config(format!(
            "control window must satisfy 0 <= a < b <= 1, got ({a}, {b})"
        )));
    }
    if num_modes == 0 {
        return Err(Error::Config("num_modes must be at least 1".into()));
    }
    let pi = std::f64::consts::PI;
    let eigenvalues = (1..=num_modes)
        .map(|k| (k as f64 * pi).powi(2))
        .collect();
    let mut gram = vec![0.0; num_modes * num_modes];
    for j in 1..=num_modes {
        for k in j..=num_modes {
            let g = gram_entry(j, k, a, b);
            gram[(j - 1) * num_modes + (k - 1)] = g;
            gram[(k - 1) * num_modes + (j - 1)] = g;
        }
    }
    Ok(SpectralDomain {
        num_modes,
        eigenvalues,
        gram,
        omega,
    })
}

impl SpectralDomain {
    fn check_dim(&self, field: &Field) -> Result<()> {
        if field.len() != self.num_modes {
            return Err(Error::InvalidArgument(format!(
                "field has {} coefficients, domain has {} modes",
                field.len(),
                self.num_modes
            )));
        }
        Ok(())
    }

    /// Apply the free heat flow e^{dt * Laplacian}: mode k decays by
    /// exp(-mu_k dt). Exact, no time-stepping error.
    pub fn propagate(&self, field: &Field, dt: f64) -> Result<Field> {
        self.check_dim(field)?;
        if dt < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "propagation time must be nonnegative, got {dt}"
            )));
        }
        Ok(Field(
            field
                .0
                .iter()
                .zip(&self.eigenvalues)
                .map(|(c, mu)| c * (-mu * dt).exp())
                .collect(),
        ))
    }

    /// Galerkin projection of chi_omega f onto the truncated basis: G f.
    pub fn apply_mask(&self, field: &Field) -> Result<Field> {
        self.check_dim(field)?;
        let n = self.num_modes;
        let out = self
            .gram
            .chunks_exact(n)
            .map(|row| row.iter().zip(&field.0).map(|(g, c)| g * c).sum())
            .collect();
        Ok(Field(out))
    }

    /// ||chi_omega f|| = sqrt(f^T G f). Zero for the zero field.
    pub fn masked_norm(&self, field: &Field) -> Result<f64> {
        let gf = self.apply_mask(field)?;
        Ok(field.dot(&gf).max(0.0).sqrt())
    }

    /// Per-cell source response weights d_k = (1 - exp(-mu_k dt)) / mu_k.
    ///
    /// Over a cell with constant modal source g, mode k advances by
    /// y_k <- y_k exp(-mu_k dt) + g_k d_k (exact variation of constants).
    pub fn source_weights(&self, dt: f64) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|mu| (-(-mu * dt).exp_m1()) / mu)
            .collect()
    }

    /// Advance one cell of length dt with constant masked source G u.
    pub fn step_with_source(&self, state: &Field, masked_source: &Field, dt: f64) -> Field {
        let weights = self.source_weights(dt);
        Field(
            state
                .0
                .iter()
                .zip(&self.eigenvalues)
                .zip(masked_source.0.iter().zip(&weights))
                .map(|((y, mu), (g, d))| y * (-mu * dt).exp() + g * d)
                .collect(),
        )
    }

    /// Forward solve of the controlled equation with piecewise-constant
    /// control: exact variation of constants per cell.
    pub fn solve_forward(
        &self,
        grid: &TimeGrid,
        y0: &Field,
        control: &ControlTrajectory,
    ) -> Result<StateTrajectory> {
        self.check_dim(y0)?;
        if control.grid != *grid {
            return Err(Error::InvalidArgument(
                "control grid does not match solve grid".into(),
            ));
        }
        let dt = grid.dt();
        let mut states = Vec::with_capacity(grid.n_steps + 1);
        states.push(y0.clone());
        let mut current = y0.clone();
        for value in &control.values {
            let masked = self.apply_mask(value)?;
            current = self.step_with_source(&current, &masked, dt);
            states.push(current.clone());
        }
        Ok(StateTrajectory { grid: *grid, states })
    }

    /// Backward heat flow p(t) = e^{(T - t) Laplacian} p(T), sampled at
    /// every grid node and stored forward-indexed.
    pub fn solve_adjoint(&self, grid: &TimeGrid, terminal: &Field) -> Result<StateTrajectory> {
        self.check_dim(terminal)?;
        let states = (0..=grid.n_steps)
            .map(|i| {
                let remaining = grid.t_end - grid.node(i);
                self.propagate(terminal, remaining.max(0.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StateTrajectory { grid: *grid, states })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn full_window_gram_is_identity() {
        let d = build_domain((0.0, 1.0), 3).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!(approx(d.gram[j * 3 + k], expect, 1e-14));
            }
        }
    }

    #[test]
    fn half_window_first_mode() {
        let d = build_domain((0.0, 0.5), 1).unwrap();
        assert!(approx(d.gram[0], 0.5, 1e-14));
    }

    #[test]
    fn symmetric_window_cross_term_vanishes() {
        let d = build_domain((0.25, 0.75), 2).unwrap();
        assert!(approx(d.gram[1], 0.0, 1e-14));
    }

    #[test]
    fn invalid_window_rejected() {
        assert!(build_domain((0.5, 0.5), 2).is_err());
        assert!(build_domain((-0.1, 0.5), 2).is_err());
        assert!(build_domain((0.2, 1.2), 2).is_err());
        assert!(build_domain((0.2, 0.8), 0).is_err());
    }

    #[test]
    fn propagate_identity_and_one_mode_decay() {
        let d = build_domain((0.0, 1.0), 1).unwrap();
        let f = Field(vec![1.0]);
        assert_eq!(d.propagate(&f, 0.0).unwrap(), f);
        let g = d.propagate(&f, 1.0).unwrap();
        assert!(approx(g.0[0], (-std::f64::consts::PI.powi(2)).exp(), 1e-15));
        assert!(d.propagate(&f, -1.0).is_err());
    }

    #[test]
    fn mask_examples() {
        let full = build_domain((0.0, 1.0), 2).unwrap();
        let f = Field(vec![0.3, -1.2]);
        assert_eq!(full.apply_mask(&f).unwrap(), f);
        let half = build_domain((0.0, 0.5), 1).unwrap();
        let two = Field(vec![2.0]);
        assert!(approx(half.apply_mask(&two).unwrap().0[0], 1.0, 1e-14));
        assert!(approx(half.masked_norm(&Field(vec![1.0])).unwrap(), 0.5f64.sqrt(), 1e-14));
        let zero = Field::zeros(1);
        assert_eq!(half.masked_norm(&zero).unwrap(), 0.0);
    }

    #[test]
    fn masked_norm_euclidean_on_full_window() {
        let d = build_domain((0.0, 1.0), 2).unwrap();
        assert!(approx(d.masked_norm(&Field(vec![3.0, 4.0])).unwrap(), 5.0, 1e-14));
    }

    #[test]
    fn forward_free_flow_matches_propagate() {
        let d = build_domain((0.2, 0.8), 3).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let y0 = Field(vec![1.0, -0.5, 0.25]);
        let control = ControlTrajectory::zero(grid, 0.0, 3);
        let traj = d.solve_forward(&grid, &y0, &control).unwrap();
        for i in 0..=10 {
            let free = d.propagate(&y0, grid.node(i)).unwrap();
            for k in 0..3 {
                assert!(approx(traj.states[i].0[k], free.0[k], 1e-14));
            }
        }
    }

    #[test]
    fn forward_one_mode_constant_source_closed_form() {
        let d = build_domain((0.0, 1.0), 1).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 7).unwrap();
        let y0 = Field(vec![1.0]);
        let c = 0.8;
        let mut control = ControlTrajectory::zero(grid, 0.0, 1);
        for v in &mut control.values {
            *v = Field(vec![c]);
        }
        let traj = d.solve_forward(&grid, &y0, &control).unwrap();
        let mu = std::f64::consts::PI.powi(2);
        let expect = (-mu).exp() + c * (1.0 - (-mu).exp()) / mu;
        assert!(approx(traj.terminal().0[0], expect, 1e-13));
    }

    #[test]
    fn adjoint_boundary_and_backward_flow() {
        let d = build_domain((0.2, 0.8), 1).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let terminal = Field(vec![1.0]);
        let traj = d.solve_adjoint(&grid, &terminal).unwrap();
        assert!(approx(traj.terminal().0[0], 1.0, 1e-15));
        assert!(approx(traj.states[0].0[0], (-std::f64::consts::PI.powi(2)).exp(), 1e-15));
        let zero = d.solve_adjoint(&grid, &Field::zeros(1)).unwrap();
        assert!(zero.states.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn grid_snapping_and_tail() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        assert_eq!(grid.nearest_node(0.0), 0);
        assert_eq!(grid.nearest_node(0.26), 3);
        assert_eq!(grid.nearest_node(2.0), 10);
        let tail = grid.tail(4).unwrap();
        assert!(approx(tail.t_start, 0.4, 1e-15));
        assert_eq!(tail.n_steps, 6);
        assert!(grid.tail(10).is_err());
    }
}
