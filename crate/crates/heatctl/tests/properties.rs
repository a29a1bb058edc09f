//! Randomized structural properties of the spectral discretization.

use heatctl::bvp::masked_cell_adjoints;
use heatctl::{build_domain, ControlTrajectory, Field, TimeGrid};
use proptest::prelude::*;

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn window() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..0.45, 0.55f64..0.95)
}

proptest! {
    /// The heat semigroup composes: e^{t Lap} e^{s Lap} = e^{(s + t) Lap}.
    #[test]
    fn semigroup_composes(c in coeffs(8), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let domain = build_domain((0.2, 0.8), 8).unwrap();
        let f = Field(c);
        let two_step = domain.propagate(&domain.propagate(&f, s).unwrap(), t).unwrap();
        let one_step = domain.propagate(&f, s + t).unwrap();
        let err = two_step.sub(&one_step).norm();
        prop_assert!(err <= 1e-14 * (1.0 + f.norm()), "composition error {err}");
    }

    /// The semigroup is a contraction in L^2.
    #[test]
    fn semigroup_contracts(c in coeffs(8), t in 0.0f64..2.0) {
        let domain = build_domain((0.2, 0.8), 8).unwrap();
        let f = Field(c);
        prop_assert!(domain.propagate(&f, t).unwrap().norm() <= f.norm() * (1.0 + 1e-15));
    }

    /// The restriction norm is the quadratic form of the Gram matrix:
    /// ||f||_{L^2(omega)}^2 = <f, G f>.
    #[test]
    fn mask_quadratic_form(c in coeffs(10), omega in window()) {
        let domain = build_domain(omega, 10).unwrap();
        let f = Field(c);
        let q = f.dot(&domain.apply_mask(&f).unwrap());
        let n = domain.masked_norm(&f).unwrap();
        prop_assert!((n * n - q.max(0.0)).abs() <= 1e-12 * (1.0 + q.abs()));
    }

    /// Closed-form Gram entries match fine composite-Simpson quadrature of
    /// int_omega 2 sin(j pi x) sin(k pi x) dx.
    #[test]
    fn gram_matches_quadrature(omega in window(), j in 1usize..6, k in 1usize..6) {
        let domain = build_domain(omega, 6).unwrap();
        let (a, b) = omega;
        let m = 2000;
        let h = (b - a) / m as f64;
        let g = |x: f64| 2.0 * (j as f64 * std::f64::consts::PI * x).sin()
            * (k as f64 * std::f64::consts::PI * x).sin();
        let mut quad = g(a) + g(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            quad += w * g(a + i as f64 * h);
        }
        quad *= h / 3.0;
        let entry = {
            let mut ej = Field::zeros(6);
            ej.0[j - 1] = 1.0;
            domain.apply_mask(&ej).unwrap().0[k - 1]
        };
        prop_assert!((entry - quad).abs() <= 1e-10, "entry {entry} vs quad {quad}");
    }

    /// Discrete duality: for any control u (from zero initial state) and any
    /// terminal functional q,
    ///   <y(T; u, 0), q> = sum_i dt <u_i, w_i>
    /// where w are the masked per-cell adjoints of q. Exact by construction.
    #[test]
    fn forward_adjoint_duality(
        q in coeffs(6),
        u_flat in prop::collection::vec(-1.0f64..1.0, 6 * 20),
    ) {
        let domain = build_domain((0.25, 0.75), 6).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let mut control = ControlTrajectory::zero(grid, 0.0, 6);
        for (i, v) in control.values.iter_mut().enumerate() {
            v.0.copy_from_slice(&u_flat[i * 6..(i + 1) * 6]);
        }
        let q = Field(q);
        let y_t = domain
            .solve_forward(&grid, &Field::zeros(6), &control)
            .unwrap()
            .terminal()
            .clone();
        let w = masked_cell_adjoints(&domain, &grid, 0.0, &q).unwrap();
        let rhs: f64 = control
            .values
            .iter()
            .zip(&w)
            .map(|(u, w)| grid.dt() * u.dot(w))
            .sum();
        let lhs = y_t.dot(&q);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }
}
