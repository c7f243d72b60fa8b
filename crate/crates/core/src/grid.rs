//! Uniform radial mesh and nodal fields.
//!
//! Integrals over ℝ³ of radial functions are reduced to `4π ∫₀^{r_max} h(r) r² dr`
//! and evaluated with trapezoid weights on the integrand `h(r) r²`. The
//! radial integrand of a smooth radial function is even in `r`, so the
//! trapezoid rule needs no end correction at the origin; at `r_max` a
//! fourth-order Gregory correction is applied. All weights are non-negative
//! and the weight of the origin node is zero.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest accepted node count.
pub const MIN_NODES: usize = 16;

/// Production default for the outer radius.
pub const DEFAULT_R_MAX: f64 = 20.0;

/// Production default for the node count.
pub const DEFAULT_NODES: usize = 2048;

/// Gregory end weights (in units of the spacing) for the last three nodes,
/// listed from the boundary inwards.
const GREGORY_END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cell_volumes: Vec<f64>,
}

impl RadialGrid {
    /// Uniform mesh with `n` nodes on `[0, r_max]`.
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Sizing(format!("r_max must be positive, got {r_max}")));
        }
        if n < MIN_NODES {
            return Err(Error::Sizing(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let spacing = r_max / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * spacing).collect();
        nodes[n - 1] = r_max;

        let mut coef = vec![1.0; n];
        coef[0] = 0.5;
        for (k, &g) in GREGORY_END.iter().enumerate() {
            coef[n - 1 - k] = g;
        }
        let weights = nodes
            .iter()
            .zip(&coef)
            .map(|(&r, &c)| 4.0 * PI * r * r * c * spacing)
            .collect();
        let cell_volumes = nodes
            .windows(2)
            .map(|w| 4.0 * PI * (w[1].powi(3) - w[0].powi(3)) / 3.0)
            .collect();
        Ok(Self {
            r_max,
            spacing,
            nodes,
            weights,
            cell_volumes,
        })
    }

    /// Default production grid (`r_max = 20`, `n = 2048`).
    pub fn default_production() -> Self {
        Self::new(DEFAULT_R_MAX, DEFAULT_NODES).expect("default grid is valid")
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights for `4π ∫ h r² dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact volume of each spherical shell `[r_i, r_{i+1}]`; `len() - 1` entries.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    /// Volume of the ball of radius `r_max`.
    pub fn ball_volume(&self) -> f64 {
        4.0 * PI * self.r_max.powi(3) / 3.0
    }

    /// `Σ w_i h_i`, approximating `4π ∫₀^{r_max} h(r) r² dr`.
    pub fn integrate(&self, h: &[f64]) -> Result<f64> {
        self.check_len(h.len())?;
        Ok(self.integrate_unchecked(h))
    }

    /// Integrate a closure sampled at the nodes.
    pub fn integrate_fn(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * h(r))
            .sum()
    }

    pub(crate) fn integrate_unchecked(&self, h: &[f64]) -> f64 {
        self.weights.iter().zip(h).map(|(w, v)| w * v).sum()
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    /// Index of the last node with `r_i <= r`, clamped to the grid.
    pub fn locate(&self, r: f64) -> usize {
        if r <= 0.0 {
            return 0;
        }
        let i = (r / self.spacing).floor() as usize;
        i.min(self.len() - 1)
    }
}

/// `integrate_radial` in operation form.
pub fn integrate_radial(h: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.integrate(h)
}

/// Real nodal samples `u_i = u(r_i)` representing the spinor `(u, 0)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite field value at node {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), values)
    }

    /// `4π ∫ u² r² dr`.
    pub fn l2_mass(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u * u)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |u| <= 1`, the pointwise bound satisfied by every element of the
    /// finite-energy space.
    pub fn is_admissible(&self) -> bool {
        self.max_abs() <= 1.0
    }

    /// Rescale to mass `nu`; the direction of the field is unchanged.
    pub fn normalize(&self, nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target mass must be positive, got {nu}"
            )));
        }
        let mass = self.l2_mass();
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::ZeroMass);
        }
        let s = (nu / mass).sqrt();
        Ok(Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * s).collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Cubic (four-point Lagrange) interpolation at radius `r`; zero beyond
    /// `r_max`. Near the origin the field is continued evenly, `u(-r) = u(r)`.
    pub fn interpolate(&self, r: f64) -> f64 {
        let g = &*self.grid;
        let r = r.abs();
        if r > g.r_max() {
            return 0.0;
        }
        let n = g.len();
        let h = g.spacing();
        let i = g.locate(r).min(n - 2);
        let t = (r - g.nodes()[i]) / h;
        // stencil i-1, i, i+1, i+2 with even reflection at the origin and
        // zero continuation past r_max
        let at = |k: isize| -> f64 {
            if k < 0 {
                self.values[(-k) as usize]
            } else if (k as usize) < n {
                self.values[k as usize]
            } else {
                0.0
            }
        };
        let k = i as isize;
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3
    }

    /// Resample onto another grid by cubic interpolation.
    pub fn resample(&self, target: Arc<RadialGrid>) -> Self {
        let values = target.nodes().iter().map(|&r| self.interpolate(r)).collect();
        Self { grid: target, values }
    }
}

/// Operation form of [`RadialField::l2_mass`].
pub fn l2_mass(u: &RadialField) -> f64 {
    u.l2_mass()
}

/// Operation form of [`RadialField::normalize`].
pub fn normalize(u: &RadialField, nu: f64) -> Result<RadialField> {
    u.normalize(nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(1.0, n).unwrap())
    }

    #[test]
    fn constructor_contract() {
        let g = RadialGrid::new(2.0, 16).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes()[15], 2.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|&w| w >= 0.0));
        assert_eq!(g.weights()[0], 0.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(RadialGrid::new(1.0, 15), Err(Error::Sizing(_))));
        assert!(matches!(RadialGrid::new(0.0, 64), Err(Error::Sizing(_))));
        assert!(matches!(RadialGrid::new(-1.0, 64), Err(Error::Sizing(_))));
        assert!(matches!(RadialGrid::new(f64::NAN, 64), Err(Error::Sizing(_))));
    }

    #[test]
    fn weights_sum_to_ball_volume() {
        for &(r, n) in &[(1.0, 16), (1.0, 256), (20.0, 2048), (3.7, 1001)] {
            let g = RadialGrid::new(r, n).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s / g.ball_volume() - 1.0).abs() < 1e-12, "r={r} n={n}");
            let c: f64 = g.cell_volumes().iter().sum();
            assert!((c / g.ball_volume() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_ball_and_monomials() {
        let g = unit(256);
        let one = g.integrate(&vec![1.0; 256]).unwrap();
        assert!((one - 4.0 * PI / 3.0).abs() < 1e-10);
        for k in 0..=2 {
            let q = g.integrate_fn(|r| r.powi(k));
            let exact = 4.0 * PI / (k as f64 + 3.0);
            assert!((q - exact).abs() < 1e-6, "k={k}: {q} vs {exact}");
        }
        assert_eq!(g.integrate(&vec![0.0; 256]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let g = unit(32);
        assert!(matches!(
            g.integrate(&[1.0; 31]),
            Err(Error::LengthMismatch {
                expected: 32,
                got: 31
            })
        ));
    }

    #[test]
    fn second_order_refinement() {
        // smooth, non-polynomial even integrand
        let exact = {
            // 4π ∫₀¹ e^{-r²} r² dr = 4π (√π/4 erf(1) - e^{-1}/2)
            let erf1 = 0.842_700_792_949_714_9_f64;
            4.0 * PI * (PI.sqrt() / 4.0 * erf1 - (-1.0f64).exp() / 2.0)
        };
        let err = |n: usize| (unit(n).integrate_fn(|r| (-r * r).exp()) - exact).abs();
        let (e1, e2) = (err(33), err(65));
        assert!(e1 / e2 >= 4.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn mass_and_normalize() {
        let g = unit(128);
        let u = RadialField::from_fn(Arc::clone(&g), |r| 1.0 - r * r).unwrap();
        let m = u.l2_mass();
        assert!((u.scaled(2.0).l2_mass() / m - 4.0).abs() < 1e-14);
        let v = u.scaled(2.0 / m.sqrt()); // mass 4
        let w = v.normalize(1.0).unwrap();
        for (a, b) in v.values().iter().zip(w.values()) {
            assert!((a / 2.0 - b).abs() < 1e-14);
        }
        assert!(matches!(
            RadialField::zeros(g).normalize(1.0),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = unit(16);
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(RadialField::new(g, v).is_err());
    }

    #[test]
    fn interpolation_is_fourth_order_and_exact_on_nodes() {
        // even in r, so the reflected stencil at the origin stays smooth
        let f = |r: f64| (-(r * r)).exp() * (1.0 + r * r);
        let err = |n: usize| {
            let u = RadialField::from_fn(unit(n), f).unwrap();
            (0..200)
                .map(|k| {
                    let r = 0.003 + k as f64 * 0.0045;
                    (u.interpolate(r) - f(r)).abs()
                })
                .fold(0.0, f64::max)
        };
        let u = RadialField::from_fn(unit(64), f).unwrap();
        for (i, &r) in u.grid().nodes().iter().enumerate() {
            assert!((u.interpolate(r) - u.values()[i]).abs() < 1e-14);
        }
        assert!(err(64) / err(128) > 10.0);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(
            amp in 0.01f64..3.0,
            width in 0.05f64..0.9,
            nu in 0.01f64..1.0,
        ) {
            let u = RadialField::from_fn(unit(64), |r| amp * (-(r / width).powi(2)).exp()).unwrap();
            let once = u.normalize(nu).unwrap();
            let twice = once.normalize(nu).unwrap();
            prop_assert!((once.l2_mass() / nu - 1.0).abs() < 1e-12);
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
            }
        }
    }
}
