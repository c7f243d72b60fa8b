//! The energy functionals on radial real fields.
//!
//! The kinetic part is a sum over shells `[r_j, r_{j+1}]` of
//! `V_j · d_j² / (1 - ū_j²)` with `d_j = (u_{j+1} - u_j)/h`, `ū_j` the shell
//! mean and `V_j` the exact shell volume. The innermost shell `[0, r_1]` is
//! left out: node 0 carries zero quadrature weight and is treated as slaved
//! to node 1 (`u'(0) = 0`), so neither functional depends on `u_0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};

/// Default floor for the positive-part denominator of `E`.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Largest accepted floor.
pub const MAX_FLOOR: f64 = 1e-6;

/// Default half-width of the band `|1 - ū²| < exclusion` omitted by `F`.
pub const DEFAULT_EXCLUSION: f64 = 1e-8;

/// Largest accepted exclusion band.
pub const MAX_EXCLUSION: f64 = 1e-3;

/// Nonlinear coupling `a` and, where needed, the multiplier `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl Coupling {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling a must be positive, got {a}"
            )));
        }
        Ok(Self { a, b: None })
    }

    pub fn with_multiplier(a: f64, b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "multiplier b must be finite, got {b}"
            )));
        }
        Ok(Self {
            b: Some(b),
            ..Self::new(a)?
        })
    }

    /// `b > 0` and `a - 2b > 0`: the regime where a decaying solution of the
    /// shooting system is known to exist.
    pub fn existence_regime(&self) -> bool {
        matches!(self.b, Some(b) if b > 0.0 && self.a - 2.0 * b > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub quartic: f64,
    pub total: f64,
    pub a: f64,
    pub mass: f64,
    /// Some shell with a nonzero gradient hit the denominator floor, i.e. the
    /// continuum kinetic energy is `+∞` there.
    #[serde(default)]
    pub saturated: bool,
}

fn clamp_floor(floor: f64) -> f64 {
    if floor.is_nan() {
        return DEFAULT_FLOOR;
    }
    floor.clamp(f64::MIN_POSITIVE, MAX_FLOOR)
}

/// Per-shell slope and mean.
#[inline]
fn shell(u: &[f64], j: usize, inv_h: f64) -> (f64, f64) {
    ((u[j + 1] - u[j]) * inv_h, 0.5 * (u[j] + u[j + 1]))
}

fn kinetic_parts(u: &RadialField, floor: f64) -> (f64, bool) {
    let g = u.grid();
    let v = u.values();
    let inv_h = 1.0 / g.spacing();
    let floor = clamp_floor(floor);
    let mut sum = 0.0;
    let mut saturated = false;
    for (j, &vol) in g.cell_volumes().iter().enumerate().skip(1) {
        let (d, m) = shell(v, j, inv_h);
        if d == 0.0 {
            continue;
        }
        let den = 1.0 - m * m;
        if den < floor {
            saturated = true;
        }
        sum += vol * d * d / den.max(floor);
    }
    (sum, saturated)
}

/// `4π ∫ u'² / max((1 - u²)₊, floor) r² dr`.
pub fn kinetic_term(u: &RadialField, floor: f64) -> f64 {
    kinetic_parts(u, floor).0
}

/// Plain Dirichlet energy `4π ∫ u'² r² dr` on the same shells.
pub fn dirichlet_term(u: &RadialField) -> f64 {
    let g = u.grid();
    let inv_h = 1.0 / g.spacing();
    g.cell_volumes()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &vol)| {
            let (d, _) = shell(u.values(), j, inv_h);
            vol * d * d
        })
        .sum()
}

/// `4π ∫ u⁴ r² dr` (without the `a/2` factor).
pub fn quartic_term(u: &RadialField) -> f64 {
    u.grid()
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, x)| w * x.powi(4))
        .sum()
}

/// `E(u) = kinetic - (a/2) quartic`.
pub fn energy(u: &RadialField, c: &Coupling, floor: f64) -> EnergyBreakdown {
    let (kinetic, saturated) = kinetic_parts(u, floor);
    let quartic = quartic_term(u);
    let total = kinetic - 0.5 * c.a * quartic;
    let mass = u.l2_mass();
    debug_assert!(
        !u.is_admissible() || total >= -0.5 * c.a * mass - 1e-9 * (1.0 + mass),
        "lower bound E >= -a nu / 2 violated: {total} < {}",
        -0.5 * c.a * mass
    );
    EnergyBreakdown {
        kinetic,
        quartic,
        total,
        a: c.a,
        mass,
        saturated,
    }
}

/// `F(u)` with the signed denominator `1 - u²`. Shells with
/// `|1 - ū²| < exclusion` are left out of the kinetic sum.
pub fn energy_signed(u: &RadialField, c: &Coupling, exclusion: f64) -> f64 {
    let exclusion = if exclusion.is_nan() {
        DEFAULT_EXCLUSION
    } else {
        exclusion.clamp(f64::MIN_POSITIVE, MAX_EXCLUSION)
    };
    let g = u.grid();
    let v = u.values();
    let inv_h = 1.0 / g.spacing();
    let mut kinetic = 0.0;
    for (j, &vol) in g.cell_volumes().iter().enumerate().skip(1) {
        let (d, m) = shell(v, j, inv_h);
        let den = 1.0 - m * m;
        if d == 0.0 || den.abs() < exclusion {
            continue;
        }
        kinetic += vol * d * d / den;
    }
    kinetic - 0.5 * c.a * quartic_term(u)
}

/// Partial derivatives `∂E/∂u_i` of the discrete energy.
pub(crate) fn energy_derivative(u: &RadialField, c: &Coupling, floor: f64) -> Vec<f64> {
    let g = u.grid();
    let v = u.values();
    let n = v.len();
    let inv_h = 1.0 / g.spacing();
    let floor = clamp_floor(floor);
    let mut out = vec![0.0; n];
    for (j, &vol) in g.cell_volumes().iter().enumerate().skip(1) {
        let (d, m) = shell(v, j, inv_h);
        let den = 1.0 - m * m;
        let (inv_den, curv) = if den < floor {
            (1.0 / floor, 0.0)
        } else {
            (1.0 / den, d * d * m / (den * den))
        };
        let flux = 2.0 * d * inv_h * inv_den;
        out[j] += vol * (-flux + curv);
        out[j + 1] += vol * (flux + curv);
    }
    let w = g.weights();
    for i in 0..n {
        out[i] -= 2.0 * c.a * w[i] * v[i].powi(3);
    }
    out
}

/// Second derivatives `∂²E/∂u_i∂u_j` of the discrete energy: the matrix is
/// tridiagonal, returned as `(diag, off)` with `off[j]` coupling `j, j+1`.
pub(crate) fn energy_hessian(u: &RadialField, c: &Coupling, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let g = u.grid();
    let v = u.values();
    let n = v.len();
    let inv_h = 1.0 / g.spacing();
    let floor = clamp_floor(floor);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for (j, &vol) in g.cell_volumes().iter().enumerate().skip(1) {
        let (d, m) = shell(v, j, inv_h);
        let den = 1.0 - m * m;
        // cell term d²/D as a function of (d, m)
        let (f_dd, f_dm, f_mm) = if den < floor {
            (2.0 / floor, 0.0, 0.0)
        } else {
            let id = 1.0 / den;
            (
                2.0 * id,
                4.0 * d * m * id * id,
                d * d * (2.0 * id * id + 8.0 * m * m * id * id * id),
            )
        };
        let h2 = inv_h * inv_h;
        diag[j] += vol * (f_dd * h2 - f_dm * inv_h + 0.25 * f_mm);
        diag[j + 1] += vol * (f_dd * h2 + f_dm * inv_h + 0.25 * f_mm);
        off[j] += vol * (-f_dd * h2 + 0.25 * f_mm);
    }
    let w = g.weights();
    for i in 0..n {
        diag[i] -= 6.0 * c.a * w[i] * v[i] * v[i];
    }
    (diag, off)
}

/// Convert `∂E/∂u_i` into the L² gradient `∂E/∂u_i / w_i`; node 0 (zero
/// weight) copies node 1.
pub(crate) fn to_l2(grid: &RadialGrid, mut raw: Vec<f64>) -> Vec<f64> {
    let w = grid.weights();
    for i in 1..raw.len() {
        raw[i] /= w[i];
    }
    raw[0] = raw[1];
    raw
}

/// L² gradient of the discrete energy with respect to the quadrature inner
/// product: `Σ w_i G_i δ_i` is the exact directional derivative of [`energy`]
/// along `δ`.
///
/// As the mesh is refined, `G/2` tends to
/// `-(1/r²)(r² u'/(1-u²))' + u u'²/(1-u²)² - a u³`.
pub fn gradient(u: &RadialField, c: &Coupling, floor: f64) -> RadialField {
    let raw = energy_derivative(u, c, floor);
    let values = to_l2(u.grid(), raw);
    RadialField::new(Arc::clone(u.grid()), values).expect("gradient of a finite field is finite")
}

/// Quadrature inner product `Σ w_i f_i g_i`.
pub fn inner(f: &RadialField, g: &RadialField) -> f64 {
    f.grid()
        .weights()
        .iter()
        .zip(f.values().iter().zip(g.values()))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

/// Max-norm of the Euler–Lagrange residual `G/2 + b u` over nodes with
/// positive weight.
pub fn el_residual(u: &RadialField, c: &Coupling, b: f64, floor: f64) -> f64 {
    let g = gradient(u, c, floor);
    g.values()
        .iter()
        .zip(u.values())
        .skip(1)
        .map(|(gi, ui)| (0.5 * gi + b * ui).abs())
        .fold(0.0, f64::max)
}

/// Result of resampling a dilated field.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub field: RadialField,
    /// The dilated support extends past the target grid.
    pub truncated: bool,
}

/// `u_γ(r) = γ^{-3/2} u(r/γ)` on the grid `[0, γ r_max]` with the same node
/// count, so every node of the target maps onto a node of the source.
pub fn dilate(u: &RadialField, gamma: f64) -> Result<RadialField> {
    check_gamma(gamma)?;
    let src = u.grid();
    let grid = Arc::new(RadialGrid::new(gamma * src.r_max(), src.len())?);
    let s = gamma.powf(-1.5);
    RadialField::new(grid, u.values().iter().map(|v| v * s).collect())
}

/// `u_γ` sampled on an arbitrary target grid by cubic interpolation.
pub fn dilate_onto(u: &RadialField, gamma: f64, target: Arc<RadialGrid>) -> Result<Dilation> {
    check_gamma(gamma)?;
    let support = u
        .values()
        .iter()
        .rposition(|v| *v != 0.0)
        .map(|i| u.grid().nodes()[i])
        .unwrap_or(0.0);
    let truncated = gamma * support > target.r_max() * (1.0 + 1e-12);
    let s = gamma.powf(-1.5);
    let values = target
        .nodes()
        .iter()
        .map(|&r| s * u.interpolate(r / gamma))
        .collect();
    Ok(Dilation {
        field: RadialField::new(target, values)?,
        truncated,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation factor must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// `γ^{-2} ∫ u'² / (1 - γ^{-3} u²)₊ - γ^{-3} (a/2) ∫ u⁴`, the energy of `u_γ`
/// written in terms of `u` itself.
pub fn dilated_energy_formula(u: &RadialField, c: &Coupling, gamma: f64, floor: f64) -> f64 {
    let g = u.grid();
    let v = u.values();
    let inv_h = 1.0 / g.spacing();
    let floor = clamp_floor(floor);
    let g3 = gamma.powi(3);
    let kin: f64 = g
        .cell_volumes()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &vol)| {
            let (d, m) = shell(v, j, inv_h);
            if d == 0.0 {
                0.0
            } else {
                vol * d * d / (1.0 - m * m / g3).max(floor)
            }
        })
        .sum();
    kin / (gamma * gamma) - 0.5 * c.a * quartic_term(u) / g3
}
