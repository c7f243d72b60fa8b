//! Fixed-mass minimization of the energy by normalized gradient flow.
//!
//! Each iteration takes the Sobolev gradient `p = A⁻¹ ∂E` with the
//! tridiagonal metric `A = K + σ W` (`K` the kinetic second variation at the
//! current field), removes its component along the constraint normal, steps, and
//! renormalizes to mass `ν`. A step is accepted only if the renormalized
//! iterate stays strictly inside `|u| < 1` and satisfies an Armijo decrease;
//! otherwise the step is halved.
//!
//! Close to a critical point the flow only converges linearly, so once the
//! residual is small a bordered Newton step on `(u, b)` is tried first; it
//! is kept when it lowers the residual without raising the energy.
//!
//! Energies returned here are upper bounds on `I_ν`: only radial real
//! fields are searched.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::energy::{self, Coupling, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};

/// Iterates must satisfy `max |u| < 1 - ADMISSIBLE_MARGIN`.
pub const ADMISSIBLE_MARGIN: f64 = 1e-9;

const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 2.0;
const MIN_STEP: f64 = 1e-14;
const VANISHING_CHECK_EVERY: usize = 50;
/// Residual below which Newton steps are attempted.
const NEWTON_START: f64 = 1e-2;
/// Energy slack for Newton steps, relative to `max(1, |E|)`; absorbs roundoff.
const NEWTON_ENERGY_SLACK: f64 = 1e-13;

/// Initial profile family. Every profile is rescaled to the requested mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitProfile {
    /// `cos(r/R)` on `r ≤ πR/2`, zero outside.
    Cosbump { radius: f64 },
    /// `exp(-r²/(2σ²))`.
    Gaussian { sigma: f64 },
    /// One on `r ≤ R`, a cosine shoulder of width `w`, zero beyond `R + w`.
    /// `w = 0` is rejected.
    FlatTop { radius: f64, width: f64 },
}

impl Default for InitProfile {
    fn default() -> Self {
        InitProfile::Cosbump {
            radius: analysis::upper_test_constants().radius,
        }
    }
}

impl InitProfile {
    /// Parse `cosbump`, `gaussian` or `flattop` with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cosbump" => Ok(Self::default()),
            "gaussian" => Ok(InitProfile::Gaussian { sigma: 1.0 }),
            "flattop" | "flat-top" => Ok(InitProfile::FlatTop {
                radius: 0.4,
                width: 0.4,
            }),
            other => Err(Error::InvalidParameter(format!("unknown profile kind '{other}'"))),
        }
    }

    fn shape(&self) -> Result<Box<dyn Fn(f64) -> f64>> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            InitProfile::Cosbump { radius } if pos(radius) => Ok(Box::new(move |r| {
                if r <= radius * std::f64::consts::FRAC_PI_2 {
                    (r / radius).cos()
                } else {
                    0.0
                }
            })),
            InitProfile::Gaussian { sigma } if pos(sigma) => {
                Ok(Box::new(move |r| (-(r * r) / (2.0 * sigma * sigma)).exp()))
            }
            InitProfile::FlatTop { radius, width } if radius >= 0.0 && pos(width) => Ok(Box::new(move |r| {
                if r <= radius {
                    1.0
                } else if r < radius + width {
                    (std::f64::consts::FRAC_PI_2 * (r - radius) / width).cos()
                } else {
                    0.0
                }
            })),
            other => Err(Error::InvalidParameter(format!(
                "bad profile parameters {other:?}"
            ))),
        }
    }

    /// Sample, rescale to mass `nu` and slave the origin node to its
    /// neighbour.
    pub fn build(&self, grid: &Arc<RadialGrid>, nu: f64) -> Result<RadialField> {
        check_mass(nu)?;
        let shape = self.shape()?;
        let raw = RadialField::from_fn(Arc::clone(grid), shape)?;
        let mut u = raw.normalize(nu)?;
        let v = u.values_mut();
        v[0] = v[1];
        if u.max_abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "{self:?} at mass {nu} exceeds the admissible amplitude (max |u| = {})",
                u.max_abs()
            )));
        }
        Ok(u)
    }
}

/// Operation form of [`InitProfile::build`].
pub fn init_profile(kind: &InitProfile, grid: &Arc<RadialGrid>, nu: f64) -> Result<RadialField> {
    kind.build(grid, nu)
}

fn check_mass(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mass must lie in (0, 1], got {nu}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Initial step in units of the preconditioned gradient.
    pub step0: f64,
    /// Max-norm tolerance on the Euler–Lagrange residual `G/2 + b u`.
    pub tol_residual: f64,
    /// Energy resolution used by vanishing detection and sign decisions.
    pub tol_energy: f64,
    pub floor: f64,
    pub nu: f64,
    pub init: InitProfile,
    pub seed: u64,
    /// Number of starts; starts after the first use seeded random profiles.
    pub starts: usize,
    pub record_history: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step0: 1.0,
            tol_residual: 1e-7,
            tol_energy: 1e-4,
            floor: energy::DEFAULT_FLOOR,
            nu: 1.0,
            init: InitProfile::default(),
            seed: 0,
            starts: 1,
            record_history: true,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        check_mass(self.nu)?;
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !(pos(self.step0) && pos(self.tol_residual) && pos(self.tol_energy) && pos(self.floor)) {
            return Err(Error::InvalidParameter(
                "step0 and all tolerances must be positive".into(),
            ));
        }
        if self.floor > energy::MAX_FLOOR {
            return Err(Error::InvalidParameter(format!(
                "floor must not exceed {}",
                energy::MAX_FLOOR
            )));
        }
        if self.max_iters == 0 || self.starts == 0 {
            return Err(Error::InvalidParameter(
                "max_iters and starts must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIterations,
    /// Every trial step was rejected down to the minimum step.
    Stalled,
    /// The flow spread out with energy stuck near zero.
    Vanishing,
}

/// Concentration-compactness reading of the final field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// At least half the mass sits inside `r_max / 2`.
    Compact,
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: RadialField,
    pub energy: EnergyBreakdown,
    pub multiplier_b: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub status: Status,
    pub regime: Regime,
    /// Estimate of `I_ν`: `min(E, 0)` for a compact field, `0` when vanishing.
    pub i_estimate: f64,
    pub history: Vec<HistoryEntry>,
}

impl MinimizeResult {
    /// The run certifies `I_ν < -tol`.
    pub fn is_negative(&self, tol: f64) -> bool {
        self.i_estimate < -tol
    }
}

/// Mass inside radius `radius`.
pub(crate) fn mass_inside(u: &RadialField, radius: f64) -> f64 {
    u.grid()
        .nodes()
        .iter()
        .zip(u.grid().weights())
        .zip(u.values())
        .take_while(|((r, _), _)| **r <= radius)
        .map(|((_, w), x)| w * x * x)
        .sum()
}

/// `b = -⟨G, u⟩ / (2 ‖u‖²)` with `G` the L² gradient of the energy; at a
/// constrained critical point `G/2 + b u = 0`.
pub fn extract_multiplier(u: &RadialField, c: &Coupling) -> Result<f64> {
    extract_multiplier_with_floor(u, c, energy::DEFAULT_FLOOR)
}

pub fn extract_multiplier_with_floor(u: &RadialField, c: &Coupling, floor: f64) -> Result<f64> {
    let mass = u.l2_mass();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let raw = energy::energy_derivative(u, c, floor);
    let pairing: f64 = raw.iter().zip(u.values()).map(|(d, x)| d * x).sum();
    Ok(-pairing / (2.0 * mass))
}

/// Solve a symmetric tridiagonal system in place (Thomas algorithm).
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = if m > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i < m - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Tridiagonal metric on nodes `1..n`: `A = Σ_j 2V_j/(h² D_j) (e_{j+1} - e_j)⊗² + σ W`.
fn metric(u: &RadialField, floor: f64, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let g = u.grid();
    let v = u.values();
    let n = v.len();
    let h2 = g.spacing() * g.spacing();
    let w = g.weights();
    let mut diag: Vec<f64> = (1..n).map(|i| sigma * w[i]).collect();
    // off[k] couples unknowns k and k+1, i.e. nodes k+1 and k+2
    let mut off = vec![0.0; n - 2];
    for (j, &vol) in g.cell_volumes().iter().enumerate().skip(1) {
        let m = 0.5 * (v[j] + v[j + 1]);
        let den = (1.0 - m * m).max(floor);
        let kappa = 2.0 * vol / (h2 * den);
        diag[j - 1] += kappa;
        diag[j] += kappa;
        off[j - 1] = -kappa;
    }
    (diag, off)
}

struct Trial {
    field: RadialField,
    energy: EnergyBreakdown,
}

fn trial_point(u: &RadialField, dir: &[f64], tau: f64, nu: f64, c: &Coupling, floor: f64) -> Option<Trial> {
    let mut v = u.values().to_vec();
    for (x, p) in v[1..].iter_mut().zip(dir) {
        *x -= tau * p;
    }
    v[0] = v[1];
    let field = u.with_values(v).ok()?.normalize(nu).ok()?;
    if field.max_abs() >= 1.0 - ADMISSIBLE_MARGIN {
        return None;
    }
    let energy = energy::energy(&field, c, floor);
    Some(Trial { field, energy })
}

/// Newton step for `∂E + 2b W u = 0`, `uᵀ W u = ν` over nodes `1..n`.
fn newton_point(u: &RadialField, raw: &[f64], b: f64, nu: f64, c: &Coupling, floor: f64) -> Option<Trial> {
    let v = u.values();
    let w = u.grid().weights();
    let (hd, ho) = energy::energy_hessian(u, c, floor);
    let n = v.len();
    let diag: Vec<f64> = (1..n).map(|i| hd[i] + 2.0 * b * w[i]).collect();
    let res: Vec<f64> = (1..n).map(|i| raw[i] + 2.0 * b * w[i] * v[i]).collect();
    let normal: Vec<f64> = (1..n).map(|i| 2.0 * w[i] * v[i]).collect();
    let z1 = solve_tridiagonal(&diag, &ho[1..], &res);
    let z2 = solve_tridiagonal(&diag, &ho[1..], &normal);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let gap = u.l2_mass() - nu;
    let db = (gap - dot(&normal, &z1)) / dot(&normal, &z2);
    if !db.is_finite() {
        return None;
    }
    let mut next = v.to_vec();
    for i in 1..n {
        next[i] -= z1[i - 1] + db * z2[i - 1];
    }
    next[0] = next[1];
    if !next.iter().all(|x| x.is_finite()) {
        return None;
    }
    let field = u.with_values(next).ok()?.normalize(nu).ok()?;
    if field.max_abs() >= 1.0 - ADMISSIBLE_MARGIN {
        return None;
    }
    let energy = energy::energy(&field, c, floor);
    Some(Trial { field, energy })
}

fn residual_and_multiplier(u: &RadialField, raw: &[f64], nu: f64) -> (f64, f64) {
    let b = -raw.iter().zip(u.values()).map(|(d, x)| d * x).sum::<f64>() / (2.0 * nu);
    let w = u.grid().weights();
    let res = (1..raw.len())
        .map(|i| (0.5 * raw[i] / w[i] + b * u.values()[i]).abs())
        .fold(0.0, f64::max);
    (res, b)
}

/// `minimize_mass` with the starting field taken from `opts.init`.
pub fn minimize(c: &Coupling, grid: &Arc<RadialGrid>, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    opts.validate()?;
    let mut best: Option<MinimizeResult> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for start in 0..opts.starts {
        let init = if start == 0 {
            opts.init
        } else {
            random_profile(&mut rng, grid, opts.nu)
        };
        let u0 = match init.build(grid, opts.nu) {
            Ok(u) => u,
            Err(_) if start > 0 => continue,
            Err(e) => return Err(e),
        };
        let run = minimize_from(c, &u0, opts)?;
        best = Some(match best {
            Some(b) if !better(&run, &b) => b,
            _ => run,
        });
    }
    Ok(best.expect("first start always runs"))
}

/// Operation form with an explicit mass; `opts.nu` is overridden.
pub fn minimize_mass(
    c: &Coupling,
    nu: f64,
    grid: &Arc<RadialGrid>,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    check_mass(nu)?;
    let opts = MinimizeOptions { nu, ..opts.clone() };
    minimize(c, grid, &opts)
}

fn better(x: &MinimizeResult, y: &MinimizeResult) -> bool {
    (x.i_estimate, x.energy.total) < (y.i_estimate, y.energy.total)
}

/// Random profile for a multi-start: family and width drawn from `rng`,
/// retried until it fits under the amplitude bound at mass `nu`.
fn random_profile(rng: &mut ChaCha8Rng, grid: &Arc<RadialGrid>, nu: f64) -> InitProfile {
    let base = analysis::upper_test_constants().radius * nu.cbrt();
    for _ in 0..64 {
        let p = match rng.gen_range(0..3) {
            0 => InitProfile::Cosbump {
                radius: base * rng.gen_range(1.0..2.5),
            },
            1 => InitProfile::Gaussian {
                sigma: base * rng.gen_range(0.5..2.0),
            },
            _ => InitProfile::FlatTop {
                radius: base * rng.gen_range(0.2..0.8),
                width: base * rng.gen_range(0.4..1.5),
            },
        };
        if p.build(grid, nu).is_ok() {
            return p;
        }
    }
    InitProfile::Gaussian { sigma: base * 2.0 }
}

/// Run the flow from a given field (rescaled to `opts.nu`).
pub fn minimize_from(c: &Coupling, init: &RadialField, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    opts.validate()?;
    let nu = opts.nu;
    let floor = opts.floor;
    let mut u = init.normalize(nu)?;
    {
        let v = u.values_mut();
        v[0] = v[1];
    }
    if u.max_abs() >= 1.0 - ADMISSIBLE_MARGIN {
        return Err(Error::InvalidParameter(format!(
            "initial field is not strictly admissible (max |u| = {})",
            u.max_abs()
        )));
    }
    let grid = Arc::clone(u.grid());
    let w = grid.weights().to_vec();
    let half = 0.5 * grid.r_max();
    let vanish_band = opts.tol_energy.max(c.a * nu * nu / grid.ball_volume());

    let mut e = energy::energy(&u, c, floor);
    let mut tau = opts.step0.min(MAX_STEP);
    let mut history = Vec::new();
    let mut status = Status::MaxIterations;
    let mut residual = f64::INFINITY;
    let mut b = 0.0;
    let mut iterations = 0;
    let mut e_checkpoint = e.total;

    for iter in 0..=opts.max_iters {
        iterations = iter;
        let raw = energy::energy_derivative(&u, c, floor);
        let (res, mult) = residual_and_multiplier(&u, &raw, nu);
        residual = res;
        b = mult;
        if opts.record_history {
            history.push(HistoryEntry {
                iter,
                energy: e.total,
                residual,
                step: tau,
            });
        }
        if residual <= opts.tol_residual {
            status = Status::Converged;
            break;
        }
        if iter > 0 && iter % VANISHING_CHECK_EVERY == 0 {
            let spread = mass_inside(&u, half) < 0.5 * nu;
            let stagnant = (e.total - e_checkpoint).abs() < opts.tol_energy;
            if spread && stagnant && e.total.abs() <= vanish_band {
                status = Status::Vanishing;
                break;
            }
            e_checkpoint = e.total;
        }
        if iter == opts.max_iters {
            break;
        }

        if residual < NEWTON_START {
            if let Some(t) = newton_point(&u, &raw, b, nu, c, floor) {
                let raw_t = energy::energy_derivative(&t.field, c, floor);
                let (res_t, _) = residual_and_multiplier(&t.field, &raw_t, nu);
                let slack = NEWTON_ENERGY_SLACK * e.total.abs().max(1.0);
                if res_t < residual && t.energy.total <= e.total + slack {
                    u = t.field;
                    e = t.energy;
                    continue;
                }
            }
        }

        let sigma = (2.0 * b).max(1.0);
        let (diag, off) = metric(&u, floor, sigma);
        let p_e = solve_tridiagonal(&diag, &off, &raw[1..]);
        let normal: Vec<f64> = (1..w.len()).map(|i| w[i] * u.values()[i]).collect();
        let p_m = solve_tridiagonal(&diag, &off, &normal);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let beta = dot(&normal, &p_e) / dot(&normal, &p_m);
        let dir: Vec<f64> = p_e.iter().zip(&p_m).map(|(x, y)| x - beta * y).collect();
        let slope = dot(&raw[1..], &dir);

        let mut accepted = None;
        while tau >= MIN_STEP {
            if let Some(t) = trial_point(&u, &dir, tau, nu, c, floor) {
                if t.energy.total <= e.total - ARMIJO * tau * slope.max(0.0) {
                    accepted = Some(t);
                    break;
                }
            }
            tau *= 0.5;
        }
        match accepted {
            Some(t) => {
                u = t.field;
                e = t.energy;
                tau = (tau * 2.0).min(MAX_STEP);
            }
            None => {
                status = Status::Stalled;
                break;
            }
        }
    }

    let regime = if mass_inside(&u, half) >= 0.5 * nu {
        Regime::Compact
    } else {
        Regime::Vanishing
    };
    let i_estimate = match regime {
        Regime::Compact => e.total.min(0.0),
        Regime::Vanishing => 0.0,
    };
    Ok(MinimizeResult {
        converged: status == Status::Converged,
        field: u,
        energy: e,
        multiplier_b: b,
        iterations,
        residual,
        status,
        regime,
        i_estimate,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(12.0, 768).unwrap())
    }

    #[test]
    fn tridiagonal_solver() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let off = [1.0, -2.0, 0.5];
        let x = [1.0, -1.0, 2.0, 0.25];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += off[i - 1] * x[i - 1];
                }
                if i < 3 {
                    s += off[i] * x[i + 1];
                }
                s
            })
            .collect();
        let sol = solve_tridiagonal(&diag, &off, &rhs);
        for (a, b) in sol.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn profiles_have_requested_mass() {
        let g = grid();
        let u = InitProfile::Gaussian { sigma: 1.0 }.build(&g, 1.0).unwrap();
        assert!((u.l2_mass() - 1.0).abs() < 1e-10);
        assert!(u.max_abs() < 1.0);
        let ft = InitProfile::FlatTop {
            radius: 0.3,
            width: 0.5,
        }
        .build(&g, 0.5)
        .unwrap();
        assert!((ft.l2_mass() - 0.5).abs() < 1e-10);
        assert!(InitProfile::FlatTop {
            radius: 0.3,
            width: 0.0
        }
        .build(&g, 1.0)
        .is_err());
        assert!(InitProfile::Gaussian { sigma: -1.0 }.build(&g, 1.0).is_err());
        assert!(InitProfile::from_name("sombrero").is_err());
        // a tiny cosine bump cannot carry unit mass below amplitude one
        assert!(InitProfile::Cosbump { radius: 0.2 }.build(&g, 1.0).is_err());
    }

    #[test]
    fn cosbump_profile_reproduces_test_function() {
        let g = Arc::new(RadialGrid::new(4.0, 4001).unwrap());
        let u = InitProfile::default().build(&g, 1.0).unwrap();
        let exact = analysis::test_function_cosbump(&g).unwrap();
        for (x, y) in u.values().iter().zip(exact.values()).skip(1) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_invalid_options() {
        let g = grid();
        let c = Coupling::new(10.0).unwrap();
        for bad in [
            MinimizeOptions {
                nu: 0.0,
                ..Default::default()
            },
            MinimizeOptions {
                nu: 1.5,
                ..Default::default()
            },
            MinimizeOptions {
                tol_residual: 0.0,
                ..Default::default()
            },
            MinimizeOptions {
                step0: -1.0,
                ..Default::default()
            },
            MinimizeOptions {
                floor: 1e-3,
                ..Default::default()
            },
        ] {
            assert!(minimize(&c, &g, &bad).is_err());
        }
        assert!(minimize_mass(&c, 0.0, &g, &MinimizeOptions::default()).is_err());
    }

    #[test]
    fn multiplier_of_zero_field_is_an_error() {
        let z = RadialField::zeros(grid());
        assert!(matches!(
            extract_multiplier(&z, &Coupling::new(1.0).unwrap()),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn multiplier_of_far_from_stationary_field_is_finite() {
        let g = grid();
        let u = InitProfile::Gaussian { sigma: 0.8 }.build(&g, 0.3).unwrap();
        let c = Coupling::new(30.0).unwrap();
        let b = extract_multiplier(&u, &c).unwrap();
        assert!(b.is_finite());
        assert!(energy::el_residual(&u, &c, b, energy::DEFAULT_FLOOR) > 1e-3);
    }

    #[test]
    fn flow_is_monotone_mass_preserving_and_admissible() {
        let g = grid();
        let c = Coupling::new(60.0).unwrap();
        let opts = MinimizeOptions {
            tol_residual: 1e-8,
            ..Default::default()
        };
        let r = minimize(&c, &g, &opts).unwrap();
        assert!(r.converged, "{:?} residual {}", r.status, r.residual);
        assert!(r.history.windows(2).all(|h| h[1].energy <= h[0].energy + 1e-12));
        assert!((r.field.l2_mass() - 1.0).abs() < 1e-10);
        assert!(r.field.max_abs() < 1.0);
        assert!(r.energy.total >= -30.0);
        assert!(r.energy.total < 0.0);
        assert_eq!(r.regime, Regime::Compact);
        let b = extract_multiplier(&r.field, &c).unwrap();
        assert!((b - r.multiplier_b).abs() < 1e-12 * b.abs().max(1.0));
        assert!(energy::el_residual(&r.field, &c, b, opts.floor) <= 10.0 * opts.tol_residual);
    }

    #[test]
    fn weak_coupling_spreads() {
        let g = grid();
        let c = Coupling::new(5.0).unwrap();
        let r = minimize(&c, &g, &MinimizeOptions::default()).unwrap();
        assert!(r.energy.total >= -1e-3);
        assert_eq!(r.regime, Regime::Vanishing);
        assert_eq!(r.i_estimate, 0.0);
    }
}
