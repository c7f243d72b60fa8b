//! Closed-form constants, cut-off functions, concentration functions, the
//! critical-coupling search and the family on which `F` is unbounded below.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::energy::{self, Coupling};
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::minimizer::{self, MinimizeOptions, MinimizeResult, Regime, Status};

/// Best constant `S` of `‖u‖_{L⁶(ℝ³)} ≤ S ‖∇u‖_{L²(ℝ³)}`:
/// `S = (3π)^{-1/2} (4/√π)^{1/3}`.
pub fn sobolev_constant() -> f64 {
    (4.0 / PI.sqrt()).cbrt() / (3.0 * PI).sqrt()
}

/// General best constant of `‖u‖_{L^q(ℝ^m)} ≤ C ‖∇u‖_{L^p(ℝ^m)}` with
/// `q = mp/(m - p)`, `1 < p < m`.
pub fn talenti_constant(m: f64, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < m) {
        return Err(Error::InvalidParameter(format!(
            "need 1 < p < m, got p = {p}, m = {m}"
        )));
    }
    let ratio = gamma(1.0 + m / 2.0) * gamma(m) / (gamma(m / p) * gamma(1.0 + m - m / p));
    Ok(PI.powf(-0.5) * m.powf(-1.0 / p) * ((p - 1.0) / (m - p)).powf(1.0 - 1.0 / p) * ratio.powf(1.0 / m))
}

/// `2/S²`, below which the infimum is zero.
pub fn lower_threshold() -> f64 {
    2.0 / sobolev_constant().powi(2)
}

/// Constants of the cosine test function `f̄_R(r) = cos(r/R)` on `r ≤ πR/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperTestConstants {
    /// Radius making `f̄_R` unit mass.
    pub radius: f64,
    /// `∫ |∇f̄_R|² / (1 - f̄_R²) = π⁴R/6`.
    pub kinetic_closed: f64,
    /// `∫ f̄_R⁴ = 3(2π² - 15) / (8(π² - 6))`.
    pub quartic_closed: f64,
    /// Coupling at which `E(f̄_R) = 0`.
    pub abar: f64,
}

pub fn upper_test_constants() -> UpperTestConstants {
    let p2 = PI * PI;
    let radius = (2.0 / PI).powf(2.0 / 3.0) * (3.0 / (p2 - 6.0)).cbrt();
    let kinetic_closed = PI.powi(4) * radius / 6.0;
    let quartic_closed = 3.0 * (2.0 * p2 - 15.0) / (8.0 * (p2 - 6.0));
    UpperTestConstants {
        radius,
        kinetic_closed,
        quartic_closed,
        abar: 2.0 * kinetic_closed / quartic_closed,
    }
}

/// Machine-readable constants report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "S")]
    pub s: f64,
    pub two_over_s2: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub kinetic_closed: f64,
    pub quartic_closed: f64,
    pub abar: f64,
    /// `ā` recomputed from quadrature of the test function.
    pub abar_quadrature: f64,
}

/// Serialized key names follow the report schema (`two_over_S2`).
impl ConstantsReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "S": self.s,
            "two_over_S2": self.two_over_s2,
            "R": self.r,
            "kinetic_closed": self.kinetic_closed,
            "quartic_closed": self.quartic_closed,
            "abar": self.abar,
            "abar_quadrature": self.abar_quadrature,
        })
    }
}

/// Nodes of the grid used for the quadrature cross-check of `ā`.
pub const CROSS_CHECK_NODES: usize = 4096;

/// All constants, with `ā` cross-checked by quadrature on a grid ending at
/// the support edge of the test function.
pub fn constants_report() -> Result<ConstantsReport> {
    let k = upper_test_constants();
    let grid = Arc::new(RadialGrid::new(k.radius * FRAC_PI_2, CROSS_CHECK_NODES)?);
    let f = test_function_cosbump(&grid)?;
    let kin = energy::kinetic_term(&f, energy::DEFAULT_FLOOR);
    let quart = energy::quartic_term(&f);
    Ok(ConstantsReport {
        s: sobolev_constant(),
        two_over_s2: lower_threshold(),
        r: k.radius,
        kinetic_closed: k.kinetic_closed,
        quartic_closed: k.quartic_closed,
        abar: k.abar,
        abar_quadrature: 2.0 * kin / quart,
    })
}

/// Nodal samples of `f̄_R`. The grid must reach the edge of the support.
pub fn test_function_cosbump(grid: &Arc<RadialGrid>) -> Result<RadialField> {
    let radius = upper_test_constants().radius;
    let edge = radius * FRAC_PI_2;
    if grid.r_max() < edge {
        return Err(Error::Sizing(format!(
            "grid ends at {} before the support edge {edge}",
            grid.r_max()
        )));
    }
    RadialField::from_fn(
        Arc::clone(grid),
        |r| {
            if r < edge {
                (r / radius).cos()
            } else {
                0.0
            }
        },
    )
}

/// Inner exponentials of the cut-off on `1 < x < 2`:
/// `p = exp(1 - 1/(2 - x))`, `q = 1 - p`, `s = exp(1 - 1/q)`.
fn cutoff_parts(x: f64) -> (f64, f64, f64, f64) {
    let t = 2.0 - x;
    let p = (1.0 - 1.0 / t).exp();
    let q = 1.0 - p;
    let s = (1.0 - 1.0 / q).exp();
    (t, p, q, s)
}

/// `ξ`: one on `[0, 1]`, zero on `[2, ∞)`, smooth double-exponential
/// transition in between.
pub fn cutoff_xi(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        1.0 - cutoff_parts(x).3
    }
}

/// `ζ = 1 - ξ`, evaluated from its own closed form.
pub fn cutoff_zeta(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        cutoff_parts(x).3
    }
}

/// `ξ'(x)` by exact differentiation.
pub fn cutoff_xi_derivative(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let (t, p, q, s) = cutoff_parts(x);
    -s * p / (t * t * q * q)
}

/// `(ξ')² / (1 - ξ²)` on `(1, 2)`, written as `s p² / (t⁴ q⁴ (2 - s))` so
/// that both endpoint limits (zero) are reached without cancellation.
pub fn cutoff_singular_ratio(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let (t, p, q, s) = cutoff_parts(x);
    if s == 0.0 || p == 0.0 {
        return 0.0;
    }
    s * p * p / (t.powi(4) * q.powi(4) * (2.0 - s))
}

/// Largest sampled value of [`cutoff_singular_ratio`] on `samples` interior
/// points of `(1, 2)`, with its location.
pub fn singular_ratio_bound(samples: usize) -> (f64, f64) {
    (1..=samples)
        .map(|k| {
            let x = 1.0 + k as f64 / (samples + 1) as f64;
            (x, cutoff_singular_ratio(x))
        })
        .fold((1.0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Mass inside the ball of radius `radius` about the origin (the supremum
/// over centres collapses to the origin for radial fields). Linear in the
/// partial node past the last full one; `Q(r_max)` is the total mass.
pub fn levy_q(u: &RadialField, radius: f64) -> f64 {
    let g = u.grid();
    let density: Vec<f64> = g
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, x)| w * x * x)
        .collect();
    cumulative(g, &density, radius)
}

/// Kinetic energy inside the ball of radius `radius`.
pub fn levy_k(u: &RadialField, radius: f64, floor: f64) -> f64 {
    let g = u.grid();
    let v = u.values();
    let inv_h = 1.0 / g.spacing();
    let floor = floor.clamp(f64::MIN_POSITIVE, energy::MAX_FLOOR);
    // shell j contributes at node j+1
    let mut density = vec![0.0; v.len()];
    for (j, &vol) in g.cell_volumes().iter().enumerate().skip(1) {
        let d = (v[j + 1] - v[j]) * inv_h;
        if d == 0.0 {
            continue;
        }
        let m = 0.5 * (v[j] + v[j + 1]);
        density[j + 1] = vol * d * d / (1.0 - m * m).max(floor);
    }
    cumulative(g, &density, radius)
}

fn cumulative(g: &RadialGrid, density: &[f64], radius: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    if radius >= g.r_max() {
        return density.iter().sum();
    }
    let i = g.locate(radius);
    let full: f64 = density[..=i].iter().sum();
    let frac = (radius - g.nodes()[i]) / g.spacing();
    full + frac * density.get(i + 1).copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    /// Lower end of the initial bracket; `None` means `2/S²`.
    pub a_lo: Option<f64>,
    /// Upper end of the initial bracket; `None` means `ā`.
    pub a_hi: Option<f64>,
    /// Target bracket width.
    pub tol_a: f64,
    /// Sign predicate: a probe is negative when `I-estimate < -tol_energy`.
    pub tol_energy: f64,
    /// Random starts per probe in addition to the default profile and the
    /// continuation start.
    pub extra_starts: usize,
    pub minimize: MinimizeOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            a_lo: None,
            a_hi: None,
            tol_a: 0.05,
            tol_energy: 1e-4,
            extra_starts: 2,
            minimize: MinimizeOptions {
                tol_residual: 1e-6,
                record_history: false,
                ..MinimizeOptions::default()
            },
        }
    }
}

/// One minimization probe of the bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub a: f64,
    pub energy: f64,
    pub i_estimate: f64,
    pub negative: bool,
    pub regime: Regime,
    pub status: Status,
    pub multiplier_b: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBracket {
    pub a_lo: f64,
    pub a_hi: f64,
    pub tol_a: f64,
    /// Midpoint of the final bracket: an upper estimate of the critical
    /// coupling since only radial fields are searched.
    pub a0_upper_estimate: f64,
    pub probes: Vec<Probe>,
    /// Monotonicity violations and restarts, if any.
    pub diagnostics: Vec<String>,
}

struct Prober<'a> {
    grid: &'a Arc<RadialGrid>,
    opts: &'a ThresholdOptions,
    probes: Vec<Probe>,
}

impl Prober<'_> {
    /// Best of: default profile, continuation from `warm`, seeded random starts.
    fn probe(&mut self, a: f64, warm: Option<&RadialField>, extra: usize) -> Result<MinimizeResult> {
        let c = Coupling::new(a)?;
        let mo = MinimizeOptions {
            starts: 1 + extra,
            seed: self.opts.minimize.seed ^ a.to_bits(),
            ..self.opts.minimize.clone()
        };
        let mut best = minimizer::minimize(&c, self.grid, &mo)?;
        if let Some(w) = warm {
            let run = minimizer::minimize_from(&c, w, &mo)?;
            if (run.i_estimate, run.energy.total) < (best.i_estimate, best.energy.total) {
                best = run;
            }
        }
        self.probes.push(Probe {
            a,
            energy: best.energy.total,
            i_estimate: best.i_estimate,
            negative: best.is_negative(self.opts.tol_energy),
            regime: best.regime,
            status: best.status,
            multiplier_b: best.multiplier_b,
            iterations: best.iterations,
        });
        Ok(best)
    }
}

/// Bisection on the coupling for the sign change of the (radial) infimum.
pub fn threshold_bisect(grid: &Arc<RadialGrid>, opts: &ThresholdOptions) -> Result<ThresholdBracket> {
    if !(opts.tol_a > 0.0 && opts.tol_energy > 0.0) {
        return Err(Error::InvalidParameter(
            "tol_a and tol_energy must be positive".into(),
        ));
    }
    opts.minimize.validate()?;
    let lo0 = opts.a_lo.unwrap_or_else(lower_threshold);
    let hi0 = opts.a_hi.unwrap_or(upper_test_constants().abar);
    if !(lo0 > 0.0 && hi0 > lo0) {
        return Err(Error::InvalidParameter(format!("invalid bracket [{lo0}, {hi0}]")));
    }
    let mut prober = Prober {
        grid,
        opts,
        probes: Vec::new(),
    };
    let mut diagnostics = Vec::new();

    let hi_run = prober.probe(hi0, None, opts.extra_starts)?;
    if !hi_run.is_negative(opts.tol_energy) {
        return Err(Error::NoBracket(format!(
            "no negative-energy state at the upper end a = {hi0} (I-estimate {})",
            hi_run.i_estimate
        )));
    }
    let lo_run = prober.probe(lo0, Some(&hi_run.field), opts.extra_starts)?;
    if lo_run.is_negative(opts.tol_energy) {
        return Err(Error::NoBracket(format!(
            "negative-energy state at the lower end a = {lo0} (I-estimate {})",
            lo_run.i_estimate
        )));
    }

    let mut extra = opts.extra_starts;
    let mut restarts = 0;
    let (mut lo, mut hi, mut warm) = (lo0, hi0, hi_run.field);
    while hi - lo > opts.tol_a {
        let mid = 0.5 * (lo + hi);
        let run = prober.probe(mid, Some(&warm), extra)?;
        if run.is_negative(opts.tol_energy) {
            hi = mid;
            warm = run.field;
        } else {
            lo = mid;
        }
        // the predicate must be monotone in a
        let violation = prober
            .probes
            .iter()
            .find(|p| (p.a <= lo && p.negative) || (p.a >= hi && !p.negative));
        if let Some(p) = violation {
            diagnostics.push(format!(
                "non-monotone sign predicate at a = {} (I-estimate {}, bracket [{lo}, {hi}])",
                p.a, p.i_estimate
            ));
            if restarts >= 2 {
                break;
            }
            restarts += 1;
            extra += 3;
            // keep only the endpoints and rebuild from the widest consistent bracket
            lo = lo0;
            hi = hi0;
            let keep: Vec<Probe> = prober
                .probes
                .iter()
                .filter(|p| p.a == lo0 || p.a == hi0)
                .cloned()
                .collect();
            prober.probes = keep;
            diagnostics.push(format!(
                "restarting bisection with {} random starts per probe",
                extra
            ));
        }
    }
    Ok(ThresholdBracket {
        a_lo: lo,
        a_hi: hi,
        tol_a: opts.tol_a,
        a0_upper_estimate: 0.5 * (lo + hi),
        probes: prober.probes,
        diagnostics,
    })
}

/// `√(ln 2)`, the radius where the plateau part of the profile `f` returns to one.
fn ln2_root() -> f64 {
    std::f64::consts::LN_2.sqrt()
}

/// Radial profile with `f(0) = 2`, `f > 1` on `[0, √ln2)`, followed by a
/// shifted cut-off tail; supported in `[0, 1 + √ln2]`.
pub fn unbounded_profile(r: f64) -> f64 {
    let c = ln2_root();
    if r < c {
        ((r - c) * (r - c)).exp()
    } else {
        cutoff_xi(r + 1.0 - c)
    }
}

/// `n^{3/2} ξ(n r)`, which has the same L² norm as `ξ`.
pub fn concentrated_cutoff(n: f64, r: f64) -> f64 {
    n.powf(1.5) * cutoff_xi(n * r)
}

/// `∫_{ℝ³} ξ^p` by quadrature on a dedicated fine grid.
pub fn cutoff_moment(p: i32) -> f64 {
    let g = RadialGrid::new(2.0, 200_001).expect("valid grid");
    g.integrate_fn(|r| cutoff_xi(r).powi(p))
}

/// `∫_{ℝ³} f²` for [`unbounded_profile`].
pub fn unbounded_profile_mass() -> f64 {
    let g = RadialGrid::new(1.0 + ln2_root(), 200_001).expect("valid grid");
    g.integrate_fn(|r| unbounded_profile(r).powi(2))
}

/// Large-`n` limit of the normalizing radius, `(∫ξ² + ∫f²)^{-1/3}`.
pub fn unbounded_limit_radius() -> f64 {
    (cutoff_moment(2) + unbounded_profile_mass()).powf(-1.0 / 3.0)
}

/// One member of the unbounded family.
#[derive(Debug, Clone)]
pub struct UnboundedMember {
    pub n: u32,
    /// Radius `R_n` making the rescaled field unit mass on the grid.
    pub radius: f64,
    pub field: RadialField,
}

/// `g_n^{R_n}(r) = max(n^{3/2} ξ(n r/R_n), f(r/R_n))` with `R_n` chosen by
/// bisection so that the discrete mass is one.
pub fn unbounded_family(n: u32, grid: &Arc<RadialGrid>) -> Result<UnboundedMember> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "family index must be at least 2, got {n}"
        )));
    }
    let nf = f64::from(n);
    if grid.spacing() > 1.0 / (8.0 * nf) {
        return Err(Error::Sizing(format!(
            "spacing {} does not resolve the scale 1/{n} (need <= {})",
            grid.spacing(),
            1.0 / (8.0 * nf)
        )));
    }
    let profile = |r: f64| concentrated_cutoff(nf, r).max(unbounded_profile(r));
    let support = 1.0 + ln2_root();
    let mass_at = |radius: f64| grid.integrate_fn(|r| profile(r / radius).powi(2));
    let mut hi = grid.r_max() / support;
    if mass_at(hi) < 1.0 {
        return Err(Error::Sizing(format!(
            "grid radius {} too short to reach unit mass",
            grid.r_max()
        )));
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mass_at(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    let radius = if (mass_at(lo) - 1.0).abs() < (mass_at(hi) - 1.0).abs() {
        lo
    } else {
        hi
    };
    let field = RadialField::from_fn(Arc::clone(grid), |r| profile(r / radius))?;
    Ok(UnboundedMember { n, radius, field })
}

/// The `n³` term `-(a n³ R_n³ / 2) ∫ξ⁴` that dominates `F` on the family.
pub fn unbounded_leading_term(n: u32, radius: f64, a: f64, xi4: f64) -> f64 {
    -0.5 * a * f64::from(n).powi(3) * radius.powi(3) * xi4
}
