//! Shooting on `g(0)` for the radial first-order system
//!
//! ```text
//! f' + 2f/r = g (f² - a g² + b),    g' = f (1 - g²),    f(0) = 0,
//! ```
//!
//! whose decaying solutions `(f, g) → (0, 0)` are the radial critical points
//! of the energy with multiplier `b` (`g` plays the role of `u`, and
//! `f = g'/(1 - g²)`).

use serde::{Deserialize, Serialize};

use crate::energy::Coupling;
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Status};

/// Radius of the series start `f = g0 (b - a g0²) r / 3`, `g = g0`.
pub const SERIES_START: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Reached `r_max` with `f² + g² < tol²`.
    GroundCandidate,
    /// `g` crossed zero.
    Overshoot,
    /// `f` became positive while `0 < g < 1`, i.e. `g` turned back up.
    Undershoot,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r: f64,
    pub f: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootTrajectory {
    pub samples: Vec<Sample>,
    pub g0: f64,
    pub classification: Classification,
    pub r_end: f64,
    /// Set when the integrator stopped for a numerical reason.
    pub diagnostic: Option<String>,
}

impl ShootTrajectory {
    /// Wrap externally produced samples; classification is left inconclusive.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].r <= w[0].r) {
            return Err(Error::InvalidParameter(
                "samples must be strictly increasing in r".into(),
            ));
        }
        let g0 = samples.first().map(|s| s.g).unwrap_or(0.0);
        let r_end = samples.last().map(|s| s.r).unwrap_or(0.0);
        Ok(Self {
            samples,
            g0,
            classification: Classification::Inconclusive,
            r_end,
            diagnostic: None,
        })
    }

    pub fn max_abs_g(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.g.abs()))
    }

    /// `|f(r_end)| + |g(r_end)|`.
    pub fn tail_norm(&self) -> f64 {
        self.samples
            .last()
            .map(|s| s.f.abs() + s.g.abs())
            .unwrap_or(f64::INFINITY)
    }

    /// `g` at radius `r` by linear interpolation between samples; zero past
    /// the last sample.
    pub fn g_at(&self, r: f64) -> f64 {
        let s = &self.samples;
        if s.is_empty() || r > self.r_end {
            return 0.0;
        }
        let k = s.partition_point(|p| p.r <= r);
        if k == 0 {
            return s[0].g;
        }
        if k >= s.len() {
            return s[s.len() - 1].g;
        }
        let (p, q) = (s[k - 1], s[k]);
        let t = (r - p.r) / (q.r - p.r);
        p.g + t * (q.g - p.g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Outer radius; `None` picks `(ln(1/tol) + 4)/√b`.
    pub r_max: Option<f64>,
    /// Tail tolerance for a ground candidate.
    pub tol: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of the stored samples.
    pub sample_dr: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            r_max: None,
            tol: 1e-5,
            rtol: 1e-10,
            atol: 1e-12,
            sample_dr: 1e-3,
        }
    }
}

impl ShootOptions {
    pub fn resolved_r_max(&self, b: f64) -> f64 {
        self.r_max
            .unwrap_or_else(|| ((1.0 / self.tol).ln() + 4.0) / b.sqrt())
    }

    fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !(pos(self.tol) && pos(self.rtol) && pos(self.atol) && pos(self.sample_dr)) {
            return Err(Error::InvalidParameter(
                "shooting tolerances must be positive".into(),
            ));
        }
        if let Some(r) = self.r_max {
            if !pos(r) || r <= SERIES_START {
                return Err(Error::InvalidParameter(format!("invalid shooting r_max {r}")));
            }
        }
        Ok(())
    }
}

fn multiplier(c: &Coupling) -> Result<f64> {
    c.b.ok_or_else(|| Error::InvalidParameter("shooting needs the multiplier b".into()))
}

/// Right-hand side `(f', g')` at `r > 0`.
pub fn rhs(r: f64, f: f64, g: f64, c: &Coupling) -> Result<(f64, f64)> {
    let b = multiplier(c)?;
    Ok(rhs_ab(r, f, g, c.a, b))
}

#[inline]
fn rhs_ab(r: f64, f: f64, g: f64, a: f64, b: f64) -> (f64, f64) {
    (g * (f * f - a * g * g + b) - 2.0 * f / r, f * (1.0 - g * g))
}

/// Integrate from the series start to `r_max` or the first classification
/// event.
pub fn integrate_trajectory(g0: f64, c: &Coupling, opts: &ShootOptions) -> Result<ShootTrajectory> {
    let b = multiplier(c)?;
    opts.validate()?;
    if !(g0 > 0.0 && g0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "g0 must lie in (0, 1), got {g0}"
        )));
    }
    let r_max = opts.resolved_r_max(b);
    Ok(shoot(g0, c.a, b, r_max, opts, true))
}

/// Blow-up guard for `|f|`.
const F_LIMIT: f64 = 1e8;

fn shoot(g0: f64, a: f64, b: f64, r_max: f64, opts: &ShootOptions, keep: bool) -> ShootTrajectory {
    let solver = Dopri5 {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: 1e-4,
        h_min: 1e-14,
        h_max: 0.05,
        max_steps: 2_000_000,
    };
    let f_start = g0 * (b - a * g0 * g0) * SERIES_START / 3.0;
    let mut samples = vec![Sample {
        r: 0.0,
        f: 0.0,
        g: g0,
    }];
    let mut next = 1usize;
    let mut event = None;
    let out = solver.integrate(
        |r, y: &[f64; 2]| {
            let (df, dg) = rhs_ab(r, y[0], y[1], a, b);
            [df, dg]
        },
        SERIES_START,
        [f_start, g0],
        r_max,
        |step| {
            if keep {
                while next as f64 * opts.sample_dr <= step.t1 {
                    let r = next as f64 * opts.sample_dr;
                    if r > step.t0 {
                        let y = step.interpolate(r);
                        samples.push(Sample { r, f: y[0], g: y[1] });
                    }
                    next += 1;
                }
            }
            let [f, g] = step.y1;
            if g < 0.0 {
                event = Some(Classification::Overshoot);
            } else if f > 0.0 && g < 1.0 {
                event = Some(Classification::Undershoot);
            } else if f.abs() > F_LIMIT {
                event = Some(Classification::Inconclusive);
            }
            if event.is_some() {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    );
    let [f_end, g_end] = out.y;
    if samples.last().map(|s| s.r < out.t).unwrap_or(true) {
        samples.push(Sample {
            r: out.t,
            f: f_end,
            g: g_end,
        });
    }
    let (classification, diagnostic) = match out.status {
        Status::Stopped => (
            event.unwrap_or(Classification::Inconclusive),
            (event == Some(Classification::Inconclusive)).then(|| "f exceeded blow-up guard".to_string()),
        ),
        Status::Completed => {
            if (f_end * f_end + g_end * g_end).sqrt() < opts.tol {
                (Classification::GroundCandidate, None)
            } else {
                (Classification::Inconclusive, None)
            }
        }
        other => (
            Classification::Inconclusive,
            Some(format!("integrator stopped at r = {}: {other:?}", out.t)),
        ),
    };
    ShootTrajectory {
        samples,
        g0,
        classification,
        r_end: out.t,
        diagnostic,
    }
}

/// Ground-state search result.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub a: f64,
    pub b: f64,
    pub g0: f64,
    /// Final overshoot/undershoot bracket on `g0`.
    pub bracket: (f64, f64),
    pub trajectory: ShootTrajectory,
}

impl GroundState {
    pub fn max_g(&self) -> f64 {
        self.trajectory.max_abs_g()
    }

    pub fn tail_norm(&self) -> f64 {
        self.trajectory.tail_norm()
    }
}

/// Scan points in `(lo, 1)`: uniform in `g0`, then geometric towards 1.
fn scan_points(lo: f64, count: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (1..count)
        .map(|k| lo + (1.0 - lo) * k as f64 / count as f64)
        .collect();
    pts.extend((2..=12).map(|m| 1.0 - 10f64.powi(-m)));
    pts.retain(|&g| g > lo && g < 1.0);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts
}

/// Which way a trajectory eventually leaves the decaying branch. Ground
/// candidates are followed to three times `r_max` to decide.
fn eventual_side(g0: f64, a: f64, b: f64, r_max: f64, opts: &ShootOptions) -> Classification {
    let t = shoot(g0, a, b, r_max, opts, false);
    if t.classification != Classification::GroundCandidate {
        return t.classification;
    }
    let ext = shoot(g0, a, b, 3.0 * r_max, opts, false);
    match ext.classification {
        Classification::Inconclusive => Classification::GroundCandidate,
        c => c,
    }
}

/// All `g0` brackets in `(√(b/a), 1)` where the classification switches
/// between overshoot and undershoot, in increasing order of `g0`.
pub fn scan_brackets(c: &Coupling, opts: &ShootOptions) -> Result<Vec<(f64, f64)>> {
    let b = multiplier(c)?;
    opts.validate()?;
    check_existence(c.a, b)?;
    let r_max = opts.resolved_r_max(b);
    let lo = (b / c.a).sqrt();
    let pts = scan_points(lo, 64);
    let classes: Vec<_> = pts
        .iter()
        .map(|&g| shoot(g, c.a, b, r_max, opts, false).classification)
        .collect();
    let mut out = Vec::new();
    for k in 1..pts.len() {
        use Classification::*;
        let pair = (classes[k - 1], classes[k]);
        if matches!(
            pair,
            (Overshoot, Undershoot) | (Undershoot, Overshoot) | (GroundCandidate, _) | (_, GroundCandidate)
        ) && pair.0 != pair.1
        {
            out.push((pts[k - 1], pts[k]));
        }
    }
    Ok(out)
}

fn check_existence(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a, b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// Bisection on `g0 ∈ (√(b/a), 1)` between overshoot and undershoot.
///
/// The first bracket (smallest `g0`) found by a coarse scan is refined.
pub fn find_ground_state(c: &Coupling, opts: &ShootOptions) -> Result<GroundState> {
    find_ground_state_near(c, opts, None)
}

/// As [`find_ground_state`], refining the scan bracket closest to `hint`
/// when one is given.
pub fn find_ground_state_near(c: &Coupling, opts: &ShootOptions, hint: Option<f64>) -> Result<GroundState> {
    let b = multiplier(c)?;
    let brackets = scan_brackets(c, opts)?;
    let chosen = match hint {
        Some(h) => brackets.iter().copied().min_by(|x, y| {
            let dx = (0.5 * (x.0 + x.1) - h).abs();
            let dy = (0.5 * (y.0 + y.1) - h).abs();
            dx.partial_cmp(&dy).unwrap()
        }),
        None => brackets.first().copied(),
    };
    let (mut lo, mut hi) = chosen.ok_or_else(|| {
        Error::NoBracket(format!(
            "no overshoot/undershoot change for a = {}, b = {b} (a - 2b = {})",
            c.a,
            c.a - 2.0 * b
        ))
    })?;
    let r_max = opts.resolved_r_max(b);
    let side_lo = eventual_side(lo, c.a, b, r_max, opts);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match eventual_side(mid, c.a, b, r_max, opts) {
            Classification::GroundCandidate => {
                lo = mid;
                hi = mid;
                break;
            }
            s if s == side_lo => lo = mid,
            Classification::Inconclusive => break,
            _ => hi = mid,
        }
    }
    let g0 = 0.5 * (lo + hi);
    let trajectory = shoot(g0, c.a, b, r_max, opts, true);
    if trajectory.classification != Classification::GroundCandidate {
        return Err(Error::NoBracket(format!(
            "bisection collapsed at g0 = {g0} without a decaying trajectory (tail {:.3e} at r = {})",
            trajectory.tail_norm(),
            trajectory.r_end
        )));
    }
    Ok(GroundState {
        a: c.a,
        b,
        g0,
        bracket: (lo, hi),
        trajectory,
    })
}

/// Max-norm residuals of the two equations of the radial system, evaluated
/// by centered differences of the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemResidual {
    pub first: f64,
    pub second: f64,
}

pub fn verify_system(t: &ShootTrajectory, c: &Coupling) -> Result<SystemResidual> {
    let b = multiplier(c)?;
    let s = &t.samples;
    if s.len() < 8 {
        return Err(Error::InvalidParameter(format!(
            "need at least 8 samples, got {}",
            s.len()
        )));
    }
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    // the last sample may sit at an irregular spacing; skip it
    for k in 1..s.len() - 2 {
        let (p, q, m) = (s[k - 1], s[k + 1], s[k]);
        let dr = q.r - p.r;
        let df = (q.f - p.f) / dr;
        let dg = (q.g - p.g) / dr;
        let (rf, rg) = rhs_ab(m.r, m.f, m.g, c.a, b);
        first = first.max((df - rf).abs());
        second = second.max((dg - rg).abs());
    }
    Ok(SystemResidual { first, second })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: f64, b: f64) -> Coupling {
        Coupling::with_multiplier(a, b).unwrap()
    }

    #[test]
    fn rhs_hand_values() {
        let (df, dg) = rhs(1.0, 0.0, 0.5, &c(8.0, 1.0)).unwrap();
        assert!((df - (-0.5)).abs() < 1e-15);
        assert_eq!(dg, 0.0);
        // g = 0: pure decay of f
        let (df, dg) = rhs(2.0, 0.3, 0.0, &c(8.0, 1.0)).unwrap();
        assert!((df + 0.3).abs() < 1e-15);
        assert_eq!(dg, 0.3);
        assert!(rhs(1.0, 0.0, 0.5, &Coupling::new(8.0).unwrap()).is_err());
    }

    #[test]
    fn small_g0_undershoots() {
        let t = integrate_trajectory(0.3, &c(8.0, 1.0), &ShootOptions::default()).unwrap();
        assert_eq!(t.classification, Classification::Undershoot);
        assert_eq!(t.samples[0].f, 0.0);
        assert_eq!(t.samples[0].r, 0.0);
    }

    #[test]
    fn near_one_is_deterministic_and_bounded() {
        let o = ShootOptions::default();
        let t1 = integrate_trajectory(0.99, &c(8.0, 1.0), &o).unwrap();
        let t2 = integrate_trajectory(0.99, &c(8.0, 1.0), &o).unwrap();
        assert_eq!(t1, t2);
        assert!(matches!(
            t1.classification,
            Classification::Overshoot | Classification::Undershoot
        ));
        assert!(t1.max_abs_g() <= 1.0 + 1e-9);
        assert!(t1.samples.windows(2).all(|w| w[1].r > w[0].r));
    }

    #[test]
    fn rejects_g0_outside_unit_interval() {
        let o = ShootOptions::default();
        assert!(integrate_trajectory(0.0, &c(8.0, 1.0), &o).is_err());
        assert!(integrate_trajectory(1.0, &c(8.0, 1.0), &o).is_err());
    }

    #[test]
    fn verify_detects_non_solutions() {
        let g0 = 0.5;
        let samples: Vec<_> = (0..20)
            .map(|k| Sample {
                r: 0.1 * k as f64,
                f: 0.0,
                g: g0,
            })
            .collect();
        let t = ShootTrajectory::from_samples(samples).unwrap();
        let r = verify_system(&t, &c(8.0, 1.0)).unwrap();
        assert!((r.first - (g0 * (1.0 - 8.0 * g0 * g0)).abs()).abs() < 1e-12);
        assert_eq!(r.second, 0.0);

        let zero: Vec<_> = (0..20)
            .map(|k| Sample {
                r: 0.1 * k as f64,
                f: 0.0,
                g: 0.0,
            })
            .collect();
        let r = verify_system(&ShootTrajectory::from_samples(zero).unwrap(), &c(8.0, 1.0)).unwrap();
        assert_eq!((r.first, r.second), (0.0, 0.0));

        let short: Vec<_> = (0..5)
            .map(|k| Sample {
                r: k as f64,
                f: 0.0,
                g: 0.0,
            })
            .collect();
        assert!(verify_system(&ShootTrajectory::from_samples(short).unwrap(), &c(8.0, 1.0)).is_err());
    }
}
