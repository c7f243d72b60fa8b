//! Reduced-resolution consistency checks, one per acceptance property.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{self, ThresholdOptions};
use crate::energy::{self, Coupling};
use crate::error::Result;
use crate::grid::{RadialField, RadialGrid};
use crate::minimizer::{self, MinimizeOptions, Regime};
use crate::shooting::{self, Classification, ShootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfTestOptions {
    /// Nodes of the production-type grid on `[0, r_max]`.
    pub n: usize,
    pub r_max: f64,
    pub seed: u64,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        Self {
            n: 1024,
            r_max: 20.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub options: SelfTestOptions,
    pub checks: Vec<CheckOutcome>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

/// Grid ending exactly at the support edge of the cosine test function.
fn edge_grid(n: usize) -> Result<Arc<RadialGrid>> {
    let edge = analysis::upper_test_constants().radius * FRAC_PI_2;
    Ok(Arc::new(RadialGrid::new(edge, n)?))
}

fn closed_form_errors(n: usize) -> Result<(f64, f64)> {
    let k = analysis::upper_test_constants();
    let f = analysis::test_function_cosbump(&edge_grid(n)?)?;
    Ok((
        rel(energy::kinetic_term(&f, energy::DEFAULT_FLOOR), k.kinetic_closed),
        rel(energy::quartic_term(&f), k.quartic_closed),
    ))
}

/// Run every check. Invalid options fail before any check runs.
pub fn run(opts: &SelfTestOptions) -> Result<SelfTestReport> {
    let grid = Arc::new(RadialGrid::new(opts.r_max, opts.n)?);
    let mut checks = Vec::new();
    let mo = MinimizeOptions {
        tol_residual: 1e-7,
        record_history: false,
        ..MinimizeOptions::default()
    };

    // constants
    let two = analysis::lower_threshold();
    let closed = 3.0 * std::f64::consts::PI.powf(4.0 / 3.0) / 2f64.cbrt();
    let abar = analysis::upper_test_constants().abar;
    checks.push(outcome(
        "constants",
        rel(two, closed) < 1e-12 && (two - 10.96).abs() < 0.005 && (abar - 48.06).abs() < 0.01,
        format!("2/S^2 = {two}, abar = {abar}"),
    ));

    // closed-form quadrature
    let (ek, eq) = closed_form_errors(4096)?;
    checks.push(outcome(
        "closed_form_quadrature",
        ek < 1e-4 && eq < 1e-6,
        format!("kinetic rel err {ek:.3e}, quartic rel err {eq:.3e}"),
    ));

    // refinement sweep
    let sweep = [256, 512, 1024, 2048]
        .iter()
        .map(|&n| closed_form_errors(n))
        .collect::<Result<Vec<_>>>()?;
    let monotone = sweep.windows(2).all(|w| w[1].0 <= w[0].0 && w[1].1 <= w[0].1);
    checks.push(outcome(
        "refinement_sweep",
        monotone,
        format!("kinetic/quartic errors {:?}", sweep),
    ));

    // negative-energy regime
    let c50 = Coupling::new(50.0)?;
    let r = minimizer::minimize(&c50, &grid, &mo)?;
    let res = energy::el_residual(&r.field, &c50, r.multiplier_b, mo.floor);
    checks.push(outcome(
        "negative_regime",
        r.converged
            && r.energy.total < 0.0
            && r.energy.total >= -25.0
            && r.field.max_abs() <= 1.0
            && (r.field.l2_mass() - 1.0).abs() <= 1e-10
            && res <= 1e-6,
        format!(
            "E = {}, residual {res:.2e}, status {:?}",
            r.energy.total, r.status
        ),
    ));

    // zero regime
    let r5 = minimizer::minimize(&Coupling::new(5.0)?, &grid, &mo)?;
    checks.push(outcome(
        "zero_regime",
        r5.i_estimate >= -1e-3,
        format!("I-estimate {}, regime {:?}", r5.i_estimate, r5.regime),
    ));

    // threshold under refinement
    let topts = ThresholdOptions {
        tol_a: 0.1,
        ..ThresholdOptions::default()
    };
    let coarse = Arc::new(RadialGrid::new(
        opts.r_max,
        (opts.n / 2).max(crate::grid::MIN_NODES),
    )?);
    let t1 = analysis::threshold_bisect(&coarse, &topts);
    let t2 = analysis::threshold_bisect(&grid, &topts);
    checks.push(match (t1, t2) {
        (Ok(t1), Ok(t2)) => {
            let (x, y) = (t1.a0_upper_estimate, t2.a0_upper_estimate);
            let lo = analysis::lower_threshold();
            outcome(
                "threshold",
                x > lo && x < abar && y > lo && y < abar && (x - y).abs() <= 0.5,
                format!("a0 upper estimates {x} (n/2), {y} (n)"),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome("threshold", false, e.to_string()),
    });

    // shooting
    let c81 = Coupling::with_multiplier(8.0, 1.0)?;
    let so = ShootOptions::default();
    let tight = ShootOptions {
        tol: so.tol / 2.0,
        rtol: so.rtol / 2.0,
        atol: so.atol / 2.0,
        ..so
    };
    checks.push(
        match (
            shooting::find_ground_state(&c81, &so),
            shooting::find_ground_state(&c81, &tight),
        ) {
            (Ok(g1), Ok(g2)) => outcome(
                "shooting",
                g1.trajectory.classification == Classification::GroundCandidate
                    && g1.max_g().powi(2) < 1.0
                    && g1.tail_norm() < 1e-4
                    && (g1.g0 - g2.g0).abs() <= 1e-6,
                format!("g0 = {} / {}, tail {:.2e}", g1.g0, g2.g0, g1.tail_norm()),
            ),
            (Err(e), _) | (_, Err(e)) => outcome("shooting", false, e.to_string()),
        },
    );

    // cross-validation
    let c60 = Coupling::new(60.0)?;
    let r60 = minimizer::minimize(&c60, &grid, &mo)?;
    let cb = Coupling::with_multiplier(60.0, r60.multiplier_b)?;
    checks.push(
        match shooting::find_ground_state_near(&cb, &so, Some(r60.field.values()[0])) {
            Ok(gs) => {
                let linf = grid
                    .nodes()
                    .iter()
                    .zip(r60.field.values())
                    .map(|(&r, &u)| (gs.trajectory.g_at(r) - u).abs())
                    .fold(0.0, f64::max);
                outcome(
                    "cross_validation",
                    linf <= 1e-2,
                    format!("b = {}, L-inf difference {linf:.3e}", r60.multiplier_b),
                )
            }
            Err(e) => outcome("cross_validation", false, e.to_string()),
        },
    );

    // gradient
    let small = Arc::new(RadialGrid::new(4.0, 200)?);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let amp = rng.gen_range(0.1..0.9);
        let width = rng.gen_range(0.3..1.5);
        let a = rng.gen_range(1.0..60.0);
        let u = RadialField::from_fn(Arc::clone(&small), |r| amp * (-(r / width).powi(2)).exp())?;
        let c = Coupling::new(a)?;
        let dir = RadialField::from_fn(Arc::clone(&small), |r| (1.0 + r).recip() * (-(r * r) / 4.0).exp())?;
        let g = energy::gradient(&u, &c, energy::DEFAULT_FLOOR);
        let analytic = energy::inner(&g, &dir);
        let eps = 1e-6;
        let e = |s: f64| {
            let v: Vec<f64> = u
                .values()
                .iter()
                .zip(dir.values())
                .map(|(x, d)| x + s * d)
                .collect();
            energy::energy(&u.with_values(v).expect("finite"), &c, energy::DEFAULT_FLOOR).total
        };
        let fd = (e(eps) - e(-eps)) / (2.0 * eps);
        worst = worst.max((analytic - fd).abs() / analytic.abs().max(1e-300));
    }
    checks.push(outcome(
        "gradient",
        worst < 1e-6,
        format!("worst relative error {worst:.3e}"),
    ));

    // dilation
    let f = analysis::test_function_cosbump(&edge_grid(2048)?)?;
    let c = Coupling::new(10.0)?;
    let mut worst: f64 = 0.0;
    for gamma in [2.0, 4.0] {
        let lhs = energy::energy(&energy::dilate(&f, gamma)?, &c, energy::DEFAULT_FLOOR).total;
        let rhs = energy::dilated_energy_formula(&f, &c, gamma, energy::DEFAULT_FLOOR);
        worst = worst.max(rel(lhs, rhs));
    }
    checks.push(outcome(
        "scaling_identity",
        worst <= 1e-3,
        format!("worst relative gap {worst:.3e}"),
    ));

    // unbounded family
    let fine = Arc::new(RadialGrid::new(1.0, 2001)?);
    let c1 = Coupling::new(1.0)?;
    let fam = [4u32, 8, 16]
        .iter()
        .map(|&k| {
            analysis::unbounded_family(k, &fine)
                .map(|m| energy::energy_signed(&m.field, &c1, energy::DEFAULT_EXCLUSION))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = fam[2].abs() / fam[1].abs();
    checks.push(outcome(
        "unbounded_family",
        fam[1] < fam[0] && fam[2] < fam[1] && (6.4..=9.6).contains(&ratio),
        format!("F = {fam:?}, ratio {ratio:.4}"),
    ));

    // cut-offs
    let worst = (1..=10_000)
        .map(|k| {
            let x = 3.0 * k as f64 / 10_000.0;
            (analysis::cutoff_xi(x) + analysis::cutoff_zeta(x) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let near = analysis::cutoff_singular_ratio(1.0 + 1e-4).max(analysis::cutoff_singular_ratio(2.0 - 1e-4));
    let (_, bound) = analysis::singular_ratio_bound(10_000);
    checks.push(outcome(
        "cutoffs",
        worst <= 1e-12 && near < 1e-2 && bound.is_finite(),
        format!("partition error {worst:.1e}, endpoint ratio {near:.1e}, sampled max {bound:.4}"),
    ));

    // subadditivity
    let starts = MinimizeOptions {
        starts: 4,
        ..mo.clone()
    };
    let i = |nu: f64| minimizer::minimize_mass(&c60, nu, &grid, &starts).map(|r| r.i_estimate);
    let i1 = i(1.0)?;
    let mut margins = Vec::new();
    for nu in [0.25, 0.5, 0.75] {
        margins.push(i(nu)? + i(1.0 - nu)? - i1);
    }
    checks.push(outcome(
        "subadditivity",
        margins.iter().all(|&m| m > 0.0),
        format!("I_1 = {i1}, margins {margins:?}"),
    ));

    let regime_ok = r60.regime == Regime::Compact;
    checks.push(outcome(
        "compact_minimizer",
        regime_ok,
        format!("regime at a = 60: {:?}", r60.regime),
    ));

    Ok(SelfTestReport {
        options: *opts,
        checks,
    })
}
