//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmfground::analysis::{self, ThresholdOptions};
use rmfground::energy::{self, Coupling, DEFAULT_EXCLUSION, DEFAULT_FLOOR};
use rmfground::minimizer::{self, MinimizeOptions, Regime};
use rmfground::shooting::{self, Classification, ShootOptions};
use rmfground::{RadialField, RadialGrid};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn production_grid(n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(20.0, n).unwrap())
}

/// Radius of the unit-mass cosine bump: `4π R³ ∫_0^{π/2} s² cos² s ds = 1`.
fn bump_radius() -> f64 {
    let moment = (PI.powi(3) / 48.0) - PI / 8.0;
    (1.0 / (4.0 * PI * moment)).cbrt()
}

/// Composite Gauss–Legendre (5 points) on `[lo, hi]`.
fn gauss(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let x = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = lo + (p as f64 + 0.5) * h;
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(mid + 0.5 * h * xi))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

fn c01_constants() -> Check {
    // S from the Aubin–Talenti formula for p = 2, m = 3 written out by hand
    let s = (1.0 / (3.0 * PI).sqrt()) * (4.0 / PI.sqrt()).powf(1.0 / 3.0);
    let two = analysis::lower_threshold();
    let closed = 3.0 * PI.powf(4.0 / 3.0) / 2f64.powf(1.0 / 3.0);
    let abar = analysis::upper_test_constants().abar;
    ensure(
        rel(two, closed) <= 1e-12
            && rel(2.0 / (s * s), two) <= 1e-12
            && (two - 10.96).abs() <= 0.005
            && (abar - 48.06).abs() <= 0.01,
        format!("2/S^2 = {two:.12} (closed {closed:.12}), abar = {abar:.6}"),
    )
}

fn c02_closed_form_quadrature() -> Check {
    let r = bump_radius();
    let grid = Arc::new(RadialGrid::new(r * FRAC_PI_2, 4096).unwrap());
    let f = analysis::test_function_cosbump(&grid).unwrap();
    let kin = energy::kinetic_term(&f, DEFAULT_FLOOR);
    let quart = energy::quartic_term(&f);
    let kin_exact = PI.powi(4) * r / 6.0;
    let quart_exact = 3.0 * (2.0 * PI * PI - 15.0) / (8.0 * (PI * PI - 6.0));
    let (ek, eq) = (rel(kin, kin_exact), rel(quart, quart_exact));
    ensure(
        ek <= 1e-4 && eq <= 1e-6,
        format!("kinetic rel err {ek:.2e}, quartic rel err {eq:.2e} (n = 4096)"),
    )
}

fn c03_negative_regime() -> Check {
    let grid = production_grid(2048);
    let c = Coupling::new(50.0).unwrap();
    let r = minimizer::minimize(&c, &grid, &MinimizeOptions::default()).unwrap();
    let b = minimizer::extract_multiplier(&r.field, &c).unwrap();
    let res = energy::el_residual(&r.field, &c, b, DEFAULT_FLOOR);
    let e = r.energy.total;
    let mass = r.field.l2_mass();
    ensure(
        r.converged
            && (-25.0..0.0).contains(&e)
            && r.field.max_abs() <= 1.0
            && (mass - 1.0).abs() <= 1e-10
            && res <= 1e-6,
        format!(
            "E = {e:.6}, max|u| = {:.6}, mass - 1 = {:.1e}, EL residual {res:.1e}, {} iterations",
            r.field.max_abs(),
            mass - 1.0,
            r.iterations
        ),
    )
}

fn c04_zero_regime() -> Check {
    let grid = production_grid(2048);
    let r = minimizer::minimize(&Coupling::new(5.0).unwrap(), &grid, &MinimizeOptions::default()).unwrap();
    ensure(
        r.i_estimate >= -1e-3,
        format!(
            "I-estimate {}, E = {:.2e}, regime {:?}",
            r.i_estimate, r.energy.total, r.regime
        ),
    )
}

fn c05_threshold() -> Check {
    let opts = ThresholdOptions::default();
    let t1 = analysis::threshold_bisect(&production_grid(2048), &opts).map_err(|e| e.to_string())?;
    let t2 = analysis::threshold_bisect(&production_grid(4096), &opts).map_err(|e| e.to_string())?;
    let (x, y) = (t1.a0_upper_estimate, t2.a0_upper_estimate);
    let inside = |a: f64| a > 10.96 && a < 48.06;
    ensure(
        inside(x) && inside(y) && (x - y).abs() <= 0.5,
        format!("a0 upper estimate {x:.4} (n = 2048), {y:.4} (n = 4096)"),
    )
}

fn c06_shooting() -> Check {
    let c = Coupling::with_multiplier(8.0, 1.0).unwrap();
    let o = ShootOptions::default();
    let half = ShootOptions {
        tol: o.tol / 2.0,
        rtol: o.rtol / 2.0,
        atol: o.atol / 2.0,
        ..o
    };
    let g1 = shooting::find_ground_state(&c, &o).map_err(|e| e.to_string())?;
    let g2 = shooting::find_ground_state(&c, &half).map_err(|e| e.to_string())?;
    let max_g = g1
        .trajectory
        .samples
        .iter()
        .map(|s| s.g.abs())
        .fold(0.0, f64::max);
    ensure(
        g1.trajectory.classification == Classification::GroundCandidate
            && max_g * max_g < 1.0
            && g1.tail_norm() < 1e-4
            && (g1.g0 - g2.g0).abs() <= 1e-6,
        format!(
            "g0 = {:.10}, halved tolerances g0 = {:.10}, max g^2 = {:.6}, tail {:.1e}",
            g1.g0,
            g2.g0,
            max_g * max_g,
            g1.tail_norm()
        ),
    )
}

fn c07_cross_validation() -> Check {
    let grid = production_grid(2048);
    let c = Coupling::new(60.0).unwrap();
    let r = minimizer::minimize(&c, &grid, &MinimizeOptions::default()).unwrap();
    let cb = Coupling::with_multiplier(60.0, r.multiplier_b).unwrap();
    let gs = shooting::find_ground_state_near(&cb, &ShootOptions::default(), Some(r.field.values()[0]))
        .map_err(|e| e.to_string())?;
    // common grid: the trajectory's own samples
    let linf = gs
        .trajectory
        .samples
        .iter()
        .filter(|s| s.r <= grid.r_max())
        .map(|s| (s.g - r.field.interpolate(s.r)).abs())
        .fold(0.0, f64::max);
    ensure(
        linf <= 1e-2 && r.regime == Regime::Compact,
        format!(
            "b = {:.6}, u(0) = {:.6}, g(0) = {:.6}, L-inf {linf:.2e}",
            r.multiplier_b,
            r.field.values()[0],
            gs.g0
        ),
    )
}

fn c08_gradient() -> Check {
    let grid = Arc::new(RadialGrid::new(5.0, 160).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(0.0..2.0),
                    rng.gen_range(0.3..1.2),
                )
            })
            .collect();
        let a = rng.gen_range(1.0..80.0);
        let u = RadialField::from_fn(Arc::clone(&grid), |r| {
            bumps
                .iter()
                .map(|(h, c, w)| h * (-((r - c) / w).powi(2)).exp())
                .sum()
        })
        .unwrap();
        assert!(u.max_abs() < 0.95);
        let c = Coupling::new(a).unwrap();
        let g = energy::gradient(&u, &c, DEFAULT_FLOOR);
        let w = grid.weights();
        let mut fd = vec![0.0; u.len()];
        let eps = 1e-6;
        for i in 1..u.len() {
            let at = |s: f64| {
                let mut v = u.values().to_vec();
                v[i] += s;
                energy::energy(&u.with_values(v).unwrap(), &c, DEFAULT_FLOOR).total
            };
            fd[i] = (at(eps) - at(-eps)) / (2.0 * eps);
        }
        let scale = fd.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let err = (1..u.len())
            .map(|i| (g.values()[i] * w[i] - fd[i]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err / scale);
    }
    ensure(
        worst < 1e-6,
        format!("worst max-norm relative error {worst:.2e} over 20 fields"),
    )
}

fn c09_scaling_identity() -> Check {
    let r = bump_radius();
    let grid = Arc::new(RadialGrid::new(r * FRAC_PI_2, 4096).unwrap());
    let u = analysis::test_function_cosbump(&grid).unwrap();
    let a = 10.0;
    let c = Coupling::new(a).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for gamma in [2.0f64, 4.0] {
        let lhs = energy::energy(&energy::dilate(&u, gamma).unwrap(), &c, DEFAULT_FLOOR).total;
        let g3 = gamma.powi(-3);
        // continuum right-hand side with u = cos(r/R) on [0, Rπ/2]
        let kin = gauss(
            |x| {
                let (s, co) = ((x / r).sin(), (x / r).cos());
                4.0 * PI * x * x * s * s / (r * r) / (1.0 - g3 * co * co)
            },
            0.0,
            r * FRAC_PI_2,
            400,
        );
        let quart = gauss(
            |x| 4.0 * PI * x * x * (x / r).cos().powi(4),
            0.0,
            r * FRAC_PI_2,
            400,
        );
        let rhs = kin / (gamma * gamma) - 0.5 * a * g3 * quart;
        worst = worst.max(rel(lhs, rhs));
        parts.push(format!("gamma {gamma}: {lhs:.8} vs {rhs:.8}"));
    }
    ensure(
        worst <= 1e-3,
        format!("{}; worst rel {worst:.1e}", parts.join(", ")),
    )
}

fn c10_unbounded() -> Check {
    let grid = Arc::new(RadialGrid::new(1.0, 20_001).unwrap());
    let c = Coupling::new(1.0).unwrap();
    let f: Vec<f64> = [4u32, 8, 16]
        .iter()
        .map(|&n| {
            let m = analysis::unbounded_family(n, &grid).unwrap();
            assert!((m.field.l2_mass() - 1.0).abs() < 1e-8);
            energy::energy_signed(&m.field, &c, DEFAULT_EXCLUSION)
        })
        .collect();
    let ratio = f[2].abs() / f[1].abs();
    ensure(
        f[0] > f[1] && f[1] > f[2] && (6.4..=9.6).contains(&ratio),
        format!(
            "F = {:.4}, {:.4}, {:.4}; |F16|/|F8| = {ratio:.4}",
            f[0], f[1], f[2]
        ),
    )
}

fn c11_cutoffs() -> Check {
    let worst = (0..10_000)
        .map(|k| {
            let x = 2.5 * k as f64 / 9_999.0;
            (analysis::cutoff_xi(x) + analysis::cutoff_zeta(x) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let lo = analysis::cutoff_singular_ratio(1.0 + 1e-4);
    let hi = analysis::cutoff_singular_ratio(2.0 - 1e-4);
    let finite = (1..10_000).all(|k| analysis::cutoff_singular_ratio(1.0 + k as f64 / 10_000.0).is_finite());
    let (at, bound) = analysis::singular_ratio_bound(10_000);
    ensure(
        worst <= 1e-12 && lo < 1e-2 && hi < 1e-2 && finite,
        format!("partition error {worst:.1e}, ratio at ends {lo:.1e} / {hi:.1e}, sampled max {bound:.4} at x = {at:.4}"),
    )
}

fn c12_subadditivity() -> Check {
    let grid = production_grid(2048);
    let c = Coupling::new(60.0).unwrap();
    let opts = MinimizeOptions {
        starts: 4,
        record_history: false,
        ..MinimizeOptions::default()
    };
    let i = |nu: f64| minimizer::minimize_mass(&c, nu, &grid, &opts).unwrap().i_estimate;
    let i1 = i(1.0);
    let mut margins = Vec::new();
    for nu in [0.25, 0.5, 0.75] {
        margins.push((nu, i(nu) + i(1.0 - nu) - i1));
    }
    ensure(
        margins.iter().all(|(_, m)| *m > 0.0),
        format!(
            "I_1 = {i1:.6}; margins {}",
            margins
                .iter()
                .map(|(nu, m)| format!("nu {nu}: {m:.6}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("constants", c01_constants),
        ("closed-form quadrature", c02_closed_form_quadrature),
        ("negative-energy regime", c03_negative_regime),
        ("zero regime", c04_zero_regime),
        ("threshold", c05_threshold),
        ("shooting", c06_shooting),
        ("cross-validation", c07_cross_validation),
        ("gradient check", c08_gradient),
        ("scaling identity", c09_scaling_identity),
        ("unboundedness of F", c10_unbounded),
        ("cut-off properties", c11_cutoffs),
        ("subadditivity probe", c12_subadditivity),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d} [{secs:.2}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {d} [{secs:.2}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
