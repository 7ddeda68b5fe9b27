//! Self-check suite behind `relaysim validate`.

use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamform::{optimal_weights, relay_power, sinr_of_weights, v_second_stage, v_second_stage_eig, GainSnapshot, RadioParams};
use crate::channel::{
    build_grid_prior, build_joint_cov, Cell, ChannelParams, GridSampler, Point, Workspace,
};
use crate::gaussian::{History, Posterior2, DB_AMPLITUDE};
use crate::policy::{decide, expected_v_ii_sq, obj_h1, obj_h2, realized_sinr, DecisionContext, FeasibleSet, PolicyKind};
use crate::quadrature::gh_build;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

pub type MomentFn = fn(&Posterior2, i32, i32, f64) -> f64;

/// Implementations under test. Swapping one in lets a test confirm that the
/// suite catches a broken formula.
#[derive(Clone, Copy, Debug)]
pub struct Hooks {
    pub cond_moment: MomentFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            cond_moment: crate::gaussian::cond_moment,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

const MOMENTS: [(i32, i32); 5] = [(-2, 0), (0, -2), (-2, -2), (-4, -4), (2, 2)];

/// Posterior with mean in a typical path-loss range and covariance
/// eigenvalues drawn from `[lo, hi]` along a random orientation.
fn random_posterior<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Posterior2 {
    let mu = [rng.random_range(-45.0..-30.0), rng.random_range(-45.0..-30.0)];
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (l1, l2) = (rng.random_range(lo..hi), rng.random_range(lo..hi));
    let (c, s) = (th.cos(), th.sin());
    let a = l1 * c * c + l2 * s * s;
    let d = l1 * s * s + l2 * c * c;
    let b = (l1 - l2) * c * s;
    Posterior2::new(mu, [[a, b], [b, d]])
}

fn random_trajectory<R: Rng>(rng: &mut R, ws: &Workspace, r: usize, n_t: usize) -> Vec<Vec<Point>> {
    let cells = ws.relay_cells();
    (0..n_t)
        .map(|_| {
            rand::seq::index::sample(rng, cells.len(), r)
                .into_iter()
                .map(|k| ws.center(cells[k]))
                .collect()
        })
        .collect()
}

fn min_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

fn check_psd() -> (bool, String) {
    let ws = Workspace::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    for (k, xi2) in [20.0, 0.0].into_iter().enumerate() {
        let prm = ChannelParams {
            sigma_xi2: xi2,
            ..ChannelParams::reference()
        };
        for _ in 0..10 {
            let (r, n) = (rng.random_range(1..=4), rng.random_range(1..=5));
            let cov = match build_joint_cov(&random_trajectory(&mut rng, &ws, r, n), &prm, &ws) {
                Ok(c) => c,
                Err(e) => return (false, e.to_string()),
            };
            let slack = min_eig(cov) - xi2;
            worst = worst.min(slack);
            if slack < -1e-8 {
                return (false, format!("case {k}: λ_min − σ_ξ² = {slack:.3e}"));
            }
        }
    }
    (true, format!("min λ_min − σ_ξ² = {worst:.3e}"))
}

fn check_kronecker() -> (bool, String) {
    let ws = Workspace::reference();
    let prm = ChannelParams::reference();
    let cells = [Cell::new(12, 3), Cell::new(13, 4), Cell::new(15, 20)];
    let pts: Vec<Point> = cells.iter().map(|c| ws.center(*c)).collect();
    let n_t = 4;
    let direct = match build_joint_cov(&vec![pts.clone(); n_t], &prm, &ws) {
        Ok(c) => c,
        Err(e) => return (false, e.to_string()),
    };
    let prior = build_grid_prior(&pts, &prm, &ws);
    let d = prior.cov.nrows();
    let mut err: f64 = 0.0;
    for k in 0..n_t {
        for l in 0..n_t {
            let lag = k.abs_diff(l) as i32;
            for i in 0..d {
                for j in 0..d {
                    let mut want = prior.phi.powi(lag) * prior.cov[(i, j)];
                    if k == l && i == j {
                        want += prm.sigma_xi2;
                    }
                    err = err.max((direct[(k * d + i, l * d + j)] - want).abs());
                }
            }
        }
    }
    (err <= 1e-10, format!("max abs diff {err:.3e}"))
}

fn check_mil() -> (bool, String) {
    let ws = Workspace::reference();
    let prm = ChannelParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut h = History::new(3, &prm, &ws);
    let mut traj = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..6 {
        let pos = random_trajectory(&mut rng, &ws, 3, 1).remove(0);
        let obs: Vec<f64> = (0..6).map(|_| rng.random_range(-50.0..-20.0)).collect();
        if let Err(e) = h.append(&pos, &obs) {
            return (false, e.to_string());
        }
        traj.push(pos);
        let dense = match build_joint_cov(&traj, &prm, &ws).map(|c| c.try_inverse()) {
            Ok(Some(inv)) => inv,
            _ => return (false, "dense inverse failed".into()),
        };
        worst = worst.max((h.inverse() - dense).amax());
    }
    (worst <= 1e-8, format!("max abs diff {worst:.3e}"))
}

fn check_quadrature() -> (bool, String) {
    let two = match gh_build(2) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let hand = (two.nodes[0] + 1.0).abs().max((two.nodes[1] - 1.0).abs())
        .max((two.weights[0] - 0.5).abs())
        .max((two.weights[1] - 0.5).abs());
    let ten = gh_build(10).expect("M = 10");
    let mut moment_err: f64 = 0.0;
    let mut dfact = 1.0;
    for k in 0..10 {
        if k > 0 {
            dfact *= (2 * k - 1) as f64;
        }
        moment_err = moment_err.max((ten.expect(|x| x.powi(2 * k)) - dfact).abs() / dfact);
    }
    let ok = hand <= 1e-12 && moment_err <= 1e-10;
    (ok, format!("M=2 dev {hand:.1e}, M=10 moment rel err {moment_err:.1e}"))
}

/// Log-normal moment by tensor Gauss–Hermite on the standardized pair.
fn moment_by_quadrature(post: &Posterior2, m: i32, n: i32, rho: f64) -> f64 {
    let rule = gh_build(40).expect("M = 40");
    let c = &post.cov;
    let l11 = c[(0, 0)].sqrt();
    let l21 = if l11 > 0.0 { c[(1, 0)] / l11 } else { 0.0 };
    let l22 = (c[(1, 1)] - l21 * l21).max(0.0).sqrt();
    let mut total = 0.0;
    for (z1, w1) in rule.nodes.iter().zip(&rule.weights) {
        for (z2, w2) in rule.nodes.iter().zip(&rule.weights) {
            let x1 = post.mu[0] + l11 * z1;
            let x2 = post.mu[1] + l21 * z1 + l22 * z2;
            total += w1 * w2 * (DB_AMPLITUDE * (m as f64 * x1 + n as f64 * x2)).exp();
        }
    }
    10f64.powf((m + n) as f64 * rho / 20.0) * total
}

fn check_moment_quadrature(hooks: &Hooks) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let post = random_posterior(&mut rng, 0.25, 3.0);
        for (m, n) in MOMENTS {
            let want = moment_by_quadrature(&post, m, n, 20.0);
            let got = (hooks.cond_moment)(&post, m, n, 20.0);
            worst = worst.max(((got - want) / want).abs());
        }
    }
    (worst <= 1e-8, format!("max rel err {worst:.3e}"))
}

fn check_jensen() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let r = RadioParams::reference();
    let mut bad = 0;
    for _ in 0..1000 {
        let post = random_posterior(&mut rng, 0.01, 60.0);
        if obj_h1(&post, &r, 20.0) > obj_h2(&post, &r, 20.0) {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} violations in 1000"))
}

fn random_snapshot<R: Rng>(rng: &mut R, n: usize) -> GainSnapshot {
    let f = (0..n).map(|_| 10f64.powf(rng.random_range(-1.5..1.0))).collect();
    let g = (0..n).map(|_| 10f64.powf(rng.random_range(-1.5..1.0))).collect();
    GainSnapshot::new(f, g).expect("valid gains")
}

fn check_beamform() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let r = RadioParams::reference();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let s = random_snapshot(&mut rng, n);
        let v = v_second_stage(&s, &r);
        let eig = match v_second_stage_eig(&s, &r) {
            Ok(x) => x,
            Err(e) => return (false, e.to_string()),
        };
        let w = optimal_weights(&s, &r);
        let achieved = sinr_of_weights(&w, &s, &r).unwrap_or(f64::NAN);
        worst = worst
            .max(((eig - v) / v).abs())
            .max(((achieved - v) / v).abs())
            .max(((relay_power(&w, &s, &r) - r.pc) / r.pc).abs());
    }
    (worst <= 1e-9, format!("max rel err {worst:.3e}"))
}

fn check_oracle_decision() -> (bool, String) {
    let ws = Workspace::reference();
    let prm = ChannelParams::reference();
    let radio = RadioParams::reference();
    let sampler = match GridSampler::for_relay_region(&prm, &ws) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let grid = sampler.sample(3, 16);
    let ctx = DecisionContext { prm: &prm, ws: &ws, radio: &radio, rule: None };
    let h = History::new(1, &prm, &ws);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for center in [Cell::new(12, 0), Cell::new(14, 15), Cell::new(17, 29)] {
        let fs = FeasibleSet::new(&ws, center, &[]);
        let got = match decide(PolicyKind::Oracle, &h, &fs, Some(&grid), 1, &ctx, &mut rng) {
            Ok(c) => c,
            Err(e) => return (false, e.to_string()),
        };
        let mut best = (fs.cells[0], f64::NEG_INFINITY);
        for c in &fs.cells {
            let v = realized_sinr(&grid, *c, 2, &prm, &ws, &radio).unwrap_or(f64::NAN);
            if v > best.1 {
                best = (*c, v);
            }
        }
        if got != best.0 {
            return (false, format!("from {center:?}: chose {got:?}, best {:?}", best.0));
        }
    }
    (true, "3 neighbourhoods".into())
}

fn mc_moment<R: Rng>(rng: &mut R, post: &Posterior2, m: i32, n: i32, rho: f64, samples: usize) -> f64 {
    let c = &post.cov;
    let l11 = c[(0, 0)].sqrt();
    let l21 = c[(1, 0)] / l11;
    let l22 = (c[(1, 1)] - l21 * l21).max(0.0).sqrt();
    let mut acc = 0.0;
    for _ in 0..samples {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let x1 = post.mu[0] + l11 * z1;
        let x2 = post.mu[1] + l21 * z1 + l22 * z2;
        acc += (DB_AMPLITUDE * (m as f64 * x1 + n as f64 * x2)).exp();
    }
    10f64.powf((m + n) as f64 * rho / 20.0) * acc / samples as f64
}

fn check_moment_mc(hooks: &Hooks) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let post = random_posterior(&mut rng, 0.25, 3.0);
        for (m, n) in MOMENTS {
            let want = mc_moment(&mut rng, &post, m, n, 20.0, 1_000_000);
            let got = (hooks.cond_moment)(&post, m, n, 20.0);
            worst = worst.max(((got - want) / want).abs());
        }
    }
    (worst <= 0.01, format!("max rel err {worst:.3e}"))
}

fn check_ar1() -> (bool, String) {
    let ws = Workspace::reference();
    let prm = ChannelParams {
        delta: 20.0,
        ..ChannelParams::reference()
    };
    let cells = vec![Cell::new(12, 10), Cell::new(12, 11), Cell::new(14, 12), Cell::new(16, 15), Cell::new(17, 20)];
    let pts: Vec<Point> = cells.iter().map(|c| ws.center(*c)).collect();
    let prior = build_grid_prior(&pts, &prm, &ws);
    let sampler = match GridSampler::new(cells.clone(), &prm, &ws) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let d = 2 * cells.len();
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut worst: f64 = 0.0;
    for lag in 0..=3usize {
        let mut prod = DMatrix::<f64>::zeros(d, d);
        let mut sq = DMatrix::<f64>::zeros(d, d);
        for _ in 0..n {
            let field = sampler.sample_with(lag + 1, &mut rng);
            let a = field.slot_shadow(1).expect("slot 1");
            let b = field.slot_shadow(lag + 1).expect("last slot");
            for i in 0..d {
                for j in 0..d {
                    let p = a[i] * b[j];
                    prod[(i, j)] += p;
                    sq[(i, j)] += p * p;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let mean = prod[(i, j)] / n as f64;
                let var = (sq[(i, j)] / n as f64 - mean * mean).max(0.0);
                let se = (var / n as f64).sqrt();
                let want = prior.phi.powi(lag as i32) * prior.cov[(i, j)];
                worst = worst.max((mean - want).abs() / se.max(1e-12));
            }
        }
    }
    // 400 entries at 4.5 standard errors keeps false alarms rare.
    (worst <= 4.5, format!("max |z| = {worst:.2}"))
}

fn check_expanse_mc() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let r = RadioParams::reference();
    let (a, b, c) = (r.sigma2 * r.sigma_d2 / (r.pc * r.p0), r.sigma2 / r.p0, r.sigma_d2 / r.pc);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let post = random_posterior(&mut rng, 0.25, 3.0);
        let cv = &post.cov;
        let l11 = cv[(0, 0)].sqrt();
        let l21 = cv[(1, 0)] / l11;
        let l22 = (cv[(1, 1)] - l21 * l21).max(0.0).sqrt();
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let f = 10f64.powf((20.0 + post.mu[0] + l11 * z1) / 20.0);
            let g = 10f64.powf((20.0 + post.mu[1] + l21 * z1 + l22 * z2) / 20.0);
            let v = c / (g * g) + b / (f * f) + a / (f * f * g * g);
            acc += v * v;
        }
        let want = acc / n as f64;
        let got = expected_v_ii_sq(&post, &r, 20.0);
        worst = worst.max(((got - want) / want).abs());
    }
    (worst <= 0.01, format!("max rel err {worst:.3e}"))
}

/// Runs the suite; `Full` adds the Monte-Carlo oracles.
pub fn run_checks(level: Level, hooks: &Hooks) -> Vec<Check> {
    type Job<'a> = (&'static str, Box<dyn Fn() -> (bool, String) + 'a>);
    let mut jobs: Vec<Job<'_>> = vec![
        ("joint covariance PSD", Box::new(check_psd)),
        ("AR(1) block structure", Box::new(check_kronecker)),
        ("recursive inverse", Box::new(check_mil)),
        ("Gauss-Hermite rule", Box::new(check_quadrature)),
        ("cond_moment vs quadrature", Box::new(|| check_moment_quadrature(hooks))),
        ("Jensen ordering", Box::new(check_jensen)),
        ("beamforming equivalence", Box::new(check_beamform)),
        ("oracle decision", Box::new(check_oracle_decision)),
    ];
    if level == Level::Full {
        jobs.push(("cond_moment vs Monte-Carlo", Box::new(|| check_moment_mc(hooks))));
        jobs.push(("AR(1) lag covariance", Box::new(check_ar1)));
        jobs.push(("E{V_II^2} vs Monte-Carlo", Box::new(check_expanse_mc)));
    }
    jobs.into_iter()
        .map(|(name, job)| {
            let start = Instant::now();
            let (passed, detail) = job();
            Check {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Prints the table and returns the exit code (0 iff every check passed).
pub fn cmd_validate<W: Write>(level: Level, hooks: &Hooks, out: &mut W) -> i32 {
    let checks = run_checks(level, hooks);
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        let _ = writeln!(
            out,
            "{:<width$}  {}  {:>7.2}s  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.seconds,
            c.detail
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        let _ = writeln!(out, "all {} checks passed", checks.len());
        0
    } else {
        let _ = writeln!(out, "failed: {}", failed.join(", "));
        1
    }
}
