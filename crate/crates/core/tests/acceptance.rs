//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; pass criterion numbers as
//! arguments (`cargo test --test acceptance -- 3 7`) to run a subset.
//! `RELAYSIM_ACCEPTANCE_TRIALS` sets the trial count of the headline
//! experiment (default 2000).

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use relaysim::beamform::{optimal_weights, v_second_stage, v_second_stage_eig, GainSnapshot, RadioParams};
use relaysim::channel::{build_joint_cov, field_to_gain, Cell, ChannelParams, GridSampler, Point, Workspace};
use relaysim::cli::cmd_simulate;
use relaysim::gaussian::{cond_moment, History, Posterior2};
use relaysim::policy::{obj_gh, obj_h1, obj_h2, PolicyName};
use relaysim::quadrature::gh_build;
use relaysim::sim::{run_experiment, Experiment, FailureSpec, SimConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

// ---------------------------------------------------------------- helpers

fn posterior<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Posterior2 {
    let mu = [rng.random_range(-50.0..-25.0), rng.random_range(-50.0..-25.0)];
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (l1, l2) = (rng.random_range(lo..hi), rng.random_range(lo..hi));
    let (c, s) = (th.cos(), th.sin());
    let b = (l1 - l2) * c * s;
    Posterior2::new(mu, [[l1 * c * c + l2 * s * s, b], [b, l1 * s * s + l2 * c * c]])
}

fn chol2(p: &Posterior2) -> (f64, f64, f64) {
    let c = p.cov;
    let l11 = c[(0, 0)].sqrt();
    let l21 = c[(1, 0)] / l11;
    (l11, l21, (c[(1, 1)] - l21 * l21).max(0.0).sqrt())
}

fn admissible_slot<R: Rng>(rng: &mut R, r: usize, eps: f64) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::with_capacity(r);
    while pts.len() < r {
        let p = Point::new(rng.random_range(0.0..30.0), rng.random_range(12.0..18.0));
        if pts.iter().all(|q| q.distance(&p) >= eps) {
            pts.push(p);
        }
    }
    pts
}

/// Covariance of `[σ_S, σ_D]`-ordered log fields straight from the kernel
/// definitions.
fn kernel_cov(traj: &[Vec<Point>], prm: &ChannelParams, ws: &Workspace) -> DMatrix<f64> {
    let r = traj[0].len();
    let n = 2 * r * traj.len();
    let kappa = (-ws.p_s.distance(&ws.p_d) / prm.delta).exp();
    let locate = |idx: usize| {
        let slot = idx / (2 * r);
        let within = idx % (2 * r);
        (slot, within / r, within % r)
    };
    DMatrix::from_fn(n, n, |a, b| {
        let (k, ea, i) = locate(a);
        let (l, eb, j) = locate(b);
        let (p, q) = (traj[k][i], traj[l][j]);
        let d = p.distance(&q);
        let mut v = prm.eta2 * (-d / prm.beta - (k as f64 - l as f64).abs() / prm.gamma).exp();
        if ea != eb {
            v *= kappa;
        }
        if k == l && ea == eb {
            let rr = d / prm.eps_mf;
            if rr < 1.0 {
                v += prm.sigma_xi2 * (1.0 - 1.5 * rr + 0.5 * rr.powi(3));
            }
        }
        v
    })
}

fn lambda_min(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Standard error of `10·log10(mean x) − 10·log10(mean y)` for paired
/// samples, by the delta method.
fn paired_db_se(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a / mx - b / my).collect();
    let md = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - md).powi(2)).sum::<f64>() / (n - 1.0);
    10.0 / std::f64::consts::LN_10 * (var / n).sqrt()
}

fn db_of_mean(x: &[f64]) -> f64 {
    10.0 * (x.iter().sum::<f64>() / x.len() as f64).log10()
}

fn slot_values(ex: &Experiment, k: usize, s: usize) -> Vec<f64> {
    ex.trials.iter().map(|t| t.traces[k].sinr[s]).collect()
}

// ---------------------------------------------------------------- criteria

fn c1_psd() -> Outcome {
    let start = Instant::now();
    let ws = Workspace::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = [f64::INFINITY; 2];
    for (k, xi2) in [20.0, 0.0].into_iter().enumerate() {
        let prm = ChannelParams { sigma_xi2: xi2, ..ChannelParams::reference() };
        for _ in 0..200 {
            let (r, n_t) = (rng.random_range(1..=8), rng.random_range(1..=10));
            let traj: Vec<Vec<Point>> = (0..n_t).map(|_| admissible_slot(&mut rng, r, prm.eps_mf)).collect();
            let cov = build_joint_cov(&traj, &prm, &ws).expect("admissible");
            worst[k] = worst[k].min(lambda_min(cov) - xi2);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst[0] >= -1e-8 && worst[1] >= -1e-8 && secs < 30.0,
        format!(
            "min(λ_min − σ_ξ²) = {:.3e} (σ_ξ²=20), {:.3e} (σ_ξ²=0); {secs:.1}s",
            worst[0], worst[1]
        ),
    )
}

fn c2_markov() -> Outcome {
    let ws = Workspace::reference();
    let prm = ChannelParams { delta: 20.0, ..ChannelParams::reference() };
    let cells = vec![Cell::new(12, 8), Cell::new(13, 9), Cell::new(14, 14), Cell::new(16, 15), Cell::new(17, 22)];
    let pts: Vec<Point> = cells.iter().map(|c| ws.center(*c)).collect();
    let n = cells.len();
    let d = 2 * n;
    let kappa = (-ws.p_s.distance(&ws.p_d) / prm.delta).exp();
    let stationary = DMatrix::from_fn(d, d, |a, b| {
        let v = prm.eta2 * (-pts[a % n].distance(&pts[b % n]) / prm.beta).exp();
        if (a < n) == (b < n) { v } else { v * kappa }
    });

    let sampler = GridSampler::new(cells.clone(), &prm, &ws).expect("sampler");
    let samples = 100_000;
    let max_lag = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut sum = vec![DMatrix::<f64>::zeros(d, d); max_lag + 1];
    let mut sq = vec![DMatrix::<f64>::zeros(d, d); max_lag + 1];
    for _ in 0..samples {
        let field = sampler.sample_with(max_lag + 1, &mut rng);
        let x0 = field.slot_shadow(1).unwrap();
        for lag in 0..=max_lag {
            let xl = field.slot_shadow(lag + 1).unwrap();
            for a in 0..d {
                for b in 0..d {
                    let p = x0[a] * xl[b];
                    sum[lag][(a, b)] += p;
                    sq[lag][(a, b)] += p * p;
                }
            }
        }
    }
    let nf = samples as f64;
    let mut worst_z: f64 = 0.0;
    let mut outside = 0;
    let mut total = 0;
    for lag in 0..=max_lag {
        let decay = (-(lag as f64) / prm.gamma).exp();
        for a in 0..d {
            for b in 0..d {
                let mean = sum[lag][(a, b)] / nf;
                let se = ((sq[lag][(a, b)] / nf - mean * mean) / nf).sqrt();
                let z = (mean - decay * stationary[(a, b)]).abs() / se;
                worst_z = worst_z.max(z);
                total += 1;
                if z > 3.0 {
                    outside += 1;
                }
            }
        }
    }

    let n_t = 6;
    let direct = build_joint_cov(&vec![pts.clone(); n_t], &prm, &ws).expect("admissible");
    let phi = (-1.0 / prm.gamma).exp();
    let mut block_err: f64 = 0.0;
    for k in 0..n_t {
        for l in 0..n_t {
            for a in 0..d {
                for b in 0..d {
                    let mut want = phi.powi(k.abs_diff(l) as i32) * stationary[(a, b)];
                    if k == l && a == b {
                        want += prm.sigma_xi2;
                    }
                    block_err = block_err.max((direct[(k * d + a, l * d + b)] - want).abs());
                }
            }
        }
    }
    outcome(
        outside == 0 && block_err <= 1e-10,
        format!(
            "{outside}/{total} entries beyond 3 SE (max |z| = {worst_z:.2}); block construction max abs diff {block_err:.2e}"
        ),
    )
}

fn c3_moments() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let rho = 20.0;
    let moments = [(-2, 0), (0, -2), (-2, -2), (-4, -4), (2, 2)];
    let samples = 1_000_000;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let post = posterior(&mut rng, 0.25, 3.0);
        let (l11, l21, l22) = chol2(&post);
        let mut acc = [0.0; 5];
        for _ in 0..samples {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let f = 10f64.powf((rho + post.mu[0] + l11 * z1) / 20.0);
            let g = 10f64.powf((rho + post.mu[1] + l21 * z1 + l22 * z2) / 20.0);
            for (k, (m, n)) in moments.iter().enumerate() {
                acc[k] += f.powi(*m) * g.powi(*n);
            }
        }
        for (k, (m, n)) in moments.iter().enumerate() {
            let mc = acc[k] / samples as f64;
            worst = worst.max(((cond_moment(&post, *m, *n, rho) - mc) / mc).abs());
        }
    }
    outcome(worst <= 0.01, format!("max relative deviation {worst:.2e} over 20 posteriors x 5 moments"))
}

fn trapezoid_sinr(post: &Posterior2, r: &RadioParams, rho: f64) -> f64 {
    let (l11, l21, l22) = chol2(post);
    let n = 1601;
    let h = 16.0 / (n - 1) as f64;
    let edge = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut acc = 0.0;
    for i in 0..n {
        let z1 = -8.0 + h * i as f64;
        let g1 = (-0.5 * z1 * z1).exp() * edge(i);
        for j in 0..n {
            let z2 = -8.0 + h * j as f64;
            let f = field_to_gain(post.mu[0] + l11 * z1, rho);
            let g = field_to_gain(post.mu[1] + l21 * z1 + l22 * z2, rho);
            let (f2, g2) = (f * f, g * g);
            let v = r.pc * r.p0 * f2 * g2 / (r.p0 * r.sigma_d2 * f2 + r.pc * r.sigma2 * g2 + r.sigma2 * r.sigma_d2);
            acc += g1 * (-0.5 * z2 * z2).exp() * edge(j) * v;
        }
    }
    acc * h * h / (2.0 * std::f64::consts::PI)
}

fn c4_quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let r = RadioParams::reference();
    let rule = gh_build(30).expect("rule");
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let post = posterior(&mut rng, 5.0, 70.0);
        let want = trapezoid_sinr(&post, &r, 20.0);
        worst = worst.max(((obj_gh(&post, &rule, &r, 20.0) - want) / want).abs());
    }
    let two = gh_build(2).expect("rule");
    let hand = (two.nodes[0] + 1.0).abs() + (two.nodes[1] - 1.0).abs()
        + (two.weights[0] - 0.5).abs()
        + (two.weights[1] - 0.5).abs();
    outcome(
        worst <= 1e-6 && hand <= 1e-12,
        format!("max relative error {worst:.2e} (posterior variances 5..70 dB²); M=2 deviation {hand:.1e}"),
    )
}

fn c5_beamform() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let r = RadioParams::reference();
    let mut worst_eig: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let f: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
        let g: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
        let s = GainSnapshot::new(f.clone(), g.clone()).unwrap();
        let v = v_second_stage(&s, &r);

        // λ_max of K⁻¹·P0·h̃h̃ᵀ is rank one: P0·h̃ᵀK⁻¹h̃.
        let dsq: Vec<f64> = f.iter().map(|x| (r.p0 * x * x + r.sigma2).sqrt()).collect();
        let ht = DVector::from_fn(n, |i, _| f[i] * g[i] / dsq[i]);
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j { r.sigma_d2 + r.pc * r.sigma2 * g[i] * g[i] / (dsq[i] * dsq[i]) } else { 0.0 }
        });
        let sol = k.lu().solve(&ht).unwrap();
        let lam = r.pc * r.p0 * ht.dot(&sol);
        let eig = v_second_stage_eig(&s, &r).unwrap();
        worst_eig = worst_eig.max(((v - lam) / lam).abs()).max(((eig - lam) / lam).abs());

        let w = optimal_weights(&s, &r);
        let coherent: f64 = (0..n).map(|i| w[i] * f[i] * g[i]).sum();
        let noise: f64 = (0..n).map(|i| r.sigma2 * w[i] * w[i] * g[i] * g[i]).sum();
        let achieved = r.p0 * coherent * coherent / (r.sigma_d2 + noise);
        let power: f64 = (0..n).map(|i| w[i] * w[i] * (r.p0 * f[i] * f[i] + r.sigma2)).sum();
        worst_w = worst_w.max(((achieved - v) / v).abs()).max(((power - r.pc) / r.pc).abs());
    }
    outcome(
        worst_eig <= 1e-9 && worst_w <= 1e-9,
        format!("closed form vs λ_max: {worst_eig:.2e}; weights (SINR and power): {worst_w:.2e}"),
    )
}

fn c6_mil() -> Outcome {
    let ws = Workspace::reference();
    let prm = ChannelParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut h = History::new(4, &prm, &ws);
    let mut traj = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let slot = admissible_slot(&mut rng, 4, prm.eps_mf);
        let obs: Vec<f64> = (0..8).map(|_| rng.random_range(-60.0..-20.0)).collect();
        h.append(&slot, &obs).unwrap();
        traj.push(slot);
        let dense = kernel_cov(&traj, &prm, &ws).try_inverse().unwrap();
        worst = worst.max((h.inverse() - dense).amax());
    }
    outcome(worst <= 1e-8, format!("max abs deviation {worst:.2e} over 10 appends"))
}

fn c7_jensen() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let r = RadioParams::reference();
    let mut violations = 0;
    for _ in 0..10_000 {
        let post = posterior(&mut rng, 0.01, 80.0);
        if obj_h1(&post, &r, 20.0) > obj_h2(&post, &r, 20.0) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations in 10^4 posteriors"))
}

fn headline_trials() -> usize {
    std::env::var("RELAYSIM_ACCEPTANCE_TRIALS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(2000)
}

fn headline() -> (Experiment, f64) {
    let mut cfg = SimConfig::reference();
    cfg.sim.trials = headline_trials();
    let start = Instant::now();
    let ex = run_experiment(&cfg).expect("headline experiment");
    (ex, start.elapsed().as_secs_f64())
}

fn c8_headline(ex: &Experiment, secs: f64) -> Outcome {
    let agg = &ex.aggregate;
    let pos = |p: PolicyName| agg.policies.iter().position(|q| *q == p).unwrap();
    let (ka, k1, k2, ko) = (pos(PolicyName::Agnostic), pos(PolicyName::H1), pos(PolicyName::H2), pos(PolicyName::Oracle));
    let mean = |k: usize, s: usize| agg.stats[k][s].mean_sinr_db;
    let horizon = agg.stats[ka].len();

    let agn: Vec<f64> = (0..horizon).map(|s| mean(ka, s)).collect();
    let agn_lo = agn.iter().cloned().fold(f64::INFINITY, f64::min);
    let agn_hi = agn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let a_ok = agn.iter().all(|v| (v - 4.0).abs() <= 1.5);

    let min_gap = (9..horizon).map(|s| mean(k2, s) - mean(ka, s)).fold(f64::INFINITY, f64::min);
    let b_ok = min_gap >= 2.0;

    let mut c_viol = 0;
    let mut gaps = Vec::with_capacity(horizon);
    for s in 0..horizon {
        let gap = mean(k2, s) - mean(k1, s);
        gaps.push(gap);
        if s > 0 && gap < -2.0 * paired_db_se(&slot_values(ex, k2, s), &slot_values(ex, k1, s)) {
            c_viol += 1;
        }
    }
    let early = gaps[1..13].iter().sum::<f64>() / 12.0;
    let late = gaps[horizon - 12..].iter().sum::<f64>() / 12.0;
    let c_ok = c_viol == 0 && late <= early;

    let mut d_viol = 0;
    for s in 1..horizon {
        for k in [ka, k1, k2] {
            if mean(ko, s) < mean(k, s) {
                d_viol += 1;
            }
        }
    }
    let d_ok = d_viol == 0;
    let flag = |b: bool| if b { "ok" } else { "FAIL" };
    outcome(
        a_ok && b_ok && c_ok && d_ok,
        format!(
            "{} trials in {secs:.0}s | (a) {}: agnostic {agn_lo:.2}..{agn_hi:.2} dB | (b) {}: min H2−agnostic gap at t≥10 {min_gap:.2} dB \
             | (c) {}: H1>H2 beyond 2 SE at {c_viol} slots, mean H2−H1 gap early {early:.2} / late {late:.2} dB \
             | (d) {}: oracle below another policy at {d_viol} slot(s)",
            ex.trials.len(),
            flag(a_ok),
            flag(b_ok),
            flag(c_ok),
            flag(d_ok)
        ),
    )
}

fn c9_monotone(ex: &Experiment) -> Outcome {
    let h2 = ex.aggregate.policy(PolicyName::H2).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0;
    for s in 2..h2.len() {
        let drop = h2[s - 1].mean_sinr_db - h2[s].mean_sinr_db;
        if drop > worst {
            worst = drop;
            at = s + 1;
        }
    }
    outcome(worst <= 0.5, format!("largest H2 slot-to-slot drop {worst:.2} dB (t = {at})"))
}

fn c10_failures() -> Outcome {
    let counts = [0usize, 1, 3, 5];
    let horizon = 20;
    let window = [5, 6];
    let trials = 1000;
    let mut rate = [0.0; 2];
    let mut ordered = true;
    let mut notes = Vec::new();
    let mut max_drop: f64 = 0.0;
    for (gi, gamma) in [5.0, 15.0].into_iter().enumerate() {
        let mut finals = Vec::new();
        let mut per_count_rate = Vec::new();
        for count in counts {
            let mut cfg = SimConfig::reference();
            cfg.channel.gamma = gamma;
            cfg.sim.horizon = horizon;
            cfg.sim.trials = trials;
            cfg.sim.policies = vec![PolicyName::H2];
            cfg.sim.failures = Some(FailureSpec { window, count });
            let ex = run_experiment(&cfg).expect("failure experiment");
            let st = &ex.aggregate.stats[0];
            for s in 1..horizon {
                max_drop = max_drop.max(st[s - 1].mean_sinr_db - st[s].mean_sinr_db);
            }
            if count > 0 {
                let end = window[1];
                let r = -(st[horizon - 1].mean_sinr_db - st[end - 1].mean_sinr_db) / (horizon - end) as f64;
                per_count_rate.push(r);
            }
            finals.push(slot_values(&ex, 0, horizon - 1));
        }
        for k in 1..counts.len() {
            let diff = db_of_mean(&finals[k]) - db_of_mean(&finals[k - 1]);
            let se = paired_db_se(&finals[k], &finals[k - 1]);
            if diff > 2.0 * se {
                ordered = false;
            }
        }
        rate[gi] = per_count_rate.iter().sum::<f64>() / per_count_rate.len() as f64;
        notes.push(format!(
            "γ={gamma}: final means {} dB",
            finals.iter().map(|f| format!("{:.2}", db_of_mean(f))).collect::<Vec<_>>().join("/")
        ));
    }
    outcome(
        ordered && rate[1] < rate[0],
        format!(
            "{}; ordered within 2 SE: {ordered}; post-failure decrease per slot γ=5 {:.3} vs γ=15 {:.3} dB; largest slot drop {max_drop:.2} dB",
            notes.join("; "),
            rate[0],
            rate[1]
        ),
    )
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::reference();
    cfg.sim.trials = 12;
    cfg.sim.horizon = 10;
    cfg.sim.policies = vec![PolicyName::Agnostic, PolicyName::H1, PolicyName::H2, PolicyName::Gh, PolicyName::Oracle];
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    cmd_simulate(&path, &a, &[], 0, None).unwrap();
    cmd_simulate(&a.join("manifest.json"), &b, &[], 1, None).unwrap();
    let same = ["qos.csv", "trajectories.csv"]
        .iter()
        .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    outcome(same, "qos.csv and trajectories.csv byte-identical on re-run from manifest".into())
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let names = [
        "",
        "joint covariance PSD bound",
        "Markov (AR(1)) equivalence",
        "conditional moment formula vs Monte-Carlo",
        "Gauss-Hermite objective vs dense integration",
        "beamforming closed form vs eigenvalue form",
        "recursive inverse vs dense inverse",
        "Jensen ordering H1 <= H2",
        "headline reproduction",
        "quasi-monotone H2 curve",
        "motion-failure behaviour",
        "determinism",
    ];
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        println!("[{}] {k:>2} {}: {}", if o.passed { "PASS" } else { "FAIL" }, names[k], o.detail);
        results.push((k, o));
    };
    let simple: [(usize, fn() -> Outcome); 7] = [
        (1, c1_psd),
        (2, c2_markov),
        (3, c3_moments),
        (4, c4_quadrature),
        (5, c5_beamform),
        (6, c6_mil),
        (7, c7_jensen),
    ];
    for (k, f) in simple {
        if run(k) {
            report(k, f());
        }
    }
    if run(8) || run(9) {
        let (ex, secs) = headline();
        if run(8) {
            report(8, c8_headline(&ex, secs));
        }
        if run(9) {
            report(9, c9_monotone(&ex));
        }
    }
    if run(10) {
        report(10, c10_failures());
    }
    if run(11) {
        report(11, c11_determinism());
    }
    let failed: Vec<String> = results.iter().filter(|(_, o)| !o.passed).map(|(k, _)| k.to_string()).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
