//! Slot loop, Monte-Carlo trials and aggregation.
//!
//! A trial samples one channel realization over the relay region and runs
//! every configured policy on it from the same initial cells. Per slot `t`
//! each policy's relays
//!
//! 1. observe `F`, `G` at their cells,
//! 2. beamform, giving the realized SINR `V_t`,
//! 3. append the observations to their history,
//! 4. pick their cells for `t + 1` in relay index order.
//!
//! Randomness is split into independent ChaCha streams derived from the
//! base seed and the trial index, so a trial is reproducible on its own and
//! the result of an experiment does not depend on scheduling.

use std::collections::HashMap;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamform::{v_second_stage, GainSnapshot, RadioParams};
use crate::channel::{field_to_gain, Cell, ChannelParams, Endpoint, GridField, GridSampler, Point, Workspace};
use crate::error::{Error, Result};
use crate::gaussian::History;
use crate::policy::{argmax_cell, decide, score, DecisionContext, FeasibleSet, PolicyKind, PolicyName, DEFAULT_GH_M};
use crate::quadrature::{gh_build, GhRule};

/// Where the relays start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialCells {
    /// `"random"`: distinct relay-region cells drawn uniformly per trial.
    Random(RandomTag),
    /// Fixed points, one per relay, snapped to their cells.
    Points(Vec<Point>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomTag {
    Random,
}

impl InitialCells {
    pub fn random() -> Self {
        InitialCells::Random(RandomTag::Random)
    }
}

/// Motion failures: `count` relays, chosen uniformly, stop moving at a slot
/// drawn uniformly from `window` (inclusive) and keep beamforming from there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSpec {
    pub window: [usize; 2],
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub n_relays: usize,
    pub horizon: usize,
    pub initial_cells: InitialCells,
    pub policies: Vec<PolicyName>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_gh_m")]
    pub gh_m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failures: Option<FailureSpec>,
    /// Sliding-window cap on the retained history (slots).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_history: Option<usize>,
}

fn default_gh_m() -> usize {
    DEFAULT_GH_M
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub workspace: Workspace,
    pub channel: ChannelParams,
    pub radio: RadioParams,
    pub sim: RunSpec,
}

impl SimConfig {
    /// Eight relays, 40 slots, reference channel and radio, random starts,
    /// 500 trials of agnostic, H1, H2 and oracle control.
    pub fn reference() -> Self {
        SimConfig {
            workspace: Workspace::reference(),
            channel: ChannelParams::reference(),
            radio: RadioParams::reference(),
            sim: RunSpec {
                n_relays: 8,
                horizon: 40,
                initial_cells: InitialCells::random(),
                policies: vec![PolicyName::Agnostic, PolicyName::H1, PolicyName::H2, PolicyName::Oracle],
                trials: 500,
                seed: 2024,
                gh_m: DEFAULT_GH_M,
                failures: None,
                max_history: None,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        self.channel.validate(&self.workspace)?;
        self.radio.validate()?;
        let s = &self.sim;
        let bad = |msg: String| Err(Error::Config(msg));
        if s.n_relays == 0 {
            return bad("sim.n_relays must be at least 1".into());
        }
        if s.horizon == 0 {
            return bad("sim.horizon must be at least 1".into());
        }
        if s.trials == 0 {
            return bad("sim.trials must be at least 1".into());
        }
        if s.gh_m == 0 {
            return bad("sim.gh_m must be at least 1".into());
        }
        if s.policies.is_empty() {
            return bad("sim.policies must not be empty".into());
        }
        for (i, p) in s.policies.iter().enumerate() {
            if s.policies[..i].contains(p) {
                return bad(format!("sim.policies lists {p} twice"));
            }
        }
        if s.max_history == Some(0) {
            return bad("sim.max_history must be at least 1".into());
        }
        match &s.initial_cells {
            InitialCells::Random(_) => {
                let available = self.workspace.relay_cells().len();
                if s.n_relays > available {
                    return bad(format!(
                        "sim.n_relays = {} exceeds the {available} relay-region cells",
                        s.n_relays
                    ));
                }
            }
            InitialCells::Points(points) => {
                if points.len() != s.n_relays {
                    return bad(format!(
                        "sim.initial_cells has {} entries for {} relays",
                        points.len(),
                        s.n_relays
                    ));
                }
                let cells = self.fixed_cells(points)?;
                for (i, c) in cells.iter().enumerate() {
                    if cells[..i].contains(c) {
                        return bad(format!("sim.initial_cells[{i}] shares a cell with another relay"));
                    }
                }
            }
        }
        if let Some(f) = s.failures {
            if f.window[0] < 1 || f.window[0] > f.window[1] || f.window[1] > s.horizon {
                return bad(format!(
                    "sim.failures.window {:?} must satisfy 1 <= a <= b <= horizon = {}",
                    f.window, s.horizon
                ));
            }
            if f.count > s.n_relays {
                return bad(format!(
                    "sim.failures.count = {} exceeds n_relays = {}",
                    f.count, s.n_relays
                ));
            }
        }
        Ok(())
    }

    fn fixed_cells(&self, points: &[Point]) -> Result<Vec<Cell>> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.workspace
                    .cell_of(*p)
                    .filter(|c| self.workspace.in_relay_region(*c))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "sim.initial_cells[{i}] = ({}, {}) is outside the relay region",
                            p.x, p.y
                        ))
                    })
            })
            .collect()
    }
}

/// Seed of trial `index` under `base`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finalizer over a combined word
    let mut z = base ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_FIELD: u64 = 0;
const STREAM_PLACEMENT: u64 = 1;
const STREAM_FAILURE: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn policy_stream(seed: u64, p: PolicyName) -> ChaCha8Rng {
    stream(seed, 16 + p as u64)
}

/// Failure draw of one trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureDraw {
    /// Failing relays, ascending.
    pub relays: Vec<usize>,
    /// First slot at which they no longer move.
    pub slot: usize,
}

/// One policy's run within a trial.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTrace {
    pub policy: PolicyName,
    /// Realized `V_t` (linear) for `t = 1..=N_T`.
    pub sinr: Vec<f64>,
    /// Relay cells per slot.
    pub cells: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub index: usize,
    pub seed: u64,
    pub initial: Vec<Cell>,
    pub failure: Option<FailureDraw>,
    pub traces: Vec<PolicyTrace>,
}

/// Mutable state of one policy inside a trial.
#[derive(Clone, Debug)]
pub struct PolicyState {
    pub policy: PolicyName,
    pub kind: PolicyKind,
    pub cells: Vec<Cell>,
    pub history: History,
    pub failure: Option<FailureDraw>,
    pub rng: ChaCha8Rng,
    pub trace: PolicyTrace,
}

impl PolicyState {
    pub fn new(
        policy: PolicyName,
        cfg: &SimConfig,
        initial: &[Cell],
        failure: Option<FailureDraw>,
        rng: ChaCha8Rng,
    ) -> Self {
        let mut history = History::new(initial.len(), &cfg.channel, &cfg.workspace);
        if let Some(cap) = cfg.sim.max_history {
            history = history.with_max_slots(cap);
        }
        PolicyState {
            policy,
            kind: policy.kind(cfg.sim.gh_m),
            cells: initial.to_vec(),
            history,
            failure,
            rng,
            trace: PolicyTrace {
                policy,
                sinr: Vec::new(),
                cells: Vec::new(),
            },
        }
    }

    fn halted(&self, relay: usize, t: usize) -> bool {
        self.failure
            .as_ref()
            .is_some_and(|f| t >= f.slot && f.relays.contains(&relay))
    }
}

/// Read-only inputs shared by all slots of a trial.
#[derive(Clone, Copy, Debug)]
pub struct SlotContext<'a> {
    pub cfg: &'a SimConfig,
    pub grid: &'a GridField,
    pub rule: Option<&'a GhRule>,
}

/// Feasible set of relay `i` given the cells already claimed by relays
/// `0..i` for the next slot and the current cells of relays `i+1..`.
pub fn feasible_for(ws: &Workspace, current: &[Cell], claimed: &[Cell], i: usize) -> FeasibleSet {
    let blocked: Vec<Cell> = claimed.iter().chain(&current[i + 1..]).copied().collect();
    FeasibleSet::new(ws, current[i], &blocked)
}

/// Observe, beamform, record and (for `t < N_T`) move to slot `t + 1`.
pub fn run_slot(state: &mut PolicyState, t: usize, ctx: &SlotContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let (ws, prm) = (&cfg.workspace, &cfg.channel);
    let r = state.cells.len();
    let mut obs = vec![0.0; 2 * r];
    for (i, c) in state.cells.iter().enumerate() {
        obs[i] = ctx.grid.eval(ws, prm, *c, t, Endpoint::Source)?;
        obs[r + i] = ctx.grid.eval(ws, prm, *c, t, Endpoint::Destination)?;
    }
    let f = obs[..r].iter().map(|v| field_to_gain(*v, prm.rho)).collect();
    let g = obs[r..].iter().map(|v| field_to_gain(*v, prm.rho)).collect();
    let v = v_second_stage(&GainSnapshot::new(f, g)?, &cfg.radio);
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Numerical(format!("non-positive SINR {v} at slot {t}")));
    }
    state.trace.sinr.push(v);
    state.trace.cells.push(state.cells.clone());

    if t >= cfg.sim.horizon {
        return Ok(());
    }
    if state.kind.is_predictive() {
        let points: Vec<Point> = state.cells.iter().map(|c| ws.center(*c)).collect();
        state.history.append(&points, &obs)?;
    }

    let dctx = DecisionContext {
        prm,
        ws,
        radio: &cfg.radio,
        rule: ctx.rule,
    };
    // Every relay scores cells with the same function of the shared history,
    // so the objective is evaluated once per distinct candidate cell.
    let mut scores: HashMap<Cell, f64> = HashMap::new();
    if state.kind.is_predictive() {
        let mut candidates: Vec<Cell> = state.cells.iter().flat_map(|c| ws.neighborhood(*c)).collect();
        candidates.sort();
        candidates.dedup();
        let points: Vec<Point> = candidates.iter().map(|c| ws.center(*c)).collect();
        for (c, post) in candidates.iter().zip(state.history.predict_many(&points)) {
            scores.insert(*c, score(state.kind, &post, &dctx)?);
        }
    }

    let mut claimed = Vec::with_capacity(r);
    for i in 0..r {
        let next = if state.halted(i, t) {
            state.cells[i]
        } else {
            let fs = feasible_for(ws, &state.cells, &claimed, i);
            if state.kind.is_predictive() {
                argmax_cell(&fs.cells, |c| scores[&c]).expect("feasible set is never empty")
            } else {
                decide(state.kind, &state.history, &fs, Some(ctx.grid), t, &dctx, &mut state.rng)?
            }
        };
        claimed.push(next);
    }
    state.cells = claimed;
    Ok(())
}

fn draw_initial(cfg: &SimConfig, seed: u64) -> Result<Vec<Cell>> {
    match &cfg.sim.initial_cells {
        InitialCells::Points(points) => cfg.fixed_cells(points),
        InitialCells::Random(_) => {
            let all = cfg.workspace.relay_cells();
            let mut rng = stream(seed, STREAM_PLACEMENT);
            Ok(sample_indices(&mut rng, all.len(), cfg.sim.n_relays)
                .into_iter()
                .map(|k| all[k])
                .collect())
        }
    }
}

fn draw_failure(cfg: &SimConfig, seed: u64) -> Option<FailureDraw> {
    let spec = cfg.sim.failures?;
    if spec.count == 0 {
        return None;
    }
    let mut rng = stream(seed, STREAM_FAILURE);
    let mut relays = sample_indices(&mut rng, cfg.sim.n_relays, spec.count).into_vec();
    relays.sort_unstable();
    let slot = rng.random_range(spec.window[0]..=spec.window[1]);
    Some(FailureDraw { relays, slot })
}

/// Runs trial `index` with a prebuilt sampler.
pub fn run_trial_with(cfg: &SimConfig, index: usize, sampler: &GridSampler, rule: Option<&GhRule>) -> Result<TrialResult> {
    let seed = trial_seed(cfg.sim.seed, index);
    let grid = sampler.sample_with(cfg.sim.horizon, &mut stream(seed, STREAM_FIELD));
    let initial = draw_initial(cfg, seed)?;
    let failure = draw_failure(cfg, seed);
    let ctx = SlotContext { cfg, grid: &grid, rule };
    let mut traces = Vec::with_capacity(cfg.sim.policies.len());
    for p in &cfg.sim.policies {
        let mut state = PolicyState::new(*p, cfg, &initial, failure.clone(), policy_stream(seed, *p));
        for t in 1..=cfg.sim.horizon {
            run_slot(&mut state, t, &ctx)?;
        }
        traces.push(state.trace);
    }
    Ok(TrialResult {
        index,
        seed,
        initial,
        failure,
        traces,
    })
}

fn sampler_and_rule(cfg: &SimConfig) -> Result<(GridSampler, Option<GhRule>)> {
    let sampler = GridSampler::for_relay_region(&cfg.channel, &cfg.workspace)?;
    let rule = if cfg.sim.policies.contains(&PolicyName::Gh) {
        Some(gh_build(cfg.sim.gh_m)?)
    } else {
        None
    };
    Ok((sampler, rule))
}

/// Runs a single trial from scratch.
pub fn run_trial(cfg: &SimConfig, index: usize) -> Result<TrialResult> {
    cfg.validate()?;
    let (sampler, rule) = sampler_and_rule(cfg)?;
    run_trial_with(cfg, index, &sampler, rule.as_ref())
}

/// All trials, in index order, plus their aggregate.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub trials: Vec<TrialResult>,
    pub aggregate: Aggregate,
}

/// Runs every trial on the current rayon pool.
pub fn run_experiment(cfg: &SimConfig) -> Result<Experiment> {
    cfg.validate()?;
    let (sampler, rule) = sampler_and_rule(cfg)?;
    let trials = (0..cfg.sim.trials)
        .into_par_iter()
        .map(|k| run_trial_with(cfg, k, &sampler, rule.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = Aggregate::from_trials(&cfg.sim.policies, &trials);
    Ok(Experiment { trials, aggregate })
}

/// Per-slot statistics of one policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotStats {
    pub t: usize,
    /// `10·log10` of the mean linear SINR.
    pub mean_sinr_db: f64,
    pub mean_db_of_trials: f64,
    /// Sample standard deviation of the per-trial dB values.
    pub std_db: f64,
    pub n_trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub policies: Vec<PolicyName>,
    /// Indexed like `policies`, then by slot.
    pub stats: Vec<Vec<SlotStats>>,
}

pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

impl Aggregate {
    /// Sums run in trial order, so the result only depends on the trials.
    pub fn from_trials(policies: &[PolicyName], trials: &[TrialResult]) -> Self {
        let stats = policies
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let runs: Vec<&PolicyTrace> = trials.iter().map(|tr| &tr.traces[k]).collect();
                debug_assert!(runs.iter().all(|r| r.policy == *p));
                let horizon = runs.first().map_or(0, |r| r.sinr.len());
                (0..horizon)
                    .map(|s| {
                        let n = runs.len();
                        let nf = n as f64;
                        let lin = runs.iter().map(|r| r.sinr[s]).sum::<f64>() / nf;
                        let dbs: Vec<f64> = runs.iter().map(|r| to_db(r.sinr[s])).collect();
                        let mean_db = dbs.iter().sum::<f64>() / nf;
                        let std_db = if n > 1 {
                            (dbs.iter().map(|d| (d - mean_db).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
                        } else {
                            0.0
                        };
                        SlotStats {
                            t: s + 1,
                            mean_sinr_db: to_db(lin),
                            mean_db_of_trials: mean_db,
                            std_db,
                            n_trials: n,
                        }
                    })
                    .collect()
            })
            .collect();
        Aggregate {
            policies: policies.to_vec(),
            stats,
        }
    }

    pub fn policy(&self, p: PolicyName) -> Option<&[SlotStats]> {
        self.policies.iter().position(|q| *q == p).map(|k| self.stats[k].as_slice())
    }
}
