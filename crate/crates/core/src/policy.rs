//! Per-relay decision rules for the next slot's position.
//!
//! Every predictive rule scores a candidate cell by an approximation of the
//! expected SINR contribution `E{V_I(p, t+1) | history}` of a relay placed
//! there, where
//!
//! ```text
//! V_I  = 1 / V_II,
//! V_II = (σ_D²/P_c)|g|⁻² + (σ²/P_0)|f|⁻² + (σ²σ_D²/(P_c P_0))|f|⁻²|g|⁻²
//! ```
//!
//! * [`obj_h1`]: first-order statistical differentials, `1 / E{V_II}`;
//! * [`obj_h2`]: second order, `E{V_II²} / E{V_II}³`;
//! * [`obj_gh`]: a tensor Gauss–Hermite rule applied to `V_I` itself.
//!
//! All three reduce to closed-form moments of the predicted log-normal
//! pair, so a decision only needs [`History::predict`] at the (at most nine)
//! candidate cells.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beamform::{relay_sinr, RadioParams};
use crate::channel::{field_to_gain, Cell, ChannelParams, Endpoint, GridField, Workspace};
use crate::error::{Error, Result};
use crate::gaussian::{cond_moment, sqrt2x2, History, Posterior2};
use crate::quadrature::{gh_build, GhRule};

/// Default Gauss–Hermite resolution.
pub const DEFAULT_GH_M: usize = 30;

/// Policy names as they appear in configuration files and CSV output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Agnostic,
    H1,
    H2,
    Gh,
    Oracle,
    Stay,
}

impl PolicyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyName::Agnostic => "agnostic",
            PolicyName::H1 => "h1",
            PolicyName::H2 => "h2",
            PolicyName::Gh => "gh",
            PolicyName::Oracle => "oracle",
            PolicyName::Stay => "stay",
        }
    }

    pub fn kind(&self, gh_m: usize) -> PolicyKind {
        match self {
            PolicyName::Agnostic => PolicyKind::Agnostic,
            PolicyName::H1 => PolicyKind::H1,
            PolicyName::H2 => PolicyKind::H2,
            PolicyName::Gh => PolicyKind::GaussHermite(gh_m),
            PolicyName::Oracle => PolicyKind::Oracle,
            PolicyName::Stay => PolicyKind::Stay,
        }
    }
}

impl std::fmt::Display for PolicyName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    H1,
    H2,
    GaussHermite(usize),
    /// Uniformly random feasible cell, ignoring all observations.
    Agnostic,
    /// Non-causal: reads the realized next-slot field.
    Oracle,
    Stay,
}

impl PolicyKind {
    /// Whether the rule conditions on the observed history.
    pub fn is_predictive(&self) -> bool {
        matches!(self, PolicyKind::H1 | PolicyKind::H2 | PolicyKind::GaussHermite(_))
    }
}

/// Candidate next cells of one relay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibleSet {
    pub center: Cell,
    pub cells: Vec<Cell>,
}

impl FeasibleSet {
    /// Moore neighbourhood of `center` inside the relay region, minus
    /// `blocked`. The center itself is always kept.
    pub fn new(ws: &Workspace, center: Cell, blocked: &[Cell]) -> Self {
        let cells = ws
            .neighborhood(center)
            .into_iter()
            .filter(|c| *c == center || !blocked.contains(c))
            .collect();
        FeasibleSet { center, cells }
    }
}

fn coefficients(r: &RadioParams) -> (f64, f64, f64) {
    let cross = r.sigma2 * r.sigma_d2 / (r.pc * r.p0);
    let src = r.sigma2 / r.p0;
    let dst = r.sigma_d2 / r.pc;
    (cross, src, dst)
}

/// `E{V_II}` from three log-normal moments.
pub fn expected_v_ii(post: &Posterior2, r: &RadioParams, rho: f64) -> f64 {
    let (cross, src, dst) = coefficients(r);
    dst * cond_moment(post, 0, -2, rho)
        + src * cond_moment(post, -2, 0, rho)
        + cross * cond_moment(post, -2, -2, rho)
}

/// `E{V_II²}` from the six-term expansion of the square.
pub fn expected_v_ii_sq(post: &Posterior2, r: &RadioParams, rho: f64) -> f64 {
    let (cross, src, dst) = coefficients(r);
    cross * cross * cond_moment(post, -4, -4, rho)
        + 2.0 * cross * cond_moment(post, -2, -2, rho)
        + 2.0 * src * src * dst * cond_moment(post, -4, -2, rho)
        + 2.0 * src * dst * dst * cond_moment(post, -2, -4, rho)
        + src * src * cond_moment(post, -4, 0, rho)
        + dst * dst * cond_moment(post, 0, -4, rho)
}

pub fn obj_h1(post: &Posterior2, r: &RadioParams, rho: f64) -> f64 {
    1.0 / expected_v_ii(post, r, rho)
}

pub fn obj_h2(post: &Posterior2, r: &RadioParams, rho: f64) -> f64 {
    let m1 = expected_v_ii(post, r, rho);
    expected_v_ii_sq(post, r, rho) / (m1 * m1 * m1)
}

/// `V_I` as a function of the log-scale pair `(F, G)`.
pub fn sinr_integrand(x: [f64; 2], r: &RadioParams, rho: f64) -> f64 {
    relay_sinr(field_to_gain(x[0], rho), field_to_gain(x[1], rho), r)
}

/// Tensor-product Gauss–Hermite estimate of `E{V_I}`:
/// `Σ_{l1,l2} w_{l1} w_{l2} V_I(√Σ·[q_{l1}, q_{l2}] + μ)`.
pub fn obj_gh(post: &Posterior2, rule: &GhRule, r: &RadioParams, rho: f64) -> f64 {
    let root = sqrt2x2(&post.cov).unwrap_or_else(|_| nalgebra::Matrix2::zeros());
    let mut total = 0.0;
    for (q1, w1) in rule.nodes.iter().zip(&rule.weights) {
        let mut inner = 0.0;
        for (q2, w2) in rule.nodes.iter().zip(&rule.weights) {
            let x = root * nalgebra::Vector2::new(*q1, *q2) + post.mu;
            inner += w2 * sinr_integrand([x[0], x[1]], r, rho);
        }
        total += w1 * inner;
    }
    total
}

/// Shared read-only inputs of a decision.
#[derive(Clone, Copy, Debug)]
pub struct DecisionContext<'a> {
    pub prm: &'a ChannelParams,
    pub ws: &'a Workspace,
    pub radio: &'a RadioParams,
    /// Prebuilt rule for [`PolicyKind::GaussHermite`]; built on demand when
    /// absent or of a different resolution.
    pub rule: Option<&'a GhRule>,
}

/// Scores a posterior under a predictive rule.
pub fn score(kind: PolicyKind, post: &Posterior2, ctx: &DecisionContext<'_>) -> Result<f64> {
    let rho = ctx.prm.rho;
    Ok(match kind {
        PolicyKind::H1 => obj_h1(post, ctx.radio, rho),
        PolicyKind::H2 => obj_h2(post, ctx.radio, rho),
        PolicyKind::GaussHermite(m) => match ctx.rule {
            Some(rule) if rule.m() == m => obj_gh(post, rule, ctx.radio, rho),
            _ => obj_gh(post, &gh_build(m)?, ctx.radio, rho),
        },
        other => {
            return Err(Error::Usage(format!("{other:?} has no predictive objective")));
        }
    })
}

/// First maximizer in row-major order. NaN scores never win.
pub fn argmax_cell<F: FnMut(Cell) -> f64>(cells: &[Cell], mut objective: F) -> Option<Cell> {
    let mut sorted = cells.to_vec();
    sorted.sort();
    let mut best: Option<(Cell, f64)> = None;
    for c in sorted {
        let v = objective(c);
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((c, v)),
        }
    }
    best.map(|(c, _)| c).or_else(|| cells.iter().min().copied())
}

/// Realized contribution `V_I` of a relay at `cell` in slot `t`.
pub fn realized_sinr(
    grid: &GridField,
    cell: Cell,
    t: usize,
    prm: &ChannelParams,
    ws: &Workspace,
    radio: &RadioParams,
) -> Result<f64> {
    let f = grid.eval(ws, prm, cell, t, Endpoint::Source)?;
    let g = grid.eval(ws, prm, cell, t, Endpoint::Destination)?;
    Ok(sinr_integrand([f, g], radio, prm.rho))
}

/// Picks the cell for slot `t + 1` of one relay.
///
/// Predictive rules condition on `history` only (slots up to `t`) and must
/// not see the field. `Oracle` requires `grid` and reads slot `t + 1` from
/// it. `Agnostic` draws from `rng`.
pub fn decide<R: Rng + ?Sized>(
    kind: PolicyKind,
    history: &History,
    fs: &FeasibleSet,
    grid: Option<&GridField>,
    t: usize,
    ctx: &DecisionContext<'_>,
    rng: &mut R,
) -> Result<Cell> {
    if fs.cells.is_empty() {
        return Err(Error::Usage("empty feasible set".into()));
    }
    match kind {
        PolicyKind::Stay => Ok(fs.center),
        PolicyKind::Agnostic => Ok(fs.cells[rng.random_range(0..fs.cells.len())]),
        PolicyKind::Oracle => {
            let grid = grid.ok_or_else(|| Error::Usage("oracle policy needs the realized field".into()))?;
            let mut values = HashMap::with_capacity(fs.cells.len());
            for c in &fs.cells {
                values.insert(*c, realized_sinr(grid, *c, t + 1, ctx.prm, ctx.ws, ctx.radio)?);
            }
            Ok(argmax_cell(&fs.cells, |c| values[&c]).expect("non-empty"))
        }
        predictive => {
            let mut values = HashMap::with_capacity(fs.cells.len());
            for c in &fs.cells {
                let post = history.predict(ctx.ws.center(*c));
                values.insert(*c, score(predictive, &post, ctx)?);
            }
            Ok(argmax_cell(&fs.cells, |c| values[&c]).expect("non-empty"))
        }
    }
}
