//! Spatiotemporal log-normal channel model.
//!
//! The log-scale magnitude of the source→relay channel at position `p` and
//! slot `t` is
//!
//! ```text
//! F(p, t) = ℓ·α_S(p) + σ_S(p, t) + ξ_S(p, t),   α_S(p) = −10·log10‖p − p_S‖
//! ```
//!
//! and `G` is defined the same way against the destination. The shadowing
//! terms `σ_S`, `σ_D` are jointly Gaussian with an exponential kernel in
//! space and time, and the two endpoints are coupled by the factor
//! `κ = exp(−‖p_S − p_D‖/δ)`. Multipath `ξ` is white across slots and has a
//! compactly supported spherical kernel in space.

mod field;
mod workspace;

pub use field::{sample_grid_field, GridField, GridSampler};
pub use workspace::{Cell, Point, Rect, Workspace};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation parameters. Powers are in dB², distances in workspace length
/// units and `gamma` in slots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Path-loss exponent.
    pub ell: f64,
    /// Multipath mean offset (dB).
    pub rho: f64,
    /// Multipath log-power variance.
    pub sigma_xi2: f64,
    /// Shadowing power.
    pub eta2: f64,
    /// Correlation distance.
    pub beta: f64,
    /// Correlation time.
    pub gamma: f64,
    /// Source/destination (base station) correlation distance.
    pub delta: f64,
    /// Multipath correlation radius; relays must be at least this far apart.
    pub eps_mf: f64,
}

impl ChannelParams {
    /// `ℓ=3, ρ=20, σ_ξ²=20, η²=50, β=10, γ=5, δ=1`, with `ε_MF` equal to the
    /// unit cell spacing.
    pub fn reference() -> Self {
        ChannelParams {
            ell: 3.0,
            rho: 20.0,
            sigma_xi2: 20.0,
            eta2: 50.0,
            beta: 10.0,
            gamma: 5.0,
            delta: 1.0,
            eps_mf: 1.0,
        }
    }

    /// Checks positivity. `sigma_xi2 = 0` is accepted: the joint covariance
    /// is then only semidefinite, which some experiments rely on.
    pub fn validate(&self, ws: &Workspace) -> Result<()> {
        let positive = [
            ("ell", self.ell),
            ("eta2", self.eta2),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("eps_mf", self.eps_mf),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("channel.{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma_xi2 >= 0.0 && self.sigma_xi2.is_finite()) {
            return Err(Error::Config("channel.sigma_xi2 must be non-negative".into()));
        }
        if !self.rho.is_finite() {
            return Err(Error::Config("channel.rho must be finite".into()));
        }
        if self.eps_mf > ws.cell {
            return Err(Error::Config(format!(
                "channel.eps_mf ({}) exceeds the grid spacing ({})",
                self.eps_mf, ws.cell
            )));
        }
        Ok(())
    }

    /// AR(1) coefficient `φ = exp(−1/γ)` of the shadowing process.
    pub fn phi(&self) -> f64 {
        (-1.0 / self.gamma).exp()
    }

    /// Endpoint coupling `κ = exp(−‖p_S − p_D‖/δ)`.
    pub fn kappa(&self, ws: &Workspace) -> f64 {
        (-ws.p_s.distance(&ws.p_d) / self.delta).exp()
    }

    /// Unconditional mean of `[F(p), G(p)]`.
    pub fn prior_mean(&self, ws: &Workspace, p: Point) -> [f64; 2] {
        [
            self.ell * pathloss_db_unchecked(p, ws.p_s),
            self.ell * pathloss_db_unchecked(p, ws.p_d),
        ]
    }
}

/// Which end of the two-hop link a channel belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Endpoint {
    /// Source → relay (`f`, `F`).
    Source,
    /// Relay → destination (`g`, `G`).
    Destination,
}

/// `−10·log10‖p − anchor‖`. Multiply by `ℓ` for the path-loss term of the
/// log-scale field.
pub fn pathloss_db(p: Point, anchor: Point) -> Result<f64> {
    let d = p.distance(&anchor);
    if d == 0.0 {
        return Err(Error::Domain(format!(
            "path loss is singular at the anchor ({}, {})",
            anchor.x, anchor.y
        )));
    }
    Ok(-10.0 * d.log10())
}

fn pathloss_db_unchecked(p: Point, anchor: Point) -> f64 {
    -10.0 * p.distance(&anchor).log10()
}

/// Covariance of the shadowing terms at `(p_i, k, a)` and `(p_j, l, b)`.
#[allow(clippy::too_many_arguments)]
pub fn shadow_cov(
    p_i: Point,
    k: usize,
    a: Endpoint,
    p_j: Point,
    l: usize,
    b: Endpoint,
    prm: &ChannelParams,
    ws: &Workspace,
) -> f64 {
    let lag = (k as f64 - l as f64).abs();
    let base = prm.eta2 * (-p_i.distance(&p_j) / prm.beta - lag / prm.gamma).exp();
    if a == b {
        base
    } else {
        base * prm.kappa(ws)
    }
}

/// Spherical multipath kernel with support radius `ε_MF`.
pub fn mpath_cov(tau: [f64; 2], prm: &ChannelParams) -> f64 {
    let r = tau[0].hypot(tau[1]) / prm.eps_mf;
    if r < 1.0 {
        prm.sigma_xi2 * (1.0 - 1.5 * r + 0.5 * r * r * r)
    } else {
        0.0
    }
}

/// Checks that a trajectory stays in the relay region and that relays are
/// at least `ε_MF` apart within every slot. At exactly `ε_MF` the multipath
/// kernel already vanishes, so the boundary is admissible.
pub fn check_trajectory(trajectory: &[Vec<Point>], prm: &ChannelParams, ws: &Workspace) -> Result<()> {
    let r = trajectory.first().map_or(0, Vec::len);
    for (k, slot) in trajectory.iter().enumerate() {
        if slot.len() != r {
            return Err(Error::Constraint(format!(
                "slot {} has {} relays, expected {r}",
                k + 1,
                slot.len()
            )));
        }
        for (i, p) in slot.iter().enumerate() {
            if !ws.relay_region.contains(p) {
                return Err(Error::Constraint(format!(
                    "relay {i} at slot {} lies outside the relay region",
                    k + 1
                )));
            }
            for (j, q) in slot.iter().enumerate().skip(i + 1) {
                if p.distance(q) < prm.eps_mf {
                    return Err(Error::Constraint(format!(
                        "relays {i} and {j} closer than eps_mf at slot {}",
                        k + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Covariance block between the log-scale observations of slot `k` (relays
/// at `pk`) and slot `l` (relays at `pl`), ordered `[F(1..R), G(1..R)]`.
/// Slots are 1-based absolute indices.
pub(crate) fn slot_block(
    pk: &[Point],
    k: usize,
    pl: &[Point],
    l: usize,
    prm: &ChannelParams,
    ws: &Workspace,
) -> DMatrix<f64> {
    let rk = pk.len();
    let rl = pl.len();
    let kappa = prm.kappa(ws);
    let lag = (k as f64 - l as f64).abs();
    let temporal = (-lag / prm.gamma).exp();
    let mut m = DMatrix::zeros(2 * rk, 2 * rl);
    for (i, p) in pk.iter().enumerate() {
        for (j, q) in pl.iter().enumerate() {
            let mut same = prm.eta2 * temporal * (-p.distance(q) / prm.beta).exp();
            let cross = same * kappa;
            if k == l {
                same += mpath_cov([p.x - q.x, p.y - q.y], prm);
            }
            m[(i, j)] = same;
            m[(rk + i, rl + j)] = same;
            m[(i, rl + j)] = cross;
            m[(rk + i, j)] = cross;
        }
    }
    m
}

/// Joint covariance of `[F(1), G(1), …, F(N_T), G(N_T)]` along a relay
/// trajectory (`trajectory[k][i]` is relay `i` at slot `k+1`).
pub fn build_joint_cov(
    trajectory: &[Vec<Point>],
    prm: &ChannelParams,
    ws: &Workspace,
) -> Result<DMatrix<f64>> {
    check_trajectory(trajectory, prm, ws)?;
    let r = trajectory.first().map_or(0, Vec::len);
    let n = 2 * r * trajectory.len();
    let mut sigma = DMatrix::zeros(n, n);
    for (k, pk) in trajectory.iter().enumerate() {
        for (l, pl) in trajectory.iter().enumerate().skip(k) {
            let block = slot_block(pk, k + 1, pl, l + 1, prm, ws);
            sigma.view_mut((2 * r * k, 2 * r * l), (2 * r, 2 * r)).copy_from(&block);
            if l != k {
                sigma
                    .view_mut((2 * r * l, 2 * r * k), (2 * r, 2 * r))
                    .copy_from(&block.transpose());
            }
        }
    }
    Ok(sigma)
}

/// Stationary covariance of the shadowing vector over a fixed set of points,
/// ordered `[σ_S at points, σ_D at points]`, together with the AR(1)
/// coefficient.
#[derive(Clone, Debug)]
pub struct GridPrior {
    pub cov: DMatrix<f64>,
    pub phi: f64,
}

/// `Σ̃ = [[1, κ], [κ, 1]] ⊗ Σ̂` with `Σ̂(i, j) = η²·exp(−‖p_i − p_j‖/β)`.
pub fn build_grid_prior(cells: &[Point], prm: &ChannelParams, ws: &Workspace) -> GridPrior {
    let n = cells.len();
    let hat = DMatrix::from_fn(n, n, |i, j| {
        prm.eta2 * (-cells[i].distance(&cells[j]) / prm.beta).exp()
    });
    let kappa = prm.kappa(ws);
    let coupling = DMatrix::from_row_slice(2, 2, &[1.0, kappa, kappa, 1.0]);
    GridPrior {
        cov: coupling.kronecker(&hat),
        phi: prm.phi(),
    }
}

/// `|f| = 10^{ρ/20}·exp((ln 10 / 20)·F)`: the linear magnitude of a
/// log-scale field value.
pub fn field_to_gain(log_value: f64, rho: f64) -> f64 {
    10f64.powf(rho / 20.0) * (std::f64::consts::LN_10 / 20.0 * log_value).exp()
}
