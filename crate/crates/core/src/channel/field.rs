use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{build_grid_prior, ChannelParams, Endpoint, Workspace};
use crate::channel::{Cell, Point};
use crate::error::{Error, Result};

const JITTER: f64 = 1e-10;

/// One realization of the shadowing and multipath fields on a fixed set of
/// grid cells for slots `1..=n_slots`.
///
/// Per slot, both vectors have length `2N` and are ordered
/// `[source side at cells, destination side at cells]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    cells: Vec<Cell>,
    index: HashMap<Cell, usize>,
    shadow: Vec<Vec<f64>>,
    mpath: Vec<Vec<f64>>,
}

impl GridField {
    /// Assembles a field from explicit per-slot values. Used for hand-built
    /// scenarios; `shadow[t-1]` and `mpath[t-1]` hold slot `t`.
    pub fn from_parts(cells: Vec<Cell>, shadow: Vec<Vec<f64>>, mpath: Vec<Vec<f64>>) -> Result<Self> {
        let n = cells.len();
        if shadow.len() != mpath.len() {
            return Err(Error::Usage("shadow and multipath slot counts differ".into()));
        }
        if shadow.iter().chain(&mpath).any(|v| v.len() != 2 * n) {
            return Err(Error::Usage(format!("every slot vector must have length {}", 2 * n)));
        }
        let index = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Ok(GridField { cells, index, shadow, mpath })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn n_slots(&self) -> usize {
        self.shadow.len()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.index.contains_key(&c)
    }

    fn locate(&self, c: Cell, t: usize, e: Endpoint) -> Result<(usize, usize)> {
        let i = *self
            .index
            .get(&c)
            .ok_or_else(|| Error::Index(format!("cell ({}, {}) not in field", c.row, c.col)))?;
        if t == 0 || t > self.n_slots() {
            return Err(Error::Index(format!("slot {t} outside 1..={}", self.n_slots())));
        }
        let off = match e {
            Endpoint::Source => 0,
            Endpoint::Destination => self.cells.len(),
        };
        Ok((t - 1, off + i))
    }

    pub fn shadow(&self, c: Cell, t: usize, e: Endpoint) -> Result<f64> {
        let (s, i) = self.locate(c, t, e)?;
        Ok(self.shadow[s][i])
    }

    pub fn mpath(&self, c: Cell, t: usize, e: Endpoint) -> Result<f64> {
        let (s, i) = self.locate(c, t, e)?;
        Ok(self.mpath[s][i])
    }

    /// Raw shadowing vector of slot `t`.
    pub fn slot_shadow(&self, t: usize) -> Result<&[f64]> {
        if t == 0 || t > self.n_slots() {
            return Err(Error::Index(format!("slot {t} outside 1..={}", self.n_slots())));
        }
        Ok(&self.shadow[t - 1])
    }

    /// Mutable access to the raw per-slot vectors of slot `t`.
    pub fn slot_mut(&mut self, t: usize) -> Result<(&mut [f64], &mut [f64])> {
        if t == 0 || t > self.n_slots() {
            return Err(Error::Index(format!("slot {t} outside 1..={}", self.n_slots())));
        }
        Ok((&mut self.shadow[t - 1], &mut self.mpath[t - 1]))
    }

    /// Log-scale field value (dB) at a cell: path loss plus shadowing plus
    /// multipath.
    pub fn eval(
        &self,
        ws: &Workspace,
        prm: &ChannelParams,
        c: Cell,
        t: usize,
        e: Endpoint,
    ) -> Result<f64> {
        let (s, i) = self.locate(c, t, e)?;
        let anchor = match e {
            Endpoint::Source => ws.p_s,
            Endpoint::Destination => ws.p_d,
        };
        let pl = super::pathloss_db(ws.center(c), anchor)?;
        Ok(prm.ell * pl + self.shadow[s][i] + self.mpath[s][i])
    }
}

/// Reusable sampler: factors the stationary shadowing covariance of a cell
/// set once and then draws any number of independent realizations.
#[derive(Clone, Debug)]
pub struct GridSampler {
    cells: Vec<Cell>,
    factor: DMatrix<f64>,
    phi: f64,
    sigma_xi: f64,
}

impl GridSampler {
    pub fn new(cells: Vec<Cell>, prm: &ChannelParams, ws: &Workspace) -> Result<Self> {
        let points: Vec<Point> = cells.iter().map(|c| ws.center(*c)).collect();
        for (i, p) in points.iter().enumerate() {
            if points[..i].iter().any(|q| q == p) {
                return Err(Error::Usage("grid cells must be distinct".into()));
            }
        }
        let prior = build_grid_prior(&points, prm, ws);
        let factor = match Cholesky::new(prior.cov.clone()) {
            Some(ch) => ch.unpack(),
            None => {
                let n = prior.cov.nrows();
                let jittered = prior.cov + DMatrix::identity(n, n) * JITTER;
                Cholesky::new(jittered)
                    .ok_or_else(|| {
                        Error::Numerical("shadowing covariance is not factorizable".into())
                    })?
                    .unpack()
            }
        };
        Ok(GridSampler {
            cells,
            factor,
            phi: prior.phi,
            sigma_xi: prm.sigma_xi2.sqrt(),
        })
    }

    /// Sampler over every relay-region cell of the workspace.
    pub fn for_relay_region(prm: &ChannelParams, ws: &Workspace) -> Result<Self> {
        Self::new(ws.relay_cells(), prm, ws)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Draws a realization from a fresh generator seeded with `seed`.
    pub fn sample(&self, n_slots: usize, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n_slots, &mut rng)
    }

    /// Draws `X(1) ~ N(0, Σ̃)`, `X(t) = φ·X(t−1) + W(t)` with
    /// `W(t) ~ N(0, (1 − φ²)·Σ̃)`, plus i.i.d. multipath.
    pub fn sample_with<R: rand::Rng + ?Sized>(&self, n_slots: usize, rng: &mut R) -> GridField {
        let dim = 2 * self.cells.len();
        let innovation = (1.0 - self.phi * self.phi).sqrt();
        let mut shadow = Vec::with_capacity(n_slots);
        let mut mpath = Vec::with_capacity(n_slots);
        let mut state: Option<DVector<f64>> = None;
        for _ in 0..n_slots {
            let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
            let draw = &self.factor * z;
            let next = match state {
                None => draw,
                Some(prev) => prev * self.phi + draw * innovation,
            };
            shadow.push(next.as_slice().to_vec());
            state = Some(next);
            let xi: Vec<f64> = (0..dim)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(rng);
                    self.sigma_xi * v
                })
                .collect();
            mpath.push(xi);
        }
        let index = self.cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        GridField {
            cells: self.cells.clone(),
            index,
            shadow,
            mpath,
        }
    }
}

/// Convenience wrapper: builds a sampler for `cells` and draws one field.
///
/// Multipath is drawn independently per cell; this is exact because distinct
/// cells are at least one grid spacing (≥ `ε_MF`) apart.
pub fn sample_grid_field(
    cells: &[Cell],
    n_slots: usize,
    prm: &ChannelParams,
    ws: &Workspace,
    seed: u64,
) -> Result<GridField> {
    Ok(GridSampler::new(cells.to_vec(), prm, ws)?.sample(n_slots, seed))
}
