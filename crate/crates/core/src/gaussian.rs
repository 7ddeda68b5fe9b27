//! Conditional-Gaussian prediction of the channel along relay trajectories.
//!
//! A [`History`] accumulates, slot by slot, the relay positions and the
//! log-scale channel values they observed. Conditioned on it, the pair
//! `[F(p, t), G(p, t)]` at a candidate position for the next slot is
//! Gaussian ([`Posterior2`]), and every mixed moment `E{|f|^m |g|^n}` of
//! the linear gains has a closed form ([`cond_moment`]).
//!
//! The inverse of the history covariance grows by one `2R × 2R` block per
//! slot and is maintained with the block (Schur complement) inversion
//! formula, so an append costs `O(R³t²)` instead of `O(R³t³)`.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix2, Vector2};

use crate::channel::{check_trajectory, slot_block, ChannelParams, Point, Workspace};
use crate::error::{Error, Result};

/// `ln(10)/20`: maps dB-scale log values to natural-log amplitude exponents.
pub const DB_AMPLITUDE: f64 = std::f64::consts::LN_10 / 20.0;

/// Conditional law of `[F(p, t), G(p, t)]` in dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posterior2 {
    pub mu: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl Posterior2 {
    pub fn new(mu: [f64; 2], cov: [[f64; 2]; 2]) -> Self {
        Posterior2 {
            mu: Vector2::new(mu[0], mu[1]),
            cov: Matrix2::new(cov[0][0], cov[0][1], cov[1][0], cov[1][1]),
        }
    }

    /// The unconditional law at `p`.
    pub fn prior(prm: &ChannelParams, ws: &Workspace, p: Point) -> Self {
        let [mf, mg] = prm.prior_mean(ws, p);
        let var = prm.eta2 + prm.sigma_xi2;
        let cross = prm.eta2 * prm.kappa(ws);
        Posterior2::new([mf, mg], [[var, cross], [cross, var]])
    }
}

/// Observed channel history of one relay team.
///
/// Observations are stored slot-major as `[F(1..R), G(1..R)]` per slot.
#[derive(Clone, Debug)]
pub struct History {
    prm: ChannelParams,
    ws: Workspace,
    n_relays: usize,
    first_slot: usize,
    positions: Vec<Vec<Point>>,
    obs: Vec<f64>,
    prior_mean: Vec<f64>,
    inv: DMatrix<f64>,
    weights: DVector<f64>,
    max_slots: Option<usize>,
}

impl History {
    pub fn new(n_relays: usize, prm: &ChannelParams, ws: &Workspace) -> Self {
        History {
            prm: *prm,
            ws: *ws,
            n_relays,
            first_slot: 1,
            positions: Vec::new(),
            obs: Vec::new(),
            prior_mean: Vec::new(),
            inv: DMatrix::zeros(0, 0),
            weights: DVector::zeros(0),
            max_slots: None,
        }
    }

    /// Keeps only the most recent `max_slots` slots. Dropping a slot rebuilds
    /// the inverse densely.
    pub fn with_max_slots(mut self, max_slots: usize) -> Self {
        self.max_slots = Some(max_slots.max(1));
        self
    }

    /// Number of retained slots.
    pub fn slots(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_relays(&self) -> usize {
        self.n_relays
    }

    /// Absolute index of the slot a prediction refers to.
    pub fn target_slot(&self) -> usize {
        self.first_slot + self.positions.len()
    }

    pub fn positions(&self) -> &[Vec<Point>] {
        &self.positions
    }

    pub fn observations(&self) -> &[f64] {
        &self.obs
    }

    pub fn prior_mean(&self) -> &[f64] {
        &self.prior_mean
    }

    /// Cached inverse of the covariance of all retained observations.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// Records one slot: relay positions and their observed `[F, G]` values.
    pub fn append(&mut self, positions: &[Point], obs: &[f64]) -> Result<()> {
        let r = self.n_relays;
        if positions.len() != r || obs.len() != 2 * r {
            return Err(Error::Usage(format!(
                "expected {r} positions and {} observations, got {} and {}",
                2 * r,
                positions.len(),
                obs.len()
            )));
        }
        check_trajectory(&[positions.to_vec()], &self.prm, &self.ws)?;

        let new_slot = self.target_slot();
        let diag = slot_block(positions, new_slot, positions, new_slot, &self.prm, &self.ws);
        if self.positions.is_empty() {
            self.inv = spd_inverse(&diag, "first-slot covariance")?;
        } else {
            let cross = self.cross_block(positions, new_slot);
            self.inv = mil_extend(&self.inv, &cross, &diag)?;
        }
        self.positions.push(positions.to_vec());
        self.obs.extend_from_slice(obs);
        for p in positions {
            self.prior_mean.push(self.prm.prior_mean(&self.ws, *p)[0]);
        }
        for p in positions {
            self.prior_mean.push(self.prm.prior_mean(&self.ws, *p)[1]);
        }

        if let Some(cap) = self.max_slots {
            if self.positions.len() > cap {
                self.drop_oldest()?;
            }
        }
        self.refresh_weights();
        Ok(())
    }

    /// Stacked covariance between all retained slots and a new slot.
    fn cross_block(&self, positions: &[Point], new_slot: usize) -> DMatrix<f64> {
        let r2 = 2 * self.n_relays;
        let mut cross = DMatrix::zeros(r2 * self.positions.len(), r2);
        for (s, past) in self.positions.iter().enumerate() {
            let k = self.first_slot + s;
            let block = slot_block(past, k, positions, new_slot, &self.prm, &self.ws);
            cross.view_mut((r2 * s, 0), (r2, r2)).copy_from(&block);
        }
        cross
    }

    fn drop_oldest(&mut self) -> Result<()> {
        let r2 = 2 * self.n_relays;
        self.positions.remove(0);
        self.obs.drain(..r2);
        self.prior_mean.drain(..r2);
        self.first_slot += 1;
        let n = self.obs.len();
        let mut sigma = DMatrix::zeros(n, n);
        for (a, pa) in self.positions.iter().enumerate() {
            for (b, pb) in self.positions.iter().enumerate() {
                let block = slot_block(
                    pa,
                    self.first_slot + a,
                    pb,
                    self.first_slot + b,
                    &self.prm,
                    &self.ws,
                );
                sigma.view_mut((r2 * a, r2 * b), (r2, r2)).copy_from(&block);
            }
        }
        self.inv = spd_inverse(&sigma, "history covariance")?;
        Ok(())
    }

    fn refresh_weights(&mut self) {
        let resid = DVector::from_iterator(
            self.obs.len(),
            self.obs.iter().zip(&self.prior_mean).map(|(m, mu)| m - mu),
        );
        self.weights = &self.inv * resid;
    }

    /// Cross-covariances between the shadowing at `(p, target)` and every
    /// retained observation: the `F` row goes to `cf`, the `G` row to `cg`.
    /// Multipath is white across slots and never enters.
    fn fill_cross(&self, p: Point, cf: &mut [f64], cg: &mut [f64]) {
        let r = self.n_relays;
        let target = self.target_slot() as f64;
        let kappa = self.prm.kappa(&self.ws);
        for (s, past) in self.positions.iter().enumerate() {
            let lag = target - (self.first_slot + s) as f64;
            let temporal = self.prm.eta2 * (-lag / self.prm.gamma).exp();
            for (j, q) in past.iter().enumerate() {
                let base = temporal * (-p.distance(q) / self.prm.beta).exp();
                let o = 2 * r * s;
                cf[o + j] = base;
                cf[o + r + j] = base * kappa;
                cg[o + j] = base * kappa;
                cg[o + r + j] = base;
            }
        }
    }

    /// Conditional law of `[F(p), G(p)]` at the next slot. An empty history
    /// yields the prior.
    pub fn predict(&self, p: Point) -> Posterior2 {
        let prior = Posterior2::prior(&self.prm, &self.ws, p);
        if self.is_empty() {
            return prior;
        }
        let n = self.obs.len();
        let mut cf = DVector::zeros(n);
        let mut cg = DVector::zeros(n);
        self.fill_cross(p, cf.as_mut_slice(), cg.as_mut_slice());
        let vf = &self.inv * &cf;
        let vg = &self.inv * &cg;
        finish(prior, &cf, &cg, &vf, &vg, &self.weights)
    }

    /// [`History::predict`] for many points at once; one matrix product
    /// replaces the per-point matrix-vector products.
    pub fn predict_many(&self, points: &[Point]) -> Vec<Posterior2> {
        if self.is_empty() {
            return points
                .iter()
                .map(|p| Posterior2::prior(&self.prm, &self.ws, *p))
                .collect();
        }
        let n = self.obs.len();
        let k = points.len();
        let mut data = vec![0.0; n * 2 * k];
        for (p, cols) in points.iter().zip(data.chunks_mut(2 * n)) {
            let (cf, cg) = cols.split_at_mut(n);
            self.fill_cross(*p, cf, cg);
        }
        let c = DMatrix::from_vec(n, 2 * k, data);
        let v = &self.inv * &c;
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let prior = Posterior2::prior(&self.prm, &self.ws, *p);
                finish(
                    prior,
                    &c.column(2 * i),
                    &c.column(2 * i + 1),
                    &v.column(2 * i),
                    &v.column(2 * i + 1),
                    &self.weights,
                )
            })
            .collect()
    }
}

fn finish<S1, S2, S3, S4>(
    prior: Posterior2,
    cf: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S1>,
    cg: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S2>,
    vf: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S3>,
    vg: &nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S4>,
    weights: &DVector<f64>,
) -> Posterior2
where
    S1: nalgebra::Storage<f64, nalgebra::Dyn>,
    S2: nalgebra::Storage<f64, nalgebra::Dyn>,
    S3: nalgebra::Storage<f64, nalgebra::Dyn>,
    S4: nalgebra::Storage<f64, nalgebra::Dyn>,
{
    let mu = prior.mu + Vector2::new(cf.dot(weights), cg.dot(weights));
    let off = 0.5 * (cf.dot(vg) + cg.dot(vf));
    let reduction = Matrix2::new(cf.dot(vf), off, off, cg.dot(vg));
    Posterior2 {
        mu,
        cov: prior.cov - reduction,
    }
}

fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let inv = Cholesky::new(m.clone())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))?
        .inverse();
    Ok(symmetrize(inv))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Extends `A⁻¹` to the inverse of `[[A, B], [Bᵀ, C]]` through the Schur
/// complement `S = C − Bᵀ A⁻¹ B`.
pub fn mil_extend(a_inv: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a_inv.nrows();
    let m = c.nrows();
    let e = a_inv * b;
    let schur = c - b.transpose() * &e;
    let s_inv = spd_inverse(&schur, "Schur complement")?;
    let es = &e * &s_inv;
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(&(a_inv + &es * e.transpose()));
    out.view_mut((0, n), (n, m)).copy_from(&(-&es));
    out.view_mut((n, 0), (m, n)).copy_from(&(-es.transpose()));
    out.view_mut((n, n), (m, m)).copy_from(&s_inv);
    Ok(symmetrize(out))
}

/// `E{|f|^m |g|^n}` under a [`Posterior2`], with `|f| = 10^{ρ/20}·e^{ς'F}`
/// and `ς' = ln(10)/20`: the Gaussian moment generating function evaluated
/// at `ς'·[m, n]`.
///
/// ```
/// use relaysim::gaussian::{cond_moment, Posterior2};
/// let post = Posterior2::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
/// assert_eq!(cond_moment(&post, 0, 0, 20.0), 1.0);
/// let v = cond_moment(&post, 2, 0, 20.0);
/// assert!((v - 102.686).abs() < 1e-3);
/// ```
pub fn cond_moment(post: &Posterior2, m: i32, n: i32, rho: f64) -> f64 {
    let v = Vector2::new(m as f64, n as f64);
    let linear = DB_AMPLITUDE * v.dot(&post.mu);
    let quadratic = 0.5 * DB_AMPLITUDE * DB_AMPLITUDE * v.dot(&(post.cov * v));
    10f64.powf((m + n) as f64 * rho / 20.0) * (linear + quadratic).exp()
}

/// Principal square root of a 2×2 symmetric PSD matrix:
/// `(S + √det·I) / √(tr S + 2√det)`.
pub fn sqrt2x2(s: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let det = (s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)]).max(0.0);
    let root_det = det.sqrt();
    let denom = s.trace() + 2.0 * root_det;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::Domain("square root of a zero (or non-PSD) 2x2 matrix".into()));
    }
    Ok((s + Matrix2::identity() * root_det) / denom.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> (ChannelParams, Workspace) {
        let mut prm = ChannelParams::reference();
        prm.delta = 30.0;
        (prm, Workspace::reference())
    }

    #[test]
    fn empty_history_predicts_prior() {
        let (prm, ws) = model();
        let h = History::new(2, &prm, &ws);
        let p = Point::new(10.5, 14.5);
        assert_eq!(h.predict(p), Posterior2::prior(&prm, &ws, p));
        assert_eq!(h.target_slot(), 1);
    }

    #[test]
    fn first_append_inverts_single_block() {
        let (prm, ws) = model();
        let pos = [Point::new(3.5, 13.5), Point::new(9.5, 16.5)];
        let mut h = History::new(2, &prm, &ws);
        h.append(&pos, &[-30.0, -31.0, -33.0, -29.0]).unwrap();
        let block = crate::channel::build_joint_cov(&[pos.to_vec()], &prm, &ws).unwrap();
        let prod = h.inverse() * block;
        assert_relative_eq!(prod, DMatrix::identity(4, 4), epsilon = 1e-10);
    }

    #[test]
    fn decoupled_blocks_give_block_diagonal_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 5.0]);
        let a_inv = a.clone().try_inverse().unwrap();
        let out = mil_extend(&a_inv, &DMatrix::zeros(2, 2), &c).unwrap();
        let c_inv = c.try_inverse().unwrap();
        assert_relative_eq!(out.view((0, 0), (2, 2)).into_owned(), a_inv, epsilon = 1e-14);
        assert_relative_eq!(out.view((2, 2), (2, 2)).into_owned(), c_inv, epsilon = 1e-14);
        assert_eq!(out.view((0, 2), (2, 2)).abs().max(), 0.0);
    }

    #[test]
    fn same_position_one_slot_back_closed_form() {
        // R = 1, one observation at p, predicting p one slot later.
        let (prm, ws) = model();
        let p = Point::new(12.5, 15.5);
        let mut h = History::new(1, &prm, &ws);
        let prior = Posterior2::prior(&prm, &ws, p);
        let obs = [prior.mu[0] + 4.0, prior.mu[1] - 2.0];
        h.append(&[p], &obs).unwrap();
        let post = h.predict(p);

        let kappa = prm.kappa(&ws);
        let e = 50.0 * (-1.0 / prm.gamma).exp();
        let sigma = nalgebra::Matrix2::new(70.0, 50.0 * kappa, 50.0 * kappa, 70.0);
        let c = nalgebra::Matrix2::new(e, e * kappa, e * kappa, e);
        let sinv = sigma.try_inverse().unwrap();
        let mu = prior.mu + c * sinv * Vector2::new(4.0, -2.0);
        let cov = prior.cov - c * sinv * c.transpose();
        assert_relative_eq!(post.mu, mu, epsilon = 1e-10);
        assert_relative_eq!(post.cov, cov, epsilon = 1e-10);
    }

    #[test]
    fn vanishing_correlation_distance_returns_prior_covariance() {
        let (mut prm, ws) = model();
        prm.beta = 1e-3;
        let mut h = History::new(1, &prm, &ws);
        h.append(&[Point::new(1.5, 12.5)], &[-40.0, -41.0]).unwrap();
        let p = Point::new(25.5, 17.5);
        let post = h.predict(p);
        assert_relative_eq!(post.cov, Posterior2::prior(&prm, &ws, p).cov, epsilon = 1e-9);
    }

    #[test]
    fn batched_prediction_matches_single() {
        let (prm, ws) = model();
        let mut h = History::new(2, &prm, &ws);
        h.append(&[Point::new(3.5, 13.5), Point::new(9.5, 16.5)], &[-30.0, -31.0, -33.0, -29.0])
            .unwrap();
        h.append(&[Point::new(4.5, 13.5), Point::new(9.5, 17.5)], &[-32.0, -30.0, -35.0, -28.0])
            .unwrap();
        let pts = [Point::new(4.5, 14.5), Point::new(10.5, 17.5), Point::new(20.5, 12.5)];
        let many = h.predict_many(&pts);
        for (p, got) in pts.iter().zip(many) {
            let want = h.predict(*p);
            assert_relative_eq!(got.mu, want.mu, epsilon = 1e-10);
            assert_relative_eq!(got.cov, want.cov, epsilon = 1e-10);
        }
    }

    #[test]
    fn capped_history_matches_fresh_window() {
        let (prm, ws) = model();
        let slots = [
            ([Point::new(3.5, 13.5)], [-30.0, -31.0]),
            ([Point::new(4.5, 13.5)], [-29.0, -33.0]),
            ([Point::new(5.5, 14.5)], [-28.0, -32.0]),
        ];
        let mut capped = History::new(1, &prm, &ws).with_max_slots(2);
        for (p, o) in &slots {
            capped.append(p, o).unwrap();
        }
        assert_eq!(capped.slots(), 2);
        assert_eq!(capped.target_slot(), 4);
        let post = capped.predict(Point::new(6.5, 14.5));
        assert!(post.cov[(0, 0)] < 70.0);
    }

    #[test]
    fn append_rejects_bad_shapes_and_collisions() {
        let (prm, ws) = model();
        let mut h = History::new(2, &prm, &ws);
        assert!(matches!(h.append(&[Point::new(3.5, 13.5)], &[0.0, 0.0]), Err(Error::Usage(_))));
        let same = [Point::new(3.5, 13.5), Point::new(3.5, 13.5)];
        assert!(matches!(h.append(&same, &[0.0; 4]), Err(Error::Constraint(_))));
    }

    #[test]
    fn cond_moment_cases() {
        let post = Posterior2::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(cond_moment(&post, 0, 0, 20.0), 1.0);
        let want = 100.0 * (2.0 * DB_AMPLITUDE * DB_AMPLITUDE).exp();
        assert_relative_eq!(cond_moment(&post, 2, 0, 20.0), want, max_relative = 1e-14);
        assert_relative_eq!(want, 102.68637, epsilon = 1e-4);
    }

    #[test]
    fn sqrt2x2_cases() {
        assert_relative_eq!(sqrt2x2(&Matrix2::identity()).unwrap(), Matrix2::identity(), epsilon = 1e-15);
        assert_relative_eq!(
            sqrt2x2(&Matrix2::new(4.0, 0.0, 0.0, 9.0)).unwrap(),
            Matrix2::new(2.0, 0.0, 0.0, 3.0),
            epsilon = 1e-14
        );
        assert!(matches!(sqrt2x2(&Matrix2::zeros()), Err(Error::Domain(_))));
        // rank one
        let s = Matrix2::new(1.0, 2.0, 2.0, 4.0);
        let r = sqrt2x2(&s).unwrap();
        assert_relative_eq!(r * r, s, epsilon = 1e-12);
    }
}
