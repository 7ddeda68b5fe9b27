//! Second-stage amplify-and-forward beamforming under a total relay power
//! budget.
//!
//! With relay gains `|f_i|` (source side) and `|g_i|` (destination side),
//! the optimal SINR is additive over relays:
//!
//! ```text
//! V = Σ_i  P_c P_0 |f_i|²|g_i|² / (P_0 σ_D² |f_i|² + P_c σ² |g_i|² + σ² σ_D²)
//! ```
//!
//! Only magnitudes matter for the optimal value. The optimal weights returned
//! here are magnitudes as well; the phase of weight `i` is the conjugate of
//! the phase of `f_i g_i`, which the simulator never needs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source power, total relay budget and the two noise variances (linear).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub p0: f64,
    pub pc: f64,
    pub sigma2: f64,
    pub sigma_d2: f64,
}

impl RadioParams {
    /// `P_0 = P_c = 25`, `σ² = σ_D² = 1`.
    pub fn reference() -> Self {
        RadioParams {
            p0: 25.0,
            pc: 25.0,
            sigma2: 1.0,
            sigma_d2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p0", self.p0),
            ("pc", self.pc),
            ("sigma2", self.sigma2),
            ("sigma_d2", self.sigma_d2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("radio.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Channel magnitudes seen by the relays in one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSnapshot {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl GainSnapshot {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.len() != g.len() || f.is_empty() {
            return Err(Error::Usage("gain vectors must be non-empty and equally long".into()));
        }
        if f.iter().chain(&g).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Usage("gain magnitudes must be finite and non-negative".into()));
        }
        Ok(GainSnapshot { f, g })
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Contribution of a single relay with magnitudes `f`, `g`.
pub fn relay_sinr(f: f64, g: f64, r: &RadioParams) -> f64 {
    let f2 = f * f;
    let g2 = g * g;
    r.pc * r.p0 * f2 * g2 / (r.p0 * r.sigma_d2 * f2 + r.pc * r.sigma2 * g2 + r.sigma2 * r.sigma_d2)
}

/// Optimal SINR, closed-form sum over relays.
pub fn v_second_stage(s: &GainSnapshot, r: &RadioParams) -> f64 {
    s.f.iter().zip(&s.g).map(|(f, g)| relay_sinr(*f, *g, r)).sum()
}

/// Optimal SINR as `P_c·λ_max((σ_D² I + P_c D^{-1/2} Q D^{-1/2})^{-1} D^{-1/2} R D^{-1/2})`,
/// with `D = P_0 diag|f|² + σ² I`, `R = P_0 h hᴴ`, `h_i = f_i g_i`,
/// `Q = σ² diag|g|²`.
///
/// The product `K⁻¹N` is brought to the symmetric similar matrix
/// `K^{-1/2} N K^{-1/2}` and handed to a dense symmetric eigensolver.
pub fn v_second_stage_eig(s: &GainSnapshot, r: &RadioParams) -> Result<f64> {
    let n = s.len();
    let f = DVector::from_column_slice(&s.f);
    let g = DVector::from_column_slice(&s.g);
    let h = f.component_mul(&g);
    let d = DMatrix::from_diagonal(&f.map(|v| r.p0 * v * v + r.sigma2));
    let q = DMatrix::from_diagonal(&g.map(|v| r.sigma2 * v * v));
    let big_r = &h * h.transpose() * r.p0;

    let d_inv_sqrt = inverse_sqrt(&d)?;
    let k = DMatrix::identity(n, n) * r.sigma_d2 + &d_inv_sqrt * &q * &d_inv_sqrt * r.pc;
    let k_inv_sqrt = inverse_sqrt(&k)?;
    let inner = &d_inv_sqrt * big_r * &d_inv_sqrt;
    let m = &k_inv_sqrt * inner * &k_inv_sqrt;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigen-solver did not converge".into()))?;
    Ok(r.pc * eig.eigenvalues.max().max(0.0))
}

fn inverse_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigen-solver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|l| *l <= 0.0) {
        return Err(Error::Numerical("matrix is not positive definite".into()));
    }
    let scaled = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&scaled) * eig.eigenvectors.transpose())
}

/// Optimal weight magnitudes. They exhaust the budget (`wᴴDw = P_c`) and
/// attain [`v_second_stage`].
pub fn optimal_weights(s: &GainSnapshot, r: &RadioParams) -> Vec<f64> {
    // In u = D^{1/2} w the problem is a Rayleigh quotient with a diagonal
    // denominator, maximized by u ∝ (σ_D²/P_c I + D^{-1/2} Q D^{-1/2})^{-1} D^{-1/2} h.
    let mut u: Vec<f64> = s
        .f
        .iter()
        .zip(&s.g)
        .map(|(f, g)| {
            let d = r.p0 * f * f + r.sigma2;
            let h = f * g / d.sqrt();
            h / (r.sigma_d2 / r.pc + r.sigma2 * g * g / d)
        })
        .collect();
    let norm2: f64 = u.iter().map(|v| v * v).sum();
    let scale = if norm2 > 0.0 { (r.pc / norm2).sqrt() } else { 0.0 };
    for (ui, f) in u.iter_mut().zip(&s.f) {
        *ui *= scale / (r.p0 * f * f + r.sigma2).sqrt();
    }
    u
}

/// Relay transmit power `wᴴDw` of a weight vector.
pub fn relay_power(w: &[f64], s: &GainSnapshot, r: &RadioParams) -> f64 {
    w.iter()
        .zip(&s.f)
        .map(|(w, f)| w * w * (r.p0 * f * f + r.sigma2))
        .sum()
}

/// SINR achieved by real weights `w`: `wᴴRw / (σ_D² + wᴴQw)`.
pub fn sinr_of_weights(w: &[f64], s: &GainSnapshot, r: &RadioParams) -> Result<f64> {
    if w.len() != s.len() {
        return Err(Error::Usage(format!(
            "{} weights for {} relays",
            w.len(),
            s.len()
        )));
    }
    let coherent: f64 = w.iter().zip(s.f.iter().zip(&s.g)).map(|(w, (f, g))| w * f * g).sum();
    let noise: f64 = w.iter().zip(&s.g).map(|(w, g)| r.sigma2 * w * w * g * g).sum();
    Ok(r.p0 * coherent * coherent / (r.sigma_d2 + noise))
}
