//! Proximal maps for the composite term on `s`.
//!
//! The scalar problem `min_s (1/(2γ)) (t - s)² + ν |s|^q` has a minimizer with
//! the sign of `t` and magnitude `r ∈ [0, |t|]` solving
//! `r + γ q ν r^{q-1} = |t|`. We bisect on that magnitude; `q = 1` is plain
//! soft-thresholding.

use nalgebra::DVector;

use crate::dual::{DualState, SRegularizer};
use crate::error::{Error, Result};
use crate::problem::lp_norm;

/// Maximum bisection steps before giving up.
pub const BISECTION_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    pub gamma: f64,
    pub nu: f64,
    pub q: f64,
    /// Absolute bisection tolerance on the magnitude of `s`.
    pub tol: f64,
}

impl ProxParams {
    pub fn new(gamma: f64, nu: f64, q: f64) -> Self {
        ProxParams { gamma, nu, q, tol: 1e-12 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Prox(format!("step gamma = {} must be > 0", self.gamma)));
        }
        if !(self.nu >= 0.0) {
            return Err(Error::Prox(format!("weight nu = {} must be >= 0", self.nu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Prox(format!("tolerance {} must be > 0", self.tol)));
        }
        if !(self.q >= 1.0) || self.q.is_infinite() {
            return Err(Error::Prox(format!(
                "exponent q = {} must be finite and >= 1 (|s|^q is nonconvex below 1)",
                self.q
            )));
        }
        Ok(())
    }
}

/// `sign(t) max(|t| - k, 0)`.
pub fn soft_threshold(t: f64, k: f64) -> f64 {
    t.signum() * (t.abs() - k).max(0.0)
}

/// Minimizer of `(1/(2γ)) (t - s)² + ν |s|^q`.
pub fn prox_lq_scalar(t: f64, params: &ProxParams) -> Result<f64> {
    params.validate()?;
    let ProxParams { gamma, nu, q, tol } = *params;
    if nu == 0.0 || t == 0.0 {
        return Ok(t);
    }
    if q == 1.0 {
        return Ok(soft_threshold(t, gamma * nu));
    }
    let target = t.abs();
    let c = gamma * q * nu;
    let phi = |r: f64| r + c * r.powf(q - 1.0) - target;
    let (mut lo, mut hi) = (0.0f64, target);
    let mut steps = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
        if steps > BISECTION_CAP {
            return Err(Error::BisectionCap(BISECTION_CAP));
        }
    }
    // Newton polish inside the bracket so the stationarity residual is at
    // rounding level rather than tol times the local slope.
    let mut r = 0.5 * (lo + hi);
    for _ in 0..4 {
        let res = phi(r);
        let slope = 1.0 + c * (q - 1.0) * r.powf(q - 2.0);
        let next = r - res / slope;
        if !next.is_finite() || next < lo || next > hi || phi(next).abs() >= res.abs() {
            break;
        }
        r = next;
    }
    Ok(t.signum() * r)
}

/// Prox of `γ ν ||s||_q^q`: `z` passes through, `s` is mapped coordinatewise.
pub fn prox_r(state: &DualState, params: &ProxParams) -> Result<DualState> {
    let s = state
        .s
        .iter()
        .map(|&t| prox_lq_scalar(t, params))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DualState::new(state.z.clone(), DVector::from_vec(s)))
}

/// Clamp every entry to `[-1, 1]`.
pub fn project_box(s: &DVector<f64>) -> DVector<f64> {
    s.map(|v| v.clamp(-1.0, 1.0))
}

/// Prox of `γ R` for a full [`SRegularizer`]: box projection for `q = ∞`,
/// coordinatewise prox for the plain penalty, and for the ball-constrained
/// penalty the coordinatewise prox with weight `ν + λ`, where the multiplier
/// `λ >= 0` is found by bisection so that `||s||_q = 1` when the unconstrained
/// result leaves the ball.
pub fn prox_regularizer(state: &DualState, gamma: f64, reg: &SRegularizer) -> Result<DualState> {
    if reg.is_box() {
        return Ok(DualState::new(state.z.clone(), project_box(&state.s)));
    }
    let base = ProxParams::new(gamma, reg.nu, reg.q);
    let shrink = |weight: f64| -> Result<DVector<f64>> {
        let params = ProxParams { nu: weight, ..base };
        if reg.q == 2.0 {
            params.validate()?;
            return Ok(&state.s / (1.0 + 2.0 * gamma * weight));
        }
        let s = state
            .s
            .iter()
            .map(|&t| prox_lq_scalar(t, &params))
            .collect::<Result<Vec<f64>>>()?;
        Ok(DVector::from_vec(s))
    };
    let free = shrink(reg.nu)?;
    if !reg.ball || lp_norm(free.as_slice(), reg.q) <= 1.0 {
        return Ok(DualState::new(state.z.clone(), free));
    }
    if reg.q == 2.0 {
        // Radial: shrink then rescale onto the sphere.
        let norm = free.norm();
        return Ok(DualState::new(state.z.clone(), free / norm));
    }
    let mut hi = reg.nu.max(1.0);
    let mut s_hi = shrink(hi)?;
    let mut guard = 0;
    while lp_norm(s_hi.as_slice(), reg.q) > 1.0 {
        hi *= 2.0;
        s_hi = shrink(hi)?;
        guard += 1;
        if guard > BISECTION_CAP {
            return Err(Error::BisectionCap(BISECTION_CAP));
        }
    }
    let mut lo = reg.nu;
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        let s_mid = shrink(mid)?;
        if lp_norm(s_mid.as_slice(), reg.q) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
            s_hi = s_mid;
        }
    }
    Ok(DualState::new(state.z.clone(), s_hi))
}
