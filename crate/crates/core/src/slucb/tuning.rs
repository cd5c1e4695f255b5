use serde::Serialize;

use super::schedule::build_schedule;
use crate::error::{Error, Result};

/// Model constants and scale knobs from which the policy parameters are
/// derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    pub sigma: f64,
    pub nu: f64,
    pub rho: f64,
    pub radius: f64,
    pub s: usize,
    pub k: usize,
    pub horizon: usize,
    pub d: usize,
    pub delta: f64,
    pub lambda: f64,
    /// Multiplier for the order-only exploration length.
    pub c_scale: f64,
    /// Multiplier applied to alpha (1.0 = formula value).
    pub alpha_scale: f64,
    /// Multiplier applied to gamma (1.0 = formula value).
    pub gamma_scale: f64,
    /// Fixes `n0` instead of deriving it; still clamped to `T / 2`.
    pub n0_override: Option<usize>,
}

impl ModelConstants {
    /// Unit model constants with `delta = 0.1`, `lambda = 1` and unit scales.
    pub fn unit(s: usize, k: usize, horizon: usize, d: usize, radius: f64) -> Self {
        Self {
            sigma: 1.0,
            nu: 1.0,
            rho: 1.0,
            radius,
            s,
            k,
            horizon,
            d,
            delta: 0.1,
            lambda: 1.0,
            c_scale: 1.0,
            alpha_scale: 1.0,
            gamma_scale: 1.0,
            n0_override: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma", self.sigma),
            ("nu", self.nu),
            ("rho", self.rho),
            ("radius", self.radius),
            ("lambda", self.lambda),
            ("c_scale", self.c_scale),
            ("alpha_scale", self.alpha_scale),
            ("gamma_scale", self.gamma_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.s == 0 || self.k == 0 || self.horizon == 0 || self.d == 0 {
            return Err(Error::config("s, k, T and d must be positive"));
        }
        Ok(())
    }

    /// `ln(k T d / delta)`.
    pub fn log_term(&self) -> f64 {
        log_term(self.k, self.horizon, self.d, self.delta)
    }
}

pub fn log_term(k: usize, horizon: usize, d: usize, delta: f64) -> f64 {
    ((k as f64) * (horizon as f64) * (d as f64) / delta).ln()
}

/// `rho^-1 (nu sigma tau)^2 s^3 ln^4(k T d / (delta lambda))`.
pub fn n0_formula(c: &ModelConstants, tau_tilde: usize) -> f64 {
    let l = ((c.k as f64) * (c.horizon as f64) * (c.d as f64) / (c.delta * c.lambda)).ln();
    let tau = tau_tilde as f64;
    (c.nu * c.sigma * tau).powi(2) * (c.s as f64).powi(3) * l.powi(4) / c.rho
}

/// `sigma nu sqrt(s tau) ln(sigma rho^-1 d k T / delta)`.
#[allow(clippy::too_many_arguments)]
pub fn alpha_formula(
    sigma: f64,
    nu: f64,
    rho: f64,
    s: usize,
    tau_tilde: usize,
    k: usize,
    horizon: usize,
    d: usize,
    delta: f64,
) -> f64 {
    let l = (sigma / rho * (d as f64) * (k as f64) * (horizon as f64) / delta).ln();
    sigma * nu * ((s * tau_tilde) as f64).sqrt() * l
}

/// `sigma r sqrt(s ln(k T d / delta))`.
pub fn beta_formula(sigma: f64, radius: f64, s: usize, log_term: f64) -> f64 {
    sigma * radius * ((s as f64) * log_term).sqrt()
}

/// `sigma (lambda^{1/2} + nu + sigma) ln^{3/2}(k T d / delta)`.
pub fn gamma_formula(sigma: f64, nu: f64, lambda: f64, log_term: f64) -> f64 {
    sigma * (lambda.sqrt() + nu + sigma) * log_term.powf(1.5)
}

/// Exploration length and epoch count, iterated until the epoch count
/// implied by `n0` reproduces itself.
fn exploration_length(c: &ModelConstants) -> Result<(usize, usize)> {
    let cap = (c.horizon / 2).max(1);
    let clamp = |raw: f64| -> usize {
        if raw.is_finite() {
            (raw.ceil() as usize).clamp(1, cap)
        } else {
            cap
        }
    };
    if let Some(n0) = c.n0_override {
        let n0 = n0.clamp(1, cap);
        return Ok((n0, build_schedule(c.horizon, n0)?.len()));
    }
    let mut tau = build_schedule(c.horizon, 1)?.len();
    let mut n0 = clamp(c.c_scale * n0_formula(c, tau));
    for _ in 0..32 {
        let next_tau = build_schedule(c.horizon, n0)?.len();
        let next_n0 = clamp(c.c_scale * n0_formula(c, next_tau));
        if next_tau == tau && next_n0 == n0 {
            break;
        }
        tau = next_tau;
        n0 = next_n0;
    }
    Ok((n0, build_schedule(c.horizon, n0)?.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlucbParams {
    pub n0: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub s: usize,
    pub radius: f64,
    pub sigma: f64,
    pub nu: f64,
    pub rho: f64,
    pub delta: f64,
    pub c_scale: f64,
    pub k: usize,
    pub horizon: usize,
    pub d: usize,
    pub tau_tilde: usize,
}

impl SlucbParams {
    pub fn log_term(&self) -> f64 {
        log_term(self.k, self.horizon, self.d, self.delta)
    }
}

pub fn compute_tuning(c: &ModelConstants) -> Result<SlucbParams> {
    c.validate()?;
    let (n0, tau_tilde) = exploration_length(c)?;
    let alpha = c.alpha_scale
        * alpha_formula(c.sigma, c.nu, c.rho, c.s, tau_tilde, c.k, c.horizon, c.d, c.delta);
    let beta = beta_formula(c.sigma, c.radius, c.s, c.log_term());
    Ok(SlucbParams {
        n0,
        alpha,
        beta,
        lambda: c.lambda,
        s: c.s,
        radius: c.radius,
        sigma: c.sigma,
        nu: c.nu,
        rho: c.rho,
        delta: c.delta,
        c_scale: c.c_scale,
        k: c.k,
        horizon: c.horizon,
        d: c.d,
        tau_tilde,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsucbParams {
    pub n0: usize,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub s: usize,
    pub radius: f64,
    pub delta: f64,
    pub sigma: f64,
    pub nu: f64,
    pub rho: f64,
    pub c_scale: f64,
    pub k: usize,
    pub horizon: usize,
    pub d: usize,
    pub tau_tilde: usize,
    /// Number of screening groups, `ceil(log2(beta T))`, at least 1.
    pub zeta_max: usize,
}

pub fn zeta_max(beta: f64, horizon: usize) -> usize {
    let v = (beta * horizon as f64).log2().ceil();
    if v.is_finite() && v >= 1.0 {
        v as usize
    } else {
        1
    }
}

pub fn compute_ssucb_tuning(c: &ModelConstants) -> Result<SsucbParams> {
    c.validate()?;
    let (n0, tau_tilde) = exploration_length(c)?;
    let l = c.log_term();
    let beta = beta_formula(c.sigma, c.radius, c.s, l);
    let gamma = c.gamma_scale * gamma_formula(c.sigma, c.nu, c.lambda, l);
    Ok(SsucbParams {
        n0,
        beta,
        gamma,
        lambda: c.lambda,
        s: c.s,
        radius: c.radius,
        delta: c.delta,
        sigma: c.sigma,
        nu: c.nu,
        rho: c.rho,
        c_scale: c.c_scale,
        k: c.k,
        horizon: c.horizon,
        d: c.d,
        tau_tilde,
        zeta_max: zeta_max(beta, c.horizon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_reference_value() {
        // sqrt(12) * ln(1e7)
        let a = alpha_formula(1.0, 1.0, 1.0, 4, 3, 10, 1000, 100, 0.1);
        assert!((a - 12f64.sqrt() * 1e7f64.ln()).abs() < 1e-12);
        assert!((a - 55.83).abs() < 0.01);
    }

    #[test]
    fn beta_collapses_when_log_is_one() {
        assert_eq!(beta_formula(1.0, 1.0, 1, 1.0), 1.0);
        let l = log_term(1, 1, 1, 1.0 / std::f64::consts::E);
        assert!((beta_formula(1.0, 1.0, 1, l) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_horizon_clamps_n0() {
        let c = ModelConstants::unit(4, 10, 40, 100, 1.0);
        let p = compute_tuning(&c).unwrap();
        assert_eq!(p.n0, 20);
        let c1 = ModelConstants::unit(4, 10, 1, 100, 1.0);
        assert_eq!(compute_tuning(&c1).unwrap().n0, 1);
    }

    #[test]
    fn c_scale_shrinks_n0_and_fixed_point_is_consistent() {
        let mut c = ModelConstants::unit(5, 60, 1300, 100, 5f64.sqrt());
        c.c_scale = 1e-7;
        let p = compute_tuning(&c).unwrap();
        assert!(p.n0 > 1 && p.n0 < 650);
        assert_eq!(build_schedule(1300, p.n0).unwrap().len(), p.tau_tilde);
        let raw = (c.c_scale * n0_formula(&c, p.tau_tilde)).ceil() as usize;
        assert_eq!(p.n0, raw);
    }

    #[test]
    fn override_and_validation() {
        let mut c = ModelConstants::unit(5, 60, 1300, 100, 1.0);
        c.n0_override = Some(40);
        assert_eq!(compute_tuning(&c).unwrap().n0, 40);
        c.delta = 1.0;
        assert!(compute_tuning(&c).is_err());
    }

    #[test]
    fn gamma_and_groups() {
        let c = ModelConstants::unit(1, 1, 100, 1, 1.0);
        let p = compute_ssucb_tuning(&c).unwrap();
        let l = (100f64 / 0.1).ln();
        assert!((p.gamma - 3.0 * l.powf(1.5)).abs() < 1e-12);
        assert_eq!(p.zeta_max, (p.beta * 100.0).log2().ceil() as usize);
        assert_eq!(zeta_max(0.001, 10), 1);
        // 2^-zeta_max beta <= 1/T
        assert!(p.beta / 2f64.powi(p.zeta_max as i32) <= 1.0 / 100.0);
    }
}
