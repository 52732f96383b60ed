//! Per-sample weight-update cores.
//!
//! [`LinearFilter`] is the NLMS filter on the raw input window. The nonlinear
//! branch uses [`ProportionateFlaf`] (classic proportionate update) and
//! [`ZaFlaf`] (proportionate update plus a reweighted zero attractor scaled by
//! a nonparametric variable step size).

use crate::error::{config_err, FlafError, Result};
use crate::expansion::dot;

/// Element-wise sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(w: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w.signum()
    }
}

fn check_alpha_xi(alpha: f64, xi: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&alpha) {
        return Err(config_err(format!("alpha = {alpha} outside [-1, 1]")));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(config_err(format!("xi = {xi} must be positive")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!(
            "{name} = {v} must be positive and finite"
        )))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!(
            "{name} = {v} must be nonnegative and finite"
        )))
    }
}

/// Diagonal of the proportionate matrix:
/// `q_k = (1 - alpha) / (2 Me) + (1 + alpha) |w_k| / (2 ||w||_1 + xi)`.
pub fn proportionate_weights(w: &[f64], alpha: f64, xi: f64) -> Result<Vec<f64>> {
    check_alpha_xi(alpha, xi)?;
    if let Some(v) = w.iter().find(|v| !v.is_finite()) {
        return Err(config_err(format!("non-finite coefficient {v}")));
    }
    let mut q = vec![0.0; w.len()];
    proportionate_weights_into(w, alpha, xi, &mut q);
    Ok(q)
}

#[inline]
pub(crate) fn proportionate_weights_into(w: &[f64], alpha: f64, xi: f64, q: &mut [f64]) {
    let uniform = (1.0 - alpha) / (2.0 * w.len() as f64);
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let prop = (1.0 + alpha) / (2.0 * l1 + xi);
    for (qk, wk) in q.iter_mut().zip(w) {
        *qk = uniform + prop * wk.abs();
    }
}

/// NLMS hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmsParams {
    pub step_size: f64,
    pub regularization: f64,
}

impl NlmsParams {
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("mu_L", self.step_size)?;
        check_positive("delta_L", self.regularization)
    }
}

/// NLMS filter on the linear (non-expanded) input window.
#[derive(Debug, Clone)]
pub struct LinearFilter {
    weights: Vec<f64>,
    params: NlmsParams,
}

impl LinearFilter {
    pub fn new(len: usize, params: NlmsParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            weights: vec![0.0; len],
            params,
        })
    }

    pub fn with_weights(weights: Vec<f64>, params: NlmsParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { weights, params })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> &NlmsParams {
        &self.params
    }

    #[inline]
    pub fn output(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x)
    }

    /// `w <- w + mu x e / (||x||^2 + delta)`.
    #[inline]
    pub fn adapt(&mut self, x: &[f64], err: f64) {
        debug_assert_eq!(x.len(), self.weights.len());
        let scale = self.params.step_size * err / (dot(x, x) + self.params.regularization);
        for (w, xi) in self.weights.iter_mut().zip(x) {
            *w += scale * xi;
        }
    }
}

/// Hyperparameters of a proportionate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionateParams {
    pub step_size: f64,
    pub regularization: f64,
    /// Proportionality factor in `[-1, 1]`.
    pub alpha: f64,
    /// Small constant in the weighting-matrix denominator.
    pub xi: f64,
}

impl ProportionateParams {
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("mu", self.step_size)?;
        check_positive("delta", self.regularization)?;
        check_alpha_xi(self.alpha, self.xi)
    }
}

/// Computes `q` from the pre-update weights and returns the common scalar
/// `mu e / (g' Q g + delta)` of the proportionate step.
#[inline]
fn proportionate_scale(
    weights: &[f64],
    g: &[f64],
    err: f64,
    p: &ProportionateParams,
    q: &mut [f64],
) -> f64 {
    proportionate_weights_into(weights, p.alpha, p.xi, q);
    let energy: f64 = q.iter().zip(g).map(|(qk, gk)| qk * gk * gk).sum();
    p.step_size * err / (energy + p.regularization)
}

fn check_weights(weights: &[f64], len: usize) -> Result<()> {
    if weights.len() != len {
        return Err(FlafError::LengthMismatch {
            got: weights.len(),
            expected: len,
        });
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(config_err("initial weights must be finite"));
    }
    Ok(())
}

/// Proportionate functional-link filter.
#[derive(Debug, Clone)]
pub struct ProportionateFlaf {
    weights: Vec<f64>,
    params: ProportionateParams,
    q: Vec<f64>,
}

impl ProportionateFlaf {
    pub fn new(len: usize, params: ProportionateParams) -> Result<Self> {
        Self::with_weights(vec![0.0; len], params)
    }

    pub fn with_weights(weights: Vec<f64>, params: ProportionateParams) -> Result<Self> {
        params.validate()?;
        check_weights(&weights, weights.len())?;
        let q = vec![0.0; weights.len()];
        Ok(Self { weights, params, q })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> &ProportionateParams {
        &self.params
    }

    #[inline]
    pub fn output(&self, g: &[f64]) -> f64 {
        dot(&self.weights, g)
    }

    /// `w <- w + mu Q g e / (g' Q g + delta)`, `Q` from the pre-update weights.
    #[inline]
    pub fn adapt(&mut self, g: &[f64], err: f64) {
        debug_assert_eq!(g.len(), self.weights.len());
        let scale = proportionate_scale(&self.weights, g, err, &self.params, &mut self.q);
        for ((w, qk), gk) in self.weights.iter_mut().zip(&self.q).zip(g) {
            *w += scale * qk * gk;
        }
    }
}

/// Hyperparameters of the VSS reweighted-zero-attractor filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZaParams {
    pub proportionate: ProportionateParams,
    /// Penalty weight `gamma`.
    pub gamma: f64,
    /// Reweighting constant `epsilon`.
    pub epsilon: f64,
    /// Forgetting factor of the power estimates, in `(0, 1)`.
    pub beta: f64,
    /// Small constant in the step-size denominator.
    pub xi_vss: f64,
}

impl ZaParams {
    pub fn validate(&self) -> Result<()> {
        self.proportionate.validate()?;
        check_nonnegative("gamma", self.gamma)?;
        check_positive("epsilon", self.epsilon)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(config_err(format!("beta = {} outside (0, 1)", self.beta)));
        }
        check_positive("xi_vss", self.xi_vss)
    }
}

/// Exponentially weighted power estimates feeding the variable step size.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PowerEstimates {
    pub desired: f64,
    pub linear_output: f64,
    pub l1_output: f64,
    pub l1_error: f64,
}

/// Reweighted zero-attractor proportionate FLAF with variable step size.
#[derive(Debug, Clone)]
pub struct ZaFlaf {
    weights: Vec<f64>,
    params: ZaParams,
    powers: PowerEstimates,
    q: Vec<f64>,
}

impl ZaFlaf {
    pub fn new(len: usize, params: ZaParams) -> Result<Self> {
        Self::with_weights(vec![0.0; len], params)
    }

    pub fn with_weights(weights: Vec<f64>, params: ZaParams) -> Result<Self> {
        params.validate()?;
        check_weights(&weights, weights.len())?;
        let q = vec![0.0; weights.len()];
        Ok(Self {
            weights,
            params,
            powers: PowerEstimates::default(),
            q,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> &ZaParams {
        &self.params
    }

    pub fn powers(&self) -> &PowerEstimates {
        &self.powers
    }

    pub fn set_powers(&mut self, powers: PowerEstimates) {
        self.powers = powers;
    }

    #[inline]
    pub fn output(&self, g: &[f64]) -> f64 {
        dot(&self.weights, g)
    }

    /// One step of `s <- beta s + (1 - beta) theta^2` for each tracked sequence.
    #[inline]
    pub fn update_power_estimates(&mut self, d: f64, y_linear: f64, y_l1: f64, e_l1: f64) {
        let b = self.params.beta;
        let smooth = |s: f64, v: f64| b * s + (1.0 - b) * v * v;
        let p = &mut self.powers;
        p.desired = smooth(p.desired, d);
        p.linear_output = smooth(p.linear_output, y_linear);
        p.l1_output = smooth(p.l1_output, y_l1);
        p.l1_error = smooth(p.l1_error, e_l1);
    }

    /// `mu_R = |1 - sqrt(|s_d - s_yL - s_yFL1|) / (s_eFL1 + xi)|`.
    #[inline]
    pub fn vss_step_size(&self) -> f64 {
        let p = &self.powers;
        let residual = (p.desired - p.linear_output - p.l1_output).abs().sqrt();
        (1.0 - residual / (p.l1_error + self.params.xi_vss)).abs()
    }

    /// Proportionate step plus the attractor
    /// `- eps gamma mu_R sgn(w) / (1 + eps |w|)`, all on pre-update weights.
    /// Uses the power estimates as they stand; returns the `mu_R` applied.
    #[inline]
    pub fn adapt(&mut self, g: &[f64], err: f64) -> f64 {
        debug_assert_eq!(g.len(), self.weights.len());
        let mu_r = self.vss_step_size();
        let eps = self.params.epsilon;
        let attract = eps * self.params.gamma * mu_r;
        let scale = proportionate_scale(
            &self.weights,
            g,
            err,
            &self.params.proportionate,
            &mut self.q,
        );
        for ((w, qk), gk) in self.weights.iter_mut().zip(&self.q).zip(g) {
            let old = *w;
            *w = old + scale * qk * gk - attract * sgn(old) / (1.0 + eps * old.abs());
        }
        mu_r
    }

    /// Power-estimate refresh followed by the weight update, for one sample.
    #[inline]
    pub fn step(&mut self, g: &[f64], d: f64, y_linear: f64, y_l1: f64, e_l1: f64) -> f64 {
        self.update_power_estimates(d, y_linear, y_l1, e_l1);
        self.adapt(g, e_l1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prop_params(alpha: f64) -> ProportionateParams {
        ProportionateParams {
            step_size: 0.1,
            regularization: 1e-3,
            alpha,
            xi: 0.01,
        }
    }

    fn za_params(gamma: f64) -> ZaParams {
        ZaParams {
            proportionate: prop_params(0.0),
            gamma,
            epsilon: 1e-2,
            beta: 0.99,
            xi_vss: 0.01,
        }
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-0.0), 0.0);
        assert_eq!(sgn(3.0), 1.0);
        assert_eq!(sgn(-1e-300), -1.0);
    }

    #[test]
    fn weights_uniform_at_alpha_minus_one() {
        let q = proportionate_weights(&[0.3, -2.0, 0.0, 5.0, 1.0], -1.0, 0.01).unwrap();
        for v in q {
            assert_relative_eq!(v, 0.2, max_relative = 1e-15);
        }
    }

    #[test]
    fn weights_single_active_tap() {
        let q = proportionate_weights(&[1.0, 0.0, 0.0, 0.0], 0.0, 1e-300).unwrap();
        let expected = [0.625, 0.125, 0.125, 0.125];
        for (v, e) in q.iter().zip(expected) {
            assert_relative_eq!(*v, e, max_relative = 1e-12);
        }
        assert_relative_eq!(q.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn weights_zero_vector() {
        let q = proportionate_weights(&[0.0; 6], 0.0, 0.01).unwrap();
        for v in q {
            assert_relative_eq!(v, 1.0 / 12.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn weights_reject_bad_parameters() {
        assert!(proportionate_weights(&[1.0], 1.5, 0.01).is_err());
        assert!(proportionate_weights(&[1.0], 0.0, 0.0).is_err());
        assert!(proportionate_weights(&[f64::NAN], 0.0, 0.01).is_err());
    }

    #[test]
    fn nlms_zero_error_and_zero_input() {
        let params = NlmsParams {
            step_size: 0.1,
            regularization: 1e-3,
        };
        let mut f = LinearFilter::with_weights(vec![0.2, -0.4], params).unwrap();
        f.adapt(&[0.5, 0.1], 0.0);
        assert_eq!(f.weights(), &[0.2, -0.4]);
        f.adapt(&[0.0, 0.0], 1.0);
        assert_eq!(f.weights(), &[0.2, -0.4]);
    }

    #[test]
    fn nlms_single_step() {
        let params = NlmsParams {
            step_size: 0.1,
            regularization: 1e-3,
        };
        let mut f = LinearFilter::new(2, params).unwrap();
        f.adapt(&[1.0, 0.0], 1.0);
        assert_relative_eq!(f.weights()[0], 0.1 / 1.001, max_relative = 1e-14);
        assert_relative_eq!(f.weights()[0], 0.09990, epsilon = 1e-5);
        assert_eq!(f.weights()[1], 0.0);
        assert_eq!(f.params(), &params);
    }

    #[test]
    fn pflaf_trivial_cases() {
        let mut f =
            ProportionateFlaf::with_weights(vec![0.1, -0.3, 0.0], prop_params(0.0)).unwrap();
        f.adapt(&[0.5, 0.5, 0.5], 0.0);
        assert_eq!(f.weights(), &[0.1, -0.3, 0.0]);
        f.adapt(&[0.0; 3], 2.0);
        assert_eq!(f.weights(), &[0.1, -0.3, 0.0]);
    }

    #[test]
    fn pflaf_single_step() {
        let mut f = ProportionateFlaf::new(2, prop_params(0.0)).unwrap();
        f.adapt(&[1.0, 1.0], 1.0);
        // Independent scripted step: q = (0.25, 0.25), g'Qg = 0.5.
        let expected = 0.1 * 0.25 / (0.5 + 0.001);
        for w in f.weights() {
            assert_relative_eq!(*w, expected, max_relative = 1e-14);
            assert_relative_eq!(*w, 0.04990, epsilon = 1e-5);
        }
    }

    #[test]
    fn vss_power_examples() {
        let mut f = ZaFlaf::new(1, za_params(1e-5)).unwrap();
        assert_eq!(f.vss_step_size(), 1.0);
        let tiny = ZaParams {
            xi_vss: 1e-300,
            ..za_params(1e-5)
        };
        f = ZaFlaf::new(1, tiny).unwrap();
        f.set_powers(PowerEstimates {
            desired: 1.0,
            l1_error: 1.0,
            ..Default::default()
        });
        assert_relative_eq!(f.vss_step_size(), 0.0, epsilon = 1e-15);
        f.set_powers(PowerEstimates {
            desired: 4.0,
            l1_error: 1.0,
            ..Default::default()
        });
        assert_relative_eq!(f.vss_step_size(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn power_recursion() {
        let mut f = ZaFlaf::new(1, za_params(1e-5)).unwrap();
        f.update_power_estimates(1.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(f.powers().desired, 0.01, max_relative = 1e-12);
        assert_relative_eq!(f.powers().l1_error, 0.01, max_relative = 1e-12);

        let mut prev = f.powers().desired;
        for _ in 0..100 {
            f.update_power_estimates(0.0, 0.0, 0.0, 0.0);
            let cur = f.powers().desired;
            assert_relative_eq!(cur, 0.99 * prev, max_relative = 1e-12);
            prev = cur;
        }

        for _ in 0..5000 {
            f.update_power_estimates(0.7, -0.7, 0.7, 0.7);
        }
        let p = f.powers();
        for v in [p.desired, p.linear_output, p.l1_output, p.l1_error] {
            assert_relative_eq!(v, 0.49, max_relative = 1e-10);
        }
    }

    #[test]
    fn za_zero_weights_zero_error_stay_zero() {
        let mut f = ZaFlaf::new(4, za_params(1e-2)).unwrap();
        f.adapt(&[0.3, 0.2, -0.1, 0.9], 0.0);
        assert!(f.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn za_attractor_only_step() {
        let mut f = ZaFlaf::with_weights(vec![0.5], za_params(1e-5)).unwrap();
        let mu_r = f.adapt(&[0.0], 0.0);
        assert_eq!(mu_r, 1.0);
        let expected = 0.5 - (1e-2 * 1e-5) / (1.0 + 0.005);
        assert_relative_eq!(f.weights()[0], expected, max_relative = 1e-15);
        assert_relative_eq!(f.weights()[0], 0.4999999005, epsilon = 1e-10);
    }

    #[test]
    fn za_reduces_to_pflaf_without_penalty() {
        let w0 = vec![0.2, -0.1, 0.0, 0.7, -0.05];
        let g = [0.3, -0.9, 0.1, 0.5, 1.0];
        let mut za = ZaFlaf::with_weights(w0.clone(), za_params(0.0)).unwrap();
        let mut pf = ProportionateFlaf::with_weights(w0, prop_params(0.0)).unwrap();
        za.update_power_estimates(0.5, 0.1, 0.2, 0.3);
        za.adapt(&g, 0.37);
        pf.adapt(&g, 0.37);
        for (a, b) in za.weights().iter().zip(pf.weights()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn updates_leave_hyperparameters_untouched() {
        let mut za = ZaFlaf::with_weights(vec![0.2, -0.3], za_params(1e-3)).unwrap();
        let before = *za.params();
        za.step(&[0.5, 0.4], 0.3, 0.1, 0.05, 0.15);
        assert_eq!(*za.params(), before);
    }

    #[test]
    fn parameter_validation() {
        let mut p = za_params(1e-5);
        p.beta = 1.0;
        assert!(ZaFlaf::new(2, p).is_err());
        let mut p = za_params(1e-5);
        p.proportionate.alpha = -1.1;
        assert!(ZaFlaf::new(2, p).is_err());
        let n = NlmsParams {
            step_size: 0.1,
            regularization: 0.0,
        };
        assert!(LinearFilter::new(2, n).is_err());
    }
}
