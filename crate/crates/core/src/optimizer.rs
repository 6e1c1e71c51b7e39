//! First-order parameter updates: SGD, SGD with momentum, Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Heavy-ball coefficient for `sgd_momentum`.
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64) -> Self {
        Self { kind: OptimizerKind::Sgd, learning_rate, ..Self::adam(learning_rate) }
    }

    pub fn sgd_momentum(learning_rate: f64, momentum: f64) -> Self {
        Self { kind: OptimizerKind::SgdMomentum, momentum, ..Self::sgd(learning_rate) }
    }

    /// Adam with the usual `β1 = 0.9, β2 = 0.999, ε = 1e-8`.
    pub fn adam(learning_rate: f64) -> Self {
        Self { kind: OptimizerKind::Adam, learning_rate, momentum: 0.9, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam(1e-3)
    }
}

/// Update rule plus its per-parameter buffers.
///
/// Buffers are allocated on the first update and must keep the same layout
/// afterwards.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, step: 0, first: Vec::new(), second: Vec::new() })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn ensure_buffers(&mut self, params: &[&mut [f64]]) -> Result<()> {
        let needs_second = self.config.kind == OptimizerKind::Adam;
        if self.first.is_empty() && self.step == 0 {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            if needs_second {
                self.second = self.first.clone();
            }
            return Ok(());
        }
        if self.first.len() != params.len() || self.first.iter().zip(params).any(|(b, p)| b.len() != p.len()) {
            return Err(Error::Shape("parameter layout changed between optimizer updates".into()));
        }
        Ok(())
    }

    /// One update of every parameter tensor from its gradient.
    ///
    /// * sgd: `p ← p − η g`
    /// * sgd_momentum: `v ← μ v + g`, `p ← p − η v`
    /// * adam: bias-corrected moments, `p ← p − η m̂ / (√v̂ + ε)`
    ///
    /// A non-finite gradient entry is reported before anything is modified.
    pub fn apply_update(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
            return Err(Error::Shape("parameters and gradients differ in layout".into()));
        }
        if let Some((t, _)) = grads.iter().enumerate().find(|(_, g)| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!("gradient of parameter tensor {t}")));
        }
        self.ensure_buffers(params)?;
        self.step += 1;
        let c = self.config;
        let lr = c.learning_rate;
        match c.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (pi, gi) in p.iter_mut().zip(g.iter()) {
                        *pi -= lr * gi;
                    }
                }
            }
            OptimizerKind::SgdMomentum => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((pi, gi), vi) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                        *vi = c.momentum * *vi + gi;
                        *pi -= lr * *vi;
                    }
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let bc1 = 1.0 - c.beta1.powi(t);
                let bc2 = 1.0 - c.beta2.powi(t);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
                    for (((pi, gi), mi), vi) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = c.beta1 * *mi + (1.0 - c.beta1) * gi;
                        *vi = c.beta2 * *vi + (1.0 - c.beta2) * gi * gi;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *pi -= lr * m_hat / (v_hat.sqrt() + c.epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(state: &mut OptimizerState, p: &mut Vec<f64>, g: &[f64]) -> Result<()> {
        state.apply_update(&mut [p.as_mut_slice()], &[g])
    }

    #[test]
    fn sgd_zero_gradient_keeps_params() {
        let mut s = OptimizerState::new(OptimizerConfig::sgd(0.005)).unwrap();
        let mut p = vec![1.0, -2.0];
        update(&mut s, &mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn sgd_step_arithmetic() {
        let mut s = OptimizerState::new(OptimizerConfig::sgd(0.005)).unwrap();
        let mut p = vec![1.0];
        update(&mut s, &mut p, &[2.0]).unwrap();
        assert!((p[0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02, 1e4] {
            let mut s = OptimizerState::new(OptimizerConfig::adam(0.01)).unwrap();
            let mut p = vec![0.5];
            update(&mut s, &mut p, &[g]).unwrap();
            let moved = 0.5 - p[0];
            assert!((moved - 0.01 * g.signum()).abs() < 1e-8 * 0.01 / g.abs() + 1e-15, "g={g}");
        }
    }

    #[test]
    fn adam_without_averaging_is_normalized_sgd() {
        let cfg = OptimizerConfig { beta1: 0.0, beta2: 0.0, ..OptimizerConfig::adam(0.1) };
        let mut s = OptimizerState::new(cfg).unwrap();
        let mut p = vec![0.0, 0.0, 0.0];
        let g = [2.0, -0.5, 1e-3];
        for _ in 0..3 {
            let before = p.clone();
            update(&mut s, &mut p, &g).unwrap();
            for i in 0..3 {
                let expected = 0.1 * g[i] / (g[i].abs() + 1e-8);
                assert!(((before[i] - p[i]) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn momentum_accumulates() {
        let mut s = OptimizerState::new(OptimizerConfig::sgd_momentum(0.1, 0.5)).unwrap();
        let mut p = vec![0.0];
        update(&mut s, &mut p, &[1.0]).unwrap();
        update(&mut s, &mut p, &[1.0]).unwrap();
        // v1 = 1, v2 = 1.5
        assert!((p[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_rejected_untouched() {
        let mut s = OptimizerState::new(OptimizerConfig::adam(0.1)).unwrap();
        let mut p = vec![1.0, 2.0];
        assert!(matches!(update(&mut s, &mut p, &[0.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn layout_changes_are_rejected() {
        let mut s = OptimizerState::new(OptimizerConfig::adam(0.1)).unwrap();
        let mut p = vec![1.0, 2.0];
        update(&mut s, &mut p, &[0.1, 0.1]).unwrap();
        let mut q = vec![1.0];
        assert!(update(&mut s, &mut q, &[0.1]).is_err());
        assert!(s.apply_update(&mut [p.as_mut_slice()], &[&[0.1][..]]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerState::new(OptimizerConfig::sgd(-1.0)).is_err());
        assert!(OptimizerState::new(OptimizerConfig::sgd_momentum(0.1, 1.0)).is_err());
        assert!(OptimizerState::new(OptimizerConfig { epsilon: 0.0, ..OptimizerConfig::adam(0.1) }).is_err());
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let run = || {
            let mut s = OptimizerState::new(OptimizerConfig::adam(0.05)).unwrap();
            let mut p = vec![0.3, -0.7, 1.1];
            for t in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| (x * 3.0 + t as f64).sin()).collect();
                update(&mut s, &mut p, &g).unwrap();
            }
            p
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
