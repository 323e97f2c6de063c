use std::collections::BTreeMap;

use super::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every parameter plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros: BTreeMap<String, Vec<f64>> = params
            .iter()
            .map(|(k, t)| (k.to_string(), vec![0.0; t.len()]))
            .collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One bias-corrected Adam update of every parameter that has a gradient.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState) -> Result<()> {
    for (name, g) in grads.iter() {
        let p = params.require(name)?;
        let m = state.m.get(name).ok_or_else(|| Error::MissingTensor(name.to_string()))?;
        if p.shape() != g.shape() || m.len() != g.len() {
            return Err(Error::ShapeMismatch {
                name: name.to_string(),
                expected: p.shape().to_vec(),
                found: g.shape().to_vec(),
            });
        }
    }

    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (name, g) in grads.iter() {
        let p = params.get_mut(name).expect("checked above").data_mut();
        let m = state.m.get_mut(name).expect("checked above");
        let v = state.v.get_mut(name).expect("checked above");
        for (((pi, mi), vi), &gi) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g.data()) {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *pi -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    if let Some(name) = params.first_non_finite() {
        return Err(Error::NonFinite(name.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Tensor;

    fn scalar(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::new(vec![1], vec![v]).unwrap());
        p
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = scalar(1.5);
        let mut st = AdamState::new(&p, AdamConfig::default());
        for _ in 0..3 {
            adam_step(&mut p, &scalar(0.0), &mut st).unwrap();
        }
        assert_eq!(p.get("x").unwrap().data(), &[1.5]);
        assert_eq!(st.step, 3);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [3.0, -0.25] {
            let mut p = scalar(2.0);
            let cfg = AdamConfig::default();
            let mut st = AdamState::new(&p, cfg);
            adam_step(&mut p, &scalar(g), &mut st).unwrap();
            // m_hat / sqrt(v_hat) = g / |g| at t = 1.
            let want = 2.0 - cfg.lr * g / (g.abs() + cfg.eps);
            let got = p.get("x").unwrap().data()[0];
            assert!((got - want).abs() < 1e-15);
            assert!((got - (2.0 - cfg.lr * g.signum())).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p, AdamConfig::default());
        let mut g = ParamSet::new();
        g.insert("x", Tensor::zeros(&[2]));
        assert!(adam_step(&mut p, &g, &mut st).is_err());
        assert_eq!(st.step, 0);
        let mut g = ParamSet::new();
        g.insert("y", Tensor::zeros(&[1]));
        assert!(adam_step(&mut p, &g, &mut st).is_err());
    }
}
