//! First-order optimizers, selectable by name.
//!
//! Both keep per-parameter moment state across calls to
//! [`Optimizer::step`]; state is keyed by registration order in the
//! [`ParamStore`], so one optimizer instance belongs to one store.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamStore;
use crate::registry::Registry;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub lr: f64,
    /// RMSprop smoothing constant.
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            alpha: 0.99,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

pub trait Optimizer: Send {
    fn name(&self) -> &'static str;
    /// Applies one update using the gradients currently held in `store`.
    fn step(&mut self, store: &mut ParamStore);
    fn lr(&self) -> f64;
}

pub struct RmsProp {
    cfg: OptimizerConfig,
    square_avg: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(cfg: OptimizerConfig) -> Self {
        Self {
            cfg,
            square_avg: Vec::new(),
        }
    }
}

fn ensure_state(state: &mut Vec<Vec<f64>>, store: &ParamStore) {
    if state.len() != store.len() {
        *state = store.iter().map(|p| vec![0.0; p.value.len()]).collect();
    }
}

impl Optimizer for RmsProp {
    fn name(&self) -> &'static str {
        "rmsprop"
    }

    fn lr(&self) -> f64 {
        self.cfg.lr
    }

    fn step(&mut self, store: &mut ParamStore) {
        ensure_state(&mut self.square_avg, store);
        let OptimizerConfig { lr, alpha, eps, .. } = self.cfg;
        for (p, sq) in store.iter_mut().zip(&mut self.square_avg) {
            let grad = p.grad.data().to_vec();
            for ((w, g), s) in p.value.data_mut().iter_mut().zip(&grad).zip(sq.iter_mut()) {
                *s = alpha * *s + (1.0 - alpha) * g * g;
                *w -= lr * g / (s.sqrt() + eps);
            }
        }
    }
}

pub struct Adam {
    cfg: OptimizerConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: OptimizerConfig) -> Self {
        Self {
            cfg,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn lr(&self) -> f64 {
        self.cfg.lr
    }

    fn step(&mut self, store: &mut ParamStore) {
        ensure_state(&mut self.m, store);
        ensure_state(&mut self.v, store);
        self.t += 1;
        let OptimizerConfig {
            lr,
            beta1,
            beta2,
            eps,
            ..
        } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grad = p.grad.data().to_vec();
            for (((w, g), mi), vi) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(&grad)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

pub type OptimizerCtor = fn(OptimizerConfig) -> Box<dyn Optimizer>;

pub fn optimizers() -> &'static Registry<OptimizerCtor> {
    static REG: OnceLock<Registry<OptimizerCtor>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<OptimizerCtor> = Registry::new("optimizer");
        reg.register("rmsprop", |c| Box::new(RmsProp::new(c)))
            .register("adam", |c| Box::new(Adam::new(c)));
        reg
    })
}

/// Looks up `name` in the optimizer registry.
pub fn build_optimizer(name: &str, cfg: OptimizerConfig) -> Result<Box<dyn Optimizer>> {
    if !(cfg.lr > 0.0) || !cfg.lr.is_finite() {
        return Err(Error::Config(format!(
            "learning rate must be > 0, got {}",
            cfg.lr
        )));
    }
    let ctor = optimizers().get(name)?;
    Ok(ctor(cfg))
}
