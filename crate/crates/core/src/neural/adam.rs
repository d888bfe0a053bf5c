//! Adam optimizer over a network's parameter tensors.

use crate::scalar::{real, Real};

use super::net::{GradientSet, NetworkParams};

/// First/second-moment state, shaped like the network.
#[derive(Debug, Clone)]
pub struct AdamState<T: Real> {
    pub step: u64,
    pub m: GradientSet<T>,
    pub v: GradientSet<T>,
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl<T: Real> AdamState<T> {
    pub fn new(net: &NetworkParams<T>) -> Self {
        AdamState {
            step: 0,
            m: GradientSet::zeros_like(net),
            v: GradientSet::zeros_like(net),
        }
    }

    /// One bias-corrected update of every parameter in place.
    pub fn step(
        &mut self,
        net: &mut NetworkParams<T>,
        grads: &GradientSet<T>,
        learning_rate: f64,
        config: AdamConfig,
    ) {
        self.step += 1;
        let b1 = real::<T>(config.beta1);
        let b2 = real::<T>(config.beta2);
        let one = T::one();
        let corr1 = real::<T>(1.0 - config.beta1.powf(self.step as f64));
        let corr2 = real::<T>(1.0 - config.beta2.powf(self.step as f64));
        let lr = real::<T>(learning_rate);
        let eps = real::<T>(config.eps);
        for (((mut p, g), mut m), mut v) in net
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            ndarray::Zip::from(&mut p)
                .and(&g)
                .and(&mut m)
                .and(&mut v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let m_hat = *m / corr1;
                    let v_hat = *v / corr2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
    }
}
