//! Adam with bias correction.

use ndarray::{Array1, ArrayView1};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub decay1: f64,
    pub decay2: f64,
    pub epsilon: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        Self { learning_rate: 0.05, decay1: 0.9, decay2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(format!("learning rate must be nonnegative, got {}", self.learning_rate));
        }
        for (name, v) in [("decay1", self.decay1), ("decay2", self.decay2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Adam optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    settings: AdamSettings,
    step: i32,
    m: Array1<f64>,
    v: Array1<f64>,
}

impl Adam {
    pub fn new(dim: usize, settings: AdamSettings) -> Self {
        Self { settings, step: 0, m: Array1::zeros(dim), v: Array1::zeros(dim) }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// Applies one descent step to `params` in place.
    pub fn step(&mut self, params: &mut Array1<f64>, grad: ArrayView1<'_, f64>) {
        let AdamSettings { learning_rate, decay1, decay2, epsilon } = self.settings;
        self.step = self.step.saturating_add(1);
        let c1 = 1.0 - decay1.powi(self.step);
        let c2 = 1.0 - decay2.powi(self.step);
        for (((p, m), v), &g) in params
            .iter_mut()
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
            .zip(grad.iter())
        {
            *m = decay1 * *m + (1.0 - decay1) * g;
            *v = decay2 * *v + (1.0 - decay2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}
