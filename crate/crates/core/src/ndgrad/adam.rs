use super::{GradError, Tensor};

/// Moment estimates and hyperparameters of the ADAM optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

pub const DEFAULT_EPSILON: f64 = 1e-8;

impl AdamState {
    /// Zeroed moments shaped like `params`.
    pub fn new<'a>(
        params: impl IntoIterator<Item = &'a Tensor>,
        lr: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        let m: Vec<Vec<f64>> = params.into_iter().map(|p| vec![0.0; p.len()]).collect();
        let v = m.clone();
        AdamState {
            step_count: 0,
            lr,
            beta1,
            beta2,
            epsilon,
            m,
            v,
        }
    }

    /// One bias-corrected update of every parameter from its gradient.
    /// Gradients are left in place; the caller resets them.
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Tensor>) -> Result<(), GradError> {
        let params: Vec<&mut Tensor> = params.into_iter().collect();
        if params.len() != self.m.len() {
            return Err(GradError::OptimizerMismatch {
                expected: self.m.len(),
                found: params.len(),
            });
        }
        for (i, p) in params.iter().enumerate() {
            if p.grad().is_none() {
                return Err(GradError::MissingGradient(i));
            }
            if p.len() != self.m[i].len() {
                return Err(GradError::OptimizerMismatch {
                    expected: self.m[i].len(),
                    found: p.len(),
                });
            }
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.epsilon);

        for ((p, m), v) in params.into_iter().zip(&mut self.m).zip(&mut self.v) {
            let grad = p.grad().expect("checked above").to_vec();
            for (((w, g), m), v) in p.data_mut().iter_mut().zip(&grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(values: &[f64], grad: &[f64]) -> Tensor {
        let mut t = Tensor::new(vec![values.len()], values.to_vec())
            .unwrap()
            .with_requires_grad(true);
        t.set_grad(Some(grad.to_vec()));
        t
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = param(&[0.5, -0.25, 2.0], &[3.0, -0.01, 1e-3]);
        let mut state = AdamState::new([&p], 1e-4, 0.9, 0.999, DEFAULT_EPSILON);
        state.step([&mut p]).unwrap();
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        let expected = [
            0.5 - 1e-4 * 3.0 / (3.0 + 1e-8),
            -0.25 + 1e-4 * 0.01 / (0.01 + 1e-8),
            2.0 - 1e-4 * 1e-3 / (1e-3 + 1e-8),
        ];
        for (got, want) in p.data().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        for (got, start) in p.data().iter().zip([0.5, -0.25, 2.0]) {
            assert!(((got - start).abs() - 1e-4).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut p = param(&[1.0, -3.0], &[0.0, 0.0]);
        let mut state = AdamState::new([&p], 1e-4, 0.9, 0.999, DEFAULT_EPSILON);
        state.step([&mut p]).unwrap();
        assert_eq!(p.data(), &[1.0, -3.0]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn two_steps_match_scalar_trace() {
        // Independent scalar transcription of the update rule.
        let (lr, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
        let g = 0.37;
        let (mut w, mut m, mut v) = (1.25f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powf(t as f64));
            let vh = v / (1.0 - b2.powf(t as f64));
            w -= lr * mh / (vh.sqrt() + eps);
        }

        let mut p = param(&[1.25], &[g]);
        let mut state = AdamState::new([&p], lr, b1, b2, eps);
        state.step([&mut p]).unwrap();
        state.step([&mut p]).unwrap();
        assert!((p.data()[0] - w).abs() < 1e-12);
        assert!(state.v.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn missing_gradient_rejected() {
        let mut p = Tensor::new(vec![1], vec![1.0]).unwrap();
        let mut state = AdamState::new([&p], 1e-4, 0.9, 0.999, DEFAULT_EPSILON);
        assert!(matches!(state.step([&mut p]), Err(GradError::MissingGradient(0))));
        assert_eq!(state.step_count, 0);
    }
}
