/// Moments of parameters that stop receiving gradient decay geometrically
/// into subnormal range, where arithmetic is very slow on most CPUs.
fn flush(x: f64) -> f64 {
    if x.abs() < 1e-200 {
        0.0
    } else {
        x
    }
}

/// Bias-corrected Adam update on one flat tensor. `step` is 1-based.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    debug_assert!(params.len() == grads.len() && m.len() == grads.len() && v.len() == grads.len());
    debug_assert!(step >= 1);
    let bc1 = 1.0 - beta1.powi(step as i32);
    let bc2 = 1.0 - beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = flush(beta1 * m[i] + (1.0 - beta1) * g);
        v[i] = flush(beta2 * v[i] + (1.0 - beta2) * g * g);
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Adam moments for a list of tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, sizes: &[usize]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            adam_update(p, g, &mut self.m[k], &mut self.v[k], self.step, self.lr, self.beta1, self.beta2, self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_only_decays_moments() {
        let mut p = vec![1.0, -2.0];
        let mut m = vec![0.5, 0.5];
        let mut v = vec![0.25, 0.25];
        adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, 3, 1e-3, 0.9, 0.999, 1e-8);
        assert_eq!(m, vec![0.45, 0.45]);
        assert!((v[0] - 0.24975).abs() < 1e-15);
        // Decayed moments still move the parameters; a fresh state does not.
        let mut p2 = vec![1.0, -2.0];
        adam_update(&mut p2, &[0.0, 0.0], &mut [0.0; 2], &mut [0.0; 2], 1, 1e-3, 0.9, 0.999, 1e-8);
        assert_eq!(p2, vec![1.0, -2.0]);
        assert_ne!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g, v̂ = g² on step 1, so the update is lr·g/(|g| + ε).
        for g in [0.3, -7.0, 1e3] {
            let mut p = vec![0.0];
            adam_update(&mut p, &[g], &mut [0.0], &mut [0.0], 1, 1e-2, 0.9, 0.999, 1e-8);
            let expected = -1e-2 * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = vec![0.1, 0.2];
            let (mut m, mut v) = (vec![0.0; 2], vec![0.0; 2]);
            for t in 1..=5 {
                adam_update(&mut p, &[0.3, -0.1], &mut m, &mut v, t, 1e-3, 0.9, 0.999, 1e-8);
            }
            (p, m, v)
        };
        assert_eq!(run(), run());
    }
}
