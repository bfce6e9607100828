use super::RefineConfig;

/// First and second moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn zeros(len: usize) -> Self {
        AdamMoments {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(params: &mut [f64], grads: &[f64], moments: &mut AdamMoments, t: u64, cfg: &RefineConfig) {
    assert!(t >= 1, "Adam steps are 1-based");
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), moments.m.len());
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        moments.m[i] = b1 * moments.m[i] + (1.0 - b1) * g;
        moments.v[i] = b2 * moments.v[i] + (1.0 - b2) * g * g;
        let m_hat = moments.m[i] / c1;
        let v_hat = moments.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}
