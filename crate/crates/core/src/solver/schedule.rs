use super::Momentum;

/// `η_k` of the accelerated-gradient sequence with `θ_{−1} = θ_0 = 1`,
/// `θ_{k+1} = (1 + √(1 + 4θ_k²))/2` and `η_k = (θ_{k−1} − 1)/θ_k`.
pub fn nesterov_schedule(k: usize) -> f64 {
    let mut s = EtaSchedule::new(Momentum::Nesterov);
    s.eta(k)
}

/// Cached momentum schedule; the Nesterov sequence is extended lazily.
#[derive(Debug, Clone)]
pub struct EtaSchedule {
    momentum: Momentum,
    /// `θ_{k−1}` for `k = 0, 1, ...`, i.e. `thetas[k] = θ_{k−1}`.
    thetas: Vec<f64>,
}

impl EtaSchedule {
    pub fn new(momentum: Momentum) -> Self {
        Self {
            momentum,
            thetas: vec![1.0, 1.0],
        }
    }

    pub fn eta(&mut self, k: usize) -> f64 {
        match self.momentum {
            Momentum::Zero => 0.0,
            Momentum::Constant(eta) => eta,
            Momentum::Nesterov => {
                while self.thetas.len() < k + 2 {
                    let t = *self.thetas.last().unwrap();
                    self.thetas.push((1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0);
                }
                (self.thetas[k] - 1.0) / self.thetas[k + 1]
            }
        }
    }

    /// `θ_k`.
    pub fn theta(&mut self, k: usize) -> f64 {
        self.eta(k);
        self.thetas[k + 1]
    }
}
