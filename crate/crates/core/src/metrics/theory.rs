use super::MetricsError;
use crate::solver::{Momentum, SolverConfig};
use std::fmt::Write as _;

/// Everything the convergence constants depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub kappa: f64,
    /// Momentum bound used by the run: the constant `η`, or the supremum of
    /// the schedule.
    pub eta: f64,
    pub lipschitz: f64,
    pub weak_convexity: f64,
    pub sigma_a: f64,
    pub max_degree: usize,
    pub sigma5: f64,
}

impl TheoryInputs {
    pub fn new(cfg: &SolverConfig, lipschitz: f64, weak_convexity: f64, sigma_a: f64, max_degree: usize) -> Self {
        let eta = match cfg.momentum {
            Momentum::Zero => 0.0,
            Momentum::Constant(e) => e,
            Momentum::Nesterov => 1.0,
        };
        Self {
            alpha: cfg.alpha,
            beta: cfg.beta,
            gamma: cfg.gamma,
            c: cfg.c,
            kappa: cfg.kappa,
            eta,
            lipschitz,
            weak_convexity,
            sigma_a,
            max_degree,
            sigma5: 1.0,
        }
    }
}

/// Constants of the descent analysis together with the feasibility of each
/// parameter condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConstants {
    pub inputs: TheoryInputs,
    pub varrho: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub sigma4: f64,
    pub sigma5: f64,
    pub eta_bar: f64,
    /// Momentum the descent constants are evaluated at, `min(η, η̄)`.
    pub eta_used: f64,
    pub tau: f64,
    pub s_hat1: f64,
    pub s_hat2: f64,
    pub alpha_cap: f64,
    pub beta_cap: f64,
    pub c1: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub c0: f64,
    pub kappa_ok: bool,
    pub gamma_ok: bool,
    pub eta_ok: bool,
    pub alpha_ok: bool,
    pub beta_ok: bool,
}

/// `a / b` with `x/0 = ∞` for `x > 0` and `0/0 = 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        a / b
    }
}

pub fn theory_constants(inp: TheoryInputs) -> TheoryConstants {
    let TheoryInputs {
        alpha,
        beta,
        gamma,
        c,
        kappa,
        eta,
        lipschitz: l,
        weak_convexity: mu,
        sigma_a,
        max_degree,
        sigma5,
    } = inp;
    let d_max = max_degree as f64;
    let sa2 = sigma_a * sigma_a;

    let varrho = (kappa + l + c * sa2 + 1.0) / (kappa + mu);
    let sigma1 = varrho * (2.0 + 2.0 * c * d_max + gamma + kappa);
    let sigma2 = gamma + l;
    let sigma3 = (kappa + mu) / sigma_a;
    let sigma4 = (kappa + mu) / kappa;

    let head = kappa + 2.0 * c + gamma - 3.0 * l;
    let eta_bar = (head / (2.0 * (gamma - mu + 3.0 * l))).sqrt();
    let eta_used = if eta_bar.is_nan() { eta } else { eta.min(eta_bar) };
    let lo = (0.5 * (gamma + 3.0 * l - mu) * eta_used * eta_used).max(0.0);
    let hi = head / 4.0;
    let tau = 0.5 * (lo + hi);
    let s_hat1 = head / 2.0 - 2.0 * tau;
    let s_hat2 = 0.5 * (mu - gamma - 3.0 * l) * eta_used * eta_used + tau;

    let a1 = ratio(s_hat1, 4.0 * sigma_a * sigma1 * sigma1);
    let a2 = if eta_used == 0.0 {
        f64::INFINITY
    } else {
        ratio(s_hat2, 4.0 * sa2 * sigma2 * sigma2 * eta_used * eta_used)
    };
    let alpha_cap = a1.min(a2).min(c);
    let beta_cap = ratio(alpha, 12.0 * kappa * sigma5 * sigma5).min(sigma4 / 36.0).min(1.0);

    let c1 = 1.0 / (2.0 * gamma) + (6.0 * l + 8.0 * tau + kappa * (1.0 - beta)) / (4.0 * (gamma + 2.0 * c + kappa).powi(2));
    let inner = 20.0 * c * c * sa2 + 1.0;
    let k1 = 6.0 + 40.0 * gamma + 20.0 * c * c * d_max * d_max + 4.0 * inner * sa2 * sigma1 * sigma1;
    let k2 = (20.0 * l * l + 20.0 * gamma * gamma) * eta_bar * eta_bar + 4.0 * inner * sa2 * sigma2 * sigma2 * eta_bar * eta_bar;
    let k3 = 20.0 * kappa * kappa;
    let k4 = 2.0 * inner;
    let c0 = 2.0 * ratio(k1, s_hat1) + ratio(k2, s_hat2) + 4.0 * ratio(k3 * beta, kappa * (1.0 - beta)) + 2.0 * ratio(k4, alpha);

    TheoryConstants {
        inputs: inp,
        varrho,
        sigma1,
        sigma2,
        sigma3,
        sigma4,
        sigma5,
        eta_bar,
        eta_used,
        tau,
        s_hat1,
        s_hat2,
        alpha_cap,
        beta_cap,
        c1,
        k1,
        k2,
        k3,
        k4,
        c0,
        kappa_ok: kappa > -mu,
        gamma_ok: gamma > 3.0 * l,
        eta_ok: eta_bar.is_finite() && eta <= eta_bar,
        alpha_ok: alpha > 0.0 && alpha <= alpha_cap && s_hat1 > 0.0 && s_hat2 > 0.0,
        beta_ok: beta > 0.0 && beta <= beta_cap && beta < 1.0,
    }
}

/// Shrinks `cfg` into the guaranteed-descent region: `γ ≥ 3L + 1`,
/// `κ ≥ −μ + 1/2`, constant momentum `η̄/2`, then `α` and `β` at their caps.
pub fn feasible_config(
    cfg: &SolverConfig,
    lipschitz: f64,
    weak_convexity: f64,
    sigma_a: f64,
    max_degree: usize,
) -> (SolverConfig, TheoryConstants) {
    let mut c = SolverConfig {
        gamma: cfg.gamma.max(3.0 * lipschitz + 1.0),
        kappa: cfg.kappa.max(-weak_convexity + 0.5),
        momentum: Momentum::Zero,
        ..*cfg
    };
    let eval = |c: &SolverConfig| theory_constants(TheoryInputs::new(c, lipschitz, weak_convexity, sigma_a, max_degree));
    c.momentum = Momentum::Constant(0.5 * eval(&c).eta_bar);
    c.alpha = eval(&c).alpha_cap;
    c.beta = eval(&c).beta_cap;
    let t = eval(&c);
    (c, t)
}

impl TheoryConstants {
    pub fn feasible(&self) -> bool {
        self.violations().is_empty()
    }

    /// Names of the violated conditions, in order of dependence.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.kappa_ok {
            v.push("kappa > -mu");
        }
        if !self.gamma_ok {
            v.push("gamma > 3L");
        }
        if !self.eta_ok {
            v.push("eta <= eta_bar");
        }
        if !self.alpha_ok {
            v.push("alpha <= alpha_cap");
        }
        if !self.beta_ok {
            v.push("beta <= beta_cap");
        }
        v
    }

    pub fn require_feasible(&self) -> Result<(), MetricsError> {
        match self.violations().first() {
            None => Ok(()),
            Some(name) => Err(MetricsError::InfeasibleParameters((*name).to_string())),
        }
    }

    /// Flat `key=value` report, one entry per line.
    pub fn report(&self) -> String {
        let i = &self.inputs;
        let rows: [(&str, String); 37] = [
            ("alpha", i.alpha.to_string()),
            ("beta", i.beta.to_string()),
            ("gamma", i.gamma.to_string()),
            ("c", i.c.to_string()),
            ("kappa", i.kappa.to_string()),
            ("eta", i.eta.to_string()),
            ("lipschitz", i.lipschitz.to_string()),
            ("weak_convexity", i.weak_convexity.to_string()),
            ("sigma_a", i.sigma_a.to_string()),
            ("max_degree", i.max_degree.to_string()),
            ("varrho", self.varrho.to_string()),
            ("sigma1", self.sigma1.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("sigma3", self.sigma3.to_string()),
            ("sigma4", self.sigma4.to_string()),
            ("sigma5", self.sigma5.to_string()),
            ("eta_bar", self.eta_bar.to_string()),
            ("eta_used", self.eta_used.to_string()),
            ("tau", self.tau.to_string()),
            ("s_hat1", self.s_hat1.to_string()),
            ("s_hat2", self.s_hat2.to_string()),
            ("alpha_cap", self.alpha_cap.to_string()),
            ("beta_cap", self.beta_cap.to_string()),
            ("c1", self.c1.to_string()),
            ("k1", self.k1.to_string()),
            ("k2", self.k2.to_string()),
            ("k3", self.k3.to_string()),
            ("k4", self.k4.to_string()),
            ("c0", self.c0.to_string()),
            ("kappa_ok", self.kappa_ok.to_string()),
            ("gamma_ok", self.gamma_ok.to_string()),
            ("eta_ok", self.eta_ok.to_string()),
            ("alpha_ok", self.alpha_ok.to_string()),
            ("beta_ok", self.beta_ok.to_string()),
            ("feasible", self.feasible().to_string()),
            ("violations", self.violations().join(";")),
            ("rate_constant", (self.c0 / self.c1.max(f64::MIN_POSITIVE)).to_string()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> TheoryInputs {
        TheoryInputs {
            alpha: 1e-8,
            beta: 1e-10,
            gamma: 3.0,
            c: 2.0,
            kappa: 1.0,
            eta: 0.0,
            lipschitz: 0.9,
            weak_convexity: -0.9,
            sigma_a: 2.0,
            max_degree: 2,
            sigma5: 1.0,
        }
    }

    #[test]
    fn sigma4_value() {
        let t = theory_constants(TheoryInputs {
            weak_convexity: -0.5,
            ..inputs()
        });
        assert_eq!(t.sigma4, 0.5);
    }

    #[test]
    fn eta_bar_value() {
        let t = theory_constants(inputs());
        assert!((t.eta_bar - (5.3f64 / 13.2).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gamma_at_three_l_is_flagged() {
        let t = theory_constants(TheoryInputs {
            gamma: 2.7,
            ..inputs()
        });
        assert!(!t.gamma_ok);
        assert_eq!(
            t.require_feasible(),
            Err(MetricsError::InfeasibleParameters("gamma > 3L".into()))
        );
    }

    #[test]
    fn kappa_condition() {
        let t = theory_constants(TheoryInputs {
            kappa: 0.9,
            gamma: 10.0,
            ..inputs()
        });
        assert!(!t.kappa_ok);
        assert_eq!(t.violations()[0], "kappa > -mu");
    }

    #[test]
    fn small_steps_are_feasible() {
        let t = theory_constants(inputs());
        assert!(t.s_hat1 > 0.0 && t.s_hat2 > 0.0);
        assert!(t.feasible(), "{:?}", t.violations());
        assert!(t.c0.is_finite() && t.c1 > 0.0);
    }

    #[test]
    fn momentum_at_eta_bar_degenerates() {
        let t0 = theory_constants(inputs());
        let t = theory_constants(TheoryInputs {
            eta: t0.eta_bar,
            ..inputs()
        });
        assert!(t.s_hat1.abs() < 1e-12 && t.s_hat2.abs() < 1e-12);
        assert!(!t.alpha_ok);
    }

    #[test]
    fn feasible_config_satisfies_every_condition() {
        let (cfg, t) = feasible_config(&SolverConfig::default(), 5.0, -0.625, 2.0, 2);
        assert!(t.feasible(), "{:?}", t.violations());
        assert!(cfg.gamma > 15.0 && cfg.alpha > 0.0 && cfg.beta > 0.0);
    }

    #[test]
    fn report_lines_are_key_value() {
        let r = theory_constants(inputs()).report();
        for line in r.lines() {
            let (k, _) = line.split_once('=').unwrap();
            assert!(!k.is_empty());
        }
        assert!(r.contains("feasible=true\n"));
    }
}
