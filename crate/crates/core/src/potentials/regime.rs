use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scaling regime index: how `α_n` compares with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    /// `α_n → α` (nonlocal limit).
    One,
    /// `1 ≪ α_n ≪ n` (local limit with mobility `‖V‖|y|`).
    Two,
    /// `α_n / n → β` (local limit with the lattice mobility).
    Three,
}

impl TryFrom<u8> for Order {
    type Error = String;
    fn try_from(m: u8) -> std::result::Result<Self, String> {
        match m {
            1 => Ok(Order::One),
            2 => Ok(Order::Two),
            3 => Ok(Order::Three),
            _ => Err(format!("scaling regime must be 1, 2 or 3, got {m}")),
        }
    }
}

impl From<Order> for u8 {
    fn from(m: Order) -> u8 {
        match m {
            Order::One => 1,
            Order::Two => 2,
            Order::Three => 3,
        }
    }
}

/// Rule `n ↦ α_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaRule {
    Constant {
        alpha: f64,
    },
    /// `α_n = scale · n^exponent`.
    Power {
        scale: f64,
        exponent: f64,
    },
    /// `α_n = beta · n`.
    Linear {
        beta: f64,
    },
}

impl AlphaRule {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            AlphaRule::Constant { alpha } => alpha,
            AlphaRule::Power { scale, exponent } => scale * n.powf(exponent),
            AlphaRule::Linear { beta } => beta * n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub m: Order,
    /// Limit of `α_n` when `m = 1`.
    #[serde(default = "one")]
    pub alpha: f64,
    /// Limit of `α_n / n` when `m = 3`.
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub rule: Option<AlphaRule>,
}

fn one() -> f64 {
    1.0
}

impl ScalingRegime {
    pub fn nonlocal(alpha: f64) -> Self {
        ScalingRegime {
            m: Order::One,
            alpha,
            beta: 1.0,
            rule: None,
        }
    }

    /// Intermediate regime with the default `α_n = √n`.
    pub fn intermediate() -> Self {
        ScalingRegime {
            m: Order::Two,
            alpha: 1.0,
            beta: 1.0,
            rule: None,
        }
    }

    pub fn lattice(beta: f64) -> Self {
        ScalingRegime {
            m: Order::Three,
            alpha: 1.0,
            beta,
            rule: None,
        }
    }

    pub fn with_rule(mut self, rule: AlphaRule) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn rule(&self) -> AlphaRule {
        self.rule.unwrap_or(match self.m {
            Order::One => AlphaRule::Constant { alpha: self.alpha },
            Order::Two => AlphaRule::Power { scale: 1.0, exponent: 0.5 },
            Order::Three => AlphaRule::Linear { beta: self.beta },
        })
    }

    /// `α_n` for `n` particles.
    pub fn alpha_n(&self, n: usize) -> f64 {
        self.rule().eval(n as f64)
    }

    /// `α_ε`, obtained from the particle rule with `n = 1/ε`; for `m = 1`
    /// the sequence `α(1 + ε)` is used so that the limit is approached.
    pub fn alpha_eps(&self, eps: f64) -> f64 {
        match self.m {
            Order::One => self.alpha * (1.0 + eps),
            _ => self.rule().eval(1.0 / eps),
        }
    }

    /// Checks the asymptotic requirement on the rule numerically over `n ≤ 10⁶`.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        let ns = [1e2, 1e3, 1e4, 1e5, 1e6];
        let rule = self.rule();
        let a: Vec<f64> = ns.iter().map(|&n| rule.eval(n)).collect();
        if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("alpha_n must be positive and finite".into()));
        }
        let ok = match self.m {
            Order::One => (a[4] - self.alpha).abs() <= 1e-2 * self.alpha && a.windows(2).all(|w| (w[1] - self.alpha).abs() <= (w[0] - self.alpha).abs() + 1e-15),
            Order::Two => {
                let ratio: Vec<f64> = a.iter().zip(ns).map(|(v, n)| v / n).collect();
                a.windows(2).all(|w| w[1] > w[0]) && ratio.windows(2).all(|w| w[1] < w[0]) && a[4] > 10.0 * a[0].min(1.0) && ratio[4] < 0.1 * ratio[0]
            }
            Order::Three => a.iter().zip(ns).all(|(v, n)| (v / n - self.beta).abs() <= 1e-2 * self.beta),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("alpha rule {rule:?} is incompatible with regime m = {}", u8::from(self.m))))
        }
    }
}
