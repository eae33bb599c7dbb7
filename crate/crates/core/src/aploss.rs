//! Position-weighted training loss.
//!
//! Each step's negative log-likelihood is scaled by `alpha * f(a, t)^-gamma`,
//! where `f` grows with the step's distance from the root (the norm of its
//! position vector) or simply with `t`. With `gamma = 0` and `alpha = 1` this
//! is plain cross entropy.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use thiserror::Error;

use crate::astvec::{ast2vec, AstVecError};
use crate::scalar::Scalar;
use crate::transition::ActionStep;

/// Range of `gamma` worth searching.
pub const RECOMMENDED_GAMMA: RangeInclusive<f64> = 0.1..=0.5;
pub const DEFAULT_ALPHA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("gamma must be >= 0, got {0}")]
    NegativeGamma(f64),
    #[error("alpha must be > 0, got {0}")]
    NonPositiveAlpha(f64),
    #[error(
        "automatic alpha is {alpha} for gamma={gamma}, T={len}; use gamma <= 1 or a constant alpha"
    )]
    AutoAlphaNonPositive { alpha: f64, gamma: f64, len: usize },
    #[error("position factor must be > 0, got {0}")]
    NonPositiveFactor(f64),
    #[error("root clamp must be > 0, got {0}")]
    NonPositiveClamp(f64),
    #[error("{log_probs} log-probabilities for {steps} steps")]
    LengthMismatch { log_probs: usize, steps: usize },
    #[error("empty action sequence")]
    Empty,
    #[error("log-probability at t={t} is not finite")]
    NonFinite { t: usize },
    #[error("log-probability at t={t} is positive ({value})")]
    Positive { t: usize, value: f64 },
    #[error(transparent)]
    Vectors(#[from] AstVecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FactorMode {
    /// Norm of the step's position vector, clamped below by `root_clamp`.
    #[default]
    AstvecNorm,
    /// `f(a, t) = t`.
    SimpleIndex,
}

impl FromStr for FactorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "astvec" | "astvec-norm" => Ok(FactorMode::AstvecNorm),
            "simple" | "simple-index" => Ok(FactorMode::SimpleIndex),
            other => Err(format!("unknown factor mode `{other}` (astvec|simple)")),
        }
    }
}

impl fmt::Display for FactorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorMode::AstvecNorm => "astvec",
            FactorMode::SimpleIndex => "simple",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha<T> {
    Constant(T),
    /// Chosen per sequence so the loss keeps the magnitude of cross entropy.
    Auto,
}

impl<T: Scalar> FromStr for Alpha<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Alpha::Auto);
        }
        s.parse::<f64>()
            .map(|v| Alpha::Constant(T::of(v)))
            .map_err(|_| format!("alpha must be a number or `auto`, got `{s}`"))
    }
}

impl<T: Scalar> fmt::Display for Alpha<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Constant(a) => write!(f, "{a}"),
            Alpha::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig<T> {
    pub gamma: T,
    pub alpha: Alpha<T>,
    pub factor_mode: FactorMode,
    /// Lower bound on the astvec factor; the root's raw norm is 0.
    pub root_clamp: T,
}

impl<T: Scalar> Default for LossConfig<T> {
    fn default() -> Self {
        Self::ap(T::of(0.3), Alpha::Constant(T::of(DEFAULT_ALPHA)))
    }
}

impl<T: Scalar> LossConfig<T> {
    /// Plain cross entropy (`gamma = 0`, `alpha = 1`).
    pub fn cross_entropy() -> Self {
        LossConfig {
            gamma: T::zero(),
            alpha: Alpha::Constant(T::one()),
            factor_mode: FactorMode::AstvecNorm,
            root_clamp: T::one(),
        }
    }

    pub fn ap(gamma: T, alpha: Alpha<T>) -> Self {
        LossConfig {
            gamma,
            alpha,
            factor_mode: FactorMode::AstvecNorm,
            root_clamp: T::one(),
        }
    }

    pub fn with_factor(mut self, mode: FactorMode) -> Self {
        self.factor_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.gamma >= T::zero()) {
            return Err(LossError::NegativeGamma(self.gamma.as_f64()));
        }
        if let Alpha::Constant(a) = self.alpha {
            if !(a > T::zero()) {
                return Err(LossError::NonPositiveAlpha(a.as_f64()));
            }
        }
        if !(self.root_clamp > T::zero()) {
            return Err(LossError::NonPositiveClamp(self.root_clamp.as_f64()));
        }
        Ok(())
    }

    /// Is `gamma` inside [`RECOMMENDED_GAMMA`]?
    pub fn gamma_in_recommended_range(&self) -> bool {
        RECOMMENDED_GAMMA.contains(&self.gamma.as_f64())
    }

    /// The magnitude factor for a sequence of `len` actions.
    pub fn resolve_alpha(&self, len: usize) -> Result<T, LossError> {
        match self.alpha {
            Alpha::Constant(a) => Ok(a),
            Alpha::Auto => {
                let a = alpha_auto(self.gamma, T::of(len as f64));
                if a > T::zero() && a.is_finite() {
                    Ok(a)
                } else {
                    Err(LossError::AutoAlphaNonPositive {
                        alpha: a.as_f64(),
                        gamma: self.gamma.as_f64(),
                        len,
                    })
                }
            }
        }
    }
}

/// `f(a, t)` for every step.
pub fn position_factor<T: Scalar>(
    steps: &[ActionStep],
    cfg: &LossConfig<T>,
) -> Result<Vec<T>, LossError> {
    match cfg.factor_mode {
        FactorMode::SimpleIndex => Ok((1..=steps.len()).map(|t| T::of(t as f64)).collect()),
        FactorMode::AstvecNorm => Ok(ast2vec(steps)?
            .into_iter()
            .map(|v| T::of(v.norm()).max(cfg.root_clamp))
            .collect()),
    }
}

/// `f^-gamma`.
pub fn scaling_factor<T: Scalar>(f: T, gamma: T) -> Result<T, LossError> {
    if !(f > T::zero()) {
        return Err(LossError::NonPositiveFactor(f.as_f64()));
    }
    if gamma == T::zero() {
        return Ok(T::one());
    }
    Ok(f.powf(-gamma))
}

/// Magnitude factor that matches the cross-entropy scale for `f(a, t) = t`
/// over a sequence of length `len`.
pub fn alpha_auto<T: Scalar>(gamma: T, len: T) -> T {
    if gamma == T::one() {
        len / (len + T::one()).ln()
    } else {
        (T::one() - gamma) * len.powf(gamma)
    }
}

/// Per-step factors and final weights `alpha * f^-gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSteps<T> {
    pub factors: Vec<T>,
    pub weights: Vec<T>,
    pub alpha: T,
}

impl<T> WeightedSteps<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn step_weights<T: Scalar>(
    steps: &[ActionStep],
    cfg: &LossConfig<T>,
) -> Result<WeightedSteps<T>, LossError> {
    cfg.validate()?;
    if steps.is_empty() {
        return Err(LossError::Empty);
    }
    let alpha = cfg.resolve_alpha(steps.len())?;
    let factors = position_factor(steps, cfg)?;
    let weights = factors
        .iter()
        .map(|&f| scaling_factor(f, cfg.gamma).map(|s| alpha * s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WeightedSteps {
        factors,
        weights,
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApLoss<T> {
    pub total: T,
    /// `-alpha * f^-gamma * log p_t` per step.
    pub contributions: Vec<T>,
}

pub fn ap_loss<T: Scalar>(
    log_probs: &[T],
    steps: &[ActionStep],
    cfg: &LossConfig<T>,
) -> Result<ApLoss<T>, LossError> {
    if log_probs.len() != steps.len() {
        return Err(LossError::LengthMismatch {
            log_probs: log_probs.len(),
            steps: steps.len(),
        });
    }
    check_log_probs(log_probs)?;
    let weighted = step_weights(steps, cfg)?;
    let contributions: Vec<T> = weighted
        .weights
        .iter()
        .zip(log_probs)
        .map(|(&w, &lp)| -(w * lp))
        .collect();
    let total = contributions.iter().fold(T::zero(), |acc, &c| acc + c);
    Ok(ApLoss {
        total,
        contributions,
    })
}

/// `-sum log p_t`.
pub fn cross_entropy<T: Scalar>(log_probs: &[T]) -> T {
    log_probs.iter().fold(T::zero(), |acc, &lp| acc + -lp)
}

fn check_log_probs<T: Scalar>(log_probs: &[T]) -> Result<(), LossError> {
    for (i, &lp) in log_probs.iter().enumerate() {
        if !lp.is_finite() {
            return Err(LossError::NonFinite { t: i + 1 });
        }
        if lp > T::zero() {
            return Err(LossError::Positive {
                t: i + 1,
                value: lp.as_f64(),
            });
        }
    }
    Ok(())
}

/// Rows `(gamma, f, f^-gamma)` for `f = 1..=f_max` and each gamma.
pub fn factor_curve<T: Scalar>(
    gammas: &[T],
    f_max: usize,
) -> Result<Vec<(T, usize, T)>, LossError> {
    let mut rows = Vec::with_capacity(gammas.len() * f_max);
    for &g in gammas {
        if !(g >= T::zero()) {
            return Err(LossError::NegativeGamma(g.as_f64()));
        }
        for f in 1..=f_max {
            rows.push((g, f, scaling_factor(T::of(f as f64), g)?));
        }
    }
    Ok(rows)
}
