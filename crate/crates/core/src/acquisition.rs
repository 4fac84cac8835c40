//! Acquisition functions on the derivative posterior.
//!
//! The acquisition *signal* `g(x)` is what PI/EI try to improve and what UCB
//! adds an exploration bonus to. In one dimension it is `|μ∇(x)|` (absolute
//! mode, the default) or `μ∇(x)` (signed mode). In more dimensions it is the
//! norm of the posterior mean gradient, and `σ∇` is the square root of the
//! trace of the gradient covariance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::gp::PosteriorSlice;
use crate::{DacdError, Result};

const SIGMA_FLOOR: f64 = 1e-12;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Pi,
    Ei,
    Ucb,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalMode {
    #[default]
    Absolute,
    Signed,
}

/// Which acquisition rule to use and its single hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Exploration margin ξ for PI / EI, trade-off λ for UCB.
    pub param: f64,
    #[serde(default)]
    pub mode: SignalMode,
}

impl AcquisitionSpec {
    pub fn pi(xi: f64) -> Self {
        Self::new(AcquisitionKind::Pi, xi)
    }

    pub fn ei(xi: f64) -> Self {
        Self::new(AcquisitionKind::Ei, xi)
    }

    pub fn ucb(lambda: f64) -> Self {
        Self::new(AcquisitionKind::Ucb, lambda)
    }

    fn new(kind: AcquisitionKind, param: f64) -> Self {
        Self {
            kind,
            param,
            mode: SignalMode::Absolute,
        }
    }

    pub fn signed(mut self) -> Self {
        self.mode = SignalMode::Signed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.param.is_finite() && self.param >= 0.0 {
            Ok(())
        } else {
            Err(DacdError::InvalidInput(format!(
                "acquisition parameter must be finite and >= 0, got {}",
                self.param
            )))
        }
    }
}

/// Parses `kind:param[:signed]`, e.g. `ei:0.001`, `pi:0.075`, `ucb:2:signed`.
impl FromStr for AcquisitionSpec {
    type Err = DacdError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            DacdError::Parse(format!(
                "malformed acquisition spec `{s}` (expected kind:param[:signed])"
            ))
        };
        let mut parts = s.trim().split(':');
        let kind = match parts.next().map(str::to_ascii_lowercase).as_deref() {
            Some("pi") => AcquisitionKind::Pi,
            Some("ei") => AcquisitionKind::Ei,
            Some("ucb") => AcquisitionKind::Ucb,
            _ => return Err(bad()),
        };
        let param: f64 = parts
            .next()
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        let mode = match parts.next().map(str::to_ascii_lowercase).as_deref() {
            None | Some("abs") | Some("absolute") => SignalMode::Absolute,
            Some("signed") => SignalMode::Signed,
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        let spec = AcquisitionSpec { kind, param, mode };
        spec.validate().map_err(|_| bad())?;
        Ok(spec)
    }
}

impl fmt::Display for AcquisitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            AcquisitionKind::Pi => "pi",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Ucb => "ucb",
        };
        write!(f, "{kind}:{}", self.param)?;
        if self.mode == SignalMode::Signed {
            write!(f, ":signed")?;
        }
        Ok(())
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Acquisition signal `g` at grid index `i`.
pub fn signal(slice: &PosteriorSlice, i: usize, mode: SignalMode) -> f64 {
    let d = slice.dmean_at(i);
    if d.len() == 1 {
        match mode {
            SignalMode::Absolute => d[0].abs(),
            SignalMode::Signed => d[0],
        }
    } else {
        d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Derivative posterior standard deviation `σ∇` at grid index `i`.
pub fn sigma(slice: &PosteriorSlice, i: usize) -> f64 {
    slice.dvar_at(i).iter().sum::<f64>().max(0.0).sqrt()
}

/// Best acquisition signal over already-sampled grid indices; stands in for
/// the "best observed derivative" since derivatives are never observed.
pub fn incumbent(slice: &PosteriorSlice, sampled: &[usize], mode: SignalMode) -> Result<f64> {
    sampled
        .iter()
        .map(|&i| signal(slice, i, mode))
        .reduce(f64::max)
        .ok_or(DacdError::EmptyIndexSet)
}

/// Closed-form score of one point from its signal `g` and scale `σ∇`.
pub fn score_point(spec: &AcquisitionSpec, g: f64, sigma: f64, incumbent: f64) -> f64 {
    let improvement = g - incumbent - spec.param;
    match spec.kind {
        AcquisitionKind::Ucb => g + spec.param * sigma,
        AcquisitionKind::Pi => {
            if sigma <= SIGMA_FLOOR {
                if improvement > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                norm_cdf(improvement / sigma)
            }
        }
        AcquisitionKind::Ei => {
            if sigma <= SIGMA_FLOOR {
                improvement.max(0.0)
            } else {
                let gamma = improvement / sigma;
                (sigma * (gamma * norm_cdf(gamma) + norm_pdf(gamma))).max(0.0)
            }
        }
    }
}

/// Acquisition value at every grid point.
pub fn score(slice: &PosteriorSlice, spec: &AcquisitionSpec, incumbent: f64) -> Vec<f64> {
    (0..slice.len())
        .map(|i| {
            score_point(
                spec,
                signal(slice, i, spec.mode),
                sigma(slice, i),
                incumbent,
            )
        })
        .collect()
}

/// Index of the largest score whose `excluded` flag is false; smallest index
/// wins ties.
pub fn argmax_excluding(scores: &[f64], excluded: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if excluded.get(i).copied().unwrap_or(false) {
            continue;
        }
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Next grid index to query: the unsampled maximizer of the acquisition.
pub fn select_next(
    slice: &PosteriorSlice,
    spec: &AcquisitionSpec,
    sampled: &[usize],
) -> Result<usize> {
    let inc = incumbent(slice, sampled, spec.mode)?;
    let scores = score(slice, spec, inc);
    let mut excluded = vec![false; slice.len()];
    for &i in sampled {
        if let Some(e) = excluded.get_mut(i) {
            *e = true;
        }
    }
    argmax_excluding(&scores, &excluded).ok_or(DacdError::BudgetExhausted)
}
