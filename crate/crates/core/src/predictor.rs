//! Inheritance-pattern prediction by Monte Carlo over parameter draws.
//!
//! For each pattern the marginal likelihood `E_θ[P(Y, evidence | θ)]` under
//! the pattern's Dirichlet priors is estimated from i.i.d. draws and the
//! three estimates are normalized against each other.

use std::collections::BTreeMap;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::EvidenceSet;
use crate::feedback::{find_feedback_set, FeedbackSet};
use crate::inference::{Engine, InferenceError, InferenceOptions, MaskedModel};
use crate::mendel::{sample_parameters_with, InheritancePattern, ParameterSet, PriorSet, DEFAULT_PRIOR_STRENGTH};
use crate::pedigree::Pedigree;
use crate::report::{AuditSummary, InferenceResult, LogProb};
use crate::scalar::log_sum_exp;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("at least one sample is required")]
    NoSamples,
    #[error("the evidence is impossible under every inheritance pattern")]
    Impossible(Box<Prediction>),
}

impl From<crate::mendel::ParamsError> for PredictError {
    fn from(e: crate::mendel::ParamsError) -> Self {
        Self::Inference(e.into())
    }
}

/// Monte Carlo settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictConfig {
    pub samples: usize,
    pub strength: f64,
    pub threshold: f64,
    pub seed: u64,
    pub options: InferenceOptions,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            strength: DEFAULT_PRIOR_STRENGTH,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            options: InferenceOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub confident: bool,
    /// Per pattern, the log of the Monte Carlo estimate of `E_θ[P(Y | θ)]`.
    pub log_marginals: BTreeMap<InheritancePattern, LogProb>,
    /// Estimates normalized over the three patterns; null if all are zero.
    pub posterior: Option<BTreeMap<InheritancePattern, f64>>,
    pub predicted: Option<InheritancePattern>,
    pub samples: usize,
    pub seed: u64,
}

/// Generator for the `k`-th parameter draw of `pattern`.
///
/// Each (pattern, draw) pair reads its own ChaCha stream of the base seed,
/// so draws are reproducible individually and patterns do not share
/// randomness.
pub fn draw_rng(seed: u64, pattern: InheritancePattern, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((pattern.index() as u64) << 32) | k as u64);
    rng
}

/// The `k`-th parameter draw of `pattern`.
pub fn draw_parameters(priors: &PriorSet, seed: u64, k: usize) -> ParameterSet<f64> {
    sample_parameters_with(priors, &mut draw_rng(seed, priors.pattern, k))
}

/// `ln(mean(exp(xs)))`, reduced in sorted order.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    log_sum_exp(&sorted) - (xs.len() as f64).ln()
}

/// `ln P(Y, evidence | θ_k)` for each draw `k` in order.
pub fn draw_log_marginals(
    p: &Pedigree,
    pattern: InheritancePattern,
    evidence: &EvidenceSet,
    cfg: &PredictConfig,
    fvs: &FeedbackSet,
) -> Result<Vec<f64>, PredictError> {
    let priors = PriorSet::mendelian(pattern, cfg.strength)?;
    (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let theta = draw_parameters(&priors, cfg.seed, k);
            let model = MaskedModel::build(p, &theta, evidence, &cfg.options)?;
            Ok(Engine::from_model(p, model, fvs.clone()).log_marginal())
        })
        .collect()
}

/// Log of the Monte Carlo estimate of `E_θ[P(Y, evidence | θ)]`.
pub fn pattern_log_marginal(
    p: &Pedigree,
    pattern: InheritancePattern,
    evidence: &EvidenceSet,
    cfg: &PredictConfig,
) -> Result<f64, PredictError> {
    if cfg.samples == 0 {
        return Err(PredictError::NoSamples);
    }
    let draws = draw_log_marginals(p, pattern, evidence, cfg, &find_feedback_set(p))?;
    Ok(log_mean_exp(&draws))
}

/// Normalizes per-pattern log marginals (ordered AD, AR, XL) and picks the
/// largest, breaking ties towards the earlier pattern. `None` when every
/// marginal is zero.
pub fn decide(log_marginals: [f64; 3], threshold: f64) -> Option<([f64; 3], InheritancePattern, bool)> {
    let total = log_sum_exp(&log_marginals);
    if total == f64::NEG_INFINITY {
        return None;
    }
    let posterior = log_marginals.map(|l| (l - total).exp());
    let mut best = 0;
    for i in 1..3 {
        if posterior[i] > posterior[best] {
            best = i;
        }
    }
    Some((posterior, InheritancePattern::ALL[best], posterior[best] > threshold))
}

/// Predicts the inheritance pattern of `p`.
pub fn predict(p: &Pedigree, evidence: &EvidenceSet, cfg: &PredictConfig) -> Result<Prediction, PredictError> {
    if cfg.samples == 0 {
        return Err(PredictError::NoSamples);
    }
    let fvs = find_feedback_set(p);
    let mut logs = [0.0; 3];
    for pattern in InheritancePattern::ALL {
        logs[pattern.index()] = log_mean_exp(&draw_log_marginals(p, pattern, evidence, cfg, &fvs)?);
    }
    let log_marginals = InheritancePattern::ALL
        .iter()
        .map(|&pt| (pt, LogProb(logs[pt.index()])))
        .collect();
    let mut prediction = Prediction {
        confident: false,
        log_marginals,
        posterior: None,
        predicted: None,
        samples: cfg.samples,
        seed: cfg.seed,
    };
    let Some((posterior, predicted, confident)) = decide(logs, cfg.threshold) else {
        return Err(PredictError::Impossible(Box::new(prediction)));
    };
    prediction.posterior = Some(InheritancePattern::ALL.iter().map(|&pt| (pt, posterior[pt.index()])).collect());
    prediction.predicted = Some(predicted);
    prediction.confident = confident;
    Ok(prediction)
}

/// Posteriors averaged over parameter draws.
///
/// Draw `k` contributes its posteriors with weight `P(Y, evidence | θ_k)`,
/// which gives `P(n_x | Y, evidence)` with θ integrated out under the same
/// Monte Carlo estimate `pattern_log_marginal` uses. The reported marginal
/// is that estimate and the audit spread is the worst over all draws.
pub fn smooth_averaged(
    p: &Pedigree,
    pattern: InheritancePattern,
    evidence: &EvidenceSet,
    cfg: &PredictConfig,
) -> Result<InferenceResult, PredictError> {
    if cfg.samples == 0 {
        return Err(PredictError::NoSamples);
    }
    let priors = PriorSet::mendelian(pattern, cfg.strength)?;
    let fvs = find_feedback_set(p);
    let runs = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let theta = draw_parameters(&priors, cfg.seed, k);
            let model = MaskedModel::build(p, &theta, evidence, &cfg.options)?;
            Ok(Engine::from_model(p, model, fvs.clone()).run())
        })
        .collect::<Result<Vec<_>, InferenceError>>()?;
    let logs: Vec<f64> = runs.iter().map(|r| r.log_marginal).collect();
    let log_marginal = log_mean_exp(&logs);
    let audit = AuditSummary {
        anchor_spread: runs.iter().map(|r| r.audit.anchor_spread).fold(0.0, f64::max),
        fvs: fvs.ids(p),
    };
    if log_marginal == f64::NEG_INFINITY {
        return Ok(InferenceResult {
            audit,
            log_marginal: LogProb(log_marginal),
            posteriors: None,
        });
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<usize> = (0..runs.len()).filter(|&k| runs[k].is_possible()).collect();
    order.sort_by(|&a, &b| logs[a].total_cmp(&logs[b]).then(a.cmp(&b)));
    let labels = &runs[order[0]].labels;
    let mut posteriors = BTreeMap::new();
    for (n, person) in p.persons().iter().enumerate() {
        let mut acc = Array1::<f64>::zeros(labels[n].len());
        for &k in &order {
            acc.scaled_add((logs[k] - max).exp(), &runs[k].posteriors[n]);
        }
        // Dividing by the row's own total keeps forced states exactly at 1.
        let total = acc.sum();
        acc.mapv_inplace(|x| x / total);
        let row = labels[n].iter().map(|l| l.to_string()).zip(acc.iter().copied()).collect();
        posteriors.insert(person.id.clone(), row);
    }
    Ok(InferenceResult {
        audit,
        log_marginal: LogProb(log_marginal),
        posteriors: Some(posteriors),
    })
}
