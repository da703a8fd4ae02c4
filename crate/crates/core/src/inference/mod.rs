//! Exact smoothing on pedigrees.
//!
//! Singly connected pedigrees are handled by message passing directly;
//! loops are broken by conditioning on a feedback set and summing the
//! polytree results over its joint states.

mod engine;
mod graph;
mod messages;
mod model;

use ndarray::Array1;
use serde::Serialize;
use thiserror::Error;

use crate::evidence::{EvidenceError, EvidenceSet};
use crate::mendel::{ParameterSet, ParamsError};
use crate::pedigree::Pedigree;
use crate::scalar::Real;

pub use engine::{Audit, Engine, Inference, MessageCache, ParentConditional, AUDIT_TOLERANCE};
pub use messages::Scaled;
pub use model::{apply_evidence, LocalFactor, LocalPrior, MaskedModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("unknown person {0}")]
    UnknownPerson(String),
    #[error("{0} has no parents in the pedigree")]
    Root(String),
    #[error("the evidence is impossible under this model (P(Y, evidence) = 0)")]
    ImpossibleEvidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InferenceOptions {
    /// Restrict every affected person to the genotypes that express the
    /// disease, on top of the affected emission.
    pub auto_carrier_evidence: bool,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self {
            auto_carrier_evidence: true,
        }
    }
}

/// `ln P(Y, evidence | θ)`, `-inf` for impossible evidence.
pub fn marginal_likelihood<T: Real>(
    p: &Pedigree,
    theta: &ParameterSet<T>,
    evidence: &EvidenceSet,
    opts: &InferenceOptions,
) -> Result<T, InferenceError> {
    Ok(Engine::new(p, theta, evidence, opts)?.log_marginal())
}

/// Full smoothing pass: marginal, posteriors, parent tables and audit.
pub fn smooth<T: Real>(
    p: &Pedigree,
    theta: &ParameterSet<T>,
    evidence: &EvidenceSet,
    opts: &InferenceOptions,
) -> Result<Inference<T>, InferenceError> {
    Ok(Engine::new(p, theta, evidence, opts)?.run())
}

fn person_index(p: &Pedigree, id: &str) -> Result<usize, InferenceError> {
    p.index_of(id).ok_or_else(|| InferenceError::UnknownPerson(id.to_string()))
}

/// `P(n_x | Y, evidence)` over the person's state space.
pub fn node_posterior<T: Real>(
    p: &Pedigree,
    theta: &ParameterSet<T>,
    evidence: &EvidenceSet,
    id: &str,
    opts: &InferenceOptions,
) -> Result<Array1<T>, InferenceError> {
    let n = person_index(p, id)?;
    let mut result = smooth(p, theta, evidence, opts)?;
    if !result.is_possible() {
        return Err(InferenceError::ImpossibleEvidence);
    }
    Ok(result.posteriors.swap_remove(n))
}

/// The posterior table over a non-root person and their parents.
pub fn parent_conditional<T: Real>(
    p: &Pedigree,
    theta: &ParameterSet<T>,
    evidence: &EvidenceSet,
    id: &str,
    opts: &InferenceOptions,
) -> Result<ParentConditional<T>, InferenceError> {
    let n = person_index(p, id)?;
    if p.is_root(n) {
        return Err(InferenceError::Root(id.to_string()));
    }
    let mut result = smooth(p, theta, evidence, opts)?;
    if !result.is_possible() {
        return Err(InferenceError::ImpossibleEvidence);
    }
    Ok(result.families.swap_remove(n).expect("non-root has a family table"))
}

/// Recomputes P(Y) at every node, union and family table and reports the
/// largest relative disagreement.
pub fn consistency_audit<T: Real>(
    p: &Pedigree,
    theta: &ParameterSet<T>,
    evidence: &EvidenceSet,
    opts: &InferenceOptions,
) -> Result<Audit, InferenceError> {
    Ok(smooth(p, theta, evidence, opts)?.audit)
}
