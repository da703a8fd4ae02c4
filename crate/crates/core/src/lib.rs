//! Exact Bayesian inference of Mendelian inheritance patterns on pedigrees.
//!
//! A pedigree is a directed hypergraph of persons joined by unions. Latent
//! genotypes follow Dirichlet-smoothed Punnett transitions and emit an
//! affected/unaffected phenotype. [`inference`] computes exact smoothed
//! posteriors (looped pedigrees included), [`predictor`] compares the three
//! inheritance patterns by Monte Carlo over parameter draws, and [`oracle`]
//! provides brute-force ground truth for small pedigrees.
//!
//! The numeric code is generic over [`scalar::Real`]; the aliases below fix
//! it to `f64`.

pub mod evidence;
pub mod feedback;
pub mod inference;
pub mod mendel;
pub mod oracle;
pub mod pedigree;
pub mod predictor;
pub mod report;
pub mod scalar;

pub use evidence::{EvidenceError, EvidenceSet, StateMasks};
pub use feedback::{find_feedback_set, FeedbackSet};
pub use inference::{InferenceError, InferenceOptions};
pub use mendel::{InheritancePattern, ParamsError, PriorSet, StateSpace};
pub use pedigree::{parse_pedigree, serialize_pedigree, Pedigree, PedigreeDocument, PedigreeError, Person, Phenotype, Sex, Union};
pub use predictor::{predict, PredictConfig, PredictError, Prediction};
pub use report::{InferenceResult, LogProb};

pub type Parameters = mendel::ParameterSet<f64>;
pub type Engine<'p> = inference::Engine<'p, f64>;
pub type Inference = inference::Inference<f64>;
pub type ParentConditional = inference::ParentConditional<f64>;
pub type MessageCache = inference::MessageCache<f64>;
