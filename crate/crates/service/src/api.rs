//! Request handling shared by the HTTP routes and the command line tool.
//!
//! Every operation returns the exact response body, so both front ends emit
//! the same bytes for the same input and seed.

use std::fmt;
use std::str::FromStr;

use pedigree_core::pedigree::{validate as validate_document, warnings, Violation, Warning};
use pedigree_core::predictor::{smooth_averaged, DEFAULT_SAMPLES, DEFAULT_THRESHOLD};
use pedigree_core::mendel::DEFAULT_PRIOR_STRENGTH;
use pedigree_core::{
    predict as run_predict, EvidenceSet, InferenceError, InferenceOptions, InheritancePattern, ParamsError, Pedigree,
    PedigreeDocument, PredictConfig, PredictError,
};
use serde::{Deserialize, Deserializer, Serialize};

/// Largest `samples` the HTTP service accepts.
pub const MAX_SAMPLES: usize = 10_000;
/// Largest pedigree the HTTP service accepts.
pub const MAX_PERSONS: usize = 200;

/// A single pattern or all three.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PatternChoice {
    #[default]
    All,
    One(InheritancePattern),
}

impl FromStr for PatternChoice {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(Self::All)
        } else {
            s.parse().map(Self::One)
        }
    }
}

impl fmt::Display for PatternChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::One(p) => p.fmt(f),
        }
    }
}

impl<'de> Deserialize<'de> for PatternChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_strength() -> f64 {
    DEFAULT_PRIOR_STRENGTH
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_true() -> bool {
    true
}

/// Body of `/api/smooth` and `/api/predict`. Omitted fields take the
/// command line defaults.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferRequest {
    pub pedigree: PedigreeDocument,
    #[serde(default)]
    pub pattern: PatternChoice,
    #[serde(default)]
    pub evidence: EvidenceSet,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_strength")]
    pub strength: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub auto_carrier: bool,
}

impl InferRequest {
    pub fn new(pedigree: PedigreeDocument) -> Self {
        Self {
            pedigree,
            pattern: PatternChoice::All,
            evidence: EvidenceSet::new(),
            samples: DEFAULT_SAMPLES,
            strength: DEFAULT_PRIOR_STRENGTH,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            auto_carrier: true,
        }
    }

    pub fn config(&self) -> PredictConfig {
        PredictConfig {
            samples: self.samples,
            strength: self.strength,
            threshold: self.threshold,
            seed: self.seed,
            options: InferenceOptions {
                auto_carrier_evidence: self.auto_carrier,
            },
        }
    }

    /// Argument checks that do not need the pedigree.
    fn check_settings(&self) -> Result<(), ApiError> {
        if self.samples == 0 {
            return Err(ApiError::BadRequest("samples must be at least 1".into()));
        }
        if !(self.strength.is_finite() && self.strength > 0.0) {
            return Err(ApiError::BadRequest(format!(
                "prior strength must be a positive finite number, got {}",
                self.strength
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ApiError::BadRequest(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// The size caps the HTTP service enforces on top of `check_settings`.
    pub fn check_limits(&self) -> Result<(), ApiError> {
        if self.samples > MAX_SAMPLES {
            return Err(ApiError::BadRequest(format!(
                "samples is capped at {MAX_SAMPLES}, got {}",
                self.samples
            )));
        }
        if self.pedigree.persons.len() > MAX_PERSONS {
            return Err(ApiError::BadRequest(format!(
                "pedigrees are capped at {MAX_PERSONS} persons, got {}",
                self.pedigree.persons.len()
            )));
        }
        Ok(())
    }
}

/// Result of `/api/validate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

pub fn validate(doc: &PedigreeDocument) -> ValidationReport {
    let violations = validate_document(doc);
    ValidationReport {
        valid: violations.is_empty(),
        warnings: if violations.is_empty() { warnings(doc) } else { Vec::new() },
        violations,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ApiError {
    /// The request could not be read or has out-of-range settings.
    BadRequest(String),
    /// The pedigree violates a structural rule.
    Invalid(ValidationReport),
    /// The request is well formed but the model rejects it (for example an
    /// evidence label that is not a state of that person).
    Domain(String),
}

impl ApiError {
    pub fn status(&self) -> u16 {
        match self {
            Self::BadRequest(_) => 400,
            Self::Invalid(_) | Self::Domain(_) => 422,
        }
    }

    /// Response body: the validation report, or `{"error": message}`.
    pub fn body(&self) -> String {
        match self {
            Self::Invalid(report) => render(report),
            Self::BadRequest(msg) | Self::Domain(msg) => render(&serde_json::json!({ "error": msg })),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadRequest(msg) | Self::Domain(msg) => f.write_str(msg),
            Self::Invalid(report) => {
                let msgs: Vec<&str> = report.violations.iter().map(|v| v.message.as_str()).collect();
                write!(f, "invalid pedigree: {}", msgs.join("; "))
            }
        }
    }
}

impl std::error::Error for ApiError {}

impl From<InferenceError> for ApiError {
    fn from(e: InferenceError) -> Self {
        Self::Domain(e.to_string())
    }
}

/// A successful response. `possible` is false when the evidence has zero
/// probability; the body then carries `"-inf"` marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct Reply {
    pub body: String,
    pub possible: bool,
}

/// Pretty JSON with a trailing newline, the single output format.
pub fn render<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("response types serialize");
    s.push('\n');
    s
}

pub fn parse_request(bytes: &[u8]) -> Result<InferRequest, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::BadRequest(format!("malformed request: {e}")))
}

pub fn parse_document(bytes: &[u8]) -> Result<PedigreeDocument, ApiError> {
    PedigreeDocument::from_json(bytes).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn build_pedigree(doc: &PedigreeDocument) -> Result<Pedigree, ApiError> {
    let report = validate(doc);
    if !report.valid {
        return Err(ApiError::Invalid(report));
    }
    Pedigree::from_document(doc.clone()).map_err(|e| ApiError::Domain(e.to_string()))
}

/// Smoothed posteriors under one pattern, averaged over `samples`
/// parameter draws.
pub fn smooth(req: &InferRequest) -> Result<Reply, ApiError> {
    req.check_settings()?;
    let PatternChoice::One(pattern) = req.pattern else {
        return Err(ApiError::BadRequest("smoothing needs a single pattern: AD, AR or XL".into()));
    };
    let p = build_pedigree(&req.pedigree)?;
    let result = smooth_averaged(&p, pattern, &req.evidence, &req.config()).map_err(predict_error)?;
    Ok(Reply {
        possible: result.is_possible(),
        body: render(&result),
    })
}

/// Pattern prediction over all three patterns.
pub fn predict(req: &InferRequest) -> Result<Reply, ApiError> {
    req.check_settings()?;
    if req.pattern != PatternChoice::All {
        return Err(ApiError::BadRequest("prediction compares all patterns; omit pattern or pass \"all\"".into()));
    }
    let p = build_pedigree(&req.pedigree)?;
    match run_predict(&p, &req.evidence, &req.config()) {
        Ok(prediction) => Ok(Reply {
            body: render(&prediction),
            possible: true,
        }),
        Err(PredictError::Impossible(prediction)) => Ok(Reply {
            body: render(&prediction),
            possible: false,
        }),
        Err(e) => Err(predict_error(e)),
    }
}

fn predict_error(e: PredictError) -> ApiError {
    match e {
        PredictError::NoSamples => ApiError::BadRequest(e.to_string()),
        PredictError::Inference(InferenceError::Params(ParamsError::NonPositiveStrength(_))) => {
            ApiError::BadRequest(e.to_string())
        }
        other => ApiError::Domain(other.to_string()),
    }
}
