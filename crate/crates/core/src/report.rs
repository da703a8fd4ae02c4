//! JSON shapes shared by the command line tool and the HTTP service.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::inference::Inference;
use crate::pedigree::Pedigree;

/// A natural-log probability. Infinite values, which JSON numbers cannot
/// carry, are written as the strings `"-inf"` and `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogProb(pub f64);

impl Serialize for LogProb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            x if x.is_finite() => s.serialize_f64(x),
            x if x == f64::NEG_INFINITY => s.serialize_str("-inf"),
            x if x == f64::INFINITY => s.serialize_str("inf"),
            _ => s.serialize_str("nan"),
        }
    }
}

impl<'de> Deserialize<'de> for LogProb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = LogProb;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"-inf\", \"inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<LogProb, E> {
                Ok(LogProb(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<LogProb, E> {
                Ok(LogProb(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<LogProb, E> {
                Ok(LogProb(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<LogProb, E> {
                match v {
                    "-inf" => Ok(LogProb(f64::NEG_INFINITY)),
                    "inf" => Ok(LogProb(f64::INFINITY)),
                    "nan" => Ok(LogProb(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub anchor_spread: f64,
    pub fvs: Vec<String>,
}

/// Serialized smoothing result. `posteriors` is null when the evidence is
/// impossible (`log_marginal` is then `"-inf"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub audit: AuditSummary,
    pub log_marginal: LogProb,
    pub posteriors: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

impl InferenceResult {
    pub fn from_inference(p: &Pedigree, inf: &Inference<f64>) -> Self {
        let posteriors = inf.is_possible().then(|| {
            p.persons()
                .iter()
                .zip(&inf.posteriors)
                .zip(&inf.labels)
                .map(|((person, post), labels)| {
                    let row = labels.iter().map(|l| l.to_string()).zip(post.iter().copied()).collect();
                    (person.id.clone(), row)
                })
                .collect()
        });
        Self {
            audit: AuditSummary {
                anchor_spread: inf.audit.anchor_spread,
                fvs: inf.audit.fvs.clone(),
            },
            log_marginal: LogProb(inf.log_marginal),
            posteriors,
        }
    }

    pub fn is_possible(&self) -> bool {
        self.posteriors.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_log_probabilities_round_trip() {
        let s = serde_json::to_string(&[LogProb(f64::NEG_INFINITY), LogProb(-1.5)]).unwrap();
        assert_eq!(s, r#"["-inf",-1.5]"#);
        let back: Vec<LogProb> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![LogProb(f64::NEG_INFINITY), LogProb(-1.5)]);
        assert!(serde_json::from_str::<LogProb>(r#""minus""#).is_err());
    }
}
