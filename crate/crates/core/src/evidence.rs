//! Hypothetical evidence: per-person restrictions of the latent state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mendel::{InheritancePattern, StateSpace};
use crate::pedigree::{Pedigree, Phenotype};

/// Selects every genotype with at least one disease allele.
pub const CARRIER: &str = "carrier";
/// Selects the genotypes without a disease allele.
pub const NONCARRIER: &str = "noncarrier";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvidenceError {
    #[error("evidence names unknown person {0}")]
    UnknownPerson(String),
    #[error("{label:?} is not a {pattern} state for {person}; expected one of {expected}")]
    UnknownState {
        person: String,
        label: String,
        pattern: InheritancePattern,
        expected: String,
    },
    #[error("evidence for {0} allows no states")]
    Empty(String),
    #[error("cannot parse evidence {0:?}; expected ID=STATE[,STATE...]")]
    BadForce(String),
    #[error("malformed evidence document: {0}")]
    Malformed(String),
}

/// Allowed states per person id, as state labels or the aliases
/// [`CARRIER`] and [`NONCARRIER`]. Persons not listed are unrestricted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceSet(pub BTreeMap<String, BTreeSet<String>>);

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, EvidenceError> {
        serde_json::from_slice(bytes).map_err(|e| EvidenceError::Malformed(e.to_string()))
    }

    pub fn allow<S: Into<String>>(mut self, person: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        self.insert(person, states);
        self
    }

    /// Adds (replacing) a restriction for `person`.
    pub fn insert<S: Into<String>>(&mut self, person: impl Into<String>, states: impl IntoIterator<Item = S>) {
        self.0
            .insert(person.into(), states.into_iter().map(Into::into).collect());
    }

    /// Parses the inline form `ID=STATE[,STATE...]`.
    pub fn parse_force(&mut self, entry: &str) -> Result<(), EvidenceError> {
        let (id, states) = entry
            .split_once('=')
            .ok_or_else(|| EvidenceError::BadForce(entry.to_string()))?;
        let states: Vec<&str> = states.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if id.trim().is_empty() || states.is_empty() {
            return Err(EvidenceError::BadForce(entry.to_string()));
        }
        self.insert(id.trim(), states);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Resolves labels against each person's state space.
    pub fn resolve(&self, p: &Pedigree, spaces: &[StateSpace]) -> Result<StateMasks, EvidenceError> {
        let mut masks = vec![None; p.len()];
        for (id, labels) in &self.0 {
            let n = p
                .index_of(id)
                .ok_or_else(|| EvidenceError::UnknownPerson(id.clone()))?;
            let space = &spaces[n];
            let mut mask = vec![false; space.len()];
            for label in labels {
                match label.as_str() {
                    CARRIER => space
                        .mutant_dose
                        .iter()
                        .zip(mask.iter_mut())
                        .for_each(|(&d, m)| *m |= d > 0),
                    NONCARRIER => space
                        .mutant_dose
                        .iter()
                        .zip(mask.iter_mut())
                        .for_each(|(&d, m)| *m |= d == 0),
                    _ => {
                        let s = space.index_of(label).ok_or_else(|| EvidenceError::UnknownState {
                            person: id.clone(),
                            label: label.clone(),
                            pattern: space.pattern,
                            expected: space.labels.join(", "),
                        })?;
                        mask[s] = true;
                    }
                }
            }
            if !mask.iter().any(|&m| m) {
                return Err(EvidenceError::Empty(id.clone()));
            }
            masks[n] = Some(mask);
        }
        Ok(StateMasks(masks))
    }
}

/// Resolved evidence: for each person (indexed like `Pedigree::persons`),
/// `Some(allowed)` or `None` when unrestricted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateMasks(pub Vec<Option<Vec<bool>>>);

impl StateMasks {
    pub fn unrestricted(len: usize) -> Self {
        Self(vec![None; len])
    }

    pub fn allows(&self, n: usize, state: usize) -> bool {
        self.0[n].as_ref().is_none_or(|m| m[state])
    }

    pub fn get(&self, n: usize) -> Option<&[bool]> {
        self.0[n].as_deref()
    }

    /// Intersects person `n`'s mask with `allowed`. The result may be empty,
    /// which makes the evidence impossible rather than invalid.
    pub fn restrict(&mut self, n: usize, allowed: &[bool]) {
        let next = match self.0[n].take() {
            Some(m) => m.iter().zip(allowed).map(|(&a, &b)| a && b).collect(),
            None => allowed.to_vec(),
        };
        self.0[n] = Some(next);
    }

    /// Restricts every affected person to the genotypes that express the
    /// disease under the active pattern.
    pub fn with_affected_carriers(mut self, p: &Pedigree, spaces: &[StateSpace]) -> Self {
        for (n, person) in p.persons().iter().enumerate() {
            if person.phenotype == Phenotype::Affected {
                self.restrict(n, &spaces[n].affected);
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mendel::person_state_spaces;
    use crate::pedigree::{Person, PedigreeDocument, Sex, Union};

    fn trio() -> Pedigree {
        Pedigree::from_document(PedigreeDocument {
            persons: vec![
                Person::new("c", Sex::Male, Phenotype::Affected),
                Person::new("f", Sex::Male, Phenotype::Unaffected),
                Person::new("m", Sex::Female, Phenotype::Unaffected),
            ],
            unions: vec![Union::new("u", "m", "f", ["c"])],
        })
        .unwrap()
    }

    #[test]
    fn labels_and_aliases_resolve() {
        let p = trio();
        let spaces = person_state_spaces(&p, InheritancePattern::XL).unwrap();
        let ev = EvidenceSet::new().allow("m", [CARRIER]).allow("f", ["XAY"]);
        let masks = ev.resolve(&p, &spaces).unwrap();
        assert_eq!(masks.get(2), Some(&[true, true, false][..]));
        assert_eq!(masks.get(1), Some(&[false, true][..]));
        assert_eq!(masks.get(0), None);
    }

    #[test]
    fn resolution_errors() {
        let p = trio();
        let spaces = person_state_spaces(&p, InheritancePattern::AD).unwrap();
        let bad = EvidenceSet::new().allow("nobody", ["aa"]);
        assert_eq!(bad.resolve(&p, &spaces), Err(EvidenceError::UnknownPerson("nobody".into())));
        let bad = EvidenceSet::new().allow("m", ["XaY"]);
        assert!(matches!(bad.resolve(&p, &spaces), Err(EvidenceError::UnknownState { .. })));
        let bad = EvidenceSet::new().allow("m", Vec::<String>::new());
        assert_eq!(bad.resolve(&p, &spaces), Err(EvidenceError::Empty("m".into())));
    }

    #[test]
    fn inline_force_syntax() {
        let mut ev = EvidenceSet::new();
        ev.parse_force("m=Aa,aa").unwrap();
        assert_eq!(ev.0["m"].len(), 2);
        assert!(ev.parse_force("m").is_err());
        assert!(ev.parse_force("=aa").is_err());
        assert!(ev.parse_force("m=").is_err());
    }

    #[test]
    fn affected_persons_become_carriers() {
        let p = trio();
        let spaces = person_state_spaces(&p, InheritancePattern::AR).unwrap();
        let masks = StateMasks::unrestricted(3).with_affected_carriers(&p, &spaces);
        assert_eq!(masks.get(0), Some(&[true, false, false][..]));
        assert!(masks.allows(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let ev = EvidenceSet::from_json(br#"{"m":["Aa"],"c":["aa","Aa"]}"#).unwrap();
        assert_eq!(serde_json::to_string(&ev).unwrap(), r#"{"c":["Aa","aa"],"m":["Aa"]}"#);
    }
}
