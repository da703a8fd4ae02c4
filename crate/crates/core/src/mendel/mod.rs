//! Mendelian latent state spaces, Dirichlet priors, parameter sampling and
//! forward simulation.
//!
//! Every state space orders genotypes from most to least mutant: index 0 is
//! always the fully mutant genotype. In labels a lowercase `a` marks the
//! disease allele, whatever the inheritance pattern.

mod params;
mod priors;
mod simulate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pedigree::{Pedigree, Sex};

pub use params::{sample_parameters, sample_parameters_with, ParameterSet, Table};
pub use priors::{
    apply_prior_strength, build_emission_prior, build_root_prior, build_transition_prior, emission_prior_for,
    root_prior_for, transition_prior_for,
    PriorSet, DEFAULT_PRIOR_STRENGTH,
};
pub use simulate::{simulate, simulate_with, SimulatedPerson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InheritancePattern {
    AD,
    AR,
    XL,
}

impl InheritancePattern {
    pub const ALL: [InheritancePattern; 3] = [Self::AD, Self::AR, Self::XL];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AD => "AD",
            Self::AR => "AR",
            Self::XL => "XL",
        }
    }

    pub fn is_x_linked(self) -> bool {
        self == Self::XL
    }
}

impl fmt::Display for InheritancePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InheritancePattern {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AD" => Ok(Self::AD),
            "AR" => Ok(Self::AR),
            "XL" => Ok(Self::XL),
            _ => Err(ParamsError::UnknownPattern(s.to_string())),
        }
    }
}

/// Which genotype enumeration a person uses.
///
/// Autosomal patterns share one space for every sex; the X-linked pattern
/// has one per sex, with `XUnknown` the union of the female and male spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpaceKind {
    Autosomal,
    XFemale,
    XMale,
    XUnknown,
}

#[allow(clippy::len_without_is_empty)]
impl SpaceKind {
    pub fn of(pattern: InheritancePattern, sex: Sex) -> Self {
        match (pattern, sex) {
            (InheritancePattern::AD | InheritancePattern::AR, _) => Self::Autosomal,
            (InheritancePattern::XL, Sex::Female) => Self::XFemale,
            (InheritancePattern::XL, Sex::Male) => Self::XMale,
            (InheritancePattern::XL, Sex::Unknown) => Self::XUnknown,
        }
    }

    /// Spaces a person can occupy under `pattern`.
    pub fn for_pattern(pattern: InheritancePattern) -> &'static [SpaceKind] {
        match pattern {
            InheritancePattern::AD | InheritancePattern::AR => &[Self::Autosomal],
            InheritancePattern::XL => &[Self::XFemale, Self::XMale, Self::XUnknown],
        }
    }

    /// Spaces of the mother and father axes of a transition tensor.
    pub fn parent_axes(pattern: InheritancePattern) -> (SpaceKind, SpaceKind) {
        match pattern {
            InheritancePattern::AD | InheritancePattern::AR => (Self::Autosomal, Self::Autosomal),
            InheritancePattern::XL => (Self::XFemale, Self::XMale),
        }
    }

    pub fn genotypes(self) -> &'static [Genotype] {
        use Genotype::*;
        match self {
            Self::Autosomal => &[Autosome(2), Autosome(1), Autosome(0)],
            Self::XFemale => &[XX(2), XX(1), XX(0)],
            Self::XMale => &[XY(1), XY(0)],
            Self::XUnknown => &[XX(2), XX(1), XX(0), XY(1), XY(0)],
        }
    }

    pub fn len(self) -> usize {
        self.genotypes().len()
    }

    pub fn labels(self) -> Vec<&'static str> {
        self.genotypes().iter().map(|g| g.label()).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Autosomal => "autosomal",
            Self::XFemale => "x_female",
            Self::XMale => "x_male",
            Self::XUnknown => "x_unknown",
        }
    }
}

/// A latent genotype, described by how many disease alleles it carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Genotype {
    /// Autosome pair with the given number of mutant alleles (0..=2).
    Autosome(u8),
    /// Two X chromosomes with the given number of mutant alleles (0..=2).
    XX(u8),
    /// One X chromosome (mutant if 1) and a Y.
    XY(u8),
}

impl Genotype {
    pub fn mutant_dose(self) -> u8 {
        match self {
            Self::Autosome(d) | Self::XX(d) | Self::XY(d) => d,
        }
    }

    /// Whether Mendelian rules make this genotype express the disease.
    pub fn is_affected(self, pattern: InheritancePattern) -> bool {
        match pattern {
            InheritancePattern::AD => self.mutant_dose() >= 1,
            InheritancePattern::AR | InheritancePattern::XL => match self {
                Self::Autosome(d) | Self::XX(d) => d == 2,
                Self::XY(d) => d == 1,
            },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Autosome(2) => "aa",
            Self::Autosome(1) => "Aa",
            Self::Autosome(_) => "AA",
            Self::XX(2) => "XaXa",
            Self::XX(1) => "XAXa",
            Self::XX(_) => "XAXA",
            Self::XY(1) => "XaY",
            Self::XY(_) => "XAY",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateSpace {
    pub pattern: InheritancePattern,
    pub sex: Sex,
    pub kind: SpaceKind,
    pub labels: Vec<&'static str>,
    pub mutant_dose: Vec<u8>,
    pub affected: Vec<bool>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }
}

pub fn build_state_space(pattern: InheritancePattern, sex: Sex) -> StateSpace {
    space_for(pattern, SpaceKind::of(pattern, sex), sex)
}

pub(crate) fn space_for(pattern: InheritancePattern, kind: SpaceKind, sex: Sex) -> StateSpace {
    let gs = kind.genotypes();
    StateSpace {
        pattern,
        sex,
        kind,
        labels: gs.iter().map(|g| g.label()).collect(),
        mutant_dose: gs.iter().map(|g| g.mutant_dose()).collect(),
        affected: gs.iter().map(|g| g.is_affected(pattern)).collect(),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("prior strength must be a positive finite number, got {0}")]
    NonPositiveStrength(f64),
    #[error("unknown inheritance pattern {0:?}; expected AD, AR or XL")]
    UnknownPattern(String),
    #[error("{0} is a mother in one union and a father in another; parent roles cannot be mapped to tensor axes")]
    ConflictingRoles(String),
    #[error("parameter set for {expected} used with {found} model")]
    PatternMismatch {
        expected: InheritancePattern,
        found: InheritancePattern,
    },
    #[error("parameter set has no {table} table for {space}")]
    MissingTable { table: &'static str, space: &'static str },
    #[error("{table} table for {space} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        table: &'static str,
        space: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

/// The state space each person uses under `pattern`.
///
/// Under XL a parent's space follows their role in the unions they parent
/// (mother axis: female states, father axis: male states), so a parent of
/// unknown or mismatched sex is modeled in the role's space. A person who
/// is a mother in one union and a father in another cannot be mapped.
pub fn person_spaces(p: &Pedigree, pattern: InheritancePattern) -> Result<Vec<SpaceKind>, ParamsError> {
    if !pattern.is_x_linked() {
        return Ok(vec![SpaceKind::Autosomal; p.len()]);
    }
    (0..p.len())
        .map(|n| {
            let roles: BTreeSet<bool> = p
                .down_edges(n)
                .iter()
                .map(|&e| p.union(e).mother == n)
                .collect();
            match (roles.contains(&true), roles.contains(&false)) {
                (true, true) => Err(ParamsError::ConflictingRoles(p.person(n).id.clone())),
                (true, false) => Ok(SpaceKind::XFemale),
                (false, true) => Ok(SpaceKind::XMale),
                (false, false) => Ok(SpaceKind::of(pattern, p.person(n).sex)),
            }
        })
        .collect()
}

/// State spaces per person, with labels and flags.
pub fn person_state_spaces(p: &Pedigree, pattern: InheritancePattern) -> Result<Vec<StateSpace>, ParamsError> {
    Ok(person_spaces(p, pattern)?
        .into_iter()
        .zip(p.persons())
        .map(|(k, person)| space_for(pattern, k, person.sex))
        .collect())
}
