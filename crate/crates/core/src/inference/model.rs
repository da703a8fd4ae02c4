use ndarray::{Array1, Array3, Axis};

use super::{InferenceError, InferenceOptions};
use crate::evidence::{EvidenceSet, StateMasks};
use crate::mendel::{person_state_spaces, ParameterSet, StateSpace};
use crate::pedigree::{Pedigree, Phenotype};
use crate::scalar::Real;

/// A person's prior factor after evidence masking.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalPrior<T> {
    /// `P(x) · I[x ∈ S]`.
    Root(Array1<T>),
    /// `P(x | mother, father) · I[x ∈ S]`, indexed `[mother, father, x]`.
    Child { union: usize, table: Array3<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalFactor<T> {
    pub prior: LocalPrior<T>,
    /// `P(y | x)` for the observed phenotype; all ones when unobserved.
    pub emission: Array1<T>,
}

/// Per-person factors of the joint distribution under fixed θ and evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedModel<T> {
    pub spaces: Vec<StateSpace>,
    pub masks: StateMasks,
    pub factors: Vec<LocalFactor<T>>,
}

impl<T: Real> MaskedModel<T> {
    /// Resolves evidence (plus automatic carrier evidence when enabled) and
    /// masks θ with it.
    pub fn build(
        p: &Pedigree,
        theta: &ParameterSet<T>,
        evidence: &EvidenceSet,
        opts: &InferenceOptions,
    ) -> Result<Self, InferenceError> {
        theta.check_shapes()?;
        let spaces = person_state_spaces(p, theta.pattern)?;
        let mut masks = evidence.resolve(p, &spaces)?;
        if opts.auto_carrier_evidence {
            masks = masks.with_affected_carriers(p, &spaces);
        }
        apply_evidence(p, theta, spaces, masks)
    }

    pub fn states(&self, n: usize) -> usize {
        self.spaces[n].len()
    }
}

/// Multiplies root and transition tables by the evidence indicator along the
/// person's own axis. Tables are not renormalized: the removed mass is the
/// improbability of the hypothesis.
pub fn apply_evidence<T: Real>(
    p: &Pedigree,
    theta: &ParameterSet<T>,
    spaces: Vec<StateSpace>,
    masks: StateMasks,
) -> Result<MaskedModel<T>, InferenceError> {
    let mut factors = Vec::with_capacity(p.len());
    for (n, person) in p.persons().iter().enumerate() {
        let kind = spaces[n].kind;
        let keep = |s: usize| if masks.allows(n, s) { T::one() } else { T::zero() };
        let prior = match p.up_edge(n) {
            None => {
                let mut root = theta.root_for(kind)?.clone();
                for (s, x) in root.iter_mut().enumerate() {
                    *x *= keep(s);
                }
                LocalPrior::Root(root)
            }
            Some(union) => {
                let mut table = theta.transition_for(kind)?.clone();
                for (s, mut lane) in table.axis_iter_mut(Axis(2)).enumerate() {
                    lane.mapv_inplace(|x| x * keep(s));
                }
                LocalPrior::Child { union, table }
            }
        };
        let em = theta.emission_for(kind)?;
        let emission = match person.phenotype {
            Phenotype::Unaffected => em.column(0).to_owned(),
            Phenotype::Affected => em.column(1).to_owned(),
            Phenotype::Unobserved => Array1::from_elem(spaces[n].len(), T::one()),
        };
        factors.push(LocalFactor { prior, emission });
    }
    Ok(MaskedModel {
        spaces,
        masks,
        factors,
    })
}
