use std::collections::BTreeMap;

use ndarray::{Array, Array1, Array2, Array3, Dimension};
use num_traits::Num;
use serde_json::{json, Value};

use super::{Genotype, InheritancePattern, ParamsError, SpaceKind};
use crate::pedigree::Sex;

pub const DEFAULT_PRIOR_STRENGTH: f64 = 1_000_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Allele {
    Normal,
    Mutant,
    Y,
}

impl Allele {
    fn dose(self) -> u8 {
        u8::from(self == Allele::Mutant)
    }
}

/// Gametes a parent can transmit, each with its probability.
fn gametes<T: Num + Clone>(g: Genotype) -> Vec<(Allele, T)> {
    let half = T::one() / (T::one() + T::one());
    let x = |mutant: bool| if mutant { Allele::Mutant } else { Allele::Normal };
    match g {
        Genotype::Autosome(d) | Genotype::XX(d) => {
            vec![(x(d >= 1), half.clone()), (x(d == 2), half)]
        }
        Genotype::XY(d) => vec![(x(d == 1), half.clone()), (Allele::Y, half)],
    }
}

fn offspring(pattern: InheritancePattern, maternal: Allele, paternal: Allele) -> Genotype {
    let dose = maternal.dose() + paternal.dose();
    match (pattern, paternal) {
        (InheritancePattern::XL, Allele::Y) => Genotype::XY(maternal.dose()),
        (InheritancePattern::XL, _) => Genotype::XX(dose),
        _ => Genotype::Autosome(dose),
    }
}

/// Punnett-square transition tensor indexed `[mother, father, child]`.
///
/// Built from allele segregation: each parent transmits one of its two
/// gametes with probability 1/2, and the child genotype is their union.
/// Under XL sons receive the father's Y and daughters his X, so the
/// sex-specific tensors condition on the paternal gamete; the unknown-sex
/// tensor keeps both outcomes.
pub fn transition_prior_for<T: Num + Clone>(pattern: InheritancePattern, child: SpaceKind) -> Array3<T> {
    let (mother_kind, father_kind) = SpaceKind::parent_axes(pattern);
    let child_states = child.genotypes();
    let mut t = Array3::from_elem((mother_kind.len(), father_kind.len(), child.len()), T::zero());
    for (i, &gm) in mother_kind.genotypes().iter().enumerate() {
        for (j, &gf) in father_kind.genotypes().iter().enumerate() {
            let mut kept = T::zero();
            for (am, pm) in gametes::<T>(gm) {
                for (af, pf) in gametes::<T>(gf) {
                    let g = offspring(pattern, am, af);
                    if let Some(k) = child_states.iter().position(|&s| s == g) {
                        let p = pm.clone() * pf;
                        t[[i, j, k]] = t[[i, j, k]].clone() + p.clone();
                        kept = kept + p;
                    }
                }
            }
            for k in 0..child.len() {
                t[[i, j, k]] = t[[i, j, k]].clone() / kept.clone();
            }
        }
    }
    t
}

pub fn build_transition_prior<T: Num + Clone>(pattern: InheritancePattern, child_sex: Sex) -> Array3<T> {
    transition_prior_for(pattern, SpaceKind::of(pattern, child_sex))
}

/// Emission rows over `[unaffected, affected]`: a point mass on the
/// phenotype Mendelian rules assign to each genotype.
pub fn emission_prior_for<T: Num + Clone>(pattern: InheritancePattern, kind: SpaceKind) -> Array2<T> {
    let gs = kind.genotypes();
    Array2::from_shape_fn((gs.len(), 2), |(s, y)| {
        if (y == 1) == gs[s].is_affected(pattern) {
            T::one()
        } else {
            T::zero()
        }
    })
}

pub fn build_emission_prior<T: Num + Clone>(pattern: InheritancePattern, sex: Sex) -> Array2<T> {
    emission_prior_for(pattern, SpaceKind::of(pattern, sex))
}

/// Root distribution concentrated on the genotypes without a mutant allele,
/// split evenly when there are several (only the unknown-sex XL space).
pub fn root_prior_for<T: Num + Clone>(kind: SpaceKind) -> Array1<T> {
    let gs = kind.genotypes();
    let clean = gs.iter().filter(|g| g.mutant_dose() == 0).count();
    let mut share = T::zero();
    for _ in 0..clean {
        share = share + T::one();
    }
    let share = T::one() / share;
    Array1::from_shape_fn(gs.len(), |s| {
        if gs[s].mutant_dose() == 0 {
            share.clone()
        } else {
            T::zero()
        }
    })
}

pub fn build_root_prior<T: Num + Clone>(pattern: InheritancePattern, sex: Sex) -> Array1<T> {
    root_prior_for(SpaceKind::of(pattern, sex))
}

/// `1 + base * strength`, elementwise.
pub fn apply_prior_strength<D: Dimension>(
    base: &Array<f64, D>,
    strength: f64,
) -> Result<Array<f64, D>, ParamsError> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(ParamsError::NonPositiveStrength(strength));
    }
    Ok(base.mapv(|a| 1.0 + a * strength))
}

/// Dirichlet concentrations for every table of one inheritance pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSet {
    pub pattern: InheritancePattern,
    pub strength: f64,
    pub root: BTreeMap<SpaceKind, Array1<f64>>,
    /// Keyed by child space; indexed `[mother, father, child]`.
    pub transition: BTreeMap<SpaceKind, Array3<f64>>,
    pub emission: BTreeMap<SpaceKind, Array2<f64>>,
}

impl PriorSet {
    pub fn mendelian(pattern: InheritancePattern, strength: f64) -> Result<Self, ParamsError> {
        let mut root = BTreeMap::new();
        let mut transition = BTreeMap::new();
        let mut emission = BTreeMap::new();
        for &kind in SpaceKind::for_pattern(pattern) {
            root.insert(kind, apply_prior_strength(&root_prior_for::<f64>(kind), strength)?);
            transition.insert(
                kind,
                apply_prior_strength(&transition_prior_for::<f64>(pattern, kind), strength)?,
            );
            emission.insert(
                kind,
                apply_prior_strength(&emission_prior_for::<f64>(pattern, kind), strength)?,
            );
        }
        Ok(Self {
            pattern,
            strength,
            root,
            transition,
            emission,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pattern": self.pattern.as_str(),
            "strength": self.strength,
            "root": super::params::tables_json(&self.root, |k| vec![k.labels()]),
            "transition": super::params::tables_json(&self.transition, |k| {
                let (m, f) = SpaceKind::parent_axes(self.pattern);
                vec![m.labels(), f.labels(), k.labels()]
            }),
            "emission": super::params::tables_json(&self.emission, |k| {
                vec![k.labels(), vec!["unaffected", "affected"]]
            }),
        })
    }
}
