use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{person_spaces, ParameterSet, ParamsError};
use crate::pedigree::{Pedigree, Phenotype};

/// One person's simulated latent state (index into their state space) and phenotype.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimulatedPerson {
    pub state: usize,
    pub phenotype: Phenotype,
}

fn categorical<R: Rng + ?Sized>(p: ArrayView1<f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `acc` fractionally below 1; fall back to the last supported state.
    p.iter().rposition(|&w| w > 0.0).unwrap_or(p.len() - 1)
}

/// Forward-samples latent states and phenotypes for every person.
///
/// Persons are visited in topological order; roots draw from the root
/// distribution and children from the transition slice selected by their
/// parents' realized states. Indexed like `p.persons()`.
pub fn simulate(p: &Pedigree, theta: &ParameterSet<f64>, seed: u64) -> Result<Vec<SimulatedPerson>, ParamsError> {
    simulate_with(p, theta, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn simulate_with<R: Rng + ?Sized>(
    p: &Pedigree,
    theta: &ParameterSet<f64>,
    rng: &mut R,
) -> Result<Vec<SimulatedPerson>, ParamsError> {
    theta.check_shapes()?;
    let spaces = person_spaces(p, theta.pattern)?;
    let mut out: Vec<Option<SimulatedPerson>> = vec![None; p.len()];
    for n in p.traversal_order() {
        let kind = spaces[n];
        let state = match p.parents(n) {
            None => categorical(theta.root_for(kind)?.view(), rng),
            Some((m, f)) => {
                let (sm, sf) = (out[m].expect("parents first").state, out[f].expect("parents first").state);
                let t = theta.transition_for(kind)?;
                categorical(t.slice(ndarray::s![sm, sf, ..]), rng)
            }
        };
        let y = categorical(theta.emission_for(kind)?.row(state), rng);
        out[n] = Some(SimulatedPerson {
            state,
            phenotype: if y == 1 { Phenotype::Affected } else { Phenotype::Unaffected },
        });
    }
    Ok(out.into_iter().map(|s| s.expect("every person visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mendel::InheritancePattern::*;
    use crate::mendel::SpaceKind;
    use crate::pedigree::{Person, PedigreeDocument, Sex, Union};
    use ndarray::Array1;

    fn trio() -> Pedigree {
        Pedigree::from_document(PedigreeDocument {
            persons: vec![
                Person::new("c", Sex::Female, Phenotype::Unaffected),
                Person::new("f", Sex::Male, Phenotype::Unaffected),
                Person::new("m", Sex::Female, Phenotype::Unaffected),
            ],
            unions: vec![Union::new("u", "m", "f", ["c"])],
        })
        .unwrap()
    }

    fn force_roots(theta: &mut ParameterSet<f64>, state: usize) {
        for r in theta.root.values_mut() {
            *r = Array1::from_shape_fn(r.len(), |i| if i == state { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn single_clean_root() {
        let p = Pedigree::from_document(PedigreeDocument {
            persons: vec![Person::new("r", Sex::Female, Phenotype::Unaffected)],
            unions: vec![],
        })
        .unwrap();
        let theta = ParameterSet::mendelian(AD);
        let s = simulate(&p, &theta, 3).unwrap();
        assert_eq!(s[0], SimulatedPerson { state: 2, phenotype: Phenotype::Unaffected });
    }

    #[test]
    fn affected_parents_have_affected_child_under_ar() {
        let mut theta = ParameterSet::mendelian(AR);
        force_roots(&mut theta, 0);
        for seed in 0..20 {
            let s = simulate(&trio(), &theta, seed).unwrap();
            assert_eq!(s[0], SimulatedPerson { state: 0, phenotype: Phenotype::Affected });
        }
    }

    #[test]
    fn heterozygous_cross_frequencies() {
        let mut theta = ParameterSet::mendelian(AD);
        force_roots(&mut theta, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[simulate_with(&trio(), &theta, &mut rng).unwrap()[0].state] += 1;
        }
        for (c, expected) in counts.iter().zip([0.25, 0.5, 0.25]) {
            assert!((*c as f64 / n as f64 - expected).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let theta = crate::mendel::sample_parameters(&crate::mendel::PriorSet::mendelian(XL, 3.0).unwrap(), 1);
        assert_eq!(simulate(&trio(), &theta, 5).unwrap(), simulate(&trio(), &theta, 5).unwrap());
        assert_eq!(theta.root[&SpaceKind::XMale].len(), 2);
    }

    #[test]
    fn conflicting_roles_cannot_be_simulated() {
        let p = Pedigree::from_document(PedigreeDocument {
            persons: ["a", "b", "c", "d", "e"]
                .iter()
                .map(|id| Person::new(*id, Sex::Unknown, Phenotype::Unaffected))
                .collect(),
            unions: vec![Union::new("u1", "a", "b", ["c"]), Union::new("u2", "d", "a", ["e"])],
        })
        .unwrap();
        let err = simulate(&p, &ParameterSet::mendelian(XL), 0).unwrap_err();
        assert_eq!(err, ParamsError::ConflictingRoles("a".into()));
        assert!(simulate(&p, &ParameterSet::mendelian(AR), 0).is_ok());
    }
}
