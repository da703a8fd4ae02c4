//! Pedigree fixtures and random instance generators shared by the
//! integration tests.
#![allow(dead_code)]

pub mod printed;

use pedigree_core::evidence::{CARRIER, NONCARRIER};
use pedigree_core::mendel::{person_state_spaces, sample_parameters_with, InheritancePattern, ParameterSet, PriorSet};
use pedigree_core::{EvidenceSet, Pedigree, PedigreeDocument, Person, Phenotype, Sex, Union};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ped(persons: Vec<Person>, unions: Vec<Union>) -> Pedigree {
    Pedigree::from_document(PedigreeDocument { persons, unions }).expect("fixture is valid")
}

pub fn trio(mother: Phenotype, father: Phenotype, child: Phenotype, child_sex: Sex) -> Pedigree {
    ped(
        vec![
            Person::new("child", child_sex, child),
            Person::new("father", Sex::Male, father),
            Person::new("mother", Sex::Female, mother),
        ],
        vec![Union::new("u", "mother", "father", ["child"])],
    )
}

/// Grandparents g1 x g2 have c1 and c2; c1 x s1 -> k1; s2 x c2 -> k2;
/// the cousins k1 x k2 -> z close the loop.
pub fn cousin_loop(affected: &[&str]) -> Pedigree {
    let sexes = [
        ("c1", Sex::Female),
        ("c2", Sex::Male),
        ("g1", Sex::Female),
        ("g2", Sex::Male),
        ("k1", Sex::Female),
        ("k2", Sex::Male),
        ("s1", Sex::Male),
        ("s2", Sex::Female),
        ("z", Sex::Male),
    ];
    ped(
        sexes
            .iter()
            .map(|&(id, sex)| {
                let ph = if affected.contains(&id) { Phenotype::Affected } else { Phenotype::Unaffected };
                Person::new(id, sex, ph)
            })
            .collect(),
        vec![
            Union::new("u0", "g1", "g2", ["c1", "c2"]),
            Union::new("u1", "c1", "s1", ["k1"]),
            Union::new("u2", "s2", "c2", ["k2"]),
            Union::new("u3", "k1", "k2", ["z"]),
        ],
    )
}

fn random_phenotype(rng: &mut ChaCha8Rng) -> Phenotype {
    match rng.random_range(0..10) {
        0..=2 => Phenotype::Affected,
        3..=7 => Phenotype::Unaffected,
        _ => Phenotype::Unobserved,
    }
}

fn random_sex(rng: &mut ChaCha8Rng) -> Sex {
    match rng.random_range(0..10) {
        0..=4 => Sex::Female,
        5..=8 => Sex::Male,
        _ => Sex::Unknown,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    None,
    Mother,
    Father,
}

/// A random connected pedigree with `size` persons. When `looped` is set the
/// generator keeps trying until some union joins two persons who were
/// already related, which makes the pedigree multiply connected.
pub fn random_pedigree(rng: &mut ChaCha8Rng, size: usize, looped: bool) -> Pedigree {
    assert!(size >= 3 && !(looped && size < 4), "a loop needs at least four persons");
    loop {
        let mut sexes: Vec<Sex> = vec![Sex::Female, Sex::Male];
        if rng.random_bool(0.2) {
            sexes[0] = Sex::Unknown;
        }
        let mut roles = vec![Role::Mother, Role::Father];
        let mut unions: Vec<(usize, usize, Vec<usize>)> = vec![(0, 1, Vec::new())];
        let mut closed_loop = false;
        // The first union gets at least one child.
        let mut current = 0;
        while sexes.len() < size {
            let remaining = size - sexes.len();
            let child = sexes.len();
            sexes.push(random_sex(rng));
            roles.push(Role::None);
            unions[current].2.push(child);
            if remaining == 1 {
                break;
            }
            // Either add another child to this union or start a new one.
            if rng.random_bool(0.35) {
                continue;
            }
            let can_mother = |i: usize, sexes: &[Sex], roles: &[Role]| {
                roles[i] != Role::Father && sexes[i] != Sex::Male
            };
            let can_father = |i: usize, sexes: &[Sex], roles: &[Role]| {
                roles[i] != Role::Mother && sexes[i] != Sex::Female
            };
            let existing = sexes.len();
            let mothers: Vec<usize> = (0..existing).filter(|&i| can_mother(i, &sexes, &roles)).collect();
            let fathers: Vec<usize> = (0..existing).filter(|&i| can_father(i, &sexes, &roles)).collect();
            let both_existing = remaining < 3 || rng.random_bool(if looped { 0.6 } else { 0.15 });
            let pair = if both_existing {
                let pairs: Vec<(usize, usize)> = mothers
                    .iter()
                    .flat_map(|&m| fathers.iter().map(move |&f| (m, f)))
                    .filter(|(m, f)| m != f)
                    .collect();
                pairs.choose(rng).copied()
            } else {
                None
            };
            let (m, f) = match pair {
                Some(pair) => {
                    closed_loop = true;
                    pair
                }
                None => {
                    // One existing person marries a newcomer founder.
                    let newcomer = sexes.len();
                    let anyone: Vec<usize> = (0..existing)
                        .filter(|&i| can_mother(i, &sexes, &roles) || can_father(i, &sexes, &roles))
                        .collect();
                    let &old = anyone.choose(rng).expect("somebody can parent");
                    let as_mother = if can_mother(old, &sexes, &roles) && can_father(old, &sexes, &roles) {
                        rng.random_bool(0.5)
                    } else {
                        can_mother(old, &sexes, &roles)
                    };
                    if as_mother {
                        sexes.push(if rng.random_bool(0.2) { Sex::Unknown } else { Sex::Male });
                        (old, newcomer)
                    } else {
                        sexes.push(if rng.random_bool(0.2) { Sex::Unknown } else { Sex::Female });
                        (newcomer, old)
                    }
                }
            };
            while roles.len() < sexes.len() {
                roles.push(Role::None);
            }
            roles[m] = Role::Mother;
            roles[f] = Role::Father;
            unions.push((m, f, Vec::new()));
            current = unions.len() - 1;
            if sexes.len() >= size {
                break;
            }
        }
        // A union may have been opened without children; give it one if room
        // allows, otherwise try again.
        if sexes.len() > size || unions.iter().any(|u| u.2.is_empty()) || looped != closed_loop {
            continue;
        }
        let persons = (0..sexes.len())
            .map(|i| Person::new(format!("p{i}"), sexes[i], random_phenotype(rng)))
            .collect();
        let unions = unions
            .iter()
            .enumerate()
            .map(|(k, (m, f, ch))| {
                Union::new(format!("u{k}"), format!("p{m}"), format!("p{f}"), ch.iter().map(|c| format!("p{c}")))
            })
            .collect();
        if let Ok(p) = Pedigree::from_document(PedigreeDocument { persons, unions }) {
            return p;
        }
    }
}

/// Random restrictions on about a third of the persons, using labels and
/// the carrier aliases.
pub fn random_evidence(rng: &mut ChaCha8Rng, p: &Pedigree, pattern: InheritancePattern) -> EvidenceSet {
    let spaces = person_state_spaces(p, pattern).expect("roles are consistent");
    let mut ev = EvidenceSet::new();
    for (n, person) in p.persons().iter().enumerate() {
        if !rng.random_bool(0.3) {
            continue;
        }
        let labels = &spaces[n].labels;
        let mut chosen: Vec<String> = labels
            .iter()
            .filter(|_| rng.random_bool(0.5))
            .map(|l| l.to_string())
            .collect();
        if chosen.is_empty() {
            chosen.push(
                [CARRIER, NONCARRIER]
                    .choose(rng)
                    .expect("non-empty")
                    .to_string(),
            );
        }
        ev.insert(person.id.clone(), chosen);
    }
    ev
}

/// θ drawn with a random, mostly weak prior so that no entry is degenerate.
pub fn random_theta(rng: &mut ChaCha8Rng, pattern: InheritancePattern) -> ParameterSet<f64> {
    let strength = *[0.5, 2.0, 20.0, 1e3].choose(rng).expect("non-empty");
    let priors = PriorSet::mendelian(pattern, strength).expect("positive strength");
    sample_parameters_with(&priors, rng)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Exact `E_θ[P(Y, evidence | θ)]` under the Dirichlet priors, by
/// enumerating latent assignments and using Dirichlet moments:
/// `E[Π_i θ_i^{n_i}] = Π_i α_i^(n_i) / S^(N)` per row, with `x^(k)` the
/// rising factorial. Returned as a natural log.
pub fn exact_expected_log_marginal(
    p: &Pedigree,
    priors: &PriorSet,
    ev: &EvidenceSet,
    opts: &pedigree_core::InferenceOptions,
) -> f64 {
    use std::collections::BTreeMap;

    let spaces = person_state_spaces(p, priors.pattern).expect("roles are consistent");
    let mut masks = ev.resolve(p, &spaces).expect("evidence resolves");
    if opts.auto_carrier_evidence {
        masks = masks.with_affected_carriers(p, &spaces);
    }
    let sizes: Vec<usize> = spaces.iter().map(|s| s.len()).collect();
    let rising = |a: f64, k: usize| (0..k).map(|j| (a + j as f64).ln()).sum::<f64>();
    let mut x = vec![0usize; p.len()];
    let mut terms = Vec::new();
    'outer: loop {
        if (0..p.len()).all(|n| masks.allows(n, x[n])) {
            // Row key: (table, space, row index) -> counts per column.
            let mut counts: BTreeMap<(u8, pedigree_core::mendel::SpaceKind, Vec<usize>), Vec<usize>> = BTreeMap::new();
            for (n, person) in p.persons().iter().enumerate() {
                let k = spaces[n].kind;
                let (table, row, width) = match p.parents(n) {
                    None => (0u8, vec![], sizes[n]),
                    Some((m, f)) => (1u8, vec![x[m], x[f]], sizes[n]),
                };
                counts.entry((table, k, row)).or_insert_with(|| vec![0; width])[x[n]] += 1;
                let col = match person.phenotype {
                    Phenotype::Unaffected => 0,
                    Phenotype::Affected => 1,
                    Phenotype::Unobserved => continue,
                };
                counts.entry((2u8, k, vec![x[n]])).or_insert_with(|| vec![0; 2])[col] += 1;
            }
            let mut log_e = 0.0;
            for ((table, k, row), c) in &counts {
                let alpha: Vec<f64> = match table {
                    0 => priors.root[k].to_vec(),
                    1 => priors.transition[k].slice(ndarray::s![row[0], row[1], ..]).to_vec(),
                    _ => priors.emission[k].row(row[0]).to_vec(),
                };
                if alpha.len() == 1 {
                    continue;
                }
                let s: f64 = alpha.iter().sum();
                let total: usize = c.iter().sum();
                log_e += alpha.iter().zip(c).map(|(&a, &ci)| rising(a, ci)).sum::<f64>() - rising(s, total);
            }
            terms.push(log_e);
        }
        let mut k = x.len();
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            x[k] += 1;
            if x[k] < sizes[k] {
                break;
            }
            x[k] = 0;
        }
    }
    terms.sort_by(f64::total_cmp);
    pedigree_core::scalar::log_sum_exp(&terms)
}

/// Engine against enumeration: marginal, audit, posteriors and parent tables
/// must agree to 1e-10.
pub fn compare_with_oracle(p: &Pedigree, theta: &ParameterSet<f64>, ev: &EvidenceSet, opts: &pedigree_core::InferenceOptions) -> Result<(), String> {
    let inf = pedigree_core::inference::smooth(p, theta, ev, opts).map_err(|e| e.to_string())?;
    let oracle = pedigree_core::oracle::oracle_report(p, theta, ev, opts).map_err(|e| e.to_string())?;
    if oracle.log_marginal == f64::NEG_INFINITY || inf.log_marginal == f64::NEG_INFINITY {
        return if oracle.log_marginal == inf.log_marginal {
            Ok(())
        } else {
            Err(format!("marginal {} vs oracle {}", inf.log_marginal, oracle.log_marginal))
        };
    }
    if (inf.log_marginal - oracle.log_marginal).abs() > 1e-10 {
        return Err(format!("marginal {} vs oracle {}", inf.log_marginal, oracle.log_marginal));
    }
    if !inf.audit.passes() {
        return Err(format!("audit spread {}", inf.audit.anchor_spread));
    }
    for (n, person) in p.persons().iter().enumerate() {
        let expected = &oracle.posteriors[n];
        for (a, b) in inf.posteriors[n].iter().zip(expected) {
            if (a - b).abs() > 1e-10 {
                return Err(format!("posterior of {}: {:?} vs {:?}", person.id, inf.posteriors[n], expected));
            }
        }
        if let (Some(fam), Some(expected)) = (&inf.families[n], &oracle.families[n]) {
            for (a, b) in fam.joint.iter().zip(&expected.joint) {
                if (a - b).abs() > 1e-10 {
                    return Err(format!("family joint of {}", person.id));
                }
            }
            for (a, b) in fam.conditional.iter().zip(&expected.conditional) {
                if (a - b).abs() > 1e-10 {
                    return Err(format!("conditional of {}: {} vs {}", person.id, a, b));
                }
            }
        }
    }
    Ok(())
}
