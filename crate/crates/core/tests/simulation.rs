//! Forward simulation reproduces Punnett ratios.

mod common;

use common::{rng, trio};
use ndarray::array;
use pedigree_core::mendel::{simulate, simulate_with, ParameterSet, SpaceKind};
use pedigree_core::{InheritancePattern, Phenotype, Sex};

/// Counts child states over `n` simulations and checks each frequency is
/// within four standard errors of `expected`.
fn check_child_frequencies(theta: &ParameterSet<f64>, child_sex: Sex, expected: &[f64]) {
    let p = trio(Phenotype::Unobserved, Phenotype::Unobserved, Phenotype::Unobserved, child_sex);
    let child = p.index_of("child").unwrap();
    let n = 20_000;
    let mut r = rng(8);
    let mut counts = vec![0usize; expected.len()];
    for _ in 0..n {
        counts[simulate_with(&p, theta, &mut r).unwrap()[child].state] += 1;
    }
    for (x, (&c, &q)) in counts.iter().zip(expected).enumerate() {
        let freq = c as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((freq - q).abs() <= 4.0 * se, "state {x}: {freq} vs {q}");
    }
}

#[test]
fn heterozygous_parents_give_one_two_one() {
    let mut theta = ParameterSet::mendelian(InheritancePattern::AR);
    theta.root.insert(SpaceKind::Autosomal, array![0.0, 1.0, 0.0]);
    check_child_frequencies(&theta, Sex::Female, &[0.25, 0.5, 0.25]);
}

#[test]
fn carrier_mothers_pass_the_mutant_x_to_half_their_sons() {
    let mut theta = ParameterSet::mendelian(InheritancePattern::XL);
    theta.root.insert(SpaceKind::XFemale, array![0.0, 1.0, 0.0]);
    theta.root.insert(SpaceKind::XMale, array![0.0, 1.0]);
    check_child_frequencies(&theta, Sex::Male, &[0.5, 0.5]);
    // Daughters of a normal father are never homozygous mutant.
    check_child_frequencies(&theta, Sex::Female, &[0.0, 0.5, 0.5]);
}

#[test]
fn simulation_is_seeded() {
    let p = common::cousin_loop(&[]);
    let theta = common::random_theta(&mut rng(1), InheritancePattern::XL);
    assert_eq!(simulate(&p, &theta, 5).unwrap(), simulate(&p, &theta, 5).unwrap());
    let differs = (6..20).any(|s| simulate(&p, &theta, s).unwrap() != simulate(&p, &theta, 5).unwrap());
    assert!(differs);
}
