//! Brute-force ground truth: enumerate every joint latent assignment.
//!
//! Weights are formed from θ directly (root prior, transition, emission and
//! the evidence indicator), in log space, and reduced with compensated
//! summation relative to the largest weight. Only meant for small pedigrees.

use ndarray::{Array3, Axis};
use thiserror::Error;

use crate::evidence::{EvidenceError, EvidenceSet, StateMasks};
use crate::inference::InferenceOptions;
use crate::mendel::{person_state_spaces, ParameterSet, ParamsError, SpaceKind};
use crate::pedigree::{Pedigree, Phenotype};
use crate::scalar::NeumaierSum;

/// Largest joint state count the oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} joint states exceed the oracle limit")]
    TooLarge(u128),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("unknown person {0}")]
    UnknownPerson(String),
    #[error("{0} has no parents")]
    Root(String),
    #[error("evidence is impossible")]
    Impossible,
}

struct Joint<'a> {
    p: &'a Pedigree,
    theta: &'a ParameterSet<f64>,
    kinds: Vec<SpaceKind>,
    sizes: Vec<usize>,
    masks: StateMasks,
}

impl<'a> Joint<'a> {
    fn new(
        p: &'a Pedigree,
        theta: &'a ParameterSet<f64>,
        evidence: &EvidenceSet,
        opts: &InferenceOptions,
    ) -> Result<Self, OracleError> {
        theta.check_shapes()?;
        let spaces = person_state_spaces(p, theta.pattern)?;
        let mut masks = evidence.resolve(p, &spaces)?;
        if opts.auto_carrier_evidence {
            masks = masks.with_affected_carriers(p, &spaces);
        }
        let sizes: Vec<usize> = spaces.iter().map(|s| s.len()).collect();
        let total = sizes.iter().map(|&s| s as u128).product::<u128>();
        if total > ORACLE_LIMIT {
            return Err(OracleError::TooLarge(total));
        }
        Ok(Self {
            p,
            theta,
            kinds: spaces.iter().map(|s| s.kind).collect(),
            sizes,
            masks,
        })
    }

    /// `ln P(X = x, Y, evidence | θ)`.
    fn log_weight(&self, x: &[usize]) -> f64 {
        let mut w = 0.0;
        for (n, person) in self.p.persons().iter().enumerate() {
            if !self.masks.allows(n, x[n]) {
                return f64::NEG_INFINITY;
            }
            let kind = self.kinds[n];
            let prior = match self.p.parents(n) {
                None => self.theta.root[&kind][x[n]],
                Some((m, f)) => self.theta.transition[&kind][[x[m], x[f], x[n]]],
            };
            let emission = match person.phenotype {
                Phenotype::Unaffected => self.theta.emission[&kind][[x[n], 0]],
                Phenotype::Affected => self.theta.emission[&kind][[x[n], 1]],
                Phenotype::Unobserved => 1.0,
            };
            w += prior.ln() + emission.ln();
        }
        w
    }

    fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut x = vec![0usize; self.sizes.len()];
        loop {
            f(&x, self.log_weight(&x));
            let mut k = x.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                x[k] += 1;
                if x[k] < self.sizes[k] {
                    break;
                }
                x[k] = 0;
            }
        }
    }

    /// One enumeration (two passes) collecting every statistic at once.
    fn tally(&self) -> Tally {
        let mut max = f64::NEG_INFINITY;
        self.for_each(|_, w| max = max.max(w));
        let n = self.sizes.len();
        let family_dims: Vec<Option<(usize, usize, usize)>> = (0..n)
            .map(|c| self.p.parents(c).map(|(m, f)| (m, f, self.sizes[m] * self.sizes[f] * self.sizes[c])))
            .collect();
        let mut total = NeumaierSum::default();
        let mut nodes: Vec<Vec<NeumaierSum<f64>>> = self.sizes.iter().map(|&s| vec![NeumaierSum::default(); s]).collect();
        let mut families: Vec<Option<Vec<NeumaierSum<f64>>>> = family_dims
            .iter()
            .map(|d| d.map(|(_, _, len)| vec![NeumaierSum::default(); len]))
            .collect();
        if max > f64::NEG_INFINITY {
            self.for_each(|x, w| {
                if w == f64::NEG_INFINITY {
                    return;
                }
                let v = (w - max).exp();
                total.add(v);
                for c in 0..n {
                    nodes[c][x[c]].add(v);
                    if let (Some((m, f, _)), Some(fam)) = (family_dims[c], families[c].as_mut()) {
                        fam[(x[m] * self.sizes[f] + x[f]) * self.sizes[c] + x[c]].add(v);
                    }
                }
            });
        }
        let finish = |v: &Vec<NeumaierSum<f64>>| v.iter().map(NeumaierSum::total).collect::<Vec<f64>>();
        Tally {
            offset: max,
            total: total.total(),
            nodes: nodes.iter().map(finish).collect(),
            families: families.iter().map(|f| f.as_ref().map(finish)).collect(),
        }
    }
}

struct Tally {
    offset: f64,
    total: f64,
    nodes: Vec<Vec<f64>>,
    families: Vec<Option<Vec<f64>>>,
}

/// Posterior table over a person and their parents, by full enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleFamily {
    /// `P(mother, father, child | Y)`.
    pub joint: Array3<f64>,
    /// `P(child | mother, father, Y)`, zero where the parents are impossible.
    pub conditional: Array3<f64>,
}

/// Every oracle quantity for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    /// `ln P(Y, evidence | θ)`.
    pub log_marginal: f64,
    /// Per person `P(n_x | Y, evidence)`; empty when the evidence is impossible.
    pub posteriors: Vec<Vec<f64>>,
    /// Per person, `None` for roots; empty when the evidence is impossible.
    pub families: Vec<Option<OracleFamily>>,
}

/// Enumerates the joint once and reports the marginal, every posterior and
/// every parent table.
pub fn oracle_report(
    p: &Pedigree,
    theta: &ParameterSet<f64>,
    evidence: &EvidenceSet,
    opts: &InferenceOptions,
) -> Result<OracleReport, OracleError> {
    let joint = Joint::new(p, theta, evidence, opts)?;
    let t = joint.tally();
    if t.total <= 0.0 {
        return Ok(OracleReport {
            log_marginal: f64::NEG_INFINITY,
            posteriors: Vec::new(),
            families: Vec::new(),
        });
    }
    let posteriors = t.nodes.iter().map(|v| v.iter().map(|x| x / t.total).collect()).collect();
    let families = (0..p.len())
        .map(|c| {
            let (m, f) = p.parents(c)?;
            let sums = t.families[c].as_ref().expect("non-root");
            let dims = (joint.sizes[m], joint.sizes[f], joint.sizes[c]);
            let table = Array3::from_shape_vec(dims, sums.iter().map(|s| s / t.total).collect()).expect("shape matches");
            let parents = table.sum_axis(Axis(2));
            let mut conditional = table.clone();
            for ((i, j, _), v) in conditional.indexed_iter_mut() {
                let pm = parents[[i, j]];
                *v = if pm > 0.0 { *v / pm } else { 0.0 };
            }
            Some(OracleFamily {
                joint: table,
                conditional,
            })
        })
        .collect();
    Ok(OracleReport {
        log_marginal: t.offset + t.total.ln(),
        posteriors,
        families,
    })
}

/// `ln P(Y, evidence | θ)` by full enumeration.
pub fn oracle_marginal(
    p: &Pedigree,
    theta: &ParameterSet<f64>,
    evidence: &EvidenceSet,
    opts: &InferenceOptions,
) -> Result<f64, OracleError> {
    Ok(oracle_report(p, theta, evidence, opts)?.log_marginal)
}

/// `P(n_x | Y, evidence)` by full enumeration.
pub fn oracle_posterior(
    p: &Pedigree,
    theta: &ParameterSet<f64>,
    evidence: &EvidenceSet,
    id: &str,
    opts: &InferenceOptions,
) -> Result<Vec<f64>, OracleError> {
    let n = p.index_of(id).ok_or_else(|| OracleError::UnknownPerson(id.to_string()))?;
    let mut report = oracle_report(p, theta, evidence, opts)?;
    if report.log_marginal == f64::NEG_INFINITY {
        return Err(OracleError::Impossible);
    }
    Ok(report.posteriors.swap_remove(n))
}

pub fn oracle_parent_conditional(
    p: &Pedigree,
    theta: &ParameterSet<f64>,
    evidence: &EvidenceSet,
    id: &str,
    opts: &InferenceOptions,
) -> Result<OracleFamily, OracleError> {
    let n = p.index_of(id).ok_or_else(|| OracleError::UnknownPerson(id.to_string()))?;
    if p.is_root(n) {
        return Err(OracleError::Root(id.to_string()));
    }
    let mut report = oracle_report(p, theta, evidence, opts)?;
    if report.log_marginal == f64::NEG_INFINITY {
        return Err(OracleError::Impossible);
    }
    Ok(report.families.swap_remove(n).expect("non-root"))
}
