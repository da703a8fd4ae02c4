use std::collections::BTreeMap;

use ndarray::{Array, Array1, Array2, Array3, Axis, Dimension};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use serde_json::{json, Value};

use super::priors::{emission_prior_for, root_prior_for, transition_prior_for};
use super::{InheritancePattern, ParamsError, PriorSet, SpaceKind};
use crate::scalar::Real;

/// Sampled model parameters θ for one inheritance pattern.
///
/// Every conditional row (root distribution, transition slice over the child
/// axis, emission row) is a probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet<T> {
    pub pattern: InheritancePattern,
    pub root: BTreeMap<SpaceKind, Array1<T>>,
    /// Keyed by child space; indexed `[mother, father, child]`.
    pub transition: BTreeMap<SpaceKind, Array3<T>>,
    /// Indexed `[state, phenotype]` with phenotype 0 = unaffected, 1 = affected.
    pub emission: BTreeMap<SpaceKind, Array2<T>>,
}

/// Serialized form of one table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub shape: Vec<usize>,
    pub labels: Vec<Vec<&'static str>>,
    pub values: Vec<f64>,
}

pub(crate) fn tables_json<T: Real, D: Dimension>(
    tables: &BTreeMap<SpaceKind, Array<T, D>>,
    labels: impl Fn(SpaceKind) -> Vec<Vec<&'static str>>,
) -> Value {
    let mut out = serde_json::Map::new();
    for (&kind, t) in tables {
        let table = Table {
            shape: t.shape().to_vec(),
            labels: labels(kind),
            values: t.iter().map(|x| x.as_f64()).collect(),
        };
        out.insert(kind.as_str().to_string(), serde_json::to_value(table).expect("table serializes"));
    }
    Value::Object(out)
}

impl<T: Real> ParameterSet<T> {
    pub fn cast<U: Real>(&self) -> ParameterSet<U> {
        fn conv<T: Real, U: Real, D: Dimension>(m: &BTreeMap<SpaceKind, Array<T, D>>) -> BTreeMap<SpaceKind, Array<U, D>> {
            m.iter().map(|(&k, a)| (k, a.mapv(|x| U::of(x.as_f64())))).collect()
        }
        ParameterSet {
            pattern: self.pattern,
            root: conv(&self.root),
            transition: conv(&self.transition),
            emission: conv(&self.emission),
        }
    }

    pub fn root_for(&self, kind: SpaceKind) -> Result<&Array1<T>, ParamsError> {
        self.root.get(&kind).ok_or(ParamsError::MissingTable {
            table: "root",
            space: kind.as_str(),
        })
    }

    pub fn transition_for(&self, kind: SpaceKind) -> Result<&Array3<T>, ParamsError> {
        self.transition.get(&kind).ok_or(ParamsError::MissingTable {
            table: "transition",
            space: kind.as_str(),
        })
    }

    pub fn emission_for(&self, kind: SpaceKind) -> Result<&Array2<T>, ParamsError> {
        self.emission.get(&kind).ok_or(ParamsError::MissingTable {
            table: "emission",
            space: kind.as_str(),
        })
    }

    /// Checks that the tables needed by `pattern` exist with the right shapes.
    pub fn check_shapes(&self) -> Result<(), ParamsError> {
        let (m, f) = SpaceKind::parent_axes(self.pattern);
        for &k in SpaceKind::for_pattern(self.pattern) {
            let shapes: [(&'static str, Vec<usize>, Vec<usize>); 3] = [
                ("root", self.root_for(k)?.shape().to_vec(), vec![k.len()]),
                ("transition", self.transition_for(k)?.shape().to_vec(), vec![m.len(), f.len(), k.len()]),
                ("emission", self.emission_for(k)?.shape().to_vec(), vec![k.len(), 2]),
            ];
            for (table, found, expected) in shapes {
                if found != expected {
                    return Err(ParamsError::ShapeMismatch {
                        table,
                        space: k.as_str(),
                        expected,
                        found,
                    });
                }
            }
        }
        Ok(())
    }

    /// Largest deviation from 1 of any conditional row sum.
    pub fn max_row_error(&self) -> f64 {
        let dev = |s: T| (s.as_f64() - 1.0).abs();
        let roots = self.root.values().map(|r| dev(r.sum()));
        let trans = self
            .transition
            .values()
            .flat_map(|t| t.sum_axis(Axis(2)).into_iter().map(dev).collect::<Vec<_>>());
        let ems = self
            .emission
            .values()
            .flat_map(|e| e.sum_axis(Axis(1)).into_iter().map(dev).collect::<Vec<_>>());
        roots.chain(trans).chain(ems).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let (m, f) = SpaceKind::parent_axes(self.pattern);
        json!({
            "pattern": self.pattern.as_str(),
            "root": tables_json(&self.root, |k| vec![k.labels()]),
            "transition": tables_json(&self.transition, |k| vec![m.labels(), f.labels(), k.labels()]),
            "emission": tables_json(&self.emission, |k| vec![k.labels(), vec!["unaffected", "affected"]]),
        })
    }
}

impl ParameterSet<f64> {
    /// Strict Mendelian parameters: the un-smoothed Punnett tables themselves.
    pub fn mendelian(pattern: InheritancePattern) -> Self {
        let kinds = SpaceKind::for_pattern(pattern);
        Self {
            pattern,
            root: kinds.iter().map(|&k| (k, root_prior_for(k))).collect(),
            transition: kinds.iter().map(|&k| (k, transition_prior_for(pattern, k))).collect(),
            emission: kinds.iter().map(|&k| (k, emission_prior_for(pattern, k))).collect(),
        }
    }

    /// Mean of the Dirichlet priors, `α_i / Σα` per row.
    pub fn prior_mean(priors: &PriorSet) -> Self {
        fn normalize<D: Dimension>(a: &Array<f64, D>) -> Array<f64, D> {
            let mut out = a.clone();
            for mut lane in out.lanes_mut(Axis(a.ndim() - 1)) {
                let total = lane.sum();
                lane.mapv_inplace(|x| x / total);
            }
            out
        }
        Self {
            pattern: priors.pattern,
            root: priors.root.iter().map(|(&k, a)| (k, a / a.sum())).collect(),
            transition: priors.transition.iter().map(|(&k, a)| (k, normalize(a))).collect(),
            emission: priors.emission.iter().map(|(&k, a)| (k, normalize(a))).collect(),
        }
    }
}

/// Draws a probability vector from `Dirichlet(alpha)` by normalizing
/// independent `Gamma(alpha_i, 1)` variates.
pub(crate) fn dirichlet_row<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    if alpha.len() == 1 {
        return vec![1.0];
    }
    loop {
        let draws: Vec<f64> = alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("concentrations are positive").sample(rng))
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|g| g / total).collect();
        }
    }
}

fn sample_rows<R: Rng + ?Sized, D: Dimension>(alpha: &Array<f64, D>, rng: &mut R) -> Array<f64, D> {
    let mut out = alpha.clone();
    let last = Axis(alpha.ndim() - 1);
    for mut lane in out.lanes_mut(last) {
        let a: Vec<f64> = lane.to_vec();
        for (x, v) in lane.iter_mut().zip(dirichlet_row(&a, rng)) {
            *x = v;
        }
    }
    out
}

/// Draws θ from the priors using `rng`.
///
/// Rows are drawn in a fixed order: root vectors, then transition slices
/// (mother-major, father-minor), then emission rows, each group in
/// state-space order.
pub fn sample_parameters_with<R: Rng + ?Sized>(priors: &PriorSet, rng: &mut R) -> ParameterSet<f64> {
    let root = priors.root.iter().map(|(&k, a)| (k, sample_rows(a, rng))).collect();
    let transition = priors.transition.iter().map(|(&k, a)| (k, sample_rows(a, rng))).collect();
    let emission = priors.emission.iter().map(|(&k, a)| (k, sample_rows(a, rng))).collect();
    ParameterSet {
        pattern: priors.pattern,
        root,
        transition,
        emission,
    }
}

pub fn sample_parameters(priors: &PriorSet, seed: u64) -> ParameterSet<f64> {
    sample_parameters_with(priors, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mendel::InheritancePattern::*;

    #[test]
    fn singleton_row_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(dirichlet_row(&[3.5], &mut rng), vec![1.0]);
    }

    #[test]
    fn same_seed_same_parameters() {
        let priors = PriorSet::mendelian(XL, 1e6).unwrap();
        assert_eq!(sample_parameters(&priors, 42), sample_parameters(&priors, 42));
        assert_ne!(sample_parameters(&priors, 42), sample_parameters(&priors, 43));
    }

    #[test]
    fn sampled_rows_are_distributions() {
        for p in InheritancePattern::ALL {
            for strength in [1.0, 1e6] {
                let theta = sample_parameters(&PriorSet::mendelian(p, strength).unwrap(), 9);
                theta.check_shapes().unwrap();
                assert!(theta.max_row_error() <= 1e-12);
                for t in theta.transition.values() {
                    assert!(t.iter().all(|&x| (0.0..=1.0).contains(&x)));
                }
            }
        }
    }

    #[test]
    fn symmetric_dirichlet_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let row = dirichlet_row(&[500001.0, 500001.0], &mut rng);
            mean[0] += row[0] / n as f64;
            mean[1] += row[1] / n as f64;
        }
        assert!((mean[0] - 0.5).abs() < 0.01 && (mean[1] - 0.5).abs() < 0.01);
    }

    #[test]
    fn strong_prior_mean_approaches_punnett() {
        let priors = PriorSet::mendelian(AR, 1e9).unwrap();
        let base = ParameterSet::mendelian(AR);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100;
        let mut mean = Array3::<f64>::zeros((3, 3, 3));
        for _ in 0..draws {
            let theta = sample_parameters_with(&priors, &mut rng);
            mean = mean + &theta.transition[&SpaceKind::Autosomal] / draws as f64;
        }
        let base_t = &base.transition[&SpaceKind::Autosomal];
        let gap = (&mean - base_t).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(gap < 1e-3, "gap {gap}");
    }

    #[test]
    fn cast_and_shape_check() {
        let theta = ParameterSet::mendelian(XL).cast::<f32>();
        theta.check_shapes().unwrap();
        let mut broken = ParameterSet::mendelian(AD);
        broken.emission.clear();
        assert!(matches!(broken.check_shapes(), Err(ParamsError::MissingTable { .. })));
    }

    #[test]
    fn json_has_shapes_and_labels() {
        let v = ParameterSet::mendelian(XL).to_json();
        assert_eq!(v["transition"]["x_male"]["shape"], json!([3, 2, 2]));
        assert_eq!(v["emission"]["x_female"]["labels"][1], json!(["unaffected", "affected"]));
        let p = PriorSet::mendelian(AD, 4.0).unwrap().to_json();
        assert_eq!(p["transition"]["autosomal"]["values"][12], json!(2.0));
    }
}
