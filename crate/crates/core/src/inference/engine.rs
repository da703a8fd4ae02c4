use ndarray::{Array1, Array2, Array3, Axis};
use rayon::prelude::*;
use serde::Serialize;

use super::graph::CutGraph;
use super::messages::{Scaled, Sweep};
use super::model::MaskedModel;
use super::{InferenceError, InferenceOptions};
use crate::evidence::EvidenceSet;
use crate::feedback::{find_feedback_set, FeedbackSet};
use crate::mendel::ParameterSet;
use crate::pedigree::Pedigree;
use crate::scalar::{log_sum_exp, LogSum, Real};

/// Largest relative disagreement the consistency audit accepts.
pub const AUDIT_TOLERANCE: f64 = 1e-10;

/// Relative difference of two probabilities given as logs.
fn relative_gap<T: Real>(a: T, b: T) -> f64 {
    let (a, b) = (a.as_f64(), b.as_f64());
    if a == b {
        0.0
    } else if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        (a - b).exp_m1().abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Audit {
    /// Maximum relative disagreement among all recomputations of P(Y).
    pub anchor_spread: f64,
    /// Feedback set members, by id.
    pub fvs: Vec<String>,
    /// Number of feedback assignments summed over.
    pub assignments: usize,
    /// Components of the pedigree once the feedback set is removed.
    pub components: usize,
}

impl Audit {
    pub fn passes(&self) -> bool {
        self.anchor_spread <= AUDIT_TOLERANCE
    }
}

/// Posterior distribution over a child's and its parents' states.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentConditional<T> {
    pub person: String,
    pub mother: String,
    pub father: String,
    /// `P(mother, father, child | Y)`, indexed `[mother, father, child]`.
    pub joint: Array3<T>,
    /// `ln P(Y)` recovered from this table; `joint · exp(log_evidence)` is
    /// `P(mother, father, child, Y)`.
    pub log_evidence: T,
    /// `P(mother, father | Y)`.
    pub parent_marginal: Array2<T>,
    /// `P(child | mother, father, Y)`; slices whose parent marginal is zero
    /// are left at zero.
    pub conditional: Array3<T>,
}

/// Everything one exact inference pass produces.
#[derive(Clone, Debug)]
pub struct Inference<T> {
    /// `ln P(Y, evidence)`; `-inf` when the evidence is impossible.
    pub log_marginal: T,
    /// Per person `P(n_x | Y, evidence)`; empty when the evidence is impossible.
    pub posteriors: Vec<Array1<T>>,
    /// Per person, `None` for roots; empty when the evidence is impossible.
    pub families: Vec<Option<ParentConditional<T>>>,
    /// Per person, the labels of their state space.
    pub labels: Vec<Vec<&'static str>>,
    pub audit: Audit,
}

impl<T: Real> Inference<T> {
    pub fn is_possible(&self) -> bool {
        self.log_marginal > T::neg_infinity()
    }
}

struct Outcome<T> {
    log_total: T,
    /// Per person: `P(n_x, F = f, Y)` as scaled values.
    nodes: Vec<Scaled<T>>,
    /// Per person: `P(parents, n_x, F = f, Y)`, empty for roots.
    families: Vec<Option<Scaled<T>>>,
    spread: f64,
}

/// Exact inference for one pedigree under fixed, evidence-masked parameters.
#[derive(Clone, Debug)]
pub struct Engine<'p, T> {
    p: &'p Pedigree,
    model: MaskedModel<T>,
    fvs: FeedbackSet,
    graph: CutGraph,
}

impl<'p, T: Real> Engine<'p, T> {
    pub fn new(
        p: &'p Pedigree,
        theta: &ParameterSet<T>,
        evidence: &EvidenceSet,
        opts: &InferenceOptions,
    ) -> Result<Self, InferenceError> {
        let model = MaskedModel::build(p, theta, evidence, opts)?;
        Ok(Self::from_model(p, model, find_feedback_set(p)))
    }

    /// Builds an engine around an already masked model and a feedback set
    /// (which may be reused across parameter draws).
    pub fn from_model(p: &'p Pedigree, model: MaskedModel<T>, fvs: FeedbackSet) -> Self {
        let graph = CutGraph::new(p, &fvs);
        Self { p, model, fvs, graph }
    }

    pub fn feedback_set(&self) -> &FeedbackSet {
        &self.fvs
    }

    pub fn model(&self) -> &MaskedModel<T> {
        &self.model
    }

    /// Every joint state of the feedback set that its evidence allows, as a
    /// per-person clamp.
    fn assignments(&self) -> Vec<Vec<Option<usize>>> {
        let choices: Vec<Vec<usize>> = self
            .fvs
            .members
            .iter()
            .map(|&n| (0..self.model.states(n)).filter(|&s| self.model.masks.allows(n, s)).collect())
            .collect();
        if choices.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut digits = vec![0usize; choices.len()];
        loop {
            let mut clamp = vec![None; self.p.len()];
            for (k, &n) in self.fvs.members.iter().enumerate() {
                clamp[n] = Some(choices[k][digits[k]]);
            }
            out.push(clamp);
            let mut k = digits.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < choices[k].len() {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    /// All u and v messages for one joint state of the feedback set, given
    /// in the order of `feedback_set().members`.
    pub fn compute_messages(&self, assignment: &[usize]) -> MessageCache<T> {
        assert_eq!(assignment.len(), self.fvs.len(), "one state per feedback member");
        let mut clamp = vec![None; self.p.len()];
        for (&n, &s) in self.fvs.members.iter().zip(assignment) {
            clamp[n] = Some(s);
        }
        let mut sweep = Sweep::new(&self.graph, &self.model, &clamp);
        sweep.complete();
        let (u, v) = sweep.into_parts();
        MessageCache {
            graph: self.graph.clone(),
            u,
            v,
        }
    }

    fn component_totals(&self, sweep: &mut Sweep<'_, T>) -> Vec<T> {
        self.graph
            .anchors
            .iter()
            .map(|&a| sweep.node_joint(a).ln_sum())
            .collect()
    }

    /// `ln P(Y, evidence)`.
    pub fn log_marginal(&self) -> T {
        let terms: Vec<T> = self
            .assignments()
            .par_iter()
            .map(|clamp| {
                let mut sweep = Sweep::new(&self.graph, &self.model, clamp);
                self.component_totals(&mut sweep).into_iter().fold(T::zero(), |a, b| a + b)
            })
            .collect();
        let mut acc = LogSum::new();
        for t in terms {
            acc.push_log(t);
        }
        acc.ln()
    }

    #[allow(clippy::needless_range_loop)]
    fn evaluate(&self, clamp: &[Option<usize>]) -> Outcome<T> {
        let g = &self.graph;
        let mut sweep = Sweep::new(g, &self.model, clamp);
        let z = self.component_totals(&mut sweep);
        let log_total = z.iter().fold(T::zero(), |a, &b| a + b);
        if log_total == T::neg_infinity() {
            return Outcome {
                log_total,
                nodes: Vec::new(),
                families: Vec::new(),
                spread: 0.0,
            };
        }
        let elsewhere = |c: usize| log_total - z[c];
        let mut spread = 0.0f64;

        let mut nodes = Vec::with_capacity(self.p.len());
        let mut families = Vec::with_capacity(self.p.len());
        for n in 0..self.p.len() {
            let home = g.home[n];
            let c = g.component[home];
            let joint = match clamp[n] {
                Some(s) => {
                    let mut values = vec![T::zero(); self.model.states(n)];
                    values[s] = T::one();
                    Scaled::new(values, log_total)
                }
                None => {
                    let j = sweep.node_joint(home);
                    Scaled::new(j.values, j.log_scale + elsewhere(c))
                }
            };
            nodes.push(joint);
            families.push(g.nodes[home].up.map(|_| {
                let j = sweep.family_joint(home);
                spread = spread.max(relative_gap(j.ln_sum(), z[c]));
                Scaled::new(j.values, j.log_scale + elsewhere(c))
            }));
        }
        for i in 0..g.nodes.len() {
            spread = spread.max(relative_gap(sweep.node_joint(i).ln_sum(), z[g.component[i]]));
        }
        for e in 0..g.unions.len() {
            let w = sweep.parent_weights(e, None);
            spread = spread.max(relative_gap(w.ln_sum(), z[g.union_component(e)]));
        }
        Outcome {
            log_total,
            nodes,
            families,
            spread,
        }
    }

    /// Marginal likelihood, every posterior and parent table, and the audit.
    pub fn run(&self) -> Inference<T> {
        let assignments = self.assignments();
        let outcomes: Vec<Outcome<T>> = assignments.par_iter().map(|c| self.evaluate(c)).collect();
        let mut audit = Audit {
            anchor_spread: outcomes.iter().map(|o| o.spread).fold(0.0, f64::max),
            fvs: self.fvs.ids(self.p),
            assignments: assignments.len(),
            components: self.graph.components(),
        };
        let mut total = LogSum::new();
        for o in &outcomes {
            total.push_log(o.log_total);
        }
        let log_marginal = total.ln();
        let labels = self.model.spaces.iter().map(|s| s.labels.clone()).collect();
        if log_marginal == T::neg_infinity() {
            return Inference {
                log_marginal,
                posteriors: Vec::new(),
                families: Vec::new(),
                labels,
                audit,
            };
        }
        let live: Vec<&Outcome<T>> = outcomes.iter().filter(|o| o.log_total > T::neg_infinity()).collect();

        let accumulate = |pick: &dyn Fn(&Outcome<T>) -> &Scaled<T>, len: usize| -> Vec<T> {
            let mut acc: Vec<LogSum<T>> = vec![LogSum::new(); len];
            for o in &live {
                let s = pick(o);
                for (a, &v) in acc.iter_mut().zip(&s.values) {
                    a.push(s.log_scale, v);
                }
            }
            acc.iter().map(LogSum::ln).collect()
        };

        let mut posteriors = Vec::with_capacity(self.p.len());
        let mut families = Vec::with_capacity(self.p.len());
        for n in 0..self.p.len() {
            let ln = accumulate(&|o| &o.nodes[n], self.model.states(n));
            let ln_n = log_sum_exp(&ln);
            audit.anchor_spread = audit.anchor_spread.max(relative_gap(ln_n, log_marginal));
            posteriors.push(ln.iter().map(|&l| (l - ln_n).exp()).collect::<Array1<T>>());

            let Some((m, f)) = self.p.parents(n) else {
                families.push(None);
                continue;
            };
            let (nm, nf, nx) = (self.model.states(m), self.model.states(f), self.model.states(n));
            let ln = accumulate(&|o| o.families[n].as_ref().expect("non-root"), nm * nf * nx);
            let ln_fam = log_sum_exp(&ln);
            audit.anchor_spread = audit.anchor_spread.max(relative_gap(ln_fam, log_marginal));
            let joint = Array3::from_shape_vec((nm, nf, nx), ln.iter().map(|&l| (l - ln_fam).exp()).collect())
                .expect("shape matches");
            let parent_marginal = joint.sum_axis(Axis(2));
            let mut conditional = joint.clone();
            for ((i, j, _), x) in conditional.indexed_iter_mut() {
                let pm = parent_marginal[[i, j]];
                *x = if pm > T::zero() { *x / pm } else { T::zero() };
            }
            families.push(Some(ParentConditional {
                person: self.p.person(n).id.clone(),
                mother: self.p.person(m).id.clone(),
                father: self.p.person(f).id.clone(),
                joint,
                log_evidence: ln_fam,
                parent_marginal,
                conditional,
            }));
        }
        Inference {
            log_marginal,
            posteriors,
            families,
            labels,
            audit,
        }
    }
}

/// Complete u and v messages for one feedback assignment.
#[derive(Clone, Debug)]
pub struct MessageCache<T> {
    graph: CutGraph,
    u: Vec<Scaled<T>>,
    v: Vec<Vec<Scaled<T>>>,
}

impl<T: Real> MessageCache<T> {
    /// u at the node holding the person's own factors.
    pub fn u(&self, person: usize) -> &Scaled<T> {
        &self.u[self.graph.home[person]]
    }

    /// v of `person` through down union `union` (a pedigree union index), or
    /// `None` if the person does not parent that union.
    pub fn v(&self, person: usize, union: usize) -> Option<&Scaled<T>> {
        self.graph.nodes.iter().enumerate().find_map(|(i, node)| {
            let slot = node.down.iter().position(|&e| e == union)?;
            (node.person == person).then(|| &self.v[i][slot])
        })
    }
}
