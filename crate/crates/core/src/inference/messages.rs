//! The a/b/u/v recursions over a cut graph for one clamp of the feedback set.
//!
//! For a node n with up union e (mother M, father F):
//!
//! - `u(n)[x] = P(y_n | x) · Σ_{m,f} P(x | m, f) · a(M, e)[m] · a(F, e)[f] · Π_{s ≠ n} b(s)[m, f]`,
//!   and for a root `u(r)[x] = P(y_r | x) · P(x)`;
//! - `a(n, e) = u(n) · Π_{e' ≠ e} v(n, e')`;
//! - `b(n)[m, f] = Σ_x P(x | m, f) · P(y_n | x) · Π_{e'} v(n, e')[x]`;
//! - `v(n, e)[x] = Σ_{mate state} a(mate, e) · Π_{children c} b(c)` with `x` on
//!   the axis of n's role; `v = 1` for a node without down unions.
//!
//! Evidence and clamps enter through the masked tables and the local
//! indicator. Every message is stored as a vector normalized to maximum one
//! plus a natural-log scale.

use ndarray::Array3;

use super::graph::CutGraph;
use super::model::{LocalPrior, MaskedModel};
use crate::scalar::Real;

/// `values · exp(log_scale)`, with `values` normalized to maximum 1 (or all zero).
#[derive(Clone, Debug, PartialEq)]
pub struct Scaled<T> {
    pub values: Vec<T>,
    pub log_scale: T,
}

impl<T: Real> Scaled<T> {
    pub fn new(mut values: Vec<T>, log_scale: T) -> Self {
        let max = values.iter().copied().fold(T::zero(), T::max);
        if max > T::zero() && max.is_finite() {
            for v in &mut values {
                *v /= max;
            }
            Self {
                values,
                log_scale: log_scale + max.ln(),
            }
        } else {
            Self {
                values,
                log_scale: T::zero(),
            }
        }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            values: vec![T::one(); len],
            log_scale: T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    /// Natural log of the sum of the represented values.
    pub fn ln_sum(&self) -> T {
        let s: T = self.values.iter().copied().sum();
        if s > T::zero() {
            self.log_scale + s.ln()
        } else {
            T::neg_infinity()
        }
    }

    /// Represented values on the linear scale (may underflow).
    pub fn linear(&self) -> Vec<T> {
        let k = self.log_scale.exp();
        self.values.iter().map(|&v| v * k).collect()
    }

    /// Elementwise product.
    pub fn times(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).collect();
        Self::new(values, self.log_scale + other.log_scale)
    }
}

pub(crate) struct Sweep<'a, T> {
    g: &'a CutGraph,
    model: &'a MaskedModel<T>,
    clamp: &'a [Option<usize>],
    u: Vec<Option<Scaled<T>>>,
    v: Vec<Vec<Option<Scaled<T>>>>,
    b: Vec<Option<Scaled<T>>>,
}

impl<'a, T: Real> Sweep<'a, T> {
    pub fn new(g: &'a CutGraph, model: &'a MaskedModel<T>, clamp: &'a [Option<usize>]) -> Self {
        Self {
            g,
            model,
            clamp,
            u: vec![None; g.nodes.len()],
            v: g.nodes.iter().map(|n| vec![None; n.down.len()]).collect(),
            b: vec![None; g.nodes.len()],
        }
    }

    fn states(&self, node: usize) -> usize {
        self.model.states(self.g.nodes[node].person)
    }

    /// Emission (when the node carries it) times the clamp indicator.
    fn local(&self, node: usize) -> Vec<T> {
        let cn = &self.g.nodes[node];
        let mut w = if cn.has_emission() {
            self.model.factors[cn.person].emission.to_vec()
        } else {
            vec![T::one(); self.states(node)]
        };
        if let Some(s) = self.clamp[cn.person] {
            for (x, wx) in w.iter_mut().enumerate() {
                if x != s {
                    *wx = T::zero();
                }
            }
        }
        w
    }

    fn transition(&self, node: usize) -> &'a Array3<T> {
        match &self.model.factors[self.g.nodes[node].person].prior {
            LocalPrior::Child { table, .. } => table,
            LocalPrior::Root(_) => unreachable!("node with an up union has a transition"),
        }
    }

    pub fn u(&mut self, node: usize) -> Scaled<T> {
        if let Some(m) = &self.u[node] {
            return m.clone();
        }
        let local = self.local(node);
        let cn = &self.g.nodes[node];
        let msg = match cn.up {
            None => {
                let values = if cn.has_root_prior() {
                    let LocalPrior::Root(prior) = &self.model.factors[cn.person].prior else {
                        unreachable!("root node has a root prior")
                    };
                    prior.iter().zip(&local).map(|(&p, &l)| p * l).collect()
                } else {
                    local
                };
                Scaled::new(values, T::zero())
            }
            Some(e) => {
                let w = self.parent_weights(e, Some(node));
                let t = self.transition(node);
                let (_, nf, nx) = t.dim();
                let values = (0..nx)
                    .map(|x| {
                        if local[x] == T::zero() {
                            return T::zero();
                        }
                        let mut acc = T::zero();
                        for (k, &wk) in w.values.iter().enumerate() {
                            if wk != T::zero() {
                                acc += t[[k / nf, k % nf, x]] * wk;
                            }
                        }
                        acc * local[x]
                    })
                    .collect();
                Scaled::new(values, w.log_scale)
            }
        };
        self.u[node] = Some(msg.clone());
        msg
    }

    /// Joint weight of the parents of union `e` (flattened mother-major)
    /// from everything outside the union, times the b messages of every child
    /// except `skip`.
    pub fn parent_weights(&mut self, e: usize, skip: Option<usize>) -> Scaled<T> {
        let (mother, father) = (self.g.unions[e].mother, self.g.unions[e].father);
        let am = self.a(mother, e);
        let af = self.a(father, e);
        let mut values = Vec::with_capacity(am.values.len() * af.values.len());
        for &m in &am.values {
            for &f in &af.values {
                values.push(m * f);
            }
        }
        let mut w = Scaled::new(values, am.log_scale + af.log_scale);
        for i in 0..self.g.unions[e].children.len() {
            let c = self.g.unions[e].children[i];
            if Some(c) != skip {
                w = w.times(&self.b(c));
            }
        }
        w
    }

    pub fn a(&mut self, node: usize, e: usize) -> Scaled<T> {
        let mut msg = self.u(node);
        for slot in 0..self.g.nodes[node].down.len() {
            if self.g.nodes[node].down[slot] != e {
                msg = msg.times(&self.v(node, slot));
            }
        }
        msg
    }

    pub fn v(&mut self, node: usize, slot: usize) -> Scaled<T> {
        if let Some(m) = &self.v[node][slot] {
            return m.clone();
        }
        let e = self.g.nodes[node].down[slot];
        let (mother, father) = (self.g.unions[e].mother, self.g.unions[e].father);
        let is_mother = mother == node;
        let mate = if is_mother { father } else { mother };
        let am = self.a(mate, e);
        let (nm, nf) = (self.states(mother), self.states(father));
        let mut prod = Scaled::ones(nm * nf);
        for i in 0..self.g.unions[e].children.len() {
            let c = self.g.unions[e].children[i];
            prod = prod.times(&self.b(c));
        }
        let values = if is_mother {
            (0..nm)
                .map(|x| (0..nf).map(|j| am.values[j] * prod.values[x * nf + j]).sum())
                .collect()
        } else {
            (0..nf)
                .map(|x| (0..nm).map(|i| am.values[i] * prod.values[i * nf + x]).sum())
                .collect()
        };
        let msg = Scaled::new(values, am.log_scale + prod.log_scale);
        self.v[node][slot] = Some(msg.clone());
        msg
    }

    /// Everything below and including `node`, as a function of its parents'
    /// states (flattened mother-major).
    pub fn b(&mut self, node: usize) -> Scaled<T> {
        if let Some(m) = &self.b[node] {
            return m.clone();
        }
        let mut w = Scaled::new(self.local(node), T::zero());
        for slot in 0..self.g.nodes[node].down.len() {
            w = w.times(&self.v(node, slot));
        }
        let t = self.transition(node);
        let (nm, nf, nx) = t.dim();
        let mut values = vec![T::zero(); nm * nf];
        for i in 0..nm {
            for j in 0..nf {
                let mut acc = T::zero();
                for x in 0..nx {
                    acc += t[[i, j, x]] * w.values[x];
                }
                values[i * nf + j] = acc;
            }
        }
        let msg = Scaled::new(values, w.log_scale);
        self.b[node] = Some(msg.clone());
        msg
    }

    /// `P(node_x, Y)` restricted to the node's component.
    pub fn node_joint(&mut self, node: usize) -> Scaled<T> {
        let mut msg = self.u(node);
        for slot in 0..self.g.nodes[node].down.len() {
            msg = msg.times(&self.v(node, slot));
        }
        msg
    }

    /// `P(mother_x, father_x, child_x, Y)` restricted to the component, for a
    /// node with an up union; flattened `[mother, father, child]`.
    pub fn family_joint(&mut self, node: usize) -> Scaled<T> {
        let e = self.g.nodes[node].up.expect("family joint needs an up union");
        let w = self.parent_weights(e, Some(node));
        let mut below = Scaled::new(self.local(node), T::zero());
        for slot in 0..self.g.nodes[node].down.len() {
            below = below.times(&self.v(node, slot));
        }
        let t = self.transition(node);
        let (_, nf, nx) = t.dim();
        let mut values = Vec::with_capacity(w.values.len() * nx);
        for (k, &wk) in w.values.iter().enumerate() {
            for x in 0..nx {
                values.push(wk * t[[k / nf, k % nf, x]] * below.values[x]);
            }
        }
        Scaled::new(values, w.log_scale + below.log_scale)
    }

    /// Forces every u and v message.
    pub fn complete(&mut self) {
        for node in 0..self.g.nodes.len() {
            self.u(node);
            for slot in 0..self.g.nodes[node].down.len() {
                self.v(node, slot);
            }
        }
    }

    pub fn into_parts(self) -> (Vec<Scaled<T>>, Vec<Vec<Scaled<T>>>) {
        let u = self.u.into_iter().map(|m| m.expect("complete() ran")).collect();
        let v = self
            .v
            .into_iter()
            .map(|row| row.into_iter().map(|m| m.expect("complete() ran")).collect())
            .collect();
        (u, v)
    }
}
