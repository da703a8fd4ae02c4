//! The pedigree with its feedback members split into clamped copies.
//!
//! A feedback member whose state is fixed separates the pedigree at that
//! person, so each of the person's unions can see its own copy:
//!
//! - the up copy sits in the person's up union as a child and carries the
//!   transition, emission and evidence factors;
//! - one down copy per down union sits in the parent position and carries
//!   only the clamp, except that a feedback root's first down copy also
//!   carries the root prior and emission.
//!
//! Every factor of the joint is therefore counted exactly once, and the
//! resulting graph is a forest on which the polytree recursions apply.

use crate::feedback::FeedbackSet;
use crate::pedigree::{DisjointSets, Pedigree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum NodeKind {
    Whole,
    UpCopy,
    DownCopy { carries_root: bool },
}

#[derive(Clone, Debug)]
pub(crate) struct CutNode {
    pub person: usize,
    pub kind: NodeKind,
    pub up: Option<usize>,
    pub down: Vec<usize>,
}

impl CutNode {
    pub fn has_emission(&self) -> bool {
        !matches!(self.kind, NodeKind::DownCopy { carries_root: false })
    }

    pub fn has_root_prior(&self) -> bool {
        match self.kind {
            NodeKind::Whole => self.up.is_none(),
            NodeKind::UpCopy => false,
            NodeKind::DownCopy { carries_root } => carries_root,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CutUnion {
    pub mother: usize,
    pub father: usize,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct CutGraph {
    pub nodes: Vec<CutNode>,
    /// Indexed like `Pedigree::unions`.
    pub unions: Vec<CutUnion>,
    /// Per person: the node holding the person's transition (or root) and
    /// emission factors.
    pub home: Vec<usize>,
    /// Per node: its connected component.
    pub component: Vec<usize>,
    /// Per component: the node at which its total is read.
    pub anchors: Vec<usize>,
}

impl CutGraph {
    #[allow(clippy::needless_range_loop)]
    pub fn new(p: &Pedigree, fvs: &FeedbackSet) -> Self {
        let mut nodes = Vec::new();
        let mut home = vec![usize::MAX; p.len()];
        for n in 0..p.len() {
            let up = p.up_edge(n);
            let down = p.down_edges(n);
            if !fvs.contains(n) || (up.is_none() && down.is_empty()) {
                home[n] = nodes.len();
                nodes.push(CutNode {
                    person: n,
                    kind: NodeKind::Whole,
                    up,
                    down: down.to_vec(),
                });
                continue;
            }
            if up.is_some() {
                home[n] = nodes.len();
                nodes.push(CutNode {
                    person: n,
                    kind: NodeKind::UpCopy,
                    up,
                    down: Vec::new(),
                });
            }
            for (k, &e) in down.iter().enumerate() {
                let carries_root = k == 0 && up.is_none();
                if carries_root {
                    home[n] = nodes.len();
                }
                nodes.push(CutNode {
                    person: n,
                    kind: NodeKind::DownCopy { carries_root },
                    up: None,
                    down: vec![e],
                });
            }
        }

        let mut unions: Vec<CutUnion> = p
            .unions()
            .iter()
            .map(|_| CutUnion {
                mother: usize::MAX,
                father: usize::MAX,
                children: Vec::new(),
            })
            .collect();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(e) = node.up {
                unions[e].children.push(i);
            }
            for &e in &node.down {
                if p.union(e).mother == node.person {
                    unions[e].mother = i;
                } else {
                    unions[e].father = i;
                }
            }
        }

        let mut dsu = DisjointSets::new(nodes.len() + unions.len());
        for (e, u) in unions.iter().enumerate() {
            let slot = nodes.len() + e;
            for &x in u.children.iter().chain([&u.mother, &u.father]) {
                let joined = dsu.union(x, slot);
                debug_assert!(joined, "cut graph must be a forest");
            }
        }
        let mut component = vec![usize::MAX; nodes.len()];
        let mut anchors = Vec::new();
        let mut seen: Vec<Option<usize>> = vec![None; nodes.len() + unions.len()];
        // Anchor each component at its first whole node when it has one.
        let order = (0..nodes.len())
            .filter(|&i| nodes[i].kind == NodeKind::Whole)
            .chain((0..nodes.len()).filter(|&i| nodes[i].kind != NodeKind::Whole));
        for i in order {
            let r = dsu.find(i);
            let c = *seen[r].get_or_insert_with(|| {
                anchors.push(i);
                anchors.len() - 1
            });
            component[i] = c;
        }

        Self {
            nodes,
            unions,
            home,
            component,
            anchors,
        }
    }

    pub fn components(&self) -> usize {
        self.anchors.len()
    }

    pub fn union_component(&self, e: usize) -> usize {
        self.component[self.unions[e].mother]
    }
}
