//! Feedback vertex sets for pedigree hypergraphs.
//!
//! A pedigree is singly connected when its person/union incidence graph is a
//! forest. Conditioning on the members of a feedback set (fixing their
//! latent states) removes them from that graph; what remains must be a
//! forest for the polytree recursions to apply.

use serde::Serialize;

use crate::pedigree::{DisjointSets, Pedigree};

/// Exhaustive minimum search is used up to this many persons.
pub const EXACT_SEARCH_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeedbackSet {
    /// Person indices, ascending (hence sorted by id).
    pub members: Vec<usize>,
    /// Connected components of the incidence graph once members are removed.
    pub components: usize,
}

impl FeedbackSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.members.binary_search(&n).is_ok()
    }

    pub fn ids(&self, p: &Pedigree) -> Vec<String> {
        self.members.iter().map(|&n| p.person(n).id.clone()).collect()
    }

    /// Re-checks the structural contract against `p`.
    pub fn verify(&self, p: &Pedigree) -> bool {
        forest_components(p, &self.members) == Some(self.components)
    }
}

/// Number of components of the incidence graph with `removed` persons
/// deleted, or `None` if it still has a cycle.
pub fn forest_components(p: &Pedigree, removed: &[usize]) -> Option<usize> {
    let n = p.len();
    let mut gone = vec![false; n];
    for &r in removed {
        gone[r] = true;
    }
    let mut dsu = DisjointSets::new(n + p.unions().len());
    for (e, u) in p.unions().iter().enumerate() {
        for x in u.members() {
            if !gone[x] && !dsu.union(x, n + e) {
                return None;
            }
        }
    }
    let mut roots: Vec<usize> = (0..n)
        .filter(|&x| !gone[x])
        .chain(n..n + p.unions().len())
        .map(|x| dsu.find(x))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    Some(roots.len())
}

/// Persons lying on some cycle of the incidence graph after `removed` are
/// deleted: the person part of its 2-core.
fn cyclic_core(p: &Pedigree, removed: &[usize]) -> Vec<usize> {
    let n = p.len();
    let m = p.unions().len();
    let mut alive = vec![true; n + m];
    for &r in removed {
        alive[r] = false;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for (e, u) in p.unions().iter().enumerate() {
        for x in u.members() {
            if alive[x] {
                adj[x].push(n + e);
                adj[n + e].push(x);
            }
        }
    }
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut stack: Vec<usize> = (0..n + m).filter(|&v| alive[v] && degree[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &w in &adj[v] {
            if alive[w] {
                degree[w] -= 1;
                if degree[w] == 1 {
                    stack.push(w);
                }
            }
        }
    }
    (0..n).filter(|&v| alive[v]).collect()
}

/// Finds a feedback set whose removal leaves a forest.
///
/// Up to [`EXACT_SEARCH_LIMIT`] persons the set has minimum size, and among
/// minimum sets one leaving a single connected component is preferred.
/// Larger pedigrees use a greedy highest-degree-on-a-cycle rule followed by
/// removal of redundant members. Deterministic for a given pedigree.
pub fn find_feedback_set(p: &Pedigree) -> FeedbackSet {
    let members = if p.len() <= EXACT_SEARCH_LIMIT {
        exact_search(p)
    } else {
        greedy_search(p)
    };
    let components = forest_components(p, &members).expect("search returns a feedback set");
    FeedbackSet { members, components }
}

fn exact_search(p: &Pedigree) -> Vec<usize> {
    let candidates = cyclic_core(p, &[]);
    for k in 0..=candidates.len() {
        let mut fallback = None;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let chosen: Vec<usize> = idx.iter().map(|&i| candidates[i]).collect();
            match forest_components(p, &chosen) {
                Some(1) => return chosen,
                Some(_) if fallback.is_none() => fallback = Some(chosen),
                _ => {}
            }
            if !next_combination(&mut idx, candidates.len()) {
                break;
            }
        }
        if let Some(f) = fallback {
            return f;
        }
    }
    candidates
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn greedy_search(p: &Pedigree) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let core = cyclic_core(p, &chosen);
        if core.is_empty() {
            break;
        }
        let in_core = |x: usize| core.binary_search(&x).is_ok();
        // Degree counted in unions that still hold another cyclic person.
        let best = core
            .iter()
            .copied()
            .max_by_key(|&x| {
                let deg = p
                    .up_edge(x)
                    .into_iter()
                    .chain(p.down_edges(x).iter().copied())
                    .filter(|&e| p.union(e).members().any(|y| y != x && in_core(y)))
                    .count();
                (deg, std::cmp::Reverse(x))
            })
            .expect("core is non-empty");
        chosen.push(best);
    }
    chosen.sort_unstable();
    let mut i = chosen.len();
    while i > 0 {
        i -= 1;
        let mut trial = chosen.clone();
        trial.remove(i);
        if forest_components(p, &trial).is_some() {
            chosen = trial;
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedigree::{Person, PedigreeDocument, Phenotype, Sex, Union};

    fn ped(ids: &[&str], unions: Vec<Union>) -> Pedigree {
        Pedigree::from_document(PedigreeDocument {
            persons: ids
                .iter()
                .map(|id| Person::new(*id, Sex::Unknown, Phenotype::Unaffected))
                .collect(),
            unions,
        })
        .unwrap()
    }

    /// Grandparents g1, g2 have c1 and c2; c1 x s1 -> k1, c2 x s2 -> k2; k1 x k2 -> z.
    pub(crate) fn cousin_loop() -> Pedigree {
        ped(
            &["c1", "c2", "g1", "g2", "k1", "k2", "s1", "s2", "z"],
            vec![
                Union::new("u0", "g1", "g2", ["c1", "c2"]),
                Union::new("u1", "c1", "s1", ["k1"]),
                Union::new("u2", "s2", "c2", ["k2"]),
                Union::new("u3", "k1", "k2", ["z"]),
            ],
        )
    }

    #[test]
    fn trio_needs_nothing() {
        let p = ped(&["c", "f", "m"], vec![Union::new("u", "m", "f", ["c"])]);
        let f = find_feedback_set(&p);
        assert!(f.is_empty());
        assert_eq!(f.components, 1);
        assert!(f.verify(&p));
    }

    #[test]
    fn chain_needs_nothing() {
        let p = ped(
            &["a", "b", "c", "d", "e"],
            vec![Union::new("u1", "a", "b", ["c"]), Union::new("u2", "c", "d", ["e"])],
        );
        assert!(find_feedback_set(&p).is_empty());
    }

    #[test]
    fn cousin_loop_needs_one_member() {
        let p = cousin_loop();
        assert!(forest_components(&p, &[]).is_none());
        let f = find_feedback_set(&p);
        assert_eq!(f.len(), 1);
        assert_eq!(f.components, 1);
        assert!(f.verify(&p));
    }

    #[test]
    fn repeated_couple_is_a_loop() {
        let p = ped(
            &["a", "b", "c", "d"],
            vec![Union::new("u1", "a", "b", ["c"]), Union::new("u2", "a", "b", ["d"])],
        );
        let f = find_feedback_set(&p);
        assert_eq!(f.len(), 1);
        assert!(f.verify(&p));
    }

    #[test]
    fn greedy_agrees_on_small_loops() {
        let p = cousin_loop();
        let g = greedy_search(&p);
        assert_eq!(g.len(), 1);
        assert!(forest_components(&p, &g).is_some());
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
    }
}
