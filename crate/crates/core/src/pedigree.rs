//! Pedigrees as directed acyclic hypergraphs.
//!
//! Persons are nodes and each reproductive union is a hyperedge joining a
//! mother and a father to one or more children. A person is a child in at
//! most one union (their *up edge*) and a parent in any number of unions
//! (their *down edges*). The graph may be multiply connected (for example
//! when relatives have children together) but never cyclic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
    Unknown,
}

/// Observed disease status. `Unobserved` marks explicitly missing data;
/// unshaded pedigree nodes are `Unaffected`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phenotype {
    Affected,
    Unaffected,
    Unobserved,
}

// Field order is alphabetical so that serde emits canonical (sorted-key) JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Person {
    pub id: String,
    pub phenotype: Phenotype,
    pub sex: Sex,
}

impl Person {
    pub fn new(id: impl Into<String>, sex: Sex, phenotype: Phenotype) -> Self {
        Self {
            id: id.into(),
            phenotype,
            sex,
        }
    }
}

/// A union as it appears in the document, referring to persons by id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Union {
    pub children: Vec<String>,
    pub father: String,
    pub id: String,
    pub mother: String,
}

impl Union {
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        mother: impl Into<String>,
        father: impl Into<String>,
        children: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            children: children.into_iter().map(Into::into).collect(),
            father: father.into(),
            id: id.into(),
            mother: mother.into(),
        }
    }
}

/// Serialized form of a pedigree. May be invalid; see [`validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedigreeDocument {
    pub persons: Vec<Person>,
    #[serde(default)]
    pub unions: Vec<Union>,
}

impl PedigreeDocument {
    pub fn from_json(bytes: &[u8]) -> Result<Self, PedigreeError> {
        serde_json::from_slice(bytes).map_err(|e| PedigreeError::Malformed(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicatePersonId,
    DuplicateUnionId,
    UnresolvedReference,
    EmptyChildren,
    DuplicateChild,
    ParentIsChild,
    SameParents,
    MultipleUpEdges,
    Cycle,
    Disconnected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub ids: Vec<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// A parent role is occupied by a person of unknown sex.
    UnknownSexInRole,
    /// A male occupies the mother role or a female the father role.
    RoleSexMismatch,
    /// A person is a mother in one union and a father in another.
    ConflictingRoles,
    /// Two unions share the same mother and father.
    RepeatedCouple,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub kind: WarningKind,
    pub ids: Vec<String>,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PedigreeError {
    #[error("malformed pedigree document: {0}")]
    Malformed(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("union {union} references unknown person {id}")]
    UnresolvedReference { union: String, id: String },
    #[error("invalid pedigree: {}", join_messages(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown person {0}")]
    UnknownPerson(String),
    #[error("unknown union {0}")]
    UnknownUnion(String),
}

fn join_messages(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| v.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks every structural invariant of a pedigree document.
///
/// Returns an empty list iff the document describes a valid pedigree.
pub fn validate(doc: &PedigreeDocument) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut person_index: HashMap<&str, usize> = HashMap::new();
    let mut seen = BTreeSet::new();
    for (i, p) in doc.persons.iter().enumerate() {
        if person_index.insert(p.id.as_str(), i).is_some() && seen.insert(p.id.as_str()) {
            out.push(Violation {
                rule: Rule::DuplicatePersonId,
                ids: vec![p.id.clone()],
                message: format!("duplicate person id {}", p.id),
            });
        }
    }
    let mut union_ids = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for u in &doc.unions {
        if !union_ids.insert(u.id.as_str()) && reported.insert(u.id.as_str()) {
            out.push(Violation {
                rule: Rule::DuplicateUnionId,
                ids: vec![u.id.clone()],
                message: format!("duplicate union id {}", u.id),
            });
        }
    }

    // Parent -> child arcs between resolved persons, and up-edge counts.
    let n = doc.persons.len();
    let mut arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut up_edges: Vec<Vec<&str>> = vec![Vec::new(); n];
    let mut links: Vec<Vec<usize>> = Vec::new();

    for u in &doc.unions {
        let resolve = |id: &String, out: &mut Vec<Violation>| -> Option<usize> {
            let found = person_index.get(id.as_str()).copied();
            if found.is_none() {
                out.push(Violation {
                    rule: Rule::UnresolvedReference,
                    ids: vec![u.id.clone(), id.clone()],
                    message: format!("union {} references unknown person {}", u.id, id),
                });
            }
            found
        };
        let mother = resolve(&u.mother, &mut out);
        let father = resolve(&u.father, &mut out);
        if u.children.is_empty() {
            out.push(Violation {
                rule: Rule::EmptyChildren,
                ids: vec![u.id.clone()],
                message: format!("union {} has no children", u.id),
            });
        }
        if u.mother == u.father {
            out.push(Violation {
                rule: Rule::SameParents,
                ids: vec![u.id.clone(), u.mother.clone()],
                message: format!("union {} uses {} as both mother and father", u.id, u.mother),
            });
        }
        let mut kids = BTreeSet::new();
        let mut members: Vec<usize> = mother.into_iter().chain(father).collect();
        for c in &u.children {
            if !kids.insert(c.as_str()) {
                out.push(Violation {
                    rule: Rule::DuplicateChild,
                    ids: vec![u.id.clone(), c.clone()],
                    message: format!("union {} lists child {} more than once", u.id, c),
                });
                continue;
            }
            if *c == u.mother || *c == u.father {
                out.push(Violation {
                    rule: Rule::ParentIsChild,
                    ids: vec![u.id.clone(), c.clone()],
                    message: format!("{} is both a parent and a child of union {}", c, u.id),
                });
            }
            if let Some(ci) = resolve(c, &mut out) {
                up_edges[ci].push(u.id.as_str());
                members.push(ci);
                for p in mother.into_iter().chain(father) {
                    arcs[p].push(ci);
                }
            }
        }
        links.push(members);
    }

    for (i, ups) in up_edges.iter().enumerate() {
        if ups.len() > 1 {
            let id = &doc.persons[i].id;
            let mut ids = vec![id.clone()];
            ids.extend(ups.iter().map(|s| s.to_string()));
            out.push(Violation {
                rule: Rule::MultipleUpEdges,
                ids,
                message: format!("multiple up edges for {}", id),
            });
        }
    }

    let remaining = kahn_leftovers(&arcs);
    if !remaining.is_empty() {
        let mut ids: Vec<String> = remaining.iter().map(|&i| doc.persons[i].id.clone()).collect();
        ids.sort();
        ids.dedup();
        out.push(Violation {
            rule: Rule::Cycle,
            message: format!("directed cycle through {}", ids.join(", ")),
            ids,
        });
    }

    let mut dsu = DisjointSets::new(n);
    for members in &links {
        for w in members.windows(2) {
            dsu.union(w[0], w[1]);
        }
    }
    let mut reps: BTreeMap<usize, &str> = BTreeMap::new();
    for (i, p) in doc.persons.iter().enumerate() {
        let r = dsu.find(i);
        let e = reps.entry(r).or_insert(p.id.as_str());
        if p.id.as_str() < *e {
            *e = p.id.as_str();
        }
    }
    if reps.len() != 1 {
        let mut ids: Vec<String> = reps.values().map(|s| s.to_string()).collect();
        ids.sort();
        out.push(Violation {
            rule: Rule::Disconnected,
            message: format!(
                "expected one connected component, found {}; split the document into one pedigree per component",
                reps.len()
            ),
            ids,
        });
    }
    out
}

/// Nodes not consumed by Kahn's algorithm, i.e. those on or below a cycle.
fn kahn_leftovers(arcs: &[Vec<usize>]) -> Vec<usize> {
    let n = arcs.len();
    let mut indeg = vec![0usize; n];
    for outs in arcs {
        for &c in outs {
            indeg[c] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut done = 0;
    while let Some(i) = stack.pop() {
        done += 1;
        for &c in &arcs[i] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                stack.push(c);
            }
        }
    }
    if done == n {
        Vec::new()
    } else {
        (0..n).filter(|&i| indeg[i] > 0).collect()
    }
}

/// Role and sex irregularities that do not invalidate a document.
pub fn warnings(doc: &PedigreeDocument) -> Vec<Warning> {
    let sex: HashMap<&str, Sex> = doc.persons.iter().map(|p| (p.id.as_str(), p.sex)).collect();
    let mut out = Vec::new();
    let mut roles: BTreeMap<&str, BTreeSet<&'static str>> = BTreeMap::new();
    let mut couples: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();

    let mut unions: Vec<&Union> = doc.unions.iter().collect();
    unions.sort_by(|a, b| a.id.cmp(&b.id));
    for u in unions {
        for (role, id, expected) in [("mother", &u.mother, Sex::Female), ("father", &u.father, Sex::Male)] {
            roles.entry(id.as_str()).or_default().insert(role);
            match sex.get(id.as_str()) {
                Some(Sex::Unknown) => out.push(Warning {
                    kind: WarningKind::UnknownSexInRole,
                    ids: vec![u.id.clone(), id.clone()],
                    message: format!("{} has unknown sex but is the {} in union {}", id, role, u.id),
                }),
                Some(&s) if s != expected => out.push(Warning {
                    kind: WarningKind::RoleSexMismatch,
                    ids: vec![u.id.clone(), id.clone()],
                    message: format!("{} is {:?} but is the {} in union {}", id, s, role, u.id).to_lowercase(),
                }),
                _ => {}
            }
        }
        couples
            .entry((u.mother.as_str(), u.father.as_str()))
            .or_default()
            .push(u.id.as_str());
    }
    for (id, r) in roles {
        if r.len() > 1 {
            out.push(Warning {
                kind: WarningKind::ConflictingRoles,
                ids: vec![id.to_string()],
                message: format!("{} is a mother in one union and a father in another", id),
            });
        }
    }
    for ((m, f), us) in couples {
        if us.len() > 1 {
            let mut ids = vec![m.to_string(), f.to_string()];
            ids.extend(us.iter().map(|s| s.to_string()));
            out.push(Warning {
                kind: WarningKind::RepeatedCouple,
                ids,
                message: format!("{} and {} share unions {}", m, f, us.join(", ")),
            });
        }
    }
    out
}

/// A union with person references resolved to indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub id: String,
    pub mother: usize,
    pub father: usize,
    pub children: Vec<usize>,
}

impl Family {
    pub fn parents(&self) -> [usize; 2] {
        [self.mother, self.father]
    }

    /// Parents followed by children.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.parents().into_iter().chain(self.children.iter().copied())
    }
}

/// A validated pedigree. Immutable once built.
///
/// Persons and unions are stored sorted by id, so index order is id order.
#[derive(Clone, Debug, PartialEq)]
pub struct Pedigree {
    persons: Vec<Person>,
    unions: Vec<Family>,
    index: HashMap<String, usize>,
    up: Vec<Option<usize>>,
    down: Vec<Vec<usize>>,
}

impl Pedigree {
    pub fn from_document(doc: PedigreeDocument) -> Result<Self, PedigreeError> {
        let violations = validate(&doc);
        if let Some(v) = violations.first() {
            return Err(match v.rule {
                Rule::DuplicatePersonId | Rule::DuplicateUnionId => {
                    PedigreeError::DuplicateId(v.ids[0].clone())
                }
                Rule::UnresolvedReference => PedigreeError::UnresolvedReference {
                    union: v.ids[0].clone(),
                    id: v.ids[1].clone(),
                },
                _ => PedigreeError::Invalid(violations),
            });
        }

        let mut persons = doc.persons;
        persons.sort_by(|a, b| a.id.cmp(&b.id));
        let index: HashMap<String, usize> = persons
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        let mut raw = doc.unions;
        raw.sort_by(|a, b| a.id.cmp(&b.id));
        let unions: Vec<Family> = raw
            .into_iter()
            .map(|u| Family {
                mother: index[&u.mother],
                father: index[&u.father],
                children: u.children.iter().map(|c| index[c]).collect(),
                id: u.id,
            })
            .collect();

        let mut up = vec![None; persons.len()];
        let mut down = vec![Vec::new(); persons.len()];
        for (e, u) in unions.iter().enumerate() {
            for &c in &u.children {
                up[c] = Some(e);
            }
            down[u.mother].push(e);
            down[u.father].push(e);
        }
        Ok(Self {
            persons,
            unions,
            index,
            up,
            down,
        })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, PedigreeError> {
        Self::from_document(PedigreeDocument::from_json(bytes)?)
    }

    pub fn to_document(&self) -> PedigreeDocument {
        PedigreeDocument {
            persons: self.persons.clone(),
            unions: self
                .unions
                .iter()
                .map(|u| Union {
                    children: u.children.iter().map(|&c| self.persons[c].id.clone()).collect(),
                    father: self.persons[u.father].id.clone(),
                    id: u.id.clone(),
                    mother: self.persons[u.mother].id.clone(),
                })
                .collect(),
        }
    }

    /// Canonical JSON: persons and unions sorted by id, keys sorted, compact.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("pedigree serializes")
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn persons(&self) -> &[Person] {
        &self.persons
    }

    pub fn person(&self, i: usize) -> &Person {
        &self.persons[i]
    }

    pub fn unions(&self) -> &[Family] {
        &self.unions
    }

    pub fn union(&self, e: usize) -> &Family {
        &self.unions[e]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize, PedigreeError> {
        self.index_of(id)
            .ok_or_else(|| PedigreeError::UnknownPerson(id.to_string()))
    }

    pub fn union_index(&self, id: &str) -> Option<usize> {
        self.unions.iter().position(|u| u.id == id)
    }

    pub fn up_edge(&self, n: usize) -> Option<usize> {
        self.up[n]
    }

    pub fn down_edges(&self, n: usize) -> &[usize] {
        &self.down[n]
    }

    /// `(mother, father)` of a non-root person.
    pub fn parents(&self, n: usize) -> Option<(usize, usize)> {
        self.up[n].map(|e| (self.unions[e].mother, self.unions[e].father))
    }

    pub fn siblings(&self, n: usize) -> Vec<usize> {
        match self.up[n] {
            Some(e) => self.unions[e].children.iter().copied().filter(|&c| c != n).collect(),
            None => Vec::new(),
        }
    }

    /// Other parents of union `e` (empty if `n` is not a parent of `e`).
    pub fn mates(&self, n: usize, e: usize) -> Vec<usize> {
        let u = &self.unions[e];
        if u.mother == n {
            vec![u.father]
        } else if u.father == n {
            vec![u.mother]
        } else {
            Vec::new()
        }
    }

    pub fn children(&self, e: usize) -> &[usize] {
        &self.unions[e].children
    }

    pub fn is_root(&self, n: usize) -> bool {
        self.up[n].is_none()
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        self.down[n].is_empty()
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&n| self.is_root(n))
    }

    /// Id-level view of a person's neighbourhood.
    pub fn relations(&self, id: &str) -> Result<Relations, PedigreeError> {
        let n = self.require(id)?;
        let name = |i: usize| self.persons[i].id.clone();
        let mut mates = BTreeMap::new();
        let mut children = BTreeMap::new();
        for &e in &self.down[n] {
            let uid = self.unions[e].id.clone();
            mates.insert(uid.clone(), self.mates(n, e).into_iter().map(name).collect());
            children.insert(uid, self.children(e).iter().map(|&c| name(c)).collect());
        }
        Ok(Relations {
            up_edge: self.up[n].map(|e| self.unions[e].id.clone()),
            down_edges: self.down[n].iter().map(|&e| self.unions[e].id.clone()).collect(),
            parents: self
                .parents(n)
                .map(|(m, f)| vec![name(m), name(f)])
                .unwrap_or_default(),
            siblings: self.siblings(n).into_iter().map(name).collect(),
            mates,
            children,
            is_root: self.is_root(n),
            is_leaf: self.is_leaf(n),
        })
    }

    /// Topological order of persons: parents before children, ties broken by id.
    pub fn traversal_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut waiting = vec![0usize; n];
        for (c, up) in self.up.iter().enumerate() {
            if up.is_some() {
                waiting[c] = 2;
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| waiting[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &e in &self.down[i] {
                for &c in &self.unions[e].children {
                    waiting[c] -= 1;
                    if waiting[c] == 0 {
                        ready.insert(c);
                    }
                }
            }
        }
        debug_assert_eq!(order.len(), n, "validated pedigrees are acyclic");
        order
    }
}

/// Neighbourhood of one person, by id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Relations {
    pub up_edge: Option<String>,
    pub down_edges: Vec<String>,
    pub parents: Vec<String>,
    pub siblings: Vec<String>,
    /// Mates per down edge.
    pub mates: BTreeMap<String, Vec<String>>,
    /// Children per down edge.
    pub children: BTreeMap<String, Vec<String>>,
    pub is_root: bool,
    pub is_leaf: bool,
}

pub fn parse_pedigree(bytes: &[u8]) -> Result<Pedigree, PedigreeError> {
    Pedigree::from_json(bytes)
}

pub fn serialize_pedigree(p: &Pedigree) -> String {
    p.to_json()
}

/// Union-find with path halving.
#[derive(Clone, Debug)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
