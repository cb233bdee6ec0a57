//! Zero-suppressed decision diagrams over arm labels `1..=d`.
//!
//! Vertex ids are dense: `0` and `1` are the terminals and non-terminal
//! vertices take ids `2..=r` in topological order, so every child id is
//! smaller than its parent id and the root `r` is the largest id. Every
//! dynamic program in this crate is a single array-indexed sweep over those
//! ids.

mod io;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use io::{read_zdd, write_zdd};

/// Id of a ZDD vertex. `0` is the 0-terminal, `1` the 1-terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ZERO: NodeId = NodeId(0);
    pub const ONE: NodeId = NodeId(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A non-terminal vertex: its arm label and its 0- and 1-children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: u32,
    pub lo: NodeId,
    pub hi: NodeId,
}

impl Node {
    #[inline]
    pub fn arm(&self) -> usize {
        self.label as usize
    }

    #[inline]
    pub fn child(&self, take: bool) -> NodeId {
        if take {
            self.hi
        } else {
            self.lo
        }
    }
}

/// A super arm: a strictly increasing set of arm indices in `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SuperArm(Vec<usize>);

impl SuperArm {
    /// Builds a super arm from arbitrary indices, sorting and deduplicating.
    pub fn new(mut arms: Vec<usize>) -> Self {
        arms.sort_unstable();
        arms.dedup();
        SuperArm(arms)
    }

    pub fn empty() -> Self {
        SuperArm(Vec::new())
    }

    pub fn arms(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.0.binary_search(&arm).is_ok()
    }

    /// Dense 0/1 indicator vector of length `d` (arm `i` at position `i - 1`).
    pub fn indicator(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        for &i in &self.0 {
            v[i - 1] = 1.0;
        }
        v
    }

    /// `sum_{i in X} values[i - 1]`.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.iter().map(|&i| values[i - 1]).sum()
    }
}

impl From<&[usize]> for SuperArm {
    fn from(arms: &[usize]) -> Self {
        SuperArm::new(arms.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for SuperArm {
    fn from(arms: [usize; N]) -> Self {
        SuperArm::new(arms.to_vec())
    }
}

impl fmt::Display for SuperArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// An explicit family of super arms. Only meant for oracle-scale work.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Family(BTreeSet<SuperArm>);

impl Family {
    pub fn new() -> Self {
        Family(BTreeSet::new())
    }

    /// Inserts a member; returns false if it was already present.
    pub fn insert(&mut self, x: SuperArm) -> bool {
        self.0.insert(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &SuperArm) -> bool {
        self.0.contains(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SuperArm> {
        self.0.iter()
    }

    /// Largest arm index used by any member (0 for an empty family or `{∅}`).
    pub fn max_arm(&self) -> usize {
        self.0
            .iter()
            .filter_map(|x| x.arms().last().copied())
            .max()
            .unwrap_or(0)
    }
}

impl FromIterator<SuperArm> for Family {
    fn from_iter<I: IntoIterator<Item = SuperArm>>(iter: I) -> Self {
        Family(iter.into_iter().collect())
    }
}

impl IntoIterator for Family {
    type Item = SuperArm;
    type IntoIter = std::collections::btree_set::IntoIter<SuperArm>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a Family {
    type Item = &'a SuperArm;
    type IntoIter = std::collections::btree_set::Iter<'a, SuperArm>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One violated ZDD invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A child's label does not exceed its parent's label.
    Unordered { parent: NodeId, child: NodeId },
    /// The 1-arc points directly at the 0-terminal.
    Redundant(NodeId),
    /// Another vertex has the same label and children.
    Sharable { vertex: NodeId, twin: NodeId },
    /// The vertex cannot be reached from the root.
    Unreachable(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unordered { parent, child } => {
                write!(f, "unordered arc: vertex {parent} -> vertex {child}")
            }
            Violation::Redundant(v) => write!(f, "redundant vertex {v}: 1-arc points to 0-terminal"),
            Violation::Sharable { vertex, twin } => {
                write!(f, "sharable vertex {vertex}: same label and children as {twin}")
            }
            Violation::Unreachable(v) => write!(f, "unreachable vertex {v}"),
        }
    }
}

/// Result of [`Zdd::validate`]. Empty iff the diagram is ordered, reduced and
/// fully reachable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.to_string().contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A ZDD whose root→1-terminal routes encode a family of subsets of `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zdd {
    arms: usize,
    /// `nodes[k]` is vertex `k + 2`.
    nodes: Vec<Node>,
    root: NodeId,
}

impl Zdd {
    /// Assembles a diagram from raw vertex records, checking only that ids
    /// are well formed: labels in `1..=d`, children pointing at smaller ids,
    /// and the root being the largest id. Use [`Zdd::validate`] for the
    /// ordering and reduction invariants.
    pub fn from_parts(arms: usize, nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        if arms == 0 {
            return Err(Error::InvalidZdd("arm count must be positive".into()));
        }
        for (k, n) in nodes.iter().enumerate() {
            let id = k as u32 + 2;
            if n.label == 0 || n.arm() > arms {
                return Err(Error::InvalidZdd(format!(
                    "vertex {id} has label {} outside 1..={arms}",
                    n.label
                )));
            }
            if n.lo.0 >= id || n.hi.0 >= id {
                return Err(Error::InvalidZdd(format!(
                    "vertex {id} has a child id not smaller than its own"
                )));
            }
        }
        let expected = if nodes.is_empty() {
            None
        } else {
            Some(NodeId(nodes.len() as u32 + 1))
        };
        match expected {
            Some(r) if r != root => {
                return Err(Error::InvalidZdd(format!(
                    "root must be the largest id {r}, found {root}"
                )))
            }
            None if !root.is_terminal() => {
                return Err(Error::InvalidZdd(format!("root {root} does not exist")))
            }
            _ => {}
        }
        Ok(Zdd { arms, nodes, root })
    }

    /// The empty family (root is the 0-terminal).
    pub fn empty(arms: usize) -> Self {
        Zdd {
            arms,
            nodes: Vec::new(),
            root: NodeId::ZERO,
        }
    }

    /// The family `{∅}` (root is the 1-terminal).
    pub fn unit(arms: usize) -> Self {
        Zdd {
            arms,
            nodes: Vec::new(),
            root: NodeId::ONE,
        }
    }

    #[inline]
    pub fn arms(&self) -> usize {
        self.arms
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Record of non-terminal vertex `id`.
    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index() - 2]
    }

    /// Number of ids in use, terminals included (`|V|`).
    pub fn id_count(&self) -> usize {
        self.nodes.len() + 2
    }

    /// Non-terminal vertices with their ids, in ascending id order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (NodeId, &Node)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, n)| (NodeId(k as u32 + 2), n))
    }

    /// Lists every violated ordering, reduction and reachability invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen: HashMap<Node, NodeId> = HashMap::new();
        for (id, n) in self.iter() {
            for c in [n.lo, n.hi] {
                if !c.is_terminal() && self.node(c).label <= n.label {
                    violations.push(Violation::Unordered { parent: id, child: c });
                }
            }
            if n.hi == NodeId::ZERO {
                violations.push(Violation::Redundant(id));
            }
            if let Some(&twin) = seen.get(n) {
                violations.push(Violation::Sharable { vertex: id, twin });
            } else {
                seen.insert(*n, id);
            }
        }
        let mut reached = vec![false; self.id_count()];
        reached[self.root.index()] = true;
        for (id, n) in self.iter().rev() {
            if reached[id.index()] {
                reached[n.lo.index()] = true;
                reached[n.hi.index()] = true;
            }
        }
        for (id, _) in self.iter() {
            if !reached[id.index()] {
                violations.push(Violation::Unreachable(id));
            }
        }
        ValidationReport { violations }
    }

    /// Number of members `|S|` (root→1-terminal routes).
    pub fn count(&self) -> BigUint {
        let mut c: Vec<BigUint> = Vec::with_capacity(self.id_count());
        c.push(BigUint::zero());
        c.push(BigUint::one());
        for (_, n) in self.iter() {
            let v = &c[n.lo.index()] + &c[n.hi.index()];
            c.push(v);
        }
        c.swap_remove(self.root.index())
    }

    /// Member count as `u64`, or `None` if it does not fit.
    pub fn count_u64(&self) -> Option<u64> {
        self.count().to_u64()
    }

    pub fn is_empty_family(&self) -> bool {
        self.root == NodeId::ZERO
    }

    /// Expands the family explicitly, refusing if it has more than `limit`
    /// members.
    pub fn enumerate(&self, limit: usize) -> Result<Family> {
        let count = self.count();
        if count > BigUint::from(limit) {
            return Err(Error::TooManyMembers {
                count: count.to_string(),
                limit,
            });
        }
        let mut family = Family::new();
        let mut prefix = Vec::new();
        self.collect_routes(self.root, &mut prefix, &mut family);
        Ok(family)
    }

    fn collect_routes(&self, v: NodeId, prefix: &mut Vec<usize>, out: &mut Family) {
        match v {
            NodeId::ZERO => {}
            NodeId::ONE => {
                out.insert(SuperArm(prefix.clone()));
            }
            _ => {
                let n = *self.node(v);
                self.collect_routes(n.lo, prefix, out);
                prefix.push(n.arm());
                self.collect_routes(n.hi, prefix, out);
                prefix.pop();
            }
        }
    }

    /// Membership test by walking down from the root.
    pub fn contains(&self, x: &SuperArm) -> bool {
        let mut wanted = x.arms().iter().peekable();
        let mut v = self.root;
        while !v.is_terminal() {
            let n = self.node(v);
            match wanted.peek() {
                Some(&&i) if i == n.arm() => {
                    wanted.next();
                    v = n.hi;
                }
                // the next wanted arm sits below this label: it can never be taken
                Some(&&i) if i < n.arm() => return false,
                _ => v = n.lo,
            }
        }
        v == NodeId::ONE && wanted.next().is_none()
    }

    /// `max_{X in S} |X|`.
    pub fn max_cardinality(&self) -> Result<usize> {
        self.cardinality_extreme(usize::max)
    }

    /// `min_{X in S} |X|`.
    pub fn min_cardinality(&self) -> Result<usize> {
        self.cardinality_extreme(usize::min)
    }

    fn cardinality_extreme(&self, pick: fn(usize, usize) -> usize) -> Result<usize> {
        if self.is_empty_family() {
            return Err(Error::EmptyFamily);
        }
        let mut best: Vec<Option<usize>> = vec![None, Some(0)];
        for (_, n) in self.iter() {
            let lo = best[n.lo.index()];
            let hi = best[n.hi.index()].map(|k| k + 1);
            best.push(match (lo, hi) {
                (Some(a), Some(b)) => Some(pick(a, b)),
                (a, b) => a.or(b),
            });
        }
        best[self.root.index()].ok_or(Error::EmptyFamily)
    }

    /// Minimum of `sum_{i in X} cost[i-1]` over the family together with one
    /// minimiser. Ties go to the 0-child.
    pub fn min_additive_cost(&self, cost: &[f64]) -> Result<(f64, SuperArm)> {
        if cost.len() != self.arms {
            return Err(Error::Dimension {
                expected: self.arms,
                got: cost.len(),
            });
        }
        if self.is_empty_family() {
            return Err(Error::EmptyFamily);
        }
        let value = self.min_cost_table(cost);
        let best = value[self.root.index()];
        if !best.is_finite() {
            return Err(Error::EmptyFamily);
        }
        let mut arms = Vec::new();
        let mut v = self.root;
        while !v.is_terminal() {
            let n = self.node(v);
            if value[n.lo.index()] <= cost[n.arm() - 1] + value[n.hi.index()] {
                v = n.lo;
            } else {
                arms.push(n.arm());
                v = n.hi;
            }
        }
        Ok((best, SuperArm(arms)))
    }

    /// Value-only variant of [`Zdd::min_additive_cost`].
    pub fn min_additive_value(&self, cost: &[f64]) -> Result<f64> {
        if cost.len() != self.arms {
            return Err(Error::Dimension {
                expected: self.arms,
                got: cost.len(),
            });
        }
        let best = self.min_cost_table(cost)[self.root.index()];
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::EmptyFamily)
        }
    }

    fn min_cost_table(&self, cost: &[f64]) -> Vec<f64> {
        let mut value = Vec::with_capacity(self.id_count());
        value.push(f64::INFINITY);
        value.push(0.0);
        for (_, n) in self.iter() {
            let lo = value[n.lo.index()];
            let hi = cost[n.arm() - 1] + value[n.hi.index()];
            value.push(if lo <= hi { lo } else { hi });
        }
        value
    }

    /// Renumbers this diagram into canonical form (see [`Reducer`]).
    pub fn canonical(&self) -> Zdd {
        let mut r = Reducer::new(self.arms);
        let mut map = vec![NodeId::ZERO, NodeId::ONE];
        for (_, n) in self.iter() {
            let id = r.node(n.label, map[n.lo.index()], map[n.hi.index()]);
            map.push(id);
        }
        r.finish(map[self.root.index()])
    }

    /// True if both diagrams encode the same family over the same arm count.
    pub fn same_family(&self, other: &Zdd) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Hash-consing builder that enforces both reduction rules while vertices
/// are created and emits a canonically numbered [`Zdd`].
///
/// Canonical numbering: reachable vertices are grouped by label, the largest
/// label first; within a label they are sorted by their (already renumbered)
/// `(lo, hi)` pair. Two reduced ordered diagrams for the same family
/// therefore compare equal field by field.
#[derive(Debug)]
pub struct Reducer {
    arms: usize,
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeId>,
}

impl Reducer {
    pub fn new(arms: usize) -> Self {
        Reducer {
            arms,
            nodes: Vec::new(),
            unique: HashMap::new(),
        }
    }

    /// Returns the vertex for `(label, lo, hi)`, skipping redundant vertices
    /// and reusing an existing twin. Children must have been produced by this
    /// reducer (or be terminals) and carry labels larger than `label`.
    pub fn node(&mut self, label: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if hi == NodeId::ZERO {
            return lo;
        }
        let key = Node { label, lo, hi };
        if let Some(&id) = self.unique.get(&key) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32 + 2);
        self.nodes.push(key);
        self.unique.insert(key, id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops vertices unreachable from `root` and renumbers canonically.
    pub fn finish(self, root: NodeId) -> Zdd {
        if root.is_terminal() {
            return Zdd {
                arms: self.arms,
                nodes: Vec::new(),
                root,
            };
        }
        let node = |id: NodeId| self.nodes[id.index() - 2];
        let mut reached = vec![false; self.nodes.len() + 2];
        reached[root.index()] = true;
        for k in (2..self.nodes.len() + 2).rev() {
            if reached[k] {
                let n = node(NodeId(k as u32));
                reached[n.lo.index()] = true;
                reached[n.hi.index()] = true;
            }
        }
        let mut by_label: Vec<Vec<NodeId>> = vec![Vec::new(); self.arms + 1];
        for k in 2..self.nodes.len() + 2 {
            if reached[k] {
                let id = NodeId(k as u32);
                by_label[node(id).arm()].push(id);
            }
        }
        let mut renum = vec![NodeId::ZERO; self.nodes.len() + 2];
        renum[1] = NodeId::ONE;
        let mut out = Vec::new();
        for group in by_label.iter_mut().rev() {
            let mut keyed: Vec<(NodeId, Node)> = group
                .iter()
                .map(|&id| {
                    let n = node(id);
                    (
                        id,
                        Node {
                            label: n.label,
                            lo: renum[n.lo.index()],
                            hi: renum[n.hi.index()],
                        },
                    )
                })
                .collect();
            keyed.sort_by_key(|(_, n)| (n.lo, n.hi));
            for (old, n) in keyed {
                renum[old.index()] = NodeId(out.len() as u32 + 2);
                out.push(n);
            }
        }
        Zdd {
            arms: self.arms,
            root: renum[root.index()],
            nodes: out,
        }
    }
}
