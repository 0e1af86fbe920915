//! Dimension partition trees, active node sets and rank tuples.
//!
//! Dimensions are 0-based internally. The text format and `Display` use the
//! 1-based set notation, so `{1,2}` is the node holding dimensions 0 and 1.
//!
//! Sons of a node are ordered by their smallest dimension. That order fixes
//! the axis order of every coefficient tensor built on the tree.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("dimension count must be at least 2, got {0}")]
    TooFewDimensions(usize),
    #[error("node {0} is empty or contains a dimension outside 1..={1}")]
    OutOfRange(String, usize),
    #[error("root must be the full dimension set, got {0}")]
    BadRoot(String),
    #[error("node {0} appears twice")]
    Duplicate(String),
    #[error("node {0} has no parent in the tree")]
    Orphan(String),
    #[error("sons of node {0} do not partition it")]
    NotPartition(String),
    #[error("leaf {0} is not a singleton")]
    LeafNotSingleton(String),
    #[error("node {0} cannot be active")]
    InvalidActive(String),
    #[error("non-active node {0} is not a leaf")]
    InactiveInterior(String),
    #[error("parent of active node {0} is neither active nor the root")]
    NotAdmissible(String),
    #[error("parent index of node {node} is {given}, expected {expected}")]
    ParentMismatch { node: String, given: String, expected: String },
    #[error("missing rank for active node {0}")]
    MissingRank(String),
    #[error("rank given for non-active node {0}")]
    UnexpectedRank(String),
    #[error("rank of node {0} must be at least 1")]
    ZeroRank(String),
    #[error("missing leaf dimension for dimension {0}")]
    MissingDimension(usize),
    #[error("unknown tree kind {0:?}")]
    UnknownKind(String),
    #[error("tree text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A set of dimensions, sorted and without duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node(Vec<usize>);

impl Node {
    pub fn new(mut dims: Vec<usize>) -> Self {
        dims.sort_unstable();
        dims.dedup();
        Node(dims)
    }

    pub fn singleton(dim: usize) -> Self {
        Node(vec![dim])
    }

    /// Dimensions `start..end`.
    pub fn range(start: usize, end: usize) -> Self {
        Node((start..end).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first_dim(&self) -> usize {
        self.0[0]
    }

    pub fn contains(&self, dim: usize) -> bool {
        self.0.binary_search(&dim).is_ok()
    }

    pub fn is_subset(&self, other: &Node) -> bool {
        self.0.iter().all(|&k| other.contains(k))
    }

    /// Dimensions of `0..d` not in this node.
    pub fn complement(&self, d: usize) -> Vec<usize> {
        (0..d).filter(|&k| !self.contains(k)).collect()
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", k + 1)?;
        }
        write!(f, "}}")
    }
}

impl FromStr for Node {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| format!("node {s:?} must be written in braces"))?;
        let mut dims = Vec::new();
        for part in inner.split(',') {
            let k: usize = part
                .trim()
                .parse()
                .map_err(|_| format!("bad dimension {part:?} in {s:?}"))?;
            if k == 0 {
                return Err(format!("dimensions are 1-based, got 0 in {s:?}"));
            }
            dims.push(k - 1);
        }
        Ok(Node::new(dims))
    }
}

/// Standard tree shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Tucker,
    Tt,
    Ttt,
    Balanced,
}

impl FromStr for TreeKind {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tucker" => Ok(TreeKind::Tucker),
            "tt" => Ok(TreeKind::Tt),
            "ttt" => Ok(TreeKind::Ttt),
            "balanced" | "ht" => Ok(TreeKind::Balanced),
            _ => Err(TreeError::UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TreeKind::Tucker => "tucker",
            TreeKind::Tt => "tt",
            TreeKind::Ttt => "ttt",
            TreeKind::Balanced => "balanced",
        };
        f.write_str(s)
    }
}

/// A dimension partition tree over `{0, …, d-1}`.
///
/// Node indices are canonical: breadth-first from the root (index 0), sons
/// in order of their smallest dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionTree {
    d: usize,
    nodes: Vec<Node>,
    parent: Vec<Option<usize>>,
    sons: Vec<Vec<usize>>,
    index: BTreeMap<Node, usize>,
}

impl DimensionTree {
    /// Build a tree from its node set. Parents are inferred as the smallest
    /// strict superset present in the set.
    pub fn from_nodes(d: usize, nodes: &[Node]) -> Result<Self, TreeError> {
        if d < 2 {
            return Err(TreeError::TooFewDimensions(d));
        }
        let root = Node::range(0, d);
        let mut set: BTreeMap<Node, ()> = BTreeMap::new();
        for n in nodes {
            if n.is_empty() || n.dims().iter().any(|&k| k >= d) {
                return Err(TreeError::OutOfRange(n.to_string(), d));
            }
            if set.insert(n.clone(), ()).is_some() {
                return Err(TreeError::Duplicate(n.to_string()));
            }
        }
        if !set.contains_key(&root) {
            return Err(TreeError::BadRoot(
                nodes.first().map(|n| n.to_string()).unwrap_or_default(),
            ));
        }
        let all: Vec<Node> = set.into_keys().collect();

        // parent: smallest strict superset
        let mut parent_of: BTreeMap<Node, Node> = BTreeMap::new();
        for n in &all {
            if *n == root {
                continue;
            }
            let p = all
                .iter()
                .filter(|m| m.len() > n.len() && n.is_subset(m))
                .min_by_key(|m| (m.len(), (*m).clone()))
                .ok_or_else(|| TreeError::Orphan(n.to_string()))?;
            parent_of.insert(n.clone(), p.clone());
        }

        // breadth-first canonical numbering
        let mut ordered = vec![root.clone()];
        let mut parent = vec![None];
        let mut sons: Vec<Vec<usize>> = vec![];
        let mut head = 0;
        while head < ordered.len() {
            let cur = ordered[head].clone();
            let mut kids: Vec<Node> = parent_of
                .iter()
                .filter(|(_, p)| **p == cur)
                .map(|(c, _)| c.clone())
                .collect();
            kids.sort_by_key(|k| k.first_dim());
            let mut ids = Vec::with_capacity(kids.len());
            for k in kids {
                ids.push(ordered.len());
                ordered.push(k);
                parent.push(Some(head));
            }
            sons.push(ids);
            head += 1;
        }

        let index = ordered
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let tree = DimensionTree {
            d,
            nodes: ordered,
            parent,
            sons,
            index,
        };
        tree.check_partitions()?;
        Ok(tree)
    }

    fn check_partitions(&self) -> Result<(), TreeError> {
        for (i, node) in self.nodes.iter().enumerate() {
            let sons = &self.sons[i];
            if sons.is_empty() {
                if node.len() != 1 {
                    return Err(TreeError::LeafNotSingleton(node.to_string()));
                }
                continue;
            }
            let mut covered: Vec<usize> = sons
                .iter()
                .flat_map(|&s| self.nodes[s].dims().iter().copied())
                .collect();
            let total = covered.len();
            covered.sort_unstable();
            covered.dedup();
            if sons.len() < 2 || covered.len() != total || covered != node.dims() {
                return Err(TreeError::NotPartition(node.to_string()));
            }
        }
        Ok(())
    }

    pub fn tucker(d: usize) -> Result<Self, TreeError> {
        let mut nodes = vec![Node::range(0, d)];
        nodes.extend((0..d).map(Node::singleton));
        Self::from_nodes(d, &nodes)
    }

    /// Linear tree `{1..d} → {1..d-1}, {d} → …`.
    pub fn linear(d: usize) -> Result<Self, TreeError> {
        let mut nodes: Vec<Node> = (2..=d).map(|k| Node::range(0, k)).collect();
        nodes.extend((0..d).map(Node::singleton));
        Self::from_nodes(d, &nodes)
    }

    /// Balanced binary tree; the left half takes the extra dimension.
    pub fn balanced(d: usize) -> Result<Self, TreeError> {
        fn split(start: usize, end: usize, out: &mut Vec<Node>) {
            out.push(Node::range(start, end));
            if end - start > 1 {
                let mid = start + (end - start).div_ceil(2);
                split(start, mid, out);
                split(mid, end, out);
            }
        }
        if d < 2 {
            return Err(TreeError::TooFewDimensions(d));
        }
        let mut nodes = Vec::new();
        split(0, d, &mut nodes);
        Self::from_nodes(d, &nodes)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn id_of(&self, node: &Node) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn sons(&self, id: usize) -> &[usize] {
        &self.sons[id]
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent[id]
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.sons[id].is_empty()
    }

    /// Id of the leaf `{dim}`.
    pub fn leaf_of(&self, dim: usize) -> usize {
        self.index[&Node::singleton(dim)]
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut l: Vec<usize> = (0..self.len()).filter(|&i| self.is_leaf(i)).collect();
        l.sort_by_key(|&i| self.nodes[i].first_dim());
        l
    }

    pub fn level(&self, id: usize) -> usize {
        let mut lvl = 0;
        let mut cur = id;
        while let Some(p) = self.parent[cur] {
            lvl += 1;
            cur = p;
        }
        lvl
    }

    pub fn depth(&self) -> usize {
        (0..self.len()).map(|i| self.level(i)).max().unwrap_or(0)
    }

    /// Nodes at a given level, in canonical order.
    pub fn level_nodes(&self, level: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.level(i) == level).collect()
    }

    /// Serialize with the given active set; see [`parse_tree_text`].
    pub fn to_text(&self, active: &ActiveSet) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let flag = if active.contains(i) { "*" } else { "" };
            let parent = self.parent[i]
                .map(|p| p.to_string())
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!("{n}{flag} {parent}\n"));
        }
        out
    }
}

/// Parse the canonical text form: one line per node, `{dims}` with an
/// optional `*` when active, then the parent's line index (`-` for the root).
/// Blank lines and `#` comments are ignored.
pub fn parse_tree_text(text: &str) -> Result<(DimensionTree, ActiveSet), TreeError> {
    let mut entries: Vec<(Node, bool, Option<usize>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| TreeError::Parse {
            line: lineno + 1,
            msg,
        };
        let close = line
            .find('}')
            .ok_or_else(|| perr("missing closing brace".into()))?;
        let node: Node = line[..=close].parse().map_err(perr)?;
        let mut rest = line[close + 1..].trim();
        let active = rest.starts_with('*');
        if active {
            rest = rest[1..].trim();
        }
        let parent = match rest {
            "-" | "" => None,
            s => Some(
                s.parse::<usize>()
                    .map_err(|_| perr(format!("bad parent index {s:?}")))?,
            ),
        };
        entries.push((node, active, parent));
    }
    let d = entries
        .iter()
        .flat_map(|(n, _, _)| n.dims().iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let nodes: Vec<Node> = entries.iter().map(|(n, _, _)| n.clone()).collect();
    let tree = DimensionTree::from_nodes(d, &nodes)?;
    for (node, _, parent) in &entries {
        let id = tree.id_of(node).expect("node present");
        let expected = tree.parent(id).map(|p| tree.node(p).clone());
        let given = parent.map(|p| entries.get(p).map(|e| e.0.clone()));
        let given = match given {
            None => None,
            Some(Some(n)) => Some(n),
            Some(None) => {
                return Err(TreeError::Orphan(node.to_string()));
            }
        };
        if given != expected {
            return Err(TreeError::ParentMismatch {
                node: node.to_string(),
                given: given.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                expected: expected
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| "-".into()),
            });
        }
    }
    let active: Vec<Node> = entries
        .iter()
        .filter(|e| e.1)
        .map(|e| e.0.clone())
        .collect();
    let active = ActiveSet::from_nodes(&tree, &active)?;
    Ok((tree, active))
}

/// Active nodes `A ⊂ T \ {D}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSet {
    flags: Vec<bool>,
}

impl ActiveSet {
    pub fn from_nodes(tree: &DimensionTree, nodes: &[Node]) -> Result<Self, TreeError> {
        let mut flags = vec![false; tree.len()];
        for n in nodes {
            let id = tree
                .id_of(n)
                .ok_or_else(|| TreeError::InvalidActive(n.to_string()))?;
            if id == tree.root() {
                return Err(TreeError::InvalidActive(n.to_string()));
            }
            flags[id] = true;
        }
        let set = ActiveSet { flags };
        set.validate(tree)?;
        Ok(set)
    }

    /// All nodes except the root.
    pub fn all_but_root(tree: &DimensionTree) -> Self {
        let mut flags = vec![true; tree.len()];
        flags[tree.root()] = false;
        ActiveSet { flags }
    }

    pub fn validate(&self, tree: &DimensionTree) -> Result<(), TreeError> {
        if self.flags.len() != tree.len() || self.flags[tree.root()] {
            return Err(TreeError::InvalidActive(tree.node(tree.root()).to_string()));
        }
        for id in 1..tree.len() {
            if !self.flags[id] && !tree.is_leaf(id) {
                return Err(TreeError::InactiveInterior(tree.node(id).to_string()));
            }
            if self.flags[id] {
                let p = tree.parent(id).expect("non-root has parent");
                if p != tree.root() && !self.flags[p] {
                    return Err(TreeError::NotAdmissible(tree.node(id).to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, id: usize) -> bool {
        self.flags.get(id).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i)
    }

    /// Active leaves `𝓛(A)`.
    pub fn is_active_leaf(&self, tree: &DimensionTree, id: usize) -> bool {
        self.contains(id) && tree.is_leaf(id)
    }

    /// Nodes carrying a coefficient tensor: `(A ∪ {D}) \ 𝓛(A)`.
    pub fn is_transfer_node(&self, tree: &DimensionTree, id: usize) -> bool {
        !tree.is_leaf(id) && (id == tree.root() || self.contains(id))
    }
}

/// Build a standard tree and the active set that goes with it.
///
/// Tensor train leaves `{2}, …, {d}` stay inactive; the tensor train Tucker
/// and balanced formats activate every non-root node.
pub fn build_tree(kind: TreeKind, d: usize) -> Result<(DimensionTree, ActiveSet), TreeError> {
    match kind {
        TreeKind::Tucker => {
            let t = DimensionTree::tucker(d)?;
            let a = ActiveSet::all_but_root(&t);
            Ok((t, a))
        }
        TreeKind::Tt => {
            let t = DimensionTree::linear(d)?;
            let active: Vec<Node> = (1..d).map(|k| Node::range(0, k)).collect();
            let a = ActiveSet::from_nodes(&t, &active)?;
            Ok((t, a))
        }
        TreeKind::Ttt => {
            let t = DimensionTree::linear(d)?;
            let a = ActiveSet::all_but_root(&t);
            Ok((t, a))
        }
        TreeKind::Balanced => {
            let t = DimensionTree::balanced(d)?;
            let a = ActiveSet::all_but_root(&t);
            Ok((t, a))
        }
    }
}

/// Active nodes ordered so that every node follows its active descendants:
/// active leaves by dimension, then interior nodes from the deepest level up.
pub fn nodes_bottom_up(tree: &DimensionTree, active: &ActiveSet) -> Vec<usize> {
    let mut leaves: Vec<usize> = active.ids().filter(|&i| tree.is_leaf(i)).collect();
    leaves.sort_by_key(|&i| tree.node(i).first_dim());
    let mut interior: Vec<usize> = active.ids().filter(|&i| !tree.is_leaf(i)).collect();
    interior.sort_by_key(|&i| (std::cmp::Reverse(tree.level(i)), tree.node(i).first_dim()));
    leaves.extend(interior);
    leaves
}

/// Ranks `r_α` for the active nodes, keyed by node value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTuple(BTreeMap<Node, usize>);

impl RankTuple {
    pub fn new(
        tree: &DimensionTree,
        active: &ActiveSet,
        ranks: BTreeMap<Node, usize>,
    ) -> Result<Self, TreeError> {
        for (node, &r) in &ranks {
            match tree.id_of(node) {
                Some(id) if active.contains(id) => {}
                _ => return Err(TreeError::UnexpectedRank(node.to_string())),
            }
            if r == 0 {
                return Err(TreeError::ZeroRank(node.to_string()));
            }
        }
        for id in active.ids() {
            if !ranks.contains_key(tree.node(id)) {
                return Err(TreeError::MissingRank(tree.node(id).to_string()));
            }
        }
        Ok(RankTuple(ranks))
    }

    pub fn uniform(tree: &DimensionTree, active: &ActiveSet, r: usize) -> Self {
        RankTuple(active.ids().map(|i| (tree.node(i).clone(), r.max(1))).collect())
    }

    pub fn get(&self, node: &Node) -> Option<usize> {
        self.0.get(node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Node, &usize)> {
        self.0.iter()
    }

    pub fn max(&self) -> usize {
        self.0.values().copied().max().unwrap_or(0)
    }

    pub fn as_map(&self) -> &BTreeMap<Node, usize> {
        &self.0
    }
}

/// Rank of an active node, `1` for the root.
pub(crate) fn rank_at(
    tree: &DimensionTree,
    ranks: &RankTuple,
    id: usize,
) -> Result<usize, TreeError> {
    if id == tree.root() {
        return Ok(1);
    }
    ranks
        .get(tree.node(id))
        .ok_or_else(|| TreeError::MissingRank(tree.node(id).to_string()))
}

pub(crate) fn leaf_dim(leaf_dims: &[usize], dim: usize) -> Result<usize, TreeError> {
    leaf_dims
        .get(dim)
        .copied()
        .ok_or(TreeError::MissingDimension(dim + 1))
}

/// `Π_{β∈S(α)∩A} r_β · Π_{β∈S(α)\A} n_β`: dimension of the tensor product of
/// the sons' retained spaces.
pub fn sons_space_dim(
    tree: &DimensionTree,
    active: &ActiveSet,
    ranks: &RankTuple,
    leaf_dims: &[usize],
    id: usize,
) -> Result<usize, TreeError> {
    let mut p = 1usize;
    for &s in tree.sons(id) {
        p *= if active.contains(s) {
            rank_at(tree, ranks, s)?
        } else {
            leaf_dim(leaf_dims, tree.node(s).first_dim())?
        };
    }
    Ok(p)
}

/// Number of parameters of a tree tensor with the given ranks and leaf
/// dimensions.
pub fn storage_complexity(
    tree: &DimensionTree,
    active: &ActiveSet,
    ranks: &RankTuple,
    leaf_dims: &[usize],
) -> Result<usize, TreeError> {
    let mut total = 0usize;
    for id in 0..tree.len() {
        if active.is_active_leaf(tree, id) {
            let n = leaf_dim(leaf_dims, tree.node(id).first_dim())?;
            total += rank_at(tree, ranks, id)? * n;
        } else if active.is_transfer_node(tree, id) {
            total += rank_at(tree, ranks, id)? * sons_space_dim(tree, active, ranks, leaf_dims, id)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(dims: &[usize]) -> Node {
        Node::new(dims.iter().map(|k| k - 1).collect())
    }

    #[test]
    fn tt_five_matches_figure() {
        let (t, a) = build_tree(TreeKind::Tt, 5).unwrap();
        assert_eq!(t.len(), 9);
        let active: Vec<Node> = a.ids().map(|i| t.node(i).clone()).collect();
        assert_eq!(active.len(), 4);
        for k in 1..5 {
            assert!(active.contains(&Node::range(0, k)));
        }
        for k in 2..=5 {
            let id = t.id_of(&n(&[k])).unwrap();
            assert!(!a.contains(id));
            assert!(t.is_leaf(id));
        }
        assert_eq!(t.depth(), 4);
    }

    #[test]
    fn smallest_tucker() {
        let (t, a) = build_tree(TreeKind::Tucker, 2).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(a.len(), 2);
        assert!(a.contains(t.id_of(&n(&[1])).unwrap()));
        assert!(a.contains(t.id_of(&n(&[2])).unwrap()));
    }

    #[test]
    fn ttt_five_has_eight_active() {
        let (_, a) = build_tree(TreeKind::Ttt, 5).unwrap();
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn balanced_tree_levels() {
        let (t, a) = build_tree(TreeKind::Balanced, 4).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(a.len(), 6);
        assert_eq!(t.depth(), 2);
        let l1: Vec<&Node> = t.level_nodes(1).into_iter().map(|i| t.node(i)).collect();
        assert_eq!(l1, vec![&n(&[1, 2]), &n(&[3, 4])]);
    }

    #[test]
    fn sons_sorted_by_min() {
        let nodes = vec![n(&[1, 2, 3]), n(&[2]), n(&[1, 3]), n(&[1]), n(&[3])];
        let t = DimensionTree::from_nodes(3, &nodes).unwrap();
        let sons: Vec<&Node> = t.sons(0).iter().map(|&s| t.node(s)).collect();
        assert_eq!(sons, vec![&n(&[1, 3]), &n(&[2])]);
    }

    #[test]
    fn non_partition_rejected() {
        // {1,2} and {2,3} overlap under the root
        let nodes = vec![n(&[1, 2, 3]), n(&[1, 2]), n(&[2, 3]), n(&[1]), n(&[2]), n(&[3])];
        let err = DimensionTree::from_nodes(3, &nodes).unwrap_err();
        assert!(matches!(err, TreeError::NotPartition(_)), "{err}");
    }

    #[test]
    fn missing_leaf_rejected() {
        let nodes = vec![n(&[1, 2, 3]), n(&[1, 2]), n(&[1]), n(&[2])];
        let err = DimensionTree::from_nodes(3, &nodes).unwrap_err();
        assert!(matches!(err, TreeError::NotPartition(ref s) if s == "{1,2,3}"));
    }

    #[test]
    fn unsplit_leaf_rejected() {
        let nodes = vec![n(&[1, 2, 3]), n(&[1, 2]), n(&[3])];
        let err = DimensionTree::from_nodes(3, &nodes).unwrap_err();
        assert_eq!(err, TreeError::LeafNotSingleton("{1,2}".into()));
    }

    #[test]
    fn inadmissible_active_rejected() {
        let t = DimensionTree::linear(3).unwrap();
        // {1} active while its parent {1,2} is not (and {1,2} is interior)
        let err = ActiveSet::from_nodes(&t, &[n(&[1])]).unwrap_err();
        assert_eq!(err, TreeError::InactiveInterior("{1,2}".into()));
        let err = ActiveSet::from_nodes(&t, &[n(&[1, 2, 3])]).unwrap_err();
        assert!(matches!(err, TreeError::InvalidActive(_)));
    }

    #[test]
    fn bottom_up_examples() {
        let (t, a) = build_tree(TreeKind::Tt, 3).unwrap();
        let order: Vec<&Node> = nodes_bottom_up(&t, &a).into_iter().map(|i| t.node(i)).collect();
        assert_eq!(order, vec![&n(&[1]), &n(&[1, 2])]);

        let (t, a) = build_tree(TreeKind::Tucker, 4).unwrap();
        let order: Vec<&Node> = nodes_bottom_up(&t, &a).into_iter().map(|i| t.node(i)).collect();
        assert_eq!(order, vec![&n(&[1]), &n(&[2]), &n(&[3]), &n(&[4])]);

        let (t, a) = build_tree(TreeKind::Ttt, 4).unwrap();
        let order: Vec<&Node> = nodes_bottom_up(&t, &a).into_iter().map(|i| t.node(i)).collect();
        assert_eq!(
            order,
            vec![&n(&[1]), &n(&[2]), &n(&[3]), &n(&[4]), &n(&[1, 2]), &n(&[1, 2, 3])]
        );
    }

    #[test]
    fn storage_examples() {
        let (t, a) = build_tree(TreeKind::Tt, 5).unwrap();
        let r = RankTuple::uniform(&t, &a, 3);
        assert_eq!(storage_complexity(&t, &a, &r, &[5; 5]).unwrap(), 165);

        let (t, a) = build_tree(TreeKind::Ttt, 10).unwrap();
        let r = RankTuple::uniform(&t, &a, 2);
        assert_eq!(storage_complexity(&t, &a, &r, &[4; 10]).unwrap(), 148);

        let (t, a) = build_tree(TreeKind::Tucker, 2).unwrap();
        let r = RankTuple::uniform(&t, &a, 1);
        assert_eq!(storage_complexity(&t, &a, &r, &[1, 1]).unwrap(), 3);
    }

    #[test]
    fn storage_missing_entries() {
        let (t, a) = build_tree(TreeKind::Tt, 3).unwrap();
        let r = RankTuple::uniform(&t, &a, 2);
        assert_eq!(
            storage_complexity(&t, &a, &r, &[2, 2]).unwrap_err(),
            TreeError::MissingDimension(3)
        );
        let mut m = BTreeMap::new();
        m.insert(n(&[1]), 2);
        assert_eq!(
            RankTuple::new(&t, &a, m).unwrap_err(),
            TreeError::MissingRank("{1,2}".into())
        );
    }

    #[test]
    fn text_round_trip() {
        for kind in [TreeKind::Tucker, TreeKind::Tt, TreeKind::Ttt, TreeKind::Balanced] {
            let (t, a) = build_tree(kind, 6).unwrap();
            let text = t.to_text(&a);
            let (t2, a2) = parse_tree_text(&text).unwrap();
            assert_eq!(t, t2);
            assert_eq!(a, a2);
        }
    }

    #[test]
    fn text_parent_mismatch() {
        let text = "{1,2,3} -\n{1,2}* 0\n{3} 0\n{1}* 0\n{2} 1\n";
        let err = parse_tree_text(text).unwrap_err();
        assert!(matches!(err, TreeError::ParentMismatch { ref node, .. } if node == "{1}"));
    }
}
