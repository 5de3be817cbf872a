//! Cluster trees over the time intervals and minimal admissible covers.
//!
//! A cluster `C(j, n)` is the run of consecutive intervals `I_j ..= I_n`.
//! The tree is `(G, Q)`-uniform: the root is `C(1, N)`, every non-leaf has
//! exactly `Q` children of equal interval count, and all leaves sit in
//! generation `G`. Nodes are stored generation by generation, so node ids
//! follow breadth-first order and children of a node are contiguous.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{invalid, Error, Result};
use crate::time_mesh::TimeMesh;

/// The intervals `I_lo ..= I_hi` (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cluster {
    pub lo: usize,
    pub hi: usize,
}

impl Cluster {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(1 <= lo && lo <= hi);
        Self { lo, hi }
    }

    /// Number of intervals.
    pub fn count(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, n: usize) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn intervals(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl std::fmt::Display for Cluster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "C({},{})", self.lo, self.hi)
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone)]
struct Node {
    cluster: Cluster,
    generation: usize,
    parent: Option<NodeId>,
}

#[derive(Debug, Clone)]
pub struct ClusterTree {
    mesh: TimeMesh,
    branching: usize,
    depth: usize,
    leaf_size: usize,
    nodes: Vec<Node>,
    level_offsets: Vec<usize>,
    lambda: f64,
    big_lambda: f64,
}

/// `Len(C) = t_hi - t_{lo-1}`.
pub fn len(mesh: &TimeMesh, c: Cluster) -> f64 {
    mesh.level(c.hi) - mesh.level(c.lo - 1)
}

/// Distance between the underlying intervals; zero when they overlap or touch.
pub fn dist(mesh: &TimeMesh, c1: Cluster, c2: Cluster) -> f64 {
    if c2.lo > c1.hi {
        mesh.level(c2.lo - 1) - mesh.level(c1.hi)
    } else if c1.lo > c2.hi {
        mesh.level(c1.lo - 1) - mesh.level(c2.hi)
    } else {
        0.0
    }
}

/// `History(C) = (0, t_{lo-1}]`, returned as its endpoints.
pub fn history(mesh: &TimeMesh, c: Cluster) -> (f64, f64) {
    (0.0, mesh.level(c.lo - 1))
}

/// `C` lies in the history of `leaf` and `Len(C) <= eta Dist(C, leaf)`.
///
/// On uniform meshes lengths and distances are compared as interval counts,
/// which makes ties at `Len = eta Dist` exact.
pub fn is_admissible(mesh: &TimeMesh, c: Cluster, leaf: Cluster, eta: f64) -> bool {
    if c.hi >= leaf.lo {
        return false;
    }
    if mesh.is_uniform() {
        let length = c.count() as f64;
        let gap = (leaf.lo - 1 - c.hi) as f64;
        length <= eta * gap
    } else {
        len(mesh, c) <= eta * dist(mesh, c, leaf)
    }
}

/// The largest `G >= 1` with `Q^G` dividing `n`, if any.
pub fn max_depth(n: usize, q: usize) -> Option<usize> {
    let mut g = 0;
    let mut rest = n;
    while q >= 2 && rest % q == 0 {
        rest /= q;
        g += 1;
    }
    (g >= 1).then_some(g)
}

/// Depth used when only the branching factor is given:
/// `round(log_Q N) - 2`, lowered until `Q^G` divides `N`, at least 1.
pub fn default_depth(n: usize, q: usize) -> Result<usize> {
    let cap = max_depth(n, q).ok_or_else(|| {
        invalid(format!("{n} intervals cannot be split into {q} equal children"))
    })?;
    let target = ((n as f64).ln() / (q as f64).ln()).round() as i64 - 2;
    Ok((target.max(1) as usize).min(cap))
}

/// Branching factor and depth chosen when neither is given.
///
/// Minimises the per-step cost model of the fast sum,
/// `(r/eta) Q G + (1 + 1/eta) N / Q^G`, over `2 <= Q <= 10` and every
/// depth for which `Q^G` divides `N`.
pub fn auto_shape(n: usize, r: usize, eta: f64) -> Result<(usize, usize)> {
    let far_cost = r as f64 / eta;
    let near_cost = 1.0 + 1.0 / eta;
    let mut best: Option<(f64, usize, usize)> = None;
    for q in 2..=10usize {
        let Some(cap) = max_depth(n, q) else { continue };
        for g in 1..=cap {
            let cost = far_cost * (q * g) as f64 + near_cost * (n / q.pow(g as u32)) as f64;
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, q, g));
            }
        }
    }
    best.map(|(_, q, g)| (q, g)).ok_or_else(|| {
        invalid(format!(
            "{n} intervals admit no uniform cluster tree with branching 2..=10"
        ))
    })
}

impl ClusterTree {
    /// Recursive `Q`-section of `C(1, N)` for `G` generations.
    pub fn build_uniform(mesh: &TimeMesh, branching: usize, depth: usize) -> Result<Self> {
        let n = mesh.intervals();
        if branching < 2 {
            return Err(invalid(format!("branching factor must be >= 2, got {branching}")));
        }
        if depth == 0 {
            return Err(invalid("tree depth must be >= 1"));
        }
        let leaves = branching
            .checked_pow(depth as u32)
            .filter(|&l| l <= n && n % l == 0);
        let Some(leaves) = leaves else {
            let hint = match max_depth(n, branching) {
                Some(g) => format!("largest admissible depth is {g}"),
                None => format!("{n} is not divisible by {branching}"),
            };
            return Err(invalid(format!(
                "{n} intervals cannot be split into {branching}^{depth} equal leaves; {hint}"
            )));
        };
        let leaf_size = n / leaves;

        let mut nodes = Vec::with_capacity((branching * leaves - 1) / (branching - 1));
        let mut level_offsets = Vec::with_capacity(depth + 1);
        for generation in 0..=depth {
            let offset = nodes.len();
            level_offsets.push(offset);
            let count = branching.pow(generation as u32);
            let width = n / count;
            for i in 0..count {
                let parent = (generation > 0).then(|| level_offsets[generation - 1] + i / branching);
                nodes.push(Node {
                    cluster: Cluster::new(i * width + 1, (i + 1) * width),
                    generation,
                    parent,
                });
            }
        }

        let mut tree = Self {
            mesh: mesh.clone(),
            branching,
            depth,
            leaf_size,
            nodes,
            level_offsets,
            lambda: 1.0,
            big_lambda: 1.0,
        };
        if !mesh.is_uniform() {
            let t = mesh.final_time();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for node in &tree.nodes {
                let scaled = len(mesh, node.cluster) * (branching as f64).powi(node.generation as i32) / t;
                lo = lo.min(scaled);
                hi = hi.max(scaled);
            }
            tree.lambda = lo;
            tree.big_lambda = hi;
        }
        Ok(tree)
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Intervals per leaf.
    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.level_offsets[self.depth]
    }

    /// Recorded `(lambda, Lambda)` with `lambda T Q^-l <= Len(C) <= Lambda T Q^-l`.
    pub fn length_bounds(&self) -> (f64, f64) {
        (self.lambda, self.big_lambda)
    }

    pub const fn root(&self) -> NodeId {
        0
    }

    pub fn cluster(&self, id: NodeId) -> Cluster {
        self.nodes[id].cluster
    }

    pub fn generation(&self, id: NodeId) -> usize {
        self.nodes[id].generation
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].generation == self.depth
    }

    pub fn children(&self, id: NodeId) -> Range<NodeId> {
        let node = &self.nodes[id];
        if node.generation == self.depth {
            return id..id;
        }
        let index = id - self.level_offsets[node.generation];
        let first = self.level_offsets[node.generation + 1] + index * self.branching;
        first..first + self.branching
    }

    pub fn nodes(&self) -> Range<NodeId> {
        0..self.nodes.len()
    }

    /// Nodes of generation `l`.
    pub fn generation_nodes(&self, l: usize) -> Range<NodeId> {
        let start = self.level_offsets[l];
        let end = self.level_offsets.get(l + 1).copied().unwrap_or(self.nodes.len());
        start..end
    }

    pub fn leaves(&self) -> Range<NodeId> {
        self.generation_nodes(self.depth)
    }

    /// The leaf `L_n` containing interval `n`.
    pub fn leaf_of(&self, n: usize) -> NodeId {
        self.level_offsets[self.depth] + (n - 1) / self.leaf_size
    }

    /// Node id of a cluster, if it is a node of this tree.
    pub fn find(&self, c: Cluster) -> Option<NodeId> {
        let width = c.count();
        let n = self.mesh.intervals();
        if width == 0 || n % width != 0 || (c.lo - 1) % width != 0 {
            return None;
        }
        let count = n / width;
        (0..=self.depth)
            .find(|&g| self.branching.pow(g as u32) == count)
            .map(|g| self.level_offsets[g] + (c.lo - 1) / width)
    }

    pub fn is_admissible(&self, c: NodeId, leaf: NodeId, eta: f64) -> bool {
        is_admissible(&self.mesh, self.cluster(c), self.cluster(leaf), eta)
    }

    /// Recursive construction of the minimal cover: from `c`, accept
    /// admissible clusters and non-admissible leaves left of the target,
    /// otherwise descend into the children. Clusters starting right of the
    /// target's left end are dropped.
    pub fn divide(&self, c: NodeId, cover: &mut Vec<NodeId>, leaf: NodeId, eta: f64) {
        let cl = self.cluster(c);
        let target = self.cluster(leaf);
        if cl.lo > target.lo {
            return;
        }
        let left_of_target = cl.hi < target.lo;
        if left_of_target && (self.is_leaf(c) || is_admissible(&self.mesh, cl, target, eta)) {
            cover.push(c);
        } else {
            for child in self.children(c) {
                self.divide(child, cover, leaf, eta);
            }
        }
    }

    /// The unique minimal `(L, eta)`-admissible cover, split into the
    /// non-admissible (near) and admissible (far) members.
    pub fn minimal_cover(&self, leaf: NodeId, eta: f64) -> Cover {
        let mut members = Vec::new();
        self.divide(self.root(), &mut members, leaf, eta);
        let (far, near) = members
            .iter()
            .partition(|&&c| self.is_admissible(c, leaf, eta));
        Cover {
            leaf,
            members,
            near,
            far,
        }
    }

    /// Minimal covers of every leaf, indexed by leaf order.
    pub fn all_covers(&self, eta: f64) -> Vec<Cover> {
        self.leaves().map(|leaf| self.minimal_cover(leaf, eta)).collect()
    }

    /// Non-leaf ancestors of `L_n`, root first (the clusters whose
    /// far-field moments include interval `n`).
    pub fn update_subtree(&self, n: usize) -> Vec<NodeId> {
        let mut chain = Vec::with_capacity(self.depth);
        let mut cur = self.parent(self.leaf_of(n));
        while let Some(id) = cur {
            chain.push(id);
            cur = self.parent(id);
        }
        chain.reverse();
        chain
    }

    /// Indented text listing of the tree, one node per line. Members of
    /// `cover` are tagged `Near` or `Far`, its leaf `Target`.
    pub fn dump(&self, cover: Option<&Cover>) -> String {
        let mut out = String::new();
        self.dump_node(self.root(), cover, &mut out);
        out
    }

    fn dump_node(&self, id: NodeId, cover: Option<&Cover>, out: &mut String) {
        let g = self.generation(id);
        let tag = match cover {
            Some(cv) if cv.leaf == id => " Target",
            Some(cv) if cv.near.contains(&id) => " Near",
            Some(cv) if cv.far.contains(&id) => " Far",
            _ => "",
        };
        let _ = writeln!(out, "{:indent$}{g} {}{tag}", "", self.cluster(id), indent = 2 * g);
        for child in self.children(id) {
            self.dump_node(child, cover, out);
        }
    }
}

/// Minimal admissible cover of one leaf's history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub leaf: NodeId,
    /// All members in left-to-right order.
    pub members: Vec<NodeId>,
    pub near: Vec<NodeId>,
    pub far: Vec<NodeId>,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Step ranges `n_min ..= n_max` during which each node belongs to the
/// minimal cover of `L_n`.
#[derive(Debug, Clone)]
pub struct Lifetimes {
    spans: Vec<Option<(usize, usize)>>,
}

impl Lifetimes {
    /// One pass over the covers of all leaves; fails if some node's
    /// membership is not a contiguous run of steps.
    pub fn scan(tree: &ClusterTree, eta: f64) -> Result<Self> {
        let mut spans: Vec<Option<(usize, usize)>> = vec![None; tree.node_count()];
        let mut steps = vec![0usize; tree.node_count()];
        for leaf in tree.leaves() {
            let target = tree.cluster(leaf);
            for c in tree.minimal_cover(leaf, eta).members {
                let span = spans[c].get_or_insert((target.lo, target.hi));
                span.0 = span.0.min(target.lo);
                span.1 = span.1.max(target.hi);
                steps[c] += target.count();
            }
        }
        for (id, span) in spans.iter().enumerate() {
            if let Some((lo, hi)) = span {
                if hi - lo + 1 != steps[id] {
                    return Err(Error::Invariant(format!(
                        "cover membership of {} is not contiguous",
                        tree.cluster(id)
                    )));
                }
            }
        }
        Ok(Self { spans })
    }

    pub fn get(&self, id: NodeId) -> Option<(usize, usize)> {
        self.spans[id]
    }
}

/// `(n_min, n_max)` for one node, or `None` if it never enters a cover.
pub fn lifetime(tree: &ClusterTree, eta: f64, c: NodeId) -> Result<Option<(usize, usize)>> {
    Ok(Lifetimes::scan(tree, eta)?.get(c))
}
