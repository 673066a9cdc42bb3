//! Tree decompositions: centroid splits, almost balanced k-decompositions,
//! and skeleton/segment extraction.

use std::collections::{BTreeSet, HashMap};

use crate::error::Error;
use crate::model::{EdgeId, Tree, VertexId};

/// A partition of a (sub)tree into edge-disjoint connected subtrees.
/// Border vertices are exactly those incident to edges of two or more
/// subtrees.
#[derive(Debug, Clone)]
pub struct Decomposition {
    subtrees: Vec<Vec<EdgeId>>,
    border_vertices: BTreeSet<VertexId>,
}

impl Decomposition {
    fn new(tree: &Tree, mut subtrees: Vec<Vec<EdgeId>>) -> Self {
        for part in &mut subtrees {
            part.sort_unstable();
        }
        let mut owner: HashMap<VertexId, usize> = HashMap::new();
        let mut border = BTreeSet::new();
        for (idx, part) in subtrees.iter().enumerate() {
            for &e in part {
                let (u, v) = tree.endpoints(e);
                for w in [u, v] {
                    match owner.get(&w) {
                        None => {
                            owner.insert(w, idx);
                        }
                        Some(&o) if o != idx => {
                            border.insert(w);
                        }
                        _ => {}
                    }
                }
            }
        }
        Decomposition {
            subtrees,
            border_vertices: border,
        }
    }

    /// Builds a decomposition from caller-picked parts, validating that the
    /// parts are nonempty, pairwise edge-disjoint, each connected, and that
    /// their union is connected.
    pub fn from_parts(tree: &Tree, parts: Vec<Vec<EdgeId>>) -> Result<Self, Error> {
        if parts.is_empty() {
            return Err(Error::ZeroK);
        }
        let mut all = Vec::new();
        for part in &parts {
            if part.is_empty() {
                return Err(Error::TooFewEdges(0, 1));
            }
            for &e in part {
                if e >= tree.edge_count() {
                    return Err(Error::InvalidTree(format!("edge id {e} out of range")));
                }
            }
            all.extend_from_slice(part);
        }
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        if all.len() != before {
            return Err(Error::InvalidTree("parts share an edge".into()));
        }
        for part in &parts {
            if !edge_subset_connected(tree, part) {
                return Err(Error::InvalidTree("disconnected part".into()));
            }
        }
        if !edge_subset_connected(tree, &all) {
            return Err(Error::InvalidTree("parts do not form a subtree".into()));
        }
        Ok(Decomposition::new(tree, parts))
    }

    pub fn k(&self) -> usize {
        self.subtrees.len()
    }

    pub fn subtrees(&self) -> &[Vec<EdgeId>] {
        &self.subtrees
    }

    pub fn border_vertices(&self) -> &BTreeSet<VertexId> {
        &self.border_vertices
    }

    /// Index of the subtree containing edge `e`, if any.
    pub fn subtree_of(&self, e: EdgeId) -> Option<usize> {
        self.subtrees
            .iter()
            .position(|part| part.binary_search(&e).is_ok())
    }

    /// All edges covered by the decomposition, sorted.
    pub fn all_edges(&self) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = self.subtrees.iter().flatten().copied().collect();
        out.sort_unstable();
        out
    }
}

fn edge_subset_connected(tree: &Tree, edges: &[EdgeId]) -> bool {
    if edges.is_empty() {
        return true;
    }
    let view = SubsetView::new(tree, edges);
    let start = view.vertices[0];
    let mut seen: BTreeSet<VertexId> = [start].into_iter().collect();
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(w, _) in view.neighbors(v) {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == view.vertices.len()
}

/// Vertex set spanned by an edge list.
pub fn edge_set_vertices(tree: &Tree, edges: &[EdgeId]) -> BTreeSet<VertexId> {
    let mut out = BTreeSet::new();
    for &e in edges {
        let (u, v) = tree.endpoints(e);
        out.insert(u);
        out.insert(v);
    }
    out
}

struct SubsetView {
    vertices: Vec<VertexId>,
    adj: HashMap<VertexId, Vec<(VertexId, EdgeId)>>,
}

impl SubsetView {
    fn new(tree: &Tree, edges: &[EdgeId]) -> Self {
        let mut adj: HashMap<VertexId, Vec<(VertexId, EdgeId)>> = HashMap::new();
        for &e in edges {
            let (u, v) = tree.endpoints(e);
            adj.entry(u).or_default().push((v, e));
            adj.entry(v).or_default().push((u, e));
        }
        let mut vertices: Vec<VertexId> = adj.keys().copied().collect();
        vertices.sort_unstable();
        for v in &vertices {
            adj.get_mut(v).unwrap().sort_unstable();
        }
        SubsetView { vertices, adj }
    }

    fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        self.adj.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edges reachable from `start` without passing through `blocked`,
    /// including the edge `(blocked, start)` itself.
    fn branch_edges(&self, blocked: VertexId, start: VertexId) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut stack = vec![(start, blocked)];
        out.push(
            self.neighbors(blocked)
                .iter()
                .find(|&&(w, _)| w == start)
                .expect("anchor adjacent to split vertex")
                .1,
        );
        while let Some((v, from)) = stack.pop() {
            for &(w, e) in self.neighbors(v) {
                if w != from {
                    out.push(e);
                    stack.push((w, v));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Splits an edge subset of `tree` into two connected, edge-disjoint parts
/// sharing exactly one vertex, each with between a third and two thirds of
/// the edges. Vertices are scanned in ascending id order; branches are
/// packed greedily by decreasing size.
fn split_edge_subset(
    tree: &Tree,
    edges: &[EdgeId],
) -> Result<(Vec<EdgeId>, Vec<EdgeId>, VertexId), Error> {
    let total = edges.len();
    if total < 2 {
        return Err(Error::TooFewEdges(total, 2));
    }
    let view = SubsetView::new(tree, edges);
    let branch_lists = branch_sizes(&view, total);

    for (&v, branches) in view.vertices.iter().zip(&branch_lists) {
        if branches.len() < 2 {
            continue;
        }
        if let Some(assignment) = greedy_partition(branches, total) {
            return Ok(assemble_split(&view, v, branches, &assignment));
        }
    }
    // Greedy packing can in principle miss a balanced partition that a
    // subset-sum search finds; rescan with the exact search.
    for (&v, branches) in view.vertices.iter().zip(&branch_lists) {
        if branches.len() < 2 {
            continue;
        }
        if let Some(assignment) = subset_sum_partition(branches, total) {
            return Ok(assemble_split(&view, v, branches, &assignment));
        }
    }
    unreachable!("every tree with at least two edges admits a centroid split")
}

/// For each vertex (aligned with `view.vertices`): its branches as
/// `(size, anchor neighbor)`, sorted by decreasing size, ties by anchor id.
fn branch_sizes(view: &SubsetView, total: usize) -> Vec<Vec<(usize, VertexId)>> {
    let root = view.vertices[0];
    // Iterative post-order accumulation of subtree edge counts.
    let mut down: HashMap<VertexId, usize> = HashMap::new();
    let mut order = Vec::with_capacity(view.vertices.len());
    let mut parent: HashMap<VertexId, VertexId> = HashMap::new();
    let mut stack = vec![(root, root)];
    while let Some((v, from)) = stack.pop() {
        order.push(v);
        for &(w, _) in view.neighbors(v) {
            if w != from {
                parent.insert(w, v);
                stack.push((w, v));
            }
        }
    }
    for &v in order.iter().rev() {
        let edges_below: usize = view
            .neighbors(v)
            .iter()
            .filter(|&&(w, _)| parent.get(&w) == Some(&v))
            .map(|&(w, _)| down[&w] + 1)
            .sum();
        down.insert(v, edges_below);
    }
    view.vertices
        .iter()
        .map(|&v| {
            let mut branches: Vec<(usize, VertexId)> = view
                .neighbors(v)
                .iter()
                .map(|&(w, _)| {
                    if parent.get(&w) == Some(&v) {
                        (down[&w] + 1, w)
                    } else {
                        // Branch through the parent holds everything else.
                        (total - down[&v], w)
                    }
                })
                .collect();
            branches.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            branches
        })
        .collect()
}

fn within_window(a: usize, total: usize) -> bool {
    let b = total - a;
    3 * a >= total && 3 * b >= total
}

/// Greedy bin fill over decreasing branch sizes; ties go to the first bin.
/// Returns per-branch membership in the first part when the result lands
/// in the centroid window.
fn greedy_partition(branches: &[(usize, VertexId)], total: usize) -> Option<Vec<bool>> {
    let mut in_a = Vec::with_capacity(branches.len());
    let (mut a, mut b) = (0usize, 0usize);
    for &(size, _) in branches {
        if a <= b {
            a += size;
            in_a.push(true);
        } else {
            b += size;
            in_a.push(false);
        }
    }
    within_window(a, total).then_some(in_a)
}

/// Exact fallback: find any branch subset whose size lands in the window.
fn subset_sum_partition(branches: &[(usize, VertexId)], total: usize) -> Option<Vec<bool>> {
    let mut from: Vec<Option<(usize, usize)>> = vec![None; total + 1];
    let mut reachable = vec![false; total + 1];
    reachable[0] = true;
    for (i, &(size, _)) in branches.iter().enumerate() {
        for s in (0..=total.saturating_sub(size)).rev() {
            if reachable[s] && !reachable[s + size] {
                reachable[s + size] = true;
                from[s + size] = Some((s, i));
            }
        }
    }
    let a = (0..=total).find(|&a| reachable[a] && a > 0 && a < total && within_window(a, total))?;
    let mut in_a = vec![false; branches.len()];
    let mut cur = a;
    while cur > 0 {
        let (prev, i) = from[cur].expect("reconstruction chain");
        in_a[i] = true;
        cur = prev;
    }
    // Both parts need at least one branch.
    (in_a.iter().any(|&x| x) && in_a.iter().any(|&x| !x)).then_some(in_a)
}

fn assemble_split(
    view: &SubsetView,
    v: VertexId,
    branches: &[(usize, VertexId)],
    in_a: &[bool],
) -> (Vec<EdgeId>, Vec<EdgeId>, VertexId) {
    let mut part_a = Vec::new();
    let mut part_b = Vec::new();
    for (&(_, anchor), &a_side) in branches.iter().zip(in_a) {
        let edges = view.branch_edges(v, anchor);
        if a_side {
            part_a.extend(edges);
        } else {
            part_b.extend(edges);
        }
    }
    part_a.sort_unstable();
    part_b.sort_unstable();
    (part_a, part_b, v)
}

/// Centroid split of a whole tree: two edge-disjoint connected parts
/// sharing one vertex, each holding between |E|/3 and 2|E|/3 edges.
pub fn centroid_split(tree: &Tree) -> Result<(Vec<EdgeId>, Vec<EdgeId>, VertexId), Error> {
    let all: Vec<EdgeId> = (0..tree.edge_count()).collect();
    split_edge_subset(tree, &all)
}

/// Almost balanced k-decomposition via k - 1 centroid splits, always
/// splitting a currently largest subtree (ties to the lowest index).
pub fn balanced_k_decomposition(tree: &Tree, k: usize) -> Result<Decomposition, Error> {
    Ok(balanced_k_decomposition_traced(tree, k)?.0)
}

/// As [`balanced_k_decomposition`], also returning the subtree sizes after
/// every intermediate split for auditing the max/min ratio.
pub fn balanced_k_decomposition_traced(
    tree: &Tree,
    k: usize,
) -> Result<(Decomposition, Vec<Vec<usize>>), Error> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if tree.edge_count() < k {
        return Err(Error::KTooLarge {
            k,
            edges: tree.edge_count(),
        });
    }
    decompose_subset(tree, (0..tree.edge_count()).collect(), k)
}

/// k-decomposition of an arbitrary connected edge subset.
pub(crate) fn decompose_subset(
    tree: &Tree,
    edges: Vec<EdgeId>,
    k: usize,
) -> Result<(Decomposition, Vec<Vec<usize>>), Error> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if edges.len() < k {
        return Err(Error::KTooLarge {
            k,
            edges: edges.len(),
        });
    }
    let mut parts = vec![edges];
    let mut trace = Vec::with_capacity(k - 1);
    for _ in 1..k {
        let idx = parts
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
            .map(|(i, _)| i)
            .expect("at least one part");
        let (a, b, _) = split_edge_subset(tree, &parts[idx])?;
        parts[idx] = a;
        parts.push(b);
        trace.push(parts.iter().map(Vec::len).collect());
    }
    Ok((Decomposition::new(tree, parts), trace))
}

/// The trivial decomposition: one subtree per edge. Border vertices are
/// exactly the internal (degree >= 2) vertices.
pub fn trivial_decomposition(tree: &Tree) -> Result<Decomposition, Error> {
    trivial_decomposition_subset(tree, &(0..tree.edge_count()).collect::<Vec<_>>())
}

pub(crate) fn trivial_decomposition_subset(
    tree: &Tree,
    edges: &[EdgeId],
) -> Result<Decomposition, Error> {
    if edges.is_empty() {
        return Err(Error::TooFewEdges(0, 1));
    }
    Ok(Decomposition::new(
        tree,
        edges.iter().map(|&e| vec![e]).collect(),
    ))
}

/// The skeleton of a decomposition: minimal subtree spanning all border
/// vertices, its junction vertices, core, and segment paths.
#[derive(Debug, Clone)]
pub struct SkeletonInfo {
    /// Edges of the skeleton S.
    pub skeleton_edges: BTreeSet<EdgeId>,
    /// Non-border skeleton vertices with skeleton-degree >= 3.
    pub junctions: BTreeSet<VertexId>,
    /// Border vertices plus junctions.
    pub core: BTreeSet<VertexId>,
    /// Maximal core-to-core skeleton paths with core-free interiors, each
    /// as an ordered vertex list.
    pub segments: Vec<Vec<VertexId>>,
    /// All vertices lying on the skeleton (a single border vertex when S
    /// has no edges).
    pub vertices: BTreeSet<VertexId>,
}

impl SkeletonInfo {
    pub fn has_edges(&self) -> bool {
        !self.skeleton_edges.is_empty()
    }

    /// Edge ids of segment `idx`, ordered along the segment.
    pub fn segment_edges(&self, tree: &Tree, idx: usize) -> Vec<EdgeId> {
        let verts = &self.segments[idx];
        verts
            .windows(2)
            .map(|w| tree.edge_between(w[0], w[1]).expect("segment edge"))
            .collect()
    }
}

/// Extracts the skeleton of `decomposition` inside its edge domain.
pub fn extract_skeleton(tree: &Tree, decomposition: &Decomposition) -> SkeletonInfo {
    let border = decomposition.border_vertices();
    if border.len() <= 1 {
        return SkeletonInfo {
            skeleton_edges: BTreeSet::new(),
            junctions: BTreeSet::new(),
            core: border.clone(),
            segments: Vec::new(),
            vertices: border.clone(),
        };
    }
    let domain = decomposition.all_edges();
    let view = SubsetView::new(tree, &domain);
    let root = *border.iter().next().expect("nonempty border");

    // An edge belongs to the skeleton iff both of its sides contain a
    // border vertex.
    let mut order = Vec::with_capacity(view.vertices.len());
    let mut parent: HashMap<VertexId, (VertexId, EdgeId)> = HashMap::new();
    let mut stack = vec![root];
    let mut seen: BTreeSet<VertexId> = [root].into_iter().collect();
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, e) in view.neighbors(v) {
            if seen.insert(w) {
                parent.insert(w, (v, e));
                stack.push(w);
            }
        }
    }
    let mut border_below: HashMap<VertexId, usize> = HashMap::new();
    for &v in order.iter().rev() {
        let mut count = usize::from(border.contains(&v));
        for &(w, _) in view.neighbors(v) {
            if parent.get(&w).map(|&(p, _)| p) == Some(v) {
                count += border_below[&w];
            }
        }
        border_below.insert(v, count);
    }
    let total_border = border.len();
    let mut skeleton_edges = BTreeSet::new();
    for (&v, &(_, e)) in &parent {
        let below = border_below[&v];
        if below >= 1 && total_border - below >= 1 {
            skeleton_edges.insert(e);
        }
    }

    let mut skel_adj: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
    for &e in &skeleton_edges {
        let (u, v) = tree.endpoints(e);
        skel_adj.entry(u).or_default().push(v);
        skel_adj.entry(v).or_default().push(u);
    }
    for list in skel_adj.values_mut() {
        list.sort_unstable();
    }
    let vertices: BTreeSet<VertexId> = skel_adj.keys().copied().collect();
    let junctions: BTreeSet<VertexId> = vertices
        .iter()
        .copied()
        .filter(|v| !border.contains(v) && skel_adj[v].len() >= 3)
        .collect();
    let core: BTreeSet<VertexId> = border.union(&junctions).copied().collect();

    // Walk segments outward from each core vertex in ascending order.
    let mut segments = Vec::new();
    let mut used: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for &start in &core {
        let Some(nbrs) = skel_adj.get(&start) else {
            continue;
        };
        for &first in nbrs {
            if used.contains(&(start, first)) {
                continue;
            }
            let mut path = vec![start];
            let (mut prev, mut cur) = (start, first);
            used.insert((start, first));
            loop {
                path.push(cur);
                used.insert((cur, prev));
                if core.contains(&cur) {
                    break;
                }
                let next = *skel_adj[&cur]
                    .iter()
                    .find(|&&w| w != prev)
                    .expect("interior skeleton vertex has degree 2");
                used.insert((cur, next));
                used.insert((next, cur));
                prev = cur;
                cur = next;
            }
            segments.push(path);
        }
    }

    SkeletonInfo {
        skeleton_edges,
        junctions,
        core,
        segments,
        vertices,
    }
}
