//! Instance representation: trees, customers, pricing schemes, revenue.
//!
//! Everything here is an immutable value after construction and every
//! operation is a pure function, so instances can be evaluated from any
//! number of threads without coordination.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::Error;
use crate::rational::Rat;

pub type VertexId = usize;
pub type EdgeId = usize;

/// An undirected tree. Edge ids are stable: edge `e` is `edges[e]`.
#[derive(Debug, Clone)]
pub struct Tree {
    vertex_count: usize,
    edges: Vec<(VertexId, VertexId)>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl Tree {
    /// Validates connectivity, acyclicity (|E| = |V| - 1), and edge sanity.
    pub fn new(vertex_count: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self, Error> {
        if vertex_count == 0 {
            return Err(Error::InvalidTree("no vertices".into()));
        }
        if edges.len() != vertex_count - 1 {
            return Err(Error::InvalidTree(format!(
                "{} edges for {} vertices",
                edges.len(),
                vertex_count
            )));
        }
        let mut adj = vec![Vec::new(); vertex_count];
        let mut seen = BTreeSet::new();
        for (id, &(u, v)) in edges.iter().enumerate() {
            if u >= vertex_count {
                return Err(Error::InvalidVertex(u, vertex_count));
            }
            if v >= vertex_count {
                return Err(Error::InvalidVertex(v, vertex_count));
            }
            if u == v {
                return Err(Error::InvalidTree(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidTree(format!("duplicate edge {u}-{v}")));
            }
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let tree = Tree {
            vertex_count,
            edges,
            adj,
        };
        // |E| = |V| - 1 plus full reachability implies acyclic.
        if tree.reachable_from(0) != vertex_count {
            return Err(Error::InvalidTree("not connected".into()));
        }
        Ok(tree)
    }

    fn reachable_from(&self, start: VertexId) -> usize {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        count
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    /// Neighbors of `v` as `(neighbor, edge id)`, sorted by neighbor id.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.adj[u]
            .binary_search_by(|probe| probe.0.cmp(&v))
            .ok()
            .map(|idx| self.adj[u][idx].1)
    }

    /// The unique simple path from `u` to `v` as an ordered edge list.
    /// `u == v` yields an empty path.
    pub fn path(&self, u: VertexId, v: VertexId) -> Result<Vec<EdgeId>, Error> {
        Ok(self.path_with_vertices(u, v)?.0)
    }

    /// The unique simple path from `u` to `v` as an ordered vertex list
    /// starting at `u` and ending at `v`.
    pub fn path_vertices(&self, u: VertexId, v: VertexId) -> Result<Vec<VertexId>, Error> {
        Ok(self.path_with_vertices(u, v)?.1)
    }

    /// Ordered `(edges, vertices)` of the unique `u`-`v` path; the vertex
    /// list has one more entry than the edge list.
    pub fn path_with_vertices(
        &self,
        u: VertexId,
        v: VertexId,
    ) -> Result<(Vec<EdgeId>, Vec<VertexId>), Error> {
        if u >= self.vertex_count {
            return Err(Error::InvalidVertex(u, self.vertex_count));
        }
        if v >= self.vertex_count {
            return Err(Error::InvalidVertex(v, self.vertex_count));
        }
        if u == v {
            return Ok((Vec::new(), vec![u]));
        }
        // Iterative DFS from u recording parents; fine for paths as deep as
        // the tree itself.
        let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; self.vertex_count];
        let mut stack = vec![u];
        let mut seen = vec![false; self.vertex_count];
        seen[u] = true;
        while let Some(x) = stack.pop() {
            if x == v {
                break;
            }
            for &(w, e) in &self.adj[x] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((x, e));
                    stack.push(w);
                }
            }
        }
        let mut edges = Vec::new();
        let mut verts = vec![v];
        let mut cur = v;
        while cur != u {
            let (p, e) = parent[cur].expect("tree is connected");
            edges.push(e);
            verts.push(p);
            cur = p;
        }
        edges.reverse();
        verts.reverse();
        Ok((edges, verts))
    }
}

/// A single-minded customer: wants the unique `s`-`t` path, pays at most
/// `budget`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Customer {
    pub s: VertexId,
    pub t: VertexId,
    pub budget: Rat,
}

impl Customer {
    pub fn new(s: VertexId, t: VertexId, budget: Rat) -> Self {
        Customer { s, t, budget }
    }
}

/// A tree together with its customers. Paths are resolved once at
/// construction.
#[derive(Debug, Clone)]
pub struct Instance {
    tree: Tree,
    customers: Vec<Customer>,
    paths: Vec<Vec<EdgeId>>,
}

impl Instance {
    pub fn new(tree: Tree, customers: Vec<Customer>) -> Result<Self, Error> {
        let mut paths = Vec::with_capacity(customers.len());
        for (i, c) in customers.iter().enumerate() {
            if c.s >= tree.vertex_count() {
                return Err(Error::InvalidVertex(c.s, tree.vertex_count()));
            }
            if c.t >= tree.vertex_count() {
                return Err(Error::InvalidVertex(c.t, tree.vertex_count()));
            }
            if c.s == c.t {
                return Err(Error::DegeneratePath(i, c.s));
            }
            if c.budget < Rat::zero() {
                return Err(Error::NegativeBudget(i));
            }
            paths.push(tree.path(c.s, c.t)?);
        }
        Ok(Instance {
            tree,
            customers,
            paths,
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn customer_count(&self) -> usize {
        self.customers.len()
    }

    /// The resolved desired path of customer `i`.
    pub fn path(&self, i: usize) -> &[EdgeId] {
        &self.paths[i]
    }

    pub fn max_budget(&self) -> Rat {
        self.customers
            .iter()
            .map(|c| c.budget.clone())
            .max()
            .unwrap_or_else(Rat::zero)
    }
}

/// Non-negative price per edge, indexed by edge id. Edges without an
/// explicit price default to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricingScheme {
    prices: Vec<Rat>,
}

impl PricingScheme {
    pub fn zero(edge_count: usize) -> Self {
        PricingScheme {
            prices: vec![Rat::zero(); edge_count],
        }
    }

    pub fn from_prices(prices: Vec<Rat>) -> Result<Self, Error> {
        for (e, p) in prices.iter().enumerate() {
            if *p < Rat::zero() {
                return Err(Error::NegativePrice(e));
            }
        }
        Ok(PricingScheme { prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn price(&self, e: EdgeId) -> &Rat {
        &self.prices[e]
    }

    pub fn set(&mut self, e: EdgeId, p: Rat) {
        debug_assert!(p >= Rat::zero());
        self.prices[e] = p;
    }

    pub fn prices(&self) -> &[Rat] {
        &self.prices
    }

    /// Total price over a set of edges.
    pub fn total<'a, I: IntoIterator<Item = &'a EdgeId>>(&self, edges: I) -> Rat {
        edges
            .into_iter()
            .fold(Rat::zero(), |acc, &e| acc + &self.prices[e])
    }
}

/// The price of one customer path split around a vertex set: the part from
/// `s` to the first set vertex, the part from the last set vertex to `t`,
/// and the middle. The three parts always sum to the full path price.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevenueBreakdown {
    pub r_s: Rat,
    pub r_t: Rat,
    pub r_m: Rat,
}

impl RevenueBreakdown {
    pub fn total(&self) -> Rat {
        &self.r_s + &self.r_t + &self.r_m
    }
}

/// Total revenue and the per-customer amounts under `scheme`. A customer
/// purchases iff her path price does not exceed her budget (equality buys).
pub fn evaluate_revenue(
    instance: &Instance,
    scheme: &PricingScheme,
) -> Result<(Rat, Vec<Rat>), Error> {
    if scheme.len() != instance.tree().edge_count() {
        return Err(Error::SchemeSize {
            got: scheme.len(),
            want: instance.tree().edge_count(),
        });
    }
    let mut per_customer = Vec::with_capacity(instance.customer_count());
    let mut total = Rat::zero();
    for (i, c) in instance.customers().iter().enumerate() {
        let price = scheme.total(instance.path(i));
        if price <= c.budget {
            total += &price;
            per_customer.push(price);
        } else {
            per_customer.push(Rat::zero());
        }
    }
    Ok((total, per_customer))
}

/// Splits the path price of customer `i` around `vertex_set`.
///
/// `r_s` is the price of the subpath from `s` to its nearest set vertex
/// along the path, `r_t` the symmetric part at `t`, `r_m` the remainder.
/// Errors when the path avoids the set entirely.
pub fn revenue_breakdown(
    instance: &Instance,
    scheme: &PricingScheme,
    vertex_set: &BTreeSet<VertexId>,
    customer: usize,
) -> Result<RevenueBreakdown, Error> {
    if scheme.len() != instance.tree().edge_count() {
        return Err(Error::SchemeSize {
            got: scheme.len(),
            want: instance.tree().edge_count(),
        });
    }
    let c = &instance.customers()[customer];
    let (edges, verts) = instance.tree().path_with_vertices(c.s, c.t)?;
    let first = verts.iter().position(|v| vertex_set.contains(v));
    let last = verts.iter().rposition(|v| vertex_set.contains(v));
    let (first, last) = match (first, last) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::PathMissesSet),
    };
    // Edge j connects verts[j] and verts[j + 1].
    let r_s = scheme.total(&edges[..first]);
    let r_m = scheme.total(&edges[first..last]);
    let r_t = scheme.total(&edges[last..]);
    Ok(RevenueBreakdown { r_s, r_t, r_m })
}

/// Purchase-gated breakdown sums over all customers: `(Σ (r_s + r_t), Σ r_m)`
/// counting only customers who buy under `scheme`. This is the quantity the
/// two scenario hypotheses are stated in.
pub fn revenue_part_sums(
    instance: &Instance,
    scheme: &PricingScheme,
    vertex_set: &BTreeSet<VertexId>,
) -> Result<(Rat, Rat), Error> {
    if scheme.len() != instance.tree().edge_count() {
        return Err(Error::SchemeSize {
            got: scheme.len(),
            want: instance.tree().edge_count(),
        });
    }
    let mut ends = Rat::zero();
    let mut middle = Rat::zero();
    for (i, c) in instance.customers().iter().enumerate() {
        if scheme.total(instance.path(i)) > c.budget {
            continue; // did not buy
        }
        let b = revenue_breakdown(instance, scheme, vertex_set, i)?;
        ends += &b.r_s + &b.r_t;
        middle += &b.r_m;
    }
    Ok((ends, middle))
}
