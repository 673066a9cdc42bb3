//! Exact solver for the single-source tollbooth problem on trees: every
//! customer wants the path from a common root to her target vertex.
//!
//! Rooted at the source, an optimal solution can be described by the
//! cumulative price of each root-to-vertex path. Cumulative prices are
//! non-decreasing toward the leaves and can be restricted to the set of
//! customer budgets (plus zero) without losing revenue, which makes a
//! per-vertex dynamic program over that candidate set exact.

use num_traits::Zero;

use crate::error::Error;
use crate::model::{PricingScheme, Tree, VertexId};
use crate::rational::Rat;

#[derive(Debug, Clone)]
pub struct SingleSourceInstance {
    pub tree: Tree,
    pub root: VertexId,
    /// `(target, budget)`; each customer wants the root-to-target path.
    pub customers: Vec<(VertexId, Rat)>,
}

impl SingleSourceInstance {
    pub fn new(
        tree: Tree,
        root: VertexId,
        customers: Vec<(VertexId, Rat)>,
    ) -> Result<Self, Error> {
        if root >= tree.vertex_count() {
            return Err(Error::InvalidVertex(root, tree.vertex_count()));
        }
        for (i, (target, budget)) in customers.iter().enumerate() {
            if *target >= tree.vertex_count() {
                return Err(Error::InvalidVertex(*target, tree.vertex_count()));
            }
            if *target == root {
                return Err(Error::DegeneratePath(i, root));
            }
            if *budget < Rat::zero() {
                return Err(Error::NegativeBudget(i));
            }
        }
        Ok(SingleSourceInstance {
            tree,
            root,
            customers,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SingleSourceSolution {
    pub scheme: PricingScheme,
    pub revenue: Rat,
}

/// Optimal pricing for a single-source instance.
///
/// Among optimal cumulative prices, ties are broken toward the smallest
/// value, which keeps every positive cumulative price pinned to the budget
/// of a customer who buys at exactly that price.
pub fn solve_single_source(inst: &SingleSourceInstance) -> Result<SingleSourceSolution, Error> {
    let tree = &inst.tree;
    let n_vertices = tree.vertex_count();
    let mut scheme = PricingScheme::zero(tree.edge_count());
    if inst.customers.is_empty() {
        return Ok(SingleSourceSolution {
            scheme,
            revenue: Rat::zero(),
        });
    }

    // Candidate cumulative prices: zero plus the distinct budgets.
    let mut candidates: Vec<Rat> = vec![Rat::zero()];
    candidates.extend(inst.customers.iter().map(|(_, b)| b.clone()));
    candidates.sort();
    candidates.dedup();
    let q = candidates.len();

    // Budgets of customers targeting each vertex, sorted, for gain lookups.
    let mut budgets_at: Vec<Vec<Rat>> = vec![Vec::new(); n_vertices];
    for (target, budget) in &inst.customers {
        budgets_at[*target].push(budget.clone());
    }
    for list in &mut budgets_at {
        list.sort();
    }

    // Rooted traversal order (children before parents when reversed).
    let mut order = Vec::with_capacity(n_vertices);
    let mut parent: Vec<Option<VertexId>> = vec![None; n_vertices];
    let mut stack = vec![inst.root];
    let mut seen = vec![false; n_vertices];
    seen[inst.root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, _) in tree.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                stack.push(w);
            }
        }
    }

    // best[v][j]: maximum revenue from customers targeting the subtree of v
    // when the cumulative price at v is candidates[j].
    // pick[v][j]: optimal candidate index at child v given parent index j.
    let mut best: Vec<Vec<Rat>> = vec![Vec::new(); n_vertices];
    let mut pick: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for &v in order.iter().rev() {
        let mut row = Vec::with_capacity(q);
        for (j, cum) in candidates.iter().enumerate() {
            // Customers at v paying `cum` are those with budget >= cum.
            let affording = budgets_at[v].len() - lower_bound(&budgets_at[v], cum);
            let mut value = cum * Rat::from_integer(affording.into());
            for &(w, _) in tree.neighbors(v) {
                if parent[w] == Some(v) {
                    value += &best[w][pick[w][j]];
                }
            }
            row.push(value);
        }
        best[v] = row;
        // Suffix argmax over the child's own row: for each lower bound j,
        // the best j' >= j, ties to the smaller candidate.
        let mut arg = vec![0usize; q];
        let mut cur = q - 1;
        for j in (0..q).rev() {
            if best[v][j] >= best[v][cur] {
                cur = j;
            }
            arg[j] = cur;
        }
        pick[v] = arg;
    }

    // Reconstruct edge prices top-down from the chosen cumulative levels.
    // The root sits at cumulative price zero (its path is empty).
    let revenue = best[inst.root][0].clone();
    let mut level: Vec<usize> = vec![0; n_vertices];
    for &v in &order {
        let j = level[v];
        for &(w, e) in tree.neighbors(v) {
            if parent[w] == Some(v) {
                let jw = pick[w][j];
                level[w] = jw;
                scheme.set(e, &candidates[jw] - &candidates[j]);
            }
        }
    }

    Ok(SingleSourceSolution { scheme, revenue })
}

fn lower_bound(sorted: &[Rat], x: &Rat) -> usize {
    sorted.partition_point(|b| b < x)
}

/// Cumulative root-to-vertex prices under `scheme`.
pub fn cumulative_prices(tree: &Tree, root: VertexId, scheme: &PricingScheme) -> Vec<Rat> {
    let mut cum = vec![Rat::zero(); tree.vertex_count()];
    let mut stack = vec![root];
    let mut seen = vec![false; tree.vertex_count()];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        for &(w, e) in tree.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                cum[w] = &cum[v] + scheme.price(e);
                stack.push(w);
            }
        }
    }
    cum
}

/// The prefix-budget property of single-source optima: cumulative prices
/// are non-decreasing away from the root, and every positive cumulative
/// price equals the budget of some customer who purchases her path at
/// exactly that price. This is what keeps Phase II leftovers non-negative:
/// every cumulative price is bounded by the largest budget.
pub fn has_prefix_budget_property(inst: &SingleSourceInstance, scheme: &PricingScheme) -> bool {
    let cum = cumulative_prices(&inst.tree, inst.root, scheme);
    for e in 0..inst.tree.edge_count() {
        if scheme.price(e) < &Rat::zero() {
            return false;
        }
    }
    for v in 0..inst.tree.vertex_count() {
        if cum[v].is_zero() {
            continue;
        }
        let witnessed = inst
            .customers
            .iter()
            .any(|(target, budget)| *budget == cum[v] && cum[*target] == cum[v]);
        if !witnessed {
            return false;
        }
    }
    true
}
