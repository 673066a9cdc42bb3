//! Exact brute-force optimal pricing for tiny instances, and the
//! grid-rounding construction used to audit the segment-guessing bounds.
//!
//! The oracle enumerates every winner subset W of customers; for a fixed W
//! it maximizes the summed path prices of W subject to each member's
//! budget, a small linear program solved exactly over rationals. The best
//! scheme over all subsets is the optimum.

use num_traits::Zero;

use crate::decompose::SkeletonInfo;
use crate::error::Error;
use crate::model::{evaluate_revenue, EdgeId, Instance, PricingScheme};
use crate::rational::Rat;
use crate::solver::GammaGrid;

pub const DEFAULT_MAX_EDGES: usize = 8;
pub const DEFAULT_MAX_CUSTOMERS: usize = 8;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub opt_scheme: PricingScheme,
    pub opt_revenue: Rat,
    /// Customers who purchase under the optimal scheme.
    pub winner_set: Vec<usize>,
}

/// Exact optimum under the default size guard.
pub fn brute_force_opt(instance: &Instance) -> Result<OracleResult, Error> {
    brute_force_opt_with_limits(instance, DEFAULT_MAX_EDGES, DEFAULT_MAX_CUSTOMERS)
}

/// Exact optimum with explicit size guards. Runtime is exponential in the
/// customer count.
pub fn brute_force_opt_with_limits(
    instance: &Instance,
    max_edges: usize,
    max_customers: usize,
) -> Result<OracleResult, Error> {
    let m = instance.tree().edge_count();
    let n = instance.customer_count();
    if m > max_edges || n > max_customers {
        return Err(Error::OracleTooLarge {
            edges: m,
            customers: n,
            max_edges,
            max_customers,
        });
    }

    let mut best_scheme = PricingScheme::zero(m);
    let mut best_revenue = Rat::zero();

    for mask in 0u32..(1 << n) {
        let winners: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if winners.is_empty() {
            continue; // the all-zero scheme is the baseline
        }
        let scheme = max_prices_for_winners(instance, &winners)?;
        let (revenue, _) = evaluate_revenue(instance, &scheme)?;
        if revenue > best_revenue {
            best_revenue = revenue;
            best_scheme = scheme;
        }
    }

    let (actual, per_customer) = evaluate_revenue(instance, &best_scheme)?;
    debug_assert_eq!(actual, best_revenue);
    let winner_set = instance
        .customers()
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !per_customer[*i].is_zero() || best_scheme.total(instance.path(*i)) <= c.budget
        })
        .map(|(i, _)| i)
        .collect();
    Ok(OracleResult {
        opt_scheme: best_scheme,
        opt_revenue: best_revenue,
        winner_set,
    })
}

/// Maximizes the summed path prices of `winners` subject to their budgets,
/// prices >= 0, and zero prices outside the winners' paths.
fn max_prices_for_winners(instance: &Instance, winners: &[usize]) -> Result<PricingScheme, Error> {
    let m = instance.tree().edge_count();
    // Only edges on some winner path are priced; the rest stay at zero.
    let mut active: Vec<EdgeId> = winners
        .iter()
        .flat_map(|&i| instance.path(i).iter().copied())
        .collect();
    active.sort_unstable();
    active.dedup();
    let col_of = |e: EdgeId| active.binary_search(&e).expect("active edge");

    // Objective: each edge counted once per winner path containing it.
    let mut objective = vec![Rat::zero(); active.len()];
    let mut rows = Vec::with_capacity(winners.len());
    let mut rhs = Vec::with_capacity(winners.len());
    for &i in winners {
        let mut row = vec![Rat::zero(); active.len()];
        for &e in instance.path(i) {
            let c = col_of(e);
            row[c] = Rat::from_integer(1.into());
            objective[c] += Rat::from_integer(1.into());
        }
        rows.push(row);
        rhs.push(instance.customers()[i].budget.clone());
    }

    let solution = simplex_max(&objective, &rows, &rhs);
    let mut scheme = PricingScheme::zero(m);
    for (c, &e) in active.iter().enumerate() {
        scheme.set(e, solution[c].clone());
    }
    Ok(scheme)
}

/// Textbook primal simplex with Bland's rule over exact rationals, for
/// `max c.x  s.t.  A.x <= b, x >= 0` with `b >= 0` (the slack basis is
/// feasible, so no phase one is needed). Returns the optimal `x`.
fn simplex_max(objective: &[Rat], rows: &[Vec<Rat>], rhs: &[Rat]) -> Vec<Rat> {
    let n = objective.len();
    let m = rows.len();
    let cols = n + m;
    // Tableau rows augmented with slack columns; basis starts as slacks.
    let mut table: Vec<Vec<Rat>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut full = Vec::with_capacity(cols);
            full.extend(row.iter().cloned());
            for j in 0..m {
                full.push(if i == j {
                    Rat::from_integer(1.into())
                } else {
                    Rat::zero()
                });
            }
            full
        })
        .collect();
    let mut b: Vec<Rat> = rhs.to_vec();
    let mut reduced: Vec<Rat> = objective
        .iter()
        .cloned()
        .chain(std::iter::repeat_with(Rat::zero).take(m))
        .collect();
    let mut basis: Vec<usize> = (n..cols).collect();

    // Bland: entering variable is the lowest index with positive reduced
    // cost; ratio ties resolve to the smallest basis variable.
    while let Some(enter) = (0..cols).find(|&j| reduced[j] > Rat::zero()) {
        let mut leave: Option<usize> = None;
        let mut best_ratio: Option<Rat> = None;
        for i in 0..m {
            if table[i][enter] > Rat::zero() {
                let ratio = &b[i] / &table[i][enter];
                let better = match &best_ratio {
                    None => true,
                    Some(cur) if &ratio < cur => true,
                    Some(cur) if &ratio == cur => {
                        basis[i] < basis[leave.expect("ratio implies row")]
                    }
                    _ => false,
                };
                if better {
                    best_ratio = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let leave = leave.expect("budget rows bound every priced edge");
        let pivot = table[leave][enter].clone();
        for v in table[leave].iter_mut() {
            *v /= &pivot;
        }
        b[leave] /= &pivot;
        let pivot_row = table[leave].clone();
        let pivot_rhs = b[leave].clone();
        for i in 0..m {
            if i == leave || table[i][enter].is_zero() {
                continue;
            }
            let factor = table[i][enter].clone();
            for (v, p) in table[i].iter_mut().zip(&pivot_row) {
                *v -= &factor * p;
            }
            b[i] -= &factor * &pivot_rhs;
        }
        if !reduced[enter].is_zero() {
            let factor = reduced[enter].clone();
            for (v, p) in reduced.iter_mut().zip(&pivot_row) {
                *v -= &factor * p;
            }
        }
        basis[leave] = enter;
    }

    let mut x = vec![Rat::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = b[i].clone();
        }
    }
    x
}

/// Rounds a scheme's segment totals onto the grid: prices are first capped
/// at `b_max`; a segment whose total falls below the smallest positive
/// grid value is zeroed, otherwise its edges are scaled uniformly so the
/// total hits the largest grid value not exceeding it (a factor of at
/// least one half).
pub fn gamma_round(
    instance: &Instance,
    scheme: &PricingScheme,
    skeleton: &SkeletonInfo,
    grid: &GammaGrid,
) -> Result<PricingScheme, Error> {
    let tree = instance.tree();
    if scheme.len() != tree.edge_count() {
        return Err(Error::SchemeSize {
            got: scheme.len(),
            want: tree.edge_count(),
        });
    }
    let mut rounded = scheme.clone();
    for e in 0..tree.edge_count() {
        if rounded.price(e) > &grid.b_max {
            rounded.set(e, grid.b_max.clone());
        }
    }
    let threshold = grid.values.get(1);
    for idx in 0..skeleton.segments.len() {
        let edges = skeleton.segment_edges(tree, idx);
        let total = rounded.total(&edges);
        if total.is_zero() {
            continue;
        }
        match threshold {
            Some(smallest) if &total >= smallest => {
                let gamma = grid
                    .round_down(&total)
                    .expect("grid contains zero")
                    .clone();
                let factor = &gamma / &total;
                for &e in &edges {
                    let scaled = rounded.price(e) * &factor;
                    rounded.set(e, scaled);
                }
            }
            _ => {
                for &e in &edges {
                    rounded.set(e, Rat::zero());
                }
            }
        }
    }
    Ok(rounded)
}
