//! The classify-and-select driver: recursive balanced decomposition of the
//! tree, customer classes per recursion level, independent per-class
//! solving, gluing, and best-class selection.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::decompose::{decompose_subset, trivial_decomposition_subset, Decomposition};
use crate::error::Error;
use crate::model::{evaluate_revenue, Customer, EdgeId, Instance, PricingScheme};
use crate::rational::Rat;
use crate::solver::{mix_seed, solve_decomposition, Mode, SolveStats, SolverConfig, SubInstance};

/// Decomposition arity: the smallest k >= 2 with `m <= 2^(k^2)`, i.e.
/// ceil(sqrt(log2 m)) computed in exact integer arithmetic.
pub fn choose_k(m: usize) -> usize {
    assert!(m >= 1, "choose_k needs at least one edge");
    let mut r: u32 = 1;
    while r * r < 127 && (m as u128) > (1u128 << (r * r)) {
        r += 1;
    }
    (r as usize).max(2)
}

/// ceil((log2 m)^exponent), clamped to >= 2. Only exponents in (0, 1) make
/// the class count sublogarithmic; 1/2 is the default and the exact path.
pub fn choose_k_with_exponent(m: usize, exponent: f64) -> usize {
    assert!(m >= 1);
    if (exponent - 0.5).abs() < 1e-12 {
        return choose_k(m);
    }
    let k = (m as f64).log2().powf(exponent).ceil() as usize;
    k.max(2)
}

/// True iff no single subtree of the decomposition contains every edge of
/// the path. A separated path necessarily crosses a border vertex.
pub fn is_separated(path: &[EdgeId], decomposition: &Decomposition) -> bool {
    assert!(!path.is_empty(), "empty paths cannot be classified");
    let first = decomposition
        .subtree_of(path[0])
        .expect("path edge inside the decomposition");
    let part = &decomposition.subtrees()[first];
    !path[1..].iter().all(|e| part.binary_search(e).is_ok())
}

/// One decomposed subtree at some recursion level together with the
/// customers it separates.
#[derive(Debug, Clone)]
pub struct LevelEntry {
    pub subtree: Vec<EdgeId>,
    pub decomposition: Decomposition,
    pub separated: Vec<usize>,
}

/// The full classification: customer classes per level plus the terminal
/// class of single-edge paths that no decomposition ever separates.
#[derive(Debug, Clone)]
pub struct ClassifiedInstance {
    pub k: usize,
    pub levels: Vec<Vec<LevelEntry>>,
    pub terminal: BTreeMap<EdgeId, Vec<usize>>,
}

impl ClassifiedInstance {
    /// Number of recursion levels L (the terminal class is not a level).
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn terminal_customer_count(&self) -> usize {
        self.terminal.values().map(Vec::len).sum()
    }
}

/// Recursively decomposes the tree (k-balanced while a subtree has at
/// least k edges, trivially below that) and assigns every customer to the
/// level at which her path is first separated, or to the terminal class.
pub fn classify(instance: &Instance) -> Result<ClassifiedInstance, Error> {
    classify_with_k(instance, choose_k(instance.tree().edge_count().max(1)))
}

pub fn classify_with_k(instance: &Instance, k: usize) -> Result<ClassifiedInstance, Error> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    let tree = instance.tree();
    let mut terminal: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    let mut levels: Vec<Vec<LevelEntry>> = Vec::new();
    if tree.edge_count() == 0 {
        // A single-vertex tree admits no paths and no decomposition.
        return Ok(ClassifiedInstance {
            k,
            levels,
            terminal,
        });
    }
    let mut frontier: Vec<(Vec<EdgeId>, Vec<usize>)> = vec![(
        (0..tree.edge_count()).collect(),
        (0..instance.customer_count()).collect(),
    )];

    while !frontier.is_empty() {
        let mut entries = Vec::new();
        let mut next = Vec::new();
        for (subtree, customers) in frontier.drain(..) {
            if subtree.len() == 1 {
                // Single-edge paths are never separated; they terminate here.
                terminal.entry(subtree[0]).or_default().extend(customers);
                continue;
            }
            let decomposition = if subtree.len() >= k {
                decompose_subset(tree, subtree.clone(), k)?.0
            } else {
                trivial_decomposition_subset(tree, &subtree)?
            };
            let mut separated = Vec::new();
            let mut per_child: Vec<Vec<usize>> = vec![Vec::new(); decomposition.k()];
            for i in customers {
                let path = instance.path(i);
                if is_separated(path, &decomposition) {
                    separated.push(i);
                } else {
                    let child = decomposition
                        .subtree_of(path[0])
                        .expect("path inside subtree");
                    per_child[child].push(i);
                }
            }
            for (child, part) in decomposition.subtrees().iter().enumerate() {
                let custs = std::mem::take(&mut per_child[child]);
                if part.len() == 1 {
                    if !custs.is_empty() {
                        terminal.entry(part[0]).or_default().extend(custs);
                    }
                } else {
                    next.push((part.clone(), custs));
                }
            }
            entries.push(LevelEntry {
                subtree,
                decomposition,
                separated,
            });
        }
        if !entries.is_empty() {
            levels.push(entries);
        }
        frontier = next;
    }

    Ok(ClassifiedInstance {
        k,
        levels,
        terminal,
    })
}

/// Optimal single-item pricing: the price is one of the budgets, revenue is
/// `price * |{i : b_i >= price}|`, ties resolved to the smallest price.
pub fn single_edge_pricing(budgets: &[Rat]) -> Result<(Rat, Rat), Error> {
    if budgets.is_empty() {
        return Err(Error::EmptyBudgets);
    }
    let mut candidates: Vec<&Rat> = budgets.iter().collect();
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(Rat, Rat)> = None;
    for price in candidates {
        let buyers = budgets.iter().filter(|b| *b >= price).count();
        let revenue = price * Rat::from_integer((buyers as u64).into());
        match &best {
            Some((_, cur)) if *cur >= revenue => {}
            _ => best = Some((price.clone(), revenue)),
        }
    }
    Ok(best.expect("nonempty candidates"))
}

/// Revenue and label of one class scheme.
#[derive(Debug, Clone)]
pub struct ClassReport {
    pub label: String,
    pub revenue: Rat,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub k: usize,
    /// Number of recursion levels L.
    pub levels: usize,
    pub classes: Vec<ClassReport>,
    pub chosen_class: usize,
    pub revenue: Rat,
    pub stats: SolveStats,
    pub wall_ms: u128,
}

/// End-to-end solve: classify, solve every class independently, glue the
/// per-subtree schemes of each class, evaluate each glued scheme against
/// the full instance, and keep the best.
pub fn solve_full(
    instance: &Instance,
    mode: Mode,
    config: &SolverConfig,
) -> Result<(PricingScheme, SolveReport), Error> {
    let start = Instant::now();
    let tree = instance.tree();
    let m = tree.edge_count();
    let classified = classify(instance)?;

    let mut stats = SolveStats::default();
    let mut classes = Vec::new();
    let mut schemes = Vec::new();

    for (level_idx, entries) in classified.levels.iter().enumerate() {
        let mut scheme = PricingScheme::zero(m);
        for (entry_idx, entry) in entries.iter().enumerate() {
            if entry.separated.is_empty() {
                continue;
            }
            let customers: Vec<Customer> = entry
                .separated
                .iter()
                .map(|&i| instance.customers()[i].clone())
                .collect();
            let sub = SubInstance::new(tree, customers)?;
            let sub_config = SolverConfig {
                seed: mix_seed(config.seed, level_idx as u64, entry_idx as u64),
                ..config.clone()
            };
            let sol = solve_decomposition(&sub, &entry.decomposition, mode, &sub_config)?;
            for e in entry.decomposition.all_edges() {
                scheme.set(e, sol.scheme.price(e).clone());
            }
            stats.scenario_one_outcomes += sol.stats.scenario_one_outcomes;
            stats.guesses_examined += sol.stats.guesses_examined;
            stats.choices_examined += sol.stats.choices_examined;
            stats.used_fallback |= sol.stats.used_fallback;
        }
        let (revenue, _) = evaluate_revenue(instance, &scheme)?;
        classes.push(ClassReport {
            label: format!("level-{}", level_idx + 1),
            revenue,
        });
        schemes.push(scheme);
    }

    // Terminal class: optimal single-item pricing per edge, exact.
    let mut terminal_scheme = PricingScheme::zero(m);
    for (&edge, customer_ids) in &classified.terminal {
        let budgets: Vec<Rat> = customer_ids
            .iter()
            .map(|&i| instance.customers()[i].budget.clone())
            .collect();
        let (price, _) = single_edge_pricing(&budgets)?;
        terminal_scheme.set(edge, price);
    }
    let (terminal_revenue, _) = evaluate_revenue(instance, &terminal_scheme)?;
    classes.push(ClassReport {
        label: "terminal".into(),
        revenue: terminal_revenue,
    });
    schemes.push(terminal_scheme);

    let chosen = classes
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.revenue.cmp(&b.revenue).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("terminal class always present");

    let report = SolveReport {
        k: classified.k,
        levels: classified.level_count(),
        revenue: classes[chosen].revenue.clone(),
        chosen_class: chosen,
        classes,
        stats,
        wall_ms: start.elapsed().as_millis(),
    };
    Ok((schemes.swap_remove(chosen), report))
}
