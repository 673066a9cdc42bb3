//! Seeded random instances: uniform labeled trees via Prüfer-sequence
//! decoding, plus customers with distinct endpoint pairs and budgets from a
//! configurable distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::Error;
use crate::model::{Customer, Instance, Tree};
use crate::rational::Rat;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetDist {
    /// Integers uniform in `1..=max`.
    UniformInt { max: u64 },
    /// `p/q` with numerator uniform in `1..=max_numer` and denominator
    /// uniform in `1..=max_denom`.
    UniformRational { max_numer: u64, max_denom: u64 },
}

impl BudgetDist {
    fn sample<R: Rng>(&self, rng: &mut R) -> Rat {
        match self {
            BudgetDist::UniformInt { max } => {
                Rat::from_integer(rng.random_range(1..=*max).into())
            }
            BudgetDist::UniformRational {
                max_numer,
                max_denom,
            } => {
                let p = rng.random_range(1..=*max_numer);
                let q = rng.random_range(1..=*max_denom);
                Rat::new(p.into(), q.into())
            }
        }
    }
}

/// Uniformly random labeled tree with `m` edges, by decoding a uniform
/// Prüfer sequence over `m + 1` vertices.
pub fn random_tree<R: Rng>(m: usize, rng: &mut R) -> Tree {
    assert!(m >= 1);
    let v = m + 1;
    let seq: Vec<usize> = (0..v.saturating_sub(2))
        .map(|_| rng.random_range(0..v))
        .collect();
    Tree::new(v, prufer_decode(v, &seq)).expect("decoded sequence is a tree")
}

fn prufer_decode(v: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1u32; v];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(v - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &s in seq {
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 && s < ptr {
            leaf = s;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, v - 1));
    edges
}

/// Deterministic random instance: tree, then `n` customers with distinct
/// unordered endpoint pairs and budgets from `dist`.
pub fn generate_instance(
    m: usize,
    n: usize,
    dist: &BudgetDist,
    seed: u64,
) -> Result<Instance, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(m, &mut rng);
    let v = m + 1;
    if n > v * (v - 1) / 2 {
        return Err(Error::TooManyCustomers(n, v));
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut customers = Vec::with_capacity(n);
    while customers.len() < n {
        let s = rng.random_range(0..v);
        let t = rng.random_range(0..v);
        if s == t || !pairs.insert((s.min(t), s.max(t))) {
            continue;
        }
        customers.push(Customer::new(s, t, dist.sample(&mut rng)));
    }
    Instance::new(tree, customers)
}
