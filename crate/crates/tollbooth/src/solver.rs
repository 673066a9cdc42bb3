//! The single-decomposition pricing algorithm: a best-of-two over an
//! endpoint scenario (subtree activation plus exact single-source pricing)
//! and a skeleton scenario (segment price guessing plus one of four edge
//! assignments per segment), with full enumeration of both sample spaces
//! in derandomized mode.

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::decompose::{edge_set_vertices, extract_skeleton, Decomposition, SkeletonInfo};
use crate::error::Error;
use crate::model::{Customer, EdgeId, PricingScheme, Tree, VertexId};
use crate::rational::Rat;
use crate::single_source::{solve_single_source, SingleSourceInstance};

/// A set of customers confined to (a subtree of) a shared tree; the unit
/// the per-decomposition solver works on.
#[derive(Debug, Clone)]
pub struct SubInstance<'a> {
    tree: &'a Tree,
    customers: Vec<Customer>,
    paths: Vec<Vec<EdgeId>>,
}

impl<'a> SubInstance<'a> {
    pub fn new(tree: &'a Tree, customers: Vec<Customer>) -> Result<Self, Error> {
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
        Ok(SubInstance {
            tree,
            customers,
            paths,
        })
    }

    pub fn tree(&self) -> &Tree {
        self.tree
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn customer_count(&self) -> usize {
        self.customers.len()
    }

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

    /// Revenue of `scheme` over this sub-instance's customers only.
    pub fn evaluate(&self, scheme: &PricingScheme) -> Rat {
        let mut total = Rat::zero();
        for (i, c) in self.customers.iter().enumerate() {
            let price = scheme.total(&self.paths[i]);
            if price <= c.budget {
                total += price;
            }
        }
        total
    }
}

/// The geometric grid of candidate segment totals:
/// `{0} ∪ {2^l · b_max / (4nm) : 0 <= l <= floor(log2(4 n m^2))}`.
#[derive(Debug, Clone)]
pub struct GammaGrid {
    pub values: Vec<Rat>,
    pub b_max: Rat,
    pub n: usize,
    pub m: usize,
}

impl GammaGrid {
    /// Largest grid value that does not exceed `x`, if any.
    pub fn round_down(&self, x: &Rat) -> Option<&Rat> {
        self.values.iter().rev().find(|v| *v <= x)
    }
}

/// Builds the grid for a sub-instance with `n` customers, `m` edges and
/// maximum budget `b_max`. An all-zero budget profile degenerates to `{0}`.
pub fn build_gamma_grid(n: usize, m: usize, b_max: &Rat) -> Result<GammaGrid, Error> {
    if n == 0 || m == 0 {
        return Err(Error::BadConfig(format!(
            "gamma grid needs n >= 1 and m >= 1, got n={n} m={m}"
        )));
    }
    let mut values = vec![Rat::zero()];
    if !b_max.is_zero() {
        let exp = (4u128 * n as u128 * (m as u128) * (m as u128)).ilog2();
        let base = b_max / Rat::from_integer((4 * n as u64 * m as u64).into());
        let mut cur = base;
        for _ in 0..=exp {
            values.push(cur.clone());
            cur = &cur * Rat::from_integer(2.into());
        }
    }
    Ok(GammaGrid {
        values,
        b_max: b_max.clone(),
        n,
        m,
    })
}

/// One guessed total price per segment, drawn from a [`GammaGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentGuess {
    pub values: Vec<Rat>,
}

/// The four per-segment price assignments of the randomized phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    FirstEdge,
    LastEdge,
    LeftRootedDp,
    RightRootedDp,
}

pub const ALL_SELECTORS: [Selector; 4] = [
    Selector::FirstEdge,
    Selector::LastEdge,
    Selector::LeftRootedDp,
    Selector::RightRootedDp,
];

/// One selector per segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentChoice {
    pub selectors: Vec<Selector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Randomized,
    Derandomized,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Cap on the number of segment-price guesses enumerated.
    pub max_guesses: u64,
    /// Cap on each uniform sample space (coin vectors, selector vectors).
    pub max_choices: u64,
    /// Trials for seeded sampling above a cap; zero disables the fallback
    /// and makes exceeding a cap an error.
    pub fallback_trials: u64,
    pub seed: u64,
    /// Emit a diagnostic line per guess batch on stderr.
    pub progress: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_guesses: 1_000_000,
            max_choices: 1_000_000,
            fallback_trials: 64,
            seed: 0,
            progress: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub scenario_one_outcomes: u64,
    pub guesses_examined: u64,
    pub choices_examined: u64,
    pub used_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct DecompositionSolution {
    pub scheme: PricingScheme,
    pub revenue: Rat,
    pub stats: SolveStats,
}

/// Scenario I: zero all skeleton edges, zero all inactive subtrees, and
/// price each active subtree by an exact single-source solve on its
/// skeleton-contracted copy.
pub fn scenario_one(
    sub: &SubInstance,
    decomposition: &Decomposition,
    skeleton: &SkeletonInfo,
    coins: &[bool],
) -> Result<PricingScheme, Error> {
    assert_eq!(coins.len(), decomposition.k(), "one coin per subtree");
    let tree = sub.tree();
    let mut scheme = PricingScheme::zero(tree.edge_count());
    for (j, part) in decomposition.subtrees().iter().enumerate() {
        if !coins[j] {
            continue;
        }
        let Some(contracted) = contract_subtree(tree, part, skeleton) else {
            continue;
        };
        // Customers with an endpoint strictly off the skeleton inside this
        // subtree; each is rooted at the contracted skeleton vertex with
        // her full budget. A separated customer has at most one endpoint
        // here.
        let mut targets = Vec::new();
        for c in sub.customers() {
            for x in [c.s, c.t] {
                if let Some(&local) = contracted.local.get(&x) {
                    if local != 0 {
                        targets.push((local, c.budget.clone()));
                    }
                }
            }
        }
        if targets.is_empty() {
            continue;
        }
        let inst = SingleSourceInstance::new(contracted.tree, 0, targets)?;
        let sol = solve_single_source(&inst)?;
        for (local_e, &global_e) in contracted.edge_map.iter().enumerate() {
            scheme.set(global_e, sol.scheme.price(local_e).clone());
        }
    }
    Ok(scheme)
}

struct Contracted {
    tree: Tree,
    /// Original vertex -> local id; every skeleton vertex maps to 0.
    local: HashMap<VertexId, usize>,
    /// Local edge id -> original edge id.
    edge_map: Vec<EdgeId>,
}

/// Contracts the skeleton portion of a subtree into a single root vertex
/// (local id 0). Returns `None` when nothing remains to price.
fn contract_subtree(tree: &Tree, part: &[EdgeId], skeleton: &SkeletonInfo) -> Option<Contracted> {
    let vertices = edge_set_vertices(tree, part);
    if !vertices.iter().any(|v| skeleton.vertices.contains(v)) {
        // A decomposition with two or more subtrees always places at least
        // one border vertex in each; nothing to do otherwise.
        return None;
    }
    let mut local: HashMap<VertexId, usize> = HashMap::new();
    let mut next = 1;
    for &v in &vertices {
        if skeleton.vertices.contains(&v) {
            local.insert(v, 0);
        } else {
            local.insert(v, next);
            next += 1;
        }
    }
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    for &e in part {
        if skeleton.skeleton_edges.contains(&e) {
            continue;
        }
        let (u, v) = tree.endpoints(e);
        edges.push((local[&u], local[&v]));
        edge_map.push(e);
    }
    if edges.is_empty() {
        return None;
    }
    let tree = Tree::new(next, edges).expect("contraction of a connected subtree is a tree");
    Some(Contracted {
        tree,
        local,
        edge_map,
    })
}

/// Precomputed relocation and segment membership for Scenario II, reused
/// across every (guess, choice) pair.
struct ScenarioTwoCtx {
    /// Per segment: ordered vertex list and aligned edge ids.
    segments: Vec<SegmentCtx>,
}

struct SegmentCtx {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeId>,
    /// Customers whose relocated path has an endpoint interior to this
    /// segment and exits through the first (left) or last (right) vertex.
    left: Vec<DpCustomer>,
    right: Vec<DpCustomer>,
}

#[derive(Clone)]
struct DpCustomer {
    /// Position of the relocated endpoint within the segment vertex list.
    pos: usize,
    budget: Rat,
    /// Indices of segments fully contained in the relocated path.
    contained: Vec<usize>,
}

impl ScenarioTwoCtx {
    fn new(sub: &SubInstance, skeleton: &SkeletonInfo) -> Self {
        let tree = sub.tree();
        let mut segments: Vec<SegmentCtx> = skeleton
            .segments
            .iter()
            .enumerate()
            .map(|(i, verts)| SegmentCtx {
                vertices: verts.clone(),
                edges: skeleton.segment_edges(tree, i),
                left: Vec::new(),
                right: Vec::new(),
            })
            .collect();
        // Interior vertices determine segment membership uniquely.
        let mut interior_of: HashMap<VertexId, (usize, usize)> = HashMap::new();
        for (i, seg) in segments.iter().enumerate() {
            for (pos, &v) in seg.vertices.iter().enumerate() {
                if pos > 0 && pos + 1 < seg.vertices.len() {
                    interior_of.insert(v, (i, pos));
                }
            }
        }
        for (ci, c) in sub.customers().iter().enumerate() {
            let verts = tree
                .path_vertices(c.s, c.t)
                .expect("customer path validated");
            let first = verts.iter().position(|v| skeleton.vertices.contains(v));
            let last = verts.iter().rposition(|v| skeleton.vertices.contains(v));
            let (Some(first), Some(last)) = (first, last) else {
                continue;
            };
            if first == last {
                continue; // relocated to a single vertex; buys for free
            }
            let relocated_vertices: BTreeSet<VertexId> =
                verts[first..=last].iter().copied().collect();
            let relocated_edges: BTreeSet<EdgeId> = sub.path(ci)[first..last].iter().copied().collect();
            let contained: Vec<usize> = segments
                .iter()
                .enumerate()
                .filter(|(_, seg)| seg.edges.iter().all(|e| relocated_edges.contains(e)))
                .map(|(i, _)| i)
                .collect();
            for endpoint in [verts[first], verts[last]] {
                let Some(&(si, pos)) = interior_of.get(&endpoint) else {
                    continue; // core endpoint, handled by whole segments
                };
                let seg = &mut segments[si];
                let cust = DpCustomer {
                    pos,
                    budget: c.budget.clone(),
                    contained: contained.clone(),
                };
                if relocated_vertices.contains(&seg.vertices[0]) {
                    seg.left.push(cust);
                } else {
                    debug_assert!(
                        relocated_vertices.contains(seg.vertices.last().unwrap()),
                        "path from an interior endpoint leaves through one end"
                    );
                    seg.right.push(cust);
                }
            }
        }
        ScenarioTwoCtx { segments }
    }

    fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Builds the full scheme for one (guess, choice) outcome. Non-skeleton
    /// edges stay at zero, so evaluating original paths already accounts
    /// for endpoint relocation.
    fn build(&self, edge_count: usize, guess: &SegmentGuess, choice: &AssignmentChoice) -> PricingScheme {
        assert_eq!(guess.values.len(), self.segments.len());
        assert_eq!(choice.selectors.len(), self.segments.len());
        let mut scheme = PricingScheme::zero(edge_count);
        for (si, seg) in self.segments.iter().enumerate() {
            let gamma = &guess.values[si];
            match choice.selectors[si] {
                Selector::FirstEdge => scheme.set(seg.edges[0], gamma.clone()),
                Selector::LastEdge => {
                    scheme.set(*seg.edges.last().unwrap(), gamma.clone());
                }
                Selector::LeftRootedDp => {
                    let verts: Vec<VertexId> = seg.vertices.clone();
                    let edges: Vec<EdgeId> = seg.edges.clone();
                    apply_segment_dp(&mut scheme, &verts, &edges, &seg.left, gamma, guess);
                }
                Selector::RightRootedDp => {
                    let verts: Vec<VertexId> = seg.vertices.iter().rev().copied().collect();
                    let edges: Vec<EdgeId> = seg.edges.iter().rev().copied().collect();
                    let flipped: Vec<DpCustomer> = seg
                        .right
                        .iter()
                        .map(|c| DpCustomer {
                            pos: seg.vertices.len() - 1 - c.pos,
                            budget: c.budget.clone(),
                            contained: c.contained.clone(),
                        })
                        .collect();
                    apply_segment_dp(&mut scheme, &verts, &edges, &flipped, gamma, guess);
                }
            }
            debug_assert_eq!(
                scheme.total(&seg.edges),
                guess.values[si],
                "segment total must equal its guessed price"
            );
        }
        scheme
    }
}

/// Prices a segment from its root end: an exact single-source solve over
/// the prefix excluding the far edge, then the leftover on the far edge.
/// The leftover is non-negative because every cumulative price the solver
/// emits equals some capped budget, and all budgets are capped at `gamma`.
fn apply_segment_dp(
    scheme: &mut PricingScheme,
    verts: &[VertexId],
    edges: &[EdgeId],
    customers: &[DpCustomer],
    gamma: &Rat,
    guess: &SegmentGuess,
) {
    let len = verts.len();
    let mut spent = Rat::zero();
    if len > 2 {
        let prefix_vertices = len - 1;
        let local_edges: Vec<(usize, usize)> = (0..prefix_vertices - 1).map(|i| (i, i + 1)).collect();
        let tree = Tree::new(prefix_vertices, local_edges).expect("path tree");
        let mut targets = Vec::new();
        for c in customers {
            let already: Rat = c
                .contained
                .iter()
                .fold(Rat::zero(), |acc, &i| acc + &guess.values[i]);
            let residual = &c.budget - &already;
            if residual < Rat::zero() {
                continue; // cannot afford the guessed complete segments
            }
            let budget = residual.min(gamma.clone());
            debug_assert!(c.pos >= 1 && c.pos <= len - 2);
            targets.push((c.pos, budget));
        }
        if !targets.is_empty() {
            let inst = SingleSourceInstance::new(tree, 0, targets).expect("valid segment instance");
            let sol = solve_single_source(&inst).expect("segment solve");
            for (local, &global) in edges[..prefix_vertices - 1].iter().enumerate() {
                let p = sol.scheme.price(local).clone();
                spent += &p;
                scheme.set(global, p);
            }
        }
    }
    let leftover = gamma - &spent;
    assert!(
        leftover >= Rat::zero(),
        "segment leftover must be non-negative"
    );
    scheme.set(*edges.last().unwrap(), leftover);
}

/// Scenario II for one guess and one assignment choice: non-skeleton edges
/// free, endpoints relocated to the skeleton, and every segment priced to
/// its guessed total.
pub fn scenario_two(
    sub: &SubInstance,
    skeleton: &SkeletonInfo,
    guess: &SegmentGuess,
    choice: &AssignmentChoice,
) -> Result<PricingScheme, Error> {
    if !skeleton.has_edges() {
        return Err(Error::BadConfig(
            "scenario II needs a skeleton with at least one edge".into(),
        ));
    }
    let ctx = ScenarioTwoCtx::new(sub, skeleton);
    Ok(ctx.build(sub.tree().edge_count(), guess, choice))
}

/// Which sample space [`expected_revenue`] averages over.
pub enum Scenario {
    /// All `2^k` subtree activation vectors.
    One,
    /// All `4^|segments|` assignment choices for a fixed guess.
    Two { guess: SegmentGuess },
}

/// Exact expected revenue: the uniform average of the full sample space.
pub fn expected_revenue(
    sub: &SubInstance,
    decomposition: &Decomposition,
    skeleton: &SkeletonInfo,
    scenario: &Scenario,
    cap: u64,
) -> Result<Rat, Error> {
    match scenario {
        Scenario::One => {
            let k = decomposition.k();
            let space = if k < 127 { 1u128 << k } else { u128::MAX };
            if space > cap as u128 {
                return Err(Error::CapExceeded { space, cap });
            }
            let mut total = Rat::zero();
            for mask in 0..space {
                let coins: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
                let scheme = scenario_one(sub, decomposition, skeleton, &coins)?;
                total += sub.evaluate(&scheme);
            }
            Ok(total / Rat::from_integer((space as u64).into()))
        }
        Scenario::Two { guess } => {
            let ctx = ScenarioTwoCtx::new(sub, skeleton);
            let nseg = ctx.segment_count();
            let space = 4u128.checked_pow(nseg as u32).ok_or(Error::CapExceeded {
                space: u128::MAX,
                cap,
            })?;
            if space > cap as u128 {
                return Err(Error::CapExceeded { space, cap });
            }
            let mut total = Rat::zero();
            let mut selectors = vec![0usize; nseg];
            loop {
                let choice = AssignmentChoice {
                    selectors: selectors.iter().map(|&s| ALL_SELECTORS[s]).collect(),
                };
                let scheme = ctx.build(sub.tree().edge_count(), guess, &choice);
                total += sub.evaluate(&scheme);
                if !advance_odometer(&mut selectors, 4) {
                    break;
                }
            }
            Ok(total / Rat::from_integer((space as u64).into()))
        }
    }
}

/// Advances a mixed-radix counter; returns false after wrapping to zero.
fn advance_odometer(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Solves one decomposition: Scenario I over activation vectors, Scenario
/// II over all segment-price guesses (and, derandomized, all assignment
/// choices), returning the best scheme found. Iteration order is fixed, so
/// ties resolve to the first outcome encountered.
pub fn solve_decomposition(
    sub: &SubInstance,
    decomposition: &Decomposition,
    mode: Mode,
    config: &SolverConfig,
) -> Result<DecompositionSolution, Error> {
    for i in 0..sub.customer_count() {
        if !crate::classify::is_separated(sub.path(i), decomposition) {
            return Err(Error::NotSeparated(i));
        }
    }
    let skeleton = extract_skeleton(sub.tree(), decomposition);
    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut stats = SolveStats::default();
    let mut best: Option<(PricingScheme, Rat)> = None;

    let consider = |scheme: PricingScheme, best: &mut Option<(PricingScheme, Rat)>| {
        let revenue = sub.evaluate(&scheme);
        match best {
            Some((_, cur)) if *cur >= revenue => {}
            _ => *best = Some((scheme, revenue)),
        }
    };

    // Scenario I.
    let k = decomposition.k();
    match mode {
        Mode::Randomized => {
            let coins: Vec<bool> = (0..k).map(|_| rng.random()).collect();
            let scheme = scenario_one(sub, decomposition, &skeleton, &coins)?;
            stats.scenario_one_outcomes += 1;
            consider(scheme, &mut best);
        }
        Mode::Derandomized => {
            let space = 1u128 << k.min(127);
            if space <= config.max_choices as u128 {
                for mask in 0..space {
                    let coins: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
                    let scheme = scenario_one(sub, decomposition, &skeleton, &coins)?;
                    stats.scenario_one_outcomes += 1;
                    consider(scheme, &mut best);
                }
            } else if config.fallback_trials == 0 {
                return Err(Error::CapExceeded {
                    space,
                    cap: config.max_choices,
                });
            } else {
                stats.used_fallback = true;
                for _ in 0..config.fallback_trials {
                    let coins: Vec<bool> = (0..k).map(|_| rng.random()).collect();
                    let scheme = scenario_one(sub, decomposition, &skeleton, &coins)?;
                    stats.scenario_one_outcomes += 1;
                    consider(scheme, &mut best);
                }
            }
        }
    }

    // Scenario II.
    if skeleton.has_edges() {
        let m_sub = decomposition.all_edges().len();
        let grid = build_gamma_grid(sub.customer_count(), m_sub, &sub.max_budget())?;
        let ctx = ScenarioTwoCtx::new(sub, &skeleton);
        let nseg = ctx.segment_count();
        let gsize = grid.values.len() as u128;
        let total_guesses = gsize.checked_pow(nseg as u32);

        let enumerate_all = total_guesses.is_some_and(|t| t <= config.max_guesses as u128);
        if !enumerate_all && config.fallback_trials == 0 {
            return Err(Error::CapExceeded {
                space: total_guesses.unwrap_or(u128::MAX),
                cap: config.max_guesses,
            });
        }

        let run_guess = |guess: &SegmentGuess,
                             rng: &mut StdRng,
                             stats: &mut SolveStats,
                             best: &mut Option<(PricingScheme, Rat)>|
         -> Result<(), Error> {
            stats.guesses_examined += 1;
            match mode {
                Mode::Randomized => {
                    let choice = AssignmentChoice {
                        selectors: (0..nseg)
                            .map(|_| ALL_SELECTORS[rng.random_range(0..4)])
                            .collect(),
                    };
                    stats.choices_examined += 1;
                    consider(ctx.build(sub.tree().edge_count(), guess, &choice), best);
                }
                Mode::Derandomized => {
                    let space = 4u128.checked_pow(nseg as u32);
                    if space.is_some_and(|s| s <= config.max_choices as u128) {
                        let mut digits = vec![0usize; nseg];
                        loop {
                            let choice = AssignmentChoice {
                                selectors: digits.iter().map(|&d| ALL_SELECTORS[d]).collect(),
                            };
                            stats.choices_examined += 1;
                            consider(ctx.build(sub.tree().edge_count(), guess, &choice), best);
                            if !advance_odometer(&mut digits, 4) {
                                break;
                            }
                        }
                    } else if config.fallback_trials == 0 {
                        return Err(Error::CapExceeded {
                            space: space.unwrap_or(u128::MAX),
                            cap: config.max_choices,
                        });
                    } else {
                        stats.used_fallback = true;
                        for _ in 0..config.fallback_trials {
                            let choice = AssignmentChoice {
                                selectors: (0..nseg)
                                    .map(|_| ALL_SELECTORS[rng.random_range(0..4)])
                                    .collect(),
                            };
                            stats.choices_examined += 1;
                            consider(ctx.build(sub.tree().edge_count(), guess, &choice), best);
                        }
                    }
                }
            }
            if config.progress && stats.guesses_examined.is_multiple_of(100_000) {
                eprintln!(
                    "solve: {} guesses examined, best revenue so far {}",
                    stats.guesses_examined,
                    best.as_ref()
                        .map(|(_, r)| r.to_string())
                        .unwrap_or_else(|| "0".into())
                );
            }
            Ok(())
        };

        if enumerate_all {
            let mut digits = vec![0usize; nseg];
            loop {
                let guess = SegmentGuess {
                    values: digits.iter().map(|&d| grid.values[d].clone()).collect(),
                };
                run_guess(&guess, &mut rng, &mut stats, &mut best)?;
                if !advance_odometer(&mut digits, grid.values.len()) {
                    break;
                }
            }
        } else {
            stats.used_fallback = true;
            for _ in 0..config.fallback_trials {
                let guess = SegmentGuess {
                    values: (0..nseg)
                        .map(|_| grid.values[rng.random_range(0..grid.values.len())].clone())
                        .collect(),
                };
                run_guess(&guess, &mut rng, &mut stats, &mut best)?;
            }
        }
    }

    let (scheme, revenue) = best.expect("scenario I always yields at least one outcome");
    Ok(DecompositionSolution {
        scheme,
        revenue,
        stats,
    })
}

/// Deterministic per-task seed derivation (splitmix64 over a combined key).
pub(crate) fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.rotate_left(32) ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{balanced_k_decomposition, trivial_decomposition};
    use crate::rational::{rat, rat_int};

    fn path_tree(n_edges: usize) -> Tree {
        Tree::new(n_edges + 1, (0..n_edges).map(|i| (i, i + 1)).collect()).unwrap()
    }

    #[test]
    fn gamma_grid_examples() {
        let g = build_gamma_grid(2, 4, &rat_int(8)).unwrap();
        let expect: Vec<Rat> = vec![
            rat_int(0),
            rat(1, 4),
            rat(1, 2),
            rat_int(1),
            rat_int(2),
            rat_int(4),
            rat_int(8),
            rat_int(16),
            rat_int(32),
        ];
        assert_eq!(g.values, expect);

        let g = build_gamma_grid(1, 2, &rat_int(1)).unwrap();
        let expect: Vec<Rat> = vec![
            rat_int(0),
            rat(1, 8),
            rat(1, 4),
            rat(1, 2),
            rat_int(1),
            rat_int(2),
        ];
        assert_eq!(g.values, expect);
    }

    #[test]
    fn gamma_grid_scales_linearly_in_b_max() {
        let g1 = build_gamma_grid(3, 5, &rat_int(4)).unwrap();
        let g2 = build_gamma_grid(3, 5, &rat_int(8)).unwrap();
        assert_eq!(g1.values.len(), g2.values.len());
        for (a, b) in g1.values.iter().zip(&g2.values) {
            assert_eq!(&(a * rat_int(2)), b);
        }
    }

    #[test]
    fn gamma_grid_shape() {
        for (n, m, b) in [(1, 1, 5i64), (3, 7, 2), (8, 12, 10), (5, 9, 1)] {
            let b = rat_int(b);
            let g = build_gamma_grid(n, m, &b).unwrap();
            let exp = (4u128 * n as u128 * m as u128 * m as u128).ilog2();
            assert_eq!(g.values.len() as u32, exp + 2);
            let smallest = &g.values[1];
            assert_eq!(
                smallest,
                &(&b / Rat::from_integer((4 * n as u64 * m as u64).into()))
            );
            for w in g.values[1..].windows(2) {
                assert_eq!(&w[0] * rat_int(2), w[1].clone());
            }
            // Top of the grid brackets m * b_max within a factor of two.
            let top = g.values.last().unwrap();
            let target = Rat::from_integer((m as u64).into()) * &b;
            assert!(top <= &target && top > &(&target / rat_int(2)));
        }
        let g = build_gamma_grid(2, 3, &Rat::zero()).unwrap();
        assert_eq!(g.values, vec![Rat::zero()]);
    }

    #[test]
    fn scenario_one_all_inactive_is_free() {
        let tree = path_tree(4);
        let d = balanced_k_decomposition(&tree, 2).unwrap();
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 4, rat_int(3))]).unwrap();
        let sk = extract_skeleton(&tree, &d);
        let scheme = scenario_one(&sub, &d, &sk, &[false, false]).unwrap();
        assert_eq!(scheme, PricingScheme::zero(4));
    }

    #[test]
    fn scenario_one_crossing_customer_expectation_is_half_budget() {
        // Two subtrees share one vertex; a single customer crosses it.
        let tree = path_tree(4);
        let d = balanced_k_decomposition(&tree, 2).unwrap();
        let sk = extract_skeleton(&tree, &d);
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 4, rat_int(6))]).unwrap();
        // Enumerate the four outcomes directly.
        let mut revenues = Vec::new();
        for mask in 0..4u32 {
            let coins = vec![mask & 1 == 1, mask & 2 == 2];
            let scheme = scenario_one(&sub, &d, &sk, &coins).unwrap();
            revenues.push(sub.evaluate(&scheme));
        }
        let total: Rat = revenues.iter().fold(Rat::zero(), |a, b| a + b);
        assert_eq!(total / rat_int(4), rat_int(3));
        let expected =
            expected_revenue(&sub, &d, &sk, &Scenario::One, 1 << 10).unwrap();
        assert_eq!(expected, rat_int(3));
    }

    #[test]
    fn scenario_two_invariant_examples() {
        // Path 0-1-2-3-4-5 decomposed into single edges: border = {1,2,3,4},
        // skeleton = edges 1,2,3, segments <1,2>, <2,3>, <3,4>.
        let tree = path_tree(5);
        let d = trivial_decomposition(&tree).unwrap();
        let sk = extract_skeleton(&tree, &d);
        assert_eq!(sk.segments.len(), 3);
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 5, rat_int(9))]).unwrap();
        let guess = SegmentGuess {
            values: vec![rat_int(4), rat_int(2), rat_int(1)],
        };
        for sel in ALL_SELECTORS {
            let choice = AssignmentChoice {
                selectors: vec![sel; 3],
            };
            let scheme = scenario_two(&sub, &sk, &guess, &choice).unwrap();
            for (i, want) in guess.values.iter().enumerate() {
                assert_eq!(&scheme.total(&sk.segment_edges(&tree, i)), want);
            }
            for e in 0..tree.edge_count() {
                assert!(scheme.price(e) >= &Rat::zero());
            }
        }
    }

    #[test]
    fn scenario_two_two_edge_segment_without_interior_customers() {
        // Parts {0}, {1,2}, {3} on a 4-edge path: borders {1, 3}, one
        // two-edge segment <1,2,3>. The crossing customer relocates to the
        // segment endpoints, so every selector faces an empty instance and
        // must still price the segment at its guess.
        let tree = path_tree(4);
        let d = decomposition_from_parts(&tree, vec![vec![0], vec![1, 2], vec![3]]);
        let sk = extract_skeleton(&tree, &d);
        assert_eq!(sk.segments, vec![vec![1, 2, 3]]);
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 4, rat_int(9))]).unwrap();
        let guess = SegmentGuess {
            values: vec![rat_int(4)],
        };
        for sel in ALL_SELECTORS {
            let choice = AssignmentChoice {
                selectors: vec![sel],
            };
            let scheme = scenario_two(&sub, &sk, &guess, &choice).unwrap();
            assert_eq!(scheme.total(&[1usize, 2]), rat_int(4), "{sel:?}");
            assert_eq!(scheme.price(0), &rat_int(0));
            assert_eq!(scheme.price(3), &rat_int(0));
        }
    }

    #[test]
    fn scenario_two_one_edge_segment_collapses() {
        // Path 0-1-2-3: skeleton is the single edge (1,2); all four
        // selectors must price it at the guess.
        let tree = path_tree(3);
        let d = trivial_decomposition(&tree).unwrap();
        let sk = extract_skeleton(&tree, &d);
        assert_eq!(sk.segments, vec![vec![1, 2]]);
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 3, rat_int(5))]).unwrap();
        let guess = SegmentGuess {
            values: vec![rat_int(4)],
        };
        for sel in ALL_SELECTORS {
            let choice = AssignmentChoice {
                selectors: vec![sel],
            };
            let scheme = scenario_two(&sub, &sk, &guess, &choice).unwrap();
            assert_eq!(scheme.price(1), &rat_int(4));
            assert_eq!(scheme.price(0), &rat_int(0));
            assert_eq!(scheme.price(2), &rat_int(0));
        }
    }

    #[test]
    fn scenario_two_left_dp_prices_prefix_then_leftover() {
        // Segment <v1, v2, v3, v4> with one customer whose relocated
        // endpoint is v2 exiting via v1, residual budget 3, guess 5:
        // selector 3 prices (v1,v2) at 3, (v2,v3) at 0, leftover 2.
        // Build it on a 5-edge path: vertices 1..4 are the segment.
        // Subtrees {0}, {1,2,3}, {4} give borders {1, 4}; the skeleton is
        // edges 1,2,3 with one segment <1,2,3,4>.
        let tree = path_tree(5);
        let parts = vec![vec![0], vec![1, 2, 3], vec![4]];
        let d = decomposition_from_parts(&tree, parts);
        let sk = extract_skeleton(&tree, &d);
        assert_eq!(sk.segments, vec![vec![1, 2, 3, 4]]);
        // Customer from vertex 0 to vertex 2: relocated endpoint v2 = 2
        // (interior), exits through vertex 1 = v1. Budget 3 (no complete
        // segments inside her path, so the residual stays 3).
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 2, rat_int(3))]).unwrap();
        let guess = SegmentGuess {
            values: vec![rat_int(5)],
        };
        let choice = AssignmentChoice {
            selectors: vec![Selector::LeftRootedDp],
        };
        let scheme = scenario_two(&sub, &sk, &guess, &choice).unwrap();
        assert_eq!(scheme.price(1), &rat_int(3));
        assert_eq!(scheme.price(2), &rat_int(0));
        assert_eq!(scheme.price(3), &rat_int(2));
        assert_eq!(scheme.total(&[1usize, 2, 3]), rat_int(5));
    }

    fn decomposition_from_parts(tree: &Tree, parts: Vec<Vec<EdgeId>>) -> Decomposition {
        Decomposition::from_parts(tree, parts).unwrap()
    }

    #[test]
    fn scenario_two_multi_segment_residuals() {
        // Path 0..6 with parts {0}, {1,2}, {3,4}, {5}: borders {1,3,5},
        // segments <1,2,3> and <3,4,5>. Guess (4, 5).
        //
        // Customer (0,4) budget 7 relocates to (1,4): segment <1,2,3> is
        // fully inside her path, so her residual on segment 1 is 7-4 = 3;
        // the left-rooted solve prices edge (3,4) at 3, leftover 2.
        //
        // Customer (6,2) budget 9 relocates to (5,2): segment <3,4,5> is
        // contained, residual 9-5 = 4 capped at the guess 4; the
        // right-rooted solve prices edge (2,3) at 4, leftover 0.
        let tree = path_tree(6);
        let d = decomposition_from_parts(&tree, vec![vec![0], vec![1, 2], vec![3, 4], vec![5]]);
        let sk = extract_skeleton(&tree, &d);
        assert_eq!(sk.segments, vec![vec![1, 2, 3], vec![3, 4, 5]]);
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(0, 4, rat_int(7)),
                Customer::new(6, 2, rat_int(9)),
            ],
        )
        .unwrap();
        let guess = SegmentGuess {
            values: vec![rat_int(4), rat_int(5)],
        };
        let choice = AssignmentChoice {
            selectors: vec![Selector::RightRootedDp, Selector::LeftRootedDp],
        };
        let scheme = scenario_two(&sub, &sk, &guess, &choice).unwrap();
        let want = [0, 0, 4, 3, 2, 0];
        for (e, w) in want.iter().enumerate() {
            assert_eq!(scheme.price(e), &rat_int(*w), "edge {e}");
        }
        assert_eq!(sub.evaluate(&scheme), rat_int(16));
    }

    #[test]
    fn solve_counts_guesses() {
        // Skeleton with one segment and a grid of 9 values: 9 guesses.
        let tree = path_tree(4);
        let parts = vec![vec![0, 1], vec![2, 3]];
        let d = decomposition_from_parts(&tree, parts);
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(1, 3, rat_int(8)),
                Customer::new(0, 4, rat_int(2)),
            ],
        )
        .unwrap();
        let sk = extract_skeleton(&tree, &d);
        assert!(!sk.has_edges());
        // Single border vertex: scenario II is skipped entirely.
        let sol = solve_decomposition(&sub, &d, Mode::Derandomized, &SolverConfig::default())
            .unwrap();
        assert_eq!(sol.stats.guesses_examined, 0);
        assert_eq!(sol.stats.scenario_one_outcomes, 4);

        // Three single-edge subtrees on a 3-edge path: borders {1,2},
        // skeleton edge (1,2), one segment; n=2, m=3 gives |grid| = 7.
        let tree = path_tree(3);
        let d = trivial_decomposition(&tree).unwrap();
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(0, 2, rat_int(4)),
                Customer::new(1, 3, rat_int(4)),
            ],
        )
        .unwrap();
        let grid = build_gamma_grid(2, 3, &rat_int(4)).unwrap();
        let sol = solve_decomposition(&sub, &d, Mode::Derandomized, &SolverConfig::default())
            .unwrap();
        assert_eq!(sol.stats.guesses_examined, grid.values.len() as u64);

        // Two segments square the guess count and the choice space is
        // 4^2 per guess.
        let tree = path_tree(6);
        let d = decomposition_from_parts(&tree, vec![vec![0], vec![1, 2], vec![3, 4], vec![5]]);
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(0, 4, rat_int(7)),
                Customer::new(6, 2, rat_int(9)),
            ],
        )
        .unwrap();
        let grid = build_gamma_grid(2, 6, &rat_int(9)).unwrap();
        let sol = solve_decomposition(&sub, &d, Mode::Derandomized, &SolverConfig::default())
            .unwrap();
        let g = grid.values.len() as u64;
        assert_eq!(sol.stats.guesses_examined, g * g);
        assert_eq!(sol.stats.choices_examined, g * g * 16);
    }

    #[test]
    fn cap_exceeded_without_fallback_errors() {
        let tree = path_tree(5);
        let parts = vec![vec![0], vec![1, 2, 3], vec![4]];
        let d = decomposition_from_parts(&tree, parts);
        let sub = SubInstance::new(&tree, vec![Customer::new(0, 5, rat_int(4))]).unwrap();
        let config = SolverConfig {
            max_guesses: 1,
            fallback_trials: 0,
            ..SolverConfig::default()
        };
        let err = solve_decomposition(&sub, &d, Mode::Derandomized, &config).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn zero_budgets_have_zero_expectation() {
        let tree = path_tree(5);
        let parts = vec![vec![0], vec![1, 2, 3], vec![4]];
        let d = decomposition_from_parts(&tree, parts);
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(0, 5, rat_int(0)),
                Customer::new(1, 4, rat_int(0)),
            ],
        )
        .unwrap();
        let sk = extract_skeleton(&tree, &d);
        let e1 = expected_revenue(&sub, &d, &sk, &Scenario::One, 1 << 10).unwrap();
        assert_eq!(e1, rat_int(0));
        let guess = SegmentGuess {
            values: vec![rat_int(0)],
        };
        let e2 = expected_revenue(&sub, &d, &sk, &Scenario::Two { guess }, 1 << 10).unwrap();
        assert_eq!(e2, rat_int(0));
    }

    #[test]
    fn derandomized_beats_expectation() {
        let tree = path_tree(5);
        let parts = vec![vec![0], vec![1, 2, 3], vec![4]];
        let d = decomposition_from_parts(&tree, parts);
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(0, 3, rat_int(5)),
                Customer::new(2, 5, rat_int(4)),
            ],
        )
        .unwrap();
        let sk = extract_skeleton(&tree, &d);
        let e1 = expected_revenue(&sub, &d, &sk, &Scenario::One, 1 << 20).unwrap();
        let sol =
            solve_decomposition(&sub, &d, Mode::Derandomized, &SolverConfig::default()).unwrap();
        assert!(sol.revenue >= e1);
        let grid = build_gamma_grid(2, 5, &sub.max_budget()).unwrap();
        let guess = SegmentGuess {
            values: vec![grid.values[3].clone()],
        };
        let e2 = expected_revenue(&sub, &d, &sk, &Scenario::Two { guess }, 1 << 20).unwrap();
        assert!(sol.revenue >= e2);
    }

    #[test]
    fn randomized_mode_is_seed_deterministic() {
        let tree = path_tree(6);
        let d = balanced_k_decomposition(&tree, 3).unwrap();
        let sub = SubInstance::new(
            &tree,
            vec![
                Customer::new(0, 6, rat_int(7)),
                Customer::new(1, 5, rat_int(3)),
            ],
        )
        .unwrap();
        let config = SolverConfig {
            seed: 42,
            ..SolverConfig::default()
        };
        let a = solve_decomposition(&sub, &d, Mode::Randomized, &config).unwrap();
        let b = solve_decomposition(&sub, &d, Mode::Randomized, &config).unwrap();
        assert_eq!(a.scheme, b.scheme);
        assert_eq!(a.revenue, b.revenue);
    }
}
