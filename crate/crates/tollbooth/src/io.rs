//! File formats: JSON instances and pricing schemes, JSON solve reports,
//! and dot export of decompositions.

use serde::{Deserialize, Serialize};

use crate::classify::SolveReport;
use crate::decompose::Decomposition;
use crate::error::Error;
use crate::model::{Customer, Instance, PricingScheme, Tree};
use crate::oracle::OracleResult;
use crate::rational::{format_rat, parse_rat};

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    customers: Vec<CustomerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CustomerFile {
    s: usize,
    t: usize,
    budget: String,
}

pub fn instance_from_json(text: &str) -> Result<Instance, Error> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::BadInstanceFile(e.to_string()))?;
    let tree = Tree::new(file.vertices, file.edges)?;
    let customers = file
        .customers
        .iter()
        .map(|c| Ok(Customer::new(c.s, c.t, parse_rat(&c.budget)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Instance::new(tree, customers)
}

pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        vertices: instance.tree().vertex_count(),
        edges: instance.tree().edges().to_vec(),
        customers: instance
            .customers()
            .iter()
            .map(|c| CustomerFile {
                s: c.s,
                t: c.t,
                budget: format_rat(&c.budget),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("instance serializes") + "\n"
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemeFile {
    prices: Vec<String>,
}

pub fn scheme_from_json(text: &str, expected_edges: usize) -> Result<PricingScheme, Error> {
    let file: SchemeFile =
        serde_json::from_str(text).map_err(|e| Error::BadInstanceFile(e.to_string()))?;
    if file.prices.len() != expected_edges {
        return Err(Error::SchemeSize {
            got: file.prices.len(),
            want: expected_edges,
        });
    }
    let prices = file
        .prices
        .iter()
        .map(|p| parse_rat(p))
        .collect::<Result<Vec<_>, Error>>()?;
    PricingScheme::from_prices(prices)
}

pub fn scheme_to_json(scheme: &PricingScheme) -> String {
    let file = SchemeFile {
        prices: scheme.prices().iter().map(format_rat).collect(),
    };
    serde_json::to_string_pretty(&file).expect("scheme serializes") + "\n"
}

#[derive(Debug, Serialize)]
struct ReportFile {
    k: usize,
    levels: usize,
    classes: Vec<ClassFile>,
    chosen_class: usize,
    revenue: String,
    scenario_one_outcomes: u64,
    guesses_examined: u64,
    choices_examined: u64,
    used_fallback: bool,
    wall_ms: u128,
}

#[derive(Debug, Serialize)]
struct ClassFile {
    label: String,
    revenue: String,
}

/// Report JSON; `wall_ms` can be suppressed for byte-reproducible output.
pub fn report_to_json(report: &SolveReport, include_timing: bool) -> String {
    let file = ReportFile {
        k: report.k,
        levels: report.levels,
        classes: report
            .classes
            .iter()
            .map(|c| ClassFile {
                label: c.label.clone(),
                revenue: format_rat(&c.revenue),
            })
            .collect(),
        chosen_class: report.chosen_class,
        revenue: format_rat(&report.revenue),
        scenario_one_outcomes: report.stats.scenario_one_outcomes,
        guesses_examined: report.stats.guesses_examined,
        choices_examined: report.stats.choices_examined,
        used_fallback: report.stats.used_fallback,
        wall_ms: if include_timing { report.wall_ms } else { 0 },
    };
    serde_json::to_string_pretty(&file).expect("report serializes") + "\n"
}

#[derive(Debug, Serialize)]
struct OracleFile {
    opt_revenue: String,
    prices: Vec<String>,
    winners: Vec<usize>,
}

pub fn oracle_to_json(result: &OracleResult) -> String {
    let file = OracleFile {
        opt_revenue: format_rat(&result.opt_revenue),
        prices: result.opt_scheme.prices().iter().map(format_rat).collect(),
        winners: result.winner_set.clone(),
    };
    serde_json::to_string_pretty(&file).expect("oracle result serializes") + "\n"
}

const DOT_COLORS: [&str; 8] = [
    "red", "blue", "green", "orange", "purple", "brown", "cyan", "magenta",
];

/// Graphviz rendering of a decomposition: edges colored and labeled by
/// subtree index, border vertices doubled.
pub fn decomposition_to_dot(tree: &Tree, decomposition: &Decomposition) -> String {
    let mut out = String::from("graph decomposition {\n");
    for v in decomposition.border_vertices() {
        out.push_str(&format!("  {v} [shape=doublecircle];\n"));
    }
    for (idx, part) in decomposition.subtrees().iter().enumerate() {
        let color = DOT_COLORS[idx % DOT_COLORS.len()];
        for &e in part {
            let (u, v) = tree.endpoints(e);
            out.push_str(&format!(
                "  {u} -- {v} [label=\"T{idx}\", color={color}];\n"
            ));
        }
    }
    out.push_str("}\n");
    out
}
