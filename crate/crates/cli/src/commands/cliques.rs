use mrfdens_core::graph::{clique_size_formula, maximal_cliques, CliqueBound};
use serde::Serialize;

use super::{build_graph, run_config};
use crate::args::CliquesArgs;
use crate::error::CliResult;
use crate::io;

#[derive(Serialize)]
struct Output {
    config: serde_json::Value,
    vertices: usize,
    edges: usize,
    fingerprint: String,
    clique_count: usize,
    max_clique_size: usize,
    /// Closed-form size for structured families, when the formula applies.
    formula: Option<CliqueBound>,
    cliques: Vec<Vec<usize>>,
}

pub fn run(a: &CliquesArgs) -> CliResult<()> {
    let built = build_graph(&a.graph)?;
    let g = &built.graph;
    let cs = maximal_cliques(g, a.graph.clique_ceiling)?;
    let formula = built
        .structured
        .as_ref()
        .and_then(|(family, dims)| clique_size_formula(*family, a.graph.power, dims).ok());
    log::info!("{} maximal cliques on {} vertices", cs.len(), g.vertex_count());
    let out = Output {
        config: run_config("cliques", a),
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        fingerprint: format!("{:016x}", cs.fingerprint),
        clique_count: cs.len(),
        max_clique_size: cs.max_size(),
        formula,
        cliques: cs.cliques,
    };
    io::emit(a.out.as_deref(), &io::to_json(&out))
}
