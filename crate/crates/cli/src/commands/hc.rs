use mrfdens_core::graph::{maximal_cliques, DEFAULT_CLIQUE_CEILING};
use mrfdens_core::hcfactor::{max_reconstruction_error, DensityOracle, HcFactorization, PotentialTable};
use mrfdens_core::synth::TruthSpec;
use mrfdens_core::Error;
use serde::Serialize;

use super::{build_truth, run_config};
use crate::args::HcArgs;
use crate::error::CliResult;
use crate::io;

#[derive(Serialize)]
struct PotentialSummary {
    clique: Vec<usize>,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct Output {
    config: serde_json::Value,
    truth: TruthSpec,
    d: usize,
    table_q: usize,
    grid_points: u128,
    max_relative_error: f64,
    tolerance: f64,
    passed: bool,
    potentials: Vec<PotentialSummary>,
}

pub fn run(a: &HcArgs) -> CliResult<()> {
    let spec = build_truth(&a.truth)?;
    let truth = spec.build()?;
    let d = truth.graph().vertex_count();
    let cs = maximal_cliques(truth.graph(), DEFAULT_CLIQUE_CEILING)?;
    let oracle = DensityOracle::new(d, |x: &[f64]| truth.eval_unnormalized(x));
    let tables: Vec<PotentialTable> = HcFactorization::new(&oracle, &cs)?.tabulate(a.table_q)?;
    let err = max_reconstruction_error(&oracle, &tables, a.table_q)?;
    if let Some(path) = &a.potentials_out {
        io::write_file(path, io::to_json(&tables).as_bytes())?;
    }
    let passed = err < a.tolerance;
    let out = Output {
        config: run_config("hc-check", a),
        truth: spec,
        d,
        table_q: a.table_q,
        grid_points: (a.table_q as u128).pow(d as u32),
        max_relative_error: err,
        tolerance: a.tolerance,
        passed,
        potentials: tables
            .iter()
            .map(|t| PotentialSummary {
                clique: t.clique.clone(),
                min: t.min_value(),
                max: t.max_value(),
            })
            .collect(),
    };
    io::emit(a.out.as_deref(), &io::to_json(&out))?;
    if passed {
        Ok(())
    } else {
        Err(Error::Numeric(format!("reconstruction error {err:e} exceeds {:e}", a.tolerance)).into())
    }
}
