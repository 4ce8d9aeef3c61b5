use mrfdens_core::histfactor::HistogramDoc;
use mrfdens_core::scheffe::{scheffe_select, CandidateSet};
use mrfdens_core::ProductHistogram;
use serde::{Deserialize, Serialize};

use super::run_config;
use crate::args::ScheffeArgs;
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Deserialize)]
#[serde(untagged)]
enum CandidateFile {
    List(Vec<HistogramDoc>),
    Wrapped { candidates: Vec<HistogramDoc> },
}

#[derive(Serialize)]
struct Params {
    candidates: usize,
    n: usize,
    d: usize,
    b: usize,
}

#[derive(Serialize)]
struct Output {
    config: serde_json::Value,
    /// 1-based position of the winner in the candidate file.
    winner_index: usize,
    deltas: Vec<f64>,
    params: Params,
}

pub fn run(a: &ScheffeArgs) -> CliResult<()> {
    let docs = match io::read_json::<CandidateFile>(&a.candidates)? {
        CandidateFile::List(v) | CandidateFile::Wrapped { candidates: v } => v,
    };
    let members = docs
        .into_iter()
        .enumerate()
        .map(|(i, doc)| {
            ProductHistogram::try_from(doc)
                .map_err(|e| CliError::usage(format!("{}: candidate {}: {e}", a.candidates.display(), i + 1)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let cands = CandidateSet::with_budget(members, a.refinement_budget)?;
    let samples = io::read_samples(&a.samples)?;
    let sel = scheffe_select(&cands, &samples)?;
    let out = Output {
        config: run_config("scheffe", a),
        winner_index: sel.winner + 1,
        deltas: sel.deltas,
        params: Params {
            candidates: cands.len(),
            n: samples.len(),
            d: cands.dim(),
            b: cands.resolution(),
        },
    };
    io::emit(a.out.as_deref(), &io::to_json(&out))
}
