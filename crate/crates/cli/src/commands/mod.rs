mod cliques;
mod fit;
mod hc;
mod pixel;
mod rate;
mod scheffe;
mod synth;

use mrfdens_core::graph::{parse_dims, parse_edge_list, Family};
use mrfdens_core::synth::{PairPotential, TruthSpec, DEFAULT_CHAIN_QUADRATURE, DEFAULT_GRID_QUADRATURE};
use mrfdens_core::MrfGraph;
use serde::Serialize;

use crate::args::{Command, GraphArgs, GraphFamily, PotentialKind, TruthArgs, TruthFamily};
use crate::error::{CliError, CliResult};
use crate::io;

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Cliques(a) => cliques::run(&a),
        Command::Scheffe(a) => scheffe::run(&a),
        Command::FitNn(a) => fit::run_nn(&a),
        Command::FitHist(a) => fit::run_hist(&a),
        Command::Rate(a) => rate::run(&a),
        Command::SynthSample(a) => synth::run(&a),
        Command::PixelDiag(a) => pixel::run(&a),
        Command::HcCheck(a) => hc::run(&a),
    }
}

/// The resolved run configuration embedded in every JSON output.
#[derive(Serialize)]
struct RunConfig<'a, T: Serialize> {
    command: &'static str,
    version: &'static str,
    #[serde(flatten)]
    args: &'a T,
}

fn run_config<T: Serialize>(command: &'static str, args: &T) -> serde_json::Value {
    serde_json::to_value(RunConfig {
        command,
        version: env!("CARGO_PKG_VERSION"),
        args,
    })
    .expect("serializable config")
}

/// Structured family and dimensions, when the graph is not a file.
pub(crate) struct BuiltGraph {
    pub graph: MrfGraph,
    pub structured: Option<(Family, Vec<usize>)>,
}

pub(crate) fn build_graph(a: &GraphArgs) -> CliResult<BuiltGraph> {
    let family = match a.family {
        GraphFamily::Path => Family::Path,
        GraphFamily::Grid => Family::Grid,
        GraphFamily::GridDiag => Family::GridDiag,
        GraphFamily::File => {
            let path = a
                .edges_file
                .as_ref()
                .ok_or_else(|| CliError::usage("--family file needs --edges-file"))?;
            let d = match &a.dims {
                Some(s) => match parse_dims(s)?.as_slice() {
                    [d] => Some(*d),
                    _ => return Err(CliError::usage("--dims for an edge file is a vertex count")),
                },
                None => None,
            };
            let base = parse_edge_list(&io::read_text(path)?, d)?;
            let graph = if a.power > 1 { base.power(a.power)? } else { base };
            return Ok(BuiltGraph {
                graph,
                structured: None,
            });
        }
    };
    if a.edges_file.is_some() {
        return Err(CliError::usage("--edges-file needs --family file"));
    }
    let dims = parse_dims(
        a.dims
            .as_deref()
            .ok_or_else(|| CliError::usage("--dims is required for structured families"))?,
    )?;
    let graph = MrfGraph::structured_power(family, &dims, a.power)?;
    Ok(BuiltGraph {
        graph,
        structured: Some((family, dims)),
    })
}

pub(crate) fn build_truth(a: &TruthArgs) -> CliResult<TruthSpec> {
    let potential = match a.potential {
        PotentialKind::Cosine => PairPotential::Cosine { a: a.a },
        PotentialKind::Gaussian => PairPotential::Gaussian { beta: a.beta },
    };
    Ok(match a.family {
        TruthFamily::Chain => TruthSpec::Chain {
            d: a.d,
            potential,
            q: a.q.unwrap_or(DEFAULT_CHAIN_QUADRATURE),
        },
        TruthFamily::Grid => {
            let dims = parse_dims(
                a.dims
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--family grid needs --dims RxC"))?,
            )?;
            let [rows, cols] = dims[..] else {
                return Err(CliError::usage("--family grid needs --dims RxC"));
            };
            TruthSpec::Grid {
                rows,
                cols,
                t: a.power,
                potential,
                q: a.q.unwrap_or(DEFAULT_GRID_QUADRATURE),
            }
        }
    })
}
