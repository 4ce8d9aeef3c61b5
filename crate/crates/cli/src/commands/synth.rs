use mrfdens_core::pixeldiag::{encode_pgm, GrayImage};
use mrfdens_core::rng::derive_seed;
use mrfdens_core::synth::{GibbsConfig, SamplingMethod, TruthSpec};
use serde::Serialize;

use super::{build_truth, run_config};
use crate::args::SynthArgs;
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Serialize)]
struct Output {
    config: serde_json::Value,
    /// Reusable as the `truth` block of a rate config.
    truth: TruthSpec,
    d: usize,
    n: usize,
    sampling: SamplingMethod,
    normalizer: Option<f64>,
    lipschitz: f64,
    sup_bound: f64,
}

pub fn run(a: &SynthArgs) -> CliResult<()> {
    let spec = build_truth(&a.truth)?;
    if a.pgm_dir.is_some() && !matches!(spec, TruthSpec::Grid { .. }) {
        return Err(CliError::usage("--pgm-dir needs --family grid"));
    }
    let truth = spec.build()?;
    let gibbs = GibbsConfig {
        burn_in_sweeps: a.burn_in,
        thin_sweeps: a.thin,
        chains: a.chains,
    };
    let sampled = truth.sample(a.n, derive_seed(a.seed, "synth-sample", 0), &gibbs)?;
    io::write_file(&a.out, io::samples_csv(&sampled.samples).as_bytes())?;
    if let (Some(dir), TruthSpec::Grid { rows, cols, .. }) = (&a.pgm_dir, spec) {
        let width = a.n.max(1).to_string().len();
        for (i, x) in sampled.samples.rows().enumerate() {
            let img = GrayImage::new(rows, cols, x.to_vec())?;
            io::write_file(&dir.join(format!("img{:0width$}.pgm", i + 1)), &encode_pgm(&img))?;
        }
    }
    let out = Output {
        config: run_config("synth-sample", a),
        truth: spec,
        d: truth.graph().vertex_count(),
        n: a.n,
        sampling: sampled.method,
        normalizer: truth.normalizer(),
        lipschitz: truth.lipschitz(),
        sup_bound: truth.sup_bound(),
    };
    io::emit(None, &io::to_json(&out))
}
