use mrfdens_core::evalrate::{assemble_report, run_rate_cell, RateConfig, RateReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::RateArgs;
use crate::error::{CliError, CliResult};
use crate::io;

/// Experiment file: a rate config plus harness settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExperimentFile {
    #[serde(flatten)]
    rate: RateConfig,
    #[serde(default)]
    threads: Option<usize>,
}

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    command: &'static str,
    version: &'static str,
    #[serde(flatten)]
    rate: &'a RateConfig,
    threads: usize,
    config_path: &'a std::path::Path,
    plots_dir: Option<&'a std::path::Path>,
}

pub fn run(a: &RateArgs) -> CliResult<()> {
    let file: ExperimentFile = io::read_json(&a.config)?;
    let config = file.rate;
    if config.ns.is_empty() || config.seeds.is_empty() {
        return Err(CliError::usage("rate config needs at least one n and one seed"));
    }
    let threads = a
        .threads
        .or(file.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::usage("threads must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, u64)> = config
        .ns
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    log::info!("{} cells on {threads} threads", jobs.len());
    let cells = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, s)| {
                let c = run_rate_cell(&config, n, s);
                if let Some(f) = &c.failure {
                    log::warn!("cell n={n} seed={s} failed: {f}");
                }
                c
            })
            .collect::<Vec<_>>()
    });
    let report = assemble_report(&config, cells)?;

    if let Some(dir) = &a.plots_dir {
        write_plots(dir, &report)?;
    }
    let mut value = serde_json::to_value(&report).expect("serializable report");
    value["config"] = serde_json::to_value(ResolvedConfig {
        command: "rate",
        version: env!("CARGO_PKG_VERSION"),
        rate: &config,
        threads,
        config_path: &a.config,
        plots_dir: a.plots_dir.as_deref(),
    })
    .expect("serializable config");
    io::emit(a.out.as_deref(), &io::to_json(&value))
}

fn write_plots(dir: &std::path::Path, report: &RateReport) -> CliResult<()> {
    let id = &report.estimator;
    let csv = io::table_csv(
        &["n", "seed", "l1", "l2"],
        report
            .cells
            .iter()
            .map(|c| {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                vec![c.n.to_string(), c.seed.to_string(), opt(c.l1), opt(c.l2)]
            }),
    );
    io::write_file(&dir.join(format!("{id}.csv")), csv.as_bytes())?;

    let mut dat = format!("# {id}: median error per n\n# n l1 l2\n");
    let fmt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| x.to_string());
    for m in &report.medians {
        dat.push_str(&format!("{} {} {}\n", m.n, fmt(m.l1), fmt(m.l2)));
    }
    io::write_file(&dir.join(format!("{id}_medians.dat")), dat.as_bytes())
}
