use mrfdens_core::graph::parse_dims;
use mrfdens_core::pixeldiag::{
    correlation_profile, pair_scatter, Condition, DimPolicy, ImageCorpus, Pixel, ProfileRow, Scatter, Selection,
};
use serde::Serialize;

use super::run_config;
use crate::args::{DimsPolicyArg, PixelArgs, SelectionKind};
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Serialize)]
struct Side {
    csv: String,
    count: usize,
    correlation: f64,
    median: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Serialize)]
struct PairSummary {
    a: Pixel,
    b: Pixel,
    unconditional: Side,
    conditional: Side,
}

#[derive(Serialize)]
struct Summary {
    config: serde_json::Value,
    images: usize,
    rows: usize,
    cols: usize,
    cropped: usize,
    selection: Selection,
    pairs: Vec<PairSummary>,
    profile: Option<Vec<ProfileRow>>,
}

fn tag(p: Pixel) -> String {
    format!("{}-{}", p.0, p.1)
}

fn write_scatter(a: &PixelArgs, name: String, s: &Scatter) -> CliResult<Side> {
    let csv = io::table_csv(
        &["valueA", "valueB"],
        s.pairs.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]),
    );
    io::write_file(&a.out.join(&name), csv.as_bytes())?;
    Ok(Side {
        csv: name,
        count: s.count,
        correlation: s.correlation,
        median: s.median,
        tolerance: s.tolerance,
    })
}

pub fn run(a: &PixelArgs) -> CliResult<()> {
    let images = io::read_pgm_dir(&a.dir)?;
    if images.is_empty() {
        return Err(CliError::usage(format!("{}: no .pgm files", a.dir.display())));
    }
    let target = match &a.dims {
        Some(s) => match parse_dims(s)?.as_slice() {
            [r, c] => Some((*r, *c)),
            _ => return Err(CliError::usage("--dims must be RxC")),
        },
        None => None,
    };
    let policy = match a.dims_policy {
        DimsPolicyArg::Reject => DimPolicy::Reject,
        DimsPolicyArg::Crop => DimPolicy::Crop,
    };
    let corpus = ImageCorpus::new(images, target, policy)?;
    let selection = match a.selection {
        SelectionKind::Tolerance => Selection::Tolerance { tolerance: a.tolerance },
        SelectionKind::Nearest => Selection::Nearest { k: a.k },
    };
    let cond = Condition {
        pixel: a.neighbor,
        selection,
    };
    let mut pairs = Vec::with_capacity(a.pairs.len());
    for &b in &a.pairs {
        let base = format!("pair_{}_{}", tag(a.anchor), tag(b));
        let u = pair_scatter(&corpus, a.anchor, b, None)?;
        let c = pair_scatter(&corpus, a.anchor, b, Some(cond))?;
        log::info!(
            "{base}: r = {:.4}, given {} r = {:.4} over {} images",
            u.correlation,
            tag(a.neighbor),
            c.correlation,
            c.count
        );
        pairs.push(PairSummary {
            a: a.anchor,
            b,
            unconditional: write_scatter(a, format!("{base}.csv"), &u)?,
            conditional: write_scatter(a, format!("{base}_given_{}.csv", tag(a.neighbor)), &c)?,
        });
    }
    let profile = a
        .profile_radius
        .map(|r| correlation_profile(&corpus, a.anchor, a.neighbor, selection, r))
        .transpose()?;
    let (rows, cols) = corpus.dims();
    let summary = Summary {
        config: run_config("pixel-diag", a),
        images: corpus.len(),
        rows,
        cols,
        cropped: corpus.cropped,
        selection,
        pairs,
        profile,
    };
    let text = io::to_json(&summary);
    io::write_file(&a.out.join("summary.json"), text.as_bytes())?;
    io::emit(None, &text)
}
