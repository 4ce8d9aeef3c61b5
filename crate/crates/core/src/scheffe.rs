//! Minimum-distance selection over pairwise Scheffé sets, and the
//! cover-based estimator built on it.
//!
//! For candidates `p_1..p_M` sharing a refinement, the Scheffé set
//! `A_ik = {p_i > p_k}` is a union of refinement cells, so both `∫_A p_i` and
//! the empirical measure `μ_n(A)` are exact cell sums. The selected index
//! minimises `Δ_i = max_{k≠i} |∫_{A_ik} p_i - μ_n(A_ik)|`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};
use crate::graph::{maximal_cliques, MrfGraph, DEFAULT_CLIQUE_CEILING};
use crate::histfactor::{
    cover_size, quantized_cover, sample_cover, HistogramFactor, ProductHistogram,
    DEFAULT_REFINEMENT_BUDGET,
};
use crate::math::{ceil, checked_pow, ln, powf};
use crate::rng::derive_seed;
use crate::samples::SampleMatrix;

/// Default ceiling on the number of candidates enumerated exhaustively.
pub const DEFAULT_CANDIDATE_BUDGET: u128 = 2_000;
/// Tolerance on the unit mass of every candidate.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// `⌈ln(3M²/δ) / (2ε²)⌉`.
pub fn required_samples(m: usize, eps: f64, delta: f64) -> Result<u64> {
    if m == 0 {
        return Err(Error::invalid("candidate count must be at least 1"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let m = m as f64;
    Ok(ceil(ln(3.0 * m * m / delta) / (2.0 * eps * eps)) as u64)
}

/// Normalised candidates sharing `(d, b)`, with their refinement tables.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    d: usize,
    b: usize,
    members: Vec<ProductHistogram>,
    tables: Vec<Vec<f64>>,
}

impl CandidateSet {
    pub fn new(members: Vec<ProductHistogram>) -> Result<Self> {
        Self::with_budget(members, DEFAULT_REFINEMENT_BUDGET)
    }

    pub fn with_budget(members: Vec<ProductHistogram>, budget: u128) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::invalid("candidate set is empty"))?;
        let (d, b) = (first.dim(), first.resolution());
        let vol = first.cell_volume();
        let mut tables = Vec::with_capacity(members.len());
        for (i, h) in members.iter().enumerate() {
            if h.dim() != d || h.resolution() != b {
                return Err(Error::invalid(format!(
                    "candidate {i} has (d, b) = ({}, {}), expected ({d}, {b})",
                    h.dim(),
                    h.resolution()
                )));
            }
            let t = h.cell_values(budget)?;
            let mass = t.iter().sum::<f64>() * vol;
            if (mass - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::invalid(format!(
                    "candidate {i} integrates to {mass}, not 1"
                )));
            }
            tables.push(t);
        }
        Ok(Self {
            d,
            b,
            members,
            tables,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn resolution(&self) -> usize {
        self.b
    }

    pub fn members(&self) -> &[ProductHistogram] {
        &self.members
    }

    pub fn get(&self, i: usize) -> &ProductHistogram {
        &self.members[i]
    }

    /// Refinement-cell values of candidate `i`.
    pub fn table(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }

    pub fn into_members(self) -> Vec<ProductHistogram> {
        self.members
    }

    fn cell_volume(&self) -> f64 {
        powf(self.b as f64, -(self.d as f64))
    }

    /// `∫_{A_ik} p_i`, summed over the cells where `p_i > p_k`.
    pub fn scheffe_mass(&self, i: usize, k: usize) -> f64 {
        let (pi, pk) = (&self.tables[i], &self.tables[k]);
        pi.iter()
            .zip(pk)
            .filter(|(a, b)| a > b)
            .map(|(a, _)| a)
            .sum::<f64>()
            * self.cell_volume()
    }

    /// Empirical cell frequencies of `samples` on the common refinement.
    pub fn empirical_cells(&self, samples: &SampleMatrix) -> Result<Vec<f64>> {
        if samples.dim() != self.d {
            return Err(Error::invalid(format!(
                "samples have dimension {}, candidates {}",
                samples.dim(),
                self.d
            )));
        }
        if samples.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        let mut freq = vec![0.0; self.tables[0].len()];
        let h = &self.members[0];
        for x in samples.rows() {
            freq[h.refinement_index(x)] += 1.0;
        }
        let n = samples.len() as f64;
        freq.iter_mut().for_each(|f| *f /= n);
        Ok(freq)
    }

    /// `Δ_i` for one candidate given empirical cell frequencies.
    pub fn delta(&self, i: usize, freq: &[f64]) -> f64 {
        let vol = self.cell_volume();
        let pi = &self.tables[i];
        let mut worst: f64 = 0.0;
        for (k, pk) in self.tables.iter().enumerate() {
            if k == i {
                continue;
            }
            let (mut model, mut emp) = (0.0, 0.0);
            for c in 0..pi.len() {
                if pi[c] > pk[c] {
                    model += pi[c];
                    emp += freq[c];
                }
            }
            worst = worst.max((model * vol - emp).abs());
        }
        worst
    }
}

/// Outcome of the tournament. `winner` is 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub winner: usize,
    pub deltas: Vec<f64>,
}

/// Minimum-distance selection; ties go to the lowest index.
pub fn scheffe_select(cands: &CandidateSet, samples: &SampleMatrix) -> Result<Selection> {
    let freq = cands.empirical_cells(samples)?;
    let deltas: Vec<f64> = (0..cands.len()).map(|i| cands.delta(i, &freq)).collect();
    Ok(Selection {
        winner: argmin_lowest(&deltas),
        deltas,
    })
}

/// Index of the smallest value, the first one on ties.
pub fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// How the cover-product candidates are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CandidateMode {
    /// Every product of cover members; fails above `budget` products.
    Exhaustive { budget: u128 },
    /// `count` products drawn uniformly from the cover product.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub mode: CandidateMode,
    /// Products considered before removing the zero function.
    pub considered: u128,
    pub dropped_zero: u128,
    /// Size of the full cover product, if it fits in `u128`.
    pub full_count: Option<u128>,
}

/// Normalised products of quantized-cover factors over the maximal cliques
/// of `g`, at resolution `b`, cap `cap` and cover step `eps`.
pub fn build_vn_candidates(
    g: &MrfGraph,
    b: usize,
    cap: f64,
    eps: f64,
    mode: CandidateMode,
) -> Result<(CandidateSet, CandidateReport)> {
    let d = g.vertex_count();
    let cliques = maximal_cliques(g, DEFAULT_CLIQUE_CEILING)?;
    let refinement = checked_pow(b, d).unwrap_or(u128::MAX);
    check_budget("common refinement cells", refinement, DEFAULT_REFINEMENT_BUDGET, "")?;
    let mut full: Option<u128> = Some(1);
    for c in cliques.iter() {
        let size = cover_size(b, c.len(), cap, eps)?;
        full = match (full, size) {
            (Some(a), Some(s)) => a.checked_mul(s),
            _ => None,
        };
    }
    let mut members = Vec::new();
    let (mut considered, mut dropped) = (0u128, 0u128);
    match mode {
        CandidateMode::Exhaustive { budget } => {
            check_budget(
                "cover-product candidates",
                full.unwrap_or(u128::MAX),
                budget,
                "; use sampled candidate mode",
            )?;
            let covers: Vec<Vec<HistogramFactor>> = cliques
                .iter()
                .map(|c| Ok(quantized_cover(d, b, c.clone(), cap, eps, budget)?.collect()))
                .collect::<Result<_>>()?;
            let sizes: Vec<usize> = covers.iter().map(Vec::len).collect();
            let mut pick = vec![0usize; covers.len()];
            loop {
                considered += 1;
                let factors = pick.iter().zip(&covers).map(|(&j, c)| c[j].clone()).collect();
                let h = ProductHistogram::new(d, b, factors)?;
                if h.is_zero(DEFAULT_REFINEMENT_BUDGET)? {
                    dropped += 1;
                } else {
                    members.push(h.normalize(DEFAULT_REFINEMENT_BUDGET)?);
                }
                if !mixed_radix_step(&mut pick, &sizes) {
                    break;
                }
            }
            if members.is_empty() {
                members.push(ProductHistogram::uniform(d, b)?);
            }
        }
        CandidateMode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::invalid("sampled candidate count must be positive"));
            }
            let draws: Vec<Vec<HistogramFactor>> = cliques
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    sample_cover(d, b, c.clone(), cap, eps, count, derive_seed(seed, "vn-cover", k as u64))
                })
                .collect::<Result<_>>()?;
            for j in 0..count {
                considered += 1;
                let factors = draws.iter().map(|f| f[j].clone()).collect();
                // the zero product normalises to the uniform density
                let h = ProductHistogram::new(d, b, factors)?;
                if h.is_zero(DEFAULT_REFINEMENT_BUDGET)? {
                    dropped += 1;
                }
                members.push(h.normalize(DEFAULT_REFINEMENT_BUDGET)?);
            }
        }
    }
    let report = CandidateReport {
        mode,
        considered,
        dropped_zero: dropped,
        full_count: full,
    };
    Ok((CandidateSet::new(members)?, report))
}

fn mixed_radix_step(digits: &mut [usize], sizes: &[usize]) -> bool {
    for (d, &s) in digits.iter_mut().zip(sizes).rev() {
        *d += 1;
        if *d < s {
            return true;
        }
        *d = 0;
    }
    false
}

/// Parameter overrides for [`estimate_vn`]; `None` selects the schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VnOverrides {
    pub b: Option<usize>,
    pub cap: Option<f64>,
    pub cover_eps: Option<f64>,
    pub mode: Option<CandidateMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnReport {
    pub n: usize,
    pub r: usize,
    pub b: usize,
    pub cap: f64,
    pub cover_eps: f64,
    pub candidates: usize,
    pub eps: f64,
    pub delta: f64,
    pub required_samples: u64,
    pub candidate_report: CandidateReport,
    /// True when the candidates are a random subset of the cover product.
    pub sampled: bool,
    pub selection: Selection,
}

#[derive(Debug, Clone)]
pub struct VnEstimate {
    pub density: ProductHistogram,
    pub report: VnReport,
}

/// Bins per axis `⌈n^{1/(r+2)}⌉`.
pub fn vn_resolution(n: usize, r: usize) -> usize {
    (ceil(powf(n as f64, 1.0 / (r as f64 + 2.0))) as usize).max(1)
}

/// Tournament accuracy `n^{-1/(r+2)} ln n`.
pub fn vn_epsilon(n: usize, r: usize) -> f64 {
    powf(n as f64, -1.0 / (r as f64 + 2.0)) * ln(n as f64)
}

/// Cover-product estimator: candidates from the quantized covers, winner of
/// the Scheffé tournament. Exhaustive enumeration is used when the cover
/// product fits [`DEFAULT_CANDIDATE_BUDGET`], sampling otherwise.
pub fn estimate_vn(g: &MrfGraph, samples: &SampleMatrix, overrides: &VnOverrides) -> Result<VnEstimate> {
    let d = g.vertex_count();
    if samples.dim() != d {
        return Err(Error::invalid(format!(
            "samples have dimension {}, graph has {d} vertices",
            samples.dim()
        )));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("the estimator needs at least two samples"));
    }
    let r = maximal_cliques(g, DEFAULT_CLIQUE_CEILING)?.max_size();
    let b = overrides.b.unwrap_or_else(|| vn_resolution(n, r));
    let cap = overrides.cap.unwrap_or(1.0);
    let cover_eps = overrides.cover_eps.unwrap_or(1.0 / b as f64);
    let mode = match overrides.mode {
        Some(m) => m,
        None => {
            let mut full: Option<u128> = Some(1);
            for c in maximal_cliques(g, DEFAULT_CLIQUE_CEILING)?.iter() {
                full = match (full, cover_size(b, c.len(), cap, cover_eps)?) {
                    (Some(a), Some(s)) => a.checked_mul(s),
                    _ => None,
                };
            }
            match full {
                Some(f) if f <= DEFAULT_CANDIDATE_BUDGET => CandidateMode::Exhaustive {
                    budget: DEFAULT_CANDIDATE_BUDGET,
                },
                _ => CandidateMode::Sampled {
                    count: DEFAULT_CANDIDATE_BUDGET as usize,
                    seed: derive_seed(samples.seed.unwrap_or(0), "vn-candidates", 0),
                },
            }
        }
    };
    let (cands, candidate_report) = build_vn_candidates(g, b, cap, cover_eps, mode)?;
    let eps = vn_epsilon(n, r);
    let delta = 1.0 / n as f64;
    let selection = scheffe_select(&cands, samples)?;
    let report = VnReport {
        n,
        r,
        b,
        cap,
        cover_eps,
        candidates: cands.len(),
        eps,
        delta,
        required_samples: required_samples(cands.len(), eps, delta)?,
        sampled: matches!(mode, CandidateMode::Sampled { .. }),
        candidate_report,
        selection: selection.clone(),
    };
    Ok(VnEstimate {
        density: cands.get(selection.winner).clone(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1(w: &[f64]) -> ProductHistogram {
        let f = HistogramFactor::new(1, vec![1], w.len(), 10.0, w.to_vec()).unwrap();
        ProductHistogram::single(f)
    }

    #[test]
    fn required_samples_examples() {
        assert_eq!(required_samples(1, 0.1, 0.05).unwrap(), 205);
        assert_eq!(required_samples(10, 0.05, 0.1).unwrap(), 1602);
        assert!(required_samples(0, 0.1, 0.1).is_err());
        assert!(required_samples(1, 0.0, 0.1).is_err());
        assert!(required_samples(1, 0.1, 1.0).is_err());
    }

    #[test]
    fn trivial_selections() {
        let s = SampleMatrix::new(1, vec![0.1, 0.7, 0.9]).unwrap();
        let one = CandidateSet::new(vec![h1(&[0.5, 1.5])]).unwrap();
        assert_eq!(scheffe_select(&one, &s).unwrap().winner, 0);
        let same = CandidateSet::new(vec![h1(&[1.0, 1.0]); 4]).unwrap();
        assert_eq!(scheffe_select(&same, &s).unwrap().winner, 0);
    }

    #[test]
    fn candidate_validation() {
        assert!(CandidateSet::new(vec![]).is_err());
        assert!(CandidateSet::new(vec![h1(&[1.0, 2.0])]).is_err());
        assert!(CandidateSet::new(vec![h1(&[1.0, 1.0]), h1(&[1.0, 1.0, 1.0])]).is_err());
        let c = CandidateSet::new(vec![h1(&[1.0, 1.0])]).unwrap();
        let s2 = SampleMatrix::new(2, vec![0.1, 0.2]).unwrap();
        assert!(scheffe_select(&c, &s2).is_err());
    }

    #[test]
    fn truth_beats_uniform() {
        let truth = h1(&[0.2, 1.8]);
        let cands = CandidateSet::new(vec![ProductHistogram::uniform(1, 2).unwrap(), truth.clone()]).unwrap();
        let wins = (0..100)
            .filter(|&seed| {
                let s = truth.sample(10_000, seed, DEFAULT_REFINEMENT_BUDGET).unwrap();
                scheffe_select(&cands, &s).unwrap().winner == 1
            })
            .count();
        assert!(wins >= 95);
    }

    #[test]
    fn scheffe_mass_is_a_cell_sum() {
        let a = h1(&[0.5, 1.5]);
        let b = h1(&[1.5, 0.5]);
        let c = CandidateSet::new(vec![a, b]).unwrap();
        assert!((c.scheffe_mass(0, 1) - 0.75).abs() < 1e-12);
        assert!((c.scheffe_mass(1, 0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn path_l2_single_bin_gives_uniform() {
        let g = MrfGraph::path(2).unwrap();
        let (c, rep) = build_vn_candidates(&g, 1, 1.0, 1.0, CandidateMode::Exhaustive { budget: 100 }).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(rep.dropped_zero, 1);
        assert_eq!(c.get(0).cell_values(100).unwrap(), vec![1.0]);
    }

    #[test]
    fn coarse_cover_count_bound() {
        let g = MrfGraph::path(3).unwrap();
        let (c, _) = build_vn_candidates(&g, 1, 1.0, 1.0, CandidateMode::Exhaustive { budget: 100 }).unwrap();
        assert!(c.len() <= 4);
    }

    #[test]
    fn exhaustive_budget_reports_count() {
        let g = MrfGraph::path(3).unwrap();
        let err = build_vn_candidates(&g, 2, 1.0, 0.5, CandidateMode::Exhaustive { budget: 10 }).unwrap_err();
        match err {
            Error::Budget { needed, .. } => assert_eq!(needed, 81 * 81),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedule_resolution() {
        assert_eq!(vn_resolution(16, 2), 2);
        assert_eq!(vn_resolution(1000, 1), 10);
    }

    #[test]
    fn single_candidate_wins_regardless() {
        let g = MrfGraph::path(2).unwrap();
        let s = SampleMatrix::new(2, vec![0.9, 0.9, 0.95, 0.91]).unwrap();
        let est = estimate_vn(
            &g,
            &s,
            &VnOverrides {
                b: Some(1),
                cover_eps: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(est.report.candidates, 1);
        assert_eq!(est.report.selection.winner, 0);
    }
}
