//! Constructive Hammersley–Clifford factorisation.
//!
//! For a positive density `p` that is Markov with respect to a graph, and an
//! anchor `y`, define for every vertex set `S`
//!
//! ```text
//! phi_S(x) = prod_{U ⊆ S} p(gamma_U(x)) ^ ((-1)^{|S \ U|})
//! ```
//!
//! where `gamma_U` keeps the coordinates of `x` in `U` and replaces the rest
//! by the anchor's. Möbius inversion gives `p = prod_S phi_S`, and `phi_S == 1`
//! unless `S` is a clique. Each clique (the empty set included) is handed to
//! the lexicographically first maximal clique containing it, and the
//! potential of a maximal clique is the product of the `phi_S` it received.
//! The potentials therefore multiply back to `p` exactly.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::density::check_unit_cube;
use crate::error::{check_budget, Error, Result};
use crate::graph::CliqueSet;
use crate::math::{checked_pow, exp, ln, odometer_step};

/// Largest clique the construction accepts (`2^|V'|` subsets per point).
pub const MAX_CLIQUE_SIZE: usize = 20;
/// Default tabulation resolution per axis.
pub const DEFAULT_TABLE_RESOLUTION: usize = 16;
/// Ceiling on the number of table entries per potential.
pub const TABLE_BUDGET: u128 = 50_000_000;

/// A positive density oracle with an anchor point.
pub struct DensityOracle<F> {
    d: usize,
    eval: F,
    anchor: Vec<f64>,
    /// Declared Lipschitz constant, if known.
    pub lipschitz: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64> DensityOracle<F> {
    /// Oracle anchored at the origin.
    pub fn new(d: usize, eval: F) -> Self {
        Self {
            d,
            eval,
            anchor: vec![0.0; d],
            lipschitz: None,
        }
    }

    pub fn with_anchor(mut self, anchor: Vec<f64>) -> Result<Self> {
        if anchor.len() != self.d {
            return Err(Error::invalid("anchor dimension mismatch"));
        }
        check_unit_cube(&anchor)?;
        self.anchor = anchor;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// Oracle value, failing on non-positive (or NaN) outputs.
    pub fn query(&self, x: &[f64]) -> Result<f64> {
        let v = (self.eval)(x);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveOracle {
                point: x.to_vec(),
                value: v,
            })
        }
    }
}

/// Copies the coordinates of `x` listed in `subset` (1-based) and fills the
/// rest from `anchor`.
pub fn gamma_project(x: &[f64], subset: &[usize], anchor: &[f64]) -> Vec<f64> {
    let mut out = anchor.to_vec();
    for &v in subset {
        out[v - 1] = x[v - 1];
    }
    out
}

/// Log-exponents `c_U` over the subsets `U` of one maximal clique (bitmask
/// over the clique's vertices), such that `ln psi(x) = sum_U c_U ln p(gamma_U x)`.
#[derive(Debug, Clone)]
struct Exponents {
    clique: Vec<usize>,
    terms: Vec<(u32, f64)>,
}

fn exponents_for(cliques: &CliqueSet, index: usize) -> Result<Exponents> {
    let clique = cliques.cliques[index].clone();
    let k = clique.len();
    if k > MAX_CLIQUE_SIZE {
        return Err(Error::Budget {
            what: "clique size for subset enumeration",
            needed: k as u128,
            limit: MAX_CLIQUE_SIZE as u128,
            hint: "",
        });
    }
    let full = 1usize << k;
    // assigned[S] = 1 when S is not contained in an earlier maximal clique.
    let earlier: Vec<&Vec<usize>> = cliques.cliques[..index].iter().collect();
    let mut coeff = vec![0.0f64; full];
    for (mask, slot) in coeff.iter_mut().enumerate() {
        let members: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| clique[b]).collect();
        let taken = earlier
            .iter()
            .any(|c| members.iter().all(|v| c.binary_search(v).is_ok()));
        if !taken {
            *slot = 1.0;
        }
    }
    // c_U = sum_{S ⊇ U} a_S (-1)^{|S| - |U|}: signed superset-sum transform.
    for bit in 0..k {
        for mask in 0..full {
            if mask >> bit & 1 == 0 {
                coeff[mask] -= coeff[mask | 1 << bit];
            }
        }
    }
    let terms = coeff
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0.0)
        .map(|(m, c)| (m as u32, c))
        .collect();
    Ok(Exponents { clique, terms })
}

impl Exponents {
    fn eval<F: Fn(&[f64]) -> f64>(&self, oracle: &DensityOracle<F>, x: &[f64]) -> Result<f64> {
        let mut log_psi = 0.0;
        let mut point = oracle.anchor.clone();
        for &(mask, c) in &self.terms {
            point.copy_from_slice(&oracle.anchor);
            for (b, &v) in self.clique.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    point[v - 1] = x[v - 1];
                }
            }
            log_psi += c * ln(oracle.query(&point)?);
        }
        Ok(exp(log_psi))
    }
}

/// Evaluates clique potentials of a fixed oracle at arbitrary points.
pub struct HcFactorization<'a, F> {
    oracle: &'a DensityOracle<F>,
    exponents: Vec<Exponents>,
}

impl<'a, F: Fn(&[f64]) -> f64> HcFactorization<'a, F> {
    pub fn new(oracle: &'a DensityOracle<F>, cliques: &CliqueSet) -> Result<Self> {
        if cliques.is_empty() {
            return Err(Error::invalid("clique set is empty"));
        }
        if cliques.iter().flatten().any(|&v| v == 0 || v > oracle.d) {
            return Err(Error::invalid("clique vertex outside the oracle's dimension"));
        }
        let exponents = (0..cliques.len())
            .map(|i| exponents_for(cliques, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { oracle, exponents })
    }

    pub fn cliques(&self) -> impl Iterator<Item = &[usize]> {
        self.exponents.iter().map(|e| e.clique.as_slice())
    }

    /// `psi_{V'}(x)` for the `index`-th maximal clique. Reads only the
    /// coordinates of `x` inside that clique.
    pub fn potential(&self, index: usize, x: &[f64]) -> Result<f64> {
        self.exponents[index].eval(self.oracle, x)
    }

    /// `prod_{V'} psi_{V'}(x)`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<f64> {
        (0..self.exponents.len()).try_fold(1.0, |acc, i| Ok(acc * self.potential(i, x)?))
    }

    /// Tabulates each potential on the `q^{|V'|}` node grid `{j/(q-1)}`.
    pub fn tabulate(&self, q: usize) -> Result<Vec<PotentialTable>> {
        if q < 2 {
            return Err(Error::invalid("table resolution must be at least 2"));
        }
        self.exponents
            .iter()
            .map(|e| {
                let k = e.clique.len();
                let size = checked_pow(q, k).unwrap_or(u128::MAX);
                check_budget("potential table entries", size, TABLE_BUDGET, "")?;
                let mut values = Vec::with_capacity(size as usize);
                let mut digits = vec![0usize; k];
                let mut x = self.oracle.anchor.clone();
                loop {
                    for (b, &v) in e.clique.iter().enumerate() {
                        x[v - 1] = digits[b] as f64 / (q - 1) as f64;
                    }
                    values.push(e.eval(self.oracle, &x)?);
                    if !odometer_step(&mut digits, q) {
                        break;
                    }
                }
                Ok(PotentialTable {
                    clique: e.clique.clone(),
                    resolution: q,
                    values,
                })
            })
            .collect()
    }
}

/// Clique potentials of `p` tabulated on a `q`-node grid per axis.
pub fn hc_potentials<F: Fn(&[f64]) -> f64>(
    oracle: &DensityOracle<F>,
    cliques: &CliqueSet,
    q: usize,
) -> Result<Vec<PotentialTable>> {
    HcFactorization::new(oracle, cliques)?.tabulate(q)
}

/// Potential values on the node grid `{0, 1/(q-1), ..., 1}^{|V'|}`, stored
/// row-major; evaluated off-grid by multilinear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PotentialDoc", try_from = "PotentialDoc")]
pub struct PotentialTable {
    pub clique: Vec<usize>,
    pub resolution: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Multilinear,
}

/// JSON layout of a [`PotentialTable`]: the histogram-factor fields plus
/// the node count and interpolation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialDoc {
    #[serde(rename = "V")]
    pub vars: Vec<usize>,
    #[serde(rename = "C")]
    pub cap: f64,
    pub q: usize,
    pub weights: Vec<f64>,
    pub interpolation: Interpolation,
}

impl From<PotentialTable> for PotentialDoc {
    fn from(t: PotentialTable) -> Self {
        Self {
            cap: t.max_value(),
            vars: t.clique,
            q: t.resolution,
            weights: t.values,
            interpolation: Interpolation::Multilinear,
        }
    }
}

impl TryFrom<PotentialDoc> for PotentialTable {
    type Error = Error;
    fn try_from(doc: PotentialDoc) -> Result<Self> {
        let size = checked_pow(doc.q, doc.vars.len());
        if doc.q < 2 || size != Some(doc.weights.len() as u128) {
            return Err(Error::invalid("potential table size does not match q^|V|"));
        }
        Ok(Self {
            clique: doc.vars,
            resolution: doc.q,
            values: doc.weights,
        })
    }
}

impl PotentialTable {
    /// Value at the grid node with 0-based per-axis indices `node`.
    pub fn node_value(&self, node: &[usize]) -> f64 {
        let idx = node.iter().fold(0, |acc, &i| acc * self.resolution + i);
        self.values[idx]
    }

    /// Multilinear interpolation at the full-dimensional point `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let k = self.clique.len();
        let q = self.resolution;
        let scale = (q - 1) as f64;
        let mut base = vec![0usize; k];
        let mut frac = vec![0.0; k];
        for (j, &v) in self.clique.iter().enumerate() {
            let s = (x[v - 1] * scale).clamp(0.0, scale);
            let i = (s as usize).min(q - 2);
            base[j] = i;
            frac[j] = s - i as f64;
        }
        let mut acc = 0.0;
        let mut node = vec![0usize; k];
        for corner in 0..(1usize << k) {
            let mut w = 1.0;
            for j in 0..k {
                let up = corner >> j & 1 == 1;
                node[j] = base[j] + up as usize;
                w *= if up { frac[j] } else { 1.0 - frac[j] };
            }
            if w != 0.0 {
                acc += w * self.node_value(&node);
            }
        }
        acc
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Largest relative error `|p - prod psi| / p` over the `q^d` node grid,
/// using the tabulated potentials at grid nodes.
pub fn max_reconstruction_error<F: Fn(&[f64]) -> f64>(
    oracle: &DensityOracle<F>,
    tables: &[PotentialTable],
    q: usize,
) -> Result<f64> {
    if tables.iter().any(|t| t.resolution != q) {
        return Err(Error::invalid("tables were tabulated at a different resolution"));
    }
    let d = oracle.d;
    let size = checked_pow(q, d).unwrap_or(u128::MAX);
    check_budget("reconstruction grid", size, TABLE_BUDGET, "")?;
    let mut digits = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut node = Vec::new();
    let mut worst: f64 = 0.0;
    loop {
        for (xi, &i) in x.iter_mut().zip(&digits) {
            *xi = i as f64 / (q - 1) as f64;
        }
        let p = oracle.query(&x)?;
        let recon: f64 = tables
            .iter()
            .map(|t| {
                node.clear();
                node.extend(t.clique.iter().map(|&v| digits[v - 1]));
                t.node_value(&node)
            })
            .product();
        worst = worst.max((p - recon).abs() / p);
        if !odometer_step(&mut digits, q) {
            break;
        }
    }
    Ok(worst)
}
