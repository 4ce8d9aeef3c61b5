//! Pixel-pair dependence statistics over a corpus of grayscale images,
//! unconditionally and conditioned on a third pixel sitting near its median.
//!
//! Pixels are addressed as 1-based `(row, col)`.

use alloc::format;
use alloc::string::String;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{floor, lower_median, pearson};
use crate::synth::{make_grid_density, GibbsConfig, PairPotential};

/// A `rows x cols` grayscale image with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{rows}x{cols} image needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Intensity at 1-based `(row, col)`.
    pub fn get(&self, p: Pixel) -> f64 {
        self.data[(p.0 - 1) * self.cols + (p.1 - 1)]
    }

    /// Top-left `rows x cols` window.
    pub fn crop(&self, rows: usize, cols: usize) -> Option<Self> {
        if rows > self.rows || cols > self.cols {
            return None;
        }
        let data = (0..rows)
            .flat_map(|r| self.data[r * self.cols..r * self.cols + cols].iter().copied())
            .collect();
        Some(Self { rows, cols, data })
    }
}

fn is_pgm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Decodes a binary 8-bit graymap (`P5`, maxval 255).
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::PgmHeader("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (i, slot) in fields.iter_mut().enumerate() {
        // whitespace and comments before each field
        loop {
            match bytes.get(pos) {
                Some(&b) if is_pgm_space(b) => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            let name = ["width", "height", "maxval"][i];
            return Err(Error::PgmHeader(format!("expected {name} at byte {start}")));
        }
        let text = core::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        *slot = text
            .parse()
            .map_err(|_| Error::PgmHeader(format!("number {text} is too large")))?;
    }
    match bytes.get(pos) {
        Some(&b) if is_pgm_space(b) => pos += 1,
        _ => return Err(Error::PgmHeader("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::PgmHeader(format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::PgmDepth(maxval.min(u32::MAX as u64) as u32));
    }
    let (rows, cols) = (height as usize, width as usize);
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::PgmHeader("image size overflows".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::PgmTruncated {
            expected,
            found: payload.len(),
        });
    }
    let data = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(GrayImage { rows, cols, data })
}

/// Encodes an image as `P5` with intensities rounded to `0..=255`.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols, img.rows).into_bytes();
    out.extend(img.data.iter().map(|&v| floor(v * 255.0 + 0.5).clamp(0.0, 255.0) as u8));
    out
}

/// What to do with images whose dimensions differ from the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimPolicy {
    /// Keep the top-left window of larger images; smaller ones are an error.
    Crop,
    /// Any mismatch is an error.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageCorpus {
    rows: usize,
    cols: usize,
    images: Vec<GrayImage>,
    /// Where each image came from.
    pub sources: Vec<String>,
    /// Number of images that were cropped.
    pub cropped: usize,
}

impl ImageCorpus {
    /// Builds a corpus of `rows x cols` images; the first image fixes the
    /// dimensions when `target` is `None`.
    pub fn new(
        images: Vec<(String, GrayImage)>,
        target: Option<(usize, usize)>,
        policy: DimPolicy,
    ) -> Result<Self> {
        let first = images.first().ok_or(Error::EmptyCorpus)?;
        let (rows, cols) = target.unwrap_or((first.1.rows, first.1.cols));
        let mut out = Vec::with_capacity(images.len());
        let mut sources = Vec::with_capacity(images.len());
        let mut cropped = 0;
        for (src, img) in images {
            let img = if (img.rows, img.cols) == (rows, cols) {
                img
            } else {
                let mismatch = Error::DimensionMismatch {
                    expected: (rows, cols),
                    found: (img.rows, img.cols),
                };
                match policy {
                    DimPolicy::Reject => return Err(mismatch),
                    DimPolicy::Crop => {
                        cropped += 1;
                        img.crop(rows, cols).ok_or(mismatch)?
                    }
                }
            };
            out.push(img);
            sources.push(src);
        }
        Ok(Self {
            rows,
            cols,
            images: out,
            sources,
            cropped,
        })
    }

    pub fn from_images(images: Vec<GrayImage>) -> Result<Self> {
        let named = images
            .into_iter()
            .enumerate()
            .map(|(i, im)| (format!("#{i}"), im))
            .collect();
        Self::new(named, None, DimPolicy::Reject)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[GrayImage] {
        &self.images
    }

    fn check_pixel(&self, p: Pixel) -> Result<()> {
        if p.0 == 0 || p.1 == 0 || p.0 > self.rows || p.1 > self.cols {
            return Err(Error::invalid(format!(
                "pixel ({}, {}) outside the {}x{} images",
                p.0, p.1, self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Values of one pixel across the corpus.
    pub fn pixel_values(&self, p: Pixel) -> Result<Vec<f64>> {
        self.check_pixel(p)?;
        Ok(self.images.iter().map(|im| im.get(p)).collect())
    }
}

/// 1-based `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pixel(pub usize, pub usize);

impl core::str::FromStr for Pixel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("pixel must look like ROW,COL, got {s:?}"));
        let (r, c) = s.split_once(',').ok_or_else(bad)?;
        Ok(Pixel(r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
    }
}

/// How images are selected by the conditioning pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    /// `|value - median| <= tolerance`; `None` means half the IQR.
    Tolerance { tolerance: Option<f64> },
    /// The `k` images nearest the median, ties to the lower image index.
    Nearest { k: usize },
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Tolerance { tolerance: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub pixel: Pixel,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub a: Pixel,
    pub b: Pixel,
    pub pairs: Vec<(f64, f64)>,
    pub count: usize,
    pub correlation: f64,
    /// Lower median of the conditioning pixel, when conditioned.
    pub median: Option<f64>,
    /// Tolerance actually applied in tolerance mode.
    pub tolerance: Option<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Half the interquartile range.
pub fn half_iqr(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    0.5 * (quantile(&s, 0.75) - quantile(&s, 0.25))
}

/// Scatter of `(A, B)` values and their Pearson correlation, optionally
/// restricted to images where the conditioning pixel is near its median.
pub fn pair_scatter(corpus: &ImageCorpus, a: Pixel, b: Pixel, condition: Option<Condition>) -> Result<Scatter> {
    let va = corpus.pixel_values(a)?;
    let vb = corpus.pixel_values(b)?;
    let (keep, median, tolerance) = match condition {
        None => ((0..corpus.len()).collect::<Vec<_>>(), None, None),
        Some(c) => {
            let vc = corpus.pixel_values(c.pixel)?;
            let med = lower_median(&vc);
            match c.selection {
                Selection::Tolerance { tolerance } => {
                    let tol = tolerance.unwrap_or_else(|| half_iqr(&vc));
                    let keep = (0..vc.len()).filter(|&i| (vc[i] - med).abs() <= tol).collect();
                    (keep, Some(med), Some(tol))
                }
                Selection::Nearest { k } => {
                    let mut order: Vec<usize> = (0..vc.len()).collect();
                    order.sort_by(|&i, &j| {
                        (vc[i] - med).abs().total_cmp(&(vc[j] - med).abs()).then(i.cmp(&j))
                    });
                    order.truncate(k);
                    order.sort_unstable();
                    (order, Some(med), None)
                }
            }
        }
    };
    if keep.len() < 2 {
        return Err(Error::invalid(format!(
            "only {} image(s) satisfy the condition; need at least 2",
            keep.len()
        )));
    }
    let xs: Vec<f64> = keep.iter().map(|&i| va[i]).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| vb[i]).collect();
    Ok(Scatter {
        a,
        b,
        correlation: pearson(&xs, &ys),
        pairs: xs.into_iter().zip(ys).collect(),
        count: keep.len(),
        median,
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub offset: (isize, isize),
    /// Chebyshev ring index.
    pub ring: usize,
    pub pixel: Pixel,
    pub unconditional: f64,
    pub conditional: f64,
    pub conditional_count: usize,
}

/// Correlations between `anchor` and every pixel in Chebyshev rings
/// `1..=max_offset` around it (offset 0 excluded), unconditionally and
/// given `neighbor` near its median.
pub fn correlation_profile(
    corpus: &ImageCorpus,
    anchor: Pixel,
    neighbor: Pixel,
    selection: Selection,
    max_offset: usize,
) -> Result<Vec<ProfileRow>> {
    corpus.check_pixel(anchor)?;
    corpus.check_pixel(neighbor)?;
    let (rows, cols) = corpus.dims();
    let cond = Condition {
        pixel: neighbor,
        selection,
    };
    let mut out = Vec::new();
    let m = max_offset as isize;
    for ring in 1..=m {
        for dr in -ring..=ring {
            for dc in -ring..=ring {
                if dr.abs().max(dc.abs()) != ring {
                    continue;
                }
                let (r, c) = (anchor.0 as isize + dr, anchor.1 as isize + dc);
                if r < 1 || c < 1 || r > rows as isize || c > cols as isize {
                    continue;
                }
                let p = Pixel(r as usize, c as usize);
                let u = pair_scatter(corpus, anchor, p, None)?;
                let k = pair_scatter(corpus, anchor, p, Some(cond))?;
                out.push(ProfileRow {
                    offset: (dr, dc),
                    ring: ring as usize,
                    pixel: p,
                    unconditional: u.correlation,
                    conditional: k.correlation,
                    conditional_count: k.count,
                });
            }
        }
    }
    Ok(out)
}

/// Corpus generator: images drawn from a pairwise MRF on the
/// `rows x cols` grid (4-neighbour) by Gibbs sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub rows: usize,
    pub cols: usize,
    pub images: usize,
    pub potential: PairPotential,
    pub gibbs: GibbsConfig,
}

pub fn synthetic_grid_corpus(spec: &SyntheticCorpusSpec, seed: u64) -> Result<ImageCorpus> {
    let p = make_grid_density(spec.rows, spec.cols, 1, spec.potential, 2)?;
    let s = p.sample(spec.images, seed, &spec.gibbs)?.samples;
    let images = s
        .rows()
        .map(|x| GrayImage::new(spec.rows, spec.cols, x.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    ImageCorpus::from_images(images)
}

/// Corpus of iid uniform pixels.
pub fn noise_corpus(rows: usize, cols: usize, images: usize, seed: u64) -> Result<ImageCorpus> {
    use rand::Rng as _;
    let mut rng = crate::rng::rng_from_seed(seed);
    let images = (0..images)
        .map(|_| GrayImage::new(rows, cols, (0..rows * cols).map(|_| rng.random()).collect()))
        .collect::<Result<Vec<_>>>()?;
    ImageCorpus::from_images(images)
}
