//! Shared random embedding.
//!
//! A single `D x d_h` Gaussian matrix `S` is drawn once per run. The
//! embedding map of a `d`-dimensional subspace is the first `d` columns of
//! `S`, so a point `z` and its zero-padded extension land on the same
//! ambient point and can share one evaluation.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

const DUMP_MAGIC: &[u8; 4] = b"DSEB";
const DUMP_VERSION: u32 = 1;

/// The same closed interval `[lower, upper]` on every ambient coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientBox {
    pub lower: f64,
    pub upper: f64,
}

impl Default for AmbientBox {
    fn default() -> Self {
        Self {
            lower: -1.0,
            upper: 1.0,
        }
    }
}

impl AmbientBox {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!(
                "invalid ambient box [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Euclidean projection of one coordinate (the box is a product of intervals).
    #[inline]
    pub fn project(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lower && v <= self.upper)
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(self.lower..=self.upper)).collect()
    }
}

/// The search box of a `d`-dimensional subspace, `[-sqrt(d), sqrt(d)]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceBox {
    dim: usize,
    half_width: f64,
}

impl SubspaceBox {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            half_width: (dim as f64).sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim && z.iter().all(|v| v.abs() <= self.half_width)
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(-self.half_width, self.half_width)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SubspacePoint {
        let h = self.half_width;
        SubspacePoint((0..self.dim).map(|_| rng.gen_range(-h..=h)).collect())
    }
}

/// Coordinates of a point in a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePoint(Vec<f64>);

impl SubspacePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for SubspacePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl AsRef<[f64]> for SubspacePoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The `D x d_h` shared Gaussian matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedEmbedding {
    entries: Vec<f64>,
    ambient_dim: usize,
    max_dim: usize,
    seed: Option<u64>,
}

impl SharedEmbedding {
    /// Draws every entry i.i.d. from `N(0, 1/d_h)` (standard deviation
    /// `sqrt(1/d_h)`) using the ChaCha20 stream [`rng::EMBEDDING`] of `seed`.
    pub fn new(ambient_dim: usize, max_dim: usize, seed: u64) -> Result<Self> {
        Self::with_stream(ambient_dim, max_dim, seed, rng::EMBEDDING)
    }

    /// Like [`SharedEmbedding::new`] but drawing from an explicit stream id,
    /// for callers that need several independent matrices under one seed.
    pub fn with_stream(ambient_dim: usize, max_dim: usize, seed: u64, stream: u64) -> Result<Self> {
        if max_dim == 0 || max_dim > ambient_dim {
            return Err(Error::Config(format!(
                "maximum subspace dimension must satisfy 1 <= d_h <= D, got d_h={max_dim}, D={ambient_dim}"
            )));
        }
        let std = (1.0 / max_dim as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("finite positive std");
        let mut rng = rng::stream(seed, stream);
        let entries = (0..ambient_dim * max_dim)
            .map(|_| normal.sample(&mut rng))
            .collect();
        Ok(Self {
            entries,
            ambient_dim,
            max_dim,
            seed: Some(seed),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Seed the matrix was drawn from; `None` for a matrix loaded from a dump.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.max_dim + col]
    }

    /// Embedding map of the `d`-dimensional subspace: the first `d` columns.
    pub fn slice(&self, d: usize) -> Result<EmbeddingMap<'_>> {
        if d == 0 || d > self.max_dim {
            return Err(Error::Config(format!(
                "subspace dimension {d} outside [1, {}]",
                self.max_dim
            )));
        }
        Ok(EmbeddingMap { emb: self, dim: d })
    }

    /// Writes the audit dump: `"DSEB"`, version, `D`, `d_h` (all `u32` LE)
    /// followed by the row-major entries as `f64` LE.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.ambient_dim as u32).to_le_bytes())?;
        w.write_all(&(self.max_dim as u32).to_le_bytes())?;
        for v in &self.entries {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let bad = |what: &str| Error::Data(format!("embedding dump: {what}"));
        let mut header = [0u8; 16];
        r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[0..4] != DUMP_MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        if word(4) != DUMP_VERSION {
            return Err(bad(&format!("unsupported version {}", word(4))));
        }
        let (ambient_dim, max_dim) = (word(8) as usize, word(12) as usize);
        if max_dim == 0 || max_dim > ambient_dim {
            return Err(bad("invalid shape"));
        }
        let mut entries = Vec::with_capacity(ambient_dim * max_dim);
        let mut buf = [0u8; 8];
        for _ in 0..ambient_dim * max_dim {
            r.read_exact(&mut buf).map_err(|_| bad("truncated body"))?;
            entries.push(f64::from_le_bytes(buf));
        }
        Ok(Self {
            entries,
            ambient_dim,
            max_dim,
            seed: None,
        })
    }
}

/// Borrowed `D x d` view onto the leading columns of a [`SharedEmbedding`].
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingMap<'a> {
    emb: &'a SharedEmbedding,
    dim: usize,
}

impl EmbeddingMap<'_> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.emb.ambient_dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(col < self.dim);
        self.emb.get(row, col)
    }

    /// The unprojected product `A_d z`.
    ///
    /// Zero coordinates are skipped rather than multiplied, so
    /// `A_{d'} pad(z, d')` and `A_d z` run the identical floating-point
    /// sequence and agree bit for bit.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::Usage(format!(
                "point has dimension {}, embedding map expects {}",
                z.len(),
                self.dim
            )));
        }
        let stride = self.emb.max_dim;
        let out = self
            .emb
            .entries
            .chunks_exact(stride)
            .map(|row| {
                row[..self.dim]
                    .iter()
                    .zip(z)
                    .filter(|(_, &zk)| zk != 0.0)
                    .fold(0.0, |acc, (&a, &zk)| acc + a * zk)
            })
            .collect();
        Ok(out)
    }
}

/// Maps `z` into the ambient box: the componentwise clamp of `A_d z`.
pub fn embed(map: &EmbeddingMap<'_>, z: &SubspacePoint, bounds: &AmbientBox) -> Result<Vec<f64>> {
    let mut x = map.apply(z.as_slice())?;
    for v in &mut x {
        *v = bounds.project(*v);
    }
    Ok(x)
}

/// Appends zeros to `z` until it has `new_dim` coordinates.
pub fn pad(z: &SubspacePoint, new_dim: usize) -> Result<SubspacePoint> {
    if new_dim < z.dim() {
        return Err(Error::Usage(format!(
            "cannot pad a {}-dimensional point down to {new_dim}",
            z.dim()
        )));
    }
    let mut v = Vec::with_capacity(new_dim);
    v.extend_from_slice(z.as_slice());
    v.resize(new_dim, 0.0);
    Ok(SubspacePoint(v))
}

/// Observations `(z, y)` in a common subspace, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDataset {
    dim: usize,
    points: Vec<SubspacePoint>,
    values: Vec<f64>,
}

impl SubspaceDataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn push(&mut self, z: SubspacePoint, y: f64) -> Result<()> {
        if z.dim() != self.dim {
            return Err(Error::Usage(format!(
                "point has dimension {}, dataset holds dimension {}",
                z.dim(),
                self.dim
            )));
        }
        if !y.is_finite() {
            return Err(Error::Data(format!("non-finite objective value {y}")));
        }
        self.points.push(z);
        self.values.push(y);
        Ok(())
    }

    pub fn points(&self) -> &[SubspacePoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SubspacePoint, f64)> {
        self.points.iter().zip(self.values.iter().copied())
    }

    /// Index and value of the smallest observation; the earliest wins ties.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold(None, |acc, (i, y)| match acc {
                Some((_, b)) if b <= y => acc,
                _ => Some((i, y)),
            })
    }
}

/// Builds the dataset of a newly entered subspace of dimension `new_dim`.
///
/// Without previous data, one point is drawn uniformly from the subspace box
/// and scored with `evaluate`. Otherwise every previous observation is
/// zero-padded to `new_dim` with its value kept as is, and `evaluate` is
/// not called.
pub fn init_dataset<R, F>(
    prev: Option<&SubspaceDataset>,
    new_dim: usize,
    rng: &mut R,
    evaluate: F,
) -> Result<SubspaceDataset>
where
    R: Rng + ?Sized,
    F: FnOnce(&SubspacePoint) -> Result<f64>,
{
    if new_dim == 0 {
        return Err(Error::Usage("subspace dimension must be positive".into()));
    }
    match prev {
        Some(prev) if !prev.is_empty() => {
            if new_dim < prev.dim {
                return Err(Error::Usage(format!(
                    "cannot shrink dataset from dimension {} to {new_dim}",
                    prev.dim
                )));
            }
            let mut out = SubspaceDataset::new(new_dim);
            out.points.reserve(prev.len());
            for (z, y) in prev.iter() {
                out.points.push(pad(z, new_dim)?);
                out.values.push(y);
            }
            Ok(out)
        }
        _ => {
            let z = SubspaceBox::new(new_dim).sample(rng);
            let y = evaluate(&z)?;
            let mut out = SubspaceDataset::new(new_dim);
            out.push(z, y)?;
            Ok(out)
        }
    }
}
