//! Measurement operators.
//!
//! A [`SensingMatrix`] is either dense (Gaussian, Bernoulli, or user-supplied
//! entries) or structured (partial circulant / partial Toeplitz). Structured
//! matrices keep only their generator vector and apply themselves through FFT
//! convolution, so memory is O(n + m) and a product costs O(n log n).

mod diagnostics;
mod structured;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, Stream};

pub use diagnostics::{mutual_coherence, required_measurements, rip_estimate, MeasurementRule};
use structured::{CirculantOp, ToeplitzOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Gaussian,
    Bernoulli,
    Circulant,
    Toeplitz,
    /// Entries supplied by the caller; cannot be rebuilt from a descriptor.
    Explicit,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gaussian => "gaussian",
            Scheme::Bernoulli => "bernoulli",
            Scheme::Circulant => "circulant",
            Scheme::Toeplitz => "toeplitz",
            Scheme::Explicit => "explicit",
        }
    }

    pub fn is_structured(self) -> bool {
        matches!(self, Scheme::Circulant | Scheme::Toeplitz)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Scheme::Gaussian),
            "bernoulli" => Ok(Scheme::Bernoulli),
            "circulant" => Ok(Scheme::Circulant),
            "toeplitz" => Ok(Scheme::Toeplitz),
            other => invalid(format!("unknown sensing scheme `{other}`")),
        }
    }
}

/// Which rows of the full structured matrix are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSelection {
    #[default]
    First,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatrixOptions {
    /// Probability that a structured generator entry is nonzero.
    pub density: f64,
    pub row_selection: RowSelection,
    /// Explicit structured generator, used unscaled.
    pub generator: Option<Vec<f64>>,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self { density: 1.0, row_selection: RowSelection::First, generator: None }
    }
}

impl MatrixOptions {
    pub fn with_density(density: f64) -> Self {
        Self { density, ..Self::default() }
    }
}

/// Everything needed to rebuild a matrix; this is what gets persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDescriptor {
    pub scheme: Scheme,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub options: MatrixOptions,
}

impl MatrixDescriptor {
    pub fn build(&self) -> Result<SensingMatrix> {
        build_matrix(self.scheme, self.m, self.n, self.seed, &self.options)
    }
}

#[derive(Clone)]
enum Storage {
    /// Row-major `m × n`.
    Dense(Vec<f64>),
    Circulant(CirculantOp),
    Toeplitz(ToeplitzOp),
}

/// An `m × n` measurement operator.
#[derive(Clone)]
pub struct SensingMatrix {
    scheme: Scheme,
    m: usize,
    n: usize,
    seed: u64,
    scale: f64,
    options: MatrixOptions,
    storage: Storage,
}

impl fmt::Debug for SensingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensingMatrix")
            .field("scheme", &self.scheme)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("seed", &self.seed)
            .field("scale", &self.scale)
            .field("storage_len", &self.storage_len())
            .finish()
    }
}

/// Build a sensing matrix of the given scheme.
///
/// Gaussian entries are `N(0, 1/m)` and Bernoulli entries `±1/√m`. Structured
/// generators are Rademacher entries kept with probability `density`, scaled
/// by `1/√(m·density)` so that columns have unit expected energy.
pub fn build_matrix(scheme: Scheme, m: usize, n: usize, seed: u64, options: &MatrixOptions) -> Result<SensingMatrix> {
    if m == 0 || n == 0 {
        return invalid("matrix dimensions must be positive");
    }
    if m > n {
        return invalid(format!("m = {m} exceeds n = {n}"));
    }
    if !(options.density > 0.0 && options.density <= 1.0) {
        return invalid(format!("generator density {} outside (0, 1]", options.density));
    }
    let mut rng = stream_rng(seed, Stream::Matrix);
    let inv_sqrt_m = 1.0 / (m as f64).sqrt();
    let (storage, scale) = match scheme {
        Scheme::Gaussian => {
            let data = (0..m * n)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g * inv_sqrt_m
                })
                .collect();
            (Storage::Dense(data), inv_sqrt_m)
        }
        Scheme::Bernoulli => {
            let data = (0..m * n).map(|_| if rng.random::<bool>() { inv_sqrt_m } else { -inv_sqrt_m }).collect();
            (Storage::Dense(data), inv_sqrt_m)
        }
        Scheme::Circulant | Scheme::Toeplitz => {
            let rows: Vec<usize> = match options.row_selection {
                RowSelection::First => (0..m).collect(),
                RowSelection::Random => {
                    let mut r = index::sample(&mut rng, n, m).into_vec();
                    r.sort_unstable();
                    r
                }
            };
            // Full structured matrix height the selected rows come from.
            let full_rows = match options.row_selection {
                RowSelection::First => m,
                RowSelection::Random => n,
            };
            let len = if scheme == Scheme::Circulant { n } else { n + full_rows - 1 };
            let (generator, scale) = match &options.generator {
                Some(g) => {
                    if g.len() != len {
                        return invalid(format!("{scheme} generator must have length {len}, got {}", g.len()));
                    }
                    (g.clone(), 1.0)
                }
                None => {
                    let scale = 1.0 / (m as f64 * options.density).sqrt();
                    let g = (0..len)
                        .map(|_| {
                            let keep = options.density >= 1.0 || rng.random::<f64>() < options.density;
                            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            if keep {
                                sign * scale
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    (g, scale)
                }
            };
            let storage = if scheme == Scheme::Circulant {
                Storage::Circulant(CirculantOp::new(generator, rows))
            } else {
                Storage::Toeplitz(ToeplitzOp::new(generator, rows, n))
            };
            (storage, scale)
        }
        Scheme::Explicit => return invalid("explicit matrices are built with SensingMatrix::from_dense"),
    };
    Ok(SensingMatrix { scheme, m, n, seed, scale, options: options.clone(), storage })
}

impl SensingMatrix {
    /// Wrap caller-supplied row-major entries.
    pub fn from_dense(m: usize, n: usize, row_major: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 || row_major.len() != m * n {
            return invalid(format!("expected {m}×{n} = {} entries, got {}", m * n, row_major.len()));
        }
        Ok(Self {
            scheme: Scheme::Explicit,
            m,
            n,
            seed: 0,
            scale: 1.0,
            options: MatrixOptions::default(),
            storage: Storage::Dense(row_major),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Normalization factor applied to the random entries.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn descriptor(&self) -> MatrixDescriptor {
        MatrixDescriptor { scheme: self.scheme, m: self.m, n: self.n, seed: self.seed, options: self.options.clone() }
    }

    /// Number of stored defining values (`m·n` for dense, O(n + m) for structured).
    pub fn storage_len(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.len(),
            Storage::Circulant(op) => op.storage_len(),
            Storage::Toeplitz(op) => op.storage_len(),
        }
    }

    /// Generator vector of a structured matrix.
    pub fn generator(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(_) => None,
            Storage::Circulant(op) => Some(op.generator()),
            Storage::Toeplitz(op) => Some(op.generator()),
        }
    }

    /// Indices of the kept rows of a structured matrix.
    pub fn row_indices(&self) -> Option<&[usize]> {
        match &self.storage {
            Storage::Dense(_) => None,
            Storage::Circulant(op) => Some(op.rows()),
            Storage::Toeplitz(op) => Some(op.rows()),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Circulant(op) => op.entry(i, j),
            Storage::Toeplitz(op) => op.entry(i, j),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.entry(i, j)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(d) => DMatrix::from_row_slice(self.m, self.n, d),
            _ => DMatrix::from_fn(self.m, self.n, |i, j| self.entry(i, j)),
        }
    }

    /// `Φ x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return invalid(format!("operand length {} does not match n = {}", x.len(), self.n));
        }
        Ok(match &self.storage {
            Storage::Dense(d) => d.chunks_exact(self.n).map(|row| crate::linalg::dot(row, x)).collect(),
            Storage::Circulant(op) => op.apply(x),
            Storage::Toeplitz(op) => op.apply(x),
        })
    }

    /// `Φᵀ v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.m {
            return invalid(format!("operand length {} does not match m = {}", v.len(), self.m));
        }
        Ok(match &self.storage {
            Storage::Dense(d) => {
                let mut out = vec![0.0; self.n];
                for (row, &vi) in d.chunks_exact(self.n).zip(v) {
                    if vi != 0.0 {
                        for (o, a) in out.iter_mut().zip(row) {
                            *o += a * vi;
                        }
                    }
                }
                out
            }
            Storage::Circulant(op) => op.apply_transpose(v),
            Storage::Toeplitz(op) => op.apply_transpose(v),
        })
    }
}

/// Compressed observations `y = Φx + w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub values: Vec<f64>,
    pub noise_variance: f64,
    pub quantized: bool,
}

impl MeasurementVector {
    pub fn noiseless(values: Vec<f64>) -> Self {
        Self { values, noise_variance: 0.0, quantized: false }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `y = Φx + w` with `w` i.i.d. `N(0, noise_variance)` drawn from `seed`.
pub fn compress(matrix: &SensingMatrix, x: &[f64], noise_variance: f64, seed: u64) -> Result<MeasurementVector> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return invalid(format!("noise variance {noise_variance} must be finite and nonnegative"));
    }
    let mut values = matrix.apply(x)?;
    if noise_variance > 0.0 {
        let sd = noise_variance.sqrt();
        let mut rng = stream_rng(seed, Stream::Noise);
        for v in &mut values {
            let w: f64 = StandardNormal.sample(&mut rng);
            *v += sd * w;
        }
    }
    Ok(MeasurementVector { values, noise_variance, quantized: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn dense_oracle(a: &SensingMatrix, x: &[f64]) -> Vec<f64> {
        (0..a.m()).map(|i| (0..a.n()).map(|j| a.entry(i, j) * x[j]).sum()).collect()
    }

    fn dense_oracle_t(a: &SensingMatrix, v: &[f64]) -> Vec<f64> {
        (0..a.n()).map(|j| (0..a.m()).map(|i| a.entry(i, j) * v[i]).sum()).collect()
    }

    #[test]
    fn circulant_layout_follows_cyclic_shift() {
        let c = vec![10.0, 11.0, 12.0, 13.0];
        let opts = MatrixOptions { generator: Some(c), ..Default::default() };
        let a = build_matrix(Scheme::Circulant, 4, 4, 0, &opts).unwrap();
        let want =
            [[10.0, 11.0, 12.0, 13.0], [13.0, 10.0, 11.0, 12.0], [12.0, 13.0, 10.0, 11.0], [11.0, 12.0, 13.0, 10.0]];
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert_eq!(a.entry(i, j), w);
            }
        }
    }

    #[test]
    fn toeplitz_has_constant_diagonals() {
        let a = build_matrix(Scheme::Toeplitz, 3, 4, 8, &MatrixOptions::default()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(a.entry(i, j), a.entry(i + 1, j + 1));
            }
        }
        assert_eq!(a.generator().unwrap().len(), 4 + 3 - 1);
    }

    #[test]
    fn gaussian_column_norms_near_one() {
        let a = build_matrix(Scheme::Gaussian, 64, 256, 1, &MatrixOptions::default()).unwrap();
        let mean = (0..256).map(|j| crate::linalg::norm2(&a.column(j))).sum::<f64>() / 256.0;
        assert!((mean - 1.0).abs() < 0.05, "mean column norm {mean}");
    }

    #[test]
    fn bernoulli_entries_are_signed_constants() {
        let a = build_matrix(Scheme::Bernoulli, 16, 32, 1, &MatrixOptions::default()).unwrap();
        let s = 0.25;
        assert!((0..16).all(|i| (0..32).all(|j| (a.entry(i, j).abs() - s).abs() < 1e-15)));
    }

    #[test]
    fn bad_dimensions_rejected() {
        assert!(build_matrix(Scheme::Gaussian, 5, 4, 0, &MatrixOptions::default()).is_err());
        assert!("hadamard".parse::<Scheme>().is_err());
    }

    #[test]
    fn identity_circulant_passes_signal_through() {
        let mut c = vec![0.0; 16];
        c[0] = 1.0;
        let opts = MatrixOptions { generator: Some(c), ..Default::default() };
        let a = build_matrix(Scheme::Circulant, 16, 16, 0, &opts).unwrap();
        let x = random_vec(16, 2);
        let y = compress(&a, &x, 0.0, 0).unwrap();
        for (u, v) in y.values.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_compresses_to_zero() {
        let a = build_matrix(Scheme::Toeplitz, 10, 40, 3, &MatrixOptions::default()).unwrap();
        let y = compress(&a, &[0.0; 40], 0.0, 1).unwrap();
        assert!(y.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn compress_is_deterministic() {
        let a = build_matrix(Scheme::Gaussian, 10, 40, 3, &MatrixOptions::default()).unwrap();
        let x = random_vec(40, 4);
        assert_eq!(compress(&a, &x, 0.1, 9).unwrap(), compress(&a, &x, 0.1, 9).unwrap());
        assert!(compress(&a, &x[..39], 0.0, 9).is_err());
    }

    #[test]
    fn structured_storage_is_linear() {
        let a = build_matrix(Scheme::Circulant, 256, 1024, 3, &MatrixOptions::default()).unwrap();
        assert!(a.storage_len() <= 1024 + 256);
        let t = build_matrix(Scheme::Toeplitz, 256, 1024, 3, &MatrixOptions::default()).unwrap();
        assert!(t.storage_len() <= 1024 + 2 * 256);
        let g = build_matrix(Scheme::Gaussian, 256, 1024, 3, &MatrixOptions::default()).unwrap();
        assert_eq!(g.storage_len(), 256 * 1024);
    }

    #[test]
    fn sparse_generator_density() {
        let opts = MatrixOptions::with_density(0.1);
        let a = build_matrix(Scheme::Circulant, 768, 3072, 5, &opts).unwrap();
        let nz = a.generator().unwrap().iter().filter(|v| **v != 0.0).count();
        assert!((200..420).contains(&nz), "nonzeros {nz}");
    }

    #[test]
    fn descriptor_round_trip() {
        let opts = MatrixOptions { density: 0.5, row_selection: RowSelection::Random, generator: None };
        let a = build_matrix(Scheme::Toeplitz, 7, 20, 11, &opts).unwrap();
        let json = serde_json::to_string(&a.descriptor()).unwrap();
        let b: MatrixDescriptor = serde_json::from_str(&json).unwrap();
        let b = b.build().unwrap();
        assert_eq!(a.to_dense(), b.to_dense());
    }

    #[test]
    fn fast_apply_matches_dense_on_random_cases() {
        let schemes = [Scheme::Circulant, Scheme::Toeplitz, Scheme::Gaussian, Scheme::Bernoulli];
        for case in 0..100u64 {
            let n = 5 + (case as usize * 37) % 300;
            let m = 1 + (case as usize * 13) % n;
            let scheme = schemes[case as usize % 4];
            let rows = if case % 3 == 0 { RowSelection::Random } else { RowSelection::First };
            let opts =
                MatrixOptions { density: if case % 2 == 0 { 1.0 } else { 0.3 }, row_selection: rows, generator: None };
            let a = build_matrix(scheme, m, n, case, &opts).unwrap();
            let x = random_vec(n, case + 1000);
            let v = random_vec(m, case + 2000);
            let fast = a.apply(&x).unwrap();
            let slow = dense_oracle(&a, &x);
            let nx = crate::linalg::norm2(&x);
            let err = fast.iter().zip(&slow).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err / nx < 1e-10, "{scheme} case {case}: {err}");
            let fast_t = a.apply_transpose(&v).unwrap();
            let slow_t = dense_oracle_t(&a, &v);
            let nv = crate::linalg::norm2(&v);
            let err = fast_t.iter().zip(&slow_t).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err / nv < 1e-10, "{scheme} transpose case {case}: {err}");
        }
    }

    proptest! {
        #[test]
        fn circulant_entry_law(n in 2usize..40, seed in any::<u64>()) {
            let m = 1 + (seed as usize) % n;
            let opts = MatrixOptions { row_selection: RowSelection::Random, ..Default::default() };
            let a = build_matrix(Scheme::Circulant, m, n, seed, &opts).unwrap();
            let c = a.generator().unwrap();
            let rows = a.row_indices().unwrap();
            for i in 0..m {
                for j in 0..n {
                    prop_assert_eq!(a.entry(i, j), c[(j + n - rows[i]) % n]);
                }
            }
        }

        #[test]
        fn toeplitz_diagonal_law(n in 2usize..40, seed in any::<u64>()) {
            let m = 1 + (seed as usize) % n;
            let a = build_matrix(Scheme::Toeplitz, m, n, seed, &MatrixOptions::default()).unwrap();
            for i in 0..m.saturating_sub(1) {
                for j in 0..n - 1 {
                    prop_assert_eq!(a.entry(i, j), a.entry(i + 1, j + 1));
                }
            }
        }
    }
}
