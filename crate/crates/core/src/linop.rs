//! Linear operators `K: R^p -> R^n` with adjoint and spectral-norm estimate.
//!
//! Two concrete storages are provided: dense row-major and compressed sparse
//! rows built from `(i, j, value)` triplets. Identity and zero maps are
//! special-cased so the solvers can be exercised on trivial instances.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::vector;

/// Defaults used when the norm is requested before anyone set it.
pub const DEFAULT_NORM_TOL: f64 = 1e-13;
pub const DEFAULT_NORM_MAX_ITERS: usize = 20_000;
pub const DEFAULT_NORM_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormSource {
    Exact,
    PowerMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub source: NormSource,
}

/// Outcome of a power-method run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMethodReport {
    pub sigma: f64,
    pub iterations: usize,
    /// `false` when `max_iters` was hit before the Rayleigh quotient settled.
    pub converged: bool,
}

#[derive(Clone)]
enum Storage {
    Dense(Vec<f64>),
    Csr {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
    Identity,
    Zero,
}

#[derive(Clone)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    storage: Storage,
    norm: OnceLock<NormEstimate>,
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.storage {
            Storage::Dense(_) => "dense",
            Storage::Csr { .. } => "sparse",
            Storage::Identity => "identity",
            Storage::Zero => "zero",
        };
        f.debug_struct("LinearMap")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("kind", &kind)
            .field("norm", &self.norm.get())
            .finish()
    }
}

impl LinearMap {
    /// Dense map from row-major data of length `rows * cols`.
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::RejectedInput("operator dimensions must be positive".into()));
        }
        check_dim("dense operator data", rows * cols, data.len())?;
        Ok(Self::with_storage(rows, cols, Storage::Dense(data)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * p);
        for row in rows {
            check_dim("dense operator row", p, row.len())?;
            data.extend_from_slice(row);
        }
        Self::dense(n, p, data)
    }

    /// Sparse map from 0-based triplets. Duplicate entries are summed.
    pub fn sparse(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::RejectedInput("operator dimensions must be positive".into()));
        }
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::RejectedInput(format!(
                    "triplet ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self::with_storage(
            rows,
            cols,
            Storage::Csr {
                indptr,
                indices,
                values,
            },
        ))
    }

    pub fn identity(n: usize) -> Self {
        let map = Self::with_storage(n, n, Storage::Identity);
        let _ = map.norm.set(NormEstimate {
            value: 1.0,
            source: NormSource::Exact,
        });
        map
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        let map = Self::with_storage(rows, cols, Storage::Zero);
        let _ = map.norm.set(NormEstimate {
            value: 0.0,
            source: NormSource::Exact,
        });
        map
    }

    /// Square diagonal map; its norm is known exactly.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        let map = Self::sparse(n, n, &triplets).expect("diagonal triplets are in range");
        let _ = map.norm.set(NormEstimate {
            value: vector::norm_inf(diag),
            source: NormSource::Exact,
        });
        map
    }

    fn with_storage(rows: usize, cols: usize, storage: Storage) -> Self {
        Self {
            rows,
            cols,
            storage,
            norm: OnceLock::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        match &self.storage {
            Storage::Zero => true,
            Storage::Dense(d) => d.iter().all(|&v| v == 0.0),
            Storage::Csr { values, .. } => values.iter().all(|&v| v == 0.0),
            Storage::Identity => false,
        }
    }

    /// True when the map is exactly `-I`.
    pub fn is_negative_identity(&self) -> bool {
        if self.rows != self.cols || matches!(self.storage, Storage::Identity | Storage::Zero) {
            return false;
        }
        let t = self.triplets();
        t.len() == self.rows && t.iter().all(|&(i, j, v)| i == j && v == -1.0)
    }

    /// Fixes the stored norm. Returns the map for chaining; a previously
    /// stored value is replaced.
    pub fn with_norm(mut self, value: f64, source: NormSource) -> Self {
        self.norm = OnceLock::new();
        let _ = self.norm.set(NormEstimate { value, source });
        self
    }

    /// Runs the power method with the given settings and stores the result.
    pub fn with_estimated_norm(self, tol: f64, max_iters: usize, seed: u64) -> Result<Self> {
        let report = self.estimate_norm(tol, max_iters, seed)?;
        Ok(self.with_norm(report.sigma, NormSource::PowerMethod))
    }

    /// Stored norm estimate, computing one with default settings on first use.
    pub fn norm_estimate(&self) -> NormEstimate {
        *self.norm.get_or_init(|| {
            let report = self
                .estimate_norm(DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITERS, DEFAULT_NORM_SEED)
                .expect("default power-method settings are valid");
            NormEstimate {
                value: report.sigma,
                source: NormSource::PowerMethod,
            }
        })
    }

    /// Shorthand for `norm_estimate().value`.
    pub fn norm(&self) -> f64 {
        self.norm_estimate().value
    }

    /// `alpha * K`; the stored norm (if any) is rescaled with the same source flag.
    pub fn scaled(&self, alpha: f64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(d.iter().map(|v| alpha * v).collect()),
            Storage::Csr {
                indptr,
                indices,
                values,
            } => Storage::Csr {
                indptr: indptr.clone(),
                indices: indices.clone(),
                values: values.iter().map(|v| alpha * v).collect(),
            },
            Storage::Identity => {
                let diag = vec![alpha; self.rows];
                return Self::diagonal(&diag);
            }
            Storage::Zero => Storage::Zero,
        };
        let out = Self::with_storage(self.rows, self.cols, storage);
        if let Some(est) = self.norm.get() {
            let _ = out.norm.set(NormEstimate {
                value: est.value * alpha.abs(),
                source: est.source,
            });
        }
        out
    }

    /// `Kx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// `Kᵀy`.
    pub fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.cols];
        self.adjoint_apply_into(y, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim("apply input", self.cols, x.len())?;
        check_dim("apply output", self.rows, out.len())?;
        self.forward(x, out);
        Ok(())
    }

    pub fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim("adjoint input", self.rows, y.len())?;
        check_dim("adjoint output", self.cols, out.len())?;
        self.adjoint(y, out);
        Ok(())
    }

    /// Unchecked forward product; callers validated dimensions up front.
    pub(crate) fn forward(&self, x: &[f64], out: &mut [f64]) {
        match &self.storage {
            Storage::Dense(data) => {
                for (row, o) in data.chunks_exact(self.cols).zip(out.iter_mut()) {
                    *o = vector::dot(row, x);
                }
            }
            Storage::Csr {
                indptr,
                indices,
                values,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let span = indptr[i]..indptr[i + 1];
                    *o = indices[span.clone()]
                        .iter()
                        .zip(&values[span])
                        .map(|(&j, &v)| v * x[j])
                        .sum();
                }
            }
            Storage::Identity => out.copy_from_slice(x),
            Storage::Zero => out.fill(0.0),
        }
    }

    pub(crate) fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        match &self.storage {
            Storage::Dense(data) => {
                out.fill(0.0);
                for (row, &yi) in data.chunks_exact(self.cols).zip(y) {
                    if yi != 0.0 {
                        vector::axpy(yi, row, out);
                    }
                }
            }
            Storage::Csr {
                indptr,
                indices,
                values,
            } => {
                out.fill(0.0);
                for (i, &yi) in y.iter().enumerate() {
                    for k in indptr[i]..indptr[i + 1] {
                        out[indices[k]] += values[k] * yi;
                    }
                }
            }
            Storage::Identity => out.copy_from_slice(y),
            Storage::Zero => out.fill(0.0),
        }
    }

    /// Power-method estimate of the largest singular value.
    ///
    /// Iterates `v <- KᵀKv / ‖KᵀKv‖` from a seeded random start until the
    /// relative change of the Rayleigh quotient drops below `tol`. A start
    /// vector annihilated by `KᵀK` is replaced by the all-ones vector. An
    /// all-zero map returns 0.
    pub fn estimate_norm(&self, tol: f64, max_iters: usize, seed: u64) -> Result<PowerMethodReport> {
        if !(tol > 0.0) || max_iters == 0 {
            return Err(Error::InvalidConfig(
                "power method needs tol > 0 and max_iters > 0".into(),
            ));
        }
        if self.is_zero() {
            return Ok(PowerMethodReport {
                sigma: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..self.cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut kv = vec![0.0; self.rows];
        let mut w = vec![0.0; self.cols];

        let normalize = |v: &mut Vec<f64>| {
            let nv = vector::norm2(v);
            vector::scale(1.0 / nv, v);
        };
        normalize(&mut v);
        self.forward(&v, &mut kv);
        self.adjoint(&kv, &mut w);
        if vector::norm2(&w) == 0.0 {
            v.fill(1.0);
            normalize(&mut v);
            self.forward(&v, &mut kv);
            self.adjoint(&kv, &mut w);
        }

        let mut lambda = vector::dot(&v, &w);
        for it in 1..=max_iters {
            let nw = vector::norm2(&w);
            if nw == 0.0 {
                // every start we tried lies in the null space
                return Ok(PowerMethodReport {
                    sigma: lambda.max(0.0).sqrt(),
                    iterations: it,
                    converged: false,
                });
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            self.forward(&v, &mut kv);
            self.adjoint(&kv, &mut w);
            let next = vector::dot(&v, &w);
            let change = (next - lambda).abs();
            lambda = next;
            if change <= tol * lambda.abs() {
                return Ok(PowerMethodReport {
                    sigma: lambda.max(0.0).sqrt(),
                    iterations: it,
                    converged: true,
                });
            }
        }
        log::warn!("power method hit max_iters={max_iters} before reaching tol={tol:e}; returning last estimate");
        Ok(PowerMethodReport {
            sigma: lambda.max(0.0).sqrt(),
            iterations: max_iters,
            converged: false,
        })
    }

    /// Nonzero entries as 0-based triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match &self.storage {
            Storage::Dense(data) => data
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(idx, &v)| (idx / self.cols, idx % self.cols, v))
                .collect(),
            Storage::Csr {
                indptr,
                indices,
                values,
            } => (0..self.rows)
                .flat_map(|i| (indptr[i]..indptr[i + 1]).map(move |k| (i, indices[k], values[k])))
                .collect(),
            Storage::Identity => (0..self.rows).map(|i| (i, i, 1.0)).collect(),
            Storage::Zero => Vec::new(),
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            _ => {
                let mut out = vec![0.0; self.rows * self.cols];
                for (i, j, v) in self.triplets() {
                    out[i * self.cols + j] = v;
                }
                out
            }
        }
    }

    /// Writes `n p nnz` followed by one `i j value` line per nonzero.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        let trips = self.triplets();
        writeln!(w, "{} {} {}", self.rows, self.cols, trips.len())?;
        for (i, j, v) in trips {
            writeln!(w, "{i} {j} {v:e}")?;
        }
        Ok(())
    }

    /// Reads the triplet format written by [`write_triplets`](Self::write_triplets).
    pub fn read_triplets<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = header?;
        let dims: Vec<usize> = parse_fields(line_no, &header)?;
        if dims.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: "header must be `n p nnz`".into(),
            });
        }
        let (n, p, nnz) = (dims[0], dims[1], dims[2]);
        let mut trips = Vec::with_capacity(nnz);
        for (line_no, line) in lines {
            let line = line?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `i j value`".into(),
                });
            }
            let bad = |what: &str| Error::Parse {
                line: line_no,
                message: format!("cannot parse {what}"),
            };
            let i: usize = parts[0].parse().map_err(|_| bad("row index"))?;
            let j: usize = parts[1].parse().map_err(|_| bad("column index"))?;
            let v: f64 = parts[2].parse().map_err(|_| bad("value"))?;
            trips.push((i, j, v));
        }
        if trips.len() != nnz {
            return Err(Error::Parse {
                line: line_no,
                message: format!("header announced {nnz} entries, found {}", trips.len()),
            });
        }
        Self::sparse(n, p, &trips)
    }

    /// Dense export, one CSV row per operator row.
    pub fn write_dense_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dense = self.to_dense();
        for row in dense.chunks_exact(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn parse_fields(line_no: usize, s: &str) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("cannot parse `{t}`"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_dense(n: usize, p: usize, seed: u64) -> LinearMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        LinearMap::dense(n, p, data).unwrap()
    }

    #[test]
    fn identity_apply() {
        let id = LinearMap::identity(3);
        assert_eq!(id.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(id.adjoint_apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_apply() {
        let z = LinearMap::zeros(2, 3);
        assert_eq!(z.apply(&[4.0, -1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn dense_two_by_two() {
        let k = LinearMap::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(k.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(k.adjoint_apply(&[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let k = LinearMap::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!(matches!(
            k.apply(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1,
                ..
            })
        ));
        assert!(k.adjoint_apply(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let dense = random_dense(7, 5, 3);
        let sparse = LinearMap::sparse(7, 5, &dense.triplets()).unwrap();
        let x = [0.5, -1.0, 2.0, 0.0, 1.5];
        let y = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0, -2.0];
        assert!(vector::max_abs_diff(&dense.apply(&x).unwrap(), &sparse.apply(&x).unwrap()) < 1e-14);
        assert!(vector::max_abs_diff(&dense.adjoint_apply(&y).unwrap(), &sparse.adjoint_apply(&y).unwrap()) < 1e-14);
    }

    #[test]
    fn sparse_sums_duplicates() {
        let k = LinearMap::sparse(1, 2, &[(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(k.apply(&[0.0, 1.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn adjoint_identity_on_random_pairs() {
        let k = random_dense(20, 10, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let u: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = vector::dot(&k.apply(&u).unwrap(), &w);
            let rhs = vector::dot(&u, &k.adjoint_apply(&w).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn power_method_identity_and_diagonal() {
        let id = LinearMap::sparse(4, 4, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)]).unwrap();
        let r = id.estimate_norm(1e-12, 100, 1).unwrap();
        assert!((r.sigma - 1.0).abs() < 1e-8);
        let d = LinearMap::sparse(2, 2, &[(0, 0, 3.0), (1, 1, 1.0)]).unwrap();
        let r = d.estimate_norm(1e-14, 1000, 1).unwrap();
        assert!(r.converged);
        assert!((r.sigma - 3.0).abs() < 1e-6);
    }

    #[test]
    fn power_method_flags_non_convergence() {
        let k = random_dense(20, 10, 4);
        let r = k.estimate_norm(1e-15, 2, 0).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(r.sigma > 0.0);
    }

    #[test]
    fn power_method_is_deterministic() {
        let k = random_dense(15, 9, 8);
        let a = k.estimate_norm(1e-10, 500, 42).unwrap();
        let b = k.estimate_norm(1e-10, 500, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn annihilated_start_falls_back() {
        // KᵀK kills everything except the all-ones direction's first component
        let k = LinearMap::sparse(1, 3, &[(0, 0, 2.0)]).unwrap();
        let r = k.estimate_norm(1e-12, 100, 0).unwrap();
        assert!((r.sigma - 2.0).abs() < 1e-10);
    }

    #[test]
    fn triplet_text_round_trip() {
        let k = LinearMap::sparse(3, 2, &[(0, 1, 1.5), (2, 0, -2.25)]).unwrap();
        let mut buf = Vec::new();
        k.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 2 2\n"));
        let back = LinearMap::read_triplets(&buf[..]).unwrap();
        assert_eq!(back.to_dense(), k.to_dense());
    }

    #[test]
    fn triplet_text_rejects_bad_count() {
        let text = "2 2 2\n0 0 1.0\n";
        assert!(matches!(
            LinearMap::read_triplets(text.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn dense_csv_export() {
        let k = LinearMap::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let mut buf = Vec::new();
        k.write_dense_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 2);
    }

    #[test]
    fn scaling_rescales_stored_norm() {
        let k = LinearMap::diagonal(&[2.0, -5.0]);
        let s = k.scaled(-0.5);
        assert_eq!(s.norm(), 2.5);
        assert_eq!(s.apply(&[1.0, 1.0]).unwrap(), vec![-1.0, 2.5]);
    }
}
