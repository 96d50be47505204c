//! Dense complex vectors and matrices, the ULA steering vector, a dominant
//! singular-vector solver and reproducible random streams.
//!
//! Everything here is deliberately small: the rest of the crate needs
//! matrix-vector products, inner products, one dominant singular pair and
//! circularly-symmetric complex Gaussian draws, nothing more.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    data: Vec<C64>,
}

impl CVector {
    pub fn from_vec(data: Vec<C64>) -> Self {
        CVector { data }
    }

    pub fn zeros(len: usize) -> Self {
        CVector {
            data: vec![ZERO; len],
        }
    }

    pub fn filled(len: usize, value: C64) -> Self {
        CVector {
            data: vec![value; len],
        }
    }

    /// Vector of unit-modulus entries `e^{j theta_k}`.
    pub fn from_phases(phases: &[f64]) -> Self {
        CVector {
            data: phases.iter().map(|&t| C64::from_polar(1.0, t)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.data.iter()
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Bilinear product `self^T other` (no conjugation).
    pub fn dot(&self, other: &CVector) -> Result<C64> {
        self.check_same_len(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(ZERO, |acc, (a, b)| acc + a * b))
    }

    /// Hermitian inner product `self^H other`.
    pub fn inner(&self, other: &CVector) -> Result<C64> {
        self.check_same_len(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(ZERO, |acc, (a, b)| acc + a.conj() * b))
    }

    /// Entrywise product, i.e. `diag(self) other`.
    pub fn hadamard(&self, other: &CVector) -> Result<CVector> {
        self.check_same_len(other)?;
        Ok(CVector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn conj(&self) -> CVector {
        CVector {
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CVector {
        CVector {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        self.check_same_len(other)?;
        Ok(CVector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Returns the vector scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<CVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateMatrix(
                "cannot normalize a zero vector".into(),
            ));
        }
        Ok(self.scale_real(1.0 / n))
    }

    /// Largest deviation of any entry's modulus from 1.
    pub fn max_modulus_error(&self) -> f64 {
        self.data
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_len(&self, other: &CVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::shape(
                format!("vector of length {}", self.len()),
                format!("vector of length {}", other.len()),
            ));
        }
        Ok(())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} entries for a {rows}x{cols} matrix", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::shape(
                    format!("row {i} of length {c}"),
                    format!("length {}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(CMatrix {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Outer product `u v^T` (no conjugation).
    pub fn outer(u: &CVector, v: &CVector) -> Self {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for a in u.iter() {
            data.extend(v.iter().map(|b| a * b));
        }
        CMatrix {
            rows: u.len(),
            cols: v.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vector(&self, i: usize) -> CVector {
        CVector::from_vec(self.row(i).to_vec())
    }

    /// Flattens a single-row or single-column matrix into a vector.
    pub fn into_vector(self) -> Result<CVector> {
        if self.rows != 1 && self.cols != 1 {
            return Err(Error::shape(
                "a single row or column",
                format!("{}x{} matrix", self.rows, self.cols),
            ));
        }
        Ok(CVector::from_vec(self.data))
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Matrix-vector product `self x`.
    pub fn mul_vec(&self, x: &CVector) -> Result<CVector> {
        if x.len() != self.cols {
            return Err(Error::shape(
                format!("vector of length {}", self.cols),
                format!("vector of length {}", x.len()),
            ));
        }
        let xs = x.as_slice();
        Ok(CVector::from_vec(
            self.data
                .chunks_exact(self.cols.max(1))
                .take(self.rows)
                .map(|row| row.iter().zip(xs).fold(ZERO, |acc, (a, b)| acc + a * b))
                .collect(),
        ))
    }

    /// Row-vector product `y^T self`.
    pub fn left_mul_vec(&self, y: &CVector) -> Result<CVector> {
        if y.len() != self.rows {
            return Err(Error::shape(
                format!("vector of length {}", self.rows),
                format!("vector of length {}", y.len()),
            ));
        }
        let mut out = vec![ZERO; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        Ok(CVector::from_vec(out))
    }

    /// Gram matrix `self^H self` (cols x cols, Hermitian).
    pub fn gram(&self) -> CMatrix {
        let c = self.cols;
        let mut g = vec![ZERO; c * c];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..c {
                let ai = row[i].conj();
                for j in i..c {
                    g[i * c + j] += ai * row[j];
                }
            }
        }
        for i in 0..c {
            for j in 0..i {
                g[i * c + j] = g[j * c + i].conj();
            }
        }
        CMatrix {
            rows: c,
            cols: c,
            data: g,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                format!("{}x{} matrix", self.rows, self.cols),
                format!("{}x{} matrix", other.rows, other.cols),
            ));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

/// ULA response `[1, e^{j theta}, ..., e^{j (n-1) theta}]^T`.
///
/// `theta` is the per-element phase increment; spacing and wavelength are
/// already folded into it.
pub fn steering_vector(theta: f64, n: usize) -> Result<CVector> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "steering vector length must be at least 1".into(),
        ));
    }
    if !theta.is_finite() {
        return Err(Error::Config(format!("steering angle {theta} is not finite")));
    }
    Ok(CVector::from_vec(
        (0..n)
            .map(|k| C64::from_polar(1.0, k as f64 * theta))
            .collect(),
    ))
}

const POWER_TOL: f64 = 1e-12;
const POWER_RESIDUAL_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// Unit-norm `v` maximizing `||H v||`, i.e. the first right singular vector.
///
/// Power iteration on `H^H H` from the all-ones start vector. A second
/// deterministic start with incommensurate phases covers the case where the
/// all-ones vector is orthogonal to the dominant eigenvector; the better of
/// the two is kept. The result is rotated so that its first entry of
/// largest magnitude is real and non-negative.
pub fn dominant_right_singular_vector(h: &CMatrix) -> Result<CVector> {
    if h.rows() == 0 || h.cols() == 0 {
        return Err(Error::InvalidDimension(format!(
            "matrix must be non-empty, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let scale = h.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateMatrix("all-zero matrix".into()));
    }
    if !scale.is_finite() {
        return Err(Error::DegenerateMatrix("non-finite matrix entry".into()));
    }
    // Scaling keeps the Gram matrix well away from overflow/underflow and
    // makes the result exactly invariant to positive real rescaling of H.
    let gram = h.scale_real(1.0 / scale).gram();
    let c = h.cols();

    let ones = CVector::filled(c, C64::new(1.0, 0.0));
    // Golden-ratio phases never produce an exactly cancelling start vector
    // for the structured matrices seen in practice.
    let twisted = CVector::from_vec(
        (0..c)
            .map(|k| C64::from_polar(1.0, 2.399_963_229_728_653 * (k as f64 + 1.0)))
            .collect(),
    );

    let mut best: Option<(f64, CVector)> = None;
    for start in [ones, twisted] {
        if let Some((rho, v)) = power_iterate(&gram, start) {
            match &best {
                Some((b, _)) if *b >= rho * (1.0 - 1e-12) => {}
                _ => best = Some((rho, v)),
            }
        }
    }
    let (_, v) = best.ok_or_else(|| {
        Error::DegenerateMatrix("power iteration collapsed to zero".into())
    })?;
    Ok(canonical_phase(&v))
}

fn power_iterate(gram: &CMatrix, start: CVector) -> Option<(f64, CVector)> {
    let mut v = start.normalized().ok()?;
    let mut rho = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let w = gram.mul_vec(&v).ok()?;
        let n = w.norm();
        if n <= f64::MIN_POSITIVE {
            return None;
        }
        v = w.scale_real(1.0 / n);
        let gv = gram.mul_vec(&v).ok()?;
        let next = v.inner(&gv).ok()?.re;
        let settled = (next - rho).abs() <= POWER_TOL * next.abs().max(1e-300);
        rho = next;
        // The Rayleigh quotient converges twice as fast as the vector, so the
        // residual is checked as well before stopping.
        if settled {
            let residual = gv.add(&v.scale_real(-rho)).ok()?.norm();
            if residual <= POWER_RESIDUAL_TOL * rho.abs().max(1e-300) {
                break;
            }
        }
    }
    Some((rho, v))
}

/// Rotates `v` so its first entry of (numerically) largest magnitude is real
/// and non-negative.
pub fn canonical_phase(v: &CVector) -> CVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v.clone();
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let rot = C64::from_polar(1.0, -pivot.arg());
    let mut out = v.scale(rot);
    // Exactly real pivot.
    if let Some(p) = out
        .as_mut_slice()
        .iter_mut()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
    {
        *p = C64::new(p.norm(), 0.0);
    }
    out
}

/// Independent random stream addressed by `(master_seed, stream_index)`.
///
/// Each stream is a ChaCha8 generator keyed by the master seed and a domain
/// tag, with the trial number selecting the ChaCha stream. Streams can be
/// created in any order or on any thread and always yield the same samples.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

/// Domain tags that keep unrelated uses of one master seed apart.
pub mod domain {
    pub const CHANNEL: u64 = 0x6368_616e;
    pub const BASELINE: u64 = 0x7261_6e64;
    pub const ANGLES: u64 = 0x616e_676c;
    pub const INIT: u64 = 0x696e_6974;
    pub const SCENARIOS: u64 = 0x7363_656e;
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self::with_domain(master_seed, domain::CHANNEL, stream_index)
    }

    pub fn with_domain(master_seed: u64, domain: u64, stream_index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&domain.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_index);
        RngStream {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// One CN(0, 1) draw: real and imaginary parts each N(0, 1/2).
    pub fn complex_normal(&mut self) -> C64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    }

    /// Uniform draw on `[0, 2 pi)`.
    pub fn uniform_angle(&mut self) -> f64 {
        // 53 random bits -> [0, 1)
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u * std::f64::consts::TAU
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries, drawn row by row.
pub fn sample_cn(rows: usize, cols: usize, stream: &mut RngStream) -> Result<CMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension(format!(
            "sample_cn needs positive dimensions, got {rows}x{cols}"
        )));
    }
    let data = (0..rows * cols).map(|_| stream.complex_normal()).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// Length-`len` vector of i.i.d. CN(0, 1) entries.
pub fn sample_cn_vector(len: usize, stream: &mut RngStream) -> Result<CVector> {
    sample_cn(len, 1, stream)?.into_vector()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn steering_vector_examples() {
        let v = steering_vector(0.0, 4).unwrap();
        assert!(v.iter().all(|z| close(*z, c(1.0, 0.0), 1e-15)));

        let v = steering_vector(PI, 2).unwrap();
        assert!(close(v[0], c(1.0, 0.0), 1e-15));
        assert!(close(v[1], c(-1.0, 0.0), 1e-15));

        let v = steering_vector(PI / 2.0, 4).unwrap();
        let expected = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (a, b) in v.iter().zip(expected) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn steering_vector_rejects_zero_length() {
        assert!(matches!(
            steering_vector(0.3, 0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn singular_vector_axis_aligned() {
        let h = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let v = dominant_right_singular_vector(&h).unwrap();
        assert!(close(v[0], c(1.0, 0.0), 1e-9));
        assert!(close(v[1], c(0.0, 0.0), 1e-9));
    }

    #[test]
    fn singular_vector_single_column() {
        let h = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let v = dominant_right_singular_vector(&h).unwrap();
        assert!(close(v[0], c(0.0, 0.0), 1e-12));
        assert!(close(v[1], c(1.0, 0.0), 1e-12));
    }

    #[test]
    fn singular_vector_when_ones_start_is_orthogonal() {
        // H^H H annihilates the all-ones vector.
        let h = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(-1.0, 0.0)]]).unwrap();
        let v = dominant_right_singular_vector(&h).unwrap();
        let gain = h.mul_vec(&v).unwrap().norm_sqr();
        assert!((gain - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_vector_rejects_zero_matrix() {
        let h = CMatrix::zeros(3, 2);
        assert!(matches!(
            dominant_right_singular_vector(&h),
            Err(Error::DegenerateMatrix(_))
        ));
    }

    #[test]
    fn random_probe_oracle_3x2() {
        let mut s = RngStream::new(2024, 0);
        let h = sample_cn(3, 2, &mut s).unwrap();
        let v = dominant_right_singular_vector(&h).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let best = h.mul_vec(&v).unwrap().norm_sqr();
        let mut probe = RngStream::new(2024, 1);
        for _ in 0..100_000 {
            let u = sample_cn_vector(2, &mut probe).unwrap().normalized().unwrap();
            let g = h.mul_vec(&u).unwrap().norm_sqr();
            assert!(best - g >= -1e-9, "probe beat power iteration: {g} > {best}");
        }
    }

    #[test]
    fn sample_cn_is_deterministic() {
        let a = sample_cn(4, 3, &mut RngStream::new(7, 11)).unwrap();
        let b = sample_cn(4, 3, &mut RngStream::new(7, 11)).unwrap();
        assert_eq!(a, b);
        let other = sample_cn(4, 3, &mut RngStream::new(7, 12)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sample_cn_moments() {
        let mut s = RngStream::new(99, 0);
        let n = 100_000;
        let draws: Vec<C64> = (0..n).map(|_| s.complex_normal()).collect();
        let nf = n as f64;
        let mean = draws.iter().sum::<C64>() / nf;
        assert!(mean.norm() < 0.02, "mean {mean}");
        let var = draws.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (nf - 1.0);
        assert!((0.98..=1.02).contains(&var), "variance {var}");

        let mre = draws.iter().map(|z| z.re).sum::<f64>() / nf;
        let mim = draws.iter().map(|z| z.im).sum::<f64>() / nf;
        let vre = draws.iter().map(|z| (z.re - mre).powi(2)).sum::<f64>() / nf;
        let vim = draws.iter().map(|z| (z.im - mim).powi(2)).sum::<f64>() / nf;
        let cov = draws
            .iter()
            .map(|z| (z.re - mre) * (z.im - mim))
            .sum::<f64>()
            / nf;
        assert!((vre - 0.5).abs() < 0.02, "re variance {vre}");
        assert!((vim - 0.5).abs() < 0.02, "im variance {vim}");
        assert!(cov.abs() < 0.02, "cross covariance {cov}");
    }

    #[test]
    fn streams_with_different_domains_differ() {
        let mut a = RngStream::with_domain(5, domain::CHANNEL, 3);
        let mut b = RngStream::with_domain(5, domain::BASELINE, 3);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let m = CMatrix::zeros(2, 3);
        assert!(m.mul_vec(&CVector::zeros(2)).is_err());
        assert!(m.left_mul_vec(&CVector::zeros(3)).is_err());
        assert!(CVector::zeros(2).dot(&CVector::zeros(3)).is_err());
        assert!(CMatrix::from_vec(2, 2, vec![ZERO; 3]).is_err());
    }

    #[test]
    fn uniform_angle_range() {
        let mut s = RngStream::new(1, 1);
        for _ in 0..10_000 {
            let t = s.uniform_angle();
            assert!((0.0..std::f64::consts::TAU).contains(&t));
        }
    }
}
