//! Dense complex square matrices and the Hermitian spectral routines the rest
//! of the crate builds on.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major dense `dim x dim` complex matrix with finite entries.
///
/// JSON form: an array of rows, each entry a `[re, im]` pair.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare { row: i, len: row.len(), dim });
            }
            for (j, z) in row.into_iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite(i, j));
                }
                data.push(z);
            }
        }
        Ok(Self { dim, data })
    }

    /// Convenience for real-valued literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        assert_eq!(u.len(), v.len(), "outer product of unequal vectors");
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self + s * other`, used for accumulations.
    pub fn add_scaled(&mut self, s: Complex64, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add_scaled");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Max entry of `M - M^dag`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for ComplexMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        Self::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        )
    }
}

impl From<ComplexMatrix> for Vec<Vec<[f64; 2]>> {
    fn from(m: ComplexMatrix) -> Self {
        m.data.chunks(m.dim).map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// The Pauli matrices `σ₁, σ₂, σ₃`.
pub fn pauli() -> [ComplexMatrix; 3] {
    let s1 = ComplexMatrix::from_fn(2, |i, j| if i != j { ONE } else { ZERO });
    let s2 = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    });
    let s3 = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
    [s1, s2, s3]
}

/// `x · σ` for a real 3-vector.
pub fn pauli_dot(x: &[f64; 3]) -> ComplexMatrix {
    let [s1, s2, s3] = pauli();
    let mut m = s1.scale_real(x[0]);
    m.add_scaled(Complex64::new(x[1], 0.0), &s2);
    m.add_scaled(Complex64::new(x[2], 0.0), &s3);
    m
}

pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Largest singular value, `sqrt(λ_max(M^dag M))`.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    if (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == ZERO)) {
        return (0..n).map(|i| m[(i, i)].norm()).fold(0.0, f64::max);
    }
    let gram = HermitianOperator::symmetrized(&(&m.adjoint() * m));
    // Frobenius norm is an upper bound if the sweep cap is hit.
    match hermitian_eig(&gram) {
        Ok(eig) => eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => m.frobenius_norm(),
    }
}

/// Hermitian matrix, stored exactly symmetrized as `(M + M^dag) / 2`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, &Tolerances::default())
    }

    /// The asymmetry tolerance is scaled by `max(1, max|M_ij|)`.
    pub fn with_tol(m: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite(0, 0));
        }
        let residual = m.hermiticity_residual();
        if residual > tol.hermiticity * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::symmetrized(&m))
    }

    /// `(M + M^dag) / 2` without any check.
    pub fn symmetrized(m: &ComplexMatrix) -> Self {
        let mut h = (m + &m.adjoint()).scale_real(0.5);
        for i in 0..h.dim() {
            h[(i, i)].im = 0.0;
        }
        Self(h)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real combination, which stays Hermitian.
    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale_real(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        self.0.add_scaled(Complex64::new(s, 0.0), &other.0);
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

impl TryFrom<ComplexMatrix> for HermitianOperator {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianOperator> for ComplexMatrix {
    fn from(h: HermitianOperator) -> Self {
        h.0
    }
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianOperator", into = "HermitianOperator")]
pub struct DensityOperator(HermitianOperator);

impl DensityOperator {
    pub fn new(h: HermitianOperator) -> Result<Self> {
        Self::with_tol(h, &Tolerances::default())
    }

    pub fn with_tol(h: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        let trace = h.trace();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace { trace });
        }
        let min = min_eigenvalue(&h, tol)?;
        if min < -tol.psd {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self(h))
    }

    /// Pure state `|ψ><ψ|` from a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::BadTrace { trace: norm * norm });
        }
        let unit: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(HermitianOperator::symmetrized(&ComplexMatrix::outer(&unit, &unit)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianOperator::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.0.matrix()
    }
}

impl TryFrom<HermitianOperator> for DensityOperator {
    type Error = Error;
    fn try_from(h: HermitianOperator) -> Result<Self> {
        Self::new(h)
    }
}

impl From<DensityOperator> for HermitianOperator {
    fn from(d: DensityOperator) -> Self {
        d.0
    }
}

/// Ascending eigenvalues with the unitary whose columns are eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// `U diag(g(λ)) U^dag`.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let weights: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| u[(i, k)] * u[(j, k)].conj() * weights[k]).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

pub fn hermitian_eig(h: &HermitianOperator) -> Result<Eigen> {
    hermitian_eig_with(h, &Tolerances::default())
}

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation first removes the phase of `a_pq` and then applies a real
/// plane rotation; sweeps stop once the off-diagonal Frobenius mass drops to
/// `jacobi_threshold * max(1, ||H||_F)`.
pub fn hermitian_eig_with(h: &HermitianOperator, tol: &Tolerances) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    let target = tol.jacobi_threshold * scale;

    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let mass = off(&a);
        if mass <= target {
            break;
        }
        if sweeps >= tol.max_sweeps {
            return Err(Error::NoConvergence { sweeps, off_diagonal: mass });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let modulus = apq.norm();
                if modulus <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / modulus;
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = (aqq - app) / (2.0 * modulus);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = D R with D = diag(.., e^{-iφ} at q, ..).
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // A <- A J
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                // A <- J^dag A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

fn min_eigenvalue(h: &HermitianOperator, tol: &Tolerances) -> Result<f64> {
    Ok(hermitian_eig_with(h, tol)?.values.first().copied().unwrap_or(0.0))
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_positive_semidefinite(h: &HermitianOperator, tol: f64) -> bool {
    match hermitian_eig(h) {
        Ok(eig) => eig.values.first().is_none_or(|&l| l >= -tol),
        Err(_) => false,
    }
}

pub fn psd_sqrt(h: &HermitianOperator) -> Result<HermitianOperator> {
    psd_sqrt_with(h, &Tolerances::default())
}

/// Principal square root; eigenvalues in `[-psd, 0)` are clamped to zero.
pub fn psd_sqrt_with(h: &HermitianOperator, tol: &Tolerances) -> Result<HermitianOperator> {
    let eig = hermitian_eig_with(h, tol)?;
    if let Some(&min) = eig.values.first() {
        if min < -tol.psd {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
    }
    Ok(HermitianOperator::symmetrized(&eig.reconstruct_with(|l| l.max(0.0).sqrt())))
}
