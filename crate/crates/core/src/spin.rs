//! Spin-½ observables on `C²` and their Bloch-ball parameterization.
//!
//! States are `ρ(x) = ½(I + x·σ)` and two-outcome spin POVMs are
//! `A^± = ½(I ± x·σ)` for `x` in the closed unit ball; a spin family over
//! `hbar` is a path in the ball.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, pauli, pauli_dot, ComplexMatrix, DensityOperator, HermitianOperator, ONE};
use crate::measures::{trace_product, Povm, SampleSpace, StochasticMatrix};

/// Point of the closed unit ball in `R³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(x: [f64; 3]) -> Result<Self> {
        Self::with_tol(x, &Tolerances::default())
    }

    pub fn with_tol(x: [f64; 3], tol: &Tolerances) -> Result<Self> {
        let norm = norm3(&x);
        if !norm.is_finite() || norm > 1.0 + tol.ball {
            return Err(Error::OutsideBall { norm });
        }
        Ok(Self(x))
    }

    pub const fn origin() -> Self {
        Self([0.0; 3])
    }

    /// Normalizes a nonzero direction onto the sphere.
    pub fn direction(x: [f64; 3]) -> Result<Self> {
        let norm = norm3(&x);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self([x[0] / norm, x[1] / norm, x[2] / norm]))
    }

    /// Unit vector check at `tol`.
    pub fn unit(x: [f64; 3], tol: f64) -> Result<Self> {
        let norm = norm3(&x);
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(x))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// `λ = ||x||`.
    pub fn norm(&self) -> f64 {
        norm3(&self.0)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        norm3(&[self.0[0] - other.0[0], self.0[1] - other.0[1], self.0[2] - other.0[2]])
    }

    /// `s · x`; scaling by `|s| <= 1` stays inside the ball.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new([s * self.0[0], s * self.0[1], s * self.0[2]])
    }
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = Error;
    fn try_from(x: [f64; 3]) -> Result<Self> {
        Self::new(x)
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        v.0
    }
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn half_identity_plus(x: &[f64; 3], sign: f64) -> HermitianOperator {
    let mut m = ComplexMatrix::identity(2);
    m.add_scaled(Complex64::new(sign, 0.0), &pauli_dot(x));
    HermitianOperator::symmetrized(&m.scale_real(0.5))
}

pub fn density_from_bloch(x: &BlochVector) -> DensityOperator {
    DensityOperator::new(half_identity_plus(&x.0, 1.0)).expect("Bloch-ball states are density operators")
}

/// `x_i = trace(ρ σ_i)`.
pub fn bloch_from_density(rho: &DensityOperator) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
    }
    BlochVector::new(pauli_components(rho.matrix()))
}

fn pauli_components(m: &ComplexMatrix) -> [f64; 3] {
    let [s1, s2, s3] = pauli();
    [trace_product(m, &s1).re, trace_product(m, &s2).re, trace_product(m, &s3).re]
}

/// `ρ` is a rank-one projection exactly when its Bloch vector is a unit vector.
pub fn is_pure(x: &BlochVector, tol: f64) -> bool {
    (x.norm() - 1.0).abs() <= tol
}

/// Two-outcome POVM `{A⁺, A⁻}` on `C²` with unit-trace effects.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinPovm {
    plus: HermitianOperator,
    minus: HermitianOperator,
}

impl SpinPovm {
    pub fn new(plus: HermitianOperator, minus: HermitianOperator) -> Result<Self> {
        Self::with_tol(plus, minus, &Tolerances::default())
    }

    pub fn with_tol(plus: HermitianOperator, minus: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        if plus.dim() != 2 || minus.dim() != 2 {
            return Err(Error::InvalidSpinPovm("effects must act on C^2".into()));
        }
        for (name, e) in [("A+", &plus), ("A-", &minus)] {
            if (e.trace() - 1.0).abs() > tol.spin {
                return Err(Error::InvalidSpinPovm(format!("trace({name}) = {}", e.trace())));
            }
            let min = crate::linalg::hermitian_eig_with(e, tol)?.values[0];
            if min < -tol.psd {
                return Err(Error::InvalidSpinPovm(format!("{name} has eigenvalue {min}")));
            }
        }
        let residual = operator_norm(&(plus.add(&minus).matrix() - &ComplexMatrix::identity(2)));
        if residual > tol.spin {
            return Err(Error::InvalidSpinPovm(format!("||A+ + A- - I|| = {residual:e}")));
        }
        Ok(Self { plus, minus })
    }

    /// Reads a two-outcome POVM in point order `(+, -)`.
    pub fn from_povm(p: &Povm) -> Result<Self> {
        if p.len() != 2 {
            return Err(Error::InvalidSpinPovm(format!("{} outcomes, expected 2", p.len())));
        }
        Self::new(p.effect(0).clone(), p.effect(1).clone())
    }

    pub fn plus(&self) -> &HermitianOperator {
        &self.plus
    }

    pub fn minus(&self) -> &HermitianOperator {
        &self.minus
    }

    /// The POVM on the `{+, -}` space valued `±½`.
    pub fn to_povm(&self) -> Povm {
        Povm::new(SampleSpace::spin(), vec![self.plus.clone(), self.minus.clone()]).expect("two 2x2 effects")
    }

    pub fn effect(&self, sign: Sign) -> &HermitianOperator {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

pub fn spin_povm_from_bloch(x: &BlochVector) -> SpinPovm {
    SpinPovm { plus: half_identity_plus(&x.0, 1.0), minus: half_identity_plus(&x.0, -1.0) }
}

/// Inverse of [`spin_povm_from_bloch`]: `x_i = trace(A⁺ σ_i)`.
pub fn classify_spin_povm(p: &SpinPovm) -> Result<BlochVector> {
    BlochVector::new(pauli_components(p.plus.matrix()))
}

/// Degree of reality `r` and unsharpness `u` of a spin observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sharpness {
    pub reality: f64,
    pub unsharpness: f64,
}

pub fn sharpness(x: &BlochVector) -> Sharpness {
    let l = x.norm().min(1.0);
    Sharpness { reality: (1.0 + l) / 2.0, unsharpness: (1.0 - l) / 2.0 }
}

type PathFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Continuous map `(0, 1] -> B³` describing a spin family.
#[derive(Clone)]
pub enum BlochPath {
    /// `hbar ↦ (1 - hbar) n`.
    RoyKar { n: BlochVector },
    /// Piecewise-linear interpolation of `points` over ascending `hbar` nodes.
    Table { hbar: Vec<f64>, points: Vec<BlochVector> },
    /// Any closed form.
    Custom { name: String, f: PathFn },
}

impl BlochPath {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.into(), f: Arc::new(f) }
    }

    /// Nodes may be given in any order; they are sorted ascending.
    pub fn table(hbar: Vec<f64>, points: Vec<[f64; 3]>) -> Result<Self> {
        if hbar.len() != points.len() {
            return Err(Error::InvalidTable(format!("{} nodes but {} points", hbar.len(), points.len())));
        }
        if hbar.len() < 2 {
            return Err(Error::InvalidTable("need at least two nodes".into()));
        }
        let mut rows: Vec<(f64, BlochVector)> = hbar
            .into_iter()
            .zip(points)
            .map(|(h, p)| {
                if !(h > 0.0 && h <= 1.0) {
                    return Err(Error::HbarOutOfRange(h));
                }
                Ok((h, BlochVector::new(p)?))
            })
            .collect::<Result<_>>()?;
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidTable("repeated hbar node".into()));
        }
        let (hbar, points) = rows.into_iter().unzip();
        Ok(Self::Table { hbar, points })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::RoyKar { .. } => "roy_kar",
            Self::Table { .. } => "bloch_path_table",
            Self::Custom { name, .. } => name,
        }
    }

    /// Admissible `hbar` range.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Table { hbar, .. } => (hbar[0], hbar[hbar.len() - 1]),
            _ => (0.0, 1.0),
        }
    }

    pub fn at(&self, hbar: f64) -> Result<BlochVector> {
        let (lo, hi) = self.domain();
        let in_range = match self {
            Self::Table { .. } => hbar >= lo && hbar <= hi,
            _ => hbar > lo && hbar <= hi,
        };
        if !in_range {
            return Err(Error::HbarOutOfRange(hbar));
        }
        match self {
            Self::RoyKar { n } => n.scaled(1.0 - hbar),
            Self::Custom { f, .. } => BlochVector::new(f(hbar)),
            Self::Table { hbar: nodes, points } => {
                let k = nodes.partition_point(|&h| h < hbar);
                if nodes[k] == hbar {
                    return Ok(points[k]);
                }
                let (h0, h1) = (nodes[k - 1], nodes[k]);
                let t = (hbar - h0) / (h1 - h0);
                let (p0, p1) = (points[k - 1].0, points[k].0);
                BlochVector::new([0, 1, 2].map(|i| (1.0 - t) * p0[i] + t * p1[i]))
            }
        }
    }
}

impl fmt::Debug for BlochPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RoyKar { n } => f.debug_struct("RoyKar").field("n", n).finish(),
            Self::Table { hbar, points } => f.debug_struct("Table").field("hbar", hbar).field("points", points).finish(),
            Self::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish_non_exhaustive(),
        }
    }
}

/// The path `(1 - hbar) n` for a unit direction `n`.
pub fn roy_kar_family(n: [f64; 3]) -> Result<BlochPath> {
    Ok(BlochPath::RoyKar { n: BlochVector::unit(n, 1e-12)? })
}

/// `[[1 - hbar/2, hbar/2], [hbar/2, 1 - hbar/2]]`; `hbar = 0` is accepted.
pub fn smearing_matrix(hbar: f64) -> Result<StochasticMatrix> {
    if !(0.0..=1.0).contains(&hbar) {
        return Err(Error::HbarOutOfRange(hbar));
    }
    let (stay, flip) = (1.0 - hbar / 2.0, hbar / 2.0);
    StochasticMatrix::new(vec![vec![stay, flip], vec![flip, stay]])
}

/// `|ψ⁻⟩ = (|01⟩ - |10⟩)/√2`.
pub fn singlet_state() -> DensityOperator {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [Complex64::new(0.0, 0.0), ONE * r, -ONE * r, Complex64::new(0.0, 0.0)];
    DensityOperator::pure(&psi).expect("unit vector")
}

/// Joint Born probability of `(s, t)` for product effects `A_a^s ⊗ A_b^t` on the singlet.
pub fn singlet_joint_probability(a: &BlochVector, b: &BlochVector, s: Sign, t: Sign) -> f64 {
    let rho = singlet_state();
    let pa = spin_povm_from_bloch(a);
    let pb = spin_povm_from_bloch(b);
    let joint = pa.effect(s).matrix().kron(pb.effect(t).matrix());
    trace_product(rho.matrix(), &joint).re
}

/// `E(a, b) = Σ_{s,t} s t Prob(s, t)` over the four joint outcomes.
pub fn singlet_correlation(a: &BlochVector, b: &BlochVector) -> f64 {
    let mut e = 0.0;
    for s in [Sign::Plus, Sign::Minus] {
        for t in [Sign::Plus, Sign::Minus] {
            e += s.value() * t.value() * singlet_joint_probability(a, b, s, t);
        }
    }
    e
}

/// `|E(a,b) - E(a,b') + E(a',b) + E(a',b')|`.
pub fn chsh_value(a: &BlochVector, a2: &BlochVector, b: &BlochVector, b2: &BlochVector) -> f64 {
    (singlet_correlation(a, b) - singlet_correlation(a, b2) + singlet_correlation(a2, b) + singlet_correlation(a2, b2))
        .abs()
}

/// `1 - √2 (√2 - 1)^{1/2}`.
pub fn bell_threshold_constant() -> f64 {
    let r2 = std::f64::consts::SQRT_2;
    1.0 - r2 * (r2 - 1.0).sqrt()
}

/// Settings `(a, a', b, b')` maximizing [`chsh_value`] for sharp measurements:
/// `a = n`, `a' = m ⟂ n`, `b = (n + m)/√2`, `b' = (m - n)/√2`.
pub fn optimal_chsh_settings(n: &BlochVector) -> Result<[BlochVector; 4]> {
    let n = BlochVector::direction(n.0)?.0;
    // Any unit vector orthogonal to n.
    let seed = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d: f64 = seed.iter().zip(&n).map(|(a, b)| a * b).sum();
    let m = BlochVector::direction([0, 1, 2].map(|i| seed[i] - d * n[i]))?.0;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok([
        BlochVector::direction(n)?,
        BlochVector::direction(m)?,
        BlochVector::direction([0, 1, 2].map(|i| r * (n[i] + m[i])))?,
        BlochVector::direction([0, 1, 2].map(|i| r * (m[i] - n[i])))?,
    ])
}

/// Bell demo row: optimal sharp settings shrunk along the Roy–Kar path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellReport {
    pub hbar: f64,
    pub chsh: f64,
    pub classical_bound: f64,
    pub tsirelson_bound: f64,
    pub threshold: f64,
    pub hbar_minus_threshold: f64,
}

pub fn roy_kar_bell(hbar: f64, n: [f64; 3]) -> Result<BellReport> {
    if !(hbar > 0.0 && hbar <= 1.0) {
        return Err(Error::HbarOutOfRange(hbar));
    }
    let n = BlochVector::direction(n)?;
    let [a, a2, b, b2] = optimal_chsh_settings(&n)?;
    let s = 1.0 - hbar;
    let chsh = chsh_value(&a.scaled(s)?, &a2.scaled(s)?, &b.scaled(s)?, &b2.scaled(s)?);
    let threshold = bell_threshold_constant();
    Ok(BellReport {
        hbar,
        chsh,
        classical_bound: 2.0,
        tsirelson_bound: 2.0 * std::f64::consts::SQRT_2,
        threshold,
        hbar_minus_threshold: hbar - threshold,
    })
}
