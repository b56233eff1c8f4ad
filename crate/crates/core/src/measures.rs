//! Finite-outcome operator-valued measures.
//!
//! A [`Povm`] assigns a positive effect to every point of a finite
//! [`SampleSpace`]; the measure of a subset is the sum of its effects, so
//! nullity and additivity hold by construction. Everything else (positivity,
//! normalization, projectivity) is checked numerically.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig_with, operator_norm, psd_sqrt_with, ComplexMatrix, DensityOperator,
    HermitianOperator, ONE, ZERO,
};

/// Finite ordered set of outcome labels, optionally carrying real values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    labels: Vec<String>,
    values: Option<Vec<f64>>,
}

impl SampleSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        Self::check_labels(&labels)?;
        Ok(Self { labels, values: None })
    }

    pub fn with_values<S: Into<String>>(labels: impl IntoIterator<Item = S>, values: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        Self::check_labels(&labels)?;
        if values.len() != labels.len() {
            return Err(Error::SizeMismatch { expected: labels.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(labels[i].clone()));
        }
        Ok(Self { labels, values: Some(values) })
    }

    /// Labels are the `{}` rendering of the values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        Self::with_values(labels, values)
    }

    /// The two-point spin space `{+, -}` valued `±1/2`.
    pub fn spin() -> Self {
        Self { labels: vec!["+".into(), "-".into()], values: Some(vec![0.5, -0.5]) }
    }

    fn check_labels(labels: &[String]) -> Result<()> {
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = HashSet::new();
        for l in labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<Subset> {
        let idx = labels.iter().map(|l| self.index_of(l.as_ref())).collect::<Result<Vec<_>>>()?;
        Subset::new(idx, self.len())
    }

    pub fn full(&self) -> Subset {
        Subset((0..self.len()).collect())
    }

    pub fn singleton(&self, i: usize) -> Subset {
        assert!(i < self.len(), "point {i} out of range");
        Subset(vec![i])
    }

    /// `{a;b}` rendering used in reports and CSV rows.
    pub fn describe(&self, set: &Subset) -> String {
        let names: Vec<&str> = set.iter().map(|i| self.labels[i].as_str()).collect();
        format!("{{{}}}", names.join(";"))
    }
}

/// Subset of a sample space, stored as sorted distinct point indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn new(mut indices: Vec<usize>, len: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= len) {
            return Err(Error::PointOutOfRange { index: bad, len });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v: Vec<usize> = self.iter().chain(other.iter()).collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// Indicator function on a space of `len` points.
    pub fn indicator(&self, len: usize) -> Vec<f64> {
        (0..len).map(|i| if self.contains(i) { 1.0 } else { 0.0 }).collect()
    }
}

/// Positive operator-valued measure on a finite sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    space: SampleSpace,
    effects: Vec<HermitianOperator>,
}

impl Povm {
    /// Structural checks only: one effect per point, common dimension.
    /// Positivity is reported by [`validate_povm`].
    pub fn new(space: SampleSpace, effects: Vec<HermitianOperator>) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(Error::SizeMismatch { expected: space.len(), found: effects.len() });
        }
        let dim = effects[0].dim();
        if let Some(e) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
        }
        Ok(Self { space, effects })
    }

    /// Like [`Povm::new`] but also rejects effects with an eigenvalue below `-psd`.
    pub fn checked(space: SampleSpace, effects: Vec<HermitianOperator>, tol: &Tolerances) -> Result<Self> {
        let p = Self::new(space, effects)?;
        p.ensure_positive(tol)?;
        Ok(p)
    }

    pub(crate) fn ensure_positive(&self, tol: &Tolerances) -> Result<()> {
        for e in &self.effects {
            let min = hermitian_eig_with(e, tol)?.values[0];
            if min < -tol.psd {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
        }
        Ok(())
    }

    /// Sharp measurement in the computational basis, labels `0..dim`.
    pub fn computational_basis(dim: usize) -> Self {
        let space = SampleSpace::new((0..dim).map(|i| i.to_string())).expect("nonempty");
        let effects = (0..dim)
            .map(|i| {
                let mut d = vec![0.0; dim];
                d[i] = 1.0;
                HermitianOperator::from_real_diag(&d)
            })
            .collect();
        Self { space, effects }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &HermitianOperator {
        &self.effects[i]
    }

    /// `A(Δ)`; the empty set maps to zero.
    pub fn measure(&self, set: &Subset) -> HermitianOperator {
        let mut acc = HermitianOperator::zeros(self.dim());
        for i in set.iter() {
            acc.add_scaled(1.0, &self.effects[i]);
        }
        acc
    }

    /// `A(X)`.
    pub fn total(&self) -> HermitianOperator {
        self.measure(&self.space.full())
    }

    /// `||A(X) - I||`.
    pub fn normalization_residual(&self) -> f64 {
        let id = ComplexMatrix::identity(self.dim());
        operator_norm(&(self.total().matrix() - &id))
    }

    pub fn is_normalized(&self, tol: &Tolerances) -> bool {
        self.normalization_residual() <= tol.normalization
    }

    pub(crate) fn ensure_normalized(&self, tol: &Tolerances) -> Result<()> {
        let residual = self.normalization_residual();
        if residual > tol.normalization {
            return Err(Error::NotNormalized { residual });
        }
        Ok(())
    }

    /// Same effects on a relabelled space.
    pub fn with_space(self, space: SampleSpace) -> Result<Self> {
        Self::new(space, self.effects)
    }
}

/// POVM whose effects are mutually orthogonal projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Pvm(Povm);

impl Pvm {
    pub fn new(povm: Povm, tol: &Tolerances) -> Result<Self> {
        let residual = projectivity_residual(&povm);
        if residual > tol.projectivity {
            return Err(Error::NotProjective { residual });
        }
        povm.ensure_positive(tol)?;
        Ok(Self(povm))
    }

    pub fn povm(&self) -> &Povm {
        &self.0
    }

    pub fn into_povm(self) -> Povm {
        self.0
    }
}

impl AsRef<Povm> for Pvm {
    fn as_ref(&self) -> &Povm {
        &self.0
    }
}

/// Square row-stochastic matrix: nonnegative entries, rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tol(rows, &Tolerances::default())
    }

    pub fn with_tol(rows: Vec<Vec<f64>>, tol: &Tolerances) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NotStochastic("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotStochastic(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::NotStochastic(format!("row {i} has entry {x}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol.stochastic {
                return Err(Error::NotStochastic(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// Matrix product `self · other`, again row-stochastic.
    pub fn then(&self, other: &Self) -> Self {
        let n = self.len();
        assert_eq!(n, other.len(), "stochastic matrix size mismatch");
        let rows = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.rows[i][k] * other.rows[k][j]).sum()).collect())
            .collect();
        Self { rows }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..n).all(|j| self.rows[i][j] == self.rows[j][i]))
    }

    /// Column sums all equal to one within `tol`.
    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|j| ((0..n).map(|i| self.rows[i][j]).sum::<f64>() - 1.0).abs() <= tol)
    }
}

/// Per-axiom outcome of [`validate_povm`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub outcomes: usize,
    /// Smallest eigenvalue of each effect, in point order.
    pub min_eigenvalues: Vec<f64>,
    pub worst_min_eigenvalue: f64,
    pub positivity: bool,
    /// `A(∅) = 0` and finite additivity hold structurally.
    pub nullity: bool,
    pub additivity: bool,
    pub total_norm: f64,
    pub normalization_residual: f64,
    pub normalized: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.positivity && self.nullity && self.additivity
    }
}

pub fn validate_povm(p: &Povm) -> Result<ValidationReport> {
    validate_povm_with(p, &Tolerances::default())
}

pub fn validate_povm_with(p: &Povm, tol: &Tolerances) -> Result<ValidationReport> {
    let min_eigenvalues = p
        .effects
        .iter()
        .map(|e| hermitian_eig_with(e, tol).map(|eig| eig.values[0]))
        .collect::<Result<Vec<_>>>()?;
    let worst = min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let residual = p.normalization_residual();
    Ok(ValidationReport {
        dim: p.dim(),
        outcomes: p.len(),
        worst_min_eigenvalue: worst,
        positivity: worst >= -tol.psd,
        min_eigenvalues,
        nullity: p.measure(&Subset::empty()).matrix().max_abs() == 0.0,
        additivity: true,
        total_norm: operator_norm(p.total().matrix()),
        normalization_residual: residual,
        normalized: residual <= tol.normalization,
    })
}

/// Worst residual of `A(Δ∩Δ') = A(Δ)A(Δ')` over pairs of singletons:
/// idempotency on the diagonal, `||E_i E_j||` off it.
pub fn projectivity_residual(p: &Povm) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let ei = p.effects[i].matrix();
        for j in i..p.len() {
            let ej = p.effects[j].matrix();
            let prod = ei * ej;
            let r = if i == j { operator_norm(&(&prod - ei)) } else { operator_norm(&prod) };
            worst = worst.max(r);
        }
    }
    worst
}

pub fn is_projective(p: &Povm, tol: f64) -> bool {
    projectivity_residual(p) <= tol
}

pub fn born_probability(p: &Povm, set: &Subset, rho: &DensityOperator) -> Result<f64> {
    born_probability_with(p, set, rho, &Tolerances::default())
}

/// `Re trace(ρ A(Δ))`, unclamped.
pub fn born_probability_with(p: &Povm, set: &Subset, rho: &DensityOperator, tol: &Tolerances) -> Result<f64> {
    if rho.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: rho.dim() });
    }
    p.ensure_normalized(tol)?;
    Ok(trace_product(rho.matrix(), p.measure(set).matrix()).re)
}

/// `trace(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// `Σ_x f(x) A({x})`.
pub fn integrate(p: &Povm, f: &[Complex64]) -> Result<ComplexMatrix> {
    if f.len() != p.len() {
        return Err(Error::SizeMismatch { expected: p.len(), found: f.len() });
    }
    let mut acc = ComplexMatrix::zeros(p.dim());
    for (w, e) in f.iter().zip(&p.effects) {
        if *w != ZERO {
            acc.add_scaled(*w, e.matrix());
        }
    }
    Ok(acc)
}

/// [`integrate`] for real functions, whose integral is Hermitian.
pub fn integrate_real(p: &Povm, f: &[f64]) -> Result<HermitianOperator> {
    if f.len() != p.len() {
        return Err(Error::SizeMismatch { expected: p.len(), found: f.len() });
    }
    let mut acc = HermitianOperator::zeros(p.dim());
    for (&w, e) in f.iter().zip(&p.effects) {
        if w != 0.0 {
            acc.add_scaled(w, e);
        }
    }
    Ok(acc)
}

pub fn expectation(p: &Povm, rho: &DensityOperator) -> Result<f64> {
    expectation_with(p, rho, &Tolerances::default())
}

/// `trace(ρ ∫ λ dA(λ))` over the space's values.
pub fn expectation_with(p: &Povm, rho: &DensityOperator, tol: &Tolerances) -> Result<f64> {
    let values = p.space.values().ok_or(Error::MissingValues)?;
    if rho.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: rho.dim() });
    }
    p.ensure_normalized(tol)?;
    let observable = integrate_real(p, values)?;
    Ok(trace_product(rho.matrix(), observable.matrix()).re)
}

pub fn spectral_measure_of(o: &HermitianOperator) -> Result<Pvm> {
    spectral_measure_of_with(o, &Tolerances::default())
}

/// Spectral measure on the distinct eigenvalues of `o`.
///
/// Consecutive eigenvalues closer than `cluster * max(1, ||O||)` share an
/// eigenspace; each cluster is valued at its mean.
pub fn spectral_measure_of_with(o: &HermitianOperator, tol: &Tolerances) -> Result<Pvm> {
    let eig = hermitian_eig_with(o, tol)?;
    let width = tol.cluster * operator_norm(o.matrix()).max(1.0);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &l) in eig.values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if l - eig.values[*c.last().unwrap()] <= width => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let n = o.dim();
    let mut values = Vec::with_capacity(clusters.len());
    let mut effects = Vec::with_capacity(clusters.len());
    for c in &clusters {
        values.push(c.iter().map(|&k| eig.values[k]).sum::<f64>() / c.len() as f64);
        let mut proj = ComplexMatrix::zeros(n);
        for &k in c {
            let u = eig.vectors.column(k);
            proj.add_scaled(ONE, &ComplexMatrix::outer(&u, &u));
        }
        effects.push(HermitianOperator::symmetrized(&proj));
    }
    let space = SampleSpace::from_values(values)?;
    Pvm::new(Povm::new(space, effects)?, tol)
}

/// Post-processing `E'_i = Σ_j Λ_ij E_j`; rows of `Λ` index the new outcomes.
pub fn smear(p: &Povm, lambda: &StochasticMatrix) -> Result<Povm> {
    if lambda.len() != p.len() {
        return Err(Error::SizeMismatch { expected: p.len(), found: lambda.len() });
    }
    let effects = lambda
        .rows()
        .iter()
        .map(|row| integrate_real(p, row))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(p.space.clone(), effects)
}

/// Rectangular `rows x cols` complex matrix; only used for dilation isometries.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Isometry {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// `V^dag M V` for a `rows x rows` matrix `M`.
    pub fn compress(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.dim(), self.rows, "compression dimension mismatch");
        let mv: Vec<Complex64> = (0..self.rows)
            .flat_map(|r| {
                (0..self.cols).map(move |c| (0..self.rows).map(|s| m[(r, s)] * self.get(s, c)).sum::<Complex64>())
            })
            .collect();
        ComplexMatrix::from_fn(self.cols, |a, b| {
            (0..self.rows).map(|r| self.get(r, a).conj() * mv[r * self.cols + b]).sum()
        })
    }

    /// `V^dag V`.
    pub fn gram(&self) -> ComplexMatrix {
        self.compress(&ComplexMatrix::identity(self.rows))
    }

    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        self.data.chunks(self.cols).map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
    }
}

/// Square-root dilation of a normalized POVM.
#[derive(Debug, Clone)]
pub struct NaimarkDilation {
    /// `d·n x d`, block `i` equal to `sqrt(E_i)`.
    pub isometry: Isometry,
    /// Block selectors on `C^{d·n}`.
    pub projections: Pvm,
}

impl NaimarkDilation {
    pub fn compressions(&self) -> Vec<ComplexMatrix> {
        self.projections.povm().effects().iter().map(|q| self.isometry.compress(q.matrix())).collect()
    }
}

pub fn naimark_dilate(p: &Povm) -> Result<NaimarkDilation> {
    naimark_dilate_with(p, &Tolerances::default())
}

pub fn naimark_dilate_with(p: &Povm, tol: &Tolerances) -> Result<NaimarkDilation> {
    p.ensure_normalized(tol)?;
    let (d, n) = (p.dim(), p.len());
    let roots = p.effects.iter().map(|e| psd_sqrt_with(e, tol)).collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(d * n * d);
    for root in &roots {
        for r in 0..d {
            for c in 0..d {
                data.push(root.matrix()[(r, c)]);
            }
        }
    }
    let isometry = Isometry { rows: d * n, cols: d, data };
    let selectors = (0..n)
        .map(|i| {
            let diag: Vec<f64> = (0..d * n).map(|r| if r / d == i { 1.0 } else { 0.0 }).collect();
            HermitianOperator::from_real_diag(&diag)
        })
        .collect();
    let projections = Pvm::new(Povm::new(p.space.clone(), selectors)?, tol)?;
    Ok(NaimarkDilation { isometry, projections })
}

/// Points whose effect is nonzero, and the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Support {
    pub spectrum: Vec<String>,
    pub cospectrum: Vec<String>,
}

pub fn support(p: &Povm) -> Support {
    support_with(p, &Tolerances::default())
}

pub fn support_with(p: &Povm, tol: &Tolerances) -> Support {
    let (mut spectrum, mut cospectrum) = (Vec::new(), Vec::new());
    for (label, e) in p.space.labels().iter().zip(&p.effects) {
        if operator_norm(e.matrix()) > tol.support {
            spectrum.push(label.clone());
        } else {
            cospectrum.push(label.clone());
        }
    }
    Support { spectrum, cospectrum }
}

/// JSON document `{"dim": d, "outcomes": [{"label", "value"?, "operator"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmDocument {
    pub dim: usize,
    pub outcomes: Vec<OutcomeDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeDocument {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub operator: ComplexMatrix,
}

impl TryFrom<PovmDocument> for Povm {
    type Error = Error;
    fn try_from(doc: PovmDocument) -> Result<Self> {
        doc.into_povm(&Tolerances::default())
    }
}

impl PovmDocument {
    /// Structural conversion; positivity and normalization are not checked.
    pub fn into_povm(self, tol: &Tolerances) -> Result<Povm> {
        let doc = self;
        if doc.outcomes.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut labels = Vec::with_capacity(doc.outcomes.len());
        let mut values = Vec::with_capacity(doc.outcomes.len());
        let mut effects = Vec::with_capacity(doc.outcomes.len());
        for o in doc.outcomes {
            if o.operator.dim() != doc.dim {
                return Err(Error::DimensionMismatch { expected: doc.dim, found: o.operator.dim() });
            }
            labels.push(o.label);
            values.push(o.value);
            effects.push(HermitianOperator::with_tol(o.operator, tol)?);
        }
        let space = if values.iter().all(Option::is_some) {
            SampleSpace::with_values(labels, values.into_iter().flatten().collect())?
        } else if values.iter().all(Option::is_none) {
            SampleSpace::new(labels)?
        } else {
            return Err(Error::MissingValues);
        };
        Povm::new(space, effects)
    }
}

impl From<&Povm> for PovmDocument {
    fn from(p: &Povm) -> Self {
        let values = p.space.values();
        let outcomes = p
            .space
            .labels()
            .iter()
            .enumerate()
            .map(|(i, label)| OutcomeDocument {
                label: label.clone(),
                value: values.map(|v| v[i]),
                operator: p.effects[i].matrix().clone(),
            })
            .collect();
        Self { dim: p.dim(), outcomes }
    }
}

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PovmDocument::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PovmDocument::deserialize(d)?;
        Povm::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for SampleSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe(&self.full()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_povm(diags: &[&[f64]]) -> Povm {
        let labels: Vec<String> = (0..diags.len()).map(|i| format!("o{i}")).collect();
        Povm::new(
            SampleSpace::new(labels).unwrap(),
            diags.iter().map(|d| HermitianOperator::from_real_diag(d)).collect(),
        )
        .unwrap()
    }

    fn sharp_z() -> Povm {
        Povm::new(
            SampleSpace::spin(),
            vec![HermitianOperator::from_real_diag(&[1.0, 0.0]), HermitianOperator::from_real_diag(&[0.0, 1.0])],
        )
        .unwrap()
    }

    fn roy_kar_half() -> Povm {
        Povm::new(
            SampleSpace::spin(),
            vec![HermitianOperator::from_real_diag(&[0.75, 0.25]), HermitianOperator::from_real_diag(&[0.25, 0.75])],
        )
        .unwrap()
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn validate_examples() {
        let r = validate_povm(&sharp_z()).unwrap();
        assert!(r.is_valid() && r.normalized && r.nullity);
        let r = validate_povm(&roy_kar_half()).unwrap();
        assert!(r.is_valid() && r.normalized);
        assert_eq!(r.min_eigenvalues, vec![0.25, 0.25]);
        let r = validate_povm(&diag_povm(&[&[1.0, 0.0], &[1.0, 0.0]])).unwrap();
        assert!(r.positivity && !r.normalized);
        assert!((r.total_norm - 2.0).abs() < 1e-15);
        let r = validate_povm(&diag_povm(&[&[1.5, 0.0], &[-0.5, 1.0]])).unwrap();
        assert!(!r.positivity && r.normalized);
    }

    #[test]
    fn construction_errors() {
        let a = HermitianOperator::identity(2);
        let b = HermitianOperator::identity(3);
        assert!(matches!(
            Povm::new(SampleSpace::new(["a", "b"]).unwrap(), vec![a.clone(), b]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(SampleSpace::new(["a", "a"]), Err(Error::DuplicateLabel(_))));
        assert!(matches!(
            SampleSpace::with_values(["a"], vec![f64::NAN]),
            Err(Error::NonFiniteValue(_))
        ));
        assert!(Povm::new(SampleSpace::new(["a", "b"]).unwrap(), vec![a.clone()]).is_err());
        let bad = diag_povm(&[&[1.5, 0.0], &[-0.5, 1.0]]);
        assert!(Povm::checked(bad.space().clone(), bad.effects().to_vec(), &Tolerances::default()).is_err());
    }

    #[test]
    fn projectivity_examples() {
        assert!(is_projective(&sharp_z(), 1e-10));
        let rk = roy_kar_half();
        assert!(!is_projective(&rk, 1e-10));
        // Idempotency residual of diag(0.75, 0.25): |μ² - μ| = 0.1875 for both eigenvalues.
        assert!((projectivity_residual(&rk) - 0.1875).abs() < 1e-15);
        let single = Povm::new(SampleSpace::new(["all"]).unwrap(), vec![HermitianOperator::identity(3)]).unwrap();
        assert!(is_projective(&single, 0.0));
        assert!(Pvm::new(rk, &Tolerances::default()).is_err());
    }

    #[test]
    fn born_examples() {
        let rho = DensityOperator::new(HermitianOperator::from_real_diag(&[1.0, 0.0])).unwrap();
        let p = sharp_z();
        let up = p.space().subset(&["+"]).unwrap();
        assert_eq!(born_probability(&p, &up, &rho).unwrap(), 1.0);
        let mixed = DensityOperator::maximally_mixed(2);
        let rk = roy_kar_half();
        assert!((born_probability(&rk, &up, &mixed).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(born_probability(&rk, &Subset::empty(), &mixed).unwrap(), 0.0);
        let unnormalized = diag_povm(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            born_probability(&unnormalized, &Subset::empty(), &mixed),
            Err(Error::NotNormalized { .. })
        ));
        let rho3 = DensityOperator::maximally_mixed(3);
        assert!(matches!(born_probability(&p, &up, &rho3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn integrate_examples() {
        let rk = roy_kar_half();
        let one = integrate(&rk, &[ONE, ONE]).unwrap();
        assert!(close(&one, &ComplexMatrix::identity(2), 1e-15));
        let ind = integrate(&rk, &[ONE, ZERO]).unwrap();
        assert_eq!(&ind, rk.effect(0).matrix());
        let z = integrate_real(&sharp_z(), &[0.5, -0.5]).unwrap();
        assert!(close(z.matrix(), &ComplexMatrix::from_real_diag(&[0.5, -0.5]), 0.0));
        assert!(integrate(&rk, &[ONE]).is_err());
    }

    #[test]
    fn expectation_examples() {
        let p = sharp_z();
        let up = DensityOperator::new(HermitianOperator::from_real_diag(&[1.0, 0.0])).unwrap();
        assert_eq!(expectation(&p, &up).unwrap(), 0.5);
        assert_eq!(expectation(&p, &DensityOperator::maximally_mixed(2)).unwrap(), 0.0);
        let rho = DensityOperator::new(HermitianOperator::from_real_diag(&[0.75, 0.25])).unwrap();
        // 0.5 * 0.625 - 0.5 * 0.375
        assert!((expectation(&roy_kar_half(), &rho).unwrap() - 0.125).abs() < 1e-15);
        let unvalued = diag_povm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(expectation(&unvalued, &rho), Err(Error::MissingValues)));
    }

    #[test]
    fn spectral_measure_examples() {
        let pvm = spectral_measure_of(&HermitianOperator::from_real_diag(&[2.0, 2.0, 5.0])).unwrap();
        let p = pvm.povm();
        assert_eq!(p.space().values().unwrap(), &[2.0, 5.0]);
        assert!(close(p.effect(0).matrix(), &ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0]), 1e-14));
        assert!(close(p.effect(1).matrix(), &ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0]), 1e-14));

        let [s1, _, s3] = crate::linalg::pauli();
        let pvm = spectral_measure_of(&HermitianOperator::new(s3).unwrap()).unwrap();
        assert_eq!(pvm.povm().space().values().unwrap(), &[-1.0, 1.0]);
        assert!(close(pvm.povm().effect(1).matrix(), &ComplexMatrix::from_real_diag(&[1.0, 0.0]), 1e-15));

        // Eigenvectors (1, ±1)/√2 give ½(I ± σ₁).
        let pvm = spectral_measure_of(&HermitianOperator::new(s1.clone()).unwrap()).unwrap();
        let id = ComplexMatrix::identity(2);
        let plus = (&id + &s1).scale_real(0.5);
        let minus = (&id - &s1).scale_real(0.5);
        assert!(close(pvm.povm().effect(1).matrix(), &plus, 1e-14));
        assert!(close(pvm.povm().effect(0).matrix(), &minus, 1e-14));
    }

    #[test]
    fn smear_examples() {
        let p = sharp_z();
        assert_eq!(smear(&p, &StochasticMatrix::identity(2)).unwrap(), p);
        let lambda = StochasticMatrix::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let s = smear(&p, &lambda).unwrap();
        assert!(close(s.effect(0).matrix(), &ComplexMatrix::from_real_diag(&[0.75, 0.25]), 0.0));
        assert!(close(s.effect(1).matrix(), &ComplexMatrix::from_real_diag(&[0.25, 0.75]), 0.0));
        let flat = StochasticMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = smear(&roy_kar_half(), &flat).unwrap();
        for e in s.effects() {
            assert!(close(e.matrix(), &ComplexMatrix::identity(2).scale_real(0.5), 1e-15));
        }
        assert!(smear(&p, &StochasticMatrix::identity(3)).is_err());
        assert!(StochasticMatrix::new(vec![vec![0.7, 0.2], vec![0.5, 0.5]]).is_err());
        assert!(StochasticMatrix::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn naimark_examples() {
        let tol = 1e-9;
        let d = naimark_dilate(&sharp_z()).unwrap();
        for (c, e) in d.compressions().iter().zip(sharp_z().effects()) {
            assert!(close(c, e.matrix(), 1e-15));
        }

        let half = Povm::new(
            SampleSpace::new(["a", "b"]).unwrap(),
            vec![HermitianOperator::identity(2).scale(0.5), HermitianOperator::identity(2).scale(0.5)],
        )
        .unwrap();
        let d = naimark_dilate(&half).unwrap();
        assert_eq!((d.isometry.rows(), d.isometry.cols()), (4, 2));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for row in 0..4 {
            for col in 0..2 {
                let expect = if row % 2 == col { r } else { 0.0 };
                assert!((d.isometry.get(row, col).re - expect).abs() < 1e-15);
            }
        }
        assert!(close(&d.isometry.gram(), &ComplexMatrix::identity(2), 1e-15));

        let rk = roy_kar_half();
        let d = naimark_dilate(&rk).unwrap();
        assert!(close(&d.isometry.gram(), &ComplexMatrix::identity(2), tol));
        assert!(is_projective(d.projections.povm(), tol));
        for (c, e) in d.compressions().iter().zip(rk.effects()) {
            assert!(close(c, e.matrix(), tol));
        }

        assert!(naimark_dilate(&diag_povm(&[&[1.0, 0.0], &[1.0, 0.0]])).is_err());
    }

    #[test]
    fn support_examples() {
        let s = support(&sharp_z());
        assert_eq!(s.spectrum, vec!["+", "-"]);
        assert!(s.cospectrum.is_empty());
        let s = support(&diag_povm(&[&[1.0, 0.0], &[0.0, 0.0]]));
        assert_eq!(s.spectrum, vec!["o0"]);
        assert_eq!(s.cospectrum, vec!["o1"]);
        assert_eq!(support(&roy_kar_half()).spectrum.len(), 2);
    }

    #[test]
    fn povm_json() {
        let text = r#"{"dim": 2, "outcomes": [
            {"label": "+", "value": 0.5, "operator": [[[1,0],[0,0]],[[0,0],[0,0]]]},
            {"label": "-", "value": -0.5, "operator": [[[0,0],[0,0]],[[0,0],[1,0]]]}]}"#;
        let p: Povm = serde_json::from_str(text).unwrap();
        assert_eq!(p, sharp_z());
        let back: Povm = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let bad_dim = text.replace("\"dim\": 2", "\"dim\": 3");
        assert!(serde_json::from_str::<Povm>(&bad_dim).is_err());
        let mixed = text.replace("\"value\": -0.5, ", "");
        assert!(serde_json::from_str::<Povm>(&mixed).is_err());
        let nonherm = text.replace("[[[1,0],[0,0]],[[0,0],[0,0]]]", "[[[1,0],[1,0]],[[0,0],[0,0]]]");
        assert!(serde_json::from_str::<Povm>(&nonherm).is_err());
    }
}
