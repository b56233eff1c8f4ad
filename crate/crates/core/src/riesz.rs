//! Quantization maps `Q(f) = Σ_x f(x) A({x})` and the positive asymptotic
//! morphism checks for `hbar`-families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asm::{AsmFamily, HbarNet, SweepRow, Verdict};
use crate::config::{PassRule, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig_with, operator_norm, HermitianOperator};
use crate::measures::{integrate_real, smear, Povm, SampleSpace, StochasticMatrix};

/// Uniform grid of `n` nodes on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpace {
    a: f64,
    b: f64,
    n: usize,
}

impl GridSpace {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidGrid(format!("need finite a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        Ok(Self { a, b, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn nodes(&self) -> Vec<f64> {
        let step = self.width() / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.b } else { self.a + step * i as f64 }).collect()
    }

    /// Labels `x0, x1, ...` valued at the nodes.
    pub fn sample_space(&self) -> SampleSpace {
        SampleSpace::with_values((0..self.n).map(|i| format!("x{i}")), self.nodes()).expect("distinct finite nodes")
    }

    /// Sharp PVM `{|i><i|}` on `C^n`.
    pub fn sharp_pvm(&self) -> Povm {
        Povm::computational_basis(self.n).with_space(self.sample_space()).expect("n effects")
    }
}

/// Smearing kernel with `K_ij ∝ exp(-(x_i - x_j)² / 2σ²)`, `σ = hbar (b - a)`,
/// truncated to the grid and row-renormalized.
pub fn gaussian_kernel(grid: &GridSpace, hbar: f64) -> Result<StochasticMatrix> {
    if !(hbar > 0.0 && hbar <= 1.0) {
        return Err(Error::HbarOutOfRange(hbar));
    }
    let x = grid.nodes();
    let sigma = hbar * grid.width();
    let rows = x
        .iter()
        .map(|xi| {
            let row: Vec<f64> = x.iter().map(|xj| (-(xi - xj).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
            let sum: f64 = row.iter().sum();
            row.into_iter().map(|k| k / sum).collect()
        })
        .collect();
    StochasticMatrix::new(rows)
}

/// Grid PVM smeared by [`gaussian_kernel`]; sharp in the `hbar -> 0` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGaussian {
    grid: GridSpace,
}

impl GridGaussian {
    pub fn new(grid: GridSpace) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &GridSpace {
        &self.grid
    }

    pub fn evaluate(&self, hbar: f64) -> Result<Povm> {
        smear(&self.grid.sharp_pvm(), &gaussian_kernel(&self.grid, hbar)?)
    }
}

/// Where a grid family's POVMs come from.
#[derive(Debug, Clone)]
pub enum GridSource {
    GaussianSmearing,
    /// Effects per `hbar` node, one per grid point.
    Tabulated { hbar: Vec<f64>, effects: Vec<Vec<HermitianOperator>> },
}

pub fn make_grid_family(source: GridSource, grid: GridSpace) -> Result<AsmFamily> {
    match source {
        GridSource::GaussianSmearing => Ok(AsmFamily::Grid(GridGaussian::new(grid))),
        GridSource::Tabulated { hbar, effects } => {
            let povms = effects
                .into_iter()
                .map(|e| Povm::new(grid.sample_space(), e))
                .collect::<Result<Vec<_>>>()?;
            AsmFamily::tabulated(hbar, povms)
        }
    }
}

/// Real function given by its values on the sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub name: String,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            name: format!("{}*{}", self.name, other.name),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }
}

/// JSON function description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Indicator { set: Vec<String> },
    Const { c: f64 },
    Coordinate,
    Table { values: Vec<f64> },
}

impl FunctionSpec {
    pub fn sample(&self, space: &SampleSpace) -> Result<SampledFunction> {
        match self {
            Self::Indicator { set } => {
                let s = space.subset(set)?;
                Ok(SampledFunction::new(format!("1{}", space.describe(&s)), s.indicator(space.len())))
            }
            Self::Const { c } => {
                if !c.is_finite() {
                    return Err(Error::InvalidFunction(format!("constant {c}")));
                }
                Ok(SampledFunction::new(format!("const({c})"), vec![*c; space.len()]))
            }
            Self::Coordinate => {
                let v = space.values().ok_or(Error::MissingValues)?;
                Ok(SampledFunction::new("coordinate", v.to_vec()))
            }
            Self::Table { values } => {
                if values.len() != space.len() {
                    return Err(Error::SizeMismatch { expected: space.len(), found: values.len() });
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidFunction("non-finite table value".into()));
                }
                Ok(SampledFunction::new("table", values.clone()))
            }
        }
    }
}

/// `f ↦ ∫ f dA` for a fixed POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationMap {
    povm: Povm,
}

impl QuantizationMap {
    pub fn new(povm: Povm) -> Self {
        Self { povm }
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn apply(&self, f: &[f64]) -> Result<HermitianOperator> {
        integrate_real(&self.povm, f)
    }
}

pub fn quantize(p: &Povm, f: &[f64]) -> Result<HermitianOperator> {
    integrate_real(p, f)
}

/// `||Q(fg) - Q(f)Q(g)||` for one POVM.
pub fn multiplicativity_defect_of(p: &Povm, f: &[f64], g: &[f64]) -> Result<f64> {
    let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
    let q_fg = quantize(p, &fg)?;
    let prod = quantize(p, f)?.matrix() * quantize(p, g)?.matrix();
    Ok(operator_norm(&(q_fg.matrix() - &prod)))
}

pub fn multiplicativity_defect(family: &AsmFamily, f: &[f64], g: &[f64], hbar: f64) -> Result<f64> {
    multiplicativity_defect_of(&family.evaluate(hbar)?, f, g)
}

/// `2 max|f| ||A(X)|| - ||Q(f)||`, nonnegative up to rounding.
pub fn norm_bound_margin(p: &Povm, f: &[f64]) -> Result<f64> {
    let sup = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(2.0 * sup * operator_norm(p.total().matrix()) - operator_norm(quantize(p, f)?.matrix()))
}

/// Test functions for the morphism checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionBank {
    pub functions: Vec<SampledFunction>,
}

impl FunctionBank {
    /// Singleton indicators, the constant 1, the coordinate (when the space is
    /// valued) and `smooth` random trigonometric samples drawn from `seed`.
    pub fn standard(space: &SampleSpace, smooth: usize, seed: u64) -> Self {
        let n = space.len();
        let mut functions: Vec<SampledFunction> = (0..n)
            .map(|i| SampledFunction::new(format!("1{}", space.describe(&space.singleton(i))), space.singleton(i).indicator(n)))
            .collect();
        functions.push(SampledFunction::new("const(1)", vec![1.0; n]));
        if let Some(v) = space.values() {
            functions.push(SampledFunction::new("coordinate", v.to_vec()));
        }
        let positions = positions(space);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..smooth {
            functions.push(SampledFunction::new(format!("smooth{k}"), smooth_sample(&positions, &mut rng)));
        }
        Self { functions }
    }

    /// Only the singleton indicators.
    pub fn indicators(space: &SampleSpace) -> Self {
        let n = space.len();
        Self {
            functions: (0..n)
                .map(|i| SampledFunction::new(format!("1{}", space.describe(&space.singleton(i))), space.singleton(i).indicator(n)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// Points rescaled to `[0, 1]` by value when available, else by index.
fn positions(space: &SampleSpace) -> Vec<f64> {
    let n = space.len();
    match space.values() {
        Some(v) if n > 1 => {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            v.iter().map(|x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 }).collect()
        }
        _ if n > 1 => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        _ => vec![0.0],
    }
}

/// Low-order random cosine series, shifted to be nonnegative.
pub fn smooth_sample(positions: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let terms: Vec<(f64, f64)> = (1..=3)
        .map(|k| (rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let offset = terms.iter().map(|(a, _)| a.abs()).sum::<f64>() + rng.gen_range(0.0..0.5);
    positions
        .iter()
        .map(|t| {
            let s: f64 = terms
                .iter()
                .enumerate()
                .map(|(k, (a, phi))| a * ((k + 1) as f64 * std::f64::consts::PI * t + phi).cos())
                .sum();
            (offset + s).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphismPoint {
    pub hbar: f64,
    /// Smallest eigenvalue of `Q(f)` over the bank's nonnegative functions.
    pub min_positivity_margin: f64,
    pub max_linearity_residual: f64,
    pub max_multiplicativity_defect: f64,
    pub worst_pair: String,
    /// `max_f (||Q(f)|| - max|f|)`, clipped at zero.
    pub max_norm_excess: f64,
    #[serde(rename = "norm_AX")]
    pub norm_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphismReport {
    pub kind: String,
    pub verdict: Verdict,
    pub rule: PassRule,
    pub bank_size: usize,
    pub positive: bool,
    pub linear: bool,
    pub asymptotically_multiplicative: bool,
    pub bounded: bool,
    pub final_defect: f64,
    pub points: Vec<MorphismPoint>,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

/// Linearity residuals above this are reported as failures.
pub const LINEARITY_TOL: f64 = 1e-12;

pub fn check_positive_asymptotic_morphism(
    family: &AsmFamily,
    bank: &FunctionBank,
    net: &HbarNet,
    rule: &PassRule,
    seed: u64,
) -> Result<MorphismReport> {
    check_positive_asymptotic_morphism_with(family, bank, net, rule, seed, &Tolerances::default())
}

pub fn check_positive_asymptotic_morphism_with(
    family: &AsmFamily,
    bank: &FunctionBank,
    net: &HbarNet,
    rule: &PassRule,
    seed: u64,
    tol: &Tolerances,
) -> Result<MorphismReport> {
    let n = family.space().len();
    if let Some(f) = bank.functions.iter().find(|f| f.values.len() != n) {
        return Err(Error::SizeMismatch { expected: n, found: f.values.len() });
    }
    if bank.is_empty() {
        return Err(Error::InvalidFunction("empty function bank".into()));
    }
    let funcs = &bank.functions;
    let pairs: Vec<(usize, usize)> = (0..funcs.len()).flat_map(|i| (i..funcs.len()).map(move |j| (i, j))).collect();

    let per_point: Vec<(MorphismPoint, Vec<SweepRow>)> = net
        .points()
        .par_iter()
        .enumerate()
        .map(|(k, &hbar)| -> Result<_> {
            let p = family.evaluate_with(hbar, tol)?;
            let norm_total = operator_norm(p.total().matrix());
            let q: Vec<HermitianOperator> = funcs.iter().map(|f| quantize(&p, &f.values)).collect::<Result<_>>()?;

            let mut min_positivity_margin = f64::INFINITY;
            let mut max_norm_excess = 0.0f64;
            for (f, qf) in funcs.iter().zip(&q) {
                if f.is_nonnegative() {
                    min_positivity_margin = min_positivity_margin.min(hermitian_eig_with(qf, tol)?.values[0]);
                }
                max_norm_excess = max_norm_excess.max(operator_norm(qf.matrix()) - f.sup_norm());
            }

            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut max_linearity_residual = 0.0f64;
            for _ in 0..4 {
                let (i, j) = (rng.gen_range(0..funcs.len()), rng.gen_range(0..funcs.len()));
                let (alpha, beta): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let combo: Vec<f64> =
                    funcs[i].values.iter().zip(&funcs[j].values).map(|(a, b)| alpha * a + beta * b).collect();
                let mut expect = q[i].scale(alpha);
                expect.add_scaled(beta, &q[j]);
                let got = quantize(&p, &combo)?;
                max_linearity_residual = max_linearity_residual.max((got.matrix() - expect.matrix()).max_abs());
            }

            let mut rows = Vec::with_capacity(pairs.len());
            let (mut max_defect, mut worst) = (0.0f64, 0usize);
            for (idx, &(i, j)) in pairs.iter().enumerate() {
                let fg = funcs[i].product(&funcs[j]);
                let q_fg = quantize(&p, &fg.values)?;
                let defect = operator_norm(&(q_fg.matrix() - &(q[i].matrix() * q[j].matrix())));
                if defect > max_defect {
                    max_defect = defect;
                    worst = idx;
                }
                rows.push(SweepRow {
                    hbar,
                    set_pair: format!("{}|{}", funcs[i].name, funcs[j].name),
                    defect,
                    norm_total,
                });
            }
            let (wi, wj) = pairs[worst];
            Ok((
                MorphismPoint {
                    hbar,
                    min_positivity_margin,
                    max_linearity_residual,
                    max_multiplicativity_defect: max_defect,
                    worst_pair: format!("{}|{}", funcs[wi].name, funcs[wj].name),
                    max_norm_excess: max_norm_excess.max(0.0),
                    norm_total,
                },
                rows,
            ))
        })
        .collect::<Result<_>>()?;

    let (points, rows): (Vec<MorphismPoint>, Vec<Vec<SweepRow>>) = per_point.into_iter().unzip();
    let defects: Vec<f64> = points.iter().map(|p| p.max_multiplicativity_defect).collect();
    let excess: Vec<f64> = points.iter().map(|p| p.max_norm_excess).collect();
    let positive = points.iter().all(|p| p.min_positivity_margin >= -tol.psd);
    let linear = points.iter().all(|p| p.max_linearity_residual <= LINEARITY_TOL);
    let asymptotically_multiplicative = rule.passes(&defects);
    let bounded = rule.passes(&excess);
    Ok(MorphismReport {
        kind: family.kind().to_string(),
        verdict: Verdict::from_bool(positive && linear && asymptotically_multiplicative && bounded),
        rule: *rule,
        bank_size: funcs.len(),
        positive,
        linear,
        asymptotically_multiplicative,
        bounded,
        final_defect: *defects.last().expect("nonempty net"),
        points,
        rows: rows.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{constant_family_from_pvm, projectivity_defect};
    use crate::linalg::ComplexMatrix;
    use crate::measures::{is_projective, Pvm};
    use crate::spin::{spin_povm_from_bloch, BlochVector};

    fn sharp_z() -> Povm {
        Povm::new(
            SampleSpace::spin(),
            vec![HermitianOperator::from_real_diag(&[1.0, 0.0]), HermitianOperator::from_real_diag(&[0.0, 1.0])],
        )
        .unwrap()
    }

    #[test]
    fn quantize_examples() {
        let rk = AsmFamily::roy_kar([0.0, 0.0, 1.0]).unwrap().evaluate(0.5).unwrap();
        let q = quantize(&rk, &[1.0, 1.0]).unwrap();
        assert!((q.matrix() - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        let q = quantize(&sharp_z(), &[0.5, -0.5]).unwrap();
        assert_eq!(q.matrix(), &ComplexMatrix::from_real_diag(&[0.5, -0.5]));
        let q = QuantizationMap::new(rk.clone()).apply(&[0.3, 2.0]).unwrap();
        assert!(hermitian_eig_with(&q, &Tolerances::default()).unwrap().values[0] >= -1e-12);
        assert!(quantize(&rk, &[1.0]).is_err());
    }

    #[test]
    fn multiplicativity_examples() {
        let pvm = Pvm::new(sharp_z(), &Tolerances::default()).unwrap();
        let c = constant_family_from_pvm(&pvm);
        assert!(multiplicativity_defect(&c, &[0.3, -2.0], &[1.5, 4.0], 0.2).unwrap() <= 1e-12);
        let rk = AsmFamily::roy_kar([0.0, 0.0, 1.0]).unwrap();
        let d = multiplicativity_defect(&rk, &[1.0, 0.0], &[1.0, 0.0], 0.1).unwrap();
        assert!((d - 0.0475).abs() < 1e-15);
        let d = multiplicativity_defect(&rk, &[1.0, 1.0], &[0.7, -3.0], 0.1).unwrap();
        assert!(d < 1e-15);
    }

    #[test]
    fn norm_margin_examples() {
        let rk = AsmFamily::roy_kar([0.0, 0.0, 1.0]).unwrap().evaluate(0.5).unwrap();
        assert!((norm_bound_margin(&rk, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(norm_bound_margin(&rk, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn morphism_checks() {
        let net = HbarNet::default();
        let rule = PassRule::default();
        let pvm = Pvm::new(sharp_z(), &Tolerances::default()).unwrap();
        let c = constant_family_from_pvm(&pvm);
        let bank = FunctionBank::standard(&c.space(), 8, 0);
        let r = check_positive_asymptotic_morphism(&c, &bank, &net, &rule, 0).unwrap();
        assert!(r.verdict.passed());
        assert!(r.points.iter().all(|p| p.max_multiplicativity_defect <= 1e-12));

        let rk = AsmFamily::roy_kar([0.0, 0.0, 1.0]).unwrap();
        let r = check_positive_asymptotic_morphism(&rk, &FunctionBank::indicators(&rk.space()), &net, &rule, 0).unwrap();
        assert!(r.verdict.passed());
        for p in &r.points {
            let h = p.hbar;
            assert!((p.max_multiplicativity_defect - h / 2.0 * (1.0 - h / 2.0)).abs() < 1e-15);
        }

        let unsharp = spin_povm_from_bloch(&BlochVector::new([0.0, 0.0, 0.5]).unwrap()).to_povm();
        let f = AsmFamily::Constant(unsharp);
        let r = check_positive_asymptotic_morphism(&f, &FunctionBank::standard(&f.space(), 8, 0), &net, &rule, 0).unwrap();
        assert!(!r.verdict.passed() && !r.asymptotically_multiplicative);
    }

    #[test]
    fn bank_contents() {
        let bank = FunctionBank::standard(&SampleSpace::spin(), 8, 7);
        assert_eq!(bank.len(), 2 + 1 + 1 + 8);
        assert!(bank.functions[4..].iter().all(|f| f.is_nonnegative()));
        assert_eq!(bank, FunctionBank::standard(&SampleSpace::spin(), 8, 7));
        assert_ne!(bank, FunctionBank::standard(&SampleSpace::spin(), 8, 8));
    }

    #[test]
    fn function_specs() {
        let s = SampleSpace::spin();
        let f: FunctionSpec = serde_json::from_str(r#"{"type":"indicator","set":["+"]}"#).unwrap();
        assert_eq!(f.sample(&s).unwrap().values, vec![1.0, 0.0]);
        let f: FunctionSpec = serde_json::from_str(r#"{"type":"const","c":2.5}"#).unwrap();
        assert_eq!(f.sample(&s).unwrap().values, vec![2.5, 2.5]);
        let f: FunctionSpec = serde_json::from_str(r#"{"type":"coordinate"}"#).unwrap();
        assert_eq!(f.sample(&s).unwrap().values, vec![0.5, -0.5]);
        let f: FunctionSpec = serde_json::from_str(r#"{"type":"table","values":[1,2,3]}"#).unwrap();
        assert!(f.sample(&s).is_err());
        let f: FunctionSpec = serde_json::from_str(r#"{"type":"indicator","set":["up"]}"#).unwrap();
        assert!(matches!(f.sample(&s), Err(Error::UnknownLabel(_))));
        let unvalued = SampleSpace::new(["a", "b"]).unwrap();
        assert!(FunctionSpec::Coordinate.sample(&unvalued).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpace::new(1.0, 0.0, 4).is_err());
        assert!(GridSpace::new(0.0, 1.0, 1).is_err());
        assert!(GridSpace::new(0.0, f64::INFINITY, 4).is_err());
        let g = GridSpace::new(0.0, 1.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grid_family_sharp_limit() {
        let grid = GridSpace::new(0.0, 1.0, 16).unwrap();
        let fam = make_grid_family(GridSource::GaussianSmearing, grid).unwrap();
        let p = fam.evaluate(1e-3).unwrap();
        assert_eq!(p, grid.sharp_pvm());
        assert!(is_projective(&p, 0.0));
    }

    /// Plain-array oracle: kernel, smeared diagonal effects and the defect of
    /// the left-half indicator with itself.
    fn left_half_defect_oracle(n: usize, hbar: f64) -> f64 {
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let sigma = hbar;
        let mut lambda = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                lambda[i][j] = (-(x[i] - x[j]) * (x[i] - x[j]) / (2.0 * sigma * sigma)).exp();
                sum += lambda[i][j];
            }
            for v in &mut lambda[i] {
                *v /= sum;
            }
        }
        // Q(1_L) = diag(c) with c_j = Σ_{i in L} Λ_ij; Q(1_L)^2 = diag(c^2).
        (0..n)
            .map(|j| {
                let c: f64 = (0..n / 2).map(|i| lambda[i][j]).sum();
                (c - c * c).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_left_half_defect_regression() {
        let grid = GridSpace::new(0.0, 1.0, 16).unwrap();
        let fam = make_grid_family(GridSource::GaussianSmearing, grid).unwrap();
        let left: Vec<f64> = (0..16).map(|i| if i < 8 { 1.0 } else { 0.0 }).collect();
        let d = multiplicativity_defect(&fam, &left, &left, 0.2).unwrap();
        let oracle = left_half_defect_oracle(16, 0.2);
        assert!((d - oracle).abs() < 1e-14, "{d} vs {oracle}");
        assert!((d - GRID_LEFT_HALF_DEFECT_AT_0_2).abs() < 1e-12, "{d}");
        assert!(d > 0.0);
    }

    /// Frozen from `left_half_defect_oracle(16, 0.2)`.
    const GRID_LEFT_HALF_DEFECT_AT_0_2: f64 = 0.248_107_749_520_653_23;

    #[test]
    fn two_point_grid_matches_two_outcome_smearing() {
        let grid = GridSpace::new(0.0, 1.0, 2).unwrap();
        let fam = make_grid_family(GridSource::GaussianSmearing, grid).unwrap();
        for h in [1.0f64, 0.6, 0.3] {
            let e = (-1.0 / (2.0 * h * h)).exp();
            let flip = e / (1.0 + e);
            let lambda = StochasticMatrix::new(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]]).unwrap();
            let want = smear(&grid.sharp_pvm(), &lambda).unwrap();
            let got = fam.evaluate(h).unwrap();
            for (a, b) in got.effects().iter().zip(want.effects()) {
                assert!((a.matrix() - b.matrix()).max_abs() < 1e-15);
            }
            // Same as the spin flip matrix at 2·flip.
            let spin = crate::spin::smearing_matrix(2.0 * flip).unwrap();
            assert!((spin.get(0, 1) - lambda.get(0, 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn tabulated_grid_family() {
        let grid = GridSpace::new(-1.0, 1.0, 3).unwrap();
        let sharp = grid.sharp_pvm().effects().to_vec();
        let flat = vec![HermitianOperator::identity(3).scale(1.0 / 3.0); 3];
        let fam = make_grid_family(GridSource::Tabulated { hbar: vec![0.1, 1.0], effects: vec![sharp, flat] }, grid).unwrap();
        let a = fam.evaluate(0.1).unwrap();
        assert_eq!(a, grid.sharp_pvm());
        assert!(make_grid_family(
            GridSource::Tabulated { hbar: vec![0.1, 1.0], effects: vec![vec![HermitianOperator::identity(3)], vec![]] },
            grid
        )
        .is_err());
    }

    #[test]
    fn indicators_separate_measures() {
        let a = sharp_z();
        let b = spin_povm_from_bloch(&BlochVector::new([0.0, 0.0, 0.9]).unwrap()).to_povm();
        let bank = FunctionBank::indicators(a.space());
        let differs = bank.functions.iter().any(|f| {
            (quantize(&a, &f.values).unwrap().matrix() - quantize(&b, &f.values).unwrap().matrix()).max_abs() > 1e-12
        });
        assert!(differs);
        // Indicator defects at fixed hbar coincide with the measure defects.
        let rk = AsmFamily::roy_kar([1.0, 0.0, 0.0]).unwrap();
        let p = rk.evaluate(0.3).unwrap();
        let s = p.space().clone();
        let d1 = multiplicativity_defect_of(&p, &s.singleton(0).indicator(2), &s.singleton(1).indicator(2)).unwrap();
        let d2 = projectivity_defect(&p, &s.singleton(0), &s.singleton(1));
        assert!((d1 - d2).abs() < 1e-15);
    }
}
