//! `hbar`-parameterized families of POVMs (asymptotic spectral measures).
//!
//! A family is certified on a finite, strictly decreasing [`HbarNet`]: the
//! quasiprojectivity defect `||A(Δ∩Δ') - A(Δ)A(Δ')||` is computed at every
//! net point for every tracked subset pair, and the limit `-> 0` is judged by
//! a [`PassRule`] on the tail of the net.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PassRule, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig_with, operator_norm, HermitianOperator};
use crate::measures::{is_projective, smear, Povm, Pvm, SampleSpace, Subset};
use crate::riesz::{GridGaussian, GridSpace};
use crate::spin::{roy_kar_family, smearing_matrix, spin_povm_from_bloch, BlochPath, BlochVector};

/// Strictly decreasing sample of `(0, 1]` standing in for `hbar -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HbarNet(Vec<f64>);

impl HbarNet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidNet("empty net".into()));
        }
        if let Some(h) = points.iter().find(|h| !(**h > 0.0 && **h <= 1.0)) {
            return Err(Error::InvalidNet(format!("point {h} outside (0, 1]")));
        }
        if points.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidNet("points must be strictly decreasing".into()));
        }
        Ok(Self(points))
    }

    /// `start · ratio^k` for `k = 0..count`.
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidNet(format!("ratio {ratio} must lie in (0, 1)")));
        }
        if count == 0 {
            return Err(Error::InvalidNet("count must be positive".into()));
        }
        Self::new((0..count).map(|k| start * ratio.powi(k as i32)).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn smallest(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl Default for HbarNet {
    fn default() -> Self {
        Self::geometric(1.0, 0.75, 40).expect("valid default net")
    }
}

type Generator = Arc<dyn Fn(f64) -> Result<Povm> + Send + Sync>;

/// A family `hbar ↦ A_hbar` on a fixed sample space and Hilbert dimension.
#[derive(Clone)]
pub enum AsmFamily {
    /// The same POVM for every `hbar`.
    Constant(Povm),
    /// `A^± = ½(I ± x(hbar)·σ)`.
    Spin(BlochPath),
    /// Sharp PVM of `n` smeared by the two-outcome flip matrix at `hbar`.
    Smeared { n: BlochVector },
    /// Effects interpolated linearly between POVMs at ascending nodes.
    Tabulated { hbar: Vec<f64>, povms: Vec<Povm> },
    Grid(GridGaussian),
    Custom { name: String, space: SampleSpace, dim: usize, generator: Generator },
}

impl AsmFamily {
    pub fn roy_kar(n: [f64; 3]) -> Result<Self> {
        Ok(Self::Spin(roy_kar_family(n)?))
    }

    pub fn smeared(n: [f64; 3]) -> Result<Self> {
        Ok(Self::Smeared { n: BlochVector::unit(n, 1e-12)? })
    }

    pub fn tabulated(hbar: Vec<f64>, povms: Vec<Povm>) -> Result<Self> {
        if hbar.len() != povms.len() || hbar.len() < 2 {
            return Err(Error::InvalidTable(format!("{} nodes for {} POVMs (need >= 2)", hbar.len(), povms.len())));
        }
        let (space, dim) = (povms[0].space().clone(), povms[0].dim());
        if povms.iter().any(|p| p.space() != &space) {
            return Err(Error::SpaceMismatch);
        }
        if let Some(p) = povms.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        let mut rows: Vec<(f64, Povm)> = hbar
            .into_iter()
            .zip(povms)
            .map(|(h, p)| if h > 0.0 && h <= 1.0 { Ok((h, p)) } else { Err(Error::HbarOutOfRange(h)) })
            .collect::<Result<_>>()?;
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidTable("repeated hbar node".into()));
        }
        let (hbar, povms) = rows.into_iter().unzip();
        Ok(Self::Tabulated { hbar, povms })
    }

    pub fn custom(
        name: impl Into<String>,
        space: SampleSpace,
        dim: usize,
        generator: impl Fn(f64) -> Result<Povm> + Send + Sync + 'static,
    ) -> Self {
        Self::Custom { name: name.into(), space, dim, generator: Arc::new(generator) }
    }

    pub fn kind(&self) -> &str {
        match self {
            Self::Constant(_) => "constant",
            Self::Spin(path) => path.name(),
            Self::Smeared { .. } => "smeared",
            Self::Tabulated { .. } => "tabulated",
            Self::Grid(_) => "grid_gaussian",
            Self::Custom { name, .. } => name,
        }
    }

    pub fn space(&self) -> SampleSpace {
        match self {
            Self::Constant(p) => p.space().clone(),
            Self::Spin(_) | Self::Smeared { .. } => SampleSpace::spin(),
            Self::Tabulated { povms, .. } => povms[0].space().clone(),
            Self::Grid(g) => g.grid().sample_space(),
            Self::Custom { space, .. } => space.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(p) => p.dim(),
            Self::Spin(_) | Self::Smeared { .. } => 2,
            Self::Tabulated { povms, .. } => povms[0].dim(),
            Self::Grid(g) => g.grid().len(),
            Self::Custom { dim, .. } => *dim,
        }
    }

    pub fn evaluate(&self, hbar: f64) -> Result<Povm> {
        self.evaluate_with(hbar, &Tolerances::default())
    }

    pub fn evaluate_with(&self, hbar: f64, tol: &Tolerances) -> Result<Povm> {
        let tabulated = matches!(self, Self::Tabulated { .. } | Self::Spin(BlochPath::Table { .. }));
        if !tabulated && !(hbar > 0.0 && hbar <= 1.0) {
            return Err(Error::HbarOutOfRange(hbar));
        }
        match self {
            Self::Constant(p) => Ok(p.clone()),
            Self::Spin(path) => Ok(spin_povm_from_bloch(&path.at(hbar)?).to_povm()),
            Self::Smeared { n } => smear(&spin_povm_from_bloch(n).to_povm(), &smearing_matrix(hbar)?),
            Self::Tabulated { hbar: nodes, povms } => {
                if !(hbar >= nodes[0] && hbar <= nodes[nodes.len() - 1]) {
                    return Err(Error::HbarOutOfRange(hbar));
                }
                let k = nodes.partition_point(|&h| h < hbar);
                if nodes[k] == hbar {
                    return Ok(povms[k].clone());
                }
                let t = (hbar - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                let effects = povms[k - 1]
                    .effects()
                    .iter()
                    .zip(povms[k].effects())
                    .map(|(a, b)| {
                        let mut e = a.scale(1.0 - t);
                        e.add_scaled(t, b);
                        e
                    })
                    .collect();
                Povm::checked(povms[k].space().clone(), effects, tol)
            }
            Self::Grid(g) => g.evaluate(hbar),
            Self::Custom { space, dim, generator, .. } => {
                let p = generator(hbar)?;
                if p.space() != space {
                    return Err(Error::SpaceMismatch);
                }
                if p.dim() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, found: p.dim() });
                }
                Ok(p)
            }
        }
    }
}

impl fmt::Debug for AsmFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AsmFamily({}, {} points, dim {})", self.kind(), self.space().len(), self.dim())
    }
}

/// The constant family `A_hbar = P`.
pub fn constant_family_from_pvm(p: &Pvm) -> AsmFamily {
    AsmFamily::Constant(p.povm().clone())
}

/// Checked variant taking a plain POVM; non-projective input is rejected.
pub fn constant_family_from_povm(p: Povm, tol: &Tolerances) -> Result<AsmFamily> {
    Ok(constant_family_from_pvm(&Pvm::new(p, tol)?))
}

/// `||A(Δ∩Δ') - A(Δ)A(Δ')||` for one POVM.
pub fn projectivity_defect(p: &Povm, a: &Subset, b: &Subset) -> f64 {
    let inter = p.measure(&a.intersection(b));
    let prod = p.measure(a).matrix() * p.measure(b).matrix();
    operator_norm(&(inter.matrix() - &prod))
}

pub fn quasiprojectivity_defect(f: &AsmFamily, hbar: f64, a: &Subset, b: &Subset) -> Result<f64> {
    Ok(projectivity_defect(&f.evaluate(hbar)?, a, b))
}

/// Subsets tracked by the sweeps.
///
/// Up to 4 points: the full power set. Up to 8: the empty set, singletons,
/// two-point unions and the whole space. Beyond that: singletons and the
/// whole space. Finite additivity makes singleton-generated sets sufficient.
pub fn tracked_subsets(space: &SampleSpace) -> Vec<Subset> {
    let n = space.len();
    let mk = |v: Vec<usize>| Subset::new(v, n).expect("indices in range");
    if n <= 4 {
        return (0u32..(1 << n))
            .map(|mask| mk((0..n).filter(|i| mask & (1 << i) != 0).collect()))
            .collect();
    }
    let mut sets = Vec::new();
    if n <= 8 {
        sets.push(Subset::empty());
    }
    sets.extend((0..n).map(|i| mk(vec![i])));
    if n <= 8 {
        for i in 0..n {
            for j in (i + 1)..n {
                sets.push(mk(vec![i, j]));
            }
        }
    }
    sets.push(space.full());
    sets
}

/// Unordered pairs `(i, j)`, `i <= j`, in lexicographic index order.
pub fn subset_pairs(sets: &[Subset]) -> Vec<(usize, usize)> {
    (0..sets.len()).flat_map(|i| (i..sets.len()).map(move |j| (i, j))).collect()
}

/// One CSV row: `hbar,set_pair,defect,norm_AX`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub hbar: f64,
    pub set_pair: String,
    pub defect: f64,
    #[serde(rename = "norm_AX")]
    pub norm_total: f64,
}

pub const SWEEP_CSV_HEADER: &str = "hbar,set_pair,defect,norm_AX";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record([r.hbar.to_string(), r.set_pair.clone(), r.defect.to_string(), r.norm_total.to_string()])?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Self::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsmPoint {
    pub hbar: f64,
    pub valid_povm: bool,
    pub min_eigenvalue: f64,
    #[serde(rename = "norm_AX")]
    pub norm_total: f64,
    pub max_defect: f64,
    pub worst_pair: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsmReport {
    pub kind: String,
    pub verdict: Verdict,
    pub rule: PassRule,
    pub valid: bool,
    pub quasiprojective: bool,
    pub bounded: bool,
    pub final_defect: f64,
    pub worst_defect: f64,
    pub worst_norm_excess_tail: f64,
    pub points: Vec<AsmPoint>,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

pub fn check_asm(f: &AsmFamily, net: &HbarNet, rule: &PassRule) -> Result<AsmReport> {
    check_asm_with(f, net, rule, &Tolerances::default())
}

/// Evaluates the family on the net and applies the pass rule to the per-point
/// maximal defect and to the excess `max(0, ||A(X)|| - 1)`.
pub fn check_asm_with(f: &AsmFamily, net: &HbarNet, rule: &PassRule, tol: &Tolerances) -> Result<AsmReport> {
    let space = f.space();
    let sets = tracked_subsets(&space);
    let pairs = subset_pairs(&sets);
    let names: Vec<String> = sets.iter().map(|s| space.describe(s)).collect();

    let per_point: Vec<(AsmPoint, Vec<SweepRow>)> = net
        .points()
        .par_iter()
        .map(|&hbar| -> Result<(AsmPoint, Vec<SweepRow>)> {
            let p = f.evaluate_with(hbar, tol)?;
            let min_eigenvalue = p
                .effects()
                .iter()
                .map(|e| hermitian_eig_with(e, tol).map(|eig| eig.values[0]))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let norm_total = operator_norm(p.total().matrix());
            let measures: Vec<HermitianOperator> = sets.iter().map(|s| p.measure(s)).collect();
            let mut rows = Vec::with_capacity(pairs.len());
            let (mut max_defect, mut worst) = (0.0f64, 0usize);
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let inter = p.measure(&sets[i].intersection(&sets[j]));
                let prod = measures[i].matrix() * measures[j].matrix();
                let defect = operator_norm(&(inter.matrix() - &prod));
                if defect > max_defect {
                    max_defect = defect;
                    worst = k;
                }
                rows.push(SweepRow { hbar, set_pair: format!("{}|{}", names[i], names[j]), defect, norm_total });
            }
            let (wi, wj) = pairs[worst];
            let point = AsmPoint {
                hbar,
                valid_povm: min_eigenvalue >= -tol.psd,
                min_eigenvalue,
                norm_total,
                max_defect,
                worst_pair: format!("{}|{}", names[wi], names[wj]),
            };
            Ok((point, rows))
        })
        .collect::<Result<_>>()?;

    let (points, rows): (Vec<AsmPoint>, Vec<Vec<SweepRow>>) = per_point.into_iter().unzip();
    let defects: Vec<f64> = points.iter().map(|p| p.max_defect).collect();
    let excess: Vec<f64> = points.iter().map(|p| (p.norm_total - 1.0).max(0.0)).collect();
    let valid = points.iter().all(|p| p.valid_povm);
    let quasiprojective = rule.passes(&defects);
    let bounded = rule.passes(&excess);
    let tail_start = excess.len().saturating_sub(rule.tail);
    Ok(AsmReport {
        kind: f.kind().to_string(),
        verdict: Verdict::from_bool(valid && quasiprojective && bounded),
        rule: *rule,
        valid,
        quasiprojective,
        bounded,
        final_defect: *defects.last().expect("nonempty net"),
        worst_defect: defects.iter().copied().fold(0.0, f64::max),
        worst_norm_excess_tail: excess[tail_start..].iter().copied().fold(0.0, f64::max),
        points,
        rows: rows.into_iter().flatten().collect(),
    })
}

pub fn equivalence_defect(f: &AsmFamily, g: &AsmFamily, hbar: f64, set: &Subset) -> Result<f64> {
    ensure_comparable(f, g)?;
    let (a, b) = (f.evaluate(hbar)?, g.evaluate(hbar)?);
    Ok(operator_norm(&(a.measure(set).matrix() - b.measure(set).matrix())))
}

fn ensure_comparable(f: &AsmFamily, g: &AsmFamily) -> Result<()> {
    if f.space() != g.space() {
        return Err(Error::SpaceMismatch);
    }
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalencePoint {
    pub hbar: f64,
    pub max_distance: f64,
    pub worst_set: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub rule: PassRule,
    pub final_distance: f64,
    pub points: Vec<EquivalencePoint>,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

/// `lim ||A(Δ) - B(Δ)|| = 0` for every tracked set, judged on the net.
pub fn check_equivalent(f: &AsmFamily, g: &AsmFamily, net: &HbarNet, rule: &PassRule) -> Result<EquivalenceReport> {
    ensure_comparable(f, g)?;
    let space = f.space();
    let sets = tracked_subsets(&space);
    let per_point: Vec<(EquivalencePoint, Vec<SweepRow>)> = net
        .points()
        .par_iter()
        .map(|&hbar| -> Result<_> {
            let (a, b) = (f.evaluate(hbar)?, g.evaluate(hbar)?);
            let mut rows = Vec::with_capacity(sets.len());
            let (mut max_distance, mut worst) = (0.0f64, 0usize);
            for (k, s) in sets.iter().enumerate() {
                let d = operator_norm(&(a.measure(s).matrix() - b.measure(s).matrix()));
                if d > max_distance {
                    max_distance = d;
                    worst = k;
                }
                rows.push(SweepRow {
                    hbar,
                    set_pair: space.describe(s),
                    defect: d,
                    norm_total: operator_norm(a.total().matrix()),
                });
            }
            Ok((EquivalencePoint { hbar, max_distance, worst_set: space.describe(&sets[worst]) }, rows))
        })
        .collect::<Result<_>>()?;
    let (points, rows): (Vec<EquivalencePoint>, Vec<Vec<SweepRow>>) = per_point.into_iter().unzip();
    let distances: Vec<f64> = points.iter().map(|p| p.max_distance).collect();
    Ok(EquivalenceReport {
        verdict: Verdict::from_bool(rule.passes(&distances)),
        rule: *rule,
        final_distance: *distances.last().expect("nonempty net"),
        points,
        rows: rows.into_iter().flatten().collect(),
    })
}

/// JSON family description read by the command-line tool.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    RoyKar { n: [f64; 3] },
    BlochPathTable { hbar: Vec<f64>, points: Vec<[f64; 3]> },
    /// Must be projective.
    ConstantPvm { povm: Povm },
    /// Any POVM, held fixed.
    Constant { povm: Povm },
    Smeared { n: [f64; 3] },
    Tabulated { hbar: Vec<f64>, povms: Vec<Povm> },
    GridGaussian { a: f64, b: f64, n: usize },
}

impl FamilySpec {
    pub fn build(&self, tol: &Tolerances) -> Result<AsmFamily> {
        match self {
            Self::RoyKar { n } => AsmFamily::roy_kar(*n),
            Self::BlochPathTable { hbar, points } => Ok(AsmFamily::Spin(BlochPath::table(hbar.clone(), points.clone())?)),
            Self::ConstantPvm { povm } => constant_family_from_povm(povm.clone(), tol),
            Self::Constant { povm } => Ok(AsmFamily::Constant(povm.clone())),
            Self::Smeared { n } => AsmFamily::smeared(*n),
            Self::Tabulated { hbar, povms } => AsmFamily::tabulated(hbar.clone(), povms.clone()),
            Self::GridGaussian { a, b, n } => Ok(AsmFamily::Grid(GridGaussian::new(GridSpace::new(*a, *b, *n)?))),
        }
    }
}

/// True when the POVM at every net point is projective to `tol`.
pub fn is_pointwise_projective(f: &AsmFamily, net: &HbarNet, tol: f64) -> Result<bool> {
    for &h in net.points() {
        if !is_projective(&f.evaluate(h)?, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}
