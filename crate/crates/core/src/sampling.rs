//! Seeded random generators for matrices, states, measures and functions.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{hermitian_eig, ComplexMatrix, DensityOperator, HermitianOperator};
use crate::measures::{Povm, SampleSpace};
use crate::spin::BlochVector;

/// Box–Muller standard normal.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Entries with independent standard normal real and imaginary parts.
pub fn random_matrix(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| Complex64::new(standard_normal(rng), standard_normal(rng)))
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    HermitianOperator::symmetrized(&random_matrix(dim, rng))
}

/// `G G^dag / trace` for a Ginibre matrix `G`.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = random_matrix(dim, rng);
    let w = &g * &g.adjoint();
    let t = w.trace().re;
    DensityOperator::new(HermitianOperator::symmetrized(&w.scale_real(1.0 / t))).expect("Wishart state")
}

/// Normalized POVM `S^{-1/2} W_i S^{-1/2}` with `W_i` Wishart and `S = Σ W_i`.
pub fn random_povm(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Povm {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = random_matrix(dim, rng);
            &g * &g.adjoint()
        })
        .collect();
    let mut total = ComplexMatrix::zeros(dim);
    for w in &raw {
        total = &total + w;
    }
    let eig = hermitian_eig(&HermitianOperator::symmetrized(&total)).expect("Wishart sum");
    let inv_sqrt = eig.reconstruct_with(|l| 1.0 / l.sqrt());
    let effects = raw.iter().map(|w| HermitianOperator::symmetrized(&(&(&inv_sqrt * w) * &inv_sqrt))).collect();
    let space = SampleSpace::with_values(
        (0..outcomes).map(|i| format!("o{i}")),
        (0..outcomes).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
    .expect("distinct labels");
    Povm::new(space, effects).expect("consistent dimensions")
}

/// Uniform in the closed unit ball.
pub fn random_ball_point(rng: &mut impl Rng) -> BlochVector {
    let d = random_direction(rng).components();
    let r = rng.gen::<f64>().cbrt();
    BlochVector::new(d.map(|c| r * c)).expect("inside ball")
}

/// Uniform on the unit sphere.
pub fn random_direction(rng: &mut impl Rng) -> BlochVector {
    loop {
        let v = [standard_normal(rng), standard_normal(rng), standard_normal(rng)];
        if let Ok(d) = BlochVector::direction(v) {
            return d;
        }
    }
}

pub fn random_function(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

pub fn random_nonnegative_function(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.0..3.0)).collect()
}
