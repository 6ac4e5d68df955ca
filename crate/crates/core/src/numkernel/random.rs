//! Seeded random matrix ensembles.
//!
//! All randomness in the crate flows through [`Rng`], which is xoshiro256**
//! seeded through SplitMix64 (`seed_from_u64`). Independent streams for
//! restarts and trials are obtained with [`stream`].

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

use super::{inner_product, ComplexMatrix};

pub type Rng = Xoshiro256StarStar;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// The `index`-th independent stream derived from `seed` (2^128-step jumps).
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = seeded(seed);
    for _ in 0..index {
        rng.jump();
    }
    rng
}

pub fn uniform_index(n: usize, rng: &mut Rng) -> usize {
    rng.random_range(0..n)
}

pub fn complex_gaussian(rng: &mut Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// GUE-like Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian(n: usize, rng: &mut Rng) -> ComplexMatrix {
    ginibre(n, n, rng).hermitian_part()
}

/// Orthonormal columns from modified Gram–Schmidt on a Ginibre matrix.
/// With positive diagonal of `R`, the result is Haar distributed on the Stiefel manifold.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let g = ginibre(rows, cols, rng);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = g.column(j);
        // two passes keep orthogonality at machine precision
        for _ in 0..2 {
            for q in &basis {
                let c = inner_product(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = super::vector_norm(&v);
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    ComplexMatrix::from_columns(&basis)
}

pub fn haar_unitary(n: usize, rng: &mut Rng) -> ComplexMatrix {
    haar_isometry(n, n, rng)
}

/// Density matrix of the given rank: `G G† / Tr(G G†)` with `G` an `n × rank` Ginibre matrix.
pub fn random_density(n: usize, rank: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ginibre(n, rank, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    m.scale(1.0 / tr).hermitian_part()
}

/// Unit vector with i.i.d. complex Gaussian components, normalized.
pub fn random_unit_vector(n: usize, rng: &mut Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    let norm = super::vector_norm(&v);
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Balanced reflection `2 Q Q† − I` with `Q` a Haar `d × d/2` isometry:
/// Hermitian, squares to the identity, traceless for even `d`.
pub fn random_reflection(d: usize, rng: &mut Rng) -> ComplexMatrix {
    let q = haar_isometry(d, d / 2, rng);
    let mut u = (&q * &q.adjoint()).scale(2.0);
    for i in 0..d {
        u[(i, i)] -= 1.0;
    }
    u.hermitian_part()
}
