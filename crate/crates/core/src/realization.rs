//! Explicit quantum realization of a no-signaling assemblage.
//!
//! Given `σ = Σ_a σ_{a|x}` with eigen-decomposition `σ = Σ_i λ_i |v_i⟩⟨v_i|`
//! (ascending order, support only), the shared state is the purification
//! `|Ψ⟩ = Σ_i √λ_i |i⟩ ⊗ |v_i⟩` on `ℂ^r ⊗ ℂ^n`, `r = rank σ`, and the
//! untrusted measurements are
//!
//! ```text
//! ⟨j| M_{a|x} |i⟩ = ⟨v_i| σ^{-1/2} σ_{a|x} σ^{-1/2} |v_j⟩
//! ```
//!
//! i.e. the filtered element written in the σ-eigenbasis and transposed.
//! Worked 2×2 example: for `σ = diag(1/4, 3/4)` the eigenbasis is the
//! computational one, `|Ψ⟩ = ½|00⟩ + (√3/2)|11⟩`, and an element
//! `σ_{a|x} = [[p, q], [q̄, s]]` becomes
//! `M_{a|x} = [[4p, (4/√3) q̄], [(4/√3) q, (4/3) s]]`; the partial trace
//! `Tr_A((M ⊗ I)|Ψ⟩⟨Ψ|)` then returns `σ_{a|x}`.

use num_complex::Complex64;

use crate::assemblage::{from_realization, reduced_state, Assemblage, Povm};
use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, kron, partial_trace_first, ComplexMatrix, DEFAULT_RANK_TOL};

const SUPPORT_TOL: f64 = 1e-8;
const CLIP_TOL: f64 = 1e-10;

/// Shared state `ρ_AB` on `ℂ^{dA} ⊗ ℂ^n` plus one POVM per setting on `ℂ^{dA}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumRealization {
    pub dim_a: usize,
    pub rho_ab: ComplexMatrix,
    pub povms: Vec<Povm>,
}

impl QuantumRealization {
    pub fn trusted_dim(&self) -> usize {
        self.rho_ab.rows() / self.dim_a.max(1)
    }

    /// The assemblage this realization produces.
    pub fn assemblage(&self) -> Result<Assemblage> {
        from_realization(&self.rho_ab, &self.povms, self.trusted_dim())
    }
}

/// Builds the purification-based realization of a valid assemblage.
pub fn gisin_realize(assemblage: &Assemblage) -> Result<QuantumRealization> {
    let sigma = reduced_state(assemblage)?;
    let s = assemblage.scenario();
    let n = s.dim;
    let eig = hermitian_eig(&sigma)?;
    let support = eig.support(DEFAULT_RANK_TOL);
    let rank = support.len();
    let vectors: Vec<Vec<Complex64>> = support.iter().map(|&i| eig.eigenvector(i)).collect();
    let weights: Vec<f64> = support.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut psi = vec![Complex64::new(0.0, 0.0); rank * n];
    for (i, (v, &l)) in vectors.iter().zip(&weights).enumerate() {
        for q in 0..n {
            psi[i * n + q] = v[q] * l.sqrt();
        }
    }
    let rho_ab = ComplexMatrix::outer(&psi, &psi);

    // Π = V V† onto supp σ
    let basis = ComplexMatrix::from_columns(&vectors);
    let projector = &basis * &basis.adjoint();

    let mut povms = Vec::with_capacity(s.settings);
    for x in 0..s.settings {
        let mut effects = Vec::with_capacity(s.outcomes);
        for a in 0..s.outcomes {
            let element = assemblage.element(a, x);
            let leak = element.distance(&(&(&projector * element) * &projector));
            if leak > SUPPORT_TOL {
                return Err(Error::SupportViolation { a, x, weight: leak });
            }
            // T_ij = ⟨v_i|σ_{a|x}|v_j⟩ / √(λ_i λ_j), M = Tᵀ
            let compressed = &(&basis.adjoint() * element) * &basis;
            let m = ComplexMatrix::from_fn(rank, rank, |j, i| compressed[(i, j)] / (weights[i] * weights[j]).sqrt());
            effects.push(clip_small_negatives(&m.hermitian_part())?);
        }
        povms.push(Povm::new(effects)?);
    }
    Ok(QuantumRealization { dim_a: rank, rho_ab, povms })
}

/// Eigenvalues in `[−1e-10, 0)` are set to zero; anything more negative is left for validation to reject.
fn clip_small_negatives(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    if eig.eigenvalues.iter().all(|&l| l >= 0.0 || l < -CLIP_TOL) {
        return Ok(m.clone());
    }
    Ok(eig.apply(|l| if (-CLIP_TOL..0.0).contains(&l) { 0.0 } else { l }))
}

/// `max_{a,x} ‖Tr_A((M_{a|x} ⊗ I) ρ_AB) − σ_{a|x}‖_F`.
pub fn verify_realization(realization: &QuantumRealization, assemblage: &Assemblage) -> Result<f64> {
    let s = assemblage.scenario();
    let d = realization.dim_a;
    if realization.rho_ab.rows() != d * s.dim || !realization.rho_ab.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for dA={d}, n={}",
            realization.rho_ab.rows(),
            s.dim
        )));
    }
    if realization.povms.len() != s.settings {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for {} settings",
            realization.povms.len(),
            s.settings
        )));
    }
    let id = ComplexMatrix::identity(s.dim);
    let mut worst: f64 = 0.0;
    for (x, povm) in realization.povms.iter().enumerate() {
        if povm.outcomes() != s.outcomes || povm.dim() != d {
            return Err(Error::DimensionMismatch(format!("measurement {x} does not match the scenario")));
        }
        for a in 0..s.outcomes {
            let op = kron(povm.effect(a), &id)?;
            let produced = partial_trace_first(&(&op * &realization.rho_ab), d, s.dim)?;
            worst = worst.max(produced.distance(assemblage.element(a, x)));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::fixtures::singlet_assemblage;
    use crate::assemblage::{random_ns, Scenario};
    use crate::numkernel::ZERO;

    #[test]
    fn classical_assemblage_gives_scalar_realization() {
        let s = Scenario::new(3, 3, 1).unwrap();
        let a = random_ns(s, 4);
        let r = gisin_realize(&a).unwrap();
        assert_eq!(r.dim_a, 1);
        assert!((r.rho_ab[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for x in 0..3 {
            for k in 0..3 {
                assert!((r.povms[x].effect(k)[(0, 0)] - a.element(k, x)[(0, 0)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn singlet_round_trip() {
        let a = singlet_assemblage();
        let r = gisin_realize(&a).unwrap();
        assert_eq!(r.dim_a, 2);
        assert!(verify_realization(&r, &a).unwrap() <= 1e-10);
    }

    #[test]
    fn worked_two_by_two_example() {
        // σ = diag(1/4, 3/4); σ_{1|1} = [[p, q], [q̄, s]] with p = 1/8, s = 1/4, q = (1 + i)/16
        let s = Scenario::new(1, 2, 2).unwrap();
        let q = Complex64::new(1.0, 1.0) / 16.0;
        let e0 = ComplexMatrix::from_rows(&[&[Complex64::new(0.125, 0.0), q], &[q.conj(), Complex64::new(0.25, 0.0)]]);
        let e1 = &ComplexMatrix::diagonal(&[0.25, 0.75]) - &e0;
        let a = Assemblage::new(s, vec![vec![e0, e1]]).unwrap();
        let r = gisin_realize(&a).unwrap();
        let c = 4.0 / 3f64.sqrt();
        let expected = ComplexMatrix::from_rows(&[
            &[Complex64::new(0.5, 0.0), q.conj() * c],
            &[q * c, Complex64::new(1.0 / 3.0, 0.0)],
        ]);
        assert!(r.povms[0].effect(0).distance(&expected) < 1e-14);
        let h = 0.5;
        let t = 3f64.sqrt() / 2.0;
        let psi = [Complex64::new(h, 0.0), ZERO, ZERO, Complex64::new(t, 0.0)];
        assert!(r.rho_ab.distance(&ComplexMatrix::outer(&psi, &psi)) < 1e-14);
    }

    #[test]
    fn rank_economy_and_completeness() {
        for seed in 0..60 {
            let s = Scenario::new(2 + seed as usize % 3, 2 + seed as usize % 3, 1 + seed as usize % 4).unwrap();
            let a = random_ns(s, seed);
            let sigma = reduced_state(&a).unwrap();
            let rank = crate::numkernel::psd_sqrt_pinv(&sigma, DEFAULT_RANK_TOL).unwrap().rank;
            let r = gisin_realize(&a).unwrap();
            assert_eq!(r.dim_a, rank);
            for povm in &r.povms {
                let total = povm.effects().iter().fold(ComplexMatrix::zeros(rank, rank), |acc, e| &acc + e);
                assert!(total.distance(&ComplexMatrix::identity(rank)) <= 1e-9);
            }
            assert!(verify_realization(&r, &a).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn zeroed_effect_shows_up_in_error() {
        let a = random_ns(Scenario::new(2, 3, 3).unwrap(), 21);
        let mut r = gisin_realize(&a).unwrap();
        let d = r.dim_a;
        let mut effects = r.povms[1].effects().to_vec();
        effects[2] = ComplexMatrix::zeros(d, d);
        // bypass validation: the zeroed measurement is no longer complete
        r.povms[1] = Povm::with_tolerance(effects, f64::INFINITY).unwrap();
        let err = verify_realization(&r, &a).unwrap();
        assert!((err - a.element(2, 1).frobenius_norm()).abs() < 1e-8);
    }

    #[test]
    fn reconstruction_is_a_fixed_point() {
        let a = random_ns(Scenario::new(3, 2, 3).unwrap(), 5);
        let r = gisin_realize(&a).unwrap();
        let rebuilt = r.assemblage().unwrap();
        assert!(verify_realization(&r, &rebuilt).unwrap() <= 1e-12);
    }

    #[test]
    fn rejects_invalid_input() {
        let a = singlet_assemblage();
        let broken = a.with_element(0, 0, a.element(0, 0).scale(2.0)).unwrap();
        assert!(matches!(gisin_realize(&broken), Err(Error::InvalidAssemblage(_))));
    }
}
