//! Moment matrices built directly from an explicit realization.
//!
//! Each POVM `{M_{a|x}}` on `ℂ^{dA}` is dilated to a PVM on `ℂ^{dA} ⊗ ℂ^k`
//! through the isometry `ψ ↦ Σ_a √M_{a|x} ψ ⊗ |a⟩`, with one ancilla
//! register per setting (initialised to `|0⟩`). With `ρ_AB = Σ_r λ_r |e_r⟩⟨e_r|`
//! and `Φ_r` the `D × n` reshaping of `√λ_r e_r` (plus ancillas), the
//! moment matrix is `Γ = Σ_r K_r† K_r` with `K_r = [W(w₁)Φ_r ⋯ W(w_N)Φ_r]`.
//! It is PSD by construction and satisfies the word relations exactly.

use super::{root_of_unity, MomentProblem};
use crate::error::{Error, Result};
use crate::freeword::FreeWord;
use crate::numkernel::{hermitian_eig, psd_sqrt_pinv, ComplexMatrix, DEFAULT_RANK_TOL};
use crate::realization::QuantumRealization;

/// The realization's moment matrix on the problem's words.
pub fn certificate_from_realization(problem: &MomentProblem, realization: &QuantumRealization) -> Result<ComplexMatrix> {
    let s = problem.scenario();
    if realization.povms.len() != s.settings
        || realization.trusted_dim() != s.dim
        || realization.povms.iter().any(|p| p.outcomes() != s.outcomes)
    {
        return Err(Error::ScenarioMismatch("realization does not match the moment problem".into()));
    }
    moment_matrix_from_realization(realization, problem.words())
}

/// `Γ_{w,w'} = [Tr((W(w)†W(w') ⊗ E_ij) ρ)]_{ij}` for the dilated PVM unitaries.
pub fn moment_matrix_from_realization(realization: &QuantumRealization, words: &[FreeWord]) -> Result<ComplexMatrix> {
    let d_a = realization.dim_a;
    let m = realization.povms.len();
    let k = realization.povms.first().map_or(1, |p| p.outcomes());
    let n = realization.trusted_dim();
    if words.iter().any(|w| w.settings() != m || w.order() != k) {
        return Err(Error::ScenarioMismatch("words do not match the realization".into()));
    }
    let ancilla = k.pow(m as u32);
    let big = d_a * ancilla;

    // u_x^j on the full space, indexed [x][j]
    let mut powers = Vec::with_capacity(m);
    for (x, povm) in realization.povms.iter().enumerate() {
        let dilation = naimark_unitary(povm.effects())?;
        let adj = dilation.adjoint();
        let local: Vec<ComplexMatrix> = (0..k)
            .map(|j| {
                let phases: Vec<_> = (0..d_a * k).map(|i| root_of_unity((i % k) * j, k)).collect();
                let diag = ComplexMatrix::from_fn(d_a * k, d_a * k, |r, c| if r == c { phases[r] } else { Default::default() });
                &(&adj * &diag) * &dilation
            })
            .collect();
        powers.push(local.iter().map(|u| embed(u, x, d_a, k, m)).collect::<Vec<_>>());
    }

    let eig = hermitian_eig(&realization.rho_ab)?;
    let w = words.len();
    let mut gamma = ComplexMatrix::zeros(w * n, w * n);
    for r in eig.support(DEFAULT_RANK_TOL) {
        let weight = eig.eigenvalues[r].sqrt();
        let v = eig.eigenvector(r);
        let mut phi = ComplexMatrix::zeros(big, n);
        for alpha in 0..d_a {
            for i in 0..n {
                phi[(alpha * ancilla, i)] = v[alpha * n + i] * weight;
            }
        }
        let columns: Vec<ComplexMatrix> = words
            .iter()
            .map(|word| {
                let mut out = phi.clone();
                for l in word.letters().iter().rev() {
                    out = &powers[l.setting][l.power] * &out;
                }
                out
            })
            .collect();
        for p in 0..w {
            let left = columns[p].adjoint();
            for q in 0..w {
                let block = &left * &columns[q];
                let mut acc = gamma.block(p * n, q * n, n, n);
                acc += &block;
                gamma.set_block(p * n, q * n, &acc);
            }
        }
    }
    Ok(gamma.hermitian_part())
}

/// Unitary on `ℂ^{dA} ⊗ ℂ^k` whose restriction to `ψ ⊗ |0⟩` is `ψ ↦ Σ_a √M_a ψ ⊗ |a⟩`.
fn naimark_unitary(effects: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let k = effects.len();
    let d = effects[0].rows();
    let big = d * k;
    let mut iso = ComplexMatrix::zeros(big, d);
    for (a, e) in effects.iter().enumerate() {
        let root = psd_sqrt_pinv(e, DEFAULT_RANK_TOL)?.sqrt;
        for alpha in 0..d {
            for beta in 0..d {
                iso[(alpha * k + a, beta)] = root[(alpha, beta)];
            }
        }
    }
    // orthonormal complement from the eigenvectors of I − V V†
    let complement = &ComplexMatrix::identity(big) - &(&iso * &iso.adjoint());
    let eig = hermitian_eig(&complement.hermitian_part())?;
    let extra: Vec<_> = (0..big).rev().take(big - d).map(|i| eig.eigenvector(i)).collect();

    let mut u = ComplexMatrix::zeros(big, big);
    let mut next = extra.iter();
    for beta in 0..d {
        for c in 0..k {
            let col = beta * k + c;
            if c == 0 {
                for row in 0..big {
                    u[(row, col)] = iso[(row, beta)];
                }
            } else {
                let v = next.next().expect("complement has dimension d(k-1)");
                for row in 0..big {
                    u[(row, col)] = v[row];
                }
            }
        }
    }
    Ok(u)
}

/// Lifts an operator on `ℂ^{dA} ⊗ (register x)` to `ℂ^{dA} ⊗ (ℂ^k)^{⊗m}`.
fn embed(local: &ComplexMatrix, x: usize, d_a: usize, k: usize, m: usize) -> ComplexMatrix {
    let ancilla = k.pow(m as u32);
    let stride = k.pow((m - 1 - x) as u32);
    let big = d_a * ancilla;
    let digit = |i: usize| (i % ancilla / stride) % k;
    let rest = |i: usize| i % ancilla - digit(i) * stride;
    ComplexMatrix::from_fn(big, big, |i, j| {
        if rest(i) != rest(j) {
            return Default::default();
        }
        local[((i / ancilla) * k + digit(i), (j / ancilla) * k + digit(j))]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::fixtures::singlet_assemblage;
    use crate::assemblage::{random_ns, random_povm, from_realization, Scenario};
    use crate::hierarchy::build_moment_problem;
    use crate::numkernel::random::{random_density, seeded};
    use crate::numkernel::psd_violation;
    use crate::realization::gisin_realize;

    #[test]
    fn dilation_is_unitary_and_reproduces_the_povm() {
        let mut rng = seeded(4);
        let povm = random_povm(3, 3, &mut rng);
        let u = naimark_unitary(povm.effects()).unwrap();
        assert!((&u.adjoint() * &u).distance(&ComplexMatrix::identity(9)) < 1e-10);
        for a in 0..3 {
            let proj = ComplexMatrix::from_fn(9, 9, |i, j| if i == j && i % 3 == a { 1.0.into() } else { Default::default() });
            let pvm = &(&u.adjoint() * &proj) * &u;
            let compressed = ComplexMatrix::from_fn(3, 3, |i, j| pvm[(i * 3, j * 3)]);
            assert!(compressed.distance(povm.effect(a)) < 1e-10);
        }
    }

    #[test]
    fn gisin_certificate_satisfies_the_problem() {
        for seed in 0..10 {
            let s = Scenario::new(2 + seed as usize % 2, 2 + seed as usize % 2, 1 + seed as usize % 3).unwrap();
            let a = random_ns(s, seed);
            let r = gisin_realize(&a).unwrap();
            for level in 1..=2 {
                let p = build_moment_problem(&a, level).unwrap();
                let g = certificate_from_realization(&p, &r).unwrap();
                assert!(p.certificate_violation(&g).unwrap() <= 1e-9, "seed {seed} level {level}");
            }
        }
    }

    #[test]
    fn mixed_state_certificate() {
        let mut rng = seeded(9);
        let rho = random_density(4, 3, &mut rng);
        let povms = vec![random_povm(2, 2, &mut rng), random_povm(2, 2, &mut rng)];
        let a = from_realization(&rho, &povms, 2).unwrap();
        let r = QuantumRealization { dim_a: 2, rho_ab: rho, povms };
        let p = build_moment_problem(&a, 2).unwrap();
        let g = certificate_from_realization(&p, &r).unwrap();
        assert!(p.constraint_violation(&g).unwrap() <= 1e-9);
        assert!(psd_violation(&g).unwrap() <= 1e-9);
    }

    #[test]
    fn mismatched_realization_is_rejected() {
        let r = gisin_realize(&singlet_assemblage()).unwrap();
        let p = build_moment_problem(&random_ns(Scenario::new(3, 2, 2).unwrap(), 1), 1).unwrap();
        assert!(matches!(certificate_from_realization(&p, &r), Err(Error::ScenarioMismatch(_))));
    }
}
