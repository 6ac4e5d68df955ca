//! GNS construction for a state on `M_n(ℂ)` and the commutant POVMs of an assemblage.
//!
//! The state `σ(b) = Tr(ρ b)` induces the Gram matrix
//! `G_{(ij),(kl)} = σ(E_ij† E_kl) = δ_ik ρ_lj` on matrix units (ordered
//! lexicographically, `E_ij ↦ i·n + j`). Its null space is the left ideal
//! `{b : σ(b†b) = 0}`; whitening the positive eigenspace gives an
//! orthonormal basis of the GNS space. Each assemblage element defines the
//! sesquilinear form `W_{(ij),(kl)} = σ_{a|x}(E_ij† E_kl)`, dominated by `G`,
//! and `M_{a|x} = F† W F` is the bounded operator representing it. These
//! operators lie in the commutant of `π(M_n)`, sum to the identity for every
//! setting, and reproduce the assemblage as `σ_{a|x}(b) = ⟨Ω, π(b) M_{a|x} Ω⟩`.

use num_complex::Complex64;

use crate::assemblage::{check_trusted, reduced_state, Assemblage, Behaviour, Povm};
use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, kron, matrix_unit, operator_norm, ComplexMatrix, DEFAULT_RANK_TOL};

const STATE_TOL: f64 = 1e-9;
const REPAIR_LIMIT: f64 = 1e-8;

/// GNS triple `(π, H, Ω)` of a state on `M_n(ℂ)` in an orthonormal basis of `H`.
#[derive(Clone, Debug)]
pub struct GnsRep {
    dim: usize,
    gns_dim: usize,
    state: ComplexMatrix,
    /// Isometry from matrix-unit coordinates (with the Gram inner product) onto `ℂ^{gns_dim}`: `Λ^{1/2} Q†`.
    basis_map: ComplexMatrix,
    /// Gram whitening `Q Λ^{-1/2}`; its columns are the orthonormal basis in matrix-unit coordinates.
    whitening: ComplexMatrix,
    omega: Vec<Complex64>,
    /// `π(E_ij)` at index `i·n + j`.
    units: Vec<ComplexMatrix>,
}

impl GnsRep {
    /// Trusted dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gns_dim(&self) -> usize {
        self.gns_dim
    }

    pub fn state(&self) -> &ComplexMatrix {
        &self.state
    }

    pub fn omega(&self) -> &[Complex64] {
        &self.omega
    }

    pub fn basis_map(&self) -> &ComplexMatrix {
        &self.basis_map
    }

    pub fn whitening(&self) -> &ComplexMatrix {
        &self.whitening
    }

    /// `π(E_ij)`.
    pub fn pi_unit(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.units[i * self.dim + j]
    }

    /// `π(b)` for an arbitrary `n × n` matrix.
    pub fn pi(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        if b.rows() != n || b.cols() != n {
            return Err(Error::DimensionMismatch(format!("π expects {n}x{n} input")));
        }
        let mut out = ComplexMatrix::zeros(self.gns_dim, self.gns_dim);
        for i in 0..n {
            for j in 0..n {
                let c = b[(i, j)];
                if c != Complex64::new(0.0, 0.0) {
                    out += &self.pi_unit(i, j).scale_complex(c);
                }
            }
        }
        Ok(out)
    }

    /// GNS vector `π(b)Ω = [b]` in orthonormal coordinates.
    pub fn vector_of(&self, b: &ComplexMatrix) -> Vec<Complex64> {
        self.basis_map.matvec(b.as_slice())
    }

    /// `max_{ij,kl} ‖π(E_ij E_kl) − π(E_ij) π(E_kl)‖` together with the
    /// unitality and adjoint defects.
    pub fn homomorphism_defect(&self) -> f64 {
        let n = self.dim;
        let id = ComplexMatrix::identity(self.gns_dim);
        let unital = self.pi(&ComplexMatrix::identity(n)).map(|p| p.distance(&id)).unwrap_or(f64::INFINITY);
        let mut worst = unital;
        for i in 0..n {
            for j in 0..n {
                let adj = self.pi_unit(i, j).adjoint().distance(self.pi_unit(j, i));
                worst = worst.max(adj);
                for k in 0..n {
                    for l in 0..n {
                        let prod = self.pi_unit(i, j) * self.pi_unit(k, l);
                        let expected = if j == k { self.pi_unit(i, l).clone() } else { ComplexMatrix::zeros(self.gns_dim, self.gns_dim) };
                        worst = worst.max(prod.distance(&expected));
                    }
                }
            }
        }
        worst
    }

    /// `max_ij |⟨Ω, π(E_ij) Ω⟩ − Tr(ρ E_ij)|`.
    pub fn state_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let got = self.pi_unit(i, j).sandwich(&self.omega, &self.omega);
                worst = worst.max((got - self.state[(j, i)]).norm());
            }
        }
        worst
    }
}

/// GNS representation of `b ↦ Tr(σ b)`.
pub fn gns_construct(sigma: &ComplexMatrix) -> Result<GnsRep> {
    let n = sigma.rows();
    if !sigma.is_square() || n == 0 {
        return Err(Error::NotAState("state must be a non-empty square matrix".into()));
    }
    crate::assemblage::check_density(sigma).map_err(|e| Error::NotAState(e.to_string()))?;
    let sigma = sigma.hermitian_part();

    // G = I_n ⊗ σᵀ
    let gram = kron(&ComplexMatrix::identity(n), &sigma.transpose())?;
    let eig = hermitian_eig(&gram)?;
    let support = eig.support(DEFAULT_RANK_TOL);
    let gns_dim = support.len();
    let nn = n * n;
    let mut whitening = ComplexMatrix::zeros(nn, gns_dim);
    let mut basis_map = ComplexMatrix::zeros(gns_dim, nn);
    for (t, &col) in support.iter().enumerate() {
        let l = eig.eigenvalues[col];
        for alpha in 0..nn {
            let q = eig.eigenvectors[(alpha, col)];
            whitening[(alpha, t)] = q / l.sqrt();
            basis_map[(t, alpha)] = q.conj() * l.sqrt();
        }
    }

    // π(E_ij) = C (E_ij ⊗ I_n) F
    let id = ComplexMatrix::identity(n);
    let mut units = Vec::with_capacity(nn);
    for i in 0..n {
        for j in 0..n {
            let left = kron(&matrix_unit(n, i, j), &id)?;
            units.push(&(&basis_map * &left) * &whitening);
        }
    }
    let omega = basis_map.matvec(ComplexMatrix::identity(n).as_slice());
    Ok(GnsRep { dim: n, gns_dim, state: sigma, basis_map, whitening, omega, units })
}

/// Commutant POVM elements `M_{a|x}` (indexed `[x][a]`) reproducing the assemblage from the GNS state.
pub fn steering_operators(gns: &GnsRep, assemblage: &Assemblage) -> Result<Vec<Vec<ComplexMatrix>>> {
    let s = assemblage.scenario();
    if s.dim != gns.dim {
        return Err(Error::DimensionMismatch(format!("assemblage on dimension {}, GNS on {}", s.dim, gns.dim)));
    }
    let sigma = reduced_state(assemblage)?;
    let gap = sigma.distance(&gns.state);
    if gap > STATE_TOL {
        return Err(Error::StateMismatch(gap));
    }
    let id = ComplexMatrix::identity(s.dim);
    let adjoint_whitening = gns.whitening.adjoint();
    let mut out = Vec::with_capacity(s.settings);
    for x in 0..s.settings {
        let mut row = Vec::with_capacity(s.outcomes);
        for a in 0..s.outcomes {
            let form = kron(&id, &assemblage.element(a, x).transpose())?;
            let m = (&(&adjoint_whitening * &form) * &gns.whitening).hermitian_part();
            row.push(repair_psd(&m, a, x)?);
        }
        out.push(row);
    }
    Ok(out)
}

/// Clips negative eigenvalues no larger than the repair limit.
fn repair_psd(m: &ComplexMatrix, a: usize, x: usize) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    let min = eig.min_eigenvalue();
    if min >= 0.0 {
        return Ok(m.clone());
    }
    if -min > REPAIR_LIMIT {
        return Err(Error::NumericalBreakdown(format!(
            "steering operator ({a}, {x}) has eigenvalue {min:e}, beyond the repair limit"
        )));
    }
    Ok(eig.apply(|l| l.max(0.0)))
}

/// `max_ij ‖[M, π(E_ij)]‖` in operator norm.
pub fn commutant_residual(gns: &GnsRep, m: &ComplexMatrix) -> Result<f64> {
    if m.rows() != gns.gns_dim || m.cols() != gns.gns_dim {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, GNS space has dimension {}",
            m.rows(),
            m.cols(),
            gns.gns_dim
        )));
    }
    let mut worst: f64 = 0.0;
    for unit in &gns.units {
        let comm = &(m * unit) - &(unit * m);
        worst = worst.max(operator_norm(&comm)?);
    }
    Ok(worst)
}

/// `p(ab|xy) = ⟨Ω, π(N_{b|y}) M_{a|x} Ω⟩`.
pub fn behaviour_via_gns(gns: &GnsRep, steering: &[Vec<ComplexMatrix>], trusted: &[Povm]) -> Result<Behaviour> {
    let settings = steering.len();
    let outcomes = steering.first().map_or(0, Vec::len);
    if settings == 0 || outcomes == 0 || steering.iter().any(|row| row.len() != outcomes) {
        return Err(Error::DimensionMismatch("ragged or empty steering operators".into()));
    }
    if steering.iter().flatten().any(|m| m.rows() != gns.gns_dim || m.cols() != gns.gns_dim) {
        return Err(Error::DimensionMismatch("steering operator does not act on the GNS space".into()));
    }
    let s = crate::assemblage::Scenario::new(settings, outcomes, gns.dim)?;
    let outcomes_b = check_trusted(s, trusted)?;
    let represented: Vec<Vec<ComplexMatrix>> = trusted
        .iter()
        .map(|p| p.effects().iter().map(|e| gns.pi(e)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let steered: Vec<Vec<Vec<Complex64>>> =
        steering.iter().map(|row| row.iter().map(|m| m.matvec(&gns.omega)).collect()).collect();

    let mut worst_imag: f64 = 0.0;
    let p = Behaviour::from_fn(outcomes, outcomes_b, settings, trusted.len(), |a, b, x, y| {
        let v = represented[y][b].sandwich(&gns.omega, &steered[x][a]);
        worst_imag = worst_imag.max(v.im.abs());
        v.re
    });
    if worst_imag > 1e-8 {
        return Err(Error::NumericalBreakdown(format!("behaviour has imaginary residue {worst_imag:e}")));
    }
    Ok(p)
}

/// Worst residuals of the commutant construction for one assemblage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GnsResiduals {
    pub gns_dim: usize,
    pub homomorphism: f64,
    pub state: f64,
    pub omega_norm: f64,
    /// Most negative eigenvalue over all `M_{a|x}`, as a positive number.
    pub positivity: f64,
    /// `max_x ‖Σ_a M_{a|x} − I‖_F`.
    pub completeness: f64,
    pub commutant: f64,
    /// `max |σ_{a|x}(E_ij) − ⟨Ω, π(E_ij) M_{a|x} Ω⟩|`.
    pub reproduction: f64,
}

impl GnsResiduals {
    pub fn worst(&self) -> f64 {
        [self.homomorphism, self.state, self.omega_norm, self.positivity, self.completeness, self.commutant, self.reproduction]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Runs the full construction and measures every invariant.
pub fn check_assemblage(assemblage: &Assemblage) -> Result<(GnsRep, Vec<Vec<ComplexMatrix>>, GnsResiduals)> {
    let sigma = reduced_state(assemblage)?;
    let gns = gns_construct(&sigma)?;
    let ops = steering_operators(&gns, assemblage)?;
    let residuals = residuals(&gns, &ops, assemblage)?;
    Ok((gns, ops, residuals))
}

pub fn residuals(gns: &GnsRep, ops: &[Vec<ComplexMatrix>], assemblage: &Assemblage) -> Result<GnsResiduals> {
    let n = gns.dim;
    let id = ComplexMatrix::identity(gns.gns_dim);
    let mut r = GnsResiduals {
        gns_dim: gns.gns_dim,
        homomorphism: gns.homomorphism_defect(),
        state: gns.state_defect(),
        omega_norm: (crate::numkernel::vector_norm(&gns.omega) - 1.0).abs(),
        ..GnsResiduals::default()
    };
    for (x, row) in ops.iter().enumerate() {
        let mut total = ComplexMatrix::zeros(gns.gns_dim, gns.gns_dim);
        for (a, m) in row.iter().enumerate() {
            total += m;
            let min = crate::numkernel::hermitian_eigenvalues(m)?.first().copied().unwrap_or(0.0);
            r.positivity = r.positivity.max(-min);
            r.commutant = r.commutant.max(commutant_residual(gns, m)?);
            let m_omega = m.matvec(&gns.omega);
            for i in 0..n {
                for j in 0..n {
                    let got = gns.pi_unit(i, j).sandwich(&gns.omega, &m_omega);
                    let want = assemblage.element(a, x)[(j, i)];
                    r.reproduction = r.reproduction.max((got - want).norm());
                }
            }
        }
        r.completeness = r.completeness.max(total.distance(&id));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::fixtures::{pauli_povms, singlet_assemblage};
    use crate::assemblage::{behaviour_from, random_ns, random_ns_with_rank, random_povm, Scenario};
    use crate::numkernel::random::{random_density, seeded};
    use crate::numkernel::psd_sqrt_pinv;

    #[test]
    fn gns_dimension_is_n_times_rank() {
        let mut rng = seeded(1);
        for n in 1..=4 {
            for rank in 1..=n {
                let sigma = random_density(n, rank, &mut rng);
                let g = gns_construct(&sigma).unwrap();
                assert_eq!(g.gns_dim(), n * rank);
                assert!(g.homomorphism_defect() <= 1e-9);
                assert!(g.state_defect() <= 1e-10);
                assert!((crate::numkernel::vector_norm(g.omega()) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn scalar_state() {
        let g = gns_construct(&ComplexMatrix::identity(1)).unwrap();
        assert_eq!(g.gns_dim(), 1);
        assert!((g.pi_unit(0, 0)[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((g.omega()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_states() {
        assert!(matches!(gns_construct(&ComplexMatrix::identity(2)), Err(Error::NotAState(_))));
        assert!(matches!(gns_construct(&ComplexMatrix::diagonal(&[1.5, -0.5])), Err(Error::NotAState(_))));
    }

    #[test]
    fn trivial_assemblage_gives_uniform_operators() {
        let sigma = random_density(3, 2, &mut seeded(2));
        let a = Assemblage::from_fn(Scenario::new(2, 4, 3).unwrap(), |_, _| sigma.scale(0.25)).unwrap();
        let (g, ops, res) = check_assemblage(&a).unwrap();
        let quarter = ComplexMatrix::identity(g.gns_dim()).scale(0.25);
        for m in ops.iter().flatten() {
            assert!(m.distance(&quarter) < 1e-9);
        }
        assert!(res.worst() <= 1e-9);
    }

    #[test]
    fn classical_assemblage_gives_scalar_operators() {
        let a = random_ns(Scenario::new(3, 3, 1).unwrap(), 6);
        let (_, ops, _) = check_assemblage(&a).unwrap();
        for x in 0..3 {
            for k in 0..3 {
                assert!((ops[x][k][(0, 0)] - a.element(k, x)[(0, 0)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn commutant_residual_cases() {
        let g = gns_construct(&random_density(2, 2, &mut seeded(3))).unwrap();
        assert_eq!(commutant_residual(&g, &ComplexMatrix::identity(4)).unwrap(), 0.0);
        // π(E_12) does not commute with π(E_21)
        assert!(commutant_residual(&g, g.pi_unit(0, 1)).unwrap() > 0.1);
        assert!(matches!(commutant_residual(&g, &ComplexMatrix::identity(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn state_mismatch_is_reported() {
        let a = random_ns(Scenario::new(2, 2, 2).unwrap(), 1);
        let g = gns_construct(&ComplexMatrix::identity(2).scale(0.5)).unwrap();
        assert!(matches!(steering_operators(&g, &a), Err(Error::StateMismatch(_))));
    }

    /// Full-rank oracle: with `[b] ↦ b ρ^{1/2}` the GNS space is Hilbert–Schmidt
    /// space and `M_{a|x}` is right multiplication by `T = ρ^{-1/2} σ_{a|x} ρ^{-1/2}`.
    /// Compare the basis-independent matrix elements `⟨[b], M [c]⟩`.
    #[test]
    fn matches_hilbert_schmidt_oracle_for_full_rank_states() {
        for seed in 0..30 {
            let s = Scenario::new(2 + seed as usize % 2, 2 + seed as usize % 3, 2 + seed as usize % 3).unwrap();
            let a = random_ns_with_rank(s, s.dim, seed).unwrap();
            let sigma = reduced_state(&a).unwrap();
            let roots = psd_sqrt_pinv(&sigma, DEFAULT_RANK_TOL).unwrap();
            let (g, ops, _) = check_assemblage(&a).unwrap();
            let n = s.dim;
            for x in 0..s.settings {
                for k in 0..s.outcomes {
                    let t = &(&roots.pinv_sqrt * a.element(k, x)) * &roots.pinv_sqrt;
                    for (i, j, p, q) in (0..n * n).flat_map(|u| (0..n * n).map(move |v| (u / n, u % n, v / n, v % n))) {
                        let b = matrix_unit(n, i, j);
                        let c = matrix_unit(n, p, q);
                        let hs_b = &b * &roots.sqrt;
                        let hs_c = &(&c * &roots.sqrt) * &t;
                        let want = hs_b.inner(&hs_c);
                        let got = ops[x][k].sandwich(&g.vector_of(&b), &g.vector_of(&c));
                        assert!((got - want).norm() < 1e-9, "seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn cauchy_schwarz_domination() {
        for seed in 0..20 {
            let a = random_ns(Scenario::new(2, 3, 3).unwrap(), seed);
            let sigma = reduced_state(&a).unwrap();
            for (i, j) in (0..9).map(|u| (u / 3, u % 3)) {
                let b = matrix_unit(3, i, j);
                let btb = &b.adjoint() * &b;
                let full = sigma.inner(&btb).re;
                for x in 0..2 {
                    for k in 0..3 {
                        assert!(a.element(k, x).inner(&btb).re <= full + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn behaviour_matches_direct_traces() {
        let a = singlet_assemblage();
        let (g, ops, _) = check_assemblage(&a).unwrap();
        let via = behaviour_via_gns(&g, &ops, &pauli_povms()).unwrap();
        let direct = behaviour_from(&a, &pauli_povms()).unwrap();
        assert!(via.max_difference(&direct) <= 1e-10);

        let trivial = behaviour_via_gns(&g, &ops, &[Povm::trivial(2, 1)]).unwrap();
        for x in 0..2 {
            for k in 0..2 {
                assert!((trivial.get(k, 0, x, 0) - a.outcome_probability(k, x)).abs() < 1e-12);
            }
        }

        let mut rng = seeded(10);
        for seed in 0..20 {
            let a = random_ns(Scenario::new(3, 2, 3).unwrap(), seed);
            let (g, ops, _) = check_assemblage(&a).unwrap();
            let trusted: Vec<Povm> = (0..3).map(|_| random_povm(3, 2, &mut rng)).collect();
            let via = behaviour_via_gns(&g, &ops, &trusted).unwrap();
            assert!(via.max_difference(&behaviour_from(&a, &trusted).unwrap()) <= 1e-9);
            assert!(via.signaling_violation() <= 1e-9);
        }
    }

    #[test]
    fn random_assemblages_satisfy_every_postcondition() {
        for seed in 0..100 {
            let s = Scenario::new(2 + seed as usize % 3, 2 + (seed as usize / 3) % 3, 1 + seed as usize % 4).unwrap();
            let a = random_ns(s, seed);
            let (_, _, r) = check_assemblage(&a).unwrap();
            assert!(r.worst() <= 1e-9, "seed {seed}: {r:?}");
        }
    }
}
