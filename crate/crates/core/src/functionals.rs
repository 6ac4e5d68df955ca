//! Linear steering functionals, the correlation functional
//! `I = (1/m) Σ_x [p(a=b|xx) − p(a≠b|xx)]`, a see-saw optimizer over
//! finite-dimensional tensor models, and local-hidden-variable membership.
//!
//! The functional is normalised by the number of settings `m`: with that
//! prefactor the tensor bound `2√(m−1)/m` and the commuting value `1` are
//! on the same scale.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assemblage::{Assemblage, Behaviour, Scenario};
use crate::error::{Error, Result};
use crate::numkernel::random::{random_hermitian, stream, Rng};
use crate::numkernel::{hermitian_eig, hermitian_sign, kron, vector_norm, ComplexMatrix};

const HERMITIAN_TOL: f64 = 1e-10;
const SWEEP_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 1000;
const LHV_TOL: f64 = 1e-9;
const MAX_VERTICES: u128 = 1_000_000;

/// `F = {F_{a|x}}` acting as `A ↦ Σ_{a,x} Tr(F_{a|x} σ_{a|x})`.
#[derive(Clone, Debug)]
pub struct SteeringFunctional {
    scenario: Scenario,
    /// Indexed `[x][a]`.
    elements: Vec<Vec<ComplexMatrix>>,
}

impl SteeringFunctional {
    pub fn new(scenario: Scenario, elements: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if elements.len() != scenario.settings || elements.iter().any(|row| row.len() != scenario.outcomes) {
            return Err(Error::DimensionMismatch(format!(
                "functional needs {} x {} elements",
                scenario.settings, scenario.outcomes
            )));
        }
        for m in elements.iter().flatten() {
            if m.rows() != scenario.dim || m.cols() != scenario.dim {
                return Err(Error::DimensionMismatch(format!("functional elements must be {0}x{0}", scenario.dim)));
            }
            if !m.is_finite() {
                return Err(Error::NonFinite);
            }
            let defect = m.hermiticity_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::NonHermitian { defect });
            }
        }
        Ok(Self { scenario, elements })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Result<Self> {
        let elements = (0..scenario.settings).map(|x| (0..scenario.outcomes).map(|a| f(a, x)).collect()).collect();
        Self::new(scenario, elements)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn element(&self, a: usize, x: usize) -> &ComplexMatrix {
        &self.elements[x][a]
    }
}

/// `Σ_{a,x} Tr(F_{a|x} σ_{a|x})`.
pub fn evaluate(functional: &SteeringFunctional, assemblage: &Assemblage) -> Result<f64> {
    if functional.scenario != assemblage.scenario() {
        return Err(Error::ScenarioMismatch(format!(
            "functional on {:?}, assemblage on {:?}",
            functional.scenario,
            assemblage.scenario()
        )));
    }
    let s = functional.scenario;
    let mut total = Complex64::new(0.0, 0.0);
    for x in 0..s.settings {
        for a in 0..s.outcomes {
            total += functional.element(a, x).adjoint().inner(assemblage.element(a, x));
        }
    }
    Ok(total.re)
}

/// `(1/m) Σ_x [p(a=b|xx) − p(a≠b|xx)]` for two-outcome behaviours with equal setting counts.
pub fn bell_i(p: &Behaviour) -> Result<f64> {
    for found in [p.outcomes_a(), p.outcomes_b()] {
        if found != 2 {
            return Err(Error::WrongOutcomeCount { expected: 2, found });
        }
    }
    if p.settings_a() != p.settings_b() || p.settings_a() == 0 {
        return Err(Error::ScenarioMismatch(format!(
            "functional pairs settings x with x; got {} and {}",
            p.settings_a(),
            p.settings_b()
        )));
    }
    let m = p.settings_a();
    let total: f64 = (0..m)
        .map(|x| p.get(0, 0, x, x) + p.get(1, 1, x, x) - p.get(0, 1, x, x) - p.get(1, 0, x, x))
        .sum();
    Ok(total / m as f64)
}

/// `2√(m−1)/m`.
pub fn tensor_bound(m: usize) -> f64 {
    2.0 * ((m as f64) - 1.0).max(0.0).sqrt() / m as f64
}

/// Pure state and ±1 observables of a two-party tensor model.
#[derive(Clone, Debug)]
pub struct SeesawState {
    pub dim_a: usize,
    pub dim_b: usize,
    /// `ψ ∈ ℂ^{dA} ⊗ ℂ^{dB}`, index `i·dB + j`.
    pub psi: Vec<Complex64>,
    pub a_obs: Vec<ComplexMatrix>,
    pub b_obs: Vec<ComplexMatrix>,
    pub value: f64,
    /// Functional value after each full sweep.
    pub sweeps: Vec<f64>,
    pub restart: usize,
}

impl SeesawState {
    /// `p(ab|xy) = ⟨ψ|P_{a|x} ⊗ Q_{b|y}|ψ⟩` with `P_{0|x} = (I + A_x)/2`.
    pub fn behaviour(&self) -> Result<Behaviour> {
        let rho = ComplexMatrix::outer(&self.psi, &self.psi);
        let effects = |obs: &[ComplexMatrix], d: usize| -> Vec<[ComplexMatrix; 2]> {
            let id = ComplexMatrix::identity(d);
            obs.iter().map(|o| [(&id + o).scale(0.5), (&id - o).scale(0.5)]).collect()
        };
        let pa = effects(&self.a_obs, self.dim_a);
        let pb = effects(&self.b_obs, self.dim_b);
        let mut joint = vec![vec![[[0.0; 2]; 2]; pb.len()]; pa.len()];
        for (x, ea) in pa.iter().enumerate() {
            for (y, eb) in pb.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        joint[x][y][a][b] = rho.inner(&kron(&ea[a], &eb[b])?).re;
                    }
                }
            }
        }
        Ok(Behaviour::from_fn(2, 2, pa.len(), pb.len(), |a, b, x, y| joint[x][y][a][b]))
    }

    /// `max(‖A_x² − I‖, ‖B_x² − I‖, |‖ψ‖ − 1|)`.
    pub fn invariant_defect(&self) -> f64 {
        let square = |o: &ComplexMatrix| (o * o).distance(&ComplexMatrix::identity(o.rows()));
        let obs = self.a_obs.iter().chain(&self.b_obs).map(square).fold(0.0, f64::max);
        obs.max((vector_norm(&self.psi) - 1.0).abs())
    }
}

/// `(1/m) Σ_x A_x ⊗ B_x`.
fn bell_operator(a_obs: &[ComplexMatrix], b_obs: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let m = a_obs.len();
    let mut out = ComplexMatrix::zeros(a_obs[0].rows() * b_obs[0].rows(), a_obs[0].rows() * b_obs[0].rows());
    for (a, b) in a_obs.iter().zip(b_obs) {
        out += &kron(a, b)?;
    }
    Ok(out.scale(1.0 / m as f64))
}

/// `ψ` reshaped as the `dA × dB` matrix `Ψ_{ij} = ψ_{i·dB + j}`.
fn reshape(psi: &[Complex64], dim_a: usize, dim_b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_a, dim_b, |i, j| psi[i * dim_b + j])
}

/// `Tr_B[(I ⊗ B)|ψ⟩⟨ψ|] = Ψ Bᵀ Ψ†`.
fn effective_a(psi: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    (&(psi * &b.transpose()) * &psi.adjoint()).hermitian_part()
}

/// `Tr_A[(A ⊗ I)|ψ⟩⟨ψ|] = (Ψ† A Ψ)ᵀ`.
fn effective_b(psi: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    (&(&psi.adjoint() * a) * psi).transpose().hermitian_part()
}

fn expectation(psi: &[Complex64], a_obs: &[ComplexMatrix], b_obs: &[ComplexMatrix]) -> Result<f64> {
    Ok(bell_operator(a_obs, b_obs)?.sandwich(psi, psi).re)
}

fn random_observable(d: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    hermitian_sign(&random_hermitian(d, rng))
}

fn seesaw_restart(m: usize, dim_a: usize, dim_b: usize, seed: u64, restart: usize) -> Result<SeesawState> {
    let mut rng = stream(seed, restart as u64);
    let mut a_obs = (0..m).map(|_| random_observable(dim_a, &mut rng)).collect::<Result<Vec<_>>>()?;
    let mut b_obs = (0..m).map(|_| random_observable(dim_b, &mut rng)).collect::<Result<Vec<_>>>()?;
    let mut psi = Vec::new();
    let mut sweeps = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for _ in 0..MAX_SWEEPS {
        let eig = hermitian_eig(&bell_operator(&a_obs, &b_obs)?)?;
        psi = eig.eigenvector(eig.dim() - 1);
        let state = reshape(&psi, dim_a, dim_b);
        for (a, b) in a_obs.iter_mut().zip(&b_obs) {
            *a = hermitian_sign(&effective_a(&state, b))?;
        }
        for (b, a) in b_obs.iter_mut().zip(&a_obs) {
            *b = hermitian_sign(&effective_b(&state, a))?;
        }
        let value = expectation(&psi, &a_obs, &b_obs)?;
        sweeps.push(value);
        if value - previous < SWEEP_TOL {
            break;
        }
        previous = value;
    }
    let value = expectation(&psi, &a_obs, &b_obs)?;
    Ok(SeesawState { dim_a, dim_b, psi, a_obs, b_obs, value, sweeps, restart })
}

/// Every restart of the see-saw, in restart order. Restart `r` draws from stream `(seed, r)`.
pub fn seesaw_runs(m: usize, dim_a: usize, dim_b: usize, restarts: usize, seed: u64) -> Result<Vec<SeesawState>> {
    if m == 0 || dim_a < 2 || dim_b < 2 || restarts == 0 {
        return Err(Error::InvalidScenario(format!(
            "see-saw needs m ≥ 1, dims ≥ 2 and at least one restart (m={m}, dA={dim_a}, dB={dim_b}, restarts={restarts})"
        )));
    }
    (0..restarts).into_par_iter().map(|r| seesaw_restart(m, dim_a, dim_b, seed, r)).collect()
}

/// Best restart of the see-saw (earliest restart on ties).
pub fn seesaw(m: usize, dim_a: usize, dim_b: usize, restarts: usize, seed: u64) -> Result<SeesawState> {
    let runs = seesaw_runs(m, dim_a, dim_b, restarts, seed)?;
    Ok(runs.into_iter().reduce(|best, r| if r.value > best.value { r } else { best }).expect("at least one restart"))
}

/// Outcome of the local-hidden-variable linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct LhvVerdict {
    pub feasible: bool,
    /// Smallest uniform deviation `max |p − Σ_λ q_λ D_λ|` over mixtures of deterministic behaviours.
    pub slack: f64,
    pub vertices: u128,
}

/// Number of deterministic behaviours `k_A^{m_A} · k_B^{m_B}`.
pub fn lhv_vertex_count(p: &Behaviour) -> u128 {
    let (ka, kb, ma, mb) = p.shape();
    let pow = |k: usize, m: usize| (k as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    pow(ka, ma).saturating_mul(pow(kb, mb))
}

/// Decides whether `p` is a convex combination of deterministic behaviours (slack at most `1e-9`).
pub fn lhv_membership(p: &Behaviour) -> Result<LhvVerdict> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};

    let vertices = lhv_vertex_count(p);
    if vertices > MAX_VERTICES {
        return Err(Error::ScenarioTooLarge { vertices, limit: MAX_VERTICES });
    }
    let (ka, kb, ma, mb) = p.shape();
    let strategies = |k: usize, m: usize| -> Vec<Vec<usize>> {
        let total = k.pow(m as u32);
        (0..total)
            .map(|mut code| {
                (0..m)
                    .map(|_| {
                        let v = code % k;
                        code /= k;
                        v
                    })
                    .collect()
            })
            .collect()
    };
    let sa = strategies(ka, ma);
    let sb = strategies(kb, mb);

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let slack = lp.add_var(1.0, (0.0, f64::INFINITY));
    let weights: Vec<Vec<_>> = sa.iter().map(|_| sb.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect()).collect();
    let all: Vec<_> = weights.iter().flatten().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(all, ComparisonOp::Eq, 1.0);
    for x in 0..ma {
        for y in 0..mb {
            for a in 0..ka {
                for b in 0..kb {
                    let mut terms: Vec<_> = Vec::new();
                    for (i, fa) in sa.iter().enumerate() {
                        if fa[x] != a {
                            continue;
                        }
                        for (j, fb) in sb.iter().enumerate() {
                            if fb[y] == b {
                                terms.push((weights[i][j], 1.0));
                            }
                        }
                    }
                    let target = p.get(a, b, x, y);
                    let mut upper = terms.clone();
                    upper.push((slack, -1.0));
                    lp.add_constraint(upper, ComparisonOp::Le, target);
                    terms.push((slack, 1.0));
                    lp.add_constraint(terms, ComparisonOp::Ge, target);
                }
            }
        }
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::LinearProgram(format!("{e:?}")))?
        .into_solution()
        .map_err(|e| Error::LinearProgram(format!("{e:?}")))?;
    let value = solution.objective().max(0.0);
    Ok(LhvVerdict { feasible: value <= LHV_TOL, slack: value, vertices })
}
