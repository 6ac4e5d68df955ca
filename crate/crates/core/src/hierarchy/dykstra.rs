//! Dykstra alternating projections between the affine constraint set and the PSD cone.
//!
//! Every feasible moment matrix vanishes on `⊕_w ker σᵀ` (a block-diagonal
//! entry `φ(1 ⊗ b†b) = 0` forces the whole row to vanish), so the iteration
//! runs on the compression to `⊕_w supp σᵀ` and lifts the result. Pin mass
//! outside the support cannot be represented there and is added to the
//! residual.
//!
//! On the support the problem is whitened by the block congruence
//! `Γ ↦ (I ⊗ S) Γ (I ⊗ S)`, `S = (U†σᵀU)^{-1/2}`, which fixes `Γ_{e,e} = I`
//! and preserves both the cone and the word-merging pattern. The cone step
//! clips eigenvalues at a margin `ε` so that iterates can enter the interior
//! and terminate exactly; `ε` shrinks tenfold whenever progress stalls and
//! reaches zero (plain Dykstra) after a few stages.

use super::MomentProblem;
use crate::numkernel::{hermitian_eig, psd_violation, ComplexMatrix, DEFAULT_RANK_TOL};

pub const DEFAULT_MAX_ITERS: usize = 20_000;
pub const DEFAULT_TOL: f64 = 1e-7;

const INITIAL_MARGIN: f64 = 3e-2;
const MIN_MARGIN: f64 = 1e-7;
const STALL_WINDOW: usize = 3000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Frobenius distance from the affine iterate to the PSD cone, plus
    /// pin inconsistency and off-support pin mass.
    pub residual: f64,
    pub iterations: usize,
    /// Moment matrix on the full `W·n` space: the affine iterate when it is
    /// PSD, otherwise its projection onto the cone.
    pub witness: ComplexMatrix,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Affine projection data on the whitened, compressed space.
struct Reduced {
    r: usize,
    /// Per class: whitened pin mean (if pinned) and occurrences.
    classes: Vec<(Option<ComplexMatrix>, Vec<(usize, usize, bool)>)>,
}

impl Reduced {
    fn project_affine(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let r = self.r;
        let mut out = ComplexMatrix::zeros(y.rows(), y.cols());
        for (pin, occ) in &self.classes {
            let value = match pin {
                Some(v) => v.clone(),
                None => {
                    let mut total = ComplexMatrix::zeros(r, r);
                    for &(p, q, adj) in occ {
                        let b = y.block(p * r, q * r, r, r);
                        total += &if adj { b.adjoint() } else { b };
                    }
                    total.scale(1.0 / occ.len() as f64)
                }
            };
            let value_adj = value.adjoint();
            for &(p, q, adj) in occ {
                out.set_block(p * r, q * r, if adj { &value_adj } else { &value });
            }
        }
        out
    }
}

/// Decides feasibility of the moment problem; status is feasible iff the final residual is at most `tol`.
pub fn dykstra_feasibility(problem: &MomentProblem, max_iters: usize, tol: f64) -> FeasibilityResult {
    let n = problem.block_dim();
    let w = problem.words().len();
    let reduced_state = problem.classes()[problem.block_class(0, 0).0]
        .pins
        .first()
        .map(|p| p.value.hermitian_part())
        .unwrap_or_else(|| ComplexMatrix::identity(n));

    // isometry onto supp σᵀ and the whitening S on it
    let support: Vec<(f64, Vec<_>)> = match hermitian_eig(&reduced_state) {
        Ok(eig) => eig.support(DEFAULT_RANK_TOL).into_iter().map(|i| (eig.eigenvalues[i], eig.eigenvector(i))).collect(),
        Err(_) => Vec::new(),
    };
    let rank = support.len();
    let basis = if rank == 0 {
        ComplexMatrix::zeros(n, 0)
    } else {
        ComplexMatrix::from_columns(&support.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())
    };
    let inv_root = ComplexMatrix::diagonal(&support.iter().map(|(l, _)| 1.0 / l.sqrt()).collect::<Vec<_>>());
    let root = ComplexMatrix::diagonal(&support.iter().map(|(l, _)| l.sqrt()).collect::<Vec<_>>());
    let projector = &basis * &basis.adjoint();

    let mut off_support: f64 = 0.0;
    let mut classes = Vec::with_capacity(problem.classes().len());
    for c in problem.classes() {
        for pin in &c.pins {
            let compressed = &(&projector * &pin.value) * &projector;
            off_support = off_support.max(pin.value.distance(&compressed));
        }
        let pin = c.pin_mean().map(|v| {
            let compressed = &(&basis.adjoint() * &v) * &basis;
            &(&inv_root * &compressed) * &inv_root
        });
        classes.push((pin, c.occurrences.clone()));
    }
    let defect = problem.pin_inconsistency() + off_support;
    let reduced = Reduced { r: rank, classes };
    // whitened coordinates → full space: (I ⊗ U S^{-1}) · (I ⊗ S^{-1} U†)
    let lift_map = &basis * &root;

    let dim = w * rank;
    let mut y = reduced.project_affine(&ComplexMatrix::zeros(dim, dim));
    let mut x = y.clone();
    let mut p = ComplexMatrix::zeros(dim, dim);
    let mut q = ComplexMatrix::zeros(dim, dim);
    let mut margin = INITIAL_MARGIN;
    let mut best = f64::INFINITY;
    let mut last_gain = 0;
    let mut whitened_residual = if dim == 0 { 0.0 } else { distance_to_cone(&y) };
    let mut iterations = 0;
    while dim > 0 && whitened_residual > 0.0 && iterations < max_iters {
        iterations += 1;
        y = reduced.project_affine(&(&x + &p));
        p = &(&x + &p) - &y;
        let shifted = &y + &q;
        x = match hermitian_eig(&shifted) {
            Ok(eig) => eig.apply(|l| l.max(margin)),
            Err(_) => break,
        };
        q = &shifted - &x;

        whitened_residual = distance_to_cone(&y);
        if whitened_residual < 0.5 * best {
            best = whitened_residual;
            last_gain = iterations;
        } else if margin > 0.0 && iterations - last_gain >= STALL_WINDOW {
            margin = if margin / 10.0 < MIN_MARGIN { 0.0 } else { margin / 10.0 };
            p = ComplexMatrix::zeros(dim, dim);
            q = ComplexMatrix::zeros(dim, dim);
            x = y.clone();
            best = whitened_residual;
            last_gain = iterations;
        }
        if whitened_residual + defect <= tol * 1e-2 {
            break;
        }
    }

    let affine = lift(&y, &lift_map, w, n);
    let distance = psd_distance(&affine);
    let residual = distance + defect;
    let witness = if distance == 0.0 { affine } else { crate::numkernel::project_psd(&affine).unwrap_or(affine) };
    let status = if residual <= tol { FeasibilityStatus::Feasible } else { FeasibilityStatus::Undetermined };
    FeasibilityResult { status, residual, iterations, witness }
}

/// Frobenius distance of a Hermitian matrix to the PSD cone.
fn distance_to_cone(m: &ComplexMatrix) -> f64 {
    match crate::numkernel::hermitian_eigenvalues(m) {
        Ok(ev) => ev.iter().filter(|&&l| l < 0.0).map(|l| l * l).sum::<f64>().sqrt(),
        Err(_) => f64::INFINITY,
    }
}

/// Distance to the cone, ignoring round-off negativity at the `1e-14` relative level.
fn psd_distance(m: &ComplexMatrix) -> f64 {
    let d = distance_to_cone(&m.hermitian_part());
    let scale = m.frobenius_norm().max(1.0);
    if d <= 1e-14 * scale && psd_violation(m).unwrap_or(f64::INFINITY) <= 1e-14 * scale {
        0.0
    } else {
        d
    }
}

/// `(I_W ⊗ L) X (I_W ⊗ L†)`.
fn lift(x: &ComplexMatrix, map: &ComplexMatrix, words: usize, n: usize) -> ComplexMatrix {
    let r = map.cols();
    let mut out = ComplexMatrix::zeros(words * n, words * n);
    if r == 0 {
        return out;
    }
    let adj = map.adjoint();
    for p in 0..words {
        for q in 0..words {
            let b = x.block(p * r, q * r, r, r);
            out.set_block(p * n, q * n, &(&(map * &b) * &adj));
        }
    }
    out.hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::fixtures::singlet_assemblage;
    use crate::assemblage::{random_ns, Assemblage, Scenario};
    use crate::hierarchy::{build_moment_problem, build_moment_problem_unchecked};

    #[test]
    fn classical_scalar_assemblage_is_feasible() {
        let a = random_ns(Scenario::new(3, 3, 1).unwrap(), 2);
        for level in 1..=2 {
            let p = build_moment_problem(&a, level).unwrap();
            let r = dykstra_feasibility(&p, DEFAULT_MAX_ITERS, 1e-10);
            assert!(r.is_feasible(), "level {level}: residual {:e}", r.residual);
        }
    }

    #[test]
    fn singlet_is_feasible_with_a_valid_witness() {
        let p = build_moment_problem(&singlet_assemblage(), 2).unwrap();
        let r = dykstra_feasibility(&p, DEFAULT_MAX_ITERS, DEFAULT_TOL);
        assert!(r.is_feasible(), "residual {:e}", r.residual);
        assert!(p.certificate_violation(&r.witness).unwrap() <= 1e-6);
    }

    #[test]
    fn rank_deficient_targets_are_feasible() {
        for seed in 0..6 {
            let a = crate::assemblage::random_ns_with_rank(Scenario::new(2, 2, 3).unwrap(), 1 + seed as usize % 2, seed).unwrap();
            let p = build_moment_problem(&a, 2).unwrap();
            let r = dykstra_feasibility(&p, DEFAULT_MAX_ITERS, DEFAULT_TOL);
            assert!(r.is_feasible(), "seed {seed}: residual {:e} after {}", r.residual, r.iterations);
        }
    }

    #[test]
    fn signaling_targets_plateau() {
        let a = random_ns(Scenario::new(2, 2, 2).unwrap(), 4);
        let broken = a.with_element(1, 1, a.element(1, 1).scale(1.2)).unwrap();
        let p = build_moment_problem_unchecked(&broken, 1).unwrap();
        let r = dykstra_feasibility(&p, 2000, DEFAULT_TOL);
        assert_eq!(r.status, FeasibilityStatus::Undetermined);
        assert!(r.residual >= p.pin_inconsistency());
        assert!(r.residual > 1e-3);
    }

    #[test]
    fn off_support_pins_count_against_feasibility() {
        // σ_{0|1} leaks outside supp σ of the first setting
        let s = Scenario::new(2, 2, 2).unwrap();
        let half = ComplexMatrix::diagonal(&[0.5, 0.0]);
        let a = Assemblage::new(
            s,
            vec![vec![half.clone(), half.clone()], vec![ComplexMatrix::diagonal(&[0.5, 0.5]), ComplexMatrix::diagonal(&[0.5, -0.5])]],
        )
        .unwrap();
        let p = build_moment_problem_unchecked(&a, 1).unwrap();
        let r = dykstra_feasibility(&p, 100, DEFAULT_TOL);
        assert!(r.residual >= 0.5);
    }
}
