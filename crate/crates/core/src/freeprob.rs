//! Random reflections as a finite-dimensional proxy for free self-adjoint unitaries.
//!
//! With the normalised trace `τ = Tr/d`, the assemblage
//! `σ_{a|x} = (I ± u_x)/(2d)` satisfies `Σ_x Tr((σ_{0|x} − σ_{1|x}) u_x) =
//! Σ_x τ(u_x²) = m` exactly, whereas for free reflections `‖Σ_x u_x‖`
//! concentrates near `2√(m−1)`. Independent Haar conjugates of a balanced
//! reflection are only asymptotically free; the estimates here measure that
//! numerically and certify nothing.

use rayon::prelude::*;

use crate::assemblage::{Assemblage, Scenario};
use crate::error::{Error, Result};
use crate::numkernel::random::{random_reflection, stream};
use crate::numkernel::{hermitian_eigenvalues, ComplexMatrix};

const HERMITIAN_TOL: f64 = 1e-10;
const SQUARE_TOL: f64 = 1e-9;

/// Hermitian unitaries `u_1, …, u_m` on `ℂ^d` with trace zero.
#[derive(Clone, Debug)]
pub struct ReflectionFamily {
    dim: usize,
    unitaries: Vec<ComplexMatrix>,
}

impl ReflectionFamily {
    /// Validates hermiticity, `u² = I` and a vanishing trace.
    pub fn new(unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = unitaries.first() else {
            return Err(Error::InvalidScenario("a reflection family needs at least one unitary".into()));
        };
        let dim = first.rows();
        if dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        let id = ComplexMatrix::identity(dim);
        for (x, u) in unitaries.iter().enumerate() {
            if u.rows() != dim || u.cols() != dim {
                return Err(Error::DimensionMismatch(format!("unitary {x} is not {dim}x{dim}")));
            }
            let defect = u.hermiticity_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::NonHermitian { defect });
            }
            let square = (u * u).distance(&id);
            let trace = u.trace().norm();
            if square > SQUARE_TOL || trace > SQUARE_TOL * dim as f64 {
                return Err(Error::InvalidState(format!(
                    "unitary {x}: ‖u² − I‖ = {square:e}, |Tr u| = {trace:e}"
                )));
            }
        }
        Ok(Self { dim, unitaries })
    }

    /// Diagonal reflections from sign patterns (each with as many `+1` as `−1`).
    pub fn diagonal(signs: &[Vec<bool>]) -> Result<Self> {
        Self::new(signs.iter().map(|s| ComplexMatrix::diagonal(&s.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect::<Vec<_>>())).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    /// `‖Σ_x u_x‖`.
    pub fn sum_norm(&self) -> Result<f64> {
        let mut total = ComplexMatrix::zeros(self.dim, self.dim);
        for u in &self.unitaries {
            total += u;
        }
        let eig = hermitian_eigenvalues(&total.hermitian_part())?;
        Ok(eig.first().map_or(0.0, |l| l.abs()).max(eig.last().map_or(0.0, |l| l.abs())))
    }

    /// `τ(u_x u_y) = Tr(u_x u_y)/d`.
    pub fn normalized_trace_product(&self, x: usize, y: usize) -> f64 {
        self.unitaries[x].adjoint().inner(&self.unitaries[y]).re / self.dim as f64
    }
}

/// `m` independent balanced reflections `V_x diag(+1, …, −1) V_x†`; reflection `x` uses stream `(seed, x)`.
pub fn random_reflections(m: usize, d: usize, seed: u64) -> Result<ReflectionFamily> {
    if d % 2 == 1 || d == 0 {
        return Err(Error::OddDimension(d));
    }
    if m == 0 {
        return Err(Error::InvalidScenario("need at least one reflection".into()));
    }
    let unitaries = (0..m).map(|x| random_reflection(d, &mut stream(seed, x as u64))).collect();
    ReflectionFamily::new(unitaries)
}

/// `σ_{0|x} = (I + u_x)/(2d)`, `σ_{1|x} = (I − u_x)/(2d)`.
pub fn yanyin_assemblage(family: &ReflectionFamily) -> Result<Assemblage> {
    let d = family.dim;
    let id = ComplexMatrix::identity(d);
    let scenario = Scenario::new(family.len(), 2, d)?;
    Assemblage::from_fn(scenario, |a, x| {
        let u = &family.unitaries[x];
        let m = if a == 0 { &id + u } else { &id - u };
        m.scale(0.5 / d as f64)
    })
}

/// `Σ_x Tr((σ_{0|x} − σ_{1|x}) u_x)`.
pub fn yanyin_sum(assemblage: &Assemblage, family: &ReflectionFamily) -> Result<f64> {
    let s = assemblage.scenario();
    if s.outcomes != 2 || s.settings != family.len() || s.dim != family.dim {
        return Err(Error::Mismatch(format!(
            "assemblage {:?} does not match {} reflections on dimension {}",
            s,
            family.len(),
            family.dim
        )));
    }
    Ok((0..s.settings)
        .map(|x| {
            let diff = assemblage.element(0, x) - assemblage.element(1, x);
            diff.adjoint().inner(&family.unitaries[x]).re
        })
        .sum())
}

/// Sample statistics of `‖Σ_x u_x‖` over independent families.
#[derive(Clone, Debug, PartialEq)]
pub struct KestenStats {
    pub m: usize,
    pub d: usize,
    pub norms: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation (`n − 1` denominator; zero for one trial).
    pub std: f64,
    /// `2√(m−1)`.
    pub free_value: f64,
    /// `2√m`.
    pub paper_cap: f64,
}

/// Trial `t` uses the family `random_reflections(m, d, seed + t)`, so results do not depend on thread count.
pub fn kesten_estimate(m: usize, d: usize, trials: usize, seed: u64) -> Result<KestenStats> {
    if trials == 0 {
        return Err(Error::InvalidScenario("need at least one trial".into()));
    }
    let norms: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| random_reflections(m, d, seed.wrapping_add(t as u64))?.sum_norm())
        .collect::<Result<_>>()?;
    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let std = if norms.len() > 1 { (norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(KestenStats {
        m,
        d,
        mean,
        max: norms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: norms.iter().copied().fold(f64::INFINITY, f64::min),
        std,
        norms,
        free_value: 2.0 * ((m as f64) - 1.0).sqrt(),
        paper_cap: 2.0 * (m as f64).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContradictionReport {
    pub m: usize,
    pub d: usize,
    /// `Σ_x σ_x(u_x)`, exactly `m` up to round-off.
    pub yanyin_value: f64,
    /// `‖Σ_x u_x‖` for the sampled family.
    pub norm_estimate: f64,
    pub free_value: f64,
    pub paper_cap: f64,
    /// `m − 2√m`: positive exactly when `m ≥ 5`.
    pub gap: f64,
}

pub fn contradiction_report(m: usize, d: usize, seed: u64) -> Result<ContradictionReport> {
    let family = random_reflections(m, d, seed)?;
    let assemblage = yanyin_assemblage(&family)?;
    let mf = m as f64;
    Ok(ContradictionReport {
        m,
        d,
        yanyin_value: yanyin_sum(&assemblage, &family)?,
        norm_estimate: family.sum_norm()?,
        free_value: 2.0 * (mf - 1.0).sqrt(),
        paper_cap: 2.0 * mf.sqrt(),
        gap: mf - 2.0 * mf.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{validate, Tolerances};
    use proptest::prelude::*;

    #[test]
    fn single_reflection_has_balanced_spectrum() {
        let f = random_reflections(1, 10, 3).unwrap();
        let eig = hermitian_eigenvalues(&f.unitaries()[0]).unwrap();
        assert!(eig[..5].iter().all(|l| (l + 1.0).abs() < 1e-10));
        assert!(eig[5..].iter().all(|l| (l - 1.0).abs() < 1e-10));
        assert!((f.sum_norm().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reproducible_and_rejects_odd_dimensions() {
        let a = random_reflections(3, 8, 42).unwrap();
        let b = random_reflections(3, 8, 42).unwrap();
        assert_eq!(a.unitaries(), b.unitaries());
        assert!(matches!(random_reflections(2, 7, 0), Err(Error::OddDimension(7))));
        assert!(matches!(random_reflections(0, 8, 0), Err(Error::InvalidScenario(_))));
        assert!(matches!(ReflectionFamily::new(vec![ComplexMatrix::identity(2)]), Err(Error::InvalidState(_))));
    }

    #[test]
    fn diagonal_family_gives_diagonal_assemblage() {
        let f = ReflectionFamily::diagonal(&[vec![true, false, true, false], vec![false, false, true, true]]).unwrap();
        let a = yanyin_assemblage(&f).unwrap();
        for x in 0..2 {
            for k in 0..2 {
                let e = a.element(k, x);
                for i in 0..4 {
                    for j in 0..4 {
                        let v = e[(i, j)];
                        if i != j {
                            assert_eq!(v.norm(), 0.0);
                        } else {
                            assert!(v.re == 0.25 || v.re == 0.0);
                        }
                    }
                }
            }
        }
        assert_eq!(yanyin_sum(&a, &f).unwrap(), 2.0);
    }

    #[test]
    fn yanyin_assemblage_is_valid_with_maximally_mixed_marginal() {
        let f = random_reflections(4, 12, 9).unwrap();
        let a = yanyin_assemblage(&f).unwrap();
        assert!(validate(&a, &Tolerances::default()).unwrap().worst() <= 1e-12);
        let mixed = ComplexMatrix::identity(12).scale(1.0 / 12.0);
        for x in 0..4 {
            assert!(a.setting_sum(x).distance(&mixed) <= 1e-15);
        }
    }

    #[test]
    fn yanyin_sum_rejects_mismatch() {
        let f = random_reflections(2, 4, 1).unwrap();
        let g = random_reflections(3, 4, 1).unwrap();
        assert!(matches!(yanyin_sum(&yanyin_assemblage(&g).unwrap(), &f), Err(Error::Mismatch(_))));
    }

    #[test]
    fn sums_for_reference_settings() {
        for m in [1, 5, 7] {
            let f = random_reflections(m, 16, 100 + m as u64).unwrap();
            let v = yanyin_sum(&yanyin_assemblage(&f).unwrap(), &f).unwrap();
            assert!((v - m as f64).abs() <= 1e-10);
        }
    }

    #[test]
    fn report_gaps() {
        let r5 = contradiction_report(5, 8, 1).unwrap();
        assert!((r5.gap - (5.0 - 2.0 * 5f64.sqrt())).abs() < 1e-15);
        assert!((r5.gap - 0.527_864_045).abs() < 1e-9);
        assert_eq!(contradiction_report(4, 8, 1).unwrap().gap, 0.0);
        assert_eq!(contradiction_report(9, 8, 1).unwrap().gap, 3.0);
        assert!(contradiction_report(3, 8, 1).unwrap().gap < 0.0);
    }

    #[test]
    fn kesten_single_reflection_is_exactly_one() {
        let s = kesten_estimate(1, 50, 3, 5).unwrap();
        assert!(s.norms.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(s.std < 1e-10);
    }

    #[test]
    fn two_reflections_reach_the_boundary() {
        let s = kesten_estimate(2, 200, 3, 8).unwrap();
        assert!((s.mean - 2.0).abs() < 0.02, "{s:?}");
    }

    #[test]
    fn approximate_freeness_of_pairs() {
        let f = random_reflections(3, 500, 17).unwrap();
        for (x, y) in [(0, 1), (0, 2), (1, 2)] {
            assert!(f.normalized_trace_product(x, y).abs() <= 0.1);
        }
        assert!((f.normalized_trace_product(0, 0) - 1.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn yanyin_identity_is_exact(m in 1usize..8, half in 1usize..8, seed in 0u64..10_000) {
            let f = random_reflections(m, 2 * half, seed).unwrap();
            let v = yanyin_sum(&yanyin_assemblage(&f).unwrap(), &f).unwrap();
            prop_assert!((v - m as f64).abs() <= 1e-10);
        }
    }
}
