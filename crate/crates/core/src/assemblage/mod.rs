//! Assemblages on the full matrix algebra `M_n(ℂ)`.
//!
//! An assemblage is a family `σ_{a|x}` of positive `n × n` matrices, one per
//! outcome `a` and setting `x`. It is no-signaling when `Σ_a σ_{a|x}` does not
//! depend on `x`; that common sum is the reduced state `σ`. Indices are
//! 0-based in the API and 1-based in the JSON format.

mod behaviour;
mod povm;

pub use behaviour::Behaviour;
pub use povm::{povm_defect, Povm, POVM_TOL};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkernel::random::{ginibre, random_density, seeded, uniform_index, Rng};
use crate::numkernel::{kron, partial_trace_first, psd_sqrt_pinv, psd_violation, ComplexMatrix, DEFAULT_RANK_TOL};

/// Number of settings `m`, outcomes `k` and trusted dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub settings: usize,
    pub outcomes: usize,
    pub dim: usize,
}

impl Scenario {
    /// `k = 1` is accepted as the degenerate single-outcome scenario.
    pub fn new(settings: usize, outcomes: usize, dim: usize) -> Result<Self> {
        if settings == 0 || outcomes == 0 || dim == 0 {
            return Err(Error::InvalidScenario(format!(
                "m={settings}, k={outcomes}, n={dim}: all must be positive"
            )));
        }
        Ok(Self { settings, outcomes, dim })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assemblage {
    scenario: Scenario,
    /// Row-major over `(x, a)`: element `x·k + a`.
    elements: Vec<ComplexMatrix>,
}

impl Assemblage {
    /// `elements[x][a] = σ_{a|x}`. Only shapes and finiteness are checked; use
    /// [`validate`] for the positivity and no-signaling conditions.
    pub fn new(scenario: Scenario, elements: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if elements.len() != scenario.settings {
            return Err(Error::DimensionMismatch(format!(
                "{} settings supplied, scenario has {}",
                elements.len(),
                scenario.settings
            )));
        }
        let mut flat = Vec::with_capacity(scenario.settings * scenario.outcomes);
        for (x, row) in elements.into_iter().enumerate() {
            if row.len() != scenario.outcomes {
                return Err(Error::DimensionMismatch(format!(
                    "setting {x} has {} outcomes, scenario has {}",
                    row.len(),
                    scenario.outcomes
                )));
            }
            for (a, m) in row.into_iter().enumerate() {
                if m.rows() != scenario.dim || m.cols() != scenario.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "element ({a}, {x}) is {}x{}, expected {n}x{n}",
                        m.rows(),
                        m.cols(),
                        n = scenario.dim
                    )));
                }
                if !m.is_finite() {
                    return Err(Error::NonFinite);
                }
                flat.push(m);
            }
        }
        Ok(Self { scenario, elements: flat })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Result<Self> {
        let elements = (0..scenario.settings).map(|x| (0..scenario.outcomes).map(|a| f(a, x)).collect()).collect();
        Self::new(scenario, elements)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `σ_{a|x}`.
    pub fn element(&self, a: usize, x: usize) -> &ComplexMatrix {
        &self.elements[x * self.scenario.outcomes + a]
    }

    /// All `σ_{·|x}` for one setting.
    pub fn setting(&self, x: usize) -> &[ComplexMatrix] {
        let k = self.scenario.outcomes;
        &self.elements[x * k..(x + 1) * k]
    }

    /// `Σ_a σ_{a|x}`.
    pub fn setting_sum(&self, x: usize) -> ComplexMatrix {
        let n = self.scenario.dim;
        self.setting(x).iter().fold(ComplexMatrix::zeros(n, n), |acc, m| &acc + m)
    }

    /// Replaces one element, keeping the shape checks.
    pub fn with_element(&self, a: usize, x: usize, m: ComplexMatrix) -> Result<Self> {
        let n = self.scenario.dim;
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch("replacement element has wrong shape".into()));
        }
        let mut out = self.clone();
        out.elements[x * self.scenario.outcomes + a] = m;
        Ok(out)
    }

    /// `t · self + (1 − t) · other`.
    pub fn convex_combination(&self, other: &Self, t: f64) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::ScenarioMismatch("convex combination of different scenarios".into()));
        }
        let elements = self.elements.iter().zip(&other.elements).map(|(p, q)| &p.scale(t) + &q.scale(1.0 - t)).collect();
        Ok(Self { scenario: self.scenario, elements })
    }

    /// `Tr σ_{a|x}`: the untrusted party's outcome distribution.
    pub fn outcome_probability(&self, a: usize, x: usize) -> f64 {
        self.element(a, x).trace().re
    }

    /// Largest elementwise Frobenius distance to another assemblage.
    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        if self.scenario != other.scenario {
            return Err(Error::ScenarioMismatch("distance between different scenarios".into()));
        }
        Ok(self.elements.iter().zip(&other.elements).map(|(p, q)| p.distance(q)).fold(0.0, f64::max))
    }
}

/// Per-check tolerances for [`validate`]; all default to `1e-9`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub psd: f64,
    pub no_signaling: f64,
    pub trace: f64,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { psd: tol, no_signaling: tol, trace: tol }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::uniform(1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    /// Worst of hermiticity defect and negative eigenvalue over all elements.
    pub psd_violation: f64,
    /// `max_x ‖Σ_a σ_{a|x} − Σ_a σ_{a|1}‖_F`.
    pub ns_violation: f64,
    /// `|Tr Σ_a σ_{a|1} − 1|`.
    pub trace_defect: f64,
    pub tolerances: Tolerances,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.psd_violation <= self.tolerances.psd
            && self.ns_violation <= self.tolerances.no_signaling
            && self.trace_defect <= self.tolerances.trace
    }

    pub fn worst(&self) -> f64 {
        self.psd_violation.max(self.ns_violation).max(self.trace_defect)
    }
}

/// Measures positivity, no-signaling and normalization of an assemblage.
pub fn validate(assemblage: &Assemblage, tolerances: &Tolerances) -> Result<ValidationReport> {
    let mut psd: f64 = 0.0;
    for m in &assemblage.elements {
        psd = psd.max(psd_violation(m)?);
    }
    let reference = assemblage.setting_sum(0);
    let ns = (1..assemblage.scenario.settings)
        .map(|x| assemblage.setting_sum(x).distance(&reference))
        .fold(0.0, f64::max);
    let trace_defect = (reference.trace() - Complex64::new(1.0, 0.0)).norm();
    Ok(ValidationReport { psd_violation: psd, ns_violation: ns, trace_defect, tolerances: *tolerances })
}

/// Reduced state `σ = Σ_a σ_{a|1}` of a valid assemblage.
pub fn reduced_state(assemblage: &Assemblage) -> Result<ComplexMatrix> {
    let report = validate(assemblage, &Tolerances::default())?;
    if !report.passes() {
        return Err(invalid(&report));
    }
    Ok(assemblage.setting_sum(0).hermitian_part())
}

pub(crate) fn invalid(report: &ValidationReport) -> Error {
    Error::InvalidAssemblage(format!(
        "psd violation {:e}, no-signaling violation {:e}, trace defect {:e}",
        report.psd_violation, report.ns_violation, report.trace_defect
    ))
}

/// Checks that `rho` is a density matrix within `1e-9`.
pub(crate) fn check_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState("state is not square".into()));
    }
    let neg = psd_violation(rho).map_err(|e| Error::InvalidState(e.to_string()))?;
    let tr = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    if neg > 1e-9 || tr > 1e-9 {
        return Err(Error::InvalidState(format!("positivity defect {neg:e}, trace defect {tr:e}")));
    }
    Ok(())
}

/// `σ_{a|x} = Tr_A((M_{a|x} ⊗ I_n) ρ_AB)`.
pub fn from_realization(rho_ab: &ComplexMatrix, povms: &[Povm], n: usize) -> Result<Assemblage> {
    let Some(first) = povms.first() else {
        return Err(Error::InvalidPovm("no measurements supplied".into()));
    };
    let dim_a = first.dim();
    let outcomes = first.outcomes();
    if rho_ab.rows() != dim_a * n {
        return Err(Error::InvalidState(format!(
            "state of dimension {} does not match {dim_a} x {n}",
            rho_ab.rows()
        )));
    }
    check_density(rho_ab)?;
    for (x, p) in povms.iter().enumerate() {
        if p.dim() != dim_a || p.outcomes() != outcomes {
            return Err(Error::InvalidPovm(format!(
                "measurement {x} has {} outcomes on dimension {}, expected {outcomes} on {dim_a}",
                p.outcomes(),
                p.dim()
            )));
        }
    }
    let id = ComplexMatrix::identity(n);
    let scenario = Scenario::new(povms.len(), outcomes, n)?;
    Assemblage::from_fn(scenario, |a, x| {
        let op = kron(povms[x].effect(a), &id).expect("finite POVM effects");
        partial_trace_first(&(&op * rho_ab), dim_a, n).expect("shapes checked").hermitian_part()
    })
}

/// Random no-signaling assemblage with reduced-state rank drawn uniformly from `1..=n`.
pub fn random_ns(scenario: Scenario, seed: u64) -> Assemblage {
    let mut rng = seeded(seed);
    let rank = 1 + uniform_index(scenario.dim, &mut rng);
    random_ns_from(scenario, rank, &mut rng)
}

/// Random no-signaling assemblage whose reduced state has the given rank.
pub fn random_ns_with_rank(scenario: Scenario, rank: usize, seed: u64) -> Result<Assemblage> {
    if rank == 0 || rank > scenario.dim {
        return Err(Error::InvalidScenario(format!("rank {rank} outside 1..={}", scenario.dim)));
    }
    Ok(random_ns_from(scenario, rank, &mut seeded(seed)))
}

/// `σ_{a|x} = σ^{1/2} E_{a|x} σ^{1/2}` where, for each `x`, `E_{·|x}` is a
/// random POVM `S^{-1/2} X_a S^{-1/2}` built from Wishart matrices `X_a`
/// with `S = Σ_a X_a`.
fn random_ns_from(scenario: Scenario, rank: usize, rng: &mut Rng) -> Assemblage {
    let n = scenario.dim;
    let sigma = random_density(n, rank, rng);
    let root = psd_sqrt_pinv(&sigma, DEFAULT_RANK_TOL).expect("density matrix is PSD").sqrt;
    let mut elements = Vec::with_capacity(scenario.settings);
    for _ in 0..scenario.settings {
        let effects = random_povm_effects(n, scenario.outcomes, rng);
        elements.push(effects.iter().map(|e| (&(&root * e) * &root).hermitian_part()).collect());
    }
    Assemblage::new(scenario, elements).expect("shapes are consistent by construction")
}

/// Effects of a random full-rank POVM on `ℂ^d`.
pub(crate) fn random_povm_effects(d: usize, outcomes: usize, rng: &mut Rng) -> Vec<ComplexMatrix> {
    let wisharts: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(d, d, rng);
            (&g * &g.adjoint()).hermitian_part()
        })
        .collect();
    let total = wisharts.iter().fold(ComplexMatrix::zeros(d, d), |acc, w| &acc + w);
    let inv_root = psd_sqrt_pinv(&total, DEFAULT_RANK_TOL).expect("Wishart sum is PSD").pinv_sqrt;
    wisharts.iter().map(|w| (&(&inv_root * w) * &inv_root).hermitian_part()).collect()
}

/// Random POVM on `ℂ^d`.
pub fn random_povm(d: usize, outcomes: usize, rng: &mut Rng) -> Povm {
    Povm::new(random_povm_effects(d, outcomes, rng)).expect("random POVM is valid by construction")
}

/// `p(ab|xy) = Tr(N_{b|y} σ_{a|x})`.
pub fn behaviour_from(assemblage: &Assemblage, trusted: &[Povm]) -> Result<Behaviour> {
    let s = assemblage.scenario;
    let outcomes_b = check_trusted(s, trusted)?;
    Ok(Behaviour::from_fn(s.outcomes, outcomes_b, s.settings, trusted.len(), |a, b, x, y| {
        assemblage.element(a, x).inner(trusted[y].effect(b)).re
    }))
}

/// Checks trusted POVMs against the scenario; returns their common outcome count.
pub(crate) fn check_trusted(s: Scenario, trusted: &[Povm]) -> Result<usize> {
    let Some(first) = trusted.first() else {
        return Err(Error::DimensionMismatch("no trusted measurements supplied".into()));
    };
    for p in trusted {
        if p.dim() != s.dim {
            return Err(Error::DimensionMismatch(format!(
                "trusted POVM on dimension {}, assemblage on {}",
                p.dim(),
                s.dim
            )));
        }
        if p.outcomes() != first.outcomes() {
            return Err(Error::DimensionMismatch("trusted POVMs with different outcome counts".into()));
        }
    }
    Ok(first.outcomes())
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::numkernel::random::{random_density, seeded};
    use approx::assert_abs_diff_eq;

    #[test]
    fn singlet_assemblage_matches_hand_computation() {
        // Singlet anticorrelation: outcome ± for Pauli P leaves B in the ∓ eigenprojector of P, weight 1/2.
        let a = singlet_assemblage();
        let id = ComplexMatrix::identity(2);
        for (x, p) in [pauli_x(), pauli_z()].iter().enumerate() {
            let plus = (&id + p).scale(0.5);
            let minus = (&id - p).scale(0.5);
            assert!(a.element(0, x).distance(&minus.scale(0.5)) < 1e-15);
            assert!(a.element(1, x).distance(&plus.scale(0.5)) < 1e-15);
        }
        let report = validate(&a, &Tolerances::default()).unwrap();
        assert!(report.worst() <= 1e-12, "{report:?}");
        assert!(reduced_state(&a).unwrap().distance(&id.scale(0.5)) < 1e-15);
    }

    #[test]
    fn scaled_element_breaks_no_signaling() {
        let a = singlet_assemblage();
        let bumped = a.element(0, 0).scale(1.1);
        let expected = 0.1 * a.element(0, 0).frobenius_norm();
        let broken = a.with_element(0, 0, bumped).unwrap();
        let report = validate(&broken, &Tolerances::default()).unwrap();
        assert!(!report.passes());
        assert_abs_diff_eq!(report.ns_violation, expected, epsilon = 1e-12);
        assert!(matches!(reduced_state(&broken), Err(Error::InvalidAssemblage(_))));
    }

    #[test]
    fn single_outcome_assemblage_passes() {
        let sigma = random_density(3, 2, &mut seeded(4));
        let a = Assemblage::from_fn(Scenario::new(3, 1, 3).unwrap(), |_, _| sigma.clone()).unwrap();
        assert!(validate(&a, &Tolerances::default()).unwrap().passes());
    }

    #[test]
    fn product_state_factorizes() {
        let mut rng = seeded(8);
        let ra = random_density(3, 3, &mut rng);
        let rb = random_density(2, 2, &mut rng);
        let povms: Vec<Povm> = (0..2).map(|_| random_povm(3, 3, &mut rng)).collect();
        let a = from_realization(&kron(&ra, &rb).unwrap(), &povms, 2).unwrap();
        for x in 0..2 {
            for b in 0..3 {
                let p = povms[x].effect(b).inner(&ra).re;
                assert!(a.element(b, x).distance(&rb.scale(p)) < 1e-14);
            }
        }
        assert!(reduced_state(&a).unwrap().distance(&rb) < 1e-14);
    }

    #[test]
    fn trivial_povm_gives_uniform_split() {
        let mut rng = seeded(9);
        let rho = random_density(6, 6, &mut rng);
        let povms = vec![Povm::trivial(2, 3); 2];
        let a = from_realization(&rho, &povms, 3).unwrap();
        let sigma = partial_trace_first(&rho, 2, 3).unwrap();
        for x in 0..2 {
            for k in 0..3 {
                assert!(a.element(k, x).distance(&sigma.scale(1.0 / 3.0)) < 1e-14);
            }
        }
    }

    #[test]
    fn from_realization_rejects_bad_inputs() {
        let bad_state = ComplexMatrix::identity(4);
        assert!(matches!(from_realization(&bad_state, &pauli_povms(), 2), Err(Error::InvalidState(_))));
        let wrong_dim = vec![Povm::trivial(3, 2)];
        assert!(matches!(from_realization(&singlet(), &wrong_dim, 2), Err(Error::InvalidState(_))));
        let mixed = vec![Povm::trivial(2, 2), Povm::trivial(2, 3)];
        assert!(matches!(from_realization(&singlet(), &mixed, 2), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn random_ns_is_valid_and_deterministic() {
        for seed in 0..40 {
            let s = Scenario::new(1 + seed as usize % 4, 2 + seed as usize % 3, 1 + seed as usize % 4).unwrap();
            let a = random_ns(s, seed);
            let report = validate(&a, &Tolerances::default()).unwrap();
            assert!(report.passes(), "seed {seed}: {report:?}");
            assert_eq!(a, random_ns(s, seed));
        }
    }

    #[test]
    fn random_ns_scalar_case_is_classical() {
        let a = random_ns(Scenario::new(3, 4, 1).unwrap(), 5);
        for x in 0..3 {
            let total: f64 = (0..4).map(|k| a.element(k, x)[(0, 0)].re).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            for k in 0..4 {
                assert!(a.element(k, x)[(0, 0)].re >= 0.0);
                assert_eq!(a.element(k, x)[(0, 0)].im, 0.0);
            }
        }
    }

    #[test]
    fn random_ns_rank_round_trips() {
        let s = Scenario::new(2, 3, 4).unwrap();
        for rank in 1..=4 {
            let a = random_ns_with_rank(s, rank, 100 + rank as u64).unwrap();
            let sigma = reduced_state(&a).unwrap();
            assert_eq!(psd_sqrt_pinv(&sigma, DEFAULT_RANK_TOL).unwrap().rank, rank);
        }
        // the unconstrained generator visits both full and deficient ranks
        let ranks: std::collections::BTreeSet<usize> = (0..30)
            .map(|seed| psd_sqrt_pinv(&reduced_state(&random_ns(s, seed)).unwrap(), DEFAULT_RANK_TOL).unwrap().rank)
            .collect();
        assert_eq!(ranks.into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn behaviour_trivial_trusted_measurement() {
        let a = random_ns(Scenario::new(3, 3, 2).unwrap(), 12);
        let p = behaviour_from(&a, &[Povm::trivial(2, 1)]).unwrap();
        for x in 0..3 {
            for k in 0..3 {
                assert_abs_diff_eq!(p.get(k, 0, x, 0), a.outcome_probability(k, x), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn singlet_behaviour_is_anticorrelated() {
        let p = behaviour_from(&singlet_assemblage(), &pauli_povms()).unwrap();
        for x in 0..2 {
            assert!(p.get(0, 0, x, x).abs() < 1e-15 && p.get(1, 1, x, x).abs() < 1e-15);
            assert_abs_diff_eq!(p.get(0, 1, x, x), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn behaviour_marginals_are_no_signaling() {
        let mut rng = seeded(77);
        for seed in 0..20 {
            let a = random_ns(Scenario::new(3, 2, 3).unwrap(), seed);
            let trusted: Vec<Povm> = (0..4).map(|_| random_povm(3, 3, &mut rng)).collect();
            let p = behaviour_from(&a, &trusted).unwrap();
            assert!(p.signaling_violation() <= 1e-10);
            assert!(p.normalization_defect() <= 1e-10);
            assert!(p.entries_in_range());
            for x in 0..3 {
                for k in 0..2 {
                    let m: f64 = (0..3).map(|b| p.get(k, b, x, 2)).sum();
                    assert_abs_diff_eq!(m, a.outcome_probability(k, x), epsilon = 1e-10);
                }
            }
        }
        assert!(matches!(
            behaviour_from(&random_ns(Scenario::new(2, 2, 2).unwrap(), 0), &[Povm::trivial(3, 2)]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    mod props {
        use super::super::*;
        use crate::numkernel::random::{random_density, random_unit_vector, seeded};
        use proptest::prelude::*;

        fn random_realization(seed: u64) -> (ComplexMatrix, Vec<Povm>, usize) {
            let mut rng = seeded(seed);
            let dim_a = 1 + uniform_index(3, &mut rng);
            let n = 1 + uniform_index(3, &mut rng);
            let settings = 1 + uniform_index(3, &mut rng);
            let outcomes = 2 + uniform_index(3, &mut rng);
            let rho = if seed % 2 == 0 {
                let v = random_unit_vector(dim_a * n, &mut rng);
                ComplexMatrix::outer(&v, &v)
            } else {
                let rank = 1 + uniform_index(dim_a * n, &mut rng);
                random_density(dim_a * n, rank, &mut rng)
            };
            let povms = (0..settings).map(|_| random_povm(dim_a, outcomes, &mut rng)).collect();
            (rho, povms, n)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(500))]

            #[test]
            fn quantum_assemblages_are_no_signaling(seed in any::<u64>()) {
                let (rho, povms, n) = random_realization(seed);
                let a = from_realization(&rho, &povms, n).unwrap();
                prop_assert!(validate(&a, &Tolerances::default()).unwrap().passes());
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn convex_combinations_stay_valid(seed in any::<u64>(), t in 0.0f64..=1.0) {
                let mut rng = seeded(seed);
                let s = Scenario::new(1 + uniform_index(3, &mut rng), 2 + uniform_index(3, &mut rng), 1 + uniform_index(4, &mut rng)).unwrap();
                let p = random_ns(s, seed);
                let q = random_ns(s, seed.wrapping_add(1));
                let mix = p.convex_combination(&q, t).unwrap();
                prop_assert!(validate(&mix, &Tolerances::default()).unwrap().passes());
            }
        }
    }
}
