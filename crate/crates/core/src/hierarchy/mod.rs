//! Moment-matrix relaxation of commuting-model membership.
//!
//! For words `w, w'` of length at most `L` in the unitaries
//! `u_x = Σ_a ω^a P_{a|x}` (`ω = e^{2πi/k}`), the moment matrix has blocks
//!
//! ```text
//! (Γ_{w,w'})_{ij} = φ(w†w' ⊗ E_ij)
//! ```
//!
//! so `Γ_{e,e} = [σ(E_ij)] = σᵀ` and `Γ_{e,u_x^j} = Σ_a ω^{aj} σ_{a|x}ᵀ`.
//! Blocks depend only on the reduced word `g = w⁻¹w'`; `g` and `g⁻¹` give
//! adjoint blocks and share one variable, stored at the smaller of the two
//! in word order.

mod certificate;
mod dykstra;
mod sdpa;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

pub use certificate::{certificate_from_realization, moment_matrix_from_realization};
pub use dykstra::{dykstra_feasibility, FeasibilityResult, FeasibilityStatus, DEFAULT_MAX_ITERS, DEFAULT_TOL};
pub use sdpa::{export_sdpa, parse_sdpa, sdpa_parameters, write_sdpa, SdpaEntry, SdpaProblem};

use crate::assemblage::{invalid, validate, Assemblage, Scenario, Tolerances};
use crate::error::{Error, Result};
use crate::freeword::{enumerate, FreeWord};
use crate::numkernel::{psd_violation, ComplexMatrix};

/// What a pinned value encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinKind {
    /// `Γ_{e,e} = σᵀ` with `σ = Σ_a σ_{a|0}`.
    ReducedState,
    /// `Γ_{e,e} = Σ_a σ_{a|x}ᵀ` for `x ≥ 1`.
    NoSignaling { setting: usize },
    /// `Γ_{e,u_x^j} = Σ_a ω^{aj} σ_{a|x}ᵀ`.
    Outcome { setting: usize, power: usize },
}

#[derive(Clone, Debug)]
pub struct Pin {
    pub kind: PinKind,
    pub value: ComplexMatrix,
}

/// One block variable: the canonical word of `{g, g⁻¹}` and its occurrences.
#[derive(Clone, Debug)]
pub struct WordClass {
    pub word: FreeWord,
    pub self_inverse: bool,
    pub pins: Vec<Pin>,
    /// `(p, q, adjoint)`: block `(p, q)` equals the variable, or its adjoint.
    pub occurrences: Vec<(usize, usize, bool)>,
}

impl WordClass {
    pub fn is_pinned(&self) -> bool {
        !self.pins.is_empty()
    }

    /// Mean of the pinned values.
    pub fn pin_mean(&self) -> Option<ComplexMatrix> {
        let first = self.pins.first()?;
        let mut total = ComplexMatrix::zeros(first.value.rows(), first.value.cols());
        for p in &self.pins {
            total += &p.value;
        }
        Some(total.scale(1.0 / self.pins.len() as f64))
    }
}

/// An affine identity on `Γ`.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// Block `block` equals block `representative` (adjointed when `adjoint`).
    Merge { block: (usize, usize), representative: (usize, usize), adjoint: bool },
    /// Every occurrence of class `class` equals `value`.
    Pin { class: usize, kind: PinKind, value: ComplexMatrix },
}

#[derive(Clone, Debug)]
pub struct MomentProblem {
    scenario: Scenario,
    level: usize,
    words: Vec<FreeWord>,
    classes: Vec<WordClass>,
    /// `(class, adjoint)` for block `(p, q)` at `p·W + q`.
    blocks: Vec<(usize, bool)>,
    target: Assemblage,
}

impl MomentProblem {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn words(&self) -> &[FreeWord] {
        &self.words
    }

    pub fn block_dim(&self) -> usize {
        self.scenario.dim
    }

    /// Side length `W·n` of `Γ`.
    pub fn matrix_dim(&self) -> usize {
        self.words.len() * self.scenario.dim
    }

    pub fn classes(&self) -> &[WordClass] {
        &self.classes
    }

    pub fn target(&self) -> &Assemblage {
        &self.target
    }

    /// `(class index, adjoint)` of block `(p, q)`.
    pub fn block_class(&self, p: usize, q: usize) -> (usize, bool) {
        self.blocks[p * self.words.len() + q]
    }

    /// Number of free (unpinned) block variables.
    pub fn free_class_count(&self) -> usize {
        self.classes.iter().filter(|c| !c.is_pinned()).count()
    }

    /// Merge identities (one per non-representative block) followed by the pins.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        for c in &self.classes {
            let (p0, q0, adj0) = c.occurrences[0];
            for &(p, q, adj) in &c.occurrences[1..] {
                out.push(Constraint::Merge { block: (p, q), representative: (p0, q0), adjoint: adj != adj0 });
            }
        }
        for (i, c) in self.classes.iter().enumerate() {
            for pin in &c.pins {
                out.push(Constraint::Pin { class: i, kind: pin.kind, value: pin.value.clone() });
            }
        }
        out
    }

    /// Worst violation of the affine constraints by `gamma`: block-merge
    /// mismatches, pin mismatches, and hermiticity, all in Frobenius norm.
    pub fn constraint_violation(&self, gamma: &ComplexMatrix) -> Result<f64> {
        let nd = self.matrix_dim();
        if gamma.rows() != nd || gamma.cols() != nd {
            return Err(Error::DimensionMismatch(format!("moment matrix must be {nd}x{nd}")));
        }
        let n = self.block_dim();
        let mut worst = gamma.hermiticity_defect();
        for c in &self.classes {
            let oriented = |&(p, q, adj): &(usize, usize, bool)| {
                let b = gamma.block(p * n, q * n, n, n);
                if adj {
                    b.adjoint()
                } else {
                    b
                }
            };
            let reference = oriented(&c.occurrences[0]);
            for occ in &c.occurrences[1..] {
                worst = worst.max(oriented(occ).distance(&reference));
            }
            for pin in &c.pins {
                worst = worst.max(reference.distance(&pin.value));
            }
        }
        Ok(worst)
    }

    /// `max(constraint violation, PSD violation)`.
    pub fn certificate_violation(&self, gamma: &ComplexMatrix) -> Result<f64> {
        Ok(self.constraint_violation(gamma)?.max(psd_violation(gamma)?))
    }

    /// Worst pairwise disagreement among pins on the same class.
    pub fn pin_inconsistency(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.classes {
            for (i, a) in c.pins.iter().enumerate() {
                for b in &c.pins[i + 1..] {
                    worst = worst.max(a.value.distance(&b.value));
                }
            }
        }
        worst
    }
}

/// Builds the level-`L` moment problem of a valid assemblage.
pub fn build_moment_problem(assemblage: &Assemblage, level: usize) -> Result<MomentProblem> {
    let report = validate(assemblage, &Tolerances::default())?;
    if !report.passes() {
        return Err(invalid(&report));
    }
    build_moment_problem_unchecked(assemblage, level)
}

/// Same as [`build_moment_problem`] without validating the target, so that
/// inconsistent (e.g. signaling) data can be posed and shown infeasible.
pub fn build_moment_problem_unchecked(assemblage: &Assemblage, level: usize) -> Result<MomentProblem> {
    if level == 0 {
        return Err(Error::InvalidLevel);
    }
    let s = assemblage.scenario();
    let words = enumerate(s.settings, s.outcomes, level);
    let w = words.len();

    let mut index: BTreeMap<FreeWord, usize> = BTreeMap::new();
    let mut classes: Vec<WordClass> = Vec::new();
    let mut blocks = Vec::with_capacity(w * w);
    for p in 0..w {
        for q in 0..w {
            let g = words[p].between(&words[q])?;
            let inv = g.inverse();
            let (canonical, adjoint) = if inv < g { (inv, true) } else { (g, false) };
            let next = classes.len();
            let c = *index.entry(canonical.clone()).or_insert(next);
            if c == next {
                let self_inverse = canonical == canonical.inverse();
                classes.push(WordClass { word: canonical, self_inverse, pins: Vec::new(), occurrences: Vec::new() });
            }
            classes[c].occurrences.push((p, q, adjoint));
            blocks.push((c, adjoint));
        }
    }

    let identity = FreeWord::identity(s.settings, s.outcomes);
    let e = index[&identity];
    for x in 0..s.settings {
        let kind = if x == 0 { PinKind::ReducedState } else { PinKind::NoSignaling { setting: x } };
        classes[e].pins.push(Pin { kind, value: assemblage.setting_sum(x).transpose() });
    }
    for x in 0..s.settings {
        for j in 1..s.outcomes {
            let word = FreeWord::generator(s.settings, s.outcomes, x, j as i64)?;
            if let Some(&c) = index.get(&word) {
                classes[c].pins.push(Pin { kind: PinKind::Outcome { setting: x, power: j }, value: fourier_pin(assemblage, x, j) });
            }
        }
    }

    Ok(MomentProblem { scenario: s, level, words, classes, blocks, target: assemblage.clone() })
}

/// `Σ_a ω^{aj} σ_{a|x}ᵀ`.
fn fourier_pin(assemblage: &Assemblage, x: usize, j: usize) -> ComplexMatrix {
    let s = assemblage.scenario();
    let mut out = ComplexMatrix::zeros(s.dim, s.dim);
    for a in 0..s.outcomes {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * ((a * j) % s.outcomes) as f64 / s.outcomes as f64);
        out += &assemblage.element(a, x).transpose().scale_complex(phase);
    }
    out
}

/// `e^{2πi a/k}`.
pub(crate) fn root_of_unity(a: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (a % k) as f64 / k as f64)
}
