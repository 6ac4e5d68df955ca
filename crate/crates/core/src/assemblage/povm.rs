use crate::error::{Error, Result};
use crate::numkernel::{psd_violation, ComplexMatrix};

pub const POVM_TOL: f64 = 1e-9;

/// Positive operator-valued measure on a `d`-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Validates positivity and completeness at `1e-9`.
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(effects, POVM_TOL)
    }

    pub fn with_tolerance(effects: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let defect = povm_defect(&effects)?;
        if defect > tol {
            return Err(Error::InvalidPovm(format!("positivity/completeness defect {defect:e} exceeds {tol:e}")));
        }
        Ok(Self { effects: effects.into_iter().map(|e| e.hermitian_part()).collect() })
    }

    /// Two-outcome POVM `{(I + A)/2, (I − A)/2}` of a reflection `A`.
    pub fn from_reflection(a: &ComplexMatrix) -> Result<Self> {
        let id = ComplexMatrix::identity(a.rows());
        Self::new(vec![(&id + a).scale(0.5), (&id - a).scale(0.5)])
    }

    /// `k` effects all equal to `I/k`.
    pub fn trivial(dim: usize, outcomes: usize) -> Self {
        let e = ComplexMatrix::identity(dim).scale(1.0 / outcomes as f64);
        Self { effects: vec![e; outcomes] }
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, outcome: usize) -> &ComplexMatrix {
        &self.effects[outcome]
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects.first().map_or(0, ComplexMatrix::rows)
    }
}

/// `max(worst PSD violation, ‖Σ effects − I‖_F)`.
pub fn povm_defect(effects: &[ComplexMatrix]) -> Result<f64> {
    let Some(first) = effects.first() else {
        return Err(Error::InvalidPovm("no effects".into()));
    };
    let d = first.rows();
    let mut sum = ComplexMatrix::zeros(d, d);
    let mut worst: f64 = 0.0;
    for e in effects {
        if e.rows() != d || e.cols() != d {
            return Err(Error::InvalidPovm(format!("effect of shape {}x{} in a {d}-dimensional POVM", e.rows(), e.cols())));
        }
        worst = worst.max(psd_violation(e)?);
        sum += e;
    }
    Ok(worst.max(sum.distance(&ComplexMatrix::identity(d))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_incomplete_and_negative() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(Povm::new(vec![half.clone(), half.clone()]).is_ok());
        assert!(matches!(Povm::new(vec![half.clone()]), Err(Error::InvalidPovm(_))));
        let neg = ComplexMatrix::diagonal(&[1.5, 1.0]);
        let rest = ComplexMatrix::diagonal(&[-0.5, 0.0]);
        assert!(matches!(Povm::new(vec![neg, rest]), Err(Error::InvalidPovm(_))));
        assert!(matches!(Povm::new(vec![]), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn reflection_povm() {
        let z = ComplexMatrix::diagonal(&[1.0, -1.0]);
        let p = Povm::from_reflection(&z).unwrap();
        assert_eq!(p.effect(0), &ComplexMatrix::diagonal(&[1.0, 0.0]));
        assert_eq!(p.effect(1), &ComplexMatrix::diagonal(&[0.0, 1.0]));
    }
}
