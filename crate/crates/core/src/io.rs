//! JSON formats for assemblages and realizations.
//!
//! Matrices are stored as `{re: [[...]], im: [[...]]}` in row-major nested
//! arrays. Outcomes and settings are 1-based in files.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assemblage::{Assemblage, Povm, Scenario};
use crate::error::{Error, Result};
use crate::numkernel::ComplexMatrix;
use crate::realization::QuantumRealization;

pub const ASSEMBLAGE_SCHEMA: &str = "assemblage.v1";
pub const REALIZATION_SCHEMA: &str = "realization.v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| (0..m.rows()).map(|i| m.row(i).iter().map(f).collect()).collect();
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    /// Checks that both parts are `rows × cols`.
    pub fn to_matrix(&self, rows: usize, cols: usize) -> Result<ComplexMatrix> {
        let shape_ok = |p: &Vec<Vec<f64>>| p.len() == rows && p.iter().all(|r| r.len() == cols);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Parse(format!("matrix is not {rows}x{cols}")));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |i, j| Complex64::new(self.re[i][j], self.im[i][j])))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaEntry {
    pub a: usize,
    pub x: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl SigmaEntry {
    fn matrix(&self, n: usize) -> Result<ComplexMatrix> {
        MatrixJson { re: self.re.clone(), im: self.im.clone() }.to_matrix(n, n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblageJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub sigma: Vec<SigmaEntry>,
}

impl AssemblageJson {
    pub fn from_assemblage(a: &Assemblage) -> Self {
        let s = a.scenario();
        let sigma = (0..s.settings)
            .flat_map(|x| (0..s.outcomes).map(move |o| (o, x)))
            .map(|(o, x)| {
                let MatrixJson { re, im } = MatrixJson::from_matrix(a.element(o, x));
                SigmaEntry { a: o + 1, x: x + 1, re, im }
            })
            .collect();
        Self { schema: Some(ASSEMBLAGE_SCHEMA.into()), m: s.settings, k: s.outcomes, n: s.dim, sigma }
    }

    /// Every `(a, x)` must appear exactly once.
    pub fn to_assemblage(&self) -> Result<Assemblage> {
        check_schema(self.schema.as_deref(), ASSEMBLAGE_SCHEMA)?;
        let scenario = Scenario::new(self.m, self.k, self.n).map_err(|e| Error::Parse(e.to_string()))?;
        let mut slots: Vec<Vec<Option<ComplexMatrix>>> = vec![vec![None; self.k]; self.m];
        for e in &self.sigma {
            if e.a == 0 || e.a > self.k || e.x == 0 || e.x > self.m {
                return Err(Error::Parse(format!("entry (a={}, x={}) outside 1..={} x 1..={}", e.a, e.x, self.k, self.m)));
            }
            let slot = &mut slots[e.x - 1][e.a - 1];
            if slot.is_some() {
                return Err(Error::Parse(format!("duplicate entry (a={}, x={})", e.a, e.x)));
            }
            *slot = Some(e.matrix(self.n)?);
        }
        let mut elements = Vec::with_capacity(self.m);
        for (x, row) in slots.into_iter().enumerate() {
            let mut out = Vec::with_capacity(self.k);
            for (a, m) in row.into_iter().enumerate() {
                out.push(m.ok_or_else(|| Error::Parse(format!("missing entry (a={}, x={})", a + 1, x + 1)))?);
            }
            elements.push(out);
        }
        Assemblage::new(scenario, elements)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(rename = "dA")]
    pub d_a: usize,
    pub n: usize,
    #[serde(rename = "rho_AB")]
    pub rho_ab: MatrixJson,
    /// `povms[x][a]`.
    pub povms: Vec<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification_error: Option<f64>,
}

impl RealizationJson {
    pub fn from_realization(r: &QuantumRealization, verification_error: Option<f64>) -> Self {
        Self {
            schema: Some(REALIZATION_SCHEMA.into()),
            d_a: r.dim_a,
            n: r.trusted_dim(),
            rho_ab: MatrixJson::from_matrix(&r.rho_ab),
            povms: r.povms.iter().map(|p| p.effects().iter().map(MatrixJson::from_matrix).collect()).collect(),
            verification_error,
        }
    }

    /// Validates the POVMs; the state is checked only for shape.
    pub fn to_realization(&self) -> Result<QuantumRealization> {
        check_schema(self.schema.as_deref(), REALIZATION_SCHEMA)?;
        let big = self.d_a * self.n;
        let rho_ab = self.rho_ab.to_matrix(big, big)?;
        let povms = self
            .povms
            .iter()
            .map(|effects| Povm::new(effects.iter().map(|e| e.to_matrix(self.d_a, self.d_a)).collect::<Result<_>>()?))
            .collect::<Result<_>>()?;
        Ok(QuantumRealization { dim_a: self.d_a, rho_ab, povms })
    }
}

fn check_schema(found: Option<&str>, expected: &str) -> Result<()> {
    match found {
        Some(s) if s != expected => Err(Error::Parse(format!("schema {s:?}, expected {expected:?}"))),
        _ => Ok(()),
    }
}

pub fn assemblage_from_str(text: &str) -> Result<Assemblage> {
    serde_json::from_str::<AssemblageJson>(text)?.to_assemblage()
}

pub fn assemblage_to_string(a: &Assemblage) -> Result<String> {
    Ok(serde_json::to_string_pretty(&AssemblageJson::from_assemblage(a))? + "\n")
}

pub fn read_assemblage(path: impl AsRef<Path>) -> Result<Assemblage> {
    assemblage_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_assemblage(a: &Assemblage, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, assemblage_to_string(a)?)?)
}

pub fn realization_from_str(text: &str) -> Result<QuantumRealization> {
    serde_json::from_str::<RealizationJson>(text)?.to_realization()
}

pub fn realization_to_string(r: &QuantumRealization, verification_error: Option<f64>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&RealizationJson::from_realization(r, verification_error))? + "\n")
}
