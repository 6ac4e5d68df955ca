//! Sparse SDPA (`.dat-s`) export of the moment problem.
//!
//! The Hermitian `Γ` is embedded as the real symmetric `[[X, −Y], [Y, X]]`
//! (`Γ = X + iY`). Each free class contributes `2n²` real parameters (real
//! and imaginary parts, row-major), or `n²` for self-inverse classes whose
//! block is Hermitian (diagonal, then `Re`/`Im` of the strict upper
//! triangle). Pinned blocks form the constant `−F0`; the objective is zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::MomentProblem;
use crate::error::{Error, Result};
use crate::numkernel::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpaEntry {
    pub matrix: usize,
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Parsed contents of a `.dat-s` file (indices 1-based as in the file).
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub variables: usize,
    pub block_struct: Vec<i64>,
    pub objective: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

impl SdpaProblem {
    /// Dense `Σ x_t F_t − F0` for a single-block problem.
    pub fn assemble(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if self.block_struct.len() != 1 || x.len() != self.variables {
            return Err(Error::Mismatch("assemble expects one block and one value per variable".into()));
        }
        let size = self.block_struct[0].unsigned_abs() as usize;
        let mut out = vec![vec![0.0; size]; size];
        for e in &self.entries {
            let weight = if e.matrix == 0 { -1.0 } else { x[e.matrix - 1] };
            let v = weight * e.value;
            out[e.row - 1][e.col - 1] += v;
            if e.row != e.col {
                out[e.col - 1][e.row - 1] += v;
            }
        }
        Ok(out)
    }
}

/// Upper-triangle entries of the real embedding of `Γ` with class values given by `value_of`.
fn embedded_entries(
    problem: &MomentProblem,
    classes: impl Iterator<Item = (usize, ComplexMatrix)>,
) -> BTreeMap<(usize, usize), f64> {
    let n = problem.block_dim();
    let big = problem.matrix_dim();
    let mut out = BTreeMap::new();
    for (c, value) in classes {
        let adjoint = value.adjoint();
        for &(p, q, adj) in &problem.classes()[c].occurrences {
            let block = if adj { &adjoint } else { &value };
            for i in 0..n {
                for j in 0..n {
                    let z = block[(i, j)];
                    let (r, col) = (p * n + i, q * n + j);
                    for (rr, cc, v) in [(r, col, z.re), (r, col + big, -z.im), (r + big, col, z.im), (r + big, col + big, z.re)] {
                        if rr <= cc && v != 0.0 {
                            *out.entry((rr, cc)).or_insert(0.0) += v;
                        }
                    }
                }
            }
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Basis matrices of one free class, in parameter order.
fn class_basis(n: usize, self_inverse: bool) -> Vec<ComplexMatrix> {
    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    if self_inverse {
        for i in 0..n {
            let mut m = ComplexMatrix::zeros(n, n);
            m[(i, i)] = one;
            out.push(m);
        }
        for i in 0..n {
            for j in i + 1..n {
                let mut re = ComplexMatrix::zeros(n, n);
                re[(i, j)] = one;
                re[(j, i)] = one;
                let mut im = ComplexMatrix::zeros(n, n);
                im[(i, j)] = i_unit;
                im[(j, i)] = -i_unit;
                out.push(re);
                out.push(im);
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                let mut re = ComplexMatrix::zeros(n, n);
                re[(i, j)] = one;
                let mut im = ComplexMatrix::zeros(n, n);
                im[(i, j)] = i_unit;
                out.push(re);
                out.push(im);
            }
        }
    }
    out
}

/// The `.dat-s` text of the problem.
pub fn write_sdpa(problem: &MomentProblem) -> String {
    let n = problem.block_dim();
    let s = problem.scenario();
    let mut matrices: Vec<BTreeMap<(usize, usize), f64>> = Vec::new();

    let constant = embedded_entries(
        problem,
        problem.classes().iter().enumerate().filter_map(|(c, class)| class.pin_mean().map(|v| (c, v))),
    );
    matrices.push(constant.into_iter().map(|(k, v)| (k, -v)).collect());
    for (c, class) in problem.classes().iter().enumerate() {
        if class.is_pinned() {
            continue;
        }
        for basis in class_basis(n, class.self_inverse) {
            matrices.push(embedded_entries(problem, std::iter::once((c, basis))));
        }
    }

    let variables = matrices.len() - 1;
    let mut text = String::new();
    let _ = writeln!(text, "\"moment problem m={} k={} n={} level={}", s.settings, s.outcomes, n, problem.level());
    let _ = writeln!(text, "{variables}");
    let _ = writeln!(text, "1");
    let _ = writeln!(text, "{}", 2 * problem.matrix_dim());
    let _ = writeln!(text, "{}", vec!["0"; variables].join(" "));
    for (t, entries) in matrices.iter().enumerate() {
        for (&(r, c), v) in entries {
            let _ = writeln!(text, "{t} 1 {} {} {v}", r + 1, c + 1);
        }
    }
    text
}

pub fn export_sdpa(problem: &MomentProblem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_sdpa(problem))?;
    Ok(())
}

/// Parameter vector reproducing `gamma` (read from the first occurrence of each free class).
pub fn sdpa_parameters(problem: &MomentProblem, gamma: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = problem.block_dim();
    if gamma.rows() != problem.matrix_dim() || gamma.cols() != problem.matrix_dim() {
        return Err(Error::DimensionMismatch(format!("moment matrix must be {0}x{0}", problem.matrix_dim())));
    }
    let mut out = Vec::new();
    for class in problem.classes().iter().filter(|c| !c.is_pinned()) {
        let (p, q, adj) = class.occurrences[0];
        let b = gamma.block(p * n, q * n, n, n);
        let b = if adj { b.adjoint() } else { b };
        if class.self_inverse {
            out.extend((0..n).map(|i| b[(i, i)].re));
            for i in 0..n {
                for j in i + 1..n {
                    out.push(b[(i, j)].re);
                    out.push(b[(i, j)].im);
                }
            }
        } else {
            for z in b.as_slice() {
                out.push(z.re);
                out.push(z.im);
            }
        }
    }
    Ok(out)
}

/// Parses sparse SDPA text (comments, then `m`, `nBLOCK`, block sizes, `c`, entries).
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")));
    let numbers = |line: &str| -> Vec<String> {
        line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    let parse_usize = |t: &str| t.parse::<usize>().map_err(|e| Error::Parse(format!("'{t}': {e}")));
    let parse_f64 = |t: &str| t.parse::<f64>().map_err(|e| Error::Parse(format!("'{t}': {e}")));

    let variables = parse_usize(numbers(next("variable count")?).first().map_or("", String::as_str))?;
    let blocks = parse_usize(numbers(next("block count")?).first().map_or("", String::as_str))?;
    let block_struct = numbers(next("block structure")?)
        .iter()
        .map(|t| t.parse::<i64>().map_err(|e| Error::Parse(format!("'{t}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if block_struct.len() != blocks {
        return Err(Error::Parse(format!("{blocks} blocks declared, {} sizes given", block_struct.len())));
    }
    let objective = if variables == 0 {
        // a zero-length objective line is written as an empty line and filtered above
        Vec::new()
    } else {
        numbers(next("objective")?).iter().map(|t| parse_f64(t)).collect::<Result<Vec<_>>>()?
    };
    if objective.len() != variables {
        return Err(Error::Parse(format!("objective has {} entries for {variables} variables", objective.len())));
    }
    let mut entries = Vec::new();
    for line in lines {
        let t = numbers(line);
        if t.len() != 5 {
            return Err(Error::Parse(format!("malformed entry '{line}'")));
        }
        let e = SdpaEntry {
            matrix: parse_usize(&t[0])?,
            block: parse_usize(&t[1])?,
            row: parse_usize(&t[2])?,
            col: parse_usize(&t[3])?,
            value: parse_f64(&t[4])?,
        };
        let size = block_struct.get(e.block.wrapping_sub(1)).map(|s| s.unsigned_abs() as usize);
        if e.matrix > variables || size.is_none_or(|s| e.row == 0 || e.col == 0 || e.row > s || e.col > s) {
            return Err(Error::Parse(format!("entry out of range '{line}'")));
        }
        entries.push(e);
    }
    Ok(SdpaProblem { variables, block_struct, objective, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::fixtures::singlet_assemblage;
    use crate::assemblage::{random_ns, Scenario};
    use crate::hierarchy::{build_moment_problem, certificate_from_realization};
    use crate::realization::gisin_realize;

    #[test]
    fn qubit_level_one_is_a_single_twelve_block() {
        let p = build_moment_problem(&singlet_assemblage(), 1).unwrap();
        let parsed = parse_sdpa(&write_sdpa(&p)).unwrap();
        assert_eq!(parsed.block_struct, vec![12]);
        // one free non-self-inverse class: 2n² = 8 parameters
        assert_eq!(parsed.variables, 8);
        assert!(parsed.entries.iter().all(|e| e.row <= e.col));
    }

    #[test]
    fn export_is_deterministic() {
        let a = random_ns(Scenario::new(2, 3, 2).unwrap(), 5);
        let p = build_moment_problem(&a, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (f1, f2) = (dir.path().join("a.dat-s"), dir.path().join("b.dat-s"));
        export_sdpa(&p, &f1).unwrap();
        export_sdpa(&build_moment_problem(&a, 2).unwrap(), &f2).unwrap();
        assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
    }

    /// Parse the export, plug in the certificate's parameters, compare with its real embedding.
    #[test]
    fn round_trip_reassembles_the_certificate() {
        for (m, k, n, level) in [(2, 2, 2, 1), (2, 2, 2, 2), (2, 3, 2, 1), (3, 2, 1, 2)] {
            let a = random_ns(Scenario::new(m, k, n).unwrap(), 11);
            let p = build_moment_problem(&a, level).unwrap();
            let g = certificate_from_realization(&p, &gisin_realize(&a).unwrap()).unwrap();
            let parsed = parse_sdpa(&write_sdpa(&p)).unwrap();
            let big = p.matrix_dim();
            assert_eq!(parsed.block_struct, vec![2 * big as i64]);
            let dense = parsed.assemble(&sdpa_parameters(&p, &g).unwrap()).unwrap();
            let mut worst: f64 = 0.0;
            for r in 0..big {
                for c in 0..big {
                    let z = g[(r, c)];
                    worst = worst
                        .max((dense[r][c] - z.re).abs())
                        .max((dense[r][c + big] + z.im).abs())
                        .max((dense[r + big][c] - z.im).abs())
                        .max((dense[r + big][c + big] - z.re).abs());
                }
            }
            assert!(worst < 1e-9, "({m},{k},{n}) level {level}: {worst:e}");
        }
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(matches!(parse_sdpa(""), Err(Error::Parse(_))));
        assert!(matches!(parse_sdpa("1\n1\n4\n0\n1 1 5 5 1.0\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_sdpa("1\n1\n4\n0\n1 1 1 x 1.0\n"), Err(Error::Parse(_))));
        let ok = parse_sdpa("\"c\n1\n1\n{2}\n0\n0 1 1 1 -1\n1 1 1 2 0.5\n").unwrap();
        assert_eq!(ok.assemble(&[2.0]).unwrap(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
    }
}
