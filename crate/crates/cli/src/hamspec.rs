//! Local Hamiltonian mini-syntax for `--ham`.
//!
//! Factors are separated by top-level commas. Each factor is either a sum
//! of Pauli terms (`Z`, `0.5X+0.3Z`, `-Y`, `I`, `0`) acting on a qubit, or a
//! matrix literal `[[a,b],[c,d]]` of any size whose entries are real or
//! complex numbers (`1`, `-0.5`, `2i`, `0.3-0.1i`). Traces are removed, so
//! identity terms only shift the energy.

use num_complex::Complex64 as C64;
use sympent::localalg::su_basis;
use sympent::{CMatrix, LocalHamiltonian};

use crate::error::CliError;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Splits at commas outside brackets.
fn split_top_level(text: &str) -> Result<Vec<&str>, CliError> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(input(format!("unbalanced ']' at offset {i} in --ham")));
                }
            }
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(input("unbalanced '[' in --ham"));
    }
    parts.push(text[start..].trim());
    Ok(parts)
}

/// `x`, `xi`, `i`, `x+yi`, `x-yi` with optional leading sign.
pub fn parse_complex(text: &str) -> Result<C64, CliError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || input(format!("malformed number '{text}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let imag_part = |s: &str| -> Result<f64, CliError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse().map_err(|_| bad()),
        }
    };
    if let Some(body) = t.strip_suffix('i') {
        // Split at the last sign that is not part of an exponent.
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&k| {
            (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E')
        });
        match split {
            Some(k) => {
                let re: f64 = body[..k].parse().map_err(|_| bad())?;
                Ok(C64::new(re, imag_part(&body[k..])?))
            }
            None => Ok(C64::new(0.0, imag_part(body)?)),
        }
    } else {
        Ok(C64::new(t.parse().map_err(|_| bad())?, 0.0))
    }
}

fn parse_matrix(text: &str) -> Result<CMatrix, CliError> {
    let inner = text
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| input(format!("malformed matrix literal '{text}'")))?;
    let rows: Vec<Vec<C64>> = split_top_level(inner)?
        .into_iter()
        .map(|row| {
            let body = row
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| input(format!("malformed matrix row '{row}'")))?;
            body.split(',').map(parse_complex).collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(input(format!("matrix literal '{text}' is not square")));
    }
    CMatrix::from_rows(&rows).map_err(CliError::from)
}

fn parse_pauli_sum(text: &str) -> Result<CMatrix, CliError> {
    let paulis = su_basis(2).map_err(CliError::from)?;
    let mut acc = CMatrix::zeros(2, 2);
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t == "0" {
        return Ok(acc);
    }
    let mut start = 0;
    let bytes = t.as_bytes();
    let mut terms = Vec::new();
    for k in 1..=bytes.len() {
        if k == bytes.len()
            || ((bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        {
            terms.push(&t[start..k]);
            start = k;
        }
    }
    for term in terms {
        let (coef, letter) = term.split_at(term.len() - 1);
        let op = match letter {
            "I" => CMatrix::identity(2),
            "X" => paulis[0].clone(),
            "Y" => paulis[1].clone(),
            "Z" => paulis[2].clone(),
            _ => {
                return Err(input(format!(
                    "unknown Pauli term '{term}' (use I, X, Y, Z)"
                )))
            }
        };
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            _ => {
                let c = coef.strip_suffix('*').unwrap_or(coef);
                c.parse()
                    .map_err(|_| input(format!("malformed coefficient in '{term}'")))?
            }
        };
        acc = &acc + &op.scale(C64::new(c, 0.0));
    }
    Ok(acc)
}

/// Parses `--ham` for a state with local dimensions `dims`.
pub fn parse_local_hamiltonian(text: &str, dims: &[usize]) -> Result<LocalHamiltonian, CliError> {
    let parts = split_top_level(text)?;
    if parts.len() != dims.len() {
        return Err(input(format!(
            "--ham has {} factors but the state has {} subsystems",
            parts.len(),
            dims.len()
        )));
    }
    let factors = parts
        .iter()
        .zip(dims)
        .enumerate()
        .map(|(k, (part, &d))| {
            let m = if part.starts_with('[') {
                parse_matrix(part)?
            } else if *part == "0" {
                CMatrix::zeros(d, d)
            } else {
                parse_pauli_sum(part)?
            };
            if m.rows() != d {
                return Err(input(format!(
                    "factor {} is {}x{} but subsystem {} has dimension {d}",
                    k + 1,
                    m.rows(),
                    m.cols(),
                    k + 1
                )));
            }
            m.check_hermitian()
                .map_err(|e| input(format!("factor {}: {e}", k + 1)))?;
            Ok(m)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    LocalHamiltonian::from_hermitian(factors).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_numbers() {
        assert_eq!(parse_complex("1").unwrap(), C64::new(1.0, 0.0));
        assert_eq!(parse_complex("-0.5").unwrap(), C64::new(-0.5, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), C64::new(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("0.3-0.1i").unwrap(), C64::new(0.3, -0.1));
        assert_eq!(parse_complex("1e-2+1e-3i").unwrap(), C64::new(1e-2, 1e-3));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn pauli_factors() {
        let h = parse_local_hamiltonian("Z,Z,Z", &[2, 2, 2]).unwrap();
        assert_eq!(h.factors()[0], su_basis(2).unwrap()[2]);
        let h = parse_local_hamiltonian("0.5X+0.3Z, I, -Y", &[2, 2, 2]).unwrap();
        let p = su_basis(2).unwrap();
        let expected = &p[0].scale(C64::new(0.5, 0.0)) + &p[2].scale(C64::new(0.3, 0.0));
        assert!((&h.factors()[0] - &expected).max_abs() < 1e-15);
        assert!(h.factors()[1].max_abs() < 1e-15);
        assert!((&h.factors()[2] + &p[1]).max_abs() < 1e-15);
    }

    #[test]
    fn matrix_factors() {
        let h = parse_local_hamiltonian("[[1,0],[0,-1]],[[0,-i],[i,0]]", &[2, 2]).unwrap();
        let p = su_basis(2).unwrap();
        assert_eq!(h.factors()[0], p[2]);
        assert_eq!(h.factors()[1], p[1]);
        let h = parse_local_hamiltonian("[[2,0,0],[0,1,0],[0,0,0]],0", &[3, 2]).unwrap();
        assert!((h.factors()[0].trace()).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(parse_local_hamiltonian("Z,Z", &[2, 2, 2]).is_err());
        assert!(parse_local_hamiltonian("Q,Z", &[2, 2]).is_err());
        assert!(parse_local_hamiltonian("[[0,1],[0,0]],Z", &[2, 2]).is_err());
        assert!(parse_local_hamiltonian("[[1,0],[0,1]", &[2]).is_err());
        assert!(parse_local_hamiltonian("Z,Z", &[3, 2]).is_err());
        assert!(parse_local_hamiltonian("[[1,0],[0]],Z", &[2, 2]).is_err());
    }
}
