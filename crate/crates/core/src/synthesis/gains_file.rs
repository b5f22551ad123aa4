//! Versioned text form of a [`SynthesisResult`].
//!
//! Matrices are written row-major after a `matrix <name> <rows> <cols>` line,
//! every number with 17 significant digits, so a write/read cycle is exact.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{RuleCertificate, SynthesisResult};
use crate::error::{CoreError, Result};
use crate::ts::{join, LineReader};

const FORMAT_TAG: &str = "dsas-gains 1";
const RULE_SLOTS: [&str; 10] = ["S", "V", "W", "X21", "X22", "X23", "X31", "X32", "X33", "K"];

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        let _ = writeln!(out, "{}", join(&row));
    }
}

pub(super) fn write(res: &SynthesisResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_TAG}");
    let _ = writeln!(out, "fingerprint {}", res.fingerprint);
    let _ = writeln!(out, "rules {}", res.rules.len());
    let _ = writeln!(out, "design {}", join(&[res.u_max, res.rho, res.r, res.tau_1]));
    let _ = writeln!(out, "scalars {}", join(&[res.tau_2, res.gamma]));
    write_matrix(&mut out, "X", &res.x);
    for (i, r) in res.rules.iter().enumerate() {
        let _ = writeln!(out, "rule {}", i + 1);
        let s = DMatrix::from_column_slice(r.s.len(), 1, r.s.as_slice());
        for (name, m) in RULE_SLOTS.iter().zip([
            &s, &r.v, &r.w, &r.x21, &r.x22, &r.x23, &r.x31, &r.x32, &r.x33, &r.k,
        ]) {
            write_matrix(&mut out, name, m);
        }
    }
    out
}

fn read_matrix(rd: &mut LineReader<'_>, name: &str) -> Result<DMatrix<f64>> {
    let (no, l) = rd.next_line()?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "matrix" || toks[1] != name {
        return Err(CoreError::Parse {
            line: no,
            msg: format!("expected `matrix {name} <rows> <cols>`"),
        });
    }
    let dim = |t: &str| {
        t.parse::<usize>()
            .ok()
            .filter(|v| (1..=64).contains(v))
            .ok_or_else(|| CoreError::Parse {
                line: no,
                msg: format!("bad matrix dimension `{t}`"),
            })
    };
    let (rows, cols) = (dim(toks[2])?, dim(toks[3])?);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (_, l) = rd.next_line()?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        data.extend(rd.numbers(&toks, cols)?);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub(super) fn read(text: &str) -> Result<SynthesisResult> {
    let mut rd = LineReader::new(text);
    let (no, tag) = rd.next_line()?;
    if tag != FORMAT_TAG {
        return Err(CoreError::Parse {
            line: no,
            msg: format!("expected `{FORMAT_TAG}`"),
        });
    }
    let (no, l) = rd.next_line()?;
    let fingerprint = match l.split_whitespace().collect::<Vec<_>>()[..] {
        ["fingerprint", f] if f.len() == 64 && f.chars().all(|c| c.is_ascii_hexdigit()) => f.to_string(),
        _ => {
            return Err(CoreError::Parse {
                line: no,
                msg: "expected `fingerprint <sha256 hex>`".into(),
            })
        }
    };
    let rules = rd.keyed("rules", 1)?[0];
    if !(rules >= 1.0 && rules <= 64.0 && rules.fract() == 0.0) {
        return Err(CoreError::Parse {
            line: rd.line,
            msg: "bad rule count".into(),
        });
    }
    let design = rd.keyed("design", 4)?;
    let scalars = rd.keyed("scalars", 2)?;
    let x = read_matrix(&mut rd, "X")?;
    if x.nrows() != x.ncols() {
        return Err(CoreError::Parse {
            line: rd.line,
            msg: "X must be square".into(),
        });
    }
    let mut out_rules = Vec::new();
    for i in 0..rules as usize {
        let head = rd.keyed("rule", 1)?;
        if head[0] != (i + 1) as f64 {
            return Err(CoreError::Parse {
                line: rd.line,
                msg: format!("expected rule {}", i + 1),
            });
        }
        let mut m: Vec<DMatrix<f64>> = Vec::with_capacity(RULE_SLOTS.len());
        for name in RULE_SLOTS {
            m.push(read_matrix(&mut rd, name)?);
        }
        let n_x = x.nrows();
        if m[1].ncols() != n_x || m[9].shape() != m[1].shape() {
            return Err(CoreError::Parse {
                line: rd.line,
                msg: format!("rule {} matrices do not match X", i + 1),
            });
        }
        let mut it = m.into_iter();
        let mut next = || it.next().expect("slot count");
        let s = next();
        out_rules.push(RuleCertificate {
            s: DVector::from_column_slice(s.as_slice()),
            v: next(),
            w: next(),
            x21: next(),
            x22: next(),
            x23: next(),
            x31: next(),
            x32: next(),
            x33: next(),
            k: next(),
        });
    }
    if !rd.at_end() {
        return Err(CoreError::Parse {
            line: rd.line + 1,
            msg: "trailing content".into(),
        });
    }
    Ok(SynthesisResult {
        x,
        rules: out_rules,
        tau_1: design[3],
        tau_2: scalars[0],
        gamma: scalars[1],
        u_max: design[0],
        rho: design[1],
        r: design[2],
        fingerprint,
    })
}
