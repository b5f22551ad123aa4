//! SDPA sparse (`.dat-s`) interchange.
//!
//! SDPA states the primal constraint as `Σ_i x_i F_i − F_0 ⪰ 0`, so the
//! constant term of an [`LmiBlock`] is written negated as matrix 0. Entries are
//! 1-based upper-triangle, one per line, values with 17 significant digits.

use std::fmt::Write as _;

use crate::error::{Result, SdpError};
use crate::problem::{LmiBlock, SdpProblem, SymSparse};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn export_sdpa(problem: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} = mDIM", problem.num_vars);
    let _ = writeln!(out, "{} = nBLOCK", problem.blocks.len());
    let sizes: Vec<String> = problem.blocks.iter().map(|b| b.size.to_string()).collect();
    let _ = writeln!(out, "{} = bLOCKsTRUCT", sizes.join(" "));
    let cost: Vec<String> = match &problem.objective {
        Some(c) => c.iter().map(|&v| num(v)).collect(),
        None => vec![num(0.0); problem.num_vars],
    };
    let _ = writeln!(out, "{}", cost.join(" "));

    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (b, blk) in problem.blocks.iter().enumerate() {
        let mut constant = blk.constant.clone();
        constant.canonicalize();
        for &(i, j, v) in constant.entries() {
            lines.push((0, b + 1, i + 1, j + 1, -v));
        }
        for (var, f) in &blk.terms {
            let mut f = f.clone();
            f.canonicalize();
            for &(i, j, v) in f.entries() {
                lines.push((var + 1, b + 1, i + 1, j + 1, v));
            }
        }
    }
    lines.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (mat, blk, i, j, v) in lines {
        let _ = writeln!(out, "{mat} {blk} {i} {j} {}", num(v));
    }
    out
}

pub fn import_sdpa(text: &str) -> Result<SdpProblem> {
    let err = |line: usize, msg: &str| SdpError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .skip_while(|(_, l)| l.starts_with('"') || l.starts_with('*'));

    let first_int = |(no, l): (usize, &str)| -> Result<i64> {
        l.split(|c: char| c.is_whitespace() || ",{}()".contains(c))
            .find(|t| !t.is_empty())
            .and_then(|t| t.parse::<i64>().ok())
            .ok_or_else(|| err(no, "expected integer"))
    };
    let m = first_int(lines.next().ok_or_else(|| err(0, "missing mDIM"))?)?;
    let nblock = first_int(lines.next().ok_or_else(|| err(0, "missing nBLOCK"))?)?;
    if m <= 0 || nblock < 0 {
        return Err(err(1, "bad dimensions"));
    }
    let (m, nblock) = (m as usize, nblock as usize);

    let (no, struct_line) = lines.next().ok_or_else(|| err(0, "missing bLOCKsTRUCT"))?;
    let sizes: Vec<i64> = struct_line
        .split(|c: char| c.is_whitespace() || ",{}()=".contains(c))
        .filter(|t| !t.is_empty())
        .map_while(|t| t.parse::<i64>().ok())
        .take(nblock)
        .collect();
    if sizes.len() != nblock || sizes.contains(&0) {
        return Err(err(no, "block structure does not match nBLOCK"));
    }

    let mut cost = Vec::with_capacity(m);
    let mut last_no = no;
    while cost.len() < m {
        let (no, l) = lines.next().ok_or_else(|| err(last_no, "missing cost vector"))?;
        last_no = no;
        for t in l
            .split(|c: char| c.is_whitespace() || ",{}()".contains(c))
            .filter(|t| !t.is_empty())
        {
            cost.push(t.parse::<f64>().map_err(|_| err(no, "bad cost entry"))?);
        }
    }
    if cost.len() != m {
        return Err(err(last_no, "cost vector length mismatch"));
    }

    let mut problem = SdpProblem::new(m);
    let mut blocks: Vec<LmiBlock> = sizes
        .iter()
        .enumerate()
        .map(|(b, &s)| LmiBlock::new(s.unsigned_abs() as usize, format!("block{}", b + 1)))
        .collect();
    let mut terms: Vec<Vec<(usize, SymSparse)>> = vec![Vec::new(); nblock];
    for (no, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(err(no, "expected `matno blkno i j value`"));
        }
        let ints: Vec<usize> = toks[..4]
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(no, "bad index"))?;
        let v: f64 = toks[4].parse().map_err(|_| err(no, "bad value"))?;
        let (mat, blk, i, j) = (ints[0], ints[1], ints[2], ints[3]);
        if blk == 0 || blk > nblock || mat > m {
            return Err(err(no, "index out of range"));
        }
        let size = blocks[blk - 1].size;
        if i == 0 || j == 0 || i > size || j > size || (sizes[blk - 1] < 0 && i != j) {
            return Err(err(no, "entry outside block"));
        }
        if mat == 0 {
            blocks[blk - 1].constant.add(i - 1, j - 1, -v);
        } else {
            let list = &mut terms[blk - 1];
            match list.iter_mut().find(|(var, _)| *var == mat - 1) {
                Some((_, f)) => f.add(i - 1, j - 1, v),
                None => {
                    let mut f = SymSparse::new();
                    f.add(i - 1, j - 1, v);
                    list.push((mat - 1, f));
                }
            }
        }
    }
    for (blk, t) in blocks.iter_mut().zip(terms) {
        blk.terms = t;
        problem.push_block(blk.clone());
    }
    if cost.iter().any(|&c| c != 0.0) {
        problem.objective = Some(cost);
    }
    problem.validate()?;
    Ok(problem)
}
