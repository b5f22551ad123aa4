//! Random small SDPs and an independent oracle for their optimum.
//!
//! Shared by the solver tests and the acceptance suite.

use dsas_sdp::{LmiBlock, SdpProblem, SymSparse};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-amp..amp);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn box_block(vars: &[usize], half_width: f64) -> LmiBlock {
    let mut b = LmiBlock::new(2 * vars.len(), "box");
    for (k, &v) in vars.iter().enumerate() {
        b.constant.add(2 * k, 2 * k, half_width);
        b.constant.add(2 * k + 1, 2 * k + 1, half_width);
        let mut f = SymSparse::new();
        f.add(2 * k, 2 * k, 1.0);
        f.add(2 * k + 1, 2 * k + 1, -1.0);
        b.terms.push((v, f));
    }
    b
}

/// Five variables; `y0`, `y1` carry the cost and the random LMIs, the rest only
/// sit in a box. `F(0) ≻ 0` so the origin is interior.
pub fn random_problem(seed: u64) -> (SdpProblem, Vec<DMatrix<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = SdpProblem::new(5);
    let mut dense = Vec::new();
    let nblocks = rng.gen_range(1..=3);
    for b in 0..nblocks {
        let n = rng.gen_range(1..=4);
        let f0 = DMatrix::identity(n, n) + random_sym(&mut rng, n, 0.2);
        let f1 = random_sym(&mut rng, n, 1.0);
        let f2 = random_sym(&mut rng, n, 1.0);
        let mut blk = LmiBlock::new(n, format!("rand{b}"));
        blk.constant = SymSparse::from_dense_upper(&f0);
        blk.terms.push((0, SymSparse::from_dense_upper(&f1)));
        blk.terms.push((1, SymSparse::from_dense_upper(&f2)));
        dense.push(f0);
        dense.push(f1);
        dense.push(f2);
        p.push_block(blk);
    }
    p.push_block(box_block(&[0, 1], 3.0));
    p.push_block(box_block(&[2, 3, 4], 1.0));
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    p.objective = Some(vec![theta.cos(), theta.sin(), 0.0, 0.0, 0.0]);
    (p, dense)
}

/// Independent oracle for the two active variables: radial bisection of the
/// boundary of the (star-shaped from 0) feasible set, a coarse angular scan and
/// a ternary refinement of the linear cost along the boundary arc.
pub fn oracle_min(p: &SdpProblem, dense: &[DMatrix<f64>]) -> f64 {
    let c = p.objective.as_ref().unwrap();
    let feasible = |y0: f64, y1: f64| {
        if y0.abs() > 3.0 || y1.abs() > 3.0 {
            return false;
        }
        dense.chunks(3).all(|f| {
            let m = &f[0] + &f[1] * y0 + &f[2] * y1;
            m.symmetric_eigen().eigenvalues.min() >= 0.0
        })
    };
    let boundary = |ang: f64| {
        let (dx, dy) = (ang.cos(), ang.sin());
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid * dx, mid * dy) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        c[0] * lo * dx + c[1] * lo * dy
    };
    let grid = 50 * 50;
    let step = std::f64::consts::TAU / grid as f64;
    let (mut best_a, mut best) = (0.0, f64::INFINITY);
    for k in 0..grid {
        let a = k as f64 * step;
        let v = boundary(a);
        if v < best {
            best = v;
            best_a = a;
        }
    }
    let (mut lo, mut hi) = (best_a - step, best_a + step);
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if boundary(m1) < boundary(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(boundary(0.5 * (lo + hi)))
}
