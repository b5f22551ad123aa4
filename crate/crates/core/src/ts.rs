//! Eight-rule Takagi-Sugeno model over `z = (v_x, 1/v_x, μ)`.
//!
//! Rule index is `4·b_1 + 2·b_2 + b_3` with `b_k = 1` at the upper bound of
//! `z_k`. `z_1` and `z_2` are treated as independent axes.

use std::fmt::Write as _;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, CoreError, Result};
use crate::vehicle::{build_plant_matrices, DriverGains, VehicleParams, N_X, STEER_RATE};

pub const NUM_RULES: usize = 8;
const FORMAT_TAG: &str = "dsas-ts-model 1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulingBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for SchedulingBounds {
    fn default() -> Self {
        Self {
            v_min: 9.0,
            v_max: 25.0,
            mu_min: 0.25,
            mu_max: 1.0,
        }
    }
}

impl SchedulingBounds {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_min, self.v_max, self.mu_min, self.mu_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.v_min <= 0.0 || self.mu_min <= 0.0 {
            return Err(domain("scheduling bounds must be finite with v_min > 0 and mu_min > 0"));
        }
        if self.v_min >= self.v_max || self.mu_min >= self.mu_max {
            return Err(domain("degenerate scheduling bounds (min must be below max)"));
        }
        Ok(())
    }

    /// `[(z_min, z_max); 3]`.
    pub fn axes(&self) -> [(f64, f64); 3] {
        [
            (self.v_min, self.v_max),
            (1.0 / self.v_max, 1.0 / self.v_min),
            (self.mu_min, self.mu_max),
        ]
    }

    pub fn corner(&self, rule: usize) -> [f64; 3] {
        let axes = self.axes();
        let mut z = [0.0; 3];
        for (k, zk) in z.iter_mut().enumerate() {
            let high = (rule >> (2 - k)) & 1 == 1;
            *zk = if high { axes[k].1 } else { axes[k].0 };
        }
        z
    }
}

/// `A_v(v_x) = a0 + v_x·a1 + a2/v_x`, and `B_u(μ) = μ·rho·e_6`.
///
/// Built from the closed-form coefficients, not by sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineModel {
    pub a0: Matrix6<f64>,
    pub a1: Matrix6<f64>,
    pub a2: Matrix6<f64>,
    pub rho: f64,
    pub b_w: Vector6<f64>,
}

impl AffineModel {
    pub fn new(p: &VehicleParams, g: &DriverGains) -> Self {
        let rho = p.rho();
        let ta = p.tau_a;
        let col = p.i_s * p.r_s * p.r_s;
        let moment = p.l_r * p.c_r - p.l_f * p.c_f;
        let inertia = p.l_r * p.l_r * p.c_r + p.l_f * p.l_f * p.c_f;
        let b1 = p.c_f / p.m;
        let b2 = p.l_f * p.c_f / p.i_z;

        let mut a0 = Matrix6::zeros();
        let mut a1 = Matrix6::zeros();
        let mut a2 = Matrix6::zeros();

        a2[(0, 0)] = -(p.c_r + p.c_f) / p.m;
        a1[(0, 1)] = -1.0;
        a2[(0, 1)] = moment / p.m;
        a0[(0, 4)] = b1;

        a2[(1, 0)] = moment / p.i_z;
        a2[(1, 1)] = -inertia / p.i_z;
        a0[(1, 4)] = b2;

        a0[(2, 1)] = 1.0;

        a0[(3, 0)] = 1.0;
        a0[(3, 1)] = p.l_s;
        a1[(3, 2)] = 1.0;

        a0[(4, 5)] = 1.0;

        // steering column plus rho·(driver torque row)
        a2[(5, 0)] = p.c_f * p.eta_t / col + rho * g.k_d2 * ta * ta * moment / p.i_z;
        a0[(5, 1)] = rho * g.k_d2 * ta;
        a2[(5, 1)] = p.c_f * p.l_f * p.eta_t / col - rho * g.k_d2 * ta * ta * inertia / p.i_z;
        a0[(5, 2)] = rho * g.k_d1;
        a2[(5, 3)] = rho * g.k_d1 / p.t_p;
        a0[(5, 4)] = -p.c_f * p.eta_t / col + rho * g.k_d2 * ta * ta * b2 * p.r_s;
        a0[(5, 5)] = -p.b_s / p.i_s;

        let b_w = Vector6::new(1.0 / p.m, p.l_w / p.i_z, 0.0, 0.0, 0.0, 0.0);
        Self { a0, a1, a2, rho, b_w }
    }

    pub fn a_at(&self, z1: f64, z2: f64) -> Matrix6<f64> {
        self.a0 + self.a1 * z1 + self.a2 * z2
    }

    pub fn bu_at(&self, z3: f64) -> Vector6<f64> {
        let mut b = Vector6::zeros();
        b[STEER_RATE] = z3 * self.rho;
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub z: [f64; 3],
    pub a: Matrix6<f64>,
    pub bu: Vector6<f64>,
    pub bw: Vector6<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsModel {
    pub bounds: SchedulingBounds,
    /// Performance output, shared by all rules.
    pub c: Matrix6<f64>,
    pub vertices: Vec<Vertex>,
}

/// Default performance output: `diag(0, 0, 1, 1, 0, 0)`.
pub fn default_output_matrix() -> Matrix6<f64> {
    Matrix6::from_diagonal(&Vector6::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Memberships {
    pub eta: [f64; NUM_RULES],
    /// Per-axis normalized positions `w_k ∈ [0, 1]`.
    pub w: [f64; 3],
    /// Whether any input had to be clamped into the bounds.
    pub clamped: bool,
}

pub fn build_ts_model(
    p: &VehicleParams,
    g: &DriverGains,
    bounds: &SchedulingBounds,
    c: &Matrix6<f64>,
) -> Result<TsModel> {
    bounds.validate()?;
    p.validate()?;
    g.validate()?;
    let model = AffineModel::new(p, g);
    let vertices = (0..NUM_RULES)
        .map(|i| {
            let z = bounds.corner(i);
            Vertex {
                z,
                a: model.a_at(z[0], z[1]),
                bu: model.bu_at(z[2]),
                bw: model.b_w,
            }
        })
        .collect();
    Ok(TsModel {
        bounds: *bounds,
        c: *c,
        vertices,
    })
}

/// Direct evaluation of the scheduled matrices from the vehicle equations.
pub fn direct_matrices(
    p: &VehicleParams,
    g: &DriverGains,
    v_x: f64,
    mu: f64,
) -> Result<(Matrix6<f64>, Vector6<f64>)> {
    let a = crate::vehicle::build_driver_in_loop(p, g, v_x)?;
    let b = build_plant_matrices(p, v_x)?.b * mu;
    Ok((a, b))
}

pub fn memberships(v_x: f64, mu: f64, b: &SchedulingBounds) -> Memberships {
    let v = v_x.clamp(b.v_min, b.v_max);
    let m = mu.clamp(b.mu_min, b.mu_max);
    let clamped = v != v_x || m != mu;
    if clamped {
        log::warn!("scheduling input (v_x = {v_x}, mu = {mu}) clamped into bounds");
    }
    let axes = b.axes();
    let z = [v, 1.0 / v, m];
    let mut w = [0.0; 3];
    for k in 0..3 {
        w[k] = ((z[k] - axes[k].0) / (axes[k].1 - axes[k].0)).clamp(0.0, 1.0);
    }
    let mut eta = [0.0; NUM_RULES];
    for (i, e) in eta.iter_mut().enumerate() {
        *e = (0..3)
            .map(|k| if (i >> (2 - k)) & 1 == 1 { w[k] } else { 1.0 - w[k] })
            .product();
    }
    Memberships { eta, w, clamped }
}

impl TsModel {
    pub fn num_rules(&self) -> usize {
        self.vertices.len()
    }

    pub fn reconstruct(&self, v_x: f64, mu: f64) -> (Matrix6<f64>, Vector6<f64>) {
        let eta = memberships(v_x, mu, &self.bounds).eta;
        let mut a = Matrix6::zeros();
        let mut bu = Vector6::zeros();
        for (e, vx) in eta.iter().zip(&self.vertices) {
            a += vx.a * *e;
            bu += vx.bu * *e;
        }
        (a, bu)
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG}");
        let b = &self.bounds;
        let _ = writeln!(out, "bounds {}", join(&[b.v_min, b.v_max, b.mu_min, b.mu_max]));
        let _ = writeln!(out, "rules {}", self.vertices.len());
        write_matrix(&mut out, "c", &self.c);
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "vertex {i} {}", join(&v.z));
            write_matrix(&mut out, "a", &v.a);
            let _ = writeln!(out, "bu {}", join(v.bu.as_slice()));
            let _ = writeln!(out, "bw {}", join(v.bw.as_slice()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        let (no, tag) = r.next_line()?;
        if tag != FORMAT_TAG {
            return Err(CoreError::Parse {
                line: no,
                msg: format!("expected `{FORMAT_TAG}`"),
            });
        }
        let bv = r.keyed("bounds", 4)?;
        let bounds = SchedulingBounds {
            v_min: bv[0],
            v_max: bv[1],
            mu_min: bv[2],
            mu_max: bv[3],
        };
        let rules = r.keyed("rules", 1)?[0];
        if rules != NUM_RULES as f64 {
            return Err(CoreError::Parse {
                line: r.line,
                msg: format!("expected {NUM_RULES} rules"),
            });
        }
        let c = r.matrix("c")?;
        let mut vertices = Vec::with_capacity(NUM_RULES);
        for i in 0..NUM_RULES {
            let head = r.keyed("vertex", 4)?;
            if head[0] != i as f64 {
                return Err(CoreError::Parse {
                    line: r.line,
                    msg: format!("expected vertex {i}"),
                });
            }
            let a = r.matrix("a")?;
            let bu = Vector6::from_column_slice(&r.keyed("bu", N_X)?);
            let bw = Vector6::from_column_slice(&r.keyed("bw", N_X)?);
            vertices.push(Vertex {
                z: [head[1], head[2], head[3]],
                a,
                bu,
                bw,
            });
        }
        bounds.validate()?;
        Ok(Self { bounds, c, vertices })
    }
}

pub(crate) fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn join(vals: &[f64]) -> String {
    vals.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

pub(crate) fn write_matrix(out: &mut String, key: &str, m: &Matrix6<f64>) {
    let _ = writeln!(out, "{key}");
    for i in 0..N_X {
        let row: Vec<f64> = (0..N_X).map(|j| m[(i, j)]).collect();
        let _ = writeln!(out, "{}", join(&row));
    }
}

/// Line cursor over the whitespace-separated text formats.
pub(crate) struct LineReader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    pub line: usize,
}

impl<'a> LineReader<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> CoreError {
        CoreError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    /// Next non-empty, non-comment line.
    pub fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (i, l) in self.lines.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok((self.line, l));
            }
        }
        Err(self.err("unexpected end of file"))
    }

    pub fn numbers(&self, toks: &[&str], count: usize) -> Result<Vec<f64>> {
        if toks.len() != count {
            return Err(self.err(format!("expected {count} numbers, found {}", toks.len())));
        }
        toks.iter()
            .map(|t| {
                let v: f64 = t.parse().map_err(|_| self.err(format!("bad number `{t}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(self.err("non-finite number"))
                }
            })
            .collect()
    }

    /// Line of the form `key n_1 … n_count`.
    pub fn keyed(&mut self, key: &str, count: usize) -> Result<Vec<f64>> {
        let (_, l) = self.next_line()?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.first() != Some(&key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        self.numbers(&toks[1..], count)
    }

    /// `key` line followed by `rows` lines of `cols` numbers.
    pub fn dense(&mut self, key: &str, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let (_, l) = self.next_line()?;
        if l != key {
            return Err(self.err(format!("expected `{key}`")));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (_, l) = self.next_line()?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            out.extend(self.numbers(&toks, cols)?);
        }
        Ok(out)
    }

    pub fn matrix(&mut self, key: &str) -> Result<Matrix6<f64>> {
        Ok(Matrix6::from_row_slice(&self.dense(key, N_X, N_X)?))
    }

    pub fn at_end(&mut self) -> bool {
        while let Some((_, l)) = self.lines.peek() {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                self.lines.next();
            } else {
                return false;
            }
        }
        true
    }
}
