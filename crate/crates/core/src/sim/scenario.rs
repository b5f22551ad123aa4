//! Scripted driving scenarios and the three reference presets.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    #[default]
    Linear,
    /// Piecewise constant, right-continuous.
    Hold,
}

/// Plateau of height `amplitude` on `[start, end)` with raised-cosine edges
/// of duration `rise` inside the interval. `rise = 0` gives a rectangle,
/// `rise = (end − start)/2` a single cosine bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub rise: f64,
}

impl Pulse {
    pub fn value(&self, t: f64) -> f64 {
        if t < self.start || t >= self.end {
            return 0.0;
        }
        let edge = (t - self.start).min(self.end - t);
        if edge >= self.rise {
            self.amplitude
        } else {
            self.amplitude * 0.5 * (1.0 - (std::f64::consts::PI * edge / self.rise).cos())
        }
    }
}

/// `points` interpolated per `interp` (constant outside the breakpoints,
/// zero when empty) plus the sum of all pulses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Profile {
    pub interp: Interp,
    /// `(t, value)` pairs with strictly increasing `t`.
    pub points: Vec<[f64; 2]>,
    pub pulses: Vec<Pulse>,
}

impl Profile {
    pub fn constant(v: f64) -> Self {
        Self {
            points: vec![[0.0, v]],
            ..Self::default()
        }
    }

    pub fn hold(points: &[[f64; 2]]) -> Self {
        Self {
            interp: Interp::Hold,
            points: points.to_vec(),
            pulses: Vec::new(),
        }
    }

    pub fn with_pulse(mut self, p: Pulse) -> Self {
        self.pulses.push(p);
        self
    }

    pub fn value(&self, t: f64) -> f64 {
        self.base(t) + self.pulses.iter().map(|p| p.value(t)).sum::<f64>()
    }

    fn base(&self, t: f64) -> f64 {
        let pts = &self.points;
        let Some(first) = pts.first() else {
            return 0.0;
        };
        // index of the first breakpoint strictly after t
        let k = pts.partition_point(|p| p[0] <= t);
        if k == 0 {
            return first[1];
        }
        if k == pts.len() || self.interp == Interp::Hold {
            return pts[k - 1][1];
        }
        let ([t0, v0], [t1, v1]) = (pts[k - 1], pts[k]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Smallest and largest values the profile can take (pulses counted at
    /// full amplitude).
    fn range(&self) -> (f64, f64) {
        let (mut lo, mut hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[1]), b.max(p[1])));
        if self.points.is_empty() {
            (lo, hi) = (0.0, 0.0);
        }
        let pos: f64 = self.pulses.iter().map(|p| p.amplitude.max(0.0)).sum();
        let neg: f64 = self.pulses.iter().map(|p| p.amplitude.min(0.0)).sum();
        (lo + neg, hi + pos)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| CoreError::Config(format!("profile {name}: {msg}"));
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(bad("non-finite breakpoint".into()));
        }
        if self.points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(bad("breakpoint times must be strictly increasing".into()));
        }
        for p in &self.pulses {
            let ok = p.start.is_finite()
                && p.end > p.start
                && p.amplitude.is_finite()
                && p.rise >= 0.0
                && 2.0 * p.rise <= p.end - p.start + 1e-12;
            if !ok {
                return Err(bad(format!("invalid pulse {p:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub step: f64,
    /// Longitudinal speed (m/s); clamped to the scheduling bounds when used.
    pub v_x: Profile,
    /// Lateral wind force (N).
    pub wind: Profile,
    /// Road curvature (1/m).
    pub curvature: Profile,
    /// Driver state in `[0, 1]`.
    pub ds: Profile,
    /// Torque added to the driver model (N·m).
    pub override_torque: Profile,
    pub initial_state: [f64; 6],
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            duration: 10.0,
            step: 1e-3,
            v_x: Profile::constant(15.0),
            wind: Profile::default(),
            curvature: Profile::default(),
            ds: Profile::constant(1.0),
            override_torque: Profile::default(),
            initial_state: [0.0; 6],
        }
    }
}

pub const PRESETS: [&str; 3] = ["test1", "test2", "test3"];

/// Start and end of the test-2 phases.
pub const TEST2_PHASES: [(f64, f64); 4] = [(2.0, 18.0), (18.0, 35.0), (35.0, 40.0), (40.0, 55.0)];
/// Maneuver windows of test 3: inattentive, then attentive.
pub const TEST3_WINDOWS: [(f64, f64); 2] = [(60.0, 65.0), (65.0, 75.0)];
pub const TEST3_OVERRIDE: f64 = 6.0;

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is always representable as TOML")
    }

    /// Number of recorded samples, `duration/step + 1`.
    pub fn num_samples(&self) -> usize {
        (self.duration / self.step).round() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(CoreError::Config("scenario duration must be positive".into()));
        }
        if !(self.step > 0.0 && self.step <= 0.01) {
            return Err(CoreError::Config("scenario step must lie in (0, 0.01]".into()));
        }
        let n = (self.duration / self.step).round();
        if ((n * self.step) - self.duration).abs() > 1e-9 * self.duration {
            return Err(CoreError::Config("scenario duration must be a multiple of the step".into()));
        }
        for (name, p) in [
            ("v_x", &self.v_x),
            ("wind", &self.wind),
            ("curvature", &self.curvature),
            ("ds", &self.ds),
            ("override_torque", &self.override_torque),
        ] {
            p.validate(name)?;
        }
        let (lo, hi) = self.ds.range();
        if lo < 0.0 || hi > 1.0 {
            return Err(CoreError::Config("driver state DS must stay within [0, 1]".into()));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Config("initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "test1" => Ok(Self::test1()),
            "test2" => Ok(Self::test2()),
            "test3" => Ok(Self::test3()),
            other => Err(CoreError::Config(format!(
                "unknown preset {other:?} (expected one of {PRESETS:?})"
            ))),
        }
    }

    /// Straight road at 15 m/s, 1200 N wind on `[70, 76)` s.
    pub fn test1() -> Self {
        Self {
            name: "test1".into(),
            duration: 100.0,
            wind: Profile::default().with_pulse(Pulse {
                start: 70.0,
                end: 76.0,
                amplitude: 1200.0,
                rise: 0.0,
            }),
            ..Self::default()
        }
    }

    /// Four assistance phases on a gently curved road.
    ///
    /// Phase 1: inattentive driver (`DS = 0`), full assistance. Phase 2: a
    /// moderate driver torque gives an activity near the weighting minimum.
    /// Phase 3: a strong driver torque puts the activity near 1 (overload).
    /// Phase 4: a light touch keeps the activity low (underload).
    pub fn test2() -> Self {
        let [p1, p2, p3, p4] = TEST2_PHASES;
        let plateau = |(start, end): (f64, f64), amplitude: f64| Pulse {
            start,
            end,
            amplitude,
            rise: 0.5,
        };
        Self {
            name: "test2".into(),
            duration: 60.0,
            v_x: Profile::constant(15.0),
            curvature: Profile {
                interp: Interp::Linear,
                points: vec![
                    [0.0, 0.0],
                    [p1.0 + 4.0, 0.0],
                    [p1.0 + 10.0, 1.0 / 500.0],
                    [p2.1, 1.0 / 500.0],
                    [p3.1, 1.0 / 1000.0],
                    [p4.0 + 10.0, 0.0],
                ],
                pulses: Vec::new(),
            },
            ds: Profile::hold(&[[0.0, 0.0], [p2.0, 1.0], [p4.0, 0.5]]),
            override_torque: Profile::default()
                .with_pulse(plateau(p2, 6.2))
                .with_pulse(plateau(p3, 12.0))
                .with_pulse(plateau(p4, 1.5)),
            ..Self::default()
        }
    }

    /// Straight road, override lane-change torque over both windows; the
    /// driver is inattentive in the first and attentive in the second.
    pub fn test3() -> Self {
        let [w0, w1] = TEST3_WINDOWS;
        Self {
            name: "test3".into(),
            duration: 100.0,
            ds: Profile::hold(&[[0.0, 1.0], [w0.0, 0.0], [w1.0, 1.0]]),
            override_torque: Profile::default().with_pulse(Pulse {
                start: w0.0,
                end: w1.1,
                amplitude: TEST3_OVERRIDE,
                rise: 1.0,
            }),
            ..Self::default()
        }
    }
}
