use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use dsas_core::sim::{check_constraints, lyapunov_trace, render_svg, write_csv, ClosedLoop, Controller, Scenario, PRESETS};
use dsas_core::synthesis::{assemble_problem, lmi_margins, synthesize, LmiModel, SynthesisResult};
use dsas_core::ts::{build_ts_model, TsModel};
use dsas_core::Config;

use crate::{suites, Failure, EXIT_CONSTRAINT, EXIT_ERROR, EXIT_OK, EXIT_VERIFY};

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_ERROR, format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_failure(path, e))
}

pub fn ts_model(cfg: &Config) -> Result<TsModel, Failure> {
    Ok(build_ts_model(&cfg.vehicle, &cfg.driver, &cfg.scheduling, &cfg.output_matrix())?)
}

pub fn load_gains(path: &Path) -> Result<SynthesisResult, Failure> {
    SynthesisResult::from_text(&read(path)?).map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", path.display())))
}

pub fn synth(cfg: &Config, out_path: &Path, report_path: Option<&Path>, out: &mut dyn Write) -> Result<i32, Failure> {
    let ts = ts_model(cfg)?;
    let spec = cfg.design_spec();
    let (res, search) = synthesize(&ts, &spec, &cfg.solver_options())?;
    write_file(out_path, res.to_text().as_bytes())?;

    let margins = lmi_margins(&LmiModel::from_ts(&ts), &spec, &res);
    let mut rep = String::new();
    let _ = writeln!(rep, "fingerprint {}", res.fingerprint);
    let _ = writeln!(rep, "objective {:?}", spec.objective);
    let _ = writeln!(rep, "tau_1 {:.6e}", res.tau_1);
    let _ = writeln!(rep, "tau_2 {:.6e}", res.tau_2);
    let _ = writeln!(rep, "gamma {:.6e}", res.gamma);
    let _ = writeln!(rep, "probes {}", search.summary());
    let min = margins.iter().map(|m| m.min_eig).fold(f64::INFINITY, f64::min);
    let _ = writeln!(rep, "min_margin {min:.6e}");
    for (i, k) in res.gains().iter().enumerate() {
        let entries: Vec<String> = k.iter().map(|v| format!("{v:.6e}")).collect();
        let _ = writeln!(rep, "K_{} [{}]", i + 1, entries.join(", "));
    }
    for m in &margins {
        let _ = writeln!(rep, "margin {:<28} {:.6e}", m.label, m.min_eig);
    }
    if let Some(p) = report_path {
        write_file(p, rep.as_bytes())?;
    }
    let _ = out.write_all(rep.as_bytes());
    let _ = writeln!(out, "wrote {}", out_path.display());
    Ok(EXIT_OK)
}

pub enum ScenarioChoice {
    Preset(String),
    File(PathBuf),
    AllPresets,
}

impl ScenarioChoice {
    pub fn from_flags(preset: Option<&str>, scenario: Option<&Path>, all: bool) -> Result<Self, Failure> {
        match (preset, scenario, all) {
            (Some(p), None, false) => Ok(Self::Preset(p.to_string())),
            (None, Some(s), false) => Ok(Self::File(s.to_path_buf())),
            (None, None, true) => Ok(Self::AllPresets),
            _ => Err(Failure::new(
                EXIT_ERROR,
                "choose exactly one of --preset, --scenario, --all-presets",
            )),
        }
    }

    fn scenarios(&self) -> Result<Vec<Scenario>, Failure> {
        match self {
            Self::Preset(p) => Ok(vec![Scenario::preset(p)?]),
            Self::File(path) => {
                Ok(vec![Scenario::from_toml(&read(path)?).map_err(|e| {
                    Failure::new(EXIT_ERROR, format!("{}: {e}", path.display()))
                })?])
            }
            Self::AllPresets => PRESETS.iter().map(|p| Ok(Scenario::preset(p)?)).collect(),
        }
    }
}

struct RunSummary {
    text: String,
    violated: bool,
}

fn run_one(cfg: &Config, cl: &ClosedLoop, sc: &Scenario, dir: &Path, plot: bool) -> Result<RunSummary, Failure> {
    let trace = cl.run(sc)?;
    let mut csv = Vec::new();
    write_csv(&trace, &mut csv)?;
    write_file(&dir.join("trace.csv"), &csv)?;
    if plot {
        write_file(&dir.join("plot.svg"), render_svg(&trace).as_bytes())?;
    }
    let cons = check_constraints(&trace, &cfg.constraint_rows());
    let decay = lyapunov_trace(&trace, cl.controller.tau_1, cfg.sim.decay_tol);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{}: {} samples, {} substeps per sample -> {}",
        sc.name,
        trace.samples.len(),
        trace.substeps,
        dir.join("trace.csv").display()
    );
    let names = ["offset", "offset", "yaw rate", "yaw rate", "heading", "heading", "steer rate", "steer rate"];
    for (k, m) in cons.maxima.iter().enumerate() {
        let name = names.get(k).copied().unwrap_or("row");
        let sign = if k % 2 == 0 { '+' } else { '-' };
        let flag = if *m > 1.0 { "  VIOLATED" } else { "" };
        let _ = writeln!(text, "  constraint {} {sign}{name:<10} max {m:.4}{flag}", k + 1);
    }
    let _ = writeln!(
        text,
        "  lyapunov: max V {:.4}, max V under disturbance {:.4}, decay {}/{} intervals ok",
        decay.max_v,
        decay.max_v_disturbed,
        decay.checked - decay.violations,
        decay.checked
    );
    if trace.clamped_samples > 0 {
        let _ = writeln!(text, "  scheduling inputs clamped in {} samples", trace.clamped_samples);
    }
    Ok(RunSummary {
        text,
        violated: !cons.passed(),
    })
}

pub fn simulate(
    cfg: &Config,
    gains: &Path,
    choice: ScenarioChoice,
    out_dir: &Path,
    plot: bool,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let res = load_gains(gains)?;
    let ts = ts_model(cfg)?;
    let controller = Controller::from_certificate(&res, &ts)?;
    let cl = ClosedLoop::new(cfg, ts, controller)?;
    let scenarios = choice.scenarios()?;
    let summaries: Vec<Result<RunSummary, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| {
                let dir = out_dir.join(&sc.name);
                let cl = &cl;
                s.spawn(move || run_one(cfg, cl, sc, &dir, plot))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Failure::new(EXIT_ERROR, "simulation thread panicked"))))
            .collect()
    });
    let mut violated = false;
    for s in summaries {
        let s = s?;
        let _ = out.write_all(s.text.as_bytes());
        violated |= s.violated;
    }
    Ok(if violated { EXIT_CONSTRAINT } else { EXIT_OK })
}

pub fn verify(cfg: &Config, gains: &Path, quick: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let res = load_gains(gains)?;
    let checks = suites::run_all(cfg, &res, !quick)?;
    let mut ok = true;
    for c in &checks {
        let _ = writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    let _ = writeln!(
        out,
        "{} of {} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    );
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}

pub fn export_sdpa(cfg: &Config, path: &Path, tau1: Option<f64>, out: &mut dyn Write) -> Result<i32, Failure> {
    let ts = ts_model(cfg)?;
    let mut spec = cfg.design_spec();
    if let Some(t) = tau1 {
        spec.tau_1 = t;
    }
    let asm = assemble_problem(&LmiModel::from_ts(&ts), &spec)?;
    write_file(path, dsas_sdp::export_sdpa(&asm.problem).as_bytes())?;
    let _ = writeln!(
        out,
        "wrote {} ({} variables, {} blocks, tau_1 = {})",
        path.display(),
        asm.problem.num_vars,
        asm.problem.blocks.len(),
        spec.tau_1
    );
    Ok(EXIT_OK)
}
