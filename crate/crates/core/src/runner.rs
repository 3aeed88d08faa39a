//! Executes one configured experiment and writes its tables and report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::cocycle::lyapunov_scan;
use crate::config::{ExperimentKind, RunConfig};
use crate::dynamics::Point;
use crate::error::{Error, Result};
use crate::halfplane::{build_triangle, harmonic_mean_check, m_function, weight_table, HalfPlanePoint, MFunctionOptions};
use crate::measure::{
    approximation_experiment, approximation_from_step, coupling_integral, estimate_m, ApproximationSettings,
};
use crate::potentials::{SamplingFunction, SupBound};
use crate::report::{fmt_num, ExperimentReport, Table};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs the experiment, writes `<prefix>_<table>.csv` and
/// `<prefix>_report.txt` into the output directory, and renders the
/// summary.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let report = execute(config)?;
    let files = write_outputs(config, &report)?;
    let summary = summary(config, &report, &files);
    Ok(RunOutput { report, files, summary })
}

/// Runs the experiment on a pool of `config.parallelism` threads without
/// touching the file system.
pub fn execute(config: &RunConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    let mut report = pool.install(|| dispatch(config))?;
    report.entries.insert(0, ("seed".into(), config.seed.into()));
    Ok(report)
}

fn function(config: &RunConfig) -> &SamplingFunction {
    config.function.as_ref().expect("validated config carries a function")
}

fn dispatch(config: &RunConfig) -> Result<ExperimentReport> {
    let stage = config.experiment.name();
    let out = match config.experiment {
        ExperimentKind::LyapunovScan => scan(config),
        ExperimentKind::MFunction => m_values(config),
        ExperimentKind::Measure => measure(config),
        ExperimentKind::CouplingSweep => coupling(config),
        ExperimentKind::Approximation => approximation(config),
        ExperimentKind::ScWeight => sc_weight(config),
        ExperimentKind::HarmonicCheck => harmonic(config),
    };
    out.map_err(|e| e.in_stage(stage))
}

fn scan(config: &RunConfig) -> Result<ExperimentReport> {
    let s = config.scan.expect("validated");
    let f = function(config);
    let t = config.transformation()?;
    let energies: Vec<Complex64> = (0..s.count)
        .map(|j| {
            let re = if s.count == 1 {
                s.e_min
            } else {
                s.e_min + (s.e_max - s.e_min) * j as f64 / (s.count - 1) as f64
            };
            Complex64::new(re, s.imag)
        })
        .collect();
    let est = lyapunov_scan(f, &energies, &t, &config.lyapunov_params())?;
    let mut r = ExperimentReport::new(config.experiment.name());
    r.set("input.count", s.count);
    r.set("input.steps", config.lyapunov.steps);
    r.set("input.orbits", config.lyapunov.orbits);
    let mut table = Table::new("scan", &["E_re", "E_im", "gamma", "raw", "std_error"]);
    for e in &est {
        table.push(vec![e.energy.re, e.energy.im, e.value, e.raw, e.std_error]);
    }
    let gmin = est.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let gmax = est.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    r.set("result.gamma_min", gmin);
    r.set("result.gamma_max", gmax);
    r.tables.push(table);
    Ok(r)
}

fn m_values(config: &RunConfig) -> Result<ExperimentReport> {
    let spec = config.m_function.clone().expect("validated");
    let f = function(config);
    let t = config.transformation()?;
    let energy = Complex64::new(spec.energy[0], spec.energy[1]);
    let opts = MFunctionOptions { max_iter: spec.max_iter, tol: spec.tol };
    let mut r = ExperimentReport::new(config.experiment.name());
    r.set("input.energy_re", energy.re);
    r.set("input.energy_im", energy.im);
    let mut table = Table::new("m_function", &["omega", "m_re", "m_im", "iterations", "last_difference", "contraction"]);
    for (j, &omega) in spec.omegas.iter().enumerate() {
        // in higher dimension every coordinate of the start is `omega`
        let w = Point::new(vec![omega; t.dim()])?;
        let v = m_function(f, energy, &w, &t, &opts).map_err(|e| e.in_stage(format!("omega={omega}")))?;
        let m = v.m.z();
        r.set(format!("result.{j}.m_re"), m.re);
        r.set(format!("result.{j}.m_im"), m.im);
        r.set(format!("result.{j}.iterations"), v.iterations);
        table.push(vec![omega, m.re, m.im, v.iterations as f64, v.last_difference, v.contraction]);
    }
    r.tables.push(table);
    Ok(r)
}

fn measure(config: &RunConfig) -> Result<ExperimentReport> {
    let f = function(config);
    let t = config.transformation()?;
    let bound = f.sup_bound();
    let grid = config.grid_spec().for_bound(bound)?;
    let m = estimate_m(f, &t, &grid, config.delta_gamma.threshold(), &config.lyapunov_params())?;
    let mut r = ExperimentReport::new(config.experiment.name());
    r.set("delta_gamma", m.threshold);
    r.set("grid.lo", grid.lo());
    r.set("grid.hi", grid.hi());
    r.set("grid.cells", grid.count());
    r.set("grid.spacing", grid.spacing());
    r.set("result.m_hat", m.value);
    r.set("result.unknown", m.unknown);
    r.set("result.median_std_error", m.median_std_error());
    let interval = 2.0 * bound.spectral_half_width();
    r.verdict(
        "within_interval",
        m.value <= interval,
        format!("M_hat = {} <= |I| = {}", fmt_num(m.value), fmt_num(interval)),
    );
    r.tables.push(m.table("nodes"));
    Ok(r)
}

fn coupling(config: &RunConfig) -> Result<ExperimentReport> {
    let c = config.coupling.expect("validated");
    let out = coupling_integral(
        function(config),
        &config.transformation()?,
        c.lambda_max,
        c.lambda_count,
        &config.grid_spec(),
        config.delta_gamma.threshold(),
        &config.lyapunov_params(),
    )?;
    Ok(out.report())
}

fn approximation(config: &RunConfig) -> Result<ExperimentReport> {
    let a = config.approximation.clone().expect("validated");
    let t = config.transformation()?;
    let settings = ApproximationSettings {
        schedule: a.schedule,
        n0: a.n0,
        grid: config.grid_spec(),
        threshold: config.delta_gamma.threshold(),
        params: config.lyapunov_params(),
        l1_resolution: a.l1_resolution,
        horizon: a.horizon,
    };
    let out = match function(config) {
        SamplingFunction::Step(s) => approximation_from_step(s, &t, &settings)?,
        f => approximation_experiment(f, &t, a.k.expect("validated"), &settings)?,
    };
    Ok(out.report())
}

fn sc_weight(config: &RunConfig) -> Result<ExperimentReport> {
    let spec = config.sc_weight.expect("validated");
    let bound = match spec.bound {
        Some(b) => SupBound(b),
        None => function(config).sup_bound(),
    };
    let tri = build_triangle(bound)?;
    let l = tri.half_width();
    let energies: Vec<f64> = (0..spec.count)
        .map(|j| -l + 2.0 * l * j as f64 / (spec.count - 1) as f64)
        .collect();
    let table = weight_table(&tri, &energies)?;
    let mut r = ExperimentReport::new(config.experiment.name());
    r.set("input.bound", bound.value());
    r.set("input.count", spec.count);
    for (j, v) in tri.vertices().iter().enumerate() {
        let image = tri.phi(tri.prevertices()[j])?;
        r.set(format!("vertex.{j}.re"), v.re);
        r.set(format!("vertex.{j}.im"), v.im);
        r.set(format!("vertex.{j}.residual"), (image - v).norm());
    }
    r.set("result.max_weight", table.max_weight());
    let mut t = Table::new("weights", &["energy", "g"]);
    for (e, g) in table.energies.iter().zip(&table.weights) {
        t.push(vec![*e, *g]);
    }
    r.tables.push(t);
    Ok(r)
}

fn harmonic(config: &RunConfig) -> Result<ExperimentReport> {
    let h = config.harmonic.expect("validated");
    let center = HalfPlanePoint::new(Complex64::new(h.center[0], h.center[1]))?;
    let rep = harmonic_mean_check(
        function(config),
        &config.transformation()?,
        center,
        h.radius,
        h.points,
        h.samples,
        config.seed,
    )?;
    let mut r = ExperimentReport::new(config.experiment.name());
    r.set("input.center_re", h.center[0]);
    r.set("input.center_im", h.center[1]);
    r.set("input.radius", h.radius);
    r.set("input.points", h.points);
    r.set("input.samples", h.samples);
    r.set("result.center_value", rep.center_value);
    r.set("result.circle_average", rep.circle_average);
    r.set("result.discrepancy", rep.discrepancy);
    let mut t = Table::new("circle", &["theta", "z_re", "z_im", "gamma"]);
    for (theta, z, g) in &rep.circle {
        t.push(vec![*theta, z.re, z.im, *g]);
    }
    r.tables.push(t);
    Ok(r)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes every table and the key-value report; each file starts with the
/// effective configuration as `# ` comment lines.
pub fn write_outputs(config: &RunConfig, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let dir = Path::new(&config.output.dir);
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let header = config.emit();
    let mut files = Vec::with_capacity(report.tables.len() + 1);
    for table in &report.tables {
        let path = dir.join(format!("{}_{}.csv", config.prefix(), table.name));
        std::fs::write(&path, table.to_csv(&header)).map_err(|e| io_error(&path, e))?;
        files.push(path);
    }
    let path = dir.join(format!("{}_report.txt", config.prefix()));
    let mut text = String::new();
    for line in header.lines() {
        let _ = writeln!(text, "{}", format!("# {line}").trim_end());
    }
    text.push_str(&report.to_kv());
    std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    files.push(path);
    Ok(files)
}

/// Human-readable summary: seed, `δ_γ`, headline numbers and verdicts.
pub fn summary(config: &RunConfig, report: &ExperimentReport, files: &[PathBuf]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", config.experiment);
    let _ = writeln!(s, "seed: {}", config.seed);
    let delta = report.get_num("delta_gamma");
    match delta {
        Some(d) => {
            let _ = writeln!(s, "delta_gamma: {}", fmt_num(d));
        }
        None => {
            let _ = writeln!(s, "delta_gamma: n/a");
        }
    }
    let d = delta.map(fmt_num).unwrap_or_else(|| "n/a".into());
    match config.experiment {
        ExperimentKind::LyapunovScan => {
            let _ = writeln!(
                s,
                "gamma_hat in [{}, {}] over {} energies",
                fmt_num(report.get_num("result.gamma_min").unwrap_or(f64::NAN)),
                fmt_num(report.get_num("result.gamma_max").unwrap_or(f64::NAN)),
                report.get_num("input.count").unwrap_or(0.0)
            );
        }
        ExperimentKind::MFunction => {
            let mut j = 0;
            while let (Some(re), Some(im)) =
                (report.get_num(&format!("result.{j}.m_re")), report.get_num(&format!("result.{j}.m_im")))
            {
                let _ = writeln!(s, "m[{j}] = {} + {}i", fmt_num(re), fmt_num(im));
                j += 1;
            }
        }
        ExperimentKind::Measure => {
            let m = report.get_num("result.m_hat").unwrap_or(f64::NAN);
            let _ = writeln!(s, "M_hat = {m:.2} (delta_gamma={d})");
        }
        ExperimentKind::CouplingSweep => {
            let v = report.get_num("result.integral").unwrap_or(f64::NAN);
            let _ = writeln!(s, "integral of M_hat over lambda = {v:.4} (delta_gamma={d})");
        }
        ExperimentKind::Approximation => {
            if let Some(m) = report.get_num("stage.f.m_hat") {
                let _ = writeln!(s, "M_hat(f) = {m:.2}");
            }
            if let Some(m) = report.get_num("stage.s.m_hat") {
                let _ = writeln!(s, "M_hat(s) = {m:.2} (delta_gamma={d})");
            }
            for (k, v) in &report.entries {
                if let (Some(stage), crate::report::Value::Num(m)) = (k.strip_suffix(".m_hat"), v) {
                    if let Some(n) = stage.strip_prefix("stage.n") {
                        let _ = writeln!(s, "M_hat(f_{n}) = {m:.2}");
                    }
                }
            }
        }
        ExperimentKind::ScWeight => {
            let _ = writeln!(
                s,
                "max g = {}",
                fmt_num(report.get_num("result.max_weight").unwrap_or(f64::NAN))
            );
        }
        ExperimentKind::HarmonicCheck => {
            let _ = writeln!(
                s,
                "mean-value discrepancy = {}",
                fmt_num(report.get_num("result.discrepancy").unwrap_or(f64::NAN))
            );
        }
    }
    if report.verdicts.is_empty() {
        let _ = writeln!(s, "verdicts: none");
    }
    for v in &report.verdicts {
        let _ = writeln!(s, "verdict {}: {} ({})", v.name, if v.passed { "pass" } else { "fail" }, v.detail);
    }
    for f in files {
        let _ = writeln!(s, "wrote {}", f.display());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn measure_summary_line() {
        let cfg = parse_config(
            "experiment = \"measure\"\ndelta_gamma = 0.05\n[lyapunov]\nsteps = 20000\norbits = 4\n\
             [grid]\ncells = 100\n[function]\nvariant = \"trig\"\nconstant = 0.0\n",
        )
        .unwrap();
        let report = execute(&cfg).unwrap();
        let text = summary(&cfg, &report, &[]);
        assert!(text.contains("M_hat = 4.00 (delta_gamma=0.05)"), "{text}");
        assert!(text.contains("seed: 0"));
        assert!(report.all_passed());
    }

    #[test]
    fn stage_failures_carry_context() {
        let cfg = parse_config(
            "experiment = \"m-function\"\n[function]\nvariant = \"trig\"\nconstant = 0.0\n\
             [m_function]\nenergy = [0.0, 1.0]\nmax_iter = 3\n",
        )
        .unwrap();
        let err = execute(&cfg).unwrap_err();
        assert!(err.to_string().starts_with("m-function: omega=0"), "{err}");
    }
}
