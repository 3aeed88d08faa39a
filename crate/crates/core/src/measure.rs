//! Grid estimates of `M(f) = |{E : γ_f(E) = 0}|`, the coupling integral
//! `∫₀^Λ M(λf) dλ`, and the step-function/mollification experiment.
//!
//! `γ = 0` cannot be decided from finite orbits, so the zero set is
//! replaced by `{γ̂ < δ_γ}` on equal cells; every estimate carries its
//! threshold.

use num_complex::Complex64;

use crate::cocycle::{lyapunov_scan, LyapunovParams};
use crate::dynamics::Transformation;
use crate::error::{Error, Result};
use crate::halfplane::{build_triangle, weight_table, WeightTable};
use crate::potentials::{
    check_nonperiodic, default_n0, l1_distance, mollifier_l1_bound, mollify, step_approximate,
    NonperiodicReport, SamplingFunction, StepFunction, SupBound,
};
use crate::report::{ExperimentReport, Table};

/// Floor of the automatic threshold `max(0.05, 5·median std_error)`.
pub const AUTO_THRESHOLD_FLOOR: f64 = 0.05;

/// A grid may extend at most this far beyond `[−2−C, 2+C]`.
pub const MAX_GRID_MARGIN: f64 = 1.0;

pub const DEFAULT_NONPERIODIC_HORIZON: usize = 1000;

/// Equal cells on `[lo, hi]`, evaluated at their midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    lo: f64,
    hi: f64,
    count: usize,
}

impl EnergyGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || count == 0 {
            return Err(Error::Precondition(format!(
                "energy grid needs lo < hi and at least one cell (got [{lo}, {hi}], {count})"
            )));
        }
        Ok(EnergyGrid { lo, hi, count })
    }

    /// `[−(2+C) − margin, 2+C + margin]`.
    pub fn for_bound(bound: SupBound, margin: f64, count: usize) -> Result<Self> {
        let l = bound.spectral_half_width() + margin;
        EnergyGrid::new(-l, l, count)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// `max(0.05, 5·median std_error)` over the scanned nodes.
    Auto,
}

impl Threshold {
    fn resolve(self, std_errors: &[f64]) -> Result<f64> {
        match self {
            Threshold::Fixed(d) if d > 0.0 && d.is_finite() => Ok(d),
            Threshold::Fixed(d) => Err(Error::Precondition(format!("threshold must be > 0, got {d}"))),
            Threshold::Auto => Ok(AUTO_THRESHOLD_FLOOR.max(5.0 * median(std_errors))),
        }
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRecord {
    pub energy: f64,
    pub gamma: f64,
    pub std_error: f64,
    /// `None` when the node's estimate was not finite.
    pub below: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    pub threshold: f64,
    pub grid: EnergyGrid,
    pub params: LyapunovParams,
    pub nodes: Vec<NodeRecord>,
    /// Nodes excluded because their estimate failed.
    pub unknown: usize,
}

impl MeasureEstimate {
    fn from_gammas(grid: EnergyGrid, params: LyapunovParams, gammas: &[(f64, f64)], threshold: f64) -> Self {
        let mut nodes: Vec<NodeRecord> = grid
            .nodes()
            .into_iter()
            .zip(gammas)
            .map(|(energy, &(gamma, std_error))| NodeRecord { energy, gamma, std_error, below: None })
            .collect();
        let mut est = MeasureEstimate { value: 0.0, threshold, grid, params, nodes: Vec::new(), unknown: 0 };
        for n in nodes.iter_mut() {
            n.below = n.gamma.is_finite().then_some(n.gamma < threshold);
        }
        est.nodes = nodes;
        est.unknown = est.nodes.iter().filter(|n| n.below.is_none()).count();
        est.value = est.recount(threshold);
        est
    }

    /// Measure of `{γ̂ < threshold}` on the same per-node table.
    pub fn recount(&self, threshold: f64) -> f64 {
        let hits = self
            .nodes
            .iter()
            .filter(|n| n.gamma.is_finite() && n.gamma < threshold)
            .count();
        hits as f64 * self.grid.spacing()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.gamma).collect()
    }

    pub fn median_std_error(&self) -> f64 {
        median(&self.nodes.iter().map(|n| n.std_error).collect::<Vec<_>>())
    }

    pub fn table(&self, name: &str) -> Table {
        let mut t = Table::new(name, &["E", "gamma", "std_error", "below"]);
        for n in &self.nodes {
            let below = match n.below {
                Some(true) => 1.0,
                Some(false) => 0.0,
                None => f64::NAN,
            };
            t.push(vec![n.energy, n.gamma, n.std_error, below]);
        }
        t
    }
}

fn check_grid(f: &SamplingFunction, grid: &EnergyGrid) -> Result<()> {
    let l = f.sup_bound().spectral_half_width() + MAX_GRID_MARGIN;
    if grid.lo < -l - 1e-12 || grid.hi > l + 1e-12 {
        return Err(Error::Precondition(format!(
            "energy grid [{}, {}] extends beyond [-{l}, {l}]",
            grid.lo, grid.hi
        )));
    }
    Ok(())
}

fn scan_gammas(
    f: &SamplingFunction,
    t: &Transformation,
    grid: &EnergyGrid,
    params: &LyapunovParams,
) -> Result<Vec<(f64, f64)>> {
    check_grid(f, grid)?;
    let energies: Vec<Complex64> = grid.nodes().into_iter().map(|e| Complex64::new(e, 0.0)).collect();
    Ok(lyapunov_scan(f, &energies, t, params)?
        .into_iter()
        .map(|e| (e.value, e.std_error))
        .collect())
}

/// `M̂(f) = spacing · #{nodes with γ̂ < δ_γ}`.
pub fn estimate_m(
    f: &SamplingFunction,
    t: &Transformation,
    grid: &EnergyGrid,
    threshold: Threshold,
    params: &LyapunovParams,
) -> Result<MeasureEstimate> {
    let gammas = scan_gammas(f, t, grid, params)?;
    let ses: Vec<f64> = gammas.iter().map(|g| g.1).collect();
    let delta = threshold.resolve(&ses)?;
    Ok(MeasureEstimate::from_gammas(*grid, *params, &gammas, delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    Min,
    Max,
}

/// Riemann sum of `min{γ_new − γ_ref, 0}·g` (or `max{…}`) over the grid.
pub fn weighted_gap_integral(
    grid: &EnergyGrid,
    gamma_new: &[f64],
    gamma_ref: &[f64],
    weights: &[f64],
    mode: GapMode,
) -> Result<f64> {
    let n = grid.count();
    if gamma_new.len() != n || gamma_ref.len() != n || weights.len() != n {
        return Err(Error::Misaligned(format!(
            "grid has {n} nodes, tables have {}, {} and {} entries",
            gamma_new.len(),
            gamma_ref.len(),
            weights.len()
        )));
    }
    let sum: f64 = gamma_new
        .iter()
        .zip(gamma_ref)
        .zip(weights)
        .map(|((a, b), g)| {
            let d = a - b;
            let clipped = match mode {
                GapMode::Min => d.min(0.0),
                GapMode::Max => d.max(0.0),
            };
            clipped * g
        })
        .sum();
    Ok(sum * grid.spacing())
}

/// Energy-grid shape reused across couplings or stages: `cells` equal cells
/// on `[−(2+C) − margin, 2+C + margin]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub cells: usize,
    pub margin: f64,
}

impl GridSpec {
    pub fn for_bound(&self, bound: SupBound) -> Result<EnergyGrid> {
        EnergyGrid::for_bound(bound, self.margin, self.cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOutcome {
    pub lambda_max: f64,
    pub lambdas: Vec<f64>,
    pub weights: Vec<f64>,
    pub measures: Vec<MeasureEstimate>,
    pub integral: f64,
}

/// `λ` nodes and trapezoidal weights on `[0, Λ]`; the `λ = 0` node is
/// moved to `Λ/(2·count)` and keeps its endpoint weight.
pub fn coupling_nodes(lambda_max: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::Precondition(format!("Λ must be > 0, got {lambda_max}")));
    }
    if count < 2 {
        return Err(Error::Precondition(format!("need at least 2 coupling nodes, got {count}")));
    }
    let h = lambda_max / (count - 1) as f64;
    let lambdas = (0..count)
        .map(|j| if j == 0 { lambda_max / (2.0 * count as f64) } else { j as f64 * h })
        .collect();
    let weights = (0..count)
        .map(|j| if j == 0 || j == count - 1 { 0.5 * h } else { h })
        .collect();
    Ok((lambdas, weights))
}

/// Trapezoidal estimate of `∫₀^Λ M(λf) dλ`; each `λ` uses a grid fitted to
/// `C(λf) = λC`.
pub fn coupling_integral(
    f: &SamplingFunction,
    t: &Transformation,
    lambda_max: f64,
    lambda_count: usize,
    grid: &GridSpec,
    threshold: Threshold,
    params: &LyapunovParams,
) -> Result<CouplingOutcome> {
    let (lambdas, weights) = coupling_nodes(lambda_max, lambda_count)?;
    let mut measures = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let g = f.clone().scaled(lambda);
        let egrid = grid.for_bound(g.sup_bound())?;
        let m = estimate_m(&g, t, &egrid, threshold, params)
            .map_err(|e| e.in_stage(format!("lambda={lambda}")))?;
        measures.push(m);
    }
    let integral = measures.iter().zip(&weights).map(|(m, w)| m.value * w).sum();
    Ok(CouplingOutcome { lambda_max, lambdas, weights, measures, integral })
}

impl CouplingOutcome {
    pub fn report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new("coupling-sweep");
        r.set("input.lambda_max", self.lambda_max);
        r.set("input.lambda_count", self.lambdas.len());
        let mut t = Table::new("lambda", &["lambda", "weight", "M_hat", "delta_gamma", "grid_lo", "grid_hi"]);
        for (j, ((l, w), m)) in self.lambdas.iter().zip(&self.weights).zip(&self.measures).enumerate() {
            r.set(format!("stage.{j}.lambda"), *l);
            r.set(format!("stage.{j}.m_hat"), m.value);
            r.set(format!("stage.{j}.unknown"), m.unknown);
            t.push(vec![*l, *w, m.value, m.threshold, m.grid.lo(), m.grid.hi()]);
        }
        r.set("result.integral", self.integral);
        r.tables.push(t);
        for (j, m) in self.measures.iter().enumerate() {
            r.tables.push(m.table(&format!("stage_{j:02}")));
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationStage {
    pub n: u32,
    pub n0: u32,
    pub half_width: f64,
    pub l1: f64,
    pub l1_bound: f64,
    pub measure: MeasureEstimate,
    /// `Σ min{γ̂_{f_n} − γ̂_s, 0}·g·ΔE`.
    pub gap_min: f64,
    /// `Σ max{γ̂_{f_n} − γ̂_s, 0}·g·ΔE`.
    pub gap_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationOutcome {
    pub step: StepFunction,
    /// `‖f − s‖_∞` bound when `s` was built from a continuous `f`.
    pub step_error: Option<f64>,
    pub source_measure: Option<MeasureEstimate>,
    pub nonperiodic: NonperiodicReport,
    pub grid: EnergyGrid,
    pub step_measure: MeasureEstimate,
    pub weights: WeightTable,
    pub stages: Vec<ApproximationStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationSettings {
    pub schedule: Vec<u32>,
    /// Defaults to the smallest legal value for the step function.
    pub n0: Option<u32>,
    pub grid: GridSpec,
    pub threshold: Threshold,
    pub params: LyapunovParams,
    pub l1_resolution: usize,
    pub horizon: usize,
}

/// Builds `s = step_approximate(f, k)` and runs the mollification sequence
/// on it; `M̂(f)` is reported alongside.
pub fn approximation_experiment(
    f: &SamplingFunction,
    t: &Transformation,
    k: usize,
    settings: &ApproximationSettings,
) -> Result<ApproximationOutcome> {
    let (s, err) = step_approximate(f, k).map_err(|e| e.in_stage("step approximation"))?;
    let mut out = approximation_from_step(&s, t, settings)?;
    out.step_error = Some(err);
    let m = estimate_m(f, t, &out.grid, Threshold::Fixed(out.step_measure.threshold), &settings.params)
        .map_err(|e| e.in_stage("source function"))?;
    out.source_measure = Some(m);
    Ok(out)
}

/// Mollifies `s` at every `n` of the schedule and records `‖s − f_n‖₁`,
/// `M̂(f_n)` and the weighted gap integrals against `γ̂_s`.
pub fn approximation_from_step(
    s: &StepFunction,
    t: &Transformation,
    settings: &ApproximationSettings,
) -> Result<ApproximationOutcome> {
    if settings.schedule.is_empty() || settings.schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("mollifier schedule must be non-empty and increasing".into()));
    }
    let nonperiodic = check_nonperiodic(s, t, settings.horizon)?;
    let sf = SamplingFunction::Step(s.clone());
    let bound = sf.sup_bound();
    let grid = settings.grid.for_bound(bound)?;
    let step_measure = estimate_m(&sf, t, &grid, settings.threshold, &settings.params)
        .map_err(|e| e.in_stage("step function"))?;
    let delta = Threshold::Fixed(step_measure.threshold);

    let tri = build_triangle(bound)?;
    let weights = weight_table(&tri, &grid.nodes())?;
    let ref_gammas = step_measure.gammas();

    let n0 = settings.n0.unwrap_or_else(|| default_n0(s));
    let mut stages = Vec::with_capacity(settings.schedule.len());
    for &n in &settings.schedule {
        let stage = format!("n={n}");
        let m = mollify(s, n, n0).map_err(|e| e.in_stage(stage.clone()))?;
        let l1_bound = mollifier_l1_bound(&m);
        let half_width = m.half_width();
        let mf = SamplingFunction::Mollified(m);
        let l1 = l1_distance(&sf, &mf, settings.l1_resolution)?;
        let measure = estimate_m(&mf, t, &grid, delta, &settings.params).map_err(|e| e.in_stage(stage))?;
        let g = measure.gammas();
        let gap_min = weighted_gap_integral(&grid, &g, &ref_gammas, &weights.weights, GapMode::Min)?;
        let gap_max = weighted_gap_integral(&grid, &g, &ref_gammas, &weights.weights, GapMode::Max)?;
        stages.push(ApproximationStage { n, n0, half_width, l1, l1_bound, measure, gap_min, gap_max });
    }
    Ok(ApproximationOutcome {
        step: s.clone(),
        step_error: None,
        source_measure: None,
        nonperiodic,
        grid,
        step_measure,
        weights,
        stages,
    })
}

impl ApproximationOutcome {
    /// `2 + C` for the step function.
    fn step_measure_bound_half_width(&self) -> f64 {
        SamplingFunction::Step(self.step.clone()).sup_bound().spectral_half_width()
    }

    pub fn l1_strictly_decreasing(&self) -> bool {
        self.stages.windows(2).all(|w| w[1].l1 < w[0].l1)
    }

    pub fn l1_within_bounds(&self) -> bool {
        self.stages.iter().all(|s| s.l1 <= s.l1_bound)
    }

    /// `M̂(f_last) <= M̂(f_first) + 2·spacing`.
    pub fn measure_trend_holds(&self) -> bool {
        match (self.stages.first(), self.stages.last()) {
            (Some(a), Some(b)) => b.measure.value <= a.measure.value + 2.0 * self.grid.spacing(),
            _ => false,
        }
    }

    pub fn report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new("approximation");
        r.set("input.arcs", self.step.arc_count());
        r.set("input.distinct_values", self.step.distinct_values());
        if let Some(e) = self.step_error {
            r.set("input.step_sup_error", e);
        }
        r.set("grid.lo", self.grid.lo());
        r.set("grid.hi", self.grid.hi());
        r.set("grid.cells", self.grid.count());
        r.set("grid.spacing", self.grid.spacing());
        r.set("delta_gamma", self.step_measure.threshold);
        r.set("nonperiodic.horizon", self.nonperiodic.horizon);
        r.set("nonperiodic.samples", self.nonperiodic.samples);
        r.set(
            "nonperiodic.smallest_period",
            self.nonperiodic.smallest_period.map_or(0, |p| p),
        );
        if let Some(m) = &self.source_measure {
            r.set("stage.f.m_hat", m.value);
        }
        r.set("stage.s.m_hat", self.step_measure.value);
        r.set("stage.s.unknown", self.step_measure.unknown);
        let mut summary = Table::new("stages", &["n", "n0", "half_width", "l1", "l1_bound", "M_hat", "gap_min", "gap_max"]);
        for st in &self.stages {
            let key = format!("stage.n{}", st.n);
            r.set(format!("{key}.n0"), st.n0);
            r.set(format!("{key}.l1"), st.l1);
            r.set(format!("{key}.l1_bound"), st.l1_bound);
            r.set(format!("{key}.m_hat"), st.measure.value);
            r.set(format!("{key}.gap_min"), st.gap_min);
            r.set(format!("{key}.gap_max"), st.gap_max);
            summary.push(vec![
                st.n as f64,
                st.n0 as f64,
                st.half_width,
                st.l1,
                st.l1_bound,
                st.measure.value,
                st.gap_min,
                st.gap_max,
            ]);
        }
        r.tables.push(summary);
        if let Some(m) = &self.source_measure {
            r.tables.push(m.table("stage_f"));
        }
        r.tables.push(self.step_measure.table("stage_s"));
        for st in &self.stages {
            r.tables.push(st.measure.table(&format!("stage_n{}", st.n)));
        }
        let mut w = Table::new("weights", &["energy", "g"]);
        for (e, g) in self.weights.energies.iter().zip(&self.weights.weights) {
            w.push(vec![*e, *g]);
        }
        r.tables.push(w);

        r.verdict(
            "nonperiodic",
            self.nonperiodic.smallest_period.is_none(),
            format!("no period <= {} at {} starts", self.nonperiodic.horizon, self.nonperiodic.samples),
        );
        let interval = 2.0 * self.step_measure_bound_half_width();
        r.verdict(
            "step_measure_bounded",
            self.step_measure.value <= 0.5 * interval,
            format!("M_hat(s) = {} <= |I|/2 = {}", self.step_measure.value, 0.5 * interval),
        );
        r.verdict("l1_decreasing", self.l1_strictly_decreasing(), "‖s − f_n‖₁ strictly decreasing in n");
        r.verdict("l1_within_bound", self.l1_within_bounds(), "‖s − f_n‖₁ <= (#breakpoints)·2h·range");
        let (first, last) = (self.stages.first(), self.stages.last());
        r.verdict(
            "measure_trend",
            self.measure_trend_holds(),
            format!(
                "M_hat(last) = {} vs M_hat(first) + 2·spacing = {}",
                last.map_or(f64::NAN, |s| s.measure.value),
                first.map_or(f64::NAN, |s| s.measure.value + 2.0 * self.grid.spacing())
            ),
        );
        r
    }
}
