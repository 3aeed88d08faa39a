//! Sampling functions `f : Ω → R` defining the potentials `V_ω(n) = f(Tⁿω)`.
//!
//! Four variants are supported: separable trigonometric polynomials,
//! right-continuous step functions on the circle, tent-kernel
//! mollifications of step functions, and scalar multiples of any of these.
//! Every variant carries an analytic sup bound.
//!
//! The plain-text description of a function is a TOML table keyed by
//! `variant`; see [`SamplingFunction::to_text`].

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::dynamics::{circle_distance, wrap_unit, Point, Transformation, MAX_DIMENSION};
use crate::error::{Error, Result};

/// Upper bound on the size of the value perturbation applied by
/// [`step_approximate`].
pub const PERTURBATION_SCALE: f64 = 5e-10;

/// Number of starting points sampled by [`check_nonperiodic`].
pub const NONPERIODIC_SAMPLES: usize = 16;

/// A candidate period `p` must hold over `NONPERIODIC_WINDOW · horizon`
/// steps.
pub const NONPERIODIC_WINDOW: usize = 8;

/// Certified bound `C` with `|f(ω)| <= C` for all `ω`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SupBound(pub f64);

impl SupBound {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Half-width `2 + C` of the interval outside which every Lyapunov
    /// exponent is positive.
    pub fn spectral_half_width(self) -> f64 {
        2.0 + self.0
    }
}

/// `f(ω) = c + Σ_i Σ_k (a_{ik} cos 2πkω_i + b_{ik} sin 2πkω_i)`, `k = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigPolyRaw", into = "TrigPolyRaw")]
pub struct TrigPoly {
    constant: f64,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrigPolyRaw {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    cos: Vec<Vec<f64>>,
    #[serde(default)]
    sin: Vec<Vec<f64>>,
    #[serde(default)]
    dims: Option<usize>,
}

impl TryFrom<TrigPolyRaw> for TrigPoly {
    type Error = Error;
    fn try_from(raw: TrigPolyRaw) -> Result<Self> {
        let dims = raw.dims.unwrap_or(raw.cos.len().max(raw.sin.len()).max(1));
        let mut cos = raw.cos;
        let mut sin = raw.sin;
        if cos.len() > dims || sin.len() > dims {
            return Err(Error::InvalidFunction(format!(
                "coefficient lists exceed the declared dimension {dims}"
            )));
        }
        cos.resize(dims, Vec::new());
        sin.resize(dims, Vec::new());
        TrigPoly::new(raw.constant, cos, sin)
    }
}

impl From<TrigPoly> for TrigPolyRaw {
    fn from(t: TrigPoly) -> Self {
        TrigPolyRaw {
            constant: t.constant,
            dims: Some(t.cos.len()),
            cos: t.cos,
            sin: t.sin,
        }
    }
}

impl TrigPoly {
    pub fn new(constant: f64, cos: Vec<Vec<f64>>, sin: Vec<Vec<f64>>) -> Result<Self> {
        let dims = cos.len();
        if dims == 0 || dims > MAX_DIMENSION || sin.len() != dims {
            return Err(Error::InvalidFunction(format!(
                "trigonometric polynomial needs 1..={MAX_DIMENSION} dimensions with matching \
                 cos/sin lists (got {} and {})",
                cos.len(),
                sin.len()
            )));
        }
        let all = std::iter::once(&constant).chain(cos.iter().flatten()).chain(sin.iter().flatten());
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFunction("non-finite coefficient".into()));
        }
        Ok(TrigPoly { constant, cos, sin })
    }

    pub fn constant_fn(c: f64, dims: usize) -> Result<Self> {
        TrigPoly::new(c, vec![Vec::new(); dims], vec![Vec::new(); dims])
    }

    /// `amplitude · cos(2πθ)` on the circle.
    pub fn cosine(amplitude: f64) -> Result<Self> {
        TrigPoly::new(0.0, vec![vec![amplitude]], vec![Vec::new()])
    }

    pub fn dims(&self) -> usize {
        self.cos.len()
    }

    fn eval_coords(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (i, &xi) in x.iter().enumerate() {
            for (k, &a) in self.cos[i].iter().enumerate() {
                if a != 0.0 {
                    acc += a * (2.0 * PI * (k + 1) as f64 * xi).cos();
                }
            }
            for (k, &b) in self.sin[i].iter().enumerate() {
                if b != 0.0 {
                    acc += b * (2.0 * PI * (k + 1) as f64 * xi).sin();
                }
            }
        }
        acc
    }

    fn sup(&self) -> f64 {
        self.constant.abs() + self.cos.iter().chain(&self.sin).flatten().map(|c| c.abs()).sum::<f64>()
    }

    /// Lipschitz constant with respect to the max-metric on the torus.
    fn lipschitz(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .flat_map(|row| row.iter().enumerate())
            .map(|(k, c)| 2.0 * PI * (k + 1) as f64 * c.abs())
            .sum()
    }
}

/// Piecewise-constant function on the circle. Arc `j` is
/// `[breakpoints[j], breakpoints[j+1])`, the last arc wraps around to
/// `breakpoints[0] + 1`. Right-continuous at breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRaw", into = "StepRaw")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRaw {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepRaw> for StepFunction {
    type Error = Error;
    fn try_from(raw: StepRaw) -> Result<Self> {
        StepFunction::new(raw.breakpoints, raw.values)
    }
}

impl From<StepFunction> for StepRaw {
    fn from(s: StepFunction) -> Self {
        StepRaw {
            breakpoints: s.breakpoints,
            values: s.values,
        }
    }
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidFunction(format!(
                "step function needs one value per breakpoint (got {} breakpoints, {} values)",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(Error::InvalidFunction("breakpoints must lie in [0, 1)".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFunction("breakpoints must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite step value".into()));
        }
        Ok(StepFunction { breakpoints, values })
    }

    /// `k` equal arcs starting at 0.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let k = values.len();
        let breakpoints = (0..k).map(|j| j as f64 / k as f64).collect();
        StepFunction::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn arc_count(&self) -> usize {
        self.breakpoints.len()
    }

    /// Index of the arc containing `theta` (already in `[0,1)`).
    pub fn arc_index(&self, theta: f64) -> usize {
        let j = self.breakpoints.partition_point(|&b| b <= theta);
        if j == 0 {
            self.breakpoints.len() - 1
        } else {
            j - 1
        }
    }

    pub fn eval_theta(&self, theta: f64) -> f64 {
        self.values[self.arc_index(theta)]
    }

    pub fn arc_lengths(&self) -> Vec<f64> {
        let k = self.breakpoints.len();
        (0..k)
            .map(|j| {
                if j + 1 < k {
                    self.breakpoints[j + 1] - self.breakpoints[j]
                } else {
                    self.breakpoints[0] + 1.0 - self.breakpoints[j]
                }
            })
            .collect()
    }

    pub fn min_arc(&self) -> f64 {
        self.arc_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn distinct_values(&self) -> usize {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    }

    /// Adds `PERTURBATION_SCALE · frac((j+1)√2)` to the value of arc `j`,
    /// making all values pairwise distinct.
    pub fn perturbed(&self) -> StepFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v + value_offset(j))
            .collect();
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            values,
        }
    }
}

fn value_offset(j: usize) -> f64 {
    PERTURBATION_SCALE * ((j + 1) as f64 * SQRT_2).fract()
}

/// Tent-kernel average `f_n(ω) = C_n(ω)⁻¹ ∫ c_n(ω,ω') s(ω') dω'` with
/// `c_n(ω,ω') = max{h − dist(ω,ω'), 0}` and `h = (n + n₀)⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MollifiedRaw", into = "MollifiedRaw")]
pub struct Mollified {
    step: StepFunction,
    n: u32,
    n0: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MollifiedRaw {
    n: u32,
    n0: u32,
    step: StepFunction,
}

impl TryFrom<MollifiedRaw> for Mollified {
    type Error = Error;
    fn try_from(raw: MollifiedRaw) -> Result<Self> {
        mollify(&raw.step, raw.n, raw.n0)
    }
}

impl From<Mollified> for MollifiedRaw {
    fn from(m: Mollified) -> Self {
        MollifiedRaw {
            n: m.n,
            n0: m.n0,
            step: m.step,
        }
    }
}

impl Mollified {
    pub fn step(&self) -> &StepFunction {
        &self.step
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn half_width(&self) -> f64 {
        1.0 / (self.n as f64 + self.n0 as f64)
    }

    pub fn eval_theta(&self, theta: f64) -> f64 {
        let h = self.half_width();
        let s = &self.step;
        let j = s.arc_index(theta);
        let k = s.arc_count();
        // Only the two breakpoints bounding the current arc can be within h.
        for b_idx in [j, (j + 1) % k] {
            let b = s.breakpoints[b_idx];
            // signed offset of the breakpoint relative to theta, in (-1/2, 1/2]
            let mut t = b - theta;
            if t > 0.5 {
                t -= 1.0;
            } else if t <= -0.5 {
                t += 1.0;
            }
            if t.abs() < h {
                let left = s.values[(b_idx + k - 1) % k];
                let right = s.values[b_idx];
                let mass_left = tent_mass_below(t, h) / (h * h);
                return right + (left - right) * mass_left;
            }
        }
        s.values[j]
    }

    /// `max |jump| / h`.
    fn lipschitz(&self) -> f64 {
        let s = &self.step;
        let k = s.arc_count();
        let max_jump = (0..k)
            .map(|j| (s.values[j] - s.values[(j + k - 1) % k]).abs())
            .fold(0.0, f64::max);
        max_jump / self.half_width()
    }
}

/// `∫_{-h}^{t} (h − |x|) dx` for `t ∈ [-h, h]`.
fn tent_mass_below(t: f64, h: f64) -> f64 {
    if t <= 0.0 {
        0.5 * (h + t) * (h + t)
    } else {
        h * h - 0.5 * (h - t) * (h - t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum SamplingFunction {
    Trig(TrigPoly),
    Step(StepFunction),
    Mollified(Mollified),
    Scaled {
        factor: f64,
        inner: Box<SamplingFunction>,
    },
}

impl From<TrigPoly> for SamplingFunction {
    fn from(t: TrigPoly) -> Self {
        SamplingFunction::Trig(t)
    }
}

impl From<StepFunction> for SamplingFunction {
    fn from(s: StepFunction) -> Self {
        SamplingFunction::Step(s)
    }
}

impl From<Mollified> for SamplingFunction {
    fn from(m: Mollified) -> Self {
        SamplingFunction::Mollified(m)
    }
}

impl SamplingFunction {
    /// `f ≡ c` on the circle.
    pub fn constant(c: f64) -> Self {
        SamplingFunction::Trig(TrigPoly::constant_fn(c, 1).expect("finite constant"))
    }

    /// `amplitude · cos(2πθ)` on the circle.
    pub fn cosine(amplitude: f64) -> Self {
        SamplingFunction::Trig(TrigPoly::cosine(amplitude).expect("finite amplitude"))
    }

    pub fn scaled(self, factor: f64) -> Self {
        SamplingFunction::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            SamplingFunction::Trig(t) => t.dims(),
            SamplingFunction::Step(_) | SamplingFunction::Mollified(_) => 1,
            SamplingFunction::Scaled { inner, .. } => inner.dims(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            SamplingFunction::Trig(_) | SamplingFunction::Mollified(_) => true,
            SamplingFunction::Step(s) => s.distinct_values() == 1,
            SamplingFunction::Scaled { factor, inner } => *factor == 0.0 || inner.is_continuous(),
        }
    }

    pub fn eval(&self, w: &Point) -> Result<f64> {
        if w.dim() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: w.dim(),
            });
        }
        Ok(self.eval_coords(w.coords()))
    }

    /// Evaluation on raw coordinates in `[0,1)`; the caller guarantees the
    /// dimension.
    #[inline]
    pub(crate) fn eval_coords(&self, x: &[f64]) -> f64 {
        match self {
            SamplingFunction::Trig(t) => t.eval_coords(x),
            SamplingFunction::Step(s) => s.eval_theta(x[0]),
            SamplingFunction::Mollified(m) => m.eval_theta(x[0]),
            SamplingFunction::Scaled { factor, inner } => factor * inner.eval_coords(x),
        }
    }

    pub fn sup_bound(&self) -> SupBound {
        SupBound(match self {
            SamplingFunction::Trig(t) => t.sup(),
            SamplingFunction::Step(s) => s.values.iter().map(|v| v.abs()).fold(0.0, f64::max),
            SamplingFunction::Mollified(m) => {
                m.step.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
            }
            SamplingFunction::Scaled { factor, inner } => factor.abs() * inner.sup_bound().0,
        })
    }

    /// Lipschitz constant, `None` for discontinuous functions.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            SamplingFunction::Trig(t) => Some(t.lipschitz()),
            SamplingFunction::Step(s) => (s.distinct_values() == 1).then_some(0.0),
            SamplingFunction::Mollified(m) => Some(m.lipschitz()),
            SamplingFunction::Scaled { factor, inner } => {
                if *factor == 0.0 {
                    Some(0.0)
                } else {
                    inner.lipschitz().map(|l| factor.abs() * l)
                }
            }
        }
    }

    /// Points in `[0,1)` where the function is non-smooth (1-d only).
    fn kinks(&self) -> Vec<f64> {
        match self {
            SamplingFunction::Trig(_) => Vec::new(),
            SamplingFunction::Step(s) => s.breakpoints.clone(),
            SamplingFunction::Mollified(m) => {
                let h = m.half_width();
                m.step
                    .breakpoints
                    .iter()
                    .flat_map(|&b| [wrap_unit(b - h), b, wrap_unit(b + h)])
                    .collect()
            }
            SamplingFunction::Scaled { inner, .. } => inner.kinks(),
        }
    }

    /// TOML description keyed by `variant`.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("sampling functions always serialize")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let f: SamplingFunction =
            toml::from_str(text).map_err(|e| Error::InvalidFunction(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    /// Structural checks not expressible in the serde layer.
    pub fn validate(&self) -> Result<()> {
        match self {
            SamplingFunction::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return Err(Error::InvalidFunction("non-finite scale factor".into()));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Piecewise-constant approximation on `k` equal arcs, sampled at arc
/// midpoints and perturbed by offsets below [`PERTURBATION_SCALE`].
///
/// Returns the step function and a certified bound on `‖f − s‖_∞`.
pub fn step_approximate(f: &SamplingFunction, k: usize) -> Result<(StepFunction, f64)> {
    if k < 2 {
        return Err(Error::Precondition(format!("step approximation needs k >= 2, got {k}")));
    }
    if f.dims() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: f.dims(),
        });
    }
    let lip = f.lipschitz().ok_or_else(|| {
        Error::Precondition("step approximation requires a continuous function".into())
    })?;
    let values = (0..k)
        .map(|j| f.eval_coords(&[(j as f64 + 0.5) / k as f64]) + value_offset(j))
        .collect();
    let s = StepFunction::uniform(values)?;
    Ok((s, lip / (2.0 * k as f64) + PERTURBATION_SCALE))
}

/// Smallest `n₀ >= 1` with `(1 + n₀)⁻¹ < min_arc / 2`.
pub fn default_n0(s: &StepFunction) -> u32 {
    let half = s.min_arc() / 2.0;
    let mut n0 = 1u32;
    while 1.0 / (1.0 + n0 as f64) >= half {
        n0 += 1;
    }
    n0
}

pub fn mollify(s: &StepFunction, n: u32, n0: u32) -> Result<Mollified> {
    if n == 0 || n0 == 0 {
        return Err(Error::Precondition("mollifier needs n >= 1 and n0 >= 1".into()));
    }
    let h = 1.0 / (n as f64 + n0 as f64);
    let min_arc = s.min_arc();
    if h >= min_arc / 2.0 {
        return Err(Error::KernelTooWide {
            half_width: h,
            min_arc,
        });
    }
    Ok(Mollified {
        step: s.clone(),
        n,
        n0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonperiodicReport {
    pub horizon: usize,
    pub samples: usize,
    /// Smallest `p <= horizon` for which some sampled symbol sequence is
    /// `p`-periodic over the scanned window.
    pub smallest_period: Option<usize>,
    /// Number of sampled starts exhibiting `smallest_period`.
    pub periodic_starts: usize,
}

/// Scans `s(Tⁿω)` for periods `p <= horizon` at [`NONPERIODIC_SAMPLES`]
/// deterministic starting points, comparing values exactly over a window of
/// [`NONPERIODIC_WINDOW`]` · horizon` steps.
pub fn check_nonperiodic(
    s: &StepFunction,
    t: &Transformation,
    horizon: usize,
) -> Result<NonperiodicReport> {
    if horizon < 2 {
        return Err(Error::Precondition(format!("horizon must be >= 2, got {horizon}")));
    }
    if t.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: t.dim(),
        });
    }
    let mut best: Option<usize> = None;
    let mut count = 0;
    for j in 0..NONPERIODIC_SAMPLES {
        let mut x = [((j + 1) as f64 * 3f64.sqrt()).fract()];
        let window = NONPERIODIC_WINDOW * horizon;
        let symbols: Vec<u64> = (0..window + horizon)
            .map(|_| {
                let v = s.eval_theta(x[0]).to_bits();
                t.step_forward(&mut x);
                v
            })
            .collect();
        let period = (1..=horizon).find(|&p| (0..window).all(|i| symbols[i] == symbols[i + p]));
        match (period, best) {
            (Some(p), Some(b)) if p == b => count += 1,
            (Some(p), Some(b)) if p < b => {
                best = Some(p);
                count = 1;
            }
            (Some(p), None) => {
                best = Some(p);
                count = 1;
            }
            _ => {}
        }
    }
    Ok(NonperiodicReport {
        horizon,
        samples: NONPERIODIC_SAMPLES,
        smallest_period: best,
        periodic_starts: count,
    })
}

/// Composite-midpoint quadrature of `|f − g|` over the torus. In one
/// dimension the non-smooth points of both functions are inserted as panel
/// boundaries; in higher dimension a tensor grid of `resolution^d` cells is
/// used.
pub fn l1_distance(f: &SamplingFunction, g: &SamplingFunction, resolution: usize) -> Result<f64> {
    if resolution < 100 {
        return Err(Error::Precondition(format!(
            "l1 resolution must be >= 100, got {resolution}"
        )));
    }
    if f.dims() != g.dims() {
        return Err(Error::DimensionMismatch {
            expected: f.dims(),
            actual: g.dims(),
        });
    }
    let dims = f.dims();
    if dims == 1 {
        let mut edges: Vec<f64> = (0..=resolution).map(|j| j as f64 / resolution as f64).collect();
        edges.extend(f.kinks());
        edges.extend(g.kinks());
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let total = edges
            .windows(2)
            .map(|w| {
                let mid = [0.5 * (w[0] + w[1])];
                (w[1] - w[0]) * (f.eval_coords(&mid) - g.eval_coords(&mid)).abs()
            })
            .sum();
        return Ok(total);
    }
    let cells = resolution.pow(dims as u32);
    let mut x = vec![0.0; dims];
    let mut total = 0.0;
    for idx in 0..cells {
        let mut r = idx;
        for c in x.iter_mut() {
            *c = ((r % resolution) as f64 + 0.5) / resolution as f64;
            r /= resolution;
        }
        total += (f.eval_coords(&x) - g.eval_coords(&x)).abs();
    }
    Ok(total / cells as f64)
}

/// `(#breakpoints) · 2h · (max s − min s)`.
pub fn mollifier_l1_bound(m: &Mollified) -> f64 {
    let s = m.step();
    s.arc_count() as f64 * 2.0 * m.half_width() * (s.max_value() - s.min_value())
}

/// Distance from `theta` to the nearest breakpoint of `s`.
pub fn breakpoint_distance(s: &StepFunction, theta: f64) -> f64 {
    s.breakpoints()
        .iter()
        .map(|&b| circle_distance(b, theta))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_valued() -> StepFunction {
        StepFunction::new(vec![0.0, 0.5], vec![0.0, 1.5]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = SamplingFunction::cosine(2.0);
        assert_eq!(f.eval(&Point::on_circle(0.0)).unwrap(), 2.0);

        let s = SamplingFunction::Step(two_valued());
        assert_eq!(s.eval(&Point::on_circle(0.5)).unwrap(), 1.5);
        assert_eq!(s.eval(&Point::on_circle(0.4999)).unwrap(), 0.0);

        let g = SamplingFunction::cosine(2.0).scaled(3.0);
        assert!(g.eval(&Point::on_circle(0.25)).unwrap().abs() < 1e-14);

        assert!(f.eval(&Point::origin(2)).is_err());
    }

    #[test]
    fn step_before_first_breakpoint_wraps() {
        let s = StepFunction::new(vec![0.25, 0.75], vec![1.0, 2.0]).unwrap();
        assert_eq!(s.eval_theta(0.1), 2.0);
        assert_eq!(s.eval_theta(0.25), 1.0);
        assert_eq!(s.eval_theta(0.9), 2.0);
        assert_eq!(s.arc_lengths(), vec![0.5, 0.5]);
    }

    #[test]
    fn step_validation() {
        assert!(StepFunction::new(vec![0.5, 0.5], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::new(vec![0.6, 0.5], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::new(vec![1.0], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn sup_bounds() {
        assert_eq!(SamplingFunction::cosine(2.0).sup_bound(), SupBound(2.0));
        let s = two_valued();
        assert_eq!(SamplingFunction::Step(s.clone()).sup_bound(), SupBound(1.5));
        let m = mollify(&s, 16, default_n0(&s)).unwrap();
        assert_eq!(SamplingFunction::Mollified(m).sup_bound(), SupBound(1.5));
        let g = SamplingFunction::cosine(2.0).scaled(-3.0);
        assert_eq!(g.sup_bound(), SupBound(6.0));
    }

    #[test]
    fn sup_bounds_hold_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = two_valued().perturbed();
        let trig2 = TrigPoly::new(0.3, vec![vec![1.0, -0.5], vec![0.25]], vec![vec![0.7], vec![]]).unwrap();
        let fs = vec![
            SamplingFunction::cosine(2.0),
            SamplingFunction::Step(s.clone()),
            SamplingFunction::Mollified(mollify(&s, 3, default_n0(&s)).unwrap()),
            SamplingFunction::cosine(2.0).scaled(-1.7),
            SamplingFunction::Trig(trig2),
        ];
        for f in fs {
            let c = f.sup_bound().0;
            for _ in 0..100_000 {
                let coords: Vec<f64> = (0..f.dims()).map(|_| rng.gen()).collect();
                let v = f.eval(&Point::new(coords).unwrap()).unwrap();
                assert!(v.abs() <= c * (1.0 + 1e-15), "{v} exceeds {c}");
            }
        }
    }

    #[test]
    fn step_approximate_constant() {
        let (s, err) = step_approximate(&SamplingFunction::constant(0.7), 10).unwrap();
        for v in s.values() {
            assert!((v - 0.7).abs() < 1e-9);
        }
        assert!(err < 1e-9);
        assert_eq!(s.distinct_values(), 10);
    }

    #[test]
    fn step_approximate_cosine_bound() {
        let f = SamplingFunction::cosine(2.0);
        for k in [10usize, 100] {
            let (s, bound) = step_approximate(&f, k).unwrap();
            assert!(s.distinct_values() <= k);
            let expected = 4.0 * PI / (2.0 * k as f64);
            assert!((bound - expected).abs() < 1e-8);
            let sf = SamplingFunction::Step(s);
            let observed = (0..100_000)
                .map(|i| {
                    let x = [(i as f64 + 0.5) / 100_000.0];
                    (f.eval_coords(&x) - sf.eval_coords(&x)).abs()
                })
                .fold(0.0, f64::max);
            assert!(observed <= bound, "k={k}: {observed} > {bound}");
        }
        assert!(step_approximate(&f, 1).is_err());
        assert!(step_approximate(&SamplingFunction::Step(two_valued()), 4).is_err());
    }

    #[test]
    fn nonperiodic_checks() {
        let t = Transformation::golden();
        let constant = StepFunction::new(vec![0.0], vec![1.0]).unwrap();
        let r = check_nonperiodic(&constant, &t, 10).unwrap();
        assert_eq!(r.smallest_period, Some(1));
        assert_eq!(r.periodic_starts, NONPERIODIC_SAMPLES);

        let r = check_nonperiodic(&two_valued().perturbed(), &t, 1000).unwrap();
        assert_eq!(r.smallest_period, None);
        assert!(check_nonperiodic(&two_valued(), &t, 1).is_err());
    }

    #[test]
    fn nonperiodic_matches_brute_force_symbols() {
        // symbol n is frac(ω + nα) >= 1/2; a period p would force pα ≡ 0 mod 1
        let t = Transformation::rotation(std::f64::consts::SQRT_2 - 1.0).unwrap();
        let alpha = t.alpha()[0];
        let w = 0.123;
        let sym: Vec<bool> = (0..1800).map(|n| (w + n as f64 * alpha).fract() >= 0.5).collect();
        let brute = (1..=200).find(|&p| (0..1600).all(|i| sym[i] == sym[i + p]));
        assert_eq!(brute, None);
        let r = check_nonperiodic(&two_valued(), &t, 200).unwrap();
        assert_eq!(r.smallest_period, None);
    }

    #[test]
    fn mollify_examples() {
        let c = StepFunction::new(vec![0.0, 0.3], vec![2.5, 2.5]).unwrap();
        let m = mollify(&c, 10, default_n0(&c)).unwrap();
        for i in 0..1000 {
            assert_eq!(m.eval_theta(i as f64 / 1000.0), 2.5);
        }

        let s = two_valued();
        let n0 = default_n0(&s);
        assert_eq!(n0, 4);
        let m = mollify(&s, 16, n0).unwrap();
        let h = m.half_width();
        assert!((m.eval_theta(0.5) - 0.75).abs() < 1e-15);
        assert!((m.eval_theta(0.0) - 0.75).abs() < 1e-15);
        for i in 0..10_000 {
            let th = i as f64 / 10_000.0;
            if breakpoint_distance(&s, th) >= h {
                assert_eq!(m.eval_theta(th), s.eval_theta(th));
            }
            let v = m.eval_theta(th);
            assert!((0.0..=1.5).contains(&v));
        }
        assert!(matches!(mollify(&s, 1, 2), Err(Error::KernelTooWide { .. })));
        assert!(mollify(&s, 1, 3).is_err());
        assert!(mollify(&s, 1, 4).is_ok());
    }

    #[test]
    fn mollify_matches_direct_quadrature() {
        // oracle: brute-force Riemann sum of the tent kernel against s
        let s = StepFunction::new(vec![0.1, 0.35, 0.8], vec![-1.0, 2.0, 0.5]).unwrap();
        let m = mollify(&s, 5, default_n0(&s)).unwrap();
        let h = m.half_width();
        let steps = 20_000;
        for &th in &[0.1, 0.12, 0.08, 0.79, 0.83, 0.355, 0.6, 0.99, 0.0] {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..steps {
                let x = -h + (i as f64 + 0.5) * 2.0 * h / steps as f64;
                let w = h - x.abs();
                num += w * s.eval_theta(wrap_unit(th + x));
                den += w;
            }
            assert!((m.eval_theta(th) - num / den).abs() < 1e-6, "theta {th}");
        }
    }

    #[test]
    fn default_n0_is_minimal() {
        for s in [
            two_valued(),
            StepFunction::new(vec![0.0, 0.1, 0.5], vec![1.0, 2.0, 3.0]).unwrap(),
            StepFunction::uniform(vec![0.0; 64]).unwrap(),
        ] {
            let n0 = default_n0(&s);
            assert!(1.0 / (1.0 + n0 as f64) < s.min_arc() / 2.0);
            if n0 > 1 {
                assert!(1.0 / n0 as f64 >= s.min_arc() / 2.0);
            }
        }
    }

    #[test]
    fn l1_examples() {
        let f = SamplingFunction::cosine(2.0);
        assert_eq!(l1_distance(&f, &f, 100).unwrap(), 0.0);
        assert!(l1_distance(&f, &f, 99).is_err());

        let s = two_valued().perturbed();
        let sf = SamplingFunction::Step(s.clone());
        let n0 = default_n0(&s);
        let mut prev = f64::INFINITY;
        for n in [10u32, 100, 1000, 10_000] {
            let m = mollify(&s, n, n0).unwrap();
            let bound = mollifier_l1_bound(&m);
            let mf = SamplingFunction::Mollified(m);
            let d = l1_distance(&sf, &mf, 1000).unwrap();
            assert_eq!(d, l1_distance(&mf, &sf, 1000).unwrap());
            assert!(d <= bound, "n={n}: {d} > {bound}");
            assert!(d < prev);
            prev = d;
        }

        let g = SamplingFunction::constant(1.0);
        // half the circle at distance 1, half at distance 0.5
        assert!((l1_distance(&sf, &g, 100).unwrap() - 0.75).abs() < 1e-8);
    }

    #[test]
    fn l1_closed_form_for_mollifier() {
        // ∫|s − f_n| = 2 · jump · ∫_0^h (h−t)²/(2h²) dt = jump · h / 3 per breakpoint
        let s = two_valued();
        let m = mollify(&s, 100, default_n0(&s)).unwrap();
        let h = m.half_width();
        let d = l1_distance(&SamplingFunction::Step(s), &SamplingFunction::Mollified(m), 100_000)
            .unwrap();
        let exact = 2.0 * 1.5 * h / 3.0;
        assert!((d - exact).abs() < 1e-6 * exact, "{d} vs {exact}");
    }

    #[test]
    fn text_round_trip() {
        let s = two_valued().perturbed();
        let fs = vec![
            SamplingFunction::cosine(2.0).scaled(3.0),
            SamplingFunction::Step(s.clone()),
            SamplingFunction::Mollified(mollify(&s, 16, 4).unwrap()),
            SamplingFunction::Trig(TrigPoly::new(0.5, vec![vec![1.0], vec![0.0, 2.0]], vec![vec![], vec![1.5]]).unwrap()),
        ];
        for f in fs {
            let text = f.to_text();
            assert_eq!(SamplingFunction::from_text(&text).unwrap(), f, "{text}");
        }
    }

    #[test]
    fn text_errors() {
        assert!(SamplingFunction::from_text("variant = \"trig\"\ncoss = [[1.0]]\n").is_err());
        assert!(SamplingFunction::from_text("variant = \"wavelet\"\n").is_err());
        let bad = "variant = \"mollified\"\nn = 1\nn0 = 1\n[step]\nbreakpoints = [0.0, 0.5]\nvalues = [0.0, 1.0]\n";
        assert!(SamplingFunction::from_text(bad).is_err());
        let f = SamplingFunction::from_text("variant = \"trig\"\ncos = [[2.0]]\n").unwrap();
        assert_eq!(f, SamplingFunction::cosine(2.0));
    }
}
