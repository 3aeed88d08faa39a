//! Base dynamics: translations of the circle and of low-dimensional tori.
//!
//! The invariant measure is always normalized Lebesgue measure, which is
//! ergodic for every translation accepted by [`Transformation::new`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIMENSION: usize = 3;

/// Largest denominator scanned when rejecting rational rotation angles.
pub const MAX_RATIONAL_DENOMINATOR: u64 = 1_000_000;

/// Integer relations `k·α ≡ 0 (mod 1)` between torus coordinates are
/// searched with `|k_i| <= RELATION_SEARCH_BOUND`.
pub const RELATION_SEARCH_BOUND: i64 = 20;

/// An angle closer than this to some `p/q` with `q <= MAX_RATIONAL_DENOMINATOR`
/// is treated as that rational.
pub const RATIONAL_TOLERANCE: f64 = 8.0 * f64::EPSILON;

/// `(√5 − 1)/2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// Reduce `x` to its canonical representative in `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the circle `R/Z`.
#[inline]
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs() % 1.0;
    d.min(1.0 - d)
}

/// A point of the torus `[0,1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Builds a point, reducing every coordinate mod 1.
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coords = coords.into();
        if coords.is_empty() || coords.len() > MAX_DIMENSION {
            return Err(Error::DimensionMismatch {
                expected: MAX_DIMENSION,
                actual: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Precondition("point coordinates must be finite".into()));
        }
        for c in coords.iter_mut() {
            *c = wrap_unit(*c);
        }
        Ok(Point { coords })
    }

    pub fn on_circle(theta: f64) -> Self {
        Point {
            coords: vec![wrap_unit(theta)],
        }
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }
}

/// Torus metric: max over coordinates of the circle distance.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(a
        .coords
        .iter()
        .zip(&b.coords)
        .map(|(&x, &y)| circle_distance(x, y))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct OrbitSpec {
    pub start: Point,
    pub length: usize,
    pub direction: Direction,
}

/// A translation `ω ↦ ω + α (mod 1)` of the circle (`d = 1`) or torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformation {
    alpha: Vec<f64>,
}

impl Default for Transformation {
    fn default() -> Self {
        Transformation::golden()
    }
}

impl Transformation {
    /// Rejects rotation vectors that are rational or rationally dependent
    /// within floating precision.
    pub fn new(alpha: impl Into<Vec<f64>>) -> Result<Self> {
        let alpha = alpha.into();
        if alpha.is_empty() || alpha.len() > MAX_DIMENSION {
            return Err(Error::InvalidRotation(format!(
                "dimension must be between 1 and {MAX_DIMENSION}, got {}",
                alpha.len()
            )));
        }
        for &a in &alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidRotation(format!(
                    "angle {a} is not in the open interval (0, 1)"
                )));
            }
            if let Some((p, q)) = nearby_rational(a) {
                return Err(Error::InvalidRotation(format!(
                    "angle {a} is numerically the rational {p}/{q}"
                )));
            }
        }
        if alpha.len() > 1 {
            if let Some(k) = integer_relation(&alpha) {
                return Err(Error::InvalidRotation(format!(
                    "coordinates satisfy the integer relation {k:?}"
                )));
            }
        }
        Ok(Transformation { alpha })
    }

    /// Circle rotation by the golden mean.
    pub fn golden() -> Self {
        Transformation {
            alpha: vec![GOLDEN_MEAN],
        }
    }

    pub fn rotation(alpha: f64) -> Result<Self> {
        Transformation::new(vec![alpha])
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn apply(&self, w: &Point) -> Result<Point> {
        self.check_dim(w)?;
        let mut out = w.clone();
        self.step_forward(out.coords_mut());
        Ok(out)
    }

    pub fn inverse_apply(&self, w: &Point) -> Result<Point> {
        self.check_dim(w)?;
        let mut out = w.clone();
        self.step_backward(out.coords_mut());
        Ok(out)
    }

    /// `[ω, Tω, …, T^{n−1}ω]`, or inverse iterates for a backward spec.
    pub fn orbit(&self, spec: &OrbitSpec) -> Result<Vec<Point>> {
        if spec.length == 0 {
            return Err(Error::EmptyOrbit);
        }
        self.check_dim(&spec.start)?;
        let mut out = Vec::with_capacity(spec.length);
        let mut cur = spec.start.clone();
        for _ in 1..spec.length {
            let next = {
                let mut p = cur.clone();
                match spec.direction {
                    Direction::Forward => self.step_forward(p.coords_mut()),
                    Direction::Backward => self.step_backward(p.coords_mut()),
                }
                p
            };
            out.push(std::mem::replace(&mut cur, next));
        }
        out.push(cur);
        Ok(out)
    }

    #[inline]
    pub(crate) fn step_forward(&self, coords: &mut [f64]) {
        for (c, a) in coords.iter_mut().zip(&self.alpha) {
            let mut x = *c + a;
            if x >= 1.0 {
                x -= 1.0;
            }
            *c = x;
        }
    }

    #[inline]
    pub(crate) fn step_backward(&self, coords: &mut [f64]) {
        for (c, a) in coords.iter_mut().zip(&self.alpha) {
            let mut x = *c - a;
            if x < 0.0 {
                x += 1.0;
                if x >= 1.0 {
                    x = 0.0;
                }
            }
            *c = x;
        }
    }

    fn check_dim(&self, w: &Point) -> Result<()> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: w.dim(),
            });
        }
        Ok(())
    }
}

/// Returns `(p, q)` if `a` lies within [`RATIONAL_TOLERANCE`] of `p/q` for
/// some `q <= MAX_RATIONAL_DENOMINATOR`.
fn nearby_rational(a: f64) -> Option<(i64, u64)> {
    (1..=MAX_RATIONAL_DENOMINATOR).find_map(|q| {
        let x = a * q as f64;
        let p = x.round();
        ((x - p).abs() / q as f64 <= RATIONAL_TOLERANCE).then_some((p as i64, q))
    })
}

fn integer_relation(alpha: &[f64]) -> Option<Vec<i64>> {
    let b = RELATION_SEARCH_BOUND;
    let d = alpha.len();
    let mut k = vec![-b; d];
    loop {
        let nontrivial = k.iter().filter(|&&x| x != 0).count() >= 2;
        if nontrivial {
            let s: f64 = k.iter().zip(alpha).map(|(&ki, &a)| ki as f64 * a).sum();
            let scale = k.iter().map(|x| x.unsigned_abs()).sum::<u64>() as f64;
            if (s - s.round()).abs() <= RATIONAL_TOLERANCE * scale {
                return Some(k);
            }
        }
        // odometer over [-b, b]^d
        let mut i = 0;
        loop {
            if i == d {
                return None;
            }
            if k[i] < b {
                k[i] += 1;
                break;
            }
            k[i] = -b;
            i += 1;
        }
    }
}
