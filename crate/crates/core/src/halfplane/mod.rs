//! Complex-energy machinery: the Möbius action of transfer matrices on the
//! upper half-plane, the m-function as a pullback limit, the Lyapunov
//! exponent recovered from `ln|m|`, and the mean-value diagnostic for
//! harmonicity of `γ` off the real axis.

mod triangle;

pub use triangle::{build_triangle, sc_weight, weight_table, ConformalTriangle, WeightTable};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cocycle::{LyapunovEstimate, TransferMatrix, RENORM_EVERY};
use crate::dynamics::{Point, Transformation};
use crate::error::{Error, Result};
use crate::potentials::SamplingFunction;

/// Smallest imaginary part at which this module evaluates anything.
pub const HALFPLANE_FLOOR: f64 = 1e-3;

/// Lower limit on `Im E` for the m-function iteration.
pub const M_FUNCTION_MIN_IM: f64 = 1e-6;

/// Lower limit on `Im E` for [`lyapunov_complex`].
pub const LYAPUNOV_COMPLEX_MIN_IM: f64 = 1e-4;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point with strictly positive imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(HalfPlanePoint(z))
        } else {
            Err(Error::NotInHalfPlane(z))
        }
    }

    pub fn i() -> Self {
        HalfPlanePoint(I)
    }

    pub fn z(self) -> Complex64 {
        self.0
    }
}

/// `(a z + b) / (c z + d)`.
pub fn mobius(m: &TransferMatrix, z: Complex64) -> Result<Complex64> {
    let den = m.c * z + m.d;
    if den.norm_sqr() == 0.0 {
        return Err(Error::SingularMobius);
    }
    Ok((m.a * z + m.b) / den)
}

pub fn mobius_apply(m: &TransferMatrix, z: HalfPlanePoint) -> Result<HalfPlanePoint> {
    HalfPlanePoint::new(mobius(m, z.0)?)
}

/// Hyperbolic distance in the upper half-plane.
pub fn poincare_distance(z: HalfPlanePoint, w: HalfPlanePoint) -> f64 {
    let (z, w) = (z.0, w.0);
    let arg = 1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im);
    arg.acosh()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MFunctionOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for MFunctionOptions {
    fn default() -> Self {
        MFunctionOptions { max_iter: 10_000, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MFunctionValue {
    pub m: HalfPlanePoint,
    pub iterations: usize,
    pub last_difference: f64,
    /// Ratio of the last two successive differences.
    pub contraction: f64,
}

/// `m_ω(E) = lim_n S(T^{-1}ω) S(T^{-2}ω) ⋯ S(T^{-n}ω) · i`.
///
/// The product is extended on the right one backward step at a time;
/// iteration stops when two successive values of the Möbius image of `i`
/// are within `tol`. Every iterate is checked to lie in the upper
/// half-plane.
pub fn m_function(
    f: &SamplingFunction,
    energy: Complex64,
    w: &Point,
    t: &Transformation,
    opts: &MFunctionOptions,
) -> Result<MFunctionValue> {
    if energy.im < M_FUNCTION_MIN_IM {
        return Err(Error::Precondition(format!(
            "m-function needs Im E >= {M_FUNCTION_MIN_IM}, got {}",
            energy.im
        )));
    }
    if w.dim() != t.dim() || f.dims() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), actual: w.dim() });
    }
    let mut x = w.coords().to_vec();
    let mut p = TransferMatrix::identity();
    let mut prev = I;
    let mut prev_diff = f64::NAN;
    let mut contraction = f64::NAN;
    let mut diff = f64::INFINITY;
    for k in 1..=opts.max_iter {
        t.step_backward(&mut x);
        let v = f.eval_coords(&x);
        if !v.is_finite() {
            return Err(Error::NonFinitePotential { value: v, step: k });
        }
        let e = energy - v;
        // P·S with S = [[e, -1], [1, 0]]
        p = TransferMatrix { a: p.a * e + p.b, b: -p.a, c: p.c * e + p.d, d: -p.c };
        if k % RENORM_EVERY == 0 {
            p = p.scale(1.0 / p.frobenius());
        }
        let m = mobius(&p, I)?;
        if !(m.im > 0.0) {
            return Err(Error::NotInHalfPlane(m));
        }
        diff = (m - prev).norm();
        if prev_diff > 0.0 {
            contraction = diff / prev_diff;
        }
        prev_diff = diff;
        prev = m;
        if diff < opts.tol {
            return Ok(MFunctionValue {
                m: HalfPlanePoint(m),
                iterations: k,
                last_difference: diff,
                contraction,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last: prev,
        last_difference: diff,
        contraction,
    })
}

/// Random sample points for the ω-average, independent of scheduling.
fn sample_points(dim: usize, samples: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    (0..samples)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            Point::new(c).expect("uniform samples lie in [0,1)")
        })
        .collect()
}

/// `γ(E)` as the average of `ln|m_ω(E)|` over `samples` random `ω`.
///
/// With the pullback orientation of `m` used here the free case gives
/// `∫ ln|m| dμ = +γ`; the estimate's `value` is the absolute value of the
/// average and `raw` keeps the signed average.
pub fn lyapunov_complex(
    f: &SamplingFunction,
    energy: Complex64,
    t: &Transformation,
    samples: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    lyapunov_complex_with(f, energy, t, samples, seed, &MFunctionOptions::default())
}

pub fn lyapunov_complex_with(
    f: &SamplingFunction,
    energy: Complex64,
    t: &Transformation,
    samples: usize,
    seed: u64,
    opts: &MFunctionOptions,
) -> Result<LyapunovEstimate> {
    if energy.im < LYAPUNOV_COMPLEX_MIN_IM {
        return Err(Error::Precondition(format!(
            "complex-energy Lyapunov needs Im E >= {LYAPUNOV_COMPLEX_MIN_IM}, got {}",
            energy.im
        )));
    }
    if samples < 2 {
        return Err(Error::Precondition("need at least 2 samples".into()));
    }
    let points = sample_points(t.dim(), samples, seed);
    let logs: Vec<(f64, usize)> = points
        .par_iter()
        .map(|w| m_function(f, energy, w, t, opts).map(|m| (m.m.z().norm().ln(), m.iterations)))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = logs.iter().map(|l| l.0).collect();
    let iters = logs.iter().map(|l| l.1).sum::<usize>() / samples;
    let mut est = LyapunovEstimate::from_samples(&values, iters, energy);
    est.value = est.raw.abs();
    Ok(est)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicReport {
    pub center_value: f64,
    pub circle_average: f64,
    pub discrepancy: f64,
    /// `(θ_k, z_k, γ(z_k))` for the trapezoidal nodes.
    pub circle: Vec<(f64, Complex64, f64)>,
}

/// Compares `gamma(center)` against the `points`-node trapezoidal average
/// of `gamma` over the circle of the given radius.
pub fn mean_value_check<G>(gamma: G, center: HalfPlanePoint, radius: f64, points: usize) -> Result<HarmonicReport>
where
    G: Fn(Complex64) -> Result<f64> + Sync,
{
    if !(radius > 0.0) || center.z().im - radius < HALFPLANE_FLOOR {
        return Err(Error::Precondition(format!(
            "disk of radius {radius} around {} must stay in Im z >= {HALFPLANE_FLOOR}",
            center.z()
        )));
    }
    if points < 3 {
        return Err(Error::Precondition("need at least 3 circle points".into()));
    }
    let center_value = gamma(center.z())?;
    let circle: Vec<(f64, Complex64, f64)> = (0..points)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
            let z = center.z() + Complex64::from_polar(radius, theta);
            gamma(z).map(|g| (theta, z, g))
        })
        .collect::<Result<_>>()?;
    let circle_average = circle.iter().map(|c| c.2).sum::<f64>() / points as f64;
    Ok(HarmonicReport {
        center_value,
        circle_average,
        discrepancy: (center_value - circle_average).abs(),
        circle,
    })
}

/// Mean-value check of `γ_f` computed through [`lyapunov_complex`]; every
/// node uses the same sample points.
pub fn harmonic_mean_check(
    f: &SamplingFunction,
    t: &Transformation,
    center: HalfPlanePoint,
    radius: f64,
    points: usize,
    samples: usize,
    seed: u64,
) -> Result<HarmonicReport> {
    mean_value_check(
        |z| lyapunov_complex(f, z, t, samples, seed).map(|e| e.value),
        center,
        radius,
        points,
    )
}
