//! Schwarz–Christoffel map from the unit disk onto the equilateral triangle
//! erected on `I = [−(2+C), 2+C]` in the upper half-plane, and the boundary
//! weight `g(E) = |Φ'(Φ⁻¹(E))|⁻¹` on `I`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::SupBound;
use crate::quad;

/// Target tolerance for each radial quadrature.
const QUAD_TOL: f64 = 1e-13;

/// A radial path whose quadrature misses this tolerance is an error.
pub const PATH_TOL: f64 = 1e-8;

const EXPONENT: f64 = -2.0 / 3.0;

/// Arguments of the prevertices: the base arc `(θ₁, θ₂)` maps onto `I`, the
/// third prevertex onto the apex.
const PREVERTEX_ANGLES: [f64; 3] = [-5.0 * PI / 6.0, -PI / 6.0, PI / 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalTriangle {
    bound: SupBound,
    half_width: f64,
    prevertices: [Complex64; 3],
    scale: Complex64,
    offset: Complex64,
    vertices: [Complex64; 3],
}

pub fn build_triangle(bound: SupBound) -> Result<ConformalTriangle> {
    if !(bound.0 >= 0.0) || !bound.0.is_finite() {
        return Err(Error::Precondition(format!("sup bound must be finite and >= 0, got {}", bound.0)));
    }
    let half_width = bound.spectral_half_width();
    let prevertices = PREVERTEX_ANGLES.map(|a| Complex64::from_polar(1.0, a));
    let f1 = raw_integral(&prevertices, prevertices[0])?;
    let f2 = raw_integral(&prevertices, prevertices[1])?;
    let scale = (2.0 * half_width) / (f2 - f1);
    let offset = -half_width - scale * f1;
    let vertices = [
        Complex64::new(-half_width, 0.0),
        Complex64::new(half_width, 0.0),
        Complex64::new(0.0, half_width * 3f64.sqrt()),
    ];
    Ok(ConformalTriangle { bound, half_width, prevertices, scale, offset, vertices })
}

/// `∫₀^z ∏ⱼ (1 − ζ/zⱼ)^{−2/3} dζ` along the segment `[0, z]`.
///
/// With `ζ = (1 − s³) z` each factor becomes `(1 − z/zⱼ) + s³ z/zⱼ` and
/// `dζ = −3s² z ds`, which cancels the `(s³)^{−2/3}` blow-up at a prevertex.
fn raw_integral(prevertices: &[Complex64; 3], z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    let w: [Complex64; 3] = std::array::from_fn(|j| z / prevertices[j]);
    let base: [Complex64; 3] = std::array::from_fn(|j| (prevertices[j] - z) / prevertices[j]);
    let integrand = |s: f64| {
        let s3 = s * s * s;
        let mut p = Complex64::new(3.0 * s * s, 0.0);
        for j in 0..3 {
            p *= (base[j] + w[j] * s3).powf(EXPONENT);
        }
        p
    };
    let v = quad::integrate(&integrand, 0.0, 1.0, QUAD_TOL)
        .or_else(|_| quad::integrate(&integrand, 0.0, 1.0, PATH_TOL))?;
    Ok(z * v)
}

impl ConformalTriangle {
    pub fn bound(&self) -> SupBound {
        self.bound
    }

    /// `2 + C`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn prevertices(&self) -> &[Complex64; 3] {
        &self.prevertices
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    /// `[−(2+C), 2+C, i√3(2+C)]`.
    pub fn vertices(&self) -> &[Complex64; 3] {
        &self.vertices
    }

    /// `Φ(z)` for `|z| <= 1`.
    pub fn phi(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!("{z} is outside the closed unit disk")));
        }
        Ok(self.scale * raw_integral(&self.prevertices, z)? + self.offset)
    }

    /// `Φ'(z) = const · ∏ⱼ (1 − z/zⱼ)^{−2/3}`.
    pub fn phi_prime(&self, z: Complex64) -> Complex64 {
        let mut p = self.scale;
        for zj in &self.prevertices {
            p *= ((zj - z) / zj).powf(EXPONENT);
        }
        p
    }

    /// Angle `θ` on the base arc with `Φ(e^{iθ}) = E`, by bisection.
    pub fn base_preimage(&self, energy: f64) -> Result<f64> {
        self.check_inside(energy)?;
        let (mut lo, mut hi) = (PREVERTEX_ANGLES[0], PREVERTEX_ANGLES[1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let x = self.phi(Complex64::from_polar(1.0, mid))?.re;
            if x < energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_inside(&self, energy: f64) -> Result<()> {
        let l = self.half_width;
        if !(energy > -l && energy < l) {
            return Err(Error::EnergyOutOfDomain { energy, lo: -l, hi: l });
        }
        Ok(())
    }
}

/// `g(E) = |Φ'(Φ⁻¹(E))|⁻¹` for `E` strictly inside `I`.
pub fn sc_weight(tri: &ConformalTriangle, energy: f64) -> Result<f64> {
    let theta = tri.base_preimage(energy)?;
    Ok(1.0 / tri.phi_prime(Complex64::from_polar(1.0, theta)).norm())
}

/// Weights on a set of energies; nodes outside the open interval get 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn weight_table(tri: &ConformalTriangle, energies: &[f64]) -> Result<WeightTable> {
    use rayon::prelude::*;
    let l = tri.half_width();
    let weights = energies
        .par_iter()
        .map(|&e| if e > -l && e < l { sc_weight(tri, e) } else { Ok(0.0) })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightTable { energies: energies.to_vec(), weights })
}

impl WeightTable {
    /// Two comma-separated columns `energy,g` with a header row.
    pub fn to_text(&self) -> String {
        let mut out = String::from("energy,g\n");
        for (e, g) in self.energies.iter().zip(&self.weights) {
            out.push_str(&crate::report::fmt_num(*e));
            out.push(',');
            out.push_str(&crate::report::fmt_num(*g));
            out.push('\n');
        }
        out
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}
