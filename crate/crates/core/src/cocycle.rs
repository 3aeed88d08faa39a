//! Transfer matrices and Lyapunov exponents from renormalized cocycle
//! products along forward orbits.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Point, Transformation};
use crate::error::{Error, Result};
use crate::potentials::SamplingFunction;

/// Steps between renormalizations of the running product.
pub const RENORM_EVERY: usize = 16;

pub const MIN_STEPS: usize = 1_000;

const ENERGY_BLOCK: usize = 4;

/// `[[a, b], [c, d]]` with complex entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TransferMatrix { a: one, b: zero, c: zero, d: one }
    }

    /// `[[E − v, −1], [1, 0]]`.
    pub fn schrodinger(energy: Complex64, potential: f64) -> Self {
        TransferMatrix {
            a: energy - potential,
            b: Complex64::new(-1.0, 0.0),
            c: Complex64::new(1.0, 0.0),
            d: Complex64::new(0.0, 0.0),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn frobenius(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn scale(&self, s: f64) -> TransferMatrix {
        TransferMatrix { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }
}

pub fn transfer_matrix(f: &SamplingFunction, energy: Complex64, w: &Point) -> Result<TransferMatrix> {
    Ok(TransferMatrix::schrodinger(energy, f.eval(w)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParams {
    /// Orbit length `N`.
    pub steps: usize,
    pub orbits: usize,
    pub seed: u64,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        LyapunovParams { steps: 100_000, orbits: 8, seed: 0 }
    }
}

impl LyapunovParams {
    pub fn new(steps: usize, orbits: usize, seed: u64) -> Self {
        LyapunovParams { steps, orbits, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::Precondition(format!(
                "Lyapunov estimates need at least {MIN_STEPS} steps, got {}",
                self.steps
            )));
        }
        if self.orbits < 2 {
            return Err(Error::Precondition(format!(
                "Lyapunov estimates need at least 2 orbits, got {}",
                self.orbits
            )));
        }
        Ok(())
    }
}

/// Lyapunov value in nats with its convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    /// `max(raw, 0)`.
    pub value: f64,
    /// Unclamped mean over orbits.
    pub raw: f64,
    /// Sample standard deviation across orbits over `√orbits`.
    pub std_error: f64,
    pub steps: usize,
    pub orbits: usize,
    pub energy: Complex64,
}

impl LyapunovEstimate {
    pub(crate) fn from_samples(samples: &[f64], steps: usize, energy: Complex64) -> Self {
        let (mean, se) = mean_and_std_error(samples);
        LyapunovEstimate {
            value: mean.max(0.0),
            raw: mean,
            std_error: se,
            steps,
            orbits: samples.len(),
            energy,
        }
    }
}

pub(crate) fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Starting point of orbit `index`, drawn from a ChaCha stream selected by
/// the orbit index so that starts do not depend on scheduling.
pub fn orbit_start(dim: usize, seed: u64, index: usize) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let coords: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    Point::new(coords).expect("uniform samples lie in [0,1)")
}

/// Potential values `f(T^k ω)`, `k = 0..steps`, along a forward orbit.
pub fn sample_orbit(f: &SamplingFunction, t: &Transformation, start: &Point, steps: usize) -> Result<Vec<f64>> {
    if f.dims() != t.dim() || start.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), actual: f.dims() });
    }
    let mut x = start.coords().to_vec();
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let v = f.eval_coords(&x);
        if !v.is_finite() {
            return Err(Error::NonFinitePotential { value: v, step });
        }
        out.push(v);
        t.step_forward(&mut x);
    }
    Ok(out)
}

/// `ln ‖S(T^{N−1}ω)⋯S(ω)‖_F` for a real energy.
pub fn log_norm_real(energy: f64, potential: &[f64]) -> f64 {
    log_norm_real_block([energy; 1], potential)[0]
}

/// Same product for several real energies at once; each lane performs
/// exactly the arithmetic of [`log_norm_real`].
fn log_norm_real_block<const B: usize>(energy: [f64; B], potential: &[f64]) -> [f64; B] {
    let mut a = [1.0f64; B];
    let mut b = [0.0f64; B];
    let mut c = [0.0f64; B];
    let mut d = [1.0f64; B];
    let mut acc = [0.0f64; B];
    let mut chunks = potential.chunks_exact(RENORM_EVERY);
    for chunk in &mut chunks {
        for &v in chunk {
            for l in 0..B {
                let t = energy[l] - v;
                let na = t * a[l] - c[l];
                let nb = t * b[l] - d[l];
                c[l] = a[l];
                d[l] = b[l];
                a[l] = na;
                b[l] = nb;
            }
        }
        for l in 0..B {
            let norm = (a[l] * a[l] + b[l] * b[l] + c[l] * c[l] + d[l] * d[l]).sqrt();
            acc[l] += norm.ln();
            let inv = 1.0 / norm;
            a[l] *= inv;
            b[l] *= inv;
            c[l] *= inv;
            d[l] *= inv;
        }
    }
    for &v in chunks.remainder() {
        for l in 0..B {
            let t = energy[l] - v;
            let na = t * a[l] - c[l];
            let nb = t * b[l] - d[l];
            c[l] = a[l];
            d[l] = b[l];
            a[l] = na;
            b[l] = nb;
        }
    }
    for l in 0..B {
        acc[l] += (a[l] * a[l] + b[l] * b[l] + c[l] * c[l] + d[l] * d[l]).sqrt().ln();
    }
    acc
}

/// Complex-energy counterpart of [`log_norm_real`].
pub fn log_norm_complex(energy: Complex64, potential: &[f64]) -> f64 {
    let mut p = TransferMatrix::identity();
    let mut acc = 0.0;
    for (i, &v) in potential.iter().enumerate() {
        let t = energy - v;
        // S·P with S = [[t, -1], [1, 0]]
        p = TransferMatrix { a: t * p.a - p.c, b: t * p.b - p.d, c: p.a, d: p.b };
        if (i + 1) % RENORM_EVERY == 0 {
            let norm = p.frobenius();
            acc += norm.ln();
            p = p.scale(1.0 / norm);
        }
    }
    acc + p.frobenius().ln()
}

fn log_norms(energies: &[Complex64], potential: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; energies.len()];
    let real: Vec<usize> = (0..energies.len()).filter(|&i| energies[i].im == 0.0).collect();
    for block in real.chunks(ENERGY_BLOCK) {
        if block.len() == ENERGY_BLOCK {
            let e = std::array::from_fn(|l| energies[block[l]].re);
            let r = log_norm_real_block::<ENERGY_BLOCK>(e, potential);
            for (l, &i) in block.iter().enumerate() {
                out[i] = r[l];
            }
        } else {
            for &i in block {
                out[i] = log_norm_real(energies[i].re, potential);
            }
        }
    }
    for (i, e) in energies.iter().enumerate() {
        if e.im != 0.0 {
            out[i] = log_norm_complex(*e, potential);
        }
    }
    out
}

/// Lyapunov estimates for many energies sharing the same orbit starts.
///
/// Energies are processed in parallel on the current rayon pool; results
/// are identical for any pool size.
pub fn lyapunov_scan(
    f: &SamplingFunction,
    energies: &[Complex64],
    t: &Transformation,
    params: &LyapunovParams,
) -> Result<Vec<LyapunovEstimate>> {
    params.validate()?;
    if energies.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Precondition("energies must be finite".into()));
    }
    let n = params.steps as f64;
    // per[energy][orbit]
    let mut per = vec![Vec::with_capacity(params.orbits); energies.len()];
    let chunk = ENERGY_BLOCK * 4;
    for j in 0..params.orbits {
        let start = orbit_start(t.dim(), params.seed, j);
        let potential = sample_orbit(f, t, &start, params.steps)?;
        let logs: Vec<f64> = energies
            .par_chunks(chunk)
            .flat_map_iter(|es| log_norms(es, &potential))
            .collect();
        for (slot, l) in per.iter_mut().zip(logs) {
            slot.push(l / n);
        }
    }
    Ok(per
        .iter()
        .zip(energies)
        .map(|(s, &e)| LyapunovEstimate::from_samples(s, params.steps, e))
        .collect())
}

/// `γ̂(E)`: mean over `orbits` random starts of `ln ‖Sⁿ‖ / N`.
pub fn lyapunov_real(
    f: &SamplingFunction,
    energy: Complex64,
    t: &Transformation,
    params: &LyapunovParams,
) -> Result<LyapunovEstimate> {
    Ok(lyapunov_scan(f, &[energy], t, params)?[0])
}
