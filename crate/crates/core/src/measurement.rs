//! Exact measurement statistics for coherent states.
//!
//! Quadrature convention (field units, `α = √S`): a homodyne measurement at
//! local-oscillator angle `φ` returns `N(α·cos(θ - φ), 1/4)`; a heterodyne
//! measurement returns a point in the plane drawn from the Q function
//! `(1/π)·exp(-|y - α e^{iθ}|²)`, i.e. independent Gaussians of variance 1/2
//! around `(α cos θ, α sin θ)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::{PhaseAngle, SystemParams};
use crate::error::{invalid, Result};

pub const HETERODYNE_VARIANCE: f64 = 0.5;
pub const HOMODYNE_VARIANCE: f64 = 0.25;

/// Heterodyne outcome `(y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub y1: f64,
    pub y2: f64,
}

impl QuadratureSample {
    pub fn new(y1: f64, y2: f64) -> Self {
        Self { y1, y2 }
    }

    /// Noiseless outcome: the mean of the heterodyne distribution.
    pub fn mean_of(theta: PhaseAngle, params: &SystemParams) -> Self {
        let (s, c) = theta.radians().sin_cos();
        Self::new(params.alpha() * c, params.alpha() * s)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.y1, self.y2)
    }
}

pub fn heterodyne_sample<R: Rng + ?Sized>(
    theta: PhaseAngle,
    params: &SystemParams,
    rng: &mut R,
) -> QuadratureSample {
    let sd = HETERODYNE_VARIANCE.sqrt();
    let mean = QuadratureSample::mean_of(theta, params);
    let n1: f64 = rng.sample(StandardNormal);
    let n2: f64 = rng.sample(StandardNormal);
    QuadratureSample::new(mean.y1 + sd * n1, mean.y2 + sd * n2)
}

pub fn homodyne_sample<R: Rng + ?Sized>(
    theta: PhaseAngle,
    lo_angle: PhaseAngle,
    params: &SystemParams,
    rng: &mut R,
) -> f64 {
    let mean = params.alpha() * (theta.radians() - lo_angle.radians()).cos();
    let n: f64 = rng.sample(StandardNormal);
    mean + HOMODYNE_VARIANCE.sqrt() * n
}

/// Phase of a heterodyne outcome; undefined at the origin.
pub fn phase_estimate(sample: &QuadratureSample) -> Result<PhaseAngle> {
    if sample.y1 == 0.0 && sample.y2 == 0.0 {
        return invalid("phase of the zero quadrature vector is undefined");
    }
    Ok(PhaseAngle::new(sample.y2.atan2(sample.y1)))
}

/// `⟨α e^{iθ₁} | α e^{iθ₂}⟩ = exp(-S + S e^{i(θ₂-θ₁)})`.
pub fn coherent_overlap(theta1: PhaseAngle, theta2: PhaseAngle, params: &SystemParams) -> Complex64 {
    overlap_exponent(theta2.radians() - theta1.radians(), params.energy()).exp()
}

/// Log of the overlap for a phase difference `delta`.
pub(crate) fn overlap_exponent(delta: f64, energy: f64) -> Complex64 {
    let (s, c) = delta.sin_cos();
    Complex64::new(energy * (c - 1.0), energy * s)
}

/// Minimum error for discriminating the antipodal pair `|±α⟩` with equal
/// priors: `½(1 - √(1 - e^{-4S}))`.
pub fn helstrom_binary_error(params: &SystemParams) -> f64 {
    let q = (-4.0 * params.energy()).exp();
    // same value, written without the 1 - √(1 - q) cancellation
    0.5 * q / (1.0 + (1.0 - q).sqrt())
}

/// Wrap-around distance between two phases, in `[0, π]`.
pub fn angular_distance(a: PhaseAngle, b: PhaseAngle) -> f64 {
    let d = (a.radians() - b.radians()).abs();
    d.min(std::f64::consts::TAU - d)
}
