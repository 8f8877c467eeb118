//! Band-limited versions of square Walsh sequences.
//!
//! Each shaped sequence is again piecewise constant, on a finer grid of
//! sub-segments, so the exact filter evaluation still applies.

use serde::{Deserialize, Serialize};

use crate::catalog::amplitude_modulated;
use crate::control::ControlSequence;
use crate::error::{Error, Result};
use crate::walsh::{synthesize, Modulation, WalshSpectrum};

/// Default number of sub-segments per Walsh segment.
pub const DEFAULT_SUBSEGMENTS: usize = 100;

/// Default number of samples for the filtered envelope.
pub const DEFAULT_FILTER_SAMPLES: usize = 1 << 11;

/// Pulse-shaping method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Truncated Gaussian per segment with width `g` times the segment duration.
    Gaussian { g: f64, subsegments: usize },
    /// Trapezoid per segment; `f = 1` is the square pulse.
    Trapezoid { f: f64, subsegments: usize },
    /// First-order Butterworth low-pass applied to the sampled envelope.
    Butterworth { cutoff: f64, samples: usize },
}

/// Segment rotation angles `(1 / M) H_M X` of an amplitude spectrum.
fn segment_angles(amplitudes: &[f64]) -> Result<Vec<f64>> {
    let values = synthesize(&WalshSpectrum::new(amplitudes.to_vec(), Modulation::Amplitude, 1.0))?;
    let m = values.len() as f64;
    Ok(values.into_iter().map(|f| f / m).collect())
}

fn from_profile(angles: &[f64], weights: &[Vec<f64>], tau: f64, label: String) -> Result<ControlSequence<f64>> {
    let m = angles.len();
    let mut triples = Vec::new();
    for (theta, w) in angles.iter().zip(weights) {
        let ns = w.len();
        let dt = tau / (m * ns) as f64;
        for wi in w {
            triples.push((theta * wi / dt, dt, 0.0));
        }
    }
    ControlSequence::from_triples(&triples, label)
}

/// Gaussian-shaped sequence from Walsh amplitudes.
///
/// Within each segment the Rabi rate follows a normal profile centred on the
/// segment with standard deviation `g` times the segment duration, cut at the
/// segment edges and rescaled so the segment keeps its rotation angle.
/// Sub-segment values are exact integrals of that profile.
pub fn gaussian_sequence(amplitudes: &[f64], g: f64, subsegments: usize, tau: f64) -> Result<ControlSequence<f64>> {
    if !(g > 0.0) || subsegments == 0 {
        return Err(Error::InvalidArgument(format!("Gaussian width {g} and {subsegments} sub-segments")));
    }
    let angles = segment_angles(amplitudes)?;
    let s = 1.0 / (g * std::f64::consts::SQRT_2);
    let cdf = |x: f64| libm::erf((x - 0.5) * s);
    let total = cdf(1.0) - cdf(0.0);
    let w: Vec<f64> = (0..subsegments)
        .map(|i| (cdf((i + 1) as f64 / subsegments as f64) - cdf(i as f64 / subsegments as f64)) / total)
        .collect();
    let weights = vec![w; angles.len()];
    from_profile(&angles, &weights, tau, format!("gaussian(g={g})"))
}

/// Trapezoid-shaped sequence from Walsh amplitudes.
///
/// In coordinates where a segment has unit duration and unit height, each
/// ramp rises at an angle `f pi / 2` from the time axis, so its width is
/// `cot(f pi / 2)`, capped at half the segment. The height is rescaled so the
/// segment keeps its rotation angle.
pub fn trapezoid_sequence(amplitudes: &[f64], f: f64, subsegments: usize, tau: f64) -> Result<ControlSequence<f64>> {
    if !(f > 0.0 && f <= 1.0) || subsegments == 0 {
        return Err(Error::InvalidArgument(format!("trapezoid factor {f} and {subsegments} sub-segments")));
    }
    let angles = segment_angles(amplitudes)?;
    let ramp = if f == 1.0 { 0.0 } else { (1.0 / (f * std::f64::consts::FRAC_PI_2).tan()).min(0.5) };
    // Antiderivative of the unit-height trapezoid on [0, 1].
    let area = |x: f64| -> f64 {
        if ramp == 0.0 {
            return x;
        }
        let rise = |y: f64| {
            let y = y.clamp(0.0, ramp);
            y * y / (2.0 * ramp)
        };
        let flat = (x.min(1.0 - ramp) - ramp).max(0.0);
        let fall = if x > 1.0 - ramp { ramp / 2.0 - rise(1.0 - x) } else { 0.0 };
        rise(x) + flat + fall
    };
    let total = area(1.0);
    let w: Vec<f64> = (0..subsegments)
        .map(|i| (area((i + 1) as f64 / subsegments as f64) - area(i as f64 / subsegments as f64)) / total)
        .collect();
    let weights = vec![w; angles.len()];
    from_profile(&angles, &weights, tau, format!("trapezoid(F={f})"))
}

/// Coefficients `(b0, b1, a1)` of the bilinear first-order Butterworth low-pass
/// `y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1]`.
pub fn butterworth_coefficients(cutoff: f64) -> Result<(f64, f64, f64)> {
    if !(cutoff > 0.0 && cutoff < 0.5) {
        return Err(Error::InvalidArgument(format!("cutoff ratio {cutoff} outside (0, 0.5)")));
    }
    let k = (std::f64::consts::PI * cutoff).tan();
    let b = k / (1.0 + k);
    Ok((b, b, (k - 1.0) / (k + 1.0)))
}

/// Causal single-pass first-order low-pass with zero initial state.
pub fn butterworth_filter(samples: &[f64], cutoff: f64) -> Result<Vec<f64>> {
    let (b0, b1, a1) = butterworth_coefficients(cutoff)?;
    let (mut x_prev, mut y_prev) = (0.0, 0.0);
    Ok(samples
        .iter()
        .map(|&x| {
            let y = b0 * x + b1 * x_prev - a1 * y_prev;
            x_prev = x;
            y_prev = y;
            y
        })
        .collect())
}

/// Low-pass filtered version of a sequence.
///
/// The in-phase and quadrature parts of the control field are sampled at
/// `samples` equally spaced midpoints, filtered separately and turned back
/// into one segment per sample. `cutoff` is `f_c / f_s`.
pub fn butterworth_sequence(seq: &ControlSequence<f64>, cutoff: f64, samples: usize) -> Result<ControlSequence<f64>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let tau = seq.total_duration();
    let times = seq.boundary_times();
    let dt = tau / samples as f64;
    let mut inphase = Vec::with_capacity(samples);
    let mut quad = Vec::with_capacity(samples);
    let mut l = 0;
    for i in 0..samples {
        let t = (i as f64 + 0.5) * dt;
        while l + 1 < seq.len() && t >= times[l + 1] {
            l += 1;
        }
        let s = &seq.segments()[l];
        let (sp, cp) = s.phase().sin_cos();
        inphase.push(s.rabi() * cp);
        quad.push(s.rabi() * sp);
    }
    let xi = butterworth_filter(&inphase, cutoff)?;
    let xq = butterworth_filter(&quad, cutoff)?;
    let triples: Vec<(f64, f64, f64)> = xi
        .iter()
        .zip(&xq)
        .map(|(a, b)| {
            if *b == 0.0 {
                (*a, dt, 0.0)
            } else {
                (a.hypot(*b), dt, b.atan2(*a))
            }
        })
        .collect();
    ControlSequence::from_triples(&triples, format!("{}+butterworth({cutoff})", seq.label))
}

/// Applies a shape to a Walsh amplitude spectrum.
pub fn shape_sequence(amplitudes: &[f64], shape: &Shape, tau: f64) -> Result<ControlSequence<f64>> {
    match *shape {
        Shape::Gaussian { g, subsegments } => gaussian_sequence(amplitudes, g, subsegments, tau),
        Shape::Trapezoid { f, subsegments } => trapezoid_sequence(amplitudes, f, subsegments, tau),
        Shape::Butterworth { cutoff, samples } => {
            let square = amplitude_modulated(amplitudes, tau, "square".into())?;
            butterworth_sequence(&square, cutoff, samples)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const WAMF: [f64; 4] = [3.0 * PI, 0.0, 0.0, PI];

    #[test]
    fn angles_are_preserved() {
        for seq in [
            gaussian_sequence(&WAMF, 1.0 / 6.0, 100, 1.0).unwrap(),
            trapezoid_sequence(&WAMF, 0.9, 100, 1.0).unwrap(),
        ] {
            assert!((seq.total_rotation().0 - 3.0 * PI).abs() < 1e-9);
            assert!((seq.total_duration() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_gaussian_is_square() {
        let seq = gaussian_sequence(&WAMF, 1e3, 10, 1.0).unwrap();
        for (i, s) in seq.segments().iter().enumerate() {
            let want = [4.0, 2.0, 2.0, 4.0][i / 10] * PI;
            assert!((s.rabi() - want).abs() < 1e-6 * want);
        }
    }

    #[test]
    fn unit_trapezoid_is_square() {
        let seq = trapezoid_sequence(&WAMF, 1.0, 4, 1.0).unwrap();
        assert!((seq.segments()[0].rabi() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn filter_unity_dc_gain() {
        let y = butterworth_filter(&vec![1.0; 400], 0.05).unwrap();
        assert!((y[399] - 1.0).abs() < 1e-12);
        assert!(butterworth_filter(&[1.0], 0.5).is_err());
    }

    #[test]
    fn quarter_cutoff_is_two_tap_average() {
        let (b0, b1, a1) = butterworth_coefficients(0.25).unwrap();
        assert!((b0 - 0.5).abs() < 1e-15 && (b1 - 0.5).abs() < 1e-15 && a1.abs() < 1e-15);
    }
}
