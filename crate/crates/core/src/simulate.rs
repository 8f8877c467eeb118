//! Monte Carlo check of filter-function infidelity predictions.
//!
//! Noise is a sum of harmonics with random phases whose power follows a
//! target spectral density. Each realization is integrated with piecewise
//! frozen Hamiltonians and exact 2x2 exponentials.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{cumulative_operators, ControlSequence, Unitary2};
use crate::error::{Error, Result};
use crate::filters::Quadrature;
use crate::spectral::{noise_overlap, PowerSpectrum};

/// Minimum number of harmonics in a noise realization.
pub const MIN_COMPONENTS: usize = 1000;

/// Largest rotation angle allowed in one integration step.
pub const MAX_STEP_ANGLE: f64 = 0.05;

/// Shape of a two-sided noise power spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psd {
    /// `S = amplitude` for `low <= |omega| <= high`.
    FlatBand { amplitude: f64, low: f64, high: f64 },
    /// `S = amplitude |omega|^(-exponent)` for `low <= |omega| <= high`.
    PowerLaw { amplitude: f64, exponent: f64, low: f64, high: f64 },
}

impl Psd {
    /// Flat band whose smallness parameter `tau^2 int S d omega` is `xi2`.
    pub fn flat_with_smallness(xi2: f64, low: f64, high: f64, tau: f64) -> Self {
        Psd::FlatBand { amplitude: xi2 / (2.0 * tau * tau * (high - low)), low, high }
    }

    /// Two-sided `tau^2 int S d omega`.
    pub fn smallness(&self, tau: f64) -> f64 {
        let one_sided = match *self {
            Psd::FlatBand { amplitude, low, high } => amplitude * (high - low),
            Psd::PowerLaw { amplitude, exponent, low, high } => {
                if (exponent - 1.0).abs() < 1e-12 {
                    amplitude * (high / low).ln()
                } else {
                    amplitude * (high.powf(1.0 - exponent) - low.powf(1.0 - exponent)) / (1.0 - exponent)
                }
            }
        };
        2.0 * tau * tau * one_sided
    }

    /// Copy with the spectral density multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Psd::FlatBand { amplitude, low, high } => Psd::FlatBand { amplitude: amplitude * factor, low, high },
            Psd::PowerLaw { amplitude, exponent, low, high } => {
                Psd::PowerLaw { amplitude: amplitude * factor, exponent, low, high }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, lo, hi) = match *self {
            Psd::FlatBand { amplitude, low, high } => (amplitude, low, high),
            Psd::PowerLaw { amplitude, low, high, .. } => {
                if !(low > 0.0) {
                    return Err(Error::InvalidArgument("power-law spectra need a positive lower edge".into()));
                }
                (amplitude, low, high)
            }
        };
        if !(a >= 0.0) || !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("spectrum amplitude {a} on [{lo}, {hi}]")));
        }
        Ok(())
    }
}

impl PowerSpectrum for Psd {
    fn density(&self, omega: f64) -> f64 {
        let w = omega.abs();
        match *self {
            Psd::FlatBand { amplitude, low, high } => {
                if w >= low && w <= high {
                    amplitude
                } else {
                    0.0
                }
            }
            Psd::PowerLaw { amplitude, exponent, low, high } => {
                if w >= low && w <= high {
                    amplitude * w.powf(-exponent)
                } else {
                    0.0
                }
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Psd::FlatBand { low, high, .. } | Psd::PowerLaw { low, high, .. } => (low, high),
        }
    }
}

/// Noise acting on one quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub quadrature: Quadrature,
    pub psd: Psd,
    #[serde(default = "default_components")]
    pub components: usize,
}

fn default_components() -> usize {
    MIN_COMPONENTS
}

impl NoiseModel {
    pub fn new(quadrature: Quadrature, psd: Psd) -> Self {
        Self { quadrature, psd, components: MIN_COMPONENTS }
    }

    fn validate(&self) -> Result<()> {
        self.psd.validate()?;
        if self.components < MIN_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "{} harmonics is below the minimum {MIN_COMPONENTS}",
                self.components
            )));
        }
        Ok(())
    }

    /// Harmonic frequencies and their amplitudes `sqrt(2 S dw / pi)`.
    ///
    /// Flat bands use a uniform midpoint grid and power laws a geometric one.
    fn harmonics(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.components;
        let (lo, hi) = self.psd.support();
        let mut freqs = Vec::with_capacity(n);
        let mut amps = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = match self.psd {
                Psd::FlatBand { .. } => {
                    let d = (hi - lo) / n as f64;
                    (lo + d * i as f64, lo + d * (i + 1) as f64)
                }
                Psd::PowerLaw { .. } => {
                    let r = (hi / lo).ln() / n as f64;
                    (lo * (r * i as f64).exp(), lo * (r * (i + 1) as f64).exp())
                }
            };
            let w = match self.psd {
                Psd::FlatBand { .. } => 0.5 * (a + b),
                Psd::PowerLaw { .. } => (a * b).sqrt(),
            };
            freqs.push(w);
            amps.push((2.0 * self.psd.density(w) * (b - a) / PI).sqrt());
        }
        (freqs, amps)
    }
}

/// A random-phase harmonic noise process.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProcess {
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl NoiseProcess {
    /// Draws random phases for `model` from the given seed and stream.
    pub fn new(model: &NoiseModel, seed: u64, stream: u64) -> Result<Self> {
        model.validate()?;
        let (frequencies, amplitudes) = model.harmonics();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let phases = (0..frequencies.len()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        Ok(Self { frequencies, amplitudes, phases })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.phases)
            .map(|((w, a), p)| a * (w * t + p).cos())
            .sum()
    }

    /// Upper bound on `|beta(t)|`.
    pub fn bound(&self) -> f64 {
        self.amplitudes.iter().sum()
    }
}

/// Sampled noise trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Samples one realization of `model` at the given times.
pub fn realize_noise(model: &NoiseModel, times: &[f64], seed: u64) -> Result<NoiseRealization> {
    let p = NoiseProcess::new(model, seed, 0)?;
    Ok(NoiseRealization { times: times.to_vec(), values: times.iter().map(|&t| p.value(t)).collect(), seed })
}

/// `exp(-i (h . sigma) dt)`.
fn su2_step(h: [f64; 3], dt: f64) -> Unitary2<f64> {
    let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if norm == 0.0 {
        return Unitary2::identity();
    }
    let a = norm * dt;
    let (s, c) = a.sin_cos();
    let n = [h[0] / norm, h[1] / norm, h[2] / norm];
    let i = Complex::i();
    Unitary2([
        [Complex::new(c, 0.0) - i * (s * n[2]), -i * s * Complex::new(n[0], -n[1])],
        [-i * s * Complex::new(n[0], n[1]), Complex::new(c, 0.0) + i * (s * n[2])],
    ])
}

/// Smallest uniform per-segment step count satisfying the step-angle limit
/// when the noise fields stay within the given bounds.
pub fn required_substeps(seq: &ControlSequence<f64>, bound_z: f64, bound_omega: f64) -> usize {
    seq.segments()
        .iter()
        .map(|s| {
            let angle = (s.rabi() * (1.0 + bound_omega) + 2.0 * bound_z) * s.duration();
            (angle / MAX_STEP_ANGLE).floor() as usize + 1
        })
        .max()
        .unwrap_or(1)
}

/// Outcome of one noisy evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub unitary: Unitary2<f64>,
    /// Noiseless propagator of the same sequence.
    pub ideal: Unitary2<f64>,
    /// `sum_i (int beta_i R_i dt)^2`, the first-order error on this path.
    pub first_order: f64,
}

impl Evolution {
    /// `1 - |Tr(U_c^dagger U)|^2 / 4`.
    pub fn infidelity(&self) -> f64 {
        1.0 - 0.25 * (self.ideal.adjoint() * self.unitary).trace().norm_sqr()
    }
}

/// Integrates `H = (1 + beta_Omega) H_c + beta_z sigma_z` with `substeps`
/// equal steps per segment, each using the midpoint noise value.
pub fn evolve(
    seq: &ControlSequence<f64>,
    noise_z: Option<&NoiseProcess>,
    noise_omega: Option<&NoiseProcess>,
    substeps: usize,
) -> Result<Evolution> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("zero substeps".into()));
    }
    let bz = noise_z.map_or(0.0, NoiseProcess::bound);
    let bo = noise_omega.map_or(0.0, NoiseProcess::bound);
    for s in seq.segments() {
        let dt = s.duration() / substeps as f64;
        let angle = (s.rabi() * (1.0 + bo) + 2.0 * bz) * dt;
        if angle > MAX_STEP_ANGLE {
            return Err(Error::StepTooCoarse { angle, limit: MAX_STEP_ANGLE });
        }
    }
    let times = seq.boundary_times();
    let qs = cumulative_operators(seq);
    let mut u = Unitary2::identity();
    let mut a_z = [0.0f64; 3];
    let mut a_o = [0.0f64; 3];
    for (l, s) in seq.segments().iter().enumerate() {
        let dt = s.duration() / substeps as f64;
        let (sp, cp) = s.phase().sin_cos();
        let ctrl = s.rabi() * 0.5;
        let mut qc = qs[l];
        let half_step = crate::control::rotation(s.angle() / substeps as f64 * 0.5, s.phase());
        for i in 0..substeps {
            let t = times[l] + (i as f64 + 0.5) * dt;
            let z = noise_z.map_or(0.0, |p| p.value(t));
            let o = noise_omega.map_or(0.0, |p| p.value(t));
            let amp = ctrl * (1.0 + o);
            u = su2_step([amp * cp, amp * sp, z], dt) * u;
            // Toggling-frame rows at the step midpoint for the first-order term.
            let qm = half_step * qc;
            let lam = crate::control::history_matrix(&qm);
            for j in 0..3 {
                a_z[j] += z * lam.0[2][j] * dt;
                a_o[j] += o * ctrl * (cp * lam.0[0][j] + sp * lam.0[1][j]) * dt;
            }
            qc = half_step * qm;
        }
    }
    if !u.0.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::NonFinite("propagator"));
    }
    let first_order = a_z.iter().chain(&a_o).map(|v| v * v).sum();
    Ok(Evolution { unitary: u, ideal: qs[seq.len()], first_order })
}

/// Noise acting during an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseEnvironment {
    pub dephasing: Option<NoiseModel>,
    pub amplitude: Option<NoiseModel>,
}

impl NoiseEnvironment {
    pub fn scaled(&self, factor: f64) -> Self {
        let f = |m: NoiseModel| NoiseModel { psd: m.psd.scaled(factor), ..m };
        Self { dephasing: self.dephasing.map(f), amplitude: self.amplitude.map(f) }
    }
}

/// First-order infidelity predicted from the filter functions.
pub fn predicted_infidelity(seq: &ControlSequence<f64>, noise: &NoiseEnvironment) -> Result<f64> {
    let mut total = 0.0;
    for (m, q) in [(noise.dephasing, Quadrature::Dephasing), (noise.amplitude, Quadrature::Amplitude)] {
        if let Some(m) = m {
            let o = noise_overlap(seq, q, &m.psd)?;
            if o.divergent {
                log::warn!("noise overlap for {:?} does not decay at the band edges", q);
            }
            total += o.value;
        }
    }
    Ok(total)
}

/// Ensemble statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub infidelities: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    /// Mean of the first-order error over the same realizations.
    pub first_order_mean: f64,
    pub predicted: f64,
    pub seed: u64,
}

/// Average infidelity over `realizations` independent noise draws.
///
/// Realization `i` uses stream `i` of the seeded generator, so results do not
/// depend on the thread count.
pub fn ensemble_infidelity(
    seq: &ControlSequence<f64>,
    noise: &NoiseEnvironment,
    realizations: usize,
    substeps: Option<usize>,
    seed: u64,
) -> Result<EnsembleResult> {
    if realizations < 2 {
        return Err(Error::InvalidArgument("need at least two realizations".into()));
    }
    let processes: Vec<(Option<NoiseProcess>, Option<NoiseProcess>)> = (0..realizations as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let pz = noise.dephasing.as_ref().map(|m| NoiseProcess::new(m, seed, 2 * i)).transpose()?;
            let po = noise.amplitude.as_ref().map(|m| NoiseProcess::new(m, seed, 2 * i + 1)).transpose()?;
            Ok((pz, po))
        })
        .collect::<Result<Vec<_>>>()?;
    let substeps = match substeps {
        Some(n) => n,
        None => {
            let worst = |f: fn(&(Option<NoiseProcess>, Option<NoiseProcess>)) -> Option<&NoiseProcess>| {
                processes.iter().filter_map(f).map(NoiseProcess::bound).fold(0.0, f64::max)
            };
            required_substeps(seq, worst(|p| p.0.as_ref()), worst(|p| p.1.as_ref()))
        }
    };
    let runs: Vec<(f64, f64)> = processes
        .par_iter()
        .map(|(pz, po)| -> Result<(f64, f64)> {
            let ev = evolve(seq, pz.as_ref(), po.as_ref(), substeps)?;
            Ok((ev.infidelity(), ev.first_order))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = runs.len() as f64;
    let infidelities: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let mean = infidelities.iter().sum::<f64>() / n;
    let var = infidelities.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let first_order_mean = runs.iter().map(|r| r.1).sum::<f64>() / n;
    Ok(EnsembleResult {
        infidelities,
        mean,
        std_error: (var / n).sqrt(),
        first_order_mean,
        predicted: predicted_infidelity(seq, noise)?,
        seed,
    })
}
