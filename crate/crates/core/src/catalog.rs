//! Named control-sequence families.
//!
//! Walsh amplitudes `X_k` are dimensionless: a segment value `f` becomes the
//! Rabi rate `f / tau`, so the net rotation of an amplitude-modulated
//! sequence is `X_0`.

use serde::{Deserialize, Serialize};

use crate::control::ControlSequence;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::walsh::{paley_bins, synthesize, Modulation, PaleyIndex, WalshSpectrum};

/// A sequence family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum Family<T> {
    /// Single square pulse.
    Primitive { theta: T, #[serde(default)] phi: T },
    /// Walsh amplitude modulation with `PAL_0` and `PAL_3`.
    Wamf03 {
        #[serde(rename = "X0")]
        x0: T,
        #[serde(rename = "X3")]
        x3: T,
    },
    /// Walsh amplitude modulation with `PAL_0, PAL_3, PAL_5, PAL_6`.
    Wamf07 {
        #[serde(rename = "X0")]
        x0: T,
        #[serde(rename = "X3")]
        x3: T,
        #[serde(rename = "X5")]
        x5: T,
        #[serde(rename = "X6")]
        x6: T,
    },
    /// Phase-modulated amplitude-error correction with one Walsh function.
    Wpmf { k: u64, theta: T },
    /// Broadband amplitude-error correction, merged to four segments.
    Bb1 { theta: T },
    /// Walsh-modulated identity with constant Rabi magnitude.
    Wrse { k: u64, omega0: T, #[serde(default)] phi0: T },
    /// Amplitude modulation whose segments are each replaced by SK1 blocks.
    Uwmf1 {
        #[serde(rename = "X0")]
        x0: T,
        #[serde(rename = "X3")]
        x3: T,
    },
    /// Amplitude modulation with shared-rate SK1 corrections.
    Uwmf2 {
        #[serde(rename = "X0")]
        x0: T,
        #[serde(rename = "X3")]
        x3: T,
    },
}

/// Family plus total duration, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CatalogSpec<T> {
    #[serde(flatten)]
    pub family: Family<T>,
    #[serde(default = "unit")]
    pub tau: T,
}

fn unit<T: Real>() -> T {
    T::one()
}

impl<T: Real> CatalogSpec<T> {
    pub fn build(&self) -> Result<ControlSequence<T>> {
        catalog(&self.family, self.tau)
    }
}

impl<T: Real> Family<T> {
    /// Short lowercase family name.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Primitive { .. } => "primitive",
            Family::Wamf03 { .. } => "wamf03",
            Family::Wamf07 { .. } => "wamf07",
            Family::Wpmf { .. } => "wpmf",
            Family::Bb1 { .. } => "bb1",
            Family::Wrse { .. } => "wrse",
            Family::Uwmf1 { .. } => "uwmf1",
            Family::Uwmf2 { .. } => "uwmf2",
        }
    }
}

/// Builds the sequence of a family with total duration `tau`.
pub fn catalog<T: Real>(family: &Family<T>, tau: T) -> Result<ControlSequence<T>> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("duration {tau} must be positive")));
    }
    match *family {
        Family::Primitive { theta, phi } => {
            ControlSequence::from_triples(&[(theta / tau, tau, phi)], format!("primitive({theta})"))
        }
        Family::Wamf03 { x0, x3 } => {
            amplitude_modulated(&[x0, T::zero(), T::zero(), x3], tau, format!("wamf03({x0}, {x3})"))
        }
        Family::Wamf07 { x0, x3, x5, x6 } => {
            let z = T::zero();
            amplitude_modulated(&[x0, z, z, x3, z, x5, x6], tau, format!("wamf07({x0}, {x3}, {x5}, {x6})"))
        }
        Family::Wpmf { k, theta } => wpmf(k, theta, tau),
        Family::Bb1 { theta } => bb1(theta, tau),
        Family::Wrse { k, omega0, phi0 } => wrse(k, omega0, phi0, tau),
        Family::Uwmf1 { x0, x3 } => uwmf1(x0, x3, tau),
        Family::Uwmf2 { x0, x3 } => uwmf2(x0, x3, tau),
    }
}

/// Equal-duration segments with Rabi rates synthesized from a Walsh spectrum.
pub fn amplitude_modulated<T: Real>(amplitudes: &[T], tau: T, label: String) -> Result<ControlSequence<T>> {
    let spectrum = WalshSpectrum::new(amplitudes.to_vec(), Modulation::Amplitude, tau);
    let values = synthesize(&spectrum)?;
    let dt = tau / T::count(values.len());
    let triples: Vec<(T, T, T)> = values.iter().map(|f| (*f / tau, dt, T::zero())).collect();
    ControlSequence::from_triples(&triples, label)
}

/// Phase of the 2-pi correction segments that cancels `C_2` of amplitude noise.
pub fn wpmf_phase<T: Real>(k: u64, theta: T) -> Result<T> {
    let m = T::count(PaleyIndex(k).segment_count());
    let arg = -theta / (T::TAU() * m);
    if arg.abs() > T::one() {
        return Err(Error::InvalidArgument(format!("rotation {theta} too large for correction index {k}")));
    }
    Ok(arg.acos())
}

fn wpmf<T: Real>(k: u64, theta: T, tau: T) -> Result<ControlSequence<T>> {
    if !(theta > T::zero()) || !(theta < T::TAU()) {
        return Err(Error::InvalidArgument(format!("target rotation {theta} outside (0, 2 pi)")));
    }
    let idx = PaleyIndex(k);
    let m = idx.segment_count();
    let y = wpmf_phase(k, theta)?;
    let omega0 = (theta + T::TAU() * T::count(m)) / tau;
    let mut triples = vec![(omega0, theta / omega0, T::zero())];
    for b in paley_bins(idx, m)? {
        triples.push((omega0, T::TAU() / omega0, y * T::lit(b as f64)));
    }
    ControlSequence::from_triples(&triples, format!("wpmf{k}({theta})"))
}

fn bb1<T: Real>(theta: T, tau: T) -> Result<ControlSequence<T>> {
    let four_pi = T::lit(4.0) * T::PI();
    let phi = (-theta / four_pi).acos();
    let omega0 = (four_pi + theta) / tau;
    let angles = [(theta, T::zero()), (T::PI(), phi), (T::TAU(), T::lit(3.0) * phi), (T::PI(), phi)];
    let triples: Vec<(T, T, T)> = angles.iter().map(|&(a, p)| (omega0, a / omega0, p)).collect();
    ControlSequence::from_triples(&triples, format!("bb1({theta})"))
}

fn wrse<T: Real>(k: u64, omega0: T, phi0: T, tau: T) -> Result<ControlSequence<T>> {
    let idx = PaleyIndex(k);
    let m = idx.segment_count();
    let dt = tau / T::count(m);
    let triples: Vec<(T, T, T)> =
        paley_bins(idx, m)?.into_iter().map(|b| (omega0 * T::lit(b as f64), dt, phi0)).collect();
    ControlSequence::from_triples(&triples, format!("wrse{k}({omega0})"))
}

fn uwmf_envelope<T: Real>(x0: T, x3: T) -> Result<(T, T)> {
    let (xp, xm) = (x0 + x3, x0 - x3);
    if !(xp > T::zero()) || !(xm > T::zero()) {
        return Err(Error::InvalidArgument(format!("segment rotations {xp}, {xm} must be positive")));
    }
    Ok((xp, xm))
}

fn sk1_phase<T: Real>(x: T, scale: f64) -> Result<T> {
    let arg = -x / (T::lit(scale) * T::PI());
    if arg.abs() > T::one() {
        return Err(Error::InvalidArgument(format!("rotation {x} too large for SK1 correction")));
    }
    Ok(arg.acos())
}

fn uwmf1<T: Real>(x0: T, x3: T, tau: T) -> Result<ControlSequence<T>> {
    let (xp, xm) = uwmf_envelope(x0, x3)?;
    let (p1, p2) = (sk1_phase(xp, 16.0)?, sk1_phase(xm, 8.0)?);
    let two_pi = T::TAU();
    let w1 = (xp + T::lit(16.0) * T::PI()) / tau;
    let w2 = (xm + T::lit(8.0) * T::PI()) / tau;
    let t_target1 = tau * T::lit(0.25) * xp / (xp + T::lit(16.0) * T::PI());
    let t_corr1 = two_pi * tau / (xp + T::lit(16.0) * T::PI());
    let t_target2 = tau * T::lit(0.5) * xm / (xm + T::lit(8.0) * T::PI());
    let t_corr2 = two_pi * tau / (xm + T::lit(8.0) * T::PI());
    let z = T::zero();
    let triples = [
        (w1, t_target1, z),
        (w1, t_corr1, p1),
        (w1, t_corr1, -p1),
        (w2, t_target2, z),
        (w2, t_corr2, p2),
        (w2, t_corr2, -p2),
        (w1, t_target1, z),
        (w1, t_corr1, p1),
        (w1, t_corr1, -p1),
    ];
    ControlSequence::from_triples(&triples, format!("uwmf1({x0}, {x3})"))
}

fn uwmf2<T: Real>(x0: T, x3: T, tau: T) -> Result<ControlSequence<T>> {
    let (xp, xm) = uwmf_envelope(x0, x3)?;
    let (p1, p2) = (sk1_phase(xp, 16.0)?, sk1_phase(xm, 8.0)?);
    let kappa = T::lit(4.0) * (T::lit(2.0) / xp + T::one() / xm);
    let nu = tau * T::lit(0.25) / (T::one() + T::PI() * kappa);
    let w1 = xp / (T::lit(4.0) * nu);
    let w2 = xm / (T::lit(4.0) * nu);
    let c1 = T::lit(8.0) * T::PI() * nu / xp;
    let c2 = T::lit(8.0) * T::PI() * nu / xm;
    let z = T::zero();
    let triples = [
        (w1, nu, z),
        (w1, c1, p1),
        (w1, c1, -p1),
        (w2, nu + nu, z),
        (w2, c2, p2),
        (w2, c2, -p2),
        (w1, nu, z),
        (w1, c1, p1),
        (w1, c1, -p1),
    ];
    ControlSequence::from_triples(&triples, format!("uwmf2({x0}, {x3})"))
}

/// Signed `C_2` amplitude of the dephasing filter of `wamf03(x0, x3)`.
///
/// `C_2 = 4 g^2`; `g` changes sign across the zeros of `C_2`, which makes it
/// suitable for bracketing root searches.
pub fn wamf03_c2_amplitude<T: Real>(x0: T, x3: T) -> T {
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let den = x0 * x0 - x3 * x3;
    if den.abs() < T::lit(1e-9) * x0 * x0 {
        // Removable singularity at x3 = +-x0.
        let s = x3.signum();
        return s * ((x0 * half).sin() + x0 * half) / (T::lit(2.0) * x0);
    }
    ((x0 - x3) * (x0 * half).sin() + T::lit(2.0) * x3 * ((x0 - x3) * quarter).sin()) / den
}

/// Analytic `C_2` of the dephasing filter of `wamf03(x0, x3)`.
pub fn wamf03_c2<T: Real>(x0: T, x3: T) -> T {
    let g = wamf03_c2_amplitude(x0, x3);
    T::lit(4.0) * g * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wamf03_segments() {
        let seq = catalog(&Family::Wamf03 { x0: 3.0 * PI, x3: PI }, 1.0).unwrap();
        let rates: Vec<f64> = seq.segments().iter().map(|s| s.signed_rabi()).collect();
        assert_eq!(rates.len(), 4);
        for (r, w) in rates.iter().zip([4.0, 2.0, 2.0, 4.0]) {
            assert!((r - w * PI).abs() < 1e-12);
        }
        assert!((seq.total_rotation().0 - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn uwmf_durations_sum_to_tau() {
        for fam in [Family::Uwmf1 { x0: 3.0 * PI, x3: PI }, Family::Uwmf2 { x0: 3.0 * PI, x3: PI }] {
            let seq = catalog(&fam, 2.0).unwrap();
            assert_eq!(seq.len(), 9);
            assert!((seq.total_duration() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uwmf_net_rotation_matches_envelope() {
        let seq = catalog(&Family::Uwmf2 { x0: 3.0 * PI, x3: PI }, 1.0).unwrap();
        let targets: f64 = [0usize, 3, 6].iter().map(|&i| seq.segments()[i].angle()).sum();
        assert!((targets - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn bb1_phase() {
        let seq = catalog(&Family::Bb1 { theta: PI }, 1.0).unwrap();
        assert_eq!(seq.len(), 4);
        assert!((seq.segments()[1].phase() - (-0.25f64).acos()).abs() < 1e-12);
        assert!((seq.total_duration() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrse_is_identity() {
        let seq = catalog(&Family::Wrse { k: 7, omega0: 4.0 * PI, phi0: 0.0 }, 1.0).unwrap();
        assert_eq!(seq.len(), 8);
        assert!(seq.total_rotation().0.abs() < 1e-12);
    }

    #[test]
    fn wamf_c2_zero() {
        assert!(wamf03_c2(3.0 * PI, PI).abs() < 1e-28);
        assert!(wamf03_c2(3.0 * PI, 0.0) > 1e-3);
        let near = wamf03_c2_amplitude(3.0 * PI, 3.0 * PI * (1.0 - 1e-7));
        let at = wamf03_c2_amplitude(3.0 * PI, 3.0 * PI);
        assert!((near - at).abs() < 1e-6);
    }

    #[test]
    fn wpmf_rejects_out_of_range() {
        assert!(catalog(&Family::Wpmf { k: 1, theta: 7.0 }, 1.0).is_err());
        let seq = catalog(&Family::Wpmf { k: 3, theta: PI / 2.0 }, 1.0).unwrap();
        assert_eq!(seq.len(), 5);
    }
}
