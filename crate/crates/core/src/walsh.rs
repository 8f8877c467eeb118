//! Rademacher and Walsh functions in Paley order, Sylvester-Hadamard
//! matrices and the mapping between Walsh spectra and segment values.

use num_complex::Complex;
use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sinc, Real};

/// Largest supported Hadamard order exponent.
pub const MAX_ORDER: u32 = 20;

/// Index of a Walsh function in Paley order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PaleyIndex(pub u64);

impl PaleyIndex {
    /// Position of the most significant set bit, counted from one; zero for `k = 0`.
    pub fn msb_position(self) -> u32 {
        64 - self.0.leading_zeros()
    }

    /// Number of set bits.
    pub fn hamming_weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Number of equal segments needed to represent `PAL_k`.
    pub fn segment_count(self) -> usize {
        1usize << self.msb_position()
    }

    /// Whether the Rademacher function `R_j` (j >= 1) is a factor of `PAL_k`.
    pub fn has_factor(self, j: u32) -> bool {
        j >= 1 && j <= 64 && (self.0 >> (j - 1)) & 1 == 1
    }
}

impl From<u64> for PaleyIndex {
    fn from(k: u64) -> Self {
        PaleyIndex(k)
    }
}

/// Whether a spectrum modulates the Rabi rate or the phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Amplitude,
    Phase,
}

/// Paley-ordered Walsh amplitudes of a control waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshSpectrum<T> {
    pub amplitudes: Vec<T>,
    pub modulation: Modulation,
    pub duration: T,
}

impl<T: Clone + Num> WalshSpectrum<T> {
    pub fn new(amplitudes: Vec<T>, modulation: Modulation, duration: T) -> Self {
        Self { amplitudes, modulation, duration }
    }

    /// Highest Paley index carried by the spectrum.
    pub fn highest_index(&self) -> PaleyIndex {
        PaleyIndex(self.amplitudes.len().saturating_sub(1) as u64)
    }

    /// Number of segments `M = 2^m(N)` of the synthesized waveform.
    pub fn segment_count(&self) -> usize {
        self.highest_index().segment_count()
    }

    /// Amplitude of `PAL_k`, zero beyond the stored range.
    pub fn amplitude(&self, k: usize) -> T {
        self.amplitudes.get(k).cloned().unwrap_or_else(T::zero)
    }
}

/// Rademacher function `R_j(x) = sgn sin(2^j pi x)` on `[0, 1]`.
///
/// Values at the jump points are the right limits, except `x = 1` which
/// takes the left limit, so the result is always +1 or -1.
pub fn rademacher<T: Real>(j: u32, x: T) -> Result<i8> {
    if !x.is_finite() || x < T::zero() || x > T::one() {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, 1]")));
    }
    if j > 62 {
        return Err(Error::InvalidArgument(format!("Rademacher index {j} too large")));
    }
    let bins = 1u64 << j;
    let scaled = (x * T::lit(bins as f64)).floor();
    let idx = scaled.to_u64().unwrap_or(0).min(bins - 1);
    Ok(if idx % 2 == 0 { 1 } else { -1 })
}

/// Walsh function `PAL_k(x)` in Paley order on `[0, 1]`.
pub fn paley<T: Real>(k: PaleyIndex, x: T) -> Result<i8> {
    let mut value = rademacher(0, x)?;
    for j in 1..=k.msb_position() {
        if k.has_factor(j) {
            value *= rademacher(j, x)?;
        }
    }
    Ok(value)
}

/// Values of `PAL_k` on each of `bins` equal sub-intervals of `[0, 1]`.
///
/// `bins` must be a power of two not smaller than the segment count of `k`.
pub fn paley_bins(k: PaleyIndex, bins: usize) -> Result<Vec<i8>> {
    if !bins.is_power_of_two() || bins < k.segment_count() {
        return Err(Error::InvalidArgument(format!(
            "{bins} bins cannot resolve Walsh function {}",
            k.0
        )));
    }
    let n = bins.trailing_zeros();
    Ok((0..bins)
        .map(|s| {
            // R_j on bin s is the parity of bit (n - j) of s.
            let mut parity = 0u32;
            for j in 1..=k.msb_position() {
                if k.has_factor(j) {
                    parity ^= ((s >> (n - j)) & 1) as u32;
                }
            }
            if parity == 0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Sylvester-Hadamard matrix of order `2^n`.
///
/// Entries are `(-1)^popcount(i & j)` which is the Kronecker-power
/// construction from `[[1, 1], [1, -1]]`. Entries are produced on demand so
/// the largest orders do not need to be materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hadamard {
    n: u32,
}

impl Hadamard {
    pub fn new(n: u32) -> Result<Self> {
        if n > MAX_ORDER {
            return Err(Error::TooLarge { requested: 1 << n.min(63), limit: 1 << MAX_ORDER });
        }
        Ok(Self { n })
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> usize {
        1 << self.n
    }

    /// Entry at zero-based row `i` and column `j`.
    pub fn entry(&self, i: usize, j: usize) -> i8 {
        if (i & j).count_ones() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Dense row-major copy of the matrix.
    pub fn to_dense(&self) -> Vec<i8> {
        let m = self.order();
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(self.entry(i, j));
            }
        }
        out
    }

    /// Dense matrix-vector product `H v`.
    pub fn mul_vec<T: Clone + Num>(&self, v: &[T]) -> Vec<T> {
        let m = self.order();
        assert_eq!(v.len(), m, "vector length must equal the matrix order");
        (0..m)
            .map(|i| {
                v.iter().enumerate().fold(T::zero(), |acc, (j, x)| {
                    if self.entry(i, j) > 0 {
                        acc + x.clone()
                    } else {
                        acc - x.clone()
                    }
                })
            })
            .collect()
    }
}

/// Builds the Sylvester-Hadamard matrix of order `2^n`.
pub fn hadamard(n: u32) -> Result<Hadamard> {
    Hadamard::new(n)
}

/// One-based column of `H_{2^n}` holding the sampled `PAL_k`.
///
/// The column is `1 + sum_j b_j 2^(n-j)` where `b_j` are the bits of `k`.
pub fn paley_to_hadamard_column(k: PaleyIndex, n: u32) -> Result<usize> {
    if k.msb_position() > n {
        return Err(Error::InvalidArgument(format!("index {} does not fit in order 2^{n}", k.0)));
    }
    Ok(1 + zero_based_column(k.0 as usize, n))
}

fn zero_based_column(k: usize, n: u32) -> usize {
    if n == 0 {
        0
    } else {
        k.reverse_bits() >> (usize::BITS - n)
    }
}

/// In-place fast Walsh-Hadamard transform with the Sylvester ordering.
fn fwht<T: Clone + Num>(v: &mut [T]) {
    let m = v.len();
    let mut h = 1;
    while h < m {
        for start in (0..m).step_by(2 * h) {
            for i in start..start + h {
                let a = v[i].clone();
                let b = v[i + h].clone();
                v[i] = a.clone() + b.clone();
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Segment values `f = H_M q` of the waveform `sum_k X_k PAL_k`.
///
/// The result has `M = 2^m(N)` entries, one per equal time segment.
pub fn synthesize<T: Clone + Num>(spectrum: &WalshSpectrum<T>) -> Result<Vec<T>> {
    let m = spectrum.segment_count();
    let n = m.trailing_zeros();
    if n > MAX_ORDER {
        return Err(Error::TooLarge { requested: m, limit: 1 << MAX_ORDER });
    }
    let mut q = vec![T::zero(); m];
    for (k, x) in spectrum.amplitudes.iter().enumerate() {
        q[zero_based_column(k, n)] = x.clone();
    }
    fwht(&mut q);
    Ok(q)
}

/// Paley-ordered spectrum of the waveform with the given segment values.
///
/// The number of values must be a power of two; the returned spectrum
/// carries all `M` amplitudes.
pub fn analyze<T: Clone + Num + FromPrimitive>(
    values: &[T],
    modulation: Modulation,
    duration: T,
) -> Result<WalshSpectrum<T>> {
    let m = values.len();
    if !m.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("{m} values is not a power of two")));
    }
    let n = m.trailing_zeros();
    if n > MAX_ORDER {
        return Err(Error::TooLarge { requested: m, limit: 1 << MAX_ORDER });
    }
    let mut q = values.to_vec();
    fwht(&mut q);
    let scale = T::from_usize(m).ok_or(Error::NonFinite("analysis normalization"))?;
    let amplitudes = (0..m).map(|k| q[zero_based_column(k, n)].clone() / scale.clone()).collect();
    Ok(WalshSpectrum { amplitudes, modulation, duration })
}

/// Fourier integral `int_0^1 PAL_k(x) e^{i nu x} dx`.
///
/// Uses the factorization over binary digits of the bin index, which keeps
/// full relative accuracy at small `nu` where the bin sum would cancel.
pub fn paley_fourier<T: Real>(k: PaleyIndex, nu: T) -> Complex<T> {
    let m = k.msb_position();
    let bins = T::lit((1u64 << m) as f64);
    let delta = T::one() / bins;
    let half = T::lit(0.5);
    let mut acc = Complex::from_polar(delta * sinc(nu * delta * half), nu * delta * half);
    for i in 0..m {
        // Digit i of the bin index is paired with R_{m - i}.
        let a = nu * delta * T::lit((1u64 << i) as f64);
        let factor = if k.has_factor(m - i) {
            Complex::new(T::zero(), -T::lit(2.0) * (a * half).sin()) * Complex::from_polar(T::one(), a * half)
        } else {
            Complex::new(T::lit(2.0) * (a * half).cos(), T::zero()) * Complex::from_polar(T::one(), a * half)
        };
        acc = acc * factor;
    }
    acc
}
