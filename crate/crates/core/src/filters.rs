//! Frequency-domain control vectors and filter-transfer functions.
//!
//! For each noise quadrature the control vector `R(omega)` is the Fourier
//! transform of the toggling-frame noise axis, and the filter function is
//! `F(omega) = |R(omega)|^2`. Evaluation is closed-form per segment: no
//! time-domain quadrature is involved.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{history_matrices, ControlSequence, HistoryMatrix, Segment};
use crate::error::{Error, Result};
use crate::scalar::{sinc, Real};

/// Relative half-width of the band around `omega = Omega` in which the
/// resonance-free form of the segment response is used.
pub const RESONANCE_GUARD: f64 = 1e-6;

/// Noise quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Dephasing noise coupling through `sigma_z`.
    Dephasing,
    /// Multiplicative Rabi-rate (amplitude) noise.
    Amplitude,
}

/// Control vector at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlVector<T> {
    pub components: [Complex<T>; 3],
    pub quadrature: Quadrature,
}

impl<T: Real> ControlVector<T> {
    /// `|R|^2` summed over components.
    pub fn filter_value(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }
}

/// Filter functions sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSamples<T> {
    pub grid: Vec<T>,
    pub dephasing: Vec<T>,
    pub amplitude: Vec<T>,
    pub label: String,
}

impl<T: Real> FilterSamples<T> {
    /// Samples for one quadrature.
    pub fn values(&self, quadrature: Quadrature) -> &[T] {
        match quadrature {
            Quadrature::Dephasing => &self.dephasing,
            Quadrature::Amplitude => &self.amplitude,
        }
    }

    /// Writes `omega_tau,F_z,F_omega` rows with 17 significant digits.
    ///
    /// `tau` is the duration used to make the frequency column dimensionless.
    pub fn write_csv<W: Write>(&self, mut out: W, tau: T) -> std::io::Result<()> {
        writeln!(out, "omega_tau,F_z,F_omega")?;
        for ((w, fz), fo) in self.grid.iter().zip(&self.dephasing).zip(&self.amplitude) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", (*w * tau).as_f64(), fz.as_f64(), fo.as_f64())?;
        }
        Ok(())
    }
}

/// Log-spaced grid between `lo` and `hi` with `points_per_decade` spacing.
pub fn log_grid<T: Real>(lo: T, hi: T, points_per_decade: usize) -> Result<Vec<T>> {
    if !(lo > T::zero()) || !(hi > lo) || points_per_decade == 0 {
        return Err(Error::InvalidArgument(format!("bad grid [{lo}, {hi}] at {points_per_decade}/decade")));
    }
    let decades = (hi / lo).log10();
    let n = ((decades * T::count(points_per_decade)).ceil().to_usize().unwrap_or(1)).max(1);
    Ok(log_grid_n(lo, hi, n + 1))
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid_n<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * T::count(i) / T::count(n - 1)).exp()
            }
        })
        .collect()
}

/// Dephasing row of one segment, started from the identity, at `omega`.
pub fn local_dephasing_row<T: Real>(segment: &Segment<T>, omega: T) -> [Complex<T>; 3] {
    let w = omega;
    let om = segment.rabi();
    let tau = segment.duration();
    let (sp, cp) = segment.phase().sin_cos();
    let zero = Complex::new(T::zero(), T::zero());
    if w == T::zero() {
        return [zero; 3];
    }
    if (w - om).abs() < T::lit(RESONANCE_GUARD) * om || (w + om).abs() < T::lit(RESONANCE_GUARD) * om {
        return resonance_free_row(segment, omega);
    }
    let theta = om * tau;
    let (st, ct) = theta.sin_cos();
    let phase = Complex::from_polar(T::one(), w * tau);
    let i = Complex::new(T::zero(), T::one());
    let pre = w / (w * w - om * om);
    let b = i * phase * (om * ct) + phase * (w * st) - i * om;
    let v = i * phase * (om * st) - phase * (w * ct) + Complex::new(w, T::zero());
    [b * (pre * sp), b * (-pre * cp), v * pre]
}

/// Same row as [`local_dephasing_row`], written with `cos` and `sin` of
/// `Omega t` split into exponentials. Every term is a bounded sinc, so there
/// is no removable singularity at `omega = Omega`.
pub fn resonance_free_row<T: Real>(segment: &Segment<T>, omega: T) -> [Complex<T>; 3] {
    let (w, om, tau) = (omega, segment.rabi(), segment.duration());
    let (sp, cp) = segment.phase().sin_cos();
    let half = T::lit(0.5);
    let e = |a: T| Complex::from_polar(tau * sinc(a * tau * half), a * tau * half);
    let (ep, em) = (e(w + om), e(w - om));
    let diff = (ep - em) * (w * half);
    let sum = (ep + em) * (w * half);
    [diff * sp, -diff * cp, Complex::new(T::zero(), -T::one()) * sum]
}

/// Precomputed boundary times and history matrices of a sequence.
#[derive(Debug, Clone)]
pub struct FilterEvaluator<T> {
    segments: Vec<Segment<T>>,
    times: Vec<T>,
    histories: Vec<HistoryMatrix<T>>,
}

impl<T: Real> FilterEvaluator<T> {
    pub fn new(seq: &ControlSequence<T>) -> Self {
        Self { segments: seq.segments().to_vec(), times: seq.boundary_times(), histories: history_matrices(seq) }
    }

    pub fn control_vector(&self, quadrature: Quadrature, omega: T) -> ControlVector<T> {
        let components = match quadrature {
            Quadrature::Dephasing => self.dephasing(omega),
            Quadrature::Amplitude => self.amplitude(omega),
        };
        ControlVector { components, quadrature }
    }

    pub fn filter(&self, quadrature: Quadrature, omega: T) -> T {
        self.control_vector(quadrature, omega).filter_value()
    }

    fn dephasing(&self, omega: T) -> [Complex<T>; 3] {
        let mut acc = [Complex::new(T::zero(), T::zero()); 3];
        for (l, seg) in self.segments.iter().enumerate() {
            let row = local_dephasing_row(seg, omega);
            let rotated = self.histories[l].left_mul(&row);
            let shift = Complex::from_polar(T::one(), omega * self.times[l]);
            for (a, r) in acc.iter_mut().zip(rotated) {
                *a = *a + shift * r;
            }
        }
        acc
    }

    fn amplitude(&self, omega: T) -> [Complex<T>; 3] {
        let half = T::lit(0.5);
        let mut acc = [Complex::new(T::zero(), T::zero()); 3];
        for (l, seg) in self.segments.iter().enumerate() {
            // e^{i w t_{l-1}} - e^{i w t_l} written without cancellation
            let mid = (self.times[l] + self.times[l + 1]) * half;
            let diff = Complex::new(T::zero(), -T::lit(2.0) * (omega * seg.duration() * half).sin())
                * Complex::from_polar(T::one(), omega * mid);
            let (sp, cp) = seg.phase().sin_cos();
            let amp = seg.rabi() * half;
            let row = [amp * cp, amp * sp, T::zero()];
            let rotated = self.histories[l].left_mul(&row);
            for (a, r) in acc.iter_mut().zip(rotated) {
                *a = *a + diff * r;
            }
        }
        acc
    }
}

/// Zeroth time moment `M_0 = int_0^tau R(t) dt` of the toggling-frame noise
/// axis, in closed form. Near zero frequency `R(omega) = -i omega M_0 + O(omega^2)`,
/// so `C_2 = |M_0|^2 / tau^2` exactly.
pub fn first_moment<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature) -> [T; 3] {
    let half = T::lit(0.5);
    let mut acc = [T::zero(); 3];
    for (seg, lambda) in seq.segments().iter().zip(history_matrices(seq)) {
        let tau = seg.duration();
        let (sp, cp) = seg.phase().sin_cos();
        let row = match quadrature {
            Quadrature::Dephasing => {
                let theta = seg.angle();
                let s = tau * (theta * half).sin() * sinc(theta * half);
                [-sp * s, cp * s, tau * sinc(theta)]
            }
            Quadrature::Amplitude => {
                let amp = seg.rabi() * half * tau;
                [amp * cp, amp * sp, T::zero()]
            }
        };
        for (a, r) in acc.iter_mut().zip(lambda.left_mul(&row)) {
            *a = *a + r;
        }
    }
    acc
}

/// Exact leading Taylor coefficient `C_2` from [`first_moment`].
pub fn leading_coefficient<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature) -> T {
    let m = first_moment(seq, quadrature);
    let tau = seq.total_duration();
    (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) / (tau * tau)
}

/// Dephasing control vector `R_z(omega)`.
pub fn dephasing_control_vector<T: Real>(seq: &ControlSequence<T>, omega: T) -> ControlVector<T> {
    FilterEvaluator::new(seq).control_vector(Quadrature::Dephasing, omega)
}

/// Amplitude control vector `R_Omega(omega)`.
pub fn amplitude_control_vector<T: Real>(seq: &ControlSequence<T>, omega: T) -> ControlVector<T> {
    FilterEvaluator::new(seq).control_vector(Quadrature::Amplitude, omega)
}

/// Filter function of one quadrature on a grid, in parallel.
pub fn filter_values<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature, grid: &[T]) -> Vec<T> {
    let ev = FilterEvaluator::new(seq);
    grid.par_iter().map(|&w| ev.filter(quadrature, w)).collect()
}

/// Both filter functions on a grid.
pub fn filter_functions<T: Real>(seq: &ControlSequence<T>, grid: &[T]) -> FilterSamples<T> {
    let ev = FilterEvaluator::new(seq);
    let (dephasing, amplitude) = grid
        .par_iter()
        .map(|&w| (ev.filter(Quadrature::Dephasing, w), ev.filter(Quadrature::Amplitude, w)))
        .unzip();
    FilterSamples { grid: grid.to_vec(), dephasing, amplitude, label: seq.label.clone() }
}

/// Settings of the low-frequency polynomial fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorFitOptions {
    /// Upper end of the fit window in units of `omega tau`.
    pub window: f64,
    /// Decades spanned below the upper end.
    pub decades: f64,
    /// Number of log-spaced sample points.
    pub points: usize,
    /// Polynomial degree in `(omega tau)^2` of `F / (omega tau)^2`.
    pub degree: usize,
    /// Relative RMS residual above which a warning is logged.
    pub residual_warning: f64,
}

impl Default for TaylorFitOptions {
    fn default() -> Self {
        Self { window: 0.25, decades: 4.0, points: 160, degree: 6, residual_warning: 1e-8 }
    }
}

/// Fitted low-frequency expansion `F = sum_k C_{2k} (omega tau)^{2k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorFit<T> {
    /// `coefficients[j]` is `C_{2(j+1)}`.
    pub coefficients: Vec<T>,
    /// Relative RMS residual of the finer fit.
    pub residual: T,
}

impl<T: Real> TaylorFit<T> {
    /// `C_{2k}` for `k >= 1`, zero beyond the fitted degree.
    pub fn coefficient(&self, k: usize) -> T {
        if k == 0 {
            return T::zero();
        }
        self.coefficients.get(k - 1).copied().unwrap_or_else(T::zero)
    }
}

/// Fits the Taylor coefficients of a filter function with default options.
pub fn taylor_fit<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature) -> Result<TaylorFit<T>> {
    taylor_fit_with(seq, quadrature, &TaylorFitOptions::default())
}

/// Taylor coefficient `C_{2k}` of a filter function.
pub fn taylor_coefficient<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature, k: usize) -> Result<T> {
    if k == 0 || k > TaylorFitOptions::default().degree {
        return Err(Error::InvalidArgument(format!("Taylor order {k} outside 1..=6")));
    }
    Ok(taylor_fit(seq, quadrature)?.coefficient(k))
}

/// Fits `F / (omega tau)^2` as a polynomial in `(omega tau)^2` at two window
/// sizes and combines them by Richardson extrapolation.
pub fn taylor_fit_with<T: Real>(
    seq: &ControlSequence<T>,
    quadrature: Quadrature,
    opts: &TaylorFitOptions,
) -> Result<TaylorFit<T>> {
    let tau = seq.total_duration();
    let ev = FilterEvaluator::new(seq);
    let fit_at = |h: T| -> Result<(Vec<T>, T)> {
        let lo = h * T::lit(10f64.powf(-opts.decades));
        let xs = log_grid_n(lo, h, opts.points);
        let mut rows = Vec::with_capacity(xs.len());
        let mut rhs = Vec::with_capacity(xs.len());
        for &x in &xs {
            let f = ev.filter(quadrature, x / tau);
            if !f.is_finite() {
                return Err(Error::NonFinite("filter value"));
            }
            let u = (x / h) * (x / h);
            let mut row = Vec::with_capacity(opts.degree + 1);
            let mut p = T::one();
            for _ in 0..=opts.degree {
                row.push(p);
                p = p * u;
            }
            rows.push(row);
            rhs.push(f / (x * x));
        }
        let c = least_squares(&rows, &rhs)?;
        let scale = rhs.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut sq = T::zero();
        for (row, y) in rows.iter().zip(&rhs) {
            let pred = row.iter().zip(&c).fold(T::zero(), |a, (r, ci)| a + *r * *ci);
            sq = sq + (pred - *y) * (pred - *y);
        }
        let rms = (sq / T::count(rows.len())).sqrt();
        let rel = if scale > T::zero() { rms / scale } else { T::zero() };
        // Undo the window scaling: c_j multiplies (x/h)^{2j}.
        let mut hp = T::one();
        let coeffs = c
            .into_iter()
            .map(|cj| {
                let v = cj / hp;
                hp = hp * h * h;
                v
            })
            .collect();
        Ok((coeffs, rel))
    };
    let h = T::lit(opts.window);
    let (coarse, _) = fit_at(h)?;
    let (fine, residual) = fit_at(h * T::lit(0.5))?;
    let next = opts.degree + 1;
    let coefficients = coarse
        .iter()
        .zip(&fine)
        .enumerate()
        .map(|(j, (c, f))| {
            let ratio = T::lit(4f64.powi((next - j) as i32));
            *f + (*f - *c) / (ratio - T::one())
        })
        .collect();
    if residual.as_f64() > opts.residual_warning {
        log::warn!("Taylor fit for '{}' is ill-conditioned: relative residual {residual}", seq.label);
    }
    Ok(TaylorFit { coefficients, residual })
}

/// Least squares through modified Gram-Schmidt QR.
pub(crate) fn least_squares<T: Real>(rows: &[Vec<T>], rhs: &[T]) -> Result<Vec<T>> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if m < n || n == 0 {
        return Err(Error::InvalidArgument("underdetermined least-squares problem".into()));
    }
    // Column-major copy with column equilibration.
    let mut q: Vec<Vec<T>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut r = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        for i in 0..j {
            let d = q[i].iter().zip(&q[j]).fold(T::zero(), |a, (x, y)| a + *x * *y);
            r[i][j] = r[i][j] + d;
            let qi = q[i].clone();
            for (x, y) in q[j].iter_mut().zip(qi) {
                *x = *x - d * y;
            }
        }
        // Second orthogonalization pass for stability.
        for i in 0..j {
            let d = q[i].iter().zip(&q[j]).fold(T::zero(), |a, (x, y)| a + *x * *y);
            r[i][j] = r[i][j] + d;
            let qi = q[i].clone();
            for (x, y) in q[j].iter_mut().zip(qi) {
                *x = *x - d * y;
            }
        }
        let norm = q[j].iter().fold(T::zero(), |a, x| a + *x * *x).sqrt();
        if norm == T::zero() {
            return Err(Error::NonFinite("rank-deficient fit"));
        }
        r[j][j] = norm;
        for x in q[j].iter_mut() {
            *x = *x / norm;
        }
    }
    let qtb: Vec<T> = q.iter().map(|col| col.iter().zip(rhs).fold(T::zero(), |a, (x, y)| a + *x * *y)).collect();
    let mut c = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s = ((i + 1)..n).fold(qtb[i], |a, k| a - r[i][k] * c[k]);
        c[i] = s / r[i][i];
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn primitive(theta: f64) -> ControlSequence<f64> {
        ControlSequence::from_triples(&[(theta, 1.0, 0.0)], "p").unwrap()
    }

    #[test]
    fn free_evolution() {
        let seq = primitive(0.0);
        for w in [1e-3, 0.5, 3.0, 40.0] {
            let f = FilterEvaluator::new(&seq).filter(Quadrature::Dephasing, w);
            let want = (Complex::new(1.0, 0.0) - Complex::from_polar(1.0, w)).norm_sqr();
            assert!((f - want).abs() < 1e-13 * want.max(1e-30), "w={w}");
        }
    }

    #[test]
    fn resonance_free_form_matches_closed_form() {
        let seg = Segment::new(3.0, 0.7, 0.4).unwrap();
        for w in [0.01, 1.0, 2.9, 3.1, 10.0, 55.0] {
            let a = local_dephasing_row(&seg, w);
            let b = resonance_free_row(&seg, w);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12, "w={w}");
            }
        }
    }

    #[test]
    fn guard_band_is_smooth() {
        let seq = primitive(3.0);
        let ev = FilterEvaluator::new(&seq);
        let exact = ev.filter(Quadrature::Dephasing, 3.0);
        assert!(exact.is_finite());
        // Just inside and just outside the guard, at the same offset scale.
        let inside = ev.filter(Quadrature::Dephasing, 3.0 * (1.0 + 0.9e-6));
        let outside = ev.filter(Quadrature::Dephasing, 3.0 * (1.0 + 1.1e-6));
        let slope = (outside - inside) / (3.0 * 0.2e-6);
        let far = (ev.filter(Quadrature::Dephasing, 3.0 * (1.0 + 1e-4)) - exact) / (3.0 * 1e-4);
        assert!((slope - far).abs() < 1e-2 * far.abs().max(1.0));
    }

    #[test]
    fn amplitude_low_frequency_limit() {
        // R_Omega -> -i omega * sum tau_l T_l Lambda, here |.|^2 = (theta/2)^2 omega^2
        let seq = primitive(PI);
        let w = 1e-4;
        let f = FilterEvaluator::new(&seq).filter(Quadrature::Amplitude, w);
        assert!((f / (w * w) - PI * PI / 4.0).abs() < 1e-6);
    }

    #[test]
    fn least_squares_recovers_polynomial() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x, x * x]).collect();
        let rhs: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let c = least_squares(&rows, &rhs).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn first_moment_is_low_frequency_limit() {
        let seq = ControlSequence::<f64>::from_triples(&[(7.0, 0.3, 0.4), (-3.0, 0.5, 2.0), (11.0, 0.2, -1.0)], "s").unwrap();
        let w = 1e-7;
        for q in [Quadrature::Dephasing, Quadrature::Amplitude] {
            let m = first_moment(&seq, q);
            let r = FilterEvaluator::new(&seq).control_vector(q, w).components;
            for j in 0..3 {
                assert!((r[j].im / -w - m[j]).abs() < 1e-6, "{q:?} {j}");
            }
            let fit: f64 = taylor_fit(&seq, q).unwrap().coefficient(1);
            assert!((leading_coefficient(&seq, q) - fit).abs() < 1e-9 * fit.max(1.0));
        }
    }

    #[test]
    fn primitive_taylor_coefficients() {
        // theta = 0: F = |1 - e^{iw}|^2 = 2 - 2 cos w = w^2 - w^4/12 + w^6/360
        let fit = taylor_fit(&primitive(0.0), Quadrature::Dephasing).unwrap();
        assert!((fit.coefficient(1) - 1.0).abs() < 1e-10);
        assert!((fit.coefficient(2) + 1.0 / 12.0).abs() < 1e-10);
        assert!((fit.coefficient(3) - 1.0 / 360.0).abs() < 1e-9);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-9, 1e-1, 200).unwrap();
        assert_eq!(g.len(), 1601);
        assert_eq!(g[0], 1e-9);
        assert_eq!(*g.last().unwrap(), 1e-1);
        assert!(log_grid(0.0, 1.0, 10).is_err());
    }
}
