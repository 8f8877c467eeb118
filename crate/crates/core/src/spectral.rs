//! Band costs, filter-order estimates and noise-overlap integrals.

use serde::{Deserialize, Serialize};

use crate::control::ControlSequence;
use crate::error::{Error, Result};
use crate::filters::{log_grid_n, FilterEvaluator, Quadrature};
use crate::scalar::Real;

/// Split point used in place of a zero lower band edge, in units of `1/tau`.
pub const ZERO_EDGE: f64 = 1e-9;

/// Minimum number of lattice cells per decade.
pub const MIN_POINTS_PER_DECADE: usize = 200;

const GAUSS_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GAUSS_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Frequency band for a cost integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBand<T> {
    pub lower: T,
    pub upper: T,
    pub quadrature: Quadrature,
    pub points_per_decade: usize,
}

impl<T: Real> CostBand<T> {
    pub fn new(lower: T, upper: T, quadrature: Quadrature) -> Self {
        Self { lower, upper, quadrature, points_per_decade: MIN_POINTS_PER_DECADE }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower >= T::zero()) || !(self.upper > self.lower) || !self.upper.is_finite() {
            return Err(Error::InvalidArgument(format!("band [{}, {}] is empty", self.lower, self.upper)));
        }
        if self.points_per_decade < MIN_POINTS_PER_DECADE {
            return Err(Error::InvalidArgument(format!(
                "{} points per decade is below the minimum {MIN_POINTS_PER_DECADE}",
                self.points_per_decade
            )));
        }
        Ok(())
    }
}

/// Integrates `f` over `[a, b]` (`0 < a < b`).
///
/// The log-frequency axis is cut at a fixed lattice `10^(j / ppd)` and every
/// cell, including the partial end cells, gets a 4-point Gauss-Legendre rule
/// in `ln omega`. Because the lattice does not depend on the endpoints,
/// integrals over adjacent bands add up to the integral over their union.
pub fn integrate_log<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, points_per_decade: usize) -> Result<T> {
    if !(a > T::zero()) || !(b > a) {
        return Err(Error::InvalidArgument(format!("integration range [{a}, {b}]")));
    }
    let ppd = T::count(points_per_decade);
    let ln10 = T::LN_10();
    let first = ((a.log10() * ppd).floor()).to_i64().ok_or(Error::NonFinite("lattice"))?;
    let last = ((b.log10() * ppd).ceil()).to_i64().ok_or(Error::NonFinite("lattice"))?;
    let half = T::lit(0.5);
    let mut total = T::zero();
    for j in first..last {
        let lo = (T::lit(j as f64) / ppd * ln10).max(a.ln());
        let hi = (T::lit((j + 1) as f64) / ppd * ln10).min(b.ln());
        if hi <= lo {
            continue;
        }
        let (mid, rad) = ((lo + hi) * half, (hi - lo) * half);
        let mut cell = T::zero();
        for (x, wgt) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            let u = mid + rad * T::lit(*x);
            let w = u.exp();
            cell = cell + T::lit(wgt) * f(w) * w;
        }
        total = total + cell * rad;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("band integral"));
    }
    Ok(total)
}

/// Band cost `A = int F(omega) d omega` over the band.
///
/// A zero lower edge is split at `1e-9 / tau`; below the split a power law
/// fitted to the two lowest lattice points is integrated analytically.
pub fn cost<T: Real>(seq: &ControlSequence<T>, band: &CostBand<T>) -> Result<T> {
    band.validate()?;
    let ev = FilterEvaluator::new(seq);
    let f = |w: T| ev.filter(band.quadrature, w);
    if band.lower > T::zero() {
        return integrate_log(f, band.lower, band.upper, band.points_per_decade);
    }
    let split = T::lit(ZERO_EDGE) / seq.total_duration();
    if band.upper <= split {
        return Err(Error::InvalidArgument("band lies entirely below the low-frequency split".into()));
    }
    let main = integrate_log(f, split, band.upper, band.points_per_decade)?;
    let step = T::lit(10f64.powf(-1.0 / band.points_per_decade as f64));
    let (f1, f0) = (f(split), f(split * step));
    let tail = if f1 > T::zero() && f0 > T::zero() {
        let q = (f1 / f0).ln() / (T::one() / step).ln();
        if q <= -T::one() {
            return Err(Error::NonFinite("divergent low-frequency tail"));
        }
        f1 * split / (q + T::one())
    } else {
        T::zero()
    };
    Ok(main + tail)
}

/// Least-squares power-law fit of a filter function over a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate<T> {
    /// Log-log slope `2 p*`.
    pub slope: T,
    /// Filter order `p* - 1`.
    pub order: T,
    /// RMS deviation of the fit in decades.
    pub residual: T,
    /// Set when the residual exceeds 0.1 decades.
    pub poor_fit: bool,
}

/// Samples per decade used for order fits.
pub const ORDER_POINTS_PER_DECADE: usize = 20;

/// Fits `log F` against `log omega` over `[lo, hi]`.
pub fn filter_order<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature, lo: T, hi: T) -> Result<OrderEstimate<T>> {
    if !(lo > T::zero()) || !(hi > lo) {
        return Err(Error::InvalidArgument(format!("order band [{lo}, {hi}]")));
    }
    let ev = FilterEvaluator::new(seq);
    let decades = (hi / lo).log10().as_f64();
    let n = ((decades * ORDER_POINTS_PER_DECADE as f64).ceil() as usize).max(2) + 1;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for w in log_grid_n(lo, hi, n) {
        let f = ev.filter(quadrature, w);
        if !(f > T::zero()) {
            return Err(Error::NonFinite("filter value vanished in order fit"));
        }
        xs.push(w.log10());
        ys.push(f.log10());
    }
    Ok(fit_line(&xs, &ys))
}

fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> OrderEstimate<T> {
    let n = T::count(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, x| a + *x) / n;
    let my = ys.iter().fold(T::zero(), |a, y| a + *y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(ys) {
        sxy = sxy + (*x - mx) * (*y - my);
        sxx = sxx + (*x - mx) * (*x - mx);
    }
    let slope = sxy / sxx;
    let mut sq = T::zero();
    for (x, y) in xs.iter().zip(ys) {
        let r = *y - (my + slope * (*x - mx));
        sq = sq + r * r;
    }
    let residual = (sq / n).sqrt();
    OrderEstimate {
        slope,
        order: slope * T::lit(0.5) - T::one(),
        residual,
        poor_fit: residual > T::lit(0.1),
    }
}

/// Local order `(d ln F / d ln omega) / 2 - 1` at one frequency.
pub fn instantaneous_order<T: Real>(seq: &ControlSequence<T>, quadrature: Quadrature, omega: T) -> T {
    let ev = FilterEvaluator::new(seq);
    let step = T::lit(1e-3);
    let up = ev.filter(quadrature, omega * step.exp());
    let dn = ev.filter(quadrature, omega * (-step).exp());
    (up / dn).ln() / (step + step) * T::lit(0.5) - T::one()
}

/// Two-sided, even noise power spectral density.
pub trait PowerSpectrum: Sync {
    /// `S(omega)` for `omega >= 0`.
    fn density(&self, omega: f64) -> f64;
    /// Positive-frequency support `(lo, hi)`.
    fn support(&self) -> (f64, f64);
}

/// Result of a filter-noise overlap integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    /// `(1 / pi) int_0^inf S(omega) F(omega) / omega^2 d omega`.
    pub value: f64,
    /// Set when the integrand does not decay at the edges of the support.
    pub divergent: bool,
}

/// First-order infidelity contribution of one noise quadrature.
pub fn noise_overlap(seq: &ControlSequence<f64>, quadrature: Quadrature, psd: &dyn PowerSpectrum) -> Result<Overlap> {
    let ev = FilterEvaluator::new(seq);
    let (lo, hi) = psd.support();
    let tau = seq.total_duration();
    let lo_eff = if lo > 0.0 { lo } else { ZERO_EDGE / tau };
    if !(hi > lo_eff) {
        return Err(Error::InvalidArgument(format!("noise support [{lo}, {hi}] is empty")));
    }
    let g = |w: f64| psd.density(w) * ev.filter(quadrature, w) / (w * w);
    let main = integrate_log(g, lo_eff, hi, MIN_POINTS_PER_DECADE)?;
    // Below the split the integrand is close to S(0+) F / omega^2, which is bounded for F ~ omega^2.
    let head = if lo > 0.0 { 0.0 } else { g(lo_eff) * lo_eff };
    let total = main + head;
    let edge_lo = g(lo_eff) * lo_eff;
    let edge_hi = g(hi) * hi;
    let divergent = !total.is_finite() || (total > 0.0 && (edge_lo.max(edge_hi) > 1e3 * total));
    Ok(Overlap { value: total / std::f64::consts::PI, divergent })
}
