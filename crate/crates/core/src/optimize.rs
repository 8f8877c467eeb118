//! Nelder-Mead search, bracketed root finding and cost maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::wamf03_c2_amplitude;
use crate::control::ControlSequence;
use crate::error::{Error, Result};
use crate::filters::{first_moment, Quadrature};
use crate::spectral::{cost, CostBand};

/// Nelder-Mead settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Initial simplex step along each axis.
    pub initial_step: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Stop when the spread of objective values falls below this.
    pub f_tol: f64,
    pub max_iterations: usize,
    /// Extra jittered restarts from the best point.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.1 * std::f64::consts::PI,
            x_tol: 1e-10,
            f_tol: 1e-14,
            max_iterations: 5000,
            restarts: 3,
            seed: 0,
        }
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when some run stopped at the iteration limit.
    pub converged: bool,
    /// Best objective value after each iteration across all runs.
    pub trace: Vec<f64>,
}

impl OptimizeResult {
    pub fn improved(&self) -> bool {
        self.value < self.initial_value
    }
}

/// Minimizes `objective` from `start` with Nelder-Mead and jittered restarts.
///
/// Non-finite objective values are treated as `+inf`, so the returned point
/// never has a larger objective than the starting point.
pub fn nelder_mead<F>(objective: F, start: &[f64], opts: &NelderMeadOptions) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64,
{
    if start.is_empty() {
        return Err(Error::EmptyParameterSet);
    }
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let initial_value = eval(start);
    let mut best = (start.to_vec(), initial_value);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for run in 0..=opts.restarts {
        let steps: Vec<f64> = (0..start.len())
            .map(|_| if run == 0 { opts.initial_step } else { opts.initial_step * rng.gen_range(0.5..1.5) })
            .collect();
        let (x, v, its, ok) = single_run(&mut eval, &best.0, &steps, opts, &mut trace);
        iterations += its;
        converged &= ok;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(OptimizeResult { argmin: best.0, value: best.1, initial_value, iterations, evaluations, converged, trace })
}

fn single_run<F: FnMut(&[f64]) -> f64>(
    eval: &mut F,
    start: &[f64],
    steps: &[f64],
    o: &NelderMeadOptions,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, usize, bool) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for (i, step) in steps.iter().enumerate() {
        let mut p = start.to_vec();
        p[i] += step;
        let v = eval(&p);
        simplex.push((p, v));
    }
    let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for it in 0..o.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = simplex[n].1 - simplex[0].1;
        if diameter < o.x_tol || (spread.is_finite() && spread.abs() < o.f_tol && diameter < o.x_tol.sqrt()) {
            let (p, v) = simplex.swap_remove(0);
            return (p, v, it, true);
        }
        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = blend(&centroid, &worst.0, -o.reflection);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = blend(&centroid, &worst.0, -o.reflection * o.expansion);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst.1 { (&reflected, fr) } else { (&worst.0, worst.1) };
            let contracted = blend(&centroid, target, o.contraction);
            let fc = eval(&contracted);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p = blend(&best, &entry.0, o.shrink);
                    let v = eval(&p);
                    *entry = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (p, v) = simplex.swap_remove(0);
    log::warn!("Nelder-Mead stopped at the iteration limit ({})", o.max_iterations);
    (p, v, o.max_iterations, false)
}

/// Bisection to absolute tolerance `tol` for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (mut fa, fb) = (f(a), f(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NonFinite("bisection endpoint"));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `X_3` in the bracket at which the analytic `C_2` of `wamf03(x0, X_3)` vanishes.
pub fn find_c2_zero(x0: f64, lo: f64, hi: f64) -> Result<f64> {
    bisect(|x3| wamf03_c2_amplitude(x0, x3), lo, hi, 1e-10)
}

/// Parameter in `[lo, hi]` at which the zeroth time moment of `build(x)`
/// vanishes, so that `C_2 = 0`.
///
/// The moment is projected on its direction at `lo`. For families whose
/// moment stays on a fixed line (time-symmetric amplitude modulation, for
/// instance) the projection changes sign at the root.
pub fn tune_first_moment<B>(build: B, quadrature: Quadrature, lo: f64, hi: f64) -> Result<f64>
where
    B: Fn(f64) -> Result<ControlSequence<f64>>,
{
    let m0 = first_moment(&build(lo)?, quadrature);
    let norm = m0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Ok(lo);
    }
    let dir = m0.map(|v| v / norm);
    let project = |x: f64| match build(x) {
        Ok(seq) => first_moment(&seq, quadrature).iter().zip(&dir).map(|(a, b)| a * b).sum(),
        Err(_) => f64::NAN,
    };
    bisect(project, lo, hi, 1e-14 * (hi - lo).abs().max(1.0))
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// A 1-D parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.lo];
        }
        (0..self.points).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64).collect()
    }
}

/// `log10` band costs over a 2-D parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMap {
    pub rows: Vec<f64>,
    pub columns: Vec<f64>,
    /// `values[i][j]` is the cost at `(rows[i], columns[j])`; `NaN` where the
    /// family could not be built.
    pub values: Vec<Vec<f64>>,
}

impl CostMap {
    /// Grid point with the smallest cost.
    pub fn argmin(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.is_finite() && best.map_or(true, |b| *v < b.2) {
                    best = Some((self.rows[i], self.columns[j], *v));
                }
            }
        }
        best
    }

    /// Writes the matrix with a header row of column values.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "row\\col")?;
        for c in &self.columns {
            write!(out, ",{c:.16e}")?;
        }
        writeln!(out)?;
        for (r, row) in self.rows.iter().zip(&self.values) {
            write!(out, "{r:.16e}")?;
            for v in row {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Evaluates `log10 A` over a grid, rows in parallel.
pub fn cost_map<B>(build: B, rows: &Axis, columns: &Axis, band: &CostBand<f64>) -> CostMap
where
    B: Fn(f64, f64) -> Result<ControlSequence<f64>> + Sync,
{
    let (rv, cv) = (rows.values(), columns.values());
    let values = rv
        .par_iter()
        .map(|&r| {
            cv.iter()
                .map(|&c| build(r, c).and_then(|s| cost(&s, band)).map(f64::log10).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    CostMap { rows: rv, columns: cv, values }
}
