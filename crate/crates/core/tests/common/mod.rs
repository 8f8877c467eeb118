//! Independent reference computations used by the integration tests.
//!
//! Everything here works in the time domain from the propagators themselves:
//! toggling-frame rows come from `Tr[Q(t)^dagger sigma Q(t) sigma_j] / 2` and
//! integrals are done with composite Gauss-Legendre rules.

#![allow(dead_code)]

use num_complex::Complex64;
use walsh_filter::control::{cumulative_operators, rotation, Pauli, Unitary2};
use walsh_filter::filters::Quadrature;
use walsh_filter::ControlSequence;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, x);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let d = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                ws[i] = 2.0 / ((1.0 - x * x) * d * d);
                break;
            }
        }
        xs[i] = x;
    }
    (xs, ws)
}

fn half_trace(a: &Unitary2<f64>) -> f64 {
    0.5 * a.trace().re
}

/// Toggling-frame noise row at time `t` for one quadrature.
pub fn toggling_row(seq: &ControlSequence, quadrature: Quadrature, t: f64) -> [f64; 3] {
    let times = seq.boundary_times();
    let qs = cumulative_operators(seq);
    let l = (0..seq.len()).find(|&l| t < times[l + 1]).unwrap_or(seq.len() - 1);
    let s = &seq.segments()[l];
    let q = rotation(s.rabi() * (t - times[l]), s.phase()) * qs[l];
    let qd = q.adjoint();
    let (noise, scale) = match quadrature {
        Quadrature::Dephasing => (Pauli::Z.matrix::<f64>(), 1.0),
        Quadrature::Amplitude => {
            let (sp, cp) = s.phase().sin_cos();
            let x = Pauli::X.matrix::<f64>();
            let y = Pauli::Y.matrix::<f64>();
            let mut m = x;
            for r in 0..2 {
                for c in 0..2 {
                    m.0[r][c] = x.0[r][c] * cp + y.0[r][c] * sp;
                }
            }
            (m, 0.5 * s.rabi())
        }
    };
    let left = qd * noise * q;
    let mut out = [0.0; 3];
    for (j, p) in Pauli::ALL.iter().enumerate() {
        out[j] = scale * half_trace(&(left * p.matrix()));
    }
    out
}

/// Integrates `g(t)` over each segment with composite Gauss-Legendre panels.
fn integrate_segments<V, G>(seq: &ControlSequence, panels_per_rad: f64, mut g: G, zero: V) -> V
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Mul<f64, Output = V>,
    G: FnMut(f64) -> V,
{
    let (xs, ws) = gauss_legendre(16);
    let times = seq.boundary_times();
    let mut acc = zero;
    for (l, s) in seq.segments().iter().enumerate() {
        let (a, b) = (times[l], times[l + 1]);
        let panels = ((s.rabi() * (b - a) + 1.0) * panels_per_rad).ceil() as usize + 2;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let c = a + (p as f64 + 0.5) * h;
            for (x, w) in xs.iter().zip(&ws) {
                acc = acc + g(c + 0.5 * h * x) * (0.5 * h * w);
            }
        }
    }
    acc
}

#[derive(Clone, Copy)]
struct C3([Complex64; 3]);

impl std::ops::Add for C3 {
    type Output = C3;
    fn add(self, o: C3) -> C3 {
        C3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Mul<f64> for C3 {
    type Output = C3;
    fn mul(self, k: f64) -> C3 {
        C3([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

/// `-i omega int_0^tau e^{i omega t} R(t) dt` by quadrature.
pub fn control_vector_by_quadrature(seq: &ControlSequence, quadrature: Quadrature, omega: f64) -> [Complex64; 3] {
    let panels_per_rad = 1.0 + omega * seq.total_duration() / seq.len() as f64;
    let zero = C3([Complex64::new(0.0, 0.0); 3]);
    let integral = integrate_segments(
        seq,
        panels_per_rad,
        |t| {
            let r = toggling_row(seq, quadrature, t);
            let e = Complex64::from_polar(1.0, omega * t);
            C3([e * r[0], e * r[1], e * r[2]])
        },
        zero,
    );
    let k = Complex64::new(0.0, -omega);
    [k * integral.0[0], k * integral.0[1], k * integral.0[2]]
}

/// Filter value by quadrature.
pub fn filter_by_quadrature(seq: &ControlSequence, quadrature: Quadrature, omega: f64) -> f64 {
    control_vector_by_quadrature(seq, quadrature, omega).iter().map(|c| c.norm_sqr()).sum()
}

#[derive(Clone, Copy)]
struct R3([f64; 3]);

impl std::ops::Add for R3 {
    type Output = R3;
    fn add(self, o: R3) -> R3 {
        R3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Mul<f64> for R3 {
    type Output = R3;
    fn mul(self, k: f64) -> R3 {
        R3([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

/// Exact Taylor coefficients `C_2, C_4, ...` (in powers of `omega tau`) from
/// the time moments `M_n = int t^n R(t) dt`.
pub fn taylor_by_moments(seq: &ControlSequence, quadrature: Quadrature, count: usize) -> Vec<f64> {
    let tau = seq.total_duration();
    let nmax = 2 * count;
    let moments: Vec<[f64; 3]> = (0..=nmax)
        .map(|n| {
            integrate_segments(
                seq,
                4.0,
                |t| {
                    let r = toggling_row(seq, quadrature, t);
                    R3(r) * (t / tau).powi(n as i32)
                },
                R3([0.0; 3]),
            )
            .0
        })
        .collect();
    let fact: Vec<f64> = (0..=nmax).scan(1.0, |f, n| {
        if n > 0 {
            *f *= n as f64;
        }
        Some(*f)
    })
    .collect();
    (0..count)
        .map(|j| {
            let mut c = 0.0;
            for n in 0..=2 * j {
                let m = 2 * j - n;
                let dot: f64 = (0..3).map(|i| moments[n][i] * moments[m][i]).sum();
                let sign = if (n as i64 - j as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                c += sign * dot / (fact[n] * fact[m]);
            }
            c / (tau * tau)
        })
        .collect()
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
