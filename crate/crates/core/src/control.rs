//! Piecewise-constant control sequences, their propagators and the
//! control-history rotation matrices.

use std::ops::Mul;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One constant-amplitude, constant-phase control segment.
///
/// The Rabi rate is stored as a magnitude. A negative input rate is folded
/// into the phase (`phi + pi`) and remembered in `negated`, so the signed
/// rotation angle can still be recovered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    rabi: T,
    duration: T,
    phase: T,
    negated: bool,
}

impl<T: Real> Segment<T> {
    /// Creates a segment from a signed Rabi rate, a duration and a phase.
    pub fn new(rabi: T, duration: T, phase: T) -> Result<Self> {
        if !rabi.is_finite() || !duration.is_finite() || !phase.is_finite() {
            return Err(Error::NonFinite("segment"));
        }
        if duration <= T::zero() {
            return Err(Error::ZeroDuration { index: 0 });
        }
        let negated = rabi < T::zero();
        let shifted = if negated { phase + T::PI() } else { phase };
        Ok(Self { rabi: rabi.abs(), duration, phase: wrap_phase(shifted), negated })
    }

    /// Creates a segment from its signed rotation angle.
    pub fn from_angle(angle: T, duration: T, phase: T) -> Result<Self> {
        Self::new(angle / duration, duration, phase)
    }

    /// Rabi-rate magnitude.
    pub fn rabi(&self) -> T {
        self.rabi
    }

    /// Rabi rate with the sign given at construction.
    pub fn signed_rabi(&self) -> T {
        if self.negated {
            -self.rabi
        } else {
            self.rabi
        }
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    /// Phase of the rotation axis in `[0, 2 pi)`, after folding any sign.
    pub fn phase(&self) -> T {
        self.phase
    }

    /// Phase as given at construction, before folding a negative rate.
    pub fn signed_phase(&self) -> T {
        if self.negated {
            wrap_phase(self.phase - T::PI())
        } else {
            self.phase
        }
    }

    pub fn negated(&self) -> bool {
        self.negated
    }

    /// Non-negative rotation angle `|Omega| tau`.
    pub fn angle(&self) -> T {
        self.rabi * self.duration
    }

    /// Rotation angle carrying the sign of the input Rabi rate.
    pub fn signed_angle(&self) -> T {
        self.signed_rabi() * self.duration
    }

    /// Segment propagator `exp(-i theta sigma_phi / 2)`.
    pub fn unitary(&self) -> Unitary2<T> {
        rotation(self.angle(), self.phase)
    }
}

fn wrap_phase<T: Real>(phi: T) -> T {
    let two_pi = T::TAU();
    let r = phi % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}

/// Serializable segment record; times are in units of the total duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub omega: f64,
    pub tau: f64,
    pub phi: f64,
}

/// Ordered list of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence<T> {
    segments: Vec<Segment<T>>,
    pub label: String,
}

impl<T: Real> ControlSequence<T> {
    pub fn new(segments: Vec<Segment<T>>, label: impl Into<String>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("a sequence needs at least one segment".into()));
        }
        Ok(Self { segments, label: label.into() })
    }

    /// Builds a sequence from `(signed rabi, duration, phase)` triples.
    pub fn from_triples(triples: &[(T, T, T)], label: impl Into<String>) -> Result<Self> {
        let segments = triples
            .iter()
            .enumerate()
            .map(|(i, &(w, t, p))| {
                Segment::new(w, t, p).map_err(|e| match e {
                    Error::ZeroDuration { .. } => Error::ZeroDuration { index: i },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments, label)
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> T {
        self.segments.iter().fold(T::zero(), |acc, s| acc + s.duration)
    }

    /// Segment boundary times `t_0 = 0, t_1, ..., t_n`.
    pub fn boundary_times(&self) -> Vec<T> {
        let mut times = Vec::with_capacity(self.segments.len() + 1);
        let mut t = T::zero();
        times.push(t);
        for s in &self.segments {
            t = t + s.duration;
            times.push(t);
        }
        times
    }

    /// Signed net rotation `Theta` and its value modulo `2 pi`.
    pub fn total_rotation(&self) -> (T, T) {
        let theta = self.segments.iter().fold(T::zero(), |acc, s| acc + s.signed_angle());
        (theta, wrap_phase(theta))
    }

    /// Copy with every duration and Rabi rate rescaled to total duration `tau`,
    /// keeping all rotation angles.
    pub fn rescaled(&self, tau: T) -> Result<Self> {
        let scale = tau / self.total_duration();
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(s.signed_rabi() / scale, s.duration * scale, s.signed_phase()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments, self.label.clone())
    }

    /// Merges neighbouring segments with equal Rabi rate and phase.
    pub fn coalesced(&self, tol: T) -> Self {
        let mut out: Vec<Segment<T>> = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            if let Some(last) = out.last_mut() {
                if (last.signed_rabi() - s.signed_rabi()).abs() <= tol
                    && (last.signed_phase() - s.signed_phase()).abs() <= tol
                {
                    last.duration = last.duration + s.duration;
                    continue;
                }
            }
            out.push(*s);
        }
        Self { segments: out, label: self.label.clone() }
    }

    /// Records with times expressed in units of the total duration.
    pub fn to_records(&self) -> Vec<SegmentRecord> {
        let total = self.total_duration();
        self.segments
            .iter()
            .map(|s| SegmentRecord {
                omega: (s.signed_rabi() * total).as_f64(),
                tau: (s.duration / total).as_f64(),
                phi: s.signed_phase().as_f64(),
            })
            .collect()
    }

    /// Rebuilds a sequence of total duration `tau` from records.
    pub fn from_records(records: &[SegmentRecord], tau: T, label: impl Into<String>) -> Result<Self> {
        let triples: Vec<(T, T, T)> = records
            .iter()
            .map(|r| (T::lit(r.omega) / tau, T::lit(r.tau) * tau, T::lit(r.phi)))
            .collect();
        Self::from_triples(&triples, label)
    }
}

/// Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix<T: Real>(self) -> Unitary2<T> {
        let (o, l, i) = (T::zero(), T::one(), Complex::i());
        let c = |re: T| Complex::new(re, o);
        match self {
            Pauli::X => Unitary2([[c(o), c(l)], [c(l), c(o)]]),
            Pauli::Y => Unitary2([[c(o), -i], [i, c(o)]]),
            Pauli::Z => Unitary2([[c(l), c(o)], [c(o), c(-l)]]),
        }
    }
}

/// A 2x2 complex matrix, used for single-qubit propagators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2<T>(pub [[Complex<T>; 2]; 2]);

impl<T: Real> Unitary2<T> {
    pub fn identity() -> Self {
        let (o, l) = (Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()));
        Self([[l, o], [o, l]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex<T> {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> Complex<T> {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest entry-wise deviation of `U^dagger U` from the identity.
    pub fn unitarity_error(&self) -> T {
        let p = self.adjoint() * *self;
        let id = Self::identity();
        let mut worst = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.0[r][c] - id.0[r][c]).norm());
            }
        }
        worst
    }

    /// Largest entry-wise distance to another matrix.
    pub fn distance(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

impl<T: Real> Mul for Unitary2<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self(out)
    }
}

/// `exp(-i theta sigma_phi / 2)` with `sigma_phi = cos(phi) X + sin(phi) Y`.
pub fn rotation<T: Real>(theta: T, phi: T) -> Unitary2<T> {
    let half = theta * T::lit(0.5);
    let (s, c) = half.sin_cos();
    let (o, cc) = (T::zero(), Complex::new(c, T::zero()));
    let off_up = Complex::new(o, -s) * Complex::from_polar(T::one(), -phi);
    let off_dn = Complex::new(o, -s) * Complex::from_polar(T::one(), phi);
    Unitary2([[cc, off_up], [off_dn, cc]])
}

/// Propagator of a single segment.
pub fn segment_unitary<T: Real>(segment: &Segment<T>) -> Unitary2<T> {
    segment.unitary()
}

/// Cumulative propagators `Q_0 = I, Q_l = P_l Q_{l-1}`; `n + 1` entries.
pub fn cumulative_operators<T: Real>(seq: &ControlSequence<T>) -> Vec<Unitary2<T>> {
    let mut out = Vec::with_capacity(seq.len() + 1);
    let mut q = Unitary2::identity();
    out.push(q);
    for s in seq.segments() {
        q = s.unitary() * q;
        out.push(q);
    }
    out
}

/// Rotation matrix `Lambda_ij = Tr[Q^dagger sigma_i Q sigma_j] / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryMatrix<T>(pub [[T; 3]; 3]);

impl<T: Real> HistoryMatrix<T> {
    pub fn identity() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self([[l, o, o], [o, l, o], [o, o, l]])
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `Lambda Lambda^T - I` in magnitude.
    pub fn orthogonality_error(&self) -> T {
        let m = &self.0;
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let dot = (0..3).fold(T::zero(), |acc, k| acc + m[i][k] * m[j][k]);
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Row vector times matrix, `v Lambda`.
    pub fn left_mul<V>(&self, v: &[V; 3]) -> [V; 3]
    where
        V: Copy + std::ops::Add<Output = V> + std::ops::Mul<T, Output = V>,
    {
        let m = &self.0;
        std::array::from_fn(|j| v[0] * m[0][j] + v[1] * m[1][j] + v[2] * m[2][j])
    }
}

/// Control-history matrix of a cumulative propagator.
pub fn history_matrix<T: Real>(q: &Unitary2<T>) -> HistoryMatrix<T> {
    let qd = q.adjoint();
    let mut out = [[T::zero(); 3]; 3];
    for (i, pi) in Pauli::ALL.iter().enumerate() {
        let left = qd * pi.matrix() * *q;
        for (j, pj) in Pauli::ALL.iter().enumerate() {
            out[i][j] = (left * pj.matrix()).trace().re * T::lit(0.5);
        }
    }
    HistoryMatrix(out)
}

/// History matrices `Lambda^(0) .. Lambda^(n)` of a sequence.
pub fn history_matrices<T: Real>(seq: &ControlSequence<T>) -> Vec<HistoryMatrix<T>> {
    cumulative_operators(seq).iter().map(history_matrix).collect()
}

/// Signed net rotation `Theta` and `Theta mod 2 pi`.
pub fn total_rotation<T: Real>(seq: &ControlSequence<T>) -> (T, T) {
    seq.total_rotation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn negative_rate_folds_into_phase() {
        let s = Segment::new(-2.0, 0.5, 0.25).unwrap();
        assert_eq!(s.rabi(), 2.0);
        assert!((s.phase() - (0.25 + PI)).abs() < 1e-15);
        assert_eq!(s.signed_angle(), -1.0);
        assert!((s.signed_phase() - 0.25).abs() < 1e-15);
        let flipped = Segment::new(2.0, 0.5, 0.25 + PI).unwrap();
        assert!(s.unitary().distance(&flipped.unitary()) < 1e-15);
    }

    #[test]
    fn zero_duration_rejected_zero_angle_allowed() {
        assert!(Segment::new(1.0, 0.0, 0.0).is_err());
        let err = ControlSequence::from_triples(&[(1.0, 1.0, 0.0), (1.0, 0.0, 0.0)], "x").unwrap_err();
        assert_eq!(err, Error::ZeroDuration { index: 1 });
        assert!(Segment::new(0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn pi_pulse_is_minus_i_x() {
        let u = rotation(PI, 0.0);
        let want = Pauli::X.matrix::<f64>();
        for r in 0..2 {
            for c in 0..2 {
                let target = want.0[r][c] * Complex::new(0.0, -1.0);
                assert!((u.0[r][c] - target).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn history_of_x_rotation() {
        let q = rotation(0.7, 0.0);
        let l = history_matrix(&q);
        // Heisenberg picture: Q^dagger Z Q = cos Z + sin (x cross z direction)
        assert!((l.0[2][2] - 0.7f64.cos()).abs() < 1e-14);
        assert!((l.0[2][1] - 0.7f64.sin()).abs() < 1e-14);
        assert!((l.0[0][0] - 1.0).abs() < 1e-14);
        assert!((l.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn total_rotation_wraps() {
        let seq = ControlSequence::from_triples(&[(4.0 * PI, 0.5, 0.0), (2.0 * PI, 0.5, 0.0)], "w").unwrap();
        let (theta, wrapped) = seq.total_rotation();
        assert!((theta - 3.0 * PI).abs() < 1e-14);
        assert!((wrapped - PI).abs() < 1e-12);
    }

    #[test]
    fn coalesce_merges_equal_neighbours() {
        let seq = ControlSequence::<f64>::from_triples(&[(1.0, 0.2, 0.0), (1.0, 0.3, 0.0), (2.0, 0.5, 1.0)], "c").unwrap();
        let merged = seq.coalesced(1e-12);
        assert_eq!(merged.len(), 2);
        assert!((merged.segments()[0].duration() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn records_round_trip() {
        let seq = ControlSequence::<f64>::from_triples(&[(-3.0, 0.25, 0.1), (5.0, 0.75, 2.0)], "r").unwrap();
        let back = ControlSequence::from_records(&seq.to_records(), 1.0, "r").unwrap();
        for (a, b) in seq.segments().iter().zip(back.segments()) {
            assert!((a.signed_rabi() - b.signed_rabi()).abs() < 1e-12);
            assert!((a.duration() - b.duration()).abs() < 1e-15);
            assert!((a.phase() - b.phase()).abs() < 1e-12);
        }
    }
}
