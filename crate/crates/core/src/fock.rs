//! Exact algebra on truncated four-mode bosonic Fock states.
//!
//! States are sparse maps from occupation vectors to amplitudes. Every
//! operation here conserves photon number within the modes it touches, so
//! the only approximation anywhere is the truncation of the source state,
//! which is tracked analytically in [`KetState::truncation_tail`].
//!
//! # Unitary convention
//!
//! A [`TwoModeUnitary`] `u` acting on the ordered pair `(first, second)`
//! transforms creation operators row-wise:
//!
//! ```text
//! first†  -> u[0][0] first† + u[0][1] second†
//! second† -> u[1][0] first† + u[1][1] second†
//! ```
//!
//! A single photon with amplitudes `psi` therefore ends up with amplitudes
//! `u^T psi`, and lifting is anti-multiplicative,
//! `lift(u * v) = lift(v) * lift(u)`: applying `u` and then `v` is the same
//! as applying `u * v` once. This is the convention in which the polarization
//! rotation matrix reproduces the Schrödinger evolution of `|1,1>` under the
//! circular-birefringence Hamiltonian.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Amplitudes below this magnitude are dropped after a unitary and their
/// weight is moved to the truncation tail.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

const UNITARY_TOLERANCE: f64 = 1e-12;

/// One of the four physical modes: spatial mode `a` or `b`, polarization `H` or `V`.
///
/// The declaration order is the canonical occupation-vector layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    AH,
    AV,
    BH,
    BV,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::AH, Mode::AV, Mode::BH, Mode::BV];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::AH => "aH",
            Mode::AV => "aV",
            Mode::BH => "bH",
            Mode::BV => "bV",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ah" => Ok(Mode::AH),
            "av" => Ok(Mode::AV),
            "bh" => Ok(Mode::BH),
            "bv" => Ok(Mode::BV),
            _ => invalid(format!("unknown mode '{s}' (expected aH, aV, bH or bV)")),
        }
    }
}

/// Photon counts per mode, in canonical order `(aH, aV, bH, bV)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Occupation(pub [u32; 4]);

impl Occupation {
    pub const VACUUM: Occupation = Occupation([0; 4]);

    pub fn new(a_h: u32, a_v: u32, b_h: u32, b_v: u32) -> Self {
        Occupation([a_h, a_v, b_h, b_v])
    }

    #[inline]
    pub fn count(&self, mode: Mode) -> u32 {
        self.0[mode.index()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    fn with(mut self, mode: Mode, n: u32) -> Self {
        self.0[mode.index()] = n;
        self
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "|{a},{b},{c},{d}>")
    }
}

impl std::str::FromStr for Occupation {
    type Err = crate::Error;

    /// Parses `"1,1,1,1"`; fewer than four counts are padded with zeros.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.is_empty() || parts.len() > 4 {
            return invalid(format!("occupation '{s}' must have 1 to 4 comma-separated counts"));
        }
        let mut counts = [0u32; 4];
        for (slot, part) in counts.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| crate::Error::Validation(format!("bad photon count '{part}'")))?;
        }
        Ok(Occupation(counts))
    }
}

/// A truncated pure state on the four modes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KetState {
    amplitudes: BTreeMap<Occupation, Complex64>,
    tail: f64,
}

impl KetState {
    /// `|occ>` with amplitude 1 and no tail.
    pub fn basis(occ: Occupation) -> Self {
        KetState {
            amplitudes: BTreeMap::from([(occ, Complex64::new(1.0, 0.0))]),
            tail: 0.0,
        }
    }

    pub fn vacuum() -> Self {
        Self::basis(Occupation::VACUUM)
    }

    /// Builds a state from components. Exact zeros are skipped; repeated
    /// occupations are rejected. `tail` is the analytic weight of whatever
    /// the caller discarded.
    pub fn from_amplitudes<I>(components: I, tail: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        if !(0.0..=1.0).contains(&tail) {
            return invalid(format!("truncation tail {tail} outside [0, 1]"));
        }
        let mut amplitudes = BTreeMap::new();
        for (occ, amp) in components {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            if amplitudes.insert(occ, amp).is_some() {
                return invalid(format!("duplicate component {occ}"));
            }
        }
        Ok(KetState { amplitudes, tail })
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.amplitudes.get(occ).copied().unwrap_or_default()
    }

    /// Components in canonical occupation order.
    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Weight of components that were discarded (source truncation plus pruning).
    pub fn truncation_tail(&self) -> f64 {
        self.tail
    }

    /// Squared norm of the stored amplitudes.
    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amplitudes.values().map(|a| a.norm_sqr()))
    }

    /// `sum_occ |amp|^2 f(occ)`: expectation of an operator diagonal in the Fock basis.
    pub fn diagonal_expectation<F>(&self, f: F) -> f64
    where
        F: Fn(&Occupation) -> f64,
    {
        compensated_sum(self.amplitudes.iter().map(|(occ, amp)| amp.norm_sqr() * f(occ)))
    }

    /// Largest photon number held in any component by the given modes.
    pub fn max_photons_in(&self, modes: &[Mode]) -> u32 {
        self.amplitudes
            .keys()
            .map(|occ| modes.iter().map(|&m| occ.count(m)).sum())
            .max()
            .unwrap_or(0)
    }
}

/// Neumaier summation. Strongly pumped states hold 10^4 and more
/// components spanning many decades, enough for plain summation to drift past 1e-12.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// A 2x2 unitary acting on an ordered pair of modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeUnitary {
    m: [[Complex64; 2]; 2],
}

impl TwoModeUnitary {
    /// Validates `u^dagger u = 1` to within 1e-12.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = TwoModeUnitary { m };
        let err = u.unitarity_error();
        if !(err <= UNITARY_TOLERANCE) {
            return invalid(format!("matrix is not unitary (|u^dagger u - 1| = {err:e})"));
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TwoModeUnitary {
            m: [[one, zero], [zero, one]],
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    /// Plain matrix product `self * rhs`.
    pub fn mul(&self, rhs: &TwoModeUnitary) -> TwoModeUnitary {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        TwoModeUnitary { m }
    }

    /// Max-entry deviation of `u^dagger u` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    s += self.m[k][i].conj() * self.m[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    pub fn determinant(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// Produces the photon-number-`n` lifts of a two-mode unitary for n = 0, 1, 2, ...
///
/// The n-photon block embeds isometrically into (n-1 photons) x (one photon)
/// by removing a photon from either mode,
/// `E|n-q, q> = [sqrt(n-q) |n-1-q, q>|first> + sqrt(q) |n-q, q-1>|second>] / sqrt(n)`,
/// and the lift satisfies
/// `M(n) = E^dagger (M(n-1) x u^T) E`. Compression by an isometry never
/// amplifies errors, so rounding grows only additively with `n`. Explicit
/// binomial expansion loses every digit to cancellation long before the
/// photon numbers a strongly pumped source needs.
///
/// Basis index `q` of the n-photon block is the count in the second mode: `|n - q, q>`.
///
/// Unitaries of the form `e^{i phi} v` with `v` real (every polarization
/// rotation is one) run the recursion in real arithmetic and restore the
/// phase as `e^{i n phi}`.
struct LiftLadder {
    n: usize,
    phase: Complex64,
    lift: Lift,
}

enum Lift {
    Identity,
    Real { t: [f64; 4], current: Vec<f64> },
    Complex { t: [Complex64; 4], current: Vec<Complex64> },
}

/// One step of the compression recursion on a column-major `n x n` matrix.
/// `t` holds `u` row-major: `[u00, u01, u10, u11]`.
fn compress_step<T>(prev: &[T], n: usize, t: [T; 4], sq: &[f64], zero: T) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let [t00, t01, t10, t11] = t;
    let contract = |col: &[T], q_out: usize, to0: T, to1: T| {
        let mut acc = zero;
        if q_out < n {
            acc = acc + col[q_out] * to0 * sq[n - q_out];
        }
        if q_out > 0 {
            acc = acc + col[q_out - 1] * to1 * sq[q_out];
        }
        acc
    };
    let inv = 1.0 / n as f64;
    let mut out = vec![zero; (n + 1) * (n + 1)];
    for (q_in, dst) in out.chunks_exact_mut(n + 1).enumerate() {
        // removing a photon from mode 0 of |n-q, q> leaves index q, from mode 1 index q-1
        let from0 = (q_in < n).then(|| &prev[q_in * n..(q_in + 1) * n]);
        let from1 = (q_in > 0).then(|| &prev[(q_in - 1) * n..q_in * n]);
        for (q_out, slot) in dst.iter_mut().enumerate() {
            let mut acc = zero;
            if let Some(col) = from0 {
                acc = acc + contract(col, q_out, t00, t01) * (sq[n - q_in] * inv);
            }
            if let Some(col) = from1 {
                acc = acc + contract(col, q_out, t10, t11) * (sq[q_in] * inv);
            }
            *slot = acc;
        }
    }
    out
}

impl LiftLadder {
    fn new(u: &TwoModeUnitary) -> Self {
        let one = Complex64::new(1.0, 0.0);
        if *u == TwoModeUnitary::identity() {
            return LiftLadder {
                n: 0,
                phase: one,
                lift: Lift::Identity,
            };
        }
        // single-photon transfer is u^T: entry (s_in, s_out) = u[s_in][s_out]
        let t = [u.entry(0, 0), u.entry(0, 1), u.entry(1, 0), u.entry(1, 1)];
        let largest = t
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(one);
        let phase = largest / largest.norm();
        let stripped = t.map(|z| z * phase.conj());
        let lift = if stripped.iter().all(|z| z.im.abs() <= 1e-15) {
            Lift::Real {
                t: stripped.map(|z| z.re),
                current: vec![1.0],
            }
        } else {
            return LiftLadder {
                n: 0,
                phase: one,
                lift: Lift::Complex { t, current: vec![one] },
            };
        };
        LiftLadder { n: 0, phase, lift }
    }

    fn advance(&mut self) {
        let n = self.n + 1;
        let sq: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
        match &mut self.lift {
            Lift::Identity => {}
            Lift::Real { t, current } => *current = compress_step(current, n, *t, &sq, 0.0),
            Lift::Complex { t, current } => *current = compress_step(current, n, *t, &sq, Complex64::new(0.0, 0.0)),
        }
        self.n = n;
    }

    fn advance_to(&mut self, n: usize) {
        while self.n < n {
            self.advance();
        }
    }

    /// Current lift applied to an `(n+1)`-component block.
    fn apply(&self, block: &[Complex64]) -> Vec<Complex64> {
        let dim = self.n + 1;
        let phase = self.phase.powu(self.n as u32);
        match &self.lift {
            Lift::Identity => block.to_vec(),
            Lift::Real { current, .. } => {
                let mut re = vec![0.0; dim];
                let mut im = vec![0.0; dim];
                for (col, b) in current.chunks_exact(dim).zip(block) {
                    for ((r, i), m) in re.iter_mut().zip(im.iter_mut()).zip(col) {
                        *r += m * b.re;
                        *i += m * b.im;
                    }
                }
                re.into_iter()
                    .zip(im)
                    .map(|(r, i)| Complex64::new(r, i) * phase)
                    .collect()
            }
            Lift::Complex { current, .. } => {
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                for (col, b) in current.chunks_exact(dim).zip(block) {
                    for (o, m) in out.iter_mut().zip(col) {
                        *o += m * b;
                    }
                }
                out
            }
        }
    }

    fn matrix(&self) -> DMatrix<Complex64> {
        let dim = self.n + 1;
        match &self.lift {
            Lift::Identity => DMatrix::identity(dim, dim),
            Lift::Real { current, .. } => {
                let phase = self.phase.powu(self.n as u32);
                DMatrix::from_iterator(dim, dim, current.iter().map(|&m| phase * m))
            }
            Lift::Complex { current, .. } => DMatrix::from_column_slice(dim, dim, current),
        }
    }
}

/// The `(n+1) x (n+1)` matrix of `u` restricted to the two-mode subspace with
/// `n` photons, in the basis `|n - q, q>`, `q = 0..=n`.
pub fn two_mode_unitary_subspace_matrix(u: &TwoModeUnitary, n: usize) -> DMatrix<Complex64> {
    let mut ladder = LiftLadder::new(u);
    ladder.advance_to(n);
    ladder.matrix()
}

/// Applies `u` to the modes `(first, second)` of `state`.
pub fn apply_two_mode_unitary(state: &KetState, pair: (Mode, Mode), u: &TwoModeUnitary) -> Result<KetState> {
    let (first, second) = pair;
    if first == second {
        return invalid(format!("unitary needs two distinct modes, got ({first}, {second})"));
    }

    // Group components by (photons in the pair, spectator occupation).
    let mut blocks: BTreeMap<(u32, Occupation), Vec<Complex64>> = BTreeMap::new();
    for (occ, &amp) in &state.amplitudes {
        let n = occ.count(first) + occ.count(second);
        let spectator = occ.with(first, 0).with(second, 0);
        let block = blocks
            .entry((n, spectator))
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); n as usize + 1]);
        block[occ.count(second) as usize] = amp;
    }

    let mut out = BTreeMap::new();
    let mut pruned = 0.0;
    let mut ladder = LiftLadder::new(u);
    for ((n, spectator), block) in blocks {
        ladder.advance_to(n as usize);
        let image = ladder.apply(&block);
        for (q, amp) in image.iter().enumerate() {
            if amp.norm() < PRUNE_THRESHOLD {
                pruned += amp.norm_sqr();
                continue;
            }
            let q = q as u32;
            out.insert(spectator.with(first, n - q).with(second, q), *amp);
        }
    }
    Ok(KetState {
        amplitudes: out,
        tail: (state.tail + pruned).min(1.0),
    })
}

/// `<bra|ket>`, conjugate-linear in `bra`.
pub fn inner_product(bra: &KetState, ket: &KetState) -> Complex64 {
    bra.amplitudes
        .iter()
        .filter_map(|(occ, b)| ket.amplitudes.get(occ).map(|k| b.conj() * k))
        .sum()
}

fn falling_factorial(n: u32, p: u32) -> f64 {
    if p > n {
        return 0.0;
    }
    (0..p).map(|i| f64::from(n - i)).product()
}

/// `<prod_m a_m†^{p_m} a_m^{p_m}>`, indexed by canonical mode order.
///
/// The operator is diagonal in the Fock basis with eigenvalue
/// `prod_m n_m! / (n_m - p_m)!`.
pub fn normally_ordered_moment(state: &KetState, powers: [u32; 4]) -> f64 {
    state.diagonal_expectation(|occ| {
        occ.0
            .iter()
            .zip(powers)
            .map(|(&n, p)| falling_factorial(n, p))
            .product()
    })
}

/// `|<occ|state>|^2`.
pub fn projection_probability(state: &KetState, occ: &Occupation) -> f64 {
    state.amplitude(occ).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rotation(theta: f64) -> TwoModeUnitary {
        let (s, co) = (theta / 2.0).sin_cos();
        let ph = Complex64::from_polar(1.0, theta / 2.0);
        TwoModeUnitary::new([[ph * co, -ph * s], [ph * s, ph * co]]).unwrap()
    }

    /// Independent route: expand the transformed creation operators binomially.
    fn binomial_lift(u: &TwoModeUnitary, n: usize) -> DMatrix<Complex64> {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let binom = |a: usize, b: usize| fact(a) / (fact(b) * fact(a - b));
        let m_ = u.matrix();
        let mut out = DMatrix::zeros(n + 1, n + 1);
        for m in 0..=n {
            let k = n - m;
            for i in 0..=k {
                for j in 0..=m {
                    let p = i + j; // photons in first mode
                    let coeff = m_[0][0].powu(i as u32)
                        * m_[0][1].powu((k - i) as u32)
                        * m_[1][0].powu(j as u32)
                        * m_[1][1].powu((m - j) as u32)
                        * binom(k, i)
                        * binom(m, j)
                        * (fact(p) * fact(n - p) / (fact(k) * fact(m))).sqrt();
                    out[(n - p, m)] += coeff;
                }
            }
        }
        out
    }

    /// Matrix of the number-conserving operator `sum_jk g[j][k] x_j† x_k` on the n-photon block.
    fn lifted_generator(g: &[[Complex64; 2]; 2], n: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(n + 1, n + 1);
        for q in 0..=n {
            let counts = [n - q, q];
            for j in 0..2 {
                for k in 0..2 {
                    if counts[k] == 0 {
                        continue;
                    }
                    let mut after = counts;
                    let mut amp = (after[k] as f64).sqrt();
                    after[k] -= 1;
                    amp *= (after[j] as f64 + 1.0).sqrt();
                    after[j] += 1;
                    out[(after[1], q)] += g[j][k] * amp;
                }
            }
        }
        out
    }

    fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_unitary(a: f64, b: f64, c_: f64, d: f64) -> TwoModeUnitary {
        // e^{i d} [[e^{i a} cos b, -e^{-i c} sin b], [e^{i c} sin b, e^{-i a} cos b]]
        let g = Complex64::from_polar(1.0, d);
        TwoModeUnitary::new([
            [
                g * Complex64::from_polar(b.cos(), a),
                -g * Complex64::from_polar(b.sin(), -c_),
            ],
            [
                g * Complex64::from_polar(b.sin(), c_),
                g * Complex64::from_polar(b.cos(), -a),
            ],
        ])
        .unwrap()
    }

    #[test]
    fn basis_states() {
        for occ in [
            Occupation::new(1, 1, 1, 1),
            Occupation::VACUUM,
            Occupation::new(2, 0, 0, 0),
        ] {
            let s = KetState::basis(occ);
            assert_eq!(s.amplitude(&occ), c(1.0, 0.0));
            assert_eq!(s.len(), 1);
            assert_eq!(s.norm_sqr(), 1.0);
            assert_eq!(s.truncation_tail(), 0.0);
        }
    }

    #[test]
    fn inner_product_basics() {
        let a = KetState::from_amplitudes(
            [
                (Occupation::new(1, 0, 0, 0), c(0.6, 0.0)),
                (Occupation::new(0, 1, 0, 0), c(0.0, 0.8)),
            ],
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(inner_product(&a, &a).re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner_product(&a, &a).im, 0.0, epsilon = 1e-12);
        let b = KetState::basis(Occupation::new(0, 1, 0, 0));
        // conjugate-linear in the bra
        assert_eq!(inner_product(&a, &b), c(0.0, -0.8));
        assert_eq!(inner_product(&b, &a), c(0.0, 0.8));
        let e1 = KetState::basis(Occupation::new(1, 0, 0, 0));
        let e2 = KetState::basis(Occupation::new(0, 0, 1, 0));
        assert_eq!(inner_product(&e1, &e2), c(0.0, 0.0));
    }

    #[test]
    fn duplicate_and_bad_tail_rejected() {
        let occ = Occupation::new(1, 0, 0, 0);
        assert!(KetState::from_amplitudes([(occ, c(1.0, 0.0)), (occ, c(1.0, 0.0))], 0.0).is_err());
        assert!(KetState::from_amplitudes([(occ, c(1.0, 0.0))], -0.1).is_err());
    }

    #[test]
    fn non_unitary_rejected() {
        let one = c(1.0, 0.0);
        assert!(TwoModeUnitary::new([[one, one], [one, one]]).is_err());
        assert!(TwoModeUnitary::new([[c(f64::NAN, 0.0), one], [one, one]]).is_err());
    }

    #[test]
    fn identity_lift() {
        let m = two_mode_unitary_subspace_matrix(&TwoModeUnitary::identity(), 3);
        assert_eq!(m, DMatrix::identity(4, 4));
    }

    #[test]
    fn hong_ou_mandel_cancellation() {
        let h = FRAC_1_SQRT_2;
        let u = TwoModeUnitary::new([[c(h, 0.0), c(h, 0.0)], [c(-h, 0.0), c(h, 0.0)]]).unwrap();
        let m = two_mode_unitary_subspace_matrix(&u, 2);
        // input |1,1> is column 1; output rows |2,0>, |1,1>, |0,2>
        assert_abs_diff_eq!(m[(0, 1)].re, -h, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(2, 1)].re, h, epsilon = 1e-15);
    }

    #[test]
    fn rotation_on_one_one_matches_two_photon_solution() {
        for &theta in &[0.0, 0.3, PI / 4.0, 1.9, -2.5] {
            let m = two_mode_unitary_subspace_matrix(&rotation(theta), 2);
            let col = m.column(1);
            // strip global phase using the |1,1> component (cos theta may vanish; use largest)
            let pivot = (0..3).max_by(|&i, &j| col[i].norm().total_cmp(&col[j].norm())).unwrap();
            let expected = [theta.sin() * FRAC_1_SQRT_2, theta.cos(), -theta.sin() * FRAC_1_SQRT_2];
            let phase = col[pivot] / expected[pivot];
            for q in 0..3 {
                assert_abs_diff_eq!((col[q] / phase - expected[q]).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn ladder_matches_binomial_expansion() {
        let u = random_unitary(0.3, 0.9, -1.2, 0.4);
        for n in 0..=10 {
            let diff = max_diff(&two_mode_unitary_subspace_matrix(&u, n), &binomial_lift(&u, n));
            assert!(diff < 1e-12, "n={n} diff={diff}");
        }
    }

    #[test]
    fn ladder_matches_matrix_exponential() {
        // u = exp(i G) for Hermitian G; its lift is exp(i lift(G^T)) in the row convention.
        let g = [[c(0.7, 0.0), c(0.2, -0.5)], [c(0.2, 0.5), c(-0.3, 0.0)]];
        let gm = nalgebra::Matrix2::new(g[0][0], g[0][1], g[1][0], g[1][1]);
        let um = (gm * c(0.0, 1.0)).exp();
        let u = TwoModeUnitary::new([[um[(0, 0)], um[(0, 1)]], [um[(1, 0)], um[(1, 1)]]]).unwrap();
        let gt = [[g[0][0], g[1][0]], [g[0][1], g[1][1]]];
        for n in 0..=3 {
            let brute = (lifted_generator(&gt, n) * c(0.0, 1.0)).exp();
            let diff = max_diff(&two_mode_unitary_subspace_matrix(&u, n), &brute);
            assert!(diff < 1e-10, "n={n} diff={diff}");
        }
    }

    #[test]
    fn large_photon_number_stays_unitary() {
        let u = random_unitary(0.1, 0.7, 0.5, -0.2);
        let n = 400;
        let m = two_mode_unitary_subspace_matrix(&u, n);
        let gram = m.adjoint() * &m;
        let err = max_diff(&gram, &DMatrix::identity(n + 1, n + 1));
        assert!(err < 1e-11, "err={err}");
    }

    #[test]
    fn swap_at_pi() {
        let s = KetState::basis(Occupation::new(1, 0, 0, 0));
        let out = apply_two_mode_unitary(&s, (Mode::AH, Mode::AV), &rotation(PI)).unwrap();
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out.amplitude(&Occupation::new(0, 1, 0, 0)).norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_is_bitwise_noop() {
        let s = KetState::from_amplitudes(
            [
                (Occupation::new(2, 1, 0, 3), c(0.3, -0.1)),
                (Occupation::new(0, 0, 1, 0), c(-0.2, 0.5)),
                (Occupation::new(4, 4, 0, 0), c(0.1, 0.1)),
            ],
            0.25,
        )
        .unwrap();
        let out = apply_two_mode_unitary(&s, (Mode::AH, Mode::AV), &TwoModeUnitary::identity()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn same_mode_pair_rejected() {
        let s = KetState::vacuum();
        assert!(apply_two_mode_unitary(&s, (Mode::BH, Mode::BH), &TwoModeUnitary::identity()).is_err());
    }

    #[test]
    fn moments() {
        let s = KetState::basis(Occupation::new(2, 0, 0, 0));
        assert_eq!(normally_ordered_moment(&s, [0; 4]), 1.0);
        assert_eq!(normally_ordered_moment(&s, [1, 0, 0, 0]), 2.0);
        assert_eq!(normally_ordered_moment(&s, [2, 0, 0, 0]), 2.0);
        assert_eq!(normally_ordered_moment(&s, [3, 0, 0, 0]), 0.0);
        assert_eq!(normally_ordered_moment(&s, [0, 1, 0, 0]), 0.0);
    }

    #[test]
    fn projection_on_vacuum() {
        assert_eq!(projection_probability(&KetState::vacuum(), &Occupation::VACUUM), 1.0);
        assert_eq!(
            projection_probability(&KetState::vacuum(), &Occupation::new(1, 0, 0, 0)),
            0.0
        );
    }

    #[test]
    fn occupation_parsing() {
        assert_eq!("1,1,1,1".parse::<Occupation>().unwrap(), Occupation::new(1, 1, 1, 1));
        assert_eq!("2, 2".parse::<Occupation>().unwrap(), Occupation::new(2, 2, 0, 0));
        assert!("1,x".parse::<Occupation>().is_err());
        assert!("1,1,1,1,1".parse::<Occupation>().is_err());
        assert_eq!("bV".parse::<Mode>().unwrap(), Mode::BV);
    }

    fn arb_state() -> impl Strategy<Value = KetState> {
        prop::collection::vec(
            ((0u32..4, 0u32..4, 0u32..3, 0u32..3), (-1.0f64..1.0, -1.0f64..1.0)),
            1..12,
        )
        .prop_filter_map("nonzero", |comps| {
            let mut map = BTreeMap::new();
            for ((a, b, c_, d), (re, im)) in comps {
                map.insert(Occupation::new(a, b, c_, d), Complex64::new(re, im));
            }
            let norm: f64 = map.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            KetState::from_amplitudes(map.into_iter().map(|(o, z)| (o, z / norm)), 0.0).ok()
        })
    }

    fn arb_unitary() -> impl Strategy<Value = TwoModeUnitary> {
        (-PI..PI, -PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c_, d)| random_unitary(a, b, c_, d))
    }

    fn arb_pair() -> impl Strategy<Value = (Mode, Mode)> {
        (0usize..4, 1usize..4).prop_map(|(i, k)| (Mode::ALL[i], Mode::ALL[(i + k) % 4]))
    }

    proptest! {
        #[test]
        fn unitary_preserves_norm_and_photon_numbers(s in arb_state(), u in arb_unitary(), pair in arb_pair()) {
            let out = apply_two_mode_unitary(&s, pair, &u).unwrap();
            prop_assert!((out.norm_sqr() + out.truncation_tail() - 1.0).abs() < 1e-12);
            let spectators: Vec<Mode> = Mode::ALL.iter().copied().filter(|m| *m != pair.0 && *m != pair.1).collect();
            let key = |o: &Occupation| (o.count(pair.0) + o.count(pair.1), spectators.iter().map(|&m| o.count(m)).collect::<Vec<_>>());
            let before: std::collections::BTreeSet<_> = s.iter().map(|(o, _)| key(o)).collect();
            for (o, _) in out.iter() {
                prop_assert!(before.contains(&key(o)));
            }
        }

        #[test]
        fn sequential_application_composes(s in arb_state(), u in arb_unitary(), v in arb_unitary(), pair in arb_pair()) {
            let two_step = apply_two_mode_unitary(&apply_two_mode_unitary(&s, pair, &u).unwrap(), pair, &v).unwrap();
            let one_step = apply_two_mode_unitary(&s, pair, &u.mul(&v)).unwrap();
            for occ in two_step.iter().map(|(o, _)| *o).chain(one_step.iter().map(|(o, _)| *o)) {
                prop_assert!((two_step.amplitude(&occ) - one_step.amplitude(&occ)).norm() < 1e-10);
            }
        }

        #[test]
        fn lift_is_anti_multiplicative(u in arb_unitary(), v in arb_unitary(), n in 0usize..8) {
            let lhs = two_mode_unitary_subspace_matrix(&u.mul(&v), n);
            let rhs = two_mode_unitary_subspace_matrix(&v, n) * two_mode_unitary_subspace_matrix(&u, n);
            prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
        }

        #[test]
        fn inner_product_bounded(a in arb_state(), b in arb_state()) {
            prop_assert!(inner_product(&a, &b).norm() <= (a.norm_sqr() * b.norm_sqr()).sqrt() + 1e-12);
        }

        #[test]
        fn glauber_dominates_projection(s in arb_state(), u in arb_unitary()) {
            let s = apply_two_mode_unitary(&s, (Mode::AH, Mode::AV), &u).unwrap();
            let moment = normally_ordered_moment(&s, [2, 2, 0, 0]);
            prop_assert!(moment >= 0.0);
            prop_assert!(moment + 1e-12 >= 4.0 * projection_probability(&s, &Occupation::new(2, 2, 0, 0)));
        }
    }
}
