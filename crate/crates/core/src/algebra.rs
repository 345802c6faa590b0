// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Complex 2×2 linear algebra on the qubit Hilbert space.
//!
//! The basis order is `(|g⟩, |e⟩)` everywhere: index 0 is the ground state,
//! index 1 the excited state. With this order `σz = diag(−1, +1)` and the
//! lowering operator `σ− = |g⟩⟨e|` has its only nonzero entry at `[0][1]`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar field for every amplitude in the crate.
pub type Complex = Complex64;

/// Tolerance enforced by the validating constructors.
pub const VALIDATION_TOL: f64 = 1e-12;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const I: Complex = Complex::new(0.0, 1.0);

/// The fixed operator alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
    /// `σ− = |g⟩⟨e|`
    Minus,
    /// `σ+ = |e⟩⟨g|`
    Plus,
}

/// A complex 2×2 matrix in the `(|g⟩, |e⟩)` basis, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator2 {
    pub m: [[Complex; 2]; 2],
}

impl fmt::Debug for Operator2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl Operator2 {
    pub const fn new(m: [[Complex; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn zero() -> Self {
        Self::new([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    /// Real diagonal operator `diag(gg, ee)`.
    pub fn diag(gg: f64, ee: f64) -> Self {
        Self::new([[Complex::new(gg, 0.0), ZERO], [ZERO, Complex::new(ee, 0.0)]])
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: [Complex; 2], b: [Complex; 2]) -> Self {
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r] * b[c].conj();
            }
        }
        Self::new(m)
    }

    /// Projector `|ψ⟩⟨ψ|` onto a (not necessarily normalized) ket.
    pub fn projector(psi: [Complex; 2]) -> Self {
        Self::outer(psi, psi)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: Complex) -> Self {
        let m = &self.m;
        Self::new([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    pub fn apply(&self, v: [Complex; 2]) -> [Complex; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Deviation from hermiticity, `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `(A + A†) / 2`.
    pub fn hermitize(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    /// Eigenvalues of the hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> (f64, f64) {
        let h = self.hermitize();
        let a = h.m[0][0].re;
        let d = h.m[1][1].re;
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + h.m[0][1].norm_sqr()).sqrt();
        (mean - half_gap, mean + half_gap)
    }

    /// Hermitize and clip the spectrum into `[lo, hi]`.
    pub fn clip_spectrum(&self, lo: f64, hi: f64) -> Self {
        let h = self.hermitize();
        let (l_min, l_max) = h.hermitian_eigenvalues();
        if l_min >= lo && l_max <= hi {
            return h;
        }
        let mean = 0.5 * (l_min + l_max);
        let half_gap = 0.5 * (l_max - l_min);
        let new_min = l_min.clamp(lo, hi);
        let new_max = l_max.clamp(lo, hi);
        let new_mean = 0.5 * (new_min + new_max);
        if half_gap <= f64::EPSILON * mean.abs().max(1.0) {
            return Self::identity().scale_re(new_mean);
        }
        // h = mean·I + half_gap·N where N has eigenvalues ±1.
        let n = (h - Self::identity().scale_re(mean)).scale_re(1.0 / half_gap);
        Self::identity().scale_re(new_mean) + n.scale_re(0.5 * (new_max - new_min))
    }

    /// Column-stacking vectorization `[A00, A10, A01, A11]`.
    pub fn vectorize(&self) -> [Complex; 4] {
        [self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1]]
    }

    pub fn from_vectorized(v: [Complex; 4]) -> Self {
        Self::new([[v[0], v[2]], [v[1], v[3]]])
    }
}

impl Add for Operator2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Operator2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Operator2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Operator2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for Operator2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

pub fn make_pauli(which: Pauli) -> Operator2 {
    match which {
        Pauli::I => Operator2::identity(),
        Pauli::Z => Operator2::diag(-1.0, 1.0),
        Pauli::Minus => Operator2::new([[ZERO, ONE], [ZERO, ZERO]]),
        Pauli::Plus => Operator2::new([[ZERO, ZERO], [ONE, ZERO]]),
        // σx = σ− + σ+
        Pauli::X => Operator2::new([[ZERO, ONE], [ONE, ZERO]]),
        // σy = i(σ− − σ+)
        Pauli::Y => Operator2::new([[ZERO, I], [-I, ZERO]]),
    }
}

pub fn mul(a: &Operator2, b: &Operator2) -> Operator2 {
    *a * *b
}

pub fn add(a: &Operator2, b: &Operator2) -> Operator2 {
    *a + *b
}

pub fn scale(a: &Operator2, s: Complex) -> Operator2 {
    a.scale(s)
}

pub fn adjoint(a: &Operator2) -> Operator2 {
    a.adjoint()
}

pub fn trace(a: &Operator2) -> Complex {
    a.trace()
}

pub fn commutator(a: &Operator2, b: &Operator2) -> Operator2 {
    a.commutator(b)
}

/// The excited and ground kets.
pub const KET_G: [Complex; 2] = [ONE, ZERO];
pub const KET_E: [Complex; 2] = [ZERO, ONE];

/// A qubit density matrix: hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator2);

impl DensityMatrix {
    pub fn new(op: Operator2) -> Result<Self> {
        if !op.is_finite() {
            return Err(Error::InvalidState("density matrix has non-finite entries".into()));
        }
        let herm = op.hermiticity_defect();
        if herm > VALIDATION_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix not hermitian (defect {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > VALIDATION_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {tr} != 1")));
        }
        let (l_min, _) = op.hermitian_eigenvalues();
        if l_min < -VALIDATION_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {l_min:e}"
            )));
        }
        Ok(Self(op))
    }

    /// Project an integrator sample back onto valid density matrices:
    /// hermitize, clip negative eigenvalues, renormalize the trace.
    pub fn repair(op: &Operator2) -> Self {
        let clipped = op.clip_spectrum(0.0, f64::INFINITY);
        let tr = clipped.trace().re;
        if tr > 0.0 {
            Self(clipped.scale_re(1.0 / tr))
        } else {
            Self(Operator2::identity().scale_re(0.5))
        }
    }

    pub fn pure(psi: [Complex; 2]) -> Result<Self> {
        let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        Self::new(Operator2::projector(psi).scale_re(1.0 / norm))
    }

    pub fn ground() -> Self {
        Self(Operator2::diag(1.0, 0.0))
    }

    pub fn excited() -> Self {
        Self(Operator2::diag(0.0, 1.0))
    }

    pub fn maximally_mixed() -> Self {
        Self(Operator2::diag(0.5, 0.5))
    }

    pub fn op(&self) -> &Operator2 {
        &self.0
    }

    pub fn into_op(self) -> Operator2 {
        self.0
    }
}

/// A POVM effect: hermitian with spectrum in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effect(Operator2);

impl Effect {
    pub fn new(op: Operator2) -> Result<Self> {
        if !op.is_finite() {
            return Err(Error::InvalidState("effect has non-finite entries".into()));
        }
        let herm = op.hermiticity_defect();
        if herm > VALIDATION_TOL {
            return Err(Error::InvalidState(format!("effect not hermitian (defect {herm:e})")));
        }
        let (l_min, l_max) = op.hermitian_eigenvalues();
        if l_min < -VALIDATION_TOL || l_max > 1.0 + VALIDATION_TOL {
            return Err(Error::InvalidState(format!(
                "effect spectrum [{l_min}, {l_max}] outside [0, 1]"
            )));
        }
        Ok(Self(op))
    }

    pub fn repair(op: &Operator2) -> Self {
        Self(op.clip_spectrum(0.0, 1.0))
    }

    pub fn identity() -> Self {
        Self(Operator2::identity())
    }

    pub fn op(&self) -> &Operator2 {
        &self.0
    }

    pub fn into_op(self) -> Operator2 {
        self.0
    }
}

/// `Tr(ρ·a)`.
pub fn expect(rho: &DensityMatrix, a: &Operator2) -> Complex {
    (*rho.op() * *a).trace()
}

/// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
pub fn bloch(rho: &DensityMatrix) -> (f64, f64, f64) {
    (
        expect(rho, &make_pauli(Pauli::X)).re,
        expect(rho, &make_pauli(Pauli::Y)).re,
        expect(rho, &make_pauli(Pauli::Z)).re,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn plus_x() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure([c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn z_is_diag_minus_one_plus_one() {
        assert_eq!(make_pauli(Pauli::Z), Operator2::diag(-1.0, 1.0));
    }

    #[test]
    fn lowering_takes_excited_to_ground() {
        let out = make_pauli(Pauli::Minus).apply(KET_E);
        assert_eq!(out, KET_G);
        assert_eq!(make_pauli(Pauli::Minus).apply(KET_G), [ZERO, ZERO]);
    }

    #[test]
    fn x_is_minus_plus_plus() {
        assert_eq!(make_pauli(Pauli::X), make_pauli(Pauli::Minus) + make_pauli(Pauli::Plus));
    }

    #[test]
    fn y_matches_its_ladder_definition() {
        let y = (make_pauli(Pauli::Minus) - make_pauli(Pauli::Plus)).scale(I);
        assert_eq!(make_pauli(Pauli::Y), y);
    }

    #[test]
    fn commutator_x_y_is_two_i_z() {
        let got = commutator(&make_pauli(Pauli::X), &make_pauli(Pauli::Y));
        let want = make_pauli(Pauli::Z).scale(c(0.0, 2.0));
        assert!(got.max_abs_diff(&want) < 1e-15, "{got:?}");
    }

    #[test]
    fn ladder_trace_and_adjoint() {
        assert_eq!(trace(&make_pauli(Pauli::Minus)), ZERO);
        assert_eq!(adjoint(&make_pauli(Pauli::Minus)), make_pauli(Pauli::Plus));
    }

    #[test]
    fn pauli_squares_are_identity() {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let m = make_pauli(p);
            assert!(mul(&m, &m).max_abs_diff(&Operator2::identity()) < 1e-15);
        }
    }

    #[test]
    fn expect_examples() {
        let sm = make_pauli(Pauli::Minus);
        assert_eq!(expect(&DensityMatrix::excited(), &sm), ZERO);
        assert!((expect(&plus_x(), &sm) - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(expect(&DensityMatrix::maximally_mixed(), &make_pauli(Pauli::Z)), ZERO);
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(bloch(&DensityMatrix::ground()), (0.0, 0.0, -1.0));
        assert_eq!(bloch(&DensityMatrix::excited()), (0.0, 0.0, 1.0));
        assert_eq!(bloch(&DensityMatrix::maximally_mixed()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constructors_reject_invalid() {
        assert!(DensityMatrix::new(Operator2::diag(0.7, 0.7)).is_err());
        assert!(DensityMatrix::new(Operator2::diag(1.2, -0.2)).is_err());
        assert!(DensityMatrix::new(make_pauli(Pauli::Minus)).is_err());
        assert!(Effect::new(Operator2::diag(1.1, 0.0)).is_err());
        assert!(Effect::new(Operator2::diag(-0.1, 0.0)).is_err());
        assert!(Effect::new(Operator2::diag(1.0, 0.3)).is_ok());
        let mut nan = Operator2::identity();
        nan.m[0][1] = c(f64::NAN, 0.0);
        assert!(Effect::new(nan).is_err());
    }

    #[test]
    fn repair_clips_spectrum() {
        let bad = Operator2::diag(1.0 + 1e-6, -1e-6);
        let rho = DensityMatrix::repair(&bad);
        assert!(DensityMatrix::new(*rho.op()).is_ok());
        let e = Effect::repair(&Operator2::diag(1.0 + 1e-6, -1e-6));
        let (lo, hi) = e.op().hermitian_eigenvalues();
        assert!(lo >= -1e-15 && hi <= 1.0 + 1e-15);
        // already valid input is only hermitized
        let good = plus_x();
        assert!(DensityMatrix::repair(good.op()).op().max_abs_diff(good.op()) < 1e-15);
    }

    #[test]
    fn vectorization_round_trip() {
        let a = Operator2::new([[c(1.0, 2.0), c(3.0, 4.0)], [c(5.0, 6.0), c(7.0, 8.0)]]);
        let v = a.vectorize();
        assert_eq!(v[1], c(5.0, 6.0));
        assert_eq!(Operator2::from_vectorized(v), a);
    }

    fn arb_operator() -> impl Strategy<Value = Operator2> {
        proptest::array::uniform8(-1.0f64..1.0).prop_map(|x| {
            Operator2::new([[c(x[0], x[1]), c(x[2], x[3])], [c(x[4], x[5]), c(x[6], x[7])]])
        })
    }

    /// Random mixed state from a Bloch vector inside the unit ball.
    fn arb_density() -> impl Strategy<Value = DensityMatrix> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y, z, r)| {
            let n = (x * x + y * y + z * z).sqrt().max(1e-9);
            let (x, y, z) = (r * x / n, r * y / n, r * z / n);
            let op = (Operator2::identity()
                + make_pauli(Pauli::X).scale_re(x)
                + make_pauli(Pauli::Y).scale_re(y)
                + make_pauli(Pauli::Z).scale_re(z))
            .scale_re(0.5);
            DensityMatrix::repair(&op)
        })
    }

    proptest! {
        #[test]
        fn hermitian_expectations_are_real(rho in arb_density(), a in arb_operator()) {
            let h = a.hermitize();
            prop_assert!(expect(&rho, &h).im.abs() < 1e-12);
        }

        #[test]
        fn adjoint_is_an_involution(a in arb_operator()) {
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }

        #[test]
        fn trace_is_cyclic(a in arb_operator(), b in arb_operator()) {
            prop_assert!((trace(&(a * b)) - trace(&(b * a))).norm() < 1e-12);
        }

        #[test]
        fn bloch_norm_bounded(rho in arb_density()) {
            let (x, y, z) = bloch(&rho);
            prop_assert!((x * x + y * y + z * z).sqrt() <= 1.0 + 1e-9);
        }

        #[test]
        fn repaired_states_validate(a in arb_operator()) {
            let rho = DensityMatrix::repair(&a);
            prop_assert!(DensityMatrix::new(*rho.op()).is_ok());
            let e = Effect::repair(&a);
            prop_assert!(Effect::new(*e.op()).is_ok());
        }
    }
}
