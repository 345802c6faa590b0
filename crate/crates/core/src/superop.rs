// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Column-stacked superoperators and a dense matrix exponential.
//!
//! The Liouvillian is assembled from Kronecker products, not from the
//! right-hand sides in [`crate::engine`], so that propagating with
//! `exp(L·t)` is an independent check of the RK4 integrator.

use std::ops::Mul;

use crate::algebra::{make_pauli, Complex, Operator2, Pauli};
use crate::engine::{hamiltonian, Direction, ModelConfig};

const ZERO: Complex = Complex::new(0.0, 0.0);

/// Dense 4×4 complex matrix acting on `vec(A) = [A00, A10, A01, A11]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superop(pub [[Complex; 4]; 4]);

impl Superop {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.0[i][i] = Complex::new(1.0, 0.0);
        }
        m
    }

    /// Matrix of `X ↦ A·X·B`, which is `Bᵀ ⊗ A` under column stacking.
    pub fn sandwich(a: &Operator2, b: &Operator2) -> Self {
        let mut m = Self::zero();
        for c1 in 0..2 {
            for r1 in 0..2 {
                for c2 in 0..2 {
                    for r2 in 0..2 {
                        m.0[c1 * 2 + r1][c2 * 2 + r2] = b.m[c2][c1] * a.m[r1][r2];
                    }
                }
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = *self;
        for (row, orow) in m.0.iter_mut().zip(&o.0) {
            for (v, w) in row.iter_mut().zip(orow) {
                *v += w;
            }
        }
        m
    }

    pub fn scale(&self, s: Complex) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    pub fn apply(&self, v: &[Complex; 4]) -> [Complex; 4] {
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn apply_op(&self, a: &Operator2) -> Operator2 {
        Operator2::from_vectorized(self.apply(&a.vectorize()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..4)
            .map(|c| (0..4).map(|r| self.0[r][c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Mul for Superop {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut m = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                m.0[r][c] = (0..4).map(|k| self.0[r][k] * o.0[k][c]).sum();
            }
        }
        m
    }
}

/// Generator of `d vec(ρ)/dt` (forward) or of `d vec(E)/dτ` with `τ = T − t`
/// (backward).
pub fn liouvillian_matrix(cfg: &ModelConfig, direction: Direction) -> Superop {
    let id = Operator2::identity();
    let h = hamiltonian(cfg);
    let sm = make_pauli(Pauli::Minus);
    let sp = make_pauli(Pauli::Plus);
    let sz = make_pauli(Pauli::Z);
    let n_e = sp * sm;

    // [H, X] = H·X·I − I·X·H
    let comm = Superop::sandwich(&h, &id).add(&Superop::sandwich(&id, &h).scale(Complex::new(-1.0, 0.0)));
    let anti = Superop::sandwich(&n_e, &id).add(&Superop::sandwich(&id, &n_e));
    let dephase = Superop::sandwich(&sz, &sz).add(&Superop::identity().scale(Complex::new(-1.0, 0.0)));

    let (hamiltonian_sign, jump) = match direction {
        Direction::Forward => (-1.0, Superop::sandwich(&sm, &sp)),
        Direction::Backward => (1.0, Superop::sandwich(&sp, &sm)),
    };
    comm.scale(Complex::new(0.0, hamiltonian_sign))
        .add(&jump.add(&anti.scale(Complex::new(-0.5, 0.0))).scale(Complex::new(cfg.gamma1, 0.0)))
        .add(&dephase.scale(Complex::new(0.5 * cfg.gamma_phi, 0.0)))
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Superop) -> Superop {
    const TERMS: usize = 20;
    let norm = a.norm1();
    let mut squarings = 0i32;
    while norm / 2f64.powi(squarings) >= 0.5 {
        squarings += 1;
    }
    let scaled = a.scale(Complex::new(2f64.powi(-squarings), 0.0));
    let mut term = Superop::identity();
    let mut sum = Superop::identity();
    for k in 1..=TERMS {
        term = (term * scaled).scale(Complex::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Propagate `state` for elapsed time `t` by `exp(L·t)`.
pub fn oracle_expm_propagate(state: &Operator2, cfg: &ModelConfig, t: f64, direction: Direction) -> Operator2 {
    if t == 0.0 {
        return *state;
    }
    let l = liouvillian_matrix(cfg, direction).scale(Complex::new(t, 0.0));
    expm(&l).apply_op(state)
}
