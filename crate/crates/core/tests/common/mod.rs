// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Independent dense-matrix oracles shared by the integration tests.

#![allow(dead_code)]

use num_complex::Complex64;

pub type M2 = [[Complex64; 2]; 2];

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn eye() -> M2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn sx() -> M2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn sy() -> M2 {
    [[ZERO, -I], [I, ZERO]]
}

pub fn sz() -> M2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[ZERO; 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                c[r][j] += a[r][k] * b[k][j];
            }
        }
    }
    c
}

pub fn add(a: &M2, b: &M2) -> M2 {
    let mut c = *a;
    for r in 0..2 {
        for j in 0..2 {
            c[r][j] += b[r][j];
        }
    }
    c
}

pub fn scale(a: &M2, s: Complex64) -> M2 {
    let mut c = *a;
    c.iter_mut().flatten().for_each(|x| *x *= s);
    c
}

pub fn dagger(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn trace(a: &M2) -> Complex64 {
    a[0][0] + a[1][1]
}

pub fn max_diff(a: &M2, b: &M2) -> f64 {
    let mut d: f64 = 0.0;
    for r in 0..2 {
        for j in 0..2 {
            d = d.max((a[r][j] - b[r][j]).norm());
        }
    }
    d
}

/// exp(A) by scaling and squaring with a 30-term Taylor series.
pub fn expm(a: &M2) -> M2 {
    let norm: f64 = a.iter().flatten().map(|x| x.norm()).sum();
    let mut s = 0u32;
    while norm / 2f64.powi(s as i32) > 0.5 {
        s += 1;
    }
    let a = scale(a, ONE / 2f64.powi(s as i32));
    let mut term = eye();
    let mut sum = eye();
    for k in 1..30 {
        term = scale(&mul(&term, &a), ONE / k as f64);
        sum = add(&sum, &term);
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

/// exp(−iHt) for H = (ε/2)(cos φ σx + sin φ σy) + (δ/2)σz, t = angle.
pub fn segment_oracle(angle: f64, phase: f64, amp: f64, delta: f64, eps: f64) -> M2 {
    let w = amp * eps / 2.0;
    let h = add(
        &add(&scale(&sx(), ONE * (w * phase.cos())), &scale(&sy(), ONE * (w * phase.sin()))),
        &scale(&sz(), ONE * (delta / 2.0)),
    );
    expm(&scale(&h, -I * angle))
}

pub fn from_entries(e: [Complex64; 4]) -> M2 {
    [[e[0], e[1]], [e[2], e[3]]]
}
