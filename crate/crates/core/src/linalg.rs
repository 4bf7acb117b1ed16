//! Fixed-size matrices used throughout the crate: complex 2×2 operators on a
//! single qubit and real 3×3 rotations of the Bloch sphere.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for matrix comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// A complex 2×2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[Complex64; 2]; 2]", into = "[[Complex64; 2]; 2]")]
pub struct ComplexMatrix2 {
    entries: [[Complex64; 2]; 2],
}

impl ComplexMatrix2 {
    /// Builds a matrix, rejecting NaN or infinite entries.
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        if entries.iter().flatten().all(|z| z.is_finite()) {
            Ok(Self { entries })
        } else {
            Err(Error::NonFiniteEntry)
        }
    }

    pub(crate) const fn from_entries(entries: [[Complex64; 2]; 2]) -> Self {
        Self { entries }
    }

    /// Convenience constructor from real rows.
    pub fn from_real(rows: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(rows.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    pub const fn identity() -> Self {
        Self::from_entries([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn zero() -> Self {
        Self::from_entries([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub fn diagonal(a: Complex64, d: Complex64) -> Self {
        Self::from_entries([[a, ZERO], [ZERO, d]])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_entries(self.entries.map(|row| row.map(&f)))
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Self::from_entries([[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        let e = &self.entries;
        Self::from_entries([[e[0][0], e[1][0]], [e[0][1], e[1][1]]])
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn det(&self) -> Complex64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    /// Adjugate, so that `m * m.adjugate() == det(m) * I`.
    pub fn adjugate(&self) -> Self {
        let e = &self.entries;
        Self::from_entries([[e[1][1], -e[0][1]], [-e[1][0], e[0][0]]])
    }

    /// Inverse, or `None` when `|det| <= tolerance`.
    pub fn inverse(&self, tolerance: f64) -> Option<Self> {
        let d = self.det();
        if d.norm() <= tolerance {
            return None;
        }
        Some(self.adjugate().scale(d.inv()))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.entries.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    /// Hilbert-Schmidt inner product `Tr(self† · other)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.max_abs_diff(other) <= tolerance
    }

    /// Distance of `U†U` from the identity (max entrywise modulus).
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tolerance: f64) -> bool {
        self.unitarity_defect() <= tolerance
    }

    pub(crate) fn ensure_unitary(&self, tolerance: f64) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect <= tolerance {
            Ok(())
        } else {
            Err(Error::NonUnitary { defect, tolerance })
        }
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let e = &self.entries;
        [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]]
    }

    /// Unitary factor of the polar decomposition `A = U·P`, which is the unitary
    /// closest to `A` in Frobenius norm.
    ///
    /// For 2×2 matrices `U = (A + |det A|·A^{-†}) / (σ₁ + σ₂)`, where
    /// `(σ₁ + σ₂)² = ‖A‖²_F + 2|det A|`. Fails on singular input, where the
    /// unitary factor is not unique.
    pub fn nearest_unitary(&self) -> Result<Self> {
        let d = self.det();
        let abs_d = d.norm();
        let scale = self.frobenius_norm_sqr();
        if abs_d <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularMatrix { det: abs_d });
        }
        // |d|·A^{-†} = (|d| / conj(d)) · adj(A)† = e^{i arg d} · adj(A)†
        let phase = d / abs_d;
        let corrected = *self + self.adjugate().adjoint().scale(phase);
        let sum_singular = (scale + 2.0 * abs_d).sqrt();
        Ok(corrected.scale_real(sum_singular.recip()))
    }
}

impl TryFrom<[[Complex64; 2]; 2]> for ComplexMatrix2 {
    type Error = Error;

    fn try_from(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ComplexMatrix2> for [[Complex64; 2]; 2] {
    fn from(m: ComplexMatrix2) -> Self {
        m.entries
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self::from_entries(out)
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut out = self.entries;
        for (row, rrow) in out.iter_mut().zip(rhs.entries.iter()) {
            for (cell, r) in row.iter_mut().zip(rrow) {
                *cell += r;
            }
        }
        Self::from_entries(out)
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ComplexMatrix2 {
    type Output = Self;

    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl fmt::Display for ComplexMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.entries.iter().enumerate() {
            if r > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "[{:+.6}{:+.6}i, {:+.6}{:+.6}i]",
                row[0].re, row[0].im, row[1].re, row[1].im
            )?;
        }
        Ok(())
    }
}

/// A real 3×3 matrix acting on Bloch vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix3 {
    entries: [[f64; 3]; 3],
}

impl RotationMatrix3 {
    /// Tolerance for the orthogonality and determinant checks.
    pub const TOLERANCE: f64 = 1e-10;

    /// Wraps a matrix, checking that it is a proper rotation.
    pub fn new(entries: [[f64; 3]; 3]) -> Result<Self> {
        let m = Self { entries };
        if m.is_proper_rotation(Self::TOLERANCE) {
            Ok(m)
        } else {
            Err(Error::NotARotation)
        }
    }

    pub(crate) const fn from_entries(entries: [[f64; 3]; 3]) -> Self {
        Self { entries }
    }

    pub const fn identity() -> Self {
        Self::from_entries([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in self.entries.iter().enumerate() {
            for (c, x) in row.iter().enumerate() {
                out[c][r] = *x;
            }
        }
        Self::from_entries(out)
    }

    pub fn det(&self) -> f64 {
        let m = &self.entries;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        self.entries
            .map(|row| row.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.max_abs_diff(other) <= tolerance
    }

    pub fn is_proper_rotation(&self, tolerance: f64) -> bool {
        (*self * self.transpose()).approx_eq(&Self::identity(), tolerance)
            && (self.det() - 1.0).abs() <= tolerance
    }
}

impl Mul for RotationMatrix3 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.entries[r][k] * rhs.entries[k][c]).sum();
            }
        }
        Self::from_entries(out)
    }
}
