//! Real and complex vector types.
//!
//! Complex vectors are stored as separate re/im arrays so elementwise kernels
//! stay branch-free and vectorizable. The inner product used throughout is the
//! real inner product on R^{2N}, i.e. `Re{sum conj(a_n) b_n}`; gradients of
//! real-valued objectives with respect to complex vectors follow the same
//! convention.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Length-N real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector {
    pub values: Vec<f64>,
}

/// Length-N complex vector, structure-of-arrays layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl RealVector {
    /// Validates that every entry is finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in RealVector".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self {
            values: values.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// self + alpha * other
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Promotes to a complex vector with zero imaginary part.
    pub fn to_complex(&self) -> ComplexVector {
        ComplexVector {
            re: self.values.clone(),
            im: vec![0.0; self.values.len()],
        }
    }
}

impl ComplexVector {
    /// Validates matching lengths and finite entries.
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                context: "ComplexVector::new",
                expected: re.len(),
                got: im.len(),
            });
        }
        if re.iter().chain(im.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite entry in ComplexVector".into(),
            ));
        }
        Ok(Self { re, im })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn from_entries(entries: &[Complex64]) -> Self {
        Self {
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn entry(&self, n: usize) -> Complex64 {
        Complex64::new(self.re[n], self.im[n])
    }

    pub fn set_entry(&mut self, n: usize, z: Complex64) {
        self.re[n] = z.re;
        self.im[n] = z.im;
    }

    pub fn norm_sq(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r * r + i * i)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Re{<self, other>} = sum(re*re' + im*im'), the R^{2N} inner product.
    pub fn inner_re(&self, other: &Self) -> f64 {
        self.re
            .iter()
            .zip(&other.re)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self
                .im
                .iter()
                .zip(&other.im)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Full complex inner product sum(conj(self_n) * other_n).
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..self.len() {
            acc += self.entry(n).conj() * other.entry(n);
        }
        acc
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.iter().map(|v| -v).collect(),
        }
    }

    /// self + alpha * other, real alpha.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self {
            re: self
                .re
                .iter()
                .zip(&other.re)
                .map(|(a, b)| a + alpha * b)
                .collect(),
            im: self
                .im
                .iter()
                .zip(&other.im)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            re: self.re.iter().map(|v| alpha * v).collect(),
            im: self.im.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Elementwise product with a real vector.
    pub fn hadamard_real(&self, m: &RealVector) -> Self {
        Self {
            re: self
                .re
                .iter()
                .zip(&m.values)
                .map(|(a, b)| a * b)
                .collect(),
            im: self
                .im
                .iter()
                .zip(&m.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Elementwise complex product.
    pub fn hadamard(&self, other: &Self) -> Self {
        let mut re = Vec::with_capacity(self.len());
        let mut im = Vec::with_capacity(self.len());
        for n in 0..self.len() {
            re.push(self.re[n] * other.re[n] - self.im[n] * other.im[n]);
            im.push(self.re[n] * other.im[n] + self.im[n] * other.re[n]);
        }
        Self { re, im }
    }

    /// Elementwise product conj(self_n) * other_n.
    pub fn conj_hadamard(&self, other: &Self) -> Self {
        let mut re = Vec::with_capacity(self.len());
        let mut im = Vec::with_capacity(self.len());
        for n in 0..self.len() {
            re.push(self.re[n] * other.re[n] + self.im[n] * other.im[n]);
            im.push(self.re[n] * other.im[n] - self.im[n] * other.re[n]);
        }
        Self { re, im }
    }

    /// Elementwise moduli.
    pub fn magnitudes(&self) -> RealVector {
        RealVector {
            values: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(r, i)| r.hypot(*i))
                .collect(),
        }
    }

    /// Elementwise phase angles in (-pi, pi].
    pub fn angles(&self) -> RealVector {
        RealVector {
            values: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(r, i)| i.atan2(*r))
                .collect(),
        }
    }

    pub fn real_part(&self) -> RealVector {
        RealVector {
            values: self.re.clone(),
        }
    }

    pub fn imag_part(&self) -> RealVector {
        RealVector {
            values: self.im.clone(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|v| v.is_finite())
    }

    /// Largest deviation of |z_n| from 1.
    pub fn max_unit_modulus_deviation(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| (r.hypot(*i) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// e^{ip} elementwise.
pub fn complex_exp(p: &RealVector) -> ComplexVector {
    ComplexVector {
        re: p.values.iter().map(|v| v.cos()).collect(),
        im: p.values.iter().map(|v| v.sin()).collect(),
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
