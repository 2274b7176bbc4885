//! Unitary Daubechies-4 discrete wavelet transform.
//!
//! Periodic (circular) boundary handling makes the transform exactly
//! orthonormal on power-of-two-divisible lengths, so the inverse is the
//! transpose and norms are preserved to machine precision. 2D images are
//! transformed by running the full multi-level 1D transform over every row
//! and then over every column.

use crate::error::{Error, Result};
use crate::vector::ComplexVector;

// Daubechies-4 analysis filters (4 taps). The high-pass taps are the
// alternating-flip of the low-pass taps, which gives an orthonormal bank.
const SQRT3: f64 = 1.732_050_807_568_877_2;
const DB4_LO: [f64; 4] = [
    (1.0 + SQRT3) / (4.0 * std::f64::consts::SQRT_2),
    (3.0 + SQRT3) / (4.0 * std::f64::consts::SQRT_2),
    (3.0 - SQRT3) / (4.0 * std::f64::consts::SQRT_2),
    (1.0 - SQRT3) / (4.0 * std::f64::consts::SQRT_2),
];
const DB4_HI: [f64; 4] = [DB4_LO[3], -DB4_LO[2], DB4_LO[1], -DB4_LO[0]];

fn check_levels(n: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidInput("wavelet levels must be >= 1".into()));
    }
    if n == 0 || n % (1usize << levels) != 0 {
        return Err(Error::InvalidInput(format!(
            "signal length {n} not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

/// One analysis level on x[0..n] (n even), writing [approx | detail] halves.
fn analysis_level(x: &mut [f64], n: usize, scratch: &mut Vec<f64>) {
    let half = n / 2;
    scratch.clear();
    scratch.resize(n, 0.0);
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&lo, &hi)) in DB4_LO.iter().zip(DB4_HI.iter()).enumerate() {
            let idx = (2 * i + k) % n;
            a += lo * x[idx];
            d += hi * x[idx];
        }
        scratch[i] = a;
        scratch[half + i] = d;
    }
    x[..n].copy_from_slice(&scratch[..n]);
}

/// One synthesis level, the exact transpose of `analysis_level`.
fn synthesis_level(x: &mut [f64], n: usize, scratch: &mut Vec<f64>) {
    let half = n / 2;
    scratch.clear();
    scratch.resize(n, 0.0);
    for i in 0..half {
        let a = x[i];
        let d = x[half + i];
        for (k, (&lo, &hi)) in DB4_LO.iter().zip(DB4_HI.iter()).enumerate() {
            let idx = (2 * i + k) % n;
            scratch[idx] += lo * a + hi * d;
        }
    }
    x[..n].copy_from_slice(&scratch[..n]);
}

/// Multi-level forward transform of a real signal in place.
pub fn dwt4_forward_slice(x: &mut [f64], levels: usize) -> Result<()> {
    check_levels(x.len(), levels)?;
    let mut scratch = Vec::new();
    let mut n = x.len();
    for _ in 0..levels {
        analysis_level(x, n, &mut scratch);
        n /= 2;
    }
    Ok(())
}

/// Multi-level inverse transform of a real signal in place.
pub fn dwt4_inverse_slice(x: &mut [f64], levels: usize) -> Result<()> {
    check_levels(x.len(), levels)?;
    let mut scratch = Vec::new();
    let mut n = x.len() >> (levels - 1);
    for _ in 0..levels {
        synthesis_level(x, n, &mut scratch);
        n *= 2;
    }
    Ok(())
}

/// Forward transform of a complex signal (re and im independently).
pub fn dwt4_forward(x: &ComplexVector, levels: usize) -> Result<ComplexVector> {
    let mut out = x.clone();
    dwt4_forward_slice(&mut out.re, levels)?;
    dwt4_forward_slice(&mut out.im, levels)?;
    Ok(out)
}

/// Inverse of [`dwt4_forward`].
pub fn dwt4_inverse(x: &ComplexVector, levels: usize) -> Result<ComplexVector> {
    let mut out = x.clone();
    dwt4_inverse_slice(&mut out.re, levels)?;
    dwt4_inverse_slice(&mut out.im, levels)?;
    Ok(out)
}

fn check_2d(width: usize, height: usize, len: usize, levels: usize) -> Result<()> {
    if width * height != len {
        return Err(Error::DimensionMismatch {
            context: "dwt4 2d",
            expected: width * height,
            got: len,
        });
    }
    check_levels(width, levels)?;
    if height > 1 {
        check_levels(height, levels)?;
    }
    Ok(())
}

fn transform_2d(
    data: &mut [f64],
    width: usize,
    height: usize,
    levels: usize,
    level_fn: fn(&mut [f64], usize) -> Result<()>,
) -> Result<()> {
    for row in data.chunks_mut(width) {
        level_fn(row, levels)?;
    }
    if height > 1 {
        let mut col = vec![0.0; height];
        for x in 0..width {
            for y in 0..height {
                col[y] = data[y * width + x];
            }
            level_fn(&mut col, levels)?;
            for y in 0..height {
                data[y * width + x] = col[y];
            }
        }
    }
    Ok(())
}

/// Row-major 2D forward transform: full multi-level 1D transform on every
/// row, then on every column. Height 1 degenerates to the 1D transform.
pub fn dwt4_forward_2d(
    x: &ComplexVector,
    width: usize,
    height: usize,
    levels: usize,
) -> Result<ComplexVector> {
    check_2d(width, height, x.len(), levels)?;
    let mut out = x.clone();
    transform_2d(&mut out.re, width, height, levels, dwt4_forward_slice)?;
    transform_2d(&mut out.im, width, height, levels, dwt4_forward_slice)?;
    Ok(out)
}

/// Inverse of [`dwt4_forward_2d`] (columns first, then rows).
pub fn dwt4_inverse_2d(
    x: &ComplexVector,
    width: usize,
    height: usize,
    levels: usize,
) -> Result<ComplexVector> {
    check_2d(width, height, x.len(), levels)?;
    let mut out = x.clone();
    // transpose order of the forward pass
    if height > 1 {
        let invert_cols = |data: &mut [f64]| -> Result<()> {
            let mut col = vec![0.0; height];
            for col_idx in 0..width {
                for y in 0..height {
                    col[y] = data[y * width + col_idx];
                }
                dwt4_inverse_slice(&mut col, levels)?;
                for y in 0..height {
                    data[y * width + col_idx] = col[y];
                }
            }
            Ok(())
        };
        invert_cols(&mut out.re)?;
        invert_cols(&mut out.im)?;
    }
    for row in out.re.chunks_mut(width) {
        dwt4_inverse_slice(row, levels)?;
    }
    for row in out.im.chunks_mut(width) {
        dwt4_inverse_slice(row, levels)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_cvec(n: usize, seed: u64) -> ComplexVector {
        let mut rng = SplitMix64::new(seed);
        ComplexVector {
            re: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
            im: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
        }
    }

    #[test]
    fn filters_are_orthonormal() {
        let lo_sq: f64 = DB4_LO.iter().map(|h| h * h).sum();
        let hi_sq: f64 = DB4_HI.iter().map(|h| h * h).sum();
        let cross: f64 = DB4_LO.iter().zip(&DB4_HI).map(|(a, b)| a * b).sum();
        assert!((lo_sq - 1.0).abs() < 1e-15);
        assert!((hi_sq - 1.0).abs() < 1e-15);
        assert!(cross.abs() < 1e-15);
        let lo_sum: f64 = DB4_LO.iter().sum();
        assert!((lo_sum - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn constant_signal_has_zero_details() {
        // Vanishing moment: the high-pass taps sum to zero.
        let x = ComplexVector::new(vec![3.5; 32], vec![-1.25; 32]).unwrap();
        let w = dwt4_forward(&x, 3).unwrap();
        // After 3 levels on length 32, entries [4..32) are detail coefficients.
        for n in 4..32 {
            assert!(
                w.entry(n).norm() < 1e-12,
                "detail coefficient {n} = {:?} not ~0",
                w.entry(n)
            );
        }
    }

    #[test]
    fn forward_then_inverse_is_identity() {
        let x = random_cvec(64, 99);
        let w = dwt4_forward(&x, 3).unwrap();
        let back = dwt4_inverse(&w, 3).unwrap();
        for n in 0..64 {
            assert!((back.entry(n) - x.entry(n)).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_preserved_over_random_sweep() {
        for trial in 0..100 {
            let x = random_cvec(64, 1000 + trial);
            let w = dwt4_forward(&x, 2).unwrap();
            let rel = (w.norm() - x.norm()).abs() / x.norm();
            assert!(rel < 1e-12, "trial {trial}: relative norm change {rel}");
        }
    }

    #[test]
    fn rejects_invalid_lengths() {
        let x = ComplexVector::zeros(12);
        assert!(dwt4_forward(&x, 3).is_err()); // 12 % 8 != 0
        assert!(dwt4_forward(&ComplexVector::zeros(0), 1).is_err());
        assert!(dwt4_forward(&ComplexVector::zeros(8), 0).is_err());
    }

    #[test]
    fn two_d_round_trip_and_unitarity() {
        let x = random_cvec(16 * 8, 5);
        let w = dwt4_forward_2d(&x, 16, 8, 3).unwrap();
        assert!((w.norm() - x.norm()).abs() / x.norm() < 1e-12);
        let back = dwt4_inverse_2d(&w, 16, 8, 3).unwrap();
        for n in 0..x.len() {
            assert!((back.entry(n) - x.entry(n)).norm() < 1e-12);
        }
    }
}
