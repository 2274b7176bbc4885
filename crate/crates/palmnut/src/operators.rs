//! Linear operators between complex vector spaces.
//!
//! Every concrete kind implements a forward map and its exact adjoint; the
//! dot-test invariant `<Ax, y> == <x, A^H y>` is the contract each kind is
//! tested against. Operators are immutable after construction and safe to
//! share across threads.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::vector::{check_len, ComplexVector};
use crate::wavelet;

/// Which finite-difference directions a [`LinearOperator::finite_difference_2d`]
/// operator stacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffAxis {
    Horizontal,
    Vertical,
    Both,
}

/// Unitary 2D DFT helper shared by the masked-DFT and SENSE kinds.
#[derive(Clone)]
struct Dft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Dft2 {
    fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, x: &ComplexVector, forward: bool) -> ComplexVector {
        let n = self.width * self.height;
        let mut buf: Vec<Complex64> = (0..n).map(|i| x.entry(i)).collect();
        let row_plan = if forward { &self.row_fwd } else { &self.row_inv };
        for row in buf.chunks_mut(self.width) {
            row_plan.process(row);
        }
        if self.height > 1 {
            let col_plan = if forward { &self.col_fwd } else { &self.col_inv };
            let mut col = vec![Complex64::default(); self.height];
            for i in 0..self.width {
                for (j, c) in col.iter_mut().enumerate() {
                    *c = buf[j * self.width + i];
                }
                col_plan.process(&mut col);
                for (j, c) in col.iter().enumerate() {
                    buf[j * self.width + i] = *c;
                }
            }
        }
        // unitary scaling: both directions share 1/sqrt(N)
        let scale = 1.0 / (n as f64).sqrt();
        for z in buf.iter_mut() {
            *z *= scale;
        }
        ComplexVector::from_entries(&buf)
    }
}

#[derive(Clone)]
enum OpKind {
    Identity,
    Diagonal {
        d: ComplexVector,
    },
    MaskedDft {
        dft: Dft2,
        mask: Vec<bool>,
    },
    Sense {
        dft: Dft2,
        sensitivities: Vec<ComplexVector>,
        mask: Vec<bool>,
    },
    FiniteDifference {
        width: usize,
        height: usize,
        axis: DiffAxis,
    },
    Daubechies4 {
        width: usize,
        height: usize,
        levels: usize,
    },
    Composite {
        outer: Box<LinearOperator>,
        inner: Box<LinearOperator>,
    },
    Stacked {
        parts: Vec<LinearOperator>,
    },
}

/// Linear map `A: C^domain_dim -> C^codomain_dim` with forward and adjoint
/// application.
#[derive(Clone)]
pub struct LinearOperator {
    kind: OpKind,
    domain_dim: usize,
    codomain_dim: usize,
}

impl std::fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LinearOperator({} {}x{})",
            self.kind_name(),
            self.codomain_dim,
            self.domain_dim
        )
    }
}

impl LinearOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            kind: OpKind::Identity,
            domain_dim: n,
            codomain_dim: n,
        }
    }

    pub fn diagonal(d: ComplexVector) -> Self {
        let n = d.len();
        Self {
            kind: OpKind::Diagonal { d },
            domain_dim: n,
            codomain_dim: n,
        }
    }

    /// The zero map, represented as a zero diagonal.
    pub fn zero(n: usize) -> Self {
        Self::diagonal(ComplexVector::zeros(n))
    }

    /// Unitary 2D DFT followed by zeroing of unsampled k-space locations.
    /// `mask` is indexed in standard (unshifted) FFT order, row-major.
    pub fn masked_dft(width: usize, height: usize, mask: &[bool]) -> Result<Self> {
        let n = width * height;
        check_len("masked_dft mask", n, mask.len())?;
        Ok(Self {
            kind: OpKind::MaskedDft {
                dft: Dft2::new(width, height),
                mask: mask.to_vec(),
            },
            domain_dim: n,
            codomain_dim: n,
        })
    }

    /// SENSE forward model: per-coil sensitivity weighting, unitary DFT,
    /// k-space mask; coil outputs are stacked.
    pub fn sense(
        width: usize,
        height: usize,
        sensitivities: &[ComplexVector],
        mask: &[bool],
    ) -> Result<Self> {
        let n = width * height;
        if sensitivities.is_empty() {
            return Err(Error::InvalidInput("sense needs at least one coil".into()));
        }
        for s in sensitivities {
            check_len("sense sensitivity map", n, s.len())?;
        }
        check_len("sense mask", n, mask.len())?;
        Ok(Self {
            kind: OpKind::Sense {
                dft: Dft2::new(width, height),
                sensitivities: sensitivities.to_vec(),
                mask: mask.to_vec(),
            },
            domain_dim: n,
            codomain_dim: n * sensitivities.len(),
        })
    }

    /// Periodic finite differences on a `width x height` grid. `Both` stacks
    /// the horizontal differences above the vertical ones (codomain 2N);
    /// on a 1D signal (height 1) only the horizontal part exists.
    pub fn finite_difference_2d(width: usize, height: usize, axis: DiffAxis) -> Result<Self> {
        let n = width * height;
        if n == 0 {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        if axis == DiffAxis::Vertical && height == 1 {
            return Err(Error::InvalidInput(
                "vertical differences need height > 1".into(),
            ));
        }
        let effective = if height == 1 { DiffAxis::Horizontal } else { axis };
        let codomain = match effective {
            DiffAxis::Both => 2 * n,
            _ => n,
        };
        Ok(Self {
            kind: OpKind::FiniteDifference {
                width,
                height,
                axis: effective,
            },
            domain_dim: n,
            codomain_dim: codomain,
        })
    }

    /// Unitary multi-level Daubechies-4 wavelet transform of a row-major
    /// `width x height` image (1D when height is 1).
    pub fn daubechies4(width: usize, height: usize, levels: usize) -> Result<Self> {
        // validate once up front so apply can't fail on lengths
        wavelet::dwt4_forward_2d(&ComplexVector::zeros(width * height), width, height, levels)?;
        Ok(Self {
            kind: OpKind::Daubechies4 {
                width,
                height,
                levels,
            },
            domain_dim: width * height,
            codomain_dim: width * height,
        })
    }

    /// Composition `outer . inner` (apply `inner` first).
    pub fn compose(outer: LinearOperator, inner: LinearOperator) -> Result<Self> {
        check_len("compose", outer.domain_dim, inner.codomain_dim)?;
        let domain_dim = inner.domain_dim;
        let codomain_dim = outer.codomain_dim;
        Ok(Self {
            kind: OpKind::Composite {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
            domain_dim,
            codomain_dim,
        })
    }

    /// Vertical stacking `[A_1; A_2; ...]` of operators on a common domain.
    pub fn stacked(parts: Vec<LinearOperator>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("stacked needs at least one part".into()))?;
        let domain_dim = first.domain_dim;
        let mut codomain_dim = 0;
        for p in &parts {
            check_len("stacked domain", domain_dim, p.domain_dim)?;
            codomain_dim += p.codomain_dim;
        }
        Ok(Self {
            kind: OpKind::Stacked { parts },
            domain_dim,
            codomain_dim,
        })
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            OpKind::Identity => "identity",
            OpKind::Diagonal { .. } => "diagonal",
            OpKind::MaskedDft { .. } => "masked_dft",
            OpKind::Sense { .. } => "sense",
            OpKind::FiniteDifference { .. } => "finite_difference_stack",
            OpKind::Daubechies4 { .. } => "daubechies4",
            OpKind::Composite { .. } => "composite",
            OpKind::Stacked { .. } => "stacked",
        }
    }

    /// Forward application `A x`.
    pub fn apply(&self, x: &ComplexVector) -> Result<ComplexVector> {
        check_len("apply", self.domain_dim, x.len())?;
        Ok(match &self.kind {
            OpKind::Identity => x.clone(),
            OpKind::Diagonal { d } => d.hadamard(x),
            OpKind::MaskedDft { dft, mask } => {
                let mut k = dft.run(x, true);
                apply_mask(&mut k, mask);
                k
            }
            OpKind::Sense {
                dft,
                sensitivities,
                mask,
            } => {
                let n = self.domain_dim;
                let mut out = ComplexVector::zeros(self.codomain_dim);
                for (c, s) in sensitivities.iter().enumerate() {
                    let mut k = dft.run(&s.hadamard(x), true);
                    apply_mask(&mut k, mask);
                    out.re[c * n..(c + 1) * n].copy_from_slice(&k.re);
                    out.im[c * n..(c + 1) * n].copy_from_slice(&k.im);
                }
                out
            }
            OpKind::FiniteDifference {
                width,
                height,
                axis,
            } => diff_forward(x, *width, *height, *axis),
            OpKind::Daubechies4 {
                width,
                height,
                levels,
            } => wavelet::dwt4_forward_2d(x, *width, *height, *levels)?,
            OpKind::Composite { outer, inner } => outer.apply(&inner.apply(x)?)?,
            OpKind::Stacked { parts } => {
                let mut out = ComplexVector::zeros(self.codomain_dim);
                let mut offset = 0;
                for p in parts {
                    let y = p.apply(x)?;
                    out.re[offset..offset + y.len()].copy_from_slice(&y.re);
                    out.im[offset..offset + y.len()].copy_from_slice(&y.im);
                    offset += y.len();
                }
                out
            }
        })
    }

    /// Adjoint application `A^H y`.
    pub fn adjoint_apply(&self, y: &ComplexVector) -> Result<ComplexVector> {
        check_len("adjoint_apply", self.codomain_dim, y.len())?;
        Ok(match &self.kind {
            OpKind::Identity => y.clone(),
            OpKind::Diagonal { d } => d.conj_hadamard(y),
            OpKind::MaskedDft { dft, mask } => {
                let mut k = y.clone();
                apply_mask(&mut k, mask);
                dft.run(&k, false)
            }
            OpKind::Sense {
                dft,
                sensitivities,
                mask,
            } => {
                let n = self.domain_dim;
                let mut out = ComplexVector::zeros(n);
                for (c, s) in sensitivities.iter().enumerate() {
                    let mut k = ComplexVector {
                        re: y.re[c * n..(c + 1) * n].to_vec(),
                        im: y.im[c * n..(c + 1) * n].to_vec(),
                    };
                    apply_mask(&mut k, mask);
                    let img = dft.run(&k, false);
                    let weighted = s.conj_hadamard(&img);
                    for i in 0..n {
                        out.re[i] += weighted.re[i];
                        out.im[i] += weighted.im[i];
                    }
                }
                out
            }
            OpKind::FiniteDifference {
                width,
                height,
                axis,
            } => diff_adjoint(y, *width, *height, *axis),
            OpKind::Daubechies4 {
                width,
                height,
                levels,
            } => wavelet::dwt4_inverse_2d(y, *width, *height, *levels)?,
            OpKind::Composite { outer, inner } => inner.adjoint_apply(&outer.adjoint_apply(y)?)?,
            OpKind::Stacked { parts } => {
                let mut out = ComplexVector::zeros(self.domain_dim);
                let mut offset = 0;
                for p in parts {
                    let block = ComplexVector {
                        re: y.re[offset..offset + p.codomain_dim].to_vec(),
                        im: y.im[offset..offset + p.codomain_dim].to_vec(),
                    };
                    let back = p.adjoint_apply(&block)?;
                    for i in 0..self.domain_dim {
                        out.re[i] += back.re[i];
                        out.im[i] += back.im[i];
                    }
                    offset += p.codomain_dim;
                }
                out
            }
        })
    }
}

fn apply_mask(k: &mut ComplexVector, mask: &[bool]) {
    for (i, &keep) in mask.iter().enumerate() {
        if !keep {
            k.re[i] = 0.0;
            k.im[i] = 0.0;
        }
    }
}

fn diff_forward(x: &ComplexVector, width: usize, height: usize, axis: DiffAxis) -> ComplexVector {
    let n = width * height;
    let horizontal = |out_re: &mut [f64], out_im: &mut [f64]| {
        for y in 0..height {
            for i in 0..width {
                let idx = y * width + i;
                let nxt = y * width + (i + 1) % width;
                out_re[idx] = x.re[nxt] - x.re[idx];
                out_im[idx] = x.im[nxt] - x.im[idx];
            }
        }
    };
    let vertical = |out_re: &mut [f64], out_im: &mut [f64]| {
        for y in 0..height {
            for i in 0..width {
                let idx = y * width + i;
                let nxt = ((y + 1) % height) * width + i;
                out_re[idx] = x.re[nxt] - x.re[idx];
                out_im[idx] = x.im[nxt] - x.im[idx];
            }
        }
    };
    match axis {
        DiffAxis::Horizontal => {
            let mut out = ComplexVector::zeros(n);
            horizontal(&mut out.re, &mut out.im);
            out
        }
        DiffAxis::Vertical => {
            let mut out = ComplexVector::zeros(n);
            vertical(&mut out.re, &mut out.im);
            out
        }
        DiffAxis::Both => {
            let mut out = ComplexVector::zeros(2 * n);
            {
                let (re_h, re_v) = out.re.split_at_mut(n);
                let (im_h, im_v) = out.im.split_at_mut(n);
                horizontal(re_h, im_h);
                vertical(re_v, im_v);
            }
            out
        }
    }
}

fn diff_adjoint(y: &ComplexVector, width: usize, height: usize, axis: DiffAxis) -> ComplexVector {
    let n = width * height;
    let mut out = ComplexVector::zeros(n);
    // adjoint of (x_{next} - x_idx): scatter +1 to idx's predecessor, -1 to idx
    let add_horizontal = |re: &[f64], im: &[f64], out: &mut ComplexVector| {
        for row in 0..height {
            for i in 0..width {
                let idx = row * width + i;
                let prev = row * width + (i + width - 1) % width;
                out.re[idx] += re[prev] - re[idx];
                out.im[idx] += im[prev] - im[idx];
            }
        }
    };
    let add_vertical = |re: &[f64], im: &[f64], out: &mut ComplexVector| {
        for row in 0..height {
            for i in 0..width {
                let idx = row * width + i;
                let prev = ((row + height - 1) % height) * width + i;
                out.re[idx] += re[prev] - re[idx];
                out.im[idx] += im[prev] - im[idx];
            }
        }
    };
    match axis {
        DiffAxis::Horizontal => add_horizontal(&y.re, &y.im, &mut out),
        DiffAxis::Vertical => add_vertical(&y.re, &y.im, &mut out),
        DiffAxis::Both => {
            add_horizontal(&y.re[..n], &y.im[..n], &mut out);
            add_vertical(&y.re[n..], &y.im[n..], &mut out);
        }
    }
    out
}

/// Fixed seed for the deterministic pseudo-random power-iteration start
/// vector. An all-ones start would sit in the null space of the
/// finite-difference operators, so a seeded random vector is used instead.
const POWER_ITERATION_SEED: u64 = 0x0D15_EA5E_0D15_EA5E;

/// Extra iterations run after the stopping rule fires; the Rayleigh quotient
/// converges geometrically, so these tighten the estimate well past `tol`.
const POLISH_ITERATIONS: usize = 8;

/// Estimate of the squared spectral norm `||A||^2` (largest eigenvalue of
/// `A^H A`) by power iteration. Converges when successive Rayleigh quotients
/// differ by less than `tol` relatively. The estimate approaches the true
/// value from below, so callers that need a guaranteed upper bound must
/// inflate it.
pub fn spectral_norm_sq(op: &LinearOperator, tol: f64, max_iter: usize) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("spectral_norm_sq needs tol > 0".into()));
    }
    let mut rng = SplitMix64::new(POWER_ITERATION_SEED);
    let n = op.domain_dim();
    let mut x = ComplexVector {
        re: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
        im: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
    };
    let norm = x.norm();
    x = x.scale(1.0 / norm);

    let mut rho_prev: Option<f64> = None;
    let mut rho = 0.0;
    for _ in 0..max_iter {
        let ax = op.apply(&x)?;
        rho = ax.norm_sq(); // Rayleigh quotient of A^H A at unit x
        let y = op.adjoint_apply(&ax)?;
        let ny = y.norm();
        if ny < 1e-300 {
            // A^H A annihilates a random vector: the operator is (numerically) zero
            return Ok(0.0);
        }
        x = y.scale(1.0 / ny);
        if let Some(prev) = rho_prev {
            if (rho - prev).abs() <= tol * rho.max(f64::MIN_POSITIVE) {
                for _ in 0..POLISH_ITERATIONS {
                    let ax = op.apply(&x)?;
                    rho = ax.norm_sq();
                    let y = op.adjoint_apply(&ax)?;
                    let ny = y.norm();
                    if ny < 1e-300 {
                        return Ok(0.0);
                    }
                    x = y.scale(1.0 / ny);
                }
                return Ok(rho);
            }
        }
        rho_prev = Some(rho);
    }
    Err(Error::PowerIterationDiverged {
        iterations: max_iter,
        last_estimate: rho,
    })
}

/// Default power-iteration parameters.
pub const SPECTRAL_NORM_TOL: f64 = 1e-9;
pub const SPECTRAL_NORM_MAX_ITER: usize = 5000;

/// [`spectral_norm_sq`] with the default tolerance and iteration budget.
pub fn spectral_norm_sq_default(op: &LinearOperator) -> Result<f64> {
    spectral_norm_sq(op, SPECTRAL_NORM_TOL, SPECTRAL_NORM_MAX_ITER)
}

/// Absolute dot-test residual `|<Ax, y> - <x, A^H y>|`.
pub fn dot_test_residual(op: &LinearOperator, x: &ComplexVector, y: &ComplexVector) -> Result<f64> {
    let lhs = op.apply(x)?.inner(y);
    let rhs = x.inner(&op.adjoint_apply(y)?);
    Ok((lhs - rhs).norm())
}

/// Checks `||Tx|| == ||x||` on a few seeded random vectors.
pub fn verify_unitary(op: &LinearOperator, tol: f64, trials: usize) -> Result<bool> {
    if op.domain_dim() != op.codomain_dim() {
        return Ok(false);
    }
    let mut rng = SplitMix64::new(0xBADC_0FFE_E0DD_F00D);
    let n = op.domain_dim();
    for _ in 0..trials {
        let x = ComplexVector {
            re: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
            im: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
        };
        let tx = op.apply(&x)?;
        if (tx.norm() - x.norm()).abs() > tol * x.norm().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}
