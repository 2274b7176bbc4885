//! Regularization penalties, their gradients, and proximal operators.
//!
//! Three penalty families are supported:
//!
//! * Huber stack: `lambda * sum_l h_xi( sqrt( sum_t |[B_t x]_l|^2 ) )` over a
//!   list of transforms sharing one codomain — smooth, with gradient
//!   `lambda * sum_t B_t^H W(x) B_t x` for a diagonal weight matrix `W`.
//! * Tikhonov: `(lambda/2) ||C x||^2`.
//! * l1 on a unitary transform: `lambda ||T x||_1`, nonsmooth, with a
//!   closed-form proximal operator (transform, soft-threshold, inverse).
//!
//! The unit-modulus projection `z -> z/|z|` (with the `0/0 = 1` convention)
//! lives here as well; it is the proximal operator of the indicator of the
//! unit-modulus constraint set regardless of the step-size weights.

use crate::error::{Error, Result};
use crate::operators::{spectral_norm_sq, verify_unitary, LinearOperator};
use crate::vector::{check_len, ComplexVector, RealVector};

/// Power-iteration parameters for Lipschitz-term spectral norms. Tighter than
/// the general-purpose defaults because these estimates feed majorant bounds
/// where an underestimate shows up as a descent violation.
pub(crate) const LIPSCHITZ_NORM_TOL: f64 = 1e-12;
pub(crate) const LIPSCHITZ_NORM_MAX_ITER: usize = 200_000;

/// Huber function: quadratic `t^2/(2 xi)` for |t| <= xi, linear `|t| - xi/2`
/// beyond. Continuously differentiable at the breakpoint.
pub fn huber_scalar(t: f64, xi: f64) -> f64 {
    debug_assert!(xi > 0.0);
    let a = t.abs();
    if a <= xi {
        t * t / (2.0 * xi)
    } else {
        a - 0.5 * xi
    }
}

/// Huber penalty applied to the pooled magnitudes of a stack of transforms.
#[derive(Debug, Clone)]
pub struct HuberStackReg {
    pub lambda: f64,
    pub xi: f64,
    pub transforms: Vec<LinearOperator>,
}

impl HuberStackReg {
    pub fn new(lambda: f64, xi: f64, transforms: Vec<LinearOperator>) -> Result<Self> {
        if lambda <= 0.0 || xi <= 0.0 {
            return Err(Error::InvalidConfig(
                "Huber regularizer needs lambda > 0 and xi > 0".into(),
            ));
        }
        let first = transforms
            .first()
            .ok_or_else(|| Error::InvalidConfig("Huber stack needs >= 1 transform".into()))?;
        let (dom, cod) = (first.domain_dim(), first.codomain_dim());
        for t in &transforms {
            if t.domain_dim() != dom || t.codomain_dim() != cod {
                return Err(Error::InvalidConfig(
                    "all Huber stack transforms must share domain and codomain dims".into(),
                ));
            }
        }
        Ok(Self {
            lambda,
            xi,
            transforms,
        })
    }

    pub fn domain_dim(&self) -> usize {
        self.transforms[0].domain_dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.transforms[0].codomain_dim()
    }

    /// Pooled magnitudes s_l = sqrt(sum_t |[B_t x]_l|^2) plus the transform
    /// outputs themselves (reused by the gradient).
    fn pooled(&self, x: &ComplexVector) -> Result<(Vec<ComplexVector>, Vec<f64>)> {
        check_len("huber_stack", self.domain_dim(), x.len())?;
        let mut outputs = Vec::with_capacity(self.transforms.len());
        let mut pooled_sq = vec![0.0; self.codomain_dim()];
        for t in &self.transforms {
            let bx = t.apply(x)?;
            for (s, (r, i)) in pooled_sq.iter_mut().zip(bx.re.iter().zip(&bx.im)) {
                *s += r * r + i * i;
            }
            outputs.push(bx);
        }
        Ok((outputs, pooled_sq.iter().map(|s| s.sqrt()).collect()))
    }

    /// `lambda * sum_l h_xi(s_l)`.
    pub fn value(&self, x: &ComplexVector) -> Result<f64> {
        let (_, pooled) = self.pooled(x)?;
        Ok(self.lambda
            * pooled
                .iter()
                .map(|&s| huber_scalar(s, self.xi))
                .sum::<f64>())
    }

    /// Diagonal weights `1 / max{xi, s_l}`, entries in (0, 1/xi].
    pub fn weights(&self, x: &ComplexVector) -> Result<RealVector> {
        let (_, pooled) = self.pooled(x)?;
        Ok(RealVector {
            values: pooled.iter().map(|&s| 1.0 / s.max(self.xi)).collect(),
        })
    }

    /// `lambda * sum_t B_t^H W(x) B_t x`.
    pub fn gradient(&self, x: &ComplexVector) -> Result<ComplexVector> {
        let (outputs, pooled) = self.pooled(x)?;
        let weights: Vec<f64> = pooled.iter().map(|&s| 1.0 / s.max(self.xi)).collect();
        let mut grad = ComplexVector::zeros(x.len());
        for (t, bx) in self.transforms.iter().zip(&outputs) {
            let weighted = ComplexVector {
                re: bx.re.iter().zip(&weights).map(|(v, w)| v * w).collect(),
                im: bx.im.iter().zip(&weights).map(|(v, w)| v * w).collect(),
            };
            let back = t.adjoint_apply(&weighted)?;
            for n in 0..grad.len() {
                grad.re[n] += self.lambda * back.re[n];
                grad.im[n] += self.lambda * back.im[n];
            }
        }
        Ok(grad)
    }

    pub fn value_real(&self, x: &RealVector) -> Result<f64> {
        self.value(&x.to_complex())
    }

    /// Real-argument gradient: Re{ lambda * sum_t B_t^H W B_t x }.
    pub fn gradient_real(&self, x: &RealVector) -> Result<RealVector> {
        Ok(self.gradient(&x.to_complex())?.real_part())
    }

    /// `(lambda/xi) * || sum_t B_t^H B_t ||`, computed as the squared spectral
    /// norm of the stacked operator `[B_1; ...; B_T]`.
    pub fn lipschitz_term(&self) -> Result<f64> {
        let stacked = LinearOperator::stacked(self.transforms.clone())?;
        let norm = spectral_norm_sq(&stacked, LIPSCHITZ_NORM_TOL, LIPSCHITZ_NORM_MAX_ITER)?;
        Ok(self.lambda / self.xi * norm)
    }
}

/// Quadratic penalty `(lambda/2) ||C x||^2`.
#[derive(Debug, Clone)]
pub struct TikhonovReg {
    pub lambda: f64,
    pub c_op: LinearOperator,
}

impl TikhonovReg {
    pub fn new(lambda: f64, c_op: LinearOperator) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::InvalidConfig("Tikhonov needs lambda > 0".into()));
        }
        Ok(Self { lambda, c_op })
    }

    pub fn value(&self, q: &ComplexVector) -> Result<f64> {
        check_len("tikhonov_value", self.c_op.domain_dim(), q.len())?;
        Ok(0.5 * self.lambda * self.c_op.apply(q)?.norm_sq())
    }

    /// `lambda * C^H C q`.
    pub fn gradient(&self, q: &ComplexVector) -> Result<ComplexVector> {
        check_len("tikhonov_gradient", self.c_op.domain_dim(), q.len())?;
        Ok(self
            .c_op
            .adjoint_apply(&self.c_op.apply(q)?)?
            .scale(self.lambda))
    }

    pub fn value_real(&self, x: &RealVector) -> Result<f64> {
        self.value(&x.to_complex())
    }

    pub fn gradient_real(&self, x: &RealVector) -> Result<RealVector> {
        Ok(self.gradient(&x.to_complex())?.real_part())
    }

    /// `lambda * ||C||^2`.
    pub fn lipschitz_term(&self) -> Result<f64> {
        let norm = spectral_norm_sq(&self.c_op, LIPSCHITZ_NORM_TOL, LIPSCHITZ_NORM_MAX_ITER)?;
        Ok(self.lambda * norm)
    }
}

/// `lambda ||T x||_1` for a unitary transform `T`, so the prox has a closed
/// form. Non-unitary transforms are rejected at construction because the
/// closed form needs `T^H = T^{-1}`.
#[derive(Debug, Clone)]
pub struct L1UnitaryReg {
    pub lambda: f64,
    pub t_op: LinearOperator,
}

impl L1UnitaryReg {
    pub fn new(lambda: f64, t_op: LinearOperator) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::InvalidConfig(
                "l1 regularizer needs lambda > 0".into(),
            ));
        }
        if !verify_unitary(&t_op, 1e-10, 8)? {
            return Err(Error::InvalidConfig(format!(
                "l1 prox requires a unitary transform; {} failed the unitarity check",
                t_op.kind_name()
            )));
        }
        Ok(Self { lambda, t_op })
    }

    /// `lambda * sum_l |[T x]_l|`.
    pub fn value(&self, x: &ComplexVector) -> Result<f64> {
        check_len("l1_value", self.t_op.domain_dim(), x.len())?;
        let tx = self.t_op.apply(x)?;
        Ok(self.lambda
            * tx.re
                .iter()
                .zip(&tx.im)
                .map(|(r, i)| r.hypot(*i))
                .sum::<f64>())
    }

    pub fn value_real(&self, x: &RealVector) -> Result<f64> {
        self.value(&x.to_complex())
    }
}

/// Radial projection onto the unit-modulus set: `z_n / |z_n|`, with the
/// convention that a zero entry maps to `1 + 0i`.
pub fn prox_unit_modulus(z: &ComplexVector) -> ComplexVector {
    let n = z.len();
    let mut out = ComplexVector::zeros(n);
    for i in 0..n {
        let m = z.re[i].hypot(z.im[i]);
        if m == 0.0 {
            out.re[i] = 1.0;
            out.im[i] = 0.0;
        } else if (m - 1.0).abs() <= 1e-15 {
            // already on the constraint set to rounding accuracy; renormalizing
            // would drift by an ulp, breaking the fixed-point property
            out.re[i] = z.re[i];
            out.im[i] = z.im[i];
        } else {
            out.re[i] = z.re[i] / m;
            out.im[i] = z.im[i] / m;
        }
    }
    out
}

/// Complex soft threshold: shrinks the modulus by `tau`, preserves the angle,
/// maps 0 to 0.
fn soft_threshold(z: &mut ComplexVector, tau: f64) {
    for i in 0..z.len() {
        let m = z.re[i].hypot(z.im[i]);
        if m <= tau {
            z.re[i] = 0.0;
            z.im[i] = 0.0;
        } else {
            let scale = (m - tau) / m;
            z.re[i] *= scale;
            z.im[i] *= scale;
        }
    }
}

/// Proximal operator of `lambda ||T . ||_1` at `w` with quadratic weight `c`:
/// `T^H soft_threshold(T w, lambda/c)`.
pub fn prox_l1_unitary(w: &ComplexVector, c: f64, reg: &L1UnitaryReg) -> Result<ComplexVector> {
    if c <= 0.0 {
        return Err(Error::InvalidInput("prox needs c > 0".into()));
    }
    check_len("prox_l1_unitary", reg.t_op.domain_dim(), w.len())?;
    let mut coeffs = reg.t_op.apply(w)?;
    soft_threshold(&mut coeffs, reg.lambda / c);
    reg.t_op.adjoint_apply(&coeffs)
}

/// Real-argument variant of [`prox_l1_unitary`]; exact for real transforms.
pub fn prox_l1_unitary_real(w: &RealVector, c: f64, reg: &L1UnitaryReg) -> Result<RealVector> {
    Ok(prox_l1_unitary(&w.to_complex(), c, reg)?.real_part())
}

/// Tagged regularizer configuration for one block (magnitude or phase).
#[derive(Debug, Clone)]
pub enum Regularizer {
    None,
    HuberStack(HuberStackReg),
    Tikhonov(TikhonovReg),
    L1Unitary(L1UnitaryReg),
}

impl Regularizer {
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Regularizer::L1Unitary(_))
    }

    /// Domain length the regularizer expects, if any.
    pub fn domain_dim(&self) -> Option<usize> {
        match self {
            Regularizer::None => None,
            Regularizer::HuberStack(r) => Some(r.domain_dim()),
            Regularizer::Tikhonov(r) => Some(r.c_op.domain_dim()),
            Regularizer::L1Unitary(r) => Some(r.t_op.domain_dim()),
        }
    }

    /// Value of the smooth part (0 for `None` and for the nonsmooth l1).
    pub fn smooth_value(&self, q: &ComplexVector) -> Result<f64> {
        match self {
            Regularizer::None | Regularizer::L1Unitary(_) => Ok(0.0),
            Regularizer::HuberStack(r) => r.value(q),
            Regularizer::Tikhonov(r) => r.value(q),
        }
    }

    pub fn smooth_value_real(&self, m: &RealVector) -> Result<f64> {
        match self {
            Regularizer::None | Regularizer::L1Unitary(_) => Ok(0.0),
            Regularizer::HuberStack(r) => r.value_real(m),
            Regularizer::Tikhonov(r) => r.value_real(m),
        }
    }

    pub fn smooth_gradient(&self, q: &ComplexVector) -> Result<Option<ComplexVector>> {
        match self {
            Regularizer::None | Regularizer::L1Unitary(_) => Ok(None),
            Regularizer::HuberStack(r) => r.gradient(q).map(Some),
            Regularizer::Tikhonov(r) => r.gradient(q).map(Some),
        }
    }

    pub fn smooth_gradient_real(&self, m: &RealVector) -> Result<Option<RealVector>> {
        match self {
            Regularizer::None | Regularizer::L1Unitary(_) => Ok(None),
            Regularizer::HuberStack(r) => r.gradient_real(m).map(Some),
            Regularizer::Tikhonov(r) => r.gradient_real(m).map(Some),
        }
    }

    /// Additive Lipschitz-bound contribution of the smooth part.
    pub fn smooth_lipschitz_term(&self) -> Result<f64> {
        match self {
            Regularizer::None | Regularizer::L1Unitary(_) => Ok(0.0),
            Regularizer::HuberStack(r) => r.lipschitz_term(),
            Regularizer::Tikhonov(r) => r.lipschitz_term(),
        }
    }

    /// Value of the nonsmooth part (the l1 penalty; 0 otherwise).
    pub fn nonsmooth_value_real(&self, m: &RealVector) -> Result<f64> {
        match self {
            Regularizer::L1Unitary(r) => r.value_real(m),
            _ => Ok(0.0),
        }
    }

    /// Proximal operator of the nonsmooth part with weight `c`; identity when
    /// there is no nonsmooth part.
    pub fn prox_real(&self, w: &RealVector, c: f64) -> Result<RealVector> {
        match self {
            Regularizer::L1Unitary(r) => prox_l1_unitary_real(w, c, r),
            _ => Ok(w.clone()),
        }
    }
}
