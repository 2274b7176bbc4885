//! The magnitude/phase objective in the exponentiated-phase formulation.
//!
//! Variables are a real magnitude `m` and a unit-modulus complex vector
//! `q = e^{ip}`; the objective is
//!
//! ```text
//! Psi(m, q) = 1/2 ||A(m .* q) - b||^2 + R1(m) + R2(q) + I_V(q)
//! ```
//!
//! where `I_V` is the indicator of the unit-modulus set. Smooth penalties fold
//! into the smooth coupling term `H`; a nonsmooth R1 (the l1 case) becomes the
//! prox-handled term `F`; `I_V` is always handled by the radial projection.
//! Nonsmooth phase penalties on top of the constraint are not supported (their
//! joint prox has no closed form).
//!
//! The gradients with respect to `q` are real gradients on the `R^{2N}`
//! isomorphism:
//!
//! * `grad_m = Re{ conj(q) .* [A^H A (m .* q) - A^H b] } + grad R1(m)`
//! * `grad_q = m .* [A^H A (m .* q) - A^H b] + grad R2(q)`
//!
//! Step-size bounds: the magnitude block uses the scalar
//! `c = ||A||^2 + (smooth-R1 term)`; the phase block admits the coordinatewise
//! vector `d_n = ||A||^2 m_n^2 + (smooth-R2 term)`, which is what uncoupled
//! step sizes exploit (larger steps where `|m_n|` is small). Spectral norms
//! are estimated once at construction and cached; the data-operator estimate
//! is inflated by 1% to guard against power-iteration underestimation.

use crate::error::{Error, Result};
use crate::operators::{spectral_norm_sq, LinearOperator};
use crate::regularizers::{Regularizer, LIPSCHITZ_NORM_MAX_ITER, LIPSCHITZ_NORM_TOL};
use crate::vector::{check_len, complex_exp, ComplexVector, RealVector};

/// Safety factor applied to the power-iteration estimate of `||A||^2` before
/// it enters any step-size bound (the estimate approaches from below).
pub const SPECTRAL_NORM_INFLATION: f64 = 1.01;

/// Unit-modulus tolerance for [`MagPhaseObjective::objective`]; beyond this
/// the indicator term would be infinite and an error is returned.
pub const UNIT_MODULUS_TOL: f64 = 1e-6;

/// What the PALM-family solvers and the AM baseline need from a problem:
/// block gradients of the smooth coupling term, the nonsmooth magnitude
/// value/prox pair, and scalar or coordinatewise step-size bounds.
pub trait MagPhaseObjective {
    /// Length of the magnitude block.
    fn mag_len(&self) -> usize;
    /// Length of the phase block (J*N for the multi-repetition problem).
    fn phase_len(&self) -> usize;

    /// Smooth part `H(m, q)`: data fidelity plus every smooth penalty.
    fn smooth_value(&self, m: &RealVector, q: &ComplexVector) -> Result<f64>;
    /// Nonsmooth magnitude penalty `F(m)` (0 unless R1 is the l1 penalty).
    fn nonsmooth_mag_value(&self, m: &RealVector) -> Result<f64>;
    /// Gradient of `H` with respect to the magnitude block.
    fn grad_m(&self, m: &RealVector, q: &ComplexVector) -> Result<RealVector>;
    /// Gradient of `H` with respect to the phase block (R^{2N} convention).
    fn grad_q(&self, m: &RealVector, q: &ComplexVector) -> Result<ComplexVector>;

    /// Scalar magnitude-block bound; constant across iterations because the
    /// phase iterates are unit-modulus.
    fn bound_c(&self) -> f64;
    /// Magnitude-block bound at an arbitrary phase point `v` (needed by the
    /// momentum solvers, whose extrapolated phases leave the unit-modulus
    /// set): the data term scales with `max_n |v_n|^2`.
    fn bound_c_at(&self, v: &ComplexVector) -> f64;
    /// Scalar phase-block bound `||A||^2 max_n m_n^2 + r2 term`.
    fn bound_d_scalar(&self, m: &RealVector) -> f64;
    /// Coordinatewise phase-block bound `d_n = ||A||^2 m_n^2 + r2 term`.
    fn bound_d_vector(&self, m: &RealVector) -> RealVector;

    /// Proximal operator of `F` with quadratic weight `c` (identity if F = 0).
    fn prox_mag(&self, w: &RealVector, c: f64) -> Result<RealVector>;
    /// Whether `F` is identically zero (every penalty is smooth).
    fn has_nonsmooth_mag(&self) -> bool;

    /// Full objective `H + F` with the unit-modulus constraint enforced to
    /// [`UNIT_MODULUS_TOL`].
    fn objective(&self, m: &RealVector, q: &ComplexVector) -> Result<f64> {
        let dev = q.max_unit_modulus_deviation();
        if dev > UNIT_MODULUS_TOL {
            return Err(Error::ConstraintViolation {
                max_deviation: dev,
                tolerance: UNIT_MODULUS_TOL,
            });
        }
        Ok(self.smooth_value(m, q)? + self.nonsmooth_mag_value(m)?)
    }

    /// Gradient of the p-parameterized objective used by the AM baseline:
    /// `Im{ e^{-ip} .* grad_q(m, e^{ip}) }`.
    fn grad_p(&self, m: &RealVector, p: &RealVector) -> Result<RealVector> {
        let q = complex_exp(p);
        let gq = self.grad_q(m, &q)?;
        // conj(q) .* gq, imaginary part; |q| = 1 so conj(q) = e^{-ip}
        Ok(q.conj_hadamard(&gq).imag_part())
    }
}

/// Single-image magnitude/phase problem `1/2 ||A(m .* q) - b||^2 + R1 + R2`.
pub struct MagPhaseProblem {
    a_op: LinearOperator,
    b: ComplexVector,
    r1: Regularizer,
    r2: Regularizer,
    // cached at construction
    a_norm_sq: f64,
    r1_lipschitz: f64,
    r2_lipschitz: f64,
    ahb: ComplexVector,
}

impl MagPhaseProblem {
    pub fn new(
        a_op: LinearOperator,
        b: ComplexVector,
        r1: Regularizer,
        r2: Regularizer,
    ) -> Result<Self> {
        check_len("MagPhaseProblem data", a_op.codomain_dim(), b.len())?;
        let n = a_op.domain_dim();
        if let Some(d) = r1.domain_dim() {
            check_len("MagPhaseProblem R1", n, d)?;
        }
        if let Some(d) = r2.domain_dim() {
            check_len("MagPhaseProblem R2", n, d)?;
        }
        if !r2.is_smooth() {
            return Err(Error::InvalidConfig(
                "nonsmooth phase regularizers are not supported: the prox of R2 + I_V \
                 has no closed form"
                    .into(),
            ));
        }
        let a_norm_sq = spectral_norm_sq(&a_op, LIPSCHITZ_NORM_TOL, LIPSCHITZ_NORM_MAX_ITER)?;
        let r1_lipschitz = r1.smooth_lipschitz_term()?;
        let r2_lipschitz = r2.smooth_lipschitz_term()?;
        let ahb = a_op.adjoint_apply(&b)?;
        Ok(Self {
            a_op,
            b,
            r1,
            r2,
            a_norm_sq,
            r1_lipschitz,
            r2_lipschitz,
            ahb,
        })
    }

    pub fn n(&self) -> usize {
        self.a_op.domain_dim()
    }

    pub fn a_op(&self) -> &LinearOperator {
        &self.a_op
    }

    pub fn b(&self) -> &ComplexVector {
        &self.b
    }

    pub fn r1(&self) -> &Regularizer {
        &self.r1
    }

    pub fn r2(&self) -> &Regularizer {
        &self.r2
    }

    /// Raw (uninflated) power-iteration estimate of `||A||^2`.
    pub fn a_norm_sq_estimate(&self) -> f64 {
        self.a_norm_sq
    }

    /// `1/2 ||A(m .* q) - b||^2`.
    pub fn data_fidelity(&self, m: &RealVector, q: &ComplexVector) -> Result<f64> {
        check_len("data_fidelity m", self.n(), m.len())?;
        check_len("data_fidelity q", self.n(), q.len())?;
        debug_assert!(
            q.max_unit_modulus_deviation() <= 1e-9,
            "data_fidelity expects |q_n| = 1 (deviation {:.3e})",
            q.max_unit_modulus_deviation()
        );
        let residual = self.a_op.apply(&q.hadamard_real(m))?.sub(&self.b);
        Ok(0.5 * residual.norm_sq())
    }

    /// `A^H A (m .* q) - A^H b`, the shared core of both gradients.
    fn data_gradient_core(&self, m: &RealVector, q: &ComplexVector) -> Result<ComplexVector> {
        let amq = self.a_op.apply(&q.hadamard_real(m))?;
        Ok(self.a_op.adjoint_apply(&amq)?.sub(&self.ahb))
    }
}

impl MagPhaseObjective for MagPhaseProblem {
    fn mag_len(&self) -> usize {
        self.n()
    }

    fn phase_len(&self) -> usize {
        self.n()
    }

    fn smooth_value(&self, m: &RealVector, q: &ComplexVector) -> Result<f64> {
        check_len("smooth_value m", self.n(), m.len())?;
        check_len("smooth_value q", self.n(), q.len())?;
        let residual = self.a_op.apply(&q.hadamard_real(m))?.sub(&self.b);
        Ok(0.5 * residual.norm_sq()
            + self.r1.smooth_value_real(m)?
            + self.r2.smooth_value(q)?)
    }

    fn nonsmooth_mag_value(&self, m: &RealVector) -> Result<f64> {
        self.r1.nonsmooth_value_real(m)
    }

    fn grad_m(&self, m: &RealVector, q: &ComplexVector) -> Result<RealVector> {
        check_len("grad_m m", self.n(), m.len())?;
        check_len("grad_m q", self.n(), q.len())?;
        let core = self.data_gradient_core(m, q)?;
        let mut g = q.conj_hadamard(&core).real_part();
        if let Some(rg) = self.r1.smooth_gradient_real(m)? {
            g = g.axpy(1.0, &rg);
        }
        Ok(g)
    }

    fn grad_q(&self, m: &RealVector, q: &ComplexVector) -> Result<ComplexVector> {
        check_len("grad_q m", self.n(), m.len())?;
        check_len("grad_q q", self.n(), q.len())?;
        let core = self.data_gradient_core(m, q)?;
        let mut g = core.hadamard_real(m);
        if let Some(rg) = self.r2.smooth_gradient(q)? {
            g = g.axpy(1.0, &rg);
        }
        Ok(g)
    }

    fn bound_c(&self) -> f64 {
        SPECTRAL_NORM_INFLATION * self.a_norm_sq + self.r1_lipschitz
    }

    fn bound_c_at(&self, v: &ComplexVector) -> f64 {
        let max_sq = v
            .re
            .iter()
            .zip(&v.im)
            .map(|(r, i)| r * r + i * i)
            .fold(0.0f64, f64::max);
        SPECTRAL_NORM_INFLATION * self.a_norm_sq * max_sq + self.r1_lipschitz
    }

    fn bound_d_scalar(&self, m: &RealVector) -> f64 {
        let max_m = m.max_abs();
        SPECTRAL_NORM_INFLATION * self.a_norm_sq * max_m * max_m + self.r2_lipschitz
    }

    fn bound_d_vector(&self, m: &RealVector) -> RealVector {
        let a = SPECTRAL_NORM_INFLATION * self.a_norm_sq;
        RealVector {
            values: m
                .values
                .iter()
                .map(|&mn| a * mn * mn + self.r2_lipschitz)
                .collect(),
        }
    }

    fn prox_mag(&self, w: &RealVector, c: f64) -> Result<RealVector> {
        self.r1.prox_real(w, c)
    }

    fn has_nonsmooth_mag(&self) -> bool {
        !self.r1.is_smooth()
    }
}

/// Multi-repetition problem: one shared magnitude image and J phase images,
/// `R1(m) + sum_j [ 1/2 ||m .* q_j - b_j||^2 + R2(q_j) ]` (the per-repetition
/// forward operator is the identity). The solver-facing view stacks the J
/// phase vectors into one length-J*N block.
pub struct MultiRepProblem {
    b_list: Vec<ComplexVector>,
    r1: Regularizer,
    r2: Regularizer,
    n: usize,
    r1_lipschitz: f64,
    r2_lipschitz: f64,
}

impl MultiRepProblem {
    pub fn new(b_list: Vec<ComplexVector>, r1: Regularizer, r2: Regularizer) -> Result<Self> {
        let first = b_list
            .first()
            .ok_or_else(|| Error::InvalidConfig("multi-rep problem needs >= 1 repetition".into()))?;
        let n = first.len();
        for b in &b_list {
            check_len("MultiRepProblem data", n, b.len())?;
        }
        if let Some(d) = r1.domain_dim() {
            check_len("MultiRepProblem R1", n, d)?;
        }
        if let Some(d) = r2.domain_dim() {
            check_len("MultiRepProblem R2", n, d)?;
        }
        if !r2.is_smooth() {
            return Err(Error::InvalidConfig(
                "nonsmooth phase regularizers are not supported".into(),
            ));
        }
        let r1_lipschitz = r1.smooth_lipschitz_term()?;
        let r2_lipschitz = r2.smooth_lipschitz_term()?;
        Ok(Self {
            b_list,
            r1,
            r2,
            n,
            r1_lipschitz,
            r2_lipschitz,
        })
    }

    pub fn reps(&self) -> usize {
        self.b_list.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b_list(&self) -> &[ComplexVector] {
        &self.b_list
    }

    fn slice_rep(q: &ComplexVector, j: usize, n: usize) -> ComplexVector {
        ComplexVector {
            re: q.re[j * n..(j + 1) * n].to_vec(),
            im: q.im[j * n..(j + 1) * n].to_vec(),
        }
    }

    /// Splits a stacked phase block into per-repetition vectors.
    pub fn split_phases(&self, q: &ComplexVector) -> Result<Vec<ComplexVector>> {
        check_len("split_phases", self.n * self.reps(), q.len())?;
        Ok((0..self.reps())
            .map(|j| Self::slice_rep(q, j, self.n))
            .collect())
    }

    /// Stacks per-repetition phase vectors into the solver-facing block.
    pub fn stack_phases(&self, q_list: &[ComplexVector]) -> Result<ComplexVector> {
        check_len("stack_phases", self.reps(), q_list.len())?;
        let mut out = ComplexVector::zeros(self.n * self.reps());
        for (j, qj) in q_list.iter().enumerate() {
            check_len("stack_phases rep", self.n, qj.len())?;
            out.re[j * self.n..(j + 1) * self.n].copy_from_slice(&qj.re);
            out.im[j * self.n..(j + 1) * self.n].copy_from_slice(&qj.im);
        }
        Ok(out)
    }

    /// `R1(m) + sum_j [ 1/2 ||m .* q_j - b_j||^2 + R2(q_j) ]`.
    pub fn multirep_objective(&self, m: &RealVector, q_list: &[ComplexVector]) -> Result<f64> {
        let stacked = self.stack_phases(q_list)?;
        self.objective(m, &stacked)
    }

    /// `sum_j Re{ conj(q_j) .* (m .* q_j - b_j) } + grad R1(m)`.
    pub fn multirep_grad_m(&self, m: &RealVector, q_list: &[ComplexVector]) -> Result<RealVector> {
        let stacked = self.stack_phases(q_list)?;
        self.grad_m(m, &stacked)
    }

    /// Per-repetition phase gradient `m .* (m .* q_j - b_j) + grad R2(q_j)`.
    pub fn multirep_grad_qj(
        &self,
        m: &RealVector,
        q_list: &[ComplexVector],
        j: usize,
    ) -> Result<ComplexVector> {
        if j >= self.reps() {
            return Err(Error::InvalidInput(format!(
                "repetition index {j} out of range (J = {})",
                self.reps()
            )));
        }
        let stacked = self.stack_phases(q_list)?;
        let g = self.grad_q(m, &stacked)?;
        Ok(Self::slice_rep(&g, j, self.n))
    }
}

impl MagPhaseObjective for MultiRepProblem {
    fn mag_len(&self) -> usize {
        self.n
    }

    fn phase_len(&self) -> usize {
        self.n * self.reps()
    }

    fn smooth_value(&self, m: &RealVector, q: &ComplexVector) -> Result<f64> {
        check_len("smooth_value m", self.n, m.len())?;
        check_len("smooth_value q", self.phase_len(), q.len())?;
        let mut total = self.r1.smooth_value_real(m)?;
        for (j, b) in self.b_list.iter().enumerate() {
            let qj = Self::slice_rep(q, j, self.n);
            let residual = qj.hadamard_real(m).sub(b);
            total += 0.5 * residual.norm_sq() + self.r2.smooth_value(&qj)?;
        }
        Ok(total)
    }

    fn nonsmooth_mag_value(&self, m: &RealVector) -> Result<f64> {
        self.r1.nonsmooth_value_real(m)
    }

    fn grad_m(&self, m: &RealVector, q: &ComplexVector) -> Result<RealVector> {
        check_len("grad_m m", self.n, m.len())?;
        check_len("grad_m q", self.phase_len(), q.len())?;
        let mut g = RealVector::zeros(self.n);
        for (j, b) in self.b_list.iter().enumerate() {
            let qj = Self::slice_rep(q, j, self.n);
            let residual = qj.hadamard_real(m).sub(b);
            let contrib = qj.conj_hadamard(&residual).real_part();
            g = g.axpy(1.0, &contrib);
        }
        if let Some(rg) = self.r1.smooth_gradient_real(m)? {
            g = g.axpy(1.0, &rg);
        }
        Ok(g)
    }

    fn grad_q(&self, m: &RealVector, q: &ComplexVector) -> Result<ComplexVector> {
        check_len("grad_q m", self.n, m.len())?;
        check_len("grad_q q", self.phase_len(), q.len())?;
        let mut g = ComplexVector::zeros(self.phase_len());
        for (j, b) in self.b_list.iter().enumerate() {
            let qj = Self::slice_rep(q, j, self.n);
            let mut gj = qj.hadamard_real(m).sub(b).hadamard_real(m);
            if let Some(rg) = self.r2.smooth_gradient(&qj)? {
                gj = gj.axpy(1.0, &rg);
            }
            g.re[j * self.n..(j + 1) * self.n].copy_from_slice(&gj.re);
            g.im[j * self.n..(j + 1) * self.n].copy_from_slice(&gj.im);
        }
        Ok(g)
    }

    fn bound_c(&self) -> f64 {
        // per-repetition identity operators: the data Lipschitz constant is J
        SPECTRAL_NORM_INFLATION * self.reps() as f64 + self.r1_lipschitz
    }

    fn bound_c_at(&self, v: &ComplexVector) -> f64 {
        // data Hessian in m is diagonal with entries sum_j |v_{j,n}|^2
        let mut max_sq: f64 = 0.0;
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.reps() {
                let idx = j * self.n + i;
                acc += v.re[idx] * v.re[idx] + v.im[idx] * v.im[idx];
            }
            max_sq = max_sq.max(acc);
        }
        SPECTRAL_NORM_INFLATION * max_sq + self.r1_lipschitz
    }

    fn bound_d_scalar(&self, m: &RealVector) -> f64 {
        let max_m = m.max_abs();
        SPECTRAL_NORM_INFLATION * max_m * max_m + self.r2_lipschitz
    }

    fn bound_d_vector(&self, m: &RealVector) -> RealVector {
        let mut values = Vec::with_capacity(self.phase_len());
        for _ in 0..self.reps() {
            values.extend(
                m.values
                    .iter()
                    .map(|&mn| SPECTRAL_NORM_INFLATION * mn * mn + self.r2_lipschitz),
            );
        }
        RealVector { values }
    }

    fn prox_mag(&self, w: &RealVector, c: f64) -> Result<RealVector> {
        self.r1.prox_real(w, c)
    }

    fn has_nonsmooth_mag(&self) -> bool {
        !self.r1.is_smooth()
    }
}
