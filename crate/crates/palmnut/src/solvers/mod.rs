//! The solver family: PALM, PALM with uncoupled step sizes, PALMNUT, and an
//! alternating-minimization baseline (in [`am`]).
//!
//! All solvers share the two-block structure: a magnitude step that descends
//! a linearized majorant with scalar weight `c` followed by the prox of the
//! nonsmooth magnitude term, then a phase step with scalar or coordinatewise
//! weight(s) `d` followed by the unit-modulus projection. PALM and PALM-UT
//! descend true majorants, so their objective sequences are monotone.
//! PALMNUT evaluates gradients at Nesterov extrapolation points
//! `u_k = x_k + (k-1)/(k+2) (x_k - x_{k-1})`, which trades the monotonicity
//! guarantee for speed.

mod am;

pub use am::run_am_ncg;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::problem::MagPhaseObjective;
use crate::regularizers::prox_unit_modulus;
use crate::vector::{ComplexVector, RealVector};

/// Stopping rules and logging knobs shared by every solver.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Outer-iteration budget (0 returns the initial state untouched).
    pub max_outer_iter: usize,
    /// Stop when |obj_k - obj_{k-1}| <= rel_cost_tol * |obj_{k-1}| (0 = run
    /// the full budget, keeping traces comparable across solvers).
    pub rel_cost_tol: f64,
    /// Inner iterations per block per outer iteration (AM only).
    pub inner_iter: usize,
    /// Record NRMSE rows when an evaluator is supplied.
    pub record_nrmse: bool,
    /// Optional wall-clock budget in seconds.
    pub wall_clock_limit_s: Option<f64>,
    /// Phase-block updates per outer iteration (default 1).
    pub phase_steps_per_outer: usize,
    /// Measure real per-iteration compute time. Off by default so that
    /// repeated runs produce bit-identical traces; the seconds column is 0
    /// when disabled.
    pub timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iter: 1000,
            rel_cost_tol: 0.0,
            inner_iter: 10,
            record_nrmse: true,
            wall_clock_limit_s: None,
            phase_steps_per_outer: 1,
            timing: false,
        }
    }
}

/// Iterate pair plus momentum auxiliaries.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub m_hat: RealVector,
    pub q_hat: ComplexVector,
    /// Momentum auxiliary for the magnitude block (equals `m_hat` when the
    /// solver carries no momentum).
    pub u: RealVector,
    /// Momentum auxiliary for the phase block.
    pub v: ComplexVector,
    /// Outer iterations completed.
    pub k: usize,
}

impl SolverState {
    pub fn new(m: RealVector, q: ComplexVector) -> Self {
        Self {
            u: m.clone(),
            v: q.clone(),
            m_hat: m,
            q_hat: q,
            k: 0,
        }
    }

    /// Reconstructed complex image `m .* q` (truncated to the first
    /// repetition for stacked multi-repetition phases).
    pub fn image(&self) -> ComplexVector {
        let n = self.m_hat.len();
        let q1 = ComplexVector {
            re: self.q_hat.re[..n].to_vec(),
            im: self.q_hat.im[..n].to_vec(),
        };
        q1.hadamard_real(&self.m_hat)
    }
}

/// One per-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub seconds: f64,
    pub objective: f64,
    pub nrmse: Option<f64>,
}

/// Per-iteration log of cost, optional NRMSE, and elapsed compute time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    fn push(&mut self, row: TraceRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.iter > last.iter, "trace iterations must increase");
            debug_assert!(
                row.seconds >= last.seconds,
                "trace seconds must be nondecreasing"
            );
        }
        self.rows.push(row);
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.rows.last().map(|r| r.objective)
    }

    pub fn final_nrmse(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.nrmse)
    }
}

/// Optional NRMSE evaluator called on `(m_hat, q_hat)` once per iteration.
pub type NrmseFn<'a> = &'a dyn Fn(&RealVector, &ComplexVector) -> f64;

/// Nesterov momentum coefficient `(k-1)/(k+2)` for iteration `k >= 1`.
pub fn momentum_coefficient(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidInput(
            "momentum coefficient defined for k >= 1".into(),
        ));
    }
    Ok((k - 1) as f64 / (k + 2) as f64)
}

/// Phase-block step weights: one global scalar (PALM) or one weight per
/// coordinate (uncoupled step sizes).
enum PhaseSteps {
    Global(f64),
    Coordinatewise(RealVector),
}

/// `q - g ./ d` elementwise; coordinates with zero weight (zero curvature
/// bound, hence zero gradient) are left unchanged.
fn phase_gradient_step(q: &ComplexVector, g: &ComplexVector, d: &PhaseSteps) -> ComplexVector {
    let n = q.len();
    let mut out = ComplexVector::zeros(n);
    match d {
        PhaseSteps::Global(d) => {
            for i in 0..n {
                if *d == 0.0 {
                    out.re[i] = q.re[i];
                    out.im[i] = q.im[i];
                } else {
                    out.re[i] = q.re[i] - g.re[i] / d;
                    out.im[i] = q.im[i] - g.im[i] / d;
                }
            }
        }
        PhaseSteps::Coordinatewise(d) => {
            for i in 0..n {
                let dn = d.values[i];
                if dn == 0.0 {
                    out.re[i] = q.re[i];
                    out.im[i] = q.im[i];
                } else {
                    out.re[i] = q.re[i] - g.re[i] / dn;
                    out.im[i] = q.im[i] - g.im[i] / dn;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepMode {
    GlobalScalar,
    Coordinatewise,
}

struct RunContext<'a, P: MagPhaseObjective + ?Sized> {
    prob: &'a P,
    cfg: &'a SolverConfig,
    nrmse: Option<NrmseFn<'a>>,
    trace: SolverTrace,
    start: Instant,
    compute_seconds: f64,
    prev_objective: f64,
}

impl<'a, P: MagPhaseObjective + ?Sized> RunContext<'a, P> {
    fn new(
        prob: &'a P,
        init: &SolverState,
        cfg: &'a SolverConfig,
        nrmse: Option<NrmseFn<'a>>,
    ) -> Result<Self> {
        if init.m_hat.len() != prob.mag_len() || init.q_hat.len() != prob.phase_len() {
            return Err(Error::InvalidInput(
                "initial state does not match problem dimensions".into(),
            ));
        }
        let mut ctx = Self {
            prob,
            cfg,
            nrmse,
            trace: SolverTrace::default(),
            start: Instant::now(),
            compute_seconds: 0.0,
            prev_objective: 0.0,
        };
        let obj0 = ctx.log(0, &init.m_hat, &init.q_hat)?;
        ctx.prev_objective = obj0;
        Ok(ctx)
    }

    /// Evaluates, validates, and records the objective at iteration `k`.
    /// Runs off the compute clock.
    fn log(&mut self, k: usize, m: &RealVector, q: &ComplexVector) -> Result<f64> {
        let objective = self.prob.objective(m, q)?;
        if !objective.is_finite() {
            return Err(Error::NonFinite {
                iteration: k,
                context: format!("objective = {objective}"),
            });
        }
        let nrmse = if self.cfg.record_nrmse {
            self.nrmse.map(|f| f(m, q))
        } else {
            None
        };
        self.trace.push(TraceRow {
            iter: k,
            seconds: if self.cfg.timing {
                self.compute_seconds
            } else {
                0.0
            },
            objective,
            nrmse,
        });
        Ok(objective)
    }

    /// True when a stopping rule other than the iteration budget fires.
    fn should_stop(&mut self, objective: f64) -> bool {
        let rel_hit = self.cfg.rel_cost_tol > 0.0
            && (self.prev_objective - objective).abs()
                <= self.cfg.rel_cost_tol * self.prev_objective.abs();
        self.prev_objective = objective;
        let wall_hit = self
            .cfg
            .wall_clock_limit_s
            .is_some_and(|limit| self.start.elapsed().as_secs_f64() >= limit);
        rel_hit || wall_hit
    }
}

fn run_plain<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    mode: StepMode,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    let mut ctx = RunContext::new(prob, init, cfg, nrmse)?;
    let c = prob.bound_c();
    let mut m = init.m_hat.clone();
    let mut q = init.q_hat.clone();
    let mut iterations = 0;

    for k in 1..=cfg.max_outer_iter {
        let clock = Instant::now();
        // magnitude block: w_k = m - (1/c) grad_m H, then prox_F
        let gm = prob.grad_m(&m, &q)?;
        let w = m.axpy(-1.0 / c, &gm);
        let m_next = prob.prox_mag(&w, c)?;
        // phase block: z_k = q - d^{-1} grad_q H, then radial projection
        let d = match mode {
            StepMode::GlobalScalar => PhaseSteps::Global(prob.bound_d_scalar(&m_next)),
            StepMode::Coordinatewise => PhaseSteps::Coordinatewise(prob.bound_d_vector(&m_next)),
        };
        for _ in 0..cfg.phase_steps_per_outer.max(1) {
            let gq = prob.grad_q(&m_next, &q)?;
            let z = phase_gradient_step(&q, &gq, &d);
            q = prox_unit_modulus(&z);
        }
        m = m_next;
        ctx.compute_seconds += clock.elapsed().as_secs_f64();

        debug_assert!(
            q.max_unit_modulus_deviation() <= 1e-9,
            "phase iterate left the unit-modulus set"
        );
        iterations = k;
        let objective = ctx.log(k, &m, &q)?;
        if ctx.should_stop(objective) {
            break;
        }
    }

    let state = SolverState {
        u: m.clone(),
        v: q.clone(),
        m_hat: m,
        q_hat: q,
        k: iterations,
    };
    Ok((state, ctx.trace))
}

fn run_momentum<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    mode: StepMode,
    beta: &dyn Fn(usize) -> f64,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    let mut ctx = RunContext::new(prob, init, cfg, nrmse)?;
    let c_feasible = prob.bound_c();
    let mut m = init.m_hat.clone();
    let mut q = init.q_hat.clone();
    let mut u = m.clone();
    let mut v = q.clone();
    // true while v sits exactly on the unit-modulus set (zero momentum so
    // far), in which case the cheaper constant bound applies bit-exactly
    let mut v_feasible = true;
    let mut iterations = 0;

    for k in 1..=cfg.max_outer_iter {
        let clock = Instant::now();
        let beta_k = beta(k);
        // magnitude block: prox-gradient step from the extrapolated point
        // (u, v); the c bound must hold at v, whose entries exceed unit
        // modulus once momentum kicks in
        let c = if v_feasible {
            c_feasible
        } else {
            prob.bound_c_at(&v)
        };
        let gm = prob.grad_m(&u, &v)?;
        let w = u.axpy(-1.0 / c, &gm);
        let m_next = prob.prox_mag(&w, c)?;
        u = if beta_k == 0.0 {
            m_next.clone()
        } else {
            m_next.axpy(beta_k, &m_next.sub(&m))
        };
        // phase block: bounds evaluated at the extrapolated magnitude u_k,
        // step taken from the extrapolated phase point
        let d = match mode {
            StepMode::GlobalScalar => PhaseSteps::Global(prob.bound_d_scalar(&u)),
            StepMode::Coordinatewise => PhaseSteps::Coordinatewise(prob.bound_d_vector(&u)),
        };
        let q_prev = q.clone();
        for step in 0..cfg.phase_steps_per_outer.max(1) {
            let base = if step == 0 { v.clone() } else { q.clone() };
            let gq = prob.grad_q(&u, &base)?;
            let z = phase_gradient_step(&base, &gq, &d);
            q = prox_unit_modulus(&z);
        }
        v = if beta_k == 0.0 {
            q.clone()
        } else {
            q.axpy(beta_k, &q.sub(&q_prev))
        };
        v_feasible = beta_k == 0.0;
        m = m_next;
        ctx.compute_seconds += clock.elapsed().as_secs_f64();

        debug_assert!(
            q.max_unit_modulus_deviation() <= 1e-9,
            "phase iterate left the unit-modulus set"
        );
        iterations = k;
        let objective = ctx.log(k, &m, &q)?;
        if ctx.should_stop(objective) {
            break;
        }
    }

    let state = SolverState {
        m_hat: m,
        q_hat: q,
        u,
        v,
        k: iterations,
    };
    Ok((state, ctx.trace))
}

/// PALM: scalar step sizes `1/c` and `1/d` from the global Lipschitz bounds.
/// The objective sequence is monotone nonincreasing.
pub fn run_palm<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    run_plain(prob, init, cfg, StepMode::GlobalScalar, nrmse)
}

/// PALM with uncoupled step sizes: the phase block steps `1/d_n` per
/// coordinate with `d_n = ||A||^2 m_n^2 + r2 term`, so coordinates with small
/// magnitude take much larger steps. Reduces to PALM when the d-vector is
/// constant. Monotone, like PALM.
pub fn run_palm_ut<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    run_plain(prob, init, cfg, StepMode::Coordinatewise, nrmse)
}

/// PALM plus Nesterov momentum but with scalar step sizes (the ablation arm
/// between PALM and PALMNUT). Not guaranteed monotone.
pub fn run_palm_nesterov<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    run_momentum(
        prob,
        init,
        cfg,
        StepMode::GlobalScalar,
        &|k| (k - 1) as f64 / (k + 2) as f64,
        nrmse,
    )
}

/// PALMNUT: uncoupled step sizes plus Nesterov momentum with the classical
/// coefficients `(k-1)/(k+2)`. Not guaranteed monotone.
pub fn run_palmnut<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    run_momentum(
        prob,
        init,
        cfg,
        StepMode::Coordinatewise,
        &|k| (k - 1) as f64 / (k + 2) as f64,
        nrmse,
    )
}

/// PALMNUT with a caller-supplied momentum schedule `beta(k)`; `beta = 0`
/// recovers PALM with uncoupled step sizes exactly.
pub fn run_palmnut_with_momentum<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    beta: &dyn Fn(usize) -> f64,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    run_momentum(prob, init, cfg, StepMode::Coordinatewise, beta, nrmse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{DiffAxis, LinearOperator};
    use crate::problem::MagPhaseProblem;
    use crate::regularizers::{HuberStackReg, Regularizer, TikhonovReg};
    use crate::rng::{NormalStream, SplitMix64};

    fn random_cvec(n: usize, seed: u64) -> ComplexVector {
        let mut rng = SplitMix64::new(seed);
        ComplexVector {
            re: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
            im: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
        }
    }

    /// Small noisy denoising instance (identity A, Huber magnitude, Tikhonov
    /// phase) shared by the solver tests.
    fn denoise_instance(w: usize, h: usize, sigma: f64, seed: u64) -> (MagPhaseProblem, SolverState) {
        let n = w * h;
        let truth = random_cvec(n, seed);
        let mut noise = NormalStream::new(seed ^ 0xABCD);
        let b = ComplexVector {
            re: truth.re.iter().map(|v| v + sigma * noise.next()).collect(),
            im: truth.im.iter().map(|v| v + sigma * noise.next()).collect(),
        };
        let r1 = Regularizer::HuberStack(
            HuberStackReg::new(
                0.05,
                0.05,
                vec![LinearOperator::finite_difference_2d(w, h, DiffAxis::Both).unwrap()],
            )
            .unwrap(),
        );
        let r2 = Regularizer::Tikhonov(
            TikhonovReg::new(
                0.05,
                LinearOperator::finite_difference_2d(w, h, DiffAxis::Both).unwrap(),
            )
            .unwrap(),
        );
        let prob =
            MagPhaseProblem::new(LinearOperator::identity(n), b.clone(), r1, r2).unwrap();
        let init = SolverState::new(b.magnitudes(), crate::regularizers::prox_unit_modulus(&b));
        (prob, init)
    }

    fn cfg(iters: usize) -> SolverConfig {
        SolverConfig {
            max_outer_iter: iters,
            ..SolverConfig::default()
        }
    }

    fn assert_states_bitwise_equal(a: &SolverState, b: &SolverState) {
        assert_eq!(a.m_hat.values.len(), b.m_hat.values.len());
        for i in 0..a.m_hat.len() {
            assert_eq!(
                a.m_hat.values[i].to_bits(),
                b.m_hat.values[i].to_bits(),
                "m differs at {i}"
            );
        }
        for i in 0..a.q_hat.len() {
            assert_eq!(a.q_hat.re[i].to_bits(), b.q_hat.re[i].to_bits(), "q.re at {i}");
            assert_eq!(a.q_hat.im[i].to_bits(), b.q_hat.im[i].to_bits(), "q.im at {i}");
        }
    }

    #[test]
    fn momentum_coefficients() {
        assert!(momentum_coefficient(0).is_err());
        assert_eq!(momentum_coefficient(1).unwrap(), 0.0);
        assert_eq!(momentum_coefficient(2).unwrap(), 0.25);
        assert_eq!(momentum_coefficient(3).unwrap(), 0.4);
        assert_eq!(momentum_coefficient(4).unwrap(), 0.5);
        let mut prev = -1.0;
        for k in 1..=1000 {
            let b = momentum_coefficient(k).unwrap();
            assert!(b > prev && b < 1.0, "k = {k}");
            prev = b;
        }
    }

    #[test]
    fn zero_iterations_returns_init_unchanged() {
        let (prob, init) = denoise_instance(4, 4, 0.1, 1);
        let (state, trace) = run_palm(&prob, &init, &cfg(0), None).unwrap();
        assert_states_bitwise_equal(&state, &init);
        assert_eq!(state.k, 0);
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].iter, 0);
    }

    #[test]
    fn palm_is_stationary_at_noiseless_unregularized_fixed_point() {
        // identity A, no regularizers, init at the exact solution
        let n = 16;
        let truth = random_cvec(n, 9);
        let prob = MagPhaseProblem::new(
            LinearOperator::identity(n),
            truth.clone(),
            Regularizer::None,
            Regularizer::None,
        )
        .unwrap();
        let init = SolverState::new(
            truth.magnitudes(),
            crate::regularizers::prox_unit_modulus(&truth),
        );
        let (_, trace) = run_palm(&prob, &init, &cfg(10), None).unwrap();
        for pair in trace.rows.windows(2) {
            assert!(
                (pair[1].objective - pair[0].objective).abs() < 1e-12,
                "objective moved: {} -> {}",
                pair[0].objective,
                pair[1].objective
            );
        }
    }

    #[test]
    fn palm_descends_monotonically_on_noisy_instance() {
        let (prob, init) = denoise_instance(8, 8, 0.2, 2);
        let (_, trace) = run_palm(&prob, &init, &cfg(200), None).unwrap();
        assert_eq!(trace.rows.len(), 201);
        for pair in trace.rows.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective + 1e-10 * pair[0].objective.abs(),
                "ascent at iter {}: {} -> {}",
                pair[1].iter,
                pair[0].objective,
                pair[1].objective
            );
        }
    }

    #[test]
    fn palm_ut_descends_and_takes_larger_steps_where_magnitude_is_small() {
        let (prob, init) = denoise_instance(8, 8, 0.2, 3);
        let (_, trace) = run_palm_ut(&prob, &init, &cfg(200), None).unwrap();
        for pair in trace.rows.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective + 1e-10 * pair[0].objective.abs(),
                "ascent at iter {}",
                pair[1].iter
            );
        }
        // dominance: every coordinatewise weight is <= the scalar weight,
        // so every per-coordinate step 1/d_n >= 1/d
        let m = &init.m_hat;
        let ds = prob.bound_d_scalar(m);
        for &dn in &prob.bound_d_vector(m).values {
            assert!(dn <= ds * (1.0 + 1e-15));
        }
    }

    #[test]
    fn palm_ut_with_constant_d_vector_matches_palm_bitwise() {
        // A = 0 makes the coordinatewise d-vector constant (= the r2 term),
        // bit-equal to the scalar bound, so the two solvers — separate code
        // paths — must produce identical iterates.
        let n = 16;
        let r1 = Regularizer::HuberStack(
            HuberStackReg::new(
                0.3,
                0.2,
                vec![LinearOperator::finite_difference_2d(4, 4, DiffAxis::Both).unwrap()],
            )
            .unwrap(),
        );
        let r2 = Regularizer::Tikhonov(
            TikhonovReg::new(
                0.4,
                LinearOperator::finite_difference_2d(4, 4, DiffAxis::Both).unwrap(),
            )
            .unwrap(),
        );
        let prob =
            MagPhaseProblem::new(LinearOperator::zero(n), ComplexVector::zeros(n), r1, r2)
                .unwrap();
        let b = random_cvec(n, 4);
        let init = SolverState::new(b.magnitudes(), crate::regularizers::prox_unit_modulus(&b));
        // the construction really does make the two bounds bit-equal
        let dv = prob.bound_d_vector(&init.m_hat);
        let ds = prob.bound_d_scalar(&init.m_hat);
        assert!(dv.values.iter().all(|&v| v.to_bits() == ds.to_bits()));

        let (palm, _) = run_palm(&prob, &init, &cfg(50), None).unwrap();
        let (palm_ut, _) = run_palm_ut(&prob, &init, &cfg(50), None).unwrap();
        assert_states_bitwise_equal(&palm, &palm_ut);
    }

    #[test]
    fn palmnut_with_zero_momentum_matches_palm_ut_bitwise() {
        let (prob, init) = denoise_instance(4, 4, 0.15, 5);
        let (ut, _) = run_palm_ut(&prob, &init, &cfg(50), None).unwrap();
        let (nut0, _) =
            run_palmnut_with_momentum(&prob, &init, &cfg(50), &|_| 0.0, None).unwrap();
        assert_states_bitwise_equal(&ut, &nut0);
    }

    #[test]
    fn palmnut_first_iteration_matches_palm_ut_bitwise() {
        // (k-1)/(k+2) = 0 at k = 1
        let (prob, init) = denoise_instance(4, 4, 0.15, 6);
        let (ut, _) = run_palm_ut(&prob, &init, &cfg(1), None).unwrap();
        let (nut, _) = run_palmnut(&prob, &init, &cfg(1), None).unwrap();
        assert_states_bitwise_equal(&ut, &nut);
    }

    #[test]
    fn palmnut_reaches_palm_target_in_fewer_iterations() {
        let (prob, init) = denoise_instance(8, 8, 0.2, 7);
        let (_, palm_trace) = run_palm(&prob, &init, &cfg(500), None).unwrap();
        let palm_final = palm_trace.final_objective().unwrap();
        let target = palm_final + 0.01 * palm_final.abs();
        let palm_hits = palm_trace
            .rows
            .iter()
            .position(|r| r.objective <= target)
            .unwrap();
        let (_, nut_trace) = run_palmnut(&prob, &init, &cfg(500), None).unwrap();
        let nut_hits = nut_trace
            .rows
            .iter()
            .position(|r| r.objective <= target)
            .expect("PALMNUT never reached PALM's 500-iteration objective");
        assert!(
            nut_hits < palm_hits,
            "PALMNUT took {nut_hits} iterations vs PALM's {palm_hits}"
        );
    }

    #[test]
    fn half_step_descent_of_both_block_majorants() {
        // Reconstruct PALM iterations through the public API and check that
        // each prox step decreases its block majorant.
        let (prob, init) = denoise_instance(4, 4, 0.2, 8);
        let c = prob.bound_c();
        let mut m = init.m_hat.clone();
        let mut q = init.q_hat.clone();
        for _ in 0..10 {
            let gm = prob.grad_m(&m, &q).unwrap();
            let w = m.axpy(-1.0 / c, &gm);
            let m_next = prob.prox_mag(&w, c).unwrap();
            // majorant S(x) = H(m,q) + <x-m, gm> + c/2 ||x-m||^2 + F(x)
            let major = |x: &RealVector| {
                let delta = x.sub(&m);
                prob.smooth_value(&m, &q).unwrap()
                    + delta.dot(&gm)
                    + 0.5 * c * delta.norm_sq()
                    + prob.nonsmooth_mag_value(x).unwrap()
            };
            assert!(
                major(&m_next) <= major(&m) + 1e-12 * major(&m).abs(),
                "m-block majorant increased"
            );

            let d = prob.bound_d_vector(&m_next);
            let gq = prob.grad_q(&m_next, &q).unwrap();
            let z = phase_gradient_step(&q, &gq, &PhaseSteps::Coordinatewise(d.clone()));
            let q_next = prox_unit_modulus(&z);
            let major_q = |y: &ComplexVector| {
                let delta = y.sub(&q);
                let mut quad = 0.0;
                for i in 0..delta.len() {
                    quad += d.values[i]
                        * (delta.re[i] * delta.re[i] + delta.im[i] * delta.im[i]);
                }
                prob.smooth_value(&m_next, &q).unwrap() + delta.inner_re(&gq) + 0.5 * quad
            };
            assert!(
                major_q(&q_next) <= major_q(&q) + 1e-12 * major_q(&q).abs(),
                "q-block majorant increased"
            );
            m = m_next;
            q = q_next;
        }
    }

    #[test]
    fn identical_runs_produce_identical_traces() {
        let (prob, init) = denoise_instance(4, 4, 0.15, 10);
        let (_, t1) = run_palmnut(&prob, &init, &cfg(40), None).unwrap();
        let (_, t2) = run_palmnut(&prob, &init, &cfg(40), None).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn phase_steps_per_outer_preserves_descent() {
        let (prob, init) = denoise_instance(4, 4, 0.2, 11);
        let mut config = cfg(100);
        config.phase_steps_per_outer = 3;
        let (_, trace) = run_palm(&prob, &init, &config, None).unwrap();
        for pair in trace.rows.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-10 * pair[0].objective.abs());
        }
    }

    #[test]
    fn unit_modulus_feasibility_maintained() {
        let (prob, init) = denoise_instance(4, 4, 0.3, 12);
        let (state, _) = run_palmnut(&prob, &init, &cfg(100), None).unwrap();
        assert!(state.q_hat.max_unit_modulus_deviation() < 1e-9);
    }

    #[test]
    fn rel_cost_tol_stops_early() {
        let (prob, init) = denoise_instance(4, 4, 0.1, 13);
        let mut config = cfg(5000);
        config.rel_cost_tol = 1e-8;
        let (state, trace) = run_palm(&prob, &init, &config, None).unwrap();
        assert!(state.k < 5000, "never hit the relative tolerance");
        assert_eq!(trace.rows.len(), state.k + 1);
    }
}
