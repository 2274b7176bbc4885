//! Alternating minimization baseline.
//!
//! Each outer iteration inexactly minimizes the magnitude block and then the
//! phase block. The magnitude subproblem is a regularized least-squares
//! problem: Polak-Ribiere NCG when every magnitude penalty is smooth, a
//! monotone FISTA when the magnitude carries the nonsmooth l1 penalty. The
//! phase subproblem is nonconvex and handled by Polak-Ribiere NCG on the raw
//! phase vector `p` (with `q = e^{ip}` maintained alongside). Line searches
//! only ever accept decreasing steps, so the outer objective is monotone.

use std::time::Instant;

use super::{NrmseFn, RunContext, SolverConfig, SolverState, SolverTrace};
use crate::error::Result;
use crate::problem::MagPhaseObjective;
use crate::vector::{complex_exp, ComplexVector, RealVector};

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Polak-Ribiere (PR+) nonlinear conjugate gradients with backtracking
/// Armijo line search. The initial trial step is `alpha0` (1/bound scaling);
/// a failed line search accepts the zero step and stops early.
fn ncg_minimize(
    value: impl Fn(&RealVector) -> Result<f64>,
    grad: impl Fn(&RealVector) -> Result<RealVector>,
    x0: &RealVector,
    steps: usize,
    alpha0: f64,
) -> Result<RealVector> {
    let mut x = x0.clone();
    if steps == 0 {
        return Ok(x);
    }
    let mut f = value(&x)?;
    let mut g = grad(&x)?;
    let mut dir = g.scale(-1.0);
    for _ in 0..steps {
        let g_norm_sq = g.norm_sq();
        if g_norm_sq == 0.0 {
            break;
        }
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            // restart on a non-descent direction
            dir = g.scale(-1.0);
            slope = -g_norm_sq;
        }
        let mut alpha = alpha0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = x.axpy(alpha, &dir);
            let fc = value(&candidate)?;
            if fc <= f + ARMIJO_C1 * alpha * slope {
                accepted = Some((candidate, fc));
                break;
            }
            alpha *= BACKTRACK_FACTOR;
        }
        let Some((x_next, f_next)) = accepted else {
            // subproblem is stationary to line-search resolution
            break;
        };
        let g_next = grad(&x_next)?;
        // PR+ restart: beta = max{<g+, g+ - g> / <g, g>, 0}
        let beta = ((g_next.norm_sq() - g_next.dot(&g)) / g_norm_sq).max(0.0);
        dir = g_next.scale(-1.0).axpy(beta, &dir);
        x = x_next;
        f = f_next;
        g = g_next;
    }
    Ok(x)
}

/// Monotone FISTA on `H(., q) + F(.)` for the l1-regularized magnitude
/// subproblem: the momentum candidate is only accepted when it improves the
/// objective, so the subproblem value never increases.
fn mfista_minimize<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    q: &ComplexVector,
    x0: &RealVector,
    steps: usize,
    lipschitz: f64,
) -> Result<RealVector> {
    if lipschitz <= 0.0 || steps == 0 {
        return Ok(x0.clone());
    }
    let objective =
        |x: &RealVector| -> Result<f64> { Ok(prob.smooth_value(x, q)? + prob.nonsmooth_mag_value(x)?) };
    let mut x = x0.clone();
    let mut fx = objective(&x)?;
    let mut y = x0.clone();
    let mut t: f64 = 1.0;
    for _ in 0..steps {
        let gy = prob.grad_m(&y, q)?;
        let z = prob.prox_mag(&y.axpy(-1.0 / lipschitz, &gy), lipschitz)?;
        let fz = objective(&z)?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let (x_next, fx_next) = if fz <= fx {
            (z.clone(), fz)
        } else {
            (x.clone(), fx)
        };
        y = x_next
            .axpy(t / t_next, &z.sub(&x_next))
            .axpy((t - 1.0) / t_next, &x_next.sub(&x));
        x = x_next;
        fx = fx_next;
        t = t_next;
    }
    Ok(x)
}

/// Alternating minimization with `cfg.inner_iter` inner steps per block per
/// outer iteration. The phase is parameterized by `p` with `q = e^{ip}`
/// maintained internally, so feasibility is automatic.
pub fn run_am_ncg<P: MagPhaseObjective + ?Sized>(
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    nrmse: Option<NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    let mut ctx = RunContext::new(prob, init, cfg, nrmse)?;
    let c = prob.bound_c();
    let mag_alpha0 = if c > 0.0 { 1.0 / c } else { 1.0 };
    let mut m = init.m_hat.clone();
    let mut q = init.q_hat.clone();
    let mut p = init.q_hat.angles();
    let mut iterations = 0;

    for k in 1..=cfg.max_outer_iter {
        let clock = Instant::now();
        if cfg.inner_iter > 0 {
            // magnitude subproblem at fixed q
            if prob.has_nonsmooth_mag() {
                m = mfista_minimize(prob, &q, &m, cfg.inner_iter, c)?;
            } else {
                let q_fixed = &q;
                m = ncg_minimize(
                    |x| prob.smooth_value(x, q_fixed),
                    |x| prob.grad_m(x, q_fixed),
                    &m,
                    cfg.inner_iter,
                    mag_alpha0,
                )?;
            }
            // phase subproblem at fixed m, on the raw phase vector
            let d = prob.bound_d_scalar(&m);
            let phase_alpha0 = if d > 0.0 { 1.0 / d } else { 1.0 };
            let m_fixed = &m;
            p = ncg_minimize(
                |pp| prob.smooth_value(m_fixed, &complex_exp(pp)),
                |pp| prob.grad_p(m_fixed, pp),
                &p,
                cfg.inner_iter,
                phase_alpha0,
            )?;
            q = complex_exp(&p);
        }
        ctx.compute_seconds += clock.elapsed().as_secs_f64();

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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{DiffAxis, LinearOperator};
    use crate::problem::MagPhaseProblem;
    use crate::regularizers::{HuberStackReg, L1UnitaryReg, Regularizer, TikhonovReg};
    use crate::rng::{NormalStream, SplitMix64};

    fn random_cvec(n: usize, seed: u64) -> ComplexVector {
        let mut rng = SplitMix64::new(seed);
        ComplexVector {
            re: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
            im: (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
        }
    }

    fn noisy(x: &ComplexVector, sigma: f64, seed: u64) -> ComplexVector {
        let mut stream = NormalStream::new(seed);
        ComplexVector {
            re: x.re.iter().map(|v| v + sigma * stream.next()).collect(),
            im: x.im.iter().map(|v| v + sigma * stream.next()).collect(),
        }
    }

    fn denoise_problem(w: usize, h: usize, seed: u64) -> (MagPhaseProblem, SolverState) {
        let n = w * h;
        let b = noisy(&random_cvec(n, seed), 0.15, seed ^ 0xFF);
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
        let prob = MagPhaseProblem::new(LinearOperator::identity(n), b.clone(), r1, r2).unwrap();
        let init = SolverState::new(b.magnitudes(), crate::regularizers::prox_unit_modulus(&b));
        (prob, init)
    }

    #[test]
    fn zero_inner_iterations_returns_init_unchanged() {
        let (prob, init) = denoise_problem(4, 4, 1);
        let mut cfg = SolverConfig::default();
        cfg.max_outer_iter = 3;
        cfg.inner_iter = 0;
        let (state, _) = run_am_ncg(&prob, &init, &cfg, None).unwrap();
        assert_eq!(state.m_hat, init.m_hat);
        assert_eq!(state.q_hat, init.q_hat);
    }

    #[test]
    fn inner_ncg_matches_linear_cg_oracle_on_quadratic_subproblem() {
        // Huber with a huge breakpoint stays in its quadratic branch, so the
        // magnitude subproblem is exactly the linear system
        //   (I + (lambda/xi) B^T B) m = Re{conj(q) .* b}.
        let (w, h) = (4, 4);
        let n = w * h;
        let xi = 1e6;
        let lambda = 2.0e5; // lambda/xi = 0.2
        let fd = LinearOperator::finite_difference_2d(w, h, DiffAxis::Both).unwrap();
        let r1 = Regularizer::HuberStack(
            HuberStackReg::new(lambda, xi, vec![fd.clone()]).unwrap(),
        );
        let b = random_cvec(n, 2);
        let prob = MagPhaseProblem::new(
            LinearOperator::identity(n),
            b.clone(),
            r1,
            Regularizer::None,
        )
        .unwrap();
        let q = crate::regularizers::prox_unit_modulus(&random_cvec(n, 3));

        // AM inner solver
        let m0 = RealVector::zeros(n);
        let c = prob.bound_c();
        let solved = ncg_minimize(
            |x| prob.smooth_value(x, &q),
            |x| prob.grad_m(x, &q),
            &m0,
            600,
            1.0 / c,
        )
        .unwrap();

        // independent linear CG oracle
        let ratio = lambda / xi;
        let apply = |x: &RealVector| -> RealVector {
            let btb = fd
                .adjoint_apply(&fd.apply(&x.to_complex()).unwrap())
                .unwrap()
                .real_part();
            x.axpy(ratio, &btb)
        };
        let rhs = q.conj_hadamard(&b).real_part();
        let mut x = RealVector::zeros(n);
        let mut r = rhs.clone();
        let mut pdir = r.clone();
        let mut rs = r.norm_sq();
        for _ in 0..200 {
            let ap = apply(&pdir);
            let alpha = rs / pdir.dot(&ap);
            x = x.axpy(alpha, &pdir);
            r = r.axpy(-alpha, &ap);
            let rs_new = r.norm_sq();
            if rs_new.sqrt() < 1e-14 {
                break;
            }
            pdir = r.axpy(rs_new / rs, &pdir);
            rs = rs_new;
        }

        let err = solved.sub(&x).norm() / x.norm();
        assert!(err < 1e-8, "NCG vs CG oracle relative error {err}");
    }

    #[test]
    fn outer_objective_is_monotone_on_denoise_instance() {
        let (prob, init) = denoise_problem(6, 6, 4);
        let mut cfg = SolverConfig::default();
        cfg.max_outer_iter = 30;
        cfg.inner_iter = 8;
        let (_, trace) = run_am_ncg(&prob, &init, &cfg, None).unwrap();
        for pair in trace.rows.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective + 1e-10 * pair[0].objective.abs(),
                "AM objective increased at iter {}: {} -> {}",
                pair[1].iter,
                pair[0].objective,
                pair[1].objective
            );
        }
    }

    #[test]
    fn outer_objective_is_monotone_with_l1_magnitude() {
        // l1-wavelet magnitude penalty exercises the MFISTA path
        let (w, h) = (8, 8);
        let n = w * h;
        let truth = random_cvec(n, 5);
        let b = noisy(&truth, 0.1, 55);
        let r1 = Regularizer::L1Unitary(
            L1UnitaryReg::new(0.05, LinearOperator::daubechies4(w, h, 2).unwrap()).unwrap(),
        );
        let r2 = Regularizer::HuberStack(
            HuberStackReg::new(
                0.02,
                0.001,
                vec![LinearOperator::daubechies4(w, h, 2).unwrap()],
            )
            .unwrap(),
        );
        let prob = MagPhaseProblem::new(LinearOperator::identity(n), b.clone(), r1, r2).unwrap();
        let init = SolverState::new(b.magnitudes(), crate::regularizers::prox_unit_modulus(&b));
        let mut cfg = SolverConfig::default();
        cfg.max_outer_iter = 20;
        cfg.inner_iter = 10;
        let (_, trace) = run_am_ncg(&prob, &init, &cfg, None).unwrap();
        for pair in trace.rows.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective + 1e-10 * pair[0].objective.abs(),
                "AM(l1) objective increased at iter {}",
                pair[1].iter
            );
        }
    }

    #[test]
    fn am_decreases_objective_from_noisy_init() {
        let (prob, init) = denoise_problem(6, 6, 6);
        let mut cfg = SolverConfig::default();
        cfg.max_outer_iter = 15;
        cfg.inner_iter = 10;
        let (_, trace) = run_am_ncg(&prob, &init, &cfg, None).unwrap();
        let first = trace.rows.first().unwrap().objective;
        let last = trace.rows.last().unwrap().objective;
        assert!(last < first, "no progress: {first} -> {last}");
    }
}
