//! Experiment harness: desk-scale denoising, undersampled SENSE
//! reconstruction, phase-corrected multi-image combination, and a four-way
//! solver ablation. Each command is a pure function of its configuration and
//! seeds; repeated runs emit byte-identical trace CSVs and vector files
//! (enable `wall_clock` to trade that for real timing columns).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{
    export_pgm, write_ablation_csv, write_complex_vector, write_real_vector, write_trace_csv,
};
use crate::operators::{DiffAxis, LinearOperator};
use crate::phantom::{
    add_noise, make_mask, make_phantom, make_phantom_phase_variant, make_sensitivities, nrmse,
    sensitivity_sum_of_squares, Phantom, PhantomKind,
};
use crate::problem::{MagPhaseObjective, MagPhaseProblem, MultiRepProblem};
use crate::regularizers::{prox_unit_modulus, HuberStackReg, Regularizer, TikhonovReg};
use crate::regularizers::L1UnitaryReg;
use crate::solvers::{
    run_am_ncg, run_palm, run_palm_nesterov, run_palm_ut, run_palmnut, SolverConfig, SolverState,
    SolverTrace,
};
use crate::vector::{complex_exp, ComplexVector, RealVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Denoise,
    Recon,
    Combine,
    Ablation,
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "denoise" => Ok(Scenario::Denoise),
            "recon" => Ok(Scenario::Recon),
            "combine" => Ok(Scenario::Combine),
            "ablation" => Ok(Scenario::Ablation),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario {other:?} (expected denoise|recon|combine|ablation)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Denoise => "denoise",
            Scenario::Recon => "recon",
            Scenario::Combine => "combine",
            Scenario::Ablation => "ablation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Am,
    Palm,
    PalmUt,
    Palmnut,
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "am" => Ok(SolverKind::Am),
            "palm" => Ok(SolverKind::Palm),
            "palm_ut" => Ok(SolverKind::PalmUt),
            "palmnut" => Ok(SolverKind::Palmnut),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver {other:?} (expected am|palm|palm_ut|palmnut)"
            ))),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Am => "am",
            SolverKind::Palm => "palm",
            SolverKind::PalmUt => "palm_ut",
            SolverKind::Palmnut => "palmnut",
        })
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub solver: SolverKind,
    pub lambda1: f64,
    pub lambda2: f64,
    pub xi: f64,
    /// Image width; denoise/recon/ablation run at size x size, combine at
    /// size x 2*size.
    pub size: usize,
    pub accel: f64,
    pub sigma: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub coils: usize,
    pub center_frac: f64,
    /// Wavelet decomposition levels (recon regularizers).
    pub levels: usize,
    /// AM inner iterations per block.
    pub inner_iter: usize,
    /// Repetition count J for the combine scenario.
    pub reps: usize,
    /// Record real per-iteration seconds in trace CSVs (breaks byte-identical
    /// reruns).
    pub wall_clock: bool,
}

impl ExperimentConfig {
    /// Scenario defaults. Regularization weights were chosen by the shipped
    /// lambda_sweep example (log-grid search minimizing final NRMSE on the
    /// default seeded instance) and frozen here and in configs/*.toml.
    pub fn defaults(scenario: Scenario) -> Self {
        let base = Self {
            scenario,
            solver: SolverKind::Palmnut,
            lambda1: 0.04,
            lambda2: 0.04,
            xi: 0.05,
            size: 64,
            accel: 1.0,
            sigma: 0.068,
            seed: 42,
            max_iter: 400,
            out: PathBuf::from(format!("results/{scenario}")),
            coils: 1,
            center_frac: 0.06,
            levels: 3,
            inner_iter: 10,
            reps: 4,
            wall_clock: false,
        };
        match scenario {
            Scenario::Denoise | Scenario::Ablation => base,
            Scenario::Recon => Self {
                lambda1: 0.002,
                lambda2: 0.002,
                xi: 0.001,
                sigma: 0.01,
                accel: 4.0,
                coils: 8,
                ..base
            },
            Scenario::Combine => Self {
                max_iter: 300,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.size < 8 || !self.size.is_power_of_two() {
            return fail(format!("size must be a power of two >= 8, got {}", self.size));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return fail("lambda1 and lambda2 must be >= 0".into());
        }
        if self.xi <= 0.0 {
            return fail("xi must be > 0".into());
        }
        if self.sigma < 0.0 {
            return fail("sigma must be >= 0".into());
        }
        if self.accel < 1.0 {
            return fail("accel must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.center_frac) {
            return fail("center_frac must be in [0, 1]".into());
        }
        if self.coils == 0 {
            return fail("coils must be >= 1".into());
        }
        if self.reps == 0 {
            return fail("reps must be >= 1".into());
        }
        if self.levels == 0 || self.size % (1 << self.levels) != 0 {
            return fail(format!(
                "levels must satisfy size % 2^levels == 0 (size {}, levels {})",
                self.size, self.levels
            ));
        }
        if self.out.as_os_str().is_empty() {
            return fail("output directory must not be empty".into());
        }
        Ok(())
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_outer_iter: self.max_iter,
            rel_cost_tol: 0.0,
            inner_iter: self.inner_iter,
            record_nrmse: true,
            wall_clock_limit_s: None,
            phase_steps_per_outer: 1,
            timing: self.wall_clock,
        }
    }
}

/// Optional overrides from a TOML config file or command-line flags; later
/// layers win field by field.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub scenario: Option<Scenario>,
    pub solver: Option<SolverKind>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub xi: Option<f64>,
    pub size: Option<usize>,
    pub accel: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub coils: Option<usize>,
    pub center_frac: Option<f64>,
    pub levels: Option<usize>,
    pub inner_iter: Option<usize>,
    pub reps: Option<usize>,
    pub wall_clock: Option<bool>,
}

impl PartialConfig {
    fn apply_to(&self, cfg: &mut ExperimentConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        take!(
            solver, lambda1, lambda2, xi, size, accel, sigma, seed, max_iter, out, coils,
            center_frac, levels, inner_iter, reps, wall_clock
        );
    }
}

/// Parses a TOML config file into a [`PartialConfig`]; unknown keys are
/// configuration errors.
pub fn read_config_file(path: impl AsRef<Path>) -> Result<PartialConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    toml::from_str(&text).map_err(|e| {
        Error::InvalidConfig(format!(
            "config file {}: {e}",
            path.as_ref().display()
        ))
    })
}

/// Resolves scenario defaults, then config-file values, then flags.
pub fn resolve_config(
    file: Option<&PartialConfig>,
    flags: &PartialConfig,
) -> Result<ExperimentConfig> {
    let scenario = flags
        .scenario
        .or(file.and_then(|f| f.scenario))
        .ok_or_else(|| {
            Error::InvalidConfig("scenario is required (flag --scenario or config file)".into())
        })?;
    let mut cfg = ExperimentConfig::defaults(scenario);
    if let Some(f) = file {
        f.apply_to(&mut cfg);
    }
    flags.apply_to(&mut cfg);
    cfg.scenario = scenario;
    cfg.validate()?;
    Ok(cfg)
}

/// Summary of one scenario run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub scenario: Scenario,
    pub solver: SolverKind,
    pub iterations: usize,
    pub final_objective: f64,
    /// NRMSE of the final estimate against ground truth (tissue-masked).
    pub final_nrmse: f64,
    /// NRMSE of the starting point (noisy input or zero-filled recon).
    pub input_nrmse: f64,
    pub out_dir: PathBuf,
}

/// Per-variant ablation summary.
#[derive(Debug, Clone)]
pub struct AblationVariant {
    pub name: String,
    pub final_objective: f64,
    /// First iteration whose objective is within 1% of the best objective
    /// found by any variant.
    pub iters_to_one_percent: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub variants: Vec<AblationVariant>,
    pub best_objective: f64,
    pub csv_path: PathBuf,
    pub out_dir: PathBuf,
}

/// First iteration whose objective falls within 1% of `best`.
pub fn iterations_to_within_one_percent(trace: &SolverTrace, best: f64) -> Option<usize> {
    let target = best + 0.01 * best.abs();
    trace
        .rows
        .iter()
        .find(|r| r.objective <= target)
        .map(|r| r.iter)
}

fn dispatch_solver<P: MagPhaseObjective + ?Sized>(
    kind: SolverKind,
    prob: &P,
    init: &SolverState,
    cfg: &SolverConfig,
    nrmse_fn: Option<crate::solvers::NrmseFn<'_>>,
) -> Result<(SolverState, SolverTrace)> {
    match kind {
        SolverKind::Am => run_am_ncg(prob, init, cfg, nrmse_fn),
        SolverKind::Palm => run_palm(prob, init, cfg, nrmse_fn),
        SolverKind::PalmUt => run_palm_ut(prob, init, cfg, nrmse_fn),
        SolverKind::Palmnut => run_palmnut(prob, init, cfg, nrmse_fn),
    }
}

fn finite_difference_both(w: usize, h: usize) -> Result<LinearOperator> {
    LinearOperator::finite_difference_2d(w, h, DiffAxis::Both)
}

fn huber_or_none(lambda: f64, xi: f64, op: LinearOperator) -> Result<Regularizer> {
    if lambda > 0.0 {
        Ok(Regularizer::HuberStack(HuberStackReg::new(
            lambda,
            xi,
            vec![op],
        )?))
    } else {
        Ok(Regularizer::None)
    }
}

fn tikhonov_or_none(lambda: f64, op: LinearOperator) -> Result<Regularizer> {
    if lambda > 0.0 {
        Ok(Regularizer::Tikhonov(TikhonovReg::new(lambda, op)?))
    } else {
        Ok(Regularizer::None)
    }
}

fn l1_or_none(lambda: f64, op: LinearOperator) -> Result<Regularizer> {
    if lambda > 0.0 {
        Ok(Regularizer::L1Unitary(L1UnitaryReg::new(lambda, op)?))
    } else {
        Ok(Regularizer::None)
    }
}

fn write_phantom_artifacts(dir: &Path, phantom: &Phantom) -> Result<()> {
    let (w, h) = (phantom.width, phantom.height);
    write_real_vector(dir.join("truth_mag.rvec"), &phantom.magnitude, w, h)?;
    write_real_vector(dir.join("truth_phase.rvec"), &phantom.phase, w, h)?;
    export_pgm(&phantom.magnitude, w, h, dir.join("truth_mag.pgm"))?;
    export_pgm(&phantom.phase, w, h, dir.join("truth_phase.pgm"))?;
    Ok(())
}

fn write_result_artifacts(
    dir: &Path,
    w: usize,
    h: usize,
    state: &SolverState,
    trace: &SolverTrace,
) -> Result<PathBuf> {
    let trace_path = dir.join("trace.csv");
    write_trace_csv(&trace_path, trace)?;
    let image = state.image();
    write_complex_vector(dir.join("result.cvec"), &image, w, h)?;
    write_real_vector(dir.join("result_mag.rvec"), &state.m_hat, w, h)?;
    export_pgm(&image.magnitudes(), w, h, dir.join("result_mag.pgm"))?;
    export_pgm(&image.angles(), w, h, dir.join("result_phase.pgm"))?;
    Ok(trace_path)
}

/// Regularization-based denoising of a single-channel complex image:
/// identity forward operator, Huber finite-difference magnitude penalty,
/// Tikhonov finite-difference phase penalty, initialized with the noisy
/// image.
pub fn cmd_denoise(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (w, h) = (cfg.size, cfg.size);
    let phantom = make_phantom(w, h, PhantomKind::Ellipses)?;
    let truth = phantom.complex_image();
    let noisy = add_noise(&truth, cfg.sigma, cfg.seed)?;

    let r1 = huber_or_none(cfg.lambda1, cfg.xi, finite_difference_both(w, h)?)?;
    let r2 = tikhonov_or_none(cfg.lambda2, finite_difference_both(w, h)?)?;
    let prob = MagPhaseProblem::new(LinearOperator::identity(w * h), noisy.clone(), r1, r2)?;

    let init = SolverState::new(noisy.magnitudes(), prox_unit_modulus(&noisy));
    let mask = phantom.background_mask.clone();
    let input_nrmse = nrmse(&noisy, &truth, &mask)?;
    let truth_ref = &truth;
    let mask_ref = &mask;
    let nrmse_fn = move |m: &RealVector, q: &ComplexVector| -> f64 {
        nrmse(&q.hadamard_real(m), truth_ref, mask_ref).unwrap_or(f64::NAN)
    };

    std::fs::create_dir_all(&cfg.out)?;
    let (state, trace) =
        dispatch_solver(cfg.solver, &prob, &init, &cfg.solver_config(), Some(&nrmse_fn))?;

    write_phantom_artifacts(&cfg.out, &phantom)?;
    write_complex_vector(cfg.out.join("noisy.cvec"), &noisy, w, h)?;
    export_pgm(&noisy.magnitudes(), w, h, cfg.out.join("noisy_mag.pgm"))?;
    write_result_artifacts(&cfg.out, w, h, &state, &trace)?;

    Ok(ExperimentOutcome {
        scenario: Scenario::Denoise,
        solver: cfg.solver,
        iterations: state.k,
        final_objective: trace.final_objective().unwrap_or(f64::NAN),
        final_nrmse: nrmse(&state.image(), &truth, &mask)?,
        input_nrmse,
        out_dir: cfg.out.clone(),
    })
}

/// Undersampled multi-coil reconstruction: SENSE forward operator
/// (sensitivities, unitary DFT, variable-density k-space mask), l1-wavelet
/// magnitude penalty, Huber-wavelet phase penalty, initialized from the
/// zero-filled SENSE coil combination.
pub fn cmd_recon(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (w, h) = (cfg.size, cfg.size);
    let phantom = make_phantom(w, h, PhantomKind::Ellipses)?;
    let truth = phantom.complex_image();
    let sens = make_sensitivities(w, h, cfg.coils, cfg.seed ^ 0x5E_ED01)?;
    let kmask = make_mask(w, h, cfg.accel, cfg.center_frac, cfg.seed ^ 0x5E_ED02)?;
    let a_op = LinearOperator::sense(w, h, &sens, &kmask)?;
    let b = add_noise(&a_op.apply(&truth)?, cfg.sigma, cfg.seed ^ 0x5E_ED03)?;

    // zero-filled SENSE combination: A^H b ./ max(sum |s_c|^2, floor)
    let adjoint = a_op.adjoint_apply(&b)?;
    let sos = sensitivity_sum_of_squares(&sens);
    let zero_filled = ComplexVector {
        re: adjoint
            .re
            .iter()
            .zip(&sos.values)
            .map(|(v, s)| v / s.max(0.01))
            .collect(),
        im: adjoint
            .im
            .iter()
            .zip(&sos.values)
            .map(|(v, s)| v / s.max(0.01))
            .collect(),
    };

    let wavelet = LinearOperator::daubechies4(w, h, cfg.levels)?;
    let r1 = l1_or_none(cfg.lambda1, wavelet.clone())?;
    let r2 = huber_or_none(cfg.lambda2, cfg.xi, wavelet)?;
    let prob = MagPhaseProblem::new(a_op, b, r1, r2)?;

    let init = SolverState::new(zero_filled.magnitudes(), prox_unit_modulus(&zero_filled));
    let mask = phantom.background_mask.clone();
    let input_nrmse = nrmse(&zero_filled, &truth, &mask)?;
    let truth_ref = &truth;
    let mask_ref = &mask;
    let nrmse_fn = move |m: &RealVector, q: &ComplexVector| -> f64 {
        nrmse(&q.hadamard_real(m), truth_ref, mask_ref).unwrap_or(f64::NAN)
    };

    std::fs::create_dir_all(&cfg.out)?;
    let (state, trace) =
        dispatch_solver(cfg.solver, &prob, &init, &cfg.solver_config(), Some(&nrmse_fn))?;

    write_phantom_artifacts(&cfg.out, &phantom)?;
    write_complex_vector(cfg.out.join("zero_filled.cvec"), &zero_filled, w, h)?;
    export_pgm(
        &zero_filled.magnitudes(),
        w,
        h,
        cfg.out.join("zero_filled_mag.pgm"),
    )?;
    let mask_image = RealVector {
        values: kmask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    };
    write_real_vector(cfg.out.join("mask.rvec"), &mask_image, w, h)?;
    export_pgm(&mask_image, w, h, cfg.out.join("mask.pgm"))?;
    write_result_artifacts(&cfg.out, w, h, &state, &trace)?;

    Ok(ExperimentOutcome {
        scenario: Scenario::Recon,
        solver: cfg.solver,
        iterations: state.k,
        final_objective: trace.final_objective().unwrap_or(f64::NAN),
        final_nrmse: nrmse(&state.image(), &truth, &mask)?,
        input_nrmse,
        out_dir: cfg.out.clone(),
    })
}

/// Phase-corrected combination of `reps` noisy measurements of one magnitude
/// image under per-repetition phases: estimates a single shared magnitude
/// and per-repetition phases, initialized with the average noisy magnitude
/// and the noisy phases.
pub fn cmd_combine(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (w, h) = (cfg.size, 2 * cfg.size);
    let phantom = make_phantom(w, h, PhantomKind::Ellipses)?;
    let truth_mag = phantom.magnitude.clone();
    let mask = phantom.background_mask.clone();

    let mut b_list = Vec::with_capacity(cfg.reps);
    for j in 0..cfg.reps {
        let phase = make_phantom_phase_variant(w, h, j)?;
        let clean = complex_exp(&phase).hadamard_real(&truth_mag);
        b_list.push(add_noise(&clean, cfg.sigma, cfg.seed ^ (0xC0_0B1E + j as u64))?);
    }

    let r1 = huber_or_none(cfg.lambda1, cfg.xi, finite_difference_both(w, h)?)?;
    let r2 = tikhonov_or_none(cfg.lambda2, finite_difference_both(w, h)?)?;
    let prob = MultiRepProblem::new(b_list.clone(), r1, r2)?;

    // init: average of the noisy magnitudes, noisy phases
    let n = w * h;
    let mut m0 = RealVector::zeros(n);
    for b in &b_list {
        m0 = m0.axpy(1.0 / cfg.reps as f64, &b.magnitudes());
    }
    let q0 = prob.stack_phases(
        &b_list
            .iter()
            .map(prox_unit_modulus)
            .collect::<Vec<_>>(),
    )?;
    let init = SolverState::new(m0, q0);

    let truth_mag_c = truth_mag.to_complex();
    let mask_ref = &mask;
    let truth_ref = &truth_mag_c;
    // shared-magnitude quality: magnitude-only NRMSE of |m| against truth
    let nrmse_fn = move |m: &RealVector, _q: &ComplexVector| -> f64 {
        crate::phantom::nrmse_magnitude(&m.to_complex(), truth_ref, mask_ref)
            .unwrap_or(f64::NAN)
    };
    let input_nrmse =
        crate::phantom::nrmse_magnitude(&b_list[0], &truth_mag_c, &mask)?;

    std::fs::create_dir_all(&cfg.out)?;
    let (state, trace) =
        dispatch_solver(cfg.solver, &prob, &init, &cfg.solver_config(), Some(&nrmse_fn))?;

    write_phantom_artifacts(&cfg.out, &phantom)?;
    export_pgm(
        &b_list[0].magnitudes(),
        w,
        h,
        cfg.out.join("noisy_mag_0.pgm"),
    )?;
    let trace_path = cfg.out.join("trace.csv");
    write_trace_csv(&trace_path, &trace)?;
    write_real_vector(cfg.out.join("result_mag.rvec"), &state.m_hat, w, h)?;
    let abs_mag = RealVector {
        values: state.m_hat.values.iter().map(|v| v.abs()).collect(),
    };
    export_pgm(&abs_mag, w, h, cfg.out.join("result_mag.pgm"))?;
    for (j, qj) in prob.split_phases(&state.q_hat)?.iter().enumerate() {
        write_complex_vector(cfg.out.join(format!("result_phase_{j}.cvec")), qj, w, h)?;
        export_pgm(&qj.angles(), w, h, cfg.out.join(format!("result_phase_{j}.pgm")))?;
    }

    let final_nrmse =
        crate::phantom::nrmse_magnitude(&state.m_hat.to_complex(), &truth_mag_c, &mask)?;
    Ok(ExperimentOutcome {
        scenario: Scenario::Combine,
        solver: cfg.solver,
        iterations: state.k,
        final_objective: trace.final_objective().unwrap_or(f64::NAN),
        final_nrmse,
        input_nrmse,
        out_dir: cfg.out.clone(),
    })
}

/// Runs PALM, PALM with Nesterov momentum, PALM with uncoupled step sizes,
/// and PALMNUT on the same seeded denoise instance and writes one combined
/// CSV with a variant column.
pub fn cmd_ablation(cfg: &ExperimentConfig) -> Result<AblationOutcome> {
    cfg.validate()?;
    let (w, h) = (cfg.size, cfg.size);
    let phantom = make_phantom(w, h, PhantomKind::Ellipses)?;
    let truth = phantom.complex_image();
    let noisy = add_noise(&truth, cfg.sigma, cfg.seed)?;

    let r1 = huber_or_none(cfg.lambda1, cfg.xi, finite_difference_both(w, h)?)?;
    let r2 = tikhonov_or_none(cfg.lambda2, finite_difference_both(w, h)?)?;
    let prob = MagPhaseProblem::new(LinearOperator::identity(w * h), noisy.clone(), r1, r2)?;
    let init = SolverState::new(noisy.magnitudes(), prox_unit_modulus(&noisy));

    let mask = phantom.background_mask.clone();
    let truth_ref = &truth;
    let mask_ref = &mask;
    let nrmse_fn = move |m: &RealVector, q: &ComplexVector| -> f64 {
        nrmse(&q.hadamard_real(m), truth_ref, mask_ref).unwrap_or(f64::NAN)
    };

    let scfg = cfg.solver_config();
    // sequential runs on one core keep the comparison fair
    let mut variants: Vec<(String, SolverTrace)> = Vec::new();
    let runs: [(&str, fn(&MagPhaseProblem, &SolverState, &SolverConfig, Option<crate::solvers::NrmseFn<'_>>) -> Result<(SolverState, SolverTrace)>); 4] = [
        ("palm", run_palm),
        ("palm_nesterov", run_palm_nesterov),
        ("palm_ut", run_palm_ut),
        ("palmnut", run_palmnut),
    ];
    for (name, runner) in runs {
        let (_, trace) = runner(&prob, &init, &scfg, Some(&nrmse_fn))?;
        variants.push((name.to_string(), trace));
    }

    std::fs::create_dir_all(&cfg.out)?;
    let csv_path = cfg.out.join("ablation.csv");
    write_ablation_csv(&csv_path, &variants)?;

    let best_objective = variants
        .iter()
        .flat_map(|(_, t)| t.rows.iter().map(|r| r.objective))
        .fold(f64::INFINITY, f64::min);
    let summaries = variants
        .iter()
        .map(|(name, trace)| AblationVariant {
            name: name.clone(),
            final_objective: trace.final_objective().unwrap_or(f64::NAN),
            iters_to_one_percent: iterations_to_within_one_percent(trace, best_objective),
        })
        .collect();

    Ok(AblationOutcome {
        variants: summaries,
        best_objective,
        csv_path,
        out_dir: cfg.out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny(scenario: Scenario, dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(scenario);
        cfg.size = 16;
        cfg.levels = 2;
        cfg.max_iter = 20;
        cfg.out = dir.to_path_buf();
        cfg
    }

    #[test]
    fn defaults_validate() {
        for s in [
            Scenario::Denoise,
            Scenario::Recon,
            Scenario::Combine,
            Scenario::Ablation,
        ] {
            ExperimentConfig::defaults(s).validate().unwrap();
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ExperimentConfig::defaults(Scenario::Denoise);
        cfg.size = 48;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(Scenario::Recon);
        cfg.accel = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(Scenario::Denoise);
        cfg.xi = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(Scenario::Recon);
        cfg.levels = 9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn resolve_config_layers_file_then_flags() {
        let file = PartialConfig {
            scenario: Some(Scenario::Denoise),
            sigma: Some(0.5),
            seed: Some(7),
            ..PartialConfig::default()
        };
        let flags = PartialConfig {
            sigma: Some(0.25),
            ..PartialConfig::default()
        };
        let cfg = resolve_config(Some(&file), &flags).unwrap();
        assert_eq!(cfg.scenario, Scenario::Denoise);
        assert_eq!(cfg.sigma, 0.25); // flag wins
        assert_eq!(cfg.seed, 7); // file wins over default
        assert!(resolve_config(None, &PartialConfig::default()).is_err());
    }

    #[test]
    fn config_file_round_trip_and_unknown_keys() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "scenario = \"recon\"\nsolver = \"am\"\nlambda1 = 0.5\n").unwrap();
        let partial = read_config_file(&path).unwrap();
        assert_eq!(partial.scenario, Some(Scenario::Recon));
        assert_eq!(partial.solver, Some(SolverKind::Am));
        assert_eq!(partial.lambda1, Some(0.5));

        std::fs::write(&path, "scenario = \"recon\"\nbogus_key = 1\n").unwrap();
        assert!(read_config_file(&path).is_err());
    }

    #[test]
    fn denoise_noiseless_init_at_truth_stays_at_truth() {
        let dir = tempdir().unwrap();
        let mut cfg = tiny(Scenario::Denoise, dir.path());
        cfg.sigma = 0.0;
        cfg.lambda1 = 0.0;
        cfg.lambda2 = 0.0;
        cfg.max_iter = 10;
        let outcome = cmd_denoise(&cfg).unwrap();
        assert!(
            outcome.final_nrmse < 1e-6,
            "final NRMSE {}",
            outcome.final_nrmse
        );
    }

    #[test]
    fn denoise_improves_nrmse_and_is_deterministic() {
        let dir_a = tempdir().unwrap();
        let mut cfg = tiny(Scenario::Denoise, dir_a.path());
        cfg.sigma = 0.08;
        cfg.max_iter = 60;
        let a = cmd_denoise(&cfg).unwrap();
        assert!(
            a.final_nrmse < a.input_nrmse,
            "no improvement: {} -> {}",
            a.input_nrmse,
            a.final_nrmse
        );

        let dir_b = tempdir().unwrap();
        cfg.out = dir_b.path().to_path_buf();
        cmd_denoise(&cfg).unwrap();
        let bytes_a = std::fs::read(dir_a.path().join("trace.csv")).unwrap();
        let bytes_b = std::fs::read(dir_b.path().join("trace.csv")).unwrap();
        assert_eq!(bytes_a, bytes_b, "trace CSVs differ across identical runs");
    }

    #[test]
    fn combine_collapses_when_phases_identical_and_noiseless() {
        // all-zero sigma with reps = 1 reduces to exact data: the shared
        // magnitude should match truth after convergence
        let dir = tempdir().unwrap();
        let mut cfg = tiny(Scenario::Combine, dir.path());
        cfg.sigma = 0.0;
        cfg.lambda1 = 0.0;
        cfg.lambda2 = 0.0;
        cfg.reps = 1;
        cfg.max_iter = 30;
        let outcome = cmd_combine(&cfg).unwrap();
        assert!(
            outcome.final_nrmse < 1e-6,
            "magnitude NRMSE {}",
            outcome.final_nrmse
        );
    }

    #[test]
    fn ablation_variants_share_iteration_zero() {
        let dir = tempdir().unwrap();
        let mut cfg = tiny(Scenario::Ablation, dir.path());
        cfg.max_iter = 10;
        cmd_ablation(&cfg).unwrap();
        let variants = crate::io::read_ablation_csv(dir.path().join("ablation.csv")).unwrap();
        assert_eq!(variants.len(), 4);
        let first = variants[0].1.rows[0].objective;
        for (name, trace) in &variants {
            assert_eq!(trace.rows[0].iter, 0);
            assert_eq!(
                trace.rows[0].objective.to_bits(),
                first.to_bits(),
                "variant {name} starts from a different objective"
            );
        }
    }
}
