//! Synthetic ground truth, acquisition simulation, and the NRMSE metric.
//!
//! Everything here is a pure function of its arguments; the seeded pieces
//! (sensitivities, masks, noise) draw from the SplitMix64 generator so every
//! output is reproducible bit for bit.

use crate::error::{Error, Result};
use crate::rng::{NormalStream, SplitMix64};
use crate::vector::{check_len, ComplexVector, RealVector};

/// Fraction of the peak magnitude below which a pixel counts as background.
pub const BACKGROUND_THRESHOLD: f64 = 0.05;

/// Magnitude/phase ground truth on a `width x height` grid, row-major.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub width: usize,
    pub height: usize,
    /// Nonnegative magnitude in [0, 1].
    pub magnitude: RealVector,
    /// Phase in radians, kept inside (-pi, pi) so the raw-phase and
    /// exponentiated-phase parameterizations agree without unwrapping.
    pub phase: RealVector,
    /// True where magnitude exceeds the background threshold (tissue).
    pub background_mask: Vec<bool>,
}

impl Phantom {
    /// Complex image `magnitude .* e^{i phase}`.
    pub fn complex_image(&self) -> ComplexVector {
        ComplexVector {
            re: self
                .magnitude
                .values
                .iter()
                .zip(&self.phase.values)
                .map(|(m, p)| m * p.cos())
                .collect(),
            im: self
                .magnitude
                .values
                .iter()
                .zip(&self.phase.values)
                .map(|(m, p)| m * p.sin())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.width * self.height
    }
}

/// Phantom magnitude layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    /// Piecewise-constant ellipse composition.
    Ellipses,
    /// Unit disc on empty background.
    Flat,
}

// ellipse components: (cx, cy, rx, ry, rotation, additive value) in
// normalized [-1, 1] coordinates
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 6] = [
    (0.0, 0.0, 0.72, 0.85, 0.0, 0.8),
    (0.0, 0.0, 0.62, 0.75, 0.0, -0.3),
    (-0.25, 0.2, 0.18, 0.3, 0.4, 0.35),
    (0.25, 0.15, 0.22, 0.25, -0.3, 0.25),
    (0.0, -0.35, 0.3, 0.14, 0.0, -0.2),
    (0.05, 0.45, 0.1, 0.08, 0.0, 0.4),
];

fn validate_dims(width: usize, height: usize) -> Result<()> {
    for d in [width, height] {
        if d < 8 || !d.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "phantom dimensions must be powers of two >= 8, got {width}x{height}"
            )));
        }
    }
    Ok(())
}

/// Deterministic piecewise-constant magnitude plus smooth phase (low-order
/// 2D polynomial with one Gaussian bump, range inside (-pi, pi)).
pub fn make_phantom(width: usize, height: usize, kind: PhantomKind) -> Result<Phantom> {
    validate_dims(width, height)?;
    let n = width * height;
    let mut magnitude = vec![0.0; n];
    let mut phase = vec![0.0; n];
    for y in 0..height {
        for x in 0..width {
            let idx = y * width + x;
            // pixel centers in [-1, 1]
            let xn = 2.0 * (x as f64 + 0.5) / width as f64 - 1.0;
            let yn = 2.0 * (y as f64 + 0.5) / height as f64 - 1.0;
            magnitude[idx] = match kind {
                PhantomKind::Flat => {
                    if xn * xn + yn * yn <= 0.7 * 0.7 {
                        1.0
                    } else {
                        0.0
                    }
                }
                PhantomKind::Ellipses => {
                    let mut v: f64 = 0.0;
                    for (cx, cy, rx, ry, rot, value) in ELLIPSES {
                        let dx = xn - cx;
                        let dy = yn - cy;
                        let xr = dx * rot.cos() + dy * rot.sin();
                        let yr = -dx * rot.sin() + dy * rot.cos();
                        if (xr / rx).powi(2) + (yr / ry).powi(2) <= 1.0 {
                            v += value;
                        }
                    }
                    v.clamp(0.0, 1.0)
                }
            };
            let bump = (-((xn - 0.3).powi(2) + (yn + 0.2).powi(2)) / (2.0 * 0.25 * 0.25)).exp();
            phase[idx] = 0.3 + 0.9 * xn - 0.7 * yn + 0.5 * xn * yn - 0.6 * xn * xn
                + 0.4 * yn * yn
                + bump;
        }
    }
    let peak = magnitude.iter().fold(0.0f64, |m, &v| m.max(v));
    let background_mask = magnitude
        .iter()
        .map(|&v| v > BACKGROUND_THRESHOLD * peak)
        .collect();
    Ok(Phantom {
        width,
        height,
        magnitude: RealVector { values: magnitude },
        phase: RealVector { values: phase },
        background_mask,
    })
}

/// Phase layouts for the multi-repetition scenario: the base polynomial is
/// reflected/offset per repetition so each phase image differs smoothly.
pub fn make_phantom_phase_variant(
    width: usize,
    height: usize,
    variant: usize,
) -> Result<RealVector> {
    validate_dims(width, height)?;
    let n = width * height;
    let mut phase = vec![0.0; n];
    let (sx, sy) = match variant % 4 {
        0 => (1.0, 1.0),
        1 => (-1.0, 1.0),
        2 => (1.0, -1.0),
        _ => (-1.0, -1.0),
    };
    let offset = 0.25 * (variant % 4) as f64 - 0.35;
    for y in 0..height {
        for x in 0..width {
            let idx = y * width + x;
            let xn = sx * (2.0 * (x as f64 + 0.5) / width as f64 - 1.0);
            let yn = sy * (2.0 * (y as f64 + 0.5) / height as f64 - 1.0);
            let bump = (-((xn - 0.3).powi(2) + (yn + 0.2).powi(2)) / (2.0 * 0.25 * 0.25)).exp();
            phase[idx] = offset + 0.7 * xn - 0.5 * yn + 0.4 * xn * yn - 0.45 * xn * xn
                + 0.3 * yn * yn
                + 0.8 * bump;
        }
    }
    Ok(RealVector { values: phase })
}

/// Smooth complex coil sensitivity maps: Gaussian profiles centered around
/// the field of view with gentle per-coil phase ramps. One coil degenerates
/// to the exact constant map `1 + 0i`.
pub fn make_sensitivities(
    width: usize,
    height: usize,
    coil_count: usize,
    seed: u64,
) -> Result<Vec<ComplexVector>> {
    if coil_count == 0 {
        return Err(Error::InvalidConfig("coil_count must be >= 1".into()));
    }
    let n = width * height;
    if coil_count == 1 {
        return Ok(vec![ComplexVector {
            re: vec![1.0; n],
            im: vec![0.0; n],
        }]);
    }
    let mut rng = SplitMix64::new(seed);
    let mut maps = Vec::with_capacity(coil_count);
    for c in 0..coil_count {
        let theta = 2.0 * std::f64::consts::PI * c as f64 / coil_count as f64
            + rng.uniform_in(-0.2, 0.2);
        let cx = 0.9 * theta.cos();
        let cy = 0.9 * theta.sin();
        let sigma = 1.1 + rng.uniform_in(-0.1, 0.1);
        let phase_offset = rng.uniform_in(-std::f64::consts::PI, std::f64::consts::PI);
        let ramp = 0.6 * rng.uniform_in(-1.0, 1.0);
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for y in 0..height {
            for x in 0..width {
                let xn = 2.0 * (x as f64 + 0.5) / width as f64 - 1.0;
                let yn = 2.0 * (y as f64 + 0.5) / height as f64 - 1.0;
                let d2 = (xn - cx).powi(2) + (yn - cy).powi(2);
                let amp = (-d2 / (2.0 * sigma * sigma)).exp();
                let ph = phase_offset + ramp * (theta.sin() * xn - theta.cos() * yn);
                re.push(amp * ph.cos());
                im.push(amp * ph.sin());
            }
        }
        maps.push(ComplexVector { re, im });
    }
    Ok(maps)
}

/// Sum-of-squares magnitude of a set of sensitivity maps.
pub fn sensitivity_sum_of_squares(maps: &[ComplexVector]) -> RealVector {
    let n = maps[0].len();
    let mut sos = vec![0.0; n];
    for map in maps {
        for i in 0..n {
            sos[i] += map.re[i] * map.re[i] + map.im[i] * map.im[i];
        }
    }
    RealVector { values: sos }
}

/// Variable-density k-space sampling mask over phase-encode rows with a
/// fully sampled center block. Indexed in standard (unshifted) FFT order:
/// the "center" of k-space is row 0 and wraps around. The overall sampled
/// fraction is round(rows/accel)/rows. On 1D grids (height 1) the columns
/// are sampled instead of rows.
pub fn make_mask(
    width: usize,
    height: usize,
    accel: f64,
    center_frac: f64,
    seed: u64,
) -> Result<Vec<bool>> {
    if accel < 1.0 {
        return Err(Error::InvalidConfig("acceleration must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&center_frac) {
        return Err(Error::InvalidConfig("center_frac must be in [0, 1]".into()));
    }
    let n = width * height;
    if accel == 1.0 {
        return Ok(vec![true; n]);
    }
    let lines = if height > 1 { height } else { width };
    let budget = ((lines as f64 / accel).round() as usize).max(1);
    let center_lines = (center_frac * lines as f64).ceil() as usize;
    if center_lines > budget {
        return Err(Error::InvalidConfig(format!(
            "fully-sampled center ({center_lines} lines) exceeds the sampling budget ({budget} lines)"
        )));
    }

    // wrapped distance from DC at line 0
    let dist = |r: usize| -> f64 { (r.min(lines - r)) as f64 };
    let d_max = (lines / 2) as f64;

    let mut order: Vec<usize> = (0..lines).collect();
    order.sort_by(|&a, &b| dist(a).partial_cmp(&dist(b)).unwrap().then(a.cmp(&b)));
    let mut sampled = vec![false; lines];
    for &r in order.iter().take(center_lines) {
        sampled[r] = true;
    }

    // polynomial-decay density versus k-space radius, drawn without
    // replacement until the budget is met
    let mut rng = SplitMix64::new(seed);
    let weight = |r: usize| -> f64 { (1.0 - dist(r) / (d_max + 1.0)).powi(3) + 0.01 };
    let mut picked = center_lines;
    while picked < budget {
        let total: f64 = (0..lines).filter(|&r| !sampled[r]).map(weight).sum();
        let mut u = rng.uniform() * total;
        let mut chosen = None;
        for r in 0..lines {
            if sampled[r] {
                continue;
            }
            u -= weight(r);
            if u <= 0.0 {
                chosen = Some(r);
                break;
            }
        }
        let r = chosen.unwrap_or_else(|| (0..lines).rfind(|&r| !sampled[r]).unwrap());
        sampled[r] = true;
        picked += 1;
    }

    let mut mask = vec![false; n];
    if height > 1 {
        for (row, &keep) in sampled.iter().enumerate() {
            if keep {
                for x in 0..width {
                    mask[row * width + x] = true;
                }
            }
        }
    } else {
        mask.copy_from_slice(&sampled);
    }
    Ok(mask)
}

/// Adds i.i.d. complex Gaussian noise with per-component standard deviation
/// `sigma`. A zero sigma returns the input bit for bit.
pub fn add_noise(x: &ComplexVector, sigma: f64, seed: u64) -> Result<ComplexVector> {
    if sigma < 0.0 {
        return Err(Error::InvalidConfig("sigma must be >= 0".into()));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut stream = NormalStream::new(seed);
    let n = x.len();
    let mut out = ComplexVector::zeros(n);
    for i in 0..n {
        out.re[i] = x.re[i] + sigma * stream.next();
        out.im[i] = x.im[i] + sigma * stream.next();
    }
    Ok(out)
}

/// Masked normalized root-mean-squared error
/// `||estimate - truth|| / ||truth||` over the pixels where `mask` is true.
pub fn nrmse(estimate: &ComplexVector, truth: &ComplexVector, mask: &[bool]) -> Result<f64> {
    check_len("nrmse estimate", truth.len(), estimate.len())?;
    check_len("nrmse mask", truth.len(), mask.len())?;
    let mut err = 0.0;
    let mut norm = 0.0;
    for i in 0..truth.len() {
        if mask[i] {
            let dr = estimate.re[i] - truth.re[i];
            let di = estimate.im[i] - truth.im[i];
            err += dr * dr + di * di;
            norm += truth.re[i] * truth.re[i] + truth.im[i] * truth.im[i];
        }
    }
    if norm == 0.0 {
        return Err(Error::InvalidInput(
            "nrmse undefined: truth is zero on the mask".into(),
        ));
    }
    Ok((err / norm).sqrt())
}

/// Magnitude-only NRMSE: compares `|estimate|` against `|truth|`.
pub fn nrmse_magnitude(
    estimate: &ComplexVector,
    truth: &ComplexVector,
    mask: &[bool],
) -> Result<f64> {
    let est_mag = estimate.magnitudes().to_complex();
    let truth_mag = truth.magnitudes().to_complex();
    nrmse(&est_mag, &truth_mag, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_phantom_is_a_centered_disc() {
        let p = make_phantom(32, 32, PhantomKind::Flat).unwrap();
        // center pixel inside, corner outside
        assert_eq!(p.magnitude.values[16 * 32 + 16], 1.0);
        assert_eq!(p.magnitude.values[0], 0.0);
        assert!(p.magnitude.values.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn phantom_is_deterministic() {
        let a = make_phantom(64, 64, PhantomKind::Ellipses).unwrap();
        let b = make_phantom(64, 64, PhantomKind::Ellipses).unwrap();
        assert_eq!(a.magnitude, b.magnitude);
        assert_eq!(a.phase, b.phase);
    }

    #[test]
    fn ellipse_phantom_background_fraction_regression() {
        let p = make_phantom(64, 64, PhantomKind::Ellipses).unwrap();
        let tissue = p.background_mask.iter().filter(|&&b| b).count();
        let background_fraction = 1.0 - tissue as f64 / p.n() as f64;
        assert!(
            (0.3..=0.7).contains(&background_fraction),
            "background fraction {background_fraction}"
        );
        // regression value counted from the generator once and frozen
        assert_eq!(tissue, 1968, "tissue pixel count changed");
    }

    #[test]
    fn phantom_phase_stays_inside_pi() {
        for (w, h) in [(32, 32), (64, 64), (64, 128)] {
            let p = make_phantom(w, h, PhantomKind::Ellipses).unwrap();
            assert!(p.phase.max_abs() < std::f64::consts::PI, "phase range");
            for v in 0..4 {
                let ph = make_phantom_phase_variant(w, h, v).unwrap();
                assert!(ph.max_abs() < std::f64::consts::PI, "variant {v} range");
            }
        }
    }

    #[test]
    fn phase_variants_differ() {
        let a = make_phantom_phase_variant(32, 32, 0).unwrap();
        let b = make_phantom_phase_variant(32, 32, 1).unwrap();
        assert!(a.sub(&b).max_abs() > 0.1);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(make_phantom(7, 32, PhantomKind::Flat).is_err());
        assert!(make_phantom(32, 48, PhantomKind::Flat).is_err());
    }

    #[test]
    fn single_coil_is_exactly_one() {
        let maps = make_sensitivities(16, 16, 1, 99).unwrap();
        assert_eq!(maps.len(), 1);
        assert!(maps[0].re.iter().all(|&v| v == 1.0));
        assert!(maps[0].im.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sensitivity_sum_of_squares_bounded_below_on_tissue() {
        let phantom = make_phantom(64, 64, PhantomKind::Ellipses).unwrap();
        let maps = make_sensitivities(64, 64, 8, 42).unwrap();
        let sos = sensitivity_sum_of_squares(&maps);
        for (i, &tissue) in phantom.background_mask.iter().enumerate() {
            if tissue {
                assert!(
                    sos.values[i] >= 0.1,
                    "sum-of-squares {} below 0.1 at pixel {i}",
                    sos.values[i]
                );
            }
        }
    }

    #[test]
    fn sensitivities_deterministic_per_seed() {
        let a = make_sensitivities(32, 32, 4, 7).unwrap();
        let b = make_sensitivities(32, 32, 4, 7).unwrap();
        assert_eq!(a, b);
        let c = make_sensitivities(32, 32, 4, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_sampling_mask_is_all_true() {
        let mask = make_mask(16, 16, 1.0, 0.06, 1).unwrap();
        assert!(mask.iter().all(|&b| b));
    }

    #[test]
    fn mask_fraction_matches_acceleration() {
        let mask = make_mask(64, 64, 8.0, 0.06, 3).unwrap();
        let frac = mask.iter().filter(|&&b| b).count() as f64 / mask.len() as f64;
        assert!(
            (0.1125..=0.1375).contains(&frac),
            "sampled fraction {frac} outside +/-10% of 1/8"
        );
    }

    #[test]
    fn mask_center_block_is_fully_sampled() {
        let (w, h) = (32, 32);
        let mask = make_mask(w, h, 4.0, 0.125, 5).unwrap();
        // ceil(0.125 * 32) = 4 center lines; the closest rows to DC in
        // wrapped distance are 0, 1, 31, then 2 by the deterministic order
        for row in [0usize, 1, 31] {
            assert!(
                (0..w).all(|x| mask[row * w + x]),
                "center row {row} not fully sampled"
            );
        }
    }

    #[test]
    fn mask_is_deterministic_and_errors_on_infeasible_center() {
        let a = make_mask(64, 64, 8.0, 0.06, 11).unwrap();
        let b = make_mask(64, 64, 8.0, 0.06, 11).unwrap();
        assert_eq!(a, b);
        // center demands 32 lines but the budget is 8
        assert!(make_mask(64, 64, 8.0, 0.5, 11).is_err());
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let x = make_phantom(16, 16, PhantomKind::Ellipses)
            .unwrap()
            .complex_image();
        let y = add_noise(&x, 0.0, 123).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn noise_std_matches_sigma() {
        let x = ComplexVector::zeros(500_000);
        let sigma = 0.37;
        let y = add_noise(&x, sigma, 2024).unwrap();
        let n = 2.0 * x.len() as f64; // re and im components
        let mean: f64 = (y.re.iter().sum::<f64>() + y.im.iter().sum::<f64>()) / n;
        let var: f64 = (y.re.iter().map(|v| v * v).sum::<f64>()
            + y.im.iter().map(|v| v * v).sum::<f64>())
            / n
            - mean * mean;
        let std = var.sqrt();
        assert!(
            (std - sigma).abs() / sigma < 0.005,
            "empirical std {std} vs sigma {sigma}"
        );
    }

    #[test]
    fn same_seed_same_noise() {
        let x = ComplexVector::zeros(64);
        let a = add_noise(&x, 1.0, 5).unwrap();
        let b = add_noise(&x, 1.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nrmse_trivial_values() {
        let truth = make_phantom(16, 16, PhantomKind::Ellipses)
            .unwrap()
            .complex_image();
        let mask = vec![true; truth.len()];
        assert_eq!(nrmse(&truth, &truth, &mask).unwrap(), 0.0);
        assert!((nrmse(&truth.scale(2.0), &truth, &mask).unwrap() - 1.0).abs() < 1e-14);
        assert!(
            (nrmse(&ComplexVector::zeros(truth.len()), &truth, &mask).unwrap() - 1.0).abs()
                < 1e-14
        );
    }

    #[test]
    fn nrmse_invariant_to_global_phase() {
        let phantom = make_phantom(16, 16, PhantomKind::Ellipses).unwrap();
        let truth = phantom.complex_image();
        let est = add_noise(&truth, 0.1, 9).unwrap();
        let theta = 0.7f64;
        let rot = ComplexVector {
            re: vec![theta.cos(); truth.len()],
            im: vec![theta.sin(); truth.len()],
        };
        let a = nrmse(&est, &truth, &phantom.background_mask).unwrap();
        let b = nrmse(
            &est.hadamard(&rot),
            &truth.hadamard(&rot),
            &phantom.background_mask,
        )
        .unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn masked_nrmse_ignores_background_pixels() {
        let phantom = make_phantom(16, 16, PhantomKind::Ellipses).unwrap();
        let truth = phantom.complex_image();
        let mut est = add_noise(&truth, 0.1, 10).unwrap();
        let before = nrmse(&est, &truth, &phantom.background_mask).unwrap();
        // trash every background pixel
        for (i, &tissue) in phantom.background_mask.iter().enumerate() {
            if !tissue {
                est.re[i] = 1e6;
                est.im[i] = -1e6;
            }
        }
        let after = nrmse(&est, &truth, &phantom.background_mask).unwrap();
        assert_eq!(before.to_bits(), after.to_bits());
    }

    #[test]
    fn nrmse_errors_on_zero_truth() {
        let z = ComplexVector::zeros(8);
        assert!(nrmse(&z, &z, &vec![true; 8]).is_err());
    }
}
