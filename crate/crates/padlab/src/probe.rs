//! Position-information quantification: fit one affine map, shared across
//! all spatial positions, from feature channels to normalized (row, col)
//! coordinates. The residual MSE measures how much absolute position the
//! features encode: more position information gives a lower loss.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

/// Normalized coordinate target: channel 0 is row / (H-1), channel 1 is
/// col / (W-1); both span [0, 1] exactly.
#[derive(Clone, Debug)]
pub struct PositionMap {
    map: FeatureMap,
}

impl PositionMap {
    pub fn as_feature_map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }

    pub fn width(&self) -> usize {
        self.map.width()
    }

    #[inline]
    pub fn get(&self, channel: usize, i: usize, j: usize) -> f32 {
        self.map.get(0, channel, i, j)
    }
}

pub fn make_position_map(h: usize, w: usize) -> Result<PositionMap> {
    if h < 2 || w < 2 {
        return Err(Error::InvalidArgument(format!(
            "position map needs H, W >= 2, got {h}x{w}"
        )));
    }
    let map = FeatureMap::from_fn(1, 2, h, w, |_, c, i, j| {
        if c == 0 {
            i as f32 / (h - 1) as f32
        } else {
            j as f32 / (w - 1) as f32
        }
    })?;
    Ok(PositionMap { map })
}

/// One affine map shared across positions: channels -> 2 coordinates.
#[derive(Clone, Debug)]
pub struct ProbeModel {
    channels: usize,
    weight: Vec<f64>, // (2, C) row-major
    bias: [f64; 2],
}

impl ProbeModel {
    pub fn zeros(channels: usize) -> Self {
        Self {
            channels,
            weight: vec![0.0; 2 * channels],
            bias: [0.0; 2],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn weight(&self, out: usize, channel: usize) -> f64 {
        self.weight[out * self.channels + channel]
    }

    pub fn bias(&self, out: usize) -> f64 {
        self.bias[out]
    }

    /// Predict (row, col) coordinates at one spatial position.
    pub fn predict(&self, features: &FeatureMap, i: usize, j: usize) -> (f64, f64) {
        let mut out = [self.bias[0], self.bias[1]];
        for c in 0..self.channels {
            let v = features.get(0, c, i, j) as f64;
            out[0] += self.weight[c] * v;
            out[1] += self.weight[self.channels + c] * v;
        }
        (out[0], out[1])
    }
}

/// Rectangular evaluation region in feature cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Region {
    pub fn new(top: usize, left: usize, height: usize, width: usize) -> Self {
        Self {
            top,
            left,
            height,
            width,
        }
    }

    pub fn full(h: usize, w: usize) -> Self {
        Self::new(0, 0, h, w)
    }

    /// Centered square of side `side` inside an `h` x `w` map.
    pub fn central(h: usize, w: usize, side: usize) -> Self {
        Self::new((h - side) / 2, (w - side) / 2, side, side)
    }

    fn validate(&self, h: usize, w: usize) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument("empty region".into()));
        }
        if self.top + self.height > h || self.left + self.width > w {
            return Err(Error::InvalidArgument(format!(
                "region {self:?} exceeds {h}x{w} map"
            )));
        }
        Ok(())
    }
}

/// Iterative solver choices. The closed form is the reference oracle; Adam
/// mirrors the training protocol (full-batch, MSE, zero init).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    ClosedForm {
        ridge: f64,
    },
    Adam {
        lr: f64,
        iterations: usize,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Sgd {
        lr: f64,
        iterations: usize,
    },
}

impl Solver {
    pub fn closed_form() -> Self {
        Solver::ClosedForm { ridge: 1e-8 }
    }

    pub fn adam(lr: f64, iterations: usize) -> Self {
        Solver::Adam {
            lr,
            iterations,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Protocol default: lr 1e-4 (paired with 50k iterations in the original
    /// protocol; the desk default runs 5k).
    pub fn default_adam() -> Self {
        Solver::adam(1e-4, 5000)
    }
}

/// Fit configuration; the loss is always MSE.
#[derive(Clone, Copy, Debug)]
pub struct FitConfig {
    pub solver: Solver,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            solver: Solver::closed_form(),
        }
    }
}

/// Fit output: the model, its whole-map loss, per-region losses recorded by
/// the caller, and the loss curve for iterative fits.
#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub model: ProbeModel,
    pub loss: f64,
    pub region_losses: BTreeMap<Region, f64>,
    pub loss_curve: Option<Vec<f64>>,
}

fn check_probe_inputs(features: &FeatureMap, target: &PositionMap) -> Result<(usize, usize, usize)> {
    let (b, c, h, w) = features.dims();
    if b != 1 {
        return Err(Error::ShapeMismatch(format!(
            "probe expects batch 1, got {b}"
        )));
    }
    if h != target.height() || w != target.width() {
        return Err(Error::ShapeMismatch(format!(
            "features {h}x{w} vs target {}x{}",
            target.height(),
            target.width()
        )));
    }
    Ok((c, h, w))
}

fn mean_squared_error(
    model: &ProbeModel,
    features: &FeatureMap,
    target: &PositionMap,
    region: Region,
) -> f64 {
    let mut acc = 0.0f64;
    for i in region.top..region.top + region.height {
        for j in region.left..region.left + region.width {
            let (pr, pc) = model.predict(features, i, j);
            let er = pr - target.get(0, i, j) as f64;
            let ec = pc - target.get(1, i, j) as f64;
            acc += er * er + ec * ec;
        }
    }
    acc / (2.0 * (region.height * region.width) as f64)
}

/// Solve `a x = rhs` for multiple right-hand sides in place; Gaussian
/// elimination with partial pivoting. `a` is n x n row-major.
fn solve_dense(a: &mut [f64], rhs: &mut [Vec<f64>], n: usize) -> Result<()> {
    let scale = a
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (mut pivot_row, mut pivot_mag) = (col, a[perm[col] * n + col].abs());
        for row in col + 1..n {
            let mag = a[perm[row] * n + col].abs();
            if mag > pivot_mag {
                pivot_row = row;
                pivot_mag = mag;
            }
        }
        if pivot_mag < 1e-12 * scale {
            return Err(Error::SingularSystem);
        }
        perm.swap(col, pivot_row);
        let p = perm[col];
        let pivot = a[p * n + col];
        for row in col + 1..n {
            let r = perm[row];
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= factor * a[p * n + k];
            }
            for v in rhs.iter_mut() {
                v[r] -= factor * v[p];
            }
        }
    }
    for v in rhs.iter_mut() {
        let mut solved = vec![0.0f64; n];
        for col in (0..n).rev() {
            let p = perm[col];
            let mut sum = v[p];
            for k in col + 1..n {
                sum -= a[p * n + k] * solved[k];
            }
            solved[col] = sum / a[p * n + col];
        }
        v.copy_from_slice(&solved);
    }
    Ok(())
}

/// Exact ridge regression: minimizes MSE + epsilon * ||weight||^2 (the bias
/// is not penalized). This is the global optimum the iterative solvers are
/// checked against.
pub fn fit_closed_form(
    features: &FeatureMap,
    target: &PositionMap,
    epsilon: f64,
) -> Result<ProbeResult> {
    let (c, h, w) = check_probe_inputs(features, target)?;
    if epsilon < 0.0 {
        return Err(Error::InvalidArgument("ridge epsilon must be >= 0".into()));
    }
    let dim = c + 1;
    let mut a = vec![0.0f64; dim * dim];
    let mut rhs = vec![vec![0.0f64; dim], vec![0.0f64; dim]];
    let mut x = vec![0.0f64; dim];
    for i in 0..h {
        for j in 0..w {
            for (ch, slot) in x.iter_mut().enumerate().take(c) {
                *slot = features.get(0, ch, i, j) as f64;
            }
            x[c] = 1.0;
            for r in 0..dim {
                let xr = x[r];
                if xr == 0.0 {
                    continue;
                }
                for k in r..dim {
                    a[r * dim + k] += xr * x[k];
                }
            }
            let y = [target.get(0, i, j) as f64, target.get(1, i, j) as f64];
            for out in 0..2 {
                for r in 0..dim {
                    rhs[out][r] += x[r] * y[out];
                }
            }
        }
    }
    // Mirror the upper triangle and apply the ridge to weight rows only.
    for r in 0..dim {
        for k in 0..r {
            a[r * dim + k] = a[k * dim + r];
        }
    }
    let n = (h * w) as f64;
    for r in 0..c {
        a[r * dim + r] += epsilon * n;
    }
    solve_dense(&mut a, &mut rhs, dim)?;

    let mut model = ProbeModel::zeros(c);
    for out in 0..2 {
        for ch in 0..c {
            model.weight[out * c + ch] = rhs[out][ch];
        }
        model.bias[out] = rhs[out][c];
    }
    let loss = mean_squared_error(&model, features, target, Region::full(h, w));
    if !loss.is_finite() {
        return Err(Error::Numeric("closed-form loss is not finite".into()));
    }
    Ok(ProbeResult {
        model,
        loss,
        region_losses: BTreeMap::new(),
        loss_curve: None,
    })
}

/// Full-batch gradient descent on the MSE from a zero-initialized model.
/// Deterministic; returns the final loss and the per-iteration loss curve.
pub fn fit_iterative(
    features: &FeatureMap,
    target: &PositionMap,
    config: &FitConfig,
) -> Result<ProbeResult> {
    let (c, h, w) = check_probe_inputs(features, target)?;
    let (lr, iterations) = match config.solver {
        Solver::ClosedForm { .. } => {
            return Err(Error::InvalidArgument(
                "fit_iterative needs an Adam or SGD solver".into(),
            ))
        }
        Solver::Adam { lr, iterations, .. } => (lr, iterations),
        Solver::Sgd { lr, iterations } => (lr, iterations),
    };
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }
    if lr < 0.0 {
        return Err(Error::InvalidArgument("learning rate must be >= 0".into()));
    }

    let n = (h * w) as f64;
    let dim = 2 * c + 2; // all weights then both biases
    let mut params = vec![0.0f64; dim];
    let mut grad = vec![0.0f64; dim];
    let mut m = vec![0.0f64; dim];
    let mut v = vec![0.0f64; dim];
    let mut curve = Vec::with_capacity(iterations);

    for t in 1..=iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss_acc = 0.0f64;
        for i in 0..h {
            for j in 0..w {
                let mut pred = [params[dim - 2], params[dim - 1]];
                for ch in 0..c {
                    let fv = features.get(0, ch, i, j) as f64;
                    pred[0] += params[ch] * fv;
                    pred[1] += params[c + ch] * fv;
                }
                let err = [
                    pred[0] - target.get(0, i, j) as f64,
                    pred[1] - target.get(1, i, j) as f64,
                ];
                loss_acc += err[0] * err[0] + err[1] * err[1];
                for ch in 0..c {
                    let fv = features.get(0, ch, i, j) as f64;
                    grad[ch] += err[0] * fv;
                    grad[c + ch] += err[1] * fv;
                }
                grad[dim - 2] += err[0];
                grad[dim - 1] += err[1];
            }
        }
        let loss = loss_acc / (2.0 * n);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "iterative fit diverged at iteration {t}"
            )));
        }
        curve.push(loss);
        // d(MSE)/d(param): the factor 2 from the square cancels the mean
        // over the two output channels.
        grad.iter_mut().for_each(|g| *g /= n);

        match config.solver {
            Solver::Sgd { .. } => {
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= lr * g;
                }
            }
            Solver::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => {
                let bc1 = 1.0 - beta1.powi(t as i32);
                let bc2 = 1.0 - beta2.powi(t as i32);
                for k in 0..dim {
                    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
                    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
                    let m_hat = m[k] / bc1;
                    let v_hat = v[k] / bc2;
                    params[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
            Solver::ClosedForm { .. } => unreachable!(),
        }
    }

    let mut model = ProbeModel::zeros(c);
    for out in 0..2 {
        for ch in 0..c {
            model.weight[out * c + ch] = params[out * c + ch];
        }
        model.bias[out] = params[dim - 2 + out];
    }
    let loss = mean_squared_error(&model, features, target, Region::full(h, w));
    if !loss.is_finite() {
        return Err(Error::Numeric("final iterative loss is not finite".into()));
    }
    Ok(ProbeResult {
        model,
        loss,
        region_losses: BTreeMap::new(),
        loss_curve: Some(curve),
    })
}

/// MSE of an already-fitted model restricted to one region's positions.
pub fn eval_region(
    result: &ProbeResult,
    features: &FeatureMap,
    target: &PositionMap,
    region: Region,
) -> Result<f64> {
    let (_, h, w) = check_probe_inputs(features, target)?;
    region.validate(h, w)?;
    Ok(mean_squared_error(&result.model, features, target, region))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featnet::seeded_latent;

    fn random_features(seed: u64, c: usize, h: usize, w: usize) -> FeatureMap {
        seeded_latent(seed, c, h, w, 0.0, 1.0).unwrap()
    }

    /// Empirical variance of the target map, channel-averaged: the loss of
    /// the best constant predictor.
    fn target_variance(target: &PositionMap) -> f64 {
        let (h, w) = (target.height(), target.width());
        let n = (h * w) as f64;
        let mut var = 0.0;
        for ch in 0..2 {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for i in 0..h {
                for j in 0..w {
                    let v = target.get(ch, i, j) as f64;
                    sum += v;
                    sum2 += v * v;
                }
            }
            let mean = sum / n;
            var += sum2 / n - mean * mean;
        }
        var / 2.0
    }

    #[test]
    fn position_map_examples() {
        let m = make_position_map(2, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.get(0, i, j), i as f32);
                assert_eq!(m.get(1, i, j), j as f32);
            }
        }
        let m3 = make_position_map(3, 5).unwrap();
        assert_eq!(m3.get(0, 0, 0), 0.0);
        assert_eq!(m3.get(0, 1, 0), 0.5);
        assert_eq!(m3.get(0, 2, 0), 1.0);
        assert_eq!(m3.get(1, 2, 4), 1.0);
        assert!(make_position_map(1, 5).is_err());
    }

    #[test]
    fn identity_features_are_recovered() {
        let target = make_position_map(16, 16).unwrap();
        let features = target.as_feature_map().clone();
        let fit = fit_closed_form(&features, &target, 1e-8).unwrap();
        assert!(fit.loss <= 1e-10, "loss {}", fit.loss);
    }

    #[test]
    fn random_feature_floor_is_near_target_variance() {
        let target = make_position_map(64, 64).unwrap();
        let features = random_features(100, 8, 64, 64);
        let fit = fit_closed_form(&features, &target, 1e-8).unwrap();
        assert!(
            (0.06..=0.09).contains(&fit.loss),
            "random-feature loss {} outside [0.06, 0.09]",
            fit.loss
        );
    }

    #[test]
    fn constant_features_regress_to_the_mean() {
        let target = make_position_map(12, 10).unwrap();
        let features = FeatureMap::new(1, 3, 12, 10, vec![2.5; 3 * 120]).unwrap();
        let fit = fit_closed_form(&features, &target, 1e-8).unwrap();
        let var = target_variance(&target);
        assert!((fit.loss - var).abs() < 1e-9, "{} vs {var}", fit.loss);
    }

    #[test]
    fn singular_system_without_ridge_is_reported() {
        let target = make_position_map(8, 8).unwrap();
        let features = FeatureMap::new(1, 2, 8, 8, vec![1.0; 2 * 64]).unwrap();
        match fit_closed_form(&features, &target, 0.0) {
            Err(Error::SingularSystem) => {}
            other => panic!("expected SingularSystem, got {other:?}"),
        }
    }

    #[test]
    fn adam_converges_on_the_identity_case() {
        let target = make_position_map(24, 24).unwrap();
        let features = target.as_feature_map().clone();
        let cfg = FitConfig {
            solver: Solver::adam(1e-3, 5000),
        };
        let fit = fit_iterative(&features, &target, &cfg).unwrap();
        assert!(fit.loss <= 1e-4, "adam loss {}", fit.loss);
        let curve = fit.loss_curve.as_ref().unwrap();
        assert_eq!(curve.len(), 5000);
        assert!(curve[0] > fit.loss);
    }

    #[test]
    fn iterative_never_beats_the_closed_form() {
        let target = make_position_map(20, 20).unwrap();
        for seed in 0..3 {
            let features = random_features(seed, 5, 20, 20);
            let cf = fit_closed_form(&features, &target, 1e-8).unwrap();
            let it = fit_iterative(
                &features,
                &target,
                &FitConfig {
                    solver: Solver::adam(1e-3, 800),
                },
            )
            .unwrap();
            assert!(it.loss >= cf.loss - 1e-6, "{} < {}", it.loss, cf.loss);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_the_zero_model() {
        let target = make_position_map(10, 10).unwrap();
        let features = random_features(4, 3, 10, 10);
        let fit = fit_iterative(
            &features,
            &target,
            &FitConfig {
                solver: Solver::Sgd {
                    lr: 0.0,
                    iterations: 50,
                },
            },
        )
        .unwrap();
        // Zero model predicts 0 everywhere: loss = mean(y^2).
        let mut expect = 0.0;
        for ch in 0..2 {
            for i in 0..10 {
                for j in 0..10 {
                    let y = target.get(ch, i, j) as f64;
                    expect += y * y;
                }
            }
        }
        expect /= 200.0;
        assert!((fit.loss - expect).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_an_error_naming_the_iteration() {
        let target = make_position_map(10, 10).unwrap();
        let features = random_features(4, 3, 10, 10);
        let out = fit_iterative(
            &features,
            &target,
            &FitConfig {
                solver: Solver::Sgd {
                    lr: 1e12,
                    iterations: 500,
                },
            },
        );
        match out {
            Err(Error::Numeric(msg)) => assert!(msg.contains("iteration")),
            other => panic!("expected divergence error, got {other:?}"),
        }
    }

    #[test]
    fn region_eval_decomposes_by_area() {
        let target = make_position_map(16, 16).unwrap();
        let features = random_features(7, 4, 16, 16);
        let fit = fit_closed_form(&features, &target, 1e-8).unwrap();
        let full = eval_region(&fit, &features, &target, Region::full(16, 16)).unwrap();
        assert!((full - fit.loss).abs() < 1e-12);

        let topr = Region::new(0, 0, 6, 16);
        let botr = Region::new(6, 0, 10, 16);
        let lt = eval_region(&fit, &features, &target, topr).unwrap();
        let lb = eval_region(&fit, &features, &target, botr).unwrap();
        let weighted = (6.0 * lt + 10.0 * lb) / 16.0;
        assert!((weighted - fit.loss).abs() < 1e-9);
    }

    #[test]
    fn bad_regions_are_rejected() {
        let target = make_position_map(8, 8).unwrap();
        let features = random_features(1, 2, 8, 8);
        let fit = fit_closed_form(&features, &target, 1e-8).unwrap();
        assert!(eval_region(&fit, &features, &target, Region::new(0, 0, 0, 4)).is_err());
        assert!(eval_region(&fit, &features, &target, Region::new(4, 4, 8, 8)).is_err());
    }

    #[test]
    fn loss_is_invariant_to_channel_permutation() {
        let target = make_position_map(12, 12).unwrap();
        let features = random_features(9, 5, 12, 12);
        let permuted = FeatureMap::from_fn(1, 5, 12, 12, |_, c, i, j| {
            features.get(0, (c + 2) % 5, i, j)
        })
        .unwrap();
        let a = fit_closed_form(&features, &target, 0.0).unwrap();
        let b = fit_closed_form(&permuted, &target, 0.0).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-9);
    }

    #[test]
    fn loss_is_invariant_to_feature_scaling_without_ridge() {
        let target = make_position_map(12, 12).unwrap();
        let features = random_features(3, 4, 12, 12);
        let scaled = features.map(|v| v * 37.5).unwrap();
        let a = fit_closed_form(&features, &target, 0.0).unwrap();
        let b = fit_closed_form(&scaled, &target, 0.0).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-9);
    }
}
