//! Synthetic correspondences with a known pose and controlled outliers.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use tear_core::{Error, PointPairSet, PoseEstimate, Result};

/// Threshold multiplier applied to the noise level by default.
pub const XI_PER_SIGMA: f64 = 5.54;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub outlier_ratio: f64,
    /// Standard deviation of the inlier noise, per axis.
    pub sigma: f64,
    /// Standard deviation of outlier targets, per axis.
    pub tau: f64,
    /// Threshold for every pair; `None` uses `5.54·sigma`.
    pub xi: Option<f64>,
    pub seed: u64,
    /// Rescale the source cloud into `[0, 1]³` before pairing.
    pub unit_cube: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            outlier_ratio: 0.0,
            sigma: 0.01,
            tau: 1.67,
            xi: None,
            seed: 0,
            unit_cube: false,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return Err(Error::InvalidInput(format!(
                "outlier ratio {} is outside [0, 1)",
                self.outlier_ratio
            )));
        }
        if !(self.sigma >= 0.0 && self.tau >= 0.0) {
            return Err(Error::InvalidInput(
                "sigma and tau must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        self.xi.unwrap_or(XI_PER_SIGMA * self.sigma)
    }

    pub fn outlier_count(&self) -> usize {
        (self.n as f64 * self.outlier_ratio).round() as usize
    }

    /// The same configuration with the seed of trial `trial`.
    pub fn for_trial(&self, trial: u64) -> Self {
        Self {
            seed: trial_seed(self.seed, trial),
            ..*self
        }
    }
}

/// Mixes a base seed with a trial index so each trial owns its stream.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pose: PoseEstimate,
    pub inlier_mask: Vec<bool>,
}

impl GroundTruth {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }
}

fn gaussian3<R: Rng>(rng: &mut R, scale: f64) -> Vector3<f64> {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    Vector3::new(draw(), draw(), draw()) * scale
}

/// Draws a uniformly random rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> nalgebra::Matrix3<f64> {
    loop {
        let mut draw = || -> f64 { StandardNormal.sample(rng) };
        let q = Quaternion::new(draw(), draw(), draw(), draw());
        if q.norm() > 1e-9 {
            return *UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .matrix();
        }
    }
}

/// Generates `n` pairs: `x_i ~ N(0, I)`, inlier targets `R*x_i + t* + ε_i`
/// with `ε_i ~ N(0, σ²I)`, and a random subset of targets replaced by
/// `N(0, τ²I)` draws. Sources of replaced pairs are kept.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<(PointPairSet, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;

    let mut x: Vec<Vector3<f64>> = (0..n).map(|_| gaussian3(&mut rng, 1.0)).collect();
    if cfg.unit_cube {
        fit_unit_cube(&mut x);
    }

    let rotation = random_rotation(&mut rng);
    let translation = Vector3::new(
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
    );
    let noise = Normal::new(0.0, cfg.sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut y: Vec<Vector3<f64>> = x
        .iter()
        .map(|p| {
            let e = Vector3::new(
                noise.sample(&mut rng),
                noise.sample(&mut rng),
                noise.sample(&mut rng),
            );
            rotation * p + translation + e
        })
        .collect();

    let mut inlier_mask = vec![true; n];
    let mut outliers = index::sample(&mut rng, n, cfg.outlier_count()).into_vec();
    outliers.sort_unstable();
    for i in outliers {
        y[i] = gaussian3(&mut rng, cfg.tau);
        inlier_mask[i] = false;
    }

    let pairs = PointPairSet::with_uniform_xi(x, y, cfg.threshold())?;
    Ok((
        pairs,
        GroundTruth {
            pose: PoseEstimate {
                rotation,
                translation,
            },
            inlier_mask,
        },
    ))
}

/// Shifts and uniformly scales points so they fill `[0, 1]³` along the
/// widest axis.
fn fit_unit_cube(points: &mut [Vector3<f64>]) {
    let Some(first) = points.first() else { return };
    let (mut lo, mut hi) = (*first, *first);
    for p in points.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = (hi - lo).max();
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    for p in points.iter_mut() {
        *p = (*p - lo) * scale;
    }
}
