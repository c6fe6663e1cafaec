//! Second-stage search over the rotation row orthogonal to `r̂1`.
//!
//! Fixing `r̂1` leaves a great circle of admissible `r2`. It is swept by
//! `alpha`, with `beta` pinned by `sinβ·g(α) + r̂13·cosβ = 0` where
//! `g(α) = r̂11·cosα + r̂12·sinα`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;

use super::first::{FirstStageLoss, ScalarStage, SpherePoint};
use super::{SearchStats, SolverConfig, StageSolution};
use crate::bnb::{run_bnb, BranchProblem};
use crate::error::{Error, Result};
use crate::geometry::{
    sphere_point, AlphaInterval, AngleBox, PointPairSet, ScalarInterval, UnitVector3,
};
use crate::scalar::{trunc_abs_point_below, Bounded};

const BETA_PAD: f64 = 1e-12;

/// The constraint curve `beta(alpha)` for a fixed first row.
#[derive(Debug, Clone, Copy)]
struct Circle {
    r11: f64,
    r12: f64,
    r13: f64,
}

impl Circle {
    fn new(r1: &UnitVector3) -> Self {
        let v = r1.vector();
        Self {
            r11: v.x,
            r12: v.y,
            r13: v.z,
        }
    }

    fn g(&self, alpha: f64) -> f64 {
        let (s, c) = alpha.sin_cos();
        self.r11 * c + self.r12 * s
    }

    /// `beta` in `[0, π]` solving the constraint for a given `g(α)`.
    ///
    /// For `r̂13 ≠ 0` this is `atan2(|r̂13|, −sign(r̂13)·g)`, monotone in `g`.
    /// When `r̂13 = 0` the constraint reads `sinβ·g = 0`: any `beta` works if
    /// `g = 0` and we take the equator; otherwise `beta` must be a pole and we
    /// take `0`. In that case the curve only reaches the circle at two
    /// azimuths, which is the price of this parameterization.
    fn beta_of_g(&self, g: f64) -> f64 {
        if self.r13 > 0.0 {
            self.r13.atan2(-g)
        } else if self.r13 < 0.0 {
            (-self.r13).atan2(g)
        } else if g == 0.0 {
            FRAC_PI_2
        } else {
            0.0
        }
    }

    fn beta(&self, alpha: f64) -> f64 {
        self.beta_of_g(self.g(alpha))
    }

    fn g_range(&self, iv: &ScalarInterval) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut take = |a: f64| {
            let g = self.g(a);
            lo = lo.min(g);
            hi = hi.max(g);
        };
        take(iv.lo);
        take(iv.hi);
        // g′ vanishes where tan α = r̂12 / r̂11, once every half turn.
        if self.r11 != 0.0 || self.r12 != 0.0 {
            let first = self.r12.atan2(self.r11);
            for k in -1..=2 {
                let a = first + k as f64 * PI;
                if iv.lo < a && a < iv.hi {
                    take(a);
                }
            }
        }
        (lo, hi)
    }

    fn beta_range(&self, iv: &ScalarInterval) -> ScalarInterval {
        let (glo, ghi) = self.g_range(iv);
        let range = if self.r13 == 0.0 {
            if glo <= 0.0 && 0.0 <= ghi {
                if glo == ghi {
                    ScalarInterval::point(FRAC_PI_2)
                } else {
                    ScalarInterval {
                        lo: 0.0,
                        hi: FRAC_PI_2,
                    }
                }
            } else {
                ScalarInterval::point(0.0)
            }
        } else {
            ScalarInterval::hull(self.beta_of_g(glo), self.beta_of_g(ghi))
        };
        ScalarInterval {
            lo: (range.lo - BETA_PAD).max(0.0),
            hi: (range.hi + BETA_PAD).min(PI),
        }
    }
}

/// Interval covering `beta(alpha)` for every `alpha` in `alpha_iv`.
pub fn beta_of_alpha_range(r1_hat: &UnitVector3, alpha_iv: &AlphaInterval) -> ScalarInterval {
    Circle::new(r1_hat).beta_range(&alpha_iv.0)
}

/// The admissible second row at azimuth `alpha`.
pub fn second_row_at(r1_hat: &UnitVector3, alpha: f64) -> Vector3<f64> {
    sphere_point(alpha, Circle::new(r1_hat).beta(alpha))
}

struct SecondStage {
    circle: Circle,
    inner: ScalarStage,
}

impl BranchProblem for SecondStage {
    type Branch = AlphaInterval;
    type Point = SpherePoint;

    fn lower_bound(&self, branch: &AlphaInterval) -> Result<f64> {
        let bx = AngleBox {
            alpha: branch.0,
            beta: self.circle.beta_range(&branch.0),
        };
        Ok(self.inner.lower(&bx)?.value)
    }

    fn upper_bound(&self, branch: &AlphaInterval) -> Result<(f64, SpherePoint)> {
        let alpha = branch.0.mid();
        let beta = self.circle.beta(alpha);
        let s = self.inner.evaluate(&sphere_point(alpha, beta))?;
        Ok((
            s.value,
            SpherePoint {
                alpha,
                beta,
                t: s.minimizer,
            },
        ))
    }

    fn lower_bound_below(&self, branch: &AlphaInterval, cutoff: f64) -> Result<f64> {
        let bx = AngleBox {
            alpha: branch.0,
            beta: self.circle.beta_range(&branch.0),
        };
        Ok(self.inner.lower_below(&bx, cutoff)?.value())
    }

    fn upper_bound_below(&self, branch: &AlphaInterval, cutoff: f64) -> Result<(f64, SpherePoint)> {
        let alpha = branch.0.mid();
        let beta = self.circle.beta(alpha);
        let a = self.inner.anchors(&sphere_point(alpha, beta));
        Ok(
            match trunc_abs_point_below(&a, self.inner.thresholds(), cutoff)? {
                Bounded::Exact(s) => (
                    s.value,
                    SpherePoint {
                        alpha,
                        beta,
                        t: s.minimizer,
                    },
                ),
                Bounded::AtLeast(v) => (
                    v,
                    SpherePoint {
                        alpha,
                        beta,
                        t: f64::NAN,
                    },
                ),
            },
        )
    }

    fn subdivide(&self, branch: &AlphaInterval) -> Vec<AlphaInterval> {
        branch.halves().to_vec()
    }

    // A narrow azimuth range can still span a wide polar range where the
    // curve is steep, so both widths have to fall below the resolution.
    fn is_resolved(&self, branch: &AlphaInterval, resolution: f64) -> bool {
        branch.0.width() < resolution && self.circle.beta_range(&branch.0).width() < resolution
    }
}

/// Minimizes the second-stage truncated absolute loss over the first-stage
/// inliers, with `r2` constrained orthogonal to `r1_hat`.
///
/// `xi2[k]` is the threshold of pair `inliers[k]`; the returned inliers are
/// indices into `pairs`.
pub fn solve_tear2(
    pairs: &PointPairSet,
    inliers: &[usize],
    r1_hat: &UnitVector3,
    xi2: &[f64],
    cfg: &SolverConfig,
) -> Result<StageSolution> {
    if inliers.is_empty() {
        return Err(Error::InsufficientInliers {
            found: 0,
            needed: 1,
        });
    }
    if inliers.len() != xi2.len() {
        return Err(Error::InvalidInput(format!(
            "{} inliers but {} second-stage thresholds",
            inliers.len(),
            xi2.len()
        )));
    }
    if let Some(&i) = inliers.iter().find(|&&i| i >= pairs.len()) {
        return Err(Error::InvalidInput(format!(
            "inlier index {i} out of range"
        )));
    }
    let x = inliers.iter().map(|&i| pairs.x()[i]).collect();
    let y = inliers.iter().map(|&i| pairs.y()[i].y).collect();
    let stage = SecondStage {
        circle: Circle::new(r1_hat),
        inner: ScalarStage::from_parts(FirstStageLoss::Tear, x, y, xi2.to_vec()),
    };
    let bnb = cfg.bnb(FirstStageLoss::Tear, stage.inner.default_scale());
    let report = run_bnb(&stage, AlphaInterval::full(), &bnb)?;
    let p = report.best_point;
    let r = UnitVector3::normalize(sphere_point(p.alpha, p.beta))?;
    let kept = stage
        .inner
        .inliers(r.vector(), p.t)
        .into_iter()
        .map(|k| inliers[k])
        .collect();
    Ok(StageSolution {
        r,
        t: p.t,
        value: report.best_value,
        inliers: kept,
        stats: SearchStats::from_report(&report),
        trace: report.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_first_row_forces_equator() {
        let r1 = UnitVector3::new(Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let iv = AlphaInterval::new(ScalarInterval::new(0.3, 2.0).unwrap()).unwrap();
        let b = beta_of_alpha_range(&r1, &iv);
        assert!((b.lo - FRAC_PI_2).abs() < 1e-11 && (b.hi - FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn point_interval_gives_point_range() {
        let r1 = UnitVector3::normalize(Vector3::new(0.3, -0.5, 0.8)).unwrap();
        let iv = AlphaInterval::new(ScalarInterval::point(1.1)).unwrap();
        assert!(beta_of_alpha_range(&r1, &iv).width() <= 2.0 * BETA_PAD + 1e-15);
    }

    #[test]
    fn second_row_is_orthogonal() {
        let r1 = UnitVector3::normalize(Vector3::new(0.3, -0.5, -0.8)).unwrap();
        for k in 0..100 {
            let r2 = second_row_at(&r1, k as f64 * 0.0628);
            assert!(r2.dot(r1.vector()).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_first_row_degenerates_to_poles() {
        let r1 = UnitVector3::new(Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let r2 = second_row_at(&r1, 0.5);
        assert!((r2 - Vector3::z()).norm() < 1e-15);
        let r2 = second_row_at(&r1, FRAC_PI_2);
        assert!(r2.dot(r1.vector()).abs() < 1e-15);
    }
}
