//! First-stage search over the first rotation row and translation entry.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::{SearchStats, SolverConfig, StageSolution};
use crate::bnb::{run_bnb, BranchProblem};
use crate::error::{Error, Result};
use crate::geometry::{
    sphere_point, AngleBox, BoxTrig, OffsetCoeffs, PointPairSet, ScalarInterval, UnitVector3,
};
use crate::scalar::{
    stab_region, trunc_abs_interval, trunc_abs_interval_below, trunc_abs_point,
    trunc_abs_point_below, trunc_sq_interval, trunc_sq_point, Bounded, ScalarSolution,
};

/// Below this many pairs the per-pair maps run on the calling thread.
pub(crate) const PAR_MIN: usize = 4096;

/// Robust loss applied to the scalar residuals `y_i1 − r1ᵀx_i − t1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FirstStageLoss {
    /// Truncated absolute residuals.
    Tear,
    /// Consensus maximization, searched as `N − consensus`.
    Consensus,
    /// Truncated squared residuals.
    TruncatedSquares,
}

impl FirstStageLoss {
    /// Scale used for the default optimality gap.
    fn objective_scale(&self, xi: &[f64]) -> f64 {
        match self {
            Self::Tear => xi.iter().sum(),
            Self::TruncatedSquares => xi.iter().map(|x| x * x).sum(),
            Self::Consensus => 1.0,
        }
    }
}

/// A point of the `(alpha, beta)` rectangle together with the optimal
/// translation entry for the unit vector it encodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
}

/// Bounds for one coordinate of the residual over angle boxes.
///
/// The same type serves the first stage (coordinate 0 of every pair) and
/// the second stage (coordinate 1 of the first-stage inliers).
pub struct ScalarStage {
    loss: FirstStageLoss,
    x: Vec<Vector3<f64>>,
    y: Vec<f64>,
    xi: Vec<f64>,
    centroid: Vector3<f64>,
    coeffs: Vec<OffsetCoeffs>,
}

impl ScalarStage {
    pub fn new(pairs: &PointPairSet, loss: FirstStageLoss) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInstance);
        }
        let y = pairs.y().iter().map(|p| p.x).collect();
        Ok(Self::from_parts(
            loss,
            pairs.x().to_vec(),
            y,
            pairs.xi().to_vec(),
        ))
    }

    pub(crate) fn from_parts(
        loss: FirstStageLoss,
        x: Vec<Vector3<f64>>,
        y: Vec<f64>,
        xi: Vec<f64>,
    ) -> Self {
        // Moving the source points to their centroid only shifts the
        // translation, but it shrinks the offset ranges over a box.
        let centroid = x.iter().sum::<Vector3<f64>>() / x.len().max(1) as f64;
        let coeffs = x
            .iter()
            .map(|x| OffsetCoeffs::new(&(x - centroid)))
            .collect();
        Self {
            loss,
            x,
            y,
            xi,
            centroid,
            coeffs,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub(crate) fn thresholds(&self) -> &[f64] {
        &self.xi
    }

    pub(crate) fn default_scale(&self) -> f64 {
        self.loss.objective_scale(&self.xi)
    }

    /// `y_i − rᵀx_i` for every pair.
    pub fn anchors(&self, r: &Vector3<f64>) -> Vec<f64> {
        let f = |(x, y): (&Vector3<f64>, &f64)| y - r.dot(x);
        if self.len() >= PAR_MIN {
            self.x.par_iter().zip(&self.y).map(f).collect()
        } else {
            self.x.iter().zip(&self.y).map(f).collect()
        }
    }

    /// Mean of the source points.
    pub fn centroid(&self) -> Vector3<f64> {
        self.centroid
    }

    /// Per-pair intervals containing `y_i − rᵀ(x_i − c)` over `bx`, with `c`
    /// the [centroid](Self::centroid). The translation absorbs `rᵀc`.
    pub fn offsets(&self, bx: &AngleBox) -> Vec<ScalarInterval> {
        let trig = BoxTrig::new(bx);
        let f = |(c, y): (&OffsetCoeffs, &f64)| c.range_in(*y, &trig);
        if self.len() >= PAR_MIN {
            self.coeffs.par_iter().zip(&self.y).map(f).collect()
        } else {
            self.coeffs.iter().zip(&self.y).map(f).collect()
        }
    }

    /// Exact objective over `t` for the fixed unit vector `r`.
    pub fn evaluate(&self, r: &Vector3<f64>) -> Result<ScalarSolution> {
        let a = self.anchors(r);
        match self.loss {
            FirstStageLoss::Tear => trunc_abs_point(&a, &self.xi),
            FirstStageLoss::TruncatedSquares => trunc_sq_point(&a, &self.xi),
            FirstStageLoss::Consensus => {
                let windows: Vec<_> = a
                    .iter()
                    .zip(&self.xi)
                    .map(|(&a, &x)| ScalarInterval {
                        lo: a - x,
                        hi: a + x,
                    })
                    .collect();
                let s = stab_region(&windows);
                // The middle of the deepest region is safely inside every
                // window that covers it.
                Ok(ScalarSolution {
                    minimizer: s.region.mid(),
                    value: (self.len() - s.count) as f64,
                })
            }
        }
    }

    /// Upper bound: the exact objective at the center of `bx`.
    pub fn upper(&self, bx: &AngleBox) -> Result<ScalarSolution> {
        let (alpha, beta) = bx.center();
        self.evaluate(&sphere_point(alpha, beta))
    }

    /// Lower bound over `bx` through the relaxed interval problem. The
    /// minimizer is a translation for the centered source points.
    pub fn lower(&self, bx: &AngleBox) -> Result<ScalarSolution> {
        let b = self.offsets(bx);
        match self.loss {
            FirstStageLoss::Tear => trunc_abs_interval(&b, &self.xi),
            FirstStageLoss::TruncatedSquares => trunc_sq_interval(&b, &self.xi),
            FirstStageLoss::Consensus => {
                let widened: Vec<_> = b
                    .iter()
                    .zip(&self.xi)
                    .map(|(iv, &x)| ScalarInterval {
                        lo: iv.lo - x,
                        hi: iv.hi + x,
                    })
                    .collect();
                let s = stab_region(&widened);
                Ok(ScalarSolution {
                    minimizer: s.region.mid(),
                    value: (self.len() - s.count) as f64,
                })
            }
        }
    }

    /// [`Self::upper`], exact when below `cutoff`.
    pub fn upper_below(&self, bx: &AngleBox, cutoff: f64) -> Result<Bounded> {
        match self.loss {
            FirstStageLoss::Tear => {
                let (alpha, beta) = bx.center();
                trunc_abs_point_below(&self.anchors(&sphere_point(alpha, beta)), &self.xi, cutoff)
            }
            _ => Ok(Bounded::Exact(self.upper(bx)?)),
        }
    }

    /// [`Self::lower`], exact when below `cutoff`.
    pub fn lower_below(&self, bx: &AngleBox, cutoff: f64) -> Result<Bounded> {
        match self.loss {
            FirstStageLoss::Tear => trunc_abs_interval_below(&self.offsets(bx), &self.xi, cutoff),
            _ => Ok(Bounded::Exact(self.lower(bx)?)),
        }
    }

    /// Indices whose residual `|y_i − rᵀx_i − t|` is within `ξ_i`.
    pub fn inliers(&self, r: &Vector3<f64>, t: f64) -> Vec<usize> {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.xi)
            .enumerate()
            .filter(|(_, ((x, y), xi))| (*y - r.dot(x) - t).abs() <= **xi)
            .map(|(i, _)| i)
            .collect()
    }
}

impl BranchProblem for ScalarStage {
    type Branch = AngleBox;
    type Point = SpherePoint;

    fn lower_bound(&self, branch: &AngleBox) -> Result<f64> {
        Ok(self.lower(branch)?.value)
    }

    fn upper_bound(&self, branch: &AngleBox) -> Result<(f64, SpherePoint)> {
        let (alpha, beta) = branch.center();
        let s = self.upper(branch)?;
        Ok((
            s.value,
            SpherePoint {
                alpha,
                beta,
                t: s.minimizer,
            },
        ))
    }

    fn lower_bound_below(&self, branch: &AngleBox, cutoff: f64) -> Result<f64> {
        Ok(self.lower_below(branch, cutoff)?.value())
    }

    fn upper_bound_below(&self, branch: &AngleBox, cutoff: f64) -> Result<(f64, SpherePoint)> {
        let (alpha, beta) = branch.center();
        Ok(match self.upper_below(branch, cutoff)? {
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
        })
    }

    fn subdivide(&self, branch: &AngleBox) -> Vec<AngleBox> {
        branch.quadrants().to_vec()
    }

    fn is_resolved(&self, branch: &AngleBox, resolution: f64) -> bool {
        branch.alpha.width() < resolution && branch.beta.width() < resolution
    }
}

/// Upper bound of the first-stage absolute loss at the center of `bx`.
pub fn tear1_upper(pairs: &PointPairSet, bx: &AngleBox) -> Result<ScalarSolution> {
    ScalarStage::new(pairs, FirstStageLoss::Tear)?.upper(bx)
}

/// Lower bound of the first-stage absolute loss over `bx`.
pub fn tear1_lower(pairs: &PointPairSet, bx: &AngleBox) -> Result<ScalarSolution> {
    ScalarStage::new(pairs, FirstStageLoss::Tear)?.lower(bx)
}

/// Globally minimizes the chosen first-stage loss over `(r1, t1)`.
pub fn solve_first_stage(
    pairs: &PointPairSet,
    loss: FirstStageLoss,
    cfg: &SolverConfig,
) -> Result<StageSolution> {
    let stage = ScalarStage::new(pairs, loss)?;
    let bnb = cfg.bnb(loss, stage.default_scale());
    let report = run_bnb(&stage, AngleBox::sphere(), &bnb)?;
    let p = report.best_point;
    let r = UnitVector3::normalize(sphere_point(p.alpha, p.beta))?;
    let inliers = stage.inliers(r.vector(), p.t);
    Ok(StageSolution {
        r,
        t: p.t,
        value: report.best_value,
        inliers,
        stats: SearchStats::from_report(&report),
        trace: report.trace,
    })
}

pub fn solve_tear1(pairs: &PointPairSet, cfg: &SolverConfig) -> Result<StageSolution> {
    solve_first_stage(pairs, FirstStageLoss::Tear, cfg)
}

/// Consensus maximization; `value` is `N − consensus` and `inliers` holds
/// the consensus set.
pub fn solve_cm1(pairs: &PointPairSet, cfg: &SolverConfig) -> Result<StageSolution> {
    solve_first_stage(pairs, FirstStageLoss::Consensus, cfg)
}

pub fn solve_tls1(pairs: &PointPairSet, cfg: &SolverConfig) -> Result<StageSolution> {
    solve_first_stage(pairs, FirstStageLoss::TruncatedSquares, cfg)
}
