//! Sphere parameterization, residual-offset bounds over angle boxes and the
//! closed-form rigid fit.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-9;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ScalarInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInput(format!(
                "interval [{lo}, {hi}] is inverted or NaN"
            )))
        }
    }

    /// Builds the interval spanned by two values in either order.
    pub fn hull(a: f64, b: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Splits into two halves at the midpoint.
    pub fn halves(&self) -> [Self; 2] {
        let m = self.mid();
        [Self { lo: self.lo, hi: m }, Self { lo: m, hi: self.hi }]
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        lo <= self.lo && self.hi <= hi
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3(Vector3<f64>);

impl UnitVector3 {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() <= UNIT_TOL {
            Ok(Self(v))
        } else {
            Err(Error::InvalidInput(format!("vector norm {n} is not 1")))
        }
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Ok(Self(v / n))
        } else {
            Err(Error::Degenerate("cannot normalize a zero vector".into()))
        }
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    /// Recovers `(alpha, beta)` with `alpha` in `[0, 2π)` and `beta` in `[0, π]`.
    pub fn angles(&self) -> (f64, f64) {
        let v = self.0;
        let beta = v.z.clamp(-1.0, 1.0).acos();
        let mut alpha = v.y.atan2(v.x);
        if alpha < 0.0 {
            alpha += TAU;
        }
        if alpha >= TAU {
            alpha = 0.0;
        }
        (alpha, beta)
    }
}

/// A rectangle in `(alpha, beta)`, a branch over the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBox {
    pub alpha: ScalarInterval,
    pub beta: ScalarInterval,
}

impl AngleBox {
    pub fn new(alpha: ScalarInterval, beta: ScalarInterval) -> Result<Self> {
        if !alpha.within(0.0, TAU) {
            return Err(Error::Domain {
                what: "alpha interval",
                value: alpha.hi,
                domain: "[0, 2π]",
            });
        }
        if !beta.within(0.0, PI) {
            return Err(Error::Domain {
                what: "beta interval",
                value: beta.hi,
                domain: "[0, π]",
            });
        }
        Ok(Self { alpha, beta })
    }

    /// The whole parameter rectangle `[0, 2π] × [0, π]`.
    pub fn sphere() -> Self {
        Self {
            alpha: ScalarInterval { lo: 0.0, hi: TAU },
            beta: ScalarInterval { lo: 0.0, hi: PI },
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.alpha.mid(), self.beta.mid())
    }

    /// The four equal quadrants, ordered alpha-major.
    pub fn quadrants(&self) -> [Self; 4] {
        let [a0, a1] = self.alpha.halves();
        let [b0, b1] = self.beta.halves();
        [
            Self {
                alpha: a0,
                beta: b0,
            },
            Self {
                alpha: a0,
                beta: b1,
            },
            Self {
                alpha: a1,
                beta: b0,
            },
            Self {
                alpha: a1,
                beta: b1,
            },
        ]
    }
}

/// A branch over the 1-D `alpha` domain used by the second stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaInterval(pub ScalarInterval);

impl AlphaInterval {
    pub fn new(iv: ScalarInterval) -> Result<Self> {
        if iv.within(0.0, TAU) {
            Ok(Self(iv))
        } else {
            Err(Error::Domain {
                what: "alpha interval",
                value: iv.hi,
                domain: "[0, 2π]",
            })
        }
    }

    pub fn full() -> Self {
        Self(ScalarInterval { lo: 0.0, hi: TAU })
    }

    pub fn halves(&self) -> [Self; 2] {
        let [a, b] = self.0.halves();
        [Self(a), Self(b)]
    }
}

/// A rigid transform `y = R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PoseEstimate {
    /// Validates orthonormality and orientation to within `tol`.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>, tol: f64) -> Result<Self> {
        check_rotation(&rotation, tol)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("translation is not finite".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }
}

/// Fails unless `RᵀR = I` and `det R = 1` within `tol`.
pub fn check_rotation(r: &Matrix3<f64>, tol: f64) -> Result<()> {
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    let det = r.determinant();
    if ortho <= tol && (det - 1.0).abs() <= tol {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "not a rotation: |RᵀR - I| = {ortho:e}, det = {det}"
        )))
    }
}

/// Putative correspondences `(x_i, y_i)` with per-pair thresholds `xi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPairSet {
    x: Vec<Vector3<f64>>,
    y: Vec<Vector3<f64>>,
    xi: Vec<f64>,
}

impl PointPairSet {
    pub fn new(x: Vec<Vector3<f64>>, y: Vec<Vector3<f64>>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != xi.len() {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} sources, {} targets, {} thresholds",
                x.len(),
                y.len(),
                xi.len()
            )));
        }
        if let Some(i) = xi.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "threshold {} of pair {i} is not a finite non-negative number",
                xi[i]
            )));
        }
        let finite = |p: &Vector3<f64>| p.iter().all(|v| v.is_finite());
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !finite(a) || !finite(b)) {
            return Err(Error::InvalidInput(format!(
                "pair {i} has a non-finite coordinate"
            )));
        }
        Ok(Self { x, y, xi })
    }

    /// Same threshold for every pair.
    pub fn with_uniform_xi(x: Vec<Vector3<f64>>, y: Vec<Vector3<f64>>, xi: f64) -> Result<Self> {
        let n = x.len();
        Self::new(x, y, vec![xi; n])
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[Vector3<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[Vector3<f64>] {
        &self.y
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_sum(&self) -> f64 {
        self.xi.iter().sum()
    }
}

/// Maps `(alpha, beta)` to `(sinβ cosα, sinβ sinα, cosβ)`.
pub fn angles_to_unit(alpha: f64, beta: f64) -> Result<UnitVector3> {
    if !(0.0..=TAU).contains(&alpha) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "[0, 2π]",
        });
    }
    if !(0.0..=PI).contains(&beta) {
        return Err(Error::Domain {
            what: "beta",
            value: beta,
            domain: "[0, π]",
        });
    }
    Ok(UnitVector3(sphere_point(alpha, beta)))
}

#[inline]
pub(crate) fn sphere_point(alpha: f64, beta: f64) -> Vector3<f64> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Vector3::new(sb * ca, sb * sa, cb)
}

/// Exact range of `cos(θ − φ)` for `θ` in `theta`.
///
/// `theta` must lie within `[0, π]` or within `[π, 2π]`; split it first if it
/// straddles `π`.
pub fn cos_range(theta: ScalarInterval, phi: f64) -> Result<ScalarInterval> {
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::Domain {
            what: "phi",
            value: phi,
            domain: "[0, π]",
        });
    }
    if !theta.within(0.0, TAU) {
        return Err(Error::Domain {
            what: "theta",
            value: theta.hi,
            domain: "[0, 2π]",
        });
    }
    if theta.lo < PI && theta.hi > PI {
        return Err(Error::Precondition(format!(
            "theta [{}, {}] straddles π",
            theta.lo, theta.hi
        )));
    }
    Ok(cos_range_half(theta, phi))
}

#[inline]
fn cos_range_half(theta: ScalarInterval, phi: f64) -> ScalarInterval {
    let (t1, t2) = (theta.lo, theta.hi);
    let f1 = (t1 - phi).cos();
    let f2 = (t2 - phi).cos();
    if t2 <= PI {
        // θ − φ in [−π, π]; the peak sits at θ = φ.
        if phi >= t2 {
            ScalarInterval { lo: f1, hi: f2 }
        } else if phi <= t1 {
            ScalarInterval { lo: f2, hi: f1 }
        } else {
            ScalarInterval {
                lo: f1.min(f2),
                hi: 1.0,
            }
        }
    } else {
        // θ − φ in [0, 2π]; the trough sits at θ = φ + π.
        let trough = phi + PI;
        if trough >= t2 {
            ScalarInterval { lo: f2, hi: f1 }
        } else if trough <= t1 {
            ScalarInterval { lo: f1, hi: f2 }
        } else {
            ScalarInterval {
                lo: -1.0,
                hi: f1.max(f2),
            }
        }
    }
}

/// Sines and cosines at both ends of an arc no wider than π.
#[derive(Debug, Clone, Copy)]
struct ArcEnds {
    c1: f64,
    s1: f64,
    c2: f64,
    s2: f64,
}

impl ArcEnds {
    fn new(lo: f64, hi: f64) -> Self {
        let (s1, c1) = lo.sin_cos();
        let (s2, c2) = hi.sin_cos();
        Self { c1, s1, c2, s2 }
    }

    /// Range of `u cosθ + v sinθ` over the arc.
    ///
    /// On an arc no wider than π the sinusoid has at most one interior
    /// extremum, and it is interior exactly when the derivative changes sign
    /// between the ends. This gives the same ranges as [`cos_range`] with
    /// `φ = atan2(v, u)` without evaluating any angle per pair.
    #[inline]
    fn range(&self, u: f64, v: f64) -> (f64, f64) {
        let h1 = u * self.c1 + v * self.s1;
        let h2 = u * self.c2 + v * self.s2;
        let d1 = v * self.c1 - u * self.s1;
        let d2 = v * self.c2 - u * self.s2;
        let (mut lo, mut hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        if d1 > 0.0 && d2 < 0.0 {
            hi = hi.max(u.hypot(v));
        } else if d1 < 0.0 && d2 > 0.0 {
            lo = lo.min(-u.hypot(v));
        }
        (lo, hi)
    }
}

/// Per-box trigonometry shared by every pair's offset range.
#[derive(Debug, Clone, Copy)]
pub struct BoxTrig {
    /// The azimuth range, split at π when it straddles it.
    alpha: [ArcEnds; 2],
    split: bool,
    beta: ArcEnds,
}

impl BoxTrig {
    pub fn new(bx: &AngleBox) -> Self {
        let (a, b) = (bx.alpha, bx.beta);
        let split = a.lo < PI && a.hi > PI;
        let alpha = if split {
            [ArcEnds::new(a.lo, PI), ArcEnds::new(PI, a.hi)]
        } else {
            [ArcEnds::new(a.lo, a.hi); 2]
        };
        Self {
            alpha,
            split,
            beta: ArcEnds::new(b.lo, b.hi),
        }
    }
}

/// Per-pair constants for [`residual_offset_range`], computed once per solve.
#[derive(Debug, Clone, Copy)]
pub struct OffsetCoeffs {
    rho: f64,
    /// `(cos α*, sin α*)` with `α* = atan2(x2, x1)`.
    dir: (f64, f64),
    x3: f64,
}

impl OffsetCoeffs {
    pub fn new(x: &Vector3<f64>) -> Self {
        let rho = x.x.hypot(x.y);
        // With x1 = x2 = 0 the azimuth never enters the residual.
        let dir = if rho > 0.0 {
            (x.x / rho, x.y / rho)
        } else {
            (1.0, 0.0)
        };
        Self { rho, dir, x3: x.z }
    }

    /// Bounds `y − rᵀx` over every `r` parameterized by `bx`.
    pub fn range(&self, y: f64, bx: &AngleBox) -> ScalarInterval {
        self.range_in(y, &BoxTrig::new(bx))
    }

    /// [`Self::range`] with the box trigonometry precomputed.
    #[inline]
    pub fn range_in(&self, y: f64, trig: &BoxTrig) -> ScalarInterval {
        // Ψ: range of cos(α − α*) over the azimuth interval.
        let (mut psi_lo, mut psi_hi) = (0.0, 0.0);
        if self.rho > 0.0 {
            let (c, s) = self.dir;
            (psi_lo, psi_hi) = trig.alpha[0].range(c, s);
            if trig.split {
                let (lo, hi) = trig.alpha[1].range(c, s);
                psi_lo = psi_lo.min(lo);
                psi_hi = psi_hi.max(hi);
            }
        }
        // ρ C sinβ + x3 cosβ lies between the same expression at C = Ψl and C = Ψu.
        let upper = trig.beta.range(self.x3, self.rho * psi_hi).1;
        let lower = trig.beta.range(self.x3, self.rho * psi_lo).0;
        ScalarInterval::hull(y - upper, y - lower)
    }
}

/// Interval containing `y − rᵀx` for every `r = angles_to_unit(α, β)` with
/// `(α, β)` in `bx`.
pub fn residual_offset_range(x: &Vector3<f64>, y: f64, bx: &AngleBox) -> ScalarInterval {
    OffsetCoeffs::new(x).range(y, bx)
}

/// Least-squares rigid transform over the masked pairs (Kabsch, no scale).
pub fn procrustes(pairs: &PointPairSet, mask: &[usize]) -> Result<PoseEstimate> {
    if mask.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} pairs cannot fix a rigid transform",
            mask.len()
        )));
    }
    if let Some(&i) = mask.iter().find(|&&i| i >= pairs.len()) {
        return Err(Error::InvalidInput(format!("mask index {i} out of range")));
    }
    let m = mask.len() as f64;
    let (xs, ys) = (pairs.x(), pairs.y());
    let cx = mask.iter().fold(Vector3::zeros(), |acc, &i| acc + xs[i]) / m;
    let cy = mask.iter().fold(Vector3::zeros(), |acc, &i| acc + ys[i]) / m;
    let h = mask.iter().fold(Matrix3::zeros(), |acc, &i| {
        acc + (xs[i] - cx) * (ys[i] - cy).transpose()
    });

    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Degenerate("SVD did not converge".into())),
    };
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if !(s[order[1]] > 1e-12 * s[order[0]]) {
        return Err(Error::Degenerate(
            "masked points are collinear or coincident".into(),
        ));
    }
    let mut v = v_t.transpose();
    if (v * u.transpose()).determinant() < 0.0 {
        let mut col = v.column_mut(order[2]);
        col.neg_mut();
    }
    let rotation = v * u.transpose();
    let translation = cy - rotation * cx;
    Ok(PoseEstimate {
        rotation,
        translation,
    })
}
