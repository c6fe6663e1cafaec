use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use tear_core::{
    angles_to_unit, cos_range, procrustes, residual_offset_range, AngleBox, PointPairSet,
    PoseEstimate, ScalarInterval, UnitVector3,
};

const SAMPLES: usize = 400;

fn half_turn() -> impl Strategy<Value = ScalarInterval> {
    (any::<bool>(), 0.0f64..1.0, 0.0f64..1.0).prop_map(|(upper, a, w)| {
        let base = if upper { PI } else { 0.0 };
        let lo = base + a * PI;
        ScalarInterval::new(lo, lo + w * (base + PI - lo)).unwrap()
    })
}

fn sub_box() -> impl Strategy<Value = AngleBox> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, aw, b, bw)| {
        let alo = a * TAU;
        let blo = b * PI;
        AngleBox::new(
            ScalarInterval::new(alo, alo + aw * (TAU - alo)).unwrap(),
            ScalarInterval::new(blo, blo + bw * (PI - blo)).unwrap(),
        )
        .unwrap()
    })
}

fn point() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-3.0f64..3.0).prop_map(Vector3::from)
}

fn lerp(iv: &ScalarInterval, f: f64) -> f64 {
    (iv.lo + f * iv.width()).min(iv.hi)
}

proptest! {
    #[test]
    fn cos_range_is_sound_and_tight(theta in half_turn(), phi in 0.0f64..=PI) {
        let r = cos_range(theta, phi).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..=SAMPLES {
            let v = (lerp(&theta, k as f64 / SAMPLES as f64) - phi).cos();
            prop_assert!(r.lo - 1e-12 <= v && v <= r.hi + 1e-12, "{v} outside {r:?}");
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // cos is 1-Lipschitz, so dense samples come within half a step of the extremes.
        let step = theta.width() / SAMPLES as f64;
        prop_assert!(lo - r.lo <= step + 1e-12 && r.hi - hi <= step + 1e-12);
    }

    #[test]
    fn offset_range_contains_grid(x in point(), y in -3.0f64..3.0, bx in sub_box()) {
        let r = residual_offset_range(&x, y, &bx);
        for i in 0..=20 {
            for j in 0..=20 {
                let u = angles_to_unit(lerp(&bx.alpha, i as f64 / 20.0), lerp(&bx.beta, j as f64 / 20.0)).unwrap();
                let v = y - u.vector().dot(&x);
                prop_assert!(r.lo - 1e-9 <= v && v <= r.hi + 1e-9, "{v} outside {r:?}");
            }
        }
    }

    #[test]
    fn offset_ranges_nest(x in point(), y in -3.0f64..3.0, bx in sub_box()) {
        let parent = residual_offset_range(&x, y, &bx);
        for q in bx.quadrants() {
            let child = residual_offset_range(&x, y, &q);
            prop_assert!(parent.lo - 1e-9 <= child.lo && child.hi <= parent.hi + 1e-9);
        }
    }

    #[test]
    fn point_box_offset_is_exact(x in point(), y in -3.0f64..3.0, a in 0.0f64..TAU, b in 0.0f64..PI) {
        let bx = AngleBox::new(ScalarInterval::point(a), ScalarInterval::point(b)).unwrap();
        let r = residual_offset_range(&x, y, &bx);
        let v = y - angles_to_unit(a, b).unwrap().vector().dot(&x);
        prop_assert!(r.width() <= 1e-12 && (r.lo - v).abs() <= 1e-12);
    }

    #[test]
    fn angles_round_trip(a in 0.0f64..TAU, b in 0.01f64..(PI - 0.01)) {
        let u = angles_to_unit(a, b).unwrap();
        prop_assert!((u.vector().norm() - 1.0).abs() < 1e-12);
        let (a2, b2) = u.angles();
        prop_assert!((b2 - b).abs() < 1e-9);
        prop_assert!(((a2 - a + PI).rem_euclid(TAU) - PI).abs() < 1e-9);
    }

    #[test]
    fn procrustes_recovers_and_is_equivariant(
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..3.0,
        t in prop::array::uniform3(-2.0f64..2.0),
        pts in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 4..20),
        g_axis in prop::array::uniform3(-1.0f64..1.0),
        g_angle in 0.0f64..3.0,
        g_t in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let rot = |axis: [f64; 3], angle: f64| {
            *Rotation3::from_scaled_axis(Vector3::from(axis).normalize() * angle).matrix()
        };
        prop_assume!(Vector3::from(axis).norm() > 0.1 && Vector3::from(g_axis).norm() > 0.1);
        let x: Vec<_> = pts.iter().map(|p| Vector3::from(*p)).collect();
        // Spread enough to fix a rotation.
        let centered: Vec<_> = x.iter().map(|p| p - x[0]).collect();
        let spread = centered.iter().fold(Matrix3::zeros(), |m, p| m + p * p.transpose());
        let mut ev = spread.symmetric_eigenvalues().as_slice().to_vec();
        ev.sort_by(f64::total_cmp);
        prop_assume!(ev[1] > 0.5);

        let (r, t) = (rot(axis, angle), Vector3::from(t));
        let y: Vec<_> = x.iter().map(|p| r * p + t).collect();
        let mask: Vec<usize> = (0..x.len()).collect();
        let pairs = PointPairSet::with_uniform_xi(x.clone(), y.clone(), 0.1).unwrap();
        let pose = procrustes(&pairs, &mask).unwrap();
        prop_assert!((pose.rotation - r).norm() < 1e-9 && (pose.translation - t).norm() < 1e-9);

        // Moving the targets by G moves the fit by G.
        let (gr, gt) = (rot(g_axis, g_angle), Vector3::from(g_t));
        let moved: Vec<_> = y.iter().map(|p| gr * p + gt).collect();
        let pose2 = procrustes(&PointPairSet::with_uniform_xi(x, moved, 0.1).unwrap(), &mask).unwrap();
        prop_assert!((pose2.rotation - gr * pose.rotation).norm() < 1e-9);
        prop_assert!((pose2.translation - (gr * pose.translation + gt)).norm() < 1e-9);
    }
}

#[test]
fn sphere_box_covers_unit_vectors() {
    let bx = AngleBox::sphere();
    for v in [
        Vector3::x(),
        -Vector3::x(),
        Vector3::z(),
        -Vector3::z(),
        Vector3::new(1.0, -2.0, 0.5),
    ] {
        let (a, b) = UnitVector3::normalize(v).unwrap().angles();
        assert!(bx.alpha.contains(a) && bx.beta.contains(b));
    }
}

#[test]
fn quadrants_tile_the_box() {
    let bx = AngleBox::sphere();
    let q = bx.quadrants();
    let area: f64 = q.iter().map(|c| c.alpha.width() * c.beta.width()).sum();
    assert_relative_eq!(area, bx.alpha.width() * bx.beta.width(), epsilon = 1e-12);
}

#[test]
fn domain_errors() {
    assert!(angles_to_unit(-0.1, 0.0).is_err());
    assert!(angles_to_unit(0.0, 3.5).is_err());
    assert!(cos_range(ScalarInterval::new(0.0, 1.0).unwrap(), -0.1).is_err());
    assert!(UnitVector3::new(Vector3::new(1.0, 1.0, 0.0)).is_err());
    assert!(PoseEstimate::new(Matrix3::identity() * 2.0, Vector3::zeros(), 1e-9).is_err());
    assert!(ScalarInterval::new(1.0, 0.0).is_err());
}
