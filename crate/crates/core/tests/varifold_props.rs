use std::f64::consts::PI;

use fblab_core::varifold::flatness::flatness;
use fblab_core::varifold::mesh::{bump, double_cone, multigraph, plane, sphere};
use fblab_core::varifold::monotonicity::{allard_lambda, density_classify, monotonicity_profile};
use fblab_core::varifold::{first_variation, mean_curvature_measure, multigraph_sheet_bound, DiscreteVarifold, V3};
use nalgebra::Rotation3;
use proptest::prelude::*;

const THETA0: f64 = 0.585_281_588_932_581_3;

fn swirl(p: &V3) -> V3 {
    V3::new(p.x * p.x + 0.3 * p.y, p.z.sin() + p.y * p.y, (0.5 * p.x).exp() * p.z)
}

fn adjoint_defect(m: &DiscreteVarifold) -> f64 {
    let x: Vec<V3> = m.vertices.iter().map(swirl).collect();
    let fv = first_variation(m, &x).unwrap();
    let h = mean_curvature_measure(m).unwrap();
    (fv + h.pair(m, swirl)).abs()
}

#[test]
fn adjointness_improves_under_refinement() {
    for build in [|h| sphere(1.0, h).unwrap(), |h| double_cone(THETA0, 1.0, h).unwrap()] {
        let d: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&h| adjoint_defect(&build(h))).collect();
        assert!(d[1] < d[0] && d[2] < d[1], "{d:?}");
        // O(h): the defect divided by h stays bounded.
        let c: Vec<f64> = d.iter().zip([0.2, 0.1, 0.05]).map(|(d, h)| d / h).collect();
        assert!(c[2] <= 1.5 * c[0], "{c:?}");
    }
}

#[test]
fn cone_curvature_mass_on_annulus() {
    let m = double_cone(THETA0, 1.0, 0.05).unwrap();
    let h = mean_curvature_measure(&m).unwrap();
    for delta in [0.1, 0.3] {
        let mass = h.mass_in_shell(&m, &V3::zeros(), delta, 1.0);
        let exact = 4.0 * PI * THETA0.cos() * (1.0 - delta);
        assert!((mass / exact - 1.0).abs() <= 0.03, "δ {delta}: {mass} vs {exact}");
    }
}

#[test]
fn multigraph_count_bound() {
    for sheets in [2, 3] {
        let m = multigraph(sheets, 0.4, 0.1).unwrap();
        let (n, _) = m.components();
        assert_eq!(n, sheets);
        assert!(n as f64 <= multigraph_sheet_bound(&m));
    }
}

#[test]
fn bump_flatness_follows_density() {
    let (xi, r) = (V3::zeros(), 0.5);
    let mut rows = Vec::new();
    for amp in [0.02, 0.05, 0.1] {
        let m = bump(1.2, 0.04, amp, 0.3).unwrap();
        let xi = V3::new(0.0, 0.0, amp);
        let density = density_classify(&m, &xi, 0.5, 1.0, &[r]).unwrap().density[0];
        let eps = flatness(&m, &xi, r).unwrap().eps_flat;
        rows.push((density, eps));
    }
    assert!(rows.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1), "{rows:?}");
    let m = plane(1.2, 0.04).unwrap();
    let c = density_classify(&m, &xi, 0.5, 1.0, &[r]).unwrap();
    assert!(c.density[0] < 1e-12);
    let f = flatness(&m, &xi, r).unwrap();
    assert!(f.eps_flat <= f.pitch / r, "{f:?}");
}

#[test]
fn allard_profile_with_measured_lambda() {
    let m = bump(1.2, 0.04, 0.1, 0.3).unwrap();
    let xi = V3::new(0.0, 0.0, 0.1);
    let radii = [0.1, 0.2, 0.4, 0.8];
    let h = mean_curvature_measure(&m).unwrap();
    let lambda = allard_lambda(&m, &h, &xi, 1.0, 1.0, &radii).unwrap();
    let p = monotonicity_profile(&m, &xi, 1.0, lambda, 1.0, &radii).unwrap();
    let slack = 0.04 * PI;
    assert!(p.weighted.windows(2).all(|w| w[1] >= w[0] - slack), "{:?}", p.weighted);
}

fn rigid() -> impl Strategy<Value = (Rotation3<f64>, V3)> {
    ((-PI..PI), (-1.5f64..1.5), (-PI..PI), prop::array::uniform3(-3.0f64..3.0))
        .prop_map(|(a, b, c, s)| (Rotation3::from_euler_angles(a, b, c), V3::from(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scalars_are_isometry_invariant((rot, shift) in rigid()) {
        let m = double_cone(THETA0, 1.0, 0.1).unwrap();
        let t = m.transformed(&rot, &shift);
        let xi = V3::new(0.05, -0.02, 0.1);
        let txi = rot * xi + shift;
        let x: Vec<V3> = m.vertices.iter().map(swirl).collect();
        let tx: Vec<V3> = x.iter().map(|v| rot * v).collect();
        let (a, b) = (first_variation(&m, &x).unwrap(), first_variation(&t, &tx).unwrap());
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        let radii = [0.2, 0.5, 0.9];
        let (p, q) = (
            monotonicity_profile(&m, &xi, 1.0, 0.5, 1.0, &radii).unwrap(),
            monotonicity_profile(&t, &txi, 1.0, 0.5, 1.0, &radii).unwrap(),
        );
        for k in 0..3 {
            prop_assert!((p.ratio[k] - q.ratio[k]).abs() < 1e-10);
            prop_assert!((p.deficit[k] - q.deficit[k]).abs() < 1e-10);
        }
        let (c, d) = (
            density_classify(&m, &xi, 0.5, 1.0, &radii).unwrap(),
            density_classify(&t, &txi, 0.5, 1.0, &radii).unwrap(),
        );
        for k in 0..3 {
            prop_assert!((c.density[k] - d.density[k]).abs() < 1e-10 * c.density[k].max(1.0));
        }
        let (h, g) = (mean_curvature_measure(&m).unwrap(), mean_curvature_measure(&t).unwrap());
        prop_assert!((h.total_mass - g.total_mass).abs() < 1e-10 * h.total_mass);
    }
}
