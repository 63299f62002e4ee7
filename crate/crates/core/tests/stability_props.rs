use fblab_core::energy::EnergyModel;
use fblab_core::stability::{diffusion_tensor, expansion_coeffs, log_test_2d};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_has_no_quadratic_remainder(p in 1.5f64..6.0, gu in vec3(), gp in vec3()) {
        prop_assume!(gu.iter().map(|x| x * x).sum::<f64>() > 0.25);
        let m = EnergyModel::power(p, 1.0).unwrap();
        let c = expansion_coeffs(&gu, &gp, &m);
        // remainder / ε² extrapolated to ε = 0 from ε, 2ε, 4ε.
        let g = |e: f64| {
            let t: f64 = gu.iter().zip(&gp).map(|(a, b)| (a - e * b).powi(2)).sum();
            (m.f(t) - (c.a0 + c.a1 * e + c.a2 * e * e)) / (e * e)
        };
        let h = 2.5e-3;
        let a2 = 8.0 / 3.0 * g(h) - 2.0 * g(2.0 * h) + g(4.0 * h) / 3.0;
        prop_assert!(a2.abs() <= 1e-4 * (1.0 + c.a2.abs()), "{a2} vs A2 {}", c.a2);
    }

    #[test]
    fn diffusion_tensor_spectrum(p in 1.5f64..8.0, gu in vec3()) {
        let t: f64 = gu.iter().map(|x| x * x).sum();
        prop_assume!(t > 1e-3);
        let m = EnergyModel::power(p, 1.0).unwrap();
        let a = diffusion_tensor(&gu, &m);
        let ev = a.symmetric_eigenvalues();
        let lo = m.f1(t) / m.f1(1.0);
        let hi = (m.f1(t) + 2.0 * m.f2(t) * t) / m.f1(1.0);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        for &l in ev.iter() {
            prop_assert!(l >= lo * (1.0 - 1e-10) - 1e-12 && l <= hi * (1.0 + 1e-10) + 1e-12, "{l} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn log_test_is_inverse_in_n(n in 1.0f64..1e4, c in 0.1f64..10.0) {
        let v = log_test_2d(n, c).unwrap();
        prop_assert!((v * n / c - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }
}

#[test]
fn expansion_observed_order() {
    let m = EnergyModel::power(3.0, 1.0).unwrap();
    let (gu, gp) = ([1.0, 0.0, 0.0], [0.3, 0.7, 0.0]);
    let c = expansion_coeffs(&gu, &gp, &m);
    let err = |e: f64| {
        let t: f64 = gu.iter().zip(&gp).map(|(a, b)| (a - e * b).powi(2)).sum();
        (m.f(t) - (c.a0 + c.a1 * e + c.a2 * e * e)).abs()
    };
    let e = [1e-2, 5e-3, 2.5e-3].map(err);
    for w in e.windows(2) {
        assert!((w[0] / w[1]).log2() >= 2.9, "{e:?}");
    }
}

#[test]
fn expansion_examples() {
    let lin = EnergyModel::power(2.0, 1.0).unwrap();
    let c = expansion_coeffs(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &lin);
    assert_eq!((c.a0, c.a1, c.a2), (1.0, -2.0, 1.0));
    let c = expansion_coeffs(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &EnergyModel::power(4.3, 1.0).unwrap());
    assert!((c.a0 - 1.0).abs() < 1e-15 && c.a1 == 0.0 && (c.a2 - 2.15).abs() < 1e-14);
}
