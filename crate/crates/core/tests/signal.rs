use dissest::signal::running_inner_product;
use dissest::{inner_product_t, make_basis, norm_t, synthesize, BasisKind, Signal};
use proptest::prelude::*;

fn kind(i: usize, n: usize, horizon: f64) -> BasisKind {
    match i {
        0 => BasisKind::FourierSequential,
        1 => BasisKind::Legendre,
        _ => BasisKind::FourierExplicit {
            frequencies: [0.0, 1.0, 3.0, 7.0, 12.0][..n]
                .iter()
                .map(|k| k * std::f64::consts::TAU / horizon)
                .collect(),
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(which in 0usize..3, coeffs in prop::collection::vec(-3.0f64..3.0, 1..=5), steps in 200u32..1200) {
        let n = coeffs.len();
        let horizon = steps as f64 * 0.01;
        let basis = make_basis(kind(which, n, horizon), n, horizon, 0.01).unwrap();
        let u = synthesize(&basis, &coeffs).unwrap();
        let alpha = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let norm = norm_t(&u, basis.horizon()).unwrap();
        prop_assert!((norm - alpha).abs() <= 1e-5 * alpha.max(1e-300), "{norm} vs {alpha}");
    }

    #[test]
    fn truncation_matches_running_sum(
        xs in prop::collection::vec(-5.0f64..5.0, 2..400),
        seed in 0u64..1000,
        cut in 0.0f64..1.0,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * ((i as u64 + seed) % 7) as f64 - 1.0).collect();
        let dt = 0.01;
        let x = Signal::new(dt, xs).unwrap();
        let y = Signal::new(dt, ys).unwrap();
        let running = running_inner_product(&x, &y).unwrap();
        let k = 1 + ((x.len() - 2) as f64 * cut) as usize;
        let t = k as f64 * dt;
        let direct = inner_product_t(&x, &y, t).unwrap();
        let scale = direct.abs().max(running[k].abs()).max(1e-12);
        prop_assert!((direct - running[k]).abs() <= 1e-9 * scale);
        let prefix = x.truncate(t).unwrap();
        prop_assert_eq!(prefix.values(), &x.values()[..=k]);
    }
}

#[test]
fn bases_are_orthonormal() {
    let cases = [
        (BasisKind::FourierSequential, 101, 20.0),
        (BasisKind::FourierSequential, 4, 1.0),
        (BasisKind::Legendre, 4, 10.0),
        (BasisKind::Legendre, 4, 1.0),
        (BasisKind::Legendre, 100, 20.0),
        (
            BasisKind::FourierExplicit {
                frequencies: [0.0, 1.0, 10.0, 100.0]
                    .iter()
                    .map(|k| k * std::f64::consts::TAU / 10.0)
                    .collect(),
            },
            4,
            10.0,
        ),
    ];
    for (kind, n, horizon) in cases {
        let basis = make_basis(kind.clone(), n, horizon, 0.01).unwrap();
        let err = basis.orthonormality_error();
        assert!(err <= 1e-6, "{kind:?} n={n} T={horizon}: {err:e}");
    }
}
