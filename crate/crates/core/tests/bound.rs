use dissest::{generalization_bound, GeneralizationBoundInput};

#[allow(dead_code)]
mod common;
use common::BOUND_REFERENCE;

fn eval(k: u64, c: f64, g: f64, conf: f64) -> (f64, bool) {
    let b = generalization_bound(&GeneralizationBoundInput::new(k, c, g, conf).unwrap());
    (b.bound, b.vacuous)
}

#[test]
fn matches_high_precision_reference() {
    for (k, c, g, conf, expected) in BOUND_REFERENCE {
        let (got, _) = eval(k, c, g, conf);
        let rel = ((got - expected) / expected).abs();
        assert!(
            rel <= 1e-12,
            "K={k} c={c} g={g}: {got} vs {expected} (rel {rel:e})"
        );
    }
}

#[test]
fn small_sample_is_vacuous() {
    let (bound, vacuous) = eval(1000, 103.0, 1.0, 0.05);
    assert!(vacuous);
    // The inner logarithm's argument is below one, so the value is negative
    // rather than large; it is still meaningless.
    assert!(bound < 0.0);
}

#[test]
fn decreasing_in_sample_count() {
    let values: Vec<f64> = [1_000_000u64, 10_000_000, 100_000_000]
        .iter()
        .map(|&k| eval(k, 2.06, 0.5, 0.05).0)
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn informative_regime() {
    let (bound, vacuous) = eval(1_000_000, 2.06, 0.5, 0.05);
    assert!(!vacuous);
    assert!((bound - 0.0073241877791201).abs() < 1e-15);
}

#[test]
fn increases_as_margin_shrinks() {
    let mut prev = 0.0;
    for g in [2.0, 1.5, 1.0, 0.8, 0.6, 0.5] {
        let (b, vacuous) = eval(10_000_000, 2.06, g, 0.05);
        assert!(!vacuous);
        assert!(b > prev, "gamma {g}: {b} <= {prev}");
        prev = b;
    }
}

#[test]
fn continuous_in_margin() {
    let (a, _) = eval(10_000_000, 2.06, 0.5, 0.05);
    let (b, _) = eval(10_000_000, 2.06, 0.5 + 1e-9, 0.05);
    assert!((a - b).abs() < 1e-9);
}
