mod common;

use common::{derivative, h_of, monte_carlo_sigma, Point};
use proptest::prelude::*;
use qubdoe::error_budget::{measurement_error, partials, MeasurementErrors};

/// Heating slopes positive, cooling slopes negative, cooling starting warmer.
fn valid_point() -> impl Strategy<Value = Point> {
    (
        1e-5f64..1e-3,
        -1e-3f64..-1e-5,
        500.0f64..5000.0,
        0.0f64..400.0,
        0.5f64..15.0,
        1.0f64..30.0,
    )
        .prop_map(|(ah, ac, ph, pc, th, tc)| [ah, ac, ph, pc, th, th + tc])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn partials_match_finite_differences(x in valid_point()) {
        let p = partials(x[0], x[1], x[2], x[3], x[4], x[5]).unwrap();
        let analytic = [p.dh_dah, p.dh_dac, p.dh_dph, p.dh_dpc, p.dh_dth, p.dh_dtc];
        for (i, a) in analytic.iter().enumerate() {
            if i == 3 && x[3] == 0.0 {
                continue;
            }
            let fd = derivative(|v| { let mut y = x; y[i] = v; h_of(&y) }, x[i]);
            prop_assert!(common::rel_err(fd, *a) < 1e-6, "variable {}: {} vs {}", i, fd, a);
        }
    }

    #[test]
    fn measurement_error_is_homogeneous(x in valid_point(), lambda in 0.01f64..100.0) {
        let p = partials(x[0], x[1], x[2], x[3], x[4], x[5]).unwrap();
        let e = MeasurementErrors::new(1e-6, 15.0, 0.5).unwrap();
        let scaled = MeasurementErrors::new(lambda * 1e-6, lambda * 15.0, lambda * 0.5).unwrap();
        let ratio = measurement_error(&p, &scaled) / measurement_error(&p, &e);
        prop_assert!(common::rel_err(ratio, lambda) < 1e-12);
    }

    #[test]
    fn consistent_scaling_keeps_h_and_relative_error(x in valid_point(), lambda in 0.1f64..10.0) {
        let y: Point = x.map(|v| v * lambda);
        prop_assert!(common::rel_err(h_of(&y), h_of(&x)) < 1e-12);
        let e = MeasurementErrors::new(1e-6, 15.0, 0.5).unwrap();
        let ey = MeasurementErrors::new(lambda * 1e-6, lambda * 15.0, lambda * 0.5).unwrap();
        let px = partials(x[0], x[1], x[2], x[3], x[4], x[5]).unwrap();
        let py = partials(y[0], y[1], y[2], y[3], y[4], y[5]).unwrap();
        let rx = measurement_error(&px, &e) / h_of(&x);
        let ry = measurement_error(&py, &ey) / h_of(&y);
        prop_assert!(common::rel_err(ry, rx) < 1e-10);
    }
}

#[test]
fn analytic_error_matches_monte_carlo() {
    let x: Point = [4e-4, -3e-4, 2000.0, 200.0, 6.0, 14.0];
    // perturbations of at most 1 % of the smallest variable of each kind
    let e = MeasurementErrors::new(0.01 * 3e-4, 0.01 * 200.0, 0.01 * 6.0).unwrap();
    let p = partials(x[0], x[1], x[2], x[3], x[4], x[5]).unwrap();
    let analytic = measurement_error(&p, &e);
    let mc = monte_carlo_sigma(&x, &e, 200_000, 11);
    assert!(common::rel_err(mc, analytic) < 0.05, "{mc} vs {analytic}");
}
