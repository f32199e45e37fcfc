use outflow_core::gas::{phi, phi_inequalities, PHI_K1, PHI_K2};

fn log_grid() -> Vec<f64> {
    (0..10_000)
        .map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 9_999.0))
        .collect()
}

#[test]
fn phi_vanishes_only_at_one() {
    assert_eq!(phi(1.0).unwrap(), 0.0);
    for z in log_grid() {
        if z != 1.0 {
            assert!(phi(z).unwrap() > 0.0, "phi({z})");
        }
    }
}

#[test]
fn phi_inequalities_hold_with_frozen_constants() {
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for z in log_grid() {
        let [(l1, u1), (l2, u2)] = phi_inequalities(z).unwrap();
        assert!(l1 <= u1, "first inequality fails at z = {z}");
        assert!(l2 <= u2, "second inequality fails at z = {z}");
        if z != 1.0 {
            r1 = r1.max(l1 / (u1 / PHI_K1));
            r2 = r2.max(l2 / (u2 / PHI_K2));
        }
    }
    // frozen constants are the fitted maxima rounded up in the fourth digit
    assert!(PHI_K1 - r1 < 1e-4 && PHI_K2 - r2 < 1e-4, "fitted {r1}, {r2}");
}
