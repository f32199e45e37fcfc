use outflow_core::gas::{BoundaryData, FarField, GasParams, RegimeKind};
use outflow_core::stationary::{
    default_domain_length, linearize_at_infinity, reduce, scan_region, solve_profile, verify_decay,
    CellOutcome, DecayModel, ProfileGrid, ScanBox, SolverOptions, StationaryProfile,
};
use outflow_core::Error;

#[test]
fn supersonic_tail_matches_slowest_eigenvalue() {
    let p = GasParams::monatomic_unit();
    let far = FarField::new(1.0, -2.0, 0.6).unwrap();
    let bdry = BoundaryData::offset(&far, 0.01, (1.0, 1.0)).unwrap();
    let ode = reduce(&p, &far).unwrap();
    let eigen = linearize_at_infinity(&ode).unwrap();
    let l = default_domain_length(&ode, 0.01).unwrap();
    let prof = solve_profile(
        &ode,
        &bdry,
        &ProfileGrid::uniform(l, 1024).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    let report = verify_decay(&prof, Some(&eigen)).unwrap();
    assert_eq!(report.model, DecayModel::Exponential);
    assert!(report.mismatch < 0.05, "mismatch {}", report.mismatch);
    // oracle: trace −4.7, det 4.5 give rates (4.7 ± √(4.7² − 18))/2
    let slow = (4.7 - (4.7f64 * 4.7 - 18.0).sqrt()) / 2.0;
    assert!((eigen.slowest_stable_rate().unwrap() - slow).abs() < 1e-12);
}

#[test]
fn transonic_tail_is_algebraic_with_unit_exponent() {
    let p = GasParams::monatomic_unit();
    let far = FarField::new(1.0, -1.0, 0.6).unwrap();
    assert_eq!(p.classify(&far, 1e-8).unwrap().kind, RegimeKind::Transonic);
    let bdry = BoundaryData::offset(&far, 0.01, (-1.0, 0.0)).unwrap();
    let ode = reduce(&p, &far).unwrap();
    assert!(matches!(
        linearize_at_infinity(&ode),
        Err(Error::SingularJacobian { .. })
    ));
    let l = default_domain_length(&ode, 0.01).unwrap();
    let prof = solve_profile(
        &ode,
        &bdry,
        &ProfileGrid::uniform(l, 20_000).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    let report = verify_decay(&prof, None).unwrap();
    assert_eq!(report.model, DecayModel::Algebraic);
    assert!(report.mismatch < 0.2, "exponent {}", report.rate);
}

#[test]
fn decay_check_on_synthetic_profile_file() {
    let p = GasParams::monatomic_unit();
    let far = FarField::new(1.0, -2.0, 0.6).unwrap();
    let ode = reduce(&p, &far).unwrap();
    let eigen = linearize_at_infinity(&ode).unwrap();
    let rate = eigen.slowest_stable_rate().unwrap();
    let x: Vec<f64> = (0..=600).map(|k| k as f64 * 0.05).collect();
    let u: Vec<f64> = x.iter().map(|v| -2.0 + 0.007 * (-rate * v).exp()).collect();
    let theta: Vec<f64> = x.iter().map(|v| 0.6 + 0.007 * (-rate * v).exp()).collect();
    let rho: Vec<f64> = u.iter().map(|v| 2.0 / -v).collect();
    let prof = StationaryProfile::from_values(&p, &far, x, rho, u, theta).unwrap();
    let report = verify_decay(&prof, Some(&eigen)).unwrap();
    assert!(report.mismatch < 0.01, "mismatch {}", report.mismatch);
}

#[test]
fn supersonic_neighbourhood_is_fully_solvable() {
    let p = GasParams::monatomic_unit();
    let far = FarField::new(1.0, -2.0, 0.6).unwrap();
    let map = scan_region(
        &p,
        &far,
        &ScanBox::around(&far, 0.05),
        9,
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(map.success_fraction(), 1.0);
}

#[test]
fn subsonic_existence_set_thins_under_refinement() {
    let p = GasParams::monatomic_unit();
    let far = FarField::new(1.0, -0.5, 0.6).unwrap();
    let scan = |n| {
        scan_region(
            &p,
            &far,
            &ScanBox::around(&far, 0.05),
            n,
            &SolverOptions::default(),
        )
        .unwrap()
    };
    let coarse = scan(5);
    let fine = scan(11);
    // the far-field point itself is always a (constant) solution
    assert_eq!(coarse.outcome_at(2, 2), CellOutcome::Success);
    assert!(fine.success_fraction() < coarse.success_fraction());
    assert!(fine.success_fraction() < 0.5);
}
