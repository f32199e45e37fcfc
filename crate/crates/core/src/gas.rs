//! Ideal polytropic gas: constitutive relations, far-field and boundary data,
//! regime classification by the far-field Mach number, and the scalar
//! relative-entropy kernel `Φ(z) = z − ln z − 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for treating `|M₊ − 1|` as zero.
pub const TRANSONIC_TOL: f64 = 1e-8;

/// Constitutive constants of the gas. `c_v = R/(γ−1)` is always derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    r: f64,
    gamma: f64,
    mu: f64,
    kappa: f64,
}

impl GasParams {
    pub fn new(r: f64, gamma: f64, mu: f64, kappa: f64) -> Result<Self> {
        let finite = [r, gamma, mu, kappa].iter().all(|v| v.is_finite());
        if !finite || r <= 0.0 || mu <= 0.0 || kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gas constants must be finite and positive (R={r}, mu={mu}, kappa={kappa})"
            )));
        }
        if gamma <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "adiabatic exponent must exceed 1, got {gamma}"
            )));
        }
        Ok(Self { r, gamma, mu, kappa })
    }

    /// Monatomic gas with unit constants, `γ = 5/3`.
    pub fn monatomic_unit() -> Self {
        Self {
            r: 1.0,
            gamma: 5.0 / 3.0,
            mu: 1.0,
            kappa: 1.0,
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn cv(&self) -> f64 {
        self.r / (self.gamma - 1.0)
    }

    pub fn pressure(&self, rho: f64, theta: f64) -> Result<f64> {
        if !(rho > 0.0) || !(theta > 0.0) {
            return Err(Error::NonPhysicalState(format!(
                "pressure needs rho > 0 and theta > 0 (rho={rho}, theta={theta})"
            )));
        }
        Ok(self.r * rho * theta)
    }

    pub fn sound_speed(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0) {
            return Err(Error::NonPhysicalState(format!(
                "sound speed needs theta > 0 (theta={theta})"
            )));
        }
        Ok((self.r * self.gamma * theta).sqrt())
    }

    /// Specific internal energy `e = c_v θ`.
    pub fn internal_energy(&self, theta: f64) -> f64 {
        self.cv() * theta
    }

    /// Specific total energy `E = c_v θ + u²/2`.
    pub fn total_energy(&self, u: f64, theta: f64) -> f64 {
        self.cv() * theta + 0.5 * u * u
    }

    pub fn classify(&self, far: &FarField, tol: f64) -> Result<Regime> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "classification tolerance must be >= 0, got {tol}"
            )));
        }
        let c = self.sound_speed(far.theta_plus())?;
        let mach = far.u_plus().abs() / c;
        let kind = if (mach - 1.0).abs() <= tol {
            RegimeKind::Transonic
        } else if mach > 1.0 {
            RegimeKind::Supersonic
        } else {
            RegimeKind::Subsonic
        };
        Ok(Regime { kind, mach })
    }
}

/// Far-field state `(ρ₊, u₊, θ₊)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    rho_plus: f64,
    u_plus: f64,
    theta_plus: f64,
}

impl FarField {
    pub fn new(rho_plus: f64, u_plus: f64, theta_plus: f64) -> Result<Self> {
        if !u_plus.is_finite() || !(rho_plus > 0.0) || !(theta_plus > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "far field needs rho+ > 0, theta+ > 0 (rho+={rho_plus}, u+={u_plus}, theta+={theta_plus})"
            )));
        }
        if !rho_plus.is_finite() || !theta_plus.is_finite() {
            return Err(Error::InvalidParameter("far field must be finite".into()));
        }
        Ok(Self {
            rho_plus,
            u_plus,
            theta_plus,
        })
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    pub fn u_plus(&self) -> f64 {
        self.u_plus
    }

    pub fn theta_plus(&self) -> f64 {
        self.theta_plus
    }

    /// Constant mass flux `m = ρ₊u₊`.
    pub fn mass_flux(&self) -> f64 {
        self.rho_plus * self.u_plus
    }
}

/// Boundary data `(u₋, θ₋)` at `x = 0`; outflow requires `u₋ < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    u_minus: f64,
    theta_minus: f64,
}

impl BoundaryData {
    pub fn new(u_minus: f64, theta_minus: f64) -> Result<Self> {
        if !(u_minus < 0.0) || !u_minus.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "outflow requires u- < 0, got {u_minus}"
            )));
        }
        if !(theta_minus > 0.0) || !theta_minus.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "boundary temperature must be positive, got {theta_minus}"
            )));
        }
        Ok(Self { u_minus, theta_minus })
    }

    /// Boundary data matching the far field, i.e. `δ = 0`.
    pub fn matching(far: &FarField) -> Result<Self> {
        Self::new(far.u_plus(), far.theta_plus())
    }

    /// Boundary data at distance `delta` from the far field along `direction`
    /// in the `(u, θ)` plane. A zero direction defaults to `(1, 1)/√2`.
    pub fn offset(far: &FarField, delta: f64, direction: (f64, f64)) -> Result<Self> {
        let norm = direction.0.hypot(direction.1);
        let (du, dt) = if norm > 0.0 {
            (direction.0 / norm, direction.1 / norm)
        } else {
            (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
        };
        Self::new(far.u_plus() + delta * du, far.theta_plus() + delta * dt)
    }

    pub fn u_minus(&self) -> f64 {
        self.u_minus
    }

    pub fn theta_minus(&self) -> f64 {
        self.theta_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    Supersonic,
    Transonic,
    Subsonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub mach: f64,
}

/// `Φ(z) = z − ln z − 1`, nonnegative and vanishing only at `z = 1`.
pub fn phi(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::DomainError(format!("phi needs z > 0, got {z}")));
    }
    Ok(z - z.ln() - 1.0)
}

/// Constant in `Φ(z) + (ln z)² ≤ K₁(z⁻¹ + 1)²(z − 1)²`, fitted on a
/// 10⁴-point logarithmic grid over `[10⁻², 10²]` (maximum ratio 0.378742).
pub const PHI_K1: f64 = 0.3788;

/// Constant in `(z + 1)⁻²(z − 1)² ≤ K₂Φ(z)`, fitted on the same grid
/// (maximum ratio 0.580770).
pub const PHI_K2: f64 = 0.5808;

/// Both sides of the two Φ inequalities at `z`:
/// `[(Φ + ln²z, K₁(z⁻¹+1)²(z−1)²), ((z−1)²/(z+1)², K₂Φ)]`.
pub fn phi_inequalities(z: f64) -> Result<[(f64, f64); 2]> {
    let p = phi(z)?;
    let l = z.ln();
    let d2 = (z - 1.0) * (z - 1.0);
    Ok([
        (p + l * l, PHI_K1 * (1.0 / z + 1.0).powi(2) * d2),
        (d2 / ((z + 1.0) * (z + 1.0)), PHI_K2 * p),
    ])
}

/// Euclidean distance between boundary and far-field data in the `(u, θ)` plane.
pub fn boundary_strength(far: &FarField, bdry: &BoundaryData) -> f64 {
    (far.u_plus() - bdry.u_minus()).hypot(far.theta_plus() - bdry.theta_minus())
}

/// `Ξ(m₁, M₁, m₂, M₂) = m₁⁻¹⁰ M₁¹⁰ m₂⁻¹⁰ M₂¹⁰`.
pub fn xi(m1: f64, big_m1: f64, m2: f64, big_m2: f64) -> Result<f64> {
    if !(m1 > 0.0 && big_m1 > 0.0 && m2 > 0.0 && big_m2 > 0.0) {
        return Err(Error::DomainError(format!(
            "xi needs positive bounds, got ({m1}, {big_m1}, {m2}, {big_m2})"
        )));
    }
    if m1 > big_m1 || m2 > big_m2 {
        return Err(Error::DomainError(format!(
            "xi needs lower <= upper bounds, got ({m1}, {big_m1}, {m2}, {big_m2})"
        )));
    }
    Ok(((big_m1 / m1) * (big_m2 / m2)).powi(10))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gas(r: f64, gamma: f64) -> GasParams {
        GasParams::new(r, gamma, 1.0, 1.0).unwrap()
    }

    #[test]
    fn pressure_values() {
        assert_eq!(gas(1.0, 1.4).pressure(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(gas(2.0, 1.4).pressure(3.0, 0.5).unwrap(), 3.0);
        assert!(matches!(
            gas(1.0, 1.4).pressure(0.0, 1.0),
            Err(Error::NonPhysicalState(_))
        ));
    }

    #[test]
    fn sound_speed_values() {
        assert_relative_eq!(
            gas(1.0, 5.0 / 3.0).sound_speed(0.6).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(gas(1.0, 2.0).sound_speed(2.0).unwrap(), 2.0);
        assert!(matches!(
            gas(1.0, 5.0 / 3.0).sound_speed(0.0),
            Err(Error::NonPhysicalState(_))
        ));
    }

    #[test]
    fn classify_regimes() {
        let g = GasParams::monatomic_unit();
        let cases = [
            (-2.0, RegimeKind::Supersonic, 2.0),
            (-1.0, RegimeKind::Transonic, 1.0),
            (-0.5, RegimeKind::Subsonic, 0.5),
        ];
        for (u, kind, mach) in cases {
            let far = FarField::new(1.0, u, 0.6).unwrap();
            let regime = g.classify(&far, TRANSONIC_TOL).unwrap();
            assert_eq!(regime.kind, kind);
            assert_relative_eq!(regime.mach, mach, epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            phi(std::f64::consts::E).unwrap(),
            std::f64::consts::E - 2.0,
            epsilon = 1e-15
        );
        assert!((phi(0.5).unwrap() - 0.193147).abs() < 5e-7);
        assert!(matches!(phi(0.0), Err(Error::DomainError(_))));
        assert!(matches!(phi(-1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn boundary_strength_values() {
        let far = FarField::new(1.0, -2.0, 0.6).unwrap();
        let same = BoundaryData::new(-2.0, 0.6).unwrap();
        assert_eq!(boundary_strength(&far, &same), 0.0);
        let far = FarField::new(1.0, -1.0, 5.0).unwrap();
        let b = BoundaryData::new(-4.0, 1.0).unwrap();
        assert_eq!(boundary_strength(&far, &b), 5.0);
        let far = FarField::new(1.0, -2.0, 1.0).unwrap();
        let b = BoundaryData::new(-1.0, 1.0).unwrap();
        assert_eq!(boundary_strength(&far, &b), 1.0);
    }

    #[test]
    fn xi_values() {
        assert_eq!(xi(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(xi(0.5, 1.0, 1.0, 1.0).unwrap(), 1024.0);
        assert_relative_eq!(
            xi(0.5, 2.0, 0.5, 2.0).unwrap(),
            2f64.powi(40),
            max_relative = 1e-14
        );
        assert!((xi(0.5, 2.0, 0.5, 2.0).unwrap() - 1.0995e12).abs() < 1e8);
        assert!(matches!(xi(0.0, 1.0, 1.0, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(xi(2.0, 1.0, 1.0, 1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn constructors_reject_invalid() {
        assert!(GasParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GasParams::new(-1.0, 1.4, 1.0, 1.0).is_err());
        assert!(GasParams::new(1.0, 1.4, 0.0, 1.0).is_err());
        assert!(FarField::new(0.0, -1.0, 1.0).is_err());
        assert!(BoundaryData::new(0.5, 1.0).is_err());
        assert!(BoundaryData::new(-0.5, 0.0).is_err());
    }

    #[test]
    fn cv_is_derived() {
        let g = GasParams::monatomic_unit();
        assert_relative_eq!(g.cv(), 1.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn phi_nonnegative_and_convex(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let pa = phi(a).unwrap();
            let pb = phi(b).unwrap();
            prop_assert!(pa >= 0.0 && pb >= 0.0);
            let mid = phi(0.5 * (a + b)).unwrap();
            prop_assert!(mid <= 0.5 * (pa + pb) + 1e-12 * (1.0 + pa + pb));
        }

        #[test]
        fn classify_invariant_under_rescaling(s in 0.01f64..100.0, u in -5.0f64..-0.01) {
            let g = GasParams::monatomic_unit();
            let far = FarField::new(1.0, u, 0.6).unwrap();
            let scaled = FarField::new(1.0, u * s.sqrt(), 0.6 * s).unwrap();
            let a = g.classify(&far, 0.0).unwrap();
            let b = g.classify(&scaled, 0.0).unwrap();
            prop_assert!((a.mach - b.mach).abs() <= 1e-12 * a.mach);
        }

        #[test]
        fn xi_monotone(m1 in 0.1f64..1.0, m2 in 0.1f64..1.0, big1 in 1.0f64..3.0, big2 in 1.0f64..3.0, f in 0.5f64..1.0) {
            let base = xi(m1, big1, m2, big2).unwrap();
            prop_assert!(base >= 1.0);
            prop_assert!(xi(m1 * f, big1, m2, big2).unwrap() >= base);
            prop_assert!(xi(m1, big1, m2 * f, big2).unwrap() >= base);
            prop_assert!(xi(m1, big1 / f, m2, big2).unwrap() >= base);
            prop_assert!(xi(m1, big1, m2, big2 / f).unwrap() >= base);
        }
    }
}
