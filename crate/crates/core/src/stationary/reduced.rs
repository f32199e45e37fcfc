use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gas::{FarField, GasParams};

/// Relative determinant threshold below which the far-field Jacobian is
/// treated as singular.
pub const SINGULAR_DET_TOL: f64 = 1e-8;

/// The stationary system after integrating each conservation law once from
/// `x` to infinity. Unknowns are the deviations `(ũ − u₊, θ̃ − θ₊)`; density
/// follows from the constant mass flux as `ρ̃ = m/ũ`.
///
/// ```text
/// μ ũ′ = m(ũ − u₊) + R m θ̃/ũ − R ρ₊ θ₊
/// κ θ̃′ = m(c_v + R)(θ̃ − θ₊) + (m/2)(ũ² − u₊²) − ũ·(μ ũ′)
/// ```
#[derive(Debug, Clone, Copy)]
pub struct ReducedOde {
    pub params: GasParams,
    pub far: FarField,
    pub mass_flux: f64,
}

pub fn reduce(params: &GasParams, far: &FarField) -> Result<ReducedOde> {
    if far.u_plus() == 0.0 {
        return Err(Error::DomainError(
            "reduced stationary system needs u+ != 0".into(),
        ));
    }
    Ok(ReducedOde {
        params: *params,
        far: *far,
        mass_flux: far.mass_flux(),
    })
}

impl ReducedOde {
    /// Right-hand side in deviation variables. The algebra is arranged so
    /// that no term cancels catastrophically near the fixed point.
    pub fn rhs(&self, dev: &[f64; 2]) -> [f64; 2] {
        let (du, dth) = (dev[0], dev[1]);
        let r = self.params.r();
        let mu = self.params.mu();
        let kappa = self.params.kappa();
        let cv = self.params.cv();
        let m = self.mass_flux;
        let (rho_p, u_p, th_p) = (self.far.rho_plus(), self.far.u_plus(), self.far.theta_plus());
        let u = u_p + du;
        let stress = m * du + r * rho_p * (u_p * dth - th_p * du) / u;
        let heat = m * (cv + r) * dth + 0.5 * m * du * (2.0 * u_p + du) - u * stress;
        [stress / mu, heat / kappa]
    }

    /// Same system written in the absolute variables `(ũ, θ̃)`.
    pub fn rhs_absolute(&self, u: f64, theta: f64) -> [f64; 2] {
        let r = self.params.r();
        let m = self.mass_flux;
        let (rho_p, u_p, th_p) = (self.far.rho_plus(), self.far.u_plus(), self.far.theta_plus());
        let stress = m * (u - u_p) + r * m * theta / u - r * rho_p * th_p;
        let heat = m * (self.params.cv() + r) * (theta - th_p) + 0.5 * m * (u * u - u_p * u_p) - u * stress;
        [stress / self.params.mu(), heat / self.params.kappa()]
    }

    pub fn density(&self, u: f64) -> f64 {
        self.mass_flux / u
    }

    /// Jacobian of [`Self::rhs`] at the fixed point, assembled by hand.
    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        let r = self.params.r();
        let mu = self.params.mu();
        let kappa = self.params.kappa();
        let m = self.mass_flux;
        let (rho_p, u_p, th_p) = (self.far.rho_plus(), self.far.u_plus(), self.far.theta_plus());
        let j11 = m * (1.0 - r * th_p / (u_p * u_p)) / mu;
        let j12 = r * rho_p / mu;
        let j21 = (m * u_p - u_p * mu * j11) / kappa;
        let j22 = m * self.params.cv() / kappa;
        [[j11, j12], [j21, j22]]
    }

    /// Central-difference Jacobian, used only as a cross-check.
    pub fn jacobian_fd(&self, h: f64) -> [[f64; 2]; 2] {
        let mut jac = [[0.0; 2]; 2];
        for col in 0..2 {
            let mut plus = [0.0; 2];
            let mut minus = [0.0; 2];
            plus[col] = h;
            minus[col] = -h;
            let fp = self.rhs(&plus);
            let fm = self.rhs(&minus);
            for row in 0..2 {
                jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        jac
    }
}

/// Eigen-decomposition of the far-field Jacobian.
#[derive(Debug, Clone, Serialize)]
pub struct EigenData {
    pub jacobian: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    #[serde(serialize_with = "ser_complex_pair")]
    pub eigenvalues: [Complex64; 2],
    /// Column `k` is the eigenvector of `eigenvalues[k]`, unit Euclidean norm.
    #[serde(skip)]
    pub eigenvectors: [[Complex64; 2]; 2],
}

fn ser_complex_pair<S: serde::Serializer>(v: &[Complex64; 2], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl EigenData {
    pub fn from_matrix(jacobian: [[f64; 2]; 2]) -> Self {
        let [[a, b], [c, d]] = jacobian;
        let trace = a + d;
        let det = a * d - b * c;
        let disc = Complex64::new(0.25 * trace * trace - det, 0.0).sqrt();
        let half = Complex64::new(0.5 * trace, 0.0);
        // pick the root that avoids cancellation, recover the other from det
        let big = if trace >= 0.0 { half + disc } else { half - disc };
        let small = if big.norm() > 0.0 {
            Complex64::new(det, 0.0) / big
        } else {
            Complex64::new(0.0, 0.0)
        };
        let mut eigenvalues = [big, small];
        eigenvalues.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap_or(std::cmp::Ordering::Equal));
        let eigenvectors = {
            let vec_for = |lam: Complex64| -> [Complex64; 2] {
                let a_c = Complex64::new(a, 0.0);
                let d_c = Complex64::new(d, 0.0);
                let cand1 = [Complex64::new(b, 0.0), lam - a_c];
                let cand2 = [lam - d_c, Complex64::new(c, 0.0)];
                let n1 = (cand1[0].norm_sqr() + cand1[1].norm_sqr()).sqrt();
                let n2 = (cand2[0].norm_sqr() + cand2[1].norm_sqr()).sqrt();
                let (v, n) = if n1 >= n2 { (cand1, n1) } else { (cand2, n2) };
                if n == 0.0 {
                    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
                } else {
                    [v[0] / n, v[1] / n]
                }
            };
            let v0 = vec_for(eigenvalues[0]);
            let v1 = vec_for(eigenvalues[1]);
            [[v0[0], v1[0]], [v0[1], v1[1]]]
        };
        Self {
            jacobian,
            trace,
            det,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvector(&self, k: usize) -> [Complex64; 2] {
        [self.eigenvectors[0][k], self.eigenvectors[1][k]]
    }

    /// Smallest `|Re λ|` over eigenvalues with negative real part.
    pub fn slowest_stable_rate(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .filter(|l| l.re < 0.0)
            .map(|l| -l.re)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    pub fn stable_count(&self) -> usize {
        self.eigenvalues.iter().filter(|l| l.re < 0.0).count()
    }

    fn frobenius_sq(&self) -> f64 {
        self.jacobian.iter().flatten().map(|v| v * v).sum()
    }
}

/// Eigen-data of the far-field Jacobian. A numerically singular Jacobian
/// (the transonic case) is reported as [`Error::SingularJacobian`] carrying
/// the decomposition.
pub fn linearize_at_infinity(ode: &ReducedOde) -> Result<EigenData> {
    let eigen = EigenData::from_matrix(ode.jacobian());
    if eigen.det.abs() <= SINGULAR_DET_TOL * eigen.frobenius_sq() {
        return Err(Error::SingularJacobian {
            det: eigen.det,
            eigen: Box::new(eigen),
        });
    }
    Ok(eigen)
}

/// Either the regular eigen-data or the one attached to a singular-Jacobian error.
pub fn eigen_data_lenient(ode: &ReducedOde) -> EigenData {
    match linearize_at_infinity(ode) {
        Ok(e) => e,
        Err(Error::SingularJacobian { eigen, .. }) => *eigen,
        Err(_) => EigenData::from_matrix(ode.jacobian()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn headline() -> ReducedOde {
        reduce(
            &GasParams::monatomic_unit(),
            &FarField::new(1.0, -2.0, 0.6).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_is_root() {
        let ode = headline();
        assert_eq!(ode.rhs(&[0.0, 0.0]), [0.0, 0.0]);
        let abs = ode.rhs_absolute(-2.0, 0.6);
        assert!(abs[0].abs() < 1e-15 && abs[1].abs() < 1e-15);
        assert_eq!(ode.mass_flux, -2.0);
    }

    #[test]
    fn deviation_and_absolute_forms_agree() {
        let ode = headline();
        for &(du, dt) in &[(0.1, -0.05), (-0.3, 0.2), (0.01, 0.01)] {
            let a = ode.rhs(&[du, dt]);
            let b = ode.rhs_absolute(-2.0 + du, 0.6 + dt);
            assert!((a[0] - b[0]).abs() < 1e-13);
            assert!((a[1] - b[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_velocity_rejected() {
        let far = FarField::new(1.0, 0.0, 0.6).unwrap();
        assert!(matches!(
            reduce(&GasParams::monatomic_unit(), &far),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        for u in [-2.0, -1.0, -0.5, -3.7] {
            let ode = reduce(
                &GasParams::new(1.3, 1.4, 0.7, 2.1).unwrap(),
                &FarField::new(1.2, u, 0.6).unwrap(),
            )
            .unwrap();
            let ja = ode.jacobian();
            let jf = ode.jacobian_fd(1e-6);
            for r in 0..2 {
                for c in 0..2 {
                    let scale = ja[r][c].abs().max(1e-3);
                    assert!((ja[r][c] - jf[r][c]).abs() / scale < 1e-6, "{ja:?} vs {jf:?}");
                }
            }
        }
    }

    #[test]
    fn supersonic_eigenvalues() {
        let eigen = linearize_at_infinity(&headline()).unwrap();
        // closed form: trace −4.7, det 4.5
        let root = (4.7f64 * 4.7 - 18.0).sqrt();
        let expected = [(-4.7 + root) / 2.0, (-4.7 - root) / 2.0];
        for (lam, want) in eigen.eigenvalues.iter().zip(expected) {
            assert!((lam.re - want).abs() < 1e-12);
            assert_eq!(lam.im, 0.0);
        }
        assert_eq!(eigen.stable_count(), 2);
        assert!((eigen.slowest_stable_rate().unwrap() - 1.338_80).abs() < 1e-4);
        for k in 0..2 {
            let v = eigen.eigenvector(k);
            let j = eigen.jacobian;
            let lam = eigen.eigenvalues[k];
            let jv0 = v[0] * j[0][0] + v[1] * j[0][1];
            let jv1 = v[0] * j[1][0] + v[1] * j[1][1];
            assert!((jv0 - lam * v[0]).norm() < 1e-12);
            assert!((jv1 - lam * v[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn transonic_jacobian_is_singular() {
        let ode = reduce(
            &GasParams::monatomic_unit(),
            &FarField::new(1.0, -1.0, 0.6).unwrap(),
        )
        .unwrap();
        match linearize_at_infinity(&ode) {
            Err(Error::SingularJacobian { eigen, .. }) => {
                let near_zero = eigen
                    .eigenvalues
                    .iter()
                    .map(|l| l.norm())
                    .fold(f64::MAX, f64::min);
                assert!(near_zero < 1e-6);
            }
            other => panic!("expected singular Jacobian, got {other:?}"),
        }
    }

    #[test]
    fn subsonic_is_saddle() {
        let ode = reduce(
            &GasParams::monatomic_unit(),
            &FarField::new(1.0, -0.5, 0.6).unwrap(),
        )
        .unwrap();
        let eigen = linearize_at_infinity(&ode).unwrap();
        assert_eq!(eigen.stable_count(), 1);
        assert!(eigen.det < 0.0);
    }
}
