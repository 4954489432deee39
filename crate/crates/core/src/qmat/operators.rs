use super::{herm_eigen, ComplexMatrix, C64, HERMITIAN_TOL, IDENTITY_TOL};
use crate::{Error, Result};

const UNIT_NORM_TOL: f64 = 1e-12;

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn sigma_y() -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    ComplexMatrix::from_vec(vec![z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z]).unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diagonal(&[1.0, -1.0])
}

fn check_unit(v: [f64; 3], what: &str) -> Result<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL || !norm.is_finite() {
        return Err(Error::precondition(format!(
            "{what} must be a unit vector (norm {norm})"
        )));
    }
    Ok(())
}

fn pauli_dot(n: [f64; 3]) -> ComplexMatrix {
    let x = sigma_x().scale_real(n[0]);
    let y = sigma_y().scale_real(n[1]);
    let z = sigma_z().scale_real(n[2]);
    &(&x + &y) + &z
}

/// `exp(i·angle·(axis·σ)) = cos(angle)·I + i·sin(angle)·(axis·σ)`.
pub fn su2_rotation(axis: [f64; 3], angle: f64) -> Result<ComplexMatrix> {
    check_unit(axis, "rotation axis")?;
    let (s, c) = angle.sin_cos();
    let generator = pauli_dot(axis).scale(C64::new(0.0, s));
    Ok(&ComplexMatrix::identity(2).scale_real(c) + &generator)
}

/// `n·σ` as a ±1 observable.
pub fn bloch_observable(n: [f64; 3]) -> Result<Observable> {
    check_unit(n, "Bloch vector")?;
    Observable::new(pauli_dot(n))
}

/// `|v⟩⟨v|` for a (not necessarily normalized) vector; normalizes first.
pub fn ket_projector(v: &[C64]) -> Result<ComplexMatrix> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::precondition("cannot project onto a zero vector"));
    }
    let n = v.len();
    let mut p = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = v[i] * v[j].conj() / (norm * norm);
        }
    }
    Ok(p)
}

/// Hermitian observable with spectrum in {+1, −1} and its spectral projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    proj_plus: ComplexMatrix,
    proj_minus: ComplexMatrix,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::precondition(format!(
                "observable is not Hermitian (defect {defect:.3e})"
            )));
        }
        let dim = matrix.dim();
        let id = ComplexMatrix::identity(dim);
        let sq_defect = matrix.matmul(&matrix).max_diff(&id);
        if sq_defect > IDENTITY_TOL {
            return Err(Error::precondition(format!(
                "observable does not square to identity (defect {sq_defect:.3e})"
            )));
        }
        let proj_plus = (&id + &matrix).scale_real(0.5);
        let proj_minus = (&id - &matrix).scale_real(0.5);
        Ok(Self {
            matrix,
            proj_plus,
            proj_minus,
        })
    }

    /// `2P − I` for an orthogonal projector `P`.
    pub fn from_projector(p: &ComplexMatrix) -> Result<Self> {
        let id = ComplexMatrix::identity(p.dim());
        Self::new(&p.scale_real(2.0) - &id)
    }

    /// The observable `U† X U`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let m = u.adjoint().matmul(&self.matrix).matmul(u);
        Self::new(hermitize(&m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Spectral projector for `outcome` (+1 or −1).
    pub fn projector(&self, outcome: i8) -> &ComplexMatrix {
        if outcome > 0 {
            &self.proj_plus
        } else {
            &self.proj_minus
        }
    }

    pub fn proj_plus(&self) -> &ComplexMatrix {
        &self.proj_plus
    }

    pub fn proj_minus(&self) -> &ComplexMatrix {
        &self.proj_minus
    }
}

/// `(M + M†)/2`, removing rounding-level anti-Hermitian parts.
pub(crate) fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    matrix: ComplexMatrix,
}

impl State {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::precondition(format!(
                "state is not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::precondition(format!("state trace is {tr}, not 1")));
        }
        let min_eig = herm_eigen(&matrix)?.values[0];
        if min_eig < -1e-10 {
            return Err(Error::precondition(format!(
                "state has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        Self::new(ket_projector(ket)?)
    }

    /// Qubit state `(I + r·σ)/2` with `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1.0 + 1e-12 {
            return Err(Error::precondition(format!("Bloch vector length {len} > 1")));
        }
        let m = (&ComplexMatrix::identity(2) + &pauli_dot(r)).scale_real(0.5);
        Self::new(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        self.matrix.trace_product(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn zero_angle_rotation_is_identity() {
        let u = su2_rotation([0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(u, ComplexMatrix::identity(2));
    }

    #[test]
    fn quarter_turn_is_i_sigma_y() {
        let u = su2_rotation([0.0, 1.0, 0.0], FRAC_PI_2).unwrap();
        let want = sigma_y().scale(C64::new(0.0, 1.0));
        assert!(u.max_diff(&want) < 1e-15);
    }

    #[test]
    fn heisenberg_conjugation_rotates_by_twice_the_angle() {
        // Hand check: (c − isσ_y) σ_z (c + isσ_y) = cos2θ σ_z + sin2θ σ_x.
        for &theta in &[0.1, 0.7, 2.0, -1.3] {
            let u = su2_rotation([0.0, 1.0, 0.0], theta).unwrap();
            let got = u.adjoint().matmul(&sigma_z()).matmul(&u);
            let want = &sigma_z().scale_real((2.0 * theta).cos())
                + &sigma_x().scale_real((2.0 * theta).sin());
            assert!(got.max_diff(&want) < 1e-12, "theta {theta}");
            // The opposite ordering rotates the other way.
            let back = u.matmul(&sigma_z()).matmul(&u.adjoint());
            let want_back = &sigma_z().scale_real((2.0 * theta).cos())
                - &sigma_x().scale_real((2.0 * theta).sin());
            assert!(back.max_diff(&want_back) < 1e-12);
        }
    }

    #[test]
    fn rotation_is_unitary_and_rejects_bad_axes() {
        let n = [0.6, 0.0, 0.8];
        let u = su2_rotation(n, 0.37).unwrap();
        assert!(u.matmul(&u.adjoint()).max_diff(&ComplexMatrix::identity(2)) < 1e-12);
        assert!(matches!(
            su2_rotation([1.0, 1.0, 0.0], 0.1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn bloch_observables() {
        assert_eq!(*bloch_observable([0.0, 0.0, 1.0]).unwrap().matrix(), sigma_z());
        assert_eq!(*bloch_observable([1.0, 0.0, 0.0]).unwrap().matrix(), sigma_x());
        // Even-N chained vector a_1 for N = 4.
        let a1 = [-(PI / 2.0).sin(), 0.0, (PI / 2.0).cos()];
        let obs = bloch_observable(a1).unwrap();
        assert!(obs.matrix().max_diff(&sigma_x().scale_real(-1.0)) < 1e-15);
        assert!(bloch_observable([0.0, 0.0, 0.9]).is_err());
    }

    #[test]
    fn projectors_are_consistent() {
        let obs = bloch_observable([0.0, 0.6, 0.8]).unwrap();
        let id = ComplexMatrix::identity(2);
        let sum = obs.proj_plus() + obs.proj_minus();
        assert!(sum.max_diff(&id) < 1e-10);
        assert!(obs.proj_plus().matmul(obs.proj_minus()).max_abs() < 1e-10);
        assert!((obs.proj_plus() - obs.proj_minus()).max_diff(obs.matrix()) < 1e-10);
    }

    #[test]
    fn observable_rejects_non_dichotomic() {
        let m = ComplexMatrix::diagonal(&[1.0, 0.5]);
        assert!(Observable::new(m).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(State::new(ComplexMatrix::diagonal(&[0.5, 0.5])).is_ok());
        assert!(State::new(ComplexMatrix::diagonal(&[0.7, 0.7])).is_err());
        assert!(State::new(ComplexMatrix::diagonal(&[1.5, -0.5])).is_err());
        assert!(State::from_bloch([0.0, 0.0, 1.0]).is_ok());
        assert!(State::from_bloch([0.0, 0.8, 0.8]).is_err());
    }
}
