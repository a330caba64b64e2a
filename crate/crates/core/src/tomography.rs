//! Process-matrix view of a CZ with coherent phase errors.
//!
//! Two-qubit operators use the basis {|00⟩, |01⟩, |10⟩, |11⟩} with G1 as the
//! left (most significant) label. Pauli index m = 4a + b stands for
//! P_a ⊗ P_b with P ∈ (I, X, Y, Z) and P_a acting on G1.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type Chi = SMatrix<Complex64, 16, 16>;

const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GateUnitary {
    pub matrix: Matrix4<Complex64>,
}

impl GateUnitary {
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        let defect = unitarity_defect(&matrix);
        if defect > UNITARY_TOL * 4.0 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { matrix })
    }

    pub fn ideal_cz() -> Self {
        cz_error_unitary(0.0, 0.0, 0.0)
    }

    /// `self` applied `n` times.
    pub fn pow(&self, n: u32) -> Self {
        let mut m = Matrix4::identity();
        for _ in 0..n {
            m = self.matrix * m;
        }
        Self { matrix: m }
    }
}

fn unitarity_defect(m: &Matrix4<Complex64>) -> f64 {
    (m.adjoint() * m - Matrix4::identity()).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub chi: Chi,
}

impl ProcessMatrix {
    pub fn trace(&self) -> Complex64 {
        self.chi.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.chi - self.chi.adjoint()).norm() <= tol
    }

    /// Numerical rank: eigenvalues of χ above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let h = (self.chi + self.chi.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().filter(|&&v| v > tol).count()
    }

    /// Tr[χ_a χ_b], the process fidelity between two unitary channels.
    pub fn overlap(&self, other: &ProcessMatrix) -> f64 {
        (self.chi * other.chi).trace().re
    }
}

fn pauli(k: usize) -> Matrix2<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match k {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => unreachable!("Pauli index"),
    }
}

/// P_a ⊗ P_b for Pauli index m = 4a + b.
pub fn two_qubit_pauli(m: usize) -> Matrix4<Complex64> {
    pauli(m / 4).kronecker(&pauli(m % 4))
}

pub fn pauli_label(m: usize) -> String {
    const L: [char; 4] = ['I', 'X', 'Y', 'Z'];
    format!("{}{}", L[m / 4], L[m % 4])
}

/// CZ with dynamical phases `d1` (G1), `d2` (G2) and conditional phase error
/// `dc`, all in degrees:
/// diag(1, e^{i d2}, e^{i d1}, e^{i(π + dc + d1 + d2)}) in |G1 G2⟩ order.
pub fn cz_error_unitary(d1: f64, d2: f64, dc: f64) -> GateUnitary {
    let (d1, d2, dc) = (d1.to_radians(), d2.to_radians(), dc.to_radians());
    let e = |phi: f64| Complex64::from_polar(1.0, phi);
    GateUnitary {
        matrix: Matrix4::from_diagonal(&nalgebra::Vector4::new(
            e(0.0),
            e(d2),
            e(d1),
            e(std::f64::consts::PI + dc + d1 + d2),
        )),
    }
}

/// Pauli coefficients c_m = Tr(P_m U)/4, so U = Σ c_m P_m.
pub fn pauli_coefficients(u: &Matrix4<Complex64>) -> SVector<Complex64, 16> {
    SVector::from_fn(|m, _| (two_qubit_pauli(m) * u).trace() / 4.0)
}

/// χ_mn = c_m c_n* for a unitary channel.
pub fn chi_from_unitary(u: &GateUnitary) -> ProcessMatrix {
    let c = pauli_coefficients(&u.matrix);
    ProcessMatrix { chi: c * c.adjoint() }
}

/// As [`chi_from_unitary`] for an unchecked matrix.
pub fn chi_from_matrix(m: &Matrix4<Complex64>) -> Result<ProcessMatrix> {
    Ok(chi_from_unitary(&GateUnitary::new(*m)?))
}

/// ε = 1 − Tr[χ(U) χ(CZ)].
pub fn process_error(u: &GateUnitary) -> f64 {
    let ideal = chi_from_unitary(&GateUnitary::ideal_cz());
    1.0 - chi_from_unitary(u).overlap(&ideal)
}

/// Quadratic expansion of [`process_error`] for `cz_error_unitary(d1, d2, dc)`
/// (phases in degrees).
pub fn quadratic_infidelity(d1: f64, d2: f64, dc: f64) -> f64 {
    let (a, b, c) = (d1.to_radians(), d2.to_radians(), dc.to_radians());
    0.25 * a * a + 0.25 * b * b + 0.1875 * c * c + 0.25 * a * c + 0.25 * b * c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatedGateError {
    pub single: f64,
    pub repeated: f64,
    /// repeated / single; tends to n² for small phases.
    pub ratio: f64,
}

/// Error of n gates in series, each with phase errors (d1, d2, dc) in
/// degrees, measured against CZⁿ.
pub fn repeated_gate_error_scaling(n: u32, d1: f64, d2: f64, dc: f64) -> Result<RepeatedGateError> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one gate".into()));
    }
    let single_u = cz_error_unitary(d1, d2, dc);
    let single = process_error(&single_u);
    let target = chi_from_unitary(&GateUnitary::ideal_cz().pow(n));
    let repeated = 1.0 - chi_from_unitary(&single_u.pow(n)).overlap(&target);
    Ok(RepeatedGateError {
        single,
        repeated,
        ratio: repeated / single,
    })
}
