//! Independent reference computations: the vectorized Lindblad superoperator,
//! a dense high-resolution RK4 reference solver, and the closed-form solution
//! of the two-qubit decay benchmark.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::linalg::{self, kron, matmul, C64};
use crate::model::LindbladModel;
use crate::Result;

/// The d²×d² Lindblad superoperator at time `t` acting on the row-major
/// vectorization of ρ:
///
/// ```text
/// L(t) = -i (H ⊗ I - I ⊗ Hᵀ) + Σ_α L_α ⊗ conj(L_α)
///        - ½ ((L_α†L_α) ⊗ I + I ⊗ (L_α†L_α)ᵀ)
/// ```
pub fn superoperator(model: &LindbladModel, t: f64) -> DMatrix<C64> {
    let d = model.dim();
    let id = linalg::eye(d);
    let h = model.hamiltonian(t);
    let mut sup = (kron(&h, &id) - kron(&id, &h.transpose())) * (-linalg::I);
    for l in model.jump_ops() {
        let ldl = matmul(&l.adjoint(), l);
        sup += kron(l, &l.conjugate());
        sup -= (kron(&ldl, &id) + kron(&id, &ldl.transpose())).scale(0.5);
    }
    sup
}

/// Right-hand side of the Lindblad equation on a dense density matrix.
pub fn lindblad_rhs(model: &LindbladModel, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let h = model.hamiltonian(t);
    let mut out = (matmul(&h, rho) - matmul(rho, &h)) * (-linalg::I);
    for l in model.jump_ops() {
        let ldl = matmul(&l.adjoint(), l);
        out += matmul(&matmul(l, rho), &l.adjoint());
        out -= (matmul(&ldl, rho) + matmul(rho, &ldl)).scale(0.5);
    }
    out
}

fn rk4_solve(
    model: &LindbladModel,
    rho0: &DMatrix<C64>,
    t_final: f64,
    n_steps: usize,
) -> DMatrix<C64> {
    let h = t_final / n_steps as f64;
    let ch = C64::new(h, 0.0);
    let mut rho = rho0.clone();
    for step in 0..n_steps {
        let t = step as f64 * h;
        let k1 = lindblad_rhs(model, t, &rho);
        let k2 = lindblad_rhs(model, t + 0.5 * h, &(&rho + &k1 * (0.5 * ch)));
        let k3 = lindblad_rhs(model, t + 0.5 * h, &(&rho + &k2 * (0.5 * ch)));
        let k4 = lindblad_rhs(model, t + h, &(&rho + &k3 * ch));
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (ch / 6.0);
    }
    rho
}

/// Dense RK4 reference solution of the full Lindblad equation.
///
/// With `check_resolution`, the run is repeated at half the step size and the
/// Frobenius distance between the two endpoints must stay below `allowed`,
/// otherwise [`Error::ResolutionCheck`] is returned (carrying the observed
/// difference). The finer result is returned in either case.
pub fn reference_solve(
    model: &LindbladModel,
    rho0: &DMatrix<C64>,
    t_final: f64,
    n_steps: usize,
    check_resolution: Option<f64>,
) -> Result<DMatrix<C64>> {
    assert!(n_steps >= 1);
    let coarse = rk4_solve(model, rho0, t_final, n_steps);
    let Some(allowed) = check_resolution else {
        return Ok(coarse);
    };
    let fine = rk4_solve(model, rho0, t_final, 2 * n_steps);
    let observed = (&fine - &coarse).norm();
    if observed > allowed {
        return Err(Error::ResolutionCheck { observed, allowed });
    }
    Ok(fine)
}

/// Closed-form density matrix of two resonant qubits with exchange coupling
/// `j`, uniform decay rate `gamma` on both qubits, and initial state
/// `|10><10|`. Basis ordering `(|00>, |01>, |10>, |11>)`.
pub fn exact_two_qubit_rho(j: f64, gamma: f64, t: f64) -> DMatrix<C64> {
    let e = (-gamma * t).exp();
    let c = (2.0 * j * t).cos();
    let s = (2.0 * j * t).sin();
    let mut rho = DMatrix::<C64>::zeros(4, 4);
    rho[(0, 0)] = C64::new(1.0 - e, 0.0);
    rho[(1, 1)] = C64::new(0.5 * e * (1.0 - c), 0.0);
    rho[(2, 2)] = C64::new(0.5 * e * (1.0 + c), 0.0);
    rho[(1, 2)] = C64::new(0.0, -0.5 * e * s);
    rho[(2, 1)] = C64::new(0.0, 0.5 * e * s);
    rho
}
