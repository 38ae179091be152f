//! Structure-preservation checks: every scheme step keeps the density matrix
//! positive semi-definite by construction, and trace renormalization keeps it
//! on the unit-trace manifold.

use lindblad_npi::linalg::{self, C64};
use lindblad_npi::model::{ControlPulse, LindbladModel, TimeCoeff, TimeTerm};
use lindblad_npi::npi::{evolve, truncate_svd, SchemeConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&a + a.adjoint()).scale(0.5 * scale)
}

fn random_model(rng: &mut ChaCha8Rng) -> LindbladModel {
    let d = rng.gen_range(2..=8);
    let h0 = random_hermitian(rng, d, 1.5);
    let mut terms = vec![TimeTerm {
        coeff: TimeCoeff::Cos(rng.gen_range(0.2..3.0)),
        op: random_hermitian(rng, d, 1.0),
    }];
    if rng.gen_bool(0.5) {
        terms.push(TimeTerm {
            coeff: TimeCoeff::PulseP(ControlPulse::TanhRamp {
                amplitude: rng.gen_range(0.1..1.0),
                steepness: rng.gen_range(-2.0..-0.1),
                center: rng.gen_range(0.0..1.0),
            }),
            op: random_hermitian(rng, d, 1.0),
        });
    }
    let n_jumps = rng.gen_range(1..=3);
    let jumps = (0..n_jumps)
        .map(|_| {
            DMatrix::from_fn(d, d, |_, _| {
                C64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4))
            })
        })
        .collect();
    LindbladModel::from_parts(h0, terms, jumps).unwrap()
}

#[test]
fn steps_preserve_positivity_and_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let model = random_model(&mut rng);
        let d = model.dim();
        let rank = rng.gen_range(1..=d);
        let mut v0 = DMatrix::from_fn(d, rank, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        v0 /= C64::new(v0.norm(), 0.0);
        let n_steps = 4;
        let t_final = rng.gen_range(0.2..0.8);
        for family_implicit in [false, true] {
            for order in 1..=4u8 {
                let config = if family_implicit {
                    SchemeConfig::implicit(order)
                } else {
                    SchemeConfig::explicit(order)
                };
                let traj = evolve(&model, &config, v0.clone(), t_final, n_steps)
                    .unwrap_or_else(|e| {
                        panic!("trial {trial} order {order} implicit={family_implicit}: {e}")
                    });
                for &tr in &traj.traces {
                    assert!((tr - 1.0).abs() < 1e-13, "trial {trial}: trace {tr}");
                }
                let vf = &traj.final_state.factor;
                let rho = vf * vf.adjoint();
                // ρ = VV† is PSD by construction; check through the
                // eigensolver anyway as an end-to-end guard.
                let min_eig = linalg::min_hermitian_eigenvalue(&rho);
                assert!(min_eig >= -1e-12, "trial {trial}: min eigenvalue {min_eig}");
            }
        }
    }
}

#[test]
fn renormalization_off_keeps_trace_near_one() {
    // Without renormalization the trace drifts only by the truncation
    // tolerance per step.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = random_model(&mut rng);
    let d = model.dim();
    let mut v0 = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    v0 /= C64::new(v0.norm(), 0.0);
    let n = 32;
    let config = SchemeConfig::explicit(2).with_renormalize(false);
    let traj = evolve(&model, &config, v0, 0.5, n).unwrap();
    let dt = 0.5 / n as f64;
    let budget = n as f64 * (config.kappa * dt).powi(3) * 10.0 + 1e-10;
    let drift = (traj.final_state.trace() - 1.0).abs();
    assert!(drift <= budget, "trace drift {drift:.3e} > budget {budget:.3e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Truncation never increases rank beyond the input, keeps the Gram
    /// matrix within the nuclear-norm tolerance, and preserves PSD-ness.
    #[test]
    fn truncation_invariant(
        seed in 0u64..1000,
        d in 2usize..6,
        r in 1usize..10,
        log_tol in -12.0f64..-2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DMatrix::from_fn(d, r, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let tol = 10f64.powf(log_tol);
        let out = truncate_svd(&v, tol, usize::MAX).unwrap();
        prop_assert!(out.ncols() <= r.min(d));
        let diff = &v * v.adjoint() - &out * out.adjoint();
        let nuclear: f64 = linalg::hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum();
        prop_assert!(nuclear <= tol * (1.0 + 1e-10) + 1e-13);
        let min_eig = linalg::min_hermitian_eigenvalue(&(&out * out.adjoint()));
        prop_assert!(min_eig >= -1e-12);
    }
}
