//! Stability analysis on single-qubit test equations.
//!
//! Two test models: pure decay (`H = ω|1><1|`, `L = T^{-1/2}|0><1|`) and
//! decay plus dephasing (additional `L₂ = T₂^{-1/2}|1><1|`). For both, each
//! scheme's one-step map acts on the vectorized density matrix
//! `(ρ₁₁, ρ₁₂, ρ₂₁, ρ₂₂)` through a 4×4 amplification matrix with closed-form
//! entries built from a handful of scalar stability functions. The closed
//! forms are cross-validated against numerically assembled one-step maps, and
//! the stability regions of the explicit families coincide with the classical
//! Runge-Kutta ones.

use nalgebra::DMatrix;

use crate::flow::FlowFamily;
use crate::linalg::{self, vec_row_major, C64};
use crate::model::LindbladModel;
use crate::npi::{npi_step_dense, SchemeConfig};
use crate::Result;

/// Slack used when comparing magnitudes against 1.
const STABILITY_TOL: f64 = 1e-12;

/// Single-qubit test equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestCase {
    /// Decay channel only; `J₂₂ = α_J = -iω - 1/(2T)`.
    Decay { omega: f64, t_decay: f64 },
    /// Decay plus dephasing; `α_J = -iω - 1/(2T₁) - 1/(2T₂)`.
    DecayDephasing { omega: f64, t1: f64, t2: f64 },
}

impl TestCase {
    pub fn alpha_j(&self) -> C64 {
        match *self {
            TestCase::Decay { omega, t_decay } => C64::new(-0.5 / t_decay, -omega),
            TestCase::DecayDephasing { omega, t1, t2 } => {
                C64::new(-0.5 / t1 - 0.5 / t2, -omega)
            }
        }
    }

    /// Decay time feeding the (1,4) repopulation entry.
    fn t_decay(&self) -> f64 {
        match *self {
            TestCase::Decay { t_decay, .. } => t_decay,
            TestCase::DecayDephasing { t1, .. } => t1,
        }
    }

    pub fn model(&self) -> LindbladModel {
        let (omega, t1, t2) = match *self {
            TestCase::Decay { omega, t_decay } => (omega, t_decay, None),
            TestCase::DecayDephasing { omega, t1, t2 } => (omega, t1, Some(t2)),
        };
        let mut h = DMatrix::<C64>::zeros(2, 2);
        h[(1, 1)] = C64::new(omega, 0.0);
        let mut decay = DMatrix::<C64>::zeros(2, 2);
        decay[(0, 1)] = C64::new(1.0 / t1.sqrt(), 0.0);
        let mut jumps = vec![decay];
        if let Some(t2) = t2 {
            let mut dephase = DMatrix::<C64>::zeros(2, 2);
            dephase[(1, 1)] = C64::new(1.0 / t2.sqrt(), 0.0);
            jumps.push(dephase);
        }
        LindbladModel::from_parts(h, vec![], jumps).unwrap()
    }
}

/// Scalar stability functions of the test equation: the action of each flow
/// approximation over a fraction `s` of the step on the eigenvalue `α_J`.
#[derive(Debug, Clone, Copy)]
pub struct HelperScalars {
    pub dt: f64,
    pub alpha_j: C64,
}

impl HelperScalars {
    pub fn new(dt: f64, alpha_j: C64) -> Self {
        Self { dt, alpha_j }
    }

    fn z(&self, s: f64) -> C64 {
        self.alpha_j * (s * self.dt)
    }

    /// Forward Euler: `1 + sΔt α_J`.
    pub fn alpha0(&self, s: f64) -> C64 {
        flow_scalar(1, FlowFamily::Explicit, self.z(s))
    }

    /// Backward Euler: `1 / (1 - sΔt α_J)`.
    pub fn alpha1(&self, s: f64) -> C64 {
        flow_scalar(1, FlowFamily::Implicit, self.z(s))
    }

    /// Second-order Taylor polynomial.
    pub fn beta0(&self, s: f64) -> C64 {
        flow_scalar(2, FlowFamily::Explicit, self.z(s))
    }

    /// Implicit midpoint, the (1,1)-Padé approximant.
    pub fn beta1(&self, s: f64) -> C64 {
        flow_scalar(2, FlowFamily::Implicit, self.z(s))
    }

    /// Third-order Taylor polynomial.
    pub fn gamma0(&self, s: f64) -> C64 {
        flow_scalar(3, FlowFamily::Explicit, self.z(s))
    }

    /// The two-half-step implicit flow, a (2,2)-Padé approximant.
    pub fn gamma1(&self, s: f64) -> C64 {
        flow_scalar(3, FlowFamily::Implicit, self.z(s))
    }

    /// Fourth-order Taylor polynomial.
    pub fn delta0(&self, s: f64) -> C64 {
        flow_scalar(4, FlowFamily::Explicit, self.z(s))
    }

    /// Same scheme as [`Self::gamma1`].
    pub fn delta1(&self, s: f64) -> C64 {
        flow_scalar(4, FlowFamily::Implicit, self.z(s))
    }

    /// Order/family dispatch over the eight scalars.
    pub fn scalar(&self, order: u8, family: FlowFamily, s: f64) -> C64 {
        flow_scalar(order, family, self.z(s))
    }
}

/// The scalar stability function of the order-`order` flow of the given
/// family at `z = Δt α_J`: Taylor polynomials for the explicit family,
/// Padé-type rationals for the implicit one (the implicit order-3 entry is
/// the same (2,2)-Padé scheme as order 4).
pub fn flow_scalar(order: u8, family: FlowFamily, z: C64) -> C64 {
    let one = linalg::ONE;
    match family {
        FlowFamily::Explicit => {
            let mut acc = one;
            let mut term = one;
            for k in 1..=order {
                term *= z / (k as f64);
                acc += term;
            }
            acc
        }
        FlowFamily::Implicit => match order {
            1 => one / (one - z),
            2 => (one + z * 0.5) / (one - z * 0.5),
            3 | 4 => {
                let d = C64::new(1.0 / 3.0_f64.sqrt(), -1.0);
                let q = linalg::I * (z * 0.25);
                ((one + q * d) * (one - q * d.conj()))
                    / ((one + q * d.conj()) * (one - q * d))
            }
            _ => panic!("flow order must be 1..=4"),
        },
    }
}

/// Explicit/implicit selection per nesting role. `i` drives the top-level
/// flow; `j` the inner half-step state of the second-order scheme; `l` its
/// first-order transport. For orders 3 and 4 every flow below the top one is
/// explicit and only `i` matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexSelection {
    pub i: FlowFamily,
    pub j: FlowFamily,
    pub l: FlowFamily,
}

impl IndexSelection {
    pub fn new(i: FlowFamily, j: FlowFamily, l: FlowFamily) -> Self {
        Self { i, j, l }
    }

    /// Only the top-level flow set; everything below explicit.
    pub fn top(i: FlowFamily) -> Self {
        Self::new(i, FlowFamily::Explicit, FlowFamily::Explicit)
    }

    /// The combinations enumerated for a given order: both families for the
    /// top flow, and for order 2 additionally all (j, l) pairs.
    pub fn enumerate(order: u8) -> Vec<Self> {
        let fams = [FlowFamily::Explicit, FlowFamily::Implicit];
        match order {
            2 => {
                let mut out = Vec::with_capacity(8);
                for i in fams {
                    for j in fams {
                        for l in fams {
                            out.push(Self::new(i, j, l));
                        }
                    }
                }
                out
            }
            _ => fams.into_iter().map(Self::top).collect(),
        }
    }
}

/// The [`SchemeConfig`] whose one-step map realizes the given index
/// selection at the given order.
pub fn scheme_config_from_indices(order: u8, idx: IndexSelection) -> SchemeConfig {
    let mut config = SchemeConfig::explicit(order);
    config.top_flow[(order - 1) as usize] = idx.i;
    if order == 2 {
        config.top_flow[0] = idx.j;
        config.transport_flow[0] = idx.l;
    }
    config
}

/// Closed-form 4×4 amplification matrix of the order-`order` scheme on the
/// chosen test case, in the basis `(ρ₁₁, ρ₁₂, ρ₂₁, ρ₂₂)`.
pub fn amplification_closed_form(
    case: TestCase,
    order: u8,
    idx: IndexSelection,
    dt: f64,
) -> DMatrix<C64> {
    assert!((1..=4).contains(&order));
    let s = HelperScalars::new(dt, case.alpha_j());
    let top = s.scalar(order, idx.i, 1.0);
    let t1 = case.t_decay();

    // c_{1,2} = (3 ∓ √3)/6, the Gauss-Legendre nodes of the order-4 rule.
    let gl = 3.0_f64.sqrt() / 6.0;
    let (c1, c2) = (0.5 - gl, 0.5 + gl);

    let (repop, survive) = match case {
        TestCase::Decay { .. } => {
            let repop = match order {
                1 => dt / t1,
                2 => dt / t1 * s.scalar(1, idx.j, 0.5).norm_sqr(),
                3 => dt / (4.0 * t1) * (1.0 + 3.0 * s.beta0(2.0 / 3.0).norm_sqr()),
                4 => {
                    dt / (2.0 * t1)
                        * (s.gamma0(c1).norm_sqr() + s.gamma0(c2).norm_sqr())
                }
                _ => unreachable!(),
            };
            (repop, top.norm_sqr())
        }
        TestCase::DecayDephasing { t2, .. } => match order {
            1 => (dt / t1, (dt + t2) / t2 * top.norm_sqr()),
            2 => {
                let aj = s.scalar(1, idx.j, 0.5).norm_sqr();
                let al = s.scalar(1, idx.l, 0.5).norm_sqr();
                let coupling = dt * (dt + 2.0 * t2);
                (
                    coupling / (2.0 * t1 * t2) * aj,
                    coupling / (2.0 * t2 * t2) * aj * al + top.norm_sqr(),
                )
            }
            3 => {
                let a13 = s.alpha0(1.0 / 3.0).norm_sqr();
                let b13 = s.beta0(1.0 / 3.0).norm_sqr();
                let b23 = s.beta0(2.0 / 3.0).norm_sqr();
                let repop = dt * dt * (dt + 3.0 * t2) / (6.0 * t1 * t2 * t2) * a13 * a13
                    + dt / (4.0 * t1) * (1.0 + 3.0 * b23);
                let y3 = dt / (4.0 * t2) * s.beta0(1.0).norm_sqr()
                    + dt * dt * (dt + 3.0 * t2) / (6.0 * t2.powi(3)) * a13 * a13 * b13
                    + 3.0 * dt / (4.0 * t2) * b13 * b23
                    + top.norm_sqr();
                (repop, y3)
            }
            4 => {
                let mut x = 0.0;
                let mut y4 = 0.0;
                for c in [c1, c2] {
                    let b = s.beta0(c).norm_sqr();
                    let a3 = s.alpha0(c / 3.0).norm_sqr();
                    let b3 = s.beta0(c / 3.0).norm_sqr();
                    let b23 = s.beta0(2.0 * c / 3.0).norm_sqr();
                    let g = s.gamma0(c).norm_sqr();
                    let gc = s.gamma0(1.0 - c).norm_sqr();
                    x += 3.0 * dt * t2 * t2 * c * b
                        + 2.0 * dt * dt * c * c * (dt * c + 3.0 * t2) * a3 * a3 * b3
                        + 9.0 * dt * t2 * t2 * c * b3 * b23
                        + 12.0 * t2.powi(3) * g;
                    y4 += 3.0 * dt * c * b * gc
                        + 2.0 * dt * dt / (t2 * t2) * c * c * (c * dt + 3.0 * t2)
                            * a3 * a3 * b3 * gc
                        + 9.0 * dt * c * b3 * b23 * gc
                        + 12.0 * t2 * g * gc;
                }
                (
                    dt / (24.0 * t1 * t2.powi(3)) * x,
                    top.norm_sqr() + dt / (24.0 * t2 * t2) * y4,
                )
            }
            _ => unreachable!(),
        },
    };

    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = linalg::ONE;
    m[(0, 3)] = C64::new(repop, 0.0);
    m[(1, 1)] = top.conj();
    m[(2, 2)] = top;
    m[(3, 3)] = C64::new(survive, 0.0);
    m
}

/// Assemble the one-step map numerically by pushing the four basis matrices
/// `E₁₁, E₁₂, E₂₁, E₂₂` through the dense scheme step (no truncation, no
/// renormalization) and vectorizing the images.
pub fn amplification_numeric(
    case: TestCase,
    config: &SchemeConfig,
    dt: f64,
) -> Result<DMatrix<C64>> {
    let model = case.model();
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for k in 0..4 {
        let mut basis = DMatrix::<C64>::zeros(2, 2);
        basis[(k / 2, k % 2)] = linalg::ONE;
        let image = npi_step_dense(&model, config, &basis, 0.0, dt, config.order)?;
        m.set_column(k, &vec_row_major(&image));
    }
    Ok(m)
}

/// Spectral radius of the amplification matrix restricted to the
/// non-stationary block (rows/columns 2–4), i.e. excluding the stationary
/// eigenvalue 1 and the repopulation entry it absorbs.
pub fn spectral_radius_nonstationary(m: &DMatrix<C64>) -> f64 {
    linalg::spectral_radius(&m.view((1, 1), (3, 3)).into_owned())
}

/// Evaluate the closed-form stability inequality for the selected scheme.
pub fn stability_condition(case: TestCase, order: u8, idx: IndexSelection, dt: f64) -> bool {
    let m = amplification_closed_form(case, order, idx, dt);
    // Every inequality bounds the modulus of a non-stationary entry by 1:
    // the coherence decay factor and the excited-population survival factor.
    let coherence = m[(2, 2)].norm();
    let survival = m[(3, 3)].re;
    coherence <= 1.0 + STABILITY_TOL && survival <= 1.0 + STABILITY_TOL
}

/// Rectangular scan grid over the complex `z = Δt α_J` plane.
#[derive(Debug, Clone, Copy)]
pub struct RegionGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for RegionGrid {
    fn default() -> Self {
        Self { re_min: -5.0, re_max: 1.0, im_min: -4.0, im_max: 4.0, n_re: 800, n_im: 800 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RegionPoint {
    pub z: C64,
    pub radius: f64,
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct RegionScan {
    pub points: Vec<RegionPoint>,
    /// Stable grid points adjacent to an unstable one, in row-major order.
    pub boundary: Vec<C64>,
}

/// Scan the stability region of the order-`order` flow family over the
/// `z = Δt α_J` plane. For the decay test equation the spectral radius of
/// the non-stationary block is `max(|R(z)|, |R(z)|²)` for the flow's scalar
/// stability function `R`.
pub fn stability_region_scan(order: u8, family: FlowFamily, grid: &RegionGrid) -> RegionScan {
    assert!(grid.n_re >= 2 && grid.n_im >= 2);
    let dre = (grid.re_max - grid.re_min) / (grid.n_re - 1) as f64;
    let dim = (grid.im_max - grid.im_min) / (grid.n_im - 1) as f64;
    let mut points = Vec::with_capacity(grid.n_re * grid.n_im);
    let mut stable_mask = vec![false; grid.n_re * grid.n_im];
    for iy in 0..grid.n_im {
        for ix in 0..grid.n_re {
            let z = C64::new(grid.re_min + ix as f64 * dre, grid.im_min + iy as f64 * dim);
            let r = flow_scalar(order, family, z).norm();
            let radius = r.max(r * r);
            let stable = radius <= 1.0 + STABILITY_TOL;
            stable_mask[iy * grid.n_re + ix] = stable;
            points.push(RegionPoint { z, radius, stable });
        }
    }
    let mut boundary = Vec::new();
    for iy in 0..grid.n_im {
        for ix in 0..grid.n_re {
            if !stable_mask[iy * grid.n_re + ix] {
                continue;
            }
            let mut edge = ix == 0 || ix + 1 == grid.n_re || iy == 0 || iy + 1 == grid.n_im;
            for (nx, ny) in
                [(ix.wrapping_sub(1), iy), (ix + 1, iy), (ix, iy.wrapping_sub(1)), (ix, iy + 1)]
            {
                if nx < grid.n_re && ny < grid.n_im && !stable_mask[ny * grid.n_re + nx] {
                    edge = true;
                }
            }
            if edge {
                boundary.push(points[iy * grid.n_re + ix].z);
            }
        }
    }
    RegionScan { points, boundary }
}

/// Leftmost real-axis crossing of `|R(z)| = 1` for an explicit flow family
/// (the classical Runge-Kutta intercept). `None` for the implicit families,
/// which are stable on the whole negative real axis.
pub fn real_axis_intercept(order: u8, family: FlowFamily) -> Option<f64> {
    if family == FlowFamily::Implicit {
        return None;
    }
    let f = |x: f64| flow_scalar(order, family, C64::new(x, 0.0)).norm() - 1.0;
    // Bracket the first crossing left of the origin.
    let mut hi = -1e-3;
    let mut lo = hi;
    loop {
        lo -= 0.05;
        if f(lo) > 0.0 {
            break;
        }
        assert!(lo > -10.0, "no real-axis intercept found");
        hi = lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{apply_flow, FlowKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn helper_scalars_match_flow_action() {
        // Each scalar is the corresponding flow applied to diag(0, α_J).
        let case = TestCase::Decay { omega: 1.3, t_decay: 7.0 };
        let model = case.model();
        let s = HelperScalars::new(0.37, case.alpha_j());
        let mut v = DMatrix::<C64>::zeros(2, 1);
        v[(1, 0)] = linalg::ONE;
        for family in [FlowFamily::Explicit, FlowFamily::Implicit] {
            for order in 1..=4u8 {
                let out =
                    apply_flow(&model, FlowKind::new(order, family), 0.0, s.dt, &v).unwrap();
                let expect = s.scalar(order, family, 1.0);
                assert!(
                    (out[(1, 0)] - expect).norm() < 1e-13,
                    "order {order} {family:?}"
                );
            }
        }
    }

    #[test]
    fn first_order_decay_matrix_entries() {
        let case = TestCase::Decay { omega: 1.0, t_decay: 10.0 };
        let dt = 0.1;
        let m = amplification_closed_form(case, 1, IndexSelection::top(FlowFamily::Explicit), dt);
        assert!((m[(0, 3)].re - dt / 10.0).abs() < 1e-15);
        let a = linalg::ONE + case.alpha_j() * dt;
        assert!((m[(3, 3)].re - a.norm_sqr()).abs() < 1e-14);
        assert!((m[(2, 2)] - a).norm() < 1e-15);
    }

    #[test]
    fn zero_step_limit_is_identity() {
        for case in [
            TestCase::Decay { omega: 2.0, t_decay: 3.0 },
            TestCase::DecayDephasing { omega: 2.0, t1: 3.0, t2: 5.0 },
        ] {
            for order in 1..=4u8 {
                for idx in IndexSelection::enumerate(order) {
                    let m = amplification_closed_form(case, order, idx, 0.0);
                    assert!((m - linalg::eye(4)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_numeric_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let omega = rng.gen_range(0.1..3.0);
            let t1 = rng.gen_range(1.0..20.0);
            let t2 = rng.gen_range(1.0..20.0);
            let dt = rng.gen_range(0.01..0.3);
            for case in [
                TestCase::Decay { omega, t_decay: t1 },
                TestCase::DecayDephasing { omega, t1, t2 },
            ] {
                for order in 1..=4u8 {
                    for idx in IndexSelection::enumerate(order) {
                        let closed = amplification_closed_form(case, order, idx, dt);
                        let config = scheme_config_from_indices(order, idx);
                        let numeric = amplification_numeric(case, &config, dt).unwrap();
                        assert!(
                            (&closed - &numeric).norm() < 1e-10,
                            "case {case:?} order {order} idx {idx:?}:\n{closed}\n{numeric}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn stationary_eigenvalue_present() {
        let case = TestCase::DecayDephasing { omega: 1.5, t1: 8.0, t2: 12.0 };
        for order in 1..=4u8 {
            for idx in IndexSelection::enumerate(order) {
                let m = amplification_closed_form(case, order, idx, 0.15);
                let has_one = linalg::eigenvalues(&m)
                    .iter()
                    .any(|e| (e - linalg::ONE).norm() < 1e-12);
                assert!(has_one);
            }
        }
    }

    #[test]
    fn condition_matches_spectral_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let omega = rng.gen_range(0.0..4.0);
            let t1 = rng.gen_range(0.5..10.0);
            let t2 = rng.gen_range(0.5..10.0);
            let dt = rng.gen_range(0.05..4.0);
            for case in [
                TestCase::Decay { omega, t_decay: t1 },
                TestCase::DecayDephasing { omega, t1, t2 },
            ] {
                for order in 1..=4u8 {
                    for idx in IndexSelection::enumerate(order) {
                        let m = amplification_closed_form(case, order, idx, dt);
                        let radius = spectral_radius_nonstationary(&m);
                        let expect = radius <= 1.0 + STABILITY_TOL;
                        assert_eq!(
                            stability_condition(case, order, idx, dt),
                            expect,
                            "case {case:?} order {order} idx {idx:?} dt {dt} radius {radius}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn first_order_explicit_decay_threshold() {
        // ω = 0: stable iff Δt ≤ 4T.
        let t = 2.5;
        let case = TestCase::Decay { omega: 0.0, t_decay: t };
        let idx = IndexSelection::top(FlowFamily::Explicit);
        assert!(stability_condition(case, 1, idx, 4.0 * t - 1e-9));
        assert!(!stability_condition(case, 1, idx, 4.0 * t + 1e-6));
    }

    #[test]
    fn implicit_decay_is_unconditionally_stable() {
        let case = TestCase::Decay { omega: 3.0, t_decay: 1.0 };
        for order in 1..=4u8 {
            let idx = IndexSelection::top(FlowFamily::Implicit);
            for &dt in &[0.1, 10.0, 1e3, 1e6] {
                assert!(stability_condition(case, order, idx, dt));
            }
        }
    }

    #[test]
    fn first_order_dephasing_conditions() {
        // Explicit: the dephasing factor (Δt+T₂)/T₂ makes the condition
        // strictly tighter than in the decay-only case, so the verdict flips
        // at a smaller step. Implicit: the survival factor is
        // (1+Δt/T₂) / ((1+Δt·a)² + Δt²ω²) with 2a = 1/T₁+1/T₂ ≥ 1/T₂, which
        // never exceeds 1 — the condition is tighter than decay-only but
        // still holds for every step size.
        let case = TestCase::DecayDephasing { omega: 0.0, t1: 1e6, t2: 0.1 };
        let ex = IndexSelection::top(FlowFamily::Explicit);
        assert!(stability_condition(case, 1, ex, 0.01));
        assert!(!stability_condition(case, 1, ex, 0.4));
        let decay_only = TestCase::Decay { omega: 0.0, t_decay: 1e6 };
        assert!(stability_condition(decay_only, 1, ex, 0.4));

        let im = IndexSelection::top(FlowFamily::Implicit);
        for &dt in &[1e-3, 0.05, 1.0, 1e2, 1e6] {
            assert!(stability_condition(case, 1, im, dt), "dt = {dt}");
        }
        // The survival entry still exceeds the decay-only value |α₁,₁|².
        let m = amplification_closed_form(case, 1, im, 0.05);
        let s = HelperScalars::new(0.05, case.alpha_j());
        assert!(m[(3, 3)].re > s.alpha1(1.0).norm_sqr());
    }

    #[test]
    fn decay_verdict_independent_of_lower_indices() {
        let case = TestCase::Decay { omega: 1.0, t_decay: 4.0 };
        for &dt in &[0.3, 2.0, 8.0, 20.0] {
            for i in [FlowFamily::Explicit, FlowFamily::Implicit] {
                let verdicts: Vec<bool> = IndexSelection::enumerate(2)
                    .into_iter()
                    .filter(|idx| idx.i == i)
                    .map(|idx| stability_condition(case, 2, idx, dt))
                    .collect();
                assert!(verdicts.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }

    #[test]
    fn large_t2_recovers_decay_verdicts() {
        let decay = TestCase::Decay { omega: 1.2, t_decay: 3.0 };
        let both = TestCase::DecayDephasing { omega: 1.2, t1: 3.0, t2: 1e9 };
        for order in 1..=4u8 {
            for idx in IndexSelection::enumerate(order) {
                for &dt in &[0.1, 1.0, 5.0, 11.0] {
                    assert_eq!(
                        stability_condition(decay, order, idx, dt),
                        stability_condition(both, order, idx, dt)
                    );
                }
            }
        }
    }

    #[test]
    fn real_axis_intercepts_are_classical() {
        let expect = [-2.0, -2.0, -2.512745, -2.785293];
        for order in 1..=4u8 {
            let x = real_axis_intercept(order, FlowFamily::Explicit).unwrap();
            assert!(
                (x - expect[(order - 1) as usize]).abs() < 1e-3,
                "order {order}: {x}"
            );
        }
        assert!(real_axis_intercept(2, FlowFamily::Implicit).is_none());
    }

    #[test]
    fn region_scan_first_order_is_shifted_unit_disk() {
        let grid = RegionGrid { n_re: 61, n_im: 61, ..RegionGrid::default() };
        let scan = stability_region_scan(1, FlowFamily::Explicit, &grid);
        for p in &scan.points {
            let inside = (p.z + linalg::ONE).norm() <= 1.0 + STABILITY_TOL;
            assert_eq!(p.stable, inside, "z = {}", p.z);
        }
        assert!(!scan.boundary.is_empty());
    }
}
