//! Lindblad models: generic (arbitrary matrices) and the transmon /
//! qudit-cavity family, with rotating-frame Hamiltonians, analytic control
//! pulses, and initial-state helpers.
//!
//! A model carries a constant Hamiltonian part plus a list of time terms
//! `f_m(t) B_m` with real scalar coefficients and Hermitian matrices. The
//! effective generator `J(t) = -iH(t) - ½ Σ L†L` and its first two time
//! derivatives are assembled from the analytic derivatives of the `f_m`.
//! Models are immutable after construction and safe to evaluate from
//! multiple threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, C64};
use crate::Result;

const TWO_PI: f64 = std::f64::consts::TAU;

/// A control pulse in the rotating frame, supplying the in-phase component
/// p(t), the quadrature component q(t), and their first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlPulse {
    /// No drive; value and all derivatives are zero.
    Zero,
    /// `p(t) = A/2 (1 + tanh(δ(t - τ)))`, `q = 0`.
    TanhRamp {
        /// Amplitude in angular-frequency units.
        amplitude: f64,
        /// Steepness δ, units of 1/time.
        steepness: f64,
        /// Ramp center τ.
        center: f64,
    },
    /// `p(t) = A exp(-((t/t_ref - 1)/B)^10)`, `q = 0`.
    SuperGaussian {
        /// Amplitude A (dimensionless rotating-frame units).
        amplitude: f64,
        /// Width B (dimensionless).
        width: f64,
        /// Reference time t_ref.
        t_ref: f64,
    },
    /// Linear interpolation through tabulated samples. Carries no analytic
    /// derivatives; schemes that need dJ/dt reject models built from it.
    Tabulated {
        times: Vec<f64>,
        p_values: Vec<f64>,
        q_values: Vec<f64>,
    },
}

impl ControlPulse {
    pub fn is_zero(&self) -> bool {
        matches!(self, ControlPulse::Zero)
    }

    /// True when p and q have analytic first and second derivatives.
    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(self, ControlPulse::Tabulated { .. })
    }

    /// True when q(t) is identically zero.
    pub fn q_is_zero(&self) -> bool {
        match self {
            ControlPulse::Tabulated { q_values, .. } => q_values.iter().all(|&q| q == 0.0),
            _ => true,
        }
    }

    pub fn p(&self, t: f64) -> f64 {
        match self {
            ControlPulse::Zero => 0.0,
            ControlPulse::TanhRamp { amplitude, steepness, center } => {
                0.5 * amplitude * (1.0 + (steepness * (t - center)).tanh())
            }
            ControlPulse::SuperGaussian { amplitude, width, t_ref } => {
                let u = (t / t_ref - 1.0) / width;
                amplitude * (-u.powi(10)).exp()
            }
            ControlPulse::Tabulated { times, p_values, .. } => interp(times, p_values, t),
        }
    }

    pub fn q(&self, t: f64) -> f64 {
        match self {
            ControlPulse::Tabulated { times, q_values, .. } => interp(times, q_values, t),
            _ => 0.0,
        }
    }

    /// First and second derivatives of p.
    pub fn p_derivatives(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            ControlPulse::Zero => Ok((0.0, 0.0)),
            ControlPulse::TanhRamp { amplitude, steepness, center } => {
                let s = steepness * (t - center);
                let sech2 = 1.0 / s.cosh().powi(2);
                let d1 = 0.5 * amplitude * steepness * sech2;
                let d2 = -amplitude * steepness * steepness * sech2 * s.tanh();
                Ok((d1, d2))
            }
            ControlPulse::SuperGaussian { amplitude, width, t_ref } => {
                let scale = 1.0 / (width * t_ref);
                let u = (t / t_ref - 1.0) / width;
                let g = (-u.powi(10)).exp();
                let d1 = amplitude * g * (-10.0 * u.powi(9)) * scale;
                let d2 = amplitude * g * (100.0 * u.powi(18) - 90.0 * u.powi(8)) * scale * scale;
                Ok((d1, d2))
            }
            ControlPulse::Tabulated { .. } => Err(Error::DerivativesUnavailable),
        }
    }

    /// First and second derivatives of q.
    pub fn q_derivatives(&self, _t: f64) -> Result<(f64, f64)> {
        match self {
            ControlPulse::Tabulated { .. } => Err(Error::DerivativesUnavailable),
            _ => Ok((0.0, 0.0)),
        }
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    if t <= times[0] {
        return values[0];
    }
    if t >= *times.last().unwrap() {
        return *values.last().unwrap();
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] * (1.0 - w) + values[i + 1] * w
}

/// One subsystem of a composite transmon model. Frequencies are angular
/// (rad per time unit); infinite T1/T2 means the channel is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSpec {
    pub levels: usize,
    /// 0 -> 1 transition frequency ω.
    pub frequency: f64,
    /// Self-Kerr coefficient ξ.
    pub self_kerr: f64,
    /// Rotating-frame frequency ω^r.
    pub rotation_frequency: f64,
    pub t1: f64,
    pub t2: f64,
}

impl SubsystemSpec {
    fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "subsystem must have at least 2 levels, got {}",
                self.levels
            )));
        }
        if self.t1 <= 0.0 || self.t2 <= 0.0 {
            return Err(Error::InvalidParameter(
                "decay and dephasing times must be positive (or infinite)".into(),
            ));
        }
        Ok(())
    }
}

/// Dipole / cross-Kerr coupling between subsystems k < l.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub k: usize,
    pub l: usize,
    /// Dipole coupling J_kl (angular frequency).
    pub dipole: f64,
    /// Cross-Kerr coefficient ξ_kl (angular frequency).
    pub cross_kerr: f64,
}

/// Real scalar coefficient of a Hamiltonian time term.
#[derive(Debug, Clone)]
pub enum TimeCoeff {
    Cos(f64),
    Sin(f64),
    PulseP(ControlPulse),
    PulseQ(ControlPulse),
}

impl TimeCoeff {
    fn value(&self, t: f64) -> f64 {
        match self {
            TimeCoeff::Cos(w) => (w * t).cos(),
            TimeCoeff::Sin(w) => (w * t).sin(),
            TimeCoeff::PulseP(p) => p.p(t),
            TimeCoeff::PulseQ(p) => p.q(t),
        }
    }

    fn derivatives(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            TimeCoeff::Cos(w) => Ok((-w * (w * t).sin(), -w * w * (w * t).cos())),
            TimeCoeff::Sin(w) => Ok((w * (w * t).cos(), -w * w * (w * t).sin())),
            TimeCoeff::PulseP(p) => p.p_derivatives(t),
            TimeCoeff::PulseQ(p) => p.q_derivatives(t),
        }
    }

    fn has_analytic_derivatives(&self) -> bool {
        match self {
            TimeCoeff::PulseP(p) | TimeCoeff::PulseQ(p) => p.has_analytic_derivatives(),
            _ => true,
        }
    }
}

/// A time-dependent Hamiltonian term `f(t) B` with `f` real and `B` Hermitian.
#[derive(Debug, Clone)]
pub struct TimeTerm {
    pub coeff: TimeCoeff,
    pub op: DMatrix<C64>,
}

/// A Lindblad model: jump operators plus the Hamiltonian split into a
/// constant part and time terms, from which H(t), J(t), dJ/dt, d²J/dt² are
/// evaluated.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    dim: usize,
    jump_ops: Vec<DMatrix<C64>>,
    h_const: DMatrix<C64>,
    time_terms: Vec<TimeTerm>,
    /// `-½ Σ L†L`, the constant anti-Hermitian-free damping part of J.
    damping: DMatrix<C64>,
}

impl LindbladModel {
    /// Build a model from raw parts. `h_const` and every term matrix must be
    /// Hermitian (to 1e-12 relative Frobenius norm); jump operators are
    /// arbitrary d×d matrices.
    pub fn from_parts(
        h_const: DMatrix<C64>,
        time_terms: Vec<TimeTerm>,
        jump_ops: Vec<DMatrix<C64>>,
    ) -> Result<Self> {
        let dim = h_const.nrows();
        if h_const.ncols() != dim {
            return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
        }
        if linalg::hermiticity_defect(&h_const) > 1e-12 {
            return Err(Error::InvalidParameter("constant Hamiltonian part is not Hermitian".into()));
        }
        for term in &time_terms {
            if term.op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch("time-term operator shape".into()));
            }
            if linalg::hermiticity_defect(&term.op) > 1e-12 {
                return Err(Error::InvalidParameter("time-term operator is not Hermitian".into()));
            }
        }
        for l in &jump_ops {
            if l.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch("jump-operator shape".into()));
            }
        }
        let mut damping = DMatrix::<C64>::zeros(dim, dim);
        for l in &jump_ops {
            damping -= (l.adjoint() * l).scale(0.5);
        }
        Ok(Self { dim, jump_ops, h_const, time_terms, damping })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jump_ops(&self) -> &[DMatrix<C64>] {
        &self.jump_ops
    }

    /// True when all time terms carry analytic derivatives; required by the
    /// implicit order-3/4 flow.
    pub fn has_analytic_derivatives(&self) -> bool {
        self.time_terms.iter().all(|t| t.coeff.has_analytic_derivatives())
    }

    /// H(t), Hermitian.
    pub fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let mut h = self.h_const.clone();
        for term in &self.time_terms {
            let f = term.coeff.value(t);
            if f != 0.0 {
                h += term.op.scale(f);
            }
        }
        h
    }

    /// The effective generator `J(t) = -iH(t) - ½ Σ L†L`.
    pub fn generator(&self, t: f64) -> DMatrix<C64> {
        let mut j = &self.h_const * (-linalg::I);
        j += &self.damping;
        for term in &self.time_terms {
            let f = term.coeff.value(t);
            if f != 0.0 {
                j += &term.op * (-linalg::I * f);
            }
        }
        j
    }

    /// dJ/dt(t).
    pub fn generator_dt(&self, t: f64) -> Result<DMatrix<C64>> {
        let mut j = DMatrix::<C64>::zeros(self.dim, self.dim);
        for term in &self.time_terms {
            let (d1, _) = term.coeff.derivatives(t)?;
            if d1 != 0.0 {
                j += &term.op * (-linalg::I * d1);
            }
        }
        Ok(j)
    }

    /// d²J/dt²(t).
    pub fn generator_dt2(&self, t: f64) -> Result<DMatrix<C64>> {
        let mut j = DMatrix::<C64>::zeros(self.dim, self.dim);
        for term in &self.time_terms {
            let (_, d2) = term.coeff.derivatives(t)?;
            if d2 != 0.0 {
                j += &term.op * (-linalg::I * d2);
            }
        }
        Ok(j)
    }
}

/// Bosonic lowering operator on n levels: `a|j> = √j |j-1>`.
pub fn lowering_operator(n: usize) -> DMatrix<C64> {
    assert!(n >= 1);
    DMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Number operator `a†a` on n levels.
pub fn number_operator(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Largest total dimension accepted for dense storage.
const MAX_DIM: usize = 4096;

/// Embed `op` acting on subsystem `k` into the full product space.
/// Subsystem 0 is the slowest-varying index (leftmost Kronecker factor).
fn embed(op: &DMatrix<C64>, dims: &[usize], k: usize) -> DMatrix<C64> {
    let before: usize = dims[..k].iter().product();
    let after: usize = dims[k + 1..].iter().product();
    let full = linalg::kron(&linalg::eye(before), op);
    linalg::kron(&full, &linalg::eye(after))
}

/// Build a rotating-frame transmon/qudit-cavity model.
///
/// The drift Hamiltonian carries detunings `(ω_k - ω_k^r)`, self-Kerr and
/// cross-Kerr terms; dipole couplings between frames rotating at different
/// rates become cos/sin time terms at `η_kl = ω_k^r - ω_l^r`. Controls enter
/// as `p^k(t)(a_k + a_k†) + i q^k(t)(a_k - a_k†)`. Decay and dephasing
/// channels with infinite characteristic time are omitted.
pub fn build_transmon_model(
    subsystems: &[SubsystemSpec],
    couplings: &[CouplingSpec],
    controls: &[ControlPulse],
) -> Result<LindbladModel> {
    if subsystems.is_empty() {
        return Err(Error::InvalidParameter("at least one subsystem required".into()));
    }
    if controls.len() != subsystems.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} controls for {} subsystems",
            controls.len(),
            subsystems.len()
        )));
    }
    for s in subsystems {
        s.validate()?;
    }
    let dims: Vec<usize> = subsystems.iter().map(|s| s.levels).collect();
    let dim: usize = dims.iter().product();
    if dim > MAX_DIM {
        return Err(Error::DimensionOverflow(dim));
    }

    // Per-subsystem embedded operators.
    let lowering: Vec<DMatrix<C64>> = (0..dims.len())
        .map(|k| embed(&lowering_operator(dims[k]), &dims, k))
        .collect();
    let number: Vec<DMatrix<C64>> = (0..dims.len())
        .map(|k| embed(&number_operator(dims[k]), &dims, k))
        .collect();

    let mut h_const = DMatrix::<C64>::zeros(dim, dim);
    let mut time_terms = Vec::new();
    let mut jump_ops = Vec::new();

    for (k, s) in subsystems.iter().enumerate() {
        let detuning = s.frequency - s.rotation_frequency;
        if detuning != 0.0 {
            h_const += number[k].scale(detuning);
        }
        if s.self_kerr != 0.0 {
            // a†a†aa = N(N - 1)
            let kerr = &number[k] * (&number[k] - linalg::eye(dim));
            h_const -= kerr.scale(0.5 * s.self_kerr);
        }
        if s.t1.is_finite() {
            jump_ops.push(lowering[k].scale(1.0 / s.t1.sqrt()));
        }
        if s.t2.is_finite() {
            jump_ops.push(number[k].scale(1.0 / s.t2.sqrt()));
        }
    }

    for c in couplings {
        if c.k >= c.l || c.l >= subsystems.len() {
            return Err(Error::InvalidParameter(format!(
                "coupling indices ({}, {}) must satisfy k < l < {}",
                c.k,
                c.l,
                subsystems.len()
            )));
        }
        if c.cross_kerr != 0.0 {
            h_const -= (&number[c.k] * &number[c.l]).scale(c.cross_kerr);
        }
        if c.dipole != 0.0 {
            let exchange = lowering[c.k].adjoint() * &lowering[c.l];
            let symmetric = &exchange + exchange.adjoint();
            let eta = subsystems[c.k].rotation_frequency - subsystems[c.l].rotation_frequency;
            if eta == 0.0 {
                h_const += symmetric.scale(c.dipole);
            } else {
                let antisymmetric = (&exchange - exchange.adjoint()) * (linalg::I * c.dipole);
                time_terms.push(TimeTerm {
                    coeff: TimeCoeff::Cos(eta),
                    op: symmetric.scale(c.dipole),
                });
                time_terms.push(TimeTerm { coeff: TimeCoeff::Sin(eta), op: antisymmetric });
            }
        }
    }

    for (k, pulse) in controls.iter().enumerate() {
        if pulse.is_zero() {
            continue;
        }
        let a = &lowering[k];
        time_terms.push(TimeTerm {
            coeff: TimeCoeff::PulseP(pulse.clone()),
            op: a + a.adjoint(),
        });
        if !pulse.q_is_zero() {
            time_terms.push(TimeTerm {
                coeff: TimeCoeff::PulseQ(pulse.clone()),
                op: (a - a.adjoint()) * linalg::I,
            });
        }
    }

    LindbladModel::from_parts(h_const, time_terms, jump_ops)
}

/// Jaynes-Cummings model: a qubit exchanging excitations with an m-level
/// cavity mode at rate `coupling`, qubit dephasing with time `t2_qubit`, and
/// a control pulse driving the cavity mode. Dimensionless rotating-frame
/// units. (A drive of the same amplitude on the qubit is negligible next to
/// the √n-enhanced exchange coupling and leaves the revival intact; the
/// cavity drive is what suppresses it.)
pub fn build_jaynes_cummings_model(
    m: usize,
    coupling: f64,
    t2_qubit: f64,
    control: ControlPulse,
) -> Result<LindbladModel> {
    let inf = f64::INFINITY;
    let subsystems = [
        SubsystemSpec {
            levels: 2,
            frequency: 0.0,
            self_kerr: 0.0,
            rotation_frequency: 0.0,
            t1: inf,
            t2: t2_qubit,
        },
        SubsystemSpec {
            levels: m,
            frequency: 0.0,
            self_kerr: 0.0,
            rotation_frequency: 0.0,
            t1: inf,
            t2: inf,
        },
    ];
    let couplings = [CouplingSpec { k: 0, l: 1, dipole: coupling, cross_kerr: 0.0 }];
    build_transmon_model(&subsystems, &couplings, &[ControlPulse::Zero, control])
}

/// Coherent-state amplitude vector of length m with components proportional
/// to `|v|^n / √(n!)`, normalized to unit 2-norm. The accumulation runs in
/// the log domain so large n and large v stay finite.
pub fn coherent_state_vector(m: usize, v: f64) -> DVector<C64> {
    assert!(m >= 1);
    let av = v.abs();
    if av == 0.0 {
        let mut e0 = DVector::zeros(m);
        e0[0] = linalg::ONE;
        return e0;
    }
    let mut log_amp = vec![0.0_f64; m];
    let mut acc = 0.0;
    for n in 1..m {
        acc += av.ln() - 0.5 * (n as f64).ln();
        log_amp[n] = acc;
    }
    let peak = log_amp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let amps: Vec<f64> = log_amp.iter().map(|&l| (l - peak).exp()).collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    DVector::from_iterator(m, amps.iter().map(|&a| C64::new(a / norm, 0.0)))
}

/// Per-subsystem level populations: the diagonal of each reduced density
/// matrix of `ρ = V V†`, computed from the factor without forming ρ.
pub fn populations(v: &DMatrix<C64>, subsystem_dims: &[usize]) -> Result<Vec<Vec<f64>>> {
    let d: usize = subsystem_dims.iter().product();
    if v.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} rows but subsystem dims multiply to {}",
            v.nrows(),
            d
        )));
    }
    // diag(ρ)_i = Σ_c |V_ic|²
    let weights: Vec<f64> = (0..d).map(|i| v.row(i).iter().map(|z| z.norm_sqr()).sum()).collect();
    let mut result = Vec::with_capacity(subsystem_dims.len());
    for (s, &n_s) in subsystem_dims.iter().enumerate() {
        let after: usize = subsystem_dims[s + 1..].iter().product();
        let mut pops = vec![0.0; n_s];
        for (i, w) in weights.iter().enumerate() {
            pops[(i / after) % n_s] += w;
        }
        result.push(pops);
    }
    Ok(result)
}

// --- JSON model configuration -------------------------------------------

/// On-disk model description. Frequencies are linear (GHz) and multiplied by
/// 2π at load time; times are µs (converted to ns). Absent T1/T2 mean no
/// channel. The internal unit system is ns and rad/ns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub subsystems: Vec<SubsystemConfig>,
    #[serde(default)]
    pub couplings: Vec<CouplingConfig>,
    #[serde(default)]
    pub controls: Vec<ControlConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsystemConfig {
    pub levels: usize,
    #[serde(default)]
    pub omega_ghz: f64,
    #[serde(default)]
    pub xi_ghz: f64,
    #[serde(default)]
    pub rot_freq_ghz: f64,
    #[serde(default)]
    pub t1_us: Option<f64>,
    #[serde(default)]
    pub t2_us: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub k: usize,
    pub l: usize,
    #[serde(default)]
    pub j_ghz: f64,
    #[serde(default)]
    pub xi_ghz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ControlConfig {
    Zero,
    TanhRamp {
        amplitude_ghz: f64,
        steepness_per_ns: f64,
        center_ns: f64,
    },
    SuperGaussian {
        amplitude: f64,
        width: f64,
        t_ref_ns: f64,
    },
    Tabulated {
        times_ns: Vec<f64>,
        p_values: Vec<f64>,
        #[serde(default)]
        q_values: Vec<f64>,
    },
}

impl ControlConfig {
    pub fn to_pulse(&self) -> ControlPulse {
        match self {
            ControlConfig::Zero => ControlPulse::Zero,
            ControlConfig::TanhRamp { amplitude_ghz, steepness_per_ns, center_ns } => {
                ControlPulse::TanhRamp {
                    amplitude: TWO_PI * amplitude_ghz,
                    steepness: *steepness_per_ns,
                    center: *center_ns,
                }
            }
            ControlConfig::SuperGaussian { amplitude, width, t_ref_ns } => {
                ControlPulse::SuperGaussian {
                    amplitude: *amplitude,
                    width: *width,
                    t_ref: *t_ref_ns,
                }
            }
            ControlConfig::Tabulated { times_ns, p_values, q_values } => {
                let q = if q_values.is_empty() {
                    vec![0.0; p_values.len()]
                } else {
                    q_values.clone()
                };
                ControlPulse::Tabulated {
                    times: times_ns.clone(),
                    p_values: p_values.clone(),
                    q_values: q,
                }
            }
        }
    }
}

impl ModelConfig {
    pub fn subsystem_dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.levels).collect()
    }

    pub fn to_model(&self) -> Result<LindbladModel> {
        let subsystems: Vec<SubsystemSpec> = self
            .subsystems
            .iter()
            .map(|s| SubsystemSpec {
                levels: s.levels,
                frequency: TWO_PI * s.omega_ghz,
                self_kerr: TWO_PI * s.xi_ghz,
                rotation_frequency: TWO_PI * s.rot_freq_ghz,
                t1: s.t1_us.map_or(f64::INFINITY, |t| t * 1000.0),
                t2: s.t2_us.map_or(f64::INFINITY, |t| t * 1000.0),
            })
            .collect();
        let couplings: Vec<CouplingSpec> = self
            .couplings
            .iter()
            .map(|c| CouplingSpec {
                k: c.k,
                l: c.l,
                dipole: TWO_PI * c.j_ghz,
                cross_kerr: TWO_PI * c.xi_ghz,
            })
            .collect();
        let mut controls: Vec<ControlPulse> = self.controls.iter().map(|c| c.to_pulse()).collect();
        controls.resize(subsystems.len(), ControlPulse::Zero);
        build_transmon_model(&subsystems, &couplings, &controls)
    }
}
