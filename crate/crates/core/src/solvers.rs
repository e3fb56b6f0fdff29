//! Time integration of the filtered primitive equations and of the limit system.
//!
//! All schemes are classical RK4 in a rotating frame: the filtered system is
//! stepped with the oscillating phases evaluated at the stage times, the
//! direct system uses the exact propagator as an integrating factor, and the
//! limit system uses the exact decay e^{−a dt} of its diagonal dissipation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpectralField4};
use crate::lattice::Mode;
use crate::limit::{galerkin_truncate, LimitStencil, Operators};
use crate::linear::{Eigen3, ModeKind};

const CZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest dt·(dissipation rate) accepted by the explicit RK4 dissipation.
pub const MAX_DISSIPATIVE_STEP: f64 = 2.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialKind {
    RandomDivFree,
    SingleEigenmode { mode: Mode, branch: usize },
    QgOnly,
    OscOnly,
}

impl std::str::FromStr for InitialKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-div-free" => Ok(InitialKind::RandomDivFree),
            "qg-only" => Ok(InitialKind::QgOnly),
            "osc-only" => Ok(InitialKind::OscOnly),
            "single-eigenmode" => Ok(InitialKind::SingleEigenmode { mode: [1, 0, 1], branch: 1 }),
            other => Err(Error::Precondition(format!("unknown initial data kind '{other}'"))),
        }
    }
}

/// Reproducible divergence-free initial data with zero horizontal average.
///
/// Coefficients are drawn uniformly, weighted by (1+ň₃²)^{−s/2−1/2}(1+|ň_h|²)^{−1},
/// and the whole field is scaled to L² norm `amplitude`.
pub fn make_initial_data(kind: InitialKind, seed: u64, amplitude: f64, s: f64, ops: &Operators) -> SpectralField4 {
    let lat = &ops.lattice;
    let basis = &ops.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField4::zeros(lat);
    let half = lat.zero_index();
    for i in 0..half {
        // draw for every mode so the stream does not depend on the kind
        let draws: [Complex64; 3] = std::array::from_fn(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let k = lat.checked(i);
        if basis.kind[i] == ModeKind::Vertical || basis.kind[i] == ModeKind::Zero {
            continue;
        }
        let w = (1.0 + k[2] * k[2]).powf(-s / 2.0 - 0.5) / (1.0 + k[0] * k[0] + k[1] * k[1]);
        let alpha: Eigen3 = match kind {
            InitialKind::RandomDivFree => draws.map(|d| d * w),
            InitialKind::QgOnly => [draws[0] * w, CZERO, CZERO],
            InitialKind::OscOnly => [CZERO, draws[1] * w, draws[2] * w],
            InitialKind::SingleEigenmode { mode, branch } => {
                let n = lat.mode(i);
                if n == mode || n == mode.map(|x| -x) {
                    let mut a = [CZERO; 3];
                    a[branch.min(2)] = Complex64::new(1.0, 0.0);
                    a
                } else {
                    [CZERO; 3]
                }
            }
        };
        let v = basis.from_eigen_mode(i, &alpha);
        f.coeffs[i] = v;
        f.coeffs[lat.neg_index(i)] = v.map(|z| z.conj());
    }
    let norm = f.l2_norm();
    if norm > 0.0 {
        f = f.scale(amplitude / norm);
    }
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub eps: f64,
    /// Galerkin radius applied to every right-hand side, if any.
    pub n_cut: Option<f64>,
    pub cfl_safety: f64,
    /// Steps in the filtered system are capped at `phase_resolution·ε`.
    pub phase_resolution: f64,
    /// Drop the transport term (linear runs).
    pub linear_only: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { dt: 1e-3, t_final: 1.0, eps: 1e-2, n_cut: None, cfl_safety: 0.5, phase_resolution: 0.1, linear_only: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_final > 0.0 && self.eps > 0.0) {
            return Err(Error::Precondition("dt, t_final and eps must be positive".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Precondition("cfl_safety must lie in (0, 1]".into()));
        }
        if !(self.phase_resolution > 0.0) {
            return Err(Error::Precondition("phase_resolution must be positive".into()));
        }
        Ok(())
    }

    /// Step actually used by the filtered solver.
    pub fn filtered_dt(&self) -> f64 {
        self.dt.min(self.phase_resolution * self.eps)
    }
}

/// Splits [0, span] into equal steps no longer than `h_max`.
pub fn uniform_steps(span: f64, h_max: f64) -> (usize, f64) {
    let n = (span / h_max - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

fn check_dissipative_step(h: f64, ops: &Operators) -> Result<()> {
    let max_rate = (0..ops.lattice.len()).map(|i| ops.lattice.checked_h_sq(i)).fold(0.0, f64::max) * ops.spec.nu_max();
    if h * max_rate > MAX_DISSIPATIVE_STEP {
        return Err(Error::Precondition(format!("dt={h} too large for explicit dissipation (dt*max rate = {:.3})", h * max_rate)));
    }
    Ok(())
}

fn check_cfl(t: f64, h: f64, velocity_field: &SpectralField4, cfg: &SolverConfig, ops: &Operators) -> Result<()> {
    let umax = ops.grid.max_velocity(velocity_field);
    let courant = h * umax / ops.grid.min_spacing();
    if !courant.is_finite() {
        return Err(Error::NonFinite { t });
    }
    if courant > cfg.cfl_safety {
        return Err(Error::Cfl { t, courant, limit: cfg.cfl_safety });
    }
    Ok(())
}

fn check_finite(t: f64, f: &SpectralField4) -> Result<()> {
    if f.norm_sq().is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// State of the filtered system U^ε = ℒ(−t/ε)V^ε.
#[derive(Clone, Debug)]
pub struct PeState {
    pub t: f64,
    pub u: SpectralField4,
}

/// dU/dt = −Q^ε(U,U,t/ε) + 𝔻^ε(t/ε)U.
fn filtered_rhs(t: f64, u: &SpectralField4, cfg: &SolverConfig, ops: &Operators) -> Result<SpectralField4> {
    let theta = t / cfg.eps;
    let x = ops.basis.propagate(u, theta);
    let mut r = ops.apply_d(&x);
    if !cfg.linear_only {
        r = r.sub(&ops.projected_transport(&x, &x)?);
    }
    let out = ops.basis.propagate(&r, -theta);
    Ok(match cfg.n_cut {
        Some(c) => galerkin_truncate(&out, c),
        None => out,
    })
}

/// One RK4 step of length `h` of the filtered system.
pub fn step_filtered_pe(state: &PeState, h: f64, cfg: &SolverConfig, ops: &Operators) -> Result<PeState> {
    let (t, u) = (state.t, &state.u);
    let k1 = filtered_rhs(t, u, cfg, ops)?;
    let k2 = filtered_rhs(t + 0.5 * h, &u.axpy(0.5 * h, &k1), cfg, ops)?;
    let k3 = filtered_rhs(t + 0.5 * h, &u.axpy(0.5 * h, &k2), cfg, ops)?;
    let k4 = filtered_rhs(t + h, &u.axpy(h, &k3), cfg, ops)?;
    let inc = k1.axpy(2.0, &k2).axpy(2.0, &k3).add(&k4);
    let next = u.axpy(h / 6.0, &inc);
    check_finite(t + h, &next)?;
    Ok(PeState { t: t + h, u: next })
}

/// Integrates the filtered system from U(0) = V0, calling `observe` after
/// every `sample_dt` (and at t = 0).
pub fn integrate_filtered<F>(v0: &SpectralField4, cfg: &SolverConfig, sample_dt: f64, ops: &Operators, mut observe: F) -> Result<PeState>
where
    F: FnMut(&PeState),
{
    cfg.validate()?;
    v0.require_divergence_free()?;
    let (n_samples, sample) = uniform_steps(cfg.t_final, sample_dt);
    let (n_sub, h) = uniform_steps(sample, cfg.filtered_dt());
    check_dissipative_step(h, ops)?;
    let mut state = PeState { t: 0.0, u: v0.clone() };
    observe(&state);
    for j in 0..n_samples {
        for s in 0..n_sub {
            if s == 0 && !cfg.linear_only {
                let v = ops.basis.propagate(&state.u, state.t / cfg.eps);
                check_cfl(state.t, h, &v, cfg, ops)?;
            }
            state = step_filtered_pe(&state, h, cfg, ops)?;
        }
        state.t = (j + 1) as f64 * sample;
        observe(&state);
    }
    Ok(state)
}

/// State of the unfiltered system.
#[derive(Clone, Debug)]
pub struct DirectState {
    pub t: f64,
    pub v: SpectralField4,
}

fn direct_nonlinear(v: &SpectralField4, cfg: &SolverConfig, ops: &Operators) -> Result<SpectralField4> {
    let mut r = ops.apply_d(v);
    if !cfg.linear_only {
        r = r.sub(&ops.projected_transport(v, v)?);
    }
    let r = ops.tables.leray_project(&r);
    Ok(match cfg.n_cut {
        Some(c) => galerkin_truncate(&r, c),
        None => r,
    })
}

/// One Lawson RK4 step of ∂_tV + (1/ε)ℙ𝒜V = −ℙ(v·∇V) + 𝐃V with ℒ as integrating factor.
pub fn step_pe_direct(state: &DirectState, h: f64, cfg: &SolverConfig, ops: &Operators) -> Result<DirectState> {
    let e = |f: &SpectralField4, tau: f64| ops.basis.propagate(f, tau / cfg.eps);
    let v = &state.v;
    let k1 = direct_nonlinear(v, cfg, ops)?;
    let ev_half = e(v, 0.5 * h);
    let k2 = direct_nonlinear(&e(&v.axpy(0.5 * h, &k1), 0.5 * h), cfg, ops)?;
    let k3 = direct_nonlinear(&ev_half.axpy(0.5 * h, &k2), cfg, ops)?;
    let k4 = direct_nonlinear(&e(v, h).axpy(h, &e(&k3, 0.5 * h)), cfg, ops)?;
    let mid = e(&k2.add(&k3), 0.5 * h);
    let acc = e(&k1, h).axpy(2.0, &mid).add(&k4);
    let next = e(v, h).axpy(h / 6.0, &acc);
    check_finite(state.t + h, &next)?;
    Ok(DirectState { t: state.t + h, v: next })
}

/// State of the limit system in eigen-coordinates: α₀ carries the QG part
/// (Ω̂ = i|ň|_F α₀), α± the oscillating part.
#[derive(Clone, Debug)]
pub struct LimitState {
    pub t: f64,
    pub alpha: Vec<Eigen3>,
    /// 2c∫‖∇_hU‖² accumulated so far.
    pub dissipated: f64,
    /// 2c∫‖∇_hΩ‖² accumulated so far.
    pub dissipated_pv: f64,
}

impl LimitState {
    pub fn from_field(u: &SpectralField4, ops: &Operators) -> Result<Self> {
        u.require_divergence_free()?;
        Ok(LimitState { t: 0.0, alpha: ops.basis.to_eigen(u), dissipated: 0.0, dissipated_pv: 0.0 })
    }

    pub fn field(&self, ops: &Operators) -> SpectralField4 {
        ops.basis.from_eigen(&self.alpha)
    }

    pub fn u_osc(&self, ops: &Operators) -> SpectralField4 {
        let a: Vec<Eigen3> = self.alpha.iter().map(|x| [CZERO, x[1], x[2]]).collect();
        ops.basis.from_eigen(&a)
    }

    pub fn v_qg(&self, ops: &Operators) -> SpectralField4 {
        let a: Vec<Eigen3> = self.alpha.iter().map(|x| [x[0], CZERO, CZERO]).collect();
        ops.basis.from_eigen(&a)
    }

    pub fn omega(&self, ops: &Operators) -> ScalarField {
        let mut s = ScalarField::zeros(&ops.lattice);
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            *c = Complex64::new(0.0, pv_scale(ops, i)) * self.alpha[i][0];
        }
        s
    }

    pub fn energy(&self) -> f64 {
        self.alpha.iter().map(|a| a.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    pub fn pv_energy(&self, ops: &Operators) -> f64 {
        self.alpha.iter().enumerate().map(|(i, a)| pv_scale(ops, i).powi(2) * a[0].norm_sqr()).sum()
    }
}

/// |ň|_F, so that Ω̂ = i|ň|_F α₀.
fn pv_scale(ops: &Operators, i: usize) -> f64 {
    let d = ops.tables.delta_f_inv[i];
    if d > 0.0 {
        (1.0 / d).sqrt()
    } else {
        0.0
    }
}

/// Nonlinear part of the split limit system in eigen-coordinates:
/// the Ω-equation −v_QG^h·∇_hΩ and the resonant oscillating channels.
fn limit_nonlinear(alpha: &[Eigen3], stencil: &LimitStencil, ops: &Operators) -> Vec<Eigen3> {
    let state = LimitState { t: 0.0, alpha: alpha.to_vec(), dissipated: 0.0, dissipated_pv: 0.0 };
    let omega = state.omega(ops);
    let vq = ops.tables.qg_from_pv(&omega);
    let u1: Vec<Complex64> = vq.coeffs.iter().map(|c| c[0]).collect();
    let u2: Vec<Complex64> = vq.coeffs.iter().map(|c| c[1]).collect();
    let adv = ops.grid.scalar_transport_h(&u1, &u2, &omega);
    let osc = stencil.apply(alpha, alpha, true);
    (0..alpha.len())
        .into_par_iter()
        .map(|i| {
            let s = pv_scale(ops, i);
            let a0 = if s > 0.0 { -adv.coeffs[i] / Complex64::new(0.0, s) } else { CZERO };
            [a0, -osc[i][1], -osc[i][2]]
        })
        .collect()
}

fn decay(alpha: &[Eigen3], h: f64, ops: &Operators) -> Vec<Eigen3> {
    alpha.iter().zip(&ops.basis.damping).map(|(a, d)| std::array::from_fn(|j| a[j] * (-d[j] * h).exp())).collect()
}

fn axpy3(x: &[Eigen3], s: f64, y: &[Eigen3]) -> Vec<Eigen3> {
    x.iter().zip(y).map(|(a, b)| std::array::from_fn(|j| a[j] + b[j] * s)).collect()
}

/// Exact per-mode integral of 2c|ň_h|²|α|²e^{−2as} over one step.
fn ledger_increment(alpha: &[Eigen3], h: f64, ops: &Operators) -> (f64, f64) {
    let c = ops.spec.nu_min();
    let mut total = 0.0;
    let mut pv = 0.0;
    for (i, a) in alpha.iter().enumerate() {
        let h2 = ops.lattice.checked_h_sq(i);
        if h2 == 0.0 {
            continue;
        }
        for j in 0..3 {
            let rate = ops.basis.damping[i][j];
            let factor = if rate > 0.0 { c * h2 / rate * (1.0 - (-2.0 * rate * h).exp()) } else { 2.0 * c * h2 * h };
            let e = factor * a[j].norm_sqr();
            total += e;
            if j == 0 {
                pv += e * pv_scale(ops, i).powi(2);
            }
        }
    }
    (total, pv)
}

/// One integrating-factor RK4 step of the split limit system.
pub fn step_limit(state: &LimitState, h: f64, stencil: &LimitStencil, ops: &Operators) -> Result<LimitState> {
    let a = &state.alpha;
    let k1 = limit_nonlinear(a, stencil, ops);
    let a_half = decay(a, 0.5 * h, ops);
    let k2 = limit_nonlinear(&decay(&axpy3(a, 0.5 * h, &k1), 0.5 * h, ops), stencil, ops);
    let k3 = limit_nonlinear(&axpy3(&a_half, 0.5 * h, &k2), stencil, ops);
    let k4 = limit_nonlinear(&axpy3(&decay(a, h, ops), h, &decay(&k3, 0.5 * h, ops)), stencil, ops);
    let mid = decay(&axpy3(&k2, 1.0, &k3), 0.5 * h, ops);
    let acc = axpy3(&axpy3(&decay(&k1, h, ops), 2.0, &mid), 1.0, &k4);
    let next = axpy3(&decay(a, h, ops), h / 6.0, &acc);
    let (d, dpv) = ledger_increment(a, h, ops);
    let out = LimitState { t: state.t + h, alpha: next, dissipated: state.dissipated + d, dissipated_pv: state.dissipated_pv + dpv };
    if !out.energy().is_finite() {
        return Err(Error::NonFinite { t: out.t });
    }
    Ok(out)
}

/// Integrates the limit system, observing every `sample_dt`.
pub fn integrate_limit<F>(
    u0: &SpectralField4,
    cfg: &SolverConfig,
    sample_dt: f64,
    stencil: &LimitStencil,
    ops: &Operators,
    mut observe: F,
) -> Result<LimitState>
where
    F: FnMut(&LimitState),
{
    cfg.validate()?;
    let (n_samples, sample) = uniform_steps(cfg.t_final, sample_dt);
    let (n_sub, h) = uniform_steps(sample, cfg.dt);
    let mut state = LimitState::from_field(u0, ops)?;
    observe(&state);
    for j in 0..n_samples {
        for s in 0..n_sub {
            if s == 0 {
                check_cfl(state.t, h, &state.field(ops), cfg, ops)?;
            }
            state = step_limit(&state, h, stencil, ops)?;
        }
        state.t = (j + 1) as f64 * sample;
        observe(&state);
    }
    Ok(state)
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// sup_t ‖U^ε − U‖_{H^{0,σ}} over the sample times.
    pub sup_gap: f64,
    /// (∫‖∇_h(U^ε − U)‖² dt)^{1/2}, rectangle rule over the samples.
    pub grad_gap: f64,
    pub dt_used: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceSetup {
    pub sigma: f64,
    pub sample_dt: f64,
}

/// The limit solution at every sample time of [0, T].
pub fn limit_samples(
    v0: &SpectralField4,
    cfg: &SolverConfig,
    sample_dt: f64,
    stencil: &LimitStencil,
    ops: &Operators,
) -> Result<Vec<SpectralField4>> {
    let mut out = Vec::new();
    integrate_limit(v0, cfg, sample_dt, stencil, ops, |s| out.push(s.field(ops)))?;
    Ok(out)
}

/// Gap between the filtered run at `eps` and precomputed limit samples.
pub fn filtered_gap(
    v0: &SpectralField4,
    eps: f64,
    setup: &ConvergenceSetup,
    cfg: &SolverConfig,
    limit: &[SpectralField4],
    ops: &Operators,
) -> Result<ConvergenceRow> {
    let run = SolverConfig { eps, ..cfg.clone() };
    let (n_samples, sample) = uniform_steps(cfg.t_final, setup.sample_dt);
    if limit.len() != n_samples + 1 {
        return Err(Error::Precondition(format!("expected {} limit samples, got {}", n_samples + 1, limit.len())));
    }
    let mut sup: f64 = 0.0;
    let mut grad = 0.0;
    let mut j = 0;
    integrate_filtered(v0, &run, setup.sample_dt, ops, |s| {
        let diff = s.u.sub(&limit[j]);
        sup = sup.max(diff.anisotropic_norm(0.0, setup.sigma));
        if j > 0 {
            grad += sample * diff.grad_h_norm_sq();
        }
        j += 1;
    })?;
    Ok(ConvergenceRow { eps, sup_gap: sup, grad_gap: grad.sqrt(), dt_used: uniform_steps(sample, run.filtered_dt()).1 })
}

/// Runs the filtered system for each ε and compares with one limit run.
pub fn run_convergence_experiment(
    v0: &SpectralField4,
    eps_list: &[f64],
    setup: &ConvergenceSetup,
    cfg: &SolverConfig,
    stencil: &LimitStencil,
    ops: &Operators,
) -> Result<Vec<ConvergenceRow>> {
    if eps_list.len() < 2 {
        return Err(Error::Precondition("the convergence experiment needs at least two eps values".into()));
    }
    if (ops.spec.froude - 1.0).abs() < 1e-12 {
        return Err(Error::Precondition("convergence to the limit system requires F != 1".into()));
    }
    v0.require_divergence_free()?;
    if crate::linear::horizontal_average(v0).max_abs() > 1e-14 * v0.l2_norm().max(1.0) {
        return Err(Error::Precondition("initial data must have zero horizontal average".into()));
    }
    let limit = limit_samples(v0, cfg, setup.sample_dt, stencil, ops)?;
    eps_list.par_iter().map(|&eps| filtered_gap(v0, eps, setup, cfg, &limit, ops)).collect()
}
