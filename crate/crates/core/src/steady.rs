//! Steady states: closed forms, kernel-based numerics, and time propagation.

use nalgebra::{DMatrix, DVector};

use crate::bath::coupling_spectrum;
use crate::error::{Error, Result};
use crate::generator::{build_liouvillian, rate_sums, retained_subbaths, unvectorize, vectorize, Superoperator};
use crate::integrate::Dopri5;
use crate::model::{BrightDarkBasis, DensityMatrix, GramClass, MachineConfig, C64};

/// Largest tolerated trace drift before a propagated state is rejected.
pub const TRACE_DRIFT_BOUND: f64 = 1e-9;

/// e^{−β_eff ω₀}, the ratio of summed absorption to summed emission rates.
pub fn effective_boltzmann_factor(cfg: &MachineConfig) -> Result<f64> {
    let (emission, absorption) = rate_sums(cfg, cfg.system.omega0)?;
    if emission == 0.0 {
        return Err(Error::NoCoupling);
    }
    Ok(absorption / emission)
}

/// β_eff from the ratio of summed absorption and emission rates at ω₀.
/// Infinite when no sub-bath can excite the system.
pub fn effective_inverse_temperature(cfg: &MachineConfig) -> Result<f64> {
    let x = effective_boltzmann_factor(cfg)?;
    Ok(-x.ln() / cfg.system.omega0)
}

/// Steady-state ratio ρ_jj/ρ₀₀ for each excited level of a misaligned system.
pub fn level_boltzmann_factors(cfg: &MachineConfig) -> Result<Vec<f64>> {
    (1..cfg.system.n_levels)
        .map(|j| {
            let (emission, absorption) = rate_sums(cfg, cfg.system.level_frequency(j))?;
            if emission == 0.0 {
                Err(Error::NoCoupling)
            } else {
                Ok(absorption / emission)
            }
        })
        .collect()
}

fn check_dim(cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<()> {
    if rho0.dim() != cfg.system.n_levels {
        return Err(Error::InvalidState(format!(
            "initial state has dimension {}, system has {} levels",
            rho0.dim(),
            cfg.system.n_levels
        )));
    }
    Ok(())
}

fn outer(v: &DVector<f64>) -> DMatrix<C64> {
    let c = v.map(|x| C64::new(x, 0.0));
    &c * c.adjoint()
}

/// Closed-form steady state.
///
/// Misaligned (positive-definite gram): diagonal state with per-level
/// Boltzmann factors, independent of `rho0`. Fully aligned and degenerate:
/// the dark block of `rho0` is frozen and the ground/bright pair thermalizes
/// at β_eff.
pub fn analytic_steady_state(cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(cfg, rho0)?;
    let n = cfg.system.n_levels;
    match cfg.system.gram.classify() {
        GramClass::Misaligned => {
            let factors = level_boltzmann_factors(cfg)?;
            let ground = 1.0 / (1.0 + factors.iter().sum::<f64>());
            let mut m = DMatrix::<C64>::zeros(n, n);
            m[(0, 0)] = C64::new(ground, 0.0);
            for (j, r) in factors.iter().enumerate() {
                m[(j + 1, j + 1)] = C64::new(r * ground, 0.0);
            }
            DensityMatrix::from_numeric(m)
        }
        GramClass::Aligned => {
            if !cfg.system.is_degenerate() {
                return Err(Error::AnalyticUnavailable("aligned dipoles with detuned levels".into()));
            }
            let x = effective_boltzmann_factor(cfg)?;
            let basis = BrightDarkBasis::uniform(n);
            let dark = basis.dark_projector();
            let frozen = &dark * rho0.matrix() * &dark;
            let nondark = 1.0 - frozen.trace().re;
            let mut m = outer(&basis.ground) * C64::new(nondark / (1.0 + x), 0.0)
                + outer(&basis.bright) * C64::new(nondark * x / (1.0 + x), 0.0)
                + frozen;
            if x == 0.0 {
                // Without absorption nothing dephases the ground–dark coherence.
                let ground = outer(&basis.ground);
                let coherence = &ground * rho0.matrix() * &dark;
                m += &coherence + coherence.adjoint();
            }
            DensityMatrix::from_numeric(m)
        }
        GramClass::Mixed => Err(Error::AnalyticUnavailable(
            "gram is singular but not fully aligned; use the numerical solver".into(),
        )),
    }
}

/// Result of the kernel analysis of the total generator.
#[derive(Debug, Clone)]
pub struct KernelInfo {
    pub dimension: usize,
    pub singular_values: Vec<f64>,
}

/// Long-time limit of the master equation started from `rho0`.
///
/// A one-dimensional kernel gives the unique steady state directly. A
/// degenerate kernel (aligned dipoles) is resolved with the spectral
/// projector R (Lᴴ R)⁻¹ Lᴴ built from right and left null vectors, which maps
/// `rho0` onto its conserved-quantity-preserving limit. Propagation is the
/// fallback when that projector is ill conditioned.
pub fn numeric_steady_state(cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(cfg, rho0)?;
    let lv = build_liouvillian(cfg)?;
    steady_state_of(&lv.total, cfg, rho0)
}

pub(crate) fn steady_state_of(l: &Superoperator, cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if l.is_zero() {
        return Ok(rho0.clone());
    }
    let n = l.dim();
    let svd = l.matrix().clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD failed".into())),
    };
    let s = &svd.singular_values;
    let s_max = s.max();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let dim = s.iter().filter(|&&v| v <= cfg.numerics.kernel_tol * s_max).count().max(1);
    let kernel = &order[..dim];

    let right = DMatrix::from_fn(n * n, dim, |r, c| v_t[(kernel[c], r)].conj());
    let raw = if dim == 1 {
        let v = right.column(0).into_owned();
        let m = unvectorize(&v, n);
        let tr = m.trace();
        if tr.norm() < 1e-300 {
            return Err(Error::Numerical("kernel vector has zero trace".into()));
        }
        m / tr
    } else {
        let left = DMatrix::from_fn(n * n, dim, |r, c| u[(r, kernel[c])]);
        let overlap = left.adjoint() * &right;
        let osv = overlap.clone().singular_values();
        if osv.min() < 1e-8 * osv.max() {
            return steady_state_by_propagation(cfg, l, rho0);
        }
        let coeffs = overlap
            .lu()
            .solve(&(left.adjoint() * vectorize(rho0.matrix())))
            .ok_or_else(|| Error::Numerical("singular kernel overlap".into()))?;
        unvectorize(&(right * coeffs), n)
    };
    let residual = l.apply(&raw).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > 1e-8 * s_max {
        return steady_state_by_propagation(cfg, l, rho0);
    }
    DensityMatrix::from_numeric(raw)
}

/// Singular values of the total generator and the kernel dimension implied
/// by the relative threshold in `cfg.numerics`.
pub fn kernel_info(cfg: &MachineConfig) -> Result<KernelInfo> {
    let l = build_liouvillian(cfg)?.total;
    let mut singular_values: Vec<f64> = l.matrix().clone().singular_values().iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let max = singular_values.first().copied().unwrap_or(0.0);
    let dimension = singular_values.iter().filter(|&&v| v <= cfg.numerics.kernel_tol * max).count();
    Ok(KernelInfo { dimension, singular_values })
}

/// Smallest positive P(q)·G_i(±ω) over the retained sub-baths.
pub fn slowest_rate(cfg: &MachineConfig) -> Result<f64> {
    let mut slowest = f64::INFINITY;
    for (bath, q, p) in retained_subbaths(cfg)? {
        for j in 1..cfg.system.n_levels {
            let w = cfg.system.level_frequency(j) + q as f64 * cfg.modulation.omega;
            for g in [coupling_spectrum(cfg.bath(bath), w)?, coupling_spectrum(cfg.bath(bath), -w)?] {
                if p * g > 0.0 {
                    slowest = slowest.min(p * g);
                }
            }
        }
    }
    Ok(slowest)
}

/// Trace norm of ℒρ (ℒρ is Hermitian for Hermitian ρ).
pub fn residual_norm(l: &Superoperator, rho: &DensityMatrix) -> f64 {
    let d = l.apply(rho.matrix());
    let herm = (&d + d.adjoint()).scale(0.5);
    herm.symmetric_eigenvalues().iter().map(|v| v.abs()).sum()
}

/// Propagates until ‖ℒρ‖₁ drops below `numerics.residual_tol` or the
/// horizon `numerics.t_max` is reached.
pub fn steady_state_by_propagation(cfg: &MachineConfig, l: &Superoperator, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let slowest = slowest_rate(cfg)?;
    if !slowest.is_finite() {
        return Ok(rho0.clone());
    }
    let t_max = cfg.numerics.t_max.unwrap_or(1e3 / slowest);
    let chunk = (1.0 / slowest).min(t_max);
    // Explicit steps near the steady state sit on the stability boundary, so
    // the residual floor tracks the local tolerance; tighten it to reach the
    // residual target.
    let rtol = cfg.numerics.rtol.min(1e-2 * cfg.numerics.residual_tol);
    let atol = cfg.numerics.atol.min(1e-4 * cfg.numerics.residual_tol);
    let mut rk = Dopri5::new(l.matrix(), rtol, atol, cfg.numerics.max_steps);
    let mut y = vectorize(rho0.matrix());
    let mut t = 0.0;
    let mut rho = rho0.clone();
    while t < t_max {
        let t_next = (t + chunk).min(t_max);
        rk.advance(&mut y, t, t_next)?;
        t = t_next;
        rho = renormalized(&y, l.dim(), t)?;
        if residual_norm(l, &rho) < cfg.numerics.residual_tol {
            return Ok(rho);
        }
    }
    Err(Error::NotConverged { t, residual: residual_norm(l, &rho) })
}

fn renormalized(y: &DVector<C64>, n: usize, t: f64) -> Result<DensityMatrix> {
    let m = unvectorize(y, n);
    let tr = m.trace().re;
    let drift = (tr - 1.0).abs();
    if !(drift <= TRACE_DRIFT_BOUND) {
        return Err(Error::TraceDrift { t, drift });
    }
    let m = m.unscale(tr);
    let herm_err = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm_err > crate::model::HERMITIAN_TOL {
        return Err(Error::Numerical(format!("Hermiticity lost at t={t} ({herm_err:e})")));
    }
    DensityMatrix::from_numeric(m)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// Integrates ρ̇ = ℒρ, reporting every `dt_report` and at `t_final`.
pub fn propagate(cfg: &MachineConfig, rho0: &DensityMatrix, t_final: f64, dt_report: f64) -> Result<Trajectory> {
    check_dim(cfg, rho0)?;
    if !(t_final > 0.0) || !(dt_report > 0.0) {
        return Err(Error::OutOfRange("t_final and dt_report must be positive".into()));
    }
    let l = build_liouvillian(cfg)?.total;
    let mut rk = Dopri5::new(l.matrix(), cfg.numerics.rtol, cfg.numerics.atol, cfg.numerics.max_steps);
    let mut y = vectorize(rho0.matrix());
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut t = 0.0;
    let mut k = 1usize;
    while t < t_final {
        let t_next = (k as f64 * dt_report).min(t_final);
        rk.advance(&mut y, t, t_next)?;
        t = t_next;
        k += 1;
        times.push(t);
        states.push(renormalized(&y, l.dim(), t)?);
    }
    Ok(Trajectory { times, states })
}
