//! Heat currents, power, efficiency and the two-level reference machine.

use std::fmt;

use serde::Serialize;

use crate::bath::coupling_spectrum;
use crate::error::{Error, Result};
use crate::generator::{build_liouvillian, build_subbath_generator, retained_subbaths, Liouvillian, SubbathGenerator};
use crate::model::{dark_overlap, BathId, BrightDarkBasis, DensityMatrix, MachineConfig};
use crate::steady::{effective_boltzmann_factor, steady_state_of};

/// Slack allowed above the Carnot efficiency.
pub const CARNOT_SLACK: f64 = 1e-9;
/// Relative agreement required between the two heat-current evaluations.
pub const CURRENT_ROUTE_TOL: f64 = 1e-10;
/// Currents below this fraction of the total rate scale count as zero when
/// classifying the operating mode.
pub const MODE_NOISE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Engine,
    Refrigerator,
    Dissipator,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Engine => "engine",
            Mode::Refrigerator => "refrigerator",
            Mode::Dissipator => "dissipator",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubbathCurrent {
    pub bath: BathId,
    pub q: i32,
    pub current: f64,
}

/// Steady-state thermodynamics. Currents are positive when heat flows from
/// the bath into the system.
#[derive(Debug, Clone, Serialize)]
pub struct ThermoReport {
    pub steady_state: DensityMatrix,
    #[serde(rename = "J_cold")]
    pub j_cold: f64,
    #[serde(rename = "J_hot")]
    pub j_hot: f64,
    pub subbath_currents: Vec<SubbathCurrent>,
    #[serde(rename = "W_dot")]
    pub w_dot: f64,
    pub efficiency: Option<f64>,
    pub entropy_production: f64,
    pub mode: Mode,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// J_i^q for one sub-bath, evaluated both as −(1/β)Tr[(ℒρ) ln ρ_G] with ρ_G
/// the Gibbs state of H_q and as Tr[(ℒρ) H_q].
fn current_of(sb: &SubbathGenerator, beta: f64, rho: &DensityMatrix) -> Result<f64> {
    let d = sb.superop.apply(rho.matrix());
    let diag: Vec<f64> = (0..d.nrows()).map(|k| d[(k, k)].re).collect();
    let flux: f64 = diag.iter().zip(&sb.energies).map(|(x, e)| x * e).sum();
    let exponents: Vec<f64> = sb.energies.iter().map(|e| -beta * e).collect();
    let ln_z = log_sum_exp(&exponents);
    let entropy: f64 = -diag.iter().zip(&exponents).map(|(x, a)| x * (a - ln_z)).sum::<f64>() / beta;
    // The routes differ by (ln Z/β)·Tr(ℒρ), which is zero up to rounding of
    // the generator entries; measure disagreement against that scale.
    let e_max = sb.energies.iter().copied().fold(0.0, f64::max);
    let rate = sb.superop.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = flux.abs() + rate * (e_max + ln_z.abs() / beta);
    if (flux - entropy).abs() > CURRENT_ROUTE_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::CurrentMismatch { flux, entropy });
    }
    Ok(flux)
}

/// Heat current delivered by bath `bath` through harmonic `q` in state `rho`.
pub fn subbath_heat_current(cfg: &MachineConfig, bath: BathId, q: i32, rho: &DensityMatrix) -> Result<f64> {
    let sb = build_subbath_generator(cfg, bath, q)?;
    current_of(&sb, cfg.bath(bath).beta(), rho)
}

/// Σ_q Σ_i P(q)(G_i(ω_q) + G_i(−ω_q))ω_q: the natural scale of every current.
pub fn current_scale(cfg: &MachineConfig) -> Result<f64> {
    let mut s = 0.0;
    for (bath, q, p) in retained_subbaths(cfg)? {
        for j in 1..cfg.system.n_levels {
            let w = cfg.system.level_frequency(j) + q as f64 * cfg.modulation.omega;
            let b = cfg.bath(bath);
            s += p * (coupling_spectrum(b, w)? + coupling_spectrum(b, -w)?) * w;
        }
    }
    Ok(s)
}

fn classify(cfg: &MachineConfig, j_cold: f64, j_hot: f64, w_dot: f64) -> Result<(Mode, Option<f64>)> {
    let tau = MODE_NOISE * current_scale(cfg)?;
    let efficiency = (j_hot > tau).then(|| -w_dot / j_hot);
    let mode = if w_dot < -tau && j_hot > tau {
        Mode::Engine
    } else if j_cold > tau && w_dot > tau {
        Mode::Refrigerator
    } else {
        Mode::Dissipator
    };
    if mode == Mode::Engine {
        let eta = efficiency.unwrap_or(0.0);
        let carnot = 1.0 - cfg.bath_cold.temperature / cfg.bath_hot.temperature;
        if eta > carnot + CARNOT_SLACK {
            return Err(Error::CarnotViolation { eta, carnot });
        }
    }
    Ok((mode, efficiency))
}

fn report_from(cfg: &MachineConfig, lv: &Liouvillian, rho: DensityMatrix) -> Result<ThermoReport> {
    let mut subbath_currents = Vec::with_capacity(lv.subbaths.len());
    let (mut j_cold, mut j_hot) = (0.0, 0.0);
    for sb in &lv.subbaths {
        let j = current_of(sb, cfg.bath(sb.bath).beta(), &rho)?;
        match sb.bath {
            BathId::Cold => j_cold += j,
            BathId::Hot => j_hot += j,
        }
        subbath_currents.push(SubbathCurrent { bath: sb.bath, q: sb.q, current: j });
    }
    let w_dot = -(j_cold + j_hot);
    let (mode, efficiency) = classify(cfg, j_cold, j_hot, w_dot)?;
    Ok(ThermoReport {
        steady_state: rho,
        j_cold,
        j_hot,
        subbath_currents,
        w_dot,
        efficiency,
        entropy_production: -cfg.bath_cold.beta() * j_cold - cfg.bath_hot.beta() * j_hot,
        mode,
    })
}

/// Solves for the steady state reached from `rho0` and evaluates its
/// thermodynamics.
pub fn thermo_report(cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<ThermoReport> {
    if rho0.dim() != cfg.system.n_levels {
        return Err(Error::InvalidState("initial state dimension does not match the system".into()));
    }
    let lv = build_liouvillian(cfg)?;
    let rho = steady_state_of(&lv.total, cfg, rho0)?;
    report_from(cfg, &lv, rho)
}

/// Thermodynamics of a given state, assumed stationary.
pub fn report_for_state(cfg: &MachineConfig, rho: DensityMatrix) -> Result<ThermoReport> {
    let lv = build_liouvillian(cfg)?;
    report_from(cfg, &lv, rho)
}

/// The two-level machine sharing ω₀, baths and modulation with `cfg`.
pub fn tls_config(cfg: &MachineConfig) -> MachineConfig {
    cfg.with_levels(2, 0.0)
}

/// Closed-form steady-state currents (J_cold, J_hot) of the two-level
/// reference machine.
pub fn tls_reference_currents(cfg: &MachineConfig) -> Result<(f64, f64)> {
    let tls = tls_config(cfg);
    let x = effective_boltzmann_factor(&tls)?;
    let mut currents = [0.0, 0.0];
    for (bath, q, p) in retained_subbaths(&tls)? {
        let w = tls.system.omega0 + q as f64 * tls.modulation.omega;
        let b = tls.bath(bath);
        let g = coupling_spectrum(b, w)?;
        let j = w * p * g * ((-b.beta() * w).exp() - x) / (1.0 + x);
        currents[(bath == BathId::Hot) as usize] += j;
    }
    Ok((currents[0], currents[1]))
}

/// Closed-form power Ẇ^TLS = −(J_cold + J_hot) of the two-level reference.
pub fn tls_reference_power(cfg: &MachineConfig) -> Result<f64> {
    let tls = tls_config(cfg);
    let x = effective_boltzmann_factor(&tls)?;
    let mut w_dot = 0.0;
    for (bath, q, p) in retained_subbaths(&tls)? {
        let w = tls.system.omega0 + q as f64 * tls.modulation.omega;
        let b = tls.bath(bath);
        w_dot += w * p / (x + 1.0) * coupling_spectrum(b, w)? * (x - (-b.beta() * w).exp());
    }
    Ok(w_dot)
}

/// Closed-form power ratios relative to the two-level machine.
///
/// `aligned_ratio`, `aligned_vs_misaligned` and `nlevel_ratio` describe the
/// fully aligned machine and are `None` for any other dipole set.
#[derive(Debug, Clone, Serialize)]
pub struct EnhancementRatios {
    pub boltzmann_factor: f64,
    pub misaligned_ratio: f64,
    pub aligned_ratio: Option<f64>,
    pub aligned_vs_misaligned: Option<f64>,
    pub threshold_dark_overlap: f64,
    pub nlevel_ratio: Option<f64>,
}

/// Ratio formulas for a degenerate N-level machine started in `rho0`.
pub fn enhancement_ratios(cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<EnhancementRatios> {
    if !cfg.system.is_degenerate() {
        return Err(Error::Unsupported("degenerate excited levels".into()));
    }
    let n = cfg.system.n_levels;
    if rho0.dim() != n {
        return Err(Error::InvalidState("initial state dimension does not match the system".into()));
    }
    let m = (n - 1) as f64;
    let x = effective_boltzmann_factor(cfg)?;
    let aligned = cfg.system.gram.is_fully_aligned();
    let (aligned_ratio, aligned_vs_misaligned, nlevel_ratio) = if aligned {
        let basis = BrightDarkBasis::uniform(n);
        let nondark = rho0.population(0) + rho0.expectation(&basis.bright);
        let d = dark_overlap(rho0);
        (
            Some(m * nondark),
            Some((1.0 - d) * (1.0 + m * x) / (1.0 + x)),
            Some(m * (1.0 - d)),
        )
    } else {
        (None, None, None)
    };
    Ok(EnhancementRatios {
        boltzmann_factor: x,
        misaligned_ratio: m * (1.0 + x) / (1.0 + m * x),
        aligned_ratio,
        aligned_vs_misaligned,
        threshold_dark_overlap: (m - 1.0) * x / (1.0 + m * x),
        nlevel_ratio,
    })
}

/// Ratios of the numerically computed machine to the closed-form two-level
/// reference.
#[derive(Debug, Clone, Serialize)]
pub struct MeasuredEnhancement {
    pub power_ratio: f64,
    pub cold_ratio: f64,
    pub hot_ratio: f64,
    /// (N−1)ρ₀₀^ss / ρ₀₀^TLS.
    pub population_ratio: f64,
    pub report: ThermoReport,
}

pub fn measured_enhancement(cfg: &MachineConfig, rho0: &DensityMatrix) -> Result<MeasuredEnhancement> {
    let report = thermo_report(cfg, rho0)?;
    let w_tls = tls_reference_power(cfg)?;
    let (jc_tls, jh_tls) = tls_reference_currents(cfg)?;
    let x = effective_boltzmann_factor(&tls_config(cfg))?;
    let rho00_tls = 1.0 / (1.0 + x);
    Ok(MeasuredEnhancement {
        power_ratio: report.w_dot / w_tls,
        cold_ratio: report.j_cold / jc_tls,
        hot_ratio: report.j_hot / jh_tls,
        population_ratio: (cfg.system.n_levels - 1) as f64 * report.steady_state.population(0) / rho00_tls,
        report,
    })
}
