//! Ready-made machines used by the figure datasets, the shipped configs and
//! the test suites.

use crate::bath::{broadband, separated_bands};
use crate::model::{BathSpec, MachineConfig, ModulationSpec, SystemSpec};

pub const SEPARATED_HALF_WIDTH: f64 = 0.1;
pub const SEPARATED_HOT_UPPER: f64 = 0.9;

/// Separated cold/hot bands around ω₀ = 1 with first-order sinusoidal
/// modulation (λ = 1, Ω = 0.5).
pub fn separated_machine(n_levels: usize, p: f64, t_cold: f64, t_hot: f64) -> MachineConfig {
    let omega0 = 1.0;
    let (cold, hot) = separated_bands(omega0, SEPARATED_HALF_WIDTH, SEPARATED_HOT_UPPER, 1.0);
    MachineConfig::new(
        SystemSpec::degenerate(n_levels, omega0, p),
        BathSpec { temperature: t_cold, shape: cold },
        BathSpec { temperature: t_hot, shape: hot },
        ModulationSpec::sinusoidal(1.0, 0.5, 1),
    )
}

/// Both baths on the band [0.3, 2.0] around ω₀ = 1, second-order sinusoidal
/// modulation (λ = 0.8, Ω = 0.25).
pub fn broadband_machine(n_levels: usize, p: f64, t_cold: f64, t_hot: f64) -> MachineConfig {
    let (cold, hot) = broadband(0.3, 2.0, 1.0);
    MachineConfig::new(
        SystemSpec::degenerate(n_levels, 1.0, p),
        BathSpec { temperature: t_cold, shape: cold },
        BathSpec { temperature: t_hot, shape: hot },
        ModulationSpec::sinusoidal(0.8, 0.25, 2),
    )
}
