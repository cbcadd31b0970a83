//! Plain-text machine configuration.
//!
//! The format is TOML. Every key lives in one of the sections `system`,
//! `bath_cold`, `bath_hot`, `spectra`, `modulation`, `initial` and
//! `numerics`, written either as `[section]` tables or as dotted keys such as
//! `bath_cold.T = 0.1`. Unknown keys are errors. See `configs/` for examples
//! and the README for the full key list.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::bath::{broadband, separated_bands};
use crate::error::{Error, Result};
use crate::model::{
    validate_config, BathSpec, DensityMatrix, DipoleGram, InitialState, MachineConfig, Modulation, ModulationSpec,
    Numerics, SpectrumShape, SystemSpec, C64,
};
use crate::presets::{SEPARATED_HALF_WIDTH, SEPARATED_HOT_UPPER};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    bath_cold: RawBath,
    bath_hot: RawBath,
    spectra: Option<RawSpectra>,
    modulation: Option<RawModulation>,
    initial: Option<RawInitial>,
    numerics: Option<RawNumerics>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n_levels: usize,
    omega0: f64,
    detunings: Option<Vec<f64>>,
    p: Option<f64>,
    gram: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    #[serde(rename = "T")]
    temperature: f64,
    shape: Option<String>,
    lo: Option<f64>,
    hi: Option<f64>,
    gamma: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
    strength: Option<f64>,
    cutoff: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectra {
    preset: String,
    half_width: Option<f64>,
    hot_upper: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModulation {
    mode: Option<String>,
    lambda: Option<f64>,
    #[serde(rename = "Omega")]
    omega: Option<f64>,
    q_max: Option<u32>,
    weights: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    state: String,
    rho_re: Option<Vec<Vec<f64>>>,
    rho_im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    rtol: Option<f64>,
    atol: Option<f64>,
    kernel_tol: Option<f64>,
    t_max: Option<f64>,
    max_steps: Option<usize>,
    residual_tol: Option<f64>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::ConfigParse(msg.into())
}

fn required(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| parse_err(format!("missing key `{key}`")))
}

fn square(rows: &[Vec<f64>], key: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(parse_err(format!("`{key}` must be a square array of arrays")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn bath_shape(raw: &RawBath, name: &str) -> Result<SpectrumShape> {
    let key = |k: &str| format!("{name}.{k}");
    let unused = |keys: &[(&str, Option<f64>)]| -> Result<()> {
        for (k, v) in keys {
            if v.is_some() {
                return Err(parse_err(format!("key `{}` does not apply to this shape", key(k))));
            }
        }
        Ok(())
    };
    let shape = raw.shape.as_deref().ok_or_else(|| parse_err(format!("missing key `{}`", key("shape"))))?;
    match shape {
        "flat" => {
            unused(&[("center", raw.center), ("width", raw.width), ("strength", raw.strength), ("cutoff", raw.cutoff)])?;
            Ok(SpectrumShape::FlatBand {
                lo: required(raw.lo, &key("lo"))?,
                hi: required(raw.hi, &key("hi"))?,
                height: raw.gamma.unwrap_or(1.0),
            })
        }
        "lorentzian" => {
            unused(&[("lo", raw.lo), ("hi", raw.hi), ("strength", raw.strength), ("cutoff", raw.cutoff)])?;
            Ok(SpectrumShape::Lorentzian {
                center: required(raw.center, &key("center"))?,
                width: required(raw.width, &key("width"))?,
                height: raw.gamma.unwrap_or(1.0),
            })
        }
        "ohmic" => {
            unused(&[("lo", raw.lo), ("hi", raw.hi), ("center", raw.center), ("width", raw.width), ("gamma", raw.gamma)])?;
            Ok(SpectrumShape::Ohmic {
                strength: required(raw.strength, &key("strength"))?,
                cutoff: required(raw.cutoff, &key("cutoff"))?,
            })
        }
        other => Err(parse_err(format!("unknown shape `{other}` for `{}`", key("shape")))),
    }
}

fn bath_has_shape_keys(raw: &RawBath) -> bool {
    raw.shape.is_some()
        || [raw.lo, raw.hi, raw.gamma, raw.center, raw.width, raw.strength, raw.cutoff]
            .iter()
            .any(Option::is_some)
}

fn spectra_preset(raw: &RawSpectra, omega0: f64) -> Result<(SpectrumShape, SpectrumShape)> {
    match raw.preset.as_str() {
        "separated" => {
            if raw.lo.is_some() || raw.hi.is_some() {
                return Err(parse_err("`spectra.lo`/`spectra.hi` apply to the broadband preset only"));
            }
            Ok(separated_bands(
                omega0,
                raw.half_width.unwrap_or(SEPARATED_HALF_WIDTH),
                raw.hot_upper.unwrap_or(SEPARATED_HOT_UPPER),
                raw.gamma.unwrap_or(1.0),
            ))
        }
        "broadband" => {
            if raw.half_width.is_some() || raw.hot_upper.is_some() {
                return Err(parse_err("`spectra.half_width`/`spectra.hot_upper` apply to the separated preset only"));
            }
            Ok(broadband(
                required(raw.lo, "spectra.lo")?,
                required(raw.hi, "spectra.hi")?,
                raw.gamma.unwrap_or(1.0),
            ))
        }
        other => Err(parse_err(format!("unknown spectra preset `{other}`"))),
    }
}

fn modulation(raw: Option<RawModulation>) -> Result<ModulationSpec> {
    let Some(raw) = raw else {
        return Ok(ModulationSpec::unmodulated());
    };
    let mode = raw.mode.as_deref().unwrap_or("sinusoidal");
    match mode {
        "none" => {
            if raw.lambda.is_some() || raw.weights.is_some() {
                return Err(parse_err("modulation.mode = \"none\" takes no lambda or weights"));
            }
            let mut spec = ModulationSpec::unmodulated();
            if let Some(omega) = raw.omega {
                spec.omega = omega;
            }
            Ok(spec)
        }
        "sinusoidal" => {
            if raw.weights.is_some() {
                return Err(parse_err("`modulation.weights` requires mode = \"custom\""));
            }
            Ok(ModulationSpec::sinusoidal(
                required(raw.lambda, "modulation.lambda")?,
                required(raw.omega, "modulation.Omega")?,
                raw.q_max.unwrap_or(8),
            ))
        }
        "custom" => {
            if raw.lambda.is_some() {
                return Err(parse_err("`modulation.lambda` does not apply to custom weights"));
            }
            let table = raw.weights.ok_or_else(|| parse_err("missing key `modulation.weights`"))?;
            let mut weights = BTreeMap::new();
            for (k, v) in table {
                let q: i32 = k
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(format!("harmonic index `{k}` is not an integer")))?;
                weights.insert(q, v);
            }
            let q_max = raw
                .q_max
                .unwrap_or_else(|| weights.keys().map(|q| q.unsigned_abs()).max().unwrap_or(0));
            Ok(ModulationSpec {
                mode: Modulation::Custom { weights },
                omega: required(raw.omega, "modulation.Omega")?,
                q_max,
            })
        }
        other => Err(parse_err(format!("unknown modulation mode `{other}`"))),
    }
}

fn initial(raw: Option<RawInitial>) -> Result<InitialState> {
    let Some(raw) = raw else {
        return Ok(InitialState::Ground);
    };
    if raw.state.trim() == "explicit" {
        let re = square(raw.rho_re.as_deref().ok_or_else(|| parse_err("missing key `initial.rho_re`"))?, "initial.rho_re")?;
        let im = match raw.rho_im.as_deref() {
            Some(rows) => square(rows, "initial.rho_im")?,
            None => DMatrix::zeros(re.nrows(), re.ncols()),
        };
        if im.shape() != re.shape() {
            return Err(parse_err("`initial.rho_re` and `initial.rho_im` differ in size"));
        }
        let m = DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]));
        return DensityMatrix::new(m).map(InitialState::Explicit);
    }
    if raw.rho_re.is_some() || raw.rho_im.is_some() {
        return Err(parse_err("`initial.rho_re`/`initial.rho_im` require state = \"explicit\""));
    }
    raw.state.parse()
}

fn numerics(raw: Option<RawNumerics>) -> Numerics {
    let mut n = Numerics::default();
    if let Some(raw) = raw {
        n.rtol = raw.rtol.unwrap_or(n.rtol);
        n.atol = raw.atol.unwrap_or(n.atol);
        n.kernel_tol = raw.kernel_tol.unwrap_or(n.kernel_tol);
        n.t_max = raw.t_max.or(n.t_max);
        n.max_steps = raw.max_steps.unwrap_or(n.max_steps);
        n.residual_tol = raw.residual_tol.unwrap_or(n.residual_tol);
    }
    n
}

/// Parses a configuration without checking its physical invariants.
pub fn parse_config(text: &str) -> Result<MachineConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let s = &raw.system;
    let n_exc = s.n_levels.saturating_sub(1);
    let gram = match (s.p, &s.gram) {
        (Some(p), None) => DipoleGram::uniform(n_exc, p),
        (None, Some(rows)) => DipoleGram::from_matrix(square(rows, "system.gram")?),
        (None, None) => return Err(parse_err("one of `system.p` or `system.gram` is required")),
        (Some(_), Some(_)) => return Err(parse_err("`system.p` and `system.gram` are mutually exclusive")),
    };
    let system = SystemSpec {
        n_levels: s.n_levels,
        omega0: s.omega0,
        detunings: s.detunings.clone().unwrap_or_else(|| vec![0.0; n_exc]),
        gram,
    };
    let (cold, hot) = match &raw.spectra {
        Some(preset) => {
            if bath_has_shape_keys(&raw.bath_cold) || bath_has_shape_keys(&raw.bath_hot) {
                return Err(parse_err("bath shape keys cannot be combined with `spectra.preset`"));
            }
            spectra_preset(preset, s.omega0)?
        }
        None => (bath_shape(&raw.bath_cold, "bath_cold")?, bath_shape(&raw.bath_hot, "bath_hot")?),
    };
    let mut cfg = MachineConfig::new(
        system,
        BathSpec { temperature: raw.bath_cold.temperature, shape: cold },
        BathSpec { temperature: raw.bath_hot.temperature, shape: hot },
        modulation(raw.modulation)?,
    );
    cfg.initial_state = initial(raw.initial)?;
    cfg.numerics = numerics(raw.numerics);
    Ok(cfg)
}

/// Parses and validates.
pub fn load_config_str(text: &str) -> Result<MachineConfig> {
    let cfg = parse_config(text)?;
    let violations = validate_config(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(violations))
    }
}

pub fn load_config(path: &Path) -> Result<MachineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    load_config_str(&text)
}
