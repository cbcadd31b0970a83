//! Domain types shared by every module: level structure, baths, modulation,
//! density matrices and the full machine configuration.
//!
//! Units are ħ = k_B = 1 throughout; frequencies and temperatures are plain
//! multiples of whatever unit the caller picks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = -1e-10;
/// Alignment factors this close to 1 are treated as exactly aligned.
pub const ALIGNMENT_SNAP: f64 = 1e-8;

/// Pairwise alignment factors between the N−1 transition dipoles.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleGram {
    matrix: DMatrix<f64>,
}

/// How the dipole set couples to the baths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramClass {
    /// Positive-definite gram: no dark state, unique steady state.
    Misaligned,
    /// Every pair parallel: one bright state, N−2 dark states.
    Aligned,
    /// Singular but not fully aligned.
    Mixed,
}

impl DipoleGram {
    pub fn uniform(n_excited: usize, p: f64) -> Self {
        let matrix = DMatrix::from_fn(n_excited, n_excited, |i, j| if i == j { 1.0 } else { p });
        Self { matrix }
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.matrix[(j, k)]
    }

    /// Gram with near-unit entries snapped to exactly 1.
    pub fn snapped(&self) -> DMatrix<f64> {
        self.matrix
            .map(|v| if (v - 1.0).abs() <= ALIGNMENT_SNAP { 1.0 } else { v })
    }

    pub fn is_fully_aligned(&self) -> bool {
        self.snapped().iter().all(|&v| v == 1.0)
    }

    pub fn classify(&self) -> GramClass {
        let g = self.snapped();
        if g.nrows() > 1 && g.iter().all(|&v| v == 1.0) {
            return GramClass::Aligned;
        }
        let min_eig = g.symmetric_eigenvalues().min();
        if min_eig > 1e-10 {
            GramClass::Misaligned
        } else {
            GramClass::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n_levels: usize,
    pub omega0: f64,
    /// Offsets δ_j of the excited levels, ω_j = ω_0 + δ_j.
    pub detunings: Vec<f64>,
    pub gram: DipoleGram,
}

impl SystemSpec {
    /// Degenerate V-system with a uniform alignment factor between every pair.
    pub fn degenerate(n_levels: usize, omega0: f64, p: f64) -> Self {
        Self {
            n_levels,
            omega0,
            detunings: vec![0.0; n_levels.saturating_sub(1)],
            gram: DipoleGram::uniform(n_levels.saturating_sub(1), p),
        }
    }

    pub fn n_excited(&self) -> usize {
        self.n_levels - 1
    }

    /// Transition frequency of excited level `j` (1-based, as in |j⟩).
    pub fn level_frequency(&self, j: usize) -> f64 {
        self.omega0 + self.detunings.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.detunings.iter().all(|&d| d == 0.0)
    }
}

/// Rate function γ(ω) for ω > 0.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumShape {
    /// Constant `height` on the closed band [lo, hi], zero elsewhere.
    FlatBand { lo: f64, hi: f64, height: f64 },
    Lorentzian { center: f64, width: f64, height: f64 },
    /// η ω exp(−ω/ω_c).
    Ohmic { strength: f64, cutoff: f64 },
}

impl SpectrumShape {
    pub fn rate(&self, omega: f64) -> f64 {
        match *self {
            SpectrumShape::FlatBand { lo, hi, height } => {
                if omega >= lo && omega <= hi {
                    height
                } else {
                    0.0
                }
            }
            SpectrumShape::Lorentzian { center, width, height } => {
                let d = omega - center;
                height * width * width / (d * d + width * width)
            }
            SpectrumShape::Ohmic { strength, cutoff } => strength * omega * (-omega / cutoff).exp(),
        }
    }

    fn violations(&self, field: &str, out: &mut Vec<Violation>) {
        match *self {
            SpectrumShape::FlatBand { lo, hi, height } => {
                if !(lo >= 0.0 && hi > lo) {
                    out.push(Violation::new(field, "flat band requires 0 <= lo < hi"));
                }
                if !(height >= 0.0) {
                    out.push(Violation::new(field, "spectral height must be nonnegative"));
                }
            }
            SpectrumShape::Lorentzian { center, width, height } => {
                if !(width > 0.0) || !center.is_finite() {
                    out.push(Violation::new(field, "Lorentzian requires finite center and width > 0"));
                }
                if !(height >= 0.0) {
                    out.push(Violation::new(field, "spectral height must be nonnegative"));
                }
            }
            SpectrumShape::Ohmic { strength, cutoff } => {
                if !(strength >= 0.0) || !(cutoff > 0.0) {
                    out.push(Violation::new(field, "Ohmic requires strength >= 0 and cutoff > 0"));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub temperature: f64,
    pub shape: SpectrumShape,
}

impl BathSpec {
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BathId {
    Cold,
    Hot,
}

impl BathId {
    pub const BOTH: [BathId; 2] = [BathId::Cold, BathId::Hot];
}

impl fmt::Display for BathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BathId::Cold => "cold",
            BathId::Hot => "hot",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    /// ω(t) = λΩ sin(Ωt).
    Sinusoidal { lambda: f64 },
    /// Explicit harmonic weights P(q).
    Custom { weights: BTreeMap<i32, f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpec {
    pub mode: Modulation,
    /// Modulation rate Ω.
    pub omega: f64,
    /// Upper bound on the retained harmonic order.
    pub q_max: u32,
}

impl ModulationSpec {
    pub fn sinusoidal(lambda: f64, omega: f64, q_max: u32) -> Self {
        Self { mode: Modulation::Sinusoidal { lambda }, omega, q_max }
    }

    pub fn unmodulated() -> Self {
        Self::sinusoidal(0.0, 1.0, 0)
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let rho = Self { entries };
        rho.check()?;
        Ok(rho)
    }

    /// Hermitizes and renormalizes the trace before checking the invariants.
    pub fn from_numeric(entries: DMatrix<C64>) -> Result<Self> {
        let herm = (&entries + entries.adjoint()).scale(0.5);
        let tr = herm.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::InvalidState(format!("nonpositive trace {tr}")));
        }
        Self::new(herm.unscale(tr))
    }

    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        let psi = psi.unscale(norm);
        Self::new(&psi * psi.adjoint())
    }

    pub fn basis_state(n: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self { entries: m }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n).unscale(n as f64) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    pub fn population(&self, k: usize) -> f64 {
        self.entries[(k, k)].re
    }

    /// ⟨ψ|ρ|ψ⟩ for a real vector.
    pub fn expectation(&self, psi: &DVector<f64>) -> f64 {
        let v = psi.map(|x| C64::new(x, 0.0));
        (v.adjoint() * &self.entries * &v)[(0, 0)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.clone().symmetric_eigenvalues().min()
    }

    pub fn check(&self) -> Result<()> {
        let m = &self.entries;
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState("matrix must be square and nonempty".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm_err = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm_err:e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| f(&self.entries[(i, j)])).collect()).collect()
        };
        let mut st = s.serialize_struct("DensityMatrix", 2)?;
        st.serialize_field("re", &rows(|z| z.re))?;
        st.serialize_field("im", &rows(|z| z.im))?;
        st.end()
    }
}

/// Ground, bright and dark vectors of the excited manifold.
///
/// The bright state is the uniform superposition of the excited levels; the
/// dark vectors are the Helmert completion of the excited subspace.
#[derive(Debug, Clone)]
pub struct BrightDarkBasis {
    pub ground: DVector<f64>,
    pub bright: DVector<f64>,
    pub dark: Vec<DVector<f64>>,
}

impl BrightDarkBasis {
    /// Builds the basis for `n_levels` without checking the alignment of any
    /// dipole set.
    pub fn uniform(n_levels: usize) -> Self {
        let n_exc = n_levels - 1;
        let mut ground = DVector::zeros(n_levels);
        ground[0] = 1.0;
        let bright = DVector::from_fn(n_levels, |i, _| {
            if i == 0 {
                0.0
            } else {
                1.0 / (n_exc as f64).sqrt()
            }
        });
        let dark = (1..n_exc)
            .map(|k| {
                let norm = ((k * (k + 1)) as f64).sqrt();
                DVector::from_fn(n_levels, |i, _| match i {
                    0 => 0.0,
                    i if i <= k => 1.0 / norm,
                    i if i == k + 1 => -(k as f64) / norm,
                    _ => 0.0,
                })
            })
            .collect();
        Self { ground, bright, dark }
    }

    pub fn dark_projector(&self) -> DMatrix<C64> {
        let n = self.ground.len();
        let mut p = DMatrix::<C64>::zeros(n, n);
        for d in &self.dark {
            let v = d.map(|x| C64::new(x, 0.0));
            p += &v * v.adjoint();
        }
        p
    }
}

pub fn bright_dark_basis(spec: &SystemSpec) -> Result<BrightDarkBasis> {
    if !spec.gram.is_fully_aligned() {
        return Err(Error::NotAligned);
    }
    Ok(BrightDarkBasis::uniform(spec.n_levels))
}

/// Tr(Π_d ρ) for the dark subspace of a fully aligned system.
pub fn dark_projection(rho: &DensityMatrix, spec: &SystemSpec) -> Result<f64> {
    bright_dark_basis(spec)?;
    Ok(dark_overlap(rho))
}

/// Population of the dark subspace defined by the uniform bright state,
/// regardless of whether any dipole set makes it dark.
pub fn dark_overlap(rho: &DensityMatrix) -> f64 {
    let n = rho.dim();
    if n < 3 {
        return 0.0;
    }
    let basis = BrightDarkBasis::uniform(n);
    let excited: f64 = (1..n).map(|k| rho.population(k)).sum();
    (excited - rho.expectation(&basis.bright)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Ground,
    Bright,
    Dark,
    /// Gibbs state of the bare level energies at inverse temperature β.
    Thermal { beta: f64 },
    /// ρ₀₀ on the ground state, the remainder on the bright state.
    NondarkMax { rho00: f64 },
    /// (1−d)|0⟩⟨0| + d|ψ_d⟩⟨ψ_d| with the first dark vector.
    DarkMix { overlap: f64 },
    Explicit(DensityMatrix),
}

impl InitialState {
    pub fn build(&self, system: &SystemSpec) -> Result<DensityMatrix> {
        let n = system.n_levels;
        if n < 2 {
            return Err(Error::InvalidState("need at least two levels".into()));
        }
        let basis = BrightDarkBasis::uniform(n);
        let proj = |v: &DVector<f64>| -> DMatrix<C64> {
            let c = v.map(|x| C64::new(x, 0.0));
            &c * c.adjoint()
        };
        let first_dark = || -> Result<&DVector<f64>> {
            basis
                .dark
                .first()
                .ok_or_else(|| Error::InvalidState("dark state requires N >= 3".into()))
        };
        let unit = |x: f64, what: &str| -> Result<()> {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidState(format!("{what} must lie in [0, 1], got {x}")))
            }
        };
        match self {
            InitialState::Ground => Ok(DensityMatrix::basis_state(n, 0)),
            InitialState::Bright => DensityMatrix::new(proj(&basis.bright)),
            InitialState::Dark => DensityMatrix::new(proj(first_dark()?)),
            InitialState::Thermal { beta } => {
                if !(*beta >= 0.0) {
                    return Err(Error::InvalidState("thermal preset needs beta >= 0".into()));
                }
                let w: Vec<f64> = (0..n)
                    .map(|k| if k == 0 { 1.0 } else { (-beta * system.level_frequency(k)).exp() })
                    .collect();
                let z: f64 = w.iter().sum();
                let m = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        C64::new(w[i] / z, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                DensityMatrix::from_numeric(m)
            }
            InitialState::NondarkMax { rho00 } => {
                unit(*rho00, "rho00")?;
                let m = proj(&basis.ground).scale(*rho00) + proj(&basis.bright).scale(1.0 - rho00);
                DensityMatrix::new(m)
            }
            InitialState::DarkMix { overlap } => {
                unit(*overlap, "dark overlap")?;
                let m = proj(&basis.ground).scale(1.0 - overlap) + proj(first_dark()?).scale(*overlap);
                DensityMatrix::new(m)
            }
            InitialState::Explicit(rho) => {
                if rho.dim() != n {
                    return Err(Error::InvalidState(format!(
                        "explicit state has dimension {}, system has {n} levels",
                        rho.dim()
                    )));
                }
                rho.check()?;
                Ok(rho.clone())
            }
        }
    }
}

fn parse_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |arg: &str| -> Result<f64> {
            arg.trim()
                .parse::<f64>()
                .map_err(|_| Error::ConfigParse(format!("bad number `{arg}` in initial state `{s}`")))
        };
        match s {
            "ground" => return Ok(InitialState::Ground),
            "bright" => return Ok(InitialState::Bright),
            "dark" => return Ok(InitialState::Dark),
            _ => {}
        }
        if let Some(arg) = parse_call(s, "thermal") {
            return Ok(InitialState::Thermal { beta: num(arg)? });
        }
        if let Some(arg) = parse_call(s, "nondark-max") {
            return Ok(InitialState::NondarkMax { rho00: num(arg)? });
        }
        if let Some(arg) = parse_call(s, "dark-mix") {
            return Ok(InitialState::DarkMix { overlap: num(arg)? });
        }
        Err(Error::ConfigParse(format!("unknown initial state `{s}`")))
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Ground => write!(f, "ground"),
            InitialState::Bright => write!(f, "bright"),
            InitialState::Dark => write!(f, "dark"),
            InitialState::Thermal { beta } => write!(f, "thermal({beta})"),
            InitialState::NondarkMax { rho00 } => write!(f, "nondark-max({rho00})"),
            InitialState::DarkMix { overlap } => write!(f, "dark-mix({overlap})"),
            InitialState::Explicit(_) => write!(f, "explicit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub rtol: f64,
    pub atol: f64,
    /// Relative singular-value threshold that decides the kernel dimension.
    pub kernel_tol: f64,
    /// Propagation horizon for the long-time fallback; defaults to 10³ over
    /// the slowest nonzero rate.
    pub t_max: Option<f64>,
    pub max_steps: usize,
    /// Target ‖ℒρ‖₁ for the propagation fallback.
    pub residual_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            kernel_tol: 1e-10,
            t_max: None,
            max_steps: 2_000_000,
            residual_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineConfig {
    pub system: SystemSpec,
    pub bath_cold: BathSpec,
    pub bath_hot: BathSpec,
    pub modulation: ModulationSpec,
    pub initial_state: InitialState,
    pub numerics: Numerics,
}

impl MachineConfig {
    pub fn new(
        system: SystemSpec,
        bath_cold: BathSpec,
        bath_hot: BathSpec,
        modulation: ModulationSpec,
    ) -> Self {
        Self {
            system,
            bath_cold,
            bath_hot,
            modulation,
            initial_state: InitialState::Ground,
            numerics: Numerics::default(),
        }
    }

    pub fn bath(&self, id: BathId) -> &BathSpec {
        match id {
            BathId::Cold => &self.bath_cold,
            BathId::Hot => &self.bath_hot,
        }
    }

    pub fn bath_mut(&mut self, id: BathId) -> &mut BathSpec {
        match id {
            BathId::Cold => &mut self.bath_cold,
            BathId::Hot => &mut self.bath_hot,
        }
    }

    pub fn initial_density(&self) -> Result<DensityMatrix> {
        self.initial_state.build(&self.system)
    }

    /// Same configuration with a uniform alignment factor `p`.
    pub fn with_alignment(&self, p: f64) -> Self {
        let mut cfg = self.clone();
        cfg.system.gram = DipoleGram::uniform(cfg.system.n_excited(), p);
        cfg
    }

    /// Degenerate V-system with `n_levels` levels and uniform alignment `p`,
    /// keeping baths, modulation and numerics.
    pub fn with_levels(&self, n_levels: usize, p: f64) -> Self {
        let mut cfg = self.clone();
        cfg.system = SystemSpec::degenerate(n_levels, self.system.omega0, p);
        if let InitialState::Explicit(_) = cfg.initial_state {
            cfg.initial_state = InitialState::Ground;
        }
        cfg
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.message, self.field)
    }
}

pub fn validate_config(cfg: &MachineConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let sys = &cfg.system;
    let mut system_ok = true;

    if sys.n_levels < 2 {
        out.push(Violation::new("system.n_levels", "need at least two levels"));
        system_ok = false;
    }
    if !(sys.omega0 > 0.0 && sys.omega0.is_finite()) {
        out.push(Violation::new("system.omega0", "omega0 must be positive"));
        system_ok = false;
    }
    if sys.n_levels >= 2 {
        let n_exc = sys.n_excited();
        if sys.detunings.len() != n_exc {
            out.push(Violation::new(
                "system.detunings",
                format!("expected {n_exc} detunings, got {}", sys.detunings.len()),
            ));
            system_ok = false;
        } else if sys.detunings.iter().any(|&d| !(d > -sys.omega0) || !d.is_finite()) {
            out.push(Violation::new("system.detunings", "detuning must exceed -omega0"));
            system_ok = false;
        }
        system_ok &= gram_violations(&sys.gram, n_exc, &mut out);
    }

    for (id, name) in [(BathId::Cold, "bath_cold"), (BathId::Hot, "bath_hot")] {
        let bath = cfg.bath(id);
        if !(bath.temperature > 0.0 && bath.temperature.is_finite()) {
            out.push(Violation::new(format!("{name}.T"), "temperature must be positive"));
        }
        bath.shape.violations(&format!("{name}.shape"), &mut out);
    }
    if cfg.bath_cold.temperature > cfg.bath_hot.temperature {
        out.push(Violation::new("bath_cold.T", "cold bath is hotter than hot bath"));
    }

    let m = &cfg.modulation;
    if !(m.omega > 0.0 && m.omega.is_finite()) {
        out.push(Violation::new("modulation.Omega", "modulation rate must be positive"));
    }
    match crate::floquet::modulation_weights(m) {
        Ok(table) => {
            if system_ok && m.omega > 0.0 {
                sideband_violations(sys, m.omega, &table, &mut out);
            }
        }
        Err(e) => out.push(Violation::new("modulation", e.to_string())),
    }

    if system_ok {
        if let Err(e) = cfg.initial_density() {
            out.push(Violation::new("initial.state", e.to_string()));
        }
    }

    let num = &cfg.numerics;
    if !(num.rtol > 0.0 && num.atol > 0.0 && num.kernel_tol > 0.0 && num.residual_tol > 0.0) {
        out.push(Violation::new("numerics", "tolerances must be positive"));
    }
    if let Some(t) = num.t_max {
        if !(t > 0.0) {
            out.push(Violation::new("numerics.t_max", "t_max must be positive"));
        }
    }
    out
}

fn gram_violations(gram: &DipoleGram, n_exc: usize, out: &mut Vec<Violation>) -> bool {
    let g = gram.matrix();
    if g.nrows() != n_exc || g.ncols() != n_exc {
        out.push(Violation::new(
            "system.gram",
            format!("gram must be {n_exc}x{n_exc}, got {}x{}", g.nrows(), g.ncols()),
        ));
        return false;
    }
    let mut ok = true;
    for j in 0..n_exc {
        if g[(j, j)] != 1.0 {
            out.push(Violation::new(format!("system.gram[{j},{j}]"), "diagonal must be exactly 1"));
            ok = false;
        }
        for k in (j + 1)..n_exc {
            if g[(j, k)] != g[(k, j)] {
                out.push(Violation::new(format!("system.gram[{j},{k}]"), "gram must be symmetric"));
                ok = false;
            }
        }
    }
    for j in 0..n_exc {
        for k in (j + 1)..n_exc {
            let in_range = |v: f64| (0.0..=1.0).contains(&v);
            if !in_range(g[(j, k)]) || !in_range(g[(k, j)]) {
                out.push(Violation::new(
                    format!("system.gram[{},{}]", j + 1, k + 1),
                    "alignment factor outside [0,1]",
                ));
                ok = false;
            }
        }
    }
    if ok && g.clone().symmetric_eigenvalues().min() < -1e-12 {
        out.push(Violation::new("system.gram", "gram is not positive semidefinite"));
        ok = false;
    }
    ok
}

fn sideband_violations(
    sys: &SystemSpec,
    omega: f64,
    table: &crate::floquet::WeightTable,
    out: &mut Vec<Violation>,
) {
    let lowest = (1..sys.n_levels)
        .map(|j| sys.level_frequency(j))
        .fold(f64::INFINITY, f64::min);
    // Offending orders are contiguous from the most negative retained q; report
    // the one closest to zero.
    let worst = table
        .iter()
        .filter(|&(q, _)| lowest + q as f64 * omega <= 0.0)
        .map(|(q, _)| q)
        .max();
    if let Some(q) = worst {
        out.push(Violation::new(
            "modulation",
            format!("sideband ω0+qΩ nonpositive for q={q}"),
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn valid_config_has_no_violations() {
        let cfg = presets::separated_machine(3, 1.0, 0.1, 1.0);
        assert!(validate_config(&cfg).is_empty(), "{:?}", validate_config(&cfg));
    }

    #[test]
    fn alignment_factor_out_of_range() {
        let mut cfg = presets::separated_machine(3, 1.0, 0.1, 1.0);
        cfg.system.gram = DipoleGram::uniform(2, 1.2);
        let v = validate_config(&cfg);
        let msgs: Vec<_> = v.iter().map(|v| v.message.as_str()).collect();
        assert_eq!(msgs, vec!["alignment factor outside [0,1]"]);
    }

    #[test]
    fn negative_sideband_reported_once() {
        let mut cfg = presets::separated_machine(3, 1.0, 0.1, 1.0);
        cfg.modulation = ModulationSpec::sinusoidal(0.5, 2.0, 2);
        let msgs: Vec<_> = validate_config(&cfg).into_iter().map(|v| v.message).collect();
        assert_eq!(msgs, vec!["sideband ω0+qΩ nonpositive for q=-1".to_string()]);
    }

    #[test]
    fn gram_must_be_psd() {
        // Pairwise-valid but jointly unrealizable: three dipoles at 0, 0, 1.
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let mut cfg = presets::separated_machine(4, 1.0, 0.1, 1.0);
        cfg.system.gram = DipoleGram::from_matrix(g);
        let v = validate_config(&cfg);
        assert!(v.iter().any(|v| v.message.contains("positive semidefinite")), "{v:?}");
    }

    #[test]
    fn temperature_ordering() {
        let mut cfg = presets::separated_machine(3, 1.0, 0.1, 1.0);
        cfg.bath_cold.temperature = 2.0;
        assert!(validate_config(&cfg).iter().any(|v| v.field == "bath_cold.T"));
    }

    #[test]
    fn basis_n3_matches_bright_dark_pair() {
        let b = bright_dark_basis(&SystemSpec::degenerate(3, 1.0, 1.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.bright[1] - s).abs() < 1e-15 && (b.bright[2] - s).abs() < 1e-15);
        assert_eq!(b.bright[0], 0.0);
        assert_eq!(b.dark.len(), 1);
        assert!((b.dark[0][1] - s).abs() < 1e-15 && (b.dark[0][2] + s).abs() < 1e-15);
    }

    #[test]
    fn basis_n2_has_no_dark() {
        let b = bright_dark_basis(&SystemSpec::degenerate(2, 1.0, 1.0)).unwrap();
        assert_eq!(b.bright.as_slice(), &[0.0, 1.0]);
        assert!(b.dark.is_empty());
    }

    #[test]
    fn basis_n4_orthonormal_and_spans_bright_complement() {
        let b = bright_dark_basis(&SystemSpec::degenerate(4, 1.0, 1.0)).unwrap();
        assert_eq!(b.dark.len(), 2);
        let mut vecs = vec![b.ground.clone(), b.bright.clone()];
        vecs.extend(b.dark.iter().cloned());
        for (i, u) in vecs.iter().enumerate() {
            for (j, v) in vecs.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((u.dot(v) - want).abs() < 1e-14);
            }
        }
        // Gram-Schmidt of {|1>,|2>} against the bright state spans the same plane.
        let mut gs: Vec<DVector<f64>> = Vec::new();
        for k in 1..3 {
            let mut e = DVector::zeros(4);
            e[k] = 1.0;
            e -= &b.bright * b.bright.dot(&e);
            for g in &gs {
                e -= g * g.dot(&e);
            }
            gs.push(e.normalize());
        }
        let proj_gs: DMatrix<f64> = gs.iter().map(|v| v * v.transpose()).sum();
        let proj_h: DMatrix<f64> = b.dark.iter().map(|v| v * v.transpose()).sum();
        assert!((proj_gs - proj_h).abs().max() < 1e-14);
    }

    #[test]
    fn basis_rejects_misaligned() {
        assert_eq!(
            bright_dark_basis(&SystemSpec::degenerate(3, 1.0, 0.5)).unwrap_err(),
            Error::NotAligned
        );
    }

    #[test]
    fn dark_projection_examples() {
        let spec = SystemSpec::degenerate(3, 1.0, 1.0);
        let dark = InitialState::Dark.build(&spec).unwrap();
        assert!((dark_projection(&dark, &spec).unwrap() - 1.0).abs() < 1e-15);
        let ground = DensityMatrix::basis_state(3, 0);
        assert_eq!(dark_projection(&ground, &spec).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((dark_projection(&mixed, &spec).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dark_projection_invariant_under_dark_unitary() {
        let spec = SystemSpec::degenerate(4, 1.0, 1.0);
        let b = BrightDarkBasis::uniform(4);
        let rho = InitialState::Thermal { beta: 0.3 }.build(&spec).unwrap();
        let mut rho = rho.into_matrix();
        rho[(1, 3)] = c(0.05);
        rho[(3, 1)] = c(0.05);
        let rho = DensityMatrix::new(rho).unwrap();
        // Rotation by an angle inside the two-dimensional dark plane.
        let (s, co) = 0.7f64.sin_cos();
        let d0 = b.dark[0].map(|x| C64::new(x, 0.0));
        let d1 = b.dark[1].map(|x| C64::new(x, 0.0));
        let mut u = DMatrix::<C64>::identity(4, 4) - &d0 * d0.adjoint() - &d1 * d1.adjoint();
        let r0 = d0.scale(co) + d1.scale(s) * C64::new(0.0, 1.0);
        let r1 = -d0.scale(s) * C64::new(0.0, 1.0) + d1.scale(co);
        u += &r0 * d0.adjoint() + &r1 * d1.adjoint();
        let rotated = DensityMatrix::from_numeric(&u * rho.matrix() * u.adjoint()).unwrap();
        let before = dark_projection(&rho, &spec).unwrap();
        let after = dark_projection(&rotated, &spec).unwrap();
        assert!((before - after).abs() < 1e-14);
    }

    #[test]
    fn presets_are_physical() {
        let spec = SystemSpec::degenerate(4, 1.0, 1.0);
        for s in [
            InitialState::Ground,
            InitialState::Bright,
            InitialState::Dark,
            InitialState::Thermal { beta: 0.0 },
            InitialState::Thermal { beta: 3.0 },
            InitialState::NondarkMax { rho00: 0.25 },
            InitialState::DarkMix { overlap: 0.4 },
        ] {
            let rho = s.build(&spec).unwrap();
            rho.check().unwrap();
        }
    }

    #[test]
    fn nondark_max_has_maximal_coherence() {
        let spec = SystemSpec::degenerate(3, 1.0, 1.0);
        let rho = InitialState::NondarkMax { rho00: 0.3 }.build(&spec).unwrap();
        let half = 0.35;
        assert!((rho.population(1) - half).abs() < 1e-15);
        assert!((rho.population(2) - half).abs() < 1e-15);
        assert!((rho.get(2, 1) - c(half)).norm() < 1e-15);
        assert!(dark_overlap(&rho) < 1e-15);
    }

    #[test]
    fn initial_state_names_round_trip() {
        for name in ["ground", "bright", "dark", "thermal(2.5)", "nondark-max(0.3)", "dark-mix(0.2)"] {
            let s: InitialState = name.parse().unwrap();
            assert_eq!(s.to_string(), name);
        }
        assert!("excited".parse::<InitialState>().is_err());
    }

    #[test]
    fn density_matrix_rejects_bad_trace_and_negativity() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.6), c(0.6)]));
        assert!(DensityMatrix::new(m).is_err());
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.1), c(-0.1)]));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn gram_classification() {
        assert_eq!(DipoleGram::uniform(2, 0.3).classify(), GramClass::Misaligned);
        assert_eq!(DipoleGram::uniform(2, 1.0 - 1e-9).classify(), GramClass::Aligned);
        assert_eq!(DipoleGram::uniform(1, 1.0).classify(), GramClass::Misaligned);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, s, 0.0, 1.0, s, s, s, 1.0]);
        assert_eq!(DipoleGram::from_matrix(g).classify(), GramClass::Mixed);
    }
}
