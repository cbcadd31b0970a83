//! Sub-bath Lindblad superoperators, their sum, and the reduced four-variable
//! ODE of the degenerate three-level system.
//!
//! Superoperators act on column-stacked density matrices: the entry ρ_{ij}
//! of an N×N matrix sits at index i + jN, so vec(AρB) = (Bᵀ ⊗ A) vec(ρ).

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use crate::bath::coupling_spectrum;
use crate::error::{Error, Result};
use crate::floquet::{modulation_weights, WeightTable};
use crate::model::{BathId, MachineConfig, C64};

/// Sub-baths with P(q) at or below this are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    matrix: DMatrix<C64>,
}

impl Superoperator {
    pub fn zeros(n: usize) -> Self {
        Self { n, matrix: DMatrix::zeros(n * n, n * n) }
    }

    /// Dimension N of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize(&(&self.matrix * vectorize(rho)), self.n)
    }

    fn add_scaled(&mut self, other: &Superoperator) {
        self.matrix += &other.matrix;
    }

    /// Adds c·(2aρb − baρ − ρba).
    fn add_dissipator(&mut self, c: f64, a: &DMatrix<C64>, b: &DMatrix<C64>) {
        if c == 0.0 {
            return;
        }
        let id = DMatrix::<C64>::identity(self.n, self.n);
        let ba = b * a;
        let c = C64::new(c, 0.0);
        self.matrix += b.transpose().kronecker(a) * (c * 2.0);
        self.matrix -= id.kronecker(&ba) * c;
        self.matrix -= ba.transpose().kronecker(&id) * c;
    }
}

pub fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// ℒ_i^q for one bath at one harmonic sideband.
#[derive(Debug, Clone)]
pub struct SubbathGenerator {
    pub bath: BathId,
    pub q: i32,
    /// ω₀ + qΩ.
    pub sideband: f64,
    pub weight: f64,
    /// Diagonal of the sideband Hamiltonian H_q (ground first).
    pub energies: Vec<f64>,
    pub superop: Superoperator,
}

/// Σ_q Σ_i ℒ_i^q together with its retained constituents.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub subbaths: Vec<SubbathGenerator>,
    pub total: Superoperator,
}

fn sigma(n: usize, row: usize, col: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    m[(row, col)] = C64::new(1.0, 0.0);
    m
}

fn sideband_energies(cfg: &MachineConfig, q: i32) -> Result<Vec<f64>> {
    let sys = &cfg.system;
    let shift = q as f64 * cfg.modulation.omega;
    let mut energies = vec![0.0];
    for j in 1..sys.n_levels {
        let w = sys.level_frequency(j) + shift;
        if !(w > 0.0) {
            return Err(Error::NonpositiveSideband { q, frequency: w });
        }
        energies.push(w);
    }
    Ok(energies)
}

fn subbath_with_weight(cfg: &MachineConfig, bath_id: BathId, q: i32, weight: f64) -> Result<SubbathGenerator> {
    let sys = &cfg.system;
    let n = sys.n_levels;
    let energies = sideband_energies(cfg, q)?;
    let bath = cfg.bath(bath_id);
    let mut emit = Vec::with_capacity(n - 1);
    let mut absorb = Vec::with_capacity(n - 1);
    for &w in &energies[1..] {
        emit.push(weight * coupling_spectrum(bath, w)?);
        absorb.push(weight * coupling_spectrum(bath, -w)?);
    }
    let gram = sys.gram.snapped();
    // Equal frequencies share the common sideband rate; detuned pairs use the
    // geometric mean of the two level rates.
    let pair_rate = |rates: &[f64], j: usize, k: usize| -> f64 {
        if energies[j + 1] == energies[k + 1] {
            rates[j]
        } else {
            (rates[j] * rates[k]).sqrt()
        }
    };
    let mut superop = Superoperator::zeros(n);
    for j in 0..n - 1 {
        for k in 0..n - 1 {
            let p = gram[(j, k)];
            if p == 0.0 {
                continue;
            }
            let lower_j = sigma(n, 0, j + 1);
            let raise_k = sigma(n, k + 1, 0);
            superop.add_dissipator(0.5 * p * pair_rate(&emit, j, k), &lower_j, &raise_k);
            let raise_j = sigma(n, j + 1, 0);
            let lower_k = sigma(n, 0, k + 1);
            superop.add_dissipator(0.5 * p * pair_rate(&absorb, j, k), &raise_j, &lower_k);
        }
    }
    Ok(SubbathGenerator {
        bath: bath_id,
        q,
        sideband: sys.omega0 + q as f64 * cfg.modulation.omega,
        weight,
        energies,
        superop,
    })
}

pub fn build_subbath_generator(cfg: &MachineConfig, bath: BathId, q: i32) -> Result<SubbathGenerator> {
    let table = modulation_weights(&cfg.modulation)?;
    subbath_with_weight(cfg, bath, q, table.get(q))
}

fn is_retained(cfg: &MachineConfig, bath: BathId, q: i32, weight: f64) -> Result<bool> {
    if weight <= WEIGHT_FLOOR {
        return Ok(false);
    }
    let energies = sideband_energies(cfg, q)?;
    for &w in &energies[1..] {
        let b = cfg.bath(bath);
        if coupling_spectrum(b, w)? + coupling_spectrum(b, -w)? > 0.0 {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn retained_subbaths(cfg: &MachineConfig) -> Result<Vec<(BathId, i32, f64)>> {
    let table = modulation_weights(&cfg.modulation)?;
    retained_from_table(cfg, &table)
}

fn retained_from_table(cfg: &MachineConfig, table: &WeightTable) -> Result<Vec<(BathId, i32, f64)>> {
    let mut out = Vec::new();
    for bath in BathId::BOTH {
        for (q, p) in table.iter() {
            if is_retained(cfg, bath, q, p)? {
                out.push((bath, q, p));
            }
        }
    }
    Ok(out)
}

pub fn build_liouvillian(cfg: &MachineConfig) -> Result<Liouvillian> {
    let mut total = Superoperator::zeros(cfg.system.n_levels);
    let subbaths = retained_subbaths(cfg)?
        .into_iter()
        .map(|(bath, q, p)| subbath_with_weight(cfg, bath, q, p))
        .collect::<Result<Vec<_>>>()?;
    for sb in &subbaths {
        total.add_scaled(&sb.superop);
    }
    Ok(Liouvillian { subbaths, total })
}

pub fn build_total_generator(cfg: &MachineConfig) -> Result<Superoperator> {
    Ok(build_liouvillian(cfg)?.total)
}

/// Σ_q Σ_i P(q) G_i(±(ω + qΩ)) over the retained sub-baths, for a level of
/// bare frequency ω. Returns (emission, absorption).
pub fn rate_sums(cfg: &MachineConfig, level_frequency: f64) -> Result<(f64, f64)> {
    let table = modulation_weights(&cfg.modulation)?;
    let mut emission = 0.0;
    let mut absorption = 0.0;
    for (bath, q, p) in retained_from_table(cfg, &table)? {
        let w = level_frequency + q as f64 * cfg.modulation.omega;
        if !(w > 0.0) {
            return Err(Error::NonpositiveSideband { q, frequency: w });
        }
        emission += p * coupling_spectrum(cfg.bath(bath), w)?;
        absorption += p * coupling_spectrum(cfg.bath(bath), -w)?;
    }
    Ok((emission, absorption))
}

/// ẋ = A x + b for x = (ρ₂₁, ρ₁₂, ρ₀₀, ρ₂₂).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOde {
    pub a: Matrix4<f64>,
    pub b: Vector4<f64>,
    /// ½ Σ_q Σ_i P(q) G_i(ω₀ + qΩ).
    pub prefactor: f64,
    /// e^{−β_eff ω₀}.
    pub boltzmann: f64,
    pub alignment: f64,
}

impl ReducedOde {
    pub fn new(prefactor: f64, boltzmann: f64, p: f64) -> Self {
        let x = boltzmann;
        let s = 1.0 + 2.0 * x;
        #[rustfmt::skip]
        let a = Matrix4::new(
            -2.0,     0.0,     p * s,    0.0,
             0.0,    -2.0,     p * s,    0.0,
             2.0 * p, 2.0 * p, -2.0 * s, 0.0,
            -p,      -p,       2.0 * x, -2.0,
        ) * prefactor;
        let b = Vector4::new(-p, -p, 2.0, 0.0) * prefactor;
        Self { a, b, prefactor, boltzmann, alignment: p }
    }

    pub fn derivative(&self, x: &Vector4<C64>) -> Vector4<C64> {
        self.a.map(|v| C64::new(v, 0.0)) * x + self.b.map(|v| C64::new(v, 0.0))
    }

    pub fn determinant(&self) -> f64 {
        self.a.determinant()
    }
}

/// [prefactor]⁴ · 16 (1 + 2x)(1 − p²).
pub fn determinant_closed_form(prefactor: f64, boltzmann: f64, p: f64) -> f64 {
    prefactor.powi(4) * 16.0 * (1.0 + 2.0 * boltzmann) * (1.0 - p * p)
}

fn require_degenerate_three_level(cfg: &MachineConfig) -> Result<()> {
    if cfg.system.n_levels != 3 || !cfg.system.is_degenerate() {
        return Err(Error::Unsupported("a degenerate three-level system".into()));
    }
    Ok(())
}

pub fn reduced_ode_system(cfg: &MachineConfig) -> Result<ReducedOde> {
    require_degenerate_three_level(cfg)?;
    let (emission, absorption) = rate_sums(cfg, cfg.system.omega0)?;
    if emission == 0.0 {
        return Err(Error::NoCoupling);
    }
    let p = cfg.system.gram.snapped()[(0, 1)];
    Ok(ReducedOde::new(0.5 * emission, absorption / emission, p))
}

pub fn coefficient_determinant(cfg: &MachineConfig) -> Result<f64> {
    Ok(reduced_ode_system(cfg)?.determinant())
}
