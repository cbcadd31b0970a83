//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::panic;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vheat_core::floquet::modulation_weights;
use vheat_core::generator::reduced_ode_system;
use vheat_core::model::{
    dark_projection, validate_config, BathSpec, DensityMatrix, InitialState, MachineConfig, Modulation,
    ModulationSpec, SpectrumShape, SystemSpec, C64,
};
use vheat_core::presets::{broadband_machine, separated_machine};
use vheat_core::steady::{effective_boltzmann_factor, numeric_steady_state, propagate};
use vheat_core::sweep::{figure_dataset, fig2b, fig2b_temperatures, scale_to_beta_eff, Figure};
use vheat_core::thermo::{thermo_report, tls_config, tls_reference_power, Mode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_state(n: usize, rng: &mut StdRng) -> DensityMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    DensityMatrix::from_numeric(&a * a.adjoint()).unwrap()
}

/// KMS emission and absorption rates, written out independently of the
/// library's spectrum code.
fn kms(bath: &BathSpec, w: f64) -> (f64, f64) {
    let gamma = bath.shape.rate(w);
    let boltz = (-w / bath.temperature).exp();
    (gamma / (1.0 - boltz), gamma * boltz / (1.0 - boltz))
}

/// Σ P(q) G_i(−ω₀−qΩ) / Σ P(q) G_i(ω₀+qΩ) summed by hand.
fn oracle_boltzmann(cfg: &MachineConfig) -> f64 {
    let table = modulation_weights(&cfg.modulation).unwrap();
    let (mut up, mut down) = (0.0, 0.0);
    for (q, p) in table.iter() {
        let w = cfg.system.omega0 + q as f64 * cfg.modulation.omega;
        for bath in [&cfg.bath_cold, &cfg.bath_hot] {
            let (e, a) = kms(bath, w);
            down += p * e;
            up += p * a;
        }
    }
    up / down
}

fn dark_vector() -> DVector<f64> {
    DVector::from_vec(vec![0.0, 1.0, -1.0]) / 2f64.sqrt()
}

fn lorentzian_machine(p: f64) -> MachineConfig {
    MachineConfig::new(
        SystemSpec::degenerate(3, 1.0, p),
        BathSpec { temperature: 0.1, shape: SpectrumShape::Lorentzian { center: 1.0, width: 0.1, height: 1.0 } },
        BathSpec { temperature: 1.0, shape: SpectrumShape::Lorentzian { center: 1.4, width: 0.2, height: 0.5 } },
        ModulationSpec::sinusoidal(0.7, 0.4, 2),
    )
}

fn power_ratio(cfg: &MachineConfig, rho0: &DensityMatrix) -> f64 {
    thermo_report(cfg, rho0).unwrap().w_dot / tls_reference_power(cfg).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rng = StdRng::seed_from_u64(1);
    let spectra: [fn(f64) -> MachineConfig; 3] =
        [|p| separated_machine(3, p, 0.1, 1.0), |p| broadband_machine(3, p, 0.3, 1.2), lorentzian_machine];
    for p in [0.0, 0.3, 0.7] {
        for target in [0.1, 1.0, 5.0] {
            for make in spectra {
                let cfg = scale_to_beta_eff(&make(p), target).unwrap();
                let x = oracle_boltzmann(&cfg);
                let rho00 = 1.0 / (1.0 + 2.0 * x);
                let want = DMatrix::from_fn(3, 3, |i, j| match (i, j) {
                    (0, 0) => C64::new(rho00, 0.0),
                    (i, j) if i == j => C64::new(x * rho00, 0.0),
                    _ => C64::new(0.0, 0.0),
                });
                let got = numeric_steady_state(&cfg, &random_state(3, &mut rng)).unwrap();
                worst = worst.max(max_abs(&(got.matrix() - &want)));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    check(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("27 points, max deviation {worst:.1e}, {secs:.2} s"))
}

fn aligned_closed_form() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let cfg = separated_machine(3, 1.0, 0.1, 1.0);
    let x = oracle_boltzmann(&cfg);
    let eb = 1.0 / x;
    let psi_d = dark_vector();
    let mut worst: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for _ in 0..10 {
        let rho0 = random_state(3, &mut rng);
        let d = rho0.expectation(&psi_d);
        let r00 = (1.0 - d) / (1.0 + x);
        let r11 = 0.5 * (1.0 + d * eb) / (1.0 + eb);
        let r21 = 0.5 * (1.0 - d * (2.0 + eb)) / (1.0 + eb);
        let want = DMatrix::from_row_slice(3, 3, &[r00, 0.0, 0.0, 0.0, r11, r21, 0.0, r21, r11]).map(|v| C64::new(v, 0.0));
        let got = numeric_steady_state(&cfg, &rho0).unwrap();
        worst = worst.max(max_abs(&(got.matrix() - &want)));
        let traj = propagate(&cfg, &rho0, 40.0, 2.0).unwrap();
        let d0 = dark_projection(&rho0, &cfg.system).unwrap();
        for s in &traj.states {
            drift = drift.max((dark_projection(s, &cfg.system).unwrap() - d0).abs());
        }
    }
    check(worst <= 1e-8, || format!("steady-state deviation {worst:e}"))?;
    check(drift <= 1e-9, || format!("dark projection drift {drift:e}"))?;
    Ok(format!("10 states, deviation {worst:.1e}, dark drift {drift:.1e}"))
}

fn enhancement_misaligned() -> Outcome {
    let formula = |b: f64| 2.0 * (1.0 + (-b).exp()) / (1.0 + 2.0 * (-b).exp());
    let rho0 = DensityMatrix::basis_state(3, 0);
    let mut worst: f64 = 0.0;
    for p in [0.0, 0.3, 0.7] {
        for target in [0.1, 1.0, 5.0] {
            for base in [separated_machine(3, p, 0.1, 1.0), broadband_machine(3, p, 0.3, 1.2)] {
                let cfg = scale_to_beta_eff(&base, target).unwrap();
                worst = worst.max((power_ratio(&cfg, &rho0) - formula(target)).abs());
            }
        }
    }
    check(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    let targets = [1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0];
    let base = separated_machine(3, 0.0, 0.1, 1.0);
    let ratios: Vec<f64> =
        targets.iter().map(|&t| power_ratio(&scale_to_beta_eff(&base, t).unwrap(), &rho0)).collect();
    check(ratios.windows(2).all(|w| w[1] > w[0]), || format!("not monotone: {ratios:?}"))?;
    let (lo, hi) = (ratios[0], ratios[ratios.len() - 1]);
    check((lo - 4.0 / 3.0).abs() < 1e-3 && lo >= 4.0 / 3.0, || format!("small-β limit {lo}"))?;
    check((hi - 2.0).abs() < 1e-9 && hi <= 2.0, || format!("large-β limit {hi}"))?;
    Ok(format!("18 points, max deviation {worst:.1e}; limits {lo:.6} and {hi:.12}"))
}

fn enhancement_aligned() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let cfg = separated_machine(3, 1.0, 0.1, 1.0);
    let bright = DVector::from_vec(vec![0.0, 1.0, 1.0]) / 2f64.sqrt();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rho0 = random_state(3, &mut rng);
        let want = 2.0 * (rho0.expectation(&bright) + rho0.population(0));
        worst = worst.max((power_ratio(&cfg, &rho0) - want).abs());
    }
    check(worst <= 1e-6, || format!("ratio deviation {worst:e}"))?;
    let dark = InitialState::Dark.build(&cfg.system).unwrap();
    let w_dark = thermo_report(&cfg, &dark).unwrap().w_dot.abs();
    check(w_dark < 1e-10, || format!("dark start power {w_dark:e}"))?;

    let misaligned = thermo_report(&cfg.with_alignment(0.0), &DensityMatrix::basis_state(3, 0)).unwrap().w_dot;
    let x = oracle_boltzmann(&cfg);
    let threshold = 1.0 / (2.0 + 1.0 / x);
    let n = 201;
    let step = 1.0 / (n - 1) as f64;
    let mut crossing = None;
    for k in 0..n {
        let d = k as f64 * step;
        let rho0 = InitialState::DarkMix { overlap: d }.build(&cfg.system).unwrap();
        let aligned = thermo_report(&cfg, &rho0).unwrap().w_dot;
        if -aligned <= -misaligned {
            crossing = Some(d);
            break;
        }
    }
    let crossing = crossing.ok_or("aligned machine never falls behind")?;
    check((crossing - threshold).abs() <= step, || format!("crossing at {crossing}, threshold {threshold}"))?;
    Ok(format!("ratio deviation {worst:.1e}, dark |W| {w_dark:.1e}, crossover {crossing} vs {threshold:.5}"))
}

fn nlevel() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for n in [4usize, 5] {
        let cfg = broadband_machine(n, 1.0, 0.3, 1.2);
        let m = (n - 1) as f64;
        for _ in 0..10 {
            let rho0 = random_state(n, &mut rng);
            // Π_d = 1 − |0⟩⟨0| − |b⟩⟨b| on the excited manifold.
            let bright = DVector::from_fn(n, |i, _| if i == 0 { 0.0 } else { 1.0 / m.sqrt() });
            let dark = 1.0 - rho0.population(0) - rho0.expectation(&bright);
            let r = power_ratio(&cfg, &rho0);
            worst = worst.max((r - m * (1.0 - dark)).abs());
            max_ratio = max_ratio.max(r / m);
        }
        for p in [0.0, 0.4, 0.9] {
            let r = power_ratio(&cfg.with_alignment(p), &random_state(n, &mut rng));
            max_ratio = max_ratio.max(r / m);
        }
    }
    check(worst <= 1e-6, || format!("deviation {worst:e}"))?;
    check(max_ratio <= 1.0 + 1e-9, || format!("ratio/(N−1) reached {max_ratio}"))?;
    Ok(format!("N = 4, 5: deviation {worst:.1e}, max ratio/(N−1) = {max_ratio:.6}"))
}

fn random_spectrum(rng: &mut StdRng) -> SpectrumShape {
    match rng.random_range(0..3) {
        0 => {
            let lo = rng.random_range(0.1..1.0);
            SpectrumShape::FlatBand { lo, hi: lo + rng.random_range(0.3..2.0), height: rng.random_range(0.2..2.0) }
        }
        1 => SpectrumShape::Lorentzian {
            center: rng.random_range(0.5..2.0),
            width: rng.random_range(0.05..0.5),
            height: rng.random_range(0.2..2.0),
        },
        _ => SpectrumShape::Ohmic { strength: rng.random_range(0.1..1.0), cutoff: rng.random_range(0.5..3.0) },
    }
}

fn random_modulation(rng: &mut StdRng) -> ModulationSpec {
    let omega = rng.random_range(0.05..0.45);
    if rng.random_bool(0.7) {
        ModulationSpec::sinusoidal(rng.random_range(0.0..2.0), omega, rng.random_range(1..=2))
    } else {
        let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights = (-2..=2).zip(raw.iter().map(|w| w / total)).collect();
        ModulationSpec { mode: Modulation::Custom { weights }, omega, q_max: 2 }
    }
}

/// A random degenerate machine that passes validation and couples somewhere.
fn random_config(rng: &mut StdRng, n: usize) -> MachineConfig {
    loop {
        let p = if rng.random_bool(0.3) { 1.0 } else { rng.random_range(0.0..0.95) };
        let tc = rng.random_range(0.05..1.0);
        let cfg = MachineConfig::new(
            SystemSpec::degenerate(n, 1.0, p),
            BathSpec { temperature: tc, shape: random_spectrum(rng) },
            BathSpec { temperature: tc * rng.random_range(1.0..10.0), shape: random_spectrum(rng) },
            random_modulation(rng),
        );
        if validate_config(&cfg).is_empty() && effective_boltzmann_factor(&cfg).is_ok() {
            return cfg;
        }
    }
}

fn thermodynamic_laws() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let (mut engines, mut compared) = (0, 0);
    let mut worst_sigma = f64::INFINITY;
    let mut worst_eta: f64 = 0.0;
    for k in 0..200 {
        let n = 2 + k % 4;
        let cfg = random_config(&mut rng, n);
        let rho0 = random_state(n, &mut rng);
        let r = thermo_report(&cfg, &rho0).map_err(|e| format!("config {k}: {e}"))?;
        check(r.j_cold + r.j_hot + r.w_dot == 0.0, || format!("config {k}: first law"))?;
        worst_sigma = worst_sigma.min(r.entropy_production);
        check(r.entropy_production >= -1e-12, || format!("config {k}: entropy production {}", r.entropy_production))?;
        if r.mode == Mode::Engine {
            engines += 1;
            let carnot = 1.0 - cfg.bath_cold.temperature / cfg.bath_hot.temperature;
            let eta = r.efficiency.unwrap();
            check(eta <= carnot + 1e-9, || format!("config {k}: η = {eta} above Carnot {carnot}"))?;
            let tls = thermo_report(&tls_config(&cfg), &DensityMatrix::basis_state(2, 0)).unwrap();
            let eta_tls = tls.efficiency.ok_or_else(|| format!("config {k}: two-level efficiency undefined"))?;
            worst_eta = worst_eta.max((eta - eta_tls).abs());
            compared += 1;
        }
    }
    check(worst_eta <= 1e-9, || format!("η mismatch {worst_eta:e}"))?;
    check(engines > 0, || "no engine-mode configuration sampled".into())?;
    Ok(format!(
        "200 configs, min entropy production {worst_sigma:.2e}, {engines} engines, η vs two-level {worst_eta:.1e} over {compared}"
    ))
}

fn determinant() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.0, 0.25, 0.5, 0.75] {
        for base in [separated_machine(3, p, 0.1, 1.0), broadband_machine(3, p, 0.3, 1.2)] {
            let ode = reduced_ode_system(&base).unwrap();
            let table = modulation_weights(&base.modulation).unwrap();
            let k: f64 = 0.5
                * table
                    .iter()
                    .map(|(q, w)| {
                        let f = 1.0 + q as f64 * base.modulation.omega;
                        w * (kms(&base.bath_cold, f).0 + kms(&base.bath_hot, f).0)
                    })
                    .sum::<f64>();
            let x = oracle_boltzmann(&base);
            let want = k.powi(4) * 16.0 * (1.0 + 2.0 * x) * (1.0 - p * p);
            let got = ode.a.determinant();
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    check(worst <= 1e-10, || format!("relative deviation {worst:e}"))?;
    let a = reduced_ode_system(&separated_machine(3, 1.0, 0.1, 1.0)).unwrap().a;
    let sv = a.singular_values();
    let cond = sv.min() / sv.max();
    check(cond < 1e-12, || format!("σmin/σmax = {cond:e} at p = 1"))?;
    Ok(format!("relative deviation {worst:.1e}; σmin/σmax = {cond:.1e} at p = 1"))
}

fn tls_closed_form() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let cfg = random_config(&mut rng, 2);
        let r = thermo_report(&cfg, &DensityMatrix::basis_state(2, 0)).unwrap();
        let closed = tls_reference_power(&cfg).unwrap();
        let numeric = -(r.j_cold + r.j_hot);
        worst = worst.max((closed - numeric).abs() / closed.abs().max(numeric.abs()));
    }
    check(worst <= 1e-9, || format!("relative deviation {worst:e}"))?;
    Ok(format!("20 configs, relative deviation {worst:.1e}"))
}

fn fig3_regimes() -> Outcome {
    let table = figure_dataset(Figure::Fig3, &separated_machine(3, 1.0, 0.1, 1.0)).map_err(|e| e.to_string())?;
    let targets = table.numbers("beta_eff_omega0").unwrap();
    let ratios = table.numbers("W_ratio").unwrap();
    let max_ratios = table.numbers("W_max_ratio").unwrap();
    let mut notes = Vec::new();
    for ((t, r), m) in targets.iter().zip(&ratios).zip(&max_ratios) {
        let (want, tol) = if *t < 1.0 { (1.5, 1e-2) } else { (1.0, 1e-3) };
        check((r - want).abs() <= tol, || format!("β_eff ω₀ = {t}: ratio {r}"))?;
        check((m - want).abs() <= tol, || format!("β_eff ω₀ = {t}: maximized ratio {m}"))?;
        notes.push(format!("{t}: {r:.6} (max {m:.6})"));
    }
    Ok(notes.join(", "))
}

fn fig2b_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = separated_machine(3, 1.0, 0.1, 1.0);
    let temps = fig2b_temperatures();
    let table = fig2b(&cfg, &temps).map_err(|e| e.to_string())?;
    let tls = table.numbers("W_max_tls").unwrap();
    let mis = table.numbers("W_max_misaligned").unwrap();
    let ali = table.numbers("W_max_aligned").unwrap();
    for k in 0..temps.len() {
        check(tls[k] > 0.0, || format!("T_h = {}: no engine", temps[k]))?;
        check(tls[k] <= mis[k] && mis[k] <= ali[k], || {
            format!("T_h = {}: {} / {} / {}", temps[k], tls[k], mis[k], ali[k])
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{} temperatures ordered, {secs:.2} s", temps.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence (3x3x3 grid, 1e-8, < 10 s)", oracle_equivalence),
        ("aligned closed form and dark conservation", aligned_closed_form),
        ("misaligned enhancement ratio and limits", enhancement_misaligned),
        ("aligned enhancement, dark start, threshold crossover", enhancement_aligned),
        ("N-level enhancement (N = 4, 5) and bound", nlevel),
        ("thermodynamic laws on 200 random configs", thermodynamic_laws),
        ("reduced-ODE determinant and p = 1 singularity", determinant),
        ("two-level closed-form power", tls_closed_form),
        ("high/low temperature power ratios", fig3_regimes),
        ("maximum-power ordering TLS <= misaligned <= aligned (< 60 s)", fig2b_ordering),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", 10 - failed, 10);
    if failed > 0 {
        std::process::exit(1);
    }
}
