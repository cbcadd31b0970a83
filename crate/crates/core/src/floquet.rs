//! Harmonic weights P(q) of the periodic level modulation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Modulation, ModulationSpec};

pub const MAX_ORDER: i32 = 50;
pub const MAX_ARGUMENT: f64 = 20.0;
/// Truncation keeps the smallest order whose cumulative weight exceeds
/// 1 − WEIGHT_TAIL.
pub const WEIGHT_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    entries: BTreeMap<i32, f64>,
    q_max: u32,
}

impl WeightTable {
    pub fn q_max(&self) -> u32 {
        self.q_max
    }

    pub fn get(&self, q: i32) -> f64 {
        self.entries.get(&q).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.entries.iter().map(|(&q, &p)| (q, p))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Bessel function of the first kind J_q(x) for |q| ≤ 50 and 0 ≤ x ≤ 20.
pub fn bessel_jq(q: i32, x: f64) -> Result<f64> {
    if q.abs() > MAX_ORDER || !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(Error::OutOfRange(format!(
            "bessel_jq supports |q| <= {MAX_ORDER}, 0 <= x <= {MAX_ARGUMENT}; got q={q}, x={x}"
        )));
    }
    let n = q.unsigned_abs() as usize;
    let value = if x == 0.0 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    } else if x <= 2.0 {
        bessel_series(n, x)
    } else {
        bessel_miller(n, x)
    };
    Ok(if q < 0 && n % 2 == 1 { -value } else { value })
}

fn bessel_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 0usize;
    while term != 0.0 {
        k += 1;
        term *= -half * half / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Downward recurrence normalized by J_0 + 2 Σ J_{2k} = 1.
fn bessel_miller(n: usize, x: f64) -> f64 {
    let start = n.max(x.ceil() as usize) + 60;
    let m = start + start % 2;
    let two_over_x = 2.0 / x;
    let (mut above, mut current) = (0.0f64, 1.0f64);
    let mut even_sum = 0.0;
    let mut target = 0.0;
    for j in (1..=m).rev() {
        let below = j as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > 1e10 {
            current *= 1e-10;
            above *= 1e-10;
            target *= 1e-10;
            even_sum *= 1e-10;
        }
        // `current` now holds the unnormalized J_{j-1}.
        if (j - 1) % 2 == 0 && j > 1 {
            even_sum += current;
        }
        if j - 1 == n {
            target = current;
        }
    }
    let norm = 2.0 * even_sum + current;
    target / norm
}

/// P(q) for the configured modulation, truncated and renormalized.
pub fn modulation_weights(spec: &ModulationSpec) -> Result<WeightTable> {
    if spec.q_max as i32 > MAX_ORDER {
        return Err(Error::InvalidWeights(format!("q_max {} exceeds {MAX_ORDER}", spec.q_max)));
    }
    match &spec.mode {
        Modulation::Sinusoidal { lambda } => sinusoidal_weights(*lambda, spec.q_max),
        Modulation::Custom { weights } => custom_weights(weights, spec.q_max),
    }
}

fn sinusoidal_weights(lambda: f64, cap: u32) -> Result<WeightTable> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidWeights(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut raw = Vec::with_capacity(cap as usize + 1);
    let mut cumulative = 0.0;
    let mut order = cap;
    for q in 0..=cap {
        let j = bessel_jq(q as i32, lambda)?;
        let p = j * j;
        raw.push(p);
        cumulative += if q == 0 { p } else { 2.0 * p };
        if cumulative > 1.0 - WEIGHT_TAIL {
            order = q;
            break;
        }
    }
    let mut entries = BTreeMap::new();
    for q in 0..=order as i32 {
        let p = raw[q as usize];
        entries.insert(q, p);
        if q > 0 {
            entries.insert(-q, p);
        }
    }
    let total: f64 = entries.values().sum();
    entries.values_mut().for_each(|p| *p /= total);
    Ok(WeightTable { entries, q_max: order })
}

fn custom_weights(weights: &BTreeMap<i32, f64>, cap: u32) -> Result<WeightTable> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("custom weights are empty".into()));
    }
    if let Some((q, p)) = weights.iter().find(|(_, &p)| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidWeights(format!("P({q}) = {p} is negative or non-finite")));
    }
    let order = weights.keys().map(|q| q.unsigned_abs()).max().unwrap_or(0);
    if order > cap {
        return Err(Error::InvalidWeights(format!("harmonic order {order} exceeds q_max {cap}")));
    }
    let total: f64 = weights.values().sum();
    if (total - 1.0).abs() > WEIGHT_TAIL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    Ok(WeightTable { entries: weights.clone(), q_max: order })
}
