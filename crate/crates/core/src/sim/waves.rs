use std::f64::consts::PI;

use rand::Rng;

use super::SimError;
use crate::rng::rng_for;

pub const GRAVITY: f64 = 9.81;

/// Irregular sea state.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveCondition {
    /// Significant wave height, m.
    pub hs: f64,
    /// Peak period, s.
    pub tp: f64,
    /// Water depth, m.
    pub depth: f64,
    /// JONSWAP peak enhancement; 1 gives Pierson–Moskowitz.
    pub gamma: f64,
    pub n_components: usize,
    pub seed: u64,
}

impl Default for WaveCondition {
    fn default() -> Self {
        WaveCondition {
            hs: 0.18,
            tp: 2.0,
            depth: 0.8,
            gamma: 3.3,
            n_components: 200,
            seed: 0,
        }
    }
}

impl WaveCondition {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.hs > 0.0
            && self.tp > 0.0
            && self.depth > 0.0
            && self.gamma >= 1.0
            && self.n_components > 0
            && [self.hs, self.tp, self.depth, self.gamma].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SimError::Config(format!(
                "wave condition needs hs > 0, tp > 0, depth > 0, gamma >= 1 and at least one component, got {self:?}"
            )))
        }
    }
}

/// One linear wave `a·cos(k·x − ω·t + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveComponent {
    pub amplitude: f64,
    pub omega: f64,
    pub k: f64,
    pub phase: f64,
}

/// Solves `ω² = g·k·tanh(k·h)` for `k` by bisection.
pub fn wavenumber(omega: f64, depth: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let w2 = omega * omega;
    let f = |k: f64| GRAVITY * k * (k * depth).tanh() - w2;
    let mut lo = 0.0;
    // Deep-water and shallow-water guesses both bound k from below.
    let mut hi = (w2 / GRAVITY).max(omega / (GRAVITY * depth).sqrt());
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() < f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Unnormalized JONSWAP shape in angular frequency.
pub fn jonswap_shape(omega: f64, omega_p: f64, gamma: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let sigma = if omega <= omega_p { 0.07 } else { 0.09 };
    let r = (-(omega - omega_p).powi(2) / (2.0 * sigma * sigma * omega_p * omega_p)).exp();
    omega.powi(-5) * (-1.25 * (omega_p / omega).powi(4)).exp() * gamma.powf(r)
}

/// Random-phase components over `[0.5, 3]·ω_p`.
///
/// Each bin contributes `a = sqrt(2·S·Δω)` at a jittered frequency inside
/// the bin; amplitudes are then rescaled so that `Σa²/2 = (Hs/4)²` exactly.
pub fn synthesize_components(cond: &WaveCondition) -> Result<Vec<WaveComponent>, SimError> {
    cond.validate()?;
    let mut rng = rng_for(cond.seed, "wave");
    let omega_p = 2.0 * PI / cond.tp;
    let (lo, hi) = (0.5 * omega_p, 3.0 * omega_p);
    let n = cond.n_components;
    let d_omega = (hi - lo) / n as f64;
    let mut comps: Vec<WaveComponent> = (0..n)
        .map(|i| {
            let omega = lo + (i as f64 + rng.gen_range(0.0..1.0)) * d_omega;
            let phase = rng.gen_range(0.0..2.0 * PI);
            WaveComponent {
                amplitude: (2.0 * jonswap_shape(omega, omega_p, cond.gamma) * d_omega).sqrt(),
                omega,
                k: wavenumber(omega, cond.depth),
                phase,
            }
        })
        .collect();
    let var: f64 = comps.iter().map(|c| c.amplitude * c.amplitude / 2.0).sum();
    let scale = (cond.hs / 4.0) / var.sqrt();
    for c in &mut comps {
        c.amplitude *= scale;
    }
    Ok(comps)
}

pub fn surface_elevation(comps: &[WaveComponent], x: f64, t: f64) -> f64 {
    comps
        .iter()
        .map(|c| c.amplitude * (c.k * x - c.omega * t + c.phase).cos())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_residual_and_deep_water_limit() {
        for &(omega, depth) in &[(0.3, 0.8), (3.0, 0.8), (9.0, 0.8), (2.0, 50.0), (20.0, 0.1)] {
            let k: f64 = wavenumber(omega, depth);
            let res = (omega * omega - GRAVITY * k * (k * depth).tanh()).abs();
            assert!(res < 1e-10, "omega={omega}: residual {res}");
        }
        let omega = 12.0;
        let k = wavenumber(omega, 0.8);
        let deep = omega * omega / GRAVITY;
        assert!((k - deep).abs() / deep < 1e-3);
        // Shallow limit: k ≈ ω/√(gh).
        let k = wavenumber(0.05, 0.8);
        assert!((k - 0.05 / (GRAVITY * 0.8).sqrt()).abs() / k < 1e-3);
    }

    #[test]
    fn amplitudes_carry_the_target_variance() {
        let cond = WaveCondition::default();
        let comps = synthesize_components(&cond).unwrap();
        assert_eq!(comps.len(), 200);
        let var: f64 = comps.iter().map(|c| c.amplitude.powi(2) / 2.0).sum();
        assert!((4.0 * var.sqrt() - cond.hs).abs() < 1e-12);
        let residual = comps
            .iter()
            .map(|c| (c.omega.powi(2) - GRAVITY * c.k * (c.k * cond.depth).tanh()).abs())
            .fold(0.0, f64::max);
        assert!(residual < 1e-10);
    }

    #[test]
    fn record_statistics_match_hs() {
        for seed in 0..5 {
            let cond = WaveCondition { seed, ..Default::default() };
            let comps = synthesize_components(&cond).unwrap();
            let samples: Vec<f64> = (0..10_001).map(|i| surface_elevation(&comps, 0.0, i as f64 * 0.05)).collect();
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples.len() as f64;
            let hs = 4.0 * var.sqrt();
            assert!((hs - cond.hs).abs() / cond.hs < 0.05, "seed {seed}: {hs}");
        }
    }

    #[test]
    fn seeded_and_bounded() {
        let cond = WaveCondition { seed: 4, ..Default::default() };
        assert_eq!(synthesize_components(&cond).unwrap(), synthesize_components(&cond).unwrap());
        let other = WaveCondition { seed: 5, ..Default::default() };
        assert_ne!(synthesize_components(&cond).unwrap(), synthesize_components(&other).unwrap());
        let comps = synthesize_components(&cond).unwrap();
        let bound: f64 = comps.iter().map(|c| c.amplitude.abs()).sum();
        for i in 0..500 {
            assert!(surface_elevation(&comps, 0.37 * i as f64, 0.11 * i as f64).abs() <= bound);
        }
    }

    #[test]
    fn single_component_is_periodic_and_flat_sea_is_zero() {
        let c = WaveComponent { amplitude: 0.1, omega: 2.0, k: wavenumber(2.0, 0.8), phase: 0.3 };
        let period = 2.0 * PI / c.omega;
        for i in 0..20 {
            let t = 0.13 * i as f64;
            let a = surface_elevation(&[c], 1.5, t);
            let b = surface_elevation(&[c], 1.5, t + period);
            assert!((a - b).abs() < 1e-12);
        }
        let flat = WaveComponent { amplitude: 0.0, ..c };
        assert_eq!(surface_elevation(&[flat; 3], 2.0, 7.0), 0.0);
    }

    #[test]
    fn invalid_conditions_are_rejected() {
        assert!(synthesize_components(&WaveCondition { hs: 0.0, ..Default::default() }).is_err());
        assert!(synthesize_components(&WaveCondition { gamma: 0.5, ..Default::default() }).is_err());
    }
}
