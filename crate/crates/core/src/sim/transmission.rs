//! Synthetic downstream field: the incident wave filtered component by
//! component, delayed, plus a small radiated contribution from the body
//! motion and optional measurement noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::waves::WaveComponent;
use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionModel {
    /// Per-component amplitude factor in (0, 1].
    pub kt: Vec<f64>,
    /// Coupling of `[V_x, V_z, Ω]` into downstream elevation.
    pub radiation_gains: [f64; 3],
    /// Per downstream gauge, s.
    pub delays: Vec<f64>,
    /// m
    pub noise_std: f64,
}

/// `kt(ω) = kt_min + (1 − kt_min) / (1 + (ω/ω_c)⁴)`: long waves pass, short waves are blocked.
pub fn low_pass_kt(omega: f64, kt_min: f64, omega_c: f64) -> f64 {
    kt_min + (1.0 - kt_min) / (1.0 + (omega / omega_c).powi(4))
}

impl TransmissionModel {
    pub fn low_pass(
        comps: &[WaveComponent],
        kt_min: f64,
        omega_c: f64,
        radiation_gains: [f64; 3],
        delays: Vec<f64>,
        noise_std: f64,
    ) -> Result<Self, SimError> {
        if !(kt_min > 0.0 && kt_min <= 1.0 && omega_c > 0.0) {
            return Err(SimError::Config(format!(
                "transmission needs kt_min in (0, 1] and a positive cutoff, got {kt_min}, {omega_c}"
            )));
        }
        let tm = TransmissionModel {
            kt: comps.iter().map(|c| low_pass_kt(c.omega, kt_min, omega_c)).collect(),
            radiation_gains,
            delays,
            noise_std,
        };
        tm.validate(comps.len())?;
        Ok(tm)
    }

    pub fn validate(&self, n_components: usize) -> Result<(), SimError> {
        if self.kt.len() != n_components {
            return Err(SimError::Config(format!(
                "{} transmission coefficients for {n_components} components",
                self.kt.len()
            )));
        }
        if self.kt.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
            return Err(SimError::Config("transmission coefficients must lie in (0, 1]".into()));
        }
        if self.delays.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(SimError::Config("gauge delays must be finite and >= 0".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(SimError::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        if self.radiation_gains.iter().any(|g| !g.is_finite()) {
            return Err(SimError::Config("radiation gains must be finite".into()));
        }
        Ok(())
    }
}

/// Body velocities `[V_x, V_z, Ω]` sampled on a uniform grid from `t = 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotionHistory {
    pub dt: f64,
    pub vel: Vec<[f64; 3]>,
}

impl MotionHistory {
    pub fn new(dt: f64) -> Self {
        MotionHistory { dt, vel: Vec::new() }
    }

    pub fn push(&mut self, v: [f64; 3]) {
        self.vel.push(v);
    }

    /// Linear interpolation; the body is at rest before `t = 0` and holds its
    /// last sample afterwards.
    pub fn at(&self, t: f64) -> [f64; 3] {
        if t <= 0.0 || self.vel.is_empty() {
            return if t == 0.0 && !self.vel.is_empty() { self.vel[0] } else { [0.0; 3] };
        }
        let s = t / self.dt;
        let i = s.floor() as usize;
        if i + 1 >= self.vel.len() {
            return *self.vel.last().expect("non-empty");
        }
        let f = s - i as f64;
        let (a, b) = (self.vel[i], self.vel[i + 1]);
        [
            a[0] + f * (b[0] - a[0]),
            a[1] + f * (b[1] - a[1]),
            a[2] + f * (b[2] - a[2]),
        ]
    }
}

/// Elevation at downstream gauge `gauge` located at `x`.
pub fn downstream_elevation<R: Rng + ?Sized>(
    comps: &[WaveComponent],
    history: &MotionHistory,
    tm: &TransmissionModel,
    gauge: usize,
    x: f64,
    t: f64,
    rng: &mut R,
) -> f64 {
    let delay = tm.delays.get(gauge).copied().unwrap_or(0.0);
    let td = t - delay;
    let mut eta: f64 = comps
        .iter()
        .zip(&tm.kt)
        .map(|(c, kt)| kt * c.amplitude * (c.k * x - c.omega * td + c.phase).cos())
        .sum();
    let v = history.at(td);
    eta += (0..3).map(|j| tm.radiation_gains[j] * v[j]).sum::<f64>();
    if tm.noise_std > 0.0 {
        eta += Normal::new(0.0, tm.noise_std).expect("valid std").sample(rng);
    }
    eta
}
