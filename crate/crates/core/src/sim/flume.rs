//! Co-simulation of the moored box and assembly of the gauge record.
//!
//! Per body step the mooring forces are frozen, the body advances, then each
//! line substeps with its fairlead interpolated between the old and new body
//! states and the fairlead forces are refreshed.

use super::body::{BodyIntegrator, Excitation, FloatBody, HydroCoefficients, DEFAULT_DAMPING_RATIOS};
use super::mooring::{MooringLine, MooringLineSpec, MooringState, Vec2, DEFAULT_AXIAL_DAMPING_RATIO, DEFAULT_LINE_DENSITY};
use super::transmission::{downstream_elevation, MotionHistory, TransmissionModel};
use super::waves::{surface_elevation, synthesize_components, WaveComponent, WaveCondition, GRAVITY};
use super::SimError;
use crate::data::{Dataset, CHANNELS};
use crate::rng::rng_for;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct BodySettings {
    pub width: f64,
    pub height: f64,
    /// Draft over height.
    pub rw: f64,
    pub rho_w: f64,
    pub gravity: f64,
    pub damping_ratios: [f64; 3],
}

impl Default for BodySettings {
    fn default() -> Self {
        BodySettings {
            width: 0.5,
            height: 0.2,
            rw: 0.5,
            rho_w: 1000.0,
            gravity: GRAVITY,
            damping_ratios: DEFAULT_DAMPING_RATIOS,
        }
    }
}

/// Line parameters; `None` entries are derived when the spec is built.
#[derive(Debug, Clone, PartialEq)]
pub struct MooringSettings {
    pub length: f64,
    pub mass_per_len: f64,
    /// Derived from `line_density` when unset.
    pub diameter: Option<f64>,
    pub line_density: f64,
    pub elastic_modulus: f64,
    /// Derived from `axial_damping_ratio` when unset.
    pub c_int: Option<f64>,
    pub axial_damping_ratio: f64,
    pub c_dt: f64,
    pub c_dn: f64,
    pub c_at: f64,
    pub c_an: f64,
    pub k_b: f64,
    pub c_b: f64,
    pub n_segments: usize,
    /// Horizontal distance from each fairlead to its anchor, m.
    pub anchor_offset: f64,
}

impl Default for MooringSettings {
    fn default() -> Self {
        let d = MooringLineSpec::default();
        MooringSettings {
            length: d.length,
            mass_per_len: d.mass_per_len,
            diameter: None,
            line_density: DEFAULT_LINE_DENSITY,
            elastic_modulus: d.elastic_modulus,
            c_int: None,
            axial_damping_ratio: DEFAULT_AXIAL_DAMPING_RATIO,
            c_dt: d.c_dt,
            c_dn: d.c_dn,
            c_at: d.c_at,
            c_an: d.c_an,
            k_b: d.k_b,
            c_b: d.c_b,
            n_segments: d.n_segments,
            anchor_offset: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSettings {
    pub kt_min: f64,
    /// Cutoff angular frequency of the low-pass transmission, rad/s.
    pub omega_c: f64,
    pub radiation_gains: [f64; 3],
    /// One per downstream gauge.
    pub delays: [f64; 4],
    pub noise_std: f64,
}

impl Default for TransmissionSettings {
    fn default() -> Self {
        TransmissionSettings {
            kt_min: 0.1,
            omega_c: 2.0 * std::f64::consts::PI / 1.8,
            radiation_gains: [0.02; 3],
            delays: [0.0; 4],
            noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub duration: f64,
    /// Output sampling interval.
    pub dt: f64,
    /// Body integration step; must divide `dt`.
    pub dt_body: f64,
    /// Time the lines relax with fixed fairleads before the run starts.
    pub settle_time: f64,
    /// Wave forcing ramps in linearly over this time.
    pub ramp_time: f64,
    /// Bound on `ω_max·dt_sub` for the mooring substeps.
    pub cfl: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            duration: 500.0,
            dt: 0.05,
            dt_body: 1e-3,
            settle_time: 5.0,
            ramp_time: 5.0,
            cfl: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlumeConfig {
    pub wave: WaveCondition,
    pub body: BodySettings,
    pub mooring: MooringSettings,
    pub transmission: TransmissionSettings,
    /// Gauge x positions, m; the body sits at x = 0.
    pub upstream_x: [f64; 5],
    pub downstream_x: [f64; 4],
    pub sim: SimSettings,
}

impl Default for FlumeConfig {
    fn default() -> Self {
        FlumeConfig {
            wave: WaveCondition::default(),
            body: BodySettings::default(),
            mooring: MooringSettings::default(),
            transmission: TransmissionSettings::default(),
            upstream_x: [-6.0, -5.0, -4.0, -3.0, -2.0],
            downstream_x: [2.0, 3.0, 4.0, 5.0],
            sim: SimSettings::default(),
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_f64(key: &str, value: &str) -> Result<f64, SimError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| SimError::Config(format!("{key}: cannot parse '{value}' as a number")))
}

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[f64; N], SimError> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != N {
        return Err(SimError::Config(format!("{key}: expected {N} comma-separated values, got {}", parts.len())));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_f64(key, p)?;
    }
    Ok(out)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, SimError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| SimError::Config(format!("{key}: cannot parse '{value}' as a count")))
}

impl FlumeConfig {
    /// Every parameter as `key=value` pairs, with derived values resolved.
    pub fn entries(&self) -> Vec<(String, String)> {
        let spec = self.line_spec();
        let (w, b, m, t, s) = (&self.wave, &self.body, &self.mooring, &self.transmission, &self.sim);
        let (c_int, diameter) = match &spec {
            Ok(sp) => (sp.c_int.to_string(), sp.diameter.to_string()),
            Err(_) => ("invalid".into(), "invalid".into()),
        };
        let kv = |k: &str, v: String| (k.to_string(), v);
        vec![
            kv("wave.hs", w.hs.to_string()),
            kv("wave.tp", w.tp.to_string()),
            kv("wave.depth", w.depth.to_string()),
            kv("wave.gamma", w.gamma.to_string()),
            kv("wave.n_components", w.n_components.to_string()),
            kv("body.width", b.width.to_string()),
            kv("body.height", b.height.to_string()),
            kv("body.rw", b.rw.to_string()),
            kv("body.rho_w", b.rho_w.to_string()),
            kv("body.gravity", b.gravity.to_string()),
            kv("body.damping_ratios", fmt_list(&b.damping_ratios)),
            kv("mooring.length", m.length.to_string()),
            kv("mooring.mass_per_len", m.mass_per_len.to_string()),
            kv("mooring.diameter", diameter),
            kv("mooring.line_density", m.line_density.to_string()),
            kv("mooring.elastic_modulus", m.elastic_modulus.to_string()),
            kv("mooring.c_int", c_int),
            kv("mooring.axial_damping_ratio", m.axial_damping_ratio.to_string()),
            kv("mooring.c_dt", m.c_dt.to_string()),
            kv("mooring.c_dn", m.c_dn.to_string()),
            kv("mooring.c_at", m.c_at.to_string()),
            kv("mooring.c_an", m.c_an.to_string()),
            kv("mooring.k_b", m.k_b.to_string()),
            kv("mooring.c_b", m.c_b.to_string()),
            kv("mooring.n_segments", m.n_segments.to_string()),
            kv("mooring.anchor_offset", m.anchor_offset.to_string()),
            kv("transmission.kt_min", t.kt_min.to_string()),
            kv("transmission.omega_c", t.omega_c.to_string()),
            kv("transmission.radiation_gains", fmt_list(&t.radiation_gains)),
            kv("transmission.delays", fmt_list(&t.delays)),
            kv("transmission.noise_std", t.noise_std.to_string()),
            kv("sim.upstream_x", fmt_list(&self.upstream_x)),
            kv("sim.downstream_x", fmt_list(&self.downstream_x)),
            kv("sim.duration", s.duration.to_string()),
            kv("sim.dt", s.dt.to_string()),
            kv("sim.dt_body", s.dt_body.to_string()),
            kv("sim.settle_time", s.settle_time.to_string()),
            kv("sim.ramp_time", s.ramp_time.to_string()),
            kv("sim.cfl", s.cfl.to_string()),
        ]
    }

    /// Sets one `section.name` key. Returns `Ok(false)` for keys outside the
    /// simulation sections so callers can try other sections.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, SimError> {
        let f = || parse_f64(key, value);
        match key {
            "wave.hs" => self.wave.hs = f()?,
            "wave.tp" => self.wave.tp = f()?,
            "wave.depth" => self.wave.depth = f()?,
            "wave.gamma" => self.wave.gamma = f()?,
            "wave.n_components" => self.wave.n_components = parse_usize(key, value)?,
            "body.width" => self.body.width = f()?,
            "body.height" => self.body.height = f()?,
            "body.rw" => self.body.rw = f()?,
            "body.rho_w" => self.body.rho_w = f()?,
            "body.gravity" => self.body.gravity = f()?,
            "body.damping_ratios" => self.body.damping_ratios = parse_list(key, value)?,
            "mooring.length" => self.mooring.length = f()?,
            "mooring.mass_per_len" => self.mooring.mass_per_len = f()?,
            "mooring.diameter" => self.mooring.diameter = Some(f()?),
            "mooring.line_density" => self.mooring.line_density = f()?,
            "mooring.elastic_modulus" => self.mooring.elastic_modulus = f()?,
            "mooring.c_int" => self.mooring.c_int = Some(f()?),
            "mooring.axial_damping_ratio" => self.mooring.axial_damping_ratio = f()?,
            "mooring.c_dt" => self.mooring.c_dt = f()?,
            "mooring.c_dn" => self.mooring.c_dn = f()?,
            "mooring.c_at" => self.mooring.c_at = f()?,
            "mooring.c_an" => self.mooring.c_an = f()?,
            "mooring.k_b" => self.mooring.k_b = f()?,
            "mooring.c_b" => self.mooring.c_b = f()?,
            "mooring.n_segments" => self.mooring.n_segments = parse_usize(key, value)?,
            "mooring.anchor_offset" => self.mooring.anchor_offset = f()?,
            "transmission.kt_min" => self.transmission.kt_min = f()?,
            "transmission.omega_c" => self.transmission.omega_c = f()?,
            "transmission.radiation_gains" => self.transmission.radiation_gains = parse_list(key, value)?,
            "transmission.delays" => self.transmission.delays = parse_list(key, value)?,
            "transmission.noise_std" => self.transmission.noise_std = f()?,
            "sim.upstream_x" => self.upstream_x = parse_list(key, value)?,
            "sim.downstream_x" => self.downstream_x = parse_list(key, value)?,
            "sim.duration" => self.sim.duration = f()?,
            "sim.dt" => self.sim.dt = f()?,
            "sim.dt_body" => self.sim.dt_body = f()?,
            "sim.settle_time" => self.sim.settle_time = f()?,
            "sim.ramp_time" => self.sim.ramp_time = f()?,
            "sim.cfl" => self.sim.cfl = f()?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Line spec with diameter and internal damping resolved; the seabed sits at the flume floor.
    pub fn line_spec(&self) -> Result<MooringLineSpec, SimError> {
        let m = &self.mooring;
        if !(m.line_density > 0.0) {
            return Err(SimError::Config(format!("mooring.line_density must be > 0, got {}", m.line_density)));
        }
        let mut spec = MooringLineSpec {
            length: m.length,
            mass_per_len: m.mass_per_len,
            diameter: m
                .diameter
                .unwrap_or_else(|| (4.0 * m.mass_per_len / (std::f64::consts::PI * m.line_density)).sqrt()),
            elastic_modulus: m.elastic_modulus,
            c_int: 0.0,
            c_dt: m.c_dt,
            c_dn: m.c_dn,
            c_at: m.c_at,
            c_an: m.c_an,
            k_b: m.k_b,
            c_b: m.c_b,
            z_bot: -self.wave.depth,
            n_segments: m.n_segments,
            rho_w: self.body.rho_w,
            gravity: self.body.gravity,
        };
        spec.c_int = m.c_int.unwrap_or_else(|| spec.internal_damping_for_ratio(m.axial_damping_ratio));
        spec.validate()?;
        Ok(spec)
    }

    /// Number of output intervals and body steps per interval.
    pub fn step_counts(&self) -> Result<(usize, usize), SimError> {
        let s = &self.sim;
        if !(s.duration > 0.0 && s.dt > 0.0 && s.dt_body > 0.0 && s.cfl > 0.0) {
            return Err(SimError::Config("sim.duration, sim.dt, sim.dt_body and sim.cfl must be > 0".into()));
        }
        if !(s.settle_time >= 0.0 && s.ramp_time >= 0.0) {
            return Err(SimError::Config("sim.settle_time and sim.ramp_time must be >= 0".into()));
        }
        let integral = |ratio: f64, what: &str| {
            let n = ratio.round();
            if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
                Err(SimError::Config(format!("{what} must be a positive integer, got {ratio}")))
            } else {
                Ok(n as usize)
            }
        };
        Ok((
            integral(s.duration / s.dt, "sim.duration / sim.dt")?,
            integral(s.dt / s.dt_body, "sim.dt / sim.dt_body")?,
        ))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.wave.validate()?;
        self.step_counts()?;
        self.line_spec()?;
        if !(self.mooring.anchor_offset > 0.0) {
            return Err(SimError::Config("mooring.anchor_offset must be > 0".into()));
        }
        if self.body.damping_ratios.iter().any(|z| !(*z >= 0.0)) {
            return Err(SimError::Config("body.damping_ratios must be >= 0".into()));
        }
        let body = self.float_body()?;
        if body.draft() >= self.wave.depth {
            return Err(SimError::Config("the body draft must be smaller than the water depth".into()));
        }
        Ok(())
    }

    pub fn float_body(&self) -> Result<FloatBody, SimError> {
        let b = &self.body;
        FloatBody::new(b.width, b.height, b.rw, b.rho_w, b.gravity)
    }

    /// Metadata file text: one `key=value` per line, including the seed.
    pub fn metadata(&self) -> String {
        let mut out = format!("seed={}\n", self.wave.seed);
        for (k, v) in self.entries() {
            out.push_str(&k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out.push_str("channels=time,");
        out.push_str(&CHANNELS.join(","));
        out.push('\n');
        out.push_str("synthetic=true\n");
        out
    }
}

/// The assembled flume: body, two lines and the forcing, ready to step.
#[derive(Debug, Clone)]
pub struct Flume {
    pub body: FloatBody,
    pub hydro: HydroCoefficients,
    pub lines: Vec<MooringLine>,
    pub components: Vec<WaveComponent>,
    excitation: Excitation,
    offsets: [Vec2; 2],
    /// Fairlead forces after settling, subtracted so the rest state is an equilibrium.
    static_force: [Vec2; 2],
    fairlead_force: [Vec2; 2],
    integrator: BodyIntegrator,
    substeps: usize,
    ramp_time: f64,
}

impl Flume {
    /// Builds the flume and lets the lines settle with the fairleads held fixed.
    pub fn new(cfg: &FlumeConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let components = synthesize_components(&cfg.wave)?;
        let body = cfg.float_body()?;
        let hydro = HydroCoefficients::for_box(&body, cfg.body.damping_ratios)?;
        let excitation = Excitation::new(&body, &components, cfg.wave.depth);
        let spec = cfg.line_spec()?;
        let offsets = body.fairlead_offsets();
        let mut lines = Vec::with_capacity(2);
        for (j, off) in offsets.iter().enumerate() {
            let fairlead = body.point_kinematics(*off).0;
            let side = if j == 0 { -1.0 } else { 1.0 };
            let anchor = [fairlead[0] + side * cfg.mooring.anchor_offset, spec.z_bot];
            let state = MooringState::catenary(&spec, anchor, fairlead)?;
            lines.push(MooringLine::new(spec.clone(), state)?);
        }
        let dt = cfg.sim.dt_body;
        let substeps = spec.substeps(dt, cfg.sim.cfl);
        let dts = dt / substeps as f64;
        let settle_steps = (cfg.sim.settle_time / dt).round() as usize * substeps;
        for line in &mut lines {
            let fl = *line.state.r.last().expect("line has nodes");
            for k in 0..settle_steps {
                line.step(-cfg.sim.settle_time + k as f64 * dts, dts, |_| (fl, [0.0; 2]))?;
            }
        }
        let mut flume = Flume {
            body,
            hydro,
            lines,
            components,
            excitation,
            offsets,
            static_force: [[0.0; 2]; 2],
            fairlead_force: [[0.0; 2]; 2],
            integrator: BodyIntegrator::default(),
            substeps,
            ramp_time: cfg.sim.ramp_time,
        };
        flume.refresh_fairlead_forces()?;
        flume.static_force = flume.fairlead_force;
        Ok(flume)
    }

    fn refresh_fairlead_forces(&mut self) -> Result<(), SimError> {
        for (f, line) in self.fairlead_force.iter_mut().zip(&self.lines) {
            *f = line.forces()?.fairlead_force();
        }
        Ok(())
    }

    /// Mooring load on the body relative to the settled state.
    pub fn mooring_load(&self) -> [f64; 3] {
        let mut g = [0.0; 3];
        for j in 0..2 {
            let df = [
                self.fairlead_force[j][0] - self.static_force[j][0],
                self.fairlead_force[j][1] - self.static_force[j][1],
            ];
            let gj = self.body.generalized_force(self.offsets[j], df);
            for d in 0..3 {
                g[d] += gj[d];
            }
        }
        g
    }

    pub fn wave_load(&self, t: f64) -> [f64; 3] {
        let ramp = if self.ramp_time > 0.0 { (t / self.ramp_time).clamp(0.0, 1.0) } else { 1.0 };
        let f = self.excitation.force(t);
        [ramp * f[0], ramp * f[1], ramp * f[2]]
    }

    /// Advances the coupled system from `t` to `t + dt`.
    pub fn step(&mut self, t: f64, dt: f64) -> Result<(), SimError> {
        let mooring = self.mooring_load();
        let old = self.body.clone();
        let (excitation, ramp_time) = (&self.excitation, self.ramp_time);
        self.integrator.step(&mut self.body, &self.hydro, t, dt, |tt| {
            let ramp = if ramp_time > 0.0 { (tt / ramp_time).clamp(0.0, 1.0) } else { 1.0 };
            let f = excitation.force(tt);
            [ramp * f[0] + mooring[0], ramp * f[1] + mooring[1], ramp * f[2] + mooring[2]]
        })?;
        let dts = dt / self.substeps as f64;
        for (j, line) in self.lines.iter_mut().enumerate() {
            let (p0, v0) = old.point_kinematics(self.offsets[j]);
            let (p1, v1) = self.body.point_kinematics(self.offsets[j]);
            let kin = |tt: f64| {
                let a = ((tt - t) / dt).clamp(0.0, 1.0);
                (
                    [p0[0] + a * (p1[0] - p0[0]), p0[1] + a * (p1[1] - p0[1])],
                    [v0[0] + a * (v1[0] - v0[0]), v0[1] + a * (v1[1] - v0[1])],
                )
            };
            for k in 0..self.substeps {
                line.step(t + k as f64 * dts, dts, kin)?;
            }
        }
        self.refresh_fairlead_forces()
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }
}

/// Runs the flume and samples the gauges and body motions every `sim.dt`.
///
/// Upstream gauges see only the incident field; downstream gauges see the
/// transmitted field plus the body's radiated contribution.
pub fn generate_dataset(cfg: &FlumeConfig) -> Result<Dataset, SimError> {
    let (n_out, per_out) = cfg.step_counts()?;
    let mut flume = Flume::new(cfg)?;
    let t_cfg = &cfg.transmission;
    let tm = TransmissionModel::low_pass(
        &flume.components,
        t_cfg.kt_min,
        t_cfg.omega_c,
        t_cfg.radiation_gains,
        t_cfg.delays.to_vec(),
        t_cfg.noise_std,
    )?;
    let mut noise = rng_for(cfg.wave.seed, "noise");
    let dt_out = cfg.sim.dt;
    let dt = cfg.sim.dt_body;
    let mut history = MotionHistory::new(dt);
    history.push(flume.body.vel);

    let mut times = Vec::with_capacity(n_out + 1);
    let mut rows = Vec::with_capacity((n_out + 1) * CHANNELS.len());
    let mut record = |flume: &Flume, history: &MotionHistory, t: f64, times: &mut Vec<f64>, rows: &mut Vec<f64>| {
        times.push(t);
        for x in cfg.upstream_x {
            rows.push(surface_elevation(&flume.components, x, t));
        }
        for (g, x) in cfg.downstream_x.iter().enumerate() {
            rows.push(downstream_elevation(&flume.components, history, &tm, g, *x, t, &mut noise));
        }
        rows.extend_from_slice(&flume.body.pos);
    };
    record(&flume, &history, 0.0, &mut times, &mut rows);
    for row in 1..=n_out {
        for k in 0..per_out {
            let step = (row - 1) * per_out + k;
            let t = step as f64 * dt;
            if let Err(e) = flume.step(t, dt) {
                let n = times.len();
                let partial = Tensor::new(vec![n, CHANNELS.len()], rows)
                    .ok()
                    .and_then(|c| Dataset::new(times.clone(), c, "partial").ok())
                    .map(Box::new);
                return Err(SimError::Partial {
                    last_stable_time: t,
                    rows: n,
                    reason: Box::new(e),
                    partial,
                });
            }
            history.push(flume.body.vel);
        }
        record(&flume, &history, row as f64 * dt_out, &mut times, &mut rows);
    }
    let channels = Tensor::new(vec![n_out + 1, CHANNELS.len()], rows).map_err(|e| SimError::Config(e.to_string()))?;
    let name = format!("hs{}_tp{}_rw{}_seed{}", cfg.wave.hs, cfg.wave.tp, cfg.body.rw, cfg.wave.seed);
    Dataset::new(times, channels, name).map_err(|e| SimError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_config(duration: f64) -> FlumeConfig {
        let mut cfg = FlumeConfig::default();
        cfg.sim.duration = duration;
        cfg.sim.settle_time = 1.0;
        cfg.wave.n_components = 40;
        cfg
    }

    #[test]
    fn row_count_and_shape() {
        let ds = generate_dataset(&short_config(2.0)).unwrap();
        assert_eq!(ds.len(), 41);
        assert_eq!(ds.channels.shape(), &[41, 12]);
        assert_eq!(ds.times[40], 2.0);
        assert!(ds.channels.is_finite());
        // The body starts at rest.
        assert_eq!(&ds.channels.row(0)[9..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn default_run_has_expected_row_count() {
        let (n, per) = FlumeConfig::default().step_counts().unwrap();
        assert_eq!((n + 1, per), (10001, 50));
    }

    #[test]
    fn non_integral_duration_is_rejected() {
        let mut cfg = short_config(2.0);
        cfg.sim.duration = 2.01;
        assert!(matches!(generate_dataset(&cfg), Err(SimError::Config(_))));
        let mut cfg = short_config(2.0);
        cfg.sim.dt_body = 0.003;
        assert!(cfg.step_counts().is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate_dataset(&short_config(1.0)).unwrap();
        let b = generate_dataset(&short_config(1.0)).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let mut cfg = short_config(1.0);
        cfg.wave.seed = 1;
        assert_ne!(generate_dataset(&cfg).unwrap().to_csv(), a.to_csv());
    }

    #[test]
    fn upstream_gauges_ignore_the_mooring() {
        let a = generate_dataset(&short_config(2.0)).unwrap();
        let mut cfg = short_config(2.0);
        cfg.mooring.length = 1.7;
        cfg.mooring.elastic_modulus = 5e8;
        cfg.mooring.n_segments = 12;
        let b = generate_dataset(&cfg).unwrap();
        for r in 0..a.len() {
            assert_eq!(&a.channels.row(r)[..5], &b.channels.row(r)[..5]);
        }
        assert_ne!(a.channels.column(9), b.channels.column(9));
    }

    #[test]
    fn settled_flume_at_rest_stays_at_rest() {
        let mut cfg = short_config(1.0);
        cfg.wave.hs = 1e-12;
        let mut flume = Flume::new(&cfg).unwrap();
        for k in 0..200 {
            flume.step(k as f64 * 1e-3, 1e-3).unwrap();
        }
        assert!(flume.body.pos.iter().all(|p| p.abs() < 1e-6), "{:?}", flume.body.pos);
    }

    #[test]
    fn config_keys_round_trip() {
        let cfg = FlumeConfig::default();
        let mut back = FlumeConfig::default();
        back.sim.duration = 1.0;
        back.mooring.n_segments = 3;
        for (k, v) in cfg.entries() {
            assert!(back.set(&k, &v).unwrap(), "{k}");
        }
        assert_eq!(back.entries(), cfg.entries());
        assert!(!back.set("model.layers", "2").unwrap());
        assert!(back.set("wave.hs", "abc").is_err());
        assert!(back.set("body.damping_ratios", "1,2").is_err());
    }

    #[test]
    fn metadata_lists_every_parameter() {
        let meta = FlumeConfig::default().metadata();
        for (k, _) in FlumeConfig::default().entries() {
            assert!(meta.contains(&format!("{k}=")), "{k}");
        }
        assert!(meta.starts_with("seed=0\n"));
    }
}
