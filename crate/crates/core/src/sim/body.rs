//! Rectangular floating box with surge, heave and pitch.
//!
//! Displacements are measured from the rest position. Pitch is positive
//! from +x towards +z, so a point at body offset `r` moves with
//! `u = V + Ω·(−r_z, r_x)` and a force `F` at `r` has moment `r_x·F_z − r_z·F_x`.

use std::f64::consts::PI;

use super::mooring::Vec2;
use super::rk2::Rk2;
use super::waves::WaveComponent;
use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct FloatBody {
    /// m
    pub width: f64,
    /// m
    pub height: f64,
    /// Draft over body height, equal to the body-to-water density ratio.
    pub rw: f64,
    pub rho_w: f64,
    pub gravity: f64,
    /// `[surge, heave, pitch]` relative to rest (m, m, rad).
    pub pos: [f64; 3],
    /// `[V_x, V_z, Ω]`
    pub vel: [f64; 3],
}

impl FloatBody {
    pub fn new(width: f64, height: f64, rw: f64, rho_w: f64, gravity: f64) -> Result<Self, SimError> {
        let body = FloatBody {
            width,
            height,
            rw,
            rho_w,
            gravity,
            pos: [0.0; 3],
            vel: [0.0; 3],
        };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.width > 0.0 && self.height > 0.0 && self.rho_w > 0.0 && self.gravity >= 0.0) {
            return Err(SimError::Config(format!(
                "body needs positive width, height and water density: {self:?}"
            )));
        }
        if !(self.rw > 0.0 && self.rw < 1.0) {
            return Err(SimError::Config(format!("rw must be in (0, 1), got {}", self.rw)));
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        self.rw * self.rho_w
    }

    pub fn draft(&self) -> f64 {
        self.rw * self.height
    }

    /// Per metre of flume width.
    pub fn mass(&self) -> f64 {
        self.density() * self.width * self.height
    }

    pub fn inertia(&self) -> f64 {
        self.mass() * (self.width.powi(2) + self.height.powi(2)) / 12.0
    }

    /// Rest position of the centre of mass `R_0` (x, z).
    pub fn center(&self) -> Vec2 {
        [0.0, self.height / 2.0 - self.draft()]
    }

    /// Offsets of the two bottom corners from the centre of mass, seaward first.
    pub fn fairlead_offsets(&self) -> [Vec2; 2] {
        [
            [-self.width / 2.0, -self.height / 2.0],
            [self.width / 2.0, -self.height / 2.0],
        ]
    }

    fn rotated(&self, offset: Vec2) -> Vec2 {
        let (s, c) = self.pos[2].sin_cos();
        [c * offset[0] - s * offset[1], s * offset[0] + c * offset[1]]
    }

    /// World position and velocity of a body-fixed point.
    pub fn point_kinematics(&self, offset: Vec2) -> (Vec2, Vec2) {
        let r = self.rotated(offset);
        let c = self.center();
        let om = self.vel[2];
        (
            [c[0] + self.pos[0] + r[0], c[1] + self.pos[1] + r[1]],
            [self.vel[0] - om * r[1], self.vel[1] + om * r[0]],
        )
    }

    /// Generalized force `[F_x, F_z, M]` of a force applied at a body-fixed point.
    pub fn generalized_force(&self, offset: Vec2, force: Vec2) -> [f64; 3] {
        let r = self.rotated(offset);
        [force[0], force[1], r[0] * force[1] - r[1] * force[0]]
    }

    pub fn is_finite(&self) -> bool {
        self.pos.iter().chain(&self.vel).all(|v| v.is_finite())
    }
}

/// Linear hydrodynamic coefficients per degree of freedom `[surge, heave, pitch]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroCoefficients {
    pub added_mass: [f64; 3],
    pub damping: [f64; 3],
    pub restoring: [f64; 3],
}

/// Default damping ratios `[surge, heave, pitch]`. Surge uses the heave
/// natural frequency as its reference since it has no hydrostatic stiffness.
pub const DEFAULT_DAMPING_RATIOS: [f64; 3] = [0.2, 0.1, 0.1];

impl HydroCoefficients {
    /// Hydrostatic stiffness of the box plus strip-theory style added mass
    /// (half-cylinder in heave, flat plates in surge and pitch) and damping
    /// set as fractions of critical.
    pub fn for_box(body: &FloatBody, damping_ratios: [f64; 3]) -> Result<Self, SimError> {
        let rho = body.rho_w;
        let g = body.gravity;
        let (w, d) = (body.width, body.draft());
        let added_mass = [
            rho * PI * d * d / 2.0,
            rho * PI * w * w / 8.0,
            rho * PI * (w / 2.0).powi(4) / 8.0,
        ];
        let volume = w * d;
        let z_b = -d / 2.0;
        let z_g = body.center()[1];
        let k55 = rho * g * (w.powi(3) / 12.0 + volume * (z_b - z_g));
        if k55 <= 0.0 {
            return Err(SimError::Config(format!(
                "body is unstable in pitch (restoring {k55} N·m/rad)"
            )));
        }
        let restoring = [0.0, rho * g * w, k55];
        let inertia = [body.mass(), body.mass(), body.inertia()];
        let m_heave = inertia[1] + added_mass[1];
        let omega_heave = (restoring[1] / m_heave).sqrt();
        let damping = [
            2.0 * damping_ratios[0] * (inertia[0] + added_mass[0]) * omega_heave,
            2.0 * damping_ratios[1] * (restoring[1] * m_heave).sqrt(),
            2.0 * damping_ratios[2] * (restoring[2] * (inertia[2] + added_mass[2])).sqrt(),
        ];
        Ok(HydroCoefficients {
            added_mass,
            damping,
            restoring,
        })
    }

    pub fn natural_frequency(&self, body: &FloatBody, dof: usize) -> f64 {
        let m = [body.mass(), body.mass(), body.inertia()][dof] + self.added_mass[dof];
        (self.restoring[dof] / m).sqrt()
    }
}

/// Linear wave excitation `F_j(t) = Σ_i A_ij·cos β_i + B_ij·sin β_i`, `β_i = φ_i − ω_i·t`.
///
/// Gains come from integrating the undisturbed linear pressure over the
/// wetted hull at rest: side walls give surge, the bottom gives heave, and
/// both contribute to pitch about the centre of mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    pub omega: Vec<f64>,
    pub phase: Vec<f64>,
    pub cos_gain: Vec<[f64; 3]>,
    pub sin_gain: Vec<[f64; 3]>,
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl Excitation {
    pub fn new(body: &FloatBody, comps: &[WaveComponent], depth: f64) -> Self {
        let rho_g = body.rho_w * body.gravity;
        let c = body.width / 2.0;
        let d = body.draft();
        let z_g = body.center()[1];
        let mut cos_gain = Vec::with_capacity(comps.len());
        let mut sin_gain = Vec::with_capacity(comps.len());
        for comp in comps {
            let k = comp.k;
            // cosh(k(z+h))/cosh(kh) without overflow.
            let decay = |z: f64| ((k * z).exp() + (-k * (z + 2.0 * depth)).exp()) / (1.0 + (-2.0 * k * depth).exp());
            let amp = rho_g * comp.amplitude;
            let j0 = simpson(-d, 0.0, 64, decay);
            let j1 = simpson(-d, 0.0, 64, |z| (z - z_g) * decay(z));
            let (skc, ckc) = (k * c).sin_cos();
            let bottom = decay(-d);
            let heave = if k * c > 1e-8 { 2.0 * skc / k } else { 2.0 * c };
            let x_sin = if k * c > 1e-4 {
                2.0 * (skc / (k * k) - c * ckc / k)
            } else {
                2.0 * k * c.powi(3) / 3.0
            };
            cos_gain.push([0.0, amp * bottom * heave, 0.0]);
            sin_gain.push([
                amp * j0 * 2.0 * skc,
                0.0,
                -amp * bottom * x_sin - 2.0 * amp * j1 * skc,
            ]);
        }
        Excitation {
            omega: comps.iter().map(|c| c.omega).collect(),
            phase: comps.iter().map(|c| c.phase).collect(),
            cos_gain,
            sin_gain,
        }
    }

    pub fn force(&self, t: f64) -> [f64; 3] {
        let mut f = [0.0; 3];
        for i in 0..self.omega.len() {
            let (sb, cb) = (self.phase[i] - self.omega[i] * t).sin_cos();
            for (j, fj) in f.iter_mut().enumerate() {
                *fj += self.cos_gain[i][j] * cb + self.sin_gain[i][j] * sb;
            }
        }
        f
    }
}

/// Mechanical energy about rest: kinetic (with added mass) plus hydrostatic.
pub fn body_energy(body: &FloatBody, hydro: &HydroCoefficients) -> f64 {
    let m = [body.mass(), body.mass(), body.inertia()];
    (0..3)
        .map(|j| {
            0.5 * (m[j] + hydro.added_mass[j]) * body.vel[j].powi(2) + 0.5 * hydro.restoring[j] * body.pos[j].powi(2)
        })
        .sum()
}

/// Integrates the body over one step with RK2.
///
/// `(M + A)·q̈ = F(t) − B·q̇ − K·q` per degree of freedom, where `F` is the
/// external generalized force (waves plus moorings).
#[derive(Debug, Clone)]
pub struct BodyIntegrator {
    rk: Rk2,
    y: [f64; 6],
}

impl Default for BodyIntegrator {
    fn default() -> Self {
        BodyIntegrator {
            rk: Rk2::new(6),
            y: [0.0; 6],
        }
    }
}

impl BodyIntegrator {
    pub fn step(
        &mut self,
        body: &mut FloatBody,
        hydro: &HydroCoefficients,
        t: f64,
        dt: f64,
        external: impl Fn(f64) -> [f64; 3],
    ) -> Result<(), SimError> {
        let inertia = [
            body.mass() + hydro.added_mass[0],
            body.mass() + hydro.added_mass[1],
            body.inertia() + hydro.added_mass[2],
        ];
        self.y[..3].copy_from_slice(&body.pos);
        self.y[3..].copy_from_slice(&body.vel);
        self.rk.step::<SimError>(t, dt, &mut self.y, |tt, y, dy| {
            let f = external(tt);
            for j in 0..3 {
                dy[j] = y[3 + j];
                dy[3 + j] = (f[j] - hydro.damping[j] * y[3 + j] - hydro.restoring[j] * y[j]) / inertia[j];
            }
            Ok(())
        })?;
        body.pos.copy_from_slice(&self.y[..3]);
        body.vel.copy_from_slice(&self.y[3..]);
        if !body.is_finite() {
            return Err(SimError::Unstable {
                what: "floating body".into(),
                node: 0,
                t: t + dt,
                dt,
            });
        }
        Ok(())
    }
}

/// One body step; see [`BodyIntegrator::step`].
pub fn body_step(
    body: &FloatBody,
    hydro: &HydroCoefficients,
    t: f64,
    dt: f64,
    external: impl Fn(f64) -> [f64; 3],
) -> Result<FloatBody, SimError> {
    let mut next = body.clone();
    BodyIntegrator::default().step(&mut next, hydro, t, dt, external)?;
    Ok(next)
}
