//! Lumped-mass mooring line in the vertical x–z plane.
//!
//! Node 0 is the anchor (pinned), node `n` the fairlead (prescribed by the
//! body). Segment `i+½` joins nodes `i` and `i+1`. Interior nodes obey
//! `(m_i·I + a_i)·r̈_i = T_{i+½} − T_{i−½} + C_{i+½} − C_{i−½} + W_i + B_i + D_pi + D_qi`.

use std::f64::consts::PI;

use super::rk2::Rk2;
use super::waves::GRAVITY;
use super::SimError;

pub type Vec2 = [f64; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MooringLineSpec {
    /// Unstretched length, m.
    pub length: f64,
    /// Dry mass per unit length, kg/m.
    pub mass_per_len: f64,
    /// Line diameter, m. Used for volume, axial area and drag.
    pub diameter: f64,
    /// Pa.
    pub elastic_modulus: f64,
    /// Internal damping coefficient, Pa·s.
    pub c_int: f64,
    pub c_dt: f64,
    pub c_dn: f64,
    pub c_at: f64,
    pub c_an: f64,
    /// Seabed stiffness per area, Pa/m.
    pub k_b: f64,
    /// Seabed damping per area, Pa·s/m.
    pub c_b: f64,
    /// Seabed elevation, m (still water at z = 0).
    pub z_bot: f64,
    pub n_segments: usize,
    pub rho_w: f64,
    pub gravity: f64,
}

/// Damping ratio of the stiffest axial mode used to pick the default `c_int`.
pub const DEFAULT_AXIAL_DAMPING_RATIO: f64 = 0.8;
/// Line material density behind the default diameter, kg/m³.
pub const DEFAULT_LINE_DENSITY: f64 = 7850.0;

impl Default for MooringLineSpec {
    fn default() -> Self {
        let mass_per_len = 0.06;
        let mut spec = MooringLineSpec {
            length: 1.58,
            mass_per_len,
            diameter: (4.0 * mass_per_len / (PI * DEFAULT_LINE_DENSITY)).sqrt(),
            elastic_modulus: 1e9,
            c_int: 0.0,
            c_dt: 1.15,
            c_dn: 2.4,
            c_at: 0.5,
            c_an: 1.0,
            k_b: 3e6,
            c_b: 1e4,
            z_bot: -0.8,
            n_segments: 20,
            rho_w: 1000.0,
            gravity: GRAVITY,
        };
        spec.c_int = spec.internal_damping_for_ratio(DEFAULT_AXIAL_DAMPING_RATIO);
        spec
    }
}

impl MooringLineSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let coeffs = [
            self.length,
            self.mass_per_len,
            self.diameter,
            self.elastic_modulus,
            self.c_int,
            self.c_dt,
            self.c_dn,
            self.c_at,
            self.c_an,
            self.k_b,
            self.c_b,
            self.rho_w,
            self.gravity,
        ];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(SimError::Config(format!(
                "mooring coefficients must be finite and >= 0: {self:?}"
            )));
        }
        if self.length <= 0.0 || self.mass_per_len <= 0.0 || self.diameter <= 0.0 || self.elastic_modulus <= 0.0 {
            return Err(SimError::Config(
                "mooring length, mass per length, diameter and modulus must be > 0".into(),
            ));
        }
        if self.n_segments < 2 {
            return Err(SimError::Config(format!(
                "mooring needs at least 2 segments, got {}",
                self.n_segments
            )));
        }
        if !self.z_bot.is_finite() {
            return Err(SimError::Config("z_bot must be finite".into()));
        }
        Ok(())
    }

    /// `π/4·D²`
    pub fn area(&self) -> f64 {
        PI / 4.0 * self.diameter * self.diameter
    }

    /// Material density implied by mass per length and diameter.
    pub fn rho_m(&self) -> f64 {
        self.mass_per_len / self.area()
    }

    pub fn segment_length(&self) -> f64 {
        self.length / self.n_segments as f64
    }

    pub fn node_mass(&self) -> f64 {
        self.mass_per_len * self.segment_length()
    }

    /// Submerged weight per unit length, N/m.
    pub fn submerged_weight_per_len(&self) -> f64 {
        self.area() * (self.rho_m() - self.rho_w) * self.gravity
    }

    /// `c_int` giving damping ratio `zeta` on the stiffest axial mode.
    pub fn internal_damping_for_ratio(&self, zeta: f64) -> f64 {
        let a = self.area();
        zeta * (self.elastic_modulus * a * self.mass_per_len).sqrt() * self.segment_length() / a
    }

    /// Highest axial natural frequency of the discretized line, rad/s.
    pub fn max_axial_frequency(&self) -> f64 {
        let l = self.segment_length();
        2.0 * (self.elastic_modulus * self.area() / (self.mass_per_len * l * l)).sqrt()
    }

    /// Substep count so that `ω_max·dt_sub ≤ cfl`.
    pub fn substeps(&self, dt: f64, cfl: f64) -> usize {
        ((dt * self.max_axial_frequency() / cfl).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MooringState {
    pub r: Vec<Vec2>,
    pub r_dot: Vec<Vec2>,
    pub anchor_index: usize,
    pub fairlead_index: usize,
}

impl MooringState {
    /// Nodes at rest at the given positions; the first is the anchor, the last the fairlead.
    pub fn at_rest(r: Vec<Vec2>) -> Self {
        let n = r.len();
        MooringState {
            r_dot: vec![[0.0; 2]; n],
            fairlead_index: n - 1,
            anchor_index: 0,
            r,
        }
    }

    /// Static catenary with the line's lower part resting on the seabed.
    ///
    /// The anchor must lie on the seabed. Falls back to a straight chord when
    /// no lay-down solution exists (line too short or too long for it).
    pub fn catenary(spec: &MooringLineSpec, anchor: Vec2, fairlead: Vec2) -> Result<Self, SimError> {
        spec.validate()?;
        let n = spec.n_segments;
        let lt = spec.length;
        let dir = if fairlead[0] >= anchor[0] { 1.0 } else { -1.0 };
        let span = (fairlead[0] - anchor[0]).abs();
        let h = fairlead[1] - anchor[1];
        if h <= 0.0 || (span * span + h * h).sqrt() >= lt {
            return Err(SimError::Config(format!(
                "fairlead {fairlead:?} cannot be reached from anchor {anchor:?} with a {lt} m slack line"
            )));
        }
        let suspended = |a: f64| (h * h + 2.0 * h * a).sqrt();
        let reach = |a: f64| {
            let s = suspended(a);
            (lt - s) + a * (s / a).asinh()
        };
        let a_max = (lt * lt - h * h) / (2.0 * h);
        let no_laydown = lt - h > span || reach(a_max) < span;
        let r: Vec<Vec2> = if no_laydown {
            // Chord start; the slack segments are compressed and the dynamics relax them.
            (0..=n)
                .map(|i| {
                    let f = i as f64 / n as f64;
                    [anchor[0] + f * (fairlead[0] - anchor[0]), anchor[1] + f * h]
                })
                .collect()
        } else {
            let (mut lo, mut hi) = (1e-12, a_max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if reach(mid) < span {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let a = 0.5 * (lo + hi);
            let s = suspended(a);
            let touchdown = lt - s;
            (0..=n)
                .map(|i| {
                    let arc = lt * i as f64 / n as f64;
                    if arc <= touchdown {
                        [anchor[0] + dir * arc, anchor[1]]
                    } else {
                        let u = arc - touchdown;
                        [
                            anchor[0] + dir * (touchdown + a * (u / a).asinh()),
                            anchor[1] + (a * a + u * u).sqrt() - a,
                        ]
                    }
                })
                .collect()
        };
        let mut state = MooringState::at_rest(r);
        // Pin the ends exactly.
        state.r[0] = anchor;
        state.r[n] = fairlead;
        Ok(state)
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(&self.r_dot).all(|p| p[0].is_finite() && p[1].is_finite())
    }

    pub fn forces(&self, spec: &MooringLineSpec) -> Result<MooringForces, SimError> {
        let mut f = MooringForces::new(self.r.len());
        compute_forces(spec, &self.r, &self.r_dot, &mut f)?;
        Ok(f)
    }
}

/// Every force term per node (`W`, `B`, `D_p`, `D_q`, added mass) and per
/// segment (`T`, `C`, strain).
#[derive(Debug, Clone, PartialEq)]
pub struct MooringForces {
    pub weight: Vec<Vec2>,
    pub seabed: Vec<Vec2>,
    pub drag_p: Vec<Vec2>,
    pub drag_q: Vec<Vec2>,
    pub added_mass: Vec<[[f64; 2]; 2]>,
    pub tangent: Vec<Vec2>,
    /// `T_{i+½}`, pointing from node `i` to node `i+1`.
    pub tension: Vec<Vec2>,
    pub damping: Vec<Vec2>,
    pub strain: Vec<f64>,
}

impl MooringForces {
    fn new(nodes: usize) -> Self {
        MooringForces {
            weight: vec![[0.0; 2]; nodes],
            seabed: vec![[0.0; 2]; nodes],
            drag_p: vec![[0.0; 2]; nodes],
            drag_q: vec![[0.0; 2]; nodes],
            added_mass: vec![[[0.0; 2]; 2]; nodes],
            tangent: vec![[0.0; 2]; nodes],
            tension: vec![[0.0; 2]; nodes - 1],
            damping: vec![[0.0; 2]; nodes - 1],
            strain: vec![0.0; nodes - 1],
        }
    }

    /// Right-hand side of the node equation.
    pub fn net(&self, i: usize) -> Vec2 {
        let mut f = [0.0; 2];
        for d in 0..2 {
            if i + 1 < self.weight.len() {
                f[d] += self.tension[i][d] + self.damping[i][d];
            }
            if i > 0 {
                f[d] -= self.tension[i - 1][d] + self.damping[i - 1][d];
            }
            f[d] += self.weight[i][d] + self.seabed[i][d] + self.drag_p[i][d] + self.drag_q[i][d];
        }
        f
    }

    /// Force the line applies to whatever holds the fairlead:
    /// `−T_{n−½} − C_{n−½} + W_n`.
    pub fn fairlead_force(&self) -> Vec2 {
        let n = self.weight.len() - 1;
        let s = n - 1;
        [
            -self.tension[s][0] - self.damping[s][0] + self.weight[n][0],
            -self.tension[s][1] - self.damping[s][1] + self.weight[n][1],
        ]
    }
}

fn compute_forces(
    spec: &MooringLineSpec,
    r: &[Vec2],
    v: &[Vec2],
    out: &mut MooringForces,
) -> Result<(), SimError> {
    let nodes = r.len();
    let l = spec.segment_length();
    let area = spec.area();
    let d = spec.diameter;
    let w_seg = area * l * (spec.rho_m() - spec.rho_w) * spec.gravity;
    let ea = spec.elastic_modulus * area;
    let drag_t = 0.5 * spec.rho_w * spec.c_dt * l * d;
    let drag_n = 0.5 * spec.rho_w * spec.c_dn * l * d;
    let am = spec.rho_w * area * l;

    for s in 0..nodes - 1 {
        let dr = sub(r[s + 1], r[s]);
        let len = norm(dr);
        if len < 1e-12 * l.max(1.0) {
            return Err(SimError::DegenerateGeometry { segment: s });
        }
        let e = scale(dr, 1.0 / len);
        let strain = (len - l) / l;
        let strain_rate = dot(dr, sub(v[s + 1], v[s])) / (l * len);
        out.strain[s] = strain;
        out.tension[s] = scale(e, ea * strain.max(0.0));
        out.damping[s] = scale(e, spec.c_int * area * strain_rate);
        out.tangent[s] = e;
    }
    out.tangent[nodes - 1] = out.tangent[nodes - 2];

    for i in 0..nodes {
        let segs = (i > 0) as u8 + (i + 1 < nodes) as u8;
        out.weight[i] = [0.0, -0.5 * w_seg * segs as f64];

        let e = out.tangent[i];
        let vi = v[i];
        let vt = -dot(vi, e);
        out.drag_q[i] = scale(e, drag_t * vt.abs() * vt);
        let vp = sub(scale(e, dot(vi, e)), vi);
        out.drag_p[i] = scale(vp, drag_n * norm(vp));

        let z = r[i][1];
        out.seabed[i] = if z <= spec.z_bot {
            [0.0, l * d * ((spec.z_bot - z) * spec.k_b - vi[1] * spec.c_b)]
        } else {
            [0.0, 0.0]
        };

        let mut a = [[0.0; 2]; 2];
        for (p, row) in a.iter_mut().enumerate() {
            for (q, cell) in row.iter_mut().enumerate() {
                let eet = e[p] * e[q];
                let id = if p == q { 1.0 } else { 0.0 };
                *cell = am * (spec.c_an * (id - eet) + spec.c_at * eet);
            }
        }
        out.added_mass[i] = a;
    }
    Ok(())
}

/// Solves `(m·I + a)·x = f` for one node.
fn solve_node(m: f64, a: [[f64; 2]; 2], f: Vec2) -> Vec2 {
    let (p, q, r, s) = (m + a[0][0], a[0][1], a[1][0], m + a[1][1]);
    let det = p * s - q * r;
    [(s * f[0] - q * f[1]) / det, (p * f[1] - r * f[0]) / det]
}

/// Position and velocity of the fairlead at a given time.
pub type FairleadKinematics = (Vec2, Vec2);

/// A line with its integrator scratch space.
#[derive(Debug, Clone)]
pub struct MooringLine {
    pub spec: MooringLineSpec,
    pub state: MooringState,
    rk: Rk2,
    y: Vec<f64>,
    work_r: Vec<Vec2>,
    work_v: Vec<Vec2>,
    forces: MooringForces,
}

impl MooringLine {
    pub fn new(spec: MooringLineSpec, state: MooringState) -> Result<Self, SimError> {
        spec.validate()?;
        let nodes = state.r.len();
        if nodes != spec.n_segments + 1 {
            return Err(SimError::Config(format!(
                "state has {nodes} nodes but the line has {} segments",
                spec.n_segments
            )));
        }
        Ok(MooringLine {
            rk: Rk2::new(4 * nodes),
            y: vec![0.0; 4 * nodes],
            work_r: vec![[0.0; 2]; nodes],
            work_v: vec![[0.0; 2]; nodes],
            forces: MooringForces::new(nodes),
            spec,
            state,
        })
    }

    pub fn forces(&self) -> Result<MooringForces, SimError> {
        self.state.forces(&self.spec)
    }

    /// Advances by `dt` with explicit midpoint RK2. The anchor stays pinned
    /// and the fairlead follows `fairlead(t)`.
    pub fn step(
        &mut self,
        t: f64,
        dt: f64,
        fairlead: impl Fn(f64) -> FairleadKinematics,
    ) -> Result<(), SimError> {
        if !(dt > 0.0) {
            return Err(SimError::Config(format!("mooring step needs dt > 0, got {dt}")));
        }
        let nodes = self.state.r.len();
        let fl = nodes - 1;
        for i in 0..nodes {
            self.y[2 * i] = self.state.r[i][0];
            self.y[2 * i + 1] = self.state.r[i][1];
            self.y[2 * (nodes + i)] = self.state.r_dot[i][0];
            self.y[2 * (nodes + i) + 1] = self.state.r_dot[i][1];
        }
        let spec = &self.spec;
        let (work_r, work_v, forces) = (&mut self.work_r, &mut self.work_v, &mut self.forces);
        let m = spec.node_mass();
        self.rk.step(t, dt, &mut self.y, |tt, y, dy| {
            for i in 0..nodes {
                work_r[i] = [y[2 * i], y[2 * i + 1]];
                work_v[i] = [y[2 * (nodes + i)], y[2 * (nodes + i) + 1]];
            }
            let (fp, fv) = fairlead(tt);
            work_r[fl] = fp;
            work_v[fl] = fv;
            work_v[0] = [0.0; 2];
            compute_forces(spec, work_r, work_v, forces)?;
            for i in 0..nodes {
                let (vel, acc) = if i == 0 {
                    ([0.0; 2], [0.0; 2])
                } else if i == fl {
                    (fv, [0.0; 2])
                } else {
                    (work_v[i], solve_node(m, forces.added_mass[i], forces.net(i)))
                };
                dy[2 * i] = vel[0];
                dy[2 * i + 1] = vel[1];
                dy[2 * (nodes + i)] = acc[0];
                dy[2 * (nodes + i) + 1] = acc[1];
            }
            Ok(())
        })?;
        let (fp, fv) = fairlead(t + dt);
        for i in 0..nodes {
            self.state.r[i] = [self.y[2 * i], self.y[2 * i + 1]];
            self.state.r_dot[i] = [self.y[2 * (nodes + i)], self.y[2 * (nodes + i) + 1]];
        }
        self.state.r[fl] = fp;
        self.state.r_dot[fl] = fv;
        self.state.r_dot[0] = [0.0; 2];
        if let Some(node) = (0..nodes).find(|&i| {
            let (p, q) = (self.state.r[i], self.state.r_dot[i]);
            !(p[0].is_finite() && p[1].is_finite() && q[0].is_finite() && q[1].is_finite())
        }) {
            return Err(SimError::Unstable {
                what: "mooring line".into(),
                node,
                t: t + dt,
                dt,
            });
        }
        Ok(())
    }
}

/// One step of a line from `state`; see [`MooringLine::step`].
pub fn mooring_step(
    state: &MooringState,
    spec: &MooringLineSpec,
    fairlead: impl Fn(f64) -> FairleadKinematics,
    t: f64,
    dt: f64,
) -> Result<MooringState, SimError> {
    let mut line = MooringLine::new(spec.clone(), state.clone())?;
    line.step(t, dt, fairlead)?;
    Ok(line.state)
}
