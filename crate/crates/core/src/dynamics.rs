//! Coupled vortex/spray dynamics and time integrators.
//!
//! Vortices move with the regularised velocity `u`; spray atoms obey
//! `h' = xi`, `xi' = (xi - u(h))^perp / epsilon`, where
//! `u(z) = sum_j a_j H(z - x_j) + sum_i w_i H(z - h_i)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::Vec2;
use crate::kernels::BlobKernel;
use crate::measures::{PhaseAtomCloud, SignedAtomCloud};

/// Any coordinate beyond this magnitude counts as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Direct sums with at least this many kernel evaluations run in parallel.
const PARALLEL_WORK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    Vortex,
    Spray,
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("blow-up at t = {time}: {kind:?} atom {index} left the finite domain")]
    BlowUp {
        kind: AtomKind,
        index: usize,
        time: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingParams {
    delta: f64,
    epsilon: f64,
}

impl CouplingParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self, DynamicsError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(CouplingParams { delta, epsilon })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kernel(&self) -> BlobKernel {
        BlobKernel::new(self.delta).expect("delta validated")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SprayState {
    pub vortices: SignedAtomCloud,
    pub spray: PhaseAtomCloud,
    pub time: f64,
}

impl SprayState {
    pub fn new(vortices: SignedAtomCloud, spray: PhaseAtomCloud) -> Self {
        SprayState {
            vortices,
            spray,
            time: 0.0,
        }
    }

    /// Every velocity source as `(position, weight)`: vortices, then spray.
    pub fn sources(&self) -> (Vec<Vec2>, Vec<f64>) {
        let n = self.vortices.len() + self.spray.len();
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for a in self.vortices.atoms() {
            x.push(a.pos);
            w.push(a.weight);
        }
        for a in self.spray.atoms() {
            x.push(a.x);
            w.push(a.weight);
        }
        (x, w)
    }

    fn pack(&self) -> Vec<Vec2> {
        let mut y = Vec::with_capacity(self.vortices.len() + 2 * self.spray.len());
        y.extend(self.vortices.atoms().iter().map(|a| a.pos));
        y.extend(self.spray.atoms().iter().map(|a| a.x));
        y.extend(self.spray.atoms().iter().map(|a| a.xi));
        y
    }

    fn unpack(&mut self, y: &[Vec2]) {
        let nv = self.vortices.len();
        let ns = self.spray.len();
        for (a, p) in self.vortices.atoms_mut().iter_mut().zip(&y[..nv]) {
            a.pos = *p;
        }
        for (i, a) in self.spray.atoms_mut().iter_mut().enumerate() {
            a.x = y[nv + i];
            a.xi = y[nv + ns + i];
        }
    }

    fn check_finite(&self) -> Result<(), DynamicsError> {
        let ok = |v: Vec2| v.is_finite() && v.max_abs() <= BLOWUP_THRESHOLD;
        for (index, a) in self.vortices.atoms().iter().enumerate() {
            if !ok(a.pos) {
                return Err(DynamicsError::BlowUp {
                    kind: AtomKind::Vortex,
                    index,
                    time: self.time,
                });
            }
        }
        for (index, a) in self.spray.atoms().iter().enumerate() {
            if !(ok(a.x) && ok(a.xi)) {
                return Err(DynamicsError::BlowUp {
                    kind: AtomKind::Spray,
                    index,
                    time: self.time,
                });
            }
        }
        Ok(())
    }
}

/// `sum_j w_j H(z - x_j)` at every target, by direct summation.
pub fn field_at(
    kernel: &BlobKernel,
    src_x: &[Vec2],
    src_w: &[f64],
    targets: &[Vec2],
    out: &mut [Vec2],
) {
    let eval = |z: Vec2| {
        let mut u = Vec2::ZERO;
        for (x, &w) in src_x.iter().zip(src_w) {
            u += w * kernel.velocity(z - *x);
        }
        u
    };
    if targets.len() * src_x.len() >= PARALLEL_WORK {
        out.par_iter_mut()
            .zip(targets.par_iter())
            .for_each(|(o, &z)| *o = eval(z));
    } else {
        for (o, &z) in out.iter_mut().zip(targets) {
            *o = eval(z);
        }
    }
}

/// Velocity induced by every atom of `s` at `targets`.
pub fn induced_velocity(s: &SprayState, targets: &[Vec2], k: &CouplingParams) -> Vec<Vec2> {
    let (x, w) = s.sources();
    let mut out = vec![Vec2::ZERO; targets.len()];
    field_at(&k.kernel(), &x, &w, targets, &mut out);
    out
}

/// Time derivative of a state; weights never change.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub vortex_velocity: Vec<Vec2>,
    pub spray_position: Vec<Vec2>,
    pub spray_velocity: Vec<Vec2>,
}

pub fn rhs(s: &SprayState, k: &CouplingParams) -> StateDerivative {
    let sys = System::new(s, k);
    let y = s.pack();
    let mut dy = vec![Vec2::ZERO; y.len()];
    sys.full(&y, &mut dy);
    let (nv, ns) = (sys.nv, sys.ns);
    StateDerivative {
        vortex_velocity: dy[..nv].to_vec(),
        spray_position: dy[nv..nv + ns].to_vec(),
        spray_velocity: dy[nv + ns..].to_vec(),
    }
}

/// Packed-state right-hand sides. The packed layout is vortex positions,
/// spray positions, spray velocities.
struct System {
    kernel: BlobKernel,
    inv_eps: f64,
    nv: usize,
    ns: usize,
    weights: Vec<f64>,
    u: std::cell::RefCell<Vec<Vec2>>,
}

impl System {
    fn new(s: &SprayState, k: &CouplingParams) -> Self {
        let (_, weights) = s.sources();
        let n = weights.len();
        System {
            kernel: k.kernel(),
            inv_eps: 1.0 / k.epsilon(),
            nv: s.vortices.len(),
            ns: s.spray.len(),
            weights,
            u: std::cell::RefCell::new(vec![Vec2::ZERO; n]),
        }
    }

    /// Velocity at every atom position of `y`.
    fn velocity(&self, y: &[Vec2]) -> std::cell::RefMut<'_, Vec<Vec2>> {
        let mut u = self.u.borrow_mut();
        let pos = &y[..self.nv + self.ns];
        field_at(&self.kernel, pos, &self.weights, pos, &mut u);
        u
    }

    fn full(&self, y: &[Vec2], dy: &mut [Vec2]) {
        let u = self.velocity(y);
        let (nv, ns) = (self.nv, self.ns);
        dy[..nv].copy_from_slice(&u[..nv]);
        for i in 0..ns {
            let xi = y[nv + ns + i];
            dy[nv + i] = xi;
            dy[nv + ns + i] = (xi - u[nv + i]).perp() * self.inv_eps;
        }
    }

    /// Slow part: vortices advected, spray positions drift with frozen `xi`.
    fn slow(&self, y: &[Vec2], dy: &mut [Vec2]) {
        let u = self.velocity(y);
        let (nv, ns) = (self.nv, self.ns);
        dy[..nv].copy_from_slice(&u[..nv]);
        for i in 0..ns {
            dy[nv + i] = y[nv + ns + i];
            dy[nv + ns + i] = Vec2::ZERO;
        }
    }

    /// Exact solution of `xi' = (xi - u)^perp / epsilon` with `u` frozen at
    /// the current positions.
    fn rotate(&self, y: &mut [Vec2], dt: f64) {
        let u = self.velocity(y);
        let (nv, ns) = (self.nv, self.ns);
        let (sin, cos) = (dt * self.inv_eps).sin_cos();
        for i in 0..ns {
            let ui = u[nv + i];
            y[nv + ns + i] = ui + (y[nv + ns + i] - ui).rotate(sin, cos);
        }
    }
}

struct Rk4Buffers {
    k1: Vec<Vec2>,
    k2: Vec<Vec2>,
    k3: Vec<Vec2>,
    k4: Vec<Vec2>,
    tmp: Vec<Vec2>,
}

impl Rk4Buffers {
    fn new(n: usize) -> Self {
        let z = vec![Vec2::ZERO; n];
        Rk4Buffers {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

fn rk4<F: Fn(&[Vec2], &mut [Vec2])>(f: F, y: &mut [Vec2], dt: f64, b: &mut Rk4Buffers) {
    let h2 = 0.5 * dt;
    f(y, &mut b.k1);
    for i in 0..y.len() {
        b.tmp[i] = y[i] + b.k1[i] * h2;
    }
    f(&b.tmp, &mut b.k2);
    for i in 0..y.len() {
        b.tmp[i] = y[i] + b.k2[i] * h2;
    }
    f(&b.tmp, &mut b.k3);
    for i in 0..y.len() {
        b.tmp[i] = y[i] + b.k3[i] * dt;
    }
    f(&b.tmp, &mut b.k4);
    let h6 = dt / 6.0;
    for i in 0..y.len() {
        y[i] += (b.k1[i] + (b.k2[i] + b.k3[i]) * 2.0 + b.k4[i]) * h6;
    }
}

fn check_dt(dt: f64) -> Result<(), DynamicsError> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )))
    }
}

/// Classical fourth-order Runge-Kutta step of the full system.
pub fn step_rk4(s: &SprayState, dt: f64, k: &CouplingParams) -> Result<SprayState, DynamicsError> {
    check_dt(dt)?;
    let mut out = s.clone();
    Stepper::new(s, k, Scheme::Rk4, dt).step(&mut out)?;
    Ok(out)
}

/// Strang splitting: half step of the slow flow, exact gyration of
/// `xi - u`, half step of the slow flow.
pub fn step_split(
    s: &SprayState,
    dt: f64,
    k: &CouplingParams,
) -> Result<SprayState, DynamicsError> {
    check_dt(dt)?;
    let mut out = s.clone();
    Stepper::new(s, k, Scheme::Split, dt).step(&mut out)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Split,
    /// Split when `epsilon <= 10 dt`, RK4 otherwise.
    Auto,
}

impl Scheme {
    pub fn resolve(self, epsilon: f64, dt: f64) -> Scheme {
        match self {
            Scheme::Auto if epsilon <= 10.0 * dt => Scheme::Split,
            Scheme::Auto => Scheme::Rk4,
            s => s,
        }
    }
}

struct Stepper {
    sys: System,
    scheme: Scheme,
    dt: f64,
    y: Vec<Vec2>,
    buf: Rk4Buffers,
}

impl Stepper {
    fn new(s: &SprayState, k: &CouplingParams, scheme: Scheme, dt: f64) -> Self {
        let n = s.vortices.len() + 2 * s.spray.len();
        Stepper {
            sys: System::new(s, k),
            scheme: scheme.resolve(k.epsilon(), dt),
            dt,
            y: Vec::with_capacity(n),
            buf: Rk4Buffers::new(n),
        }
    }

    fn step(&mut self, s: &mut SprayState) -> Result<(), DynamicsError> {
        self.y = s.pack();
        let sys = &self.sys;
        match self.scheme {
            Scheme::Split => {
                let h = 0.5 * self.dt;
                rk4(|y, d| sys.slow(y, d), &mut self.y, h, &mut self.buf);
                sys.rotate(&mut self.y, self.dt);
                rk4(|y, d| sys.slow(y, d), &mut self.y, h, &mut self.buf);
            }
            _ => rk4(|y, d| sys.full(y, d), &mut self.y, self.dt, &mut self.buf),
        }
        s.unpack(&self.y);
        s.time += self.dt;
        s.check_finite()
    }
}

/// Number of uniform steps used to cover `[0, t_final]` with steps no longer
/// than `dt`.
/// Upper limit on the number of steps of one run.
pub const MAX_STEPS: f64 = 1e12;

pub fn step_count(t_final: f64, dt: f64) -> usize {
    (t_final / dt - 1e-9).ceil().max(0.0) as usize
}

/// Integrates to `s0.time + t_final` with `step_count` uniform steps of
/// length `t_final / n <= dt`, calling `observe` on the initial state, on
/// every `cadence`-th state and on the final state.
pub fn integrate_with<F: FnMut(&SprayState)>(
    s0: &SprayState,
    k: &CouplingParams,
    t_final: f64,
    dt: f64,
    scheme: Scheme,
    cadence: usize,
    mut observe: F,
) -> Result<SprayState, DynamicsError> {
    check_dt(dt)?;
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(DynamicsError::InvalidParameter(format!(
            "T must be nonnegative, got {t_final}"
        )));
    }
    if cadence == 0 {
        return Err(DynamicsError::InvalidParameter(
            "cadence must be at least 1".into(),
        ));
    }
    if t_final / dt > MAX_STEPS {
        return Err(DynamicsError::InvalidParameter(format!(
            "T / dt exceeds {MAX_STEPS:e} steps"
        )));
    }
    let mut s = s0.clone();
    observe(&s);
    let n = step_count(t_final, dt);
    if n == 0 {
        return Ok(s);
    }
    let h = t_final / n as f64;
    let mut stepper = Stepper::new(s0, k, scheme.resolve(k.epsilon(), dt), h);
    for step in 1..=n {
        stepper.step(&mut s)?;
        // times are t0 + k h, not accumulated sums
        s.time = s0.time + step as f64 * h;
        if step % cadence == 0 || step == n {
            observe(&s);
        }
    }
    Ok(s)
}

/// Stored states of a run, in time order.
pub type Trajectory = Vec<SprayState>;

pub fn integrate(
    s0: &SprayState,
    k: &CouplingParams,
    t_final: f64,
    dt: f64,
    scheme: Scheme,
    cadence: usize,
) -> Result<Trajectory, DynamicsError> {
    let mut out = Vec::new();
    integrate_with(s0, k, t_final, dt, scheme, cadence, |s| out.push(s.clone()))?;
    Ok(out)
}
