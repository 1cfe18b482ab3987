//! Conserved and modulated quantities of a vortex/spray state.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{induced_velocity, CouplingParams, SprayState};
use crate::geometry::{CompensatedSum, Vec2, Window};
use crate::kernels::BlobKernel;
use crate::measures::{discretize_vorticity, MeasureError, SignedAtom, SignedAtomCloud};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticError {
    #[error("reference discretization carries mass {reference}, state carries {state}")]
    MassMismatch { state: f64, reference: f64 },
    #[error("trajectories cannot be paired: {0}")]
    Pairing(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// `sum_{p < q} c_p c_q G(z_p - z_q)`.
fn pair_energy(kernel: &BlobKernel, atoms: &[SignedAtom]) -> f64 {
    let mut sum = CompensatedSum::default();
    for (p, a) in atoms.iter().enumerate() {
        for b in &atoms[p + 1..] {
            sum.add(a.weight * b.weight * kernel.stream(a.pos - b.pos));
        }
    }
    sum.value()
}

/// Every vortex and every spray position as one signed cloud.
fn combined_cloud(s: &SprayState) -> Vec<SignedAtom> {
    let mut atoms = s.vortices.atoms().to_vec();
    atoms.extend(
        s.spray
            .atoms()
            .iter()
            .map(|a| SignedAtom::new(a.x, a.weight)),
    );
    atoms
}

/// `½ epsilon sum_i w_i |xi_i - v(h_i)|^2`.
fn kinetic_half<F: Fn(Vec2) -> Vec2>(s: &SprayState, k: &CouplingParams, v: F) -> f64 {
    let mut sum = CompensatedSum::default();
    for a in s.spray.atoms() {
        sum.add(a.weight * (a.xi - v(a.x)).norm_sq());
    }
    0.5 * k.epsilon() * sum.value()
}

/// `H = ½ epsilon sum_i w_i |xi_i|^2 - sum_{p<q} c_p c_q G(z_p - z_q)` over
/// all vortices and spray positions; self pairs are left out.
pub fn hamiltonian(s: &SprayState, k: &CouplingParams) -> f64 {
    kinetic_half(s, k, |_| Vec2::ZERO) - pair_energy(&k.kernel(), &combined_cloud(s))
}

/// A smooth divergence-free velocity field with closed-form derivatives.
pub trait ReferenceField: Sync {
    fn velocity(&self, x: Vec2) -> Vec2;
    /// Rows `[[d1 v1, d2 v1], [d1 v2, d2 v2]]`.
    fn gradient(&self, x: Vec2) -> [[f64; 2]; 2];
    fn curl(&self, x: Vec2) -> f64;
    /// `(v . grad) v` of a steady field.
    fn material_derivative(&self, x: Vec2) -> Vec2;
    /// Supremum over the plane of the spectral radius of the symmetric part.
    fn sup_strain(&self) -> f64;
    /// Supremum over the plane of the material derivative's length.
    fn sup_material_derivative(&self) -> f64;

    /// Spectral radius of the symmetric part of the gradient at `x`.
    fn strain(&self, x: Vec2) -> f64 {
        let g = self.gradient(x);
        let d11 = g[0][0];
        let d22 = g[1][1];
        let d12 = 0.5 * (g[0][1] + g[1][0]);
        let mean = 0.5 * (d11 + d22);
        let rad = (0.25 * (d11 - d22) * (d11 - d22) + d12 * d12).sqrt();
        (mean + rad).abs().max((mean - rad).abs())
    }
}

/// `v(x) = omega x^perp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RigidRotation {
    pub omega: f64,
}

impl ReferenceField for RigidRotation {
    fn velocity(&self, x: Vec2) -> Vec2 {
        x.perp() * self.omega
    }

    fn gradient(&self, _x: Vec2) -> [[f64; 2]; 2] {
        [[0.0, -self.omega], [self.omega, 0.0]]
    }

    fn curl(&self, _x: Vec2) -> f64 {
        2.0 * self.omega
    }

    fn material_derivative(&self, x: Vec2) -> Vec2 {
        x * (-self.omega * self.omega)
    }

    fn sup_strain(&self) -> f64 {
        0.0
    }

    /// Unbounded on the plane.
    fn sup_material_derivative(&self) -> f64 {
        f64::INFINITY
    }
}

/// Steady radial vortex `v = a H_sigma(x - center)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobVortex {
    pub circulation: f64,
    pub center: Vec2,
    kernel: BlobKernel,
}

impl BlobVortex {
    pub fn new(
        circulation: f64,
        sigma: f64,
        center: Vec2,
    ) -> Result<Self, crate::kernels::KernelError> {
        Ok(BlobVortex {
            circulation,
            center,
            kernel: BlobKernel::new(sigma)?,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.kernel.delta()
    }
}

impl ReferenceField for BlobVortex {
    fn velocity(&self, x: Vec2) -> Vec2 {
        self.kernel.velocity(x - self.center) * self.circulation
    }

    fn gradient(&self, x: Vec2) -> [[f64; 2]; 2] {
        let g = self.kernel.velocity_gradient(x - self.center);
        let a = self.circulation;
        [[a * g[0][0], a * g[0][1]], [a * g[1][0], a * g[1][1]]]
    }

    fn curl(&self, x: Vec2) -> f64 {
        let s2 = self.sigma() * self.sigma();
        let d = (x - self.center).norm_sq() + s2;
        self.circulation * s2 / (std::f64::consts::PI * d * d)
    }

    fn material_derivative(&self, x: Vec2) -> Vec2 {
        // circular flow v = g(r) y^perp has (v . grad) v = -g^2 y
        let y = x - self.center;
        let g = self.circulation
            / (2.0 * std::f64::consts::PI * (y.norm_sq() + self.sigma() * self.sigma()));
        y * (-g * g)
    }

    fn sup_strain(&self) -> f64 {
        self.circulation.abs() / (8.0 * std::f64::consts::PI * self.sigma() * self.sigma())
    }

    fn sup_material_derivative(&self) -> f64 {
        let c = self.circulation / (2.0 * std::f64::consts::PI);
        c * c * 9.0 / (16.0 * 3f64.sqrt() * self.sigma().powi(3))
    }
}

/// The zero field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZeroField;

impl ReferenceField for ZeroField {
    fn velocity(&self, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }
    fn gradient(&self, _x: Vec2) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
    fn curl(&self, _x: Vec2) -> f64 {
        0.0
    }
    fn material_derivative(&self, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }
    fn sup_strain(&self) -> f64 {
        0.0
    }
    fn sup_material_derivative(&self) -> f64 {
        0.0
    }
}

/// Midpoint discretisation of `curl v` on a window.
pub fn discretize_curl(
    v: &dyn ReferenceField,
    window: Window,
    n_per_side: usize,
) -> Result<SignedAtomCloud, MeasureError> {
    discretize_vorticity(|x| v.curl(x), window, n_per_side)
}

/// Modulated energy
/// `H_v = ½ epsilon sum_i w_i |xi_i - v(h_i)|^2 - sum_{p<q} c_p c_q G(z_p - z_q)`
/// where `c` runs over the vortices, the spray positions and `-h_discrete`.
/// Atoms of the combined cloud that share a position are merged first, so a
/// state that reproduces `h_discrete` atom for atom with `xi = v(h)` scores 0.
///
/// `mass_tol` bounds `|mass(vortices + spray) - mass(h_discrete)|`.
pub fn modulated_energy(
    s: &SprayState,
    v: &dyn ReferenceField,
    h_discrete: &SignedAtomCloud,
    k: &CouplingParams,
    mass_tol: f64,
) -> Result<f64, DiagnosticError> {
    let mut atoms = combined_cloud(s);
    let state_mass: f64 = atoms.iter().map(|a| a.weight).sum();
    let reference = h_discrete.mass();
    if !h_discrete.is_empty() && (state_mass - reference).abs() > mass_tol {
        return Err(DiagnosticError::MassMismatch {
            state: state_mass,
            reference,
        });
    }
    atoms.extend(
        h_discrete
            .atoms()
            .iter()
            .map(|a| SignedAtom::new(a.pos, -a.weight)),
    );
    let cloud = SignedAtomCloud::new(atoms)?.merged();
    Ok(kinetic_half(s, k, |x| v.velocity(x)) - pair_energy(&k.kernel(), cloud.atoms()))
}

/// `epsilon sum_i w_i |xi_i - u(h_i)|^2` with `u` the velocity induced by the
/// state itself.
pub fn induced_kinetic_deviation(s: &SprayState, k: &CouplingParams) -> f64 {
    let h: Vec<Vec2> = s.spray.atoms().iter().map(|a| a.x).collect();
    let u = induced_velocity(s, &h, k);
    let mut sum = CompensatedSum::default();
    for (a, ui) in s.spray.atoms().iter().zip(&u) {
        sum.add(a.weight * (a.xi - *ui).norm_sq());
    }
    k.epsilon() * sum.value()
}

/// Growth bound for [`induced_kinetic_deviation`].
///
/// With `r_i = xi_i - u(h_i)` the gyration term leaves `|r_i|` unchanged and
/// `|d/dt u(h_i)| <= lip * TV * (|xi_i| + max|z_p'|) <= 2 lip TV (R + S)`,
/// where `R = max_i |r_i|`, `S = sup|H| TV` bounds `|u|` and `TV` is the total
/// variation of vortices plus spray. Hence
/// `R(t) <= (R(0) + S) e^{2 lip TV t} - S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GyrationEnvelope {
    pub epsilon: f64,
    pub spray_mass: f64,
    pub r0: f64,
    pub s: f64,
    pub rate: f64,
}

impl GyrationEnvelope {
    pub fn new(s0: &SprayState, k: &CouplingParams) -> Self {
        let b = k.kernel().bounds();
        let tv = s0.vortices.total_variation() + s0.spray.mass();
        let h: Vec<Vec2> = s0.spray.atoms().iter().map(|a| a.x).collect();
        let u = induced_velocity(s0, &h, k);
        let r0 = s0
            .spray
            .atoms()
            .iter()
            .zip(&u)
            .map(|(a, ui)| (a.xi - *ui).norm())
            .fold(0.0, f64::max);
        GyrationEnvelope {
            epsilon: k.epsilon(),
            spray_mass: s0.spray.mass(),
            r0,
            s: b.sup * tv,
            rate: 2.0 * b.lip * tv,
        }
    }

    pub fn bound(&self, t: f64) -> f64 {
        let r = (self.r0 + self.s) * (self.rate * t).exp() - self.s;
        self.epsilon * self.spray_mass * r * r
    }
}

/// Per observation time `(t, Q, Q~)` with
/// `Q = sum_i w_i (|h1_i - h2_i|^2 + |xi1_i - xi2_i|^2)` and
/// `Q~ = sum_j |a_j| |x1_j - x2_j|^2`.
pub fn loeper_divergence(
    a: &[SprayState],
    b: &[SprayState],
) -> Result<Vec<(f64, f64, f64)>, DiagnosticError> {
    if a.len() != b.len() {
        return Err(DiagnosticError::Pairing(format!(
            "{} vs {} observations",
            a.len(),
            b.len()
        )));
    }
    let mut out = Vec::with_capacity(a.len());
    for (sa, sb) in a.iter().zip(b) {
        if sa.time != sb.time {
            return Err(DiagnosticError::Pairing(format!(
                "times {} and {}",
                sa.time, sb.time
            )));
        }
        if sa.vortices.len() != sb.vortices.len() || sa.spray.len() != sb.spray.len() {
            return Err(DiagnosticError::Pairing("atom counts differ".into()));
        }
        let mut q = CompensatedSum::default();
        for (p, r) in sa.spray.atoms().iter().zip(sb.spray.atoms()) {
            if p.weight != r.weight {
                return Err(DiagnosticError::Pairing("spray weights differ".into()));
            }
            q.add(p.weight * ((p.x - r.x).norm_sq() + (p.xi - r.xi).norm_sq()));
        }
        let mut qt = CompensatedSum::default();
        for (p, r) in sa.vortices.atoms().iter().zip(sb.vortices.atoms()) {
            if p.weight != r.weight {
                return Err(DiagnosticError::Pairing("vortex weights differ".into()));
            }
            qt.add(p.weight.abs() * (p.pos - r.pos).norm_sq());
        }
        out.push((sa.time, q.value(), qt.value()));
    }
    Ok(out)
}

pub const CSV_HEADER: &str =
    "time,hamiltonian,circ_pos,circ_neg,spray_mass,m2,eps_kinetic,sqrt_eps_j_l1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub hamiltonian: f64,
    pub circ_pos: f64,
    pub circ_neg: f64,
    pub spray_mass: f64,
    pub m2: f64,
    pub eps_kinetic: f64,
    pub sqrt_eps_j_l1: f64,
}

impl DiagnosticsRow {
    pub fn to_csv(&self) -> String {
        use crate::measures::snapshot::fmt_f64;
        [
            self.time,
            self.hamiltonian,
            self.circ_pos,
            self.circ_neg,
            self.spray_mass,
            self.m2,
            self.eps_kinetic,
            self.sqrt_eps_j_l1,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// All row quantities at one state. `eps_kinetic` is
/// `epsilon sum_i w_i |xi_i - v(h_i)|^2`, with `v = 0` when no field is given.
pub fn observables(
    s: &SprayState,
    k: &CouplingParams,
    v: Option<&dyn ReferenceField>,
) -> DiagnosticsRow {
    let mut j = CompensatedSum::default();
    for a in s.spray.atoms() {
        j.add(a.weight * a.xi.norm());
    }
    let kinetic = match v {
        Some(v) => 2.0 * kinetic_half(s, k, |x| v.velocity(x)),
        None => 2.0 * kinetic_half(s, k, |_| Vec2::ZERO),
    };
    DiagnosticsRow {
        time: s.time,
        hamiltonian: hamiltonian(s, k),
        circ_pos: s.vortices.positive_mass(),
        circ_neg: s.vortices.negative_mass(),
        spray_mass: s.spray.mass(),
        m2: s.spray.kinetic_moment(2.0),
        eps_kinetic: kinetic,
        sqrt_eps_j_l1: k.epsilon().sqrt() * j.value(),
    }
}
