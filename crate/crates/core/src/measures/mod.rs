//! Discrete signed measures on the plane and positive measures on phase space.

pub mod snapshot;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{Vec2, Window};
use crate::rng::stream_rng;

/// Quadrature refinement factor used for the reference masses in
/// [`discretize_vorticity`].
pub const REFERENCE_REFINEMENT: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("atom {index} has a non-finite coordinate or weight")]
    NonFinite { index: usize },
    #[error("phase atom {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("discretization failure: the {sign} part of the vorticity has mass {reference} but no grid cell captured it")]
    DiscretizationFailure { sign: &'static str, reference: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Weighted point of a signed measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedAtom {
    pub pos: Vec2,
    pub weight: f64,
}

impl SignedAtom {
    pub fn new(pos: Vec2, weight: f64) -> Self {
        SignedAtom { pos, weight }
    }
}

/// Finite signed measure `sum_i w_i delta_{x_i}` with every `w_i != 0`.
///
/// Atoms sharing a position are kept separate; see [`SignedAtomCloud::merged`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignedAtomCloud {
    atoms: Vec<SignedAtom>,
}

impl SignedAtomCloud {
    pub fn empty() -> Self {
        SignedAtomCloud { atoms: Vec::new() }
    }

    /// Builds a cloud, dropping zero-weight atoms.
    pub fn new(atoms: Vec<SignedAtom>) -> Result<Self, MeasureError> {
        for (index, a) in atoms.iter().enumerate() {
            if !(a.pos.is_finite() && a.weight.is_finite()) {
                return Err(MeasureError::NonFinite { index });
            }
        }
        Ok(SignedAtomCloud {
            atoms: atoms.into_iter().filter(|a| a.weight != 0.0).collect(),
        })
    }

    pub fn from_pairs<I: IntoIterator<Item = (Vec2, f64)>>(pairs: I) -> Result<Self, MeasureError> {
        Self::new(
            pairs
                .into_iter()
                .map(|(p, w)| SignedAtom::new(p, w))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[SignedAtom] {
        &self.atoms
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [SignedAtom] {
        &mut self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.atoms.iter().map(|a| a.pos)
    }

    /// Signed total `sum w_i`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `nu^+(R^2)`.
    pub fn positive_mass(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.weight)
            .sum()
    }

    /// `nu^-(R^2)`, as a nonnegative number.
    pub fn negative_mass(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.weight < 0.0)
            .map(|a| -a.weight)
            .sum()
    }

    /// `|nu|(R^2)`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.atoms.iter().all(|a| a.weight > 0.0)
    }

    /// Jordan decomposition `(nu^+, nu^-)`; both parts carry positive weights.
    pub fn jordan(&self) -> (SignedAtomCloud, SignedAtomCloud) {
        let (pos, neg): (Vec<SignedAtom>, Vec<SignedAtom>) =
            self.atoms.iter().partition(|a| a.weight > 0.0);
        let neg = neg
            .into_iter()
            .map(|a| SignedAtom::new(a.pos, -a.weight))
            .collect();
        (
            SignedAtomCloud { atoms: pos },
            SignedAtomCloud { atoms: neg },
        )
    }

    /// Pushforward `tau_# nu`: positions mapped, weights untouched.
    pub fn pushforward<F: FnMut(Vec2) -> Vec2>(&self, mut map: F) -> SignedAtomCloud {
        SignedAtomCloud {
            atoms: self
                .atoms
                .iter()
                .map(|a| SignedAtom::new(map(a.pos), a.weight))
                .collect(),
        }
    }

    /// Measure sum; atoms of `self` come first.
    pub fn sum(&self, other: &SignedAtomCloud) -> SignedAtomCloud {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        SignedAtomCloud { atoms }
    }

    pub fn negated(&self) -> SignedAtomCloud {
        SignedAtomCloud {
            atoms: self
                .atoms
                .iter()
                .map(|a| SignedAtom::new(a.pos, -a.weight))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> SignedAtomCloud {
        SignedAtomCloud {
            atoms: self
                .atoms
                .iter()
                .map(|a| SignedAtom::new(a.pos, a.weight * factor))
                .filter(|a| a.weight != 0.0)
                .collect(),
        }
    }

    /// Merges atoms at bitwise-identical positions, keeping first-occurrence
    /// order, and drops sites whose weights cancel exactly.
    pub fn merged(&self) -> SignedAtomCloud {
        let mut index: std::collections::HashMap<(u64, u64), usize> = Default::default();
        let mut out: Vec<SignedAtom> = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            // normalize -0.0 so that it merges with +0.0
            let key = ((a.pos.x + 0.0).to_bits(), (a.pos.y + 0.0).to_bits());
            match index.get(&key) {
                Some(&i) => out[i].weight += a.weight,
                None => {
                    index.insert(key, out.len());
                    out.push(*a);
                }
            }
        }
        SignedAtomCloud {
            atoms: out.into_iter().filter(|a| a.weight != 0.0).collect(),
        }
    }
}

/// Jordan decomposition, see [`SignedAtomCloud::jordan`].
pub fn jordan(c: &SignedAtomCloud) -> (SignedAtomCloud, SignedAtomCloud) {
    c.jordan()
}

/// `|a^+ - b^+| <= tol` and `|a^- - b^-| <= tol`.
pub fn compatible(a: &SignedAtomCloud, b: &SignedAtomCloud, tol: f64) -> bool {
    (a.positive_mass() - b.positive_mass()).abs() <= tol
        && (a.negative_mass() - b.negative_mass()).abs() <= tol
}

pub fn pushforward<F: FnMut(Vec2) -> Vec2>(c: &SignedAtomCloud, map: F) -> SignedAtomCloud {
    c.pushforward(map)
}

/// Weighted point of the spray: position `x`, velocity `xi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseAtom {
    pub x: Vec2,
    pub xi: Vec2,
    pub weight: f64,
}

impl PhaseAtom {
    pub fn new(x: Vec2, xi: Vec2, weight: f64) -> Self {
        PhaseAtom { x, xi, weight }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x.x, self.x.y, self.xi.x, self.xi.y]
    }
}

/// Finite positive measure on position x velocity space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseAtomCloud {
    atoms: Vec<PhaseAtom>,
}

impl PhaseAtomCloud {
    pub fn empty() -> Self {
        PhaseAtomCloud { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<PhaseAtom>) -> Result<Self, MeasureError> {
        for (index, a) in atoms.iter().enumerate() {
            if !(a.x.is_finite() && a.xi.is_finite() && a.weight.is_finite()) {
                return Err(MeasureError::NonFinite { index });
            }
            if a.weight <= 0.0 {
                return Err(MeasureError::NonPositiveWeight {
                    index,
                    weight: a.weight,
                });
            }
        }
        Ok(PhaseAtomCloud { atoms })
    }

    pub fn atoms(&self) -> &[PhaseAtom] {
        &self.atoms
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [PhaseAtom] {
        &mut self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Spatial marginal `rho` (positions, weights kept).
    pub fn spatial_marginal(&self) -> SignedAtomCloud {
        SignedAtomCloud {
            atoms: self
                .atoms
                .iter()
                .map(|a| SignedAtom::new(a.x, a.weight))
                .collect(),
        }
    }

    /// `(rho, j)` with `j` kept atomic as `(x_i, w_i xi_i)` pairs.
    pub fn marginals(&self) -> (SignedAtomCloud, Vec<(Vec2, Vec2)>) {
        let j = self.atoms.iter().map(|a| (a.x, a.xi * a.weight)).collect();
        (self.spatial_marginal(), j)
    }

    /// `M_alpha = sum w_i |xi_i|^alpha`.
    pub fn kinetic_moment(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            return self.mass();
        }
        self.atoms
            .iter()
            .map(|a| a.weight * a.xi.norm_sq().powf(0.5 * alpha))
            .sum()
    }

    pub fn pushforward<F: FnMut(Vec2, Vec2) -> (Vec2, Vec2)>(&self, mut map: F) -> PhaseAtomCloud {
        PhaseAtomCloud {
            atoms: self
                .atoms
                .iter()
                .map(|a| {
                    let (x, xi) = map(a.x, a.xi);
                    PhaseAtom::new(x, xi, a.weight)
                })
                .collect(),
        }
    }

    pub fn sum(&self, other: &PhaseAtomCloud) -> PhaseAtomCloud {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        PhaseAtomCloud { atoms }
    }
}

pub fn marginals(f: &PhaseAtomCloud) -> (SignedAtomCloud, Vec<(Vec2, Vec2)>) {
    f.marginals()
}

pub fn kinetic_moment(f: &PhaseAtomCloud, alpha: f64) -> f64 {
    f.kinetic_moment(alpha)
}

/// Sums atomic current pairs that share a site.
pub fn aggregate_current(j: &[(Vec2, Vec2)]) -> Vec<(Vec2, Vec2)> {
    let mut out: Vec<(Vec2, Vec2)> = Vec::new();
    for &(x, v) in j {
        match out.iter_mut().find(|(y, _)| *y == x) {
            Some((_, acc)) => *acc += v,
            None => out.push((x, v)),
        }
    }
    out
}

/// Midpoint-quadrature discretization of a vorticity field on `window`.
///
/// Cell weights `alpha_i = omega0(x_i) |cell|` are rescaled per sign class so
/// that the positive and negative parts carry exactly the reference masses,
/// which are computed by midpoint quadrature at [`REFERENCE_REFINEMENT`] times
/// the resolution. Zero-weight cells are dropped.
pub fn discretize_vorticity<F: Fn(Vec2) -> f64>(
    omega0: F,
    window: Window,
    n_per_side: usize,
) -> Result<SignedAtomCloud, MeasureError> {
    if n_per_side == 0 {
        return Err(MeasureError::InvalidArgument(
            "n_per_side must be >= 1".into(),
        ));
    }
    if !(window.width() > 0.0 && window.height() > 0.0) {
        return Err(MeasureError::InvalidArgument(
            "window must have positive area".into(),
        ));
    }

    let (fine, fine_area) = window.cell_midpoints(REFERENCE_REFINEMENT * n_per_side);
    let (mut ref_pos, mut ref_neg) = (0.0, 0.0);
    for p in fine {
        let w = omega0(p) * fine_area;
        if !w.is_finite() {
            return Err(MeasureError::InvalidArgument(
                "vorticity is not finite on the window".into(),
            ));
        }
        if w > 0.0 {
            ref_pos += w;
        } else {
            ref_neg -= w;
        }
    }

    let (coarse, area) = window.cell_midpoints(n_per_side);
    let alphas: Vec<(Vec2, f64)> = coarse.into_iter().map(|p| (p, omega0(p) * area)).collect();
    let beta_pos: f64 = alphas
        .iter()
        .filter(|(_, a)| *a > 0.0)
        .map(|(_, a)| a)
        .sum();
    let beta_neg: f64 = alphas
        .iter()
        .filter(|(_, a)| *a < 0.0)
        .map(|(_, a)| -a)
        .sum();

    if beta_pos == 0.0 && ref_pos > 0.0 {
        return Err(MeasureError::DiscretizationFailure {
            sign: "positive",
            reference: ref_pos,
        });
    }
    if beta_neg == 0.0 && ref_neg > 0.0 {
        return Err(MeasureError::DiscretizationFailure {
            sign: "negative",
            reference: ref_neg,
        });
    }
    let scale_pos = if beta_pos > 0.0 {
        ref_pos / beta_pos
    } else {
        0.0
    };
    let scale_neg = if beta_neg > 0.0 {
        ref_neg / beta_neg
    } else {
        0.0
    };

    SignedAtomCloud::from_pairs(alphas.into_iter().map(|(p, a)| {
        let s = if a > 0.0 { scale_pos } else { scale_neg };
        (p, a * s)
    }))
}

/// Reference masses `(omega0^+(R^2), omega0^-(R^2))` as used by
/// [`discretize_vorticity`] at resolution `n_per_side`.
pub fn reference_masses<F: Fn(Vec2) -> f64>(
    omega0: F,
    window: Window,
    n_per_side: usize,
) -> (f64, f64) {
    let (fine, fine_area) = window.cell_midpoints(REFERENCE_REFINEMENT * n_per_side);
    let (mut pos, mut neg) = (0.0, 0.0);
    for p in fine {
        let w = omega0(p) * fine_area;
        if w > 0.0 {
            pos += w;
        } else {
            neg -= w;
        }
    }
    (pos, neg)
}

/// Law of the spray positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpatialLaw {
    Gaussian { center: Vec2, sigma: f64 },
    UniformDisk { center: Vec2, radius: f64 },
    UniformBox(Window),
}

impl SpatialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        match *self {
            SpatialLaw::Gaussian { center, sigma } => {
                let gx: f64 = StandardNormal.sample(rng);
                let gy: f64 = StandardNormal.sample(rng);
                center + Vec2::new(gx, gy) * sigma
            }
            SpatialLaw::UniformDisk { center, radius } => {
                let r = radius * rng.gen::<f64>().sqrt();
                let t = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                center + Vec2::new(r * t.cos(), r * t.sin())
            }
            SpatialLaw::UniformBox(w) => Vec2::new(
                w.min.x + w.width() * rng.gen::<f64>(),
                w.min.y + w.height() * rng.gen::<f64>(),
            ),
        }
    }
}

/// Law of the spray velocities.
#[derive(Clone, Copy)]
pub enum VelocityLaw<'a> {
    /// Monokinetic: `xi_i = v0(x_i)`.
    Field(&'a dyn Fn(Vec2) -> Vec2),
    /// Independent isotropic Gaussian velocities.
    Gaussian { mean: Vec2, sigma: f64 },
}

/// Empirical spray with `n` atoms of weight `1/n`, drawn from the stream
/// derived from `seed`.
pub fn sample_spray(
    rho0: &SpatialLaw,
    velocity: &VelocityLaw<'_>,
    n: usize,
    seed: u64,
) -> PhaseAtomCloud {
    let mut rng = stream_rng(seed, 0);
    sample_spray_with(rho0, velocity, n, &mut rng)
}

pub fn sample_spray_with(
    rho0: &SpatialLaw,
    velocity: &VelocityLaw<'_>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> PhaseAtomCloud {
    let w = 1.0 / n as f64;
    let atoms = (0..n)
        .map(|_| {
            let x = rho0.sample(rng);
            let xi = match velocity {
                VelocityLaw::Field(v0) => v0(x),
                VelocityLaw::Gaussian { mean, sigma } => {
                    let gx: f64 = StandardNormal.sample(rng);
                    let gy: f64 = StandardNormal.sample(rng);
                    *mean + Vec2::new(gx, gy) * *sigma
                }
            };
            PhaseAtom::new(x, xi, w)
        })
        .collect();
    PhaseAtomCloud { atoms }
}
