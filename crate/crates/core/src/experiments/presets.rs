//! Built-in initial data.

use serde::{Deserialize, Serialize};

use crate::dynamics::{induced_velocity, CouplingParams, SprayState};
use crate::geometry::{Vec2, Window};
use crate::measures::{
    discretize_vorticity, sample_spray_with, MeasureError, PhaseAtom, PhaseAtomCloud,
    SignedAtomCloud, SpatialLaw, VelocityLaw,
};
use crate::rng::{cell_stream, stream_rng};

/// Width of the Gaussian bumps used by the presets.
pub const BUMP_SIGMA: f64 = 0.5;

/// Stream tags, so that vortex and spray draws of one cell never overlap.
pub const VORTEX_TAG: u32 = 1;
pub const SPRAY_TAG: u32 = 2;
pub const PERTURB_TAG: u32 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VortexPreset {
    None,
    /// Gaussian bump of mass 1, cut to the square of half-width `5 sigma`,
    /// on a `round(sqrt N)^2` midpoint grid.
    #[default]
    Gaussian,
    /// Opposite Gaussian bumps at `(-0.6, 0)` and `(0.6, 0)`, gridded.
    Dipole,
    /// `N` equal vortices of total mass 1 on the unit circle.
    Ring,
    /// Two unit vortices at `(-1, 0)` and `(1, 0)`; ignores `N`.
    Pair,
    /// `N` positions drawn from the Gaussian bump with alternating signs,
    /// each of weight `1/N`.
    Scattered,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SprayPreset {
    None,
    /// Gaussian positions at rest.
    Rest,
    /// Gaussian positions, `xi = omega x^perp`.
    #[default]
    Rotation,
    /// Gaussian positions, `xi = (omega, 0)`.
    Uniform,
    /// Gaussian positions, Gaussian velocities of spread `omega`.
    Thermal,
    /// Gaussian positions, `xi` equal to the induced velocity at `x`.
    WellPrepared,
    /// One atom at the origin with `xi = (1, 0)`; ignores `M`.
    Circle,
}

fn gaussian_density(center: Vec2) -> impl Fn(Vec2) -> f64 {
    let s2 = BUMP_SIGMA * BUMP_SIGMA;
    move |x: Vec2| (-(x - center).norm_sq() / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
}

/// Mass of a centered Gaussian bump of width [`BUMP_SIGMA`] on `[a, b]`.
fn normal_mass(a: f64, b: f64) -> f64 {
    let z = BUMP_SIGMA * std::f64::consts::SQRT_2;
    0.5 * (libm::erf(b / z) - libm::erf(a / z))
}

/// Scales each sign class to the given exact mass, so that clouds of every
/// resolution are compatible.
fn rescale(c: &mut SignedAtomCloud, pos: f64, neg: f64) {
    let (p, n) = (c.positive_mass(), c.negative_mass());
    for a in c.atoms_mut() {
        if a.weight > 0.0 {
            a.weight *= pos / p;
        } else {
            a.weight *= neg / n;
        }
    }
}

/// Side of the grid used for `n` gridded vortices.
pub fn grid_side(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

/// Initial data built from presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setup {
    pub vortex: VortexPreset,
    pub spray: SprayPreset,
    pub n: usize,
    pub m: usize,
    pub omega: f64,
    pub spray_mass: f64,
}

impl Setup {
    pub fn from_config(cfg: &crate::config::SimConfig) -> Self {
        Setup {
            vortex: cfg.vortex_preset,
            spray: cfg.spray_preset,
            n: cfg.n,
            m: cfg.m,
            omega: cfg.omega,
            spray_mass: cfg.spray_mass,
        }
    }

    pub fn vortices(&self, seed: u64, cell: u32) -> Result<SignedAtomCloud, MeasureError> {
        if self.n == 0 && self.vortex != VortexPreset::Pair {
            return Ok(SignedAtomCloud::empty());
        }
        let half = BUMP_SIGMA * 5.0;
        match self.vortex {
            VortexPreset::None => Ok(SignedAtomCloud::empty()),
            VortexPreset::Gaussian => {
                let mut c = discretize_vorticity(
                    gaussian_density(Vec2::ZERO),
                    Window::centered(half),
                    grid_side(self.n),
                )?;
                let m = normal_mass(-half, half);
                rescale(&mut c, m * m, 0.0);
                Ok(c)
            }
            VortexPreset::Dipole => {
                let p = gaussian_density(Vec2::new(-0.6, 0.0));
                let q = gaussian_density(Vec2::new(0.6, 0.0));
                let w = Window::new(Vec2::new(-0.6 - half, -half), Vec2::new(0.6 + half, half));
                let mut c = discretize_vorticity(|x| p(x) - q(x), w, grid_side(self.n))?;
                let lobe = normal_mass(-half, 0.6) - normal_mass(-half - 1.2, -0.6);
                let m = lobe * normal_mass(-half, half);
                rescale(&mut c, m, m);
                Ok(c)
            }
            VortexPreset::Ring => {
                let w = 1.0 / self.n as f64;
                SignedAtomCloud::from_pairs((0..self.n).map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / self.n as f64;
                    (Vec2::new(t.cos(), t.sin()), w)
                }))
            }
            VortexPreset::Pair => SignedAtomCloud::from_pairs([
                (Vec2::new(-1.0, 0.0), 1.0),
                (Vec2::new(1.0, 0.0), 1.0),
            ]),
            VortexPreset::Scattered => {
                let mut rng = stream_rng(seed, cell_stream(VORTEX_TAG, cell));
                let law = SpatialLaw::Gaussian {
                    center: Vec2::ZERO,
                    sigma: BUMP_SIGMA,
                };
                let w = 1.0 / self.n as f64;
                SignedAtomCloud::from_pairs(
                    (0..self.n).map(|i| (law.sample(&mut rng), if i % 2 == 0 { w } else { -w })),
                )
            }
        }
    }

    /// Full initial state; well-prepared velocities are taken from the
    /// velocity induced by every atom, spray included.
    pub fn build(
        &self,
        k: &CouplingParams,
        seed: u64,
        cell: u32,
    ) -> Result<SprayState, MeasureError> {
        let vortices = self.vortices(seed, cell)?;
        let law = SpatialLaw::Gaussian {
            center: Vec2::ZERO,
            sigma: BUMP_SIGMA,
        };
        let mut rng = stream_rng(seed, cell_stream(SPRAY_TAG, cell));
        let omega = self.omega;
        let rotation = move |x: Vec2| x.perp() * omega;
        let uniform = move |_: Vec2| Vec2::new(omega, 0.0);
        let zero = |_: Vec2| Vec2::ZERO;
        let raw = match self.spray {
            SprayPreset::None => PhaseAtomCloud::empty(),
            SprayPreset::Circle => {
                PhaseAtomCloud::new(vec![PhaseAtom::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0)])?
            }
            _ if self.m == 0 => PhaseAtomCloud::empty(),
            SprayPreset::Rest | SprayPreset::WellPrepared => {
                sample_spray_with(&law, &VelocityLaw::Field(&zero), self.m, &mut rng)
            }
            SprayPreset::Rotation => {
                sample_spray_with(&law, &VelocityLaw::Field(&rotation), self.m, &mut rng)
            }
            SprayPreset::Uniform => {
                sample_spray_with(&law, &VelocityLaw::Field(&uniform), self.m, &mut rng)
            }
            SprayPreset::Thermal => sample_spray_with(
                &law,
                &VelocityLaw::Gaussian {
                    mean: Vec2::ZERO,
                    sigma: omega.abs(),
                },
                self.m,
                &mut rng,
            ),
        };
        let spray = if self.spray == SprayPreset::Circle {
            raw
        } else {
            let w = self.spray_mass / raw.len().max(1) as f64;
            PhaseAtomCloud::new(
                raw.atoms()
                    .iter()
                    .map(|a| PhaseAtom::new(a.x, a.xi, w))
                    .collect(),
            )?
        };
        let mut state = SprayState::new(vortices, spray);
        if self.spray == SprayPreset::WellPrepared {
            well_prepare(&mut state, k);
        }
        Ok(state)
    }
}

/// Sets every spray velocity to the velocity induced at its position.
pub fn well_prepare(s: &mut SprayState, k: &CouplingParams) {
    let h: Vec<Vec2> = s.spray.atoms().iter().map(|a| a.x).collect();
    let u = induced_velocity(s, &h, k);
    s.spray = PhaseAtomCloud::new(
        s.spray
            .atoms()
            .iter()
            .zip(u)
            .map(|(a, ui)| PhaseAtom::new(a.x, ui, a.weight))
            .collect(),
    )
    .expect("finite velocities");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(vortex: VortexPreset, spray: SprayPreset, n: usize, m: usize) -> Setup {
        Setup {
            vortex,
            spray,
            n,
            m,
            omega: 0.5,
            spray_mass: 1.0,
        }
    }

    #[test]
    fn gaussian_preset_mass_is_resolution_free() {
        let k = CouplingParams::new(0.5, 1.0).unwrap();
        for n in [32, 64, 256] {
            let s = setup(VortexPreset::Gaussian, SprayPreset::Rotation, n, n)
                .build(&k, 1, 0)
                .unwrap();
            assert_eq!(s.vortices.len(), grid_side(n) * grid_side(n));
            assert!((s.vortices.mass() - normal_mass(-2.5, 2.5).powi(2)).abs() < 1e-14);
            assert_eq!(s.spray.len(), n);
            assert!((s.spray.mass() - 1.0).abs() < 1e-12);
            for a in s.spray.atoms() {
                assert_eq!(a.xi, a.x.perp() * 0.5);
            }
        }
    }

    #[test]
    fn presets_are_deterministic_per_cell() {
        let k = CouplingParams::new(0.5, 1.0).unwrap();
        let st = setup(VortexPreset::Scattered, SprayPreset::Thermal, 16, 16);
        assert_eq!(st.build(&k, 9, 3).unwrap(), st.build(&k, 9, 3).unwrap());
        assert_ne!(st.build(&k, 9, 3).unwrap(), st.build(&k, 9, 4).unwrap());
        let v = st.build(&k, 9, 3).unwrap().vortices;
        assert!(v.mass().abs() < 1e-15);
    }

    #[test]
    fn well_prepared_spray_follows_the_flow() {
        let k = CouplingParams::new(0.5, 0.1).unwrap();
        let s = setup(VortexPreset::Gaussian, SprayPreset::WellPrepared, 16, 16)
            .build(&k, 2, 0)
            .unwrap();
        let h: Vec<Vec2> = s.spray.atoms().iter().map(|a| a.x).collect();
        let u = induced_velocity(&s, &h, &k);
        for (a, ui) in s.spray.atoms().iter().zip(u) {
            assert_eq!(a.xi, ui);
        }
    }

    #[test]
    fn dipole_is_balanced() {
        let k = CouplingParams::new(0.5, 1.0).unwrap();
        let s = setup(VortexPreset::Dipole, SprayPreset::None, 10_000, 0)
            .build(&k, 0, 0)
            .unwrap();
        assert!(s.vortices.mass().abs() < 1e-12);
        let small = setup(VortexPreset::Dipole, SprayPreset::None, 64, 0)
            .build(&k, 0, 0)
            .unwrap();
        assert!((small.vortices.positive_mass() - s.vortices.positive_mass()).abs() < 1e-14);
        // positive part of p - q is P(|Z| < 0.6 / sigma) for a standard normal Z
        assert!((s.vortices.positive_mass() - 0.769_860_659_556_583).abs() < 1e-3);
    }
}
