//! Exact Wasserstein distances between discrete measures.
//!
//! Positive measures are compared by solving the transportation problem to
//! optimality; signed measures through their Jordan decompositions.

mod simplex;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Vec2;
use crate::measures::{PhaseAtomCloud, SignedAtomCloud};

/// Relative mass tolerance for compatibility checks.
pub const MASS_TOL: f64 = 1e-9;

/// Largest combined side accepted by [`brute_force_w1`].
pub const ORACLE_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("empty measure")]
    Empty,
    #[error("measure has a negative atom where a positive measure is required")]
    NotPositive,
    #[error("incompatible masses {left} and {right}")]
    Incompatible { left: f64, right: f64 },
    #[error("invalid transport cost {0}")]
    InvalidCost(f64),
    #[error("solver exceeded {pivots} pivots")]
    SolverStalled { pivots: usize },
    #[error("optimality certificate failed (reduced cost {reduced_cost})")]
    Certificate { reduced_cost: f64 },
    #[error("outside oracle scope: {0}")]
    OracleScope(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Order {
    W1,
    W2,
}

impl Order {
    pub fn p(self) -> u32 {
        match self {
            Order::W1 => 1,
            Order::W2 => 2,
        }
    }

    #[inline]
    fn cost_of_distance(self, d: f64) -> f64 {
        match self {
            Order::W1 => d,
            Order::W2 => d * d,
        }
    }

    #[inline]
    fn cost_of_sq(self, d2: f64) -> f64 {
        match self {
            Order::W1 => d2.sqrt(),
            Order::W2 => d2,
        }
    }

    fn root(self, cost: f64) -> f64 {
        match self {
            Order::W1 => cost,
            Order::W2 => cost.sqrt(),
        }
    }
}

/// An optimal coupling. `cost` is the minimised sum of `mass * |x - y|^p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    pub pairs: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub order: Order,
}

impl TransportPlan {
    pub fn distance(&self) -> f64 {
        self.order.root(self.cost)
    }
}

fn check_masses(left: f64, right: f64, scale: f64) -> Result<(), TransportError> {
    if (left - right).abs() <= MASS_TOL * scale {
        Ok(())
    } else {
        Err(TransportError::Incompatible { left, right })
    }
}

fn weights_of_positive(c: &SignedAtomCloud) -> Result<Vec<f64>, TransportError> {
    if c.is_empty() {
        return Err(TransportError::Empty);
    }
    if !c.is_positive() {
        return Err(TransportError::NotPositive);
    }
    Ok(c.atoms().iter().map(|a| a.weight).collect())
}

/// Solves a positive transport problem between point sets of any dimension
/// given by a squared-distance function.
fn solve_points(
    supply: &[f64],
    demand: &[f64],
    order: Order,
    dist_sq: &dyn Fn(usize, usize) -> f64,
) -> Result<TransportPlan, TransportError> {
    let cost = |i: usize, j: usize| order.cost_of_sq(dist_sq(i, j));
    let sol = simplex::solve(supply, demand, &cost)?;
    Ok(TransportPlan {
        pairs: sol.flows,
        cost: sol.cost,
        order,
    })
}

/// Wasserstein distance of order `p` between positive clouds of equal mass.
pub fn w_p_positive(
    mu: &SignedAtomCloud,
    nu: &SignedAtomCloud,
    order: Order,
) -> Result<(f64, TransportPlan), TransportError> {
    let a = weights_of_positive(mu)?;
    let b = weights_of_positive(nu)?;
    check_masses(mu.mass(), nu.mass(), mu.mass())?;
    if mu.atoms() == nu.atoms() {
        let plan = TransportPlan {
            pairs: a.iter().enumerate().map(|(i, &w)| (i, i, w)).collect(),
            cost: 0.0,
            order,
        };
        return Ok((0.0, plan));
    }
    let xs = mu.atoms();
    let ys = nu.atoms();
    let plan = solve_points(&a, &b, order, &|i, j| (xs[i].pos - ys[j].pos).norm_sq())?;
    Ok((plan.distance(), plan))
}

/// Positive parts and negative parts must carry equal masses, up to
/// `MASS_TOL` times the larger total variation.
fn check_signed(a: &SignedAtomCloud, b: &SignedAtomCloud) -> Result<(), TransportError> {
    let tv = a.total_variation().max(b.total_variation());
    if crate::measures::compatible(a, b, MASS_TOL * tv) {
        Ok(())
    } else {
        Err(TransportError::Incompatible {
            left: a.mass(),
            right: b.mass(),
        })
    }
}

/// Wasserstein distance between two positive clouds that may be empty; both
/// empty gives zero.
fn w_p_maybe_empty(
    mu: &SignedAtomCloud,
    nu: &SignedAtomCloud,
    order: Order,
) -> Result<f64, TransportError> {
    match (mu.is_empty(), nu.is_empty()) {
        (true, true) => Ok(0.0),
        (false, false) if mu.atoms() == nu.atoms() => {
            weights_of_positive(mu)?;
            Ok(0.0)
        }
        (false, false) => {
            let a = weights_of_positive(mu)?;
            let b = weights_of_positive(nu)?;
            let xs = mu.atoms();
            let ys = nu.atoms();
            Ok(solve_points(&a, &b, order, &|i, j| (xs[i].pos - ys[j].pos).norm_sq())?.distance())
        }
        _ => Err(TransportError::Incompatible {
            left: mu.mass(),
            right: nu.mass(),
        }),
    }
}

/// `W1(a, b) = W1(a+ + b-, a- + b+)`.
pub fn w1_signed(a: &SignedAtomCloud, b: &SignedAtomCloud) -> Result<f64, TransportError> {
    check_signed(a, b)?;
    let (ap, an) = a.jordan();
    let (bp, bn) = b.jordan();
    let (left, right) = canonical_sides(ap.sum(&bn), an.sum(&bp));
    w_p_maybe_empty(&left, &right, Order::W1)
}

fn atom_key(a: &crate::measures::SignedAtom) -> (u64, u64, u64) {
    (a.pos.x.to_bits(), a.pos.y.to_bits(), a.weight.to_bits())
}

fn sorted(c: SignedAtomCloud) -> SignedAtomCloud {
    let mut atoms = c.atoms().to_vec();
    atoms.sort_by_key(atom_key);
    SignedAtomCloud::new(atoms).expect("atoms already validated")
}

/// Sorts both sides and orders the pair, so that swapping the arguments of a
/// distance yields the very same transport problem.
fn canonical_sides(l: SignedAtomCloud, r: SignedAtomCloud) -> (SignedAtomCloud, SignedAtomCloud) {
    let (l, r) = (sorted(l), sorted(r));
    let kl: Vec<_> = l.atoms().iter().map(atom_key).collect();
    let kr: Vec<_> = r.atoms().iter().map(atom_key).collect();
    if kl <= kr {
        (l, r)
    } else {
        (r, l)
    }
}

/// `W2(a, b)^2 = W2(a+, b+)^2 + W2(a-, b-)^2`.
pub fn w2_signed(a: &SignedAtomCloud, b: &SignedAtomCloud) -> Result<f64, TransportError> {
    check_signed(a, b)?;
    let (ap, an) = a.jordan();
    let (bp, bn) = b.jordan();
    let (p1, p2) = canonical_sides(ap, bp);
    let (n1, n2) = canonical_sides(an, bn);
    let plus = w_p_maybe_empty(&p1, &p2, Order::W2)?;
    let minus = w_p_maybe_empty(&n1, &n2, Order::W2)?;
    Ok(plus.hypot(minus))
}

/// W1 between positive phase-space clouds with the Euclidean norm on `(x, xi)`.
pub fn w1_phase(f: &PhaseAtomCloud, g: &PhaseAtomCloud) -> Result<f64, TransportError> {
    match (f.is_empty(), g.is_empty()) {
        (true, true) => return Ok(0.0),
        (false, false) => {}
        _ => {
            return Err(TransportError::Incompatible {
                left: f.mass(),
                right: g.mass(),
            })
        }
    }
    check_masses(f.mass(), g.mass(), f.mass().max(g.mass()))?;
    if f == g {
        return Ok(0.0);
    }
    let a: Vec<f64> = f.atoms().iter().map(|p| p.weight).collect();
    let b: Vec<f64> = g.atoms().iter().map(|p| p.weight).collect();
    let xs: Vec<[f64; 4]> = f.atoms().iter().map(|p| p.coords()).collect();
    let ys: Vec<[f64; 4]> = g.atoms().iter().map(|p| p.coords()).collect();
    let plan = solve_points(&a, &b, Order::W1, &|i, j| {
        let (x, y) = (&xs[i], &ys[j]);
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]];
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]
    })?;
    Ok(plan.distance())
}

/// Distance between vortex/spray pairs: signed W1 of the vortex parts plus
/// phase-space W1 of the sprays.
pub fn w1_pair(
    m1: (&SignedAtomCloud, &PhaseAtomCloud),
    m2: (&SignedAtomCloud, &PhaseAtomCloud),
) -> Result<f64, TransportError> {
    Ok(w1_signed(m1.0, m2.0)? + w1_phase(m1.1, m2.1)?)
}

/// A cone `sign * |x - anchor| + offset`, with `sign` in `{-1, 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cone {
    pub anchor: Vec2,
    pub offset: f64,
    pub sign: f64,
}

impl Cone {
    pub fn up(anchor: Vec2, offset: f64) -> Self {
        Cone {
            anchor,
            offset,
            sign: 1.0,
        }
    }

    pub fn down(anchor: Vec2, offset: f64) -> Self {
        Cone {
            anchor,
            offset,
            sign: -1.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        self.sign.signum() * (x - self.anchor).norm() + self.offset
    }
}

/// A test function that is 1-Lipschitz by construction.
#[derive(Clone, Debug, PartialEq)]
pub enum LipschitzTest {
    Constant(f64),
    /// Pointwise maximum of cones.
    Max(Vec<Cone>),
    /// Pointwise minimum of cones.
    Min(Vec<Cone>),
}

impl LipschitzTest {
    pub fn cone(anchor: Vec2) -> Self {
        LipschitzTest::Max(vec![Cone::up(anchor, 0.0)])
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            LipschitzTest::Constant(c) => *c,
            LipschitzTest::Max(cs) => cs
                .iter()
                .map(|c| c.eval(x))
                .fold(f64::NEG_INFINITY, f64::max),
            LipschitzTest::Min(cs) => cs.iter().map(|c| c.eval(x)).fold(f64::INFINITY, f64::min),
        }
    }
}

/// `sum_a w phi - sum_b w phi`, a lower bound for `w1_signed(a, b)`.
pub fn dual_lower_bound(a: &SignedAtomCloud, b: &SignedAtomCloud, phi: &LipschitzTest) -> f64 {
    let mut s = crate::geometry::CompensatedSum::default();
    for at in a.atoms() {
        s.add(at.weight * phi.eval(at.pos));
    }
    for at in b.atoms() {
        s.add(-at.weight * phi.eval(at.pos));
    }
    s.value()
}

/// An optimal Kantorovich potential for `w1_signed(a, b)`, built from the
/// solver's dual variables as a minimum of upward cones on the target side.
pub fn kantorovich_potential(
    a: &SignedAtomCloud,
    b: &SignedAtomCloud,
) -> Result<LipschitzTest, TransportError> {
    check_signed(a, b)?;
    let (ap, an) = a.jordan();
    let (bp, bn) = b.jordan();
    let left = ap.sum(&bn);
    let right = an.sum(&bp);
    if left.is_empty() && right.is_empty() {
        return Ok(LipschitzTest::Constant(0.0));
    }
    let sa = weights_of_positive(&left)?;
    let sb = weights_of_positive(&right)?;
    let xs = left.atoms();
    let ys = right.atoms();
    let cost = |i: usize, j: usize| (xs[i].pos - ys[j].pos).norm();
    let sol = simplex::solve(&sa, &sb, &cost)?;
    Ok(LipschitzTest::Min(
        ys.iter()
            .zip(&sol.pot_sink)
            .map(|(y, p)| Cone::up(y.pos, -p))
            .collect(),
    ))
}

/// Exact W1 by enumerating all perfect matchings; the combined positive
/// measures must consist of at most [`ORACLE_LIMIT`] atoms of one common
/// weight per side.
pub fn brute_force_w1(a: &SignedAtomCloud, b: &SignedAtomCloud) -> Result<f64, TransportError> {
    let (ap, an) = a.jordan();
    let (bp, bn) = b.jordan();
    let left = ap.sum(&bn);
    let right = an.sum(&bp);
    let n = left.len();
    if n != right.len() {
        return Err(TransportError::OracleScope(format!(
            "sides have {} and {} atoms",
            n,
            right.len()
        )));
    }
    if n > ORACLE_LIMIT {
        return Err(TransportError::OracleScope(format!(
            "{n} atoms per side exceeds {ORACLE_LIMIT}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let w = left.atoms()[0].weight;
    if left
        .atoms()
        .iter()
        .chain(right.atoms())
        .any(|x| x.weight != w)
    {
        return Err(TransportError::OracleScope(
            "atoms must share one weight".into(),
        ));
    }
    let xs: Vec<Vec2> = left.positions().collect();
    let ys: Vec<Vec2> = right.positions().collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let c: f64 = p
            .iter()
            .enumerate()
            .map(|(i, &j)| (xs[i] - ys[j]).norm())
            .sum();
        best = best.min(c);
    });
    Ok(w * best)
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Distance between 2-d points under order `p`, exposed for plan checks.
pub fn pair_cost(x: Vec2, y: Vec2, order: Order) -> f64 {
    order.cost_of_distance((x - y).norm())
}
