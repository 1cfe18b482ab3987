//! Primal network simplex for the balanced transportation problem.
//!
//! Sources `0..n`, sinks `n..n+m`, and an artificial root `n+m` joined to
//! every node by an artificial arc. The initial basis routes every supply
//! through the root; it is strongly feasible, and the leaving arc is chosen
//! by Cunningham's rule (last blocking arc of the cycle oriented along the
//! entering arc, starting at the apex), which keeps it strongly feasible and
//! rules out cycling on degenerate pivots.
//!
//! All arcs are uncapacitated, so nonbasic arcs carry zero flow and only the
//! basic (tree) flows are stored, one per non-root node.

use super::TransportError;

/// Cost matrices up to this many entries are cached.
const COST_CACHE_LIMIT: usize = 1 << 24;

/// Entering threshold, relative to the largest arc cost.
const PIVOT_TOL: f64 = 1e-13;

/// Complementary slackness tolerance for the final certificate, relative to
/// the largest arc cost.
pub(crate) const CERT_TOL: f64 = 1e-12;

pub(crate) struct Solution {
    /// `(source, sink, mass)` with mass > 0.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    /// Dual potentials of sources and sinks; `pot_sink[j] - pot_source[i] <= c(i, j)`.
    #[cfg_attr(not(test), allow(dead_code))]
    pub pot_source: Vec<f64>,
    pub pot_sink: Vec<f64>,
}

enum Costs<'a> {
    Cached(Vec<f64>),
    Lazy(&'a dyn Fn(usize, usize) -> f64),
}

struct Solver<'a> {
    n: usize,
    m: usize,
    root: usize,
    costs: Costs<'a>,
    art_cost: f64,
    parent: Vec<usize>,
    pred_arc: Vec<usize>,
    /// Tree arc of the node points towards its parent.
    up: Vec<bool>,
    flow: Vec<f64>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    children: Vec<Vec<usize>>,
    in_tree: Vec<bool>,
    stack: Vec<usize>,
}

impl<'a> Solver<'a> {
    #[inline]
    fn n_real(&self) -> usize {
        self.n * self.m
    }

    #[inline]
    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.n_real() {
            match &self.costs {
                Costs::Cached(c) => c[arc],
                Costs::Lazy(f) => f(arc / self.m, arc % self.m),
            }
        } else {
            self.art_cost
        }
    }

    #[inline]
    fn ends(&self, arc: usize) -> (usize, usize) {
        let nr = self.n_real();
        if arc < nr {
            (arc / self.m, self.n + arc % self.m)
        } else {
            let v = arc - nr;
            if v < self.n {
                (v, self.root)
            } else {
                (self.root, v)
            }
        }
    }

    #[inline]
    fn reduced_cost(&self, arc: usize) -> f64 {
        let (t, h) = self.ends(arc);
        self.arc_cost(arc) + self.pot[t] - self.pot[h]
    }

    /// Block-search pricing starting at `*next`; returns the most negative
    /// arc of the first block that contains an improving arc.
    fn find_entering(&self, next: &mut usize, block: usize, tol: f64) -> Option<usize> {
        let total = self.in_tree.len();
        let mut best = None;
        let mut best_rc = -tol;
        let mut scanned_in_block = 0;
        let mut a = *next;
        for _ in 0..total {
            if !self.in_tree[a] {
                let rc = self.reduced_cost(a);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(a);
                }
            }
            a += 1;
            if a == total {
                a = 0;
            }
            scanned_in_block += 1;
            if scanned_in_block == block {
                if best.is_some() {
                    *next = a;
                    return best;
                }
                scanned_in_block = 0;
            }
        }
        *next = a;
        best
    }

    fn pivot(&mut self, entering: usize) {
        let (u, v) = self.ends(entering);

        let mut a = u;
        let mut b = v;
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        let join = a;

        // Leaving arc, identified by its child node.
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        let mut leaving_on_u_side = true;
        let mut x = u;
        while x != join {
            if self.up[x] && self.flow[x] < theta {
                theta = self.flow[x];
                leaving = x;
            }
            x = self.parent[x];
        }
        x = v;
        while x != join {
            if !self.up[x] && self.flow[x] <= theta {
                theta = self.flow[x];
                leaving = x;
                leaving_on_u_side = false;
            }
            x = self.parent[x];
        }
        debug_assert!(
            leaving != usize::MAX,
            "uncapacitated cycle without a blocking arc"
        );

        if theta > 0.0 {
            x = u;
            while x != join {
                if self.up[x] {
                    self.flow[x] -= theta;
                } else {
                    self.flow[x] += theta;
                }
                x = self.parent[x];
            }
            x = v;
            while x != join {
                if self.up[x] {
                    self.flow[x] += theta;
                } else {
                    self.flow[x] -= theta;
                }
                x = self.parent[x];
            }
        }

        self.in_tree[self.pred_arc[leaving]] = false;
        self.in_tree[entering] = true;

        // Re-hang the cut subtree below the other endpoint of the entering arc.
        let (first, new_parent, first_up) = if leaving_on_u_side {
            (u, v, true)
        } else {
            (v, u, false)
        };
        let mut node = first;
        let mut par = new_parent;
        let mut arc = entering;
        let mut arc_up = first_up;
        let mut fl = theta;
        loop {
            let old_parent = self.parent[node];
            let old_arc = self.pred_arc[node];
            let old_up = self.up[node];
            let old_flow = self.flow[node];

            remove_child(&mut self.children[old_parent], node);
            self.children[par].push(node);
            self.parent[node] = par;
            self.pred_arc[node] = arc;
            self.up[node] = arc_up;
            self.flow[node] = fl;

            if node == leaving {
                break;
            }
            par = node;
            node = old_parent;
            arc = old_arc;
            arc_up = !old_up;
            fl = old_flow;
        }

        self.refresh_subtree(first);
    }

    fn refresh_subtree(&mut self, top: usize) {
        self.stack.clear();
        self.stack.push(top);
        while let Some(x) = self.stack.pop() {
            let p = self.parent[x];
            let c = self.arc_cost(self.pred_arc[x]);
            self.depth[x] = self.depth[p] + 1;
            self.pot[x] = if self.up[x] {
                self.pot[p] - c
            } else {
                self.pot[p] + c
            };
            for &ch in &self.children[x] {
                self.stack.push(ch);
            }
        }
    }
}

fn remove_child(list: &mut Vec<usize>, node: usize) {
    if let Some(i) = list.iter().position(|&c| c == node) {
        list.swap_remove(i);
    }
}

/// Solves `min sum c(i,j) x_ij` subject to row sums `supply` and column sums
/// `demand`. Costs must be finite and nonnegative; supplies and demands
/// positive with (numerically) equal totals.
pub(crate) fn solve(
    supply: &[f64],
    demand: &[f64],
    cost: &dyn Fn(usize, usize) -> f64,
) -> Result<Solution, TransportError> {
    let n = supply.len();
    let m = demand.len();
    if n == 0 || m == 0 {
        return Err(TransportError::Empty);
    }
    let n_real = n * m;

    let costs = if n_real <= COST_CACHE_LIMIT {
        let mut c = Vec::with_capacity(n_real);
        for i in 0..n {
            for j in 0..m {
                c.push(cost(i, j));
            }
        }
        Costs::Cached(c)
    } else {
        Costs::Lazy(cost)
    };
    let mut max_cost: f64 = 0.0;
    match &costs {
        Costs::Cached(c) => {
            for &x in c {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(TransportError::InvalidCost(x));
                }
                max_cost = max_cost.max(x);
            }
        }
        Costs::Lazy(f) => {
            for i in 0..n {
                for j in 0..m {
                    let x = f(i, j);
                    if !(x.is_finite() && x >= 0.0) {
                        return Err(TransportError::InvalidCost(x));
                    }
                    max_cost = max_cost.max(x);
                }
            }
        }
    }

    if max_cost == 0.0 {
        return Ok(north_west_corner(supply, demand));
    }

    let root = n + m;
    let nodes = n + m + 1;
    // Any source-root-sink detour costs 2 * art_cost > max_cost >= c(i, j),
    // so the direct arc always beats it.
    let art_cost = max_cost;
    let mut s = Solver {
        n,
        m,
        root,
        costs,
        art_cost,
        parent: vec![root; nodes],
        pred_arc: vec![usize::MAX; nodes],
        up: vec![false; nodes],
        flow: vec![0.0; nodes],
        depth: vec![1; nodes],
        pot: vec![0.0; nodes],
        children: vec![Vec::new(); nodes],
        in_tree: vec![false; n_real + n + m],
        stack: Vec::new(),
    };
    s.depth[root] = 0;
    s.children[root] = (0..n + m).collect();
    for v in 0..n + m {
        let arc = n_real + v;
        s.pred_arc[v] = arc;
        s.in_tree[arc] = true;
        if v < n {
            s.up[v] = true;
            s.flow[v] = supply[v];
            s.pot[v] = -art_cost;
        } else {
            s.up[v] = false;
            s.flow[v] = demand[v - n];
            s.pot[v] = art_cost;
        }
    }

    let total_arcs = s.in_tree.len();
    let block = ((total_arcs as f64).sqrt() as usize)
        .max(10)
        .min(total_arcs);
    let tol = PIVOT_TOL * max_cost;
    let max_pivots = 50 * total_arcs + 10_000;
    let mut next = 0;
    let mut pivots = 0;
    while let Some(a) = s.find_entering(&mut next, block, tol) {
        s.pivot(a);
        pivots += 1;
        if pivots > max_pivots {
            return Err(TransportError::SolverStalled { pivots });
        }
    }

    // Certificate: complementary slackness within CERT_TOL * max_cost.
    let cert = CERT_TOL * max_cost;
    for a in 0..total_arcs {
        let rc = s.reduced_cost(a);
        if s.in_tree[a] {
            if rc.abs() > cert {
                return Err(TransportError::Certificate { reduced_cost: rc });
            }
        } else if rc < -cert {
            return Err(TransportError::Certificate { reduced_cost: rc });
        }
    }

    let mut flows = Vec::new();
    let mut cost_sum = crate::geometry::CompensatedSum::default();
    for v in 0..n + m {
        let arc = s.pred_arc[v];
        if arc < n_real && s.flow[v] > 0.0 {
            let (i, j) = (arc / m, arc % m);
            flows.push((i, j, s.flow[v]));
            cost_sum.add(s.flow[v] * s.arc_cost(arc));
        }
    }
    flows.sort_by_key(|f| (f.0, f.1));

    Ok(Solution {
        flows,
        cost: cost_sum.value(),
        pot_source: s.pot[..n].to_vec(),
        pot_sink: s.pot[n..n + m].to_vec(),
    })
}

/// Any feasible plan is optimal when all costs vanish.
fn north_west_corner(supply: &[f64], demand: &[f64]) -> Solution {
    let mut flows = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut rs = supply[0];
    let mut rd = demand[0];
    loop {
        let f = rs.min(rd);
        if f > 0.0 {
            flows.push((i, j, f));
        }
        rs -= f;
        rd -= f;
        if rs <= rd {
            i += 1;
            if i == supply.len() {
                break;
            }
            rs = supply[i];
        } else {
            j += 1;
            if j == demand.len() {
                break;
            }
            rd = demand[j];
        }
    }
    Solution {
        flows,
        cost: 0.0,
        pot_source: vec![0.0; supply.len()],
        pot_sink: vec![0.0; demand.len()],
    }
}
