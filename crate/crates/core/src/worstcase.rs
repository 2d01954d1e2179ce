//! Worst-case payoffs, worst-case best replies and worst-case frontiers.
//!
//! Payoffs are affine in the uncertain parameters, so the minimum over the
//! scaled uncertainty set is attained at one of its extreme points and
//! `ρ(x) = min_v f(α_v; x)` is computed exactly by enumeration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{ActionInterval, Game, PayoffForm};
use crate::optimize::{maximize, Quadratic};
use crate::polytope::scale_uncertainty;

/// Vertices whose payoff is within this of the minimum count as active.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Options for worst-case best-reply computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplyOptions {
    /// Grid size of the initial scan.
    pub grid: usize,
    /// Golden-section tolerance on the action.
    pub tol: f64,
    /// Solve exactly when the payoff is at most quadratic in the own action.
    pub closed_form: bool,
}

impl Default for ReplyOptions {
    fn default() -> Self {
        Self {
            grid: 1025,
            tol: 1e-10,
            closed_form: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase {
    pub value: f64,
    /// Indices of the minimizing vertices.
    pub active: Vec<usize>,
}

/// Player `i`'s worst-case problem over a fixed, finite vertex set.
#[derive(Debug, Clone)]
pub struct WorstCaseProblem<'g> {
    payoff: &'g PayoffForm,
    own: usize,
    action: ActionInterval,
    vertices: Vec<Vec<f64>>,
    quadratic: bool,
}

impl<'g> WorstCaseProblem<'g> {
    /// At the level the game assigns to player `i`.
    pub fn new(game: &'g Game, i: usize) -> Result<Self> {
        let delta = game.player(i)?.delta;
        Self::at_level(game, i, delta)
    }

    pub fn at_level(game: &'g Game, i: usize, delta: f64) -> Result<Self> {
        let p = game.player(i)?;
        let vertices = scale_uncertainty(&p.uncertainty, delta)?.0;
        Self::with_vertices(game, i, vertices)
    }

    /// The nominal problem: the single point `α⁰`.
    pub fn nominal(game: &'g Game, i: usize) -> Result<Self> {
        let p = game.player(i)?;
        Self::with_vertices(game, i, vec![p.uncertainty.nominal().to_vec()])
    }

    pub fn with_vertices(game: &'g Game, i: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        let p = game.player(i)?;
        Ok(Self {
            payoff: &p.payoff,
            own: i,
            action: p.action,
            quadratic: p.payoff.degree_in(i).is_some_and(|d| d <= 2),
            vertices,
        })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn action(&self) -> ActionInterval {
        self.action
    }

    /// Payoff at every vertex.
    pub fn vertex_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let slice = self.payoff.slice(x)?;
        Ok(self.vertices.iter().map(|a| slice.at(a)).collect())
    }

    pub fn rho(&self, x: &[f64]) -> Result<f64> {
        let slice = self.payoff.slice(x)?;
        Ok(self
            .vertices
            .iter()
            .map(|a| slice.at(a))
            .fold(f64::INFINITY, f64::min))
    }

    pub fn worst_case(&self, x: &[f64]) -> Result<WorstCase> {
        let values = self.vertex_values(x)?;
        let value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let active = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v <= value + ACTIVE_TOL)
            .map(|(k, _)| k)
            .collect();
        Ok(WorstCase { value, active })
    }

    /// `ρ` as a function of the own action, opponents fixed by `x`.
    fn rho_fn<'a>(&'a self, x: &[f64]) -> impl FnMut(f64) -> Result<f64> + 'a {
        let mut p = x.to_vec();
        let own = self.own;
        move |xi| {
            p[own] = xi;
            self.rho(&p)
        }
    }

    fn vertex_fn<'a>(&'a self, x: &[f64], v: usize) -> impl FnMut(f64) -> Result<f64> + 'a {
        let mut p = x.to_vec();
        let own = self.own;
        move |xi| {
            p[own] = xi;
            Ok(self.payoff.slice(&p)?.at(&self.vertices[v]))
        }
    }

    /// Each vertex payoff as an exact quadratic in the own action.
    fn vertex_quadratics(&self, x: &[f64]) -> Result<Vec<Quadratic>> {
        let (lo, hi) = (self.action.lo, self.action.hi);
        let mid = 0.5 * (lo + hi);
        let mut p = x.to_vec();
        let mut at = |xi: f64| -> Result<Vec<f64>> {
            p[self.own] = xi;
            self.vertex_values(&p)
        };
        let (y0, y1, y2) = (at(lo)?, at(mid)?, at(hi)?);
        Ok((0..self.vertices.len())
            .map(|v| Quadratic::through([lo, mid, hi], [y0[v], y1[v], y2[v]]))
            .collect())
    }

    /// Worst-case best reply `argmax_xi ρ(xi, x₋ᵢ)`; ties go to the smaller
    /// action. Entry `i` of `x` is ignored.
    pub fn best_reply(&self, x: &[f64], opts: &ReplyOptions) -> Result<f64> {
        Ok(self.best_reply_value(x, opts)?.0)
    }

    pub fn best_reply_value(&self, x: &[f64], opts: &ReplyOptions) -> Result<(f64, f64)> {
        if self.action.width() == 0.0 {
            let mut f = self.rho_fn(x);
            return Ok((self.action.lo, f(self.action.lo)?));
        }
        if opts.closed_form && self.quadratic {
            if let Some(best) = self.closed_form_maximin(x)? {
                return Ok(best);
            }
        }
        let mut f = self.rho_fn(x);
        maximize(&mut f, self.action, opts.grid, opts.tol)
    }

    /// Enumerates the points where a concave piecewise-quadratic `ρ` can peak
    /// (interval ends, stationary points, pairwise crossings) and keeps the
    /// best one satisfying the one-sided derivative conditions.
    fn closed_form_maximin(&self, x: &[f64]) -> Result<Option<(f64, f64)>> {
        let (lo, hi) = (self.action.lo, self.action.hi);
        let qs = self.vertex_quadratics(x)?;
        let mut cands = vec![lo, hi];
        for (u, qu) in qs.iter().enumerate() {
            if qu.a < 0.0 {
                cands.push(-qu.b / (2.0 * qu.a));
            }
            for qv in &qs[u + 1..] {
                cands.extend(qu.sub(qv).roots());
            }
        }
        let slope_scale = qs
            .iter()
            .map(|q| q.slope(lo).abs().max(q.slope(hi).abs()))
            .fold(1.0, f64::max);
        let mut best: Option<(f64, f64)> = None;
        for c in cands {
            if !(lo..=hi).contains(&c) {
                continue;
            }
            let vals: Vec<f64> = qs.iter().map(|q| q.value(c)).collect();
            let rho = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-10 * (1.0 + rho.abs());
            let (mut left, mut right) = (f64::NEG_INFINITY, f64::INFINITY);
            for (q, v) in qs.iter().zip(&vals) {
                if *v <= rho + tol {
                    let s = q.slope(c);
                    left = left.max(s);
                    right = right.min(s);
                }
            }
            let eps = 1e-9 * slope_scale;
            let kkt = (c == lo || left >= -eps) && (c == hi || right <= eps);
            if !kkt {
                continue;
            }
            let tie = 1e-12 * (1.0 + rho.abs());
            best = match best {
                Some((bx, bv)) if rho > bv + tie || ((rho - bv).abs() <= tie && c < bx) => Some((c, rho)),
                Some(b) => Some(b),
                None => Some((c, rho)),
            };
        }
        Ok(match best {
            Some((c, _)) => {
                let mut f = self.rho_fn(x);
                Some((c, f(c)?))
            }
            None => None,
        })
    }

    /// Maximizer of a single vertex payoff: the unconstrained optimum
    /// projected onto the action interval.
    fn vertex_argmax(&self, x: &[f64], v: usize, q: Option<&Quadratic>, opts: &ReplyOptions) -> Result<f64> {
        if self.action.width() == 0.0 {
            return Ok(self.action.lo);
        }
        match q {
            Some(q) => Ok(q.argmax_on(self.action.lo, self.action.hi)),
            None => {
                let mut f = self.vertex_fn(x, v);
                Ok(maximize(&mut f, self.action, opts.grid, opts.tol)?.0)
            }
        }
    }

    /// Corner-point construction of the worst-case best reply.
    ///
    /// For every corner `α`: `g(α)` maximizes `f(α; ·, x₋ᵢ)` over the action
    /// interval, and `h(α) = 1` when `α` is a worst case at `g(α)`. The reply
    /// is `Σ g·h − Σ_{a<b} g_a·h_a·h_b`.
    pub fn corner_best_reply(&self, x: &[f64], opts: &ReplyOptions) -> Result<f64> {
        let qs = if opts.closed_form && self.quadratic && self.action.width() > 0.0 {
            Some(self.vertex_quadratics(x)?)
        } else {
            None
        };
        let mut p = x.to_vec();
        let mut g = Vec::with_capacity(self.vertices.len());
        let mut h = Vec::with_capacity(self.vertices.len());
        for v in 0..self.vertices.len() {
            let gv = self.vertex_argmax(x, v, qs.as_ref().map(|q| &q[v]), opts)?;
            p[self.own] = gv;
            let values = self.vertex_values(&p)?;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let certified = values[v] <= min + ACTIVE_TOL && self.action.contains(gv);
            g.push(gv);
            h.push(if certified { 1.0 } else { 0.0 });
        }
        let certified: Vec<usize> = (0..g.len()).filter(|&v| h[v] == 1.0).collect();
        match certified.len() {
            0 => Err(Error::NoCornerCertified),
            1 | 2 => {
                let mut r: f64 = g.iter().zip(&h).map(|(g, h)| g * h).sum();
                for a in 0..g.len() {
                    for b in a + 1..g.len() {
                        r -= g[a] * h[a] * h[b];
                    }
                }
                Ok(r)
            }
            count => {
                let first = g[certified[0]];
                if certified.iter().all(|&v| (g[v] - first).abs() <= ACTIVE_TOL) {
                    Ok(first)
                } else {
                    Err(Error::AmbiguousTie { count })
                }
            }
        }
    }
}

/// `ρ^δᵢ(x)` with the set of minimizing vertices.
pub fn worst_case_payoff(game: &Game, i: usize, x: &[f64]) -> Result<WorstCase> {
    game.check_profile(x)?;
    WorstCaseProblem::new(game, i)?.worst_case(x)
}

pub fn best_reply_corner(game: &Game, i: usize, x: &[f64]) -> Result<f64> {
    game.check_profile(x)?;
    WorstCaseProblem::new(game, i)?.corner_best_reply(x, &ReplyOptions::default())
}

pub fn best_reply_maximin(game: &Game, i: usize, x: &[f64]) -> Result<f64> {
    best_reply_maximin_with(game, i, x, &ReplyOptions::default())
}

pub fn best_reply_maximin_with(game: &Game, i: usize, x: &[f64], opts: &ReplyOptions) -> Result<f64> {
    game.check_profile(x)?;
    WorstCaseProblem::new(game, i)?.best_reply(x, opts)
}

/// One distinct point of the scaled vertex set and where it is active.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierVertex {
    pub point: Vec<f64>,
    /// Indices of the source vertices that scale to this point.
    pub sources: Vec<usize>,
    pub active: bool,
    /// Profiles at which this point is the only minimizer.
    pub unique_count: usize,
    pub profiles: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierReport {
    pub player: usize,
    pub resolution: usize,
    pub vertices: Vec<FrontierVertex>,
}

/// Active vertices over the full action-profile grid.
pub fn worst_case_frontier(game: &Game, i: usize, resolution: usize) -> Result<FrontierReport> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("frontier resolution must be at least 2".into()));
    }
    let problem = WorstCaseProblem::new(game, i)?;
    let mut distinct: Vec<FrontierVertex> = Vec::new();
    let mut group = Vec::with_capacity(problem.vertices.len());
    for (k, v) in problem.vertices.iter().enumerate() {
        let same = distinct
            .iter()
            .position(|d| d.point.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-12));
        match same {
            Some(j) => {
                distinct[j].sources.push(k);
                group.push(j);
            }
            None => {
                group.push(distinct.len());
                distinct.push(FrontierVertex {
                    point: v.clone(),
                    sources: vec![k],
                    active: false,
                    unique_count: 0,
                    profiles: Vec::new(),
                });
            }
        }
    }
    let grids: Vec<Vec<f64>> = game
        .players()
        .iter()
        .map(|p| p.action.grid(resolution).collect())
        .collect();
    let n = game.n();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    'outer: loop {
        for (j, k) in idx.iter().enumerate() {
            x[j] = grids[j][*k];
        }
        let wc = problem.worst_case(&x)?;
        let mut hit: Vec<usize> = wc.active.iter().map(|k| group[*k]).collect();
        hit.dedup();
        hit.sort_unstable();
        hit.dedup();
        for &j in &hit {
            distinct[j].active = true;
            distinct[j].profiles.push(x.clone());
            if hit.len() == 1 {
                distinct[j].unique_count += 1;
            }
        }
        for j in (0..n).rev() {
            idx[j] += 1;
            if idx[j] < grids[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(FrontierReport {
        player: i,
        resolution,
        vertices: distinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::load_game;

    pub(crate) const EXAMPLE1: &str = r#"{"players": 2, "player": [
        {"action": [0, 1.8], "payoff": {"const": "x1*(1 - x2)", "terms": [{"param": 1, "coeff": "(1 - x1)*x1"}]},
         "uncertainty": {"vertices": [[0.1], [0.8]], "nominal": [0.6]}, "delta": 1},
        {"action": [0, 1.8], "payoff": {"const": "x2*(1 - x1)", "terms": [{"param": 1, "coeff": "(1 - x2)*x2"}]},
         "uncertainty": {"vertices": [[0.1], [0.8]], "nominal": [0.6]}, "delta": 1}]}"#;

    fn example1(delta: f64) -> Game {
        load_game(EXAMPLE1.as_bytes())
            .unwrap()
            .with_uniform_delta(delta)
            .unwrap()
    }

    /// Hand-coded two-vertex oracle: `(1 + α(1 − x) − y) x` at both vertices.
    fn oracle_rho(alphas: [f64; 2], x: f64, y: f64) -> (f64, usize) {
        let f = |a: f64| (1.0 + a * (1.0 - x) - y) * x;
        let (f0, f1) = (f(alphas[0]), f(alphas[1]));
        if f0 <= f1 {
            (f0, 0)
        } else {
            (f1, 1)
        }
    }

    #[test]
    fn worst_case_values() {
        let g = example1(1.0);
        let wc = worst_case_payoff(&g, 0, &[0.5, 0.5]).unwrap();
        let (v, k) = oracle_rho([0.1, 0.8], 0.5, 0.5);
        assert!((v - 0.275).abs() < 1e-15);
        assert!((wc.value - v).abs() < 1e-15);
        assert_eq!(wc.active, vec![k]);

        let wc = worst_case_payoff(&g, 0, &[1.2, 0.5]).unwrap();
        let (v, k) = oracle_rho([0.1, 0.8], 1.2, 0.5);
        assert!((v - 0.408).abs() < 1e-12);
        assert!((wc.value - v).abs() < 1e-15);
        assert_eq!(wc.active, vec![k]);
        assert_eq!(k, 1);
    }

    #[test]
    fn nominal_level_is_exact() {
        let g = example1(0.0);
        for &(x, y) in &[(0.3, 1.1), (1.7, 0.2), (1.0, 1.0)] {
            let wc = worst_case_payoff(&g, 0, &[x, y]).unwrap();
            let nominal = g.players()[0].payoff.eval(&[0.6], &[x, y]).unwrap();
            assert_eq!(wc.value, nominal);
            assert_eq!(wc.active, vec![0, 1]);
        }
    }

    #[test]
    fn corner_algorithm_examples() {
        let g = example1(1.0);
        let r = best_reply_corner(&g, 0, &[0.0, 0.1]).unwrap();
        assert!((r - 1.0625).abs() < 1e-12, "{r}");
        let r = best_reply_corner(&g, 0, &[0.0, 1.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-12, "{r}");
        assert_eq!(best_reply_corner(&g, 0, &[0.0, 0.5]), Err(Error::NoCornerCertified));
        assert!((best_reply_maximin(&g, 0, &[0.0, 0.5]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximin_examples() {
        let g = example1(1.0);
        assert!((best_reply_maximin(&g, 0, &[0.0, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(best_reply_maximin(&g, 0, &[0.0, 1.2]).unwrap(), 0.0);
        let g0 = example1(0.0);
        let r = best_reply_maximin(&g0, 0, &[0.0, 0.5]).unwrap();
        assert!((r - 1.1 / 1.2).abs() < 1e-12);
        // Player 2 sees the mirrored game.
        let r2 = best_reply_maximin(&g, 1, &[0.5, 0.0]).unwrap();
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_route_agrees_with_closed_form() {
        let g = example1(1.0);
        let grid = ReplyOptions {
            closed_form: false,
            ..ReplyOptions::default()
        };
        for k in 0..=36 {
            let y = 1.8 * k as f64 / 36.0;
            let exact = best_reply_maximin(&g, 0, &[0.0, y]).unwrap();
            let scanned = best_reply_maximin_with(&g, 0, &[0.0, y], &grid).unwrap();
            assert!((exact - scanned).abs() < 1e-7, "y={y}: {exact} vs {scanned}");
        }
    }

    #[test]
    fn brute_force_reply_oracle() {
        let g = example1(1.0);
        for k in 0..=18 {
            let y = 0.1 * k as f64;
            let mut best = (0.0, f64::NEG_INFINITY);
            for j in 0..=180_000 {
                let x = 1.8 * j as f64 / 180_000.0;
                let v = oracle_rho([0.1, 0.8], x, y).0;
                if v > best.1 {
                    best = (x, v);
                }
            }
            let r = best_reply_maximin(&g, 0, &[0.0, y]).unwrap();
            assert!((r - best.0).abs() < 2e-5, "y={y}: {r} vs {}", best.0);
        }
    }

    #[test]
    fn frontier_example_one() {
        let g = example1(1.0);
        let rep = worst_case_frontier(&g, 0, 101).unwrap();
        assert_eq!(rep.vertices.len(), 2);
        assert!(rep.vertices.iter().all(|v| v.active));
        for v in &rep.vertices {
            for x in &v.profiles {
                let coeff = (1.0 - x[0]) * x[0];
                if v.point[0] < 0.5 {
                    assert!(coeff >= -1e-9);
                } else {
                    assert!(coeff <= 1e-9);
                }
            }
        }
        let collapsed = worst_case_frontier(&example1(0.0), 0, 11).unwrap();
        assert_eq!(collapsed.vertices.len(), 1);
        assert_eq!(collapsed.vertices[0].sources, vec![0, 1]);
        assert_eq!(collapsed.vertices[0].profiles.len(), 121);
        assert!(worst_case_frontier(&g, 0, 1).is_err());
    }
}
