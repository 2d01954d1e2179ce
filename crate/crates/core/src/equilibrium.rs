//! Robust-optimization equilibria (ROE), opportunity costs of uncertainty,
//! ε-Nash certification and the ε-Nash → ROE embedding.
//!
//! A profile `x` is an ROE when every `xᵢ` is a worst-case best reply to
//! `x₋ᵢ`. The opportunity cost of uncertainty for player `i` is the nominal
//! payoff lost by playing the worst-case reply instead of the nominal one.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{ActionInterval, Coefficient, Game, PayoffTerm, Player};
use crate::optimize::{bisect, maximize, Quadratic};
use crate::polytope::UncertaintyPolytope;
use crate::sample::halton_points;
use crate::worstcase::{ReplyOptions, WorstCaseProblem};

/// Slack allowed when checking ε-Nash inequalities.
pub const NASH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoeOptions {
    /// Grid points for the two-player composed-reply scan.
    pub grid: usize,
    pub tol: f64,
    /// Point equilibria closer than this are merged.
    pub dedupe: f64,
    pub reply: ReplyOptions,
    /// Multi-start count for games with three or more players.
    pub starts: usize,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for RoeOptions {
    fn default() -> Self {
        Self {
            grid: 1025,
            tol: 1e-8,
            dedupe: 1e-6,
            reply: ReplyOptions::default(),
            starts: 64,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoeKind {
    Point,
    IntervalContinuum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub kind: RoeKind,
    /// The equilibrium, or the first endpoint of a continuum.
    pub profile: Vec<f64>,
    /// Second endpoint of a continuum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<Vec<f64>>,
    pub residual: f64,
    /// Opportunity costs at `profile`.
    pub costs: Vec<f64>,
    pub epsilon: f64,
}

/// A multi-start run that did not converge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartFailure {
    pub start: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoeSearch {
    pub equilibria: Vec<EquilibriumReport>,
    pub failures: Vec<StartFailure>,
}

/// Worst-case best replies of every player at the game's levels.
#[derive(Debug, Clone)]
pub struct ReplySystem<'g> {
    problems: Vec<WorstCaseProblem<'g>>,
    opts: ReplyOptions,
}

impl<'g> ReplySystem<'g> {
    pub fn new(game: &'g Game, opts: ReplyOptions) -> Result<Self> {
        let problems = (0..game.n())
            .map(|i| WorstCaseProblem::new(game, i))
            .collect::<Result<_>>()?;
        Ok(Self { problems, opts })
    }

    pub fn reply(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.problems[i].best_reply(x, &self.opts)
    }

    /// `(R₁(x₋₁), …, Rₙ(x₋ₙ))`.
    pub fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..x.len()).map(|i| self.reply(i, x)).collect()
    }

    /// `maxᵢ |xᵢ − Rᵢ(x₋ᵢ)|`.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let r = self.map(x)?;
        Ok(x.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// `(is ROE, residual)` with residual `maxᵢ |xᵢ − Rᵢ(x₋ᵢ)|`.
pub fn verify_roe(game: &Game, x: &[f64], tol: f64) -> Result<(bool, f64)> {
    game.check_profile(x)?;
    let r = ReplySystem::new(game, ReplyOptions::default())?.residual(x)?;
    Ok((r <= tol, r))
}

/// Opportunity cost of uncertainty for player `i` against `x₋ᵢ`, evaluated
/// with the nominal payoff. Entry `i` of `x` is ignored.
pub fn opportunity_cost(game: &Game, i: usize, x: &[f64]) -> Result<f64> {
    game.check_profile(x)?;
    let opts = ReplyOptions::default();
    let robust = WorstCaseProblem::new(game, i)?.best_reply(x, &opts)?;
    cost_of_reply(game, i, x, robust, &opts)
}

fn cost_of_reply(game: &Game, i: usize, x: &[f64], reply: f64, opts: &ReplyOptions) -> Result<f64> {
    let nominal = WorstCaseProblem::nominal(game, i)?;
    let (_, best) = nominal.best_reply_value(x, opts)?;
    let mut p = x.to_vec();
    p[i] = reply;
    Ok((best - nominal.rho(&p)?).max(0.0))
}

fn costs_at(game: &Game, x: &[f64]) -> Result<Vec<f64>> {
    (0..game.n()).map(|i| opportunity_cost(game, i, x)).collect()
}

/// Tolerance used to accept a user-supplied profile as an ROE.
pub const ROE_CHECK_TOL: f64 = 1e-6;

/// `maxᵢ C(x₋ᵢ)` at an ROE.
///
/// A computed ROE matches the worst-case reply only to the solver tolerance,
/// so the nominal gain of deviating from the played action can exceed the
/// cost by the nominal slope times that gap. The larger of the two is
/// returned; at an exact ROE they coincide.
pub fn epsilon_of_roe(game: &Game, x: &[f64]) -> Result<f64> {
    let (ok, residual) = verify_roe(game, x, ROE_CHECK_TOL)?;
    if !ok {
        return Err(Error::NotAnEquilibrium { residual });
    }
    epsilon_with(game, x, &costs_at(game, x)?)
}

fn epsilon_with(game: &Game, x: &[f64], costs: &[f64]) -> Result<f64> {
    let cost = costs.iter().copied().fold(0.0, f64::max);
    Ok(cost.max(nash_gain(game, x, ReplyOptions::default().grid)?))
}

/// Largest gain any player obtains by a unilateral deviation under the
/// nominal payoff.
pub fn nash_gain(game: &Game, x: &[f64], grid: usize) -> Result<f64> {
    game.check_profile(x)?;
    let opts = ReplyOptions {
        grid,
        ..ReplyOptions::default()
    };
    let mut gain: f64 = 0.0;
    for i in 0..game.n() {
        let nominal = WorstCaseProblem::nominal(game, i)?;
        let (_, best) = nominal.best_reply_value(x, &opts)?;
        gain = gain.max(best - nominal.rho(x)?);
    }
    Ok(gain)
}

/// True when no player gains more than `eps` (plus a 1e-9 slack) by
/// deviating, payoffs evaluated at the nominal parameters.
pub fn verify_epsilon_nash(game: &Game, x: &[f64], eps: f64, grid: usize) -> Result<bool> {
    Ok(nash_gain(game, x, grid)? <= eps + NASH_SLACK)
}

/// `δᵢ · max over xᵢ of (ρ⁰ᵢ − ρ¹ᵢ)(xᵢ, x₋ᵢ)`, an upper bound on the
/// opportunity cost. Entry `i` of `x` is ignored.
pub fn cost_upper_bound(game: &Game, i: usize, x: &[f64]) -> Result<f64> {
    game.check_profile(x)?;
    let p = game.player(i)?;
    if p.delta == 0.0 {
        return Ok(0.0);
    }
    let nominal = p.uncertainty.nominal();
    let quadratic = p.payoff.degree_in(i).is_some_and(|d| d <= 2);
    let mut best = f64::NEG_INFINITY;
    for v in p.uncertainty.vertices() {
        // ρ⁰ − ρ¹ is the largest of the per-vertex gaps, so its maximum over
        // the own action is the largest per-vertex maximum.
        let mut prof = x.to_vec();
        let mut gap = |xi: f64| -> Result<f64> {
            prof[i] = xi;
            let s = p.payoff.slice(&prof)?;
            Ok(s.at(nominal) - s.at(v))
        };
        let value = if p.action.width() == 0.0 {
            gap(p.action.lo)?
        } else if quadratic {
            let q = Quadratic::fit(&mut gap, p.action.lo, p.action.hi)?;
            gap(q.argmax_on(p.action.lo, p.action.hi))?
        } else {
            maximize(&mut gap, p.action, 1025, 1e-10)?.1
        };
        best = best.max(value);
    }
    Ok(p.delta * best)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Enumerates the robust-optimization equilibria of `game`.
///
/// Two-player games are scanned exhaustively through the composed reply
/// `φ(x₁) = x₁ − R₁(R₂(x₁))`; larger games use damped best-response
/// iteration from low-discrepancy starts.
pub fn find_roe(game: &Game, opts: &RoeOptions) -> Result<RoeSearch> {
    let sys = ReplySystem::new(game, opts.reply)?;
    let (points, continua, failures) = if game.n() == 2 {
        let (p, c) = scan_two_player(game, &sys, opts)?;
        (p, c, Vec::new())
    } else {
        let (p, f) = iterate_many(game, &sys, opts)?;
        (p, Vec::new(), f)
    };

    let mut equilibria = Vec::new();
    for (a, b) in &continua {
        let residual = sys.residual(a)?.max(sys.residual(b)?);
        let costs = costs_at(game, a)?;
        equilibria.push(EquilibriumReport {
            kind: RoeKind::IntervalContinuum,
            profile: a.clone(),
            end: Some(b.clone()),
            residual,
            epsilon: epsilon_with(game, a, &costs)?,
            costs,
        });
    }
    let mut points = points;
    points.sort_by(|a, b| lex_cmp(a, b));
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let inside = continua.iter().any(|(a, b)| {
            p[0] >= a[0].min(b[0]) - opts.dedupe && p[0] <= a[0].max(b[0]) + opts.dedupe
        });
        if !inside && kept.iter().all(|k| distance(k, &p) > opts.dedupe) {
            kept.push(p);
        }
    }
    for p in kept {
        let residual = sys.residual(&p)?;
        let costs = costs_at(game, &p)?;
        let epsilon = epsilon_with(game, &p, &costs)?;
        equilibria.push(EquilibriumReport {
            kind: RoeKind::Point,
            profile: p,
            end: None,
            residual,
            epsilon,
            costs,
        });
    }
    equilibria.sort_by(|a, b| lex_cmp(&a.profile, &b.profile));
    Ok(RoeSearch { equilibria, failures })
}

pub(crate) type Continuum = (Vec<f64>, Vec<f64>);

fn scan_two_player(game: &Game, sys: &ReplySystem, opts: &RoeOptions) -> Result<(Vec<Vec<f64>>, Vec<Continuum>)> {
    let action = game.players()[0].action;
    scan_window(sys, action, opts.grid, opts.tol)
}

/// Composed-reply scan of player 1's actions in `window`.
pub(crate) fn scan_window(
    sys: &ReplySystem,
    action: ActionInterval,
    grid: usize,
    tol: f64,
) -> Result<(Vec<Vec<f64>>, Vec<Continuum>)> {
    let profile = |x1: f64| -> Result<Vec<f64>> { Ok(vec![x1, sys.reply(1, &[x1, 0.0])?]) };
    let mut phi = |x1: f64| -> Result<f64> {
        let y = sys.reply(1, &[x1, 0.0])?;
        Ok(x1 - sys.reply(0, &[0.0, y])?)
    };
    if action.width() == 0.0 {
        let p = profile(action.lo)?;
        let ok = sys.residual(&p)? <= tol;
        return Ok((if ok { vec![p] } else { Vec::new() }, Vec::new()));
    }
    let xs: Vec<f64> = action.grid(grid.max(3)).collect();
    let ph = xs.iter().map(|x| phi(*x)).collect::<Result<Vec<_>>>()?;
    let near = |v: f64| v.abs() <= tol;
    let n = xs.len();

    let mut candidates = Vec::new();
    let mut continua = Vec::new();
    let mut k = 0;
    while k < n {
        if near(ph[k]) {
            let s = k;
            while k + 1 < n && near(ph[k + 1]) {
                k += 1;
            }
            let e = k;
            if e - s + 1 >= 3 {
                let a = if s > 0 { edge(&mut phi, xs[s - 1], xs[s], tol)? } else { xs[s] };
                let b = if e + 1 < n { edge(&mut phi, xs[e + 1], xs[e], tol)? } else { xs[e] };
                continua.push((profile(a)?, profile(b)?));
            } else {
                let m = (s..=e).min_by(|p, q| ph[*p].abs().total_cmp(&ph[*q].abs())).unwrap();
                candidates.push(xs[m]);
                if s > 0 && e + 1 < n && (ph[s - 1] < 0.0) != (ph[e + 1] < 0.0) {
                    candidates.push(bisect(&mut phi, xs[s - 1], xs[e + 1], ph[s - 1], 0.0)?);
                }
            }
        } else if k + 1 < n && !near(ph[k + 1]) && (ph[k] < 0.0) != (ph[k + 1] < 0.0) {
            candidates.push(bisect(&mut phi, xs[k], xs[k + 1], ph[k], 0.0)?);
        }
        k += 1;
    }
    let mut points = Vec::new();
    for c in candidates {
        let p = profile(c)?;
        // Sign changes across jumps of the reply map are not equilibria.
        if sys.residual(&p)? <= tol {
            points.push(p);
        }
    }
    Ok((points, continua))
}

/// Boundary of `{|φ| ≤ tol}` between an outside point and an inside point;
/// returns the inside side.
fn edge<F>(phi: &mut F, mut outside: f64, mut inside: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let m = 0.5 * (outside + inside);
        if m == outside || m == inside {
            break;
        }
        if phi(m)?.abs() <= tol {
            inside = m;
        } else {
            outside = m;
        }
    }
    Ok(inside)
}

fn iterate_many(game: &Game, sys: &ReplySystem, opts: &RoeOptions) -> Result<(Vec<Vec<f64>>, Vec<StartFailure>)> {
    let boxes: Vec<_> = game.players().iter().map(|p| p.action).collect();
    let starts = halton_points(opts.starts.max(1), &boxes);
    let runs: Vec<Result<std::result::Result<Vec<f64>, StartFailure>>> = starts
        .into_par_iter()
        .map(|s| iterate_from(sys, s, opts))
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for r in runs {
        match r? {
            Ok(p) => points.push(p),
            Err(f) => failures.push(f),
        }
    }
    Ok((points, failures))
}

/// Damped Jacobi best-response iteration.
pub fn iterate_from(
    sys: &ReplySystem,
    start: Vec<f64>,
    opts: &RoeOptions,
) -> Result<std::result::Result<Vec<f64>, StartFailure>> {
    let mut x = start.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let r = sys.map(&x)?;
        residual = x.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= opts.tol {
            return polish(sys, x, r, residual, opts.damping).map(Ok);
        }
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += opts.damping * (ri - *xi);
        }
    }
    Ok(Err(StartFailure {
        start,
        iterations: opts.max_iter,
        residual,
    }))
}

/// Keeps iterating past the acceptance tolerance while the residual still
/// shrinks, so accepted points sit close to the fixed point itself.
fn polish(sys: &ReplySystem, mut x: Vec<f64>, mut r: Vec<f64>, mut residual: f64, damping: f64) -> Result<Vec<f64>> {
    for _ in 0..200 {
        if residual <= 1e-14 {
            break;
        }
        let y: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + damping * (b - a)).collect();
        let ry = sys.map(&y)?;
        let ny = y.iter().zip(&ry).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if ny >= 0.9 * residual {
            break;
        }
        (x, r, residual) = (y, ry, ny);
    }
    Ok(x)
}

/// The robust game in which an ε-Nash point of a nominal game is an ROE.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCertificate {
    pub game: Game,
    pub profile: Vec<f64>,
    pub eps: f64,
    pub h: f64,
    /// The common uncertainty level `eps / h`.
    pub delta: f64,
    /// Largest worst-case gain from any own-action deviation.
    pub residual: f64,
}

/// Tolerance on the embedding verification residual.
pub const EMBED_TOL: f64 = 1e-9;

/// Builds a robust game in which `x` is an ROE with every player's
/// opportunity cost equal to `eps`.
///
/// Each payoff gains a parameter `αᵢ ∈ [0, h]` entering as `−αᵢ` whenever
/// player `i` deviates from `x*ᵢ`; the level is `eps / h`. Any uncertainty in
/// `nominal` is discarded: the nominal counterpart is embedded.
pub fn embed_epsilon_nash(nominal: &Game, x: &[f64], eps: f64, h: f64) -> Result<EmbeddingCertificate> {
    nominal.check_profile(x)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be non-negative, got {eps}")));
    }
    if eps > 0.0 && !(h > eps) {
        return Err(Error::InvalidArgument(format!("H must exceed eps (H = {h}, eps = {eps})")));
    }
    let base = nominal.nominal_counterpart();
    if !verify_epsilon_nash(&base, x, eps, 1025)? {
        return Err(Error::NotEpsilonNash { eps });
    }
    let (game, delta) = if eps == 0.0 {
        (base, 0.0)
    } else {
        let delta = eps / h;
        let players = base
            .players()
            .iter()
            .enumerate()
            .map(|(i, p)| -> Result<Player> {
                let a0 = p.uncertainty.nominal();
                let dim = a0.len();
                let with = |tail: f64| {
                    let mut v = a0.to_vec();
                    v.push(tail);
                    v
                };
                let uncertainty = UncertaintyPolytope::new(vec![with(0.0), with(h)], with(0.0))?;
                let mut terms = p.payoff.terms().to_vec();
                terms.push(PayoffTerm {
                    param: dim + 1,
                    coeff: Coefficient::DeviationPenalty { player: i, at: x[i] },
                });
                Ok(Player {
                    action: p.action,
                    payoff: crate::game::PayoffForm::new(p.payoff.constant().clone(), terms),
                    uncertainty,
                    delta,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (Game::new(players)?, delta)
    };
    let residual = deviation_gain(&game, x)?;
    if residual > EMBED_TOL {
        return Err(Error::NotAnEquilibrium { residual });
    }
    Ok(EmbeddingCertificate {
        game,
        profile: x.to_vec(),
        eps,
        h,
        delta,
        residual,
    })
}

/// `max(0, maxᵢ sup over xᵢ of ρᵢ(xᵢ, x₋ᵢ) − ρᵢ(x))`, by grid and refinement.
pub fn deviation_gain(game: &Game, x: &[f64]) -> Result<f64> {
    let mut gain: f64 = 0.0;
    for i in 0..game.n() {
        let prob = WorstCaseProblem::new(game, i)?;
        let at = prob.rho(x)?;
        let (_, best) = prob.best_reply_value(x, &ReplyOptions::default())?;
        gain = gain.max(best - at);
    }
    Ok(gain)
}
