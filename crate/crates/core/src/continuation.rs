//! Uncertainty-level sweeps and equilibrium continuation toward δ = 0.
//!
//! An ROE has a Nash counterpart when it can be followed continuously, as the
//! common level δ shrinks, down to a Nash equilibrium of the nominal game.
//! Continuity is proxied by a fixed δ step and a bound on profile jumps.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{
    find_roe, iterate_from, opportunity_cost, scan_window, verify_epsilon_nash, verify_roe, ReplySystem, RoeOptions,
    RoeSearch, ROE_CHECK_TOL,
};
use crate::error::{Error, Result};
use crate::game::{ActionInterval, Game};
use crate::optimize::golden_max;

/// Full ROE enumeration at each level, every player set to that level.
pub fn sweep_delta(game: &Game, deltas: &[f64], opts: &RoeOptions) -> Result<Vec<(f64, RoeSearch)>> {
    if deltas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("deltas must be sorted ascending".into()));
    }
    deltas
        .par_iter()
        .map(|&d| Ok((d, find_roe(&game.with_uniform_delta(d)?, opts)?)))
        .collect()
}

/// `count` evenly spaced levels from `from` to `to` inclusive.
pub fn delta_grid(from: f64, to: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..count)
            .map(|k| if k + 1 == count { to } else { from + (to - from) * k as f64 / (count - 1) as f64 })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub step: f64,
    pub jump_tol: f64,
    /// Width to which a break level is localized.
    pub break_tol: f64,
    /// Scan points across the local search window (two players).
    pub window_grid: usize,
    pub roe: RoeOptions,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            jump_tol: 0.1,
            break_tol: 1e-4,
            window_grid: 129,
            roe: RoeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStep {
    pub delta: f64,
    pub profile: Vec<f64>,
    pub residual: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PathStatus {
    ReachedZero,
    /// No ROE near the path below `delta`; the path still exists at
    /// `last_good`.
    Broken { delta: f64, last_good: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub steps: Vec<PathStep>,
    pub status: PathStatus,
    pub counterpart: bool,
    pub step: f64,
    pub jump_tol: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// ROE at level `delta` nearest to `prev`, if one lies within `jump_tol`.
fn local_solve(game: &Game, delta: f64, prev: &[f64], opts: &TraceOptions) -> Result<Option<(Vec<f64>, f64)>> {
    let g = game.with_uniform_delta(delta)?;
    let sys = ReplySystem::new(&g, opts.roe.reply)?;
    let found = if g.n() == 2 {
        let a = g.players()[0].action;
        let window = ActionInterval::new(a.clamp(prev[0] - opts.jump_tol), a.clamp(prev[0] + opts.jump_tol))?;
        let (points, continua) = scan_window(&sys, window, opts.window_grid, opts.roe.tol)?;
        let mut all = points;
        for (lo, hi) in continua {
            // Nearest point of the continuum.
            let mut closeness = |c: f64| -> Result<f64> { Ok(-distance(&[c, sys.reply(1, &[c, 0.0])?], prev)) };
            let (c, _) = golden_max(&mut closeness, lo[0].min(hi[0]), lo[0].max(hi[0]), 1e-12)?;
            all.push(vec![c, sys.reply(1, &[c, 0.0])?]);
        }
        all.into_iter()
            .min_by(|p, q| distance(p, prev).total_cmp(&distance(q, prev)))
    } else {
        iterate_from(&sys, prev.to_vec(), &opts.roe)?.ok()
    };
    Ok(match found {
        Some(p) if distance(&p, prev) <= opts.jump_tol => {
            let r = sys.residual(&p)?;
            Some((p, r))
        }
        _ => None,
    })
}

fn epsilon_at(game: &Game, delta: f64, x: &[f64]) -> Result<f64> {
    let g = game.with_uniform_delta(delta)?;
    (0..g.n()).try_fold(0.0, |acc: f64, i| Ok(acc.max(opportunity_cost(&g, i, x)?)))
}

/// Follows the ROE `start` from `start_delta` down toward δ = 0.
pub fn trace_equilibrium(game: &Game, start: &[f64], start_delta: f64, opts: &TraceOptions) -> Result<PathReport> {
    if !(opts.step > 0.0) || !(opts.jump_tol > 0.0) {
        return Err(Error::InvalidArgument("step and jump tolerance must be positive".into()));
    }
    let g0 = game.with_uniform_delta(start_delta)?;
    let (ok, residual) = verify_roe(&g0, start, ROE_CHECK_TOL)?;
    if !ok {
        return Err(Error::NotAnEquilibrium { residual });
    }
    let mut steps = vec![PathStep {
        delta: start_delta,
        profile: start.to_vec(),
        residual,
        epsilon: epsilon_at(game, start_delta, start)?,
    }];
    let mut k = 1usize;
    loop {
        let last = steps.last().unwrap().clone();
        if last.delta == 0.0 {
            break;
        }
        let mut d = start_delta - opts.step * k as f64;
        if d < 1e-12 {
            d = 0.0;
        }
        k += 1;
        match local_solve(game, d, &last.profile, opts)? {
            Some((p, r)) => steps.push(PathStep {
                delta: d,
                epsilon: epsilon_at(game, d, &p)?,
                profile: p,
                residual: r,
            }),
            None => {
                // Localize the disappearance level between last good and d.
                let mut bad = d;
                while steps.last().unwrap().delta - bad > opts.break_tol {
                    let good = steps.last().unwrap().clone();
                    let mid = 0.5 * (good.delta + bad);
                    match local_solve(game, mid, &good.profile, opts)? {
                        Some((p, r)) => steps.push(PathStep {
                            delta: mid,
                            epsilon: epsilon_at(game, mid, &p)?,
                            profile: p,
                            residual: r,
                        }),
                        None => bad = mid,
                    }
                }
                let last_good = steps.last().unwrap().delta;
                return Ok(PathReport {
                    steps,
                    status: PathStatus::Broken { delta: bad, last_good },
                    counterpart: false,
                    step: opts.step,
                    jump_tol: opts.jump_tol,
                });
            }
        }
    }
    let end = &steps.last().unwrap().profile;
    if !verify_epsilon_nash(&game.nominal_counterpart(), end, 1e-8, 1025)? {
        return Err(Error::NotEpsilonNash { eps: 1e-8 });
    }
    Ok(PathReport {
        steps,
        status: PathStatus::ReachedZero,
        counterpart: true,
        step: opts.step,
        jump_tol: opts.jump_tol,
    })
}

/// `(δ, ε(δ))` along a path with a Nash counterpart; checks that the cost
/// vanishes at the end of the path.
pub fn cost_continuity_probe(game: &Game, path: &PathReport) -> Result<Vec<(f64, f64)>> {
    if !path.counterpart {
        return Err(Error::NoCounterpart);
    }
    let seq = path
        .steps
        .iter()
        .map(|s| Ok((s.delta, epsilon_at(game, s.delta, &s.profile)?)))
        .collect::<Result<Vec<_>>>()?;
    if let [.., (_, prev), (_, last)] = seq.as_slice() {
        if *last > f64::max(1e-6, 2.0 * prev) {
            return Err(Error::InvalidArgument(format!(
                "opportunity cost does not vanish along the path: {last:e} after {prev:e}"
            )));
        }
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::load_game;

    const EXAMPLE1: &str = r#"{"players": 2, "player": [
        {"action": [0, 1.8], "payoff": {"const": "x1*(1 - x2)", "terms": [{"param": 1, "coeff": "(1 - x1)*x1"}]},
         "uncertainty": {"vertices": [[0.1], [0.8]], "nominal": [0.6]}, "delta": 1},
        {"action": [0, 1.8], "payoff": {"const": "x2*(1 - x1)", "terms": [{"param": 1, "coeff": "(1 - x2)*x2"}]},
         "uncertainty": {"vertices": [[0.1], [0.8]], "nominal": [0.6]}, "delta": 1}]}"#;

    fn example1() -> Game {
        load_game(EXAMPLE1.as_bytes()).unwrap()
    }

    #[test]
    fn sweep_counts() {
        let s = sweep_delta(&example1(), &[0.0, 0.05, 1.0], &RoeOptions::default()).unwrap();
        let counts: Vec<_> = s.iter().map(|(_, r)| r.equilibria.len()).collect();
        assert_eq!(counts, vec![1, 1, 7]);
        assert!(sweep_delta(&example1(), &[0.5, 0.1], &RoeOptions::default()).is_err());
    }

    #[test]
    fn symmetric_branch_reaches_nash() {
        let g = example1();
        let path = trace_equilibrium(&g, &[11.0 / 12.0, 11.0 / 12.0], 1.0, &TraceOptions::default()).unwrap();
        assert!(path.counterpart);
        assert_eq!(path.status, PathStatus::ReachedZero);
        assert_eq!(path.steps.len(), 101);
        for s in &path.steps {
            // Symmetric branch: x = (1 + a)/(1 + 2a) with a = 0.6 − 0.5δ.
            let a = 0.6 - 0.5 * s.delta;
            let x = (1.0 + a) / (1.0 + 2.0 * a);
            assert!((s.profile[0] - x).abs() < 1e-8 && (s.profile[1] - x).abs() < 1e-8, "{s:?} vs {x}");
        }
        let end = &path.steps.last().unwrap().profile;
        assert!((end[0] - 8.0 / 11.0).abs() < 1e-8);
        let probe = cost_continuity_probe(&g, &path).unwrap();
        assert!(probe.last().unwrap().1 <= 1e-9);
    }

    #[test]
    fn boundary_branch_breaks() {
        let g = example1();
        let path = trace_equilibrium(&g, &[1.125, 0.0], 1.0, &TraceOptions::default()).unwrap();
        assert!(!path.counterpart);
        match path.status {
            PathStatus::Broken { delta, last_good } => {
                assert!(delta > 0.5 && last_good - delta <= 1e-4, "{delta} {last_good}");
            }
            s => panic!("{s:?}"),
        }
        assert!(matches!(cost_continuity_probe(&g, &path), Err(Error::NoCounterpart)));
    }

    #[test]
    fn asymmetric_branch_breaks_at_one_fifth() {
        let path = trace_equilibrium(&example1(), &[1.0, 0.5], 1.0, &TraceOptions::default()).unwrap();
        match path.status {
            PathStatus::Broken { delta, last_good } => {
                assert!((delta - 0.2).abs() < 2e-4 && (last_good - 0.2).abs() < 2e-4, "{delta} {last_good}");
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn rejects_non_equilibrium_start() {
        assert!(matches!(
            trace_equilibrium(&example1(), &[0.3, 0.3], 1.0, &TraceOptions::default()),
            Err(Error::NotAnEquilibrium { .. })
        ));
    }
}
