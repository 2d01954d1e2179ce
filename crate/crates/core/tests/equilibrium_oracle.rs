mod common;

use robgame::cournot::{self, CournotParams};
use robgame::{
    epsilon_of_roe, find_roe, load_game, sweep_delta, trace_equilibrium, verify_epsilon_nash, EquilibriumReport,
    Game, RoeKind, RoeOptions, TraceOptions,
};

use common::{case1, case3, example1, example1_reply, ternary_max};

fn game_file(name: &str) -> Game {
    let path = format!("{}/games/{name}", env!("CARGO_MANIFEST_DIR"));
    load_game(&std::fs::read(path).unwrap()).unwrap()
}

/// Equilibria of a two-player game from the composed replies alone:
/// roots of `φ(x) = x − R₁(R₂(x))` on a 4097-point scan.
fn residual_scan(r1: impl Fn(f64) -> f64, r2: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    let n = 4097;
    let phi = |x: f64| x - r1(r2(x));
    let xs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let ps: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        if k + 1 < n && ps[k] != 0.0 && ps[k + 1] != 0.0 && ps[k].signum() != ps[k + 1].signum() {
            let (mut a, mut b) = (xs[k], xs[k + 1]);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if phi(m).signum() == phi(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        // Touching roots and roots at grid points.
        let left = if k > 0 { ps[k - 1].abs() } else { f64::INFINITY };
        let right = if k + 1 < n { ps[k + 1].abs() } else { f64::INFINITY };
        if ps[k].abs() <= left && ps[k].abs() <= right && ps[k].abs() < 1e-3 {
            let a = xs[k.saturating_sub(1)];
            let b = xs[(k + 1).min(n - 1)];
            let (x, v) = ternary_max(|x| -phi(x).abs(), a, b);
            if -v < 1e-9 {
                roots.push(x);
            } else if ps[k] == 0.0 {
                roots.push(xs[k]);
            }
        }
    }
    let mut out: Vec<[f64; 2]> = Vec::new();
    for x in roots {
        if phi(x).abs() > 1e-7 {
            continue;
        }
        let p = [x, r2(x)];
        if !out.iter().any(|q| (q[0] - p[0]).abs() < 1e-4 && (q[1] - p[1]).abs() < 1e-4) {
            out.push(p);
        }
    }
    out
}

fn assert_same_set(found: &[EquilibriumReport], oracle: &[[f64; 2]], label: &str) {
    assert!(found.iter().all(|e| e.kind == RoeKind::Point), "{label}: unexpected continuum");
    assert_eq!(found.len(), oracle.len(), "{label}: found {found:?}\noracle {oracle:?}");
    for q in oracle {
        assert!(
            found.iter().any(|e| (e.profile[0] - q[0]).abs() <= 1e-4 && (e.profile[1] - q[1]).abs() <= 1e-4),
            "{label}: oracle point {q:?} missing"
        );
    }
}

/// Worst-case Cournot reply by dense scan of the two-endpoint minimum.
fn cournot_reply(p: &CournotParams, q_opp: f64, q_max: f64) -> f64 {
    let blend = |hi: f64, lo: f64| p.delta * hi + (1.0 - p.delta) * lo;
    let ends = [
        (blend(p.b_hi, p.b_hat), blend(p.gamma_lo, p.gamma_hat)),
        (blend(p.b_lo, p.b_hat), blend(p.gamma_hi, p.gamma_hat)),
    ];
    let rho = |q: f64| ends.iter().map(|(b, g)| q * (p.a - b * q - g * q_opp)).fold(f64::INFINITY, f64::min);
    let n = 4097;
    let h = q_max / (n - 1) as f64;
    let k = (0..n).max_by(|a, b| rho(*a as f64 * h).total_cmp(&rho(*b as f64 * h))).unwrap();
    let lo = (k as f64 - 1.0).max(0.0) * h;
    let hi = ((k + 1) as f64 * h).min(q_max);
    ternary_max(rho, lo, hi).0
}

#[test]
fn example1_matches_residual_scan() {
    for delta in [1.0, 0.75, 0.5, 0.35, 0.1, 0.0] {
        let found = find_roe(&example1(delta), &RoeOptions::default()).unwrap();
        let oracle = residual_scan(|y| example1_reply(delta, y), |x| example1_reply(delta, x), 0.0, 1.8);
        assert_same_set(&found.equilibria, &oracle, &format!("example 1 at δ = {delta}"));
    }
}

#[test]
fn cournot_games_match_residual_scan() {
    for (name, p) in [("case 1", case1(1.0)), ("case 3i", case3(0.2)), ("case 3iii", case3(0.5))] {
        let q_max = 30.0;
        let g = cournot::to_game(&p, q_max).unwrap();
        let found = find_roe(&g, &RoeOptions::default()).unwrap();
        let oracle = residual_scan(|y| cournot_reply(&p, y, q_max), |x| cournot_reply(&p, x, q_max), 0.0, q_max);
        assert_same_set(&found.equilibria, &oracle, name);
    }
}

#[test]
fn nominal_level_gives_classical_nash() {
    let x = find_roe(&example1(0.0), &RoeOptions::default()).unwrap().equilibria;
    assert_eq!(x.len(), 1);
    // Nominal FOC 1 + α − 2αx − y = 0 at α = 0.6, symmetric.
    for v in &x[0].profile {
        assert!((v - 8.0 / 11.0).abs() <= 1e-8);
    }

    for p in [case1(0.0), case3(0.0)] {
        let g = cournot::to_game(&p, 30.0).unwrap();
        let x = find_roe(&g, &RoeOptions::default()).unwrap().equilibria;
        assert_eq!(x.len(), 1);
        let q = p.a / (2.0 * p.b_hat + p.gamma_hat);
        assert!(x[0].profile.iter().all(|v| (v - q).abs() <= 1e-8), "{:?} vs {q}", x[0].profile);
    }

    // Three players: FOC 2 − 2.6xᵢ − 0.2(xⱼ + xₖ) + 0.1xⱼ = 0 at the nominal
    // parameters, solved by the symmetric point 2/2.9.
    let g = game_file("lq3.json").with_uniform_delta(0.0).unwrap();
    let x = find_roe(&g, &RoeOptions::default()).unwrap().equilibria;
    assert_eq!(x.len(), 1);
    assert!(x[0].profile.iter().all(|v| (v - 2.0 / 2.9).abs() <= 1e-8), "{:?}", x[0].profile);
}

#[test]
fn reported_points_are_separated() {
    let opts = RoeOptions::default();
    for g in [example1(1.0), game_file("lq3.json"), cournot::to_game(&case3(0.9), 30.0).unwrap()] {
        let eqs = find_roe(&g, &opts).unwrap().equilibria;
        for (a, e) in eqs.iter().enumerate() {
            for f in &eqs[a + 1..] {
                let d = e.profile.iter().zip(&f.profile).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
                assert!(d > opts.dedupe);
            }
        }
    }
}

#[test]
fn every_equilibrium_is_a_sharp_epsilon_nash_point() {
    let mut games = vec![example1(1.0), example1(0.0)];
    for p in [case1(1.0), case3(0.2), case3(0.9), common::case2(1.0)] {
        games.push(cournot::to_game(&p, 30.0).unwrap());
    }
    let mut sharp = 0;
    for g in &games {
        let nominal = g.nominal_counterpart();
        for e in find_roe(g, &RoeOptions::default()).unwrap().equilibria {
            for x in std::iter::once(&e.profile).chain(e.end.as_ref()) {
                let eps = epsilon_of_roe(g, x).unwrap();
                assert!(verify_epsilon_nash(&nominal, x, eps, 1025).unwrap(), "{x:?} ε = {eps}");
                // Below 1e-7 the 0.99 factor falls inside the verification slack.
                if eps > 1e-7 {
                    assert!(!verify_epsilon_nash(&nominal, x, 0.99 * eps, 1025).unwrap(), "{x:?} ε = {eps}");
                    sharp += 1;
                }
            }
        }
    }
    assert!(sharp >= 6);
}

#[test]
fn traced_points_appear_in_the_sweep() {
    let g = example1(1.0);
    for start in [[11.0 / 12.0, 11.0 / 12.0], [1.0, 0.5]] {
        let path = trace_equilibrium(&g, &start, 1.0, &TraceOptions::default()).unwrap();
        let picked: Vec<_> = path.steps.iter().step_by(7).collect();
        let deltas: Vec<f64> = picked.iter().rev().map(|s| s.delta).collect();
        let sweep = sweep_delta(&g, &deltas, &RoeOptions::default()).unwrap();
        for s in picked {
            let (_, found) = sweep.iter().find(|(d, _)| *d == s.delta).unwrap();
            let near = found.equilibria.iter().any(|e| match &e.end {
                None => e.profile.iter().zip(&s.profile).all(|(u, v)| (u - v).abs() <= 1e-4),
                // Continuum: distance to the segment between the endpoints.
                Some(end) => {
                    let (a, b, p) = (&e.profile, end, &s.profile);
                    let d: Vec<f64> = (0..2).map(|k| b[k] - a[k]).collect();
                    let len2 = d[0] * d[0] + d[1] * d[1];
                    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
                    (0..2).all(|k| (a[k] + t * d[k] - p[k]).abs() <= 1e-4)
                }
            });
            assert!(near, "traced {:?} at δ = {} not in sweep", s.profile, s.delta);
        }
    }
}
