mod common;

use common::*;
use robgame::cournot::{self, CournotCase, CournotParams, CournotRoe};
use robgame::equilibrium::{find_roe, RoeKind, RoeOptions};
use robgame::best_reply_maximin;

fn generic(p: &CournotParams) -> robgame::Game {
    cournot::to_game(p, cournot::default_q_max(p)).unwrap()
}

fn check_reactions(p: &CournotParams) {
    let g = generic(p);
    let q_max = cournot::default_q_max(p);
    for k in 0..200 {
        let q = q_max * k as f64 / 199.0;
        let exact = cournot::robust_reaction(p, q);
        let solved = best_reply_maximin(&g, 0, &[0.0, q]).unwrap();
        assert!((exact - solved).abs() <= 1e-6, "q={q}: {exact} vs {solved}");
        let mirrored = best_reply_maximin(&g, 1, &[q, 0.0]).unwrap();
        assert!((exact - mirrored).abs() <= 1e-6);
    }
}

fn check_sets(p: &CournotParams, case: CournotCase) {
    let exact = cournot::roe_set(p).unwrap();
    assert_eq!(exact.case, case);
    let found = find_roe(&generic(p), &RoeOptions::default()).unwrap().equilibria;
    assert_eq!(found.len(), exact.equilibria.len(), "{found:?}");
    for (f, e) in found.iter().zip(&exact.equilibria) {
        match e {
            CournotRoe::Point { q } => {
                assert_eq!(f.kind, RoeKind::Point);
                assert!((f.profile[0] - q[0]).abs() <= 1e-6 && (f.profile[1] - q[1]).abs() <= 1e-6, "{f:?} vs {q:?}");
            }
            CournotRoe::Segment { from, to } => {
                assert_eq!(f.kind, RoeKind::IntervalContinuum);
                let end = f.end.as_ref().unwrap();
                for (got, want) in [(&f.profile, from), (end, to)] {
                    assert!((got[0] - want[0]).abs() <= 1e-4 && (got[1] - want[1]).abs() <= 1e-4, "{got:?} vs {want:?}");
                }
            }
        }
    }
}

#[test]
fn case_one() {
    check_reactions(&case1(1.0));
    check_sets(&case1(1.0), CournotCase::One);
}

#[test]
fn case_two() {
    check_reactions(&case2(1.0));
    check_sets(&case2(1.0), CournotCase::Two);
    check_sets(&case2(0.5), CournotCase::Two);
}

#[test]
fn case_three_unique() {
    check_reactions(&case3(0.2));
    check_sets(&case3(0.2), CournotCase::ThreeI);
}

#[test]
fn case_three_segment() {
    check_reactions(&case3(CASE3_SEGMENT_DELTA));
    check_sets(&case3(CASE3_SEGMENT_DELTA), CournotCase::ThreeII);
}

#[test]
fn case_three_triple() {
    check_reactions(&case3(0.9));
    check_sets(&case3(0.9), CournotCase::ThreeIII);
}

#[test]
fn small_uncertainty_limit() {
    for p in [case1(1e-9), case2(1e-9), case3(1e-9)] {
        for k in 0..50 {
            let q = 0.3 * k as f64;
            assert!((cournot::robust_reaction(&p, q) - cournot::nominal_reaction(&p, q)).abs() <= 1e-6);
        }
        let ne = cournot::nominal_nash(&p);
        for e in cournot::roe_set(&p).unwrap().equilibria {
            let pts = match e {
                CournotRoe::Point { q } => vec![q],
                CournotRoe::Segment { from, to } => vec![from, to],
            };
            for q in pts {
                assert!((q[0] - ne[0]).abs() <= 1e-6 && (q[1] - ne[1]).abs() <= 1e-6, "{q:?}");
            }
        }
    }
}
