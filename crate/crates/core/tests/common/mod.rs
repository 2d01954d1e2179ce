#![allow(dead_code)]

use robgame::cournot::CournotParams;
use robgame::{load_game, Game};

pub const EXAMPLE1: &str = include_str!("../../games/example1.json");

pub fn example1(delta: f64) -> Game {
    load_game(EXAMPLE1.as_bytes()).unwrap().with_uniform_delta(delta).unwrap()
}

/// Closed-form Example 1 payoff `(1 + α(1 − x) − y)x`.
pub fn example1_payoff(alpha: f64, x: f64, y: f64) -> f64 {
    (1.0 + alpha * (1.0 - x) - y) * x
}

/// Worst case over the two scaled vertices of Example 1.
pub fn example1_rho(delta: f64, x: f64, y: f64) -> f64 {
    let lo = 0.6 + delta * (0.1 - 0.6);
    let hi = 0.6 + delta * (0.8 - 0.6);
    example1_payoff(lo, x, y).min(example1_payoff(hi, x, y))
}

/// Ternary search for the maximum of a concave function.
pub fn ternary_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Example 1 worst-case best reply by dense grid and ternary refinement.
pub fn example1_reply(delta: f64, y: f64) -> f64 {
    let n = 4097;
    let h = 1.8 / (n - 1) as f64;
    let (k, _) = (0..n)
        .map(|k| (k, example1_rho(delta, k as f64 * h, y)))
        .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
    let lo = (k as f64 - 1.0).max(0.0) * h;
    let hi = ((k + 1) as f64 * h).min(1.8);
    ternary_max(|x| example1_rho(delta, x, y), lo, hi).0
}

pub fn case1(delta: f64) -> CournotParams {
    CournotParams {
        a: 10.0,
        b_hat: 1.0,
        gamma_hat: 0.5,
        b_lo: 0.3,
        b_hi: 1.7,
        gamma_lo: 0.1,
        gamma_hi: 0.9,
        delta,
    }
}

pub fn case2(delta: f64) -> CournotParams {
    CournotParams {
        gamma_lo: 0.4,
        gamma_hi: 1.2,
        ..case3(delta)
    }
}

pub fn case3(delta: f64) -> CournotParams {
    CournotParams {
        a: 10.0,
        b_hat: 0.6,
        gamma_hat: 0.8,
        b_lo: 0.2,
        b_hi: 1.0,
        gamma_lo: 0.2,
        gamma_hi: 1.4,
        delta,
    }
}

/// Level where case-3 parameters produce the anti-diagonal continuum.
pub const CASE3_SEGMENT_DELTA: f64 = 0.4 / 1.4;

/// Probe points from a fixed-seed linear congruential generator.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}
