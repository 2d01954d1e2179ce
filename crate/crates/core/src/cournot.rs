//! Closed forms for the symmetric robust Cournot duopoly.
//!
//! Firm `i` earns `(a − γ q₋ᵢ − b qᵢ) qᵢ` with the slopes `(b, γ)` uncertain
//! on the segment joining `(b̄, γ̲)` and `(b̲, γ̄)`, nominal point `(b̂, γ̂)`.
//! All results are exact formulas; the generic solver is cross-checked
//! against them in the test suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, GameError, Result};
use crate::expr::Expression;
use crate::game::{ActionInterval, Coefficient, Game, PayoffForm, PayoffTerm, Player};
use crate::polytope::UncertaintyPolytope;

/// Equality tolerance for the case split.
pub const CASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CournotParams {
    pub a: f64,
    pub b_hat: f64,
    pub gamma_hat: f64,
    pub b_lo: f64,
    pub b_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub delta: f64,
}

/// The four slope bounds at level δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledParams {
    pub b_hi: f64,
    pub b_lo: f64,
    pub gamma_hi: f64,
    pub gamma_lo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CournotCase {
    #[serde(rename = "nominal")]
    Nominal,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3i")]
    ThreeI,
    #[serde(rename = "3ii")]
    ThreeII,
    #[serde(rename = "3iii")]
    ThreeIII,
}

impl CournotCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::Nominal => "nominal",
            Self::One => "1",
            Self::Two => "2",
            Self::ThreeI => "3i",
            Self::ThreeII => "3ii",
            Self::ThreeIII => "3iii",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CournotRoe {
    Point { q: [f64; 2] },
    /// Every profile on the straight segment between the endpoints.
    Segment { from: [f64; 2], to: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoeSet {
    pub case: CournotCase,
    pub equilibria: Vec<CournotRoe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaStar {
    pub delta_star: f64,
    /// False when `2b̲ ≥ γ̄`, so that no level in (0, 1) separates the cases.
    pub interior: bool,
    /// Level above which the asymmetric equilibria exist, if any.
    pub multiplicity_threshold: Option<f64>,
}

fn invalid(message: impl Into<String>) -> Error {
    Error::Game(GameError::Schema {
        field: "cournot".into(),
        message: message.into(),
    })
}

impl CournotParams {
    /// Validates the standing assumptions on the duopoly.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a,
            self.b_hat,
            self.gamma_hat,
            self.b_lo,
            self.b_hi,
            self.gamma_lo,
            self.gamma_hi,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("parameters must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Game(GameError::DeltaOutOfRange {
                field: "cournot.delta".into(),
                value: self.delta,
            }));
        }
        if !(self.b_hi > self.b_lo) || !(self.gamma_hi > self.gamma_lo) {
            return Err(invalid("need b_hi > b_lo and gamma_hi > gamma_lo"));
        }
        if !(2.0 * self.b_hat > self.gamma_hat) {
            return Err(invalid("need 2 b_hat > gamma_hat"));
        }
        // (b̂, γ̂) must lie on the segment from (b̄, γ̲) to (b̲, γ̄).
        let (db, dg) = (self.b_lo - self.b_hi, self.gamma_hi - self.gamma_lo);
        let cross = (self.b_hat - self.b_hi) * dg - (self.gamma_hat - self.gamma_lo) * db;
        let scale = 1.0 + db.abs().max(dg.abs()) * (1.0 + self.b_hat.abs().max(self.gamma_hat.abs()));
        let t = (self.b_hat - self.b_hi) / db;
        if cross.abs() > 1e-9 * scale || !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(invalid("nominal (b_hat, gamma_hat) is not on the uncertainty segment"));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    fn db(&self) -> f64 {
        self.b_hi - self.b_lo
    }

    fn dg(&self) -> f64 {
        self.gamma_hi - self.gamma_lo
    }

    /// Case 1: `Δb > Δγ`, case 2: equal, case 3: `Δγ > Δb`.
    fn shape(&self) -> std::cmp::Ordering {
        let d = self.db() - self.dg();
        if d.abs() <= CASE_TOL {
            std::cmp::Ordering::Equal
        } else if d > 0.0 {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        }
    }
}

pub fn scaled_params(p: &CournotParams) -> ScaledParams {
    let d = p.delta;
    let blend = |bound: f64, nominal: f64| (1.0 - d) * nominal + d * bound;
    ScaledParams {
        b_hi: blend(p.b_hi, p.b_hat),
        b_lo: blend(p.b_lo, p.b_hat),
        gamma_hi: blend(p.gamma_hi, p.gamma_hat),
        gamma_lo: blend(p.gamma_lo, p.gamma_hat),
    }
}

/// Branch points of the robust reaction.
pub fn thresholds(p: &CournotParams) -> Thresholds {
    let s = scaled_params(p);
    let (db, dg) = (p.db(), p.dg());
    Thresholds {
        q_lo: p.a * db / (2.0 * s.b_hi * dg + s.gamma_lo * db),
        q_hi: p.a * db / (2.0 * s.b_lo * dg + s.gamma_hi * db),
        q_m: p.a / s.gamma_hi,
    }
}

pub fn nominal_reaction(p: &CournotParams, q_opp: f64) -> f64 {
    ((p.a - p.gamma_hat * q_opp) / (2.0 * p.b_hat)).max(0.0)
}

/// Worst-case best reply to the competitor's output.
pub fn robust_reaction(p: &CournotParams, q_opp: f64) -> f64 {
    if p.delta == 0.0 {
        return nominal_reaction(p, q_opp);
    }
    let s = scaled_params(p);
    let t = thresholds(p);
    if q_opp < t.q_lo {
        (p.a - s.gamma_lo * q_opp) / (2.0 * s.b_hi)
    } else if q_opp <= t.q_hi {
        p.dg() / p.db() * q_opp
    } else if q_opp < t.q_m {
        (p.a - s.gamma_hi * q_opp) / (2.0 * s.b_lo)
    } else {
        0.0
    }
}

pub fn nominal_nash(p: &CournotParams) -> [f64; 2] {
    let q = p.a / (2.0 * p.b_hat + p.gamma_hat);
    [q, q]
}

/// `(γ̄ − 2b̲)/(γ̄ − 2b̲ + 2b̂ − γ̂)` together with the level at which the
/// equilibrium count actually changes, `(2b̂ − γ̂)/(γ̄ − 2b̲ + 2b̂ − γ̂)`:
/// the asymmetric equilibria need `γ̄(δ) > 2b̲(δ)`.
pub fn delta_star(p: &CournotParams) -> Result<DeltaStar> {
    if p.shape() != std::cmp::Ordering::Less {
        return Err(Error::InvalidArgument(
            "delta-star needs gamma_hi - gamma_lo > b_hi - b_lo".into(),
        ));
    }
    let num = p.gamma_hi - 2.0 * p.b_lo;
    let den = num + 2.0 * p.b_hat - p.gamma_hat;
    Ok(DeltaStar {
        delta_star: num / den,
        interior: num > 0.0,
        multiplicity_threshold: (num > 0.0).then(|| (2.0 * p.b_hat - p.gamma_hat) / den),
    })
}

/// Case label of the parameter set at its level.
pub fn classify(p: &CournotParams) -> CournotCase {
    if p.delta == 0.0 {
        return CournotCase::Nominal;
    }
    match p.shape() {
        std::cmp::Ordering::Greater => CournotCase::One,
        std::cmp::Ordering::Equal => CournotCase::Two,
        std::cmp::Ordering::Less => {
            let s = scaled_params(p);
            let gap = s.gamma_hi - 2.0 * s.b_lo;
            if gap.abs() <= CASE_TOL {
                CournotCase::ThreeII
            } else if gap < 0.0 {
                CournotCase::ThreeI
            } else {
                CournotCase::ThreeIII
            }
        }
    }
}

/// All robust-optimization equilibria, sorted by the first firm's output.
pub fn roe_set(p: &CournotParams) -> Result<RoeSet> {
    p.validate()?;
    let case = classify(p);
    let s = scaled_params(p);
    let a = p.a;
    let sym = |q: f64| CournotRoe::Point { q: [q, q] };
    let roe2 = a / (2.0 * s.b_lo + s.gamma_hi);
    let equilibria = match case {
        CournotCase::Nominal => vec![sym(nominal_nash(p)[0])],
        CournotCase::One => vec![sym(a / (2.0 * s.b_hi + s.gamma_lo))],
        CournotCase::Two => {
            let t = thresholds(p);
            vec![CournotRoe::Segment {
                from: [t.q_lo, t.q_lo],
                to: [t.q_hi, t.q_hi],
            }]
        }
        CournotCase::ThreeI => vec![sym(roe2)],
        CournotCase::ThreeII => {
            let q = thresholds(p).q_hi;
            let sum = a / (2.0 * s.b_lo);
            vec![CournotRoe::Segment {
                from: [q, sum - q],
                to: [sum - q, q],
            }]
        }
        CournotCase::ThreeIII => {
            let den = 2.0 * s.b_lo * p.db() + s.gamma_hi * p.dg();
            let (q3, q4) = (a * p.db() / den, a * p.dg() / den);
            vec![
                CournotRoe::Point { q: [q3, q4] },
                sym(roe2),
                CournotRoe::Point { q: [q4, q3] },
            ]
        }
    };
    Ok(RoeSet { case, equilibria })
}

/// Profit minimized over the two scaled segment endpoints.
pub fn worst_case_profit(p: &CournotParams, q_i: f64, q_opp: f64) -> f64 {
    let s = scaled_params(p);
    let profit = |b: f64, g: f64| (p.a - g * q_opp - b * q_i) * q_i;
    profit(s.b_hi, s.gamma_lo).min(profit(s.b_lo, s.gamma_hi))
}

/// The duopoly as a generic game on `[0, q_max]²` with parameters `(b, γ)`.
pub fn to_game(p: &CournotParams, q_max: f64) -> Result<Game> {
    p.validate()?;
    let action = ActionInterval::new(0.0, q_max)?;
    let players = (1..=2)
        .map(|i| {
            let j = 3 - i;
            let parse = |s: String| Expression::parse(&s);
            Ok(Player {
                action,
                payoff: PayoffForm::new(
                    parse(format!("{:?}*x{i}", p.a))?,
                    vec![
                        PayoffTerm {
                            param: 1,
                            coeff: Coefficient::Expr(parse(format!("-(x{i}^2)"))?),
                        },
                        PayoffTerm {
                            param: 2,
                            coeff: Coefficient::Expr(parse(format!("-(x{j}*x{i})"))?),
                        },
                    ],
                ),
                uncertainty: UncertaintyPolytope::new(
                    vec![vec![p.b_hi, p.gamma_lo], vec![p.b_lo, p.gamma_hi]],
                    vec![p.b_hat, p.gamma_hat],
                )?,
                delta: p.delta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Game::new(players)?)
}

/// An action bound that contains every reaction at every level.
pub fn default_q_max(p: &CournotParams) -> f64 {
    let b = p.b_lo.min(p.b_hat);
    if b > 0.0 {
        1.2 * p.a / (2.0 * b)
    } else {
        2.0 * p.a / p.gamma_lo.max(p.gamma_hat).max(1e-3)
    }
}
