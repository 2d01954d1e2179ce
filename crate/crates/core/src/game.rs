//! Robust-game data model and the JSON game-file format.
//!
//! Each player `i` has a scalar action interval, a payoff that is affine in
//! the uncertain parameter vector `α`,
//!
//! ```text
//! f(α; x) = c0(x) + Σk α[k] · ck(x)
//! ```
//!
//! an uncertainty polytope with nominal point `α⁰`, and an uncertainty level
//! `δ ∈ [0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, GameError, Result};
use crate::expr::Expression;
use crate::polytope::{scale_uncertainty, ScaledVertexSet, UncertaintyPolytope};

/// Closed action interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ActionInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GameError> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(GameError::Schema {
                field: "action".into(),
                message: format!("[{lo}, {hi}] is not a finite non-empty interval"),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `n` evenly spaced points including both ends (`n ≥ 2`).
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        let step = self.width() / (n - 1) as f64;
        (0..n).map(move |k| if k + 1 == n { self.hi } else { self.lo + step * k as f64 })
    }
}

/// Multiplier applied to one uncertain parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Expr(Expression),
    /// `-1` whenever the owner's action differs from `at`, `0` at `at`
    /// exactly. Used by the ε-Nash embedding; not expressible in game files.
    DeviationPenalty { player: usize, at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTerm {
    /// 1-based parameter index.
    pub param: usize,
    pub coeff: Coefficient,
}

/// `c0(x) + Σ α[param] · coeff(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffForm {
    constant: Expression,
    terms: Vec<PayoffTerm>,
}

/// The payoff at a fixed profile, as an affine function of `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSlice {
    pub constant: f64,
    /// `(0-based parameter index, coefficient)`.
    pub coeffs: Vec<(usize, f64)>,
}

impl AffineSlice {
    pub fn at(&self, alpha: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .fold(self.constant, |acc, (k, c)| acc + alpha[*k] * c)
    }
}

impl PayoffForm {
    pub fn new(constant: Expression, terms: Vec<PayoffTerm>) -> Self {
        Self { constant, terms }
    }

    pub fn constant(&self) -> &Expression {
        &self.constant
    }

    pub fn terms(&self) -> &[PayoffTerm] {
        &self.terms
    }

    pub fn slice(&self, x: &[f64]) -> Result<AffineSlice> {
        let constant = self.constant.eval_at(x)?;
        let coeffs = self
            .terms
            .iter()
            .map(|t| {
                let c = match &t.coeff {
                    Coefficient::Expr(e) => e.eval_at(x)?,
                    Coefficient::DeviationPenalty { player, at } => {
                        if x[*player] == *at {
                            0.0
                        } else {
                            -1.0
                        }
                    }
                };
                Ok((t.param - 1, c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AffineSlice { constant, coeffs })
    }

    pub fn eval(&self, alpha: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.slice(x)?.at(alpha))
    }

    /// Polynomial degree in the 0-based action `var`, if every piece is a
    /// polynomial in it.
    pub fn degree_in(&self, var: usize) -> Option<u32> {
        let mut d = self.constant.degree_in(var + 1)?;
        for t in &self.terms {
            match &t.coeff {
                Coefficient::Expr(e) => d = d.max(e.degree_in(var + 1)?),
                Coefficient::DeviationPenalty { .. } => return None,
            }
        }
        Some(d)
    }

    pub fn has_deviation_penalty(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t.coeff, Coefficient::DeviationPenalty { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub action: ActionInterval,
    pub payoff: PayoffForm,
    pub uncertainty: UncertaintyPolytope,
    pub delta: f64,
}

/// A validated robust game. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    players: Vec<Player>,
}

impl Game {
    pub fn new(players: Vec<Player>) -> Result<Self, GameError> {
        let n = players.len();
        if n == 0 {
            return Err(GameError::Schema {
                field: "player".into(),
                message: "a game needs at least one player".into(),
            });
        }
        for (i, p) in players.iter().enumerate() {
            let at = |f: &str| format!("player[{i}].{f}");
            if !(0.0..=1.0).contains(&p.delta) {
                return Err(GameError::DeltaOutOfRange {
                    field: at("delta"),
                    value: p.delta,
                });
            }
            let dim = p.uncertainty.dim();
            let mut seen = vec![false; dim];
            for (j, t) in p.payoff.terms.iter().enumerate() {
                if t.param == 0 || t.param > dim {
                    return Err(GameError::Schema {
                        field: at(&format!("payoff.terms[{j}].param")),
                        message: format!("parameter {} outside 1..={dim}", t.param),
                    });
                }
                if std::mem::replace(&mut seen[t.param - 1], true) {
                    return Err(GameError::Schema {
                        field: at(&format!("payoff.terms[{j}].param")),
                        message: format!("parameter {} appears twice", t.param),
                    });
                }
                match &t.coeff {
                    Coefficient::Expr(e) => {
                        check_vars(e, n, at(&format!("payoff.terms[{j}].coeff")))?
                    }
                    Coefficient::DeviationPenalty { player, .. } if *player >= n => {
                        return Err(GameError::Schema {
                            field: at(&format!("payoff.terms[{j}]")),
                            message: "penalty refers to a missing player".into(),
                        })
                    }
                    Coefficient::DeviationPenalty { .. } => {}
                }
            }
            check_vars(&p.payoff.constant, n, at("payoff.const"))?;
        }
        Ok(Self { players })
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, i: usize) -> Result<&Player> {
        self.players.get(i).ok_or(Error::PlayerIndex {
            index: i,
            players: self.n(),
        })
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.players.iter().map(|p| p.delta).collect()
    }

    /// Extreme points of player `i`'s uncertainty set at the game's level.
    pub fn scaled_vertices(&self, i: usize) -> Result<ScaledVertexSet> {
        let p = self.player(i)?;
        Ok(scale_uncertainty(&p.uncertainty, p.delta)?)
    }

    /// Same game with every player's level set to `delta`.
    pub fn with_uniform_delta(&self, delta: f64) -> Result<Self, GameError> {
        let mut players = self.players.clone();
        for p in &mut players {
            p.delta = delta;
        }
        Self::new(players)
    }

    pub fn with_deltas(&self, deltas: &[f64]) -> Result<Self, GameError> {
        if deltas.len() != self.n() {
            return Err(GameError::Schema {
                field: "delta".into(),
                message: format!("{} levels for {} players", deltas.len(), self.n()),
            });
        }
        let mut players = self.players.clone();
        for (p, d) in players.iter_mut().zip(deltas) {
            p.delta = *d;
        }
        Self::new(players)
    }

    /// The δ = 0 counterpart.
    pub fn nominal_counterpart(&self) -> Self {
        self.with_uniform_delta(0.0).expect("0 is a valid level")
    }

    pub fn check_profile(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::ProfileLength {
                got: x.len(),
                expected: self.n(),
            });
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, GameError> {
        let file: GameFile =
            serde_json::from_slice(bytes).map_err(|e| GameError::Json(e.to_string()))?;
        file.into_game()
    }

    pub fn to_file(&self) -> Result<GameFile, GameError> {
        GameFile::from_game(self)
    }
}

/// Parses and validates a game file.
pub fn load_game(bytes: &[u8]) -> Result<Game, GameError> {
    Game::from_json(bytes)
}

fn check_vars(e: &Expression, n: usize, field: String) -> Result<(), GameError> {
    match e.variable_indices().into_iter().find(|k| *k > n) {
        Some(k) => Err(GameError::UnknownVariable {
            field,
            name: format!("x{k}"),
        }),
        None => Ok(()),
    }
}

/// On-disk layout of a game. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: usize,
    pub player: Vec<PlayerFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerFile {
    pub action: [f64; 2],
    pub payoff: PayoffFile,
    pub uncertainty: UncertaintyFile,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffFile {
    #[serde(rename = "const")]
    pub constant: String,
    #[serde(default)]
    pub terms: Vec<TermFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub param: usize,
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyFile {
    pub vertices: Vec<Vec<f64>>,
    pub nominal: Vec<f64>,
}

impl GameFile {
    pub fn into_game(self) -> Result<Game, GameError> {
        if self.players != self.player.len() {
            return Err(GameError::Schema {
                field: "players".into(),
                message: format!(
                    "declares {} players but {} are listed",
                    self.players,
                    self.player.len()
                ),
            });
        }
        let players = self
            .player
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let at = |f: &str| format!("player[{i}].{f}");
                let parse = |src: &str, field: String| {
                    Expression::parse(src).map_err(|source| GameError::Expression { field, source })
                };
                let action = ActionInterval::new(p.action[0], p.action[1]).map_err(|e| match e {
                    GameError::Schema { message, .. } => GameError::Schema {
                        field: at("action"),
                        message,
                    },
                    other => other,
                })?;
                let constant = parse(&p.payoff.constant, at("payoff.const"))?;
                let terms = p
                    .payoff
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(j, t)| {
                        Ok(PayoffTerm {
                            param: t.param,
                            coeff: Coefficient::Expr(parse(
                                &t.coeff,
                                at(&format!("payoff.terms[{j}].coeff")),
                            )?),
                        })
                    })
                    .collect::<Result<Vec<_>, GameError>>()?;
                let uncertainty = UncertaintyPolytope::new(p.uncertainty.vertices, p.uncertainty.nominal)
                    .map_err(|e| match e {
                        GameError::Schema { field, message } => GameError::Schema {
                            field: at(&field),
                            message,
                        },
                        other => other,
                    })?;
                Ok(Player {
                    action,
                    payoff: PayoffForm::new(constant, terms),
                    uncertainty,
                    delta: p.delta,
                })
            })
            .collect::<Result<Vec<_>, GameError>>()?;
        Game::new(players)
    }

    pub fn from_game(g: &Game) -> Result<Self, GameError> {
        let player = g
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let terms = p
                    .payoff
                    .terms
                    .iter()
                    .map(|t| match &t.coeff {
                        Coefficient::Expr(e) => Ok(TermFile {
                            param: t.param,
                            coeff: e.source().to_string(),
                        }),
                        Coefficient::DeviationPenalty { .. } => Err(GameError::Schema {
                            field: format!("player[{i}].payoff.terms"),
                            message: "deviation penalties cannot be written to a game file".into(),
                        }),
                    })
                    .collect::<Result<Vec<_>, GameError>>()?;
                Ok(PlayerFile {
                    action: [p.action.lo, p.action.hi],
                    payoff: PayoffFile {
                        constant: p.payoff.constant.source().to_string(),
                        terms,
                    },
                    uncertainty: UncertaintyFile {
                        vertices: p.uncertainty.vertices().to_vec(),
                        nominal: p.uncertainty.nominal().to_vec(),
                    },
                    delta: p.delta,
                })
            })
            .collect::<Result<Vec<_>, GameError>>()?;
        Ok(Self {
            players: player.len(),
            player,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprError;

    const EXAMPLE1: &str = r#"{
      "players": 2,
      "player": [
        {"action": [0, 1.8],
         "payoff": {"const": "x1*(1 - x2)", "terms": [{"param": 1, "coeff": "(1 - x1)*x1"}]},
         "uncertainty": {"vertices": [[0.1], [0.8]], "nominal": [0.6]},
         "delta": 1},
        {"action": [0, 1.8],
         "payoff": {"const": "x2*(1 - x1)", "terms": [{"param": 1, "coeff": "(1 - x2)*x2"}]},
         "uncertainty": {"vertices": [[0.1], [0.8]], "nominal": [0.6]},
         "delta": 1}
      ]
    }"#;

    #[test]
    fn loads_example_one() {
        let g = load_game(EXAMPLE1.as_bytes()).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.players()[0].action, ActionInterval { lo: 0.0, hi: 1.8 });
        // (1 + a(1 - x1) - x2) x1 at a = 0.6, x = (1, 0)
        let v = g.players()[0].payoff.eval(&[0.6], &[1.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(g.players()[0].payoff.degree_in(0), Some(2));
        assert_eq!(g.players()[0].payoff.degree_in(1), Some(1));
    }

    #[test]
    fn delta_out_of_range() {
        let bad = EXAMPLE1.replacen("\"delta\": 1}", "\"delta\": 1.5}", 1);
        let err = load_game(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, GameError::DeltaOutOfRange { .. }));
        assert!(err.to_string().contains("delta out of range"));
    }

    #[test]
    fn unknown_variable() {
        let bad = EXAMPLE1.replacen("x1*(1 - x2)", "x1*(1 - x3)", 1);
        let err = load_game(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unknown variable x3"), "{err}");
        assert!(err.to_string().contains("player[0].payoff.const"), "{err}");
    }

    #[test]
    fn schema_diagnostics_name_the_field() {
        let extra = EXAMPLE1.replacen("\"delta\": 1}", "\"delta\": 1, \"colour\": 3}", 1);
        let err = load_game(extra.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");

        let missing = EXAMPLE1.replacen(",\n         \"delta\": 1}", "}", 1);
        assert_ne!(missing, EXAMPLE1);
        let err = load_game(missing.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("delta"), "{err}");

        let count = EXAMPLE1.replacen("\"players\": 2", "\"players\": 3", 1);
        let err = load_game(count.as_bytes()).unwrap_err().to_string();
        assert!(err.starts_with("players:"), "{err}");

        let dim = EXAMPLE1.replacen("[[0.1], [0.8]]", "[[0.1], [0.8, 1.0]]", 1);
        let err = load_game(dim.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("player[0].uncertainty.vertices[1]"), "{err}");

        let param = EXAMPLE1.replacen("\"param\": 1", "\"param\": 2", 1);
        let err = load_game(param.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("player[0].payoff.terms[0].param"), "{err}");

        let interval = EXAMPLE1.replacen("[0, 1.8]", "[2, 1.8]", 1);
        let err = load_game(interval.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("player[0].action"), "{err}");
    }

    #[test]
    fn expression_errors_carry_the_field() {
        let bad = EXAMPLE1.replacen("(1 - x1)*x1", "(1 - x1)**x1", 1);
        match load_game(bad.as_bytes()).unwrap_err() {
            GameError::Expression { field, source } => {
                assert_eq!(field, "player[0].payoff.terms[0].coeff");
                assert!(matches!(source, ExprError::Syntax { offset: 8, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let g = load_game(EXAMPLE1.as_bytes()).unwrap();
        let text = serde_json::to_string(&g.to_file().unwrap()).unwrap();
        assert_eq!(load_game(text.as_bytes()).unwrap(), g);
    }

    #[test]
    fn grid_hits_both_ends() {
        let a = ActionInterval::new(0.0, 1.8).unwrap();
        let pts: Vec<f64> = a.grid(7).collect();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[6], 1.8);
    }
}
