//! Checks of the standing model assumptions on a loaded game.

use serde::Serialize;

use crate::error::Result;
use crate::game::{ActionInterval, Game};
use crate::polytope::hull_membership;
use crate::sample::halton_points;

/// Second differences above this count as a concavity violation.
pub const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    ActionInterval,
    HullMembership,
    Concavity,
    ConcavitySkipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub player: usize,
    pub kind: FindingKind,
    pub message: String,
    /// Scaled-vertex index, for concavity findings.
    pub vertex: Option<usize>,
    /// Action profile at which the violation was detected.
    pub location: Option<Vec<f64>>,
}

/// Opponent profiles at which concavity is sampled, as full profiles with the
/// own entry left at zero.
fn opponent_samples(game: &Game, i: usize, samples: usize) -> Vec<Vec<f64>> {
    let others: Vec<ActionInterval> = (0..game.n())
        .filter(|&j| j != i)
        .map(|j| game.players()[j].action)
        .collect();
    let partial: Vec<Vec<f64>> = match others.len() {
        0 => vec![Vec::new()],
        1 => others[0].grid(samples).map(|v| vec![v]).collect(),
        _ => halton_points(samples, &others),
    };
    partial
        .into_iter()
        .map(|o| {
            let mut x = o;
            x.insert(i, 0.0);
            x
        })
        .collect()
}

/// Largest sampled second difference of `f(α_v; ·, x₋ᵢ)` with its location,
/// for each scaled vertex `v` of player `i`.
fn max_second_differences(game: &Game, i: usize, samples: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let p = game.player(i)?;
    let vertices = game.scaled_vertices(i)?;
    let own: Vec<f64> = p.action.grid(samples).collect();
    let mut out = vec![(f64::NEG_INFINITY, Vec::new()); vertices.len()];
    if p.action.width() == 0.0 || own.len() < 3 {
        return Ok(out);
    }
    for mut x in opponent_samples(game, i, samples) {
        let mut values = vec![Vec::with_capacity(own.len()); vertices.len()];
        for &xi in &own {
            x[i] = xi;
            let slice = p.payoff.slice(&x)?;
            for (v, a) in vertices.vertices().iter().enumerate() {
                values[v].push(slice.at(a));
            }
        }
        for (v, ys) in values.iter().enumerate() {
            for k in 1..own.len() - 1 {
                let d2 = ys[k - 1] - 2.0 * ys[k] + ys[k + 1];
                if d2 > out[v].0 {
                    x[i] = own[k];
                    out[v] = (d2, x.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Checks each player's action interval, nominal hull membership and
/// concavity in the own action at every scaled vertex.
pub fn validate_assumptions(game: &Game, samples: usize) -> Result<Vec<Finding>> {
    let samples = samples.max(3);
    let mut findings = Vec::new();
    for (i, p) in game.players().iter().enumerate() {
        if p.action.width() == 0.0 {
            findings.push(Finding {
                severity: Severity::Warning,
                player: i,
                kind: FindingKind::ActionInterval,
                message: format!("action interval [{}, {}] is a single point", p.action.lo, p.action.hi),
                vertex: None,
                location: None,
            });
        }
        if !hull_membership(&p.uncertainty) {
            findings.push(Finding {
                severity: Severity::Error,
                player: i,
                kind: FindingKind::HullMembership,
                message: format!(
                    "nominal point {:?} is not in the convex hull of the uncertainty vertices",
                    p.uncertainty.nominal()
                ),
                vertex: None,
                location: None,
            });
        }
        if p.payoff.has_deviation_penalty() {
            findings.push(Finding {
                severity: Severity::Info,
                player: i,
                kind: FindingKind::ConcavitySkipped,
                message: "payoff carries a deviation penalty; concavity not checked".into(),
                vertex: None,
                location: None,
            });
            continue;
        }
        for (v, (d2, at)) in max_second_differences(game, i, samples)?.into_iter().enumerate() {
            if d2 > CONCAVITY_TOL {
                findings.push(Finding {
                    severity: Severity::Error,
                    player: i,
                    kind: FindingKind::Concavity,
                    message: format!("payoff is not concave in own action: second difference {d2:e} at scaled vertex {v}"),
                    vertex: Some(v),
                    location: Some(at),
                });
            }
        }
    }
    Ok(findings)
}

/// True when every sampled second difference is strictly negative beyond the
/// concavity tolerance, for every player and scaled vertex.
pub fn is_strictly_concave(game: &Game, samples: usize) -> Result<bool> {
    for i in 0..game.n() {
        if game.players()[i].payoff.has_deviation_penalty() {
            return Ok(false);
        }
        for (d2, _) in max_second_differences(game, i, samples.max(3))? {
            if d2 > -CONCAVITY_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
