//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, parse or argument error, 2 mathematical
//! finding (validation failure, profile that is not an equilibrium, ...).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use robgame::cournot::{self, CournotParams, CournotRoe};
use robgame::equilibrium::ROE_CHECK_TOL;
use robgame::report::{fmt9, to_rounded_json};
use robgame::{
    cost_continuity_probe, cost_upper_bound, delta_grid, embed_epsilon_nash, find_roe, load_game, opportunity_cost,
    sweep_delta, trace_equilibrium, validate_assumptions, verify_roe, worst_case_frontier, EquilibriumReport, Error,
    Game, RoeOptions, Severity, TraceOptions,
};

#[derive(Parser)]
#[command(name = "robgame", version, about = "Solver for robust games with polytopal payoff uncertainty")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate robust-optimization equilibria.
    Solve(SolveArgs),
    /// Enumerate equilibria over a range of uncertainty levels.
    Sweep(SweepArgs),
    /// Follow an equilibrium as the uncertainty level decreases to 0.
    Trace(TraceArgs),
    /// Opportunity cost of uncertainty and its upper bound.
    Cost(CostArgs),
    /// Embed an ε-Nash point of the nominal game as an equilibrium of a robust game.
    Embed(EmbedArgs),
    /// Worst-case vertices over the action-profile grid.
    Frontier(FrontierArgs),
    /// Check the model assumptions.
    Validate(ValidateArgs),
    /// Closed forms for the robust Cournot duopoly.
    #[command(subcommand)]
    Cournot(CournotCmd),
}

#[derive(Args)]
struct SolveArgs {
    game: PathBuf,
    /// Set every player's uncertainty level.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1025)]
    grid: usize,
    /// Residual tolerance [default: 1e-8, or 1e-6 with --verify since
    /// reported profiles carry 9 significant digits]
    #[arg(long)]
    tol: Option<f64>,
    /// Re-check the profiles of a previously emitted JSON report.
    #[arg(long)]
    verify: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    game: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    #[arg(long, default_value_t = 1025)]
    grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct TraceArgs {
    game: PathBuf,
    /// Starting equilibrium, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    start: Vec<f64>,
    /// Level of the starting equilibrium (default: first player's level in the file).
    #[arg(long)]
    start_delta: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 0.1)]
    jump_tol: f64,
}

#[derive(Args)]
struct CostArgs {
    game: PathBuf,
    /// Full action profile; the entry of the evaluated player is ignored.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    profile: Vec<f64>,
    /// Player number (from 1); all players when omitted.
    #[arg(long)]
    player: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct EmbedArgs {
    game: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    profile: Vec<f64>,
    #[arg(long)]
    eps: f64,
    /// Upper end H of the added uncertainty interval [0, H].
    #[arg(long = "h")]
    h: f64,
}

#[derive(Args)]
struct FrontierArgs {
    game: PathBuf,
    /// Player number (from 1).
    #[arg(long, default_value_t = 1)]
    player: usize,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    game: PathBuf,
    #[arg(long, default_value_t = 50)]
    samples: usize,
}

#[derive(Args)]
struct CournotArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    bhat: f64,
    #[arg(long)]
    ghat: f64,
    #[arg(long)]
    blo: f64,
    #[arg(long)]
    bhi: f64,
    #[arg(long)]
    glo: f64,
    #[arg(long)]
    ghi: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

impl CournotArgs {
    fn params(&self) -> Result<CournotParams, Failure> {
        let p = CournotParams {
            a: self.a,
            b_hat: self.bhat,
            gamma_hat: self.ghat,
            b_lo: self.blo,
            b_hi: self.bhi,
            gamma_lo: self.glo,
            gamma_hi: self.ghi,
            delta: self.delta,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Subcommand)]
enum CournotCmd {
    /// Branch points of the robust reaction.
    Thresholds(CournotArgs),
    /// Robust reaction to the competitor's output.
    Reaction {
        #[command(flatten)]
        params: CournotArgs,
        #[arg(long)]
        q: f64,
    },
    /// Nash equilibrium of the nominal duopoly.
    Nash(CournotArgs),
    /// Multiplicity threshold on the uncertainty level.
    DeltaStar(CournotArgs),
    /// All robust-optimization equilibria with the case label.
    RoeSet(CournotArgs),
    /// Worst-case profit of a firm.
    Profit {
        #[command(flatten)]
        params: CournotArgs,
        #[arg(long)]
        qi: f64,
        #[arg(long)]
        qopp: f64,
    },
}

enum Failure {
    /// Exit 1.
    Input(String),
    /// Exit 2, with whatever output was produced.
    Finding(String, Option<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Game(_)
            | Error::Expr(_)
            | Error::InvalidArgument(_)
            | Error::PlayerIndex { .. }
            | Error::ProfileLength { .. } => Failure::Input(e.to_string()),
            _ => Failure::Finding(e.to_string(), None),
        }
    }
}

impl From<robgame::GameError> for Failure {
    fn from(e: robgame::GameError) -> Self {
        Failure::Input(e.to_string())
    }
}

type Run = Result<String, Failure>;

fn load(path: &Path) -> Result<Game, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    load_game(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn at_level(g: Game, delta: Option<f64>) -> Result<Game, Failure> {
    Ok(match delta {
        Some(d) => g.with_uniform_delta(d)?,
        None => g,
    })
}

fn player_index(game: &Game, player: usize) -> Result<usize, Failure> {
    if player == 0 || player > game.n() {
        return Err(Failure::Input(format!("player {player} out of range 1..={}", game.n())));
    }
    Ok(player - 1)
}

fn json_text<T: Serialize>(data: &T) -> Run {
    let v = to_rounded_json(data).map_err(|e| Failure::Input(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Failure::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Run {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Input(e.to_string()))
}

/// `(eq_index, player, action)` rows; a continuum takes two consecutive
/// indices, one per endpoint.
fn equilibrium_rows(eqs: &[EquilibriumReport]) -> Vec<(usize, usize, f64)> {
    let mut rows = Vec::new();
    let mut index = 0;
    for e in eqs {
        for p in std::iter::once(&e.profile).chain(e.end.as_ref()) {
            rows.extend(p.iter().enumerate().map(|(i, a)| (index, i + 1, *a)));
            index += 1;
        }
    }
    rows
}

fn blocking_findings(game: &Game) -> Result<(), Failure> {
    let findings = validate_assumptions(game, 50)?;
    let blocking: Vec<_> = findings.iter().filter(|f| f.severity == Severity::Error).collect();
    if blocking.is_empty() {
        return Ok(());
    }
    let text = blocking
        .iter()
        .map(|f| format!("player {}: {}", f.player + 1, f.message))
        .collect::<Vec<_>>()
        .join("\n");
    Err(Failure::Finding(text, None))
}

fn roe_options(grid: usize, tol: f64) -> Result<RoeOptions, Failure> {
    if grid < 3 || tol.is_nan() || tol <= 0.0 {
        return Err(Failure::Input("grid must be at least 3 and tol positive".into()));
    }
    Ok(RoeOptions {
        grid,
        tol,
        ..RoeOptions::default()
    })
}

fn cmd_solve(a: &SolveArgs, format: Format) -> Run {
    let game = at_level(load(&a.game)?, a.delta)?;
    if let Some(report) = &a.verify {
        return verify_report(&game, report, a.tol.unwrap_or(ROE_CHECK_TOL), format);
    }
    let opts = roe_options(a.grid, a.tol.unwrap_or(1e-8))?;
    blocking_findings(&game)?;
    let found = find_roe(&game, &opts)?;
    match format {
        Format::Json => json_text(&found),
        Format::Csv => csv_text(
            &["eq_index", "player", "action"],
            equilibrium_rows(&found.equilibria)
                .into_iter()
                .map(|(k, i, x)| vec![k.to_string(), i.to_string(), fmt9(x)])
                .collect(),
        ),
    }
}

fn verify_report(game: &Game, path: &Path, tol: f64, format: Format) -> Run {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let report: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let profile = |v: &Value| -> Option<Vec<f64>> { v.as_array()?.iter().map(Value::as_f64).collect() };
    let eqs = report["equilibria"]
        .as_array()
        .ok_or_else(|| Failure::Input(format!("{}: no equilibria array", path.display())))?;
    let mut checks = Vec::new();
    for e in eqs {
        for key in ["profile", "end"] {
            if e[key].is_null() {
                continue;
            }
            let p = profile(&e[key]).ok_or_else(|| Failure::Input(format!("{}: malformed {key}", path.display())))?;
            let (ok, residual) = verify_roe(game, &p, tol)?;
            checks.push(json!({"profile": p, "residual": residual, "ok": ok}));
        }
    }
    let all_ok = checks.iter().all(|c| c["ok"] == Value::Bool(true));
    let out = match format {
        Format::Json => json_text(&json!({"checks": checks, "ok": all_ok}))?,
        Format::Csv => csv_text(
            &["index", "residual", "ok"],
            checks
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    vec![
                        k.to_string(),
                        fmt9(c["residual"].as_f64().unwrap_or(f64::NAN)),
                        c["ok"].to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    if all_ok {
        Ok(out)
    } else {
        Err(Failure::Finding("some profiles are not equilibria".into(), Some(out)))
    }
}

fn cmd_sweep(a: &SweepArgs, format: Format) -> Run {
    if !(0.0 <= a.from && a.from <= a.to && a.to <= 1.0) || a.steps == 0 {
        return Err(Failure::Input(format!(
            "need 0 <= from <= to <= 1 and steps >= 1 (from {}, to {}, steps {})",
            a.from, a.to, a.steps
        )));
    }
    let game = load(&a.game)?;
    blocking_findings(&game)?;
    let levels = sweep_delta(&game, &delta_grid(a.from, a.to, a.steps), &roe_options(a.grid, a.tol)?)?;
    match format {
        Format::Json => json_text(&json!({
            "levels": levels.iter().map(|(d, s)| json!({"delta": d, "equilibria": s.equilibria, "failures": s.failures})).collect::<Vec<_>>()
        })),
        Format::Csv => {
            let mut rows = Vec::new();
            for (d, s) in &levels {
                for (k, i, x) in equilibrium_rows(&s.equilibria) {
                    rows.push(vec![fmt9(*d), k.to_string(), i.to_string(), fmt9(x)]);
                }
            }
            csv_text(&["delta", "eq_index", "player", "action"], rows)
        }
    }
}

fn cmd_trace(a: &TraceArgs, format: Format) -> Run {
    let game = load(&a.game)?;
    let start_delta = a.start_delta.unwrap_or(game.players()[0].delta);
    let opts = TraceOptions {
        step: a.step,
        jump_tol: a.jump_tol,
        ..TraceOptions::default()
    };
    game.check_profile(&a.start)?;
    let path = trace_equilibrium(&game, &a.start, start_delta, &opts)?;
    let probe = if path.counterpart {
        Some(cost_continuity_probe(&game, &path)?)
    } else {
        None
    };
    match format {
        Format::Json => json_text(&json!({"path": path, "cost_probe": probe})),
        Format::Csv => csv_text(
            &["delta", "epsilon"],
            path.steps.iter().map(|s| vec![fmt9(s.delta), fmt9(s.epsilon)]).collect(),
        ),
    }
}

fn cmd_cost(a: &CostArgs, format: Format) -> Run {
    let game = at_level(load(&a.game)?, a.delta)?;
    game.check_profile(&a.profile)?;
    let players = match a.player {
        Some(p) => vec![player_index(&game, p)?],
        None => (0..game.n()).collect(),
    };
    let mut rows = Vec::new();
    for i in players {
        let c = opportunity_cost(&game, i, &a.profile)?;
        let b = cost_upper_bound(&game, i, &a.profile)?;
        rows.push((i + 1, c, b));
    }
    match format {
        Format::Json => json_text(&json!({
            "costs": rows.iter().map(|(i, c, b)| json!({"player": i, "opportunity_cost": c, "upper_bound": b})).collect::<Vec<_>>()
        })),
        Format::Csv => csv_text(
            &["player", "opportunity_cost", "upper_bound"],
            rows.iter().map(|(i, c, b)| vec![i.to_string(), fmt9(*c), fmt9(*b)]).collect(),
        ),
    }
}

fn cmd_embed(a: &EmbedArgs, format: Format) -> Run {
    let game = load(&a.game)?;
    let cert = embed_epsilon_nash(&game, &a.profile, a.eps, a.h)?;
    let fields = [
        ("eps", cert.eps),
        ("h", cert.h),
        ("delta", cert.delta),
        ("residual", cert.residual),
    ];
    match format {
        Format::Json => json_text(&json!({
            "profile": cert.profile,
            "eps": cert.eps,
            "h": cert.h,
            "delta": cert.delta,
            "residual": cert.residual,
        })),
        Format::Csv => csv_text(
            &["name", "value"],
            fields.iter().map(|(k, v)| vec![k.to_string(), fmt9(*v)]).collect(),
        ),
    }
}

fn cmd_frontier(a: &FrontierArgs, format: Format) -> Run {
    let game = at_level(load(&a.game)?, a.delta)?;
    let i = player_index(&game, a.player)?;
    let rep = worst_case_frontier(&game, i, a.resolution)?;
    match format {
        Format::Json => {
            let mut v = to_rounded_json(&rep).map_err(|e| Failure::Input(e.to_string()))?;
            v["player"] = json!(a.player);
            json_text(&v)
        }
        Format::Csv => csv_text(
            &["vertex", "sources", "active", "unique_count", "profiles"],
            rep.vertices
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    vec![
                        k.to_string(),
                        v.sources.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
                        v.active.to_string(),
                        v.unique_count.to_string(),
                        v.profiles.len().to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

fn cmd_validate(a: &ValidateArgs, format: Format) -> Run {
    let game = load(&a.game)?;
    let findings = validate_assumptions(&game, a.samples)?;
    let out = match format {
        Format::Json => {
            let mut v = to_rounded_json(&json!({"findings": findings})).map_err(|e| Failure::Input(e.to_string()))?;
            for f in v["findings"].as_array_mut().into_iter().flatten() {
                let p = f["player"].as_u64().unwrap_or(0);
                f["player"] = json!(p + 1);
            }
            json_text(&v)?
        }
        Format::Csv => csv_text(
            &["severity", "player", "kind", "vertex", "location", "message"],
            findings
                .iter()
                .map(|f| {
                    let kind = serde_json::to_value(f.kind).ok().and_then(|k| k.as_str().map(String::from));
                    let severity = serde_json::to_value(f.severity).ok().and_then(|k| k.as_str().map(String::from));
                    vec![
                        severity.unwrap_or_default(),
                        (f.player + 1).to_string(),
                        kind.unwrap_or_default(),
                        f.vertex.map(|v| v.to_string()).unwrap_or_default(),
                        f.location
                            .as_ref()
                            .map(|l| l.iter().map(|x| fmt9(*x)).collect::<Vec<_>>().join(" "))
                            .unwrap_or_default(),
                        f.message.clone(),
                    ]
                })
                .collect(),
        )?,
    };
    if findings.is_empty() {
        Ok(out)
    } else {
        Err(Failure::Finding(format!("{} finding(s)", findings.len()), Some(out)))
    }
}

fn scalars(format: Format, fields: &[(&str, f64)]) -> Run {
    match format {
        Format::Json => json_text(&Value::Object(
            fields.iter().map(|(k, v)| (k.to_string(), json!(v))).collect(),
        )),
        Format::Csv => csv_text(
            &["name", "value"],
            fields.iter().map(|(k, v)| vec![k.to_string(), fmt9(*v)]).collect(),
        ),
    }
}

fn cmd_cournot(c: &CournotCmd, format: Format) -> Run {
    match c {
        CournotCmd::Thresholds(p) => {
            let p = p.params()?;
            let t = cournot::thresholds(&p);
            let s = cournot::scaled_params(&p);
            scalars(
                format,
                &[
                    ("q_lo", t.q_lo),
                    ("q_hi", t.q_hi),
                    ("q_m", t.q_m),
                    ("b_hi_delta", s.b_hi),
                    ("b_lo_delta", s.b_lo),
                    ("gamma_hi_delta", s.gamma_hi),
                    ("gamma_lo_delta", s.gamma_lo),
                ],
            )
        }
        CournotCmd::Reaction { params, q } => {
            let p = params.params()?;
            if *q < 0.0 {
                return Err(Failure::Input("q must be non-negative".into()));
            }
            scalars(format, &[("q_opp", *q), ("reaction", cournot::robust_reaction(&p, *q))])
        }
        CournotCmd::Nash(p) => {
            let q = cournot::nominal_nash(&p.params()?);
            scalars(format, &[("q1", q[0]), ("q2", q[1])])
        }
        CournotCmd::DeltaStar(p) => {
            let d = cournot::delta_star(&p.params()?)?;
            match format {
                Format::Json => json_text(&d),
                Format::Csv => {
                    let mut f = vec![("delta_star", d.delta_star), ("interior", if d.interior { 1.0 } else { 0.0 })];
                    if let Some(m) = d.multiplicity_threshold {
                        f.push(("multiplicity_threshold", m));
                    }
                    scalars(format, &f)
                }
            }
        }
        CournotCmd::RoeSet(p) => {
            let set = cournot::roe_set(&p.params()?)?;
            match format {
                Format::Json => json_text(&set),
                Format::Csv => {
                    let mut rows = Vec::new();
                    let mut k = 0;
                    for e in &set.equilibria {
                        let pts = match e {
                            CournotRoe::Point { q } => vec![*q],
                            CournotRoe::Segment { from, to } => vec![*from, *to],
                        };
                        for q in pts {
                            for (i, x) in q.iter().enumerate() {
                                rows.push(vec![set.case.label().to_string(), k.to_string(), (i + 1).to_string(), fmt9(*x)]);
                            }
                            k += 1;
                        }
                    }
                    csv_text(&["case", "eq_index", "player", "action"], rows)
                }
            }
        }
        CournotCmd::Profit { params, qi, qopp } => {
            let p = params.params()?;
            if *qi < 0.0 || *qopp < 0.0 {
                return Err(Failure::Input("outputs must be non-negative".into()));
            }
            scalars(format, &[("profit", cournot::worst_case_profit(&p, *qi, *qopp))])
        }
    }
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, cli.format),
        Command::Sweep(a) => cmd_sweep(a, cli.format),
        Command::Trace(a) => cmd_trace(a, cli.format),
        Command::Cost(a) => cmd_cost(a, cli.format),
        Command::Embed(a) => cmd_embed(a, cli.format),
        Command::Frontier(a) => cmd_frontier(a, cli.format),
        Command::Validate(a) => cmd_validate(a, cli.format),
        Command::Cournot(c) => cmd_cournot(c, cli.format),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (text, message, code) = match run(&cli) {
        Ok(text) => (Some(text), None, 0),
        Err(Failure::Input(m)) => (None, Some(m), 1),
        Err(Failure::Finding(m, text)) => (text, Some(m), 2),
    };
    if let Some(m) = message {
        eprintln!("robgame: {m}");
    }
    if let Some(t) = text {
        if let Err(e) = emit(&cli, &t) {
            eprintln!("robgame: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
