//! `ffcombat` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ffcombat_core::montecarlo::{
    all_strategies, best_strategy_map, evaluate_strategy_with_rule, tau_sweep, write_report_grid,
    write_report_table, write_tau_histogram, Grid, SweepSpec, TauSweepSpec, DEFAULT_TRIALS,
};
use ffcombat_core::strategy::heuristic_policy_with_rule;
use ffcombat_core::structure::analyze_policy_bands;
use ffcombat_core::table_io::{fmt_prob, write_binary, write_text};
use ffcombat_core::{
    query, solve, GameState, LuckRule, OddsConvention, PolicyTableF64, SolverConfig,
    ThresholdRule,
};
use serde::Serialize;

use crate::advice::{advise, Advice};
use crate::api::{self, AppState};
use crate::cache::TableCache;
use crate::session::{solver_config_for, validate_stats, HeroStats, OpponentStats};
use crate::SCHEMA_VERSION;

pub const LISTEN_ENV: &str = "FFCOMBAT_LISTEN";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Parser, Debug)]
#[command(name = "ffcombat", version, about = "Optimal luck use in Fighting Fantasy combat")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the optimal policy table for one skill difference.
    Solve(SolveArgs),
    /// Recommend luck use for a combat state.
    Advise(AdviseArgs),
    /// Estimate the victory probability of a strategy by simulation.
    Simulate(SimulateArgs),
    /// Compare heuristic strategies over a grid of starting states.
    Sweep(SweepArgs),
    /// Run the HTTP advisor.
    Serve(ServeArgs),
    /// Write a policy table or its structure report.
    Export(ExportArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Odds {
    Renormalized,
    Raw,
}

impl From<Odds> for OddsConvention {
    fn from(o: Odds) -> Self {
        match o {
            Odds::Renormalized => OddsConvention::Renormalized,
            Odds::Raw => OddsConvention::Raw,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Luck is used when `l >= tau`.
    AtLeast,
    /// Luck is used when `l > tau`.
    Above,
}

impl From<Rule> for ThresholdRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::AtLeast => ThresholdRule::AtLeast,
            Rule::Above => ThresholdRule::Above,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    /// Hero skill minus opponent skill.
    #[arg(long, allow_hyphen_values = true)]
    pub dk: i32,
    #[arg(long, default_value_t = 24)]
    pub max_s_h: i32,
    #[arg(long, default_value_t = 24)]
    pub max_s_o: i32,
    #[arg(long, default_value_t = 12)]
    pub max_l: i32,
    #[arg(long, value_enum, default_value_t = Odds::Renormalized)]
    pub odds: Odds,
}

impl TableArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            dk: self.dk,
            max_s_h: self.max_s_h,
            max_s_o: self.max_s_o,
            max_l: self.max_l,
            odds: self.odds.into(),
            ..SolverConfig::default()
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Binary,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Also write the table here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    pub format: TableFormat,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct AdviseArgs {
    /// Hero as SKILL/STAMINA/LUCK, for example 10/22/12.
    #[arg(long, value_parser = parse_hero)]
    pub hero: HeroStats,
    /// Opponent as SKILL/STAMINA, for example 12/21.
    #[arg(long, value_parser = parse_opponent)]
    pub opponent: OpponentStats,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub dk: i32,
    #[arg(long)]
    pub s_h: i32,
    #[arg(long)]
    pub s_o: i32,
    #[arg(long)]
    pub l: i32,
    /// Heuristic strategy id, 0 to 8.
    #[arg(long, default_value_t = 0, conflicts_with = "optimal")]
    pub strategy: u8,
    #[arg(long, default_value_t = 0)]
    pub tau: i32,
    #[arg(long, value_enum, default_value_t = Rule::AtLeast)]
    pub rule: Rule,
    /// Follow the solved optimal policy instead of a heuristic.
    #[arg(long)]
    pub optimal: bool,
    /// Luck tests succeed with this fixed probability and cost nothing.
    #[arg(long)]
    pub constant_q: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Values as a list of integers and inclusive ranges, for example "-3..3".
    #[arg(long, allow_hyphen_values = true, value_parser = parse_list)]
    pub dk: IntList,
    #[arg(long, value_parser = parse_list, default_value = "1..24")]
    pub s_h: IntList,
    #[arg(long, value_parser = parse_list, default_value = "1..24")]
    pub s_o: IntList,
    #[arg(long, value_parser = parse_list, default_value = "12")]
    pub l: IntList,
    /// Strategy ids to compare against never using luck.
    #[arg(long, value_parser = parse_list, default_value = "1..8")]
    pub strategies: IntList,
    #[arg(long, default_value_t = 0)]
    pub tau: i32,
    #[arg(long, value_enum, default_value_t = Rule::AtLeast)]
    pub rule: Rule,
    /// Find the best threshold per cell for strategies 1 to 3 instead.
    #[arg(long)]
    pub tau_sweep: bool,
    #[arg(long, value_parser = parse_list, default_value = "2..12")]
    pub taus: IntList,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One row per cell and strategy.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Best strategy per cell as a character grid.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = LISTEN_ENV, default_value = DEFAULT_LISTEN)]
    pub listen: String,
    /// Append session events as JSON lines under this directory.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Text,
    Binary,
    /// Strategy grids with band counts.
    Structure,
    /// Band counts as JSON.
    StructureJson,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, value_enum, default_value_t = ExportFormat::Text)]
    pub format: ExportFormat,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_fields<const N: usize>(s: &str, what: &str) -> Result<[i32; N], String> {
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != N {
        return Err(format!("expected {what}"));
    }
    let mut out = [0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|_| format!("'{p}' is not an integer; expected {what}"))?;
    }
    Ok(out)
}

fn parse_hero(s: &str) -> Result<HeroStats, String> {
    let [skill, stamina, luck] = parse_fields::<3>(s, "SKILL/STAMINA/LUCK")?;
    Ok(HeroStats { skill, stamina, luck })
}

fn parse_opponent(s: &str) -> Result<OpponentStats, String> {
    let [skill, stamina] = parse_fields::<2>(s, "SKILL/STAMINA")?;
    Ok(OpponentStats { skill, stamina })
}

/// Parses "1..4,7,-2..-1" into [1, 2, 3, 4, 7, -2, -1]. A reversed range is empty.
pub fn parse_int_list(s: &str) -> Result<Vec<i32>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let num = |t: &str| t.trim().parse::<i32>().map_err(|_| format!("'{t}' is not an integer"));
        // Skip a leading minus so "-3..-1" splits at the range marker.
        match item[1..].find("..").map(|i| i + 1) {
            Some(i) => out.extend(num(&item[..i])?..=num(&item[i + 2..])?),
            None => out.push(num(item)?),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList(pub Vec<i32>);

fn parse_list(s: &str) -> Result<IntList, String> {
    parse_int_list(s).map(IntList)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_table(table: &PolicyTableF64, format: TableFormat, out: impl Write) -> anyhow::Result<()> {
    match format {
        TableFormat::Text => write_text(table, out)?,
        TableFormat::Binary => write_binary(table, out)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    schema_version: u32,
    config: SolverConfig,
    /// Exact fractions of 1296.
    p_w: String,
    p_d: String,
    p_l: String,
    states: usize,
    luck_states: usize,
    /// Pre-round value at the largest starting state.
    corner: GameState,
    v_p: f64,
    v_p_no_luck: f64,
}

fn run_solve(args: SolveArgs) -> anyhow::Result<()> {
    let config = args.table.config();
    let cache = TableCache::from_env();
    let table = cache.get(&config)?;
    let odds = table.odds();
    let luck_states = table
        .cells()
        .filter(|&(h, o, l)| l > 0 && table.strategy_code(h, o, l).is_ok_and(|c| c.digit().is_some()))
        .count();
    let corner = GameState::new(config.max_s_h, config.max_s_o, config.max_l, config.dk);
    let q = query(&table, &corner, None)?;
    let summary = SolveSummary {
        schema_version: SCHEMA_VERSION,
        config,
        p_w: odds.p_w.to_string(),
        p_d: odds.p_d.to_string(),
        p_l: odds.p_l.to_string(),
        states: table.len(),
        luck_states,
        corner,
        v_p: q.v_p,
        v_p_no_luck: q.baseline,
    };
    if let Some(path) = &args.output {
        let mut out = create(path)?;
        write_table(&table, args.format, &mut out)?;
        out.flush()?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!(
            "dk={} bounds s_h<={} s_o<={} l<={} odds={:?}",
            config.dk, config.max_s_h, config.max_s_o, config.max_l, config.odds
        );
        println!("p_w={} p_d={} p_l={}", summary.p_w, summary.p_d, summary.p_l);
        println!("states={} luck_states={}", summary.states, summary.luck_states);
        println!(
            "v_p({},{},{})={} no_luck={}",
            corner.s_h,
            corner.s_o,
            corner.l,
            fmt_prob(summary.v_p),
            fmt_prob(summary.v_p_no_luck)
        );
        if let Some(path) = &args.output {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AdviseReply {
    schema_version: u32,
    hero: HeroStats,
    opponent: OpponentStats,
    advice: Advice,
}

fn run_advise(args: AdviseArgs) -> anyhow::Result<()> {
    validate_stats(&args.hero, &args.opponent)?;
    let cache = TableCache::from_env();
    let table = cache.get(&solver_config_for(&args.hero, &args.opponent))?;
    let state = GameState::new(
        args.hero.stamina,
        args.opponent.stamina,
        args.hero.luck,
        args.hero.skill - args.opponent.skill,
    );
    let advice = advise(&table, &state)?;
    if args.json {
        let reply = AdviseReply { schema_version: SCHEMA_VERSION, hero: args.hero, opponent: args.opponent, advice };
        println!("{}", serde_json::to_string_pretty(&reply)?);
        return Ok(());
    }
    println!(
        "hero {}/{}/{} vs opponent {}/{} (dk={})",
        args.hero.skill, args.hero.stamina, args.hero.luck, args.opponent.skill, args.opponent.stamina, state.dk
    );
    println!("recommendation: {}", advice.recommendation);
    println!("v_p optimal:  {}", fmt_prob(advice.v_p));
    println!("v_p no luck:  {}", fmt_prob(advice.v_p_no_luck));
    if let Some(grid) = advice.what_if {
        for (name, c) in [("win", grid.win), ("loss", grid.loss)] {
            let lucky = c.use_luck.map_or_else(|| "n/a".to_string(), fmt_prob);
            println!("after a {name:<4}: no luck {}  use luck {lucky}", fmt_prob(c.no_luck));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReply {
    schema_version: u32,
    state: GameState,
    policy: String,
    trials: u64,
    seed: u64,
    wins: u64,
    estimate: f64,
    stderr: f64,
}

fn run_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let state = GameState::new(args.s_h, args.s_o, args.l, args.dk);
    let rule = match args.constant_q {
        Some(q) if (0.0..=1.0).contains(&q) => LuckRule::Constant { q },
        Some(q) => bail!("constant-q must lie in [0, 1], got {q}"),
        None => LuckRule::Depleting,
    };
    let (policy, est) = if args.optimal {
        let config = SolverConfig {
            dk: args.dk,
            max_s_h: args.s_h.max(1),
            max_s_o: args.s_o.max(1),
            max_l: args.l.max(0),
            ..SolverConfig::default()
        };
        let table = TableCache::from_env().get(&config)?;
        ("optimal".to_string(), evaluate_strategy_with_rule(&state, &*table, rule, args.trials, args.seed)?)
    } else {
        let p = heuristic_policy_with_rule(args.strategy, args.tau, args.rule.into())?;
        (
            format!("strategy {} tau {} {:?}", p.id, p.tau, p.rule),
            evaluate_strategy_with_rule(&state, &p, rule, args.trials, args.seed)?,
        )
    };
    if args.json {
        let reply = SimulateReply {
            schema_version: SCHEMA_VERSION,
            state,
            policy,
            trials: est.trials,
            seed: args.seed,
            wins: est.wins,
            estimate: est.estimate,
            stderr: est.stderr,
        };
        println!("{}", serde_json::to_string_pretty(&reply)?);
    } else {
        println!("{policy} from s_h={} s_o={} l={} dk={}", state.s_h, state.s_o, state.l, state.dk);
        println!("v_p ~ {:.6} +- {:.6} ({} of {} trials)", est.estimate, est.stderr, est.wins, est.trials);
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let grid = Grid { dks: args.dk.0.clone(), s_h: args.s_h.0.clone(), s_o: args.s_o.0.clone(), l: args.l.0.clone() };
    grid.validate()?;
    let stdout = io::stdout();
    if args.tau_sweep {
        let strategies = args
            .strategies
            .0
            .iter()
            .map(|&s| u8::try_from(s).context("strategy ids are small nonnegative integers"))
            .collect::<anyhow::Result<Vec<u8>>>()?;
        let spec = TauSweepSpec {
            grid,
            strategies,
            taus: args.taus.0.clone(),
            rule: args.rule.into(),
            trials: args.trials,
            seed: args.seed,
        };
        let hist = tau_sweep(&spec)?;
        write_tau_histogram(&hist, stdout.lock())?;
        if let Some(path) = &args.json {
            let mut out = create(path)?;
            serde_json::to_writer_pretty(&mut out, &Versioned { schema_version: SCHEMA_VERSION, report: &hist })?;
            out.flush()?;
        }
        return Ok(());
    }
    let rule: ThresholdRule = args.rule.into();
    let strategies = if args.strategies.0.is_empty() {
        all_strategies(args.tau, rule)
    } else {
        args.strategies
            .0
            .iter()
            .map(|&s| {
                let id = u8::try_from(s).context("strategy ids are small nonnegative integers")?;
                Ok(heuristic_policy_with_rule(id, args.tau, rule)?)
            })
            .collect::<anyhow::Result<Vec<_>>>()?
    };
    let spec = SweepSpec { grid, strategies, trials: args.trials, seed: args.seed };
    let report = best_strategy_map(&spec)?;
    write_report_grid(&report, stdout.lock())?;
    if let Some(path) = &args.csv {
        let mut out = create(path)?;
        write_report_table(&report, &mut out)?;
        out.flush()?;
    }
    if let Some(path) = &args.grid {
        let mut out = create(path)?;
        write_report_grid(&report, &mut out)?;
        out.flush()?;
    }
    if let Some(path) = &args.json {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &Versioned { schema_version: SCHEMA_VERSION, report: &report })?;
        out.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T> {
    schema_version: u32,
    report: &'a T,
}

fn run_serve(args: ServeArgs) -> anyhow::Result<()> {
    let cache = Arc::new(TableCache::from_env());
    let mut state = AppState::new(cache);
    if let Some(dir) = args.log_dir {
        state = state.with_log_dir(dir);
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(api::serve(&args.listen, Arc::new(state)))?;
    Ok(())
}

fn run_export(args: ExportArgs) -> anyhow::Result<()> {
    let config = args.table.config();
    config.validate()?;
    let table: PolicyTableF64 = solve(&config, TableCache::from_env().dice())?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        ExportFormat::Text => write_text(&table, &mut out)?,
        ExportFormat::Binary => write_binary(&table, &mut out)?,
        ExportFormat::Structure => {
            for slice in analyze_policy_bands(&table) {
                writeln!(out, "{}", slice.render())?;
            }
        }
        ExportFormat::StructureJson => {
            let slices = analyze_policy_bands(&table);
            serde_json::to_writer_pretty(&mut out, &Versioned { schema_version: SCHEMA_VERSION, report: &slices })?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Advise(a) => run_advise(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Serve(a) => run_serve(a),
        Command::Export(a) => run_export(a),
    }
}
