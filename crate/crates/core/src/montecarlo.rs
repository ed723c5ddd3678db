//! Batch simulation of luck strategies.
//!
//! Each cell of a sweep is an initial state. All strategies evaluated in a
//! cell draw from the same per-trial streams (common random numbers), which
//! keeps comparisons between strategies, or between thresholds of one
//! strategy, much tighter than independent runs would.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_combat, GameState, LuckPolicy, LuckRule, NeverUseLuck};
use crate::error::{Error, Result};
use crate::rng;
use crate::strategy::{heuristic_policy_with_rule, HeuristicPolicy, ThresholdRule};

/// Estimate of a victory probability from repeated combats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / N)`.
    pub stderr: f64,
}

impl CellEstimate {
    pub fn from_counts(trials: u64, wins: u64) -> Self {
        let p = wins as f64 / trials as f64;
        CellEstimate {
            trials,
            wins,
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Whether `self` beats `other` by more than `z` pooled standard errors.
    pub fn beats(&self, other: &CellEstimate, z: f64) -> bool {
        let pooled = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        self.estimate - other.estimate > z * pooled
    }
}

/// Pooled standard errors a strategy must gain over never using luck.
pub const SIGNIFICANCE_Z: f64 = 2.0;

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Runs `trials` combats from `initial` in cell `cell` of seed `seed`.
pub fn simulate_cell<P>(
    initial: &GameState,
    policy: &P,
    rule: LuckRule,
    trials: u64,
    seed: u64,
    cell: u64,
) -> CellEstimate
where
    P: LuckPolicy + ?Sized,
{
    let wins = (0..trials)
        .filter(|&trial| {
            let mut rng = rng::stream(seed, cell, trial);
            run_combat(initial, policy, rule, &mut rng).s_o <= 0
        })
        .count() as u64;
    CellEstimate::from_counts(trials, wins)
}

/// Estimates the victory probability of `policy` from `initial`.
pub fn evaluate_strategy<P>(initial: &GameState, policy: &P, trials: u64, seed: u64) -> Result<CellEstimate>
where
    P: LuckPolicy + ?Sized,
{
    evaluate_strategy_with_rule(initial, policy, LuckRule::Depleting, trials, seed)
}

pub fn evaluate_strategy_with_rule<P>(
    initial: &GameState,
    policy: &P,
    rule: LuckRule,
    trials: u64,
    seed: u64,
) -> Result<CellEstimate>
where
    P: LuckPolicy + ?Sized,
{
    if !initial.is_ongoing() {
        return Err(Error::InvalidState("initial state must be ongoing".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    Ok(simulate_cell(initial, policy, rule, trials, seed, 0))
}

/// Grid of initial states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dks: Vec<i32>,
    pub s_h: Vec<i32>,
    pub s_o: Vec<i32>,
    pub l: Vec<i32>,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.dks.is_empty() || self.s_h.is_empty() || self.s_o.is_empty() || self.l.is_empty() {
            return Err(Error::InvalidSpec("every grid axis needs at least one value".into()));
        }
        if self.s_h.iter().chain(&self.s_o).any(|&s| s < 1) {
            return Err(Error::InvalidSpec("grid staminas must be positive".into()));
        }
        if self.l.iter().any(|&l| l < 0) {
            return Err(Error::InvalidSpec("grid luck must be nonnegative".into()));
        }
        Ok(())
    }

    /// Cells ordered by `dk`, then `l`, then `s_h`, then `s_o`.
    pub fn cells(&self) -> Vec<GameState> {
        let mut out = Vec::with_capacity(self.dks.len() * self.l.len() * self.s_h.len() * self.s_o.len());
        for &dk in &self.dks {
            for &l in &self.l {
                for &s_h in &self.s_h {
                    for &s_o in &self.s_o {
                        out.push(GameState::new(s_h, s_o, l, dk));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub grid: Grid,
    pub strategies: Vec<HeuristicPolicy>,
    pub trials: u64,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.strategies.is_empty() {
            return Err(Error::InvalidSpec("no strategies to evaluate".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: HeuristicPolicy,
    pub estimate: CellEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub state: GameState,
    /// Strategy 0.
    pub baseline: CellEstimate,
    pub results: Vec<StrategyResult>,
    /// Best strategy, if any beats the baseline significantly.
    pub best: Option<HeuristicPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub trials: u64,
    pub cells: Vec<CellReport>,
}

fn pick_best(baseline: &CellEstimate, results: &[StrategyResult]) -> Option<HeuristicPolicy> {
    results
        .iter()
        .filter(|r| r.estimate.beats(baseline, SIGNIFICANCE_Z))
        .fold(None::<&StrategyResult>, |best, r| match best {
            Some(b) if b.estimate.estimate >= r.estimate.estimate => Some(b),
            _ => Some(r),
        })
        .map(|r| r.strategy)
}

/// Evaluates every strategy in every cell and picks the best per cell.
pub fn best_strategy_map(spec: &SweepSpec) -> Result<SimulationReport> {
    spec.validate()?;
    let cells = spec.grid.cells();
    let reports = cells
        .par_iter()
        .enumerate()
        .map(|(index, state)| {
            let key = index as u64;
            let baseline = simulate_cell(state, &NeverUseLuck, LuckRule::Depleting, spec.trials, spec.seed, key);
            let results: Vec<StrategyResult> = spec
                .strategies
                .iter()
                .map(|s| StrategyResult {
                    strategy: *s,
                    estimate: simulate_cell(state, s, LuckRule::Depleting, spec.trials, spec.seed, key),
                })
                .collect();
            let best = pick_best(&baseline, &results);
            CellReport { index, state: *state, baseline, results, best }
        })
        .collect();
    Ok(SimulationReport { seed: spec.seed, trials: spec.trials, cells: reports })
}

/// Every strategy id 1..=8 at a single threshold.
pub fn all_strategies(tau: i32, rule: ThresholdRule) -> Vec<HeuristicPolicy> {
    (1..=8).map(|id| heuristic_policy_with_rule(id, tau, rule).expect("valid id")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSweepSpec {
    pub grid: Grid,
    pub strategies: Vec<u8>,
    pub taus: Vec<i32>,
    pub rule: ThresholdRule,
    pub trials: u64,
    pub seed: u64,
}

impl TauSweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.strategies.is_empty() || self.taus.is_empty() {
            return Err(Error::InvalidSpec("need at least one strategy and one tau".into()));
        }
        if self.taus.iter().any(|&t| !(2..=12).contains(&t)) {
            return Err(Error::InvalidSpec("tau values must lie in [2, 12]".into()));
        }
        if let Some(&bad) = self.strategies.iter().find(|&&s| !(1..=3).contains(&s)) {
            return Err(Error::InvalidSpec(format!("tau sweeps cover strategies 1-3, got {bad}")));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Winning threshold of one strategy in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauCell {
    pub state: GameState,
    pub strategy: u8,
    /// `None` when no threshold beats never using luck significantly.
    pub best_tau: Option<i32>,
    pub best: CellEstimate,
    pub baseline: CellEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauHistogram {
    /// strategy id -> (tau -> number of cells where it won).
    pub counts: BTreeMap<u8, BTreeMap<i32, usize>>,
    pub cells: Vec<TauCell>,
}

impl TauHistogram {
    /// Most frequent winning threshold; ties go to the smaller tau.
    pub fn mode(&self, strategy: u8) -> Option<i32> {
        let counts = self.counts.get(&strategy)?;
        counts
            .iter()
            .fold(None::<(i32, usize)>, |best, (&tau, &n)| match best {
                Some((_, m)) if m >= n => best,
                _ => Some((tau, n)),
            })
            .map(|(tau, _)| tau)
    }
}

fn threshold_is_inert(tau: i32, l: i32, rule: ThresholdRule) -> bool {
    match rule {
        ThresholdRule::AtLeast => tau > l,
        ThresholdRule::Above => tau >= l,
    }
}

/// For each cell and strategy, finds the threshold with the highest
/// estimated victory probability and histograms the winners.
///
/// Thresholds above the cell's starting luck never fire and reuse the
/// baseline estimate. A cell contributes only if its best threshold beats
/// never using luck by [`SIGNIFICANCE_Z`] pooled standard errors.
pub fn tau_sweep(spec: &TauSweepSpec) -> Result<TauHistogram> {
    spec.validate()?;
    let states = spec.grid.cells();
    let per_state: Vec<Vec<TauCell>> = states
        .par_iter()
        .enumerate()
        .map(|(index, &state)| {
            let key = index as u64;
            let baseline = simulate_cell(&state, &NeverUseLuck, LuckRule::Depleting, spec.trials, spec.seed, key);
            spec.strategies
                .iter()
                .map(|&id| {
                    let mut best: Option<(i32, CellEstimate)> = None;
                    for &tau in &spec.taus {
                        let est = if threshold_is_inert(tau, state.l, spec.rule) {
                            baseline
                        } else {
                            let policy = heuristic_policy_with_rule(id, tau, spec.rule).expect("validated");
                            simulate_cell(&state, &policy, LuckRule::Depleting, spec.trials, spec.seed, key)
                        };
                        if best.is_none_or(|(_, b)| est.estimate > b.estimate) {
                            best = Some((tau, est));
                        }
                    }
                    let (tau, est) = best.expect("at least one tau");
                    TauCell {
                        state,
                        strategy: id,
                        best_tau: est.beats(&baseline, SIGNIFICANCE_Z).then_some(tau),
                        best: est,
                        baseline,
                    }
                })
                .collect()
        })
        .collect();
    let cells: Vec<TauCell> = per_state.into_iter().flatten().collect();

    let mut counts: BTreeMap<u8, BTreeMap<i32, usize>> = BTreeMap::new();
    for &id in &spec.strategies {
        let entry = counts.entry(id).or_default();
        for &tau in &spec.taus {
            entry.entry(tau).or_insert(0);
        }
    }
    for cell in &cells {
        if let Some(tau) = cell.best_tau {
            *counts.entry(cell.strategy).or_default().entry(tau).or_insert(0) += 1;
        }
    }
    Ok(TauHistogram { counts, cells })
}

/// Thresholds used by [`heuristic_recipe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeConfig {
    /// Starting luck at or above which luck is spent on every round.
    pub high_luck: i32,
    /// Opponent stamina at or below which (but above 2) a successful
    /// offensive test finishes the fight.
    pub low_s_o: i32,
}

impl Default for RecipeConfig {
    fn default() -> Self {
        RecipeConfig { high_luck: 9, low_s_o: 4 }
    }
}

/// Rule-of-thumb strategy choice for a combat about to start.
///
/// Offensive luck (3) by default; unconditional luck (1) with high luck or
/// an opponent one lucky hit from defeat; otherwise defensive luck (2) when
/// the hero is the better fighter, or when the opponent is better but
/// already down to 2 stamina.
pub fn heuristic_recipe(dk: i32, _s_h: i32, s_o: i32, l: i32, config: &RecipeConfig) -> u8 {
    let finishing_band = s_o > 2 && s_o <= config.low_s_o;
    if l >= config.high_luck || finishing_band {
        1
    } else if dk > 0 || (dk < 0 && s_o <= 2) {
        2
    } else {
        3
    }
}

/// Writes one row per (cell, strategy), strategy 0 first.
pub fn write_report_table<W: Write>(report: &SimulationReport, mut out: W) -> Result<()> {
    writeln!(out, "# seed={} trials={}", report.seed, report.trials)?;
    writeln!(out, "cell,dk,s_h,s_o,l,strategy,tau,trials,wins,v_p,stderr,best")?;
    for cell in &report.cells {
        let s = cell.state;
        let best = cell.best.map_or(String::new(), |b| b.id.to_string());
        let row = |out: &mut W, id: u8, tau: i32, e: &CellEstimate| {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{:.17e},{:.17e},{}",
                cell.index, s.dk, s.s_h, s.s_o, s.l, id, tau, e.trials, e.wins, e.estimate, e.stderr, best
            )
        };
        row(&mut out, 0, 0, &cell.baseline)?;
        for r in &cell.results {
            row(&mut out, r.strategy.id, r.strategy.tau, &r.estimate)?;
        }
    }
    Ok(())
}

/// Writes best-strategy ids as one `s_o` x `s_h` block per `(dk, l)` slice
/// (blank cells as `.`), the layout of a strategy map.
pub fn write_report_grid<W: Write>(report: &SimulationReport, mut out: W) -> Result<()> {
    // (dk, l) -> (s_h, s_o) -> best id
    type Slice = BTreeMap<(i32, i32), Option<u8>>;
    let mut slices: BTreeMap<(i32, i32), Slice> = BTreeMap::new();
    for cell in &report.cells {
        let s = cell.state;
        slices
            .entry((s.dk, s.l))
            .or_default()
            .insert((s.s_o, s.s_h), cell.best.map(|b| b.id));
    }
    for ((dk, l), cells) in slices {
        let mut s_hs: Vec<i32> = cells.keys().map(|&(_, h)| h).collect();
        s_hs.sort_unstable();
        s_hs.dedup();
        let mut s_os: Vec<i32> = cells.keys().map(|&(o, _)| o).collect();
        s_os.sort_unstable();
        s_os.dedup();
        writeln!(out, "# dk={dk} l={l}")?;
        let header: Vec<String> = s_hs.iter().map(|h| h.to_string()).collect();
        writeln!(out, "s_o\\s_h,{}", header.join(","))?;
        for &s_o in s_os.iter().rev() {
            let row: Vec<String> = s_hs
                .iter()
                .map(|&h| match cells.get(&(s_o, h)) {
                    Some(Some(id)) => id.to_string(),
                    _ => ".".to_string(),
                })
                .collect();
            writeln!(out, "{},{}", s_o, row.join(","))?;
        }
    }
    Ok(())
}

pub fn write_tau_histogram<W: Write>(hist: &TauHistogram, mut out: W) -> Result<()> {
    writeln!(out, "strategy,tau,count")?;
    for (id, counts) in &hist.counts {
        for (tau, n) in counts {
            writeln!(out, "{id},{tau},{n}")?;
        }
    }
    Ok(())
}
