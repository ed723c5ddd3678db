//! Optimal luck policy by backward induction.
//!
//! The decision state is `(s_h, s_o, l, O)` where `O` is the outcome of the
//! round just rolled. For each state the solver compares the continuation
//! value of testing luck (`p_y`) with that of not testing (`p_n`) and keeps
//! the better one. Terminal states are never stored: `v = 0` when
//! `s_h <= 0`, `v = 1` when `s_o <= 0`.
//!
//! Dependencies run strictly downhill: a luck test moves to layer `l - 1`,
//! and declining it moves to a smaller stamina sum in the same layer. States
//! are therefore swept by ascending `l`, then ascending `s_h + s_o`.

use serde::{Deserialize, Serialize};

use crate::dice::{DiceModel, OddsConvention, RoundOdds};
use crate::engine::{GameState, LuckPolicy, RoundOutcome};
use crate::error::{Error, Result};
use crate::scalar::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dk: i32,
    pub max_s_h: i32,
    pub max_s_o: i32,
    pub max_l: i32,
    /// Luck is used only if `p_y > (1 + tie_epsilon) * p_n`.
    pub tie_epsilon: f64,
    #[serde(default)]
    pub odds: OddsConvention,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dk: 0,
            max_s_h: 24,
            max_s_o: 24,
            max_l: 12,
            tie_epsilon: 1e-10,
            odds: OddsConvention::Renormalized,
        }
    }
}

impl SolverConfig {
    pub fn for_dk(dk: i32) -> Self {
        SolverConfig { dk, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_s_h < 1 || self.max_s_o < 1 {
            return Err(Error::InvalidConfig(format!(
                "stamina bounds must be at least 1, got {}x{}",
                self.max_s_h, self.max_s_o
            )));
        }
        if self.max_l < 0 {
            return Err(Error::InvalidConfig(format!("max_l must be nonnegative, got {}", self.max_l)));
        }
        if !(self.tie_epsilon > 0.0 && self.tie_epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tie_epsilon must be positive, got {}",
                self.tie_epsilon
            )));
        }
        Ok(())
    }

    fn contains(&self, s_h: i32, s_o: i32, l: i32) -> bool {
        (1..=self.max_s_h).contains(&s_h) && (1..=self.max_s_o).contains(&s_o) && (0..=self.max_l).contains(&l)
    }
}

/// Per-state strategy code, as used in strategy maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyCode {
    /// Never use luck (blank cell).
    Never,
    /// 1: use luck whatever the outcome.
    Both,
    /// 2: use luck only after a lost round.
    LossOnly,
    /// 3: use luck only after a won round.
    WinOnly,
}

impl StrategyCode {
    pub fn from_actions(on_win: bool, on_loss: bool) -> Self {
        match (on_win, on_loss) {
            (true, true) => StrategyCode::Both,
            (false, true) => StrategyCode::LossOnly,
            (true, false) => StrategyCode::WinOnly,
            (false, false) => StrategyCode::Never,
        }
    }

    /// Figure digit; `None` for a blank cell.
    pub fn digit(self) -> Option<u8> {
        match self {
            StrategyCode::Never => None,
            StrategyCode::Both => Some(1),
            StrategyCode::LossOnly => Some(2),
            StrategyCode::WinOnly => Some(3),
        }
    }
}

/// Continuation values of the two choices available after a decisive round.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagators<T> {
    /// Value of testing luck; `None` at `l = 0`.
    pub use_luck: Option<T>,
    pub no_luck: T,
}

/// Optimal values and actions for every decision state of one skill
/// difference.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable<T> {
    config: SolverConfig,
    odds: RoundOdds,
    q_by_luck: Vec<T>,
    win_weight: T,
    loss_weight: T,
    values: Vec<T>,
    actions: Vec<bool>,
}

fn outcome_slot(outcome: RoundOutcome) -> usize {
    match outcome {
        RoundOutcome::Loss => 0,
        RoundOutcome::Win => 1,
        RoundOutcome::Draw => panic!("draws carry no decision"),
    }
}

impl<T: Probability> PolicyTable<T> {
    fn index(&self, s_h: i32, s_o: i32, l: i32, outcome: RoundOutcome) -> usize {
        let c = &self.config;
        let cell = ((l as usize * c.max_s_h as usize) + (s_h as usize - 1)) * c.max_s_o as usize
            + (s_o as usize - 1);
        cell * 2 + outcome_slot(outcome)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn odds(&self) -> &RoundOdds {
        &self.odds
    }

    pub fn dk(&self) -> i32 {
        self.config.dk
    }

    /// Probability weights `(win, loss)` of the next decisive round.
    pub fn step_weights(&self) -> (&T, &T) {
        (&self.win_weight, &self.loss_weight)
    }

    /// Luck test success probability at luck `l` (clamped).
    pub fn luck_success(&self, l: i32) -> &T {
        &self.q_by_luck[l.clamp(0, 12) as usize]
    }

    /// Value of `(s_h, s_o, l)` with `outcome` pending. Terminal staminas
    /// resolve to 0 or 1 without lookup.
    pub fn value(&self, s_h: i32, s_o: i32, l: i32, outcome: RoundOutcome) -> Result<T> {
        if s_h <= 0 {
            return Ok(T::zero());
        }
        if s_o <= 0 {
            return Ok(T::one());
        }
        if !self.config.contains(s_h, s_o, l) {
            return Err(Error::OutOfBounds { s_h, s_o, l });
        }
        Ok(self.values[self.index(s_h, s_o, l, outcome)].clone())
    }

    /// Optimal decision in a stored state.
    pub fn action(&self, s_h: i32, s_o: i32, l: i32, outcome: RoundOutcome) -> Result<bool> {
        if !self.config.contains(s_h, s_o, l) {
            return Err(Error::OutOfBounds { s_h, s_o, l });
        }
        Ok(self.actions[self.index(s_h, s_o, l, outcome)])
    }

    pub fn strategy_code(&self, s_h: i32, s_o: i32, l: i32) -> Result<StrategyCode> {
        Ok(StrategyCode::from_actions(
            self.action(s_h, s_o, l, RoundOutcome::Win)?,
            self.action(s_h, s_o, l, RoundOutcome::Loss)?,
        ))
    }

    /// Value before the round is rolled: `w * v(.., Win) + l * v(.., Loss)`.
    pub fn pre_round_value(&self, s_h: i32, s_o: i32, l: i32) -> Result<T> {
        if s_h <= 0 {
            return Ok(T::zero());
        }
        if s_o <= 0 {
            return Ok(T::one());
        }
        let win = self.value(s_h, s_o, l, RoundOutcome::Win)?;
        let loss = self.value(s_h, s_o, l, RoundOutcome::Loss)?;
        Ok(self.win_weight.clone() * win + self.loss_weight.clone() * loss)
    }

    /// Both propagators for a state whose round was lost.
    pub fn loss_propagators(&self, s_h: i32, s_o: i32, l: i32) -> Result<Propagators<T>> {
        self.propagators(s_h, s_o, l, RoundOutcome::Loss)
    }

    /// Both propagators for a state whose round was won.
    pub fn win_propagators(&self, s_h: i32, s_o: i32, l: i32) -> Result<Propagators<T>> {
        self.propagators(s_h, s_o, l, RoundOutcome::Win)
    }

    pub fn propagators(&self, s_h: i32, s_o: i32, l: i32, outcome: RoundOutcome) -> Result<Propagators<T>> {
        if !self.config.contains(s_h, s_o, l) {
            return Err(Error::OutOfBounds { s_h, s_o, l });
        }
        propagators_with(
            &|a, b, c, o| self.value(a, b, c, o),
            &self.win_weight,
            &self.loss_weight,
            self.luck_success(l),
            s_h,
            s_o,
            l,
            outcome,
        )
    }

    /// Number of stored decision states.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates stored cells as `(s_h, s_o, l)`, in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (i32, i32, i32)> + '_ {
        let c = self.config;
        (0..=c.max_l).flat_map(move |l| {
            (1..=c.max_s_h).flat_map(move |s_h| (1..=c.max_s_o).map(move |s_o| (s_h, s_o, l)))
        })
    }

    pub(crate) fn from_parts(
        config: SolverConfig,
        dice: &DiceModel,
        values: Vec<T>,
        actions: Vec<bool>,
    ) -> Result<Self> {
        let mut table = Self::empty(config, dice)?;
        if values.len() != table.values.len() || actions.len() != table.actions.len() {
            return Err(Error::Format(format!(
                "expected {} entries, found {} values and {} actions",
                table.values.len(),
                values.len(),
                actions.len()
            )));
        }
        table.values = values;
        table.actions = actions;
        Ok(table)
    }

    fn empty(config: SolverConfig, dice: &DiceModel) -> Result<Self> {
        config.validate()?;
        let odds = dice.round_odds(config.dk);
        let (win_weight, loss_weight) = odds.step_weights::<T>(config.odds);
        let q_by_luck = (0..=12).map(|l| T::from_ratio(&dice.luck_success(l))).collect();
        let n = (config.max_l as usize + 1) * config.max_s_h as usize * config.max_s_o as usize * 2;
        Ok(PolicyTable {
            config,
            odds,
            q_by_luck,
            win_weight,
            loss_weight,
            values: vec![T::zero(); n],
            actions: vec![false; n],
        })
    }
}

/// The four-term luck propagator and the two-term no-luck propagator.
#[allow(clippy::too_many_arguments)]
fn propagators_with<T: Probability>(
    v: &dyn Fn(i32, i32, i32, RoundOutcome) -> Result<T>,
    rho_w: &T,
    rho_l: &T,
    q: &T,
    s_h: i32,
    s_o: i32,
    l: i32,
    outcome: RoundOutcome,
) -> Result<Propagators<T>> {
    use RoundOutcome::{Loss, Win};
    let rho_w = rho_w.clone();
    let rho_l = rho_l.clone();
    // Successor staminas for (success, failure, no luck).
    let (ok, bad, plain) = match outcome {
        Loss => ((s_h - 1, s_o), (s_h - 3, s_o), (s_h - 2, s_o)),
        Win => ((s_h, s_o - 4), (s_h, s_o - 1), (s_h, s_o - 2)),
        RoundOutcome::Draw => {
            return Err(Error::InvalidState("a drawn round admits no luck decision".into()))
        }
    };
    let no_luck = rho_l.clone() * v(plain.0, plain.1, l, Loss)? + rho_w.clone() * v(plain.0, plain.1, l, Win)?;
    let use_luck = if l > 0 {
        let q = q.clone();
        let miss = T::one() - q.clone();
        Some(
            q.clone() * rho_l.clone() * v(ok.0, ok.1, l - 1, Loss)?
                + miss.clone() * rho_l * v(bad.0, bad.1, l - 1, Loss)?
                + q * rho_w.clone() * v(ok.0, ok.1, l - 1, Win)?
                + miss * rho_w * v(bad.0, bad.1, l - 1, Win)?,
        )
    } else {
        None
    };
    Ok(Propagators { use_luck, no_luck })
}

/// Float rounding can overshoot 1 by an ulp when both weights multiply
/// certain outcomes.
fn clamp_unit<T: Probability>(v: T) -> T {
    if v > T::one() {
        T::one()
    } else if v < T::zero() {
        T::zero()
    } else {
        v
    }
}

/// Solves the Bellman equation for every state within `config`'s bounds.
pub fn solve<T: Probability>(config: &SolverConfig, dice: &DiceModel) -> Result<PolicyTable<T>> {
    let mut table = PolicyTable::<T>::empty(*config, dice)?;
    let odds = table.odds;
    let zero = num_rational::Ratio::new(0, 1);
    if odds.p_w == zero || odds.p_l == zero {
        // One side never wins a round: the outcome is fixed and luck is moot.
        let fill = if odds.p_w == zero { T::zero() } else { T::one() };
        table.values.iter_mut().for_each(|v| *v = fill.clone());
        return Ok(table);
    }

    let c = table.config;
    let one_plus_eps = T::one() + T::from_f64(c.tie_epsilon);
    let mut filled = vec![false; table.values.len()];
    for l in 0..=c.max_l {
        let q = table.luck_success(l).clone();
        for total in 2..=(c.max_s_h + c.max_s_o) {
            for s_h in 1..=c.max_s_h {
                let s_o = total - s_h;
                if s_o < 1 || s_o > c.max_s_o {
                    continue;
                }
                for outcome in [RoundOutcome::Loss, RoundOutcome::Win] {
                    let lookup = |a: i32, b: i32, ll: i32, o: RoundOutcome| -> Result<T> {
                        if a <= 0 {
                            return Ok(T::zero());
                        }
                        if b <= 0 {
                            return Ok(T::one());
                        }
                        let idx = table.index(a, b, ll, o);
                        if filled[idx] {
                            Ok(table.values[idx].clone())
                        } else {
                            Err(Error::MissingSuccessor { s_h: a, s_o: b, l: ll })
                        }
                    };
                    let props = propagators_with(
                        &lookup,
                        &table.win_weight,
                        &table.loss_weight,
                        &q,
                        s_h,
                        s_o,
                        l,
                        outcome,
                    )?;
                    let (value, act) = match props.use_luck {
                        Some(p_y) => {
                            let act = p_y > one_plus_eps.clone() * props.no_luck.clone();
                            let best = if p_y > props.no_luck { p_y } else { props.no_luck };
                            (best, act)
                        }
                        None => (props.no_luck, false),
                    };
                    let idx = table.index(s_h, s_o, l, outcome);
                    table.values[idx] = clamp_unit(value);
                    table.actions[idx] = act;
                    filled[idx] = true;
                }
            }
        }
    }
    Ok(table)
}

/// Answer to a value query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse<T> {
    pub state: GameState,
    pub outcome: Option<RoundOutcome>,
    pub action_on_win: bool,
    pub action_on_loss: bool,
    pub strategy: StrategyCode,
    /// Optimal value: conditional on `outcome` if given, else pre-round.
    pub v_p: T,
    pub v_p_win: T,
    pub v_p_loss: T,
    /// Same quantity with luck never used.
    pub baseline: T,
}

/// Looks up a state. Terminal states answer 0 or 1 with no action.
pub fn query<T: Probability>(
    table: &PolicyTable<T>,
    state: &GameState,
    outcome: Option<RoundOutcome>,
) -> Result<QueryResponse<T>> {
    if state.dk != table.dk() {
        return Err(Error::InvalidState(format!(
            "state has dk={} but the table was solved for dk={}",
            state.dk,
            table.dk()
        )));
    }
    if outcome == Some(RoundOutcome::Draw) {
        return Err(Error::InvalidState("a drawn round admits no luck decision".into()));
    }
    let GameState { s_h, s_o, l, .. } = *state;
    if !state.is_ongoing() {
        let v = if s_h >= 1 { T::one() } else { T::zero() };
        return Ok(QueryResponse {
            state: *state,
            outcome,
            action_on_win: false,
            action_on_loss: false,
            strategy: StrategyCode::Never,
            v_p: v.clone(),
            v_p_win: v.clone(),
            v_p_loss: v.clone(),
            baseline: v,
        });
    }
    let action_on_win = table.action(s_h, s_o, l, RoundOutcome::Win)?;
    let action_on_loss = table.action(s_h, s_o, l, RoundOutcome::Loss)?;
    let v_p_win = table.value(s_h, s_o, l, RoundOutcome::Win)?;
    let v_p_loss = table.value(s_h, s_o, l, RoundOutcome::Loss)?;
    let (v_p, baseline) = match outcome {
        Some(o) => (table.value(s_h, s_o, l, o)?, table.value(s_h, s_o, 0, o)?),
        None => (table.pre_round_value(s_h, s_o, l)?, table.pre_round_value(s_h, s_o, 0)?),
    };
    Ok(QueryResponse {
        state: *state,
        outcome,
        action_on_win,
        action_on_loss,
        strategy: StrategyCode::from_actions(action_on_win, action_on_loss),
        v_p,
        v_p_win,
        v_p_loss,
        baseline,
    })
}

impl<T: Probability> LuckPolicy for PolicyTable<T> {
    /// Follows the stored optimal action; states outside the table never use luck.
    fn use_luck(&self, state: &GameState, outcome: RoundOutcome) -> bool {
        debug_assert_eq!(state.dk, self.dk());
        if outcome == RoundOutcome::Draw {
            return false;
        }
        self.action(state.s_h, state.s_o, state.l, outcome).unwrap_or(false)
    }
}
