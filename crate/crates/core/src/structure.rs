//! Structural features of a solved policy.
//!
//! Strategy maps show recurring bands: defensive luck at `s_h = 2`,
//! offensive strips tied to `s_o mod 4`, and parity banding in `s_h`. This
//! module turns each feature into a count of conforming and nonconforming
//! cells so that it can be checked rather than eyeballed.

use serde::{Deserialize, Serialize};

use crate::engine::RoundOutcome;
use crate::scalar::Probability;
use crate::solver::{PolicyTable, StrategyCode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub conforming: usize,
    pub total: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.total += 1;
        if ok {
            self.conforming += 1;
        }
    }

    pub fn nonconforming(&self) -> usize {
        self.total - self.conforming
    }

    /// Conforming share; `None` when the predicate applies to no cell.
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.conforming as f64 / self.total as f64)
    }
}

/// Features of one `(dk, l)` slice of a policy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub dk: i32,
    pub l: i32,
    /// `codes[s_h - 1][s_o - 1]`: 1, 2, 3 or `None` for never.
    pub codes: Vec<Vec<Option<u8>>>,
    /// Cells in the `s_h = 2` row; conforming when luck is used after a loss.
    pub defensive_row_s_h_2: Tally,
    /// Win-only cells; conforming when `s_o = 3 (mod 4)`.
    pub win_only_at_s_o_3_mod_4: Tally,
    /// Cells with `s_o = 2 (mod 4)`; conforming when luck is not used on a win.
    pub no_offense_at_s_o_2_mod_4: Tally,
    /// Cells using luck on a win, split by hero stamina parity `[even, odd]`.
    pub offense_by_s_h_parity: [usize; 2],
    /// Cells that use luck on either outcome.
    pub luck_cells: usize,
}

/// Extracts the band features of every luck layer of `table`.
pub fn analyze_policy_bands<T: Probability>(table: &PolicyTable<T>) -> Vec<SliceReport> {
    let c = *table.config();
    (0..=c.max_l).map(|l| analyze_slice(table, l)).collect()
}

pub fn analyze_slice<T: Probability>(table: &PolicyTable<T>, l: i32) -> SliceReport {
    let c = *table.config();
    let mut report = SliceReport {
        dk: c.dk,
        l,
        codes: Vec::with_capacity(c.max_s_h as usize),
        defensive_row_s_h_2: Tally::default(),
        win_only_at_s_o_3_mod_4: Tally::default(),
        no_offense_at_s_o_2_mod_4: Tally::default(),
        offense_by_s_h_parity: [0, 0],
        luck_cells: 0,
    };
    for s_h in 1..=c.max_s_h {
        let mut row = Vec::with_capacity(c.max_s_o as usize);
        for s_o in 1..=c.max_s_o {
            let on_win = table.action(s_h, s_o, l, RoundOutcome::Win).expect("cell in bounds");
            let on_loss = table.action(s_h, s_o, l, RoundOutcome::Loss).expect("cell in bounds");
            let code = StrategyCode::from_actions(on_win, on_loss);
            row.push(code.digit());

            if s_h == 2 {
                report.defensive_row_s_h_2.record(on_loss);
            }
            if code == StrategyCode::WinOnly {
                report.win_only_at_s_o_3_mod_4.record(s_o % 4 == 3);
            }
            if s_o % 4 == 2 {
                report.no_offense_at_s_o_2_mod_4.record(!on_win);
            }
            if on_win {
                report.offense_by_s_h_parity[(s_h % 2) as usize] += 1;
            }
            if on_win || on_loss {
                report.luck_cells += 1;
            }
        }
        report.codes.push(row);
    }
    report
}

impl SliceReport {
    /// Renders the strategy grid with `s_o` increasing upward, one character
    /// per cell (`.` for never).
    pub fn render(&self) -> String {
        let rows = self.codes.len();
        let cols = self.codes.first().map_or(0, Vec::len);
        let mut out = format!("dk={} l={}\n", self.dk, self.l);
        for s_o in (0..cols).rev() {
            out.push_str(&format!("{:>3} ", s_o + 1));
            for s_h in 0..rows {
                out.push(match self.codes[s_h][s_o] {
                    Some(d) => (b'0' + d) as char,
                    None => '.',
                });
            }
            out.push('\n');
        }
        out
    }
}
