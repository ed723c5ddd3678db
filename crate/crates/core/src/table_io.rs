//! Policy table persistence.
//!
//! Text format (version 1):
//!
//! ```text
//! # ffcombat policy table
//! format_version=1
//! dk=-2 max_s_h=24 max_s_o=24 max_l=12 tie_epsilon=1e-10 odds=renormalized
//! dk,s_h,s_o,l,action_on_win,action_on_loss,v_p,v_p_win,v_p_loss
//! -2,1,1,0,0,0,1.4112903225806452e-1,...
//! ```
//!
//! One record per `(s_h, s_o, l)` cell. `v_p` is the pre-round value and is
//! informational; the conditional values carry the table. Floats are written
//! with 17 significant digits so that parsing restores them bit for bit.
//!
//! The binary cache is little-endian: magic `FFPT`, `u32` version, the four
//! bounds and `dk` as `i32`, `tie_epsilon` as `f64`, one odds byte, then the
//! conditional values as `f64` and the actions as one byte each, in storage
//! order.

use std::io::{BufRead, Read, Write};

use crate::dice::{DiceModel, OddsConvention};
use crate::engine::RoundOutcome;
use crate::error::{Error, Result};
use crate::solver::{PolicyTable, SolverConfig};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"FFPT";
const COLUMNS: &str = "dk,s_h,s_o,l,action_on_win,action_on_loss,v_p,v_p_win,v_p_loss";

/// 17 significant digits.
pub fn fmt_prob(x: f64) -> String {
    format!("{:.16e}", x)
}

fn odds_name(o: OddsConvention) -> &'static str {
    match o {
        OddsConvention::Renormalized => "renormalized",
        OddsConvention::Raw => "raw",
    }
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn write_text<W: Write>(table: &PolicyTable<f64>, mut out: W) -> Result<()> {
    let c = table.config();
    writeln!(out, "# ffcombat policy table")?;
    writeln!(out, "format_version={FORMAT_VERSION}")?;
    writeln!(
        out,
        "dk={} max_s_h={} max_s_o={} max_l={} tie_epsilon={:e} odds={}",
        c.dk,
        c.max_s_h,
        c.max_s_o,
        c.max_l,
        c.tie_epsilon,
        odds_name(c.odds)
    )?;
    writeln!(out, "{COLUMNS}")?;
    for (s_h, s_o, l) in table.cells() {
        let win = table.value(s_h, s_o, l, RoundOutcome::Win)?;
        let loss = table.value(s_h, s_o, l, RoundOutcome::Loss)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.dk,
            s_h,
            s_o,
            l,
            table.action(s_h, s_o, l, RoundOutcome::Win)? as u8,
            table.action(s_h, s_o, l, RoundOutcome::Loss)? as u8,
            fmt_prob(table.pre_round_value(s_h, s_o, l)?),
            fmt_prob(win),
            fmt_prob(loss),
        )?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    let mut seen = 0;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| fmt_err(format!("bad header field {field:?}")))?;
        let int = || value.parse::<i32>().map_err(|e| fmt_err(format!("{key}: {e}")));
        match key {
            "dk" => cfg.dk = int()?,
            "max_s_h" => cfg.max_s_h = int()?,
            "max_s_o" => cfg.max_s_o = int()?,
            "max_l" => cfg.max_l = int()?,
            "tie_epsilon" => {
                cfg.tie_epsilon = value.parse().map_err(|e| fmt_err(format!("{key}: {e}")))?
            }
            "odds" => {
                cfg.odds = match value {
                    "renormalized" => OddsConvention::Renormalized,
                    "raw" => OddsConvention::Raw,
                    other => return Err(fmt_err(format!("unknown odds convention {other:?}"))),
                }
            }
            other => return Err(fmt_err(format!("unknown header key {other:?}"))),
        }
        seen += 1;
    }
    if seen != 6 {
        return Err(fmt_err("incomplete table header"));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_text<R: BufRead>(input: R, dice: &DiceModel) -> Result<PolicyTable<f64>> {
    let mut lines = input.lines().filter(|l| match l {
        Ok(s) => !s.starts_with('#') && !s.trim().is_empty(),
        Err(_) => true,
    });
    let mut next = || -> Result<String> {
        lines.next().ok_or_else(|| fmt_err("unexpected end of table"))?.map_err(Error::from)
    };
    let version = next()?;
    match version.strip_prefix("format_version=") {
        Some(v) if v.trim() == FORMAT_VERSION.to_string() => {}
        _ => return Err(fmt_err(format!("unsupported table version line {version:?}"))),
    }
    let cfg = parse_header(&next()?)?;
    if next()?.trim() != COLUMNS {
        return Err(fmt_err("unexpected column header"));
    }
    let cells = (cfg.max_l as usize + 1) * cfg.max_s_h as usize * cfg.max_s_o as usize;
    let mut values = vec![0.0; cells * 2];
    let mut actions = vec![false; cells * 2];
    let mut count = 0usize;
    for slot in 0..cells {
        let line = next()?;
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 9 {
            return Err(fmt_err(format!("record {slot}: expected 9 fields, got {}", f.len())));
        }
        let int = |i: usize| f[i].parse::<i32>().map_err(|e| fmt_err(format!("record {slot}: {e}")));
        let flag = |i: usize| match f[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(fmt_err(format!("record {slot}: bad action {other:?}"))),
        };
        let prob = |i: usize| f[i].parse::<f64>().map_err(|e| fmt_err(format!("record {slot}: {e}")));
        let (dk, s_h, s_o, l) = (int(0)?, int(1)?, int(2)?, int(3)?);
        if dk != cfg.dk {
            return Err(fmt_err(format!("record {slot}: dk {dk} differs from header")));
        }
        let expected = ((l as usize * cfg.max_s_h as usize) + (s_h as usize).wrapping_sub(1))
            * cfg.max_s_o as usize
            + (s_o as usize).wrapping_sub(1);
        if !(1..=cfg.max_s_h).contains(&s_h)
            || !(1..=cfg.max_s_o).contains(&s_o)
            || !(0..=cfg.max_l).contains(&l)
            || expected != slot
        {
            return Err(fmt_err(format!("record {slot}: cell ({s_h},{s_o},{l}) out of order")));
        }
        actions[slot * 2 + 1] = flag(4)?;
        actions[slot * 2] = flag(5)?;
        values[slot * 2 + 1] = prob(7)?;
        values[slot * 2] = prob(8)?;
        count += 1;
    }
    debug_assert_eq!(count, cells);
    PolicyTable::from_parts(cfg, dice, values, actions)
}

pub fn write_binary<W: Write>(table: &PolicyTable<f64>, mut out: W) -> Result<()> {
    let c = table.config();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for v in [c.dk, c.max_s_h, c.max_s_o, c.max_l] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&c.tie_epsilon.to_le_bytes())?;
    out.write_all(&[match c.odds {
        OddsConvention::Renormalized => 0u8,
        OddsConvention::Raw => 1u8,
    }])?;
    let mut buf = Vec::with_capacity(table.len() * 9);
    for (s_h, s_o, l) in table.cells() {
        for o in [RoundOutcome::Loss, RoundOutcome::Win] {
            buf.extend_from_slice(&table.value(s_h, s_o, l, o)?.to_le_bytes());
        }
    }
    for (s_h, s_o, l) in table.cells() {
        for o in [RoundOutcome::Loss, RoundOutcome::Win] {
            buf.push(table.action(s_h, s_o, l, o)? as u8);
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads the binary cache. A version mismatch is reported as
/// [`Error::Format`] so callers can treat the file as stale.
pub fn read_binary<R: Read>(mut input: R, dice: &DiceModel) -> Result<PolicyTable<f64>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(fmt_err("not a policy table cache"));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!("cache version {version}, expected {FORMAT_VERSION}")));
    }
    let mut ints = [0i32; 4];
    for v in ints.iter_mut() {
        input.read_exact(&mut word)?;
        *v = i32::from_le_bytes(word);
    }
    let mut dword = [0u8; 8];
    input.read_exact(&mut dword)?;
    let tie_epsilon = f64::from_le_bytes(dword);
    let mut byte = [0u8; 1];
    input.read_exact(&mut byte)?;
    let odds = match byte[0] {
        0 => OddsConvention::Renormalized,
        1 => OddsConvention::Raw,
        b => return Err(fmt_err(format!("bad odds byte {b}"))),
    };
    let cfg = SolverConfig {
        dk: ints[0],
        max_s_h: ints[1],
        max_s_o: ints[2],
        max_l: ints[3],
        tie_epsilon,
        odds,
    };
    cfg.validate()?;
    let n = (cfg.max_l as usize + 1) * cfg.max_s_h as usize * cfg.max_s_o as usize * 2;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut dword)?;
        values.push(f64::from_le_bytes(dword));
    }
    let mut raw = vec![0u8; n];
    input.read_exact(&mut raw)?;
    let actions = raw.into_iter().map(|b| b != 0).collect();
    PolicyTable::from_parts(cfg, dice, values, actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dice::build_dice_model;
    use crate::solver::solve;

    fn table() -> PolicyTable<f64> {
        let dice = build_dice_model();
        let cfg = SolverConfig { max_s_h: 6, max_s_o: 7, max_l: 5, ..SolverConfig::for_dk(-2) };
        solve(&cfg, &dice).unwrap()
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let t = table();
        let mut buf = Vec::new();
        write_text(&t, &mut buf).unwrap();
        let back = read_text(buf.as_slice(), &build_dice_model()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn binary_round_trip_is_lossless() {
        let t = table();
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        let back = read_binary(buf.as_slice(), &build_dice_model()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn seventeen_digits() {
        let s = fmt_prob(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn stale_binary_version_is_rejected() {
        let t = table();
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        buf[4] = 99;
        assert!(matches!(read_binary(buf.as_slice(), &build_dice_model()), Err(Error::Format(_))));
    }

    #[test]
    fn corrupt_text_is_rejected() {
        let t = table();
        let mut buf = Vec::new();
        write_text(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let dice = build_dice_model();
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(read_text(truncated.as_bytes(), &dice).is_err());
        let wrong_version = text.replacen("format_version=1", "format_version=0", 1);
        assert!(read_text(wrong_version.as_bytes(), &dice).is_err());
        let swapped = text.replacen(",0,0,", ",0,7,", 1);
        assert!(read_text(swapped.as_bytes(), &dice).is_err());
    }
}
