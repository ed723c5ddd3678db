//! Solved policy tables, shared in memory and optionally persisted.
//!
//! Disk entries are named by every solver input plus the binary format
//! version. Entries written by another format version are never read; an
//! entry that fails to decode is treated as absent and overwritten.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use ffcombat_core::table_io::{read_binary, write_binary, FORMAT_VERSION};
use ffcombat_core::{build_dice_model, solve, DiceModel, OddsConvention, PolicyTableF64, SolverConfig};

/// Environment variable naming the on-disk table cache.
pub const CACHE_DIR_ENV: &str = "FFCOMBAT_CACHE_DIR";

pub struct TableCache {
    dir: Option<PathBuf>,
    dice: DiceModel,
    tables: Mutex<HashMap<String, Arc<PolicyTableF64>>>,
}

fn cache_key(c: &SolverConfig) -> String {
    let odds = match c.odds {
        OddsConvention::Renormalized => "renorm",
        OddsConvention::Raw => "raw",
    };
    format!(
        "v{FORMAT_VERSION}-dk{}-h{}-o{}-l{}-eps{:e}-{odds}",
        c.dk, c.max_s_h, c.max_s_o, c.max_l, c.tie_epsilon
    )
}

impl TableCache {
    /// Memory-only cache.
    pub fn in_memory() -> Self {
        TableCache { dir: None, dice: build_dice_model(), tables: Mutex::new(HashMap::new()) }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        TableCache { dir: Some(dir.into()), ..Self::in_memory() }
    }

    /// Uses [`CACHE_DIR_ENV`] when set.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::with_dir(dir),
            _ => Self::in_memory(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn dice(&self) -> &DiceModel {
        &self.dice
    }

    /// Path a table for `config` is stored under, if the cache has a directory.
    pub fn path_for(&self, config: &SolverConfig) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("table-{}.bin", cache_key(config))))
    }

    /// Returns the table for `config`, loading or solving it on first use.
    pub fn get(&self, config: &SolverConfig) -> ffcombat_core::Result<Arc<PolicyTableF64>> {
        config.validate()?;
        let key = cache_key(config);
        if let Some(t) = self.tables.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = match self.load(config) {
            Some(t) => t,
            None => {
                let t = solve(config, &self.dice)?;
                self.store(config, &t);
                t
            }
        };
        let table = Arc::new(table);
        let mut tables = self.tables.lock().expect("cache lock");
        Ok(Arc::clone(tables.entry(key).or_insert(table)))
    }

    fn load(&self, config: &SolverConfig) -> Option<PolicyTableF64> {
        let path = self.path_for(config)?;
        let file = fs::File::open(path).ok()?;
        let table = read_binary(BufReader::new(file), &self.dice).ok()?;
        (table.config() == config).then_some(table)
    }

    /// Best effort: a read-only cache directory only costs a re-solve later.
    fn store(&self, config: &SolverConfig, table: &PolicyTableF64) {
        let Some(path) = self.path_for(config) else { return };
        let Some(dir) = path.parent() else { return };
        if fs::create_dir_all(dir).is_err() {
            return;
        }
        let tmp = path.with_extension("tmp");
        let written = fs::File::create(&tmp)
            .map_err(ffcombat_core::Error::from)
            .and_then(|f| write_binary(table, BufWriter::new(f)));
        if written.is_ok() {
            let _ = fs::rename(&tmp, &path);
        } else {
            let _ = fs::remove_file(&tmp);
        }
    }
}

impl Default for TableCache {
    fn default() -> Self {
        Self::in_memory()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SolverConfig {
        SolverConfig { max_s_h: 6, max_s_o: 6, max_l: 3, ..SolverConfig::for_dk(-1) }
    }

    #[test]
    fn reload_matches_fresh_solve() {
        let dir = tempfile::tempdir().unwrap();
        let first = TableCache::with_dir(dir.path()).get(&small()).unwrap();
        assert!(TableCache::with_dir(dir.path()).path_for(&small()).unwrap().exists());
        let second = TableCache::with_dir(dir.path()).get(&small()).unwrap();
        assert_eq!(*first, *second);
    }

    #[test]
    fn corrupt_entries_are_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::with_dir(dir.path());
        let path = cache.path_for(&small()).unwrap();
        fs::write(&path, b"FFPT\x63\x00\x00\x00garbage").unwrap();
        let t = cache.get(&small()).unwrap();
        assert_eq!(t.config(), &small());
        let reread = read_binary(BufReader::new(fs::File::open(&path).unwrap()), cache.dice()).unwrap();
        assert_eq!(reread, *t);
    }

    #[test]
    fn keys_separate_configs() {
        let a = small();
        let b = SolverConfig { odds: OddsConvention::Raw, ..small() };
        assert_ne!(cache_key(&a), cache_key(&b));
        assert!(cache_key(&a).starts_with(&format!("v{FORMAT_VERSION}-")));
    }
}
