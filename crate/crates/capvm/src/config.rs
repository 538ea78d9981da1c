//! `key = value` configuration files. Every knob the CLI exposes can also
//! be set here; command-line flags win over file values.
//!
//! Recognized keys:
//!
//! ```text
//! mode            = hybrid | purecap
//! block_policy    = word | ref
//! frame_policy    = word | ref
//! tax             = off | on | patched
//! heap_bytes      = N        (suffixes K/KiB and M/MiB allowed)
//! sample_interval = N
//! step_limit      = N        (0 disables the limit)
//! dispatch_cost   = N
//! body.OPCODE     = N        (per-opcode body cost override)
//! tax.OPCODE      = N        (purecap tax override)
//! patch.OPCODE    = N        (patch share override)
//! ```
//!
//! Lines starting with `#` (and blank lines) are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::machine::{Mode, Scale};
use crate::opcode::Opcode;
use crate::vm::{TaxSetting, VmConfig};

/// A parsed config file: every field optional, applied over defaults.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub mode: Option<Mode>,
    pub block_policy: Option<Scale>,
    pub frame_policy: Option<Scale>,
    pub tax: Option<TaxSetting>,
    pub heap_bytes: Option<usize>,
    pub sample_interval: Option<u64>,
    pub step_limit: Option<u64>,
    pub dispatch_cost: Option<u64>,
    pub body_cost: BTreeMap<Opcode, u64>,
    pub tax_cost: BTreeMap<Opcode, u64>,
    pub patch_share: BTreeMap<Opcode, u64>,
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| Error::Config(format!("`{key}` expects an integer, got `{v}`")))
}

/// Parses a byte count with optional K/KiB/M/MiB suffix.
pub fn parse_bytes(v: &str) -> Result<usize> {
    let (digits, mult) = if let Some(d) = v.strip_suffix("KiB").or_else(|| v.strip_suffix('K')) {
        (d, 1024usize)
    } else if let Some(d) = v.strip_suffix("MiB").or_else(|| v.strip_suffix('M')) {
        (d, 1024 * 1024)
    } else {
        (v, 1)
    };
    let n: usize = digits
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad byte count `{v}`")))?;
    Ok(n * mult)
}

fn parse_opcode(key: &str, name: &str) -> Result<Opcode> {
    Opcode::from_str(name)
        .map_err(|()| Error::Config(format!("`{key}`: unknown opcode `{name}`")))
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig> {
        let mut cfg = FileConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "mode" => cfg.mode = Some(value.parse()?),
                "block_policy" => cfg.block_policy = Some(value.parse()?),
                "frame_policy" => cfg.frame_policy = Some(value.parse()?),
                "tax" => cfg.tax = Some(value.parse()?),
                "heap_bytes" => cfg.heap_bytes = Some(parse_bytes(value)?),
                "sample_interval" => cfg.sample_interval = Some(parse_u64(key, value)?),
                "step_limit" => cfg.step_limit = Some(parse_u64(key, value)?),
                "dispatch_cost" => cfg.dispatch_cost = Some(parse_u64(key, value)?),
                _ => {
                    if let Some(op) = key.strip_prefix("body.") {
                        let op = parse_opcode(key, op)?;
                        cfg.body_cost.insert(op, parse_u64(key, value)?);
                    } else if let Some(op) = key.strip_prefix("tax.") {
                        let op = parse_opcode(key, op)?;
                        cfg.tax_cost.insert(op, parse_u64(key, value)?);
                    } else if let Some(op) = key.strip_prefix("patch.") {
                        let op = parse_opcode(key, op)?;
                        cfg.patch_share.insert(op, parse_u64(key, value)?);
                    } else {
                        return Err(Error::Config(format!(
                            "line {}: unknown key `{key}`",
                            lineno + 1
                        )));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        FileConfig::parse(&text)
    }

    /// Applies the file's values over `base`, revalidating the resulting
    /// cost model.
    pub fn apply(&self, base: &mut VmConfig) -> Result<()> {
        if let Some(m) = self.mode {
            base.mode = m;
        }
        if let Some(s) = self.block_policy {
            base.policy.block_scale = s;
        }
        if let Some(s) = self.frame_policy {
            base.policy.frame_scale = s;
        }
        if let Some(t) = self.tax {
            base.tax = t;
        }
        if let Some(h) = self.heap_bytes {
            base.heap_bytes = h;
        }
        if let Some(i) = self.sample_interval {
            if i == 0 {
                return Err(Error::Config("sample_interval must be at least 1".into()));
            }
            base.sample_interval = i;
        }
        if let Some(l) = self.step_limit {
            base.step_limit = if l == 0 { None } else { Some(l) };
        }
        if let Some(d) = self.dispatch_cost {
            base.cost_model.dispatch_cost = d;
        }
        for (op, c) in &self.body_cost {
            base.cost_model.body_cost.insert(*op, *c);
        }
        for (op, c) in &self.tax_cost {
            base.cost_model.purecap_tax.insert(*op, *c);
        }
        for (op, c) in &self.patch_share {
            base.cost_model.patch_share.insert(*op, *c);
        }
        let patched_total: u64 = base.cost_model.patch_share.values().sum();
        base.cost_model.patch_savings = patched_total;
        base.cost_model.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = "\
# run shape
mode = purecap
block_policy = word
frame_policy = ref
tax = patched
heap_bytes = 1MiB
sample_interval = 1024
step_limit = 500000

# cost tweaks
dispatch_cost = 9
body.ADD = 3
tax.CALL = 8
patch.CALL = 2
";
        let cfg = FileConfig::parse(text).unwrap();
        assert_eq!(cfg.mode, Some(Mode::Purecap));
        assert_eq!(cfg.block_policy, Some(Scale::WordScaled));
        assert_eq!(cfg.frame_policy, Some(Scale::RefScaled));
        assert_eq!(cfg.tax, Some(TaxSetting::Patched));
        assert_eq!(cfg.heap_bytes, Some(1024 * 1024));
        assert_eq!(cfg.sample_interval, Some(1024));
        assert_eq!(cfg.step_limit, Some(500_000));
        assert_eq!(cfg.dispatch_cost, Some(9));
        assert_eq!(cfg.body_cost.get(&Opcode::ADD), Some(&3));
        assert_eq!(cfg.tax_cost.get(&Opcode::CALL), Some(&8));
        assert_eq!(cfg.patch_share.get(&Opcode::CALL), Some(&2));
    }

    #[test]
    fn applies_over_defaults() {
        let cfg = FileConfig::parse("mode = purecap\nbody.ADD = 3\npatch.CALL = 2\n").unwrap();
        let mut base = VmConfig::new(
            Mode::Hybrid,
            Scale::WordScaled,
            Scale::WordScaled,
            TaxSetting::Off,
        );
        cfg.apply(&mut base).unwrap();
        assert_eq!(base.mode, Mode::Purecap);
        assert_eq!(base.cost_model.body_cost.get(&Opcode::ADD), Some(&3));
        // Total patch savings follows the edited shares.
        let total: u64 = base.cost_model.patch_share.values().sum();
        assert_eq!(base.cost_model.patch_savings, total);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FileConfig::parse("mode purecap\n").is_err());
        assert!(FileConfig::parse("mode = marvelous\n").is_err());
        assert!(FileConfig::parse("wat = 3\n").is_err());
        assert!(FileConfig::parse("body.FROBNICATE = 3\n").is_err());
        assert!(FileConfig::parse("heap_bytes = many\n").is_err());
        // A patch share exceeding its tax fails validation on apply.
        let cfg = FileConfig::parse("patch.CALL = 99\n").unwrap();
        let mut base = VmConfig::new(
            Mode::Hybrid,
            Scale::WordScaled,
            Scale::WordScaled,
            TaxSetting::Off,
        );
        assert!(cfg.apply(&mut base).is_err());
    }

    #[test]
    fn byte_suffixes() {
        assert_eq!(parse_bytes("4096").unwrap(), 4096);
        assert_eq!(parse_bytes("64K").unwrap(), 64 * 1024);
        assert_eq!(parse_bytes("2MiB").unwrap(), 2 * 1024 * 1024);
        assert!(parse_bytes("").is_err());
    }
}
