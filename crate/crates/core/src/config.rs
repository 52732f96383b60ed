//! Flat `key = value` configuration for experiments.
//!
//! One assignment per line, `#` starts a comment. Keys match the fields
//! listed by [`ExperimentConfig::keys`].

use crate::error::{FlafError, Result};
use crate::experiment::{Algorithm, ExperimentConfig};
use crate::plant::ZetaSchedule;

const KEYS: &[&str] = &[
    "M",
    "P",
    "L_blocks",
    "signal_length",
    "num_runs",
    "base_seed",
    "algorithms",
    "block_counts",
    "zeta",
    "zeta_schedule",
    "snr_db",
    "coloring_pole",
    "freeze_plant",
    "steady_window",
    "mu_FL1",
    "mu_FL2",
    "delta",
    "delta_PFL",
    "delta_L",
    "gamma",
    "epsilon",
    "beta",
    "alpha",
    "xi",
    "xi_vss",
    "mu_L",
    "mu_c",
    "beta_r",
    "a_init",
    "r_init",
];

fn usage(msg: String) -> FlafError {
    FlafError::Usage(msg)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value '{value}' for key '{key}'")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        v => parse_num(key, v),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Parses `start:zeta,start:zeta,...`.
pub fn parse_schedule(value: &str) -> Result<ZetaSchedule> {
    let segments = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|seg| {
            let (start, zeta) = seg
                .split_once(':')
                .ok_or_else(|| usage(format!("schedule segment '{seg}' is not start:zeta")))?;
            Ok((
                parse_num::<usize>("zeta_schedule", start)?,
                parse_f64("zeta_schedule", zeta)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    ZetaSchedule::new(segments)
}

fn format_schedule(s: &ZetaSchedule) -> String {
    s.segments()
        .iter()
        .map(|(n, z)| format!("{n}:{z}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Splits config text into `(key, value)` pairs.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            usage(format!(
                "line {}: expected key = value, got '{raw}'",
                lineno + 1
            ))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Every accepted configuration key.
    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    /// Applies one assignment. Unknown keys are rejected with the key list.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let h = &mut self.hyper;
        match key {
            "M" => self.memory = parse_num(key, value)?,
            "P" => self.order = parse_num(key, value)?,
            "L_blocks" => self.l_blocks = parse_num(key, value)?,
            "signal_length" => self.signal_length = parse_num(key, value)?,
            "num_runs" => self.num_runs = parse_num(key, value)?,
            "base_seed" => self.base_seed = parse_num(key, value)?,
            "algorithms" => {
                self.algorithms = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        Algorithm::from_name(s)
                            .ok_or_else(|| usage(format!("unknown algorithm '{s}'")))
                    })
                    .collect::<Result<_>>()?
            }
            "block_counts" => self.block_counts = parse_list(key, value)?,
            "zeta" => self.zeta_schedule = ZetaSchedule::constant(parse_f64(key, value)?)?,
            "zeta_schedule" => self.zeta_schedule = parse_schedule(value)?,
            "snr_db" => self.snr_db = parse_f64(key, value)?,
            "coloring_pole" => self.coloring_pole = parse_f64(key, value)?,
            "freeze_plant" => self.freeze_plant = parse_num(key, value)?,
            "steady_window" => self.steady_window = parse_f64(key, value)?,
            "mu_FL1" => h.mu_fl1 = parse_f64(key, value)?,
            "mu_FL2" => h.mu_fl2 = parse_f64(key, value)?,
            "delta" => h.delta = parse_f64(key, value)?,
            "delta_PFL" => h.delta_pfl = parse_f64(key, value)?,
            "delta_L" => h.delta_l = parse_f64(key, value)?,
            "gamma" => h.gamma = parse_f64(key, value)?,
            "epsilon" => h.epsilon = parse_f64(key, value)?,
            "beta" => h.beta = parse_f64(key, value)?,
            "alpha" => h.alpha = parse_f64(key, value)?,
            "xi" => h.xi = parse_f64(key, value)?,
            "xi_vss" => h.xi_vss = parse_f64(key, value)?,
            "mu_L" => h.mu_l = parse_f64(key, value)?,
            "mu_c" => h.mu_c = parse_f64(key, value)?,
            "beta_r" => h.beta_r = parse_f64(key, value)?,
            "a_init" => h.a_init = parse_f64(key, value)?,
            "r_init" => h.r_init = parse_f64(key, value)?,
            _ => {
                return Err(usage(format!(
                    "unknown key '{key}'; valid keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies every assignment in a config file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_config_text(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Full configuration as `(key, value)` pairs; feeding them back through
    /// [`ExperimentConfig::set`] reproduces `self`.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let h = &self.hyper;
        let join = |v: &[usize]| {
            v.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            ("M", self.memory.to_string()),
            ("P", self.order.to_string()),
            ("L_blocks", self.l_blocks.to_string()),
            ("signal_length", self.signal_length.to_string()),
            ("num_runs", self.num_runs.to_string()),
            ("base_seed", self.base_seed.to_string()),
            (
                "algorithms",
                self.algorithms
                    .iter()
                    .map(|a| a.name())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("block_counts", join(&self.block_counts)),
            ("zeta_schedule", format_schedule(&self.zeta_schedule)),
            ("snr_db", self.snr_db.to_string()),
            ("coloring_pole", self.coloring_pole.to_string()),
            ("freeze_plant", self.freeze_plant.to_string()),
            ("steady_window", self.steady_window.to_string()),
            ("mu_FL1", h.mu_fl1.to_string()),
            ("mu_FL2", h.mu_fl2.to_string()),
            ("delta", h.delta.to_string()),
            ("delta_PFL", h.delta_pfl.to_string()),
            ("delta_L", h.delta_l.to_string()),
            ("gamma", h.gamma.to_string()),
            ("epsilon", h.epsilon.to_string()),
            ("beta", h.beta.to_string()),
            ("alpha", h.alpha.to_string()),
            ("xi", h.xi.to_string()),
            ("xi_vss", h.xi_vss.to_string()),
            ("mu_L", h.mu_l.to_string()),
            ("mu_c", h.mu_c.to_string()),
            ("beta_r", h.beta_r.to_string()),
            ("a_init", h.a_init.to_string()),
            ("r_init", h.r_init.to_string()),
        ]
    }

    /// `# key = value` metadata lines carrying the full configuration.
    pub fn metadata_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("# config_hash = {:016x}", self.config_hash())];
        lines.extend(
            self.to_pairs()
                .into_iter()
                .map(|(k, v)| format!("# {k} = {v}")),
        );
        lines
    }

    /// FNV-1a over the serialized configuration.
    pub fn config_hash(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, v) in self.to_pairs() {
            for b in k.bytes().chain(*b"=").chain(v.bytes()).chain(*b"\n") {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        }
        hash
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_parsing_skips_comments() {
        let pairs = parse_config_text("# header\nM = 4\n\n P=3 # order\n").unwrap();
        assert_eq!(
            pairs,
            vec![("M".into(), "4".into()), ("P".into(), "3".into())]
        );
        assert!(parse_config_text("M 4").is_err());
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.set("mu", "0.1").unwrap_err().to_string();
        assert!(err.contains("unknown key 'mu'"));
        assert!(err.contains("L_blocks"));
    }

    #[test]
    fn pairs_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("zeta_schedule", "0:0.08,200:0.05").unwrap();
        cfg.set("algorithms", "flaf_l1,combined").unwrap();
        cfg.set("snr_db", "inf").unwrap();
        let mut other = ExperimentConfig::default();
        for (k, v) in cfg.to_pairs() {
            other.set(k, &v).unwrap();
        }
        assert_eq!(cfg, other);
        assert_eq!(cfg.config_hash(), other.config_hash());
    }

    #[test]
    fn bad_values_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("M", "-3").is_err());
        assert!(cfg.set("alpha", "abc").is_err());
        assert!(cfg.set("algorithms", "rls").is_err());
        assert!(cfg.set("zeta_schedule", "0-0.1").is_err());
    }
}
