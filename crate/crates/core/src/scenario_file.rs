//! Line-oriented `key = value` configuration files.
//!
//! ```text
//! # three cells, i.i.d. frequency channels
//! M = 3
//! N = 256
//! L = 512
//! powers = 4, 2, 1
//! sigma2 = 0.01
//! channel_model = taps:32      # iid-frequency | taps:<int> | eva | etu
//! alphabet = qpsk              # gaussian | qpsk
//! master_seed = 7
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once; keys not consumed by the reader are rejected.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::sim::{Alphabet, ChannelModel, LtePreset, NetworkScenario};
use crate::{Error, Result};

/// Keys that make up a [`NetworkScenario`].
pub const SCENARIO_KEYS: [&str; 8] =
    ["M", "N", "L", "powers", "sigma2", "channel_model", "alphabet", "master_seed"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Parsed `key = value` pairs with their line numbers.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

fn config_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("line {line}: {msg}"))
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_error(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(config_error(line, "missing key before `=`"));
            }
            if let Some(prev) = entries.get(key) {
                return Err(config_error(
                    line,
                    format!("duplicate key `{key}` (first defined on line {})", prev.line),
                ));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line, used: false });
        }
        Ok(KeyValues { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    /// Raw value of `key`, marking it consumed.
    pub fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    /// Value of an optional key parsed with `FromStr`.
    pub fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.parse_with(key, |v| v.parse::<T>().map_err(|e| e.to_string()))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| Error::InvalidConfig(format!("missing required key `{key}`")))
    }

    /// Value of an optional key through a custom parser.
    pub fn parse_with<T>(
        &mut self,
        key: &str,
        f: impl FnOnce(&str) -> std::result::Result<T, String>,
    ) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((value, line)) => {
                f(&value).map(Some).map_err(|e| config_error(line, format!("`{key}`: {e}")))
            }
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.parse_with(key, parse_list)
    }

    /// Rejects any key that was never read.
    pub fn finish(&self) -> Result<()> {
        match self.entries.iter().filter(|(_, e)| !e.used).min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, e)) => Err(config_error(e.line, format!("unknown key `{key}`"))),
        }
    }
}

pub fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

impl FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "iid-frequency" => Ok(ChannelModel::IidFrequency),
            "eva" => Ok(ChannelModel::Preset(LtePreset::Eva)),
            "etu" => Ok(ChannelModel::Preset(LtePreset::Etu)),
            other => match other.strip_prefix("taps:") {
                Some(n) => n
                    .trim()
                    .parse()
                    .map(ChannelModel::Taps)
                    .map_err(|_| format!("invalid tap count `{n}`")),
                None => Err(format!(
                    "unknown channel model `{s}` (expected iid-frequency, taps:<int>, eva or etu)"
                )),
            },
        }
    }
}

impl FromStr for Alphabet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Alphabet::Gaussian),
            "qpsk" => Ok(Alphabet::Qpsk),
            _ => Err(format!("unknown alphabet `{s}` (expected gaussian or qpsk)")),
        }
    }
}

/// Reads the scenario keys out of `kv`, leaving other keys untouched.
pub fn read_scenario(kv: &mut KeyValues) -> Result<NetworkScenario> {
    let stations: usize = kv.require("M")?;
    let subcarriers: usize = kv.require("N")?;
    let symbols: usize = kv.require("L")?;
    let powers_line = kv.line_of("powers");
    let powers: Vec<f64> = kv
        .get_list("powers")?
        .ok_or_else(|| Error::InvalidConfig("missing required key `powers`".into()))?;
    let sigma2: f64 = kv.require("sigma2")?;
    let scenario = NetworkScenario {
        stations,
        subcarriers,
        symbols,
        powers,
        sigma2,
        channel_model: kv.get("channel_model")?.unwrap_or(ChannelModel::IidFrequency),
        alphabet: kv.get("alphabet")?.unwrap_or(Alphabet::Gaussian),
        master_seed: kv.get("master_seed")?.unwrap_or(0),
    };
    if scenario.powers.len() != stations {
        return Err(config_error(
            powers_line.unwrap_or(0),
            format!("powers has {} entries but M = {stations}", scenario.powers.len()),
        ));
    }
    scenario.validate()?;
    Ok(scenario)
}

/// Parses a file holding exactly one scenario.
pub fn parse_scenario(text: &str) -> Result<NetworkScenario> {
    let mut kv = KeyValues::parse(text)?;
    let s = read_scenario(&mut kv)?;
    kv.finish()?;
    Ok(s)
}

/// Renders a scenario in the file format; `parse_scenario` inverts it.
pub fn render_scenario(s: &NetworkScenario) -> String {
    let powers: Vec<String> = s.powers.iter().map(|p| format!("{p:?}")).collect();
    format!(
        "M = {}\nN = {}\nL = {}\npowers = {}\nsigma2 = {:?}\nchannel_model = {}\nalphabet = {}\nmaster_seed = {}\n",
        s.stations,
        s.subcarriers,
        s.symbols,
        powers.join(", "),
        s.sigma2,
        s.channel_model,
        s.alphabet,
        s.master_seed
    )
}
