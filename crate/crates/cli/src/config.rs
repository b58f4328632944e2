//! Settings resolved from flags, then `ROLLINGCHAT_*` environment variables,
//! then a TOML file, then built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "ROLLINGCHAT_";

macro_rules! settings {
    ($($(#[$meta:meta])* $field:ident: $ty:ty = $default:expr;)*) => {
        /// Fully resolved settings.
        #[derive(Debug, Clone, PartialEq, Serialize)]
        pub struct Config {
            $($(#[$meta])* pub $field: $ty,)*
        }

        /// One layer of settings; unset keys fall through to the next layer.
        #[derive(Debug, Clone, Default, PartialEq, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Layer {
            $(pub $field: Option<$ty>,)*
        }

        impl Default for Config {
            fn default() -> Self {
                Config { $($field: $default,)* }
            }
        }

        impl Config {
            /// Applies layers from lowest to highest precedence, noting
            /// where each value came from.
            pub fn resolve(layers: &[(&'static str, &Layer)]) -> (Config, BTreeMap<&'static str, &'static str>) {
                let mut cfg = Config::default();
                let mut sources = BTreeMap::new();
                $(sources.insert(stringify!($field), "default");)*
                for (source, layer) in layers {
                    $(
                        if let Some(v) = &layer.$field {
                            cfg.$field = v.clone();
                            sources.insert(stringify!($field), *source);
                        }
                    )*
                }
                (cfg, sources)
            }
        }

        pub const KEYS: &[&str] = &[$(stringify!($field)),*];
    };
}

settings! {
    host: String = "127.0.0.1".into();
    port: u16 = 8080;
    activity: String = "activity".into();
    /// Empty means the bundled sample script.
    script: String = String::new();
    log_dir: PathBuf = PathBuf::from("logs");
    tick_hz: f64 = 1.0;
    handshake_timeout_s: f64 = 10.0;
    /// 0 means unlimited.
    max_room_size: usize = 0;
    time_scale: f64 = 1.0;
    start: String = "2016-01-04".into();
    weeks: u32 = 12;
    predictors: String = "video_clicks_z,malfunction,alone,pair,group".into();
    week_effects: bool = false;
    seed: u64 = 7;
}

impl Layer {
    pub fn from_toml_file(path: &Path) -> Result<Layer> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Reads `ROLLINGCHAT_<KEY>` variables for every known key. Values are
    /// read as TOML scalars when they parse as one, and as strings otherwise.
    pub fn from_env(vars: impl IntoIterator<Item = (String, String)>) -> Result<Layer> {
        let mut table = toml::Table::new();
        for (k, v) in vars {
            let Some(key) = k.strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                continue;
            }
            let value = toml::from_str::<toml::Table>(&format!("v = {v}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .filter(|v| !v.is_table() && !v.is_array())
                .unwrap_or(toml::Value::String(v));
            table.insert(key, value);
        }
        Layer::deserialize(toml::Value::Table(table)).context("reading ROLLINGCHAT_* environment variables")
    }
}

/// Resolves settings for one command invocation.
pub fn load(config_path: Option<&Path>, flags: &Layer) -> Result<(Config, BTreeMap<&'static str, &'static str>)> {
    let file = match config_path {
        Some(p) => Layer::from_toml_file(p)?,
        None => Layer::default(),
    };
    let env = Layer::from_env(std::env::vars())?;
    Ok(Config::resolve(&[("file", &file), ("env", &env), ("flag", flags)]))
}

/// Resolved settings as TOML, each line annotated with its source.
pub fn render(cfg: &Config, sources: &BTreeMap<&str, &str>) -> String {
    let table = toml::Table::try_from(cfg).expect("settings serialize");
    let mut out = String::new();
    for key in KEYS {
        let value = &table[*key];
        let _ = writeln!(out, "{key} = {value}  # {}", sources[key]);
    }
    out
}
