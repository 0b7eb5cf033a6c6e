//! One resolved configuration for the whole tool.
//!
//! A single JSON file feeds every subcommand; each top-level section is the
//! corresponding module's own config type, so defaults live in exactly one
//! place. Loading resolves all defaults, rejects unknown keys by name,
//! reports type errors with the dotted path to the offending key, and
//! applies `--set key.path=value` overrides before validation. The resolved
//! result is echoed into every run manifest.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::afc::{CleaningConfig, CsvSchema};
use crate::calendar::{Calendar, DayWindow};
use crate::error::{Error, Result};
use crate::flow;
use crate::neural::{ModelConfig, TrainingConfig};
use crate::pipeline::{CompareConfig, PipelineOptions};
use crate::stl::StlParams;
use crate::synth::SynthConfig;

/// Calendar inputs that are policy, not data: the dates to treat as rest
/// days regardless of weekday.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalendarSection {
    pub holidays: BTreeSet<NaiveDate>,
}

impl CalendarSection {
    pub fn calendar(&self) -> Calendar {
        Calendar::with_holidays(self.holidays.iter().copied())
    }
}

/// Flow-series construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    /// Station whose transfer flow is aggregated.
    pub station: String,
    pub interval_secs: u32,
    pub day_window: DayWindow,
    /// Pad each day's overnight closure with zero bins before decomposing
    /// instead of concatenating the service windows.
    pub pad_overnight: bool,
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection {
            station: "S05".into(),
            interval_secs: flow::DEFAULT_INTERVAL_SECS,
            day_window: flow::default_day_window(),
            pad_overnight: false,
        }
    }
}

/// Comparison-grid settings that belong to no other section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Take the decomposition period from each scenario's own grid instead
    /// of `stl.period`.
    pub auto_period: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { auto_period: true }
    }
}

/// Everything the tool can be told, with every default materialized.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub csv: CsvSchema,
    pub cleaning: CleaningConfig,
    pub calendar: CalendarSection,
    pub flow: FlowSection,
    pub stl: StlParams,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub pipeline: PipelineOptions,
    pub compare: CompareSection,
    pub synth: SynthConfig,
}

impl AppConfig {
    /// The comparison configuration implied by the relevant sections.
    pub fn compare_config(&self) -> CompareConfig {
        CompareConfig {
            stl: self.stl.clone(),
            auto_period: self.compare.auto_period,
            model: self.model.clone(),
            training: self.training,
            options: self.pipeline.clone(),
        }
    }
}

/// Deserializes a JSON value into the full config, reporting errors with
/// the dotted path to the offending key (`stl.n_s: invalid type …`).
fn config_from_value(value: serde_json::Value) -> Result<AppConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            Error::Config(format!("config: {inner}"))
        } else {
            Error::Config(format!("config key `{path}`: {inner}"))
        }
    })
}

/// Parses one `key.path=value` override. The value is interpreted as JSON
/// when it parses as JSON (numbers, booleans, arrays, quoted strings) and
/// as a bare string otherwise, so `--set stl.n_s=25` and
/// `--set flow.station=S05` both do what they look like.
pub fn apply_override(tree: &mut serde_json::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parameter(format!("--set expects key.path=value, got `{spec}`")))?;
    let segments: Vec<&str> = path.split('.').collect();
    if path.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Parameter(format!(
            "--set key `{path}` has an empty path segment"
        )));
    }
    let value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = tree;
    for seg in &segments[..segments.len() - 1] {
        let map = node.as_object_mut().ok_or_else(|| {
            Error::Parameter(format!("--set key `{path}`: `{seg}` is not inside a section"))
        })?;
        node = map
            .entry(seg.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
        if !node.is_object() {
            return Err(Error::Parameter(format!(
                "--set key `{path}`: `{seg}` is a value, not a section"
            )));
        }
    }
    let last = segments[segments.len() - 1];
    node.as_object_mut()
        .ok_or_else(|| Error::Parameter(format!("--set key `{path}` does not name a value")))?
        .insert(last.to_string(), value);
    Ok(())
}

/// Loads the configuration: the file at `path` (all defaults when absent or
/// empty), then `--set` overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<AppConfig> {
    let mut tree = match path {
        None => serde_json::Value::Object(Default::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Input(format!("cannot read config {}: {e}", p.display())))?;
            if text.trim().is_empty() {
                serde_json::Value::Object(Default::default())
            } else {
                let parsed: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
                    Error::Config(format!("config {} is not valid JSON: {e}", p.display()))
                })?;
                if !parsed.is_object() {
                    return Err(Error::Config(format!(
                        "config {} must be a JSON object",
                        p.display()
                    )));
                }
                parsed
            }
        }
    };
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    config_from_value(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn load_str(text: &str, overrides: &[&str]) -> Result<AppConfig> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        load_config(Some(f.path()), &overrides)
    }

    #[test]
    fn empty_file_gives_all_defaults() {
        let cfg = load_str("", &[]).unwrap();
        assert_eq!(cfg.stl.seasonal_span, 15);
        assert_eq!(cfg.model.layer_sizes, vec![128, 256]);
        assert_eq!(cfg.training.epochs, 100);
        assert_eq!(cfg.flow.interval_secs, 300);
        assert_eq!(cfg.synth.days, 28);
        let no_file = load_config(None, &[]).unwrap();
        assert_eq!(no_file.flow.station, cfg.flow.station);
    }

    #[test]
    fn short_stl_names_are_accepted() {
        let cfg = load_str(r#"{"stl": {"n_s": 25, "n_o": 5}}"#, &[]).unwrap();
        assert_eq!(cfg.stl.seasonal_span, 25);
        assert_eq!(cfg.stl.outer_iterations, 5);
        // The long names still work and other fields keep their defaults.
        let cfg = load_str(r#"{"stl": {"seasonal_span": 9}}"#, &[]).unwrap();
        assert_eq!(cfg.stl.seasonal_span, 9);
        assert_eq!(cfg.stl.trend_span, 20);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = load_str(r#"{"stl": {"season_span": 25}}"#, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("season_span"), "{msg}");
        let err = load_str(r#"{"stle": {}}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("stle"), "{err}");
    }

    #[test]
    fn type_errors_name_the_dotted_path() {
        let err = load_str(r#"{"stl": {"n_s": "high"}}"#, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stl.n_s"), "{msg}");
        let err = load_str(r#"{"training": {"epochs": "many"}}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("training.epochs"), "{err}");
    }

    #[test]
    fn set_overrides_apply_in_order_and_beat_the_file() {
        let cfg = load_str(
            r#"{"stl": {"n_s": 25}}"#,
            &["stl.n_s=35", "flow.station=S06", "model.layer_sizes=[8,16]"],
        )
        .unwrap();
        assert_eq!(cfg.stl.seasonal_span, 35);
        assert_eq!(cfg.flow.station, "S06");
        assert_eq!(cfg.model.layer_sizes, vec![8, 16]);
        let cfg = load_config(None, &["training.epochs=3".into(), "training.epochs=4".into()])
            .unwrap();
        assert_eq!(cfg.training.epochs, 4);
    }

    #[test]
    fn set_rejects_malformed_specs() {
        assert!(load_config(None, &["training.epochs".into()]).is_err());
        assert!(load_config(None, &["=3".into()]).is_err());
        assert!(load_config(None, &["training..epochs=3".into()]).is_err());
        // A path through a scalar is an error, not a silent overwrite.
        assert!(load_config(None, &["training.epochs.nested=3".into()]).is_err());
        // Unknown key via --set is caught by the same strict deserialize.
        let err = load_config(None, &["training.epoch=3".into()]).unwrap_err();
        assert!(err.to_string().contains("epoch"), "{err}");
    }

    #[test]
    fn compare_config_mirrors_the_sections() {
        let cfg = load_config(None, &["stl.n_i=2".into(), "compare.auto_period=false".into()])
            .unwrap();
        let cc = cfg.compare_config();
        assert_eq!(cc.stl.inner_iterations, 2);
        assert!(!cc.auto_period);
        assert_eq!(cc.model, cfg.model);
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let cfg = load_config(None, &[]).unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: AppConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&cfg).unwrap());
    }
}
