//! Sequence and experiment specifications read from flags or JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use walsh_filter::catalog::CatalogSpec;
use walsh_filter::shaping::{shape_sequence, Shape};
use walsh_filter::simulate::NoiseEnvironment;
use walsh_filter::ControlSequence;

use crate::error::CliError;
use crate::parse;

/// Any of the accepted sequence descriptions, after defaults are resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SequenceSpec {
    Catalog(CatalogSpec<f64>),
    Triples { triples: Vec<(f64, f64, f64)>, label: String },
    Shaped { amplitudes: Vec<f64>, shape: Shape, tau: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TriplesSpec {
    triples: Vec<(f64, f64, f64)>,
    #[serde(default = "default_label")]
    label: String,
}

fn default_label() -> String {
    "custom".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapedSpec {
    amplitudes: Vec<f64>,
    shape: Shape,
    #[serde(default = "one")]
    tau: f64,
}

fn one() -> f64 {
    1.0
}

impl SequenceSpec {
    pub fn from_value(mut value: Value) -> Result<Self, CliError> {
        parse::numeric_strings(&mut value);
        let Value::Object(map) = &value else {
            return Err(CliError::parse("sequence spec must be a JSON object"));
        };
        let err = |what: &str, e: serde_json::Error| CliError::parse(format!("{what} spec: {e}"));
        if map.contains_key("family") {
            if let Some(key) = map.keys().find(|k| !["family", "params", "tau"].contains(&k.as_str())) {
                return Err(CliError::parse(format!("catalog spec: unknown field `{key}`, expected family, params or tau")));
            }
            serde_json::from_value(value).map(SequenceSpec::Catalog).map_err(|e| err("catalog", e))
        } else if map.contains_key("triples") {
            let t: TriplesSpec = serde_json::from_value(value).map_err(|e| err("triples", e))?;
            Ok(SequenceSpec::Triples { triples: t.triples, label: t.label })
        } else if map.contains_key("shape") {
            let s: ShapedSpec = serde_json::from_value(value).map_err(|e| err("shaped", e))?;
            Ok(SequenceSpec::Shaped { amplitudes: s.amplitudes, shape: s.shape, tau: s.tau })
        } else {
            Err(CliError::parse("sequence spec needs a `family`, `triples` or `shape` key"))
        }
    }

    /// From `--family` and `--params`.
    pub fn from_flags(family: &str, params: &str, tau: f64) -> Result<Self, CliError> {
        let params = parse::params(params)?;
        let mut obj = Map::new();
        obj.insert("family".into(), Value::String(family.to_string()));
        obj.insert("params".into(), Value::Object(params));
        obj.insert("tau".into(), serde_json::json!(tau));
        Self::from_value(Value::Object(obj))
    }

    pub fn build(&self) -> Result<ControlSequence, CliError> {
        Ok(match self {
            SequenceSpec::Catalog(spec) => spec.build()?,
            SequenceSpec::Triples { triples, label } => ControlSequence::from_triples(triples, label.clone())?,
            SequenceSpec::Shaped { amplitudes, shape, tau } => shape_sequence(amplitudes, shape, *tau)?,
        })
    }
}

/// Reads inline JSON (starting with `{`) or a file.
pub fn read_json(source: &str) -> Result<Value, CliError> {
    let text = if source.trim_start().starts_with('{') {
        source.to_string()
    } else {
        std::fs::read_to_string(Path::new(source)).map_err(|e| CliError::io(format!("{source}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{source}: {e}")))
}

/// Noise experiment for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub sequence: SequenceSpec,
    pub noise: NoiseEnvironment,
    pub realizations: usize,
    pub seed: u64,
    pub substeps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    sequence: Value,
    #[serde(default)]
    noise: NoiseEnvironment,
    #[serde(default = "default_realizations")]
    realizations: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    substeps: Option<usize>,
}

pub fn default_realizations() -> usize {
    500
}

impl Experiment {
    pub fn from_value(mut value: Value) -> Result<Self, CliError> {
        parse::numeric_strings(&mut value);
        let file: ExperimentFile =
            serde_json::from_value(value).map_err(|e| CliError::parse(format!("experiment spec: {e}")))?;
        Ok(Self {
            sequence: SequenceSpec::from_value(file.sequence)?,
            noise: file.noise,
            realizations: file.realizations,
            seed: file.seed,
            substeps: file.substeps,
        })
    }
}
