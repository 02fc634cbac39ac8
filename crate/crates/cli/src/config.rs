//! Problem configuration: a single JSON document describing the lattice, the
//! potential, the quasimomentum and command parameters.

use std::f64::consts::PI;
use std::path::Path;

use halfspace_core::rootfn::{parse_rational, rational_from_f64, PiLaurent};
use halfspace_core::{FourierPotential, IndexVector, LatticeBasis};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: usize,
    generators: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    potential: Vec<RawEntry>,
    #[serde(default)]
    mode: Mode,
    truncation_radius: Option<f64>,
    t: Option<Vec<f64>>,
    #[serde(default)]
    params: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    index: Vec<i64>,
    re: Scalar,
    #[serde(default)]
    im: Scalar,
    /// The coefficient is `(re + i·im)·π^(2·pi2_power)`.
    #[serde(default)]
    pi2_power: i32,
}

/// A JSON number, or a string holding an exact rational such as `"-1/4"`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::Number(0.0)
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Summable,
    SquareSummable,
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub basis: LatticeBasis,
    /// Coefficients as given, kept exact.
    pub exact: Vec<(IndexVector, PiLaurent)>,
    pub potential: FourierPotential,
    pub t: Vec<f64>,
    pub params: Map<String, Value>,
}

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Parse {
        field: field.into(),
        message: message.into(),
    }
}

fn exact_scalar(s: &Scalar, field: &str) -> Result<num_rational::BigRational, CliError> {
    match s {
        Scalar::Number(x) => rational_from_f64(*x).ok_or_else(|| parse_err(field, "not finite")),
        Scalar::Text(text) => parse_rational(text).map_err(|e| parse_err(field, e.to_string())),
    }
}

impl ProblemConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            parse_err(if path == "." { "config".into() } else { path }, e.inner().to_string())
        })?;
        let d = raw.dimension;
        if d == 0 {
            return Err(parse_err("dimension", "must be positive"));
        }
        // period-1 functions in one dimension unless told otherwise
        let generators = raw.generators.unwrap_or_else(|| {
            if d == 1 {
                vec![vec![2.0 * PI]]
            } else {
                (0..d)
                    .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect()
            }
        });
        if generators.len() != d {
            return Err(parse_err(
                "generators",
                format!("expected {d} generators, found {}", generators.len()),
            ));
        }
        let basis =
            LatticeBasis::new(generators).map_err(|e| parse_err("generators", e.to_string()))?;

        let mut exact = Vec::with_capacity(raw.potential.len());
        for (i, entry) in raw.potential.iter().enumerate() {
            let field = format!("potential[{i}]");
            if entry.index.len() != d {
                return Err(parse_err(
                    format!("{field}.index"),
                    format!("expected {d} components, found {}", entry.index.len()),
                ));
            }
            let re = exact_scalar(&entry.re, &format!("{field}.re"))?;
            let im = exact_scalar(&entry.im, &format!("{field}.im"))?;
            exact.push((
                IndexVector::new(entry.index.clone()),
                PiLaurent::monomial(re, im, entry.pi2_power),
            ));
        }
        let floats = exact.iter().map(|(k, v)| (k.clone(), v.to_complex()));
        let potential = match raw.mode {
            Mode::Summable => FourierPotential::new(basis.clone(), floats),
            Mode::SquareSummable => {
                let radius = raw
                    .truncation_radius
                    .ok_or_else(|| parse_err("truncation_radius", "required in square-summable mode"))?;
                FourierPotential::square_summable(basis.clone(), floats, radius)
            }
        }
        .map_err(|e| parse_err("potential", e.to_string()))?;

        let t = raw.t.unwrap_or_else(|| vec![0.0; d]);
        if t.len() != d || t.iter().any(|x| !x.is_finite()) {
            return Err(parse_err("t", format!("expected {d} finite components")));
        }
        Ok(ProblemConfig {
            basis,
            exact,
            potential,
            t,
            params: raw.params,
        })
    }

    /// Optional typed parameter `params.<name>`.
    pub fn param<T: DeserializeOwned>(&self, name: &str) -> Result<Option<T>, CliError> {
        match self.params.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| parse_err(format!("params.{name}"), e.to_string())),
        }
    }

    pub fn param_or<T: DeserializeOwned>(&self, name: &str, default: T) -> Result<T, CliError> {
        Ok(self.param(name)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&self, name: &str) -> Result<T, CliError> {
        self.param(name)?
            .ok_or_else(|| parse_err(format!("params.{name}"), "missing"))
    }

    /// `params.<name>` as a lattice index of the configured dimension.
    pub fn index_param(&self, name: &str, default: Option<IndexVector>) -> Result<IndexVector, CliError> {
        let coords: Option<Vec<i64>> = self.param(name)?;
        let index = match (coords, default) {
            (Some(c), _) => IndexVector::new(c),
            (None, Some(d)) => d,
            (None, None) => return Err(parse_err(format!("params.{name}"), "missing")),
        };
        if index.dim() != self.basis.dim() {
            return Err(parse_err(
                format!("params.{name}"),
                format!("expected {} components", self.basis.dim()),
            ));
        }
        Ok(index)
    }
}
