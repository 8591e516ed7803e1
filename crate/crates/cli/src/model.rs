use std::path::Path;

use pcc_core::archimedean::ArchimedeanGenerator;
use pcc_core::bicop::BivariateCopula;
use pcc_core::elliptical::EllipticalSpec;
use pcc_core::mo::MoSpec;
use pcc_core::pcc::{ArchimedeanModel, PccSpec, TrivariateModel};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Spec file contents, selected by the `"model"` key.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Archimedean(ArchimedeanGenerator),
    Elliptical(EllipticalSpec),
    Pcc(PccSpec),
    MarshallOlkin(MoSpec),
    Bicop(BivariateCopula),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Archimedean(_) => "archimedean",
            Model::Elliptical(_) => "elliptical",
            Model::Pcc(_) => "pcc",
            Model::MarshallOlkin(_) => "marshall_olkin",
            Model::Bicop(_) => "bicop",
        }
    }

    pub fn trivariate(&self) -> Result<Box<dyn TrivariateModel + '_>, CliError> {
        match self {
            Model::Archimedean(g) => Ok(Box::new(ArchimedeanModel(g.clone()))),
            Model::Elliptical(e) => Ok(Box::new(e.clone())),
            Model::Pcc(p) => Ok(Box::new(p.clone())),
            other => Err(CliError::Usage(format!(
                "model '{}' has no trivariate density for extraction",
                other.name()
            ))),
        }
    }
}

fn read_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn typed<T: DeserializeOwned>(path: &Path, value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { String::new() } else { format!(" at {field}") };
        CliError::Usage(format!("{}{field}: {}", path.display(), e.inner()))
    })
}

/// Reads a JSON file, reporting the offending field path on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    typed(path, read_value(path)?)
}

/// Reads a model spec; the `"model"` key picks the schema for the rest.
pub fn read_model(path: &Path) -> Result<Model, CliError> {
    let mut value = read_value(path)?;
    let tag = value
        .as_object_mut()
        .and_then(|m| m.remove("model"))
        .ok_or_else(|| CliError::Usage(format!("{}: missing \"model\" key", path.display())))?;
    Ok(match tag.as_str() {
        Some("archimedean") => Model::Archimedean(typed(path, value)?),
        Some("elliptical") => Model::Elliptical(typed(path, value)?),
        Some("pcc") => Model::Pcc(typed(path, value)?),
        Some("marshall_olkin") => Model::MarshallOlkin(typed(path, value)?),
        Some("bicop") => Model::Bicop(typed(path, value)?),
        _ => {
            return Err(CliError::Usage(format!(
                "{}: model must be one of archimedean, elliptical, pcc, marshall_olkin, bicop; got {tag}",
                path.display()
            )))
        }
    })
}
