//! JSON problem documents.
//!
//! A document either names a built-in gallery family with numeric parameters
//! or tabulates constant coefficients per control over a cylinder or product
//! domain.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BoundaryData, CoeffSample, ControlSpace, DomainSpec, FnCoefficients, GeneralDomain,
    ProblemInstance, Region, Regularity, MAX_DIM,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub name: String,
    pub source: Source,
    /// Overrides the constants a gallery entry declares.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Regularity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Gallery {
        entry: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Table {
        dim: usize,
        noise_dim: usize,
        domain: DomainDocument,
        controls: Vec<TableControl>,
        /// Nested levels as prefix sizes of `controls`; all controls when empty.
        #[serde(default)]
        levels: Vec<usize>,
        /// Constant boundary payoff.
        boundary: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainDocument {
    Cylinder { terminal_time: f64, region: Region },
    Product { t0: f64, t1: f64, region: Region },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableControl {
    pub label: String,
    /// Rows of the `d × d₁` diffusion matrix.
    pub sigma: Vec<Vec<f64>>,
    pub drift: Vec<f64>,
    #[serde(default)]
    pub discount: f64,
    #[serde(default)]
    pub reward: f64,
}

impl ProblemDocument {
    pub fn gallery(entry: &str, params: &[(&str, f64)]) -> Self {
        Self {
            name: entry.to_string(),
            source: Source::Gallery {
                entry: entry.to_string(),
                params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            },
            constants: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let mut instance = match &self.source {
            Source::Gallery { entry, params } => crate::gallery::build(entry, params)?,
            Source::Table {
                dim,
                noise_dim,
                domain,
                controls,
                levels,
                boundary,
            } => build_table(
                &self.name, *dim, *noise_dim, domain, controls, levels, *boundary,
            )?,
        };
        instance.name = self.name.clone();
        if let Some(c) = self.constants {
            instance.regularity = c;
        }
        Ok(instance)
    }
}

fn build_table(
    name: &str,
    dim: usize,
    noise_dim: usize,
    domain: &DomainDocument,
    controls: &[TableControl],
    levels: &[usize],
    boundary: f64,
) -> Result<ProblemInstance> {
    if !(1..=MAX_DIM).contains(&dim) || !(1..=MAX_DIM).contains(&noise_dim) {
        return Err(Error::Input(format!(
            "dimensions must lie in 1..={MAX_DIM}, got d = {dim}, d1 = {noise_dim}"
        )));
    }
    let mut table = Vec::with_capacity(controls.len());
    for c in controls {
        if c.sigma.len() != dim || c.sigma.iter().any(|r| r.len() != noise_dim) {
            return Err(Error::Input(format!(
                "control '{}': sigma must be {dim}×{noise_dim}",
                c.label
            )));
        }
        if c.drift.len() != dim {
            return Err(Error::Input(format!(
                "control '{}': drift must have {dim} entries",
                c.label
            )));
        }
        let mut s = CoeffSample::ZERO
            .with_drift(&c.drift)
            .with_discount(c.discount)
            .with_reward(c.reward);
        for (i, row) in c.sigma.iter().enumerate() {
            s.sigma[i][..noise_dim].copy_from_slice(row);
        }
        table.push(s);
    }
    let labels: Vec<String> = controls.iter().map(|c| c.label.clone()).collect();
    let space = if levels.is_empty() {
        if labels.is_empty() {
            return Err(Error::Input("at least one control is required".into()));
        }
        ControlSpace::flat(labels)
    } else {
        ControlSpace::prefixes(labels, levels)?
    };
    let domain = match domain {
        DomainDocument::Cylinder {
            terminal_time,
            region,
        } => DomainSpec::cylinder(*terminal_time, region.clone()),
        DomainDocument::Product { t0, t1, region } => {
            DomainSpec::General(GeneralDomain::product(*t0, *t1, region.clone()))
        }
    };
    if domain.dim() != dim {
        return Err(Error::Input(format!(
            "domain dimension {} does not match d = {dim}",
            domain.dim()
        )));
    }
    let min_c = table
        .iter()
        .map(|s| s.discount)
        .fold(f64::INFINITY, f64::min);
    let regularity = Regularity {
        k: 0.0,
        k1: table
            .iter()
            .map(|s| s.reward.abs().max(s.discount.abs()))
            .fold(boundary.abs(), f64::max),
        lambda: min_c,
        sup_bound: f64::INFINITY,
        eps0: 0.0,
    };
    Ok(ProblemInstance::new(
        name,
        space,
        FnCoefficients::constant_table(dim, noise_dim, table),
        domain,
        BoundaryData::constant(boundary),
    )?
    .with_regularity(regularity))
}
