//! Instance JSON.
//!
//! ```json
//! {"kind": "one_sided", "n": 2, "utilities": [[0.7, 0.3], [0.6, 0.4]]}
//! {"kind": "generalized", "n": 2, "m": 1, "capacities": [1, 1], "supplies": [2],
//!  "utilities": [[[0.5]], [[1.0]]], "limits": null}
//! ```
//!
//! Counts are read as numbers and must be integral. Generalized utilities
//! may give a bare number instead of a one-element marginal list.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{GeneralizedDims, GeneralizedInstance, OneSidedInstance, UtilityProfile};

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    OneSided {
        items: OneSidedInstance,
        profile: UtilityProfile,
    },
    Generalized(GeneralizedInstance),
}

impl Instance {
    pub fn agents(&self) -> usize {
        match self {
            Instance::OneSided { profile, .. } => profile.n(),
            Instance::Generalized(g) => g.dims().n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    OneSided,
    Generalized,
}

#[derive(Debug, Deserialize)]
struct RawInstance {
    kind: Kind,
    n: Option<f64>,
    m: Option<f64>,
    capacities: Option<Vec<f64>>,
    supplies: Option<Vec<f64>>,
    utilities: Vec<Vec<Marginals>>,
    limits: Option<Vec<Vec<f64>>>,
    item_labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Marginals {
    Single(f64),
    Copies(Vec<f64>),
}

impl Marginals {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Marginals::Single(x) => vec![x],
            Marginals::Copies(v) => v,
        }
    }
}

fn count(field: &str, x: f64) -> Result<usize> {
    if x.fract() != 0.0 || x < 0.0 || !x.is_finite() {
        return Err(Error::Dimension(format!(
            "{field} = {x} is not a nonnegative integer"
        )));
    }
    Ok(x as usize)
}

fn counts(field: &str, xs: &[f64]) -> Result<Vec<usize>> {
    xs.iter().map(|&x| count(field, x)).collect()
}

fn check_declared(field: &str, declared: Option<f64>, actual: usize) -> Result<()> {
    if let Some(d) = declared {
        if count(field, d)? != actual {
            return Err(Error::Dimension(format!(
                "{field} = {d} but the data has {actual}"
            )));
        }
    }
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text)?;
    match raw.kind {
        Kind::OneSided => {
            let rows: Vec<Vec<f64>> = raw
                .utilities
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|m| match m {
                            Marginals::Single(x) => Ok(x),
                            Marginals::Copies(_) => Err(Error::Dimension(
                                "one-sided utilities must be a matrix of numbers".into(),
                            )),
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            check_declared("n", raw.n, rows.len())?;
            check_declared("m", raw.m, rows.len())?;
            let items = match raw.item_labels {
                Some(labels) => OneSidedInstance::new(labels)?,
                None => OneSidedInstance::indexed(rows.len())?,
            };
            let profile = UtilityProfile::new(rows)?;
            if items.n() != profile.n() {
                return Err(Error::Dimension(format!(
                    "{} item labels for {} agents",
                    items.n(),
                    profile.n()
                )));
            }
            Ok(Instance::OneSided { items, profile })
        }
        Kind::Generalized => {
            let caps = counts(
                "capacities",
                &raw.capacities.ok_or_else(|| missing("capacities"))?,
            )?;
            let sups = counts(
                "supplies",
                &raw.supplies.ok_or_else(|| missing("supplies"))?,
            )?;
            check_declared("n", raw.n, caps.len())?;
            check_declared("m", raw.m, sups.len())?;
            let limits = raw
                .limits
                .map(|l| {
                    l.iter()
                        .map(|row| counts("limits", row))
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            let dims = GeneralizedDims::new(caps, sups, limits)?;
            let utilities = raw
                .utilities
                .into_iter()
                .map(|row| row.into_iter().map(Marginals::into_vec).collect())
                .collect();
            Ok(Instance::Generalized(GeneralizedInstance::new(
                dims, utilities,
            )?))
        }
    }
}

fn missing(field: &str) -> Error {
    Error::Dimension(format!("generalized instance needs `{field}`"))
}

pub fn instance_to_json(inst: &Instance) -> Value {
    match inst {
        Instance::OneSided { items, profile } => {
            let mut v = json!({
                "kind": Kind::OneSided,
                "n": profile.n(),
                "utilities": profile.rows(),
            });
            let indexed = items
                .labels()
                .iter()
                .enumerate()
                .all(|(i, l)| *l == i.to_string());
            if !indexed {
                v["item_labels"] = json!(items.labels());
            }
            v
        }
        Instance::Generalized(g) => {
            let d = g.dims();
            json!({
                "kind": Kind::Generalized,
                "n": d.n(),
                "m": d.m(),
                "capacities": d.capacities(),
                "supplies": d.supplies(),
                "utilities": g.utilities(),
                "limits": d.limits(),
            })
        }
    }
}
