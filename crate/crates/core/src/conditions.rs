//! Multi-condition run files: a JSON array of
//! `{label, T, P, phi, X0, schedule}` records.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::{Condition, KineticsError, Schedule};
use crate::mechanism::Mechanism;

#[derive(Debug, Error)]
pub enum ConditionsError {
    #[error("conditions file: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("conditions file is empty")]
    Empty,
    #[error("condition {index} has an empty label")]
    EmptyLabel { index: usize },
    #[error("duplicate condition label {0:?}")]
    DuplicateLabel(String),
    #[error("condition {label:?}: unknown species {species:?} in X0")]
    UnknownSpecies { label: String, species: String },
    #[error("condition {label:?}: X0[{species:?}] = {value} is negative or not finite")]
    InvalidConcentration {
        label: String,
        species: String,
        value: f64,
    },
    #[error("condition {label:?}: no schedule given and no default available")]
    MissingSchedule { label: String },
    #[error("condition {label:?}: {source}")]
    Schedule {
        label: String,
        #[source]
        source: KineticsError,
    },
    #[error("initial state {0:?}: expected NAME=VALUE pairs separated by commas")]
    InitialStateSyntax(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionRecord {
    pub label: String,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, rename = "P", skip_serializing_if = "Option::is_none")]
    pub pressure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(rename = "X0")]
    pub x0: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
}

/// How species names in `X0` that the mechanism lacks are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciesMatch {
    /// Unknown names are an error.
    Strict,
    /// Unknown names are ignored (a reduced mechanism may have dropped them).
    Lenient,
}

impl ConditionRecord {
    pub fn condition(&self) -> Condition {
        Condition {
            label: self.label.clone(),
            temperature: self.temperature,
            pressure: self.pressure,
            phi: self.phi,
        }
    }

    /// Initial concentrations in mechanism order; species not listed start at 0.
    pub fn initial_state(
        &self,
        mechanism: &Mechanism,
        matching: SpeciesMatch,
    ) -> Result<Vec<f64>, ConditionsError> {
        initial_state(&self.label, &self.x0, mechanism, matching)
    }

    /// Sample times from the record's schedule, or from `fallback`.
    pub fn times(&self, fallback: Option<&Schedule>) -> Result<Vec<f64>, ConditionsError> {
        let schedule = self.schedule.as_ref().or(fallback).ok_or_else(|| {
            ConditionsError::MissingSchedule {
                label: self.label.clone(),
            }
        })?;
        schedule
            .times()
            .map_err(|source| ConditionsError::Schedule {
                label: self.label.clone(),
                source,
            })
    }
}

pub fn parse_conditions(text: &str) -> Result<Vec<ConditionRecord>, ConditionsError> {
    let records: Vec<ConditionRecord> = serde_json::from_str(text)?;
    if records.is_empty() {
        return Err(ConditionsError::Empty);
    }
    let mut seen = BTreeSet::new();
    for (index, r) in records.iter().enumerate() {
        if r.label.trim().is_empty() {
            return Err(ConditionsError::EmptyLabel { index });
        }
        if !seen.insert(r.label.as_str()) {
            return Err(ConditionsError::DuplicateLabel(r.label.clone()));
        }
    }
    Ok(records)
}

fn initial_state(
    label: &str,
    values: &BTreeMap<String, f64>,
    mechanism: &Mechanism,
    matching: SpeciesMatch,
) -> Result<Vec<f64>, ConditionsError> {
    let mut x0 = vec![0.0; mechanism.n_species()];
    for (name, &value) in values {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(ConditionsError::InvalidConcentration {
                label: label.to_string(),
                species: name.clone(),
                value,
            });
        }
        match (mechanism.species_index(name), matching) {
            (Some(j), _) => x0[j] = value,
            (None, SpeciesMatch::Lenient) => {}
            (None, SpeciesMatch::Strict) => {
                return Err(ConditionsError::UnknownSpecies {
                    label: label.to_string(),
                    species: name.clone(),
                })
            }
        }
    }
    Ok(x0)
}

/// Parses `NAME=VALUE,NAME=VALUE` into concentrations in mechanism order.
pub fn parse_initial_state(text: &str, mechanism: &Mechanism) -> Result<Vec<f64>, ConditionsError> {
    let bad = || ConditionsError::InitialStateSyntax(text.to_string());
    let mut values = BTreeMap::new();
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = pair.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        if values.insert(name.trim().to_string(), value).is_some() {
            return Err(bad());
        }
    }
    initial_state("command line", &values, mechanism, SpeciesMatch::Strict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::parse_mechanism;

    fn mech() -> Mechanism {
        parse_mechanism(
            r#"{"species": ["H2","O2","H2O"], "reactions": [
            {"reactants": {"H2": 2, "O2": 1}, "products": {"H2O": 2}, "rate": {"k": 1}}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn records_map_to_mechanism_order() {
        let text = r#"[
            {"label": "lean", "T": 1000, "P": 1, "phi": 0.5, "X0": {"O2": 1, "H2": 1},
             "schedule": {"kind": "uniform", "t_end": 1, "samples": 3}},
            {"label": "rich", "X0": {"H2": 2}}
        ]"#;
        let recs = parse_conditions(text).unwrap();
        assert_eq!(recs.len(), 2);
        let m = mech();
        assert_eq!(
            recs[0].initial_state(&m, SpeciesMatch::Strict).unwrap(),
            [1.0, 1.0, 0.0]
        );
        assert_eq!(recs[0].condition().temperature, Some(1000.0));
        assert_eq!(recs[0].times(None).unwrap(), [0.0, 0.5, 1.0]);
        assert!(matches!(
            recs[1].times(None),
            Err(ConditionsError::MissingSchedule { .. })
        ));
        let fallback = Schedule::Explicit {
            times: vec![0.0, 2.0],
        };
        assert_eq!(recs[1].times(Some(&fallback)).unwrap(), [0.0, 2.0]);
    }

    #[test]
    fn unknown_species_depends_on_matching() {
        let recs = parse_conditions(r#"[{"label": "a", "X0": {"N2": 1, "H2": 1}}]"#).unwrap();
        let m = mech();
        assert!(recs[0].initial_state(&m, SpeciesMatch::Strict).is_err());
        assert_eq!(
            recs[0].initial_state(&m, SpeciesMatch::Lenient).unwrap(),
            [1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            parse_conditions("[]"),
            Err(ConditionsError::Empty)
        ));
        assert!(matches!(
            parse_conditions(r#"[{"label": "a", "X0": {}}, {"label": "a", "X0": {}}]"#),
            Err(ConditionsError::DuplicateLabel(_))
        ));
        assert!(parse_conditions(r#"[{"label": "a", "X0": {}, "Tmax": 3}]"#).is_err());
        let recs = parse_conditions(r#"[{"label": "a", "X0": {"H2": -1}}]"#).unwrap();
        assert!(recs[0]
            .initial_state(&mech(), SpeciesMatch::Strict)
            .is_err());
    }

    #[test]
    fn command_line_state() {
        let m = mech();
        assert_eq!(
            parse_initial_state("H2=2, O2=1", &m).unwrap(),
            [2.0, 1.0, 0.0]
        );
        assert!(parse_initial_state("H2", &m).is_err());
        assert!(parse_initial_state("He=1", &m).is_err());
    }
}
