//! Merging per-condition selections into a reduced mechanism, and comparing
//! the reduced mechanism against its parent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kinetics::{simulate, Condition, KineticsError, SimulationOptions, Trajectory};
use crate::mechanism::{Mechanism, MechanismError, ProvenanceEntry};
use crate::selection::SelectionMask;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("no selection masks given")]
    NoMasks,
    #[error("mask {label:?} covers {found} reactions, expected {expected}")]
    MaskShape {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("no reaction was selected under any condition")]
    EmptySelection,
    #[error("influential set refers to {found} parent reactions, mechanism has {expected}")]
    ParentMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("unknown progress species {0:?}")]
    UnknownSpecies(String),
    #[error("reduced mechanism species {0:?} does not exist in the parent")]
    ForeignSpecies(String),
    #[error("species {species:?} has zero net change over the trajectory")]
    ZeroNetChange { species: String },
    #[error("condition {label:?}, {which} mechanism: {source}")]
    Simulation {
        label: String,
        which: &'static str,
        #[source]
        source: KineticsError,
    },
    #[error("condition {label:?}, {which} mechanism: {source}")]
    Progress {
        label: String,
        which: &'static str,
        #[source]
        source: Box<ReductionError>,
    },
}

/// Union of influential reactions over conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluentialSet {
    /// Reaction count of the parent mechanism.
    pub n_parent: usize,
    /// Sorted parent reaction indices.
    pub kept: Vec<usize>,
    /// Labels of the conditions that selected each kept reaction.
    pub provenance: BTreeMap<usize, BTreeSet<String>>,
}

/// Keeps every reaction selected at any step under any condition.
pub fn union_influential(
    masks: &[(String, SelectionMask)],
) -> Result<InfluentialSet, ReductionError> {
    let n_parent = masks
        .first()
        .ok_or(ReductionError::NoMasks)?
        .1
        .n_reactions();
    let mut provenance: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (label, mask) in masks {
        if mask.n_reactions() != n_parent {
            return Err(ReductionError::MaskShape {
                label: label.clone(),
                expected: n_parent,
                found: mask.n_reactions(),
            });
        }
        for i in mask.ever_selected() {
            provenance.entry(i).or_default().insert(label.clone());
        }
    }
    Ok(InfluentialSet {
        n_parent,
        kept: provenance.keys().copied().collect(),
        provenance,
    })
}

#[derive(Debug, Clone)]
pub struct ReducedMechanism {
    pub mechanism: Mechanism,
    /// Sorted parent indices; reaction `n` of `mechanism` is parent reaction
    /// `kept_reaction_indices[n]`.
    pub kept_reaction_indices: Vec<usize>,
    pub provenance: BTreeMap<usize, BTreeSet<String>>,
}

impl ReducedMechanism {
    /// Mechanism JSON with a `provenance` block (1-based reaction numbers).
    pub fn to_json(&self) -> String {
        let mut doc = self.mechanism.to_document();
        doc.provenance = Some(
            self.kept_reaction_indices
                .iter()
                .enumerate()
                .map(|(n, &parent)| ProvenanceEntry {
                    reaction: n + 1,
                    parent_reaction: parent + 1,
                    conditions: self.provenance[&parent].iter().cloned().collect(),
                })
                .collect(),
        );
        doc.to_json()
    }
}

/// The parent restricted to the influential set, in parent order, with
/// orphaned species removed.
pub fn emit_reduced(
    parent: &Mechanism,
    set: &InfluentialSet,
) -> Result<ReducedMechanism, ReductionError> {
    if set.n_parent != parent.n_reactions() {
        return Err(ReductionError::ParentMismatch {
            expected: parent.n_reactions(),
            found: set.n_parent,
        });
    }
    if set.kept.is_empty() {
        return Err(ReductionError::EmptySelection);
    }
    Ok(ReducedMechanism {
        mechanism: parent.subset(&set.kept)?,
        kept_reaction_indices: set.kept.clone(),
        provenance: set.provenance.clone(),
    })
}

/// Earliest time at which `species` has covered half of its net change over
/// the trajectory, interpolating linearly between samples.
pub fn characteristic_time(trajectory: &Trajectory, species: usize) -> Result<f64, ReductionError> {
    let x = trajectory.concentrations().column(species);
    let t = trajectory.times();
    let first = x[0];
    let change = x[x.len() - 1] - first;
    if change.abs() <= f64::EPSILON * first.abs().max(x[x.len() - 1].abs()) {
        return Err(ReductionError::ZeroNetChange {
            species: species.to_string(),
        });
    }
    let progress = |k: usize| (x[k] - first) / change;
    let k = (1..x.len())
        .find(|&k| progress(k) >= 0.5)
        .expect("final sample has progress 1");
    let (p0, p1) = (progress(k - 1), progress(k));
    Ok(t[k - 1] + (0.5 - p0) / (p1 - p0) * (t[k] - t[k - 1]))
}

/// Default progress species: the first reactant (in species order) of the
/// first reaction.
pub fn default_progress_species(mechanism: &Mechanism) -> Option<&str> {
    let r = mechanism.reactions().first()?;
    let &(j, _) = r.reactants.first()?;
    Some(&mechanism.species()[j].name)
}

/// One comparison run: an operating condition, the initial state in parent
/// species order, and the sample times.
#[derive(Debug, Clone)]
pub struct ComparisonCase {
    pub condition: Condition,
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionComparison {
    pub label: String,
    pub tau_parent: f64,
    pub tau_reduced: f64,
    /// `|tau_reduced - tau_parent| / tau_parent`.
    pub tau_deviation: f64,
    /// Max over samples and species of `|X_red - X_parent| / (max_t X_parent + floor)`.
    pub max_concentration_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub progress_species: String,
    pub parent_reactions: usize,
    pub reduced_reactions: usize,
    pub parent_species: usize,
    pub reduced_species: usize,
    pub reaction_reduction_percent: f64,
    pub species_reduction_percent: f64,
    pub conditions: Vec<ConditionComparison>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned columns for the terminal.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "reactions {} -> {} ({:.1}% removed), species {} -> {} ({:.1}% removed)",
            self.parent_reactions,
            self.reduced_reactions,
            self.reaction_reduction_percent,
            self.parent_species,
            self.reduced_species,
            self.species_reduction_percent
        );
        let _ = writeln!(out, "progress species: {}", self.progress_species);
        let width = self
            .conditions
            .iter()
            .map(|c| c.label.len())
            .chain(["condition".len()])
            .max()
            .unwrap_or(0);
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12}  {:>10}  {:>10}",
            "condition", "tau_parent", "tau_reduced", "tau_dev%", "max_dX%"
        );
        for c in &self.conditions {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.6e}  {:>12.6e}  {:>10.4}  {:>10.4}",
                c.label,
                c.tau_parent,
                c.tau_reduced,
                100.0 * c.tau_deviation,
                100.0 * c.max_concentration_deviation
            );
        }
        out
    }
}

pub struct CompareOptions<'a> {
    /// Defaults to [`default_progress_species`] of the parent.
    pub progress_species: Option<&'a str>,
    pub simulation: SimulationOptions,
    pub zero_norm_floor: f64,
    pub jobs: usize,
}

impl Default for CompareOptions<'_> {
    fn default() -> Self {
        Self {
            progress_species: None,
            simulation: SimulationOptions::default(),
            zero_norm_floor: 1e-12,
            jobs: 1,
        }
    }
}

/// Simulates parent and reduced mechanisms under every case and reports how
/// far the reduced results stray. Species the reduced mechanism lacks are
/// taken as constant at their initial value.
pub fn compare(
    parent: &Mechanism,
    reduced: &Mechanism,
    cases: &[ComparisonCase],
    options: &CompareOptions<'_>,
) -> Result<ComparisonReport, ReductionError> {
    let progress = match options.progress_species {
        Some(name) => name,
        None => default_progress_species(parent).ok_or(ReductionError::EmptySelection)?,
    };
    let progress_parent = parent
        .species_index(progress)
        .ok_or_else(|| ReductionError::UnknownSpecies(progress.to_string()))?;
    // parent index of every reduced species
    let to_parent: Vec<usize> = reduced
        .species()
        .iter()
        .map(|s| {
            parent
                .species_index(&s.name)
                .ok_or_else(|| ReductionError::ForeignSpecies(s.name.clone()))
        })
        .collect::<Result<_, _>>()?;

    let run = |case: &ComparisonCase| -> Result<ConditionComparison, ReductionError> {
        let label = &case.condition.label;
        let sim = |m: &Mechanism, x0: &[f64], which| {
            simulate(m, x0, &case.condition, &case.times, &options.simulation)
                .map(|s| s.trajectory)
                .map_err(|source| ReductionError::Simulation {
                    label: label.clone(),
                    which,
                    source,
                })
        };
        let full = sim(parent, &case.x0, "parent")?;
        let x0_red: Vec<f64> = to_parent.iter().map(|&j| case.x0[j]).collect();
        let red = sim(reduced, &x0_red, "reduced")?;

        // parent-order view of the reduced trajectory
        let mut lifted = full.concentrations().clone();
        for j in 0..parent.n_species() {
            lifted.column_mut(j).fill(case.x0[j]);
        }
        for (jr, &j) in to_parent.iter().enumerate() {
            lifted
                .column_mut(j)
                .assign(&red.concentrations().column(jr));
        }

        let tau = |tr: &Trajectory, j: usize, which| {
            characteristic_time(tr, j).map_err(|e| {
                let e = match e {
                    ReductionError::ZeroNetChange { .. } => ReductionError::ZeroNetChange {
                        species: progress.to_string(),
                    },
                    other => other,
                };
                ReductionError::Progress {
                    label: label.clone(),
                    which,
                    source: Box::new(e),
                }
            })
        };
        let tau_parent = tau(&full, progress_parent, "parent")?;
        let tau_reduced = match to_parent.iter().position(|&j| j == progress_parent) {
            Some(jr) => tau(&red, jr, "reduced")?,
            None => {
                return Err(ReductionError::Progress {
                    label: label.clone(),
                    which: "reduced",
                    source: Box::new(ReductionError::ZeroNetChange {
                        species: progress.to_string(),
                    }),
                })
            }
        };

        let xf = full.concentrations();
        let mut max_dev = 0.0f64;
        for j in 0..parent.n_species() {
            let col = xf.column(j);
            let scale = col.iter().fold(0.0f64, |a, &b| a.max(b)) + options.zero_norm_floor;
            for (a, b) in col.iter().zip(lifted.column(j)) {
                max_dev = max_dev.max((b - a).abs() / scale);
            }
        }
        Ok(ConditionComparison {
            label: label.clone(),
            tau_parent,
            tau_reduced,
            tau_deviation: (tau_reduced - tau_parent).abs() / tau_parent,
            max_concentration_deviation: max_dev,
        })
    };

    let results: Vec<Result<ConditionComparison, ReductionError>> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| cases.par_iter().map(run).collect())
    } else {
        cases.iter().map(run).collect()
    };
    let conditions = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let percent = |before: usize, after: usize| 100.0 * (before - after) as f64 / before as f64;
    Ok(ComparisonReport {
        progress_species: progress.to_string(),
        parent_reactions: parent.n_reactions(),
        reduced_reactions: reduced.n_reactions(),
        parent_species: parent.n_species(),
        reduced_species: reduced.n_species(),
        reaction_reduction_percent: percent(parent.n_reactions(), reduced.n_reactions()),
        species_reduction_percent: percent(parent.n_species(), reduced.n_species()),
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::parse_mechanism;
    use ndarray::{array, Array2};

    fn mask(rows: &[&[bool]]) -> SelectionMask {
        let steps = rows[0].len();
        let flat: Vec<bool> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        SelectionMask {
            selected: Array2::from_shape_vec((rows.len(), steps), flat).unwrap(),
            step_starts: (0..steps).map(|k| k as f64).collect(),
        }
    }

    #[test]
    fn union_of_two_masks() {
        let a = mask(&[
            &[false, true],
            &[false, false],
            &[true, false],
            &[false, false],
            &[false, false],
        ]);
        let b = mask(&[
            &[false, false],
            &[false, false],
            &[false, true],
            &[false, false],
            &[true, true],
        ]);
        let set = union_influential(&[("a".into(), a), ("b".into(), b)]).unwrap();
        assert_eq!(set.kept, [0, 2, 4]);
        assert_eq!(
            set.provenance[&2],
            BTreeSet::from(["a".to_string(), "b".to_string()])
        );
        assert_eq!(set.provenance[&4], BTreeSet::from(["b".to_string()]));
    }

    #[test]
    fn all_false_and_shape_errors() {
        let set = union_influential(&[("a".into(), mask(&[&[false], &[false]]))]).unwrap();
        assert!(set.kept.is_empty());
        assert!(matches!(
            union_influential(&[]),
            Err(ReductionError::NoMasks)
        ));
        let r = union_influential(&[
            ("a".into(), mask(&[&[true]])),
            ("b".into(), mask(&[&[true], &[true]])),
        ]);
        assert!(matches!(r, Err(ReductionError::MaskShape { .. })));
    }

    fn chain() -> Mechanism {
        parse_mechanism(
            r#"{"species": ["A","B","C"], "reactions": [
            {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"k": 1}},
            {"reactants": {"B": 1}, "products": {"C": 1}, "rate": {"k": 1}}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn emit_drops_orphans() {
        let m = chain();
        let set = union_influential(&[("c".into(), mask(&[&[true], &[false]]))]).unwrap();
        let red = emit_reduced(&m, &set).unwrap();
        assert_eq!(red.mechanism.n_species(), 2);
        assert_eq!(red.mechanism.n_reactions(), 1);
        let json = red.to_json();
        assert!(json.contains("\"parent_reaction\": 1"), "{json}");

        let all = union_influential(&[("c".into(), mask(&[&[true], &[true]]))]).unwrap();
        let red = emit_reduced(&m, &all).unwrap();
        assert_eq!(red.mechanism.to_json(), m.to_json());

        let none = union_influential(&[("c".into(), mask(&[&[false], &[false]]))]).unwrap();
        assert!(matches!(
            emit_reduced(&m, &none),
            Err(ReductionError::EmptySelection)
        ));
    }

    #[test]
    fn half_life_of_first_order_decay() {
        let m = parse_mechanism(
            r#"{"species": ["A","B"], "reactions": [
            {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"k": 1}}]}"#,
        )
        .unwrap();
        let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
        let tr = simulate(
            &m,
            &[1.0, 0.0],
            &Condition::default(),
            &times,
            &SimulationOptions::default(),
        )
        .unwrap()
        .trajectory;
        let tau = characteristic_time(&tr, 0).unwrap();
        assert!((tau - 2f64.ln()).abs() < 1e-3, "{tau}");
    }

    #[test]
    fn ramp_and_constant() {
        let ramp = Trajectory::new(
            vec![0.0, 0.3, 1.0],
            array![[0.0], [0.3], [1.0]],
            Array2::zeros((3, 0)),
            Condition::default(),
        )
        .unwrap();
        assert!((characteristic_time(&ramp, 0).unwrap() - 0.5).abs() < 1e-12);
        let flat = Trajectory::new(
            vec![0.0, 1.0],
            array![[2.0], [2.0]],
            Array2::zeros((2, 0)),
            Condition::default(),
        )
        .unwrap();
        assert!(matches!(
            characteristic_time(&flat, 0),
            Err(ReductionError::ZeroNetChange { .. })
        ));
    }

    fn case(x0: Vec<f64>, t_end: f64) -> ComparisonCase {
        ComparisonCase {
            condition: Condition::labeled("c1"),
            x0,
            times: (0..=200).map(|i| i as f64 * t_end / 200.0).collect(),
        }
    }

    #[test]
    fn compare_identity_is_zero() {
        let m = chain();
        let r = compare(
            &m,
            &m,
            &[case(vec![1.0, 0.0, 0.0], 5.0)],
            &CompareOptions::default(),
        )
        .unwrap();
        assert_eq!(r.progress_species, "A");
        assert_eq!(r.conditions[0].tau_deviation, 0.0);
        assert_eq!(r.conditions[0].max_concentration_deviation, 0.0);
        assert_eq!(r.reaction_reduction_percent, 0.0);
        assert!(r.to_text().contains("c1"));
    }

    #[test]
    fn fast_slow_pathways() {
        let parent = parse_mechanism(
            r#"{"species": ["A","B"], "reactions": [
            {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"k": 10}},
            {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"k": 0.1}}]}"#,
        )
        .unwrap();
        let reduced = parent.subset(&[0]).unwrap();
        let r = compare(
            &parent,
            &reduced,
            &[case(vec![1.0, 0.0], 2.0)],
            &CompareOptions::default(),
        )
        .unwrap();
        let c = &r.conditions[0];
        // half-lives ln2/10.1 and ln2/10
        assert!(
            (c.tau_reduced / c.tau_parent - 10.1 / 10.0).abs() < 1e-3,
            "{c:?}"
        );
        assert!(c.tau_deviation <= 0.02);
        assert_eq!(r.reaction_reduction_percent, 50.0);
    }

    #[test]
    fn missing_consumption_path_surfaces() {
        let m = chain();
        let reduced = m.subset(&[1]).unwrap();
        let err = compare(
            &m,
            &reduced,
            &[case(vec![1.0, 0.5, 0.0], 5.0)],
            &CompareOptions::default(),
        )
        .unwrap_err();
        match err {
            ReductionError::Progress { source, .. } => {
                assert!(matches!(*source, ReductionError::ZeroNetChange { .. }))
            }
            other => panic!("{other}"),
        }
    }
}
