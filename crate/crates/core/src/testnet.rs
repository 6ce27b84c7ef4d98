//! Seeded random mass-action networks and exact-Euler data for testing.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kinetics::{simulate, Condition, KineticsError, SimulationOptions, Trajectory};
use crate::mechanism::{
    expand_reversible, ConstantRate, Mechanism, MechanismDocument, RateEntry, ReactionEntry,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub n_species: usize,
    pub n_reactions: usize,
    /// Rate constants are log-uniform on this range.
    pub k_min: f64,
    pub k_max: f64,
    /// Number of sampling steps and the nominal time span they cover.
    pub steps: usize,
    pub t_end: f64,
}

impl NetworkShape {
    pub fn new(n_species: usize, n_reactions: usize, steps: usize) -> Self {
        Self {
            n_species,
            n_reactions,
            k_min: 0.1,
            k_max: 10.0,
            steps,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestNetwork {
    pub mechanism: Mechanism,
    pub x0: Vec<f64>,
    /// Exact-Euler trajectory with no clamping.
    pub trajectory: Trajectory,
}

fn side(rng: &mut ChaCha8Rng, names: &[String]) -> BTreeMap<String, i64> {
    let k = if names.len() > 1 && rng.random_bool(0.4) {
        2
    } else {
        1
    };
    sample(rng, names.len(), k)
        .into_iter()
        .map(|j| {
            let coeff = if k == 1 && rng.random_bool(0.2) { 2 } else { 1 };
            (names[j].clone(), coeff)
        })
        .collect()
}

/// Random mechanism over species `S1..Sn` with at most bimolecular steps.
/// Every reaction changes at least one concentration.
pub fn random_mechanism(shape: &NetworkShape, rng: &mut ChaCha8Rng) -> Mechanism {
    assert!(shape.n_species >= 1 && shape.n_reactions >= 1);
    assert!(shape.k_min > 0.0 && shape.k_max >= shape.k_min);
    let names: Vec<String> = (1..=shape.n_species).map(|i| format!("S{i}")).collect();
    let (lo, hi) = (shape.k_min.ln(), shape.k_max.ln());
    let reactions = (0..shape.n_reactions)
        .map(|_| loop {
            let reactants = side(rng, &names);
            let products = side(rng, &names);
            if reactants == products {
                continue;
            }
            let k = if hi > lo {
                rng.random_range(lo..hi).exp()
            } else {
                shape.k_min
            };
            break ReactionEntry {
                reactants,
                products,
                rate: RateEntry::Constant(ConstantRate { k }),
                reversible: false,
                k_rev: None,
                label: None,
            };
        })
        .collect();
    let doc = MechanismDocument {
        species: names,
        reactions,
        provenance: None,
    };
    expand_reversible(&doc).expect("generated mechanism is valid")
}

/// Initial concentrations uniform on `[0.1, 1)`.
pub fn random_state(n_species: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n_species).map(|_| rng.random_range(0.1..1.0)).collect()
}

/// Exact-Euler trajectory of `steps` steps, starting at spacing
/// `t_end / steps` and halving it until no species would be clamped.
pub fn exact_euler_trajectory(
    mechanism: &Mechanism,
    x0: &[f64],
    steps: usize,
    t_end: f64,
    condition: &Condition,
) -> Result<Trajectory, KineticsError> {
    let mut dt = t_end / steps as f64;
    for _ in 0..60 {
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let sim = simulate(
            mechanism,
            x0,
            condition,
            &times,
            &SimulationOptions::exact_euler(),
        )?;
        if sim.clamp_events.is_empty() {
            return Ok(sim.trajectory);
        }
        dt *= 0.5;
    }
    Err(KineticsError::StepUnderflow {
        t_start: 0.0,
        t_end,
        substeps: steps,
    })
}

/// Network, initial state and trajectory, all determined by `seed`.
pub fn generate(shape: &NetworkShape, seed: u64) -> Result<TestNetwork, KineticsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mechanism = random_mechanism(shape, &mut rng);
    let x0 = random_state(shape.n_species, &mut rng);
    let trajectory = exact_euler_trajectory(
        &mechanism,
        &x0,
        shape.steps,
        shape.t_end,
        &Condition::labeled(format!("seed-{seed}")),
    )?;
    Ok(TestNetwork {
        mechanism,
        x0,
        trajectory,
    })
}
