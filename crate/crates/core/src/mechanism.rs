//! Reaction mechanisms and the matrices derived from them.
//!
//! Mechanisms are read from a small JSON document:
//!
//! ```json
//! {
//!   "species": ["H2", "O2", "H2O"],
//!   "reactions": [
//!     { "reactants": {"H2": 2, "O2": 1}, "products": {"H2O": 2},
//!       "rate": {"k": 1.5}, "reversible": true, "k_rev": 0.01 }
//!   ]
//! }
//! ```
//!
//! Reversible entries are expanded into a forward/reverse pair of
//! irreversible reactions, in file order. After expansion every reaction is
//! irreversible and its position is the canonical reaction index.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Molar gas constant in J/(mol K). Arrhenius activation energies are in J/mol.
pub const GAS_CONSTANT: f64 = 8.314_462_618;

#[derive(Debug, Error)]
pub enum MechanismError {
    #[error("malformed mechanism JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("species[{index}]: empty species name")]
    EmptySpeciesName { index: usize },
    #[error("species[{index}]: duplicate species name {name:?}")]
    DuplicateSpecies { index: usize, name: String },
    #[error("reactions[{reaction}].{field}: unknown species {name:?}")]
    UnknownSpecies {
        reaction: usize,
        field: &'static str,
        name: String,
    },
    #[error("reactions[{reaction}].{field}: coefficient of {species:?} must be a positive integer, got {value}")]
    NonPositiveCoefficient {
        reaction: usize,
        field: &'static str,
        species: String,
        value: i64,
    },
    #[error("reactions[{reaction}].{field}: at least one species required")]
    EmptySide {
        reaction: usize,
        field: &'static str,
    },
    #[error(
        "reactions[{reaction}].{field}: rate parameter must be finite and nonnegative, got {value}"
    )]
    InvalidRate {
        reaction: usize,
        field: &'static str,
        value: f64,
    },
    #[error("reactions[{reaction}]: reversible reaction is missing \"k_rev\"")]
    MissingReverseRate { reaction: usize },
    #[error("reactions[{reaction}]: \"k_rev\" given for an irreversible reaction")]
    UnexpectedReverseRate { reaction: usize },
    #[error("reactions[{reaction}]: reaction does not change any species")]
    NoNetChange { reaction: usize },
}

impl From<serde_json::Error> for MechanismError {
    fn from(e: serde_json::Error) -> Self {
        MechanismError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Species {
    pub name: String,
}

impl Species {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into() }
    }
}

/// Rate constant of an irreversible reaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateLaw {
    Constant(f64),
    /// `k(T) = A T^b exp(-Ea / (R T))`, with `Ea` in J/mol.
    Arrhenius {
        a: f64,
        b: f64,
        ea: f64,
    },
}

impl RateLaw {
    pub fn needs_temperature(&self) -> bool {
        matches!(self, RateLaw::Arrhenius { .. })
    }

    /// Evaluates the rate constant. Returns `None` when the law needs a
    /// temperature and none was supplied.
    pub fn evaluate(&self, temperature: Option<f64>) -> Option<f64> {
        match *self {
            RateLaw::Constant(k) => Some(k),
            RateLaw::Arrhenius { a, b, ea } => {
                let t = temperature?;
                Some(a * t.powf(b) * (-ea / (GAS_CONSTANT * t)).exp())
            }
        }
    }
}

/// An irreversible reaction. Species are referenced by their index in the
/// owning mechanism; both sides are sorted by species index.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate: RateLaw,
    pub label: String,
}

impl Reaction {
    pub fn reactant_coefficient(&self, species: usize) -> u32 {
        coefficient(&self.reactants, species)
    }

    pub fn product_coefficient(&self, species: usize) -> u32 {
        coefficient(&self.products, species)
    }

    /// Net change of `species` per unit extent of this reaction.
    pub fn net_change(&self, species: usize) -> i32 {
        self.product_coefficient(species) as i32 - self.reactant_coefficient(species) as i32
    }
}

fn coefficient(side: &[(usize, u32)], species: usize) -> u32 {
    side.iter()
        .find(|(s, _)| *s == species)
        .map(|(_, c)| *c)
        .unwrap_or(0)
}

/// A validated set of species and irreversible reactions. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

impl Mechanism {
    /// Builds a mechanism, checking species uniqueness, species references,
    /// coefficients, rate parameters, and that every reaction changes
    /// something.
    pub fn new(species: Vec<Species>, reactions: Vec<Reaction>) -> Result<Self, MechanismError> {
        let mut seen = HashMap::new();
        for (index, sp) in species.iter().enumerate() {
            if sp.name.is_empty() {
                return Err(MechanismError::EmptySpeciesName { index });
            }
            if seen.insert(sp.name.as_str(), index).is_some() {
                return Err(MechanismError::DuplicateSpecies {
                    index,
                    name: sp.name.clone(),
                });
            }
        }
        for (ri, rxn) in reactions.iter().enumerate() {
            for (field, side) in [("reactants", &rxn.reactants), ("products", &rxn.products)] {
                if side.is_empty() {
                    return Err(MechanismError::EmptySide {
                        reaction: ri,
                        field,
                    });
                }
                for &(s, c) in side {
                    if s >= species.len() {
                        return Err(MechanismError::UnknownSpecies {
                            reaction: ri,
                            field,
                            name: format!("#{s}"),
                        });
                    }
                    if c == 0 {
                        return Err(MechanismError::NonPositiveCoefficient {
                            reaction: ri,
                            field,
                            species: species[s].name.clone(),
                            value: 0,
                        });
                    }
                }
            }
            check_rate(ri, &rxn.rate)?;
            if (0..species.len()).all(|s| rxn.net_change(s) == 0) {
                return Err(MechanismError::NoNetChange { reaction: ri });
            }
        }
        Ok(Self { species, reactions })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.reactions.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn needs_temperature(&self) -> bool {
        self.reactions.iter().any(|r| r.rate.needs_temperature())
    }

    pub fn stoich_matrix(&self) -> StoichMatrix {
        let mut m = Array2::zeros((self.n_species(), self.n_reactions()));
        for (i, rxn) in self.reactions.iter().enumerate() {
            for &(s, c) in &rxn.reactants {
                m[[s, i]] -= c as i32;
            }
            for &(s, c) in &rxn.products {
                m[[s, i]] += c as i32;
            }
        }
        StoichMatrix(m)
    }

    pub fn order_matrix(&self) -> OrderMatrix {
        let mut nu = Array2::zeros((self.n_reactions(), self.n_species()));
        for (i, rxn) in self.reactions.iter().enumerate() {
            for &(s, c) in &rxn.reactants {
                nu[[i, s]] = c;
            }
        }
        OrderMatrix(nu)
    }

    /// Restricts the mechanism to the given reactions (in the given order),
    /// dropping species no kept reaction references.
    pub fn subset(&self, reactions: &[usize]) -> Result<Mechanism, MechanismError> {
        let mut used = vec![false; self.n_species()];
        for &i in reactions {
            let rxn = &self.reactions[i];
            for &(s, _) in rxn.reactants.iter().chain(&rxn.products) {
                used[s] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.n_species()];
        let mut species = Vec::new();
        for (s, sp) in self.species.iter().enumerate() {
            if used[s] {
                remap[s] = species.len();
                species.push(sp.clone());
            }
        }
        let remap_side = |side: &[(usize, u32)]| -> Vec<(usize, u32)> {
            side.iter().map(|&(s, c)| (remap[s], c)).collect()
        };
        let kept = reactions
            .iter()
            .map(|&i| {
                let rxn = &self.reactions[i];
                Reaction {
                    reactants: remap_side(&rxn.reactants),
                    products: remap_side(&rxn.products),
                    rate: rxn.rate,
                    label: rxn.label.clone(),
                }
            })
            .collect();
        Mechanism::new(species, kept)
    }

    pub fn to_document(&self) -> MechanismDocument {
        let side = |s: &[(usize, u32)]| -> BTreeMap<String, i64> {
            s.iter()
                .map(|&(j, c)| (self.species[j].name.clone(), c as i64))
                .collect()
        };
        MechanismDocument {
            species: self.species.iter().map(|s| s.name.clone()).collect(),
            reactions: self
                .reactions
                .iter()
                .map(|r| ReactionEntry {
                    reactants: side(&r.reactants),
                    products: side(&r.products),
                    rate: match r.rate {
                        RateLaw::Constant(k) => RateEntry::Constant(ConstantRate { k }),
                        RateLaw::Arrhenius { a, b, ea } => {
                            RateEntry::Arrhenius(ArrheniusRate { a, b, ea })
                        }
                    },
                    reversible: false,
                    k_rev: None,
                    label: Some(r.label.clone()),
                })
                .collect(),
            provenance: None,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json()
    }
}

fn check_rate(reaction: usize, rate: &RateLaw) -> Result<(), MechanismError> {
    let bad = |field, value| MechanismError::InvalidRate {
        reaction,
        field,
        value,
    };
    match *rate {
        RateLaw::Constant(k) => {
            if !(k.is_finite() && k >= 0.0) {
                return Err(bad("rate.k", k));
            }
        }
        RateLaw::Arrhenius { a, b, ea } => {
            if !(a.is_finite() && a >= 0.0) {
                return Err(bad("rate.A", a));
            }
            if !b.is_finite() {
                return Err(bad("rate.b", b));
            }
            if !ea.is_finite() {
                return Err(bad("rate.Ea", ea));
            }
        }
    }
    Ok(())
}

/// Net stoichiometric matrix, species x reactions.
#[derive(Debug, Clone, PartialEq)]
pub struct StoichMatrix(Array2<i32>);

impl StoichMatrix {
    pub fn entries(&self) -> &Array2<i32> {
        &self.0
    }

    pub fn get(&self, species: usize, reaction: usize) -> i32 {
        self.0[[species, reaction]]
    }

    pub fn n_species(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_reactions(&self) -> usize {
        self.0.ncols()
    }
}

/// Reactant orders, reactions x species.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderMatrix(Array2<u32>);

impl OrderMatrix {
    pub fn entries(&self) -> &Array2<u32> {
        &self.0
    }

    pub fn get(&self, reaction: usize, species: usize) -> u32 {
        self.0[[reaction, species]]
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismDocument {
    pub species: Vec<String>,
    pub reactions: Vec<ReactionEntry>,
    /// Written for reduced mechanisms: which parent reaction each entry came
    /// from and which conditions selected it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Vec<ProvenanceEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionEntry {
    pub reactants: BTreeMap<String, i64>,
    pub products: BTreeMap<String, i64>,
    pub rate: RateEntry,
    #[serde(default, skip_serializing_if = "is_false")]
    pub reversible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_rev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateEntry {
    Constant(ConstantRate),
    Arrhenius(ArrheniusRate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantRate {
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrheniusRate {
    #[serde(rename = "A")]
    pub a: f64,
    pub b: f64,
    #[serde(rename = "Ea")]
    pub ea: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceEntry {
    /// 1-based reaction number in this (reduced) mechanism.
    pub reaction: usize,
    /// 1-based reaction number in the parent mechanism.
    pub parent_reaction: usize,
    pub conditions: Vec<String>,
}

impl MechanismDocument {
    pub fn from_json(text: &str) -> Result<Self, MechanismError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("mechanism serializes");
        s.push('\n');
        s
    }
}

/// Parses, validates and expands a mechanism file.
pub fn parse_mechanism(text: &str) -> Result<Mechanism, MechanismError> {
    expand_reversible(&MechanismDocument::from_json(text)?)
}

/// Resolves a document into a mechanism of irreversible reactions. Each
/// reversible entry becomes two consecutive reactions: forward, then reverse.
pub fn expand_reversible(doc: &MechanismDocument) -> Result<Mechanism, MechanismError> {
    let species: Vec<Species> = doc.species.iter().map(Species::new).collect();
    let index: HashMap<&str, usize> = doc
        .species
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .rev()
        .collect();

    let mut reactions = Vec::with_capacity(doc.reactions.len());
    for (ri, entry) in doc.reactions.iter().enumerate() {
        let reactants = resolve_side(ri, "reactants", &entry.reactants, &index)?;
        let products = resolve_side(ri, "products", &entry.products, &index)?;
        let rate = match entry.rate {
            RateEntry::Constant(ConstantRate { k }) => RateLaw::Constant(k),
            RateEntry::Arrhenius(ArrheniusRate { a, b, ea }) => RateLaw::Arrhenius { a, b, ea },
        };
        check_rate(ri, &rate)?;
        let label = entry
            .label
            .clone()
            .unwrap_or_else(|| format_equation(&doc.species, &reactants, &products));

        match (entry.reversible, entry.k_rev) {
            (false, Some(_)) => return Err(MechanismError::UnexpectedReverseRate { reaction: ri }),
            (true, None) => return Err(MechanismError::MissingReverseRate { reaction: ri }),
            (true, Some(k_rev)) => {
                check_rate(ri, &RateLaw::Constant(k_rev)).map_err(|_| {
                    MechanismError::InvalidRate {
                        reaction: ri,
                        field: "k_rev",
                        value: k_rev,
                    }
                })?;
                let reverse_label = match &entry.label {
                    Some(l) => format!("{l} (rev)"),
                    None => format_equation(&doc.species, &products, &reactants),
                };
                reactions.push(Reaction {
                    reactants: reactants.clone(),
                    products: products.clone(),
                    rate,
                    label,
                });
                reactions.push(Reaction {
                    reactants: products,
                    products: reactants,
                    rate: RateLaw::Constant(k_rev),
                    label: reverse_label,
                });
            }
            (false, None) => reactions.push(Reaction {
                reactants,
                products,
                rate,
                label,
            }),
        }
    }

    // Validation errors after expansion refer to expanded positions; map
    // them back to file entries for the messages.
    let file_index: Vec<usize> = doc
        .reactions
        .iter()
        .enumerate()
        .flat_map(|(i, e)| std::iter::repeat_n(i, if e.reversible { 2 } else { 1 }))
        .collect();
    Mechanism::new(species, reactions).map_err(|e| match e {
        MechanismError::NoNetChange { reaction } => MechanismError::NoNetChange {
            reaction: file_index[reaction],
        },
        other => other,
    })
}

fn resolve_side(
    reaction: usize,
    field: &'static str,
    side: &BTreeMap<String, i64>,
    index: &HashMap<&str, usize>,
) -> Result<Vec<(usize, u32)>, MechanismError> {
    if side.is_empty() {
        return Err(MechanismError::EmptySide { reaction, field });
    }
    let mut out = Vec::with_capacity(side.len());
    for (name, &value) in side {
        let &s = index
            .get(name.as_str())
            .ok_or_else(|| MechanismError::UnknownSpecies {
                reaction,
                field,
                name: name.clone(),
            })?;
        if value < 1 || value > u32::MAX as i64 {
            return Err(MechanismError::NonPositiveCoefficient {
                reaction,
                field,
                species: name.clone(),
                value,
            });
        }
        out.push((s, value as u32));
    }
    out.sort_unstable();
    Ok(out)
}

/// Human-readable equation such as `2H2 + O2 -> 2H2O`.
pub fn format_equation(
    names: &[String],
    reactants: &[(usize, u32)],
    products: &[(usize, u32)],
) -> String {
    let side = |s: &[(usize, u32)]| {
        let mut out = String::new();
        for (n, &(j, c)) in s.iter().enumerate() {
            if n > 0 {
                out.push_str(" + ");
            }
            if c > 1 {
                let _ = write!(out, "{c}");
            }
            out.push_str(&names[j]);
        }
        out
    };
    format!("{} -> {}", side(reactants), side(products))
}

// ---------------------------------------------------------------------------
// Optional element balance

/// Element counts per species, e.g. `{"H2O": {"H": 2, "O": 1}}`.
pub type ElementTable = BTreeMap<String, BTreeMap<String, u32>>;

#[derive(Debug, Clone, PartialEq)]
pub enum BalanceIssue {
    MissingComposition {
        species: String,
    },
    Imbalanced {
        reaction: usize,
        label: String,
        element: String,
        net: i64,
    },
}

impl std::fmt::Display for BalanceIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BalanceIssue::MissingComposition { species } => {
                write!(f, "no element composition for species {species:?}")
            }
            BalanceIssue::Imbalanced {
                reaction,
                label,
                element,
                net,
            } => write!(
                f,
                "reaction {} ({label}): element {element} changes by {net}",
                reaction + 1
            ),
        }
    }
}

/// Reports reactions whose element counts differ between the two sides.
pub fn check_element_balance(mechanism: &Mechanism, table: &ElementTable) -> Vec<BalanceIssue> {
    let mut issues = Vec::new();
    for sp in mechanism.species() {
        if !table.contains_key(&sp.name) {
            issues.push(BalanceIssue::MissingComposition {
                species: sp.name.clone(),
            });
        }
    }
    for (i, rxn) in mechanism.reactions().iter().enumerate() {
        let mut net: BTreeMap<&str, i64> = BTreeMap::new();
        for (sign, side) in [(-1i64, &rxn.reactants), (1, &rxn.products)] {
            for &(s, c) in side {
                if let Some(comp) = table.get(&mechanism.species()[s].name) {
                    for (el, n) in comp {
                        *net.entry(el.as_str()).or_default() += sign * c as i64 * *n as i64;
                    }
                }
            }
        }
        for (el, n) in net {
            if n != 0 {
                issues.push(BalanceIssue::Imbalanced {
                    reaction: i,
                    label: rxn.label.clone(),
                    element: el.to_string(),
                    net: n,
                });
            }
        }
    }
    issues
}
