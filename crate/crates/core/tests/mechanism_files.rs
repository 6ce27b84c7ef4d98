use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxnsel::mechanism::{check_element_balance, parse_mechanism, ElementTable};
use rxnsel::testnet::{random_mechanism, NetworkShape};

const H2_STYLE: &str = include_str!("fixtures/h2_style.json");

#[test]
fn h2_style_file_has_8_species_and_62_reactions() {
    let m = parse_mechanism(H2_STYLE).unwrap();
    assert_eq!(m.n_species(), 8);
    assert_eq!(m.n_reactions(), 62);
    // the first reversible entry becomes reactions 1 (forward) and 2 (reverse);
    // generated labels list species in mechanism order
    assert_eq!(m.labels()[0], "O2 + H -> O + OH");
    assert_eq!(m.labels()[1], "O + OH -> O2 + H");
}

#[test]
fn h2_style_file_is_element_balanced() {
    let m = parse_mechanism(H2_STYLE).unwrap();
    let comp = |h: u32, o: u32| {
        let mut c = BTreeMap::new();
        if h > 0 {
            c.insert("H".to_string(), h);
        }
        if o > 0 {
            c.insert("O".to_string(), o);
        }
        c
    };
    let table: ElementTable = [
        ("H2", comp(2, 0)),
        ("O2", comp(0, 2)),
        ("H", comp(1, 0)),
        ("O", comp(0, 1)),
        ("OH", comp(1, 1)),
        ("HO2", comp(1, 2)),
        ("H2O2", comp(2, 2)),
        ("H2O", comp(2, 1)),
    ]
    .into_iter()
    .map(|(s, c)| (s.to_string(), c))
    .collect();
    let issues = check_element_balance(&m, &table);
    assert!(issues.is_empty(), "{issues:?}");
}

#[test]
fn stoich_columns_are_products_minus_reactants() {
    let m = parse_mechanism(H2_STYLE).unwrap();
    let st = m.stoich_matrix();
    let nu = m.order_matrix();
    for (i, r) in m.reactions().iter().enumerate() {
        let mut net = vec![0i32; m.n_species()];
        let mut order = vec![0u32; m.n_species()];
        for &(s, c) in &r.reactants {
            net[s] -= c as i32;
            order[s] += c;
        }
        for &(s, c) in &r.products {
            net[s] += c as i32;
        }
        for j in 0..m.n_species() {
            assert_eq!(st.get(j, i), net[j]);
            assert_eq!(nu.get(i, j), order[j]);
        }
    }
}

proptest! {
    #[test]
    fn parse_serialize_parse_round_trips(seed in any::<u64>(), ns in 1usize..6, nr in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mechanism(&NetworkShape::new(ns, nr, 1), &mut rng);
        let text = m.to_json();
        let back = parse_mechanism(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn reversible_entries_double(flags in proptest::collection::vec(any::<bool>(), 1..8)) {
        let entries: Vec<String> = flags
            .iter()
            .enumerate()
            .map(|(i, &rev)| {
                let tail = if rev { r#", "reversible": true, "k_rev": 0.5"# } else { "" };
                format!(r#"{{"reactants": {{"A": 1}}, "products": {{"B": 1}}, "rate": {{"k": 1}}, "label": "e{i}"{tail}}}"#)
            })
            .collect();
        let text = format!(r#"{{"species": ["A","B"], "reactions": [{}]}}"#, entries.join(","));
        let m = parse_mechanism(&text).unwrap();
        let expected: Vec<String> = flags
            .iter()
            .enumerate()
            .flat_map(|(i, &rev)| {
                let mut v = vec![format!("e{i}")];
                if rev {
                    v.push(format!("e{i} (rev)"));
                }
                v
            })
            .collect();
        prop_assert_eq!(m.labels(), expected);
    }
}
