#![allow(dead_code)]

use std::path::PathBuf;

use accord_core::deptree::{parse_treebank, DepNode, DepTree};
use accord_core::features::{Category, DepRel, Features, Value, ValueSet, Variable};
use accord_core::Lexicon;
use proptest::prelude::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn lexicon() -> Lexicon {
    Lexicon::parse(&fixture("fr.lex")).expect("fixture lexicon parses")
}

pub fn treebank(name: &str) -> Vec<DepTree> {
    parse_treebank(&fixture(name)).expect("fixture treebank parses")
}

/// One sentence of the sample fixture by id.
pub fn sentence(id: &str) -> DepTree {
    treebank("sentences.tsv")
        .into_iter()
        .find(|t| t.sentence_id == id)
        .unwrap_or_else(|| panic!("no sentence {id}"))
}

pub fn cyclistes() -> DepTree {
    treebank("cyclistes.tsv").remove(0)
}

/// Node id of the first word with this surface.
pub fn id_of(tree: &DepTree, surface: &str) -> usize {
    tree.nodes
        .iter()
        .find(|n| n.surface == surface)
        .unwrap_or_else(|| panic!("no word {surface}"))
        .id
}

pub fn ids(tree: &DepTree, surfaces: &[&str]) -> Vec<usize> {
    let mut v: Vec<usize> = surfaces.iter().map(|s| id_of(tree, s)).collect();
    v.sort();
    v
}

pub fn arb_features() -> impl Strategy<Value = Features> {
    let set = |domain: &'static [Value]| {
        proptest::sample::subsequence(domain, 0..=domain.len()).prop_map(|v| v.into_iter().collect::<ValueSet>())
    };
    (
        set(&[Value::Sin, Value::Plu]),
        set(&[Value::Mas, Value::Fem]),
        set(&[Value::First, Value::Second, Value::Third]),
    )
        .prop_map(|(n, g, p)| {
            let mut f = Features::default();
            for (var, s) in [(Variable::Number, n), (Variable::Gender, g), (Variable::Person, p)] {
                if !s.is_empty() {
                    f = f.with(var, &s.into_iter().collect::<Vec<_>>());
                }
            }
            f
        })
}

pub fn arb_category() -> impl Strategy<Value = Category> {
    proptest::sample::select(vec![
        Category::Det,
        Category::Noun,
        Category::Adj,
        Category::Verb,
        Category::Aux,
        Category::PastPart,
        Category::Pron,
        Category::RelPron,
        Category::Prep,
    ])
}

/// Random valid trees: every node but the root hangs from an earlier-built
/// node, so there are no cycles; ids are then shuffled to vary linear order.
pub fn arb_tree() -> impl Strategy<Value = DepTree> {
    (1usize..9)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<prop::sample::Index>(), n),
                Just((1..=n).collect::<Vec<usize>>()).prop_shuffle(),
                proptest::collection::vec((arb_category(), arb_features(), "[a-zé]{1,6}"), n),
                proptest::collection::vec(0usize..11, n),
                "[a-z0-9_]{1,8}",
            )
        })
        .prop_map(|(parents, order, words, rels, sid)| {
            let n = order.len();
            let deprels = [
                DepRel::Det,
                DepRel::Adj,
                DepRel::Subj,
                DepRel::Obj,
                DepRel::RelCl,
                DepRel::Aux,
                DepRel::PPart,
                DepRel::Prep,
                DepRel::PObj,
                DepRel::Attr,
                DepRel::Det,
            ];
            // order[k] is the id of the k-th built node
            let mut heads = vec![0usize; n + 1];
            for k in 1..n {
                heads[order[k]] = order[parents[k].index(k)];
            }
            let nodes = (1..=n)
                .map(|id| {
                    let (category, features, surface) = words[id - 1].clone();
                    DepNode {
                        id,
                        lemma: surface.clone(),
                        surface,
                        category,
                        features,
                        head: heads[id],
                        deprel: if heads[id] == 0 { DepRel::Root } else { deprels[rels[id - 1]] },
                    }
                })
                .collect();
            DepTree::new(sid, nodes).expect("generated tree is valid")
        })
}

/// A generated agreement group with a lexicon that can inflect every member
/// to every value of the variable.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub tree: DepTree,
    pub lexicon: Lexicon,
    pub variable: Variable,
}

fn suffix(v: Value) -> &'static str {
    match v {
        Value::Sin | Value::Mas => "",
        Value::Plu => "s",
        Value::Fem => "e",
        Value::First => "o",
        Value::Second => "es",
        Value::Third => "et",
    }
}

/// `values[i]` is word i's single value; word 0 governs. Number and gender
/// groups are a noun with adjectives, person groups a subject and its verb.
/// `audible[i]` makes word i's inflections differ in sound.
pub fn synthetic(variable: Variable, values: &[Value], audible: &[bool]) -> Synthetic {
    use accord_core::lexicon::LexEntry;
    let n = values.len();
    let other = |v: Value| -> Vec<(Variable, Value)> {
        match variable {
            Variable::Number => vec![(Variable::Number, v), (Variable::Gender, Value::Mas)],
            Variable::Gender => vec![(Variable::Number, Value::Sin), (Variable::Gender, v)],
            Variable::Person => vec![(Variable::Number, Value::Sin), (Variable::Person, v)],
        }
    };
    let feats = |v: Value| {
        let mut f = Features::default();
        for (var, val) in other(v) {
            f = f.with(var, &[val]);
        }
        f
    };
    let (gov_cat, dep_cat, dep_rel) = match variable {
        Variable::Person => (Category::Verb, Category::Pron, DepRel::Subj),
        _ => (Category::Noun, Category::Adj, DepRel::Adj),
    };
    let base = |i: usize| format!("w{}x", (b'a' + i as u8) as char);
    let mut entries = Vec::new();
    let mut nodes = Vec::new();
    for i in 0..n {
        let category = if i == 0 { gov_cat } else { dep_cat };
        for &v in variable.domain() {
            let phon = if audible[i] { format!("{}{}", base(i), suffix(v)) } else { base(i) };
            entries.push(LexEntry {
                surface: format!("{}{}", base(i), suffix(v)),
                lemma: base(i),
                category,
                features: feats(v),
                phon,
            });
        }
        nodes.push(DepNode {
            id: i + 1,
            surface: format!("{}{}", base(i), suffix(values[i])),
            lemma: base(i),
            category,
            features: feats(values[i]),
            head: if i == 0 { 0 } else { 1 },
            deprel: if i == 0 { DepRel::Root } else { dep_rel },
        });
    }
    Synthetic {
        tree: DepTree::new("synthetic", nodes).unwrap(),
        lexicon: Lexicon::from_entries(entries).unwrap(),
        variable,
    }
}

/// Random synthetic groups of 2 to 6 words (person groups have 2).
pub fn arb_synthetic() -> impl Strategy<Value = Synthetic> {
    prop_oneof![Just(Variable::Number), Just(Variable::Gender), Just(Variable::Person)]
        .prop_flat_map(|variable| {
            let size = if variable == Variable::Person { 2usize..=2 } else { 2usize..=6 };
            size.prop_flat_map(move |n| {
                (
                    Just(variable),
                    proptest::collection::vec(proptest::sample::select(variable.domain().to_vec()), n),
                    proptest::collection::vec(any::<bool>(), n),
                )
            })
        })
        .prop_map(|(variable, values, audible)| synthetic(variable, &values, &audible))
}

pub fn singleton_set(v: Value) -> ValueSet {
    ValueSet::from([v])
}
