//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::fmt::Display;

use accord_core::agreement::{check_group, failing_pairs, rule_instances};
use accord_core::corrector::{
    aggregate, candidates, correct_tree, diagnose, rank_forest, AutoPolicy, CorrectionRun, Evaluation, Progress,
    Resolution,
};
use accord_core::deptree::{parse_treebank, serialize_treebank};
use accord_core::heuristics::{argmax_by, confidence_vectors, standalone_verdicts, ConfidenceVector};
use accord_core::lexicon::Lexicon;
use accord_core::partition::partition;
use accord_core::profile::{default_profile, Criterion, Profile, Strategy as Aggregation};
use accord_core::{Value, Variable};
use itertools::Itertools;
use num_rational::Ratio;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use common::*;

type Q = Ratio<i64>;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn as_f64(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact equality up to float noise.
fn exact(x: f64, r: Q) -> bool {
    (x - as_f64(r)).abs() < 1e-9
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn report(name: &str, outcome: Result<impl Display, String>) -> bool {
    match outcome {
        Ok(detail) => {
            println!("PASS {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL {name}: {why}");
            false
        }
    }
}

fn vector(vectors: &[ConfidenceVector], v: Value) -> &ConfidenceVector {
    vectors.iter().find(|c| c.value == v).unwrap()
}

/// Compares 8 cells laid out as (a_sin, a_plu, b_sin, b_plu, ...).
fn compare_cells(label: &str, vectors: &[ConfidenceVector], cells: [Q; 8]) -> Result<(), String> {
    for c in Criterion::ALL {
        for (j, value) in [Value::Sin, Value::Plu].into_iter().enumerate() {
            let got = vector(vectors, value).scores.get(c);
            let want = cells[2 * c.index() + j];
            ensure!(exact(got, want), "{label} {c:?}_{value}: got {got:.4}, expected {want}");
        }
    }
    Ok(())
}

fn cyclistes_evaluation() -> Evaluation {
    diagnose(&cyclistes(), &lexicon(), &default_profile()).unwrap().evaluations.remove(0)
}

/// Vectors of the three sub-groups of the number error, in reading order.
fn cyclistes_subgroups() -> Vec<Vec<ConfidenceVector>> {
    let t = cyclistes();
    let e = cyclistes_evaluation();
    [&["les", "jeunes", "cycliste"][..], &["cycliste", "rencontré"], &["cycliste", "montaient"]]
        .iter()
        .map(|words| {
            let members = ids(&t, words);
            let i = e.subgroups.iter().position(|g| g.members == members).expect("sub-group present");
            e.subgroup_vectors[i].clone()
        })
        .collect()
}

fn whole_group_scores() -> bool {
    report(
        "whole-group scores",
        (|| {
            let e = diagnose(&sentence("calcul"), &lexicon(), &default_profile()).unwrap().evaluations.remove(0);
            let v = &e.whole_vectors;
            compare_cells("calcul", v, [q(3, 1), q(4, 3), q(1, 1), q(2, 1), q(0, 1), q(2, 1), q(1, 1), q(0, 1)])?;
            let (sin, plu) = (vector(v, Value::Sin), vector(v, Value::Plu));
            ensure!(exact(sin.sum, q(5, 1)), "sum sin {}", sin.sum);
            ensure!(exact(plu.sum, q(16, 3)), "sum plu {}", plu.sum);
            ensure!((sin.percentage - 48.4).abs() <= 0.05, "sin {:.2}%", sin.percentage);
            ensure!((plu.percentage - 51.6).abs() <= 0.05, "plu {:.2}%", plu.percentage);
            Ok(format!("5 vs 16/3, {:.1}% / {:.1}%", sin.percentage, plu.percentage))
        })(),
    )
}

fn subgroup_scores() -> bool {
    report(
        "sub-group scores",
        (|| {
            let subs = cyclistes_subgroups();
            let expected = [
                [q(4, 3), q(3, 1), q(1, 1), q(2, 1), q(0, 1), q(2, 1), q(1, 1), q(0, 1)],
                [q(6, 1), q(2, 3), q(2, 1), q(2, 1), q(0, 1), q(2, 1), q(1, 1), q(0, 1)],
                [q(2, 1), q(2, 1), q(2, 1), q(2, 1), q(0, 1), q(2, 1), q(0, 1), q(1, 1)],
            ];
            for (i, (vectors, cells)) in subs.iter().zip(expected).enumerate() {
                compare_cells(&format!("({})", i + 1), vectors, cells)?;
            }
            Ok("24 cells")
        })(),
    )
}

fn subgroup_sums() -> bool {
    report(
        "sub-group sums",
        (|| {
            let subs = cyclistes_subgroups();
            let rounded = [(3.33, 7.0), (9.0, 4.66), (4.0, 6.0)];
            let exact_sums = [(q(10, 3), q(7, 1)), (q(9, 1), q(14, 3)), (q(4, 1), q(6, 1))];
            for (i, vectors) in subs.iter().enumerate() {
                let (sin, plu) = (vector(vectors, Value::Sin).sum, vector(vectors, Value::Plu).sum);
                let (rs, rp) = rounded[i];
                let (es, ep) = exact_sums[i];
                ensure!((sin - rs).abs() <= 0.01, "({}) sin sum {sin:.2}, expected {rs}", i + 1);
                ensure!((plu - rp).abs() <= 0.01, "({}) plu sum {plu:.2}, expected {rp}", i + 1);
                ensure!(exact(sin, es), "({}) sin sum {sin:.4} is not {es}", i + 1);
                ensure!(exact(plu, ep), "({}) plu sum {plu:.4} is not {ep}", i + 1);
            }
            Ok("sums 10/3, 7, 9, 14/3, 4, 6")
        })(),
    )
}

fn totals(strategy: Aggregation) -> (f64, f64) {
    let r = aggregate(&cyclistes_evaluation().subgroup_vectors, strategy);
    (r.totals[&Value::Plu], r.totals[&Value::Sin])
}

fn aggregation_outcomes() -> bool {
    report(
        "aggregation outcomes",
        (|| {
            let (plu, sin) = totals(Aggregation::Simple);
            let simple = plu == 2.0 && sin == 1.0;
            let (pp, ps) = totals(Aggregation::Proportional);
            let proportional = (pp - 17.66).abs() <= 0.01 && (ps - 16.33).abs() <= 0.01;
            let (wp, ws) = totals(Aggregation::WeightedProportional);
            let weighted = (wp - 161.9).abs() <= 0.1 && (ws - 138.1).abs() <= 0.1;
            let detail = format!(
                "simple {plu}-{sin} (expected 2-1), proportional {pp:.2} vs {ps:.2} (expected 17.66 vs 16.33), \
                 weighted {wp:.1} vs {ws:.1} (expected 161.9 vs 138.1)"
            );
            ensure!(simple && proportional && weighted, "{detail}");
            Ok(detail)
        })(),
    )
}

fn end_to_end() -> bool {
    report(
        "end-to-end auto correction",
        (|| {
            let mut profile = default_profile();
            let r = correct_tree(&cyclistes(), &lexicon(), &mut profile, &mut AutoPolicy).map_err(|e| e.to_string())?;
            let want = "les jeunes cyclistes que j'ai rencontrés montaient à bonne allure";
            ensure!(r.converged, "did not converge");
            ensure!(r.passes <= 3, "{} passes", r.passes);
            ensure!(r.final_tree.text() == want, "got `{}`", r.final_tree.text());
            let t = cyclistes();
            let rencontre = id_of(&t, "rencontré");
            ensure!(
                r.steps.iter().any(|s| s.variable == Variable::Number && s.corrected.contains(&rencontre)),
                "rencontré not fixed by the number step"
            );
            let bon = id_of(&t, "bon");
            let forced = r.steps.iter().find(|s| s.corrected.contains(&bon)).ok_or("bon never corrected")?;
            ensure!(forced.evaluation.candidates.len() == 1, "bon had {} candidates", forced.evaluation.candidates.len());
            ensure!(forced.resolution == Resolution::Automatic, "bon fix was {:?}", forced.resolution);
            Ok(format!("{} passes", r.passes))
        })(),
    )
}

/// One word of a hand-described group: its current values and, for the
/// other value, whether the change is heard and whether the new surface
/// strictly extends the old one.
struct Word {
    values: &'static [Value],
    audible: bool,
    extends: bool,
}

/// Standalone argmax of each criterion, from the scoring formulas over the
/// hand description. `governor` indexes `words`.
fn standalone_oracle(words: &[Word], governor: usize, domain: [Value; 2]) -> [Option<Value>; 4] {
    let k = [q(2, 1), q(2, 1), q(2, 1), q(1, 1)];
    let score = |value: Value| -> [Q; 4] {
        let kept = words.iter().filter(|w| w.values.contains(&value)).count() as i64;
        let changed: Vec<&Word> = words.iter().filter(|w| !w.values.contains(&value)).collect();
        let corrected = changed.len() as i64;
        let alterations = changed.iter().filter(|w| w.audible).count() as i64;
        let extends = !changed.is_empty() && changed.iter().all(|w| w.extends);
        let g = words[governor].values;
        [
            k[0] * q(1 + kept, 1) / q(1 + corrected, 1),
            k[1] / q(1 + alterations, 1),
            if extends { k[2] } else { q(0, 1) },
            if g.len() == 1 && g[0] == value { k[3] } else { q(0, 1) },
        ]
    };
    let scored = domain.map(score);
    let mut out = [None; 4];
    for c in 0..4 {
        out[c] = match scored[0][c].cmp(&scored[1][c]) {
            std::cmp::Ordering::Greater => Some(domain[0]),
            std::cmp::Ordering::Less => Some(domain[1]),
            std::cmp::Ordering::Equal => None,
        };
    }
    out
}

fn whole_group_standalone(id: &str) -> [Option<Value>; 4] {
    let e = diagnose(&sentence(id), &lexicon(), &default_profile()).unwrap().evaluations.remove(0);
    standalone_verdicts(&[e.whole_vectors])
}

fn direction_checks() -> bool {
    use Value::*;
    report(
        "direction checks",
        (|| {
            let lex = lexicon();
            // le vélos est
            let velos = [
                Word { values: &[Sin], audible: true, extends: true },
                Word { values: &[Plu], audible: false, extends: false },
                Word { values: &[Sin], audible: true, extends: false },
            ];
            let oracle = standalone_oracle(&velos, 2, [Sin, Plu]);
            let got = whole_group_standalone("velos");
            ensure!(got == oracle, "velos standalone {got:?}, oracle {oracle:?}");
            ensure!(oracle[0] == Some(Sin), "velos criterion (a) picks {:?}", oracle[0]);
            let mut profile = default_profile();
            let r = correct_tree(&sentence("velos"), &lex, &mut profile, &mut AutoPolicy).map_err(|e| e.to_string())?;
            let changed: usize = r.steps.iter().map(|s| s.corrected.len()).sum();
            ensure!(r.final_tree.text() == "le vélo est redevenu à la mode", "velos gave `{}`", r.final_tree.text());
            ensure!(changed == 1, "velos changed {changed} words");

            // les chiens dressées
            let chiens = [
                Word { values: &[Mas, Fem], audible: false, extends: false },
                Word { values: &[Mas], audible: true, extends: false },
                Word { values: &[Fem], audible: false, extends: false },
            ];
            let oracle = standalone_oracle(&chiens, 1, [Mas, Fem]);
            let got = whole_group_standalone("chiens");
            ensure!(got == oracle, "chiens standalone {got:?}, oracle {oracle:?}");
            let mut profile = default_profile();
            let r = correct_tree(&sentence("chiens"), &lex, &mut profile, &mut AutoPolicy).map_err(|e| e.to_string())?;
            ensure!(r.steps.iter().all(|s| s.applied == Mas), "chiens not masculine");
            ensure!(r.final_tree.text() == "les chiens dressés", "chiens gave `{}`", r.final_tree.text());

            // les enfant
            let enfant = [
                Word { values: &[Plu], audible: true, extends: false },
                Word { values: &[Sin], audible: false, extends: true },
            ];
            let oracle = standalone_oracle(&enfant, 1, [Sin, Plu]);
            let got = whole_group_standalone("enfant");
            ensure!(got == oracle, "enfant standalone {got:?}, oracle {oracle:?}");
            ensure!(got[Criterion::C.index()] == Some(Plu), "enfant criterion (c) picks {:?}", got[2]);
            Ok("velos → singular, chiens → masculine, enfant (c) → plural")
        })(),
    )
}

fn adaptation() -> bool {
    report(
        "adaptation",
        (|| {
            let lex = lexicon();
            let mut profile = default_profile();
            let mut run = CorrectionRun::new(sentence("calcul"));
            let Progress::Question(question) = run.advance(&lex, &profile).map_err(|e| e.to_string())? else {
                return Err("calcul asked nothing".into());
            };
            let update = run
                .answer(&question.id, Value::Sin, true, &mut profile)
                .map_err(|e| e.to_string())?
                .ok_or("no weight update")?;
            for (c, up) in [(Criterion::A, true), (Criterion::D, true), (Criterion::B, false), (Criterion::C, false)] {
                let d = update.delta(c);
                ensure!(if up { d > 0.0 } else { d < 0.0 }, "K_{c:?} moved by {d}");
            }
            ensure!(update.threshold_before - update.threshold_after == profile.delta, "T moved by something else");

            // 18 answers from defaults; questions are raised with a high
            // threshold so that every round asks
            let mut profile = default_profile();
            for i in 0..18 {
                let ask = Profile { threshold: 100.0, ..profile.clone() };
                let mut run = CorrectionRun::new(cyclistes());
                let Progress::Question(q) = run.advance(&lex, &ask).map_err(|e| e.to_string())? else {
                    return Err("cyclistes asked nothing".into());
                };
                let before = profile.threshold;
                run.answer(&q.id, q.options[i % 2].value, true, &mut profile).map_err(|e| e.to_string())?;
                ensure!(profile.threshold == (before - profile.delta).max(profile.threshold_floor), "T decay");
                ensure!(profile.threshold >= profile.threshold_floor, "T below floor");
            }
            ensure!(profile.threshold == 0.5, "T = {} after 18 answers", profile.threshold);
            ensure!(profile.update_count == 18, "{} updates", profile.update_count);
            Ok("K_a, K_d up; K_b, K_c down; T pinned at 0.5")
        })(),
    )
}

/// Same check as the grouping module, written against word values only.
fn pairwise_inconsistent(s: &Synthetic) -> bool {
    let inst = rule_instances(&s.tree);
    let group = partition(&s.tree, &inst, s.variable).remove(0);
    !failing_pairs(&s.tree, group.governor, &group.members.iter().copied().collect(), s.variable).is_empty()
}

fn fewest_edits(values: &[Value], domain: &[Value]) -> Vec<Value> {
    let mut best = usize::MAX;
    let mut winners = Vec::new();
    for &v in domain {
        let edits = values.iter().filter(|&&x| x != v).count();
        if edits < best {
            best = edits;
            winners = vec![v];
        } else if edits == best {
            winners.push(v);
        }
    }
    winners
}

fn oracle_equivalence() -> bool {
    report(
        "oracle equivalence",
        (|| {
            let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
            let profile = default_profile();
            runner
                .run(&arb_synthetic(), |s| {
                    let inst = rule_instances(&s.tree);
                    let group = partition(&s.tree, &inst, s.variable).remove(0);
                    let by_group =
                        !check_group(&s.tree, group.members.clone(), s.variable).unwrap().is_consistent();
                    if by_group != pairwise_inconsistent(&s) {
                        return Err(TestCaseError::fail("group check and pairwise checker disagree"));
                    }
                    let values: Vec<Value> = s
                        .tree
                        .nodes
                        .iter()
                        .map(|n| *n.features.get(s.variable).unwrap().iter().next().unwrap())
                        .collect();
                    let cands = candidates(&s.tree, &group, &s.lexicon).unwrap();
                    let vectors = confidence_vectors(&s.tree, &group, &cands, &profile.weights);
                    let by_a = argmax_by(vectors.iter().map(|v| (v.value, v.scores.a)));
                    let brute = fewest_edits(&values, s.variable.domain());
                    if brute.len() == 1 && by_a != Some(brute[0]) {
                        return Err(TestCaseError::fail(format!("(a) picks {by_a:?}, fewest edits {brute:?}")));
                    }
                    Ok(())
                })
                .map_err(|e| e.to_string())?;
            Ok("1000 random groups")
        })(),
    )
}

fn forest_ranking() -> bool {
    report(
        "forest ranking",
        (|| {
            let lex = lexicon();
            let profile = default_profile();
            for (file, best) in [("forest_vue.tsv", "vue_house"), ("forest_vu.tsv", "vu_uncle")] {
                let ranked = rank_forest(&treebank(file), &lex, &profile).map_err(|e| e.to_string())?;
                let order = ranked.iter().map(|e| e.tree.sentence_id.as_str()).join(", ");
                ensure!(ranked[0].tree.sentence_id == best, "{file}: order {order}");
                ensure!(ranked[0].errors < ranked[1].errors, "{file}: no error gap ({order})");
            }
            Ok("vue → house reading, vu → uncle reading")
        })(),
    )
}

fn normalized(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#') || l.starts_with("# sent_id"))
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .join("\n")
}

fn format_round_trips() -> bool {
    report(
        "format round-trips",
        (|| {
            for name in ["cyclistes.tsv", "sentences.tsv", "forest_vue.tsv", "forest_vu.tsv", "correct.tsv", "petits_enfant.tsv"] {
                let text = fixture(name);
                let out = serialize_treebank(&parse_treebank(&text).map_err(|e| e.to_string())?);
                ensure!(normalized(&out) == normalized(&text), "{name} changed");
            }
            let text = fixture("fr.lex");
            let lex = Lexicon::parse(&text).map_err(|e| e.to_string())?;
            ensure!(normalized(&lex.to_tsv()) == normalized(&text), "fr.lex changed");
            for text in [fixture("learned.cfg"), default_profile().to_text()] {
                let p = Profile::from_text(&text).map_err(|e| e.to_string())?;
                ensure!(normalized(&p.to_text()) == normalized(&text), "profile changed:\n{}", p.to_text());
            }
            Ok("treebanks, lexicon, profiles")
        })(),
    )
}

fn main() {
    let checks: [fn() -> bool; 10] = [
        whole_group_scores,
        subgroup_scores,
        subgroup_sums,
        aggregation_outcomes,
        end_to_end,
        direction_checks,
        adaptation,
        oracle_equivalence,
        forest_ranking,
        format_round_trips,
    ];
    let failed = checks.iter().filter(|check| !check()).count();
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
