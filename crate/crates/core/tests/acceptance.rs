//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line straight to
//! stdout (bypassing capture) and then asserts.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::time::Instant;

use stepwise_core::datagen::instance_rng;
use stepwise_core::datagen::{
    assign_gold, emit_training_records, generate_dataset, gold_closure, perturb, write_jsonl, Depth, EquivalenceRecord,
    GenConfig, Instance, InstanceRecord, PerturbMode, Question,
};
use stepwise_core::eval::{
    budget_at_depth, budget_curve, consistency_over, depth_rows, inference_pr, proof_credit, score_items, DepthKey,
    Prediction,
};
use stepwise_core::lang::{negate, parse_sentence, Atom, Parser, SentId, Sentence, Theory, Vocabulary};
use stepwise_core::par::Execution;
use stepwise_core::pipeline::{solve_instances, SolveOptions};
use stepwise_core::reasoner::{check_proof, Label, ProofGraph};
use stepwise_core::strategy::StrategyKind;

const PAR: Execution = Execution::Parallel;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance {id} [{name}]: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn dataset(targets: Vec<Depth>, theories: usize, seed: u64) -> Vec<Instance> {
    let cfg = GenConfig {
        target_depths: targets,
        theories,
        seed,
        ..GenConfig::default()
    };
    generate_dataset(&cfg, PAR).expect("generation")
}

fn levels(range: std::ops::RangeInclusive<u32>) -> Vec<Depth> {
    range.map(Depth::Level).collect()
}

fn solve(instances: &[Instance], kind: StrategyKind) -> Vec<Prediction> {
    solve_instances(instances, SolveOptions::new(kind), PAR).expect("solve")
}

fn questions(instances: &[Instance]) -> Vec<&Question> {
    instances.iter().flat_map(|i| &i.questions).collect()
}

fn hypothesis(q: &Question) -> Atom {
    match q.gold.label {
        Label::False => q.statement.atom.negated(),
        _ => q.statement.atom.clone(),
    }
}

/// Reads the conclusions of one proof without the library's proof parser
/// or checker: a step's subject is whichever input subject grounds every
/// premise onto the inputs.
fn oracle_conclusions(theory: &Theory, hyp: &Atom, proof: &str) -> Option<Vec<String>> {
    let mut conclusions: Vec<Atom> = Vec::new();
    for step in proof.split(" ; ") {
        let (lhs, rhs) = step.split_once(" -> ")?;
        if !lhs.starts_with('(') {
            // A bare given fact.
            return Some(Vec::new());
        }
        // `(<rule> & <input> <input>...)`
        let (rule_tok, rest) = lhs.strip_prefix('(')?.strip_suffix(')')?.split_once(" & ")?;
        let rule = theory.rule(SentId(rule_tok.strip_prefix("sent")?.parse().ok()?))?;
        let mut inputs: Vec<Atom> = Vec::new();
        for tok in rest.split(' ') {
            if let Some(n) = tok.strip_prefix("sent") {
                inputs.push(theory.fact(SentId(n.parse().ok()?))?.atom.clone());
            } else {
                let k: usize = tok.strip_prefix("int")?.parse().ok()?;
                inputs.push(conclusions.get(k.checked_sub(1)?)?.clone());
            }
        }
        let mut subjects: Vec<Option<&stepwise_core::lang::Entity>> = vec![None];
        subjects.extend(inputs.iter().filter_map(|a| a.subject.entity()).map(Some));
        let input_set: HashSet<&Atom> = inputs.iter().collect();
        let grounded = subjects.into_iter().find_map(|s| {
            let ps: Vec<Atom> = rule.premises.iter().map(|p| p.substitute(s)).collect();
            let ok = ps.iter().all(|p| p.is_ground() && input_set.contains(p)) && ps.len() == inputs.len();
            ok.then(|| rule.conclusion.substitute(s))
        })?;
        if rhs == "hypothesis" && grounded != *hyp {
            return None;
        }
        conclusions.push(grounded);
    }
    Some(conclusions.iter().map(Atom::render).collect())
}

#[test]
fn acceptance_1_strategies_agree_with_gold() {
    let mut targets = levels(0..=5);
    targets.push(Depth::NotApplicable);
    let instances = dataset(targets, 168, 101);
    let qs = questions(&instances);
    let start = Instant::now();
    let goal = solve(&instances, StrategyKind::Goal);
    let exh = solve(&instances, StrategyKind::Exhaustive);
    let secs = start.elapsed().as_secs_f64();
    let depths: BTreeSet<String> = qs.iter().map(|q| q.gold.depth.to_string()).collect();
    let mut label_mismatch = 0;
    let mut proof_miss = [0usize; 2];
    for ((q, g), e) in qs.iter().zip(&goal).zip(&exh) {
        assert_eq!(g.question_id, q.id);
        if g.label != e.label || g.label != q.gold.label {
            label_mismatch += 1;
        }
        proof_miss[0] += !proof_credit(g, &q.gold).0 as usize;
        proof_miss[1] += !proof_credit(e, &q.gold).0 as usize;
    }
    let pass = qs.len() >= 1000 && depths.len() == 7 && label_mismatch == 0 && proof_miss == [0, 0] && secs < 60.0;
    report(
        1,
        "oracle equivalence",
        pass,
        &format!(
            "{} questions, depths {:?}, label mismatches {label_mismatch}, proof misses goal {} exhaustive {}, {secs:.2}s",
            qs.len(),
            depths,
            proof_miss[0],
            proof_miss[1]
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_2_perturbation_consistency() {
    let bases = dataset(levels(0..=5), 200, 202);
    let pools = Vocabulary::robustness();
    let mut details = Vec::new();
    let mut pass = true;
    for mode in PerturbMode::ALL {
        let mut records = Vec::new();
        let mut variants = Vec::new();
        let mut oracle_drift = 0;
        for (i, base) in bases.iter().enumerate() {
            let set = perturb(base, mode, &mut instance_rng(7, i), 5, &pools).expect("perturb");
            assert_eq!(set.variants.len(), 5);
            for (k, (v, map)) in set.variants.into_iter().enumerate() {
                let closure = gold_closure(&v.theory);
                for (vq, bq) in v.questions.iter().zip(&base.questions) {
                    if assign_gold(&closure, &vq.statement, 64).label != bq.gold.label {
                        oracle_drift += 1;
                    }
                }
                records.push(EquivalenceRecord::new(&v, base.id(), k + 1, &map));
                variants.push(v);
            }
        }
        for kind in StrategyKind::ALL {
            let mut preds: HashMap<String, Prediction> = HashMap::new();
            for p in solve(&bases, kind).into_iter().chain(solve(&variants, kind)) {
                preds.insert(p.question_id.clone(), p);
            }
            let c = consistency_over(&bases, &records, &preds).expect("consistency");
            let ok = c.entailment == 1.0 && c.proof == 1.0 && oracle_drift == 0 && c.variants == c.sets * 5;
            pass &= ok;
            details.push(format!(
                "{mode}/{kind}: {} sets, entailment {:.4}, proof {:.4}",
                c.sets, c.entailment, c.proof
            ));
        }
        pass &= bases.len() == 200;
        if oracle_drift > 0 {
            details.push(format!("{mode}: {oracle_drift} gold labels moved"));
        }
    }
    report(2, "perturbation consistency", pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn acceptance_3_inference_precision_recall() {
    let instances = dataset(levels(1..=5), 150, 303);
    let mut details = Vec::new();
    let mut pass = true;
    let mut oracle_mismatch = 0;
    for kind in StrategyKind::ALL {
        let preds = solve(&instances, kind);
        let items = score_items(&instances, &preds, PAR).expect("score");
        let theories: Vec<&Theory> = instances
            .iter()
            .flat_map(|i| std::iter::repeat_n(&i.theory, i.questions.len()))
            .collect();
        for ((q, p), t) in questions(&instances).into_iter().zip(&preds).zip(&theories) {
            let lib = inference_pr(t, q, &p.generated).expect("pr");
            if q.gold.label == Label::Unknown {
                oracle_mismatch += lib.is_some() as usize;
                continue;
            }
            let hyp = hypothesis(q);
            let per_proof: Vec<Vec<String>> = q
                .gold
                .proofs
                .iter()
                .map(|pr| oracle_conclusions(t, &hyp, pr).unwrap_or_else(|| panic!("unreadable gold proof {pr}")))
                .collect();
            let union: HashSet<&String> = per_proof.iter().flatten().collect();
            let g: HashSet<&String> = p.generated.iter().collect();
            let precision = if g.is_empty() {
                union.is_empty().then_some(1.0)
            } else {
                Some(g.iter().filter(|x| union.contains(*x)).count() as f64 / g.len() as f64)
            };
            let recall = per_proof
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        1.0
                    } else {
                        c.iter().filter(|x| g.contains(x)).count() as f64 / c.len() as f64
                    }
                })
                .fold(0.0, f64::max);
            let lib = lib.expect("labelled question scored");
            let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
            let same_p = match (lib.precision, precision) {
                (Some(a), Some(b)) => close(a, b),
                (None, None) => true,
                _ => false,
            };
            if !same_p || !close(lib.recall, recall) {
                oracle_mismatch += 1;
            }
        }
        let rows = depth_rows(&items);
        for d in 1..=5u32 {
            let row = &rows[&DepthKey::Level(d)];
            let (p, r) = (row.precision.unwrap_or(f64::NAN), row.recall.unwrap_or(f64::NAN));
            let ok = match kind {
                StrategyKind::Goal => p == 1.0 && r == 1.0,
                StrategyKind::Exhaustive => r == 1.0 && p < 0.8,
            };
            pass &= ok;
            details.push(format!("{kind} d{d} P={p:.3} R={r:.3}"));
        }
    }
    pass &= oracle_mismatch == 0;
    details.push(format!("oracle mismatches {oracle_mismatch}"));
    report(3, "inference precision and recall", pass, &details.join(", "));
    assert!(pass);
}

#[test]
fn acceptance_4_budgeted_accuracy() {
    let instances = dataset(levels(1..=5), 150, 404);
    let goal = budget_at_depth(&instances, StrategyKind::Goal, PAR).expect("budget");
    let exh = budget_at_depth(&instances, StrategyKind::Exhaustive, PAR).expect("budget");
    let mut pass = goal.len() == 5;
    let mut details = Vec::new();
    for (d, g) in &goal {
        let e = &exh[d];
        pass &= g.proof_accuracy == 1.0 && e.proof_accuracy < g.proof_accuracy;
        details.push(format!(
            "B=d={d}: goal {:.3} exhaustive {:.3}",
            g.proof_accuracy, e.proof_accuracy
        ));
    }
    let budgets = [1, 3, 5, 7, 10];
    for kind in StrategyKind::ALL {
        let curve = budget_curve(&instances, kind, &budgets, |_| true, PAR).expect("curve");
        let points: Vec<_> = curve.values().collect();
        let monotone = points.windows(2).all(|w| {
            w[0].entailment_accuracy <= w[1].entailment_accuracy && w[0].proof_accuracy <= w[1].proof_accuracy
        });
        pass &= monotone;
        details.push(format!(
            "{kind} proof curve {:?} monotone={monotone}",
            points
                .iter()
                .map(|p| format!("{:.3}", p.proof_accuracy))
                .collect::<Vec<_>>()
        ));
    }
    report(4, "budgeted accuracy", pass, &details.join(", "));
    assert!(pass);
}

#[test]
fn acceptance_5_composer_call_ratio() {
    let mut pass = true;
    let mut ratios = Vec::new();
    for seed in [501, 502, 503, 504, 505] {
        let instances = dataset(vec![Depth::Level(5)], 40, seed);
        let mean =
            |preds: Vec<Prediction>| preds.iter().map(|p| p.composer_calls as f64).sum::<f64>() / preds.len() as f64;
        let g = mean(solve(&instances, StrategyKind::Goal));
        let e = mean(solve(&instances, StrategyKind::Exhaustive));
        let r = g / e;
        pass &= r <= 0.5;
        ratios.push(format!("seed {seed}: {r:.3}"));
    }
    report(5, "goal-directed efficiency", pass, &ratios.join(", "));
    assert!(pass);
}

#[test]
fn acceptance_6_d3_statistics() {
    let cfg = GenConfig {
        theories: 500,
        seed: 606,
        ..GenConfig::d3_like()
    };
    let instances = generate_dataset(&cfg, PAR).expect("generation");
    let counts: Vec<usize> = instances
        .iter()
        .map(|i| gold_closure(&i.theory).derived_count())
        .collect();
    let min = *counts.iter().min().unwrap();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let (lo, hi) = (4.81 * 0.7, 4.81 * 1.3);
    let pass = counts.len() >= 500 && min == 3 && (lo..=hi).contains(&mean);
    report(
        6,
        "depth-3 dataset statistics",
        pass,
        &format!(
            "{} theories, min conclusions {min}, mean {mean:.3} in [{lo:.3}, {hi:.3}]",
            counts.len()
        ),
    );
    assert!(pass);
}

/// Irrelevant sentences over attributes the theory never mentions.
fn irrelevant(theory: &Theory, k: usize, salt: usize) -> Vec<Sentence> {
    let used: HashSet<String> = theory.sentences().iter().map(|s| s.render().to_lowercase()).collect();
    let pool = Vocabulary::robustness();
    let fresh: Vec<&String> = pool
        .attributes
        .iter()
        .filter(|a| {
            !used
                .iter()
                .any(|s| s.split(|c: char| !c.is_alphanumeric()).any(|w| w == a.as_str()))
        })
        .collect();
    let subject = theory.entities()[salt % theory.entities().len()].surface(true);
    let a = |i: usize| fresh[(salt + i) % fresh.len()];
    let texts = [
        format!("{subject} is {}.", a(0)),
        format!("If someone is {} then they are {}.", a(0), a(1)),
        format!("All {} things are {}.", a(2), a(3)),
        format!("{subject} is not {}.", a(4)),
    ];
    texts[..k.min(texts.len())]
        .iter()
        .map(|t| parse_sentence(t, 1).unwrap_or_else(|e| panic!("{t}: {e}")))
        .collect()
}

#[test]
fn acceptance_7_property_suites() {
    let mut details = Vec::new();
    let mut pass = true;

    // Sentence round-trips.
    let parser = Parser::default();
    let corpus = dataset(levels(0..=5), 700, 707);
    let sentences: Vec<Sentence> = corpus.iter().flat_map(|i| i.theory.sentences()).collect();
    let bad_trips = sentences
        .iter()
        .filter(|s| parser.parse_sentence(&s.render(), s.id().0).ok().as_ref() != Some(*s))
        .count();
    pass &= sentences.len() >= 10_000 && bad_trips == 0;
    details.push(format!("{} round-trips, {bad_trips} failures", sentences.len()));

    // Negation is an involution.
    let statements: Vec<_> = questions(&corpus).iter().map(|q| q.statement.clone()).collect();
    let bad_neg = statements
        .iter()
        .filter(|s| negate(&negate(s)) != **s || negate(s) == **s)
        .count();
    pass &= bad_neg == 0;
    details.push(format!("{} negations, {bad_neg} failures", statements.len()));

    // Every gold and predicted proof checks.
    let mut proofs = 0;
    let mut bad_proofs = 0;
    let preds: Vec<Prediction> = StrategyKind::ALL.iter().flat_map(|k| solve(&corpus, *k)).collect();
    let all_q = questions(&corpus);
    let theories: Vec<&Theory> = corpus
        .iter()
        .flat_map(|i| std::iter::repeat_n(&i.theory, i.questions.len()))
        .collect();
    for (i, q) in all_q.iter().enumerate() {
        let hyp = hypothesis(q);
        let predicted = preds
            .iter()
            .skip(i)
            .step_by(all_q.len())
            .filter_map(|p| p.proof.clone());
        for text in q.gold.proofs.iter().cloned().chain(predicted) {
            proofs += 1;
            let ok = ProofGraph::parse(&text).is_ok_and(|g| check_proof(theories[i], &hyp, &g).is_ok());
            bad_proofs += !ok as usize;
        }
    }
    pass &= bad_proofs == 0;
    details.push(format!("{proofs} proofs checked, {bad_proofs} rejected"));

    // Irrelevant sentences never change a verdict.
    let mut changes = 0;
    let augmentations = 500;
    for n in 0..augmentations {
        let base = &corpus[n % corpus.len()];
        let extra = irrelevant(&base.theory, 1 + n % 4, n);
        let augmented = Instance {
            theory: base.theory.extended(extra),
            questions: base.questions.clone(),
        };
        for kind in StrategyKind::ALL {
            let before = solve(std::slice::from_ref(base), kind);
            let after = solve(std::slice::from_ref(&augmented), kind);
            changes += before
                .iter()
                .zip(&after)
                .filter(|(b, a)| b.label != a.label || b.proof != a.proof)
                .count();
        }
    }
    pass &= changes == 0;
    details.push(format!("{augmentations} augmentations, {changes} verdict changes"));

    // Same seed, same bytes, in either execution mode.
    let cfg = GenConfig {
        theories: 60,
        seed: 77,
        ..GenConfig::default()
    };
    let dir = std::env::temp_dir().join(format!("stepwise-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut bytes = Vec::new();
    for (i, exec) in [Execution::Sequential, Execution::Parallel, Execution::Parallel]
        .into_iter()
        .enumerate()
    {
        let data = generate_dataset(&cfg, exec).unwrap();
        let records: Vec<InstanceRecord> = data.iter().map(InstanceRecord::from).collect();
        let path = dir.join(format!("{i}.jsonl"));
        write_jsonl(&path, &records).unwrap();
        let preds = solve_instances(&data, SolveOptions::new(StrategyKind::Goal), exec).unwrap();
        bytes.push((std::fs::read(&path).unwrap(), serde_json::to_string(&preds).unwrap()));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let deterministic = bytes.windows(2).all(|w| w[0] == w[1]);
    pass &= deterministic;
    details.push(format!("seed determinism {deterministic}"));

    report(7, "property suites", pass, &details.join(", "));
    assert!(pass);
}

#[test]
fn acceptance_8_training_record_counts() {
    let instances = dataset(levels(0..=5), 100, 808);
    let mut expected = (0usize, 0usize);
    let mut got = (0usize, 0usize, 0usize);
    let mut kc_outside = 0;
    for inst in &instances {
        let recs = emit_training_records(inst).expect("records");
        got.0 += recs.rs.len();
        got.1 += recs.fs.len();
        got.2 += recs.kc.len();
        let closure = gold_closure(&inst.theory);
        let derived: HashSet<String> = closure.entries.keys().map(Atom::render).collect();
        kc_outside += recs.kc.iter().filter(|k| !derived.contains(&k.output)).count();
        for q in &inst.questions {
            // One step per parenthesised group of the first proof.
            let steps = q.gold.proofs.first().map_or(0, |p| p.matches('(').count());
            expected.0 += steps;
            expected.1 += 1;
        }
    }
    let pass = instances.len() == 100
        && got.0 == expected.0 + expected.1
        && got.1 == expected.0
        && got.2 == expected.0
        && kc_outside == 0;
    report(
        8,
        "training decomposition",
        pass,
        &format!(
            "RS {} (expected {}), FS {} and KC {} (expected {}), {kc_outside} composer outputs outside the closure",
            got.0,
            expected.0 + expected.1,
            got.1,
            got.2,
            expected.0
        ),
    );
    assert!(pass);
}
