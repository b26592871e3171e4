//! Metrics over predictions: entailment and strict proof accuracy,
//! consistency across equivalence sets, inference precision and recall,
//! budget curves and depth breakdowns.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::datagen::{Depth, EquivalenceRecord, GoldAnnotation, Instance, Question, RenamingMap, SCHEMA_VERSION};
use crate::lang::{Atom, Theory};
use crate::par::{map_ordered, Execution};
use crate::pipeline::{solve_instances, SolveOptions};
use crate::reasoner::{check_proof, Label, ProofGraph, ReasonError};
use crate::strategy::StrategyKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub label: Label,
    pub proof: Option<String>,
    /// Surface forms of the generated conclusions, in order.
    pub generated: Vec<String>,
    pub composer_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("consistency: {0}")]
    Consistency(String),
    #[error("gold proof does not check: {0}")]
    Gold(String),
    #[error(transparent)]
    Reason(#[from] ReasonError),
}

/// Pairs predictions with gold questions; the two id sets must coincide.
pub fn align<'a>(
    preds: &'a [Prediction],
    golds: &'a [Question],
) -> Result<Vec<(&'a Prediction, &'a Question)>, EvalError> {
    if preds.is_empty() || golds.is_empty() {
        return Err(EvalError::Alignment("empty prediction or gold set".into()));
    }
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in preds {
        if by_id.insert(&p.question_id, p).is_some() {
            return Err(EvalError::Alignment(format!(
                "duplicate prediction for {}",
                p.question_id
            )));
        }
    }
    let mut out = Vec::with_capacity(golds.len());
    for g in golds {
        let p = by_id
            .remove(g.id.as_str())
            .ok_or_else(|| EvalError::Alignment(format!("no prediction for {}", g.id)))?;
        out.push((p, g));
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(EvalError::Alignment(format!("prediction {extra} has no gold question")));
    }
    Ok(out)
}

pub fn score_entailment(preds: &[Prediction], golds: &[Question]) -> Result<f64, EvalError> {
    let pairs = align(preds, golds)?;
    let hits = pairs.iter().filter(|(p, g)| p.label == g.gold.label).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Strict credit for one item, with a warning for malformed proofs.
pub fn proof_credit(pred: &Prediction, gold: &GoldAnnotation) -> (bool, Option<String>) {
    if pred.label != gold.label {
        return (false, None);
    }
    match &pred.proof {
        None => (gold.proofs.is_empty(), None),
        Some(p) => match ProofGraph::parse(p) {
            Err(e) => (false, Some(format!("{}: {e}", pred.question_id))),
            Ok(_) => (gold.proofs.iter().any(|g| g == p), None),
        },
    }
}

/// Fraction of items with the right label and a proof in the gold set;
/// also returns warnings for malformed proofs.
pub fn score_proof(preds: &[Prediction], golds: &[Question]) -> Result<(f64, Vec<String>), EvalError> {
    let pairs = align(preds, golds)?;
    let mut warnings = Vec::new();
    let mut hits = 0;
    for (p, g) in &pairs {
        let (ok, warn) = proof_credit(p, &g.gold);
        hits += ok as usize;
        warnings.extend(warn);
    }
    Ok((hits as f64 / pairs.len() as f64, warnings))
}

/// Agreement of variant predictions with the base prediction. Proofs are
/// compared after undoing the renaming.
pub fn score_consistency(base: &Prediction, variants: &[(Prediction, RenamingMap)]) -> Result<(f64, f64), EvalError> {
    if variants.is_empty() {
        return Err(EvalError::Consistency(format!("no variants for {}", base.question_id)));
    }
    let mut labels = 0;
    let mut proofs = 0;
    for (v, map) in variants {
        let inverse = map
            .inverse()
            .map_err(|e| EvalError::Consistency(format!("{}: {e}", v.question_id)))?;
        labels += (v.label == base.label) as usize;
        let restored = v.proof.as_deref().map(|p| inverse.text(p));
        proofs += (restored == base.proof) as usize;
    }
    let n = variants.len() as f64;
    Ok((labels as f64 / n, proofs as f64 / n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrOutcome {
    /// `None` when nothing was generated but inferences were required.
    pub precision: Option<f64>,
    pub recall: f64,
    pub flag: Option<String>,
}

/// The derived atoms of one gold proof, found by the proof checker.
fn proof_conclusions(theory: &Theory, hypothesis: &Atom, proof: &str) -> Result<Vec<String>, EvalError> {
    let graph = ProofGraph::parse(proof).map_err(|e| EvalError::Gold(e.to_string()))?;
    let atoms = check_proof(theory, hypothesis, &graph).map_err(|e| EvalError::Gold(e.to_string()))?;
    Ok(atoms.iter().map(Atom::render).collect())
}

/// Precision against the union of gold-proof inferences and recall as the
/// best coverage of any single gold proof. `None` for Unknown gold.
pub fn inference_pr(
    theory: &Theory,
    question: &Question,
    generated: &[String],
) -> Result<Option<PrOutcome>, EvalError> {
    let hypothesis = match question.gold.label {
        Label::Unknown => return Ok(None),
        Label::True => question.statement.atom.clone(),
        Label::False => question.statement.atom.negated(),
    };
    let per_proof: Vec<HashSet<String>> = question
        .gold
        .proofs
        .iter()
        .map(|p| proof_conclusions(theory, &hypothesis, p).map(|v| v.into_iter().collect()))
        .collect::<Result<_, _>>()?;
    let required: HashSet<&String> = per_proof.iter().flatten().collect();
    let g: HashSet<&String> = generated.iter().collect();
    let (precision, flag) = if g.is_empty() {
        if required.is_empty() {
            (
                Some(1.0),
                Some("nothing generated and nothing required: precision taken as 1".into()),
            )
        } else {
            (None, Some("nothing generated: precision undefined".into()))
        }
    } else {
        let hit = g.iter().filter(|x| required.contains(**x)).count();
        (Some(hit as f64 / g.len() as f64), None)
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
    Ok(Some(PrOutcome {
        precision,
        recall,
        flag,
    }))
}

/// Depth row key: a level, "N/A", or "All".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepthKey {
    Level(u32),
    NotApplicable,
    All,
}

impl From<Depth> for DepthKey {
    fn from(d: Depth) -> Self {
        match d {
            Depth::Level(n) => DepthKey::Level(n),
            Depth::NotApplicable => DepthKey::NotApplicable,
        }
    }
}

impl fmt::Display for DepthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthKey::Level(n) => write!(f, "{n}"),
            DepthKey::NotApplicable => f.write_str("N/A"),
            DepthKey::All => f.write_str("All"),
        }
    }
}

impl FromStr for DepthKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "All" => Ok(DepthKey::All),
            "N/A" => Ok(DepthKey::NotApplicable),
            n => n
                .parse()
                .map(DepthKey::Level)
                .map_err(|_| format!("bad depth key `{s}`")),
        }
    }
}

impl Serialize for DepthKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DepthKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-question outcome feeding the report.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemScore {
    pub question_id: String,
    pub depth: Depth,
    pub label_correct: bool,
    pub proof_correct: bool,
    pub pr: Option<PrOutcome>,
    pub composer_calls: usize,
    pub warning: Option<String>,
}

/// Scores aligned predictions against every question of `instances`.
pub fn score_items(instances: &[Instance], preds: &[Prediction], exec: Execution) -> Result<Vec<ItemScore>, EvalError> {
    let golds: Vec<Question> = instances.iter().flat_map(|i| i.questions.iter().cloned()).collect();
    let pairs = align(preds, &golds)?;
    let theories: Vec<&Theory> = instances
        .iter()
        .flat_map(|i| std::iter::repeat_n(&i.theory, i.questions.len()))
        .collect();
    let scored = map_ordered(exec, &pairs, |i, (p, q)| -> Result<ItemScore, EvalError> {
        let (proof_correct, warning) = proof_credit(p, &q.gold);
        Ok(ItemScore {
            question_id: q.id.clone(),
            depth: q.gold.depth,
            label_correct: p.label == q.gold.label,
            proof_correct,
            pr: inference_pr(theories[i], q, &p.generated)?,
            composer_calls: p.composer_calls,
            warning,
        })
    });
    scored.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub questions: usize,
    pub entailment_accuracy: f64,
    pub proof_accuracy: f64,
    /// Mean over questions with a defined precision.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Questions whose precision was undefined and left out.
    pub precision_omitted: usize,
    pub mean_composer_calls: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn row(items: &[&ItemScore]) -> DepthRow {
    let n = items.len().max(1) as f64;
    DepthRow {
        questions: items.len(),
        entailment_accuracy: items.iter().filter(|i| i.label_correct).count() as f64 / n,
        proof_accuracy: items.iter().filter(|i| i.proof_correct).count() as f64 / n,
        precision: mean(items.iter().filter_map(|i| i.pr.as_ref()?.precision)),
        recall: mean(items.iter().filter_map(|i| i.pr.as_ref().map(|p| p.recall))),
        precision_omitted: items
            .iter()
            .filter(|i| i.pr.as_ref().is_some_and(|p| p.precision.is_none()))
            .count(),
        mean_composer_calls: items.iter().map(|i| i.composer_calls as f64).sum::<f64>() / n,
    }
}

/// Per-depth rows plus the "All" row.
pub fn depth_rows(items: &[ItemScore]) -> BTreeMap<DepthKey, DepthRow> {
    let mut groups: BTreeMap<DepthKey, Vec<&ItemScore>> = BTreeMap::new();
    for it in items {
        groups.entry(it.depth.into()).or_default().push(it);
    }
    let mut rows: BTreeMap<DepthKey, DepthRow> = groups.iter().map(|(k, v)| (*k, row(v))).collect();
    rows.insert(DepthKey::All, row(&items.iter().collect::<Vec<_>>()));
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Base questions with at least one variant.
    pub sets: usize,
    pub variants: usize,
    pub entailment: f64,
    pub proof: f64,
}

/// Mean consistency over every base question that has variants.
pub fn consistency_over(
    base: &[Instance],
    equivalence: &[EquivalenceRecord],
    preds: &HashMap<String, Prediction>,
) -> Result<ConsistencyReport, EvalError> {
    let bases: HashMap<&str, &Instance> = base.iter().map(|i| (i.id(), i)).collect();
    let mut grouped: BTreeMap<(String, usize), Vec<(Prediction, RenamingMap)>> = BTreeMap::new();
    let mut order: Vec<(String, usize)> = Vec::new();
    for rec in equivalence {
        let b = bases
            .get(rec.base_id.as_str())
            .ok_or_else(|| EvalError::Consistency(format!("base instance {} not in gold", rec.base_id)))?;
        if rec.instance.questions.len() != b.questions.len() {
            return Err(EvalError::Consistency(format!(
                "{} has a different question count",
                rec.instance.id
            )));
        }
        for (i, q) in rec.instance.questions.iter().enumerate() {
            let p = preds
                .get(&q.id)
                .ok_or_else(|| EvalError::Consistency(format!("no prediction for variant question {}", q.id)))?;
            let key = (rec.base_id.clone(), i);
            if !grouped.contains_key(&key) {
                order.push(key.clone());
            }
            grouped.entry(key).or_default().push((p.clone(), rec.renaming()));
        }
    }
    let mut entail = Vec::new();
    let mut proof = Vec::new();
    let mut variants = 0;
    for key in &order {
        let qid = &bases[key.0.as_str()].questions[key.1].id;
        let base_pred = preds
            .get(qid)
            .ok_or_else(|| EvalError::Consistency(format!("no prediction for base question {qid}")))?;
        let vs = &grouped[key];
        variants += vs.len();
        let (e, p) = score_consistency(base_pred, vs)?;
        entail.push(e);
        proof.push(p);
    }
    Ok(ConsistencyReport {
        sets: order.len(),
        variants,
        entailment: mean(entail.into_iter()).unwrap_or(1.0),
        proof: mean(proof.into_iter()).unwrap_or(1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub questions: usize,
    pub entailment_accuracy: f64,
    pub proof_accuracy: f64,
}

fn budget_point(preds: &[Prediction], golds: &[&Question]) -> BudgetPoint {
    let by_id: HashMap<&str, &Prediction> = preds.iter().map(|p| (p.question_id.as_str(), p)).collect();
    let n = golds.len().max(1) as f64;
    let (mut e, mut p) = (0, 0);
    for g in golds {
        let pred = by_id[g.id.as_str()];
        e += (pred.label == g.gold.label) as usize;
        p += proof_credit(pred, &g.gold).0 as usize;
    }
    BudgetPoint {
        questions: golds.len(),
        entailment_accuracy: e as f64 / n,
        proof_accuracy: p as f64 / n,
    }
}

/// Accuracy at each budget over the questions `keep` selects.
pub fn budget_curve<F>(
    instances: &[Instance],
    strategy: StrategyKind,
    budgets: &[usize],
    keep: F,
    exec: Execution,
) -> Result<BTreeMap<usize, BudgetPoint>, EvalError>
where
    F: Fn(&Question) -> bool,
{
    let golds: Vec<&Question> = instances
        .iter()
        .flat_map(|i| &i.questions)
        .filter(|q| keep(q))
        .collect();
    let mut curve = BTreeMap::new();
    for &b in budgets {
        let preds = solve_instances(instances, SolveOptions::new(strategy).with_budget(Some(b)), exec)?;
        curve.insert(b, budget_point(&preds, &golds));
    }
    Ok(curve)
}

/// Accuracy on depth-`d` True questions when the budget is exactly `d`.
pub fn budget_at_depth(
    instances: &[Instance],
    strategy: StrategyKind,
    exec: Execution,
) -> Result<BTreeMap<u32, BudgetPoint>, EvalError> {
    let mut depths: Vec<u32> = instances
        .iter()
        .flat_map(|i| &i.questions)
        .filter_map(|q| match (q.gold.label, q.gold.depth) {
            (Label::True, Depth::Level(d)) if d > 0 => Some(d),
            _ => None,
        })
        .collect();
    depths.sort_unstable();
    depths.dedup();
    let mut out = BTreeMap::new();
    for d in depths {
        let keep = |q: &Question| q.gold.label == Label::True && q.gold.depth == Depth::Level(d);
        let curve = budget_curve(instances, strategy, &[d as usize], keep, exec)?;
        out.extend(curve.into_values().map(|p| (d, p)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: String,
    pub questions: usize,
    pub entailment_accuracy: f64,
    pub proof_accuracy: f64,
    pub depth_rows: BTreeMap<DepthKey, DepthRow>,
    pub consistency: Option<ConsistencyReport>,
    pub budget_curve: BTreeMap<usize, BudgetPoint>,
    pub mean_composer_calls: f64,
    pub warnings: Vec<String>,
}

pub fn build_report(
    items: &[ItemScore],
    consistency: Option<ConsistencyReport>,
    budget_curve: BTreeMap<usize, BudgetPoint>,
) -> MetricsReport {
    let rows = depth_rows(items);
    let all = &rows[&DepthKey::All];
    let mut warnings: Vec<String> = items.iter().filter_map(|i| i.warning.clone()).collect();
    let omitted = all.precision_omitted;
    if omitted > 0 {
        warnings.push(format!(
            "{omitted} question(s) generated nothing; their precision is left out"
        ));
    }
    MetricsReport {
        schema_version: SCHEMA_VERSION.to_string(),
        questions: items.len(),
        entailment_accuracy: all.entailment_accuracy,
        proof_accuracy: all.proof_accuracy,
        mean_composer_calls: all.mean_composer_calls,
        depth_rows: rows,
        consistency,
        budget_curve,
        warnings,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or("-".to_string(), |v| format!("{v:.4}"))
}

fn depth_table(out: &mut String, rows: &BTreeMap<DepthKey, DepthRow>) {
    let _ = writeln!(
        out,
        "{:>5}  {:>9}  {:>10}  {:>8}  {:>9}  {:>9}  {:>8}",
        "depth", "questions", "entailment", "proof", "precision", "recall", "calls"
    );
    for (k, r) in rows {
        let _ = writeln!(
            out,
            "{:>5}  {:>9}  {:>10.4}  {:>8.4}  {:>9}  {:>9}  {:>8.3}",
            k.to_string(),
            r.questions,
            r.entailment_accuracy,
            r.proof_accuracy,
            opt(r.precision),
            opt(r.recall),
            r.mean_composer_calls
        );
    }
}

fn curve_table(out: &mut String, curve: &BTreeMap<usize, BudgetPoint>) {
    if curve.is_empty() {
        return;
    }
    let _ = writeln!(
        out,
        "{:>6}  {:>9}  {:>10}  {:>8}",
        "budget", "questions", "entailment", "proof"
    );
    for (b, p) in curve {
        let _ = writeln!(
            out,
            "{:>6}  {:>9}  {:>10.4}  {:>8.4}",
            b, p.questions, p.entailment_accuracy, p.proof_accuracy
        );
    }
}

/// Aligned plain-text rendering.
pub fn render_report_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    depth_table(&mut out, &report.depth_rows);
    if let Some(c) = &report.consistency {
        let _ = writeln!(
            out,
            "\nconsistency over {} sets ({} variants): entailment {:.4}, proof {:.4}",
            c.sets, c.variants, c.entailment, c.proof
        );
    }
    if !report.budget_curve.is_empty() {
        out.push('\n');
        curve_table(&mut out, &report.budget_curve);
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyBench {
    pub strategy: StrategyKind,
    pub report: MetricsReport,
    /// Depth-`d` True questions solved with budget exactly `d`.
    pub budget_at_depth: BTreeMap<u32, BudgetPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: String,
    pub instances: usize,
    pub budgets: Vec<usize>,
    pub strategies: Vec<StrategyBench>,
    /// Mean composer calls of the goal-directed strategy divided by those
    /// of the exhaustive one, when both ran.
    pub composer_call_ratio: Option<f64>,
}

/// Solves every question with each strategy, unbudgeted and at each
/// budget, and scores the results.
pub fn run_bench(
    instances: &[Instance],
    strategies: &[StrategyKind],
    budgets: &[usize],
    exec: Execution,
) -> Result<BenchReport, EvalError> {
    let mut out = Vec::new();
    for &s in strategies {
        let preds = solve_instances(instances, SolveOptions::new(s), exec)?;
        let items = score_items(instances, &preds, exec)?;
        let curve = budget_curve(instances, s, budgets, |_| true, exec)?;
        out.push(StrategyBench {
            strategy: s,
            report: build_report(&items, None, curve),
            budget_at_depth: budget_at_depth(instances, s, exec)?,
        });
    }
    let calls = |k: StrategyKind| {
        out.iter()
            .find(|b| b.strategy == k)
            .map(|b| b.report.mean_composer_calls)
    };
    let composer_call_ratio = match (calls(StrategyKind::Goal), calls(StrategyKind::Exhaustive)) {
        (Some(g), Some(e)) if e > 0.0 => Some(g / e),
        _ => None,
    };
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION.to_string(),
        instances: instances.len(),
        budgets: budgets.to_vec(),
        strategies: out,
        composer_call_ratio,
    })
}

pub fn render_bench_table(report: &BenchReport) -> String {
    let mut out = String::new();
    for s in &report.strategies {
        let _ = writeln!(out, "== {} ==", s.strategy);
        depth_table(&mut out, &s.report.depth_rows);
        out.push('\n');
        curve_table(&mut out, &s.report.budget_curve);
        if !s.budget_at_depth.is_empty() {
            let _ = writeln!(out, "\nbudget = depth, True questions:");
            let _ = writeln!(out, "{:>5}  {:>9}  {:>8}", "depth", "questions", "proof");
            for (d, p) in &s.budget_at_depth {
                let _ = writeln!(out, "{:>5}  {:>9}  {:>8.4}", d, p.questions, p.proof_accuracy);
            }
        }
        out.push('\n');
    }
    if let Some(r) = report.composer_call_ratio {
        let _ = writeln!(out, "composer calls, goal / exhaustive: {r:.4}");
    }
    out
}
