//! Batch solving: one strategy run per question, fanned out over instances.

use crate::datagen::Instance;
use crate::eval::Prediction;
use crate::lang::{Statement, Theory};
use crate::par::{try_map_ordered, Execution};
use crate::reasoner::{run_with_store, solve_in, ReasonError, TraceRecord};
use crate::strategy::StrategyKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub strategy: StrategyKind,
    pub budget: Option<usize>,
    /// Random candidate order, seeded per question.
    pub shuffle_seed: Option<u64>,
}

impl SolveOptions {
    pub fn new(strategy: StrategyKind) -> Self {
        SolveOptions {
            strategy,
            budget: None,
            shuffle_seed: None,
        }
    }

    pub fn with_budget(self, budget: Option<usize>) -> Self {
        SolveOptions { budget, ..self }
    }
}

/// Runs the strategy on one question and solves it.
pub fn predict(
    theory: &Theory,
    statement: &Statement,
    question_id: &str,
    opts: SolveOptions,
    question_index: usize,
) -> Result<Prediction, ReasonError> {
    predict_traced(theory, statement, question_id, opts, question_index).map(|(p, _)| p)
}

/// Like [`predict`], also returning the inference trace.
pub fn predict_traced(
    theory: &Theory,
    statement: &Statement,
    question_id: &str,
    opts: SolveOptions,
    question_index: usize,
) -> Result<(Prediction, TraceRecord), ReasonError> {
    let seed = opts.shuffle_seed.map(|s| s.wrapping_add(question_index as u64));
    let mut strategy = opts.strategy.build(theory, statement, seed);
    let (trace, store) = run_with_store(theory, statement, strategy.as_mut(), opts.budget)?;
    let verdict = solve_in(&store, &trace, statement)?;
    let pred = Prediction {
        question_id: question_id.to_string(),
        label: verdict.label,
        proof: verdict.proof.map(|p| p.canonical().to_string()),
        generated: trace.generated().map(|a| a.render()).collect(),
        composer_calls: trace.composer_calls,
    };
    Ok((pred, trace.to_record()))
}

/// Predictions for every question, in instance then question order.
pub fn solve_instances(
    instances: &[Instance],
    opts: SolveOptions,
    exec: Execution,
) -> Result<Vec<Prediction>, ReasonError> {
    let per_instance = try_map_ordered(exec, instances, |_, inst| {
        inst.questions
            .iter()
            .enumerate()
            .map(|(i, q)| predict(&inst.theory, &q.statement, &q.id, opts, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(per_instance.into_iter().flatten().collect())
}

/// [`solve_instances`] with the trace of every question alongside.
pub fn solve_instances_traced(
    instances: &[Instance],
    opts: SolveOptions,
    exec: Execution,
) -> Result<Vec<(Prediction, TraceRecord)>, ReasonError> {
    let per_instance = try_map_ordered(exec, instances, |_, inst| {
        inst.questions
            .iter()
            .enumerate()
            .map(|(i, q)| predict_traced(&inst.theory, &q.statement, &q.id, opts, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(per_instance.into_iter().flatten().collect())
}
