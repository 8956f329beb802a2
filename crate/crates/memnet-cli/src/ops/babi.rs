//! Question-answering evaluation: a prediction is the argmax of the
//! model's output at each scored step, compared against the argmax of the
//! one-hot answer target. Ties resolve to the lowest index on both sides.

use anyhow::{bail, Result};
use memnet::serialize::Checkpoint;
use memnet::tasks::babi::{argmax, story_to_task, BabiStory, Vocab};
use memnet::{SequenceModel, TaskInstance};
use serde::Serialize;

/// Count wrong answers over every masked step of `tasks`:
/// `(wrong, total, error_rate)`. An empty task set scores zero questions
/// and an error rate of 0.
pub fn qa_error_rate(
    model: &impl SequenceModel,
    tasks: &[TaskInstance],
) -> Result<(usize, usize, f64)> {
    let mut wrong = 0usize;
    let mut total = 0usize;
    for task in tasks {
        let outs = model.run_outputs(&task.inputs, &task.writes)?;
        for t in 0..task.len() {
            if !task.mask[t] {
                continue;
            }
            total += 1;
            if argmax(&outs[t]) != argmax(&task.targets[t]) {
                wrong += 1;
            }
        }
    }
    let rate = if total == 0 { 0.0 } else { wrong as f64 / total as f64 };
    Ok((wrong, total, rate))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BabiEvalReport {
    pub n_questions: usize,
    pub n_wrong: usize,
    pub error_rate: f64,
    /// Whether the error rate exceeds the 5% pass bar.
    pub failed: bool,
}

impl BabiEvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Evaluate a checkpoint on a story set. The checkpoint's input and
/// output widths must both equal the vocabulary size — a mismatch means
/// the vocabulary was built over a different corpus than the model was
/// trained on, and is reported as an error rather than garbage accuracy.
pub fn babi_eval(model: &Checkpoint, stories: &[BabiStory], vocab: &Vocab) -> Result<BabiEvalReport> {
    let (n_x, _, n_o, _) = model.shape();
    if n_x != vocab.len() || n_o != vocab.len() {
        bail!(
            "vocabulary mismatch: model takes {n_x} inputs and emits {n_o} outputs, \
             but the vocabulary has {} tokens",
            vocab.len(),
        );
    }
    let tasks: Vec<TaskInstance> =
        stories.iter().map(|s| story_to_task(s, vocab)).collect::<memnet::Result<_>>()?;
    let (n_wrong, n_questions, error_rate) = qa_error_rate(model, &tasks)?;
    Ok(BabiEvalReport { n_questions, n_wrong, error_rate, failed: error_rate > 0.05 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use memnet::tasks::babi::{babi_parse, build_vocab, gen_task1};
    use memnet::{Dims, MemNetModel, ModelParams};

    fn stories_and_vocab(n: usize) -> (Vec<BabiStory>, Vocab) {
        let stories = babi_parse(&gen_task1(n, 42)).unwrap();
        let vocab = build_vocab(&stories);
        (stories, vocab)
    }

    #[test]
    fn zero_model_always_answers_token_zero() {
        let (stories, vocab) = stories_and_vocab(6);
        let dims = Dims::new(vocab.len(), 4, vocab.len(), 8).unwrap();
        let params = ModelParams::zeros(&dims);
        let model = Checkpoint::MemNet(MemNetModel::from_parts(dims, params, 1.0).unwrap());
        let rep = babi_eval(&model, &stories, &vocab).unwrap();
        assert_eq!(rep.n_questions, 30, "five questions per story");
        // All-zero outputs argmax to token 0, the first statement's first
        // word — never a location, so every answer is wrong.
        assert_eq!(rep.n_wrong, 30);
        assert_eq!(rep.error_rate, 1.0);
        assert!(rep.failed);
    }

    #[test]
    fn vocabulary_mismatch_is_an_error() {
        let (stories, vocab) = stories_and_vocab(3);
        let wrong_dims = Dims::new(vocab.len() + 1, 4, vocab.len() + 1, 8).unwrap();
        let model = Checkpoint::MemNet(MemNetModel::new(wrong_dims, 1.0, 0).unwrap());
        let err = babi_eval(&model, &stories, &vocab).unwrap_err();
        assert!(err.to_string().contains("vocabulary mismatch"), "got: {err}");
    }

    #[test]
    fn argmax_scoring_credits_token_zero_answers() {
        // Two one-question stories; the first answer is deliberately the
        // vocabulary's token 0. A zero model (constant outputs, argmax 0)
        // must get exactly that one right.
        let text = "\
1 bathroom is where mary sleeps.
2 Where is mary? \tbathroom\t1
1 mary is in the garden.
2 Where is mary? \tgarden\t1
";
        let stories = babi_parse(text).unwrap();
        let vocab = build_vocab(&stories);
        assert_eq!(vocab.index_of("bathroom"), Some(0));
        let dims = Dims::new(vocab.len(), 3, vocab.len(), 4).unwrap();
        let params = ModelParams::zeros(&dims);
        let model = Checkpoint::MemNet(MemNetModel::from_parts(dims, params, 1.0).unwrap());
        let rep = babi_eval(&model, &stories, &vocab).unwrap();
        assert_eq!(rep.n_questions, 2);
        assert_eq!(rep.n_wrong, 1, "the token-0 answer is credited, the other is not");
        assert_eq!(rep.error_rate, 0.5);
        assert!(rep.failed);
    }

    #[test]
    fn empty_story_set_scores_cleanly() {
        let (_, vocab) = stories_and_vocab(2);
        let dims = Dims::new(vocab.len(), 2, vocab.len(), 4).unwrap();
        let model = Checkpoint::MemNet(MemNetModel::new(dims, 1.0, 1).unwrap());
        let rep = babi_eval(&model, &[], &vocab).unwrap();
        assert_eq!(rep.n_questions, 0);
        assert_eq!(rep.error_rate, 0.0);
        assert!(!rep.failed);
    }

    #[test]
    fn error_rate_stays_in_unit_range_for_random_models() {
        let (stories, vocab) = stories_and_vocab(5);
        for seed in 0..3 {
            let dims = Dims::new(vocab.len(), 6, vocab.len(), 16).unwrap();
            let model = Checkpoint::MemNet(MemNetModel::new(dims, 1.0, seed).unwrap());
            let rep = babi_eval(&model, &stories, &vocab).unwrap();
            assert!((0.0..=1.0).contains(&rep.error_rate));
            assert_eq!(rep.failed, rep.error_rate > 0.05);
            assert_eq!(rep.n_questions, 25);
        }
    }
}
