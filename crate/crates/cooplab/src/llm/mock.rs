//! Scripted stand-ins for the three model roles, used by `mock-run` and by
//! the offline tests. They answer through the same [`ChatModel`] interface
//! as a real endpoint, so the pipeline under test is the production one.
//!
//! The generator decides by reading the outcome lines back out of the
//! prompt, exactly the way a cooperative reader would: the label whose
//! mutual outcome pays more is the cooperative one. All stochastic behavior
//! is keyed off the request seed, never off global state.

use serde::{Deserialize, Serialize};

use crate::llm::client::{ChatModel, CompletionRequest, CompletionResponse, LlmError};
use crate::llm::{parse_outcome_lines, templates, Label};

/// Policy of the scripted answer generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum MockPolicy {
    /// Always pick the cooperative label.
    Cooperate,
    /// Always pick the defecting label.
    Defect,
    /// Cooperate or defect per a fair seed-derived coin.
    Random,
    /// Cooperate, but emit an answer with no committed choice whenever
    /// `seed % invalid_every == 0`.
    FlakyCooperate { invalid_every: u64 },
}

/// Scripted long-answer generator.
#[derive(Clone, Copy, Debug)]
pub struct MockGenerator {
    pub policy: MockPolicy,
}

impl MockGenerator {
    pub fn new(policy: MockPolicy) -> Self {
        MockGenerator { policy }
    }
}

impl ChatModel for MockGenerator {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let prompt = request.last_user_content();
        let outcomes = parse_outcome_lines(prompt).ok_or_else(|| {
            LlmError::Protocol("mock generator could not read the outcome lines".into())
        })?;
        let cooperate = outcomes.cooperate_label().ok_or_else(|| {
            LlmError::Protocol("mock generator: mutual payoffs are equal".into())
        })?;
        let seed = request.seed.unwrap_or(0);
        let label = match self.policy {
            MockPolicy::Cooperate => cooperate,
            MockPolicy::Defect => cooperate.other(),
            MockPolicy::Random => {
                if mix(seed, 0x9e3779b97f4a7c15) & 1 == 0 {
                    cooperate
                } else {
                    cooperate.other()
                }
            }
            MockPolicy::FlakyCooperate { invalid_every } => {
                let every = invalid_every.max(1);
                if mix(seed, 0xbf58476d1ce4e5b9).is_multiple_of(every) {
                    return Ok(CompletionResponse::from_text(
                        "Both options have merits and I keep going back and forth; \
                         I cannot commit to either option here.",
                    ));
                }
                cooperate
            }
        };
        // the one-letter instruction gets a one-letter reply
        if prompt.ends_with(templates::SIMPLE_ANSWER_SUFFIX) {
            return Ok(CompletionResponse::from_text(label.as_str()));
        }
        let text = format!(
            "Let me group the outcomes by my own decision and compare the points in each group. \
             Looking at the mutual outcomes, ({la},{la}) pays {aa} points and ({lb},{lb}) pays {bb} points, \
             and the prize only depends on my own points. \
             Weighing the groups against each other, I choose {pick}.",
            la = Label::A.as_str(),
            lb = Label::B.as_str(),
            aa = outcomes.mine[0],
            bb = outcomes.mine[3],
            pick = label.as_str(),
        );
        Ok(CompletionResponse::from_text(text))
    }
}

/// Scripted extractor: finds the final "I choose X" in the embedded answer.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockExtractor;

impl ChatModel for MockExtractor {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let prompt = request.last_user_content();
        let choice = prompt
            .rmatch_indices("I choose ")
            .next()
            .and_then(|(i, pat)| prompt[i + pat.len()..].chars().next())
            .filter(|c| *c == 'A' || *c == 'B');
        Ok(match choice {
            Some(letter) => CompletionResponse::from_text(format!("The player chose {letter}.")),
            None => CompletionResponse::from_text("NONE"),
        })
    }
}

/// Fixed verifier verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockVerdictMode {
    AlwaysGood,
    AlwaysBad,
    /// Replies outside the one-word contract.
    Gibberish,
}

#[derive(Clone, Copy, Debug)]
pub struct MockVerifier {
    pub mode: MockVerdictMode,
}

impl MockVerifier {
    pub fn new(mode: MockVerdictMode) -> Self {
        MockVerifier { mode }
    }
}

impl ChatModel for MockVerifier {
    fn complete(&self, _request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        Ok(CompletionResponse::from_text(match self.mode {
            MockVerdictMode::AlwaysGood => "good",
            MockVerdictMode::AlwaysBad => "bad",
            MockVerdictMode::Gibberish => "perhaps fine",
        }))
    }
}

/// A model that fails transport a fixed number of times before recovering;
/// used to exercise the retry path without a network.
pub struct FailingModel<M> {
    inner: M,
    failures: std::sync::atomic::AtomicU32,
}

impl<M> FailingModel<M> {
    pub fn new(inner: M, failures: u32) -> Self {
        FailingModel {
            inner,
            failures: std::sync::atomic::AtomicU32::new(failures),
        }
    }
}

impl<M: ChatModel> ChatModel for FailingModel<M> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        use std::sync::atomic::Ordering;
        let remaining = self.failures.load(Ordering::SeqCst);
        if remaining > 0 {
            self.failures.store(remaining - 1, Ordering::SeqCst);
            return Err(LlmError::Transport {
                attempts: 1,
                message: "scripted failure".into(),
            });
        }
        self.inner.complete(request)
    }
}

/// splitmix64-style mixer for deriving independent decision streams from
/// one play seed.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed.wrapping_add(salt);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
