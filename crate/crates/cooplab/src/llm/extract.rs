//! Answer extraction and logical verification.
//!
//! Both steps are model calls followed by a strict parse of the short
//! reply. Replies that do not fit the contract are values, not errors:
//! [`Extracted::Invalid`] triggers a replay, an unparseable verdict is
//! treated as a rejection but logged distinctly.

use serde::{Deserialize, Serialize};

use crate::game::Game;
use crate::llm::client::{
    ChatModel, CompletionRequest, LlmError, EXTRACTION_MAX_TOKENS, EXTRACTION_TEMPERATURE,
    VERIFIER_MAX_TOKENS, VERIFIER_TEMPERATURE,
};
use crate::llm::{outcome_lines, templates, Label, LabelMapping};

/// Result of the extraction call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extracted {
    A,
    B,
    Invalid,
}

impl Extracted {
    pub fn label(self) -> Option<Label> {
        match self {
            Extracted::A => Some(Label::A),
            Extracted::B => Some(Label::B),
            Extracted::Invalid => None,
        }
    }
}

/// Verdict returned by the logical verifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Good,
    Bad,
    /// Outside the one-word contract; handled like a rejection.
    Unparseable,
}

/// Parses the extractor's short reply. A single standalone A or B token is
/// accepted, case-insensitively and regardless of surrounding prose or
/// punctuation; a reply mentioning both labels, or neither, is invalid.
pub fn parse_extractor_reply(text: &str) -> Extracted {
    let mut saw_a = false;
    let mut saw_b = false;
    for token in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        match token {
            "a" | "A" => saw_a = true,
            "b" | "B" => saw_b = true,
            _ => {}
        }
    }
    match (saw_a, saw_b) {
        (true, false) => Extracted::A,
        (false, true) => Extracted::B,
        _ => Extracted::Invalid,
    }
}

/// Parses the verifier's reply: exactly one word, good or bad, ignoring
/// case, whitespace and trailing punctuation.
pub fn parse_verdict(text: &str) -> Verdict {
    let cleaned = text
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .to_ascii_lowercase();
    match cleaned.as_str() {
        "good" => Verdict::Good,
        "bad" => Verdict::Bad,
        _ => Verdict::Unparseable,
    }
}

/// The prompt sent to the extractor model for a long answer.
pub fn extraction_prompt(long_answer: &str) -> String {
    templates::EXTRACTION_TEMPLATE.replace("{answer}", long_answer)
}

/// Asks the extractor model for the choice stated in `long_answer`.
pub fn extract_choice(
    long_answer: &str,
    extractor: &dyn ChatModel,
    extractor_model: &str,
    seed: Option<u64>,
) -> Result<Extracted, LlmError> {
    let mut request = CompletionRequest::new(
        extractor_model,
        templates::SYSTEM_PROMPT,
        &extraction_prompt(long_answer),
    )
    .with_params(EXTRACTION_TEMPERATURE, EXTRACTION_MAX_TOKENS);
    if let Some(seed) = seed {
        request = request.with_seed(seed);
    }
    let response = extractor.complete(&request)?;
    Ok(parse_extractor_reply(&response.text))
}

/// The filled verifier prompt for one long answer.
pub fn verifier_prompt(long_answer: &str, game: &Game, mapping: LabelMapping) -> String {
    templates::VERIFIER_TEMPLATE
        .replace("{rules}", &outcome_lines(game, mapping))
        .replace("{answer}", long_answer)
}

/// Asks the verifier model to grade a long answer against the game rules.
pub fn verify_logic(
    long_answer: &str,
    game: &Game,
    mapping: LabelMapping,
    verifier: &dyn ChatModel,
    verifier_model: &str,
    seed: Option<u64>,
) -> Result<Verdict, LlmError> {
    let mut request = CompletionRequest::new(
        verifier_model,
        templates::SYSTEM_PROMPT,
        &verifier_prompt(long_answer, game, mapping),
    )
    .with_params(VERIFIER_TEMPERATURE, VERIFIER_MAX_TOKENS);
    if let Some(seed) = seed {
        request = request.with_seed(seed);
    }
    let response = verifier.complete(&request)?;
    Ok(parse_verdict(&response.text))
}
