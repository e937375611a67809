//! Chat pipeline for playing games against a language model: randomized
//! strategy labels, prompt construction, a chat-completions client, and the
//! staged extraction and verification chain.

pub mod client;
pub mod extract;
pub mod mock;
pub mod templates;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Choice, Game};

/// One of the two neutral option labels shown to the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

impl Label {
    pub fn other(self) -> Label {
        match self {
            Label::A => Label::B,
            Label::B => Label::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
        }
    }
}

/// Which label stands for cooperation in one play.
///
/// Labels are drawn per play so that aggregate rates cannot pick up a
/// lexical preference for A over B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMapping {
    /// A means cooperate, B means defect.
    ACooperates,
    /// B means cooperate, A means defect.
    BCooperates,
}

impl LabelMapping {
    /// Uniform draw over the two mappings.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        if rng.gen_bool(0.5) {
            LabelMapping::ACooperates
        } else {
            LabelMapping::BCooperates
        }
    }

    /// Fixed mapping with A meaning cooperate; used by tests that need to
    /// pin prompt text.
    pub fn identity() -> Self {
        LabelMapping::ACooperates
    }

    pub fn label_for(self, choice: Choice) -> Label {
        match (self, choice) {
            (LabelMapping::ACooperates, Choice::Cooperate) => Label::A,
            (LabelMapping::ACooperates, Choice::Defect) => Label::B,
            (LabelMapping::BCooperates, Choice::Cooperate) => Label::B,
            (LabelMapping::BCooperates, Choice::Defect) => Label::A,
        }
    }

    pub fn choice_for(self, label: Label) -> Choice {
        if self.label_for(Choice::Cooperate) == label {
            Choice::Cooperate
        } else {
            Choice::Defect
        }
    }
}

/// The four pipeline variants, ordered by increasing machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Ask for a one-letter answer and parse it directly.
    Simple,
    /// Ask for a long answer, then extract the choice with a second model.
    Double,
    /// Long answer guided by the step-by-step block, then extraction.
    MultiStep,
    /// Multi-step plus a logical verifier gating extraction.
    Verified,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Simple => "simple",
            Stage::Double => "double",
            Stage::MultiStep => "multi_step",
            Stage::Verified => "verified",
        }
    }
}

/// The system and user text for one play.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
    pub stage: Stage,
}

/// The four outcome lines of the game under a label mapping, in the fixed
/// order (A,A), (A,B), (B,A), (B,B).
pub fn outcome_lines(game: &Game, mapping: LabelMapping) -> String {
    let line = |me: Label, other: Label| {
        let mine = game.payoff(mapping.choice_for(me), mapping.choice_for(other));
        let theirs = game.payoff(mapping.choice_for(other), mapping.choice_for(me));
        format!(
            "If you choose {} and the other player chooses {}. You earn {} points, the other player earns {} points.",
            me.as_str(),
            other.as_str(),
            mine,
            theirs
        )
    };
    [
        line(Label::A, Label::A),
        line(Label::A, Label::B),
        line(Label::B, Label::A),
        line(Label::B, Label::B),
    ]
    .join("\n")
}

/// Builds the full prompt for a play. The instruction text is fixed except
/// for the substituted outcome lines; the multi-step and verified stages
/// append the reasoning block, the simple stage a one-letter instruction.
pub fn build_prompt(game: &Game, mapping: LabelMapping, stage: Stage) -> PromptBundle {
    let instructions = templates::INSTRUCTION_TEMPLATE.replace("{outcomes}", &outcome_lines(game, mapping));
    let user = match stage {
        Stage::Simple => format!("{instructions}\n\n{}", templates::SIMPLE_ANSWER_SUFFIX),
        Stage::Double => instructions,
        Stage::MultiStep | Stage::Verified => {
            format!("{instructions}\n\n{}", templates::MULTI_STEP_BLOCK)
        }
    };
    PromptBundle {
        system: templates::SYSTEM_PROMPT.to_string(),
        user,
        stage,
    }
}

/// Payoffs recovered from a prompt's outcome lines, keyed by label pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParsedOutcomes {
    /// My payoff for (my label, other's label) in (A,A), (A,B), (B,A), (B,B) order.
    pub mine: [i32; 4],
    /// The other player's payoff in the same order.
    pub theirs: [i32; 4],
}

impl ParsedOutcomes {
    /// The label whose mutual play pays more, i.e. the cooperation label
    /// whenever mutual cooperation beats mutual defection.
    pub fn cooperate_label(&self) -> Option<Label> {
        match self.mine[0].cmp(&self.mine[3]) {
            std::cmp::Ordering::Greater => Some(Label::A),
            std::cmp::Ordering::Less => Some(Label::B),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// Reconstructs (R, S, T, P) given which label means cooperate.
    pub fn to_game(&self, cooperate: Label) -> Game {
        match cooperate {
            Label::A => Game::new(self.mine[0], self.mine[1], self.mine[2], self.mine[3]),
            Label::B => Game::new(self.mine[3], self.mine[2], self.mine[1], self.mine[0]),
        }
    }
}

/// Parses the four outcome lines back out of prompt text. Returns `None`
/// unless exactly the four label pairs are present and well formed.
pub fn parse_outcome_lines(text: &str) -> Option<ParsedOutcomes> {
    let mut mine = [None::<i32>; 4];
    let mut theirs = [None::<i32>; 4];
    for line in text.lines() {
        let rest = match line.strip_prefix("If you choose ") {
            Some(r) => r,
            None => continue,
        };
        let mut chars = rest.chars();
        let me = match chars.next() {
            Some('A') => Label::A,
            Some('B') => Label::B,
            _ => continue,
        };
        let rest = chars.as_str().strip_prefix(" and the other player chooses ")?;
        let mut chars = rest.chars();
        let other = match chars.next() {
            Some('A') => Label::A,
            Some('B') => Label::B,
            _ => continue,
        };
        let rest = chars.as_str().strip_prefix(". You earn ")?;
        let (my_points, rest) = take_int(rest)?;
        let rest = rest.strip_prefix(" points, the other player earns ")?;
        let (their_points, rest) = take_int(rest)?;
        if rest != " points." {
            return None;
        }
        let idx = match (me, other) {
            (Label::A, Label::A) => 0,
            (Label::A, Label::B) => 1,
            (Label::B, Label::A) => 2,
            (Label::B, Label::B) => 3,
        };
        if mine[idx].replace(my_points).is_some() {
            return None;
        }
        theirs[idx] = Some(their_points);
    }
    Some(ParsedOutcomes {
        mine: [mine[0]?, mine[1]?, mine[2]?, mine[3]?],
        theirs: [theirs[0]?, theirs[1]?, theirs[2]?, theirs[3]?],
    })
}

fn take_int(text: &str) -> Option<(i32, &str)> {
    let end = text
        .char_indices()
        .take_while(|(_, c)| c.is_ascii_digit() || *c == '-')
        .map(|(i, c)| i + c.len_utf8())
        .last()?;
    text[..end].parse().ok().map(|n| (n, &text[end..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn label_round_trip() {
        for mapping in [LabelMapping::ACooperates, LabelMapping::BCooperates] {
            for choice in [Choice::Cooperate, Choice::Defect] {
                assert_eq!(mapping.choice_for(mapping.label_for(choice)), choice);
            }
        }
    }

    #[test]
    fn random_mapping_is_seeded_and_uniform() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(LabelMapping::random(&mut a), LabelMapping::random(&mut b));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let a_coop = (0..n)
            .filter(|_| LabelMapping::random(&mut rng) == LabelMapping::ACooperates)
            .count();
        let frac = a_coop as f64 / n as f64;
        assert!((0.48..=0.52).contains(&frac), "got {frac}");
    }

    #[test]
    fn prompt_carries_substituted_outcomes() {
        let bundle = build_prompt(
            &Game::from_st(6, 11),
            LabelMapping::identity(),
            Stage::Double,
        );
        assert!(bundle
            .user
            .contains("If you choose A and the other player chooses A. You earn 10 points"));
        assert!(bundle
            .user
            .contains("If you choose A and the other player chooses B. You earn 6 points, the other player earns 11 points."));
        assert!(bundle.user.contains("This one-shot game, is made of only one round"));
        assert!(bundle.user.contains("9*10 = 90 euros"));
        assert_eq!(bundle.system, "You are a helpful assistant");
    }

    #[test]
    fn stages_differ_only_in_the_suffix() {
        let game = Game::from_st(3, 12);
        let mapping = LabelMapping::identity();
        let double = build_prompt(&game, mapping, Stage::Double);
        let simple = build_prompt(&game, mapping, Stage::Simple);
        let multi = build_prompt(&game, mapping, Stage::MultiStep);
        let verified = build_prompt(&game, mapping, Stage::Verified);
        assert!(simple.user.starts_with(&double.user));
        assert!(simple.user.ends_with("Answer with exactly one letter: A or B."));
        assert!(multi.user.starts_with(&double.user));
        assert!(multi
            .user
            .contains("Analyze and compare the outcomes in each group step by step."));
        assert_eq!(multi.user, verified.user);
    }

    #[test]
    fn prompt_is_pure() {
        let game = Game::from_st(0, 20);
        for stage in [Stage::Simple, Stage::Double, Stage::MultiStep, Stage::Verified] {
            let a = build_prompt(&game, LabelMapping::BCooperates, stage);
            let b = build_prompt(&game, LabelMapping::BCooperates, stage);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn swapped_mapping_swaps_the_payoffs() {
        let lines = outcome_lines(&Game::from_st(6, 11), LabelMapping::BCooperates);
        assert!(lines.contains("If you choose A and the other player chooses A. You earn 5 points"));
        assert!(lines.contains("If you choose B and the other player chooses B. You earn 10 points"));
        assert!(lines.contains("If you choose A and the other player chooses B. You earn 11 points, the other player earns 6 points."));
    }

    proptest! {
        #[test]
        fn outcome_lines_round_trip_to_the_payoff_function(
            s in 0i32..=20, t in 0i32..=20, b_cooperates in proptest::bool::ANY,
        ) {
            let game = Game::from_st(s, t);
            let mapping = if b_cooperates {
                LabelMapping::BCooperates
            } else {
                LabelMapping::ACooperates
            };
            let parsed = parse_outcome_lines(&outcome_lines(&game, mapping)).unwrap();
            // R = 10 > 5 = P, so the cooperation label is recoverable.
            let label = parsed.cooperate_label().unwrap();
            prop_assert_eq!(label, mapping.label_for(Choice::Cooperate));
            prop_assert_eq!(parsed.to_game(label), game);
        }
    }
}
