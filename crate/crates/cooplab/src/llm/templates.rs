//! Prompt text used by the chat pipeline.
//!
//! The game instruction, multi-step block, and verifier text are fixed;
//! `{outcomes}`, `{rules}` and `{answer}` are the only substitution points.
//! The extraction instruction is this project's own wording.

pub const SYSTEM_PROMPT: &str = "You are a helpful assistant";

/// Game instructions; `{outcomes}` receives the four outcome lines.
pub const INSTRUCTION_TEMPLATE: &str = "This one-shot game, is made of only one round with an anonymous player. You will play only once.

To play you must choose one of two options: A and B, the other player will also choose between A and B. Both players are subjected to the same rules.

You won't know the other player decision until the end of the round so you won't be able to change your choice after knowing the other player's decision.
The other player won't know your decision until the end of the round so he won't be able to change his choice after knowing yours.

You will be playing simultaneously with the other player.

Both players will receive a monetary prize. The monetary prize for the player will be the amount of points the player has earned multiplied by 10.

For example, if player 1 earns 9 points and player 2 earns 5 points.
Player 1 will receive 9*10 = 90 euros and player 2 will receive 10*5= 50 euros.

The monetary prize of each player only depends on his number of points.
The difference in points of both players has no effect on the prize.

Both players will receive the prize, regardless of who earned more or less money.
The outcome is solely determined by the number of points earned by each player.


{outcomes}";

/// Appended for the simple one-word stage.
pub const SIMPLE_ANSWER_SUFFIX: &str = "Answer with exactly one letter: A or B.";

/// Reasoning scaffold appended after the outcome description for the
/// multi-step and verified stages.
pub const MULTI_STEP_BLOCK: &str = "1. There are four possible outcomes in this game,
depending on your choice (A or B) and the other player's choice (A or B).
2. Group the outcomes based on your decision:
   - If you choose A: (A,A) and (A,B)
   - If you choose B: (B,A) and (B,B)
3. Analyze and compare the outcomes in each group step by step.
4. Make sure your analysis is consistent with the rules of the game
and the possible outcomes.
5. Based on your analysis, choose either A or B.";

/// Sent to the extractor model; `{answer}` receives the long answer.
pub const EXTRACTION_TEMPLATE: &str = "You will be given the answer a player wrote in a two-option game. Identify only the player's choice: A or B.

Reply with exactly one letter, A or B. If the answer does not commit to either option, reply NONE.

Answer of the player:
{answer}";

/// Sent to the verifier model; `{rules}` receives the four outcome lines
/// of the game under review and `{answer}` the long answer to grade.
pub const VERIFIER_TEMPLATE: &str = "You have to read the answer of Player 1 and output good or bad
according to the following criteria:

Criteria for good:
 - ALL arithmetic/mathematic comparisons and claims are CORRECT.
 - ALL descriptions of the possible outcomes are CORRECT.
 - ONLY TWO possible outputs per choice, for A: (A,A) and (A,B), for B: (B,A) and (B,B).
 - The final choice is CONSISTENT with the previous reasoning.
 - ALL statements make sense.
 - GOOD UNDERSTANDING of the rules.

Criteria for bad:
 - ONE OR MORE arithmetic/mathematic comparisons or claims are WRONG.
 - ONE OR MORE descriptions of the possible outcomes are WRONG.
 - Does not understand that there are ONLY TWO possible outcomes per choice.
 - Final choice is NOT CONSISTENT with the previous reasoning.
 - ONE OR MORE statements do not make sense.
 - BAD UNDERSTANDING of the rules.

Rules of the game:
{rules}

Example 1, bad reasoning:

Rules of Example 1:

If you choose A and the other player chooses A. You earn 10 points, the other player earns 10 points.
If you choose A and the other player chooses B. You earn 7 points, the other player earns 6 points.
If you choose B and the other player chooses A.
You earn 6 points, the other player earns 7 points.
If you choose B and the other player chooses B. You earn 5 points, the other player earns 5 points.

Answer of Example 1:

Based on the rules and possible outcomes, here's the analysis:

- If you choose A, you can earn either 10 points (if the other player chooses A) or 7 points (if the other player chooses B).
- If you choose B, you can earn either 5 points (if the other player chooses B) or 6 points (if the other player chooses A).

However, the rules state that the difference in points between you and the other player has no effect on the prize.
Therefore, it comes down to the following:

- If you choose A, the highest possible prize is 10 points, but the lowest possible prize is 7 points.
- If you choose B, the highest possible prize is 5 points, but the lowest possible prize is 6 points.

Since the goal is to maximize the possible prize, it would seem that choosing A gives you the potential for a higher prize (100 euros) compared to choosing B (60 euros as the highest potential prize).
However, it's important to keep in mind that the other player is making the same analysis as well, so it might be wiser to choose B to reduce the chances of both players choosing A
and thus reducing the potential prize for both.

As this is a one-shot game, it's difficult to say for certain which choice will lead to a higher average prize for both players. It could be a game of bluff and strategy rather than a purely mathematical decision.

In this analysis, I would lean towards choosing B, to potentially lower the chances of both players receiving a lower prize, but it's ultimately up to your personal decision.

Output of Example 1: bad

Example 2, good reasoning:

Rules of Example 2:

If you choose A and the other player chooses A. You earn 10 points, the other player earns 10 points.
If you choose A and the other player chooses B. You earn 10 points, the other player earns 6 points.
If you choose B and the other player chooses A. You earn 6 points, the other player earns 10 points.
If you choose B and the other player chooses B. You earn 5 points, the other player earns 5 points.

Answer of Example 2:

To make a decision, let's analyze the outcomes based on the rules and possible outcomes:

1. If you choose A:
    - (A,A): Both players earn 10 points each.
    - (A,B): You earn 10 points, and the other player earns 6 points.

2. If you choose B:
    - (B,A): You earn 6 points, and the other player earns 10 points.
    - (B,B): Both players earn 5 points each.

3. Since the monetary prize for each player is the number of points multiplied by 10, it is clear that earning more points results in a higher prize.

4. Comparing the outcomes in each group:
    - If you choose A: (A,A) gives you the highest reward, and (A,B) gives you the same reward but a lower-one for the other player.
    - If you choose B: (B,B) gives you the lowest reward, and (B,A) gives a slightly higher reward, but still lower than all possible rewards when choosing A.

5. Based on this information, choosing A would result in a higher potential reward, making it the better choice.
Even though one might worry about the other player choice, it doesn't make sense since the only possible outcome of choosing A is 10 points, which is the maximum.
The other player choice isn't going to affect your outcome at all, there is no risk.

Output of Example 2: good

Example 3, bad reasoning:

Rules of Example 3:

If you choose A and the other player chooses A. You earn 10 points, the other player earns 10 points.
If you choose A and the other player chooses B. You earn 9 points, the other player earns 15 points.
If you choose B and the other player chooses A. You earn 15 points, the other player earns 9 points.
If you choose B and the other player chooses B. You earn 5 points, the other player earns 5 points.

Answer of Example 3:

Let's analyze the outcomes:
- If you choose A, the probability of the other player also choosing A is 50
In this case, you would earn 10 points, and the other player would also earn 10 points (outcome A,A).
The other possibility is that the other player chooses B, in which case you would earn 9 points, and they would earn 15 points (outcome A,B).
- If you choose B, the probability of the other player also choosing B is 25
In this case, you would earn 5 points, and the other player would also earn 5 points (outcome B,B).
The other possibility is that the other player chooses A, in which case you would earn 15 points, and they would earn 9 points (outcome B,A).

Now, let's compare the outcomes:
- If you choose A, you have two possible outcomes: one with a higher reward (10 points) and one with a lower reward (9 points).
- If you choose B, you have two possible outcomes: one with a lower reward (5 points) and one with a higher reward (15 points).

Since you don't know the other player's choice, it's impossible to determine the exact outcome.
However, it's interesting to note that if the other player chooses A, choosing A would result in a lower reward (9 points) compared to choosing B (15 points).
On the other hand, if the other player chooses B, choosing A would result in a higher reward (10 points) compared to choosing B (5 points).
Given this analysis, it seems that choosing B gives you the potential for a higher reward, but it's also possible that the other player will choose A in which case you would have a lower reward.
It's truly a gamble. In this game, there is no optimal strategy as the game relies on the other player's choice, which remains unknown.
Therefore, it's hard to make a definitive choice between A and B as there is no clear advantage in either option.
Based on the analysis and the lack of a perfect answer, I'll leave the choice up to you.
You can choose either A or B as there's no guaranteed outcome. Good luck!

Output of Example 3: bad

Example 4, good reasoning:

Rules of Example 4:

If you choose B and the other player chooses B. You earn 10 points, the other player earns 10 points.
If you choose B and the other player chooses A. You earn 8 points, the other player earns 5 points.
If you choose A and the other player chooses B. You earn 5 points, the other player earns 8 points.
If you choose A and the other player chooses A. You earn 5 points, the other player earns 5 points.

Answer of Example 4:

Based on the given information, I will analyze the outcomes for each choice:

If you choose A:
- If the other player chooses A, you both will receive 5 points each.
- If the other player chooses B, you will receive 5 points, while the other player receives 8 points.

If you choose B:
- If the other player chooses A, you will receive 8 points, while the other player receives 5 points.
- If the other player chooses B, you both will receive 10 points each.

If you choose B, the maximum amount of points you can get is 10 points and the minimum, 8 points.
If you choose A the maximum amount of points you can get is 5 points and the minimum, 5 points.
The maximum points is greater when you choose B, leading to a higher prize.
The minimum points is greater when you choose B, leading to a lower risk of getting little points.
Then, choice B is optimal since it is the option with the highest reward and the lower risk.

Output of Example 4: good

Example 5, bad reasoning:

Rules of Example 5:

If you choose B and the other player chooses B. You earn 10 points, the other player earns 10 points.
If you choose B and the other player chooses A. You earn 10 points, the other player earns 7 points.
If you choose A and the other player chooses B. You earn 6 points, the other player earns 10 points.
If you choose A and the other player chooses A. You earn 5 points, the other player earns 5 points.

Answer of Example 5:

Given the rules, choosing A would bring a maximum of 5 points, and choosing B would bring a maximum of 10 points if the other player also chooses B.
Since we don't know the other player's choice, it's impossible to guarantee a higher score by choosing A or B.
However, if we're forced to make a choice, choosing B seems like the better option since it has a higher potential reward if the other player also chooses B.
But, ultimately, this game is a gamble, and both choices have an element of risk.

Outcome of Example 5: bad

Example 6, good reasoning:

Rules of Example 6:

If you choose A and the other player chooses A. You earn 10 points, the other player earns 10 points.
If you choose A and the other player chooses B. You earn 1 points, the other player earns 15 points.
If you choose B and the other player chooses A. You earn 15 points, the other player earns 1 points.
If you choose B and the other player chooses B. You earn 5 points, the other player earns 5 points.

Answer of Example 6:

Choosing A can lead to the worst result (earning only 1 point) and choosing B can lead to the best result (earning 15 points).
Then I choose B to earn at least 5 points and also have the potential to the highest reward.

Output of Example 6: good

Rules of game to analyze:
{rules}

Answer of Player 1, to analyze:
{answer}

Important:
- Output ONLY one word: good or bad
- Do not add punctuation, extra spaces, or explanations.";
