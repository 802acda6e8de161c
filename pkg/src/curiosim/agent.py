"""The curious agent: arrival-driven collection, gated answering, teaching.

Each tick the agent draws information arrivals from its own diffusion
hazard, absorbs the delivered batches into its knowledge store (gated by
a payload schema check), and periodically sleeps.  Queries are answered
with a match only when the nearest stored item is close enough AND the
agent's confidence clears its floor; everything else is an explicit
"I don't know", which invites teaching.  Confidence follows answer
outcomes by exponential smoothing, and a durability score tracks how
long correct answers keep serving per topic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import BassParams, step_arrivals
from .distributions import estimate_mvn
from .knowledge import KnowledgeStore, ReceiveOutcome
from .projection import apply_rows

DEFAULT_CONFIDENCE = 0.5
DEFAULT_THETA_CONF = 0.2
DEFAULT_BETA = 0.1
DEFAULT_SLEEP_PERIOD = 50

MATCH = "match"
I_DONT_KNOW = "i_dont_know"


@dataclass(frozen=True)
class Answer:
    """Either a matched item or an explicit request to be taught."""

    kind: str  # MATCH | I_DONT_KNOW
    item_id: int | None
    distance: float  # best distance found; +inf when the store is empty
    confidence_at_answer: float

    @property
    def is_match(self) -> bool:
        return self.kind == MATCH


@dataclass(frozen=True)
class AnswerEvent:
    """One judged evaluation query, as remembered by the agent."""

    tick: int
    topic: int
    correct: bool


@dataclass(frozen=True)
class JudgedAnswer:
    """An answer together with the queried topic and its verdict."""

    answer: Answer
    topic: int
    correct: bool  # False for i_dont_know (the decision did not serve)


@dataclass(frozen=True)
class TickReport:
    time: float
    arrivals: int
    outcomes: tuple[ReceiveOutcome, ...]
    rejected: int  # schema-gate rejects, quarantined rather than absorbed
    answers: tuple[JudgedAnswer, ...]
    answers_correct: int
    teachings: int
    slept: bool
    sleep_merges: int


class Agent:
    """A curiosity-parameterized learner wrapping one knowledge store."""

    def __init__(
        self,
        agent_id: int,
        curiosity: BassParams,
        store: KnowledgeStore,
        confidence: float = DEFAULT_CONFIDENCE,
        theta_conf: float = DEFAULT_THETA_CONF,
        beta: float = DEFAULT_BETA,
        sleep_period: int = DEFAULT_SLEEP_PERIOD,
        store_cap: int | None = None,
    ):
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {confidence}")
        if not 0.0 < beta <= 1.0:
            raise ValueError(f"smoothing rate must be in (0, 1], got {beta}")
        if sleep_period < 1:
            raise ValueError(f"sleep period must be >= 1, got {sleep_period}")
        self.id = agent_id
        self.curiosity = curiosity
        self.store = store
        self.confidence = confidence
        self.theta_conf = theta_conf
        self.beta = beta
        self.sleep_period = sleep_period
        self.store_cap = store_cap
        self.adopted_items = 0
        self.ticks_completed = 0
        self.answer_events: list[AnswerEvent] = []
        self._streaks: dict[int, int] = {}
        self.last_sleep_merges = 0

    # -- the while-loop body --------------------------------------------

    def tick(self, env, now: float, dt: float, rng: np.random.Generator,
             eval_queries: int = 0) -> TickReport:
        """Advance one step: collect arrivals, absorb, answer, maybe sleep."""
        draws, _ = step_arrivals(self.curiosity, self.adopted_items, dt, rng)

        outcomes: list[ReceiveOutcome] = []
        rejected = 0
        for _ in range(draws):
            _, batch = env.draw_batch(rng)
            if not self._payload_ok(batch):
                rejected += 1  # back to the language classroom
                continue
            outcomes.append(self.store.receive(batch, now))
        self.adopted_items += draws

        answers: list[JudgedAnswer] = []
        correct_count = 0
        teachings = 0
        for _ in range(eval_queries):
            topic, query = env.draw_batch(rng)
            ans = self.answer(query)
            if ans.is_match:
                correct = env.judge_item(self.store, ans.item_id, topic)
                self.update_confidence("correct" if correct else "incorrect")
                correct_count += int(correct)
            else:
                correct = False
                self.teach(query, now)
                teachings += 1
            self.record_answer(topic, correct)
            answers.append(JudgedAnswer(answer=ans, topic=topic, correct=correct))

        self.ticks_completed += 1
        slept = self.ticks_completed % self.sleep_period == 0
        merges = 0
        if slept:
            report = self.store.sleep(max_items=self.store_cap)
            merges = report.merges
            self.last_sleep_merges = merges

        return TickReport(
            time=now, arrivals=draws, outcomes=tuple(outcomes), rejected=rejected,
            answers=tuple(answers), answers_correct=correct_count,
            teachings=teachings, slept=slept, sleep_merges=merges)

    def _payload_ok(self, batch) -> bool:
        batch = np.asarray(batch)
        return (batch.ndim == 2 and batch.shape[0] >= 2
                and batch.shape[1] == self.store.payload_dim
                and bool(np.all(np.isfinite(batch))))

    # -- answering ------------------------------------------------------

    def answer(self, query: np.ndarray) -> Answer:
        """Match a query against the store, or admit not knowing.

        Read-only: the store is never modified by answering.
        """
        query = np.asarray(query, dtype=float)
        if query.ndim != 2 or query.shape[1] != self.store.payload_dim:
            raise ValueError(
                f"query must be n x {self.store.payload_dim}, got shape {query.shape}")
        if query.shape[0] < 2:
            raise ValueError(f"need at least 2 samples per query, got {query.shape[0]}")
        summary = estimate_mvn(apply_rows(self.store.projector, query))
        item_id, distance = self.store.nearest_item(summary)
        if (item_id is not None and distance <= self.store.theta_link
                and self.confidence >= self.theta_conf):
            return Answer(kind=MATCH, item_id=item_id, distance=distance,
                          confidence_at_answer=self.confidence)
        return Answer(kind=I_DONT_KNOW, item_id=None, distance=distance,
                      confidence_at_answer=self.confidence)

    def teach(self, query: np.ndarray, now: float) -> ReceiveOutcome:
        """Absorb the asker's material and take the lesson as encouragement."""
        outcome = self.store.receive(query, now)
        self.update_confidence("taught")
        return outcome

    def update_confidence(self, outcome: str) -> float:
        """Exponentially smooth confidence toward 1 (correct/taught) or 0."""
        if outcome in ("correct", "taught"):
            reward = 1.0
        elif outcome == "incorrect":
            reward = 0.0
        else:
            raise ValueError(f"unknown outcome {outcome!r}")
        self.confidence = min(max((1.0 - self.beta) * self.confidence
                                  + self.beta * reward, 0.0), 1.0)
        return self.confidence

    # -- durability metric ------------------------------------------------

    def record_answer(self, topic: int, correct: bool) -> None:
        """Extend or reset the per-topic streak of consecutive correct answers."""
        self._streaks[topic] = self._streaks.get(topic, 0) + 1 if correct else 0
        self.answer_events.append(
            AnswerEvent(tick=self.ticks_completed, topic=topic, correct=correct))

    def intelligence_score(self, window: int) -> float:
        """Decision durability over the recent window.

        The mean, over evaluation queries issued in the last ``window``
        ticks, of the topic's current streak of consecutive correct
        answers; 0 when no queries landed or nothing ever held.
        """
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        cutoff = self.ticks_completed - window
        recent = [ev for ev in self.answer_events if ev.tick >= cutoff]
        if not recent:
            return 0.0
        return sum(self._streaks.get(ev.topic, 0) for ev in recent) / len(recent)


def peer_teach(donor: Agent, item_id: int, recipient: Agent, now: float) -> ReceiveOutcome:
    """Seed one agent's store with another's matched item summary.

    Requires both stores to share the same projection so the summaries
    live in one comparable space.
    """
    if donor.store.k != recipient.store.k:
        raise ValueError("peer teaching requires stores of equal reduced dimension")
    item = donor.store.items[item_id]
    outcome = recipient.store.absorb_stats(item.stats, now)
    recipient.update_confidence("taught")
    return outcome
