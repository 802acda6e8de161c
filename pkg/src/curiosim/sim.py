"""Batch simulation harness: environment, configuration, runner, metrics.

A run advances a population of agents tick-by-tick against a shared
environment of Gaussian topic sources, issues evaluation queries on a
fixed schedule (teaching on every "I don't know"), and emits one metrics
row per agent per tick.  Everything is reproducible from (config, seed):
agents own independent random streams, so sequential and parallel
execution produce identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .agent import Agent, TickReport, peer_teach
from .diffusion import BassParams, installed_fraction
from .distributions import MvnSummary
from .knowledge import (
    DEFAULT_ALPHA,
    DEFAULT_EXPECTED_POINTS,
    DEFAULT_THETA_LINK,
    DEFAULT_THETA_MERGE,
    KnowledgeStore,
)
from .projection import JlMap, jl_min_dimension

METRICS_HEADER = [
    "tick", "agent_id", "adopted", "store_size", "link_count",
    "answers_correct", "answers_idk", "teachings", "confidence",
    "intelligence_score", "last_sleep_merges",
]


class ConfigError(ValueError):
    """A configuration document failed validation."""


@dataclass(frozen=True)
class TopicConfig:
    """One Gaussian information source."""

    mean: list[float]
    scale: float | None = None       # isotropic std; exclusive with cov
    cov: list[list[float]] | None = None

    def covariance(self, dim: int) -> np.ndarray:
        if (self.scale is None) == (self.cov is None):
            raise ConfigError("topic needs exactly one of 'scale' or 'cov'")
        if self.scale is not None:
            if not self.scale > 0:
                raise ConfigError(f"topic scale must be > 0, got {self.scale}")
            return self.scale * self.scale * np.eye(dim)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (dim, dim):
            raise ConfigError(f"topic cov must be {dim} x {dim}, got {cov.shape}")
        return cov


@dataclass(frozen=True)
class EnvironmentConfig:
    payload_dim: int
    batch_size: int
    topics: list[TopicConfig]
    weights: list[float] | None = None


@dataclass(frozen=True)
class AgentConfig:
    p: float
    q: float
    m: float
    theta_link: float = DEFAULT_THETA_LINK
    theta_merge: float = DEFAULT_THETA_MERGE
    theta_conf: float = 0.2
    alpha: float = DEFAULT_ALPHA
    beta: float = 0.1
    sleep_period: int = 50
    confidence: float = 0.5
    max_items: int | None = None


@dataclass(frozen=True)
class SimConfig:
    seed: int
    ticks: int
    dt: float
    agents: list[AgentConfig]
    environment: EnvironmentConfig
    epsilon: float
    eval_period: int = 5
    eval_queries: int = 1
    out_dir: str = "results"
    scenario_type: str = "gaussian"
    peer_teaching: bool = False
    intelligence_window: int = 50
    projection_k: int | None = None   # explicit reduced dimension; default sizes from epsilon
    expected_points: int = DEFAULT_EXPECTED_POINTS

    def validate(self) -> None:
        if self.ticks < 1:
            raise ConfigError(f"ticks must be >= 1, got {self.ticks}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.scenario_type != "gaussian":
            raise ConfigError(
                f"unsupported scenario_type {self.scenario_type!r} (this build runs 'gaussian')")
        if not self.agents:
            raise ConfigError("need at least one agent")
        if self.eval_period < 1 or self.eval_queries < 0:
            raise ConfigError("eval_period must be >= 1 and eval_queries >= 0")
        if self.intelligence_window < 1:
            raise ConfigError("intelligence_window must be >= 1")
        env = self.environment
        if env.payload_dim < 1:
            raise ConfigError("payload_dim must be >= 1")
        if env.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {env.batch_size}")
        if not env.topics:
            raise ConfigError("need at least one topic")
        if env.weights is not None:
            if len(env.weights) != len(env.topics):
                raise ConfigError("topic weights must match the number of topics")
            total = sum(env.weights)
            if any(w < 0 for w in env.weights) or abs(total - 1.0) > 1e-9:
                raise ConfigError(f"topic weights must be non-negative and sum to 1, got {total}")
        for i, agent in enumerate(self.agents):
            for name in ("theta_link", "theta_merge", "theta_conf", "alpha", "beta"):
                if not getattr(agent, name) > 0:
                    raise ConfigError(f"agents[{i}].{name} must be positive")
            if agent.sleep_period < 1:
                raise ConfigError(f"agents[{i}].sleep_period must be >= 1")
            BassParams(p=agent.p, q=agent.q, m=agent.m)  # reuse its invariants

    def to_dict(self) -> dict:
        doc = asdict(self)
        # asdict keeps None entries; drop them so TOML/JSON stay clean
        doc["agents"] = [{k: v for k, v in a.items() if v is not None}
                         for a in doc["agents"]]
        doc["environment"]["topics"] = [
            {k: v for k, v in t.items() if v is not None}
            for t in doc["environment"]["topics"]]
        if doc["environment"]["weights"] is None:
            del doc["environment"]["weights"]
        if doc["projection_k"] is None:
            del doc["projection_k"]
        return doc

    @staticmethod
    def from_dict(doc: dict) -> SimConfig:
        try:
            env_doc = dict(doc["environment"])
            topics = [TopicConfig(**t) for t in env_doc.pop("topics")]
            environment = EnvironmentConfig(topics=topics, **env_doc)
            agents = [AgentConfig(**a) for a in doc["agents"]]
            rest = {k: v for k, v in doc.items() if k not in ("environment", "agents")}
            config = SimConfig(agents=agents, environment=environment, **rest)
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc.args[0]}") from None
        except TypeError as exc:
            raise ConfigError(f"bad config structure: {exc}") from None
        config.validate()
        return config

    @staticmethod
    def from_toml(path: str) -> SimConfig:
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as handle:
            try:
                doc = tomllib.load(handle)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from None
        return SimConfig.from_dict(doc)


class Environment:
    """Gaussian topic sources delivering fixed-size sample batches."""

    def __init__(self, config: EnvironmentConfig):
        self.payload_dim = config.payload_dim
        self.batch_size = config.batch_size
        self.means = [np.asarray(t.mean, dtype=float) for t in config.topics]
        for i, mean in enumerate(self.means):
            if mean.shape != (self.payload_dim,):
                raise ConfigError(
                    f"topics[{i}].mean must have length {self.payload_dim}")
        self.covs = [t.covariance(self.payload_dim) for t in config.topics]
        self._chols = []
        for i, cov in enumerate(self.covs):
            try:
                self._chols.append(np.linalg.cholesky(cov))
            except np.linalg.LinAlgError:
                raise ConfigError(f"topics[{i}].cov is not positive definite") from None
        if config.weights is None:
            self.weights = np.full(len(self.means), 1.0 / len(self.means))
        else:
            weights = np.asarray(config.weights, dtype=float)
            self.weights = weights / weights.sum()

    @property
    def n_topics(self) -> int:
        return len(self.means)

    def draw_batch(self, rng: np.random.Generator,
                   topic: int | None = None) -> tuple[int, np.ndarray]:
        """Sample one batch; the topic is weight-chosen unless forced."""
        if topic is None:
            topic = int(rng.choice(self.n_topics, p=self.weights))
        z = rng.standard_normal((self.batch_size, self.payload_dim))
        return topic, self.means[topic] + z @ self._chols[topic].T

    def true_summary(self, topic: int, projector: JlMap) -> MvnSummary:
        """The exact distribution of a topic pushed through a projection."""
        mean, cov = self.means[topic], self.covs[topic]
        if projector.is_identity:
            return MvnSummary(dim=projector.k, mean=mean, cov=cov, n=0)
        m = projector.scale * projector.matrix
        return MvnSummary(dim=projector.k, mean=m @ mean, cov=m @ cov @ m.T, n=0)

    def judge_item(self, store: KnowledgeStore, item_id: int, topic: int) -> bool:
        """Ground-truth verdict: does the item belong to the queried topic?

        The item is attributed to whichever topic's projected true
        distribution it is closest to.
        """
        from .distance import bc_mvn

        summary = store.items[item_id].summary()
        distances = [bc_mvn(summary, self.true_summary(t, store.projector)).distance
                     for t in range(self.n_topics)]
        return int(np.argmin(distances)) == topic


@dataclass
class MetricsRow:
    tick: int
    agent_id: int
    adopted: int
    store_size: int
    link_count: int
    answers_correct: int
    answers_idk: int
    teachings: int
    confidence: float
    intelligence_score: float
    last_sleep_merges: int

    def as_csv_fields(self) -> list[str]:
        return [
            str(self.tick), str(self.agent_id), str(self.adopted),
            str(self.store_size), str(self.link_count), str(self.answers_correct),
            str(self.answers_idk), str(self.teachings), repr(float(self.confidence)),
            repr(float(self.intelligence_score)), str(self.last_sleep_merges),
        ]


@dataclass
class SimResult:
    config: SimConfig
    metrics: list[MetricsRow]
    agents: list[Agent]


def build_agents(config: SimConfig) -> tuple[list[Agent], Environment]:
    """Construct the environment and agents with one shared projection."""
    env = Environment(config.environment)
    k = config.projection_k
    if k is None:
        k = jl_min_dimension(max(config.expected_points, 2), config.epsilon)
    if k >= env.payload_dim:
        projector = JlMap.identity(env.payload_dim, config.epsilon)
    else:
        projector = JlMap.from_seed(env.payload_dim, k, config.epsilon, config.seed)
    agents = []
    for i, spec in enumerate(config.agents):
        store = KnowledgeStore(projector=projector, alpha=spec.alpha,
                               theta_link=spec.theta_link, theta_merge=spec.theta_merge)
        agents.append(Agent(
            agent_id=i, curiosity=BassParams(p=spec.p, q=spec.q, m=spec.m),
            store=store, confidence=spec.confidence, theta_conf=spec.theta_conf,
            beta=spec.beta, sleep_period=spec.sleep_period, store_cap=spec.max_items))
    return agents, env


def run(config: SimConfig, parallel: bool = False) -> SimResult:
    """Execute the configured run; fully determined by (config, seed).

    Each agent owns an independent random stream spawned from the config
    seed, so advancing agents in parallel threads cannot change any
    output.  Peer teaching (when enabled) is applied at the tick barrier.
    """
    config.validate()
    agents, env = build_agents(config)
    streams = [np.random.default_rng(s)
               for s in np.random.SeedSequence(config.seed).spawn(len(agents))]

    metrics: list[MetricsRow] = []
    pool = ThreadPoolExecutor(max_workers=len(agents)) if parallel else None
    try:
        for step in range(1, config.ticks + 1):
            now = step * config.dt
            queries = config.eval_queries if step % config.eval_period == 0 else 0

            def advance(pair: tuple[Agent, np.random.Generator]) -> TickReport:
                agent, rng = pair
                return agent.tick(env, now, config.dt, rng, eval_queries=queries)

            pairs = list(zip(agents, streams))
            if pool is not None:
                reports = list(pool.map(advance, pairs))
            else:
                reports = [advance(pair) for pair in pairs]

            if config.peer_teaching:
                _apply_peer_teaching(agents, reports, now)

            for agent, report in zip(agents, reports):
                idk = sum(1 for j in report.answers if not j.answer.is_match)
                metrics.append(MetricsRow(
                    tick=step, agent_id=agent.id, adopted=agent.adopted_items,
                    store_size=len(agent.store.items),
                    link_count=len(agent.store.links),
                    answers_correct=report.answers_correct, answers_idk=idk,
                    teachings=report.teachings, confidence=agent.confidence,
                    intelligence_score=agent.intelligence_score(config.intelligence_window),
                    last_sleep_merges=agent.last_sleep_merges))
    finally:
        if pool is not None:
            pool.shutdown()
    return SimResult(config=config, metrics=metrics, agents=agents)


def _apply_peer_teaching(agents: list[Agent], reports: list[TickReport],
                         now: float) -> None:
    """Seed stores of agents that answered "I don't know" from peers'
    same-topic correct matches; applied in agent-id order for determinism."""
    for recipient, report in zip(agents, reports):
        for judged in report.answers:
            if judged.answer.is_match:
                continue
            for donor, donor_report in zip(agents, reports):
                if donor.id == recipient.id:
                    continue
                match = next(
                    (j for j in donor_report.answers
                     if j.correct and j.topic == judged.topic
                     and j.answer.item_id in donor.store.items), None)
                if match is not None:
                    peer_teach(donor, match.answer.item_id, recipient, now)
                    break


def metrics_to_csv(metrics: list[MetricsRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for row in metrics:
        writer.writerow(row.as_csv_fields())
    return buffer.getvalue()


def metrics_from_csv(text: str) -> list[MetricsRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != METRICS_HEADER:
        raise ValueError(f"unexpected metrics header: {header}")
    rows = []
    for fields in reader:
        rows.append(MetricsRow(
            tick=int(fields[0]), agent_id=int(fields[1]), adopted=int(fields[2]),
            store_size=int(fields[3]), link_count=int(fields[4]),
            answers_correct=int(fields[5]), answers_idk=int(fields[6]),
            teachings=int(fields[7]), confidence=float(fields[8]),
            intelligence_score=float(fields[9]), last_sleep_merges=int(fields[10])))
    return rows


def write_outputs(result: SimResult, out_dir: str) -> dict[str, str]:
    """Emit metrics.csv, the resolved config, and final store documents."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w", newline="") as handle:
        handle.write(metrics_to_csv(result.metrics))
    paths["metrics"] = metrics_path

    config_path = os.path.join(out_dir, "config.json")
    with open(config_path, "w") as handle:
        json.dump(result.config.to_dict(), handle, indent=2)
        handle.write("\n")
    paths["config"] = config_path

    for agent in result.agents:
        store_path = os.path.join(out_dir, f"store_agent{agent.id}.json")
        with open(store_path, "w") as handle:
            handle.write(agent.store.save())
            handle.write("\n")
        paths[f"store_agent{agent.id}"] = store_path
    return paths


def summarize(metrics: list[MetricsRow], config: SimConfig) -> dict:
    """Aggregate a metrics table per agent.

    Per agent: final answer accuracy, RMSE of the realized adoption curve
    against the closed-form installed fraction, and the durability-score
    trajectory.
    """
    if not metrics:
        raise ValueError("cannot summarize an empty metrics table")

    summary: dict = {"ticks": max(row.tick for row in metrics), "agents": {}}
    for agent_id in sorted({row.agent_id for row in metrics}):
        rows = [row for row in metrics if row.agent_id == agent_id]
        rows.sort(key=lambda r: r.tick)
        spec = config.agents[agent_id]
        params = BassParams(p=spec.p, q=spec.q, m=spec.m)
        sq_err = [
            (row.adopted / params.m - installed_fraction(params, row.tick * config.dt)) ** 2
            for row in rows]
        # Matched-but-wrong answers are neither correct nor idk, so the
        # query total comes from the schedule, not the counters.
        total_queries = (len(rows) // config.eval_period) * config.eval_queries
        total_correct = sum(row.answers_correct for row in rows)
        summary["agents"][str(agent_id)] = {
            "final_accuracy": (total_correct / total_queries) if total_queries else None,
            "total_queries": total_queries,
            "total_correct": total_correct,
            "adoption_rmse": math.sqrt(sum(sq_err) / len(sq_err)),
            "final_confidence": rows[-1].confidence,
            "final_store_size": rows[-1].store_size,
            "final_adopted": rows[-1].adopted,
            "intelligence_trajectory": [row.intelligence_score for row in rows],
        }
    return summary


def report(metrics: list[MetricsRow], config: SimConfig, out_dir: str) -> dict:
    """Summarize a run and emit summary.json into ``out_dir`` (created if missing)."""
    summary = summarize(metrics, config)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")
    return summary
