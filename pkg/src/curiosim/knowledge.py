"""Compressed knowledge store with repetition-strengthened retention.

Incoming sample batches are projected into a shared reduced space, kept
as Gaussian sufficient statistics (raw batches are discarded), and
matched against stored items by Bhattacharyya distance.  Repeated
receipts of matching information strengthen an item's retention toward
1; a sleep pass merges near-duplicate items and optionally prunes the
weakest ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distance import bc_mvn
from .distributions import MvnSummary, SufficientStats, merge_stats, stats_from_batch, stats_to_mvn
from .projection import JlMap, apply_rows, jl_min_dimension

DEFAULT_ALPHA = 0.3
DEFAULT_THETA_LINK = 0.5
DEFAULT_THETA_MERGE = 0.25
# Anticipated number of distinct stored summaries; sizes the projection.
DEFAULT_EXPECTED_POINTS = 64

STORE_FORMAT_VERSION = 1


class StoreParseError(ValueError):
    """A persisted store document is malformed; the message names the field."""


def retention_weight(alpha: float, receipt_count: int) -> float:
    """Storage strength after ``receipt_count`` receipts: 1 - (1-alpha)^count."""
    return 1.0 - (1.0 - alpha) ** receipt_count


@dataclass
class KnowledgeItem:
    """One retained summary: reduced-dimension stats plus repetition state."""

    id: int
    stats: SufficientStats
    receipt_count: int
    retention: float
    last_seen: float

    def summary(self) -> MvnSummary:
        return stats_to_mvn(self.stats)


@dataclass(frozen=True)
class ReceiveOutcome:
    """Result of absorbing a batch: matched an existing item or created one."""

    kind: str  # "matched" | "novel"
    item_id: int
    distance: float  # best distance found; +inf when the store was empty

    @property
    def matched(self) -> bool:
        return self.kind == "matched"


@dataclass(frozen=True)
class CompressionReport:
    merges: int
    pruned: int
    size_before: int
    size_after: int
    pruned_receipts: int = 0  # receipt mass removed by pruning (merges conserve it)


@dataclass
class KnowledgeStore:
    """Items, similarity links, and the shared projection they live under."""

    projector: JlMap
    alpha: float = DEFAULT_ALPHA
    theta_link: float = DEFAULT_THETA_LINK
    theta_merge: float = DEFAULT_THETA_MERGE
    items: dict[int, KnowledgeItem] = field(default_factory=dict)
    links: list[tuple[int, int, float]] = field(default_factory=list)
    next_id: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"retention rate must be in (0, 1], got {self.alpha}")
        if self.theta_link <= 0 or self.theta_merge <= 0:
            raise ValueError("distance thresholds must be positive")

    @property
    def k(self) -> int:
        """Common reduced dimension of all stored items."""
        return self.projector.k

    @property
    def payload_dim(self) -> int:
        return self.projector.d

    @staticmethod
    def create(
        payload_dim: int,
        epsilon: float,
        projector_seed: int | None = None,
        k: int | None = None,
        expected_points: int = DEFAULT_EXPECTED_POINTS,
        alpha: float = DEFAULT_ALPHA,
        theta_link: float = DEFAULT_THETA_LINK,
        theta_merge: float = DEFAULT_THETA_MERGE,
    ) -> KnowledgeStore:
        """Build an empty store, drawing its shared projection once.

        The target dimension defaults to the admissible bound for
        ``expected_points`` at the given epsilon; when that bound is not
        below the payload dimension the identity map is used instead.
        """
        if k is None:
            k = jl_min_dimension(max(expected_points, 2), epsilon)
        if k >= payload_dim:
            projector = JlMap.identity(payload_dim, epsilon)
        elif projector_seed is not None:
            projector = JlMap.from_seed(payload_dim, k, epsilon, projector_seed)
        else:
            projector = JlMap.draw(payload_dim, k, epsilon, np.random.default_rng())
        return KnowledgeStore(projector=projector, alpha=alpha,
                              theta_link=theta_link, theta_merge=theta_merge)

    # -- absorption ----------------------------------------------------

    def receive(self, batch: np.ndarray, now: float) -> ReceiveOutcome:
        """Project a raw n x d batch and absorb it.

        Matches the batch summary against every stored item; a best
        distance within theta_link folds the batch into that item
        (strengthening its retention), anything farther becomes a new item.
        """
        batch = np.asarray(batch, dtype=float)
        if batch.ndim != 2 or batch.shape[1] != self.payload_dim:
            raise ValueError(
                f"batch must be n x {self.payload_dim}, got shape {batch.shape}")
        if batch.shape[0] < 2:
            raise ValueError(f"need at least 2 samples per batch, got {batch.shape[0]}")
        stats = stats_from_batch(apply_rows(self.projector, batch))
        return self.absorb_stats(stats, now)

    def absorb_stats(self, stats: SufficientStats, now: float) -> ReceiveOutcome:
        """Absorb already-projected sufficient statistics (peer teaching path)."""
        if stats.dim != self.k:
            raise ValueError(f"stats dimension {stats.dim} != store dimension {self.k}")
        if stats.n < 2:
            raise ValueError(f"need at least 2 samples behind stats, got {stats.n}")
        best_id, best_distance = self._nearest(stats_to_mvn(stats))
        if best_id is not None and best_distance <= self.theta_link:
            item = self.items[best_id]
            item.stats = merge_stats(item.stats, stats)
            item.receipt_count += 1
            item.retention = retention_weight(self.alpha, item.receipt_count)
            item.last_seen = now
            return ReceiveOutcome(kind="matched", item_id=best_id, distance=best_distance)
        new_id = self.next_id
        self.next_id += 1
        self.items[new_id] = KnowledgeItem(
            id=new_id, stats=stats, receipt_count=1,
            retention=retention_weight(self.alpha, 1), last_seen=now)
        return ReceiveOutcome(kind="novel", item_id=new_id, distance=best_distance)

    def _nearest(self, summary: MvnSummary) -> tuple[int | None, float]:
        best_id: int | None = None
        best = math.inf
        for item_id, item in self.items.items():
            d = bc_mvn(summary, item.summary()).distance
            if d < best:
                best = d
                best_id = item_id
        return best_id, best

    def nearest_item(self, summary: MvnSummary) -> tuple[int | None, float]:
        """Read-only nearest-item query used by answering."""
        return self._nearest(summary)

    # -- connections ----------------------------------------------------

    def refresh_links(self) -> int:
        """Recompute all pairwise links at theta_link; returns the link count."""
        ids = sorted(self.items)
        links: list[tuple[int, int, float]] = []
        for i, a in enumerate(ids):
            summary_a = self.items[a].summary()
            for b in ids[i + 1:]:
                d = bc_mvn(summary_a, self.items[b].summary()).distance
                if d <= self.theta_link:
                    links.append((a, b, d))
        self.links = links
        return len(links)

    # -- compression ----------------------------------------------------

    def sleep(self, max_items: int | None = None) -> CompressionReport:
        """Merge closest pairs below theta_merge, then prune to ``max_items``.

        Merging folds one item's statistics into the other (receipt counts
        add, so total receipt mass is conserved); pruning drops the items
        with the weakest retention, oldest first, then smallest id.  Ends
        by refreshing links.
        """
        size_before = len(self.items)
        merges = 0
        while True:
            pair = self._closest_pair()
            if pair is None or pair[2] >= self.theta_merge:
                break
            keep_id, drop_id, _ = pair
            keep = self.items[keep_id]
            drop = self.items.pop(drop_id)
            keep.stats = merge_stats(keep.stats, drop.stats)
            keep.receipt_count += drop.receipt_count
            keep.retention = retention_weight(self.alpha, keep.receipt_count)
            keep.last_seen = max(keep.last_seen, drop.last_seen)
            merges += 1

        pruned = 0
        pruned_receipts = 0
        if max_items is not None and len(self.items) > max_items:
            order = sorted(self.items.values(),
                           key=lambda it: (it.retention, it.last_seen, it.id))
            while len(self.items) > max_items:
                victim = order.pop(0)
                del self.items[victim.id]
                pruned += 1
                pruned_receipts += victim.receipt_count

        self.refresh_links()
        return CompressionReport(merges=merges, pruned=pruned,
                                 size_before=size_before, size_after=len(self.items),
                                 pruned_receipts=pruned_receipts)

    def _closest_pair(self) -> tuple[int, int, float] | None:
        ids = sorted(self.items)
        if len(ids) < 2:
            return None
        best: tuple[int, int, float] | None = None
        for i, a in enumerate(ids):
            summary_a = self.items[a].summary()
            for b in ids[i + 1:]:
                d = bc_mvn(summary_a, self.items[b].summary()).distance
                if best is None or d < best[2]:
                    best = (a, b, d)
        return best

    def total_receipts(self) -> int:
        return sum(item.receipt_count for item in self.items.values())

    # -- persistence ----------------------------------------------------

    def to_document(self) -> dict:
        """Serializable snapshot; floats survive a JSON round-trip losslessly."""
        projector: dict = {"d": self.projector.d, "k": self.projector.k,
                           "epsilon": self.projector.epsilon}
        if self.projector.is_identity:
            pass  # d, k, epsilon alone denote the identity map
        elif self.projector.seed is not None:
            projector["seed"] = self.projector.seed
        else:
            projector["matrix"] = [list(row) for row in self.projector.matrix]
        return {
            "version": STORE_FORMAT_VERSION,
            "k": self.k,
            "alpha": self.alpha,
            "theta_link": self.theta_link,
            "theta_merge": self.theta_merge,
            "projector": projector,
            "items": [
                {
                    "id": item.id,
                    "n": item.stats.n,
                    "sum": list(item.stats.sum),
                    "sum_outer": list(item.stats.sum_outer.reshape(-1)),
                    "receipt_count": item.receipt_count,
                    "retention": item.retention,
                    "last_seen": item.last_seen,
                }
                for item in sorted(self.items.values(), key=lambda it: it.id)
            ],
            "links": [[a, b, d] for a, b, d in sorted(self.links)],
        }

    def save(self) -> str:
        return json.dumps(self.to_document(), indent=2)

    @staticmethod
    def load(text: str) -> KnowledgeStore:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StoreParseError(f"document is not valid JSON: {exc}") from None
        return KnowledgeStore.from_document(doc)

    @staticmethod
    def from_document(doc: dict) -> KnowledgeStore:
        if not isinstance(doc, dict):
            raise StoreParseError("document: expected a JSON object")
        version = _require(doc, "version", int)
        if version != STORE_FORMAT_VERSION:
            raise StoreParseError(f"version: unsupported value {version}")
        k = _require(doc, "k", int)
        alpha = _require(doc, "alpha", (int, float))
        theta_link = _require(doc, "theta_link", (int, float))
        theta_merge = _require(doc, "theta_merge", (int, float))

        proj_doc = _require(doc, "projector", dict)
        d = _require(proj_doc, "d", int, prefix="projector.")
        proj_k = _require(proj_doc, "k", int, prefix="projector.")
        epsilon = _require(proj_doc, "epsilon", (int, float), prefix="projector.")
        if proj_k != k:
            raise StoreParseError(f"projector.k: {proj_k} disagrees with store k {k}")
        if "seed" in proj_doc:
            projector = JlMap.from_seed(d, proj_k, epsilon, int(proj_doc["seed"]))
        elif "matrix" in proj_doc:
            matrix = np.asarray(proj_doc["matrix"], dtype=float)
            if matrix.shape != (proj_k, d):
                raise StoreParseError(
                    f"projector.matrix: expected shape ({proj_k}, {d}), got {matrix.shape}")
            projector = JlMap(d=d, k=proj_k, epsilon=epsilon, matrix=matrix)
        elif proj_k == d:
            projector = JlMap.identity(d, epsilon)
        else:
            raise StoreParseError("projector: needs a seed or matrix when k != d")

        store = KnowledgeStore(projector=projector, alpha=alpha,
                               theta_link=theta_link, theta_merge=theta_merge)
        items_doc = _require(doc, "items", list)
        for idx, item_doc in enumerate(items_doc):
            prefix = f"items[{idx}]."
            if not isinstance(item_doc, dict):
                raise StoreParseError(f"items[{idx}]: expected an object")
            item_id = _require(item_doc, "id", int, prefix=prefix)
            n = _require(item_doc, "n", int, prefix=prefix)
            total = _require(item_doc, "sum", list, prefix=prefix)
            if len(total) != k:
                raise StoreParseError(f"{prefix}sum: expected {k} values, got {len(total)}")
            outer_flat = _require(item_doc, "sum_outer", list, prefix=prefix)
            if len(outer_flat) != k * k:
                raise StoreParseError(
                    f"{prefix}sum_outer: expected {k * k} values, got {len(outer_flat)}")
            stats = SufficientStats(
                n=n, sum=np.asarray(total, dtype=float),
                sum_outer=np.asarray(outer_flat, dtype=float).reshape(k, k))
            item = KnowledgeItem(
                id=item_id, stats=stats,
                receipt_count=_require(item_doc, "receipt_count", int, prefix=prefix),
                retention=_require(item_doc, "retention", (int, float), prefix=prefix),
                last_seen=_require(item_doc, "last_seen", (int, float), prefix=prefix))
            if item.receipt_count < 1:
                raise StoreParseError(f"{prefix}receipt_count: must be >= 1")
            if item_id in store.items:
                raise StoreParseError(f"{prefix}id: duplicate item id {item_id}")
            store.items[item_id] = item

        links_doc = _require(doc, "links", list)
        for idx, link in enumerate(links_doc):
            if (not isinstance(link, list) or len(link) != 3
                    or not all(isinstance(v, (int, float)) for v in link)):
                raise StoreParseError(f"links[{idx}]: expected [idA, idB, distance]")
            a, b, dist = int(link[0]), int(link[1]), float(link[2])
            if a not in store.items or b not in store.items:
                raise StoreParseError(f"links[{idx}]: references unknown item id")
            store.links.append((a, b, dist))

        store.next_id = max(store.items, default=-1) + 1
        return store

    def content_equal(self, other: KnowledgeStore) -> bool:
        """Field-for-field equality of everything the document captures."""
        return self.to_document() == other.to_document()


def _require(doc: dict, name: str, types, prefix: str = ""):
    if name not in doc:
        raise StoreParseError(f"{prefix}{name}: missing required field")
    value = doc[name]
    if types is int and isinstance(value, bool):
        raise StoreParseError(f"{prefix}{name}: expected an integer")
    if not isinstance(value, types):
        raise StoreParseError(f"{prefix}{name}: unexpected type {type(value).__name__}")
    return value
