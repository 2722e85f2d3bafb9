"""Per-item scores and aggregate metrics for graded episodes.

Percentages keep full precision; rounding happens only in display formatting
(2 decimals, round-half-even via the standard format spec).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scene import Scene, geodesic_distance


@dataclass(frozen=True)
class GradedItem:
    """One evaluated question: grades, distances, optional auxiliary scores."""

    sigma: int                      # answer accuracy, 1..5
    delta: float                    # grounding, {0, 0.5, 1}
    l_m: float                      # sufficient ground-truth distance
    p_m: float                      # distance actually traveled
    d_t_m: float                    # final pose -> target geodesic
    ce: float | None = None         # confidence of the final observation
    sigma_prime: int | None = None  # alternate 1..5 accuracy (no grounding)

    def __post_init__(self):
        if self.sigma not in (1, 2, 3, 4, 5):
            raise ValueError(f"sigma must be in 1..5, got {self.sigma}")
        if self.delta not in (0.0, 0.5, 1.0):
            raise ValueError(f"delta must be 0, 0.5 or 1, got {self.delta}")
        for name, v in (("l_m", self.l_m), ("p_m", self.p_m), ("d_t_m", self.d_t_m)):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if self.ce is not None and not 0.0 <= self.ce <= 1.0:
            raise ValueError(f"ce must be in [0,1], got {self.ce}")
        if self.sigma_prime is not None and self.sigma_prime not in (1, 2, 3, 4, 5):
            raise ValueError(f"sigma_prime must be in 1..5, got {self.sigma_prime}")


@dataclass(frozen=True)
class MetricsReport:
    n: int
    c: float
    c_star: float
    e_path: float
    d_t_mean: float
    npl: float
    c_prime: float | None = None
    e_prime: float | None = None
    ace: float | None = None
    wce: float | None = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "C": self.c,
            "C_star": self.c_star,
            "E_path": self.e_path,
            "d_T_mean": self.d_t_mean,
            "C_prime": self.c_prime,
            "E_prime": self.e_prime,
            "ACE": self.ace,
            "NPL": self.npl,
            "WCE": self.wce,
        }

    def as_table(self) -> str:
        rows = [("items", f"{self.n}")]
        for label, value in self.as_dict().items():
            if label == "n":
                continue
            rows.append((label, "-" if value is None else f"{value:.2f}"))
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label:<{width}}  {value}" for label, value in rows) + "\n"


def item_score(item: GradedItem) -> float:
    """Consistency score of one answer: accuracy gated by grounding, in [0,1]."""
    return item.sigma * item.delta / 5.0


def path_ratio(l_m: float, p_m: float) -> float:
    """Efficiency ratio l / max(p, l); degenerate zero-length tasks score 1."""
    denom = max(p_m, l_m)
    if denom <= 0.0:
        return 1.0
    return l_m / denom


def aggregate(items) -> MetricsReport:
    """All aggregate metrics over a batch of graded items.

    The OpenEQA-style and confidence metrics are included only when every item
    carries the corresponding optional field.
    """
    items = list(items)
    if not items:
        raise ValueError("aggregate needs at least one graded item")
    n = len(items)
    c = sum(item_score(i) for i in items) / n * 100.0
    c_star = sum(i.sigma / 5.0 for i in items) / n * 100.0
    e_path = sum(item_score(i) * path_ratio(i.l_m, i.p_m) for i in items) / n * 100.0
    d_t_mean = sum(i.d_t_m for i in items) / n
    npl = sum(path_ratio(i.l_m, i.p_m) for i in items) / n

    c_prime = e_prime = None
    if all(i.sigma_prime is not None for i in items):
        c_prime = sum((i.sigma_prime - 1) / 4.0 for i in items) / n * 100.0
        e_prime = sum((i.sigma_prime - 1) / 4.0 * path_ratio(i.l_m, i.p_m)
                      for i in items) / n * 100.0
    ace = wce = None
    if all(i.ce is not None for i in items):
        ace = sum(i.ce for i in items) / n
        wce = sum(i.ce * path_ratio(i.l_m, i.p_m) for i in items) / n

    return MetricsReport(n=n, c=c, c_star=c_star, e_path=e_path, d_t_mean=d_t_mean,
                         npl=npl, c_prime=c_prime, e_prime=e_prime, ace=ace, wce=wce)


def sufficient_length(scene: Scene, start: tuple[float, float],
                      target: tuple[float, float], visibility_slack_m: float = 0.0) -> float:
    """Ground-truth distance sufficient to finish the task.

    The full start -> target geodesic by default; an optional slack subtracts
    the observation range (the target can be seen before being reached),
    floored at zero.
    """
    d = geodesic_distance(scene, start, target)
    if math.isinf(d):
        return d
    return max(0.0, d - visibility_slack_m)
