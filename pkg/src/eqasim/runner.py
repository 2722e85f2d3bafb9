"""Batch evaluation: run episodes, grade them, aggregate, and write artifacts.

Episodes are independent and may run in parallel; per-episode seeds derive from
(global seed, item id, strategy) so results and output files are byte-identical
regardless of the worker count.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .config import SimConfig
from .controller import Strategy, payload_from_dict, run_episode
from .dataio import QAItem, canonical_dumps, write_trace_file
from .episode import EpisodeResult
from .metrics import GradedItem, MetricsReport, aggregate, sufficient_length
from .scene import Scene, geodesic_distance


def derive_episode_seed(global_seed: int, qa_id: str, strategy: str) -> int:
    """Stable per-episode seed, independent of execution order and platform."""
    digest = hashlib.sha256(f"{global_seed}|{qa_id}|{strategy}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def grade_result(scene: Scene, qa: QAItem, result: EpisodeResult, oracle,
                 cfg: SimConfig) -> GradedItem:
    """Grade one finished episode into a metrics item.

    The final observation payload is reconstructed from the trace, so grading
    works identically online and offline. The alternate accuracy score reuses
    the grader's sigma (grounding-free), and the observation confidence is the
    global semantic score of the final view.
    """
    payload = payload_from_dict(result.final_payload)
    sigma, delta = oracle.grade(qa.question, qa.gold_answer, result.answer, payload)
    _, ce = oracle.semantic_scores(payload)
    slack = cfg.view_range_m if cfg.sufficient_length_visibility_slack else 0.0
    l_m = sufficient_length(scene, qa.start.position(), qa.target, slack)
    d_t = geodesic_distance(scene, (result.final_pose[0], result.final_pose[1]), qa.target)
    return GradedItem(sigma=sigma, delta=delta, l_m=l_m, p_m=result.p_m,
                      d_t_m=d_t, ce=ce, sigma_prime=sigma)


@dataclass
class BatchOutcome:
    results: list[EpisodeResult]
    graded: list[GradedItem]
    report: MetricsReport


def run_batch(scenes: dict[str, Scene], items: list[QAItem], strategy: Strategy,
              oracle, cfg: SimConfig, seed: int, jobs: int = 1,
              out_dir: str | None = None) -> BatchOutcome:
    """Run and grade every item; optionally write traces, answers, and reports.

    Results keep the input item order; any episode abort propagates after
    cancelling the remaining work.
    """
    for item in items:
        if item.scene not in scenes:
            raise ValueError(f"item {item.id} references unknown scene {item.scene!r}")

    def one(item: QAItem) -> tuple[EpisodeResult, GradedItem]:
        scene = scenes[item.scene]
        episode_seed = derive_episode_seed(seed, item.id, strategy.value)
        result = run_episode(scene, item, strategy, oracle, cfg, episode_seed)
        return result, grade_result(scene, item, result, oracle, cfg)

    if jobs <= 1:
        pairs = [one(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(one, items))

    results = [r for r, _ in pairs]
    graded = [g for _, g in pairs]
    report = aggregate(graded)
    if out_dir is not None:
        write_batch_artifacts(out_dir, items, results, graded, report)
    return BatchOutcome(results=results, graded=graded, report=report)


def write_batch_artifacts(out_dir: str, items, results, graded,
                          report: MetricsReport) -> None:
    traces_dir = os.path.join(out_dir, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    for result in results:
        write_trace_file(result, os.path.join(traces_dir, f"{result.qa_id}.trace.jsonl"))
    with open(os.path.join(out_dir, "answers.jsonl"), "w", encoding="utf-8",
              newline="\n") as fh:
        for item, result, g in zip(items, results, graded):
            fh.write(canonical_dumps({
                "qa_id": item.id,
                "scene": item.scene,
                "status": result.status,
                "answer": result.answer,
                "sigma": g.sigma,
                "delta": g.delta,
                "sigma_prime": g.sigma_prime,
                "ce": g.ce,
                "l_m": g.l_m,
                "p_m": g.p_m,
                "d_t_m": g.d_t_m,
                "steps": result.steps,
            }) + "\n")
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(canonical_dumps(report.as_dict()) + "\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(report.as_table())
