"""Command-line surface: run evaluations, sample trajectories, render, mock-serve.

Commands are non-interactive; stdout carries only machine-parseable summary
lines. Exit codes: 0 success, 1 usage/input error, 2 episode failure.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .config import SimConfig
from .controller import Strategy
from .dataio import (DataFormatError, canonical_dumps, read_qa_file, read_trace_file,
                     traj_to_dict, write_qa_file)
from .demo import build_suite, demo_rulebook, generate_qa, generate_scene
from .episode import EpisodeAborted
from .geometry import MotionModel
from .mockserver import MockOracleServer
from .oracle import RemoteOracle, Rulebook, ScriptedOracle, answer_key_from_items
from .render import LAYERS, render_layer, write_image
from .runner import run_batch
from .scene import (Scene, SceneFormatError, TrajectorySamplingError, load_scene,
                    sample_trajectory, write_scene)

TOKEN_ENV = "EQASIM_ORACLE_TOKEN"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we document 1
        raise UsageError(message)


def _load_scene_file(path: str) -> Scene:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_scene(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read scene {path}: {exc}") from exc
    except SceneFormatError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _load_scenes(path: str) -> dict[str, Scene]:
    if os.path.isdir(path):
        scenes = {}
        for name in sorted(os.listdir(path)):
            if name.endswith(".scene"):
                scene = _load_scene_file(os.path.join(path, name))
                scenes[scene.name] = scene
        if not scenes:
            raise UsageError(f"no .scene files in {path}")
        return scenes
    scene = _load_scene_file(path)
    return {scene.name: scene}


def _load_config(path: str | None) -> SimConfig:
    if path is None:
        return SimConfig()
    try:
        return SimConfig.load(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"bad config {path}: {exc}") from exc


def _make_oracle(spec: str, rulebook_path: str | None, scenes, items):
    if rulebook_path is not None:
        try:
            with open(rulebook_path, "r", encoding="utf-8") as fh:
                rulebook = Rulebook.from_json(fh.read())
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad rulebook {rulebook_path}: {exc}") from exc
    else:
        # default: every region type named in a scene legend is its own keyword
        types: list[str] = []
        for scene in scenes.values():
            for t in scene.region_types:
                if t not in types:
                    types.append(t)
        rulebook = Rulebook.from_mapping({t: [t] for t in types})
    if spec == "scripted":
        return ScriptedOracle(rulebook, answer_key_from_items(items))
    if spec.startswith("remote:"):
        url = spec[len("remote:"):]
        if not url:
            raise UsageError("remote oracle needs a URL: --oracle remote:http://...")
        return RemoteOracle(url, token=os.environ.get(TOKEN_ENV), rulebook=rulebook)
    raise UsageError(f"unknown oracle {spec!r}; expected 'scripted' or 'remote:URL'")


def _emit(obj) -> None:
    sys.stdout.write(canonical_dumps(obj) + "\n")


# -- subcommands --------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    scenes = _load_scenes(args.scene)
    try:
        items = read_qa_file(args.qa)
    except (OSError, DataFormatError) as exc:
        raise UsageError(f"bad qa file {args.qa}: {exc}") from exc
    if not items:
        raise UsageError(f"qa file {args.qa} has no items")
    strategy = Strategy.parse(args.strategy)
    oracle = _make_oracle(args.oracle, args.rulebook, scenes, items)
    os.makedirs(args.out, exist_ok=True)
    try:
        outcome = run_batch(scenes, items, strategy, oracle, cfg, seed=args.seed,
                            jobs=args.jobs, out_dir=args.out)
    except EpisodeAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit({"items": len(items), "strategy": strategy.value, "seed": args.seed,
           "out": args.out, "report": outcome.report.as_dict()})
    return 0


def cmd_plan(args) -> int:
    cfg = _load_config(args.config)
    scene = _load_scene_file(args.scene)
    motion = MotionModel.build(cfg.forward_step_m, cfg.turn_degrees, scene.resolution)
    rng = random.Random(args.seed)
    specs = []
    try:
        for _ in range(args.count):
            specs.append(sample_trajectory(scene, rng, motion,
                                           max_attempts=args.max_attempts))
    except TrajectorySamplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    lines = [canonical_dumps(traj_to_dict(s, scene.name)) + "\n" for s in specs]
    if args.out == "-":
        sys.stdout.writelines(lines)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)
    mean_steps = (sum(s.step_count for s in specs) / len(specs)) if specs else 0.0
    mean_geo = (sum(s.geodesic_length for s in specs) / len(specs)) if specs else 0.0
    _emit({"count": len(specs), "mean_step_count": mean_steps,
           "mean_geodesic_m": mean_geo, "out": args.out})
    return 0


def cmd_render(args) -> int:
    scene = _load_scene_file(args.scene)
    result = None
    if args.trace is not None:
        try:
            result = read_trace_file(args.trace)
        except (OSError, DataFormatError) as exc:
            raise UsageError(f"bad trace {args.trace}: {exc}") from exc
        if result.scene_name != scene.name:
            print(f"error: trace is for scene {result.scene_name!r}, "
                  f"not {scene.name!r}", file=sys.stderr)
            return 1
    data = render_layer(scene, result, args.layer, scale=args.scale)
    write_image(data, args.out, png=args.png)
    frames = 0
    if args.frames_dir is not None:
        if result is None:
            raise UsageError("--frames-dir needs --trace")
        frames = _write_frames(scene, result, args)
    _emit({"out": args.out, "layer": args.layer, "bytes": len(data),
           "frames": frames})
    return 0


def _write_frames(scene, result, args) -> int:
    """Frame-per-step trajectory sequence (stands in for a trajectory video)."""
    import dataclasses

    os.makedirs(args.frames_dir, exist_ok=True)
    ext = "png" if args.png else "ppm"
    for k in range(len(result.records) + 1):
        partial = dataclasses.replace(result, records=result.records[:k])
        data = render_layer(scene, partial, args.layer, scale=args.scale)
        write_image(data, os.path.join(args.frames_dir, f"frame_{k:04d}.{ext}"),
                    png=args.png)
    return len(result.records) + 1


def cmd_mock_serve(args) -> int:
    rules = None
    if args.rulebook is not None:
        try:
            with open(args.rulebook, "r", encoding="utf-8") as fh:
                rules = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad mock rulebook {args.rulebook}: {exc}") from exc
    try:
        server = MockOracleServer(rules, host=args.host, port=args.port)
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    _emit({"serving": server.url})
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_demo(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    scene_dir = os.path.join(args.out, "scenes")
    os.makedirs(scene_dir, exist_ok=True)
    if args.suite:
        scenes, items, rulebook = build_suite(n_scenes=args.scenes, seed=args.seed,
                                              qa_per_scene=args.qa_per_scene)
    else:
        cfg = SimConfig()
        motion = MotionModel.build(cfg.forward_step_m, cfg.turn_degrees, 0.25)
        scenes = {}
        items = []
        for i in range(args.scenes):
            scene = generate_scene(args.seed * 1000 + i, name=f"demo-{args.seed}-{i:03d}")
            scenes[scene.name] = scene
            items.extend(generate_qa(scene, args.seed * 1000 + i + 7,
                                     args.qa_per_scene, motion))
        rulebook = demo_rulebook()
    for scene in scenes.values():
        with open(os.path.join(scene_dir, f"{scene.name}.scene"), "w",
                  encoding="utf-8", newline="\n") as fh:
            fh.write(write_scene(scene))
    write_qa_file(items, os.path.join(args.out, "qa.jsonl"))
    with open(os.path.join(args.out, "rulebook.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(rulebook.to_json())
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(SimConfig().to_json())
    _emit({"out": args.out, "scenes": len(scenes), "items": len(items)})
    return 0


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eqasim",
                     description="Exploration-aware embodied QA simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run and grade episodes over a QA file")
    run.add_argument("--scene", required=True, help="scene file or directory")
    run.add_argument("--qa", required=True, help="QA items (jsonl)")
    run.add_argument("--strategy", required=True,
                     choices=[s.value for s in Strategy])
    run.add_argument("--oracle", default="scripted",
                     help="'scripted' or 'remote:URL' (token via $" + TOKEN_ENV + ")")
    run.add_argument("--rulebook", default=None, help="scripted rulebook JSON")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--config", default=None, help="SimConfig JSON")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(fn=cmd_run)

    plan = sub.add_parser("plan", help="sample ground-truth trajectories")
    plan.add_argument("--scene", required=True)
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--count", type=int, default=10)
    plan.add_argument("--max-attempts", type=int, default=5000)
    plan.add_argument("--config", default=None)
    plan.add_argument("--out", default="-", help="output file or - for stdout")
    plan.set_defaults(fn=cmd_plan)

    render = sub.add_parser("render", help="render a scene/trace layer to an image")
    render.add_argument("--scene", required=True)
    render.add_argument("--trace", default=None)
    render.add_argument("--out", required=True)
    render.add_argument("--layer", default="trajectory", choices=list(LAYERS))
    render.add_argument("--scale", type=int, default=8)
    render.add_argument("--png", action="store_true",
                        help="write PNG instead of PPM (needs Pillow)")
    render.add_argument("--frames-dir", default=None,
                        help="also write one image per step (trajectory sequence)")
    render.set_defaults(fn=cmd_render)

    mock = sub.add_parser("mock-serve", help="serve the wire protocol from a rulebook")
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--port", type=int, default=8088)
    mock.add_argument("--rulebook", default=None, help="mock rulebook JSON")
    mock.set_defaults(fn=cmd_mock_serve)

    demo = sub.add_parser("demo", help="generate demo scenes, QA items, and configs")
    demo.add_argument("--out", required=True)
    demo.add_argument("--scenes", type=int, default=5)
    demo.add_argument("--seed", type=int, default=7)
    demo.add_argument("--qa-per-scene", type=int, default=2)
    demo.add_argument("--suite", action="store_true",
                      help="use the fixed evaluation-suite generator")
    demo.set_defaults(fn=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SceneFormatError, DataFormatError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
