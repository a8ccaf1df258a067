"""Experiment harness and command-line entry point.

Subcommands:

* ``run --config cfg.json [--parallelism N] [--out DIR]`` executes the
  configured replications and writes ``regret.csv`` and ``regret.svg``;
* ``fig1 [--horizon T]`` and ``fig2`` run the two built-in presets;
* ``bounds --config cfg.json --kind {lemma1|thm1|thm3|eq1} ...`` evaluates
  a bound and writes ``bounds.json``;
* ``lower-bound --config cfg.json --type X`` prints the asymptotic
  lower-bound constant.

The CSV schema is ``t,algorithm,mean_regret,stderr,runs`` with UTF-8, LF
line endings, and 6 significant digits; output is byte-identical for a
given (config, seed) regardless of parallelism.  The SVG is a convenience
render of the CSV (one line per algorithm, band of +-2 stderr); the CSV
is the artifact of record.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from .core import ParameterSet
from .env import AlgorithmSpec, ArrivalConfig, registered_algorithms, run_experiment

__all__ = [
    "ExperimentConfig",
    "AggregateCurve",
    "preset_fig1",
    "preset_fig2",
    "load_config",
    "config_to_dict",
    "run",
    "write_csv",
    "write_svg",
    "main",
]

DEFAULT_CHECKPOINT = 100
FIG1_DEFAULT_HORIZON = 5_000


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: instance, arrivals, algorithms,
    replication count, seed, and the trace subsampling stride."""

    parameter_set: tuple[tuple[float, ...], ...]
    arrival: ArrivalConfig
    algorithms: tuple[AlgorithmSpec, ...]
    runs: int
    seed: int
    checkpoint_every: int = DEFAULT_CHECKPOINT

    def params(self) -> ParameterSet:
        return ParameterSet(self.parameter_set)


@dataclass(frozen=True)
class AggregateCurve:
    """Aggregated regret curves: one row per (checkpoint, algorithm)."""

    t: np.ndarray             # (rows,)
    algorithm: list[str]      # (rows,)
    mean_regret: np.ndarray   # (rows,)
    stderr: np.ndarray        # (rows,)
    runs: int


def preset_fig1(horizon: int = FIG1_DEFAULT_HORIZON) -> ExperimentConfig:
    """Single-learner preset: 21 types over 21 arms.

    Type 0 pays 0.55 on arm 0 and 0.5 elsewhere; type x >= 1 pays 0.55 on
    arm 0, 0.6 on arm x, and 0.5 elsewhere.  The hidden type is drawn as
    type 0 with probability 1/2 and each other type with probability
    1/40, so the confusion set of the drawn type is non-empty for roughly
    half of the runs.  Compares UCB restricted to the elite arms against
    the known-type policy over 100 runs.
    """
    k = 21
    rows = []
    row0 = [0.5] * k
    row0[0] = 0.55
    rows.append(tuple(row0))
    for x in range(1, 21):
        row = [0.5] * k
        row[0] = 0.55
        row[x] = 0.6
        rows.append(tuple(row))
    probs = (0.5,) + (1.0 / 40.0,) * 20
    return ExperimentConfig(
        parameter_set=tuple(rows),
        arrival=ArrivalConfig(num_users=1, tau=horizon, type_probs=probs),
        algorithms=(
            AlgorithmSpec("ucb", {"elite_only": True}),
            AlgorithmSpec("ucb-kt", {"delta": 0.0}),
        ),
        runs=100,
        seed=1_000,
    )


def preset_fig2() -> ExperimentConfig:
    """Clustered preset: 2 types over 4 arms, 2000 users of 100 slots each.

    Types are [0.6, 0.5, 0.5, 0.5] and [0.5, 0.6, 0.5, 0.5] drawn with
    probability 1/2 each.  Compares per-user UCB, continuous clustering,
    both explore-cluster-exploit schemes (m0 = 40, delta = 0.01), and the
    known-types UCB baseline over 20 runs.
    """
    return ExperimentConfig(
        parameter_set=((0.6, 0.5, 0.5, 0.5), (0.5, 0.6, 0.5, 0.5)),
        arrival=ArrivalConfig(num_users=2_000, tau=100, type_probs=(0.5, 0.5)),
        algorithms=(
            AlgorithmSpec("per-user-ucb"),
            AlgorithmSpec("cluster-ucb-continuous",
                          {"m_th": 2, "recluster_every": 1}),
            AlgorithmSpec("unif-cluster-et", {"m0": 40, "delta": 0.01}),
            AlgorithmSpec("ucb-cluster-et", {"m0": 40, "delta": 0.01}),
            AlgorithmSpec("ucb-on-types"),
        ),
        runs=20,
        seed=2_000,
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "parameter_set": [list(row) for row in config.parameter_set],
        "arrival": {
            "num_users": config.arrival.num_users,
            "tau": config.arrival.tau,
            "type_probs": list(config.arrival.type_probs),
        },
        "algorithms": [
            {"name": spec.name, "params": dict(spec.params)}
            for spec in config.algorithms
        ],
        "runs": config.runs,
        "seed": config.seed,
        "checkpoint_every": config.checkpoint_every,
    }


def _config_from_dict(data: dict) -> ExperimentConfig:
    def need(key):
        if key not in data:
            raise ValueError(f"config is missing required key {key!r}")
        return data[key]

    arrival_raw = need("arrival")
    for key in ("num_users", "tau", "type_probs"):
        if key not in arrival_raw:
            raise ValueError(f"config key 'arrival' is missing {key!r}")
    algorithms = []
    for i, entry in enumerate(need("algorithms")):
        if "name" not in entry:
            raise ValueError(f"config key 'algorithms[{i}]' is missing 'name'")
        if entry["name"] not in registered_algorithms():
            raise ValueError(
                f"config key 'algorithms[{i}]': unknown algorithm "
                f"{entry['name']!r}; known: {', '.join(registered_algorithms())}")
        algorithms.append(AlgorithmSpec(entry["name"],
                                        dict(entry.get("params", {}))))
    runs = int(need("runs"))
    if runs < 1:
        raise ValueError("config key 'runs' must be >= 1")
    return ExperimentConfig(
        parameter_set=tuple(tuple(float(v) for v in row)
                            for row in need("parameter_set")),
        arrival=ArrivalConfig(
            num_users=int(arrival_raw["num_users"]),
            tau=int(arrival_raw["tau"]),
            type_probs=tuple(float(p) for p in arrival_raw["type_probs"]),
        ),
        algorithms=tuple(algorithms),
        runs=runs,
        seed=int(need("seed")),
        checkpoint_every=int(data.get("checkpoint_every", DEFAULT_CHECKPOINT)),
    )


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    JSON syntax errors surface with their line number; semantic errors
    name the offending key.
    """
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(
                f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    config = _config_from_dict(data)
    config.params()  # validates the matrix
    return config


def _checkpoints(horizon: int, stride: int) -> np.ndarray:
    marks = np.arange(stride, horizon + 1, stride, dtype=np.int64)
    if marks.size == 0 or marks[-1] != horizon:
        marks = np.append(marks, horizon)
    return marks


def _run_one(args) -> tuple[int, int, np.ndarray]:
    config_data, algo_index, run_index = args
    config = _config_from_dict(config_data)
    spec = config.algorithms[algo_index]
    trace = run_experiment(config.params(), config.arrival, spec,
                           config.seed + run_index)
    marks = _checkpoints(config.arrival.horizon, config.checkpoint_every)
    return algo_index, run_index, trace.cumulative_regret[marks - 1]


def run(config: ExperimentConfig, parallelism: int = 1,
        out_dir: str | None = None) -> AggregateCurve:
    """Execute the configured replications and aggregate regret curves.

    Replication r of every algorithm runs with seed ``config.seed + r``,
    so all algorithms see identical arrivals and reward draws.  Results
    are reduced in (algorithm, run) order, making the output independent
    of `parallelism`.  When `out_dir` is given, writes ``regret.csv`` and
    ``regret.svg`` there.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    config_data = config_to_dict(config)
    tasks = [(config_data, ai, ri)
             for ai in range(len(config.algorithms))
             for ri in range(config.runs)]
    results: dict[tuple[int, int], np.ndarray] = {}
    if parallelism == 1:
        for task in tasks:
            ai, ri, curve = _run_one(task)
            results[(ai, ri)] = curve
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            try:
                for ai, ri, curve in pool.map(_run_one, tasks):
                    results[(ai, ri)] = curve
            except Exception as exc:
                done = len(results)
                raise RuntimeError(
                    f"replication failed after {done}/{len(tasks)} tasks "
                    f"completed; partial results discarded: {exc}") from exc

    marks = _checkpoints(config.arrival.horizon, config.checkpoint_every)
    rows_t, rows_algo, rows_mean, rows_se = [], [], [], []
    for ci, t in enumerate(marks):
        for ai, spec in enumerate(config.algorithms):
            values = np.array([results[(ai, ri)][ci]
                               for ri in range(config.runs)])
            mean = float(values.mean())
            se = (float(values.std(ddof=1) / math.sqrt(config.runs))
                  if config.runs > 1 else 0.0)
            rows_t.append(int(t))
            rows_algo.append(spec.name)
            rows_mean.append(mean)
            rows_se.append(se)
    curve = AggregateCurve(
        t=np.asarray(rows_t, dtype=np.int64),
        algorithm=rows_algo,
        mean_regret=np.asarray(rows_mean),
        stderr=np.asarray(rows_se),
        runs=config.runs,
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(curve, os.path.join(out_dir, "regret.csv"))
        write_svg(curve, os.path.join(out_dir, "regret.svg"))
    return curve


def write_csv(curve: AggregateCurve, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("t,algorithm,mean_regret,stderr,runs\n")
        for i in range(curve.t.shape[0]):
            handle.write(
                f"{curve.t[i]},{curve.algorithm[i]},"
                f"{curve.mean_regret[i]:.6g},{curve.stderr[i]:.6g},"
                f"{curve.runs}\n")


_SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
               "#8c564b", "#e377c2", "#7f7f7f")


def write_svg(curve: AggregateCurve, path: str,
              width: int = 800, height: int = 500) -> None:
    """Render the aggregate curves as a standalone SVG line chart with a
    +-2 stderr band per algorithm."""
    names = list(dict.fromkeys(curve.algorithm))
    margin = 60
    t_max = max(1, int(curve.t.max()))
    y_max = float((curve.mean_regret + 2 * curve.stderr).max())
    y_max = y_max if y_max > 0 else 1.0

    def sx(t):
        return margin + (width - 2 * margin) * t / t_max

    def sy(y):
        return height - margin - (height - 2 * margin) * y / y_max

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 15}" text-anchor="middle" '
        f'font-size="13">t</text>',
        f'<text x="18" y="{height // 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {height // 2})">mean cumulative regret</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        tx, ty = t_max * frac, y_max * frac
        parts.append(
            f'<text x="{sx(tx):.1f}" y="{height - margin + 18}" '
            f'text-anchor="middle" font-size="11">{tx:.6g}</text>')
        parts.append(
            f'<text x="{margin - 8:.1f}" y="{sy(ty) + 4:.1f}" '
            f'text-anchor="end" font-size="11">{ty:.6g}</text>')
    for idx, name in enumerate(names):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        sel = [i for i in range(curve.t.shape[0]) if curve.algorithm[i] == name]
        pts = [(curve.t[i], curve.mean_regret[i], curve.stderr[i]) for i in sel]
        band = [f"{sx(t):.2f},{sy(m + 2 * s):.2f}" for t, m, s in pts]
        band += [f"{sx(t):.2f},{sy(max(m - 2 * s, 0.0)):.2f}"
                 for t, m, s in reversed(pts)]
        parts.append(f'<polygon points="{" ".join(band)}" fill="{color}" '
                     f'fill-opacity="0.15" stroke="none"/>')
        line = " ".join(f"{sx(t):.2f},{sy(m):.2f}" for t, m, _ in pts)
        parts.append(f'<polyline points="{line}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = margin + 16 * idx
        parts.append(f'<line x1="{width - margin - 150}" y1="{ly}" '
                     f'x2="{width - margin - 120}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="3"/>')
        parts.append(f'<text x="{width - margin - 112}" y="{ly + 4}" '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(parts) + "\n")


# -- bound reports ---------------------------------------------------------


def _bounds_command(args) -> dict:
    config = load_config(args.config)
    params = config.params()
    if args.kind == "lemma1":
        if args.epsilon is None:
            raise ValueError("--epsilon is required for kind=lemma1")
        value = bounds_mod.gamma(args.epsilon)
        report = bounds_mod.BoundReport(
            kind="lemma1", value=value,
            inputs={"epsilon": args.epsilon}, terms={"gamma": value})
    elif args.kind == "thm1":
        if args.type is None:
            raise ValueError("--type is required for kind=thm1")
        horizon = args.horizon or config.arrival.horizon
        report = bounds_mod.thm1_bound(params, args.type, horizon,
                                       delta=args.delta or 0.0)
    elif args.kind == "thm3":
        for name in ("m0", "tau", "delta", "g"):
            if getattr(args, name if name != "g" else "g_value") is None:
                raise ValueError(f"--{name.replace('_', '-')} is required "
                                 f"for kind=thm3")
        horizon = args.horizon or config.arrival.horizon
        report = bounds_mod.thm3_bound(params, args.m0, args.tau, args.delta,
                                       args.g_value, horizon)
    elif args.kind == "eq1":
        if args.type is None:
            raise ValueError("--type is required for kind=eq1")
        value = bounds_mod.eq1_lower_bound(params, args.type)
        report = bounds_mod.BoundReport(
            kind="eq1", value=value, inputs={"type": args.type}, terms={})
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown bound kind {args.kind!r}")
    return dataclasses.asdict(report)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="typedbandits",
        description="Bandit experiments over populations with few user types")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--parallelism", type=int, default=1)
    p_run.add_argument("--out", default=".")

    p_fig1 = sub.add_parser("fig1", help="run the 21-type single-user preset")
    p_fig1.add_argument("--horizon", type=int, default=FIG1_DEFAULT_HORIZON)
    p_fig1.add_argument("--runs", type=int, default=None)
    p_fig1.add_argument("--parallelism", type=int, default=1)
    p_fig1.add_argument("--out", default=".")

    p_fig2 = sub.add_parser("fig2", help="run the 2000-user clustered preset")
    p_fig2.add_argument("--runs", type=int, default=None)
    p_fig2.add_argument("--parallelism", type=int, default=1)
    p_fig2.add_argument("--out", default=".")

    p_bounds = sub.add_parser("bounds", help="evaluate a regret bound")
    p_bounds.add_argument("--config", required=True)
    p_bounds.add_argument("--kind", required=True,
                          choices=("lemma1", "thm1", "thm3", "eq1"))
    p_bounds.add_argument("--type", type=int, default=None)
    p_bounds.add_argument("--horizon", type=int, default=None)
    p_bounds.add_argument("--delta", type=float, default=None)
    p_bounds.add_argument("--epsilon", type=float, default=None)
    p_bounds.add_argument("--m0", type=int, default=None)
    p_bounds.add_argument("--tau", type=int, default=None)
    p_bounds.add_argument("--g", dest="g_value", type=float, default=None)
    p_bounds.add_argument("--out", default=".")

    p_lb = sub.add_parser("lower-bound",
                          help="asymptotic lower-bound constant for a type")
    p_lb.add_argument("--config", required=True)
    p_lb.add_argument("--type", type=int, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            run(config, parallelism=args.parallelism, out_dir=args.out)
            print(f"wrote {os.path.join(args.out, 'regret.csv')}")
        elif args.command == "fig1":
            config = preset_fig1(horizon=args.horizon)
            if args.runs:
                config = dataclasses.replace(config, runs=args.runs)
            run(config, parallelism=args.parallelism, out_dir=args.out)
            print(f"wrote {os.path.join(args.out, 'regret.csv')}")
        elif args.command == "fig2":
            config = preset_fig2()
            if args.runs:
                config = dataclasses.replace(config, runs=args.runs)
            run(config, parallelism=args.parallelism, out_dir=args.out)
            print(f"wrote {os.path.join(args.out, 'regret.csv')}")
        elif args.command == "bounds":
            report = _bounds_command(args)
            os.makedirs(args.out, exist_ok=True)
            out_path = os.path.join(args.out, "bounds.json")
            with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
                json.dump(report, handle, indent=2, sort_keys=True)
                handle.write("\n")
            print(json.dumps(report, sort_keys=True))
        elif args.command == "lower-bound":
            config = load_config(args.config)
            value = bounds_mod.eq1_lower_bound(config.params(), args.type)
            print(json.dumps({"kind": "eq1", "type": args.type, "value": value}))
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
