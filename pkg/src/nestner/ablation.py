"""Ablation grids: training order, tag insertion layer, read/write schemes.

Every cell is trained once per seed on the same data and scored on the dev
split with exact-match F1; the table reports the mean over seeds.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, replace

from .annotations import BIO, BIOUL
from .ordering import LARGE_TO_SHORT, GREEDY, SHORT_TO_LARGE
from .training import evaluate, train

ORDER = "order"
LAYER = "layer"
SCHEME = "scheme"
KINDS = (ORDER, LAYER, SCHEME)

ORDER_CELLS = (SHORT_TO_LARGE, LARGE_TO_SHORT, GREEDY)


def cells(kind: str, base) -> list:
    """``(name, overrides)`` pairs of the grid for ``kind``."""
    if kind == ORDER:
        return [(order, {"order": order}) for order in ORDER_CELLS]
    if kind == LAYER:
        return [(f"L_tag={k}", {"tag_layer": k}) for k in range(base.n_layers + 1)]
    if kind == SCHEME:
        return [(f"read {r} / write {w}", {"read_scheme": r, "write_scheme": w})
                for r in (BIO, BIOUL) for w in (BIO, BIOUL)]
    raise ValueError(f"unknown ablation kind {kind!r}")


@dataclass
class CellResult:
    name: str
    overrides: dict
    f1s: list

    @property
    def mean(self) -> float:
        return statistics.fmean(self.f1s)

    @property
    def std(self) -> float:
        return statistics.pstdev(self.f1s) if len(self.f1s) > 1 else 0.0


def run_ablation(kind: str, base, train_sentences, dev_sentences, seeds: int = 3, on_run=None) -> list:
    """Train every cell of the grid ``seeds`` times; returns :class:`CellResult` rows.

    ``on_run(record)`` receives one dict per finished (cell, seed) run.
    """
    labels = sorted({m.label for s in list(train_sentences) + list(dev_sentences) for m in s.mentions})
    tokens = sorted({t for s in train_sentences for t in s.tokens})
    results = []
    for name, overrides in cells(kind, base):
        row = CellResult(name, overrides, [])
        for k in range(seeds):
            config = replace(base, seed=base.seed + k, **overrides)
            model = config.build_model(labels, tokens)
            tc = config.train_config()
            train(model, train_sentences, dev_sentences, tc)
            prf = evaluate(model, dev_sentences, tc)
            row.f1s.append(prf.f1)
            if on_run is not None:
                on_run({"kind": kind, "cell": name, "seed": config.seed, **overrides,
                        "dev_precision": prf.precision, "dev_recall": prf.recall, "dev_f1": prf.f1})
        results.append(row)
    return results


def format_table(kind: str, results: list) -> str:
    if kind == SCHEME:
        by = {(r.overrides["read_scheme"], r.overrides["write_scheme"]): r for r in results}
        lines = [f"{'':<12} {'write BIO':>14} {'write BIOUL':>14}"]
        for read in (BIO, BIOUL):
            vals = [f"{by[(read, w)].mean:.4f}±{by[(read, w)].std:.4f}" for w in (BIO, BIOUL)]
            lines.append(f"{'read ' + read:<12} {vals[0]:>14} {vals[1]:>14}")
        return "\n".join(lines)
    width = max(len(r.name) for r in results) + 2
    seeds = len(results[0].f1s)
    head = f"{kind:<{width}} {'mean F1':>8} {'std':>8}" + "".join(f" {'seed' + str(i):>8}" for i in range(seeds))
    lines = [head]
    for r in results:
        lines.append(f"{r.name:<{width}} {r.mean:>8.4f} {r.std:>8.4f}" + "".join(f" {f:>8.4f}" for f in r.f1s))
    best = max(results, key=lambda r: r.mean)
    lines.append(f"best: {best.name}")
    return "\n".join(lines)


def summary_records(kind: str, results: list) -> list:
    return [json.dumps({"kind": kind, "cell": r.name, "summary": True, **r.overrides,
                        "mean_dev_f1": r.mean, "std_dev_f1": r.std, "dev_f1s": r.f1s})
            for r in results]
