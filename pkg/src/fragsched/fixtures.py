"""Bundled fixtures: a seeded synthetic trace and trainer files from the DNN table.

The data files under ``fragsched/data`` are regenerated by
``python -m fragsched.fixtures <dir>``; tests check they match.
"""
from __future__ import annotations

import os
import sys
from importlib import resources

import numpy as np

from .model import TrainerSpec, dump_trainers, load_trainers
from .scalability import TABLE_CURVES, ScalabilityCurve
from .trace import EventLog, SynthConfig, load, save, synth

# one ImageNet sample count for 100 epochs, as used for every DNN
TOTAL_SAMPLES = 130e6
HPO_CURVE = "ShuffleNet"

HPO_TRACE = SynthConfig(n_pool=64, join_rate_per_h=25.0, mean_residency_s=1200.0,
                        duration_s=4 * 3600.0, mean_batch=2.0)
HPO_TRACE_SEED = 0

TRACE_FILE = "synthetic_trace.jsonl"
HPO_FILE = "shufflenet_trainers.json"
DIVERSE_FILE = "diverse_trainers.json"


def hpo_trace() -> EventLog:
    return synth(HPO_TRACE, HPO_TRACE_SEED)


def hpo_trainers(n: int = 20, r_up_s: float = 20.0, r_dw_s: float = 5.0) -> list[TrainerSpec]:
    """Identical ShuffleNet trials, all submitted at time zero."""
    curve = TABLE_CURVES[HPO_CURVE]
    return [
        TrainerSpec(f"trial{i:03d}", 1, curve.max_nodes, r_up_s, r_dw_s, TOTAL_SAMPLES, curve)
        for i in range(n)
    ]


def diverse_trainers(n: int = 70, mean_gap_s: float = 120.0, total_samples: float = 20e6,
                     r_up_s: float = 20.0, r_dw_s: float = 5.0, seed: int = 1) -> list[TrainerSpec]:
    """Trainers cycling through the seven DNN curves with Poisson submissions."""
    rng = np.random.default_rng(seed)
    names = list(TABLE_CURVES)
    gaps = rng.exponential(mean_gap_s, size=n)
    gaps[0] = 0.0
    arrivals = np.round(np.cumsum(gaps), 3)
    out = []
    for i in range(n):
        dnn = names[i % len(names)]
        curve = TABLE_CURVES[dnn]
        out.append(TrainerSpec(f"{dnn.lower()}-{i:03d}", 1, curve.max_nodes, r_up_s, r_dw_s,
                               total_samples, curve, float(arrivals[i])))
    return out


def single_job() -> tuple[EventLog, list[TrainerSpec]]:
    """One linear-scaling job on four static nodes; it finishes at t = 1010 s."""
    from .model import Event

    curve = ScalabilityCurve((1, 4), (1000.0, 4000.0))
    spec = TrainerSpec("linear", 1, 4, 10.0, 5.0, 4e6, curve)
    log = EventLog((Event(0.0, ("n0", "n1", "n2", "n3")),), 2000.0)
    return log, [spec]


def data_path(name: str) -> str:
    return str(resources.files("fragsched") / "data" / name)


def bundled_trace() -> EventLog:
    return load(data_path(TRACE_FILE))


def bundled_hpo_trainers() -> list[TrainerSpec]:
    return load_trainers(data_path(HPO_FILE))


def bundled_diverse_trainers() -> list[TrainerSpec]:
    return load_trainers(data_path(DIVERSE_FILE))


def write_bundled(out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, f) for f in (TRACE_FILE, HPO_FILE, DIVERSE_FILE)]
    save(hpo_trace(), paths[0])
    dump_trainers(hpo_trainers(), paths[1])
    dump_trainers(diverse_trainers(), paths[2])
    return paths


if __name__ == "__main__":
    for p in write_bundled(sys.argv[1] if len(sys.argv) > 1 else "."):
        print(p)
