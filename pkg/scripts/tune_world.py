#!/usr/bin/env python3
"""Exploration harness for world-shape constants.

Runs the denoiser trajectory and the two-site attack over candidate
world configurations and prints the metrics the acceptance gate checks.
Not part of the package; used to choose the defaults in worlds.py.
"""

from __future__ import annotations

import sys
import time
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from topicsim.denoiser import DenoiserConfig, denoise_site_trajectory
from topicsim.reidentify import run_reidentification
from topicsim.simulator import SimConfig, run_scenario
from topicsim.worlds import WorldConfig, build_world


def evaluate(config: WorldConfig, sim_seed: int = 101, quick: bool = False) -> dict:
    t0 = time.time()
    out: dict = {}

    w1k = build_world(replace(config, n_users=1_000))
    log = run_scenario(w1k.population, SimConfig(epochs=30, sites=("wa", "wb"), seed=sim_seed), w1k.taxonomy)
    rep = run_reidentification(log, "wa", "wb", w1k.prevalence, DenoiserConfig(),
                               report_epochs=[1, 2, 5, 10, 15, 20, 25, 30])
    out["unique@1k"] = {e: round(rep.unique_rate_at(e), 3) for e in [1, 5, 15, 30]}
    out["better@1k"] = {e: round(rep.better_than_random_at(e), 3) for e in [1, 30]}
    out["monotone"] = all(b >= a for a, b in zip(rep.unique_rates, rep.unique_rates[1:]))

    if not quick:
        w10 = build_world(replace(config, n_users=10_000))
        log1 = run_scenario(w10.population, SimConfig(epochs=1, sites=("wa", "wb"), seed=sim_seed), w10.taxonomy)
        rep1 = run_reidentification(log1, "wa", "wb", w10.prevalence, DenoiserConfig(), report_epochs=[1])
        out["unique@10k,e1"] = round(rep1.unique_rate_at(1), 4)

        logd = run_scenario(w10.population, SimConfig(epochs=30, sites=("wa",), seed=sim_seed), w10.taxonomy)
        traj = denoise_site_trajectory(logd.site_view("wa"), w10.prevalence, DenoiserConfig(),
                                       w10.population, epochs=[1, 10, 20, 30])
        for pt in traj.points:
            m = pt.metrics
            out[f"tpr@{pt.epoch}"] = round(m.tpr, 4)
            if pt.epoch == 1:
                out["fpr@1"] = round(m.fpr, 4)
            if pt.epoch in (15, 20):
                out[f"med_rec@{pt.epoch}"] = pt.median_recovered
        out["above_thr"] = w10.prevalence.topics_above(10)
    out["secs"] = round(time.time() - t0, 1)
    return out


def main() -> None:
    base = WorldConfig()
    candidates = {
        "flat42": replace(
            base, head_topics=42, head_floor=600, head_placement=(0.0, 1.0),
            mid_topics=0, tail_placement=(0.4, 1.0),
            traffic_exponent=1.0, count_mu_median=28.0,
        ),
        "flat42-shallower": replace(
            base, head_topics=42, head_floor=900, head_placement=(0.0, 1.0),
            mid_topics=0, tail_placement=(0.4, 1.0),
            traffic_exponent=1.0, count_mu_median=28.0,
        ),
        "flat40-fewer-domains": replace(
            base, head_topics=40, head_floor=700, head_placement=(0.0, 1.0),
            mid_topics=0, tail_placement=(0.4, 1.0),
            traffic_exponent=1.0, count_mu_median=22.0,
        ),
    }
    for name, cfg in candidates.items():
        print(f"== {name}")
        for k, v in evaluate(cfg).items():
            print(f"   {k}: {v}")


if __name__ == "__main__":
    main()
