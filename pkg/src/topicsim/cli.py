"""Batch pipeline: generate -> simulate -> denoise -> reidentify -> report.

Subcommands compose through files in the output directory; there is no
hidden shared state. Every output file begins with a header recording
the tool version, a hash of the resolved configuration, and the master
seed, so byte-identical reruns are checkable with `cmp`.

Config files are flat JSON. Unknown keys are rejected (catching typos in
sweep scripts); omitted keys take the documented defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__, analytics
from .chrome_filter import FilterParams, classify_scores, load_score_vectors
from .classification import (
    DomainClassification,
    load_classification,
    prevalence,
    synthesize_skewed_classification,
)
from .denoiser import DenoiserConfig, denoise_site_trajectory
from .population import (
    DEFAULT_FIXED_TOP,
    RankedDomainList,
    TrafficModel,
    UniqueDomainCountModel,
    build_total_order,
    derive_top_profile,
    generate_population,
    load_bucket_file,
    load_count_histogram,
    load_rank_file,
    read_population,
    summarize_population,
    write_population,
)
from .reidentify import run_reidentification
from .simulator import ObservationLog, SimConfig, run_scenario
from .taxonomy import Taxonomy, bundled_taxonomy, load_taxonomy
from .worlds import aggressive_skew_config, wide_pool_config

CONFIG_DEFAULTS: dict = {
    "taxonomy": "bundled",          # path to a taxonomy file, or "bundled"
    "classification": "synthetic:wide-pool",  # path, or synthetic:<aggressive-skew|wide-pool>
    "crux": None,                   # rank-bucket CSV (origin,rank_bucket)
    "tranco": None,                 # rank CSV (rank,domain)
    "radar": None,                  # optional eTLD+1 tie-breaker list, one per line
    "histogram": None,              # unique-domain-count histogram CSV
    "n_users": 1000,
    "n_domains": 50_000,
    "sites": ["site-a.example", "site-b.example"],
    "epochs": 30,
    "T": 5,
    "tau": 3,
    "p": 0.05,
    "witness_enabled": False,
    "threshold": 10,
    "aggressive_gap_rule": False,
    "profile_candidates": 1,        # candidate profiles per user (1..10)
    "profile_index": 0,             # which candidate the experiments use
    "seed": 0,
    "out": "out",
    "workers": 0,                   # 0 = available cores
}


class ConfigError(ValueError):
    pass


class MissingArtifactError(FileNotFoundError):
    def __init__(self, path: Path, produced_by: str):
        super().__init__(
            f"missing {path}: run the `{produced_by}` subcommand first (outputs compose via files)"
        )


def load_config(path: Optional[str], overrides: dict) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(raw) - set(CONFIG_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(raw)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    if not 1 <= int(cfg["profile_candidates"]) <= 10:
        raise ConfigError("profile_candidates must be in 1..10")
    if not 0 <= int(cfg["profile_index"]) < int(cfg["profile_candidates"]):
        raise ConfigError("profile_index must be < profile_candidates")
    return cfg


def config_hash(cfg: dict) -> str:
    # workers and out do not affect results, so they are not part of the
    # content identity; equal hashes must mean byte-identical outputs.
    hashed = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    canon = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def file_header(cfg: dict) -> dict:
    return {"topicsim": __version__, "config_hash": config_hash(cfg), "seed": int(cfg["seed"])}


def csv_header_line(cfg: dict) -> str:
    h = file_header(cfg)
    return f"# topicsim={h['topicsim']} config_hash={h['config_hash']} seed={h['seed']}"


def _resolve_taxonomy(cfg: dict) -> Taxonomy:
    if cfg["taxonomy"] == "bundled":
        return bundled_taxonomy()
    return load_taxonomy(cfg["taxonomy"])


def _resolve_classification(cfg: dict, taxonomy: Taxonomy) -> DomainClassification:
    spec = cfg["classification"]
    if isinstance(spec, str) and spec.startswith("synthetic:"):
        preset = spec.split(":", 1)[1]
        n = int(cfg["n_domains"])
        seed = int(cfg["seed"])
        if preset == "aggressive-skew":
            wc = aggressive_skew_config(n_users=1, seed=seed)
        elif preset == "wide-pool":
            wc = wide_pool_config(n_users=1, seed=seed)
        else:
            raise ConfigError(f"unknown synthetic classification preset {preset!r}")
        return synthesize_skewed_classification(
            taxonomy, n, wc.skew, seed=seed,
            head_topics=wc.head_topics, head_floor=wc.head_floor,
            head_placement=wc.head_placement, mid_topics=wc.mid_topics,
            mid_count_range=wc.mid_count_range, mid_placement=wc.mid_placement,
            tail_placement=wc.tail_placement, source_label=spec,
        )
    path = Path(spec)
    if not path.exists():
        raise MissingArtifactError(path, "filter (or supply a classification file)")
    return load_classification(path, taxonomy)


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_order(cfg: dict, classification: DomainClassification) -> RankedDomainList:
    if cfg["crux"] is not None:
        bins = load_bucket_file(cfg["crux"])
        ranks = load_rank_file(cfg["tranco"]) if cfg["tranco"] else {}
        radar = ()
        if cfg["radar"]:
            radar = tuple(
                ln.strip() for ln in Path(cfg["radar"]).read_text(encoding="utf-8").splitlines()
                if ln.strip()
            )
        fixed = tuple(d for d in DEFAULT_FIXED_TOP if d in bins)
        return build_total_order(bins, ranks, fixed_top=fixed, radar_order=radar)
    # Synthetic classifications come out in rank order already.
    return RankedDomainList(tuple(classification.domains()))


def _count_model(cfg: dict) -> UniqueDomainCountModel:
    if cfg["histogram"] is not None:
        return load_count_histogram(cfg["histogram"])
    return UniqueDomainCountModel(mu=math.log(28.0), sigma=0.8, minimum=8, maximum=2000)


def cmd_generate(cfg: dict) -> int:
    taxonomy = _resolve_taxonomy(cfg)
    classification = _resolve_classification(cfg, taxonomy)
    order = _build_order(cfg, classification)
    traffic = TrafficModel(kind="zipf", exponent=1.0)
    counts = _count_model(cfg)
    users = generate_population(
        int(cfg["n_users"]), order, traffic, counts, classification,
        seed=int(cfg["seed"]), T=int(cfg["T"]), taxonomy=taxonomy,
        profile_candidate=int(cfg["profile_index"]),
        workers=int(cfg["workers"]),
    )
    out = _out_dir(cfg)
    n_candidates = int(cfg["profile_candidates"])
    extra = None
    if n_candidates > 1:
        # Alternative top-profiles under distinct sub-seeds; experiments
        # pick one via profile_index, downstream files carry them all.
        extra = {
            u.user_id: [
                list(derive_top_profile(u, taxonomy, int(cfg["T"]), int(cfg["seed"]), candidate=c).top_profile)
                for c in range(n_candidates)
            ]
            for u in users
        }
    write_population(users, out / "population.ndjson", header=file_header(cfg),
                     candidates=extra)
    stats = summarize_population(users)
    for line in stats.lines():
        print(line)
    print(f"wrote {out / 'population.ndjson'}")
    return 0


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, produced_by)
    return path


def _sim_config(cfg: dict) -> SimConfig:
    return SimConfig(
        T=int(cfg["T"]), tau=int(cfg["tau"]), p=float(cfg["p"]),
        epochs=int(cfg["epochs"]), sites=tuple(cfg["sites"]),
        witness_enabled=bool(cfg["witness_enabled"]), seed=int(cfg["seed"]),
    )


def cmd_simulate(cfg: dict) -> int:
    taxonomy = _resolve_taxonomy(cfg)
    out = _out_dir(cfg)
    population = read_population(_require(out / "population.ndjson", "generate"))
    log = run_scenario(population, _sim_config(cfg), taxonomy)
    log.write_ndjson(out / "log.ndjson", header=file_header(cfg))
    log.write_truth_ndjson(out / "truth.ndjson", header=file_header(cfg))
    print(f"simulated {len(population)} users x {len(cfg['sites'])} sites x {cfg['epochs']} epochs")
    print(f"wrote {out / 'log.ndjson'} and {out / 'truth.ndjson'}")
    return 0


def _denoiser_config(cfg: dict) -> DenoiserConfig:
    return DenoiserConfig(
        threshold=int(cfg["threshold"]), tau=int(cfg["tau"]), T=int(cfg["T"]),
        aggressive_gap_rule=bool(cfg["aggressive_gap_rule"]),
    )


def _rebuild_scenario(cfg: dict) -> tuple[Taxonomy, DomainClassification, list, ObservationLog]:
    """Recreate the in-memory scenario for analysis subcommands.

    The NDJSON artifacts are the interchange format; for analysis we
    re-derive the identical log from the recorded seed (draws are keyed,
    so this is byte-exact) rather than reparsing gigabytes.
    """
    taxonomy = _resolve_taxonomy(cfg)
    classification = _resolve_classification(cfg, taxonomy)
    out = _out_dir(cfg)
    population = read_population(_require(out / "population.ndjson", "generate"))
    _require(out / "log.ndjson", "simulate")
    log = run_scenario(population, _sim_config(cfg), taxonomy)
    return taxonomy, classification, population, log


def cmd_denoise(cfg: dict) -> int:
    taxonomy, classification, population, log = _rebuild_scenario(cfg)
    prev = prevalence(classification, taxonomy)
    out = _out_dir(cfg)
    site = cfg["sites"][0]
    traj = denoise_site_trajectory(log.site_view(site), prev, _denoiser_config(cfg), population)
    lines = [csv_header_line(cfg)] + traj.csv_lines()
    (out / "denoise_metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    last = traj.points[-1]
    print(f"site {site}: epoch {last.epoch} tpr={last.metrics.tpr:.4f} fpr={last.metrics.fpr:.4f} "
          f"median_recovered={last.median_recovered:g}")
    print(f"wrote {out / 'denoise_metrics.csv'}")
    return 0


REPORTED_EPOCHS = (1, 2, 5, 10, 15, 20, 25, 30)


def cmd_reidentify(cfg: dict) -> int:
    taxonomy, classification, population, log = _rebuild_scenario(cfg)
    if len(cfg["sites"]) < 2:
        raise ConfigError("reidentify needs two sites in `sites`")
    prev = prevalence(classification, taxonomy)
    out = _out_dir(cfg)
    site_a, site_b = cfg["sites"][0], cfg["sites"][1]
    epochs = [e for e in REPORTED_EPOCHS if e <= int(cfg["epochs"])] or [int(cfg["epochs"])]
    rep = run_reidentification(log, site_a, site_b, prev, _denoiser_config(cfg), report_epochs=epochs)
    lines = [csv_header_line(cfg)] + rep.csv_lines()
    (out / "reid_report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for e in rep.epochs:
        klines = [csv_header_line(cfg)] + rep.k_cdf_csv_lines(e)
        (out / f"reid_kcdf_epoch_{e:02d}.csv").write_text("\n".join(klines) + "\n", encoding="utf-8")
    last = rep.epochs[-1]
    print(f"epoch {last}: unique_rate={rep.unique_rate_at(last):.4f} "
          f"better_than_random={rep.better_than_random_at(last):.4f}")
    print(f"wrote {out / 'reid_report.csv'} and per-epoch k-CDF files")
    return 0


def cmd_analytics(cfg: dict) -> int:
    model = analytics.NoiseModel(
        tau=int(cfg["tau"]), p=float(cfg["p"]),
        omega=_resolve_taxonomy(cfg).omega, T=int(cfg["T"]),
    )
    payload = {"header": file_header(cfg), **analytics.summary(model, n=int(cfg["n_users"]))}
    out = _out_dir(cfg)
    text = json.dumps(payload, indent=2, sort_keys=True)
    (out / "analytics.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_filter(cfg: dict, scores_path: str) -> int:
    taxonomy = _resolve_taxonomy(cfg)
    vectors = load_score_vectors(_require(Path(scores_path), "an external classifier"), taxonomy)
    classification = classify_scores(vectors, FilterParams())
    out = _out_dir(cfg)
    dest = out / "filtered_classification.tsv"
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(csv_header_line(cfg) + "\n")
        for domain, topics in classification.entries.items():
            fh.write(f"{domain}\t{','.join(map(str, sorted(topics)))}\n")
    print(f"filtered {len(vectors)} score vectors -> {dest}")
    return 0


def cmd_report(cfg: dict) -> int:
    """Aggregate plot-ready data: prevalence histogram + copied series."""
    taxonomy = _resolve_taxonomy(cfg)
    classification = _resolve_classification(cfg, taxonomy)
    prev = prevalence(classification, taxonomy)
    out = _out_dir(cfg)
    lines = [csv_header_line(cfg), "topic_id,domain_count"]
    lines += [f"{tid},{int(prev.counts[tid])}" for tid in range(1, taxonomy.omega + 1)]
    (out / "prevalence_hist.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    produced = [out / "prevalence_hist.csv"]
    for name in ("denoise_metrics.csv", "reid_report.csv"):
        if (out / name).exists():
            produced.append(out / name)
    print("report data files:")
    for p in produced:
        print(f"  {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicsim",
        description="Interest-disclosing API simulation: populations, noise removal, re-identification.",
    )
    parser.add_argument("--version", action="version", version=f"topicsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, help="parallelism bound; 0 = available cores")
        p.add_argument("--out", help="output directory (overrides config)")

    for name in ("generate", "simulate", "denoise", "reidentify", "analytics", "report"):
        add_common(sub.add_parser(name))
    pf = sub.add_parser("filter")
    add_common(pf)
    pf.add_argument("--scores", required=True, help="score-vector file (domain<TAB>scores)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "workers": args.workers, "out": args.out}
    try:
        cfg = load_config(args.config, overrides)
        if cfg["workers"] == 0:
            cfg["workers"] = os.cpu_count() or 1
        handlers = {
            "generate": cmd_generate,
            "simulate": cmd_simulate,
            "denoise": cmd_denoise,
            "reidentify": cmd_reidentify,
            "analytics": cmd_analytics,
            "report": cmd_report,
        }
        if args.command == "filter":
            return cmd_filter(cfg, args.scores)
        return handlers[args.command](cfg)
    except (ConfigError, MissingArtifactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
