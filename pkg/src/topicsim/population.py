"""Synthetic user populations over a totally ordered top-domain list.

The total order concatenates: a fixed head of globally dominant sites,
then each rank bucket of the source top list in ascending bucket order,
sorted inside the bucket by the registrable-domain (eTLD+1) rank of a
second list, unranked domains after ranked ones, ties lexicographic.

Users draw a unique-domain count from a configurable model, then that
many distinct domains weighted by a traffic model. Observed topics are
the union of the classification sets of the visited domains; the stable
top-T interest profile samples uniformly from observed topics, padded
with uniform taxonomy draws when fewer than T were observed.

All sampling is keyed on (seed, user_id), so generation is reproducible
and embarrassingly parallel.

File formats: rank-bucket CSV `origin,rank_bucket`; rank list CSV
`rank,domain`; count-histogram CSV `unique_domain_count,user_fraction`;
population output NDJSON, one user per line.
"""

from __future__ import annotations

import contextlib
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import rng
from .classification import DomainClassification
from .taxonomy import Taxonomy

logger = logging.getLogger(__name__)

# Globally dominant sites pinned to the head of the total order.
DEFAULT_FIXED_TOP = (
    "www.google.com",
    "www.youtube.com",
    "www.facebook.com",
    "www.whatsapp.com",
    "www.roblox.com",
    "www.amazon.com",
)

BUCKET_LABELS = ("1k", "5k", "10k", "50k", "100k", "500k", "1M")
_BUCKET_SIZES = {"1k": 1_000, "5k": 5_000, "10k": 10_000, "50k": 50_000,
                 "100k": 100_000, "500k": 500_000, "1M": 1_000_000}


class PopulationError(ValueError):
    pass


@dataclass(frozen=True)
class RankedDomainList:
    """Domains in total-order positions 1..M, no duplicates."""

    domains: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.domains)) != len(self.domains):
            raise PopulationError("ranked domain list contains duplicates")

    def __len__(self) -> int:
        return len(self.domains)

    def position(self, domain: str) -> int:
        """1-based total-order position."""
        return self.domains.index(domain) + 1


# --- eTLD+1 ------------------------------------------------------------

_SUFFIXES: Optional[frozenset[str]] = None


def _public_suffixes() -> frozenset[str]:
    global _SUFFIXES
    if _SUFFIXES is None:
        ref = resources.files("topicsim.data").joinpath("public_suffixes.dat")
        lines = ref.read_text(encoding="utf-8").splitlines()
        _SUFFIXES = frozenset(
            ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")
        )
    return _SUFFIXES


def etld_plus_one(hostname: str) -> str:
    """Registrable domain under the bundled suffix snapshot.

    Falls back to the last two labels when no suffix matches.
    """
    host = hostname.strip().lower().rstrip(".")
    if host.startswith(("http://", "https://")):
        host = host.split("://", 1)[1].split("/", 1)[0]
    labels = host.split(".")
    if len(labels) <= 1:
        return host
    suffixes = _public_suffixes()
    # Candidates shrink as i grows, so the first hit is the longest match.
    for i in range(1, len(labels)):
        if ".".join(labels[i:]) in suffixes:
            return ".".join(labels[i - 1:])
    return ".".join(labels[-2:])


# --- total order --------------------------------------------------------


def _normalize_bucket(raw: Union[str, int]) -> str:
    s = str(raw).strip()
    if s in _BUCKET_SIZES:
        return s
    try:
        size = int(s)
    except ValueError:
        raise PopulationError(f"unknown rank bucket {raw!r}") from None
    for label, n in _BUCKET_SIZES.items():
        if n == size:
            return label
    raise PopulationError(f"unknown rank bucket {raw!r}")


def build_total_order(
    crux_bins: Mapping[str, Union[str, int]],
    tranco_ranks: Mapping[str, int],
    fixed_top: Sequence[str] = DEFAULT_FIXED_TOP,
    radar_order: Sequence[str] = (),
) -> RankedDomainList:
    """Total order over bucketed domains.

    crux_bins maps each origin to its rank bucket; tranco_ranks maps
    eTLD+1 to rank. fixed_top domains must be present in crux_bins and
    take positions 1..len(fixed_top) in the given order. radar_order is
    an optional secondary tie-breaker (position in a global eTLD+1
    ranking) applied after the primary rank and before the lexicographic
    fallback.
    """
    buckets: dict[str, list[str]] = {label: [] for label in BUCKET_LABELS}
    seen: dict[str, str] = {}
    for domain, raw_bucket in crux_bins.items():
        label = _normalize_bucket(raw_bucket)
        if domain in seen:
            raise PopulationError(f"domain {domain!r} appears in multiple buckets")
        seen[domain] = label
        buckets[label].append(domain)

    for d in fixed_top:
        if d not in seen:
            raise PopulationError(f"fixed_top domain {d!r} not present in the input")
    fixed_set = set(fixed_top)
    radar_pos = {d: i for i, d in enumerate(radar_order)}
    big = 1 << 60

    def sort_key(domain: str):
        e = etld_plus_one(domain)
        return (tranco_ranks.get(e, big), radar_pos.get(e, big), domain)

    ordered: list[str] = list(fixed_top)
    for label in BUCKET_LABELS:
        members = [d for d in buckets[label] if d not in fixed_set]
        ordered.extend(sorted(members, key=sort_key))
    return RankedDomainList(domains=tuple(ordered))


def load_bucket_file(source: Union[str, Path, IO[str]]) -> dict[str, str]:
    """CSV `origin,rank_bucket` (header optional)."""
    out: dict[str, str] = {}
    with _open(source) as fh:
        for row in csv.reader(fh):
            if not row or row[0].lower() in ("origin", "domain"):
                continue
            out[row[0].strip()] = row[1].strip()
    return out


def load_rank_file(source: Union[str, Path, IO[str]]) -> dict[str, int]:
    """CSV `rank,domain` (header optional)."""
    out: dict[str, int] = {}
    with _open(source) as fh:
        for row in csv.reader(fh):
            if not row or row[0].lower() == "rank":
                continue
            out[row[1].strip()] = int(row[0])
    return out


def _open(source):
    if hasattr(source, "read"):
        return contextlib.nullcontext(source)
    return open(source, "r", encoding="utf-8", newline="")


# --- traffic & count models ---------------------------------------------


@dataclass(frozen=True)
class TrafficModel:
    """Visit-probability distribution over total-order positions.

    kind "zipf": weight 1/rank^exponent. kind "binned-empirical":
    probability mass per rank bucket, spread uniformly inside the bucket.
    """

    kind: str = "zipf"
    exponent: float = 1.0
    bin_weights: Mapping[str, float] = field(default_factory=dict)

    def weights(self, m: int) -> np.ndarray:
        if self.kind == "zipf":
            w = np.arange(1, m + 1, dtype=np.float64) ** -self.exponent
        elif self.kind == "binned-empirical":
            w = np.zeros(m, dtype=np.float64)
            lo = 0
            for label in BUCKET_LABELS:
                hi = min(_BUCKET_SIZES[label], m)
                if hi <= lo:
                    continue
                mass = float(self.bin_weights.get(label, 0.0))
                w[lo:hi] = mass / (hi - lo)
                lo = hi
            if w.sum() <= 0:
                raise PopulationError("binned traffic model has no mass on the list")
        else:
            raise PopulationError(f"unknown traffic model kind {self.kind!r}")
        w /= w.sum()
        if abs(w.sum() - 1.0) > 1e-9:
            raise PopulationError("traffic weights do not normalize")
        return w


@dataclass(frozen=True)
class UniqueDomainCountModel:
    """Distribution of the number of unique domains a user visits per epoch.

    kind "lognormal": exp(N(mu, sigma)) rounded, clamped to [minimum,
    maximum]. kind "empirical-histogram": integer support with explicit
    probabilities. The lognormal defaults approximate the published
    week-scale shape: median around 30 unique domains, long right tail.
    """

    kind: str = "lognormal"
    mu: float = math.log(30.0)
    sigma: float = 0.85
    minimum: int = 1
    maximum: int = 10_000
    support: tuple[int, ...] = ()
    probabilities: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "empirical-histogram":
            if len(self.support) != len(self.probabilities) or not self.support:
                raise PopulationError("histogram model needs matching support/probabilities")
            if any(k < 1 for k in self.support):
                raise PopulationError("histogram support must be positive integers")
            total = float(sum(self.probabilities))
            if abs(total - 1.0) > 1e-6:
                raise PopulationError(f"histogram probabilities sum to {total}, expected 1")
        elif self.kind != "lognormal":
            raise PopulationError(f"unknown count model kind {self.kind!r}")

    def sample(self, n: int, seed: int) -> np.ndarray:
        u = rng.counter_stream(n, seed, rng.TAG_DOMAIN_COUNT)
        if self.kind == "lognormal":
            # Inverse-CDF via the probit; u is strictly inside (0, 1).
            z = np.sqrt(2.0) * _erfinv(2.0 * np.clip(u, 1e-12, 1 - 1e-12) - 1.0)
            k = np.rint(np.exp(self.mu + self.sigma * z)).astype(np.int64)
            return np.clip(k, self.minimum, self.maximum)
        cdf = np.cumsum(np.asarray(self.probabilities, dtype=np.float64))
        idx = np.searchsorted(cdf, u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return np.asarray(self.support, dtype=np.int64)[idx]

    def cdf(self, ks: np.ndarray) -> np.ndarray:
        """P(count <= k), for distribution-convergence checks.

        Clamping piles tail mass onto the boundary values, so inside the
        clamp range the cdf equals the rounded-lognormal cdf unchanged.
        """
        ks = np.atleast_1d(ks)
        if self.kind == "lognormal":
            lo = np.log(np.maximum(ks + 0.5, 1e-9))
            base = 0.5 * (1.0 + _erf((lo - self.mu) / (self.sigma * math.sqrt(2.0))))
            out = np.where(ks < self.minimum, 0.0, base)
            return np.where(ks >= self.maximum, 1.0, out)
        support = np.asarray(self.support)
        probs = np.asarray(self.probabilities)
        return np.array([probs[support <= k].sum() for k in ks])


def _erf(x):
    from numpy import vectorize

    return vectorize(math.erf)(x)


def _erfinv(y: np.ndarray) -> np.ndarray:
    # Winitzki's approximation refined by two Newton steps; plenty for
    # sampling integer counts.
    a = 0.147
    ln1my2 = np.log(1.0 - y * y)
    t1 = 2.0 / (math.pi * a) + ln1my2 / 2.0
    x = np.sign(y) * np.sqrt(np.sqrt(t1 * t1 - ln1my2 / a) - t1)
    for _ in range(2):
        err = _erf(x) - y
        x = x - err / (2.0 / math.sqrt(math.pi) * np.exp(-x * x))
    return x


def load_count_histogram(source: Union[str, Path, IO[str]]) -> UniqueDomainCountModel:
    """CSV `unique_domain_count,user_fraction` (header optional)."""
    support, probs = [], []
    with _open(source) as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip().isdigit():
                continue
            support.append(int(row[0]))
            probs.append(float(row[1]))
    total = sum(probs)
    probs = [p / total for p in probs]
    return UniqueDomainCountModel(
        kind="empirical-histogram", support=tuple(support), probabilities=tuple(probs)
    )


# --- users ---------------------------------------------------------------


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    visited_domains: frozenset[str]
    observed_topics: frozenset[int]
    top_profile: tuple[int, ...]  # sorted, exactly T entries once derived

    def to_json(self) -> str:
        return json.dumps(
            {
                "user_id": self.user_id,
                "visited_domains": sorted(self.visited_domains),
                "observed_topics": sorted(self.observed_topics),
                "top_profile": list(self.top_profile),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "UserProfile":
        obj = json.loads(line)
        return cls(
            user_id=obj["user_id"],
            visited_domains=frozenset(obj["visited_domains"]),
            observed_topics=frozenset(obj["observed_topics"]),
            top_profile=tuple(obj["top_profile"]),
        )


def _sample_distinct_domains(
    k: int, cdf: np.ndarray, seed: int, user_id: int
) -> list[int]:
    """k distinct positions, traffic-weighted.

    Draws with replacement and keeps first occurrences, which realizes
    successive weighted sampling without replacement.
    """
    chosen: dict[int, None] = {}
    counter = 0
    m = len(cdf)
    while len(chosen) < k:
        batch = max(2 * (k - len(chosen)), 16)
        u = rng.counter_stream(batch, seed, rng.TAG_DOMAIN_PICK, user_id, counter)
        counter += 1
        for idx in np.searchsorted(cdf, u, side="right"):
            if len(chosen) == k:
                break
            chosen.setdefault(min(int(idx), m - 1))
    return list(chosen)


def derive_top_profile(
    user: UserProfile,
    taxonomy: Taxonomy,
    T: int,
    seed: int,
    candidate: int = 0,
) -> UserProfile:
    """Fill in the stable top-T profile for a user.

    Uniform sample of T distinct observed topics; when fewer than T were
    observed, the remainder is drawn uniformly (distinct) from the
    taxonomy, mirroring the noise mechanism's padding. `candidate`
    selects one of up to 10 alternative profiles under distinct
    sub-seeds.
    """
    if not 0 <= candidate < 10:
        raise PopulationError(f"candidate index must be in [0, 10), got {candidate}")
    observed = sorted(user.observed_topics)
    picks: list[int] = []
    if observed:
        perm = rng.permutation(len(observed), seed, rng.TAG_PROFILE, user.user_id, candidate)
        picks = [observed[i] for i in perm[:T]]
    if len(picks) < T:
        all_ids = taxonomy.ids()
        counter = 0
        have = set(picks)
        while len(picks) < T:
            u = rng.counter_stream(16, seed, rng.TAG_PROFILE_FILL, user.user_id, candidate, counter)
            counter += 1
            for tid in (np.asarray(all_ids)[(u * len(all_ids)).astype(np.int64)]):
                tid = int(tid)
                if len(picks) >= T:
                    break
                if tid not in have:
                    have.add(tid)
                    picks.append(tid)
    return UserProfile(
        user_id=user.user_id,
        visited_domains=user.visited_domains,
        observed_topics=user.observed_topics,
        top_profile=tuple(sorted(picks)),
    )


# Shared state for fork-based worker processes; set just before forking.
_FORK_STATE: dict = {}


def _build_user(uid: int, k: int) -> UserProfile:
    st = _FORK_STATE
    positions = _sample_distinct_domains(k, st["cdf"], st["seed"], uid)
    domains = st["domains"]
    topic_lookup = st["topic_lookup"]
    visited = frozenset(domains[i] for i in positions)
    observed = frozenset().union(*(topic_lookup[i] for i in positions)) if positions else frozenset()
    base = UserProfile(uid, visited, observed, top_profile=())
    if st["taxonomy"] is None:
        return base
    return derive_top_profile(base, st["taxonomy"], st["T"], st["seed"], candidate=st["candidate"])


def _build_chunk(bounds: tuple[int, int]) -> list[UserProfile]:
    lo, hi = bounds
    ks = _FORK_STATE["ks"]
    return [_build_user(uid, int(ks[uid])) for uid in range(lo, hi)]


def generate_population(
    n: int,
    order: RankedDomainList,
    traffic: TrafficModel,
    counts: UniqueDomainCountModel,
    classification: DomainClassification,
    seed: int,
    T: int = 5,
    taxonomy: Optional[Taxonomy] = None,
    profile_candidate: int = 0,
    workers: int = 1,
) -> list[UserProfile]:
    """Generate n users with visited domains, observed topics, and top-T profiles.

    Deterministic for a fixed seed; per-user substreams are keyed on
    (seed, user_id), so any partition of users across workers yields
    identical results (users are reassembled in user_id order). Counts
    exceeding the list length are clamped (logged).
    """
    if n < 1:
        raise PopulationError(f"population size must be >= 1, got {n}")
    m = len(order)
    cdf = np.cumsum(traffic.weights(m))
    ks = counts.sample(n, seed)
    clamped = int(np.sum(ks > m))
    if clamped:
        logger.warning("clamped unique-domain count to %d for %d of %d users", m, clamped, n)
    ks = np.minimum(ks, m)

    _FORK_STATE.update(
        cdf=cdf,
        seed=seed,
        domains=order.domains,
        topic_lookup=[classification.topics_of(d) for d in order.domains],
        taxonomy=taxonomy,
        T=T,
        candidate=profile_candidate,
        ks=ks,
    )
    try:
        import multiprocessing as mp

        use_fork = workers > 1 and n >= 4 * workers and "fork" in mp.get_all_start_methods()
        if use_fork:
            step = -(-n // workers)
            bounds = [(lo, min(lo + step, n)) for lo in range(0, n, step)]
            with mp.get_context("fork").Pool(processes=workers) as pool:
                chunks = pool.map(_build_chunk, bounds)
            return [u for chunk in chunks for u in chunk]
        return _build_chunk((0, n))
    finally:
        _FORK_STATE.clear()


def write_population(
    users: Iterable[UserProfile],
    path: Union[str, Path],
    header: Optional[dict] = None,
    candidates: Optional[Mapping[int, list[list[int]]]] = None,
) -> None:
    """NDJSON, one user per line; `candidates` optionally attaches the
    alternative top-profile sets per user."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"header": header}, separators=(",", ":"), sort_keys=True) + "\n")
        for u in users:
            if candidates is None:
                fh.write(u.to_json() + "\n")
            else:
                record = json.loads(u.to_json())
                record["top_profile_candidates"] = candidates[u.user_id]
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def read_population(path: Union[str, Path]) -> list[UserProfile]:
    users = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith('{"header"'):
                continue
            users.append(UserProfile.from_json(line))
    return users


@dataclass(frozen=True)
class PopulationStats:
    n_users: int
    unique_observed_domains: int
    unique_observed_topics: int
    unique_top_profiles: int

    def lines(self) -> list[str]:
        return [
            f"Number of users              {self.n_users}",
            f"Unique observed domains      {self.unique_observed_domains}",
            f"Unique observed topics       {self.unique_observed_topics}",
            f"Unique top profiles          {self.unique_top_profiles}",
        ]


def summarize_population(users: Sequence[UserProfile]) -> PopulationStats:
    domains: set[str] = set()
    topics: set[int] = set()
    profiles: set[tuple[int, ...]] = set()
    for u in users:
        domains.update(u.visited_domains)
        topics.update(u.observed_topics)
        # Taxonomy padding counts as observed for reporting purposes.
        topics.update(u.top_profile)
        profiles.add(u.top_profile)
    return PopulationStats(
        n_users=len(users),
        unique_observed_domains=len(domains),
        unique_observed_topics=len(topics),
        unique_top_profiles=len(profiles),
    )
