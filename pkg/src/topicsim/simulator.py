"""Interest-API state machine over a population.

Per (user, site, source epoch) a single pinned draw exists: noisy with
probability p (uniform over the taxonomy), genuine otherwise (uniform
over the user's stable top-T profile). A call at epoch e returns the
draws for source epochs e-tau .. e-1 in shuffled order. Pinning and
cross-worker determinism come from keying every draw on
(seed, user, site, source_epoch) -- there is no shared generator state.

Users are warm-started: profiles are assumed stable for at least tau
epochs before epoch 1, so every call returns exactly tau topics (unless
the witness requirement is enabled and suppresses some).

Ground-truth noise flags live in a separate truth channel never consumed
by adversary-side code; evaluation functions take it explicitly.

Log output: NDJSON, one record per call `{site, user, epoch, topics}`;
truth channel NDJSON `{site, user, source_epoch, topic, noisy}`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import rng
from .population import UserProfile
from .taxonomy import Taxonomy, parent_of

DEFAULT_T = 5
DEFAULT_TAU = 3
DEFAULT_P = 0.05


@dataclass(frozen=True)
class SimConfig:
    T: int = DEFAULT_T
    tau: int = DEFAULT_TAU
    p: float = DEFAULT_P
    epochs: int = 1
    sites: tuple[str, ...] = ()
    witness_enabled: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.tau < 1 or self.T < 1:
            raise ValueError("tau and T must be >= 1")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("duplicate site ids")


@dataclass(frozen=True)
class EpochDraw:
    topic: int
    noisy: bool


@dataclass(frozen=True)
class ApiResult:
    topics: tuple[int, ...]
    epoch: int
    site: str
    user_id: int


def epoch_topic_draw(
    user: UserProfile,
    site: str,
    source_epoch: int,
    config: SimConfig,
    taxonomy: Taxonomy,
) -> EpochDraw:
    """The pinned draw for (user, site, source_epoch).

    Pure function of (seed, user, site, source_epoch): every caller and
    every repeated call sees the same draw.
    """
    if not user.top_profile:
        raise ValueError(f"user {user.user_id} has no top profile")
    key = (config.seed, user.user_id, rng.string_key(site), source_epoch)
    noisy = bool(rng.uniform(*key, rng.TAG_NOISE_FLAG) < config.p)
    u = float(rng.uniform(*key, rng.TAG_TOPIC_PICK))
    if noisy:
        ids = taxonomy.ids()
        topic = ids[int(u * len(ids))]
    else:
        profile = user.top_profile
        topic = profile[int(u * len(profile))]
    return EpochDraw(topic=int(topic), noisy=noisy)


class ObservationLog:
    """Complete per-(site, user, epoch) API results plus the truth channel.

    Results are dense arrays; ApiResult / EpochDraw views are built on
    demand. `slot_sources` records which source epoch produced each
    returned slot, making every returned topic traceable to exactly one
    truth draw.
    """

    def __init__(
        self,
        config: SimConfig,
        user_ids: np.ndarray,
        topics: np.ndarray,        # (site, user, epoch, tau) int16, -1 = suppressed
        slot_sources: np.ndarray,  # (site, user, epoch, tau) int16, source epoch per slot
        truth_topics: np.ndarray,  # (site, user, source) int16
        truth_noisy: np.ndarray,   # (site, user, source) bool
        source_epochs: np.ndarray,  # (n_sources,) the source-epoch axis labels
    ):
        self.config = config
        self.user_ids = user_ids
        self.topics = topics
        self.slot_sources = slot_sources
        self.truth_topics = truth_topics
        self.truth_noisy = truth_noisy
        self.source_epochs = source_epochs
        self._site_index = {s: i for i, s in enumerate(config.sites)}
        self._user_index = {int(u): i for i, u in enumerate(user_ids)}
        self._source_index = {int(e): i for i, e in enumerate(source_epochs)}

    @property
    def sites(self) -> tuple[str, ...]:
        return self.config.sites

    @property
    def epochs(self) -> int:
        return self.config.epochs

    def result(self, site: str, user_id: int, epoch: int) -> ApiResult:
        s, u = self._site_index[site], self._user_index[user_id]
        row = self.topics[s, u, epoch - 1]
        return ApiResult(
            topics=tuple(int(t) for t in row if t >= 0),
            epoch=epoch,
            site=site,
            user_id=user_id,
        )

    def truth_draw(self, site: str, user_id: int, source_epoch: int) -> EpochDraw:
        s, u = self._site_index[site], self._user_index[user_id]
        k = self._source_index[source_epoch]
        return EpochDraw(topic=int(self.truth_topics[s, u, k]), noisy=bool(self.truth_noisy[s, u, k]))

    def history(self, site: str, user_id: int) -> list[ApiResult]:
        return [self.result(site, user_id, e) for e in range(1, self.epochs + 1)]

    def iter_results(self) -> Iterable[ApiResult]:
        for site in self.sites:
            for uid in self.user_ids:
                for e in range(1, self.epochs + 1):
                    yield self.result(site, int(uid), e)

    def total_slots(self) -> int:
        return int(np.sum(self.topics >= 0))

    def noisy_slot_fraction(self) -> float:
        """Fraction of returned slots whose pinned draw was the noise branch."""
        s_idx, u_idx, e_idx, t_idx = np.nonzero(self.topics >= 0)
        src = self.slot_sources[s_idx, u_idx, e_idx, t_idx]
        src_pos = src - int(self.source_epochs[0])
        flags = self.truth_noisy[s_idx, u_idx, src_pos]
        return float(flags.mean()) if len(flags) else 0.0

    def site_view(self, site: str) -> "SiteLog":
        s = self._site_index[site]
        return SiteLog(
            site=site,
            config=self.config,
            user_ids=self.user_ids,
            topics=self.topics[s],
            slot_sources=self.slot_sources[s],
            truth_topics=self.truth_topics[s],
            truth_noisy=self.truth_noisy[s],
            source_epochs=self.source_epochs,
        )

    def write_ndjson(self, path: Union[str, Path], header: Optional[dict] = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header is not None:
                fh.write(json.dumps({"header": header}, separators=(",", ":"), sort_keys=True) + "\n")
            for res in self.iter_results():
                fh.write(
                    json.dumps(
                        {"site": res.site, "user": res.user_id, "epoch": res.epoch,
                         "topics": list(res.topics)},
                        separators=(",", ":"),
                    )
                    + "\n"
                )

    def write_truth_ndjson(self, path: Union[str, Path], header: Optional[dict] = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header is not None:
                fh.write(json.dumps({"header": header}, separators=(",", ":"), sort_keys=True) + "\n")
            for si, site in enumerate(self.sites):
                for ui, uid in enumerate(self.user_ids):
                    for ki, src in enumerate(self.source_epochs):
                        fh.write(
                            json.dumps(
                                {"site": site, "user": int(uid), "source_epoch": int(src),
                                 "topic": int(self.truth_topics[si, ui, ki]),
                                 "noisy": bool(self.truth_noisy[si, ui, ki])},
                                separators=(",", ":"),
                            )
                            + "\n"
                        )


@dataclass
class SiteLog:
    """One site's slice of an ObservationLog (adversary-facing arrays)."""

    site: str
    config: SimConfig
    user_ids: np.ndarray
    topics: np.ndarray        # (user, epoch, tau)
    slot_sources: np.ndarray  # (user, epoch, tau)
    truth_topics: np.ndarray  # (user, source)
    truth_noisy: np.ndarray   # (user, source)
    source_epochs: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def epochs(self) -> int:
        return self.config.epochs


def _profiles_array(population: Sequence[UserProfile], T: int) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([u.user_id for u in population], dtype=np.int64)
    profiles = np.empty((len(population), T), dtype=np.int16)
    for i, u in enumerate(population):
        if len(u.top_profile) != T:
            raise ValueError(f"user {u.user_id} has profile size {len(u.top_profile)}, expected {T}")
        profiles[i] = u.top_profile
    return ids, profiles


def _draws_for_site(
    site: str,
    user_ids: np.ndarray,
    profiles: np.ndarray,
    source_epochs: np.ndarray,
    config: SimConfig,
    taxonomy_ids: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Pinned draws for all (user, source_epoch) pairs on one site."""
    site_key = rng.string_key(site)
    uu = user_ids[:, None]
    ss = source_epochs[None, :]
    noisy = rng.uniform(config.seed, uu, site_key, ss, rng.TAG_NOISE_FLAG) < config.p
    u = rng.uniform(config.seed, uu, site_key, ss, rng.TAG_TOPIC_PICK)
    genuine_idx = (u * config.T).astype(np.int64)
    genuine_topic = profiles[np.arange(len(user_ids))[:, None], genuine_idx]
    noisy_topic = taxonomy_ids[(u * len(taxonomy_ids)).astype(np.int64)]
    topics = np.where(noisy, noisy_topic, genuine_topic).astype(np.int16)
    return topics, noisy


def run_scenario(
    population: Sequence[UserProfile],
    config: SimConfig,
    taxonomy: Taxonomy,
) -> ObservationLog:
    """Simulate every user visiting every site at every epoch.

    One API call per (site, user, epoch). Draws are keyed rather than
    streamed, so any partitioning of the (user x site) work produces
    byte-identical results; this implementation batches it through numpy
    in one pass per site.
    """
    if not population:
        raise ValueError("population must be nonempty")
    user_ids, profiles = _profiles_array(population, config.T)
    n = len(user_ids)
    n_sites = len(config.sites)
    source_epochs = np.arange(1 - config.tau, config.epochs, dtype=np.int64)
    n_src = len(source_epochs)
    taxonomy_ids = np.asarray(taxonomy.ids(), dtype=np.int16)

    truth_topics = np.zeros((n_sites, n, n_src), dtype=np.int16)
    truth_noisy = np.zeros((n_sites, n, n_src), dtype=bool)
    topics = np.full((n_sites, n, config.epochs, config.tau), -1, dtype=np.int16)
    slot_sources = np.zeros((n_sites, n, config.epochs, config.tau), dtype=np.int16)

    for si, site in enumerate(config.sites):
        t, nz = _draws_for_site(site, user_ids, profiles, source_epochs, config, taxonomy_ids)
        truth_topics[si], truth_noisy[si] = t, nz
        site_key = rng.string_key(site)
        for epoch in range(1, config.epochs + 1):
            window = np.arange(epoch - config.tau, epoch)  # source epochs, ascending
            src_pos = window - int(source_epochs[0])
            # Per-call shuffle of the returned array.
            shuffle_keys = rng.uniform(
                config.seed, user_ids[:, None], site_key, epoch,
                rng.TAG_SHUFFLE, np.arange(config.tau)[None, :],
            )
            perm = np.argsort(shuffle_keys, axis=1, kind="stable")
            topics[si, :, epoch - 1, :] = np.take_along_axis(
                t[:, src_pos], perm, axis=1
            )
            slot_sources[si, :, epoch - 1, :] = window[perm]

    log = ObservationLog(
        config=config,
        user_ids=user_ids,
        topics=topics,
        slot_sources=slot_sources,
        truth_topics=truth_topics,
        truth_noisy=truth_noisy,
        source_epochs=source_epochs,
    )
    if config.witness_enabled:
        _apply_witness_requirement(log, population, taxonomy)
    return log


def call_api(
    user: UserProfile,
    site: str,
    epoch: int,
    config: SimConfig,
    taxonomy: Taxonomy,
    witnessed: Optional[set[int]] = None,
) -> ApiResult:
    """Assemble one API result from the pinned per-epoch draws.

    `witnessed` is the caller's set of previously observed topics for
    this user; it is only consulted when the witness requirement is
    enabled, in which case an unwitnessed genuine topic is replaced by
    its parent (if witnessed) or dropped from the result.
    """
    if epoch < 1:
        raise ValueError(f"epoch must be >= 1, got {epoch}")
    draws = [
        (src, epoch_topic_draw(user, site, src, config, taxonomy))
        for src in range(epoch - config.tau, epoch)
    ]
    returned: list[int] = []
    for _, draw in draws:
        topic = draw.topic
        if config.witness_enabled and not draw.noisy:
            seen = witnessed or set()
            if topic not in seen:
                parent = parent_of(taxonomy, topic)
                if parent is not None and parent.id in seen:
                    topic = parent.id
                else:
                    continue
        returned.append(topic)
    perm = rng.permutation(len(returned), config.seed, user.user_id, rng.string_key(site),
                           epoch, rng.TAG_SHUFFLE)
    shuffled = tuple(returned[i] for i in perm)
    return ApiResult(topics=shuffled, epoch=epoch, site=site, user_id=user.user_id)


def _apply_witness_requirement(
    log: ObservationLog, population: Sequence[UserProfile], taxonomy: Taxonomy
) -> None:
    """Replay calls enforcing per-site witnessing (slow object path).

    A genuine topic is returned only if this site already returned it for
    this user within the previous tau epochs; otherwise its parent is
    substituted when witnessed, else the slot is suppressed (-1). Noisy
    topics pass through unconditionally.
    """
    config = log.config
    parent_cache = {t.id: (parent_of(taxonomy, t.id).id if parent_of(taxonomy, t.id) else -1)
                    for t in taxonomy.topics}
    for si, site in enumerate(log.sites):
        for ui, uid in enumerate(log.user_ids):
            seen_by_epoch: dict[int, set[int]] = {}
            for epoch in range(1, config.epochs + 1):
                window = range(max(1, epoch - config.tau), epoch)
                witnessed: set[int] = set()
                for w in window:
                    witnessed |= seen_by_epoch.get(w, set())
                returned: set[int] = set()
                for slot in range(config.tau):
                    src = int(log.slot_sources[si, ui, epoch - 1, slot])
                    src_pos = src - int(log.source_epochs[0])
                    was_noisy = bool(log.truth_noisy[si, ui, src_pos])
                    topic = int(log.topics[si, ui, epoch - 1, slot])
                    if topic < 0 or was_noisy:
                        if topic >= 0:
                            returned.add(topic)
                        continue
                    if topic not in witnessed:
                        parent = parent_cache.get(topic, -1)
                        if parent >= 0 and parent in witnessed:
                            log.topics[si, ui, epoch - 1, slot] = parent
                            returned.add(parent)
                        else:
                            log.topics[si, ui, epoch - 1, slot] = -1
                    else:
                        returned.add(topic)
                seen_by_epoch[epoch] = returned
