import numpy as np
import pytest
from scipy import stats

from conftest import make_profile
from topicsim.population import UserProfile
from topicsim.simulator import (
    SimConfig,
    call_api,
    epoch_topic_draw,
    run_scenario,
)


def users_with_random_profiles(n, seed0=0):
    return [
        UserProfile(i, frozenset(), frozenset(), make_profile(seed0 + i)) for i in range(n)
    ]


def single_profile_users(n, profile=(1, 2, 3, 4, 5)):
    return [UserProfile(i, frozenset(), frozenset(), tuple(profile)) for i in range(n)]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(p=1.5)
    with pytest.raises(ValueError):
        SimConfig(tau=0)
    with pytest.raises(ValueError):
        SimConfig(sites=("a", "a"))


def test_no_noise_draw_stays_in_profile(taxonomy):
    user = users_with_random_profiles(1)[0]
    cfg = SimConfig(p=0.0, seed=5)
    for src in range(-2, 30):
        draw = epoch_topic_draw(user, "w", src, cfg, taxonomy)
        assert draw.topic in user.top_profile
        assert not draw.noisy


def test_all_noise_uniform_over_taxonomy(taxonomy):
    """1e6 pure-noise draws: per-topic counts within the binomial band."""
    cfg = SimConfig(p=1.0, epochs=1, sites=("w",), seed=11)
    users = single_profile_users(334_000)
    log = run_scenario(users, cfg, taxonomy)
    counts = np.bincount(log.truth_topics.ravel(), minlength=350)[1:]
    n = counts.sum()
    assert n >= 1_000_000
    expected = n / 349
    sd = np.sqrt(n * (1 / 349) * (348 / 349))
    assert np.abs(counts - expected).max() <= 3 * sd
    assert log.truth_noisy.all()


def test_pinning_repeated_calls_identical(taxonomy):
    user = users_with_random_profiles(1)[0]
    cfg = SimConfig(seed=9)
    a = epoch_topic_draw(user, "site-x", 4, cfg, taxonomy)
    b = epoch_topic_draw(user, "site-x", 4, cfg, taxonomy)
    assert a == b


def test_pinning_matches_scenario_arrays(taxonomy):
    users = users_with_random_profiles(50)
    cfg = SimConfig(epochs=10, sites=("wa", "wb"), seed=31)
    log = run_scenario(users, cfg, taxonomy)
    rng = np.random.default_rng(0)
    for _ in range(300):
        u = int(rng.integers(50))
        site = cfg.sites[int(rng.integers(2))]
        src = int(rng.integers(1 - cfg.tau, cfg.epochs))
        assert epoch_topic_draw(users[u], site, src, cfg, taxonomy) == log.truth_draw(site, u, src)


def test_call_returns_tau_topics(taxonomy):
    user = users_with_random_profiles(1)[0]
    res = call_api(user, "w", 5, SimConfig(seed=2), taxonomy)
    assert len(res.topics) == 3


def test_single_topic_profile_all_slots_equal(taxonomy):
    user = UserProfile(0, frozenset(), frozenset(), (42,) * 5)
    res = call_api(user, "w", 3, SimConfig(p=0.0, seed=7), taxonomy)
    assert res.topics == (42, 42, 42)


def test_sites_give_independent_draws(taxonomy):
    users = users_with_random_profiles(200)
    cfg = SimConfig(epochs=1, sites=("wa", "wb"), seed=13)
    log = run_scenario(users, cfg, taxonomy)
    same = log.truth_topics[0] == log.truth_topics[1]
    # Same-profile draws coincide by chance ~1/5; never systematically.
    frac = float(same.mean())
    assert 0.05 < frac < 0.5


def test_cross_site_independence_chi_square(taxonomy):
    """Joint per-source draws at two sites: chi-square does not reject
    independence at alpha=0.01."""
    users = single_profile_users(100_000)
    cfg = SimConfig(p=0.0, epochs=1, sites=("wa", "wb"), seed=17)
    log = run_scenario(users, cfg, taxonomy)
    a = log.truth_topics[0][:, 0]
    b = log.truth_topics[1][:, 0]
    table = np.zeros((5, 5))
    for i, ta in enumerate((1, 2, 3, 4, 5)):
        for j, tb in enumerate((1, 2, 3, 4, 5)):
            table[i, j] = np.sum((a == ta) & (b == tb))
    chi2, p_value, _, _ = stats.chi2_contingency(table)
    assert p_value > 0.01


def test_epoch_must_be_positive(taxonomy):
    user = users_with_random_profiles(1)[0]
    with pytest.raises(ValueError):
        call_api(user, "w", 0, SimConfig(), taxonomy)


def test_scenario_complete_logs_and_noise_rate(taxonomy):
    users = users_with_random_profiles(2500)
    cfg = SimConfig(epochs=10, sites=("wa", "wb"), seed=23)
    log = run_scenario(users, cfg, taxonomy)
    assert log.total_slots() == 2500 * 2 * 10 * 3
    m = log.total_slots()
    sd = np.sqrt(0.05 * 0.95 / m)
    assert abs(log.noisy_slot_fraction() - 0.05) < 4 * sd


def test_scenario_empty_site_list(taxonomy):
    users = users_with_random_profiles(3)
    log = run_scenario(users, SimConfig(epochs=4, sites=(), seed=1), taxonomy)
    assert log.total_slots() == 0
    assert list(log.iter_results()) == []


def test_scenario_rejects_empty_population(taxonomy):
    with pytest.raises(ValueError):
        run_scenario([], SimConfig(sites=("w",)), taxonomy)


def test_object_api_agrees_with_scenario(taxonomy):
    users = users_with_random_profiles(20)
    cfg = SimConfig(epochs=6, sites=("wa",), seed=3)
    log = run_scenario(users, cfg, taxonomy)
    for u in (0, 7, 19):
        for epoch in (1, 4, 6):
            assert call_api(users[u], "wa", epoch, cfg, taxonomy) == log.result("wa", u, epoch)


def test_slots_trace_to_truth_draws(taxonomy):
    users = users_with_random_profiles(30)
    cfg = SimConfig(epochs=5, sites=("wa",), seed=43)
    log = run_scenario(users, cfg, taxonomy)
    for u in range(30):
        for epoch in range(1, 6):
            res = log.result("wa", u, epoch)
            sources = log.slot_sources[0, u, epoch - 1]
            assert sorted(sources) == list(range(epoch - 3, epoch))
            for slot, topic in enumerate(res.topics):
                draw = log.truth_draw("wa", u, int(sources[slot]))
                assert draw.topic == topic


def test_scenario_deterministic(taxonomy):
    users = users_with_random_profiles(40)
    cfg = SimConfig(epochs=5, sites=("wa", "wb"), seed=77)
    a = run_scenario(users, cfg, taxonomy)
    b = run_scenario(users, cfg, taxonomy)
    assert np.array_equal(a.topics, b.topics)
    assert np.array_equal(a.truth_noisy, b.truth_noisy)


def test_truth_channel_separate_from_results(taxonomy, tmp_path):
    users = users_with_random_profiles(5)
    cfg = SimConfig(epochs=2, sites=("wa",), seed=5)
    log = run_scenario(users, cfg, taxonomy)
    log_path, truth_path = tmp_path / "log.ndjson", tmp_path / "truth.ndjson"
    log.write_ndjson(log_path, header={"seed": 5})
    log.write_truth_ndjson(truth_path, header={"seed": 5})
    log_lines = log_path.read_text().splitlines()
    truth_lines = truth_path.read_text().splitlines()
    assert log_lines[0].startswith('{"header"')
    assert len(log_lines) == 1 + 5 * 2
    assert len(truth_lines) == 1 + 5 * (2 + 3 - 1)
    assert "noisy" not in log_lines[1]
    assert "noisy" in truth_lines[1]


def test_witness_requirement_suppresses_unseen_genuine(taxonomy):
    users = single_profile_users(300)
    cfg = SimConfig(p=0.0, epochs=6, sites=("wa",), seed=19, witness_enabled=True)
    log = run_scenario(users, cfg, taxonomy)
    first = [log.result("wa", u, 1) for u in range(300)]
    # Nothing witnessed before epoch 1 and no noisy topics: all suppressed.
    assert all(len(r.topics) == 0 for r in first)


def test_witness_passes_noisy_topics_through(taxonomy):
    users = single_profile_users(400)
    cfg = SimConfig(p=1.0, epochs=1, sites=("wa",), seed=19, witness_enabled=True)
    log = run_scenario(users, cfg, taxonomy)
    assert log.total_slots() == 400 * 3
