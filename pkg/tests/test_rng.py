import numpy as np
import pytest

from cycleq.rng import DOMAIN_ORACLE, RandomSource, draw_instant, uniforms


def ks_statistic(sample):
    x = np.sort(np.asarray(sample))
    n = x.size
    i = np.arange(1, n + 1)
    return max(np.max(i / n - x), np.max(x - (i - 1) / n))


def test_same_seed_and_stream_repeat():
    a = RandomSource(42, 3)
    b = RandomSource(42, 3)
    assert [draw_instant(a) for _ in range(10)] == [draw_instant(b) for _ in range(10)]


def test_streams_differ():
    a = [RandomSource(42, 0).draw() for _ in range(1)]
    b = [RandomSource(42, 1).draw() for _ in range(1)]
    assert a != b
    ra, rb = RandomSource(42, 0), RandomSource(42, 1)
    assert [ra.draw() for _ in range(20)] != [rb.draw() for _ in range(20)]


def test_domains_differ():
    assert RandomSource(1, 0).draw() != RandomSource(1, 0, DOMAIN_ORACLE).draw()


def test_uniform_ks():
    r = RandomSource(2024, 0)
    sample = [r.draw() for _ in range(100_000)]
    assert all(0.0 <= u < 1.0 for u in sample)
    assert ks_statistic(sample) < 0.006


def test_uniform_ks_across_streams():
    sample = uniforms(7, np.arange(100_000), 0)
    assert ks_statistic(sample) < 0.006


@pytest.mark.parametrize("counter", [0, 1, 17])
def test_vector_matches_scalar(counter):
    streams = np.array([0, 1, 5, 2**40, 2**64 - 1], dtype=np.uint64)
    vec = uniforms(99, streams, counter, DOMAIN_ORACLE)
    for s, v in zip(streams.tolist(), vec):
        r = RandomSource(99, s, DOMAIN_ORACLE, counter=counter)
        assert r.draw() == v


def test_seed_range():
    with pytest.raises(ValueError):
        RandomSource(-1)
    with pytest.raises(ValueError):
        RandomSource(2**64)
    RandomSource(2**64 - 1).draw()
