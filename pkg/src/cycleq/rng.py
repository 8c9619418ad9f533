"""Counter-based uniform streams.

Every uniform is a pure function of ``(seed, domain, stream_id, counter)``,
so a shot's draws do not depend on how shots are batched or scheduled.
The mixing function is the SplitMix64 finalizer, applied to a keyed
combination of the inputs. Scalar draws use Python integers and batched
draws use ``uint64`` arrays; the two paths agree bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)

# domains keep engine streams apart under one user seed
DOMAIN_SCHEDULE = 0
DOMAIN_ORACLE = 1
DOMAIN_LITERAL = 2


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def _key(seed: int, domain: int) -> int:
    return _mix((seed + _GOLDEN * (domain + 1)) & MASK64)


def _stream_key(key: int, stream: int) -> int:
    return _mix(key ^ _mix((stream * _GOLDEN + 1) & MASK64))


def _value(skey: int, counter: int) -> int:
    return _mix((skey + (counter + 1) * _GOLDEN) & MASK64)


class RandomSource:
    """One shot's stream of uniforms on [0, 1).

    >>> a = RandomSource(42, 7); b = RandomSource(42, 7)
    >>> a.draw() == b.draw()
    True
    """

    __slots__ = ("seed", "stream_id", "domain", "counter", "_skey")

    def __init__(self, seed: int, stream_id: int = 0, domain: int = DOMAIN_SCHEDULE, counter: int = 0):
        self.seed = check_seed(seed)
        self.stream_id = check_seed(stream_id)
        self.domain = domain
        self.counter = counter
        self._skey = _stream_key(_key(self.seed, domain), self.stream_id)

    def draw(self) -> float:
        v = _value(self._skey, self.counter)
        self.counter += 1
        return (v >> 11) * _INV_2_53

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream_id={self.stream_id}, domain={self.domain}, counter={self.counter})"


def draw_instant(rng: RandomSource) -> float:
    """Measurement instant reduced modulo the cycle, uniform on [0, 1)."""
    return rng.draw()


def uniforms(seed: int, streams: np.ndarray, counter: int, domain: int = DOMAIN_SCHEDULE) -> np.ndarray:
    """The ``counter``-th draw of every stream in ``streams``, vectorized."""
    key = np.uint64(_key(check_seed(seed), domain))
    s = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        inner = _mix_array(s * np.uint64(_GOLDEN) + np.uint64(1))
        skey = _mix_array(key ^ inner)
        v = _mix_array(skey + np.uint64(((counter + 1) * _GOLDEN) & MASK64))
    return (v >> np.uint64(11)).astype(np.float64) * _INV_2_53
