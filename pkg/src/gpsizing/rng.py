"""Deterministic random streams.

Every stochastic component in this package draws from a SeededRng. A stream is
identified by (seed, stream); the same pair always reproduces the same draw
sequence, on any platform, which is what makes runs, trials and sweeps
byte-reproducible. Independent work units (GP runs inside a trial, bisection
repetitions, ...) get their own child streams via spawn(), so results do not
depend on execution order.
"""

from __future__ import annotations

import hashlib
import random

_MASK64 = (1 << 64) - 1


def _derive_state(seed: int, stream: int) -> int:
    # sha256 makes unrelated (seed, stream) pairs decorrelated even for
    # small consecutive seeds, and is stable across platforms.
    payload = (seed & _MASK64).to_bytes(8, "little") + (stream & _MASK64).to_bytes(8, "little")
    return int.from_bytes(hashlib.sha256(payload).digest()[:16], "little")


class SeededRng:
    """A named, reproducible random stream.

    Wraps ``random.Random`` seeded from a hash of (seed, stream). Only the
    Mersenne-Twister methods with cross-version reproducibility guarantees
    are exposed (random, randrange, choice, shuffle, getrandbits).
    """

    __slots__ = ("seed", "stream", "_rand")

    def __init__(self, seed: int, stream: int = 0):
        self.seed = seed & _MASK64
        self.stream = stream & _MASK64
        self._rand = random.Random(_derive_state(self.seed, self.stream))

    def spawn(self, index: int) -> "SeededRng":
        """Child stream `index` of this stream; disjoint from all siblings."""
        return SeededRng(self.seed, _derive_state(self.stream, index) & _MASK64)

    def random(self) -> float:
        return self._rand.random()

    def randrange(self, n: int) -> int:
        return self._rand.randrange(n)

    def choice(self, seq):
        return self._rand.choice(seq)

    def shuffle(self, seq) -> None:
        self._rand.shuffle(seq)

    def getrandbits(self, k: int) -> int:
        return self._rand.getrandbits(k)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"
