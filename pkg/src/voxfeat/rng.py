"""Portable seeded random streams.

Every random draw in the package comes from :class:`PhiloxStream`, which wraps
NumPy's Philox4x64-10 counter-based bit generator and derives floats from its
raw 64-bit words with explicitly written transforms:

* uniform in [0, 1):   ``(word >> 11) * 2**-53``
* uniform in (0, 1]:   ``((word >> 11) + 1) * 2**-53``
* standard normal:     Box-Muller on consecutive word pairs ``(u1, u2)``,
  ``r = sqrt(-2 ln u1)``, emitting ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``

The raw Philox stream is covered by NumPy's bit-stream stability guarantee, so
the derived values do not depend on ``Generator`` method internals, which NumPy
reserves the right to change between releases.
"""
from __future__ import annotations

import numpy as np

_TWO_M53 = 2.0 ** -53


class PhiloxStream:
    """Sequential random stream keyed by an integer seed."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self._bitgen = np.random.Philox(self.seed)

    def raw(self, n: int) -> np.ndarray:
        return np.asarray(self._bitgen.random_raw(int(n)), dtype=np.uint64)

    def uniform(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def _uniform_open0(self, n: int) -> np.ndarray:
        return ((self.raw(n) >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_M53

    def normal(self, n: int) -> np.ndarray:
        n = int(n)
        pairs = (n + 1) // 2
        u = self._uniform_open0(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = r * np.cos(theta)
        out[:, 1] = r * np.sin(theta)
        return out.reshape(-1)[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of ``range(n)`` (argsort of uniform keys, stable)."""
        return np.argsort(self.uniform(n), kind="stable")
