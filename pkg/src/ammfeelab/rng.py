"""Deterministic random streams shared by every part of the simulator.

Reproducibility is part of this package's external contract, so the
generator is pinned here rather than delegated to library defaults that
may change between releases.  The full contract:

* A stream is a splitmix64 sequence.  Its state is a single ``uint64``
  ``s``; each draw advances ``s += 0x9E3779B97F4A7C15 (mod 2**64)`` and
  outputs ``mix64(s)`` where ``mix64`` is the splitmix64 finalizer
  (xor-shift 30, multiply ``0xBF58476D1CE4E5B9``, xor-shift 27, multiply
  ``0x94D049BB133111EB``, xor-shift 31).
* Uniforms on ``[0, 1)`` take the top 53 bits: ``(out >> 11) * 2**-53``.
  Open-interval uniforms on ``(0, 1]`` use ``((out >> 11) + 1) * 2**-53``.
* Normals use the Box-Muller cosine branch and consume exactly two
  uniforms each: ``z = sqrt(-2 ln u1) * cos(2 pi u2)`` with ``u1`` drawn
  on ``(0, 1]`` then ``u2`` on ``[0, 1)``.  No second value is cached.
* Substreams derive as ``derive_seed(seed, index) =
  mix64((seed + (index + 1) * 0x9E3779B97F4A7C15) mod 2**64)``.

The scalar draw functions below exist in two equivalent implementations
(a JIT-friendly uint64 form and a masked Python-int form for the plain
backend); the vectorized :class:`Stream` methods use numpy uint64 array
arithmetic.  All three produce identical bit patterns, which the test
suite asserts.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import BACKEND, kernel

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

_TWO_NEG53 = 2.0**-53
_TWO_PI = 2.0 * math.pi


def mix64(z: int) -> int:
    """splitmix64 finalizer on masked Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Derive the substream seed for ``index`` from a parent seed."""
    if index < 0:
        raise ValueError("substream index must be non-negative")
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


if BACKEND == "numba":

    @kernel
    def rand_u01(state):
        s = state[0] + np.uint64(GOLDEN)
        state[0] = s
        z = (s ^ (s >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)) * _TWO_NEG53

    @kernel
    def rand_u01_open(state):
        s = state[0] + np.uint64(GOLDEN)
        state[0] = s
        z = (s ^ (s >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
        return ((z >> np.uint64(11)) + np.uint64(1)) * _TWO_NEG53

else:
    # Masked Python-int arithmetic: numpy uint64 *scalars* warn on
    # overflow, and plain ints are faster in the interpreter anyway.

    def rand_u01(state):
        s = (int(state[0]) + GOLDEN) & MASK64
        state[0] = s
        return (mix64(s) >> 11) * _TWO_NEG53

    def rand_u01_open(state):
        s = (int(state[0]) + GOLDEN) & MASK64
        state[0] = s
        return ((mix64(s) >> 11) + 1) * _TWO_NEG53


@kernel
def rand_normal(state):
    u1 = rand_u01_open(state)
    u2 = rand_u01(state)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


class Stream:
    """A splitmix64 stream usable from Python code and from the kernels.

    ``stream.state`` is the one-element uint64 array the scalar kernel
    draws mutate in place; the vectorized methods advance the same state,
    so scalar and batch draws interleave consistently.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = np.array([seed & MASK64], dtype=np.uint64)

    def _raw(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN)
        s = self.state[0] + steps
        self.state[0] = s[-1] if n else self.state[0]
        z = (s ^ (s >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniforms on [0, 1)."""
        return (self._raw(n) >> np.uint64(11)) * _TWO_NEG53

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normals, two raw draws each."""
        raw = self._raw(2 * n)
        u1 = ((raw[0::2] >> np.uint64(11)) + np.uint64(1)) * _TWO_NEG53
        u2 = (raw[1::2] >> np.uint64(11)) * _TWO_NEG53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)

    def uniform(self) -> float:
        return float(rand_u01(self.state))

    def normal(self) -> float:
        return float(rand_normal(self.state))

    def spawn(self, index: int) -> "Stream":
        """Independent substream keyed by ``index``; parent state unchanged."""
        return Stream(derive_seed(int(self.state[0]), index))
