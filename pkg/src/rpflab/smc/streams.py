"""Counter-based random streams keyed by (seed, step, purpose, particle).

Every random number consumed by a filter run is addressed by a key rather
than by the order in which it is drawn. The Philox bit generator is
counter-based, so the ``j``-th uniform of particle ``i`` at a given step is
a pure function of ``(seed, step, purpose, i, j)``. Normals are produced by
inverse-CDF transformation so that each variate consumes exactly one
uniform; this keeps the particle-to-counter mapping fixed and lets any
chunk of particles be generated independently of the others.
"""

from __future__ import annotations

import zlib

import numpy as np
from scipy.special import ndtri

_BLOCK = 4  # uint64 outputs per Philox block
_TINY = 2.0**-54


def _purpose_id(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


class KeyedDraws:
    """Draws for one (step, purpose) pair, laid out particle-major.

    Exposes the subset of :class:`numpy.random.Generator` used by the
    models (``random`` and ``standard_normal``), so either can be passed
    wherever a model expects ``rng``.
    """

    def __init__(self, seed: int, step: int, purpose: str, offset: int = 0):
        self.seed = int(seed)
        self.step = int(step)
        self.purpose = purpose
        self._offset = int(offset)

    def _generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(
            key=self.seed, counter=[0, 0, self.step, _purpose_id(self.purpose)]
        )
        blocks, rest = divmod(self._offset, _BLOCK)
        if blocks:
            bitgen.advance(blocks)
        gen = np.random.Generator(bitgen)
        if rest:
            gen.random(rest)
        return gen

    def random(self, size=None):
        size = () if size is None else size
        n = int(np.prod(size))
        u = self._generator().random(n)
        self._offset += n
        return u.reshape(size) if size != () else float(u[0])

    def standard_normal(self, size=None):
        u = np.clip(self.random(size), _TINY, 1.0 - _TINY)
        return ndtri(u)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return loc + scale * self.standard_normal(size)


class KeyedStream:
    """Factory for :class:`KeyedDraws` under a fixed seed.

    Parameters
    ----------
    seed : int
        Non-negative master seed (at most 128 bits).

    Examples
    --------
    >>> s = KeyedStream(7)
    >>> a = s.draws(3, "jitter").standard_normal((4, 2))
    >>> b = s.draws(3, "jitter", start_particle=2, width=2).standard_normal((2, 2))
    >>> bool(np.array_equal(a[2:], b))
    True
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)

    def draws(self, step: int, purpose: str, start_particle: int = 0, width: int = 1):
        """Draws for ``step``/``purpose`` starting at particle ``start_particle``.

        ``width`` is the number of variates per particle; it is only needed
        to position a chunk that does not start at particle zero.
        """
        return KeyedDraws(self.seed, step, purpose, offset=start_particle * width)

    def generator(self, step: int, purpose: str) -> np.random.Generator:
        """A full :class:`numpy.random.Generator` for serial, non-particle work."""
        return np.random.Generator(
            np.random.Philox(key=self.seed, counter=[0, 0, step, _purpose_id(purpose)])
        )
