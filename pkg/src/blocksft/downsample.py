"""Downsampling a length-n signal into 2*k1 shifted, filtered reductions.

Each reduced signal has length m = n/k1 and entries

    Z^r_j = (1/k1) * sum_{i in [k1]} (G . X^r)_{j + m*i},   X^r_i = X_{i + a_r},

with shifts a_r = n*r/(2*k1) for r in [2*k1] and G a flat filter for
band count n/k1.  On the spectral side each Z^r is the original
spectrum folded block-wise: block j of X lands (mostly) on frequency j
of Z^r, with a phase ramp in r that makes the 2*k1 reductions jointly
informative about positions inside the block.

Entries are computed lazily and cached, reading the underlying signal
only where the filter is nonzero, through whatever counted reader the
caller supplies.
"""

from __future__ import annotations

import numpy as np

from . import oracles
from .core import dft
from .filters import FlatFilter, make_flat_filter
from .oracles import is_covered

__all__ = ["DownsampleView", "downsample_sharpness", "is_covered"]


def downsample_sharpness(
    delta: float, f_factor: float = 10.0, min_f: int = 2, max_f: int = 0
) -> int:
    """Filter decay exponent for quality delta: even, >= f_factor*log2(1/delta).

    ``max_f`` > 0 caps the exponent; sample cost grows linearly in F, so
    budget-constrained profiles pin it rather than track delta.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    f = max(min_f, int(f_factor * np.ceil(np.log2(1.0 / delta))))
    if max_f:
        f = min(f, max_f)
    return f + (f % 2)


class DownsampleView:
    """Lazy, cached access to the 2*k1 reduced signals of one source.

    Parameters
    ----------
    reader : callable
        Maps an int64 position array (mod n) to complex sample values.
        Sample counting, and any residual subtraction, live inside the
        reader; this class only decides *which* positions are needed.
    n, k1 : int
        Signal length and block width (powers of two, k1 < n).
    delta : float
        Downsampling quality; sets the filter decay exponent unless
        ``sharpness`` overrides it.
    sharpness : int, optional
        Explicit filter exponent F (even, >= 2).
    filter_c : float
        Width multiplier forwarded to the filter construction.
    """

    def __init__(
        self,
        reader,
        n: int,
        k1: int,
        delta: float = 0.05,
        sharpness: int | None = None,
        filter_c: float = 2.0,
    ):
        if n < 2 or n & (n - 1):
            raise ValueError("n must be a power of two >= 2")
        if k1 < 1 or k1 & (k1 - 1) or k1 >= n:
            raise ValueError("k1 must be a power of two with k1 < n")
        self.reader = reader
        self.n = n
        self.k1 = k1
        self.m = n // k1
        self.delta = float(delta)
        if sharpness is None:
            sharpness = downsample_sharpness(delta)
        self.filter: FlatFilter = make_flat_filter(n, self.m, sharpness, c=filter_c)
        self.shifts = np.arange(2 * k1, dtype=np.int64) * (self.m // 2)
        self._vals: dict[int, np.ndarray] = {}
        self._have: dict[int, np.ndarray] = {}

    def _check_r(self, r: int) -> int:
        r = int(r)
        if not 0 <= r < 2 * self.k1:
            raise ValueError(f"shift index r={r} outside [0, {2 * self.k1})")
        return r

    def z_entries(self, r: int, js) -> np.ndarray:
        """Entries Z^r_j for an array of (modular) indices j."""
        r = self._check_r(r)
        js = np.atleast_1d(np.asarray(js, dtype=np.int64)) % self.m
        have = self._have.get(r)
        if have is None:
            have = np.zeros(self.m, dtype=bool)
            self._have[r] = have
            self._vals[r] = np.zeros(self.m, dtype=np.complex128)
        cache = self._vals[r]
        need = np.unique(js[~have[js]])
        if need.size:
            # Positions j + m*i sweep the residue class of j; the filter
            # weights decide which of the k1 aliases must be read.
            pos = need[:, None] + self.m * np.arange(self.k1, dtype=np.int64)[None, :]
            weights = self.filter.time[pos]
            vals = np.zeros(pos.shape, dtype=np.complex128)
            nz = weights != 0.0
            if np.any(nz):
                vals[nz] = self.reader((pos[nz] + self.shifts[r]) % self.n)
            cache[need] = (weights * vals).sum(axis=1) / self.k1
            have[need] = True
        return cache[js]

    def z_entry(self, r: int, j: int) -> complex:
        """Single entry Z^r_j."""
        return complex(self.z_entries(r, [j])[0])

    def all_values(self, r: int) -> np.ndarray:
        """All m entries of Z^r (reads the whole underlying signal)."""
        return self.z_entries(r, np.arange(self.m))

    def z_spectrum_exact(self, r: int) -> np.ndarray:
        """Exact spectrum of Z^r via the dense convolution formula.

        Oracle path for tests: reads the full underlying signal.
        """
        r = self._check_r(r)
        x = self.reader(np.arange(self.n, dtype=np.int64))
        return oracles.downsampled_spectrum_direct(dft(x), self.k1, self.filter.freq, r)
