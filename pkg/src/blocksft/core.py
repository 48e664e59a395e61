"""Core signal types and spectral conventions.

All routines in this package share one set of conventions, fixed here:

* Signals have power-of-two length ``n`` and are indexed modulo ``n``.
  The canonical index set is the integers in ``(-n/2, n/2]``.
* The forward transform is normalized by ``1/n``:
  ``xhat = np.fft.fft(x) / n`` and ``x = n * np.fft.ifft(xhat)``.
  Under this convention Parseval reads ``||x||^2 = n * ||xhat||^2``.
* The spectrum is partitioned into ``n/k1`` blocks of width ``k1``;
  block ``j`` owns the frequencies in ``((j - 1/2)*k1, (j + 1/2)*k1]``,
  again modulo ``n``.

Sublinear routines never touch ``Signal.values``; they go through
``counted_read`` so that a ``SampleCounter`` can account for every time
sample taken.  ``TripwireSignal`` exists to enforce this in tests: its
public values are poisoned, only the counted path sees real data.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "canonical_freq",
    "next_pow2",
    "capped_bins",
    "frequency_range",
    "dft",
    "idft",
    "BlockStructure",
    "Signal",
    "TripwireSignal",
    "SparseSpectrum",
    "SampleCounter",
    "counted_read",
    "block_energies",
    "tail_error",
    "snr",
    "read_signal",
    "write_signal",
    "read_signal_csv",
    "write_signal_csv",
]


def _check_pow2(value: int, name: str) -> None:
    if value < 1 or value & (value - 1):
        raise ValueError(f"{name} must be a positive power of two, got {value}")


def next_pow2(x) -> int:
    """Smallest power of two >= max(x, 1)."""
    x = int(math.ceil(x))
    if x <= 1:
        return 1
    return 1 << (x - 1).bit_length()


def capped_bins(raw: float, cap: int, domain: int) -> int:
    """Bucket count for a hashing: power of two, optionally capped, <= domain."""
    b = next_pow2(raw)
    if cap:
        b = min(b, next_pow2(cap))
    return min(b, domain)


def canonical_freq(f, n: int):
    """Map indices to canonical representatives in ``(-n/2, n/2]``.

    Works on scalars and integer arrays; the result for ``f = n/2 + 1``
    is ``-n/2 + 1``, and ``-n/2`` maps to ``n/2``.
    """
    _check_pow2(n, "n")
    r = np.asarray(f) % n
    out = np.where(r > n // 2, r - n, r)
    if np.ndim(out) == 0:
        return int(out)
    return out


def frequency_range(n: int) -> np.ndarray:
    """Canonical representatives for indices ``0..n-1`` in array layout."""
    return canonical_freq(np.arange(n), n)


def dft(x: np.ndarray) -> np.ndarray:
    """Forward transform, ``xhat_f = (1/n) sum_i x_i w^(-fi)``."""
    x = np.asarray(x, dtype=np.complex128)
    return np.fft.fft(x) / x.shape[-1]


def idft(xhat: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft`, ``x_i = sum_f xhat_f w^(fi)``."""
    xhat = np.asarray(xhat, dtype=np.complex128)
    return np.fft.ifft(xhat) * xhat.shape[-1]


@dataclass(frozen=True)
class BlockStructure:
    """Block-sparsity geometry: ``k0`` blocks of width ``k1`` in ``[n]``.

    ``n`` and ``k1`` must be powers of two with ``k1 <= n``, and
    ``k0 <= n/k1``.  ``num_blocks`` is ``n/k1``, the number of block
    indices; block indices are canonical integers in ``(-m/2, m/2]``
    with ``m = n/k1``.
    """

    n: int
    k0: int
    k1: int

    def __post_init__(self) -> None:
        _check_pow2(self.n, "n")
        _check_pow2(self.k1, "k1")
        if self.k1 > self.n:
            raise ValueError("k1 must not exceed n")
        if not (1 <= self.k0 <= self.n // self.k1):
            raise ValueError("k0 must lie in [1, n/k1]")

    @property
    def num_blocks(self) -> int:
        return self.n // self.k1

    def block_of(self, f):
        """Block index owning frequency ``f`` (scalar or array)."""
        m = self.num_blocks
        j = -((self.k1 - 2 * np.asarray(f)) // (2 * self.k1))
        out = canonical_freq(j, m)
        return int(out) if np.isscalar(f) else out

    def block_frequencies(self, j: int) -> np.ndarray:
        """Canonical frequencies belonging to block ``j``."""
        lo = (2 * j - 1) * self.k1 // 2 + 1
        return canonical_freq(np.arange(lo, lo + self.k1), self.n)


class Signal:
    """A dense time-domain signal of power-of-two length."""

    __slots__ = ("_data",)

    def __init__(self, values) -> None:
        arr = np.ascontiguousarray(values, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("signal must be one-dimensional")
        _check_pow2(arr.shape[0], "signal length")
        self._data = arr

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Dense values; oracle use only, never read by sublinear code."""
        return self._data

    def _read(self, idx: np.ndarray) -> np.ndarray:
        # Private sample path used by counted_read.
        return self._data[idx]


class TripwireSignal(Signal):
    """Signal whose public values are poisoned with NaN.

    Real data is only reachable through :func:`counted_read`.  Any code
    path that bypasses sample counting and touches ``.values`` will pull
    NaNs into its output, which the test suite detects.
    """

    @property
    def values(self) -> np.ndarray:
        poisoned = np.full(self._data.shape, np.nan + 1j * np.nan, dtype=np.complex128)
        return poisoned


class SparseSpectrum:
    """Sparse frequency-domain representation: ``{canonical freq: coeff}``.

    Supports the handful of operations the recovery loop needs; anything
    heavier should go through ``to_dense``.
    """

    __slots__ = ("n", "_coeffs")

    def __init__(self, n: int, coeffs: dict | None = None) -> None:
        _check_pow2(n, "n")
        self.n = n
        self._coeffs: dict[int, complex] = {}
        if coeffs:
            for f, c in coeffs.items():
                self[int(f)] = c

    def __setitem__(self, f: int, c: complex) -> None:
        f = int(canonical_freq(int(f), self.n))
        if c == 0:
            self._coeffs.pop(f, None)
        else:
            self._coeffs[f] = complex(c)

    def __getitem__(self, f: int) -> complex:
        return self._coeffs.get(int(canonical_freq(int(f), self.n)), 0j)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(sorted(self._coeffs))

    def items(self):
        return ((f, self._coeffs[f]) for f in sorted(self._coeffs))

    def copy(self) -> "SparseSpectrum":
        return SparseSpectrum(self.n, dict(self._coeffs))

    def add_scaled(self, other: "SparseSpectrum", scale: complex = 1.0) -> None:
        if other.n != self.n:
            raise ValueError("length mismatch")
        for f, c in other._coeffs.items():
            self[f] = self._coeffs.get(f, 0j) + scale * c

    def freqs_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Support and coefficients as parallel arrays (sorted support)."""
        fs = np.array(sorted(self._coeffs), dtype=np.int64)
        vs = np.array([self._coeffs[int(f)] for f in fs], dtype=np.complex128)
        return fs, vs

    def energy(self) -> float:
        """``sum |coeff|^2`` (frequency-domain squared norm)."""
        return float(sum(abs(c) ** 2 for c in self._coeffs.values()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.complex128)
        for f, c in self._coeffs.items():
            out[f % self.n] = c
        return out

    @classmethod
    def from_dense(cls, xhat: np.ndarray, tol: float = 0.0) -> "SparseSpectrum":
        xhat = np.asarray(xhat)
        n = xhat.shape[0]
        out = cls(n)
        keep = np.nonzero(np.abs(xhat) > tol)[0]
        for idx in keep:
            out[int(canonical_freq(int(idx), n))] = complex(xhat[idx])
        return out

    def block_support(self, blocks: BlockStructure) -> set[int]:
        """Set of block indices containing at least one coefficient."""
        return {int(blocks.block_of(f)) for f in self._coeffs}


class SampleCounter:
    """Tracks raw and distinct time-domain reads of one signal."""

    __slots__ = ("n", "total_reads", "_seen")

    def __init__(self, n: int) -> None:
        _check_pow2(n, "n")
        self.n = n
        self.total_reads = 0
        self._seen = np.zeros(n, dtype=bool)

    @property
    def distinct(self) -> int:
        return int(np.count_nonzero(self._seen))

    def reset(self) -> None:
        self.total_reads = 0
        self._seen[:] = False

    def _record(self, idx: np.ndarray) -> None:
        self.total_reads += int(idx.size)
        self._seen[idx] = True


def counted_read(x: Signal, counter: SampleCounter | None, positions) -> np.ndarray:
    """Read signal samples while recording them in ``counter``.

    Positions may be any integers; they are reduced modulo ``n``.  This
    is the only sanctioned data path for sample-complexity-sensitive
    code.  Pass ``counter=None`` to read without accounting (oracles).
    """
    idx = np.asarray(positions, dtype=np.int64) % x.n
    if counter is not None:
        if counter.n != x.n:
            raise ValueError("counter length does not match signal")
        counter._record(idx.ravel())
    return x._read(idx)


def block_energies(xhat: np.ndarray, k1: int) -> np.ndarray:
    """Per-block energies ``sum_{f in I_j} |xhat_f|^2``.

    Returns an array of length ``n/k1`` in array layout (index ``j % m``).
    """
    xhat = np.asarray(xhat)
    n = xhat.shape[0]
    blocks = BlockStructure(n, 1, k1)
    j = blocks.block_of(frequency_range(n)) % blocks.num_blocks
    return np.bincount(j, weights=np.abs(xhat) ** 2, minlength=blocks.num_blocks)


def tail_error(xhat: np.ndarray, k0: int, k1: int) -> float:
    """Minimal residual block energy over all choices of ``k0`` blocks.

    This equals ``min_S sum_{j not in S} ||xhat_{I_j}||^2`` with ``|S| = k0``,
    attained by keeping the ``k0`` heaviest blocks.
    """
    energies = block_energies(xhat, k1)
    if k0 >= energies.shape[0]:
        return 0.0
    order = np.sort(energies)
    return float(order[: energies.shape[0] - k0].sum())


def snr(xhat: np.ndarray, k0: int, k1: int) -> float:
    """``||xhat||^2 / tail_error``; ``inf`` for exactly block-sparse input."""
    tail = tail_error(xhat, k0, k1)
    total = float(np.sum(np.abs(xhat) ** 2))
    if tail == 0.0:
        return float("inf")
    return total / tail


_MAGIC = b"BSFT1"


def write_signal(path, x: Signal) -> None:
    """Write a signal in the BSFT1 binary format.

    Layout: 5 magic bytes, little-endian uint64 length, then ``n``
    complex128 values (little-endian interleaved re/im).
    """
    data = np.asarray(x.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", x.n))
        fh.write(data.tobytes())


def read_signal(path) -> Signal:
    """Read a BSFT1 binary signal file."""
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _MAGIC:
            raise ValueError(f"not a BSFT1 file: bad magic {magic!r}")
        (n,) = struct.unpack("<Q", fh.read(8))
        raw = fh.read(16 * n)
        if len(raw) != 16 * n:
            raise ValueError("truncated BSFT1 file")
        values = np.frombuffer(raw, dtype="<c16").astype(np.complex128)
    return Signal(values)


def write_signal_csv(path, x: Signal) -> None:
    """Write a signal as CSV with header ``re,im``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("re,im\n")
        for v in x.values:
            fh.write(f"{v.real!r},{v.imag!r}\n")


def read_signal_csv(path) -> Signal:
    """Read a two-column re,im CSV signal (header optional)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"expected two columns, got {line!r}")
            try:
                re, im = float(parts[0]), float(parts[1])
            except ValueError:
                if not rows:
                    continue  # header
                raise
            rows.append(complex(re, im))
    return Signal(np.array(rows, dtype=np.complex128))
