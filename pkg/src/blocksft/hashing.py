"""Bucketed spectrum access and windowed sparse inverse transforms.

Hashing folds a permuted, filtered signal into a small number of buckets:

    U_b = (B/m) * sum_{t = b mod B} G_t * Y(sigma * (shift + t))

for a length-``m`` signal ``Y`` and an (m, B, F)-flat filter ``G``.  The
bucket spectrum ``Uhat = fft(U) / B`` then satisfies, exactly,

    Uhat_b = sum_f Yhat_f * G^_{sigma f - b m/B} * w^(sigma shift f)

with ``w = exp(2 pi i / m)``, so each bucket aggregates the frequencies
hashed near ``b m / B`` under ``f -> sigma f``.  A single coefficient is
read back off its bucket by undoing the filter gain and the phase twist;
``HashParams`` holds the arithmetic.

The semi-equidistant inverse transforms evaluate an explicitly known
sparse spectrum in time domain without a full-size FFT.  They fold the
signal onto a short cyclic window after masking with a near-rectangle
filter, so only targets close to the window centre(s) come out accurate;
that is exactly the access pattern hashing needs.  ``ChiContext`` wraps a
running sparse estimate and serves point values and downsampled entries
of it, so callers can hash residuals without touching the actual signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PAPER, PipelineConstants
from .core import SparseSpectrum, canonical_freq, capped_bins, next_pow2
from .downsample import DownsampleView, downsample_sharpness
from .filters import FlatFilter, make_flat_filter, make_sharp_filter

__all__ = [
    "HashParams",
    "random_hash_params",
    "hash_time_domain",
    "hash_to_bins",
    "hash_to_bins_residual",
    "hash_to_bins_reduced",
    "semi_equi_inverse_fft",
    "semi_equi_inverse_block_fft",
    "ChiContext",
    "estimate_energies",
]


@dataclass(frozen=True)
class HashParams:
    """Permutation/modulation pair for one hashing of a length-m signal."""

    m: int
    bins: int
    sigma: int
    shift: int

    def __post_init__(self) -> None:
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError("hash domain must be a power of two >= 2")
        if self.bins < 1 or self.bins & (self.bins - 1) or self.bins > self.m:
            raise ValueError("bins must be a power of two dividing the domain")
        if self.sigma % 2 == 0:
            raise ValueError("sigma must be odd")

    def perm(self, f):
        """Permuted frequency ``sigma * f mod m``."""
        return (self.sigma * (np.asarray(f, dtype=np.int64) % self.m)) % self.m

    def bucket_of(self, f):
        """Bucket index: ``sigma * f`` rounded to the nearest multiple of m/B."""
        pi = self.perm(f)
        return ((pi * self.bins + self.m // 2) // self.m) % self.bins

    def offset_of(self, f):
        """Signed distance from ``sigma * f`` to its bucket centre.

        Always in ``[-m/(2B), m/(2B))``, i.e. inside the filter pass band,
        so the gain at the offset is safe to divide by.
        """
        pi = self.perm(f)
        h = (pi * self.bins + self.m // 2) // self.m
        return pi - h * (self.m // self.bins)

    def phase_correction(self, f):
        """``w^(-sigma shift f)``; multiplies a bucket value when reading f."""
        sd = (self.sigma * self.shift) % self.m
        e = (sd * (np.asarray(f, dtype=np.int64) % self.m)) % self.m
        return np.exp(-2j * np.pi * e / self.m)


def random_hash_params(m: int, bins: int, rng: np.random.Generator) -> HashParams:
    sigma = 2 * int(rng.integers(0, m // 2)) + 1
    shift = int(rng.integers(0, m))
    return HashParams(m=m, bins=bins, sigma=sigma, shift=shift)


def _fold_buckets(offs: np.ndarray, weighted: np.ndarray, bins: int, m: int) -> np.ndarray:
    b = offs % bins
    u = np.bincount(b, weights=weighted.real, minlength=bins).astype(np.complex128)
    u += 1j * np.bincount(b, weights=weighted.imag, minlength=bins)
    return u * (bins / m)


def hash_time_domain(reader, flt: FlatFilter, params: HashParams) -> np.ndarray:
    """The B bucket sums of ``reader`` permuted by params and masked by flt.

    ``reader`` maps an int64 position array (already reduced mod m) to
    signal values; sample accounting is the reader's business.  Reads one
    position per point of the filter support.
    """
    if flt.n != params.m or flt.buckets != params.bins:
        raise ValueError("filter domain/buckets do not match hash params")
    offs = flt.support_offsets
    positions = (params.sigma * (params.shift + offs)) % params.m
    weighted = flt.time[offs % params.m] * reader(positions)
    return _fold_buckets(offs, weighted, params.bins, params.m)


def hash_to_bins(reader, flt: FlatFilter, params: HashParams) -> np.ndarray:
    """Bucket spectrum ``Uhat_b = sum_f Yhat_f G^_{sigma f - bm/B} w^(sigma shift f)``."""
    u = hash_time_domain(reader, flt, params)
    return np.fft.fft(u) / params.bins


def hash_to_bins_residual(
    reader, chi: "ChiContext | None", flt: FlatFilter, params: HashParams
) -> np.ndarray:
    """Bucket spectrum of ``reader - chi``; the chi side costs no reads.

    The chi values land on the permuted arithmetic progression that the
    hashing reads, so they come from the progression evaluator rather
    than from arbitrary-position lookups.
    """
    if flt.n != params.m or flt.buckets != params.bins:
        raise ValueError("filter domain/buckets do not match hash params")
    offs = flt.support_offsets
    positions = (params.sigma * (params.shift + offs)) % params.m
    vals = reader(positions)
    if chi is not None and not chi.is_zero:
        vals = vals - chi.progression_values(
            params.sigma, (params.sigma * params.shift) % params.m, offs
        )
    weighted = flt.time[offs % params.m] * vals
    u = _fold_buckets(offs, weighted, params.bins, params.m)
    return np.fft.fft(u) / params.bins


# ---------------------------------------------------------------------------
# semi-equidistant inverse transforms


def _dense_eval(freqs: np.ndarray, vals: np.ndarray, n: int, targets: np.ndarray) -> np.ndarray:
    """Exact evaluation through a full-size inverse FFT (small-n fallback)."""
    lead = vals.shape[:-1]
    flat = vals.reshape(-1, vals.shape[-1])
    spec = np.zeros((flat.shape[0], n), dtype=np.complex128)
    cols = freqs % n
    for i in range(flat.shape[0]):
        np.add.at(spec[i], cols, flat[i])
    y = n * np.fft.ifft(spec, axis=-1)
    return y[:, targets % n].reshape(lead + (targets.shape[0],))


def _semi_equi_core(
    freqs: np.ndarray, vals: np.ndarray, n: int, targets: np.ndarray, zeta: float
) -> np.ndarray:
    """Evaluate ``x_t = sum_f vals_f w^(ft)`` at targets near the origin.

    ``vals`` may carry leading batch axes over a shared ``freqs``.  Cost is
    governed by the fold length ``M ~ 4 max|t|``, not by n; accuracy is
    ``zeta * ||x||_2`` in each entry.  Targets are read cyclically, so only
    their canonical magnitude matters.
    """
    freqs = np.asarray(freqs, dtype=np.int64) % n
    vals = np.asarray(vals, dtype=np.complex128)
    targets = np.asarray(targets, dtype=np.int64)
    lead = vals.shape[:-1]
    if freqs.size == 0 or targets.size == 0:
        return np.zeros(lead + (targets.shape[0],), dtype=np.complex128)
    tc = canonical_freq(targets % n, n)
    tau = max(int(np.max(np.abs(tc))), 1)
    fold = next_pow2(4 * (tau + 1))
    if fold >= n:
        return _dense_eval(freqs, vals, n, targets)
    mask = make_sharp_filter(n, (2 * n) // fold, zeta / 4)
    if mask.freq_half >= n // 4:
        # window too wide to pay for itself; alias separation also degrades
        return _dense_eval(freqs, vals, n, targets)
    stride = n // fold
    fc = canonical_freq(freqs, n)
    half = mask.freq_half // stride + 1
    win = np.arange(-half, half + 1, dtype=np.int64)
    centre = np.rint(fc * (fold / n)).astype(np.int64)
    idx = centre[:, None] + win[None, :]
    gv = mask.freq_at(idx * stride - fc[:, None]) * stride
    cols = (idx % fold).ravel()
    flat = vals.reshape(-1, freqs.shape[0])
    spec = np.zeros((flat.shape[0], fold), dtype=np.complex128)
    for i in range(flat.shape[0]):
        np.add.at(spec[i], cols, (flat[i][:, None] * gv).ravel())
    y = fold * np.fft.ifft(spec, axis=-1)
    out = y[:, targets % fold]
    out /= mask.time[tc % n]
    return out.reshape(lead + (targets.shape[0],))


def semi_equi_inverse_fft(
    freqs,
    vals,
    n: int,
    targets,
    zeta: float,
    sigma: int = 1,
    shift: int = 0,
) -> np.ndarray:
    """Values ``x_{(sigma t + shift) mod n}`` of the spectrum (freqs, vals).

    Accuracy ``zeta * ||x||_2`` per entry provided the raw targets t sit in
    a short window around 0 (canonically); sigma must be odd.  ``vals`` may
    have leading batch axes.
    """
    freqs = np.asarray(freqs, dtype=np.int64) % n
    vals = np.asarray(vals, dtype=np.complex128)
    targets = np.asarray(targets, dtype=np.int64)
    if sigma != 1 or shift != 0:
        if sigma % 2 == 0:
            raise ValueError("sigma must be odd")
        e = (freqs * (shift % n)) % n
        vals = vals * np.exp(2j * np.pi * e / n)
        freqs = (sigma * freqs) % n
    return _semi_equi_core(freqs, vals, n, targets, zeta)


def semi_equi_inverse_block_fft(
    freqs,
    vals,
    n: int,
    k1: int,
    targets,
    zeta: float,
    sigma: int = 1,
    shift: int = 0,
) -> np.ndarray:
    """Windowed samples of the 2*k1 shifted signals ``x_{a_r + .}``.

    Returns a ``(2*k1, len(targets))`` array whose row r approximates
    ``x_{(a_r + c) mod n}`` with ``a_r = r m / 2``, ``m = n / k1`` and
    ``c = canonical((sigma t + shift) mod m)``: the evaluation point is
    taken in the length-m window centred on the anchor ``a_r``.  Per-entry
    error is ``zeta * ||x||_2``.  Odd k1 falls back to a dense transform.
    """
    freqs = np.asarray(freqs, dtype=np.int64) % n
    vals = np.asarray(vals, dtype=np.complex128)
    if vals.ndim != 1:
        raise ValueError("block variant takes a single spectrum")
    targets = np.asarray(targets, dtype=np.int64)
    if sigma % 2 == 0:
        raise ValueError("sigma must be odd")
    m = n // k1
    anchors = np.arange(2 * k1, dtype=np.int64) * (m // 2)
    c = canonical_freq((sigma * targets + shift) % m, m)

    def dense() -> np.ndarray:
        pos = (anchors[:, None] + c[None, :]) % n
        spec = np.zeros(n, dtype=np.complex128)
        np.add.at(spec, freqs, vals)
        y = n * np.fft.ifft(spec)
        return y[pos]

    if k1 % 2 or k1 < 2:
        return dense()
    m2 = 2 * m
    mask = make_sharp_filter(n, k1, zeta / 4)
    if mask.freq_half >= n // 4:
        return dense()

    # spread each coefficient onto the coarse grid of stride k1/2, split by
    # residue mod 2*k1 so the anchor phases collapse to one short FFT
    stride = k1 // 2
    fc = canonical_freq(freqs, n)
    half = mask.freq_half // stride + 1
    win = np.arange(-half, half + 1, dtype=np.int64)
    centre = np.rint(fc * (m2 / n)).astype(np.int64)
    idx = centre[:, None] + win[None, :]
    gv = mask.freq_at(idx * stride - fc[:, None]) * stride
    cols_all = idx % m2
    cols = np.unique(cols_all)
    cpos = np.searchsorted(cols, cols_all)
    rows = fc % (2 * k1)
    folded = np.zeros((2 * k1, cols.shape[0]), dtype=np.complex128)
    np.add.at(
        folded,
        (np.repeat(rows, win.shape[0]), cpos.ravel()),
        (vals[:, None] * gv).ravel(),
    )
    coarse = 2 * k1 * np.fft.ifft(folded, axis=0)

    # the window is half the anchor spacing, so of the two lifts of each
    # target to the doubled domain exactly one lands inside it
    f2 = canonical_freq(cols, m2)
    pos_a = (sigma * targets + shift) % m2
    can_a = canonical_freq(pos_a, m2)
    pick_a = (can_a > -(m // 2)) & (can_a <= m // 2)
    out = np.empty((2 * k1, targets.shape[0]), dtype=np.complex128)
    for add, sel in (((shift % m2), pick_a), ((shift + m) % m2, ~pick_a)):
        if not np.any(sel):
            continue
        e = (f2 % m2) * add % m2
        twisted = coarse * np.exp(2j * np.pi * e / m2)[None, :]
        out[:, sel] = _semi_equi_core(
            (sigma * (cols % m2)) % m2, twisted, m2, targets[sel], zeta / 4
        )
    out /= mask.time[c % n]
    return out


# ---------------------------------------------------------------------------
# explicit-spectrum evaluation for residual hashing


class ChiContext:
    """Point and downsampled-entry access to an explicit sparse spectrum.

    The recovery loop hashes the residual between the signal and its
    running estimate chi; the signal side goes through counted readers
    while the chi side is served here, free of sample cost.  ``method``
    picks how downsampled entries are produced: "dense" materialises chi
    in time domain once (one full-size inverse FFT per estimate version),
    "semi-equi" uses the windowed block transform, "auto" prefers dense
    below 2^21 points.
    """

    def __init__(self, spectrum: SparseSpectrum, method: str = "auto", zeta: float = 1e-9) -> None:
        if method not in ("auto", "dense", "semi-equi"):
            raise ValueError(f"unknown chi method {method!r}")
        self.n = spectrum.n
        self.freqs, self.vals = spectrum.freqs_values()
        self.method = method
        self.zeta = zeta
        self._time: np.ndarray | None = None

    @property
    def is_zero(self) -> bool:
        return self.freqs.size == 0

    def _dense_time(self) -> np.ndarray:
        if self._time is None:
            spec = np.zeros(self.n, dtype=np.complex128)
            spec[self.freqs % self.n] = self.vals
            self._time = self.n * np.fft.ifft(spec)
        return self._time

    def _use_dense(self) -> bool:
        if self.method == "dense":
            return True
        if self.method == "semi-equi":
            return False
        return self._time is not None or self.n <= (1 << 21)

    def chi_values(self, positions) -> np.ndarray:
        """Time-domain values at arbitrary positions (dense path)."""
        positions = np.asarray(positions, dtype=np.int64)
        if self.is_zero:
            return np.zeros(positions.shape, dtype=np.complex128)
        return self._dense_time()[positions % self.n]

    def progression_values(self, sigma: int, shift: int, targets) -> np.ndarray:
        """Values at ``(sigma t + shift) mod n``, windowed when chi stays sparse."""
        targets = np.asarray(targets, dtype=np.int64)
        if self.is_zero:
            return np.zeros(targets.shape, dtype=np.complex128)
        if self._use_dense():
            return self._dense_time()[(sigma * targets + shift) % self.n]
        return semi_equi_inverse_fft(
            self.freqs, self.vals, self.n, targets, self.zeta, sigma=sigma, shift=shift
        )

    def reduced_entries(self, r: int, js, k1: int, ds_filter: FlatFilter) -> np.ndarray:
        """Entries of the r-th downsampling of chi at positions js (mod m)."""
        js = np.asarray(js, dtype=np.int64)
        if self.is_zero:
            return np.zeros(js.shape, dtype=np.complex128)
        m = self.n // k1
        pos = (js % m)[:, None] + m * np.arange(k1, dtype=np.int64)[None, :]
        w = ds_filter.time[pos]
        xv = self.chi_values(pos + r * (m // 2))
        return (w * xv).sum(axis=1) / k1

    def reduced_block(
        self, k1: int, sigma: int, shift: int, targets, ds_filter: FlatFilter
    ) -> np.ndarray:
        """All 2*k1 downsamplings of chi at ``(sigma t + shift) mod m`` at once.

        Row r is built from the windowed block transform by rotating the
        anchor index: sample i of the downsampling sum sits m*i past the
        anchor a_r, which is the anchor a_{r+2i}.
        """
        targets = np.asarray(targets, dtype=np.int64)
        m = self.n // k1
        if self.is_zero:
            return np.zeros((2 * k1, targets.shape[0]), dtype=np.complex128)
        y = semi_equi_inverse_block_fft(
            self.freqs, self.vals, self.n, k1, targets, self.zeta, sigma, shift
        )
        c = canonical_freq((sigma * targets + shift) % m, m)
        i = np.arange(k1, dtype=np.int64)
        w = ds_filter.time[(c[None, :] + m * i[:, None]) % self.n]
        rot = (np.arange(2 * k1)[:, None] + 2 * i[None, :]) % (2 * k1)
        return np.einsum("it,rit->rt", w, y[rot]) / k1


def hash_to_bins_reduced(
    view: DownsampleView,
    bins_list,
    sharpness: int,
    sigma: int,
    shift: int,
    chi: ChiContext | None = None,
    filter_c: float = 2.0,
) -> list[np.ndarray | None]:
    """One hashing of every downsampled residual signal, shared (sigma, shift).

    ``bins_list`` gives the bucket count per shift index r; zero skips that
    signal and leaves None in the output slot.  Signal-side reads go
    through the view (counted); the chi side is spectral.
    """
    bins_list = [int(b) for b in bins_list]
    if len(bins_list) != 2 * view.k1:
        raise ValueError("need one bucket count per downsampled signal")
    out: list[np.ndarray | None] = [None] * len(bins_list)
    groups: dict[int, list[int]] = {}
    for r, b in enumerate(bins_list):
        if b:
            groups.setdefault(b, []).append(r)
    subtract_dense = chi is not None and not chi.is_zero and chi._use_dense()
    subtract_semi = chi is not None and not chi.is_zero and not subtract_dense
    for bins, rs in groups.items():
        flt = make_flat_filter(view.m, bins, sharpness, filter_c)
        params = HashParams(m=view.m, bins=bins, sigma=sigma, shift=shift)
        offs = flt.support_offsets
        positions = (sigma * (shift + offs)) % view.m
        weights = flt.time[offs % view.m]
        chi_rows = None
        if subtract_semi:
            chi_rows = chi.reduced_block(
                view.k1, sigma, (sigma * shift) % view.m, offs, view.filter
            )
        for r in rs:
            zv = view.z_entries(r, positions)
            if subtract_dense:
                zv = zv - chi.reduced_entries(r, positions, view.k1, view.filter)
            elif chi_rows is not None:
                zv = zv - chi_rows[r]
            u = _fold_buckets(offs, weights * zv, bins, view.m)
            out[r] = np.fft.fft(u) / bins
    return out


def estimate_energies(
    view: DownsampleView,
    k0: int,
    delta: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi: ChiContext | None = None,
) -> np.ndarray:
    """Bucket-energy proxies for the 2*k1 downsampled residual signals.

    One hashing with shared randomness; returns ``gamma_r = ||Uhat^r||_2^2``,
    which tracks ``||Zhat^r||_2^2`` well enough to drive budget allocation.
    """
    bins = capped_bins(
        constants.energy_b_factor * k0 / delta**2, constants.max_bins_reduced, view.m
    )
    sharpness = downsample_sharpness(
        delta, constants.f_factor, constants.min_f, constants.max_f
    )
    params = random_hash_params(view.m, bins, rng)
    hashed = hash_to_bins_reduced(
        view,
        [bins] * (2 * view.k1),
        sharpness,
        params.sigma,
        params.shift,
        chi=chi,
        filter_c=constants.filter_c,
    )
    return np.array([np.sum(np.abs(u) ** 2) for u in hashed])
