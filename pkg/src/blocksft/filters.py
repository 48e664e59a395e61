"""Window filters for hashing and semi-equispaced evaluation.

Two families:

* **Flat filters** approximate the indicator of a width ``n/B`` frequency
  band: flat near 1 on ``|f| <= n/(2B)``, and decaying like
  ``(1/4)^(F-1) * (n/(B|f|))^(F-1)`` past ``n/B``.  Their time-domain
  support is compact (about ``16*F*B`` samples), which is what makes
  hashing sample-efficient.  Built as an averaged power of a Dirichlet
  kernel; all three defining bounds are verified numerically at
  construction and the base width is doubled on failure.

* **Sharp filters** approximate a *time-domain* rectangle: 1 on
  ``|t| <= n/(2k)``, 0 past ``n/k``, with spectrum exactly supported on a
  window of length ``c_sharp * k * log2(n/zeta)``.  Built as a Dirichlet
  kernel times a Gaussian (the classic smoothed-rectangle spectrum),
  hard-truncated; the achieved L2 distance to the ideal template is
  measured and must come in under ``zeta``.

Construction is deterministic, so filters are cached by parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import frequency_range

__all__ = ["FlatFilter", "SharpFilter", "make_flat_filter", "make_sharp_filter", "dump_filter_csv"]


class FilterConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class FlatFilter:
    """An (n, B, F)-flat frequency window with compact time support."""

    n: int
    buckets: int
    sharpness: int
    time: np.ndarray  # real, array layout, exact zeros outside support
    freq: np.ndarray  # real, array layout, values in [0, 1]
    support_half: int  # time support is |t| <= support_half (canonical)

    @property
    def support_offsets(self) -> np.ndarray:
        """Canonical time offsets carrying the filter (support)."""
        if 2 * self.support_half + 1 >= self.n:
            return frequency_range(self.n)
        return np.arange(-self.support_half, self.support_half + 1)

    def freq_at(self, f) -> np.ndarray:
        """Frequency response at arbitrary (modular) frequencies."""
        return self.freq[np.asarray(f, dtype=np.int64) % self.n]


@dataclass(frozen=True)
class SharpFilter:
    """A near-rectangle time window with compact frequency support."""

    n: int
    k: int
    zeta: float
    time: np.ndarray  # real, array layout
    freq: np.ndarray  # real, array layout, exact zeros outside window
    freq_half: int  # frequency support is |f| <= freq_half
    achieved: float  # measured ||G - G'||_2 against the ideal template

    @property
    def freq_offsets(self) -> np.ndarray:
        if 2 * self.freq_half + 1 >= self.n:
            return frequency_range(self.n)
        return np.arange(-self.freq_half, self.freq_half + 1)

    def freq_at(self, f) -> np.ndarray:
        return self.freq[np.asarray(f, dtype=np.int64) % self.n]


def _check_pow2(value: int, name: str) -> None:
    if value < 1 or value & (value - 1):
        raise ValueError(f"{name} must be a positive power of two, got {value}")


def _sinc_power_window(n: int, box_len: int, f_exp: int) -> np.ndarray:
    # |sin(pi*L*f/n) / (L*sin(pi*f/n))|^F in array layout; value 1 at f=0.
    f = np.arange(n)
    num = np.sin(np.pi * box_len * f / n)
    den = box_len * np.sin(np.pi * f / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(f == 0, 1.0, np.abs(num) / np.abs(den))
    ratio = np.minimum(ratio, 1.0)
    with np.errstate(under="ignore"):
        return ratio**f_exp


def _boxcar_sum(w: np.ndarray, half: int) -> np.ndarray:
    # Circular moving sum of width 2*half+1 over nonnegative entries.
    n = w.shape[0]
    if half <= 0:
        return w.copy()
    if 2 * half + 1 >= n:
        return np.full(n, float(w.sum()))
    window = 2 * half + 1
    if n * window <= (1 << 31):
        # Direct positive-term convolution: no cancellation, so the
        # 1e-30-scale stop-band values stay accurate.
        ext = np.concatenate([w[-half:], w, w[:half]])
        return np.convolve(ext, np.ones(window), mode="valid")
    # Large windows: prefix sums in extended precision.  Differencing
    # loses absolute accuracy near total*eps, so values below that floor
    # are clamped to zero afterwards (they are far below every bound
    # that matters at the parameter ranges that reach this path).
    ext = np.concatenate([w[-half:], w, w[:half]]).astype(np.longdouble)
    prefix = np.concatenate([[np.longdouble(0.0)], np.cumsum(ext)])
    out = (prefix[window:] - prefix[:-window]).astype(np.float64)
    floor = float(prefix[-1]) * n * float(np.finfo(np.longdouble).eps) * 4.0
    out[out < floor] = 0.0
    return out


def _flat_bounds_ok(
    ghat: np.ndarray, n: int, buckets: int, f_exp: int, pass_slack: float = 1e-12
) -> bool:
    leak = 0.25 ** (f_exp - 1)
    freqs = np.abs(frequency_range(n))
    pass_band = freqs <= n // (2 * buckets)
    ok = bool(np.all(ghat[pass_band] >= 1.0 - leak - pass_slack))
    stop = freqs >= n // buckets
    if np.any(stop):
        with np.errstate(divide="ignore"):
            bound = leak * (n / (buckets * np.maximum(freqs[stop], 1))) ** (f_exp - 1)
        ok = ok and bool(np.all(ghat[stop] <= bound * (1.0 + 1e-9) + 1e-300))
    return ok


def _build_flat(n: int, buckets: int, f_exp: int, width: int) -> tuple[np.ndarray, bool]:
    w = _sinc_power_window(n, width - 1, f_exp)
    half = (3 * n) // (4 * buckets)
    box = _boxcar_sum(w, half)
    ghat = box / box.max()
    return ghat, _flat_bounds_ok(ghat, n, buckets, f_exp)


_flat_cache: dict[tuple, FlatFilter] = {}


def make_flat_filter(n: int, buckets: int, sharpness: int, c: float = 2.0) -> FlatFilter:
    """Construct (with verification) an (n, B, F)-flat filter.

    Parameters
    ----------
    n, buckets, sharpness : int
        Domain length, band count B (power of two, <= n), and decay
        exponent F (even, >= 2).
    c : float
        Base width multiplier; the underlying kernel uses ``8*c*B``
        points and doubles up to three times if verification fails.

    Returns
    -------
    FlatFilter
        With ``freq`` in [0, 1], symmetric, flat on the pass band and
        decaying on the stop band; ``time`` has exact zeros outside the
        compact support whenever that support is shorter than ``n``.
    """
    _check_pow2(n, "n")
    _check_pow2(buckets, "buckets")
    if buckets > n:
        raise ValueError("buckets must not exceed n")
    if sharpness < 2 or sharpness % 2:
        raise ValueError("sharpness must be an even integer >= 2")
    key = (n, buckets, sharpness, round(float(c), 6))
    cached = _flat_cache.get(key)
    if cached is not None:
        return cached

    width = int(round(8 * c * buckets))
    width += width % 2  # keep the kernel length odd (width - 1)
    ghat = None
    for _ in range(4):
        ghat, ok = _build_flat(n, buckets, sharpness, width)
        if ok:
            break
        width *= 2
    else:
        raise FilterConstructionError(
            f"flat filter bounds failed for n={n} B={buckets} F={sharpness}"
        )

    time = np.fft.ifft(ghat).real * n
    half = sharpness * (width // 2 - 1)
    if 2 * half + 1 < n:
        offs = np.arange(half + 1, n - half)
        dropped = float(np.abs(time[offs]).max()) if offs.size else 0.0
        if dropped <= 1e-12 * float(np.abs(time).max()):
            truncated = time.copy()
            truncated[offs] = 0.0
            # keep (time, freq) an exact transform pair: re-derive the
            # response from the compact support and re-check the bounds
            freq2 = np.fft.fft(truncated).real / n
            freq2 = np.clip(0.5 * (freq2 + freq2[(-np.arange(n)) % n]), 0.0, 1.0)
            if _flat_bounds_ok(freq2, n, buckets, sharpness, pass_slack=1e-11):
                time = truncated
                ghat = freq2
            else:
                half = n
        else:
            half = n  # keep full support rather than truncate lossily
    flt = FlatFilter(
        n=n, buckets=buckets, sharpness=sharpness, time=time, freq=ghat, support_half=half
    )
    _flat_cache[key] = flt
    return flt


_sharp_cache: dict[tuple, SharpFilter] = {}


def make_sharp_filter(n: int, k: int, zeta: float, c_sharp: float = 4.0) -> SharpFilter:
    """Construct a sharp (time-rectangle) filter.

    The ideal template is 1 on ``|t| <= n/(2k)``, 0 on ``|t| >= n/k``,
    and anything in [0, 1] between.  The constructed filter satisfies
    ``||G - G'||_2 <= zeta`` for the closest valid template G', with
    spectrum exactly supported on ``|f| <= c_sharp*k*log2(n/zeta)/2``.
    """
    _check_pow2(n, "n")
    if not (2 <= k <= n // 2):
        raise ValueError("k must satisfy 2 <= k <= n/2")
    if not (0 < zeta < 1):
        raise ValueError("zeta must lie in (0, 1)")
    key = (n, k, float(zeta), round(float(c_sharp), 6))
    cached = _sharp_cache.get(key)
    if cached is not None:
        return cached

    t_pass = n / (2 * k)
    t_stop = n / k
    rect_half = int(round((t_pass + t_stop) / 2))
    margin = (t_stop - t_pass) / 2
    zc = zeta / 4
    sigma_t = margin / np.sqrt(2 * np.log(8 * n / zc))
    freq_half = int(np.ceil(c_sharp * k * np.log2(n / zeta) / 2))
    freq_half = min(freq_half, n // 2)

    flt = None
    for _ in range(4):
        f = frequency_range(n).astype(np.float64)
        box_len = 2 * rect_half + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            dirichlet = np.where(
                f == 0,
                box_len / n,
                np.sin(np.pi * box_len * f / n) / (n * np.sin(np.pi * f / n)),
            )
        with np.errstate(under="ignore"):
            ghat = dirichlet * np.exp(-2 * (np.pi * sigma_t * f / n) ** 2)
        if 2 * freq_half + 1 < n:
            ghat[np.abs(frequency_range(n)) > freq_half] = 0.0
        time = np.fft.ifft(ghat).real * n

        tt = np.abs(frequency_range(n))
        ideal = np.clip(time, 0.0, 1.0)
        ideal[tt <= t_pass] = 1.0
        ideal[tt >= t_stop] = 0.0
        achieved = float(np.linalg.norm(time - ideal))
        if achieved <= zeta:
            flt = SharpFilter(
                n=n,
                k=k,
                zeta=float(zeta),
                time=time,
                freq=ghat,
                freq_half=freq_half,
                achieved=achieved,
            )
            break
        freq_half = min(2 * freq_half, n // 2)
        sigma_t *= 0.9
    if flt is None:
        raise FilterConstructionError(f"sharp filter failed for n={n} k={k} zeta={zeta}")
    _sharp_cache[key] = flt
    return flt


def dump_filter_csv(flt: FlatFilter | SharpFilter, path) -> None:
    """Write the frequency response as CSV columns ``f,ghat``."""
    freqs = frequency_range(flt.n)
    order = np.argsort(freqs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("f,ghat\n")
        for idx in order:
            fh.write(f"{int(freqs[idx])},{flt.freq[idx]!r}\n")
