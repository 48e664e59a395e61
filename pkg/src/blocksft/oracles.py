"""Brute-force reference implementations.

Everything here trades speed for obviousness: direct double loops and
exhaustive searches, independent of the fast code paths, so the test
suite can cross-check the library against unambiguous definitions.
Intended for n up to a few thousand.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .core import BlockStructure, block_energies, canonical_freq

__all__ = [
    "dft_quadratic",
    "idft_quadratic",
    "eval_sparse_spectrum",
    "downsampled_spectrum_direct",
    "hashed_spectrum_exact",
    "tail_error_bruteforce",
    "is_covered",
    "optimal_covering_budget",
]


def dft_quadratic(x: np.ndarray) -> np.ndarray:
    """O(n^2) forward transform, ``xhat_f = (1/n) sum_i x_i w^(-fi)``."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    i = np.arange(n)
    w = np.exp(-2j * np.pi * (np.outer(i, i) % n) / n)
    return w.dot(x) / n


def idft_quadratic(xhat: np.ndarray) -> np.ndarray:
    """O(n^2) inverse transform, ``x_i = sum_f xhat_f w^(fi)``."""
    xhat = np.asarray(xhat, dtype=np.complex128)
    n = xhat.shape[0]
    i = np.arange(n)
    w = np.exp(2j * np.pi * (np.outer(i, i) % n) / n)
    return w.dot(xhat)


def eval_sparse_spectrum(freqs: np.ndarray, vals: np.ndarray, n: int, positions: np.ndarray) -> np.ndarray:
    """Evaluate ``x_t = sum_f vals_f w^(f t)`` at arbitrary positions."""
    freqs = np.asarray(freqs, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.complex128)
    positions = np.asarray(positions, dtype=np.int64)
    phase = np.exp(2j * np.pi * (np.outer(positions % n, freqs % n) % n) / n)
    return phase.dot(vals)


def downsampled_spectrum_direct(xhat: np.ndarray, k1: int, ghat: np.ndarray, r: int) -> np.ndarray:
    """Direct evaluation of ``Zhat^r_j = sum_f xhat_f w^(a_r f) ghat_{j k1 - f}``.

    ``ghat`` is the dense spectrum of the downsampling filter in array
    layout; ``a_r = n r / (2 k1)``.  Returns the length ``n/k1`` spectrum
    in array layout.  O(n * m) time.
    """
    xhat = np.asarray(xhat, dtype=np.complex128)
    n = xhat.shape[0]
    m = n // k1
    a_r = (n * r) // (2 * k1)
    f = np.arange(n)
    phased = xhat * np.exp(2j * np.pi * ((a_r % n) * f % n) / n)
    out = np.empty(m, dtype=np.complex128)
    for j in range(m):
        out[j] = phased.dot(ghat[(j * k1 - f) % n])
    return out


def hashed_spectrum_exact(
    yhat: np.ndarray, ghat: np.ndarray, bins: int, sigma: int, delta: int
) -> np.ndarray:
    """Exact spectrum of the hashing of a signal with spectrum ``yhat``.

    Implements ``Uhat*_b = sum_f yhat_f ghat_{sigma f - b(n/B)} w^(sigma delta f)``
    directly.  ``ghat`` is in array layout on the same domain as ``yhat``.
    """
    yhat = np.asarray(yhat, dtype=np.complex128)
    n = yhat.shape[0]
    f = np.arange(n)
    phased = yhat * np.exp(2j * np.pi * ((sigma * delta) % n * f % n) / n)
    out = np.empty(bins, dtype=np.complex128)
    step = n // bins
    for b in range(bins):
        out[b] = phased.dot(ghat[(sigma * f - b * step) % n])
    return out


def tail_error_bruteforce(xhat: np.ndarray, k0: int, k1: int) -> float:
    """Minimize residual energy over every k0-subset of blocks explicitly."""
    energies = block_energies(xhat, k1)
    m = energies.shape[0]
    total = float(energies.sum())
    if k0 >= m:
        return 0.0
    best = total
    for keep in combinations(range(m), k0):
        best = min(best, total - float(energies[list(keep)].sum()))
    return best


def is_covered(zhat_r: np.ndarray, j: int, s_r: int) -> bool:
    """Whether budget ``s_r`` covers block ``j`` in the spectrum ``zhat_r``."""
    if s_r <= 0:
        return False
    m = zhat_r.shape[0]
    total = float(np.sum(np.abs(zhat_r) ** 2))
    return bool(np.abs(zhat_r[j % m]) ** 2 >= total / s_r)


def _pareto_menu(zhat_r: np.ndarray, occupied: np.ndarray) -> list[tuple[int, int]]:
    # For one downsampled spectrum, list the useful (mask, cost) choices:
    # cost s covers all j with |Z_j|^2 >= ||Z||^2 / s, and only the
    # coverage pattern on the occupied blocks matters.
    total = float(np.sum(np.abs(zhat_r) ** 2))
    if total == 0.0:
        return [(0, 0)]
    mags = np.abs(zhat_r[occupied]) ** 2
    order = np.argsort(-mags)
    menu = [(0, 0)]
    mask = 0
    for rank in order:
        if mags[rank] == 0.0:
            break
        mask |= 1 << int(rank)
        cost = int(np.ceil(total / mags[rank]))
        # The same cost may cover several blocks at once; keep the last.
        if menu and menu[-1][1] == cost:
            menu[-1] = (mask, cost)
        else:
            menu.append((mask, cost))
    return menu


def optimal_covering_budget(
    zhat: np.ndarray, xhat: np.ndarray, k1: int, alpha: float
) -> int:
    """Exact minimal total budget covering a (1 - alpha) energy fraction.

    Parameters
    ----------
    zhat : ndarray, shape (2*k1, n/k1)
        Exact downsampled spectra, one row per shift r.
    xhat : ndarray, shape (n,)
        True spectrum; covered blocks are weighted by their energy here.
    k1 : int
        Block width.
    alpha : float
        Allowed uncovered energy fraction.

    Returns
    -------
    int
        Minimal ``sum_r s^r`` such that the union of covered blocks
        carries at least ``(1 - alpha) * ||xhat||^2``.

    Notes
    -----
    Exact dynamic program over subsets of the occupied blocks.  Only
    blocks with nonzero true energy can contribute to the target, so the
    state space is ``2^(#occupied)``; preconditions: at most 20 occupied
    blocks and ``n/k1 <= 64``.
    """
    xhat = np.asarray(xhat)
    n = xhat.shape[0]
    m = n // k1
    if m > 64:
        raise ValueError("covering oracle requires n/k1 <= 64")
    energies = block_energies(xhat, k1)
    occupied = np.nonzero(energies)[0]
    if occupied.shape[0] > 20:
        raise ValueError("covering oracle requires at most 20 occupied blocks")
    target = (1.0 - alpha) * float(energies.sum())
    nb = occupied.shape[0]
    if target <= 0.0 or nb == 0:
        return 0

    # Energy carried by each subset of occupied blocks.
    w = energies[occupied]
    subset_energy = np.zeros(1 << nb)
    for i in range(nb):
        bit = 1 << i
        subset_energy[bit : 2 * bit] = subset_energy[:bit] + w[i]

    inf = np.iinfo(np.int64).max // 2
    best = np.full(1 << nb, inf, dtype=np.int64)
    best[0] = 0
    for r in range(zhat.shape[0]):
        menu = _pareto_menu(zhat[r], occupied)
        current = best.copy()
        for mask, cost in menu:
            if cost == 0:
                continue
            shifted = best + cost
            idx = np.arange(1 << nb) | mask
            np.minimum.at(current, idx, shifted)
        best = current

    feasible = best[subset_energy >= target - 1e-9 * max(1.0, target)]
    if feasible.size == 0 or feasible.min() >= inf:
        raise ValueError("no feasible cover at this alpha")
    return int(feasible.min())
