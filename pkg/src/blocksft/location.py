"""Finding the energetic blocks of a signal from few samples.

Location works on the 2*k1 downsampled signals: block j of the spectrum
shows up as frequency j in every downsampling that kept enough of its
energy.  The budget allocator converts one set of energy proxies into
per-signal bucket budgets by importance sampling, spending most buckets
where most energy sits.  The locator then recovers bucket-dominating
frequencies digit by digit: two hashings whose modulation shifts differ
by w leave a relative phase of w * f on the bucket of f, and sweeping w
over powers of a small radix reads off f in that base.  Spurious
frequencies slip through at some rate; downstream pruning pays for them,
so the sets returned here only have to catch the heavy blocks.
"""

from __future__ import annotations

import math

import numpy as np

from .config import PAPER, PipelineConstants
from .core import capped_bins, next_pow2
from .downsample import DownsampleView, downsample_sharpness
from .hashing import ChiContext, estimate_energies, hash_to_bins_reduced

__all__ = [
    "active_set",
    "budget_allocation",
    "locate_reduced_signals",
    "multi_block_locate",
]


def active_set(zhat_all, gamma, k0: int, delta: float) -> set[int]:
    """Blocks whose gamma-weighted reduced energy clears the delta cut.

    Test-side definition (needs the exact spectra ``zhat_all``, one row
    per downsampled signal): j is active when
    ``sum_r |Zhat^r_j|^2 * gamma_r / ||Zhat^r||^2`` reaches
    ``delta * sum_r ||Zhat^r||^2 / k0``.  Rows with zero energy
    contribute nothing.
    """
    zhat_all = np.asarray(zhat_all, dtype=np.complex128)
    gamma = np.asarray(gamma, dtype=np.float64)
    energies = np.sum(np.abs(zhat_all) ** 2, axis=1)
    safe = np.where(energies > 0, energies, 1.0)
    weighted = (np.abs(zhat_all) ** 2 * (gamma / safe)[:, None])[energies > 0].sum(axis=0)
    cut = delta * energies.sum() / k0
    return {int(j) for j in np.nonzero(weighted >= cut)[0]}


def budget_allocation(
    gamma,
    k0: int,
    delta: float,
    p: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
) -> np.ndarray:
    """Per-signal bucket budgets drawn by importance sampling.

    Each draw picks a signal r with probability proportional to gamma_r
    and a geometric level q; a signal's budget is set by the deepest
    level it ever drew.  Signals never drawn get budget zero.  The
    expected total stays near-linear in k0/delta while deep levels reach
    budgets large enough to isolate any j carrying a 1/s_r fraction of
    its signal's energy.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    s = np.zeros(gamma.shape[0], dtype=np.int64)
    total = gamma.sum()
    if total <= 0:
        return s
    p = constants.clamp_p(p)
    q_levels = max(1, math.ceil(math.log2(constants.budget_scale * k0 / delta)))
    draws = max(1, math.ceil(constants.budget_draws_factor * (k0 / delta) * math.log2(1 / p)))
    w = (gamma / total)[:, None] * (0.5 ** np.arange(1, q_levels + 1))[None, :]
    w = (w / w.sum()).ravel()
    picks = rng.choice(w.size, size=draws, p=w)
    r_idx = picks // q_levels
    q_idx = picks % q_levels + 1
    for r in np.unique(r_idx):
        s[r] = int(constants.budget_scale) * (1 << int(q_idx[r_idx == r].max()))
    return s


def _radix_parameters(m: int, radix_bits: int = 0) -> tuple[int, int, int]:
    # radix lam, digit count, and the padded modulus N = lam^levels >= m;
    # both are powers of two, so N/m is an exact integer
    if radix_bits:
        lam = min(1 << radix_bits, m)
    else:
        loglog = math.log2(max(math.log2(m), 2.0))
        lam = max(2, 1 << (int(loglog) // 2))
    log2m = m.bit_length() - 1
    log2lam = lam.bit_length() - 1
    levels = max(1, -(-log2m // log2lam))
    return lam, levels, lam**levels


def locate_reduced_signals(
    view: DownsampleView,
    budgets,
    delta: float,
    p: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi: ChiContext | None = None,
) -> set[int]:
    """Frequencies dominating their hash buckets, over all budgeted signals.

    ``budgets[r]`` sizes the bucket count for downsampled signal r (zero
    skips it).  Returns the union over rounds of the decoded frequencies
    as raw integers in [0, m); junk entries are expected and tolerated.
    """
    m = view.m
    budgets = np.asarray(budgets, dtype=np.int64)
    active = [r for r in range(budgets.shape[0]) if budgets[r] > 0]
    if not active:
        return set()
    p = constants.clamp_p(p)
    sharp = downsample_sharpness(
        delta, constants.f_factor, constants.min_f, constants.max_f
    )
    bins_list = [
        capped_bins(constants.loc_bucket_factor * b, constants.max_bins_reduced, m)
        if b > 0
        else 0
        for b in budgets
    ]
    lam, levels, big_n = _radix_parameters(m, constants.loc_radix_bits)
    rounds = max(1, math.ceil(constants.loc_rounds * math.log2(2 / p)))
    pairs = max(2, math.ceil(constants.loc_pairs_factor * math.log2(max(math.log2(m), 2.0))))
    lam_phases = np.exp(-2j * np.pi * np.arange(lam) / lam)

    found: set[int] = set()
    for _ in range(rounds):
        sigma = 2 * int(rng.integers(0, m // 2)) + 1
        sigma_inv = pow(sigma, -1, m)
        alphas = rng.integers(0, m, size=pairs)
        # odd beta: a wrong digit guess d then shifts the vote phase by
        # 2 pi beta d / lam != 0 (mod 2 pi), so it cannot masquerade as
        # the zero-phase correct digit no matter how beta falls
        betas = 2 * rng.integers(0, m // 2, size=pairs) + 1
        dens = [
            hash_to_bins_reduced(
                view, bins_list, sharp, sigma, int(alphas[a]),
                chi=chi, filter_c=constants.filter_c,
            )
            for a in range(pairs)
        ]
        state = {
            r: (np.zeros(bins_list[r], dtype=np.int64), np.ones(bins_list[r], dtype=bool))
            for r in active
        }
        for g in range(1, levels + 1):
            w_g = lam ** (levels - g)
            nums = [
                hash_to_bins_reduced(
                    view, bins_list, sharp, sigma, int((alphas[a] + w_g * betas[a]) % m),
                    chi=chi, filter_c=constants.filter_c,
                )
                for a in range(pairs)
            ]
            for r in active:
                facc, alive = state[r]
                den = np.stack([dens[a][r] for a in range(pairs)])
                num = np.stack([nums[a][r] for a in range(pairs)])
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(den != 0, num / np.where(den != 0, den, 1.0), 0.0)
                # phase carried by the digits already decoded, mod N in
                # integers before it ever touches float
                e1 = (w_g % big_n) * (facc % big_n) % big_n
                e = (e1[None, :] * (betas[:, None] % big_n)) % big_n
                base = np.exp(-2j * np.pi * e / big_n) * ratio
                twist = lam_phases[(np.arange(lam)[:, None] * (betas[None, :] % lam)) % lam]
                votes = np.abs(twist[:, :, None] * base[None, :, :] - 1.0) < 1.0 / 3.0
                counts = votes.sum(axis=1)
                ok = 5 * counts >= 3 * pairs
                nwin = ok.sum(axis=0)
                alive &= nwin == 1
                facc += np.where(alive, ok.argmax(axis=0), 0) * (lam ** (g - 1))
                state[r] = (facc, alive)
        for r in active:
            facc, alive = state[r]
            q = facc[alive]
            fs = (sigma_inv * ((q * m) // big_n)) % m
            found.update(int(v) for v in fs)
    return found


def multi_block_locate(
    view: DownsampleView,
    k0: int,
    delta: float,
    p: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi: ChiContext | None = None,
) -> set[int]:
    """Block locations covering all but a delta-ish fraction of energy.

    Repeatedly re-estimates energies and re-draws budgets, keeps the
    elementwise maximum (a budget only helps), then runs one location
    pass.  An all-zero residual yields the empty set.
    """
    p = constants.clamp_p(p)
    rounds = max(1, math.ceil(constants.mbl_rounds_factor * math.log2(1 / p)))
    best = np.zeros(2 * view.k1, dtype=np.int64)
    sub_p = delta * p / 2
    for _ in range(rounds):
        gamma = estimate_energies(view, k0, delta, rng, constants, chi=chi)
        if gamma.sum() <= 0:
            continue
        best = np.maximum(best, budget_allocation(gamma, k0, delta, sub_p, rng, constants))
    if not best.any():
        return set()
    return locate_reduced_signals(view, best, delta, sub_p, rng, constants, chi=chi)
