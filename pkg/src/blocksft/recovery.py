"""Outer recovery loop: iterative SNR reduction plus a clean-up pass.

The loop alternates three sublinear primitives against a running
spectral estimate chi: locate candidate blocks, prune candidates whose
measured energy misses a threshold, and estimate coefficients on the
survivors.  Each iteration halves the bound on the residual energy, so
after log2(snr) rounds the residual sits at the tail-noise floor; one
final pass at accuracy eps tightens the approximation factor to
1 + O(eps).  All signal access goes through a counted reader; chi is
always subtracted spectrally, never by touching the signal.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .config import PAPER, PipelineConstants
from .core import (
    BlockStructure,
    SampleCounter,
    Signal,
    SparseSpectrum,
    capped_bins,
    counted_read,
)
from .downsample import DownsampleView, downsample_sharpness
from .filters import FlatFilter, make_flat_filter
from .hashing import ChiContext, HashParams, hash_to_bins_residual, random_hash_params
from .location import multi_block_locate

__all__ = [
    "RecoveryParams",
    "RecoveryReport",
    "prune_location",
    "estimate_values",
    "reduce_snr",
    "recover_at_const_snr",
    "block_sparse_ft",
]


@dataclass(frozen=True)
class RecoveryParams:
    """Problem description handed to the recovery pipeline.

    ``snr`` and ``nu2`` are a priori upper bounds on the signal's
    tail SNR and on the per-block tail level mu^2 = tail / k0; ``eps``
    sets the accuracy of the final estimate.  ``perturb_initial`` nudges
    the starting estimate's DC coefficient off exact zero (uniform in a
    relative-1e-12 interval), which breaks adversarial ties in
    worst-case inputs; it is off by default.
    """

    n: int
    k0: int
    k1: int
    snr: float
    nu2: float
    eps: float = 0.05
    perturb_initial: bool = False

    def __post_init__(self) -> None:
        BlockStructure(self.n, self.k0, self.k1)
        if not (self.snr > 0 and math.isfinite(self.snr)):
            raise ValueError("snr bound must be positive and finite")
        if self.nu2 < 0:
            raise ValueError("nu2 must be nonnegative")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")


@dataclass
class RecoveryReport:
    """Recovery output plus the accounting the harness records."""

    params: RecoveryParams
    spectrum: SparseSpectrum
    samples_used: int
    total_reads: int
    wall_time_ms: float
    stage_log: list

    def to_json(self) -> dict:
        fs, vs = self.spectrum.freqs_values()
        return {
            "params": asdict(self.params),
            "samples_used": int(self.samples_used),
            "total_reads": int(self.total_reads),
            "wall_time_ms": float(self.wall_time_ms),
            "stage_log": list(self.stage_log),
            "spectrum": [
                [int(f), float(v.real), float(v.imag)] for f, v in zip(fs, vs)
            ],
        }


def _bucket_reads(
    uhat: np.ndarray, flt: FlatFilter, params: HashParams, fs: np.ndarray
) -> np.ndarray:
    # one hashed estimate per frequency: undo the filter gain at the
    # in-bucket offset and the modulation phase
    gains = flt.freq_at(params.offset_of(fs))
    return uhat[params.bucket_of(fs)] / gains * params.phase_correction(fs)


def _block_frequencies(n: int, k1: int, live) -> tuple[list[int], np.ndarray]:
    blocks = BlockStructure(n, 1, k1)
    live = sorted(int(j) for j in live)
    fs = np.concatenate([blocks.block_frequencies(j) for j in live])
    return live, fs


def _widen_blocks(live, num_blocks: int) -> set[int]:
    # a block whose weight sits near a window edge shows up at the
    # adjacent reduced position, so location can come back off by one;
    # pruning re-measures under the true block windows, which makes the
    # widened candidate list safe
    out = set()
    for j in live:
        j = int(j) % num_blocks
        out.update(((j - 1) % num_blocks, j, (j + 1) % num_blocks))
    return out


def prune_location(
    reader,
    n: int,
    k0: int,
    k1: int,
    live,
    delta: float,
    p: float,
    theta: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi: ChiContext | None = None,
) -> set[int]:
    """Candidate blocks whose median measured residual energy clears theta.

    Junk entries from the location stage carry no real energy, so their
    measured block energy concentrates near the noise floor and falls
    below any threshold proportional to the residual scale.
    """
    if not live:
        return set()
    p = constants.clamp_p(p)
    live, fs = _block_frequencies(n, k1, live)
    bins = capped_bins(
        constants.prune_b_factor * k0 * k1 / delta, constants.max_bins_dense, n
    )
    sharp = downsample_sharpness(
        delta, constants.f_factor, constants.min_f, constants.max_f
    )
    flt = make_flat_filter(n, bins, sharp, constants.filter_c)
    rounds = max(1, math.ceil(constants.prune_rounds_factor * math.log2(1 / (delta * p))))
    w = np.empty((rounds, len(live)))
    for t in range(rounds):
        hp = random_hash_params(n, bins, rng)
        uhat = hash_to_bins_residual(reader, chi, flt, hp)
        est = _bucket_reads(uhat, flt, hp, fs)
        w[t] = (np.abs(est) ** 2).reshape(len(live), k1).sum(axis=1)
    med = np.median(w, axis=0)
    return {j for j, v in zip(live, med) if v >= theta}


def estimate_values(
    reader,
    n: int,
    sparsity: int,
    k1: int,
    live,
    delta: float,
    p: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi: ChiContext | None = None,
) -> SparseSpectrum:
    """Median-of-hashings estimate of the residual spectrum on listed blocks.

    ``sparsity`` only sizes the bucket count; every frequency of every
    listed block gets an estimate, with real and imaginary parts
    median-filtered separately across rounds.
    """
    out = SparseSpectrum(n)
    if not live:
        return out
    p = constants.clamp_p(p)
    live, fs = _block_frequencies(n, k1, live)
    bins = capped_bins(
        constants.est_b_factor * sparsity * k1 / delta, constants.max_bins_dense, n
    )
    sharp = downsample_sharpness(
        delta, constants.f_factor, constants.min_f, constants.max_f
    )
    flt = make_flat_filter(n, bins, sharp, constants.filter_c)
    rounds = max(1, math.ceil(constants.est_rounds_factor * math.log2(2 / p)))
    w = np.empty((rounds, fs.shape[0]), dtype=np.complex128)
    for t in range(rounds):
        hp = random_hash_params(n, bins, rng)
        uhat = hash_to_bins_residual(reader, chi, flt, hp)
        w[t] = _bucket_reads(uhat, flt, hp, fs)
    med = np.median(w.real, axis=0) + 1j * np.median(w.imag, axis=0)
    for f, v in zip(fs, med):
        out[int(f)] = complex(v)
    return out


def _log_stage(stage_log, counter, stage: str, iteration: int, located, kept, estimated):
    if stage_log is None:
        return
    stage_log.append(
        {
            "stage": stage,
            "iteration": iteration,
            "located": len(located),
            "pruned": len(kept),
            "estimated": len(estimated),
            "samples": None if counter is None else int(counter.distinct),
        }
    )


def reduce_snr(
    reader,
    n: int,
    k0: int,
    k1: int,
    snr_prime: float,
    nu2: float,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi_method: str = "auto",
    initial: SparseSpectrum | None = None,
    counter: SampleCounter | None = None,
    stage_log: list | None = None,
) -> SparseSpectrum:
    """Iteratively locate, prune, and estimate until the residual nears the tail.

    The pruning threshold halves each iteration, so the estimate picks up
    the components sitting above the current residual bound while the
    bound itself shrinks geometrically from nu2 * snr_prime down to the
    noise floor.
    """
    chi = initial if initial is not None else SparseSpectrum(n)
    snr_eff = max(float(snr_prime), 2.0)
    iterations = max(1, math.ceil(math.log2(snr_eff)))
    delta = constants.delta_const
    p = constants.clamp_p(
        delta / (math.log2(k0 / delta) ** 2 * math.log2(snr_eff) ** 4)
    )
    sharp = downsample_sharpness(
        delta, constants.f_factor, constants.min_f, constants.max_f
    )
    view = DownsampleView(
        reader, n, k1, delta=delta, sharpness=sharp, filter_c=constants.filter_c
    )
    for t in range(1, iterations + 1):
        ctx = ChiContext(chi, method=chi_method) if len(chi) else None
        located = multi_block_locate(view, k0, delta, p, rng, constants, chi=ctx)
        theta = constants.theta_factor * 2.0 ** (-t) * nu2 * snr_prime
        kept = prune_location(
            reader,
            n,
            k0,
            k1,
            _widen_blocks(located, n // k1),
            delta,
            p,
            theta,
            rng,
            constants,
            chi=ctx,
        )
        estimated = estimate_values(
            reader, n, k0, k1, kept, delta, p, rng, constants, chi=ctx
        )
        chi.add_scaled(estimated)
        _log_stage(stage_log, counter, "reduce", t, located, kept, estimated)
    return chi


def recover_at_const_snr(
    reader,
    n: int,
    k0: int,
    k1: int,
    nu2: float,
    eps: float,
    chi: SparseSpectrum,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi_method: str = "auto",
    counter: SampleCounter | None = None,
    stage_log: list | None = None,
) -> SparseSpectrum:
    """One clean-up pass: finer location and a wider estimation hashing.

    Runs location at accuracy eps^2, prunes at the eps * nu2 scale, and
    re-estimates with a bucket count sized for sparsity ~ k0/eps, which
    tightens the approximation factor from O(1) to 1 + O(eps).
    """
    p = constants.clamp_p(
        constants.eta_const * eps / math.log2(max(k0 / eps, 2.0)) ** 2
    )
    delta_loc = eps * eps
    sharp = downsample_sharpness(
        delta_loc, constants.f_factor, constants.min_f, constants.max_f
    )
    view = DownsampleView(
        reader, n, k1, delta=delta_loc, sharpness=sharp, filter_c=constants.filter_c
    )
    ctx = ChiContext(chi, method=chi_method) if len(chi) else None
    located = multi_block_locate(view, k0, delta_loc, p, rng, constants, chi=ctx)
    theta = constants.const_theta_factor * eps * nu2
    kept = prune_location(
        reader,
        n,
        k0,
        k1,
        _widen_blocks(located, n // k1),
        eps,
        p,
        theta,
        rng,
        constants,
        chi=ctx,
    )
    sparsity = max(k0, math.ceil(constants.est_sparsity_factor * k0 / eps))
    estimated = estimate_values(
        reader, n, sparsity, k1, kept, eps, p, rng, constants, chi=ctx
    )
    chi.add_scaled(estimated)
    _log_stage(stage_log, counter, "cleanup", 1, located, kept, estimated)
    return chi


def block_sparse_ft(
    signal: Signal,
    params: RecoveryParams,
    rng: np.random.Generator,
    constants: PipelineConstants = PAPER,
    chi_method: str = "auto",
) -> RecoveryReport:
    """Sparse recovery of an approximately block-sparse spectrum.

    When the stated (snr, nu2) bounds hold, the returned estimate
    satisfies ||Xhat - chihat||^2 <= k0 mu^2 + O(eps k0 nu2) with
    constant probability; the report carries the estimate together with
    the sample accounting and a per-stage log.
    """
    if signal.n != params.n:
        raise ValueError("signal length does not match params.n")
    counter = SampleCounter(params.n)

    def reader(positions: np.ndarray) -> np.ndarray:
        return counted_read(signal, counter, positions)

    start = time.perf_counter()
    stage_log: list = []
    chi = SparseSpectrum(params.n)
    if params.perturb_initial:
        scale = 1e-12 * math.sqrt(max(params.k0 * params.nu2 * params.snr, 0.0))
        if scale > 0:
            chi[0] = complex(rng.uniform(0.0, scale))
    chi = reduce_snr(
        reader,
        params.n,
        params.k0,
        params.k1,
        params.snr,
        params.nu2,
        rng,
        constants,
        chi_method,
        initial=chi,
        counter=counter,
        stage_log=stage_log,
    )
    chi = recover_at_const_snr(
        reader,
        params.n,
        params.k0,
        params.k1,
        params.nu2,
        params.eps,
        chi,
        rng,
        constants,
        chi_method,
        counter=counter,
        stage_log=stage_log,
    )
    wall_ms = (time.perf_counter() - start) * 1e3
    return RecoveryReport(
        params=params,
        spectrum=chi,
        samples_used=int(counter.distinct),
        total_reads=int(counter.total_reads),
        wall_time_ms=wall_ms,
        stage_log=stage_log,
    )
