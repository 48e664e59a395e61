"""Adaptive sublinear-time block-sparse Fourier transform.

Recovers a (k0, k1)-block-sparse approximation of a signal's spectrum
from a sublinear number of time-domain samples.  The pipeline: flat
filters isolate frequency bands, downsampling folds the signal onto
2*k1 short grids, energy-based importance sampling spends the location
budget where the energy sits, hashing-based location and estimation
recover blocks, and an outer loop drives the residual noise level down.

The :mod:`blocksft.harness` module and the ``blocksft`` CLI wrap the
library in reproducible experiments; :mod:`blocksft.oracles` holds the
brute-force references the test suite compares against.
"""

from .config import DESK_SCALE, PAPER, PipelineConstants
from .core import (
    BlockStructure,
    SampleCounter,
    Signal,
    SparseSpectrum,
    TripwireSignal,
    block_energies,
    canonical_freq,
    counted_read,
    dft,
    idft,
    read_signal,
    read_signal_csv,
    snr,
    tail_error,
    write_signal,
    write_signal_csv,
)
from .downsample import DownsampleView, downsample_sharpness, is_covered
from .filters import FlatFilter, SharpFilter, make_flat_filter, make_sharp_filter
from .harness import (
    SUCCESS_C,
    ExperimentConfig,
    gen_signal,
    git_version,
    oracle_check,
    run_experiment,
    sweep_sizes,
)
from .hashing import (
    ChiContext,
    HashParams,
    estimate_energies,
    hash_time_domain,
    hash_to_bins,
    hash_to_bins_reduced,
    hash_to_bins_residual,
    random_hash_params,
    semi_equi_inverse_block_fft,
    semi_equi_inverse_fft,
)
from .location import (
    active_set,
    budget_allocation,
    locate_reduced_signals,
    multi_block_locate,
)
from .recovery import (
    RecoveryParams,
    RecoveryReport,
    block_sparse_ft,
    estimate_values,
    prune_location,
    recover_at_const_snr,
    reduce_snr,
)
from .rng import spawn, stream

__version__ = "0.1.0"

__all__ = [
    "BlockStructure",
    "ChiContext",
    "DESK_SCALE",
    "DownsampleView",
    "ExperimentConfig",
    "FlatFilter",
    "HashParams",
    "PAPER",
    "PipelineConstants",
    "RecoveryParams",
    "RecoveryReport",
    "SUCCESS_C",
    "SampleCounter",
    "SharpFilter",
    "Signal",
    "SparseSpectrum",
    "TripwireSignal",
    "active_set",
    "block_energies",
    "block_sparse_ft",
    "budget_allocation",
    "canonical_freq",
    "counted_read",
    "dft",
    "downsample_sharpness",
    "estimate_energies",
    "estimate_values",
    "gen_signal",
    "git_version",
    "hash_time_domain",
    "hash_to_bins",
    "hash_to_bins_reduced",
    "hash_to_bins_residual",
    "idft",
    "is_covered",
    "locate_reduced_signals",
    "make_flat_filter",
    "make_sharp_filter",
    "multi_block_locate",
    "oracle_check",
    "prune_location",
    "random_hash_params",
    "read_signal",
    "read_signal_csv",
    "recover_at_const_snr",
    "reduce_snr",
    "run_experiment",
    "semi_equi_inverse_block_fft",
    "semi_equi_inverse_fft",
    "snr",
    "spawn",
    "stream",
    "sweep_sizes",
    "tail_error",
    "write_signal",
    "write_signal_csv",
]
