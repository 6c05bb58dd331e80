"""Time-domain equalizer kernels: direct FIR (TDE) and clustered FIR (TDCE).

Both compute y[n] = sum_k g_k x[n-k] over the symmetric tap index range with
zero-padded edges, so the output is time-aligned with the input (no residual
group delay) and has the same length.  The clustered kernel factorizes the
sum: per cluster, the delayed samples are added first (ascending k, fixed
order for bit-reproducibility) and multiplied once by the representative.

Complexity accounting counts real multiplications per recovered symbol, four
per complex multiplication; additions and memory reads are reported in the
debug counters but carry no acceptance weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from .cdc_design import ClusteredFilter, TapSet
from .signal_model import SampleFrame


@dataclass(frozen=True)
class OpCounters:
    """Debug operation counts for one equalizer invocation."""

    method: str
    real_mults_per_symbol: float
    complex_mults_per_output: float
    complex_adds_per_output: float
    memory_reads_per_output: float

    def csv_row(self) -> str:
        return (
            f"{self.method},{self.real_mults_per_symbol:g},{self.complex_mults_per_output:g},"
            f"{self.complex_adds_per_output:g},{self.memory_reads_per_output:g}"
        )

    @staticmethod
    def csv_header() -> str:
        return "method,real_mults_per_symbol,complex_mults_per_output,complex_adds_per_output,memory_reads_per_output"


@dataclass(frozen=True)
class EqualizerOutput:
    frame: SampleFrame
    group_delay: int
    mode: str = "float"
    counters: OpCounters | None = None


def tde_complexity(size_n: int) -> int:
    """Real multiplications per recovered symbol of the direct FIR, 4*N."""
    if size_n < 1:
        raise ValueError(f"size_n must be >= 1, got {size_n}")
    return 4 * size_n


def tdce_complexity(n_clusters: int) -> int:
    """Real multiplications per recovered symbol of the clustered FIR, 4*N_C."""
    if n_clusters < 1:
        raise ValueError(f"n_clusters must be >= 1, got {n_clusters}")
    return 4 * n_clusters


def _check_frame(frame: SampleFrame, size_n: int) -> None:
    if len(frame) <= size_n:
        raise ValueError(f"frame length {len(frame)} must exceed filter size {size_n}")


def _fir_same(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Zero-padded symmetric-range FIR via FFT convolution."""
    return sp_signal.fftconvolve(x, taps, mode="same")


def _clustered_sums(x: np.ndarray, clusters: list[np.ndarray], half: int) -> list[np.ndarray]:
    """Per-cluster delayed-sample sums, each member added in ascending k order."""
    padded = np.concatenate([np.zeros(half, dtype=complex), x, np.zeros(half, dtype=complex)])
    n = len(x)
    sums = []
    for ks in clusters:
        acc = np.zeros(n, dtype=complex)
        for k in ks:
            # y[n] needs x[n - k]; the padded array holds x[i - half]
            start = half - k
            acc += padded[start : start + n]
        sums.append(acc)
    return sums


def _clustered_filter_pol(
    x: np.ndarray, representatives: np.ndarray, clusters: list[np.ndarray], half: int
) -> np.ndarray:
    y = np.zeros(len(x), dtype=complex)
    for rep, acc in zip(representatives, _clustered_sums(x, clusters, half)):
        y += rep * acc
    return y


def tde_fir(frame: SampleFrame, taps: TapSet, engine: str = "fft", debug: bool = False) -> EqualizerOutput:
    """Direct FIR equalization.

    engine='fft' uses FFT convolution; engine='direct' evaluates per-tap
    delayed sums in the same summation order as the clustered kernel (one
    singleton cluster per tap), which makes the factorization equivalence
    bit-exact.
    """
    _check_frame(frame, taps.size_n)
    half = taps.half_width
    if engine == "fft":
        x = _fir_same(frame.x_pol, taps.taps)
        y = _fir_same(frame.y_pol, taps.taps)
    elif engine == "direct":
        singletons = [np.array([k]) for k in taps.k_indices]
        x = _clustered_filter_pol(frame.x_pol, taps.taps, singletons, half)
        y = _clustered_filter_pol(frame.y_pol, taps.taps, singletons, half)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    counters = None
    if debug:
        n = taps.size_n
        counters = OpCounters(
            method="tde",
            real_mults_per_symbol=float(tde_complexity(n)),
            complex_mults_per_output=float(n),
            complex_adds_per_output=float(n - 1),
            memory_reads_per_output=float(2 * n),  # one sample + one coefficient per tap
        )
    out = frame.with_pols(x, y)
    return EqualizerOutput(frame=out, group_delay=0, mode="float", counters=counters)


def _run_clustered(frame: SampleFrame, filt: ClusteredFilter) -> SampleFrame:
    half = filt.source.half_width
    clusters = [filt.members(cid) - half for cid in range(filt.n_clusters)]
    x = _clustered_filter_pol(frame.x_pol, filt.representatives, clusters, half)
    y = _clustered_filter_pol(frame.y_pol, filt.representatives, clusters, half)
    return frame.with_pols(x, y)


def tdce_fir(frame: SampleFrame, filt: ClusteredFilter, debug: bool = False) -> EqualizerOutput:
    """Clustered FIR equalization: per-cluster sample sums, then one multiply each."""
    size_n = filt.source.size_n
    _check_frame(frame, size_n)
    counters = None
    if debug:
        nc = filt.n_clusters
        counters = OpCounters(
            method="tdce",
            real_mults_per_symbol=float(tdce_complexity(nc)),
            complex_mults_per_output=float(nc),
            # (size_n - nc) adds inside the cluster sums + (nc - 1) to combine
            complex_adds_per_output=float(size_n - 1),
            memory_reads_per_output=float(size_n + nc),
        )
    return EqualizerOutput(frame=_run_clustered(frame, filt), group_delay=0, mode="float", counters=counters)


def tde_fir_expanded(frame: SampleFrame, filt: ClusteredFilter, debug: bool = False) -> EqualizerOutput:
    """Direct FIR over the expanded tap set, in matched clusterwise summation order.

    With the summation order matched, the expanded FIR computes the exact
    same floating-point operations as :func:`tdce_fir`; the unordered
    comparison path is ``tde_fir`` on a TapSet built from
    ``filt.expanded_taps``.
    """
    size_n = filt.source.size_n
    _check_frame(frame, size_n)
    counters = None
    if debug:
        counters = OpCounters(
            method="tde",
            real_mults_per_symbol=float(tde_complexity(size_n)),
            complex_mults_per_output=float(size_n),
            complex_adds_per_output=float(size_n - 1),
            memory_reads_per_output=float(2 * size_n),
        )
    return EqualizerOutput(frame=_run_clustered(frame, filt), group_delay=0, mode="float", counters=counters)
