"""Frequency-domain equalizer: overlap-save block convolution and its cost model.

The cost model in real multiplications per recovered symbol is

    C(N, M) = N * (8 * beta * log2(N) + 4) / (N - M + 1)

with block size N, filter size M, and beta = 1/2 for a radix-2 transform on a
power-of-2 N or 3/8 for a radix-4 transform on a power-of-4 N.  The radix
only parameterizes the cost model; the numeric path may use any correct FFT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdc_design import TapSet
from .equalizers import EqualizerOutput, OpCounters
from .signal_model import SampleFrame

RADIX2 = "radix2"
RADIX4 = "radix4"

OPTIMIZER_MAX_FFT = 2**20


def _is_power_of(n: int, base: int) -> bool:
    if n < 1:
        return False
    while n % base == 0:
        n //= base
    return n == 1


@dataclass(frozen=True)
class FdeConfig:
    """Overlap-save block configuration; N - M + 1 samples per block are valid."""

    fft_size_n: int
    filter_size_m: int
    radix: str = RADIX4

    def __post_init__(self):
        if self.radix not in (RADIX2, RADIX4):
            raise ValueError(f"radix must be {RADIX2!r} or {RADIX4!r}, got {self.radix!r}")
        base = 2 if self.radix == RADIX2 else 4
        if not _is_power_of(self.fft_size_n, base):
            raise ValueError(f"{self.radix} requires fft size to be a power of {base}, got {self.fft_size_n}")
        if self.fft_size_n <= self.filter_size_m - 1:
            raise ValueError(
                f"fft size {self.fft_size_n} must exceed filter size minus one ({self.filter_size_m - 1})"
            )

    @property
    def beta(self) -> float:
        return 0.5 if self.radix == RADIX2 else 0.375

    @property
    def valid_per_block(self) -> int:
        return self.fft_size_n - self.filter_size_m + 1


def fde_complexity(cfg: FdeConfig) -> float:
    """Real multiplications per recovered symbol of the overlap-save FDE."""
    n = cfg.fft_size_n
    return n * (8.0 * cfg.beta * np.log2(n) + 4.0) / (n - cfg.filter_size_m + 1)


def optimize_fft_size(filter_size_m: int, radix: str = RADIX4, max_fft: int = OPTIMIZER_MAX_FFT) -> FdeConfig:
    """Admissible FFT size minimizing the cost model; ties break toward smaller N.

    Scans powers of 2 (radix-2) or 4 (radix-4) from the smallest admissible
    size above filter_size_m - 1 up to ``max_fft``.
    """
    if filter_size_m < 1:
        raise ValueError(f"filter_size_m must be >= 1, got {filter_size_m}")
    if radix not in (RADIX2, RADIX4):
        raise ValueError(f"radix must be {RADIX2!r} or {RADIX4!r}, got {radix!r}")
    base = 2 if radix == RADIX2 else 4
    n = base
    while n <= filter_size_m - 1:
        n *= base
    best = None
    while n <= max_fft:
        cfg = FdeConfig(fft_size_n=n, filter_size_m=filter_size_m, radix=radix)
        cost = fde_complexity(cfg)
        if best is None or cost < best[0]:
            best = (cost, cfg)
        n *= base
    return best[1]


def dft(block: np.ndarray) -> np.ndarray:
    """Forward transform, unnormalized; length must be a power of two."""
    if not _is_power_of(len(block), 2):
        raise ValueError(f"length must be a power of two, got {len(block)}")
    return np.fft.fft(block)


def idft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse transform carrying the 1/N factor; length must be a power of two."""
    if not _is_power_of(len(spectrum), 2):
        raise ValueError(f"length must be a power of two, got {len(spectrum)}")
    return np.fft.ifft(spectrum)


def tap_spectrum(taps: TapSet, fft_size_n: int) -> np.ndarray:
    """Length-N spectrum of the zero-padded taps (cached by callers per config)."""
    h = np.zeros(fft_size_n, dtype=complex)
    h[: taps.size_n] = taps.taps
    return dft(h)


def _overlap_save_pol(x: np.ndarray, spectrum: np.ndarray, n: int, m: int) -> np.ndarray:
    """Causal linear convolution with the first M-1 samples of each block discarded."""
    valid = n - m + 1
    n_blocks = int(np.ceil(len(x) / valid))
    padded = np.concatenate([np.zeros(m - 1, dtype=complex), x, np.zeros(n_blocks * valid - len(x), dtype=complex)])
    out = np.empty(n_blocks * valid, dtype=complex)
    for b in range(n_blocks):
        block = padded[b * valid : b * valid + n]
        y = idft(dft(block) * spectrum)
        out[b * valid : (b + 1) * valid] = y[m - 1 :]
    return out[: len(x)]


def fde_overlap_save(
    frame: SampleFrame, taps: TapSet, cfg: FdeConfig, debug: bool = False
) -> EqualizerOutput:
    """Overlap-save equalization with the given taps.

    The concatenated valid outputs equal the causal linear convolution; the
    result is then advanced by the (N-1)/2 tap group delay so it aligns with
    the time-domain kernels (zero-filled tail, interior exact).
    """
    if taps.size_n != cfg.filter_size_m:
        raise ValueError(f"taps size {taps.size_n} != configured filter size {cfg.filter_size_m}")
    if len(frame) < cfg.fft_size_n:
        raise ValueError(f"frame length {len(frame)} shorter than one block ({cfg.fft_size_n})")
    spectrum = tap_spectrum(taps, cfg.fft_size_n)
    half = taps.half_width
    pols = []
    for pol in (frame.x_pol, frame.y_pol):
        y = _overlap_save_pol(pol, spectrum, cfg.fft_size_n, cfg.filter_size_m)
        # remove the causal delay: y_causal[n] = y_sym[n - half]
        pols.append(np.concatenate([y[half:], np.zeros(half, dtype=complex)]))
    counters = None
    if debug:
        n = cfg.fft_size_n
        counters = OpCounters(
            method="fde",
            real_mults_per_symbol=float(fde_complexity(cfg)),
            complex_mults_per_output=float(n * (np.log2(n) + 1) / cfg.valid_per_block),
            complex_adds_per_output=float(2 * n * np.log2(n) / cfg.valid_per_block),
            memory_reads_per_output=float(2 * n / cfg.valid_per_block),
        )
    out = frame.with_pols(pols[0], pols[1])
    return EqualizerOutput(frame=out, group_delay=0, mode="float", counters=counters)
