"""Bit/symbol/sample conversions for dual-polarization 16-QAM and BER measurement.

Gray mapping (published here so BER numbers are reproducible): each symbol is
4 bits ``b3 b2 b1 b0``; ``b3 b2`` select the in-phase level and ``b1 b0`` the
quadrature level through the Gray table

    00 -> -3,  01 -> -1,  11 -> +1,  10 -> +3

and the constellation is scaled by 1/sqrt(10) for unit average energy.  A
dual-polarization symbol consumes 8 bits: the first 4 go to the x
polarization, the next 4 to y.

Hard decisions use the nearest constellation point; a value exactly on a
decision boundary is resolved toward the smaller in-phase level first, then
the smaller quadrature level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Gray-ordered amplitude levels: index g in 0..3 maps bit pair to level.
_GRAY_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])
# bit pair (b_hi, b_lo) -> Gray index into _GRAY_LEVELS
_BITS_TO_INDEX = np.array([0, 1, 3, 2])  # 00, 01, 10, 11 -> level slot
_INDEX_TO_BITS = np.argsort(_BITS_TO_INDEX)
_QAM16_SCALE = 1.0 / np.sqrt(10.0)


@dataclass(frozen=True)
class BitStream:
    """A flat binary sequence plus the seed that generated it (0 if crafted)."""

    bits: np.ndarray
    seed: int = 0

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class SymbolFrame:
    """Dual-polarization complex symbols at 1 sample/symbol."""

    x_pol: np.ndarray
    y_pol: np.ndarray
    constellation: str = "16QAM"
    unit_energy: bool = True

    def __post_init__(self):
        if len(self.x_pol) != len(self.y_pol):
            raise ValueError("x_pol and y_pol must have equal length")

    def __len__(self) -> int:
        return len(self.x_pol)


@dataclass(frozen=True)
class SampleFrame:
    """Dual-polarization complex baseband samples.

    ``sample_period`` is 1/(samples_per_symbol * baud_rate); every equalizer
    in this package runs at samples_per_symbol = 2.
    """

    x_pol: np.ndarray
    y_pol: np.ndarray
    samples_per_symbol: int
    baud_rate: float

    def __post_init__(self):
        if len(self.x_pol) != len(self.y_pol):
            raise ValueError("x_pol and y_pol must have equal length")

    def __len__(self) -> int:
        return len(self.x_pol)

    @property
    def sample_period(self) -> float:
        return 1.0 / (self.samples_per_symbol * self.baud_rate)

    @property
    def sampling_rate(self) -> float:
        return self.samples_per_symbol * self.baud_rate

    def with_pols(self, x_pol: np.ndarray, y_pol: np.ndarray) -> "SampleFrame":
        return SampleFrame(x_pol, y_pol, self.samples_per_symbol, self.baud_rate)


@dataclass(frozen=True)
class BerReport:
    errors: int
    total: int

    @property
    def ber(self) -> float:
        return self.errors / self.total


def random_bits(n_bits: int, seed: int) -> BitStream:
    """Draw n_bits uniform bits from a counter-based Philox generator."""
    rng = np.random.Generator(np.random.Philox(seed))
    return BitStream(bits=rng.integers(0, 2, size=n_bits, dtype=np.uint8), seed=seed)


def _bits_to_levels(bits: np.ndarray) -> np.ndarray:
    """(n, 2) bit pairs -> Gray-mapped amplitude levels."""
    idx = _BITS_TO_INDEX[bits[:, 0] * 2 + bits[:, 1]]
    return _GRAY_LEVELS[idx]


def _levels_to_bits(level_idx: np.ndarray) -> np.ndarray:
    """Level slots 0..3 -> (n, 2) bit pairs (inverse Gray map)."""
    vals = _INDEX_TO_BITS[level_idx]
    return np.stack([vals >> 1, vals & 1], axis=1).astype(np.uint8)


def map_bits_to_qam16(bits: BitStream) -> SymbolFrame:
    """Map a bit stream onto dual-pol Gray-coded 16-QAM with unit average energy."""
    b = np.asarray(bits.bits, dtype=np.int64)
    if len(b) % 8 != 0:
        raise ValueError(f"bit count must be divisible by 8, got {len(b)}")
    b = b.reshape(-1, 8)
    x = _bits_to_levels(b[:, 0:2]) + 1j * _bits_to_levels(b[:, 2:4])
    y = _bits_to_levels(b[:, 4:6]) + 1j * _bits_to_levels(b[:, 6:8])
    return SymbolFrame(x_pol=x * _QAM16_SCALE, y_pol=y * _QAM16_SCALE)


def _decide_levels(values: np.ndarray) -> np.ndarray:
    """Nearest amplitude level slot, boundary ties toward the smaller slot."""
    boundaries = np.array([-2.0, 0.0, 2.0]) * _QAM16_SCALE
    # strict > puts a boundary value into the lower slot
    return (values[:, None] > boundaries[None, :]).sum(axis=1)


def demap_qam16_hard(frame: SymbolFrame) -> BitStream:
    """Hard-decision demapper, inverse of :func:`map_bits_to_qam16`."""
    out = []
    for pol in (frame.x_pol, frame.y_pol):
        i_idx = _decide_levels(np.real(pol))
        q_idx = _decide_levels(np.imag(pol))
        out.append(np.concatenate([_levels_to_bits(i_idx), _levels_to_bits(q_idx)], axis=1))
    bits = np.concatenate([out[0], out[1]], axis=1).reshape(-1)
    return BitStream(bits=bits)


def measure_ber(tx: BitStream, rx: BitStream, skip_head: int = 0, skip_tail: int = 0) -> BerReport:
    """Count bit errors after trimming skip_head/skip_tail bits from both streams."""
    a = np.asarray(tx.bits)
    b = np.asarray(rx.bits)
    if len(a) != len(b):
        raise ValueError(f"bit streams differ in length: {len(a)} vs {len(b)}")
    end = len(a) - skip_tail
    a = a[skip_head:end]
    b = b[skip_head:end]
    if len(a) == 0:
        raise ValueError("no bits left after trimming")
    errors = int(np.count_nonzero(a != b))
    return BerReport(errors=errors, total=len(a))


def rrc_taps(sps: int, rolloff: float, span_symbols: int) -> np.ndarray:
    """Root-raised-cosine taps, odd length span_symbols*sps + 1, unit energy."""
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    n = span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps  # in symbol periods
    taps = np.empty(n)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 + rolloff * (4.0 / np.pi - 1.0)
        elif abs(abs(4.0 * rolloff * ti) - 1.0) < 1e-9:
            taps[i] = (rolloff / np.sqrt(2.0)) * (
                (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * rolloff))
                + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * rolloff))
            )
        else:
            num = np.sin(np.pi * ti * (1.0 - rolloff)) + 4.0 * rolloff * ti * np.cos(
                np.pi * ti * (1.0 + rolloff)
            )
            den = np.pi * ti * (1.0 - (4.0 * rolloff * ti) ** 2)
            taps[i] = num / den
    return taps / np.sqrt(np.sum(taps**2))


def _circular_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Circular convolution of x with a causal FIR; output[n] = sum h[k] x[n-k]."""
    n = len(x)
    h = np.zeros(n, dtype=complex)
    m = len(taps)
    if m > n:
        raise ValueError(f"frame ({n}) shorter than filter ({m})")
    h[:m] = taps
    return np.fft.ifft(np.fft.fft(x) * np.fft.fft(h))


def upsample_and_shape(
    symbols: SymbolFrame,
    sps: int,
    baud_rate: float,
    rolloff: float = 0.1,
    span_symbols: int = 64,
) -> tuple[SampleFrame, int]:
    """Upsample by zero insertion and pulse-shape with an RRC filter.

    The frame is treated as periodic (circular shaping), matching the circular
    channel operators downstream.  Returns the shaped frame and the filter
    delay in samples; decimating at that delay after a matched filter recovers
    the symbols.
    """
    if sps < 2:
        raise ValueError(f"sps must be >= 2, got {sps}")
    taps = rrc_taps(sps, rolloff, span_symbols)
    delay = (len(taps) - 1) // 2
    pols = []
    for pol in (symbols.x_pol, symbols.y_pol):
        up = np.zeros(len(pol) * sps, dtype=complex)
        up[::sps] = pol
        pols.append(_circular_filter(up, taps))
    shaped = SampleFrame(pols[0], pols[1], samples_per_symbol=sps, baud_rate=baud_rate)
    return shaped, delay


def matched_filter(frame: SampleFrame, rolloff: float = 0.1, span_symbols: int = 64) -> tuple[SampleFrame, int]:
    """Apply the receive RRC matched filter (circular); returns frame and its delay."""
    taps = rrc_taps(frame.samples_per_symbol, rolloff, span_symbols)
    delay = (len(taps) - 1) // 2
    x = _circular_filter(frame.x_pol, taps)
    y = _circular_filter(frame.y_pol, taps)
    return frame.with_pols(x, y), delay


def downsample_to_symbols(frame: SampleFrame, phase: int = 0) -> SymbolFrame:
    """Take every samples_per_symbol-th sample starting at phase."""
    sps = frame.samples_per_symbol
    if not 0 <= phase < sps:
        raise ValueError(f"phase must be in [0, {sps}), got {phase}")
    return SymbolFrame(
        x_pol=frame.x_pol[phase::sps],
        y_pol=frame.y_pol[phase::sps],
        unit_energy=False,
    )


def normalize_symbols(frame: SymbolFrame) -> SymbolFrame:
    """Rescale each polarization to unit average symbol energy."""
    pols = []
    for pol in (frame.x_pol, frame.y_pol):
        p = np.mean(np.abs(pol) ** 2)
        pols.append(pol / np.sqrt(p) if p > 0 else pol)
    return SymbolFrame(pols[0], pols[1], constellation=frame.constellation)
