"""Fiber channel models: split-step Manakov propagation and analytic dispersion.

Conventions (numpy FFT, forward transform uses exp(-j2*pi*f*t)):

- forward dispersion over length z multiplies the spectrum by
  exp(-j * pi * D * lambda^2 * z * f^2 / c); the quadratic-phase FIR taps in
  :mod:`cdclab.cdc_design` invert exactly this operator.
- the Kerr term rotates the field by +(8/9) * gamma * (|Ex|^2 + |Ey|^2) * dz.

Per-span EDFA gain exactly compensates the span loss; ASE is injected lumped
after each amplifier as circular complex Gaussian noise with per-polarization
power (G * NF - 1) * h * nu * B / 2 over bandwidth B (the simulation
bandwidth), NF and G in linear units.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass

import numpy as np

from .signal_model import SampleFrame

SPEED_OF_LIGHT = 299792458.0  # m/s
PLANCK = 6.62607015e-34  # J s

_FRAME_MAGIC = b"CDCF"
_FRAME_VERSION = 1


@dataclass(frozen=True)
class FiberParams:
    """SSMF link parameters (engineering units, converted internally to SI)."""

    dispersion_ps_nm_km: float = 16.8
    gamma_per_w_km: float = 1.2
    attenuation_db_km: float = 0.21
    span_length_km: float = 80.0
    n_spans: int = 1
    noise_figure_db: float = 4.5
    wavelength_nm: float = 1550.0

    @property
    def total_length_km(self) -> float:
        return self.span_length_km * self.n_spans

    @property
    def wavelength_m(self) -> float:
        return self.wavelength_nm * 1e-9

    @property
    def center_frequency_hz(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength_m

    @property
    def dispersion_si(self) -> float:
        """D in s/m^2."""
        return self.dispersion_ps_nm_km * 1e-6

    @property
    def attenuation_np_km(self) -> float:
        """Field/power attenuation in nepers per km (power decays as exp(-a*L))."""
        return self.attenuation_db_km * np.log(10.0) / 10.0

    @property
    def span_gain_linear(self) -> float:
        return 10.0 ** (self.attenuation_db_km * self.span_length_km / 10.0)

    @property
    def noise_figure_linear(self) -> float:
        return 10.0 ** (self.noise_figure_db / 10.0)


@dataclass(frozen=True)
class PropagationConfig:
    """Split-step controls.

    ``launch_power_dbm`` rescales the input frame to that average total power
    (both polarizations summed) before propagation; None propagates the frame
    as given.  ``with_ase`` disables amplifier noise for oracle tests.
    """

    step_km: float = 0.1
    launch_power_dbm: float | None = 0.0
    seed: int = 0
    with_ase: bool = True


def _dispersion_phase(fiber: FiberParams, f: np.ndarray, z_km: float) -> np.ndarray:
    """Spectral phase of forward dispersion over z_km (radians, sign included)."""
    z_m = z_km * 1e3
    return -np.pi * fiber.dispersion_si * fiber.wavelength_m**2 * z_m * f**2 / SPEED_OF_LIGHT


def apply_cd_analytic(tx: SampleFrame, fiber: FiberParams, sign: int = 1) -> SampleFrame:
    """All-pass chromatic dispersion over the full link length.

    sign=+1 applies the fiber's dispersion (forward channel), sign=-1 its
    exact inverse.  The frame is treated as periodic; callers provide guard
    symbols when edge effects matter.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    f = np.fft.fftfreq(len(tx), d=tx.sample_period)
    h = np.exp(1j * sign * _dispersion_phase(fiber, f, fiber.total_length_km))
    x = np.fft.ifft(np.fft.fft(tx.x_pol) * h)
    y = np.fft.ifft(np.fft.fft(tx.y_pol) * h)
    return tx.with_pols(x, y)


def ase_noise_power(fiber: FiberParams, bandwidth_hz: float) -> float:
    """Per-polarization ASE power in watts added by one amplifier.

    P = (G * NF - 1) * h * nu * B / 2 with gain G equal to the span loss.
    Vanishes for an ideal unity-gain amplifier (G -> 1, NF -> 1).
    """
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    g = fiber.span_gain_linear
    nf = fiber.noise_figure_linear
    h_nu = PLANCK * fiber.center_frequency_hz
    return (g * nf - 1.0) * h_nu * bandwidth_hz / 2.0


def total_power(frame: SampleFrame) -> float:
    """Average power summed over both polarizations."""
    return float(np.mean(np.abs(frame.x_pol) ** 2) + np.mean(np.abs(frame.y_pol) ** 2))


def scale_to_power(frame: SampleFrame, power_dbm: float) -> SampleFrame:
    """Rescale so both polarizations together average ``power_dbm``."""
    target_w = 10.0 ** (power_dbm / 10.0) * 1e-3
    p = total_power(frame)
    if p <= 0:
        return frame
    s = np.sqrt(target_w / p)
    return frame.with_pols(frame.x_pol * s, frame.y_pol * s)


def propagate_manakov(tx: SampleFrame, fiber: FiberParams, cfg: PropagationConfig) -> SampleFrame:
    """Symmetric split-step solution of the Manakov pair over all spans.

    Each span runs linear half-step / nonlinear full step / linear half-step
    (the inner half-steps merged), then flat gain exactly compensating the
    span loss, then lumped ASE when enabled.
    """
    if len(tx) == 0:
        raise ValueError("empty frame")
    field = np.stack([tx.x_pol, tx.y_pol]).astype(complex)
    if not np.all(np.isfinite(field)):
        raise FloatingPointError("non-finite samples in input frame")
    if not 0 < cfg.step_km <= fiber.span_length_km:
        raise ValueError(f"step_km must be in (0, {fiber.span_length_km}], got {cfg.step_km}")
    if cfg.launch_power_dbm is not None:
        scaled = scale_to_power(tx, cfg.launch_power_dbm)
        field = np.stack([scaled.x_pol, scaled.y_pol]).astype(complex)

    n_steps = int(np.ceil(fiber.span_length_km / cfg.step_km))
    dz = fiber.span_length_km / n_steps
    f = np.fft.fftfreq(len(tx), d=tx.sample_period)
    half_lin = np.exp(1j * _dispersion_phase(fiber, f, dz / 2.0) - fiber.attenuation_np_km * dz / 4.0)
    full_lin = half_lin**2
    nl_coef = (8.0 / 9.0) * fiber.gamma_per_w_km
    gain_amp = np.sqrt(fiber.span_gain_linear)
    sigma2 = ase_noise_power(fiber, bandwidth_hz=tx.sampling_rate)
    rng = np.random.Generator(np.random.Philox(cfg.seed))

    for _ in range(fiber.n_spans):
        spec = np.fft.fft(field, axis=1) * half_lin
        for step in range(n_steps):
            field = np.fft.ifft(spec, axis=1)
            power = np.abs(field[0]) ** 2 + np.abs(field[1]) ** 2
            field *= np.exp(1j * nl_coef * power * dz)
            spec = np.fft.fft(field, axis=1)
            spec *= full_lin if step < n_steps - 1 else half_lin
        field = np.fft.ifft(spec, axis=1) * gain_amp
        if cfg.with_ase:
            noise = rng.normal(size=(2, 2, len(tx))) * np.sqrt(sigma2 / 2.0)
            field = field + noise[:, 0] + 1j * noise[:, 1]

    if not np.all(np.isfinite(field)):
        raise FloatingPointError("propagation produced non-finite samples")
    return tx.with_pols(field[0], field[1])


def save_frame(path: str | os.PathLike, frame: SampleFrame) -> None:
    """Write a frame in the documented little-endian binary layout.

    Header: magic ``CDCF``, version u32, baud rate f64, sps u32, length u64;
    then per polarization (x then y) interleaved re/im float64 samples.
    The write is atomic (temp file + rename).
    """
    buf = io.BytesIO()
    buf.write(_FRAME_MAGIC)
    buf.write(struct.pack("<IdIQ", _FRAME_VERSION, frame.baud_rate, frame.samples_per_symbol, len(frame)))
    for pol in (frame.x_pol, frame.y_pol):
        inter = np.empty(2 * len(pol))
        inter[0::2] = np.real(pol)
        inter[1::2] = np.imag(pol)
        buf.write(inter.astype("<f8").tobytes())
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def load_frame(path: str | os.PathLike) -> SampleFrame:
    """Read a frame written by :func:`save_frame`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FRAME_MAGIC:
            raise ValueError(f"{path}: not a frame file (bad magic {magic!r})")
        version, baud, sps, length = struct.unpack("<IdIQ", fh.read(24))
        if version != _FRAME_VERSION:
            raise ValueError(f"{path}: unsupported frame version {version}")
        pols = []
        for _ in range(2):
            inter = np.frombuffer(fh.read(16 * length), dtype="<f8")
            if len(inter) != 2 * length:
                raise ValueError(f"{path}: truncated frame file")
            pols.append(inter[0::2] + 1j * inter[1::2])
    return SampleFrame(pols[0], pols[1], samples_per_symbol=sps, baud_rate=baud)
