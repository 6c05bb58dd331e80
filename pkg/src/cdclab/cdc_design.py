"""Dispersion-compensating FIR design: tap generation, sizing, clustering, searches.

The compensating filter has constant-modulus taps with a quadratic phase in
the tap index k (k = -(N-1)/2 .. +(N-1)/2):

    g_k = sqrt(c T^2 / (D lambda^2 z)) * exp(j*pi/4) * exp(-j * a * k^2),
    a   = pi * c * T^2 / (D * lambda^2 * z)

so |g_k| is the same for every k and g_k = g_{-k}.  Clustering groups taps
with nearly equal complex values; the clustered equalizer then sums the
samples of each group before multiplying once by the group representative.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSearchError
from .fiber_channel import SPEED_OF_LIGHT

DEFAULT_CLUSTER_TRIALS = 300


@dataclass(frozen=True)
class TapDesign:
    """Physical inputs of the tap formula."""

    dispersion_ps_nm_km: float = 16.8
    wavelength_nm: float = 1550.0
    length_km: float = 80.0
    sample_period_s: float = 1.0 / 64e9

    @property
    def quad_coefficient(self) -> float:
        """a = pi*c*T^2/(D*lambda^2*z) in rad per squared tap index."""
        d_si = abs(self.dispersion_ps_nm_km) * 1e-6
        lam = self.wavelength_nm * 1e-9
        z = self.length_km * 1e3
        t = self.sample_period_s
        if z <= 0:
            raise ZeroDivisionError("tap formula is singular at z = 0")
        return np.pi * SPEED_OF_LIGHT * t**2 / (d_si * lam**2 * z)


@dataclass(frozen=True)
class TapSet:
    """Complex FIR taps indexed k = -(N-1)/2 .. +(N-1)/2 plus their design."""

    taps: np.ndarray
    design: TapDesign

    @property
    def size_n(self) -> int:
        return len(self.taps)

    @property
    def half_width(self) -> int:
        return (len(self.taps) - 1) // 2

    @property
    def k_indices(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)


@dataclass(frozen=True)
class ClusteredFilter:
    """Partition of tap indices into clusters with one representative each."""

    representatives: np.ndarray
    assignment: np.ndarray  # position i (tap k = i - half_width) -> cluster id
    source: TapSet

    @property
    def n_clusters(self) -> int:
        return len(self.representatives)

    @property
    def expanded_taps(self) -> np.ndarray:
        """Each tap replaced by its cluster representative."""
        return self.representatives[self.assignment]

    def members(self, cluster_id: int) -> np.ndarray:
        """Tap positions (0-based) of one cluster, ascending."""
        return np.nonzero(self.assignment == cluster_id)[0]


@dataclass(frozen=True)
class DesignSearchReport:
    chosen: int
    ber_at_choice: float
    trials: int
    table: tuple[tuple[int, float], ...] = field(default_factory=tuple)


def max_filter_size(design: TapDesign) -> int:
    """Largest useful odd filter size, 2*round(|D| lambda^2 z / (2 c T^2)) + 1."""
    d_si = abs(design.dispersion_ps_nm_km) * 1e-6
    lam = design.wavelength_nm * 1e-9
    z = design.length_km * 1e3
    t = design.sample_period_s
    ratio = d_si * lam**2 * z / (2.0 * SPEED_OF_LIGHT * t**2)
    return 2 * int(np.floor(ratio + 0.5)) + 1


def generate_taps(design: TapDesign, size_n: int) -> TapSet:
    """Evaluate the tap formula for an odd number of taps."""
    if size_n % 2 == 0 or size_n < 1:
        raise ValueError(f"size_n must be odd and positive, got {size_n}")
    a = design.quad_coefficient
    amplitude = np.sqrt(a / np.pi)
    k = np.arange(-(size_n // 2), size_n // 2 + 1)
    taps = amplitude * np.exp(1j * (np.pi / 4.0 - a * k.astype(float) ** 2))
    return TapSet(taps=taps, design=design)


def _lloyd_trial(
    points: np.ndarray, centers: np.ndarray, max_iter: int = 100
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    """One Lloyd run on (n, 2) points; ties go to the lowest cluster id.

    Empty clusters are reseeded at the point farthest from its current
    representative.  Returns (assignment, centers, within-cluster SSQ,
    SSQ history across assignment/update steps).
    """
    n_clusters = len(centers)
    assignment = np.full(len(points), -1)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignment = np.argmin(d2, axis=1)  # argmin takes the lowest id on ties
        for cid in range(n_clusters):
            if not np.any(new_assignment == cid):
                worst = np.argmax(d2[np.arange(len(points)), new_assignment])
                centers[cid] = points[worst]
                new_assignment[worst] = cid
                d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        history.append(float(((points - centers[new_assignment]) ** 2).sum()))
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for cid in range(n_clusters):
            centers[cid] = points[assignment == cid].mean(axis=0)
        history.append(float(((points - centers[assignment]) ** 2).sum()))
    ssq = float(((points - centers[assignment]) ** 2).sum())
    return assignment, centers, ssq, history


def cluster_taps(
    taps: TapSet,
    n_clusters: int,
    trials: int = DEFAULT_CLUSTER_TRIALS,
    seed: int = 0,
) -> ClusteredFilter:
    """Group tap values in the complex plane by restarted Lloyd clustering.

    Each trial starts from a seeded random draw of distinct taps as centers;
    the trial with the lowest within-cluster sum of squares wins (lowest trial
    index on exact ties).  Deterministic for a fixed seed.
    """
    if not 1 <= n_clusters <= taps.size_n:
        raise ValueError(f"n_clusters must be in [1, {taps.size_n}], got {n_clusters}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    points = np.stack([np.real(taps.taps), np.imag(taps.taps)], axis=1)
    if n_clusters == taps.size_n:
        # every tap its own cluster, exactly
        return ClusteredFilter(
            representatives=taps.taps.copy(),
            assignment=np.arange(taps.size_n),
            source=taps,
        )
    rng = np.random.Generator(np.random.Philox(seed))
    best = None
    for _ in range(trials):
        init = rng.choice(len(points), size=n_clusters, replace=False)
        assignment, centers, ssq, _ = _lloyd_trial(points, points[init].copy())
        if best is None or ssq < best[2]:
            best = (assignment, centers, ssq)
    assignment, centers, _ = best
    return ClusteredFilter(
        representatives=centers[:, 0] + 1j * centers[:, 1],
        assignment=assignment,
        source=taps,
    )


def within_cluster_ssq(taps: TapSet, assignment: np.ndarray, representatives: np.ndarray) -> float:
    """Sum of squared distances from each tap to its representative."""
    return float(np.sum(np.abs(taps.taps - representatives[assignment]) ** 2))


def truncation_search(
    channel_data,
    design: TapDesign,
    ber_target: float = 1e-3,
    engine: str = "tde",
    start_size: int | None = None,
) -> DesignSearchReport:
    """Find the smallest odd size whose equalized BER still meets ber_target.

    Descends from the maximum filter size in steps of 2 and stops at the first
    failing size, returning the last passing one.  ``engine`` selects the
    equalizer used for the BER evaluation ('tde' or 'fde').
    """
    from . import pipeline  # local import: pipeline sits above the kernels

    start = start_size if start_size is not None else max_filter_size(design)
    if start % 2 == 0:
        raise ValueError(f"start size must be odd, got {start}")
    table = []
    last_pass = None
    size = start
    while size >= 1:
        taps = generate_taps(design, size)
        report = pipeline.equalize_and_measure(channel_data, taps=taps, engine=engine)
        table.append((size, report.ber))
        if report.ber <= ber_target:
            last_pass = (size, report.ber)
        else:
            break
        size -= 2
    if last_pass is None:
        raise InfeasibleSearchError(
            f"size {start} already misses BER target {ber_target:g}", best_ber=table[0][1]
        )
    return DesignSearchReport(
        chosen=last_pass[0], ber_at_choice=last_pass[1], trials=len(table), table=tuple(table)
    )


def cluster_count_search(
    channel_data,
    taps: TapSet,
    ber_target: float = 3.8e-3,
    trials: int = DEFAULT_CLUSTER_TRIALS,
    seed: int = 0,
) -> DesignSearchReport:
    """Smallest cluster count whose clustered-equalizer BER meets ber_target.

    Scans N_C = 1, 2, ... upward; N_C = size_N reproduces the unclustered
    filter, so the scan terminates if the source taps pass the target.
    """
    from . import pipeline

    table = []
    for n_clusters in range(1, taps.size_n + 1):
        filt = cluster_taps(taps, n_clusters, trials=trials, seed=seed)
        report = pipeline.equalize_and_measure(channel_data, clustered=filt, engine="tdce")
        table.append((n_clusters, report.ber))
        if report.ber <= ber_target:
            return DesignSearchReport(
                chosen=n_clusters, ber_at_choice=report.ber, trials=len(table), table=tuple(table)
            )
    raise InfeasibleSearchError(
        f"no cluster count up to {taps.size_n} meets BER target {ber_target:g}",
        best_ber=min(b for _, b in table),
    )


def save_clustered_filter(path, filt: ClusteredFilter) -> None:
    """Serialize to the documented text format.

    Line 1: ``N N_C D_ps_nm_km lambda_nm z_km T_s``; then one line per
    cluster: ``re im k k k ...`` with the member tap indices (k, not
    positions) ascending.
    """
    d = filt.source.design
    lines = [
        f"{filt.source.size_n} {filt.n_clusters} {d.dispersion_ps_nm_km!r} "
        f"{d.wavelength_nm!r} {d.length_km!r} {d.sample_period_s!r}"
    ]
    half = filt.source.half_width
    for cid in range(filt.n_clusters):
        rep = filt.representatives[cid]
        ks = " ".join(str(int(p) - half) for p in filt.members(cid))
        lines.append(f"{np.real(rep)!r} {np.imag(rep)!r} {ks}")
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_clustered_filter(path) -> ClusteredFilter:
    """Read a filter written by :func:`save_clustered_filter`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    size_n, n_clusters = int(head[0]), int(head[1])
    design = TapDesign(
        dispersion_ps_nm_km=float(head[2]),
        wavelength_nm=float(head[3]),
        length_km=float(head[4]),
        sample_period_s=float(head[5]),
    )
    taps = generate_taps(design, size_n)
    half = taps.half_width
    reps = np.zeros(n_clusters, dtype=complex)
    assignment = np.full(size_n, -1)
    for cid, ln in enumerate(lines[1 : 1 + n_clusters]):
        parts = ln.split()
        reps[cid] = float(parts[0]) + 1j * float(parts[1])
        for tok in parts[2:]:
            assignment[int(tok) + half] = cid
    if np.any(assignment < 0):
        raise ValueError(f"{path}: assignment is not a total partition")
    return ClusteredFilter(representatives=reps, assignment=assignment, source=taps)
