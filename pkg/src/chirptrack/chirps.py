"""Chirp-component extraction from the DLCT plane and the synthesized (cross-term free) WD."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .dlct import BetaGrid, chirp_atom, dlct_forward
from .signal import as_signal
from .tfd import TWO_PI, TfdImage, TfdKind

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChirpComponent:
    """One atom a * exp(j phase) * exp(j 2pi/N_seg (beta m^2 + k m)) of a segment."""

    amplitude: float
    phase: float
    beta: float
    k: float
    segment_offset: int = 0
    segment_length: int = 0

    @property
    def energy(self) -> float:
        """alpha_i = a_i^2, the ridge weight in the synthesized WD."""
        return self.amplitude**2

    @property
    def omega(self) -> float:
        return TWO_PI * self.k / self.segment_length

    def ridge(self, n_local) -> np.ndarray:
        """Unwrapped IF (2pi/N_seg)(2 beta m + k) at local sample indices m."""
        m = np.asarray(n_local, dtype=float)
        return TWO_PI / self.segment_length * (2 * self.beta * m + self.k)

    def synthesize(self) -> np.ndarray:
        """The component's samples over its own segment (local index 0..N_seg-1)."""
        return self.amplitude * np.exp(1j * self.phase) * chirp_atom(
            self.segment_length, self.beta, self.k
        )


@dataclass(frozen=True)
class ExtractionConfig:
    max_components: int = 4
    stop_ratio: float = 0.2
    guard_k: int = 2
    guard_l: int = 1
    refine: bool = True

    def __post_init__(self):
        if self.max_components < 1:
            raise ValueError("max_components must be >= 1")
        if not 0 < self.stop_ratio < 1:
            raise ValueError("stop_ratio must lie in (0, 1)")
        if self.guard_k < 0 or self.guard_l < 0:
            raise ValueError("guard widths must be nonnegative")


def _parabolic_offset(ym: float, y0: float, yp: float) -> float:
    """Vertex offset in [-0.5, 0.5] of the parabola through (-1, ym), (0, y0), (1, yp)."""
    denom = ym - 2 * y0 + yp
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (ym - yp) / denom, -0.5, 0.5))


def _refine_peak(y: np.ndarray, mag: np.ndarray, grid: BetaGrid, k0: int, j0: int):
    """Sub-grid (k, beta) around the grid peak (k0, column j0).

    The chirp rate is interpolated across neighbouring columns using each
    column's ridge maximum (a beta mismatch shifts the column's DFT peak by
    about mismatch*(N-1) bins, so comparing a fixed k across columns is
    biased). The frequency is then interpolated on a 4x zero-padded DFT of
    the signal dechirped at the refined rate.
    """
    N, L = mag.shape
    beta = grid.betas[j0]
    if 0 < j0 < L - 1:
        reach = int(np.ceil(grid.C * N)) + 2
        ks = (k0 + np.arange(-reach, reach + 1)) % N
        prof = mag[ks][:, [j0 - 1, j0, j0 + 1]].max(axis=0)
        beta = beta + grid.C * _parabolic_offset(*prof)
    n = np.arange(N, dtype=float)
    pad = 4
    spec = np.abs(np.fft.fft(y * np.exp(-2j * np.pi / N * beta * n * n), n=pad * N))
    near = (pad * k0 + np.arange(-2 * pad, 2 * pad + 1)) % (pad * N)
    p = near[np.argmax(spec[near])]
    dp = _parabolic_offset(spec[(p - 1) % (pad * N)], spec[p], spec[(p + 1) % (pad * N)])
    return float(np.mod((p + dp) / pad, N)), float(beta)


def _polish_peak(y: np.ndarray, w: np.ndarray, grid: BetaGrid, k: float, beta: float):
    """Maximize |<y, w phi_{beta,k}>| locally (Nelder-Mead, beta in grid cells, k in bins)."""
    N = y.size
    n = np.arange(N, dtype=float)
    yw = y * w
    C = grid.C

    def cost(p):
        b = beta + p[0] * C
        return -abs(np.sum(yw * np.exp(-2j * np.pi / N * ((b * n + k + p[1]) * n))))

    res = minimize(cost, np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-5, "fatol": 1e-10 * N, "initial_simplex":
                            np.array([[0.0, 0.0], [0.25, 0.0], [0.0, 0.25]])})
    db, dk = res.x
    if abs(db) > 1.0 or abs(dk) > 1.0 or res.fun > cost(np.zeros(2)):
        return k, beta
    return float(np.mod(k + dk, N)), float(np.clip(beta + db * C, -grid.lam, grid.lam))


def extract_components(x, grid: BetaGrid, cfg: ExtractionConfig | None = None, *,
                       taper: np.ndarray | None = None, offset: int = 0
                       ) -> list[ChirpComponent]:
    """Greedy matching pursuit over the DLCT dictionary.

    ``x`` is the (already windowed) segment and ``taper`` the window that was
    applied to it, so the fitted atoms are ``taper * phi``; amplitudes then
    refer to the unwindowed signal. Each step picks the best atom for the
    residual, then refits all atoms picked so far by least squares against
    the segment and recomputes the residual. Stops when the new grid peak
    falls below ``stop_ratio`` times the first one, or after
    ``max_components`` atoms.
    """
    cfg = cfg or ExtractionConfig()
    x0 = as_signal(x).samples
    y = x0.copy()
    N = y.size
    w = np.ones(N) if taper is None else np.asarray(taper, dtype=float)
    w_energy = float(np.sum(w * w))
    if w_energy == 0:
        return []
    excluded = np.zeros((N, grid.L), dtype=bool)
    params: list[tuple[float, float]] = []
    atoms: list[np.ndarray] = []
    coefs = np.zeros(0, dtype=complex)
    first_peak = None
    for _ in range(cfg.max_components):
        mag = np.abs(dlct_forward(y, grid).values)
        masked = np.where(excluded, -1.0, mag)
        k0, j0 = np.unravel_index(int(np.argmax(masked)), mag.shape)
        peak = masked[k0, j0]
        if peak <= 0:
            break
        if first_peak is None:
            if peak <= 1e-12 * np.sqrt(N * w_energy):
                break
            first_peak = peak
        elif peak < cfg.stop_ratio * first_peak:
            break
        if cfg.refine:
            k, beta = _refine_peak(y, mag, grid, int(k0), int(j0))
            k, beta = _polish_peak(y, w, grid, k, beta)
        else:
            k, beta = float(k0), float(grid.betas[j0])
        params.append((k, beta))
        atoms.append(w * chirp_atom(N, beta, k))
        # joint least-squares refit of every selected atom (orthogonal MP)
        A = np.stack(atoms, axis=1)
        coefs = np.linalg.lstsq(A, x0, rcond=None)[0]
        y = x0 - A @ coefs
        ks = (k0 + np.arange(-cfg.guard_k, cfg.guard_k + 1)) % N
        js = np.arange(max(0, j0 - cfg.guard_l), min(grid.L, j0 + cfg.guard_l + 1))
        excluded[np.ix_(ks, js)] = True
    found = [ChirpComponent(float(abs(c)), float(np.angle(c)), beta, k, offset, N)
             for c, (k, beta) in zip(coefs, params) if abs(c) > 0]
    found.sort(key=lambda c: -c.amplitude)
    return found


def residual_power(x, components: Iterable[ChirpComponent], taper=None) -> float:
    y = as_signal(x).samples.copy()
    w = np.ones(y.size) if taper is None else np.asarray(taper, dtype=float)
    for c in components:
        y = y - w * c.synthesize()
    return float(np.mean(np.abs(y) ** 2))


def ridge_bins(comp: ChirpComponent, n: np.ndarray, freq_bins: int):
    """Nearest synthesized-WD bin of the component ridge at global samples n,
    plus whether any raw ridge value left [0, 2pi)."""
    omega = comp.ridge(n - comp.segment_offset)
    outside = bool(np.any((omega < 0) | (omega >= TWO_PI)))
    bins = np.mod(np.rint(np.mod(omega, TWO_PI) / (TWO_PI / freq_bins)), freq_bins).astype(int)
    return bins, outside


def synthesize_wd(components: Sequence[ChirpComponent], N: int, freq_bins: int | None = None,
                  *, segments: Sequence[tuple[int, int]] | None = None) -> TfdImage:
    """Sum of ideal delta ridges alpha_i * delta(omega - ridge_i(n)) on a [0, 2pi) axis.

    Samples covered by several segments get the average of those segments'
    deposits. ``segments`` lists (offset, length) of every analysed segment,
    including ones that yielded no components; by default it is inferred
    from the components.
    """
    F = 2 * N if freq_bins is None else int(freq_bins)
    if F < 1:
        raise ValueError("freq_bins must be positive")
    if segments is None:
        segments = sorted({(c.segment_offset, c.segment_length) for c in components})
    cover = np.zeros(N)
    for off, length in set(segments):
        cover[max(0, off):min(N, off + length)] += 1
    img = np.zeros((N, F))
    wrapped = False
    for c in components:
        n = np.arange(max(0, c.segment_offset), min(N, c.segment_offset + c.segment_length))
        if n.size == 0:
            continue
        bins, outside = ridge_bins(c, n, F)
        wrapped |= outside
        np.add.at(img, (n, bins), c.energy)
    if wrapped:
        log.debug("synthesized WD: ridge wrapped modulo 2pi")
    img /= np.maximum(cover, 1)[:, None]
    return TfdImage(img, np.arange(N), TWO_PI * np.arange(F) / F, TfdKind.SYNTHESIZED_WD,
                    wrapped=wrapped, meta={"freq_bins": F})


_CSV_COLUMNS = ("segment_offset", "segment_length", "a", "phase", "beta", "k")


def write_components_csv(path, components: Iterable[ChirpComponent]) -> None:
    lines = [",".join(_CSV_COLUMNS)]
    for c in components:
        lines.append(f"{c.segment_offset},{c.segment_length},{c.amplitude:.17g},"
                     f"{c.phase:.17g},{c.beta:.17g},{c.k:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_components_csv(path) -> list[ChirpComponent]:
    rows = Path(path).read_text().strip().splitlines()
    header = rows[0].split(",")
    out = []
    for r in rows[1:]:
        rec = dict(zip(header, r.split(",")))
        out.append(ChirpComponent(float(rec["a"]), float(rec["phase"]), float(rec["beta"]),
                                  float(rec["k"]), int(rec["segment_offset"]),
                                  int(rec["segment_length"])))
    return out
