"""Discrete linear chirp transform (DLCT) and its inverse.

X(k, beta) = sum_n x(n) exp(-j 2pi/N (beta n^2 + k n)),  beta = l*C,
C = 2*Lambda/L, l = -L/2 .. L/2-1.

Each chirp-rate column is an ordinary DFT of the dechirped signal, so the
forward transform is L FFTs of length N (numpy's pocketfft handles any N).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signal import ComplexSignal, as_signal

# Largest chirp rate without aliasing for a Nyquist-sampled chirp.
BETA_LIMIT = 0.25


@dataclass(frozen=True)
class BetaGrid:
    """Chirp-rate grid beta(l) = l*C over l in [-L/2, L/2 - 1]."""

    lam: float = BETA_LIMIT
    L: int = 16

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.L < 2 or self.L % 2:
            raise ValueError("L must be a positive even integer")

    @classmethod
    def default_for(cls, N: int) -> BetaGrid:
        """Lambda = 0.25 and L = N/4 (rounded to even, at least 2), so C = 2/N."""
        L = max(2, 2 * round(N / 8))
        return cls(BETA_LIMIT, L)

    @property
    def C(self) -> float:
        return 2 * self.lam / self.L

    @property
    def ells(self) -> np.ndarray:
        return np.arange(-self.L // 2, self.L // 2)

    @property
    def betas(self) -> np.ndarray:
        return self.ells * self.C

    @property
    def zero_index(self) -> int:
        """Column index holding beta = 0."""
        return self.L // 2

    def column(self, beta: float) -> float:
        """Fractional column index of a chirp rate."""
        return beta / self.C + self.L // 2


@dataclass(frozen=True, eq=False)
class DlctPlane:
    """N x L matrix of X(k, beta(l)); column j holds l = j - L/2."""

    values: np.ndarray
    grid: BetaGrid

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.ndim != 2 or vals.shape[1] != self.grid.L:
            raise ValueError(
                f"plane shape {vals.shape} does not match grid with L={self.grid.L}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def N(self) -> int:
        return self.values.shape[0]


def chirp_atom(N: int, beta: float, k: float) -> np.ndarray:
    """phi_{beta,k}(n) = exp(j 2pi/N (beta n^2 + k n))."""
    n = np.arange(N, dtype=float)
    return np.exp(2j * np.pi / N * (beta * n * n + k * n))


def _dechirp(N: int, betas: np.ndarray) -> np.ndarray:
    n = np.arange(N, dtype=float)
    return np.exp(-2j * np.pi / N * np.outer(n * n, betas))


def dlct_forward(x, grid: BetaGrid) -> DlctPlane:
    x = as_signal(x)
    N = x.N
    mod = x.samples[:, None] * _dechirp(N, grid.betas)
    return DlctPlane(np.fft.fft(mod, axis=0), grid)


def dlct_direct(x, grid: BetaGrid) -> DlctPlane:
    """Literal O(N^2 L) evaluation of the forward sum; test oracle only."""
    x = as_signal(x).samples
    N = x.size
    n = np.arange(N, dtype=float)
    k = np.arange(N, dtype=float)
    # phase[k, l, n] = beta_l n^2 + k n, summed over n without any FFT
    phase = grid.betas[None, :, None] * (n * n)[None, None, :] + (k[:, None] * n[None, :])[:, None, :]
    kernel = np.exp(-2j * np.pi / N * phase)
    return DlctPlane(np.einsum("kln,n->kl", kernel, x), grid)


def dlct_column_inverse(plane: DlctPlane, column: int) -> ComplexSignal:
    """x_beta(n) = sum_k X(k, beta)/N exp(j 2pi/N (beta n^2 + k n)) for one column."""
    N = plane.N
    beta = plane.grid.betas[column]
    n = np.arange(N, dtype=float)
    rechirp = np.exp(2j * np.pi / N * beta * n * n)
    return ComplexSignal(np.fft.ifft(plane.values[:, column]) * rechirp)


def dlct_inverse(plane: DlctPlane) -> ComplexSignal:
    """Printed inverse: (1/(LN)) sum_l sum_k X(k, beta) phi_{beta,k}(n)."""
    if not isinstance(plane, DlctPlane):
        raise TypeError("expected a DlctPlane")
    N = plane.N
    # ifft carries 1/N, the mean over columns carries 1/L
    per_col = np.fft.ifft(plane.values, axis=0) * np.conj(_dechirp(N, plane.grid.betas))
    return ComplexSignal(per_col.mean(axis=1))


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def write_plane_csv(path, plane: DlctPlane) -> None:
    """Rows per k; header lists beta(l). Entries as ``re+imj``."""
    lines = ["k," + ",".join(f"{b:.17g}" for b in plane.grid.betas)]
    for k, row in enumerate(plane.values):
        lines.append(f"{k}," + ",".join(_fmt_complex(z) for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_plane_csv(path, lam: float | None = None) -> DlctPlane:
    rows = Path(path).read_text().strip().splitlines()
    betas = np.array([float(v) for v in rows[0].split(",")[1:]])
    L = betas.size
    if lam is None:
        lam = -betas[0]
    vals = np.array(
        [[complex(v) for v in r.split(",")[1:]] for r in rows[1:]], dtype=complex
    )
    return DlctPlane(vals, BetaGrid(lam, L))
