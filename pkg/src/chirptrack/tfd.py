"""Time-frequency images: discrete pseudo-Wigner distribution and STFT spectrogram."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .signal import ComplexSignal, SegmentPlan, as_signal

TWO_PI = 2 * np.pi


class TfdKind(str, Enum):
    WD = "wd"
    STFT = "stft"
    SYNTHESIZED_WD = "synthesized_wd"


@dataclass(frozen=True, eq=False)
class TfdImage:
    """Real time-frequency matrix, rows = time samples, columns = frequency bins.

    ``freq_axis`` is in rad/sample. ``wrapped`` flags ridge deposits that fell
    outside [0, 2pi) and were wrapped (synthesized images only).
    """

    values: np.ndarray
    time_axis: np.ndarray
    freq_axis: np.ndarray
    kind: TfdKind
    wrapped: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        t = np.asarray(self.time_axis)
        f = np.asarray(self.freq_axis, dtype=float)
        if vals.shape != (t.size, f.size):
            raise ValueError(f"values shape {vals.shape} vs axes ({t.size}, {f.size})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("time-frequency values must be finite")
        for a in (vals, t, f):
            a.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time_axis", t)
        object.__setattr__(self, "freq_axis", f)
        object.__setattr__(self, "kind", TfdKind(self.kind))

    @property
    def bin_width(self) -> float:
        return float(self.freq_axis[1] - self.freq_axis[0]) if self.freq_axis.size > 1 else TWO_PI

    @property
    def period(self) -> float:
        """Length of the frequency axis support (pi for the WD, 2pi otherwise)."""
        return self.bin_width * self.freq_axis.size

    def scaled(self, factor: float) -> TfdImage:
        return TfdImage(self.values * factor, self.time_axis, self.freq_axis, self.kind,
                        self.wrapped, dict(self.meta))


def wigner_kernel(x: np.ndarray, n: int) -> tuple[np.ndarray, int]:
    """r_n(m) = x(n+m) x*(n-m) for |m| <= min(n, N-1-n); returns (r, max_lag)."""
    N = x.size
    M = min(n, N - 1 - n)
    m = np.arange(-M, M + 1)
    return x[n + m] * np.conj(x[n - m]), M


def wigner(x, freq_bins: int | None = None, *, return_residue: bool = False):
    """Discrete pseudo-WD with boundary-limited lags.

    The lag product x(n+m)x*(n-m) oscillates at twice the signal frequency, so
    FFT bin p corresponds to omega = pi p / freq_bins and the axis covers
    [0, pi). Default ``freq_bins`` is 2N.
    """
    x = as_signal(x).samples
    N = x.size
    F = 2 * N if freq_bins is None else int(freq_bins)
    if F < 1:
        raise ValueError("freq_bins must be positive")
    if F < N:
        raise ValueError(f"freq_bins={F} must be >= N={N} to hold every lag")
    n = np.arange(N)
    M = np.minimum(n, N - 1 - n)
    max_lag = (N - 1) // 2
    m = np.arange(-max_lag, max_lag + 1)
    valid = np.abs(m)[None, :] <= M[:, None]
    ip = np.clip(n[:, None] + m[None, :], 0, N - 1)
    im = np.clip(n[:, None] - m[None, :], 0, N - 1)
    buf = np.zeros((N, F), dtype=complex)
    buf[:, np.mod(m, F)] = np.where(valid, x[ip] * np.conj(x[im]), 0)
    spec = np.fft.fft(buf, axis=1)
    img = TfdImage(spec.real, n, np.pi * np.arange(F) / F, TfdKind.WD,
                   meta={"freq_bins": F})
    if return_residue:
        scale = np.max(np.abs(spec.real)) or 1.0
        return img, float(np.max(np.abs(spec.imag)) / scale)
    return img


def stft(x, plan: SegmentPlan, freq_bins: int | None = None) -> TfdImage:
    """Spectrogram |FFT(w * frame)|^2 with frames centered on n = 0, hop, 2 hop, ...

    The signal is zero-extended by segment_length//2 on both sides so each
    frame is centered on its time stamp. Frequency axis is [0, 2pi).
    """
    x = as_signal(x).samples
    N = x.size
    L = plan.segment_length
    F = max(L, 2 * N) if freq_bins is None else int(freq_bins)
    if F < L:
        raise ValueError(f"freq_bins={F} must be >= segment_length={L}")
    half = L // 2
    padded = np.concatenate([np.zeros(half, complex), x, np.zeros(L, complex)])
    centers = np.arange(0, N, plan.hop)
    idx = centers[:, None] + np.arange(L)[None, :]
    frames = padded[idx] * plan.taper()[None, :]
    spec = np.abs(np.fft.fft(frames, n=F, axis=1)) ** 2
    return TfdImage(spec, centers, TWO_PI * np.arange(F) / F, TfdKind.STFT,
                    meta={"freq_bins": F, "segment_length": L, "hop": plan.hop,
                          "window": plan.window.value})


def write_tfd_csv(path, img: TfdImage) -> None:
    """First header row: ``kind,<kind>``; second: ``time\\freq`` then the frequency axis."""
    lines = [f"kind,{img.kind.value}",
             "time\\freq," + ",".join(f"{f:.17g}" for f in img.freq_axis)]
    for t, row in zip(img.time_axis, img.values):
        lines.append(f"{t}," + ",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_tfd_csv(path) -> TfdImage:
    rows = Path(path).read_text().strip().splitlines()
    kind = rows[0].split(",")[1]
    freq = np.array([float(v) for v in rows[1].split(",")[1:]])
    body = [r.split(",") for r in rows[2:]]
    t = np.array([int(r[0]) for r in body])
    vals = np.array([[float(v) for v in r[1:]] for r in body])
    return TfdImage(vals, t, freq, kind)


def pgm_bytes(img: TfdImage) -> bytes:
    """8-bit binary PGM (P5): width = time, height = frequency, row 0 = highest frequency.

    Values are mapped linearly from [0, max|value|] to [0, 255]; negative WD
    values clip to 0.
    """
    vals = img.values.T[::-1]
    peak = float(np.max(np.abs(vals))) if vals.size else 0.0
    if peak > 0:
        scaled = np.clip(vals / peak, 0.0, 1.0) * 255.0
    else:
        scaled = np.zeros_like(vals)
    pix = np.floor(scaled + 0.5).astype(np.uint8)
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def write_pgm(path, img: TfdImage) -> None:
    Path(path).write_bytes(pgm_bytes(img))


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
