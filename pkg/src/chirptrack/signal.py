"""Signal container, windows, segmentation, test-signal generators and noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Example 2 cubic-phase coefficient.
XI = 4e-4


class SignalFormatError(ValueError):
    """Raised when a signal text file cannot be parsed."""

    def __init__(self, path, lineno: int, message: str):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    """Finite complex discrete-time signal x(n), 0 <= n <= N-1."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128).reshape(-1)
        if arr.size < 1:
            raise ValueError("signal must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal samples must be finite")
        object.__setattr__(self, "samples", _frozen(arr))

    @property
    def N(self) -> int:
        return int(self.samples.size)

    def __len__(self) -> int:
        return self.N

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComplexSignal):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def __hash__(self) -> int:
        return hash(self.samples.tobytes())

    def power(self) -> float:
        """Mean power (1/N) sum |x(n)|^2."""
        return float(np.mean(np.abs(self.samples) ** 2))


def as_signal(x) -> ComplexSignal:
    return x if isinstance(x, ComplexSignal) else ComplexSignal(x)


class Window(str, Enum):
    RECTANGULAR = "rectangular"
    HAMMING = "hamming"
    HANN = "hann"


def window(kind: Window | str, length: int) -> np.ndarray:
    """Periodic window of the given kind (Hamming uses 0.54/0.46)."""
    kind = Window(kind)
    if length < 1:
        raise ValueError("window length must be positive")
    n = np.arange(length)
    if kind is Window.RECTANGULAR:
        return np.ones(length)
    if kind is Window.HAMMING:
        return 0.54 - 0.46 * np.cos(2 * np.pi * n / length)
    return 0.5 - 0.5 * np.cos(2 * np.pi * n / length)


@dataclass(frozen=True)
class SegmentPlan:
    segment_length: int
    hop: int
    window: Window = Window.RECTANGULAR

    def __post_init__(self):
        object.__setattr__(self, "window", Window(self.window))
        if self.hop < 1:
            raise ValueError("hop must be >= 1")
        if self.segment_length < self.hop:
            raise ValueError("need hop <= segment_length")

    def check(self, N: int) -> None:
        if self.segment_length > N:
            raise ValueError(f"segment_length {self.segment_length} exceeds signal length {N}")

    def offsets(self, N: int) -> list[int]:
        """Segment start indices: the fewest hops whose segments cover 0..N-1."""
        self.check(N)
        count = math.ceil((N - self.segment_length) / self.hop) + 1
        return [s * self.hop for s in range(count)]

    def taper(self) -> np.ndarray:
        return window(self.window, self.segment_length)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def make_example1(N: int = 512) -> ComplexSignal:
    """Linear chirp plus a chirp with sinusoidal frequency modulation (noiseless)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    n = np.arange(N, dtype=float)
    c = np.pi / 256
    x = np.exp(1j * c * (0.15 * n**2 + 50 * n)) + np.exp(
        1j * (c * 0.1 * n**2 - 40 * np.cos(np.pi * n / 500))
    )
    return ComplexSignal(x)


def example1_if(N: int = 512) -> np.ndarray:
    """Analytic IF of the two Example 1 components, shape (2, N), rad/sample in [0, 2pi)."""
    n = np.arange(N, dtype=float)
    c = np.pi / 256
    w1 = c * (0.3 * n + 50)
    w2 = c * 0.2 * n + 40 * (np.pi / 500) * np.sin(np.pi * n / 500)
    return np.mod(np.vstack([w1, w2]), 2 * np.pi)


def make_example2(N: int = 512) -> ComplexSignal:
    """Two cubic-phase components whose IFs differ by exactly pi (noiseless)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    n = np.arange(N, dtype=float)
    c = np.pi / 256
    cubic = XI * (n - 256) ** 3
    x = np.exp(1j * c * (cubic + 10 * n)) + np.exp(1j * c * (cubic - 246 * n))
    return ComplexSignal(x)


def example2_if(N: int = 512) -> np.ndarray:
    n = np.arange(N, dtype=float)
    c = np.pi / 256
    quad = 3 * XI * (n - 256) ** 2
    return np.mod(np.vstack([c * (quad + 10), c * (quad - 246)]), 2 * np.pi)


def noise_variance(x: ComplexSignal, snr_db: float) -> float:
    return x.power() / 10 ** (snr_db / 10)


def add_noise(x, spec: NoiseSpec) -> ComplexSignal:
    """Add circular complex white Gaussian noise at spec.snr_db.

    The total variance sigma^2 is referenced to the mean power of the whole
    noiseless signal and split evenly between real and imaginary parts.
    Uses numpy's PCG64 generator seeded with ``spec.seed``; the realization
    is rescaled so its empirical power equals sigma^2 exactly.
    """
    x = as_signal(x)
    sigma2 = noise_variance(x, spec.snr_db)
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    z = rng.standard_normal((2, x.N))
    noise = z[0] + 1j * z[1]
    # pin the realized noise power to sigma^2 so the measured SNR is exact
    noise *= math.sqrt(sigma2 / np.mean(np.abs(noise) ** 2))
    return ComplexSignal(x.samples + noise)


def segment(x, plan: SegmentPlan) -> list[tuple[int, ComplexSignal]]:
    """Split x into windowed, possibly tail-zero-padded segments."""
    x = as_signal(x)
    w = plan.taper()
    L = plan.segment_length
    out = []
    for off in plan.offsets(x.N):
        chunk = np.zeros(L, dtype=complex)
        piece = x.samples[off : off + L]
        chunk[: piece.size] = piece
        out.append((off, ComplexSignal(chunk * w)))
    return out


def overlap_add(segments: Iterable[tuple[int, ComplexSignal]], N: int) -> ComplexSignal:
    """Sum segments back at their offsets, truncated to N samples."""
    out = np.zeros(N, dtype=complex)
    for off, seg in segments:
        stop = min(N, off + seg.N)
        out[off:stop] += seg.samples[: stop - off]
    return ComplexSignal(out)


def write_signal(path, x) -> None:
    x = as_signal(x)
    lines = [f"# n={x.N}"]
    lines += [f"{v.real:.17g} {v.imag:.17g}" for v in x.samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal(path) -> ComplexSignal:
    """Read the ``<re> <im>`` per-line text format (``#`` lines are comments)."""
    path = Path(path)
    text = path.read_text()
    values: list[complex] = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                try:
                    declared = int(body[2:])
                except ValueError:
                    raise SignalFormatError(path, lineno, f"bad header {line!r}") from None
            continue
        parts = line.split()
        if len(parts) not in (1, 2):
            raise SignalFormatError(path, lineno, f"expected '<re> <im>', got {line!r}")
        try:
            re_ = float(parts[0])
            im_ = float(parts[1]) if len(parts) == 2 else 0.0
        except ValueError:
            raise SignalFormatError(path, lineno, f"not a number: {line!r}") from None
        if not (math.isfinite(re_) and math.isfinite(im_)):
            raise SignalFormatError(path, lineno, "non-finite sample")
        values.append(complex(re_, im_))
    if not values:
        raise SignalFormatError(path, 0, "no samples")
    if declared is not None and declared != len(values):
        raise SignalFormatError(path, 1, f"header says n={declared} but found {len(values)} samples")
    return ComplexSignal(np.array(values))


def measured_snr_db(clean: ComplexSignal, noisy: ComplexSignal) -> float:
    noise = noisy.samples - clean.samples
    return 10 * math.log10(clean.power() / float(np.mean(np.abs(noise) ** 2)))


__all__: Sequence[str] = [
    "ComplexSignal", "SegmentPlan", "NoiseSpec", "Window", "SignalFormatError",
    "as_signal", "window", "make_example1", "make_example2", "example1_if",
    "example2_if", "add_noise", "noise_variance", "segment", "overlap_add",
    "write_signal", "read_signal", "measured_snr_db", "XI",
]
