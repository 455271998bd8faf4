"""Monte Carlo MSE tables and figure exports for the synthetic examples and signal files."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .chirps import ExtractionConfig, write_components_csv
from .dlct import BetaGrid
from .estimation import (
    IfTrackSet, MseReport, combine_reports, estimate_if_pipeline, peak_if, peak_if_samples,
    score_mse, write_tracks_csv,
)
from .signal import (
    ComplexSignal, NoiseSpec, SegmentPlan, Window, add_noise, example1_if, example2_if,
    make_example1, make_example2, read_signal,
)
from .tfd import stft, wigner, write_pgm

log = logging.getLogger(__name__)

ESTIMATORS = ("synth_wd", "stft", "wd")
EXAMPLES = ("example1", "example2")
THREADS_ENV = "CHIRPTRACK_THREADS"

# segment plans that suit each example's IF curvature; files get a generic one
DEFAULT_PLANS = {"example1": (160, 40), "example2": (64, 16), "file": (128, 32)}
STFT_LENGTH = 64


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a table or figure run depends on.

    ``signal`` is ``example1``, ``example2`` or ``file:<path>``. ``None`` for
    ``segment_len``, ``hop``, ``l_bins`` and ``freq_bins`` means "derive
    from the signal" (see ``resolved``).
    """

    signal: str = "example1"
    n: int = 512
    snr: tuple[float, ...] = (-5.0, 0.0, 5.0, 100.0)
    trials: int = 50
    seed: int = 0
    segment_len: int | None = None
    hop: int | None = None
    window: str = "rectangular"
    lam: float = 0.25
    l_bins: int | None = None
    pmax: int = 4
    gamma: float = 0.2
    estimators: tuple[str, ...] = ESTIMATORS
    freq_bins: int | None = None
    tracks: int = 2
    out: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "snr", tuple(float(s) for s in self.snr))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if not self.snr:
            raise ValueError("snr list must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.tracks < 1:
            raise ValueError("tracks must be >= 1")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ValueError(f"unknown estimator(s) {bad}; choose from {', '.join(ESTIMATORS)}")
        if self.signal not in EXAMPLES and not self.signal.startswith("file:"):
            raise ValueError(f"signal must be example1, example2 or file:<path>, "
                             f"got {self.signal!r}")
        Window(self.window)

    @property
    def signal_kind(self) -> str:
        return self.signal if self.signal in EXAMPLES else "file"

    @property
    def path(self) -> Path | None:
        return Path(self.signal[5:]) if self.signal_kind == "file" else None

    def resolved(self, N: int) -> ExperimentConfig:
        """Fill the derived fields for a signal of N samples."""
        seg, hop = DEFAULT_PLANS[self.signal_kind]
        seg = self.segment_len or min(seg, N)
        hop = self.hop or min(hop, seg)
        return replace(self, segment_len=seg, hop=hop,
                       l_bins=self.l_bins or BetaGrid.default_for(seg).L,
                       freq_bins=self.freq_bins or N)

    def plan(self) -> SegmentPlan:
        return SegmentPlan(self.segment_len, self.hop, self.window)

    def grid(self) -> BetaGrid:
        return BetaGrid(self.lam, self.l_bins)

    def extraction(self) -> ExtractionConfig:
        return ExtractionConfig(max_components=self.pmax, stop_ratio=self.gamma)


_FLOAT_KEYS = {"lam", "gamma"}
_INT_KEYS = {"n", "trials", "seed", "pmax", "tracks"}
_AUTO_KEYS = {"segment_len", "hop", "l_bins", "freq_bins"}


def dump_config(cfg: ExperimentConfig) -> str:
    """Flat ``key = value`` text; ``auto`` marks derived fields."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "snr":
            text = ", ".join(repr(s) for s in v)
        elif f.name == "estimators":
            text = ", ".join(v)
        elif v is None:
            text = "auto"
        else:
            text = repr(v) if isinstance(v, float) else str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into ExperimentConfig keyword arguments."""
    known = {f.name for f in fields(ExperimentConfig)}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (p.strip() for p in line.partition("="))
        if not sep or key not in known:
            raise ValueError(f"{source}:{lineno}: expected 'key = value' with a known key, "
                             f"got {raw.strip()!r}")
        try:
            out[key] = _convert(key, value)
        except ValueError as err:
            raise ValueError(f"{source}:{lineno}: bad value for {key}: {err}") from None
    return out


def _convert(key: str, value: str):
    if key == "snr":
        return tuple(float(s) for s in value.split(",") if s.strip())
    if key == "estimators":
        return tuple(s.strip() for s in value.split(",") if s.strip())
    if key in _AUTO_KEYS:
        return None if value == "auto" else int(value)
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def load_config(path, **overrides) -> ExperimentConfig:
    kw = parse_config(Path(path).read_text(), str(path))
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


def load_signal(cfg: ExperimentConfig) -> tuple[ComplexSignal, np.ndarray | None]:
    """Noiseless signal and its analytic IF tracks (None for files)."""
    if cfg.signal == "example1":
        return make_example1(cfg.n), example1_if(cfg.n)
    if cfg.signal == "example2":
        return make_example2(cfg.n), example2_if(cfg.n)
    return read_signal(cfg.path), None


def estimate(name: str, x: ComplexSignal, cfg: ExperimentConfig, n_tracks: int):
    """Run one estimator on x; returns (image, tracks, pipeline result or None).

    ``cfg`` must be resolved.
    """
    N = x.N
    if name == "synth_wd":
        res = estimate_if_pipeline(x, cfg.plan(), cfg.grid(), cfg.extraction(),
                                   freq_bins=cfg.freq_bins)
        return res.image, res.tracks, res
    if name == "stft":
        img = stft(x, SegmentPlan(min(STFT_LENGTH, N), 1, "hamming"),
                   max(cfg.freq_bins, min(STFT_LENGTH, N)))
        return img, peak_if_samples(img, n_tracks, N), None
    if name == "wd":
        img = wigner(x, 2 * N)
        return img, peak_if(img, n_tracks), None
    raise ValueError(f"unknown estimator {name!r}")


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


def _trial(cfg: ExperimentConfig, x0: ComplexSignal, truth: IfTrackSet, snr: float,
           trial: int) -> dict[str, MseReport]:
    x = add_noise(x0, NoiseSpec(snr, cfg.seed + trial))
    return {name: score_mse(estimate(name, x, cfg, truth.n_tracks)[1], truth, snr_db=snr)
            for name in cfg.estimators}


@dataclass(frozen=True)
class TableResult:
    config: ExperimentConfig
    table: dict[str, dict[float, MseReport]]
    trials: dict[tuple[float, int], dict[str, MseReport]]

    def db(self, estimator: str, snr: float) -> float:
        return self.table[estimator][float(snr)].pooled_mse_db


def monte_carlo(cfg: ExperimentConfig) -> TableResult:
    x0, truth_w = load_signal(cfg)
    if truth_w is None:
        raise ValueError("MSE tables need a synthetic signal with known IF")
    if (cfg.seed + cfg.trials - 1) >= 2**64:
        raise ValueError("seed + trials overflows 64 bits")
    cfg = cfg.resolved(x0.N)
    truth = IfTrackSet.from_truth(truth_w)
    jobs = [(snr, t) for snr in cfg.snr for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = {job: pool.submit(_trial, cfg, x0, truth, *job) for job in jobs}
        raw = {job: fut.result() for job, fut in futures.items()}
    # aggregate in (snr, trial) order regardless of completion order
    table = {name: {snr: combine_reports([raw[(snr, t)][name] for t in range(cfg.trials)])
                    for snr in cfg.snr}
             for name in cfg.estimators}
    return TableResult(cfg, table, raw)


def _header(cfg: ExperimentConfig) -> str:
    return (f"# signal={cfg.signal} n={cfg.n} trials={cfg.trials} seed={cfg.seed} "
            f"segment_len={cfg.segment_len} hop={cfg.hop} window={cfg.window} "
            f"l_bins={cfg.l_bins} freq_bins={cfg.freq_bins}")


def _fmt_snr(s: float) -> str:
    return f"{s:g}"


def format_table(res: TableResult) -> str:
    cfg = res.config
    width = max(len(e) for e in cfg.estimators)
    lines = [f"{'':{width}}  " + "  ".join(f"{_fmt_snr(s) + ' dB':>10}" for s in cfg.snr)]
    for name in cfg.estimators:
        lines.append(f"{name:{width}}  " + "  ".join(f"{res.db(name, s):>10.2f}"
                                                       for s in cfg.snr))
    return "\n".join(lines)


def run_table(cfg: ExperimentConfig, *, echo: bool = True) -> TableResult:
    """Write ``table.csv`` (rows = estimators, columns = SNR) and ``trials.csv``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    res = monte_carlo(cfg)
    rc = res.config
    rows = [_header(rc), "estimator," + ",".join(_fmt_snr(s) for s in rc.snr)]
    for name in rc.estimators:
        rows.append(name + "," + ",".join(f"{res.db(name, s):.6f}" for s in rc.snr))
    (out / "table.csv").write_text("\n".join(rows) + "\n")
    rows = [_header(rc), "estimator,snr_db,trial,seed,mse,mse_db"]
    for name in rc.estimators:
        for snr in rc.snr:
            for t in range(rc.trials):
                r = res.trials[(snr, t)][name]
                rows.append(f"{name},{_fmt_snr(snr)},{t},{rc.seed + t},"
                            f"{r.pooled_mse:.17g},{r.pooled_mse_db:.6f}")
    (out / "trials.csv").write_text("\n".join(rows) + "\n")
    if echo:
        print(f"MSE (dB), {rc.trials} trials, {rc.signal}")
        print(format_table(res))
    return res


def run_figures(cfg: ExperimentConfig) -> list[Path]:
    """Images of the three distributions plus IF tracks at the first SNR.

    Synthetic signals also get ``truth_if.csv`` and ``mse_vs_snr.csv``
    (over the whole SNR list); files are analysed as given, without noise.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    x0, truth_w = load_signal(cfg)
    rc = cfg.resolved(x0.N)
    n_tracks = rc.tracks if truth_w is None else truth_w.shape[0]
    x = x0 if truth_w is None else add_noise(x0, NoiseSpec(rc.snr[0], rc.seed))
    written = []
    est = None
    for name, fname in (("wd", "wd.pgm"), ("stft", "stft.pgm"), ("synth_wd", "synth_wd.pgm")):
        img, tracks, _ = estimate(name, x, rc, n_tracks)
        write_pgm(out / fname, img)
        written.append(out / fname)
        if name == "synth_wd":
            est = tracks
    write_tracks_csv(out / "est_if.csv", est)
    written.append(out / "est_if.csv")
    if truth_w is not None:
        write_tracks_csv(out / "truth_if.csv", IfTrackSet.from_truth(truth_w))
        res = monte_carlo(cfg)
        rows = [_header(res.config), "snr_db," + ",".join(rc.estimators)]
        for snr in rc.snr:
            rows.append(_fmt_snr(snr) + "," + ",".join(f"{res.db(e, snr):.6f}"
                                                      for e in rc.estimators))
        (out / "mse_vs_snr.csv").write_text("\n".join(rows) + "\n")
        written += [out / "truth_if.csv", out / "mse_vs_snr.csv"]
    return written


def analyze_signal(x: ComplexSignal, out, *, dlct_bins: int | None = None,
                   do_estimate: bool = False, cfg: ExperimentConfig | None = None) -> list[Path]:
    """Ad-hoc exports for one signal: DLCT plane and/or synthesized WD with tracks."""
    from .dlct import dlct_forward, write_plane_csv
    from .tfd import write_tfd_csv

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rc = (cfg or ExperimentConfig(signal="file:")).resolved(x.N)
    written = []
    if dlct_bins is not None:
        plane = dlct_forward(x, BetaGrid(rc.lam, dlct_bins))
        write_plane_csv(out / "dlct.csv", plane)
        written.append(out / "dlct.csv")
    if do_estimate:
        img, tracks, res = estimate("synth_wd", x, rc, rc.tracks)
        write_pgm(out / "synth_wd.pgm", img)
        write_tfd_csv(out / "synth_wd.csv", img)
        write_tracks_csv(out / "est_if.csv", tracks)
        write_components_csv(out / "components.csv", res.components)
        written += [out / f for f in ("synth_wd.pgm", "synth_wd.csv", "est_if.csv",
                                      "components.csv")]
    return written


__all__ = [
    "ExperimentConfig", "TableResult", "dump_config", "parse_config", "load_config",
    "load_signal", "estimate", "monte_carlo", "run_table", "run_figures", "analyze_signal",
    "format_table",
]
