"""Instantaneous-frequency estimation: DLCT + synthesized WD pipeline, TFD peak picking, MSE."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .chirps import ChirpComponent, ExtractionConfig, extract_components, synthesize_wd
from .dlct import BetaGrid
from .signal import SegmentPlan, as_signal, segment
from .tfd import TWO_PI, TfdImage, TfdKind

MSE_FLOOR_DB = -120.0
MISS_PENALTY = math.pi**2
JUMP_LIMIT_BINS = 4


@dataclass(frozen=True, eq=False)
class IfTrackSet:
    """Per-sample IF tracks (rad/sample) with validity masks, shape (n_tracks, N)."""

    tracks: np.ndarray
    valid: np.ndarray
    source_kind: TfdKind | None = None

    def __post_init__(self):
        tr = np.atleast_2d(np.asarray(self.tracks, dtype=float))
        ok = np.atleast_2d(np.asarray(self.valid, dtype=bool))
        if tr.shape != ok.shape:
            raise ValueError("tracks and valid masks differ in shape")
        tr = np.where(ok, np.mod(tr, TWO_PI), 0.0)
        for a in (tr, ok):
            a.setflags(write=False)
        object.__setattr__(self, "tracks", tr)
        object.__setattr__(self, "valid", ok)
        if self.source_kind is not None:
            object.__setattr__(self, "source_kind", TfdKind(self.source_kind))

    @classmethod
    def empty(cls, N: int, source_kind=None) -> IfTrackSet:
        return cls(np.zeros((0, N)), np.zeros((0, N), dtype=bool), source_kind)

    @classmethod
    def from_truth(cls, omegas) -> IfTrackSet:
        om = np.atleast_2d(omegas)
        return cls(om, np.ones(om.shape, dtype=bool))

    @property
    def n_tracks(self) -> int:
        return self.tracks.shape[0]

    @property
    def N(self) -> int:
        return self.tracks.shape[1]


@dataclass(frozen=True)
class MseReport:
    per_track_mse_db: tuple[float, ...]
    pooled_mse_db: float
    trials: int = 1
    snr_db: float = math.nan
    pooled_mse: float = field(default=math.nan, compare=False)


def to_db(mse: float) -> float:
    if mse <= 0:
        return MSE_FLOOR_DB
    return max(MSE_FLOOR_DB, 10 * math.log10(mse))


def circular_error(a, b) -> np.ndarray:
    """Signed difference a - b wrapped to [-pi, pi)."""
    return np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi


def _local_maxima(col: np.ndarray) -> np.ndarray:
    """Indices of circular local maxima (plateaus report their lowest index)."""
    left = np.roll(col, 1)
    right = np.roll(col, -1)
    return np.flatnonzero((col > left) & (col >= right))


def peak_if(img: TfdImage, n_tracks: int) -> IfTrackSet:
    """The ``n_tracks`` largest local maxima of each time column, sorted by frequency."""
    if n_tracks < 1:
        raise ValueError("n_tracks must be >= 1")
    vals = img.values
    T, F = vals.shape
    tracks = np.zeros((n_tracks, T))
    valid = np.zeros((n_tracks, T), dtype=bool)
    for t in range(T):
        col = vals[t]
        peaks = _local_maxima(col)
        if peaks.size == 0:
            continue
        # stable sort on -value keeps ties at the lower frequency
        order = np.argsort(-col[peaks], kind="stable")
        chosen = np.sort(peaks[order[:n_tracks]])
        tracks[: chosen.size, t] = img.freq_axis[chosen]
        valid[: chosen.size, t] = True
    return IfTrackSet(tracks, valid, img.kind)


def _resample_tracks(ts: IfTrackSet, time_axis: np.ndarray, N: int) -> IfTrackSet:
    """Hold each hop-resolved estimate over the samples nearest its time stamp."""
    if ts.N == N and np.array_equal(time_axis, np.arange(N)):
        return ts
    n = np.arange(N)
    nearest = np.clip(np.searchsorted(time_axis, n, side="right") - 1, 0, time_axis.size - 1)
    return IfTrackSet(ts.tracks[:, nearest], ts.valid[:, nearest], ts.source_kind)


def peak_if_samples(img: TfdImage, n_tracks: int, N: int) -> IfTrackSet:
    """``peak_if`` expanded to one value per signal sample."""
    return _resample_tracks(peak_if(img, n_tracks), img.time_axis, N)


def _chain_components(per_segment: list[list[ChirpComponent]], freq_bins: int,
                      jump_limit_bins: int) -> list[list[ChirpComponent]]:
    """Link components of consecutive segments by nearest ridge frequency.

    The link distance is the mean circular ridge difference over the samples
    the two segments share (or at the new segment's first sample when they
    do not overlap). A link longer than ``jump_limit_bins`` starts a new chain.
    """
    bin_w = TWO_PI / freq_bins
    chains: list[list[ChirpComponent]] = []
    open_chains: list[int] = []
    for comps in per_segment:
        if not comps:
            open_chains = []
            continue
        cand = []
        for ci in open_chains:
            prev = chains[ci][-1]
            for j, c in enumerate(comps):
                start = c.segment_offset
                stop = min(prev.segment_offset + prev.segment_length, start + c.segment_length)
                probe = np.arange(start, stop) if stop > start else np.array([start])
                a = prev.ridge(probe - prev.segment_offset)
                b = c.ridge(probe - c.segment_offset)
                d = float(np.mean(np.abs(circular_error(a, b)))) / bin_w
                cand.append((d, ci, j))
        cand.sort()
        used_c, used_j = set(), set()
        nxt = []
        for d, ci, j in cand:
            if d > jump_limit_bins or ci in used_c or j in used_j:
                continue
            chains[ci].append(comps[j])
            used_c.add(ci)
            used_j.add(j)
            nxt.append(ci)
        for j, c in enumerate(comps):
            if j not in used_j:
                chains.append([c])
                nxt.append(len(chains) - 1)
        open_chains = nxt
    return chains


def tracks_from_chains(img: TfdImage, chains: list[list[ChirpComponent]],
                       search_bins: int = JUMP_LIMIT_BINS) -> IfTrackSet:
    """Per chain, argmax of the synthesized WD near the chain's own ridge at each sample."""
    N, F = img.values.shape
    tracks = np.zeros((len(chains), N))
    valid = np.zeros((len(chains), N), dtype=bool)
    offs = np.arange(-search_bins, search_bins + 1)
    for i, chain in enumerate(chains):
        acc = np.zeros(N, dtype=complex)
        for c in chain:
            n = np.arange(max(0, c.segment_offset), min(N, c.segment_offset + c.segment_length))
            acc[n] += np.exp(1j * c.ridge(n - c.segment_offset))
        n = np.flatnonzero(np.abs(acc) > 0)
        centre = np.rint(np.mod(np.angle(acc[n]), TWO_PI) / (TWO_PI / F)).astype(int)
        window = np.mod(centre[:, None] + offs[None, :], F)
        local = img.values[n[:, None], window]
        best = window[np.arange(n.size), np.argmax(local, axis=1)]
        tracks[i, n] = img.freq_axis[best]
        valid[i, n] = True
    return IfTrackSet(tracks, valid, img.kind)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    image: TfdImage
    tracks: IfTrackSet
    components: list[ChirpComponent]
    chains: list[list[ChirpComponent]]

    def __iter__(self):
        # unpacks as (image, tracks)
        return iter((self.image, self.tracks))


def extract_segments(x, plan: SegmentPlan, grid: BetaGrid, cfg: ExtractionConfig
                     ) -> list[list[ChirpComponent]]:
    x = as_signal(x)
    w = plan.taper()
    out = []
    for off, seg in segment(x, plan):
        support = (off + np.arange(plan.segment_length)) < x.N
        out.append(extract_components(seg, grid, cfg, taper=w * support, offset=off))
    return out


def estimate_if_pipeline(x, plan: SegmentPlan, grid: BetaGrid | None = None,
                         cfg: ExtractionConfig | None = None, *, freq_bins: int | None = None,
                         jump_limit_bins: int = JUMP_LIMIT_BINS) -> PipelineResult:
    """Segment, extract chirps per segment, synthesize the WD, and read off IF tracks.

    The result unpacks as ``(image, tracks)``; components and chains are kept
    on the result for inspection.
    """
    x = as_signal(x)
    N = x.N
    F = 2 * N if freq_bins is None else int(freq_bins)
    grid = grid or BetaGrid.default_for(plan.segment_length)
    cfg = cfg or ExtractionConfig()
    per_segment = extract_segments(x, plan, grid, cfg)
    comps = [c for seg in per_segment for c in seg]
    spans = [(off, plan.segment_length) for off in plan.offsets(N)]
    img = synthesize_wd(comps, N, F, segments=spans)
    if not comps:
        return PipelineResult(img, IfTrackSet.empty(N, img.kind), [], [])
    chains = _chain_components(per_segment, F, jump_limit_bins)
    return PipelineResult(img, tracks_from_chains(img, chains, jump_limit_bins), comps, chains)


def _assign(estimated: IfTrackSet, truth: IfTrackSet) -> list[list[int]]:
    """Greedy association by mean absolute circular distance over shared samples.

    Each estimated track goes to at most one truth track. A truth track may
    collect several estimated tracks (fragments of a broken chain); they are
    listed closest first.
    """
    cand = []
    for e in range(estimated.n_tracks):
        m = estimated.valid[e]
        if not m.any():
            continue
        for t in range(truth.n_tracks):
            d = float(np.mean(np.abs(circular_error(estimated.tracks[e, m], truth.tracks[t, m]))))
            cand.append((d, t, e))
    cand.sort()
    assigned: list[list[int]] = [[] for _ in range(truth.n_tracks)]
    used = set()
    for d, t, e in cand:
        if e in used:
            continue
        used.add(e)
        assigned[t].append(e)
    return assigned


def squared_errors(estimated: IfTrackSet, truth: IfTrackSet) -> np.ndarray:
    """(n_truth, N) squared IF errors.

    At each sample a truth track is scored against the closest-ranked
    assigned fragment that is valid there; samples no fragment covers cost
    pi^2.
    """
    if estimated.N != truth.N:
        raise ValueError("estimated and truth tracks span different lengths")
    err = np.full(truth.tracks.shape, MISS_PENALTY)
    for t, es in enumerate(_assign(estimated, truth)):
        filled = np.zeros(truth.N, dtype=bool)
        for e in es:
            m = estimated.valid[e] & ~filled
            err[t, m] = circular_error(estimated.tracks[e, m], truth.tracks[t, m]) ** 2
            filled |= m
    return err


def score_mse(estimated: IfTrackSet, truth: IfTrackSet, *, snr_db: float = math.nan
              ) -> MseReport:
    err = squared_errors(estimated, truth)
    per = tuple(to_db(float(v)) for v in err.mean(axis=1))
    pooled = float(err.mean())
    return MseReport(per, to_db(pooled), 1, snr_db, pooled)


def combine_reports(reports: Sequence[MseReport]) -> MseReport:
    """Average linear MSEs over Monte Carlo trials, then convert to dB."""
    if not reports:
        raise ValueError("no reports to combine")
    pooled = float(np.mean([r.pooled_mse for r in reports]))
    per = np.mean([[10 ** (v / 10) for v in r.per_track_mse_db] for r in reports], axis=0)
    return MseReport(tuple(to_db(float(v)) for v in np.atleast_1d(per)), to_db(pooled),
                     len(reports), reports[0].snr_db, pooled)


def write_tracks_csv(path, ts: IfTrackSet) -> None:
    lines = ["n,track_id,omega,valid"]
    for i in range(ts.n_tracks):
        for n in range(ts.N):
            lines.append(f"{n},{i},{ts.tracks[i, n]:.17g},{int(ts.valid[i, n])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_tracks_csv(path) -> IfTrackSet:
    rows = [r.split(",") for r in Path(path).read_text().strip().splitlines()[1:]]
    if not rows:
        return IfTrackSet(np.zeros((0, 0)), np.zeros((0, 0), dtype=bool))
    n_t = max(int(r[1]) for r in rows) + 1
    N = max(int(r[0]) for r in rows) + 1
    tr = np.zeros((n_t, N))
    ok = np.zeros((n_t, N), dtype=bool)
    for n, i, om, v in rows:
        tr[int(i), int(n)] = float(om)
        ok[int(i), int(n)] = v == "1"
    return IfTrackSet(tr, ok)
