"""Time-frequency analysis with the discrete linear chirp transform.

The main entry points are re-exported here; see the submodules for the
full API.
"""

from .chirps import ChirpComponent, ExtractionConfig, extract_components, synthesize_wd
from .dlct import BetaGrid, DlctPlane, dlct_direct, dlct_forward, dlct_inverse
from .estimation import IfTrackSet, MseReport, estimate_if_pipeline, peak_if, score_mse
from .signal import (
    ComplexSignal, NoiseSpec, SegmentPlan, Window, add_noise, make_example1, make_example2,
    read_signal, write_signal,
)
from .tfd import TfdImage, TfdKind, stft, wigner

__version__ = "0.1.0"
