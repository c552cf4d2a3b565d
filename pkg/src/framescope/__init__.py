"""framescope: classify compressed video from per-frame bitstream sizes.

The only signal used is the sequence of per-frame compressed sizes read
straight out of the bitstream (Annex-B NAL layout or MP4 sample tables);
no pixel data is ever decoded.
"""

from .annexb import (
    AccessUnitSpan,
    NalUnit,
    build_access_units,
    detect_codec,
    extract_frames_annexb,
    is_frame_start,
    scan_annexb,
)
from .bitreader import BitReader, read_ue, unescape_rbsp
from .datagen import ClassProfile, benchmark_profiles, generate, standard_benchmark
from .dtw import DtwConfig, dtw_distance, knn_classify
from .fsts import load_dataset, read_fsts, read_manifest, write_fsts, write_manifest
from .metrics import EvalReport, MetricSummary, confusion, metrics, realtime_factor
from .mp4 import BoxHeader, extract_frames_mp4
from .series import (
    Codec,
    FrameSizeSeries,
    LabeledDataset,
    PreprocessSpec,
    prepare_matrix,
    preprocess,
    split,
    window,
    znorm,
)
from .stats import KldMatrix, SizeHistogram, class_kld_matrix, histogram, kld, shared_edges

__version__ = "0.1.0"
