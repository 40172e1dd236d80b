from .io import Sample, SampleId, SampleLoadError, drop_rear_view, read_sample, write_sample
from .splits import SplitManifest, make_splits
from .loader import collate_samples, frame_dirs_for_split, iter_batches, load_samples
from .ingest import IngestError, ingest_external
from .generate import GenConfig, generate_dataset

DATA_ROOT_ENV = "BEVCVT_DATA_ROOT"

__all__ = [
    "DATA_ROOT_ENV",
    "GenConfig",
    "IngestError",
    "Sample",
    "SampleId",
    "SampleLoadError",
    "SplitManifest",
    "collate_samples",
    "drop_rear_view",
    "frame_dirs_for_split",
    "generate_dataset",
    "ingest_external",
    "iter_batches",
    "load_samples",
    "make_splits",
    "read_sample",
    "write_sample",
]
