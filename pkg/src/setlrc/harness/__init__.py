"""Dataset ingestion, synthetic corpora, evaluation protocols and reports."""

from setlrc.harness.dataset import DatasetManifest, ingest_dataset, load_raster
from setlrc.harness.protocol import (
    PRESETS,
    ProtocolConfig,
    ProtocolReport,
    benchmark_timing,
    preset,
    run_protocol,
    strip_timing,
)
from setlrc.harness.report import emit_report
from setlrc.harness.synth import SynthParams, generate_synthetic, synthesize

__all__ = [
    "PRESETS",
    "DatasetManifest",
    "ProtocolConfig",
    "ProtocolReport",
    "SynthParams",
    "benchmark_timing",
    "emit_report",
    "generate_synthetic",
    "ingest_dataset",
    "load_raster",
    "preset",
    "run_protocol",
    "strip_timing",
    "synthesize",
]
