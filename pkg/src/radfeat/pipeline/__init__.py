from .config import ProcessingConfig, dump_config, load_config, parse_config, preset
from .diagnostics import DiagnosticRecord, DiagnosticSet
from .io import load_mask, load_volume, read_nifti, read_raw, save_volume, write_nifti, write_raw
from .nomenclature import nomenclature
from .report import FeatureRecord, FeatureReport, to_csv, to_json, write_figures, write_report
from .run import run_pipeline
from .synthetic import synthetic_ct
