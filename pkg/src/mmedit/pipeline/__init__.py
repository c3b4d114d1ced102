"""Corpus, consolidation, training, evaluation and the ablation harness."""
from .ablation import EvalReport, EvalRow, read_verdicts, report_from_verdicts, run_ablation, write_report
from .consolidate import PHIS, ConsolidationError, Phi, consolidate, encode_marked, get_phi, joined_sequence
from .corpus import FAMILIES, generate_corpus
from .data import DataError, extract_all, extract_record, load_jsonl, save_jsonl, split_dataset
from .training import ExperimentConfig, TrainingError, TrainResult, evaluate_top1, train

__all__ = [
    "ConsolidationError", "DataError", "EvalReport", "EvalRow", "ExperimentConfig", "FAMILIES", "PHIS", "Phi",
    "TrainResult", "TrainingError", "consolidate", "encode_marked", "evaluate_top1", "extract_all",
    "extract_record", "generate_corpus", "get_phi", "joined_sequence", "load_jsonl", "read_verdicts",
    "report_from_verdicts", "run_ablation", "save_jsonl", "split_dataset", "train", "write_report",
]
