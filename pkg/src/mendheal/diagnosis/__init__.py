"""Fault localization: trace frames, AST detectors, mutation spectrum, and history priors."""

from .detectors import DEFAULT_STRENGTHS, PatternFinding, fold_snapshot, run_detectors
from .rank import (
    DEFAULT_WEIGHTS, DiagnosisConfig, Evidence, FaultHypothesis, HistoryPrior, NoHypothesis,
    confidence_of, diagnose, history_prior,
)
from .spectrum import SpectrumScore, spectrum_localize

__all__ = [
    "DEFAULT_STRENGTHS", "DEFAULT_WEIGHTS", "DiagnosisConfig", "Evidence", "FaultHypothesis",
    "HistoryPrior", "NoHypothesis", "PatternFinding", "SpectrumScore", "confidence_of", "diagnose",
    "fold_snapshot", "history_prior", "run_detectors", "spectrum_localize",
]
