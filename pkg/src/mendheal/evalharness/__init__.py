"""Seeded campaigns, detection and repair metrics, and baseline comparisons."""

from .campaign import (
    CORPUS_DIR, Campaign, CampaignResult, CorpusNotGreen, TrialRecord, campaign_dir, campaign_policy, check_green,
    fixture_path, read_campaign, run_campaign, run_trial, shipped_fixtures, trial_seed, write_campaign,
)
from .metrics import (
    ALL, F1_TARGET, F1_TOLERANCE, ComparisonReport, MetricsRow, MetricsTable, compare_baselines, emit_report,
    f1_score, metrics, row_for,
)

__all__ = [
    "ALL", "CORPUS_DIR", "Campaign", "CampaignResult", "ComparisonReport", "CorpusNotGreen", "F1_TARGET",
    "F1_TOLERANCE", "MetricsRow", "MetricsTable", "TrialRecord", "campaign_dir", "campaign_policy", "check_green",
    "compare_baselines", "emit_report", "f1_score", "fixture_path", "metrics", "read_campaign", "row_for",
    "run_campaign", "run_trial", "shipped_fixtures", "trial_seed", "write_campaign",
]
