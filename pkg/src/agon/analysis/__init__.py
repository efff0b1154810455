from .emit import bar_chart, emit, line_chart, to_csv
from .lexicon import LexiconConfig, MissingStopwords, load_stopwords, tokenize, word_frequencies
from .metrics import (
    AnalysisError,
    MetricsTable,
    SeriesPoint,
    SeriesSet,
    completed,
    coordination_series,
    mean_ci,
    message_length_by_round,
    message_length_stats,
    payoff_totals,
    strategy_series,
)
from .suite import run_suite

__all__ = [
    "AnalysisError", "LexiconConfig", "MetricsTable", "MissingStopwords", "SeriesPoint",
    "SeriesSet", "bar_chart", "completed", "coordination_series", "emit", "line_chart",
    "load_stopwords", "mean_ci", "message_length_by_round", "message_length_stats", "payoff_totals",
    "run_suite", "strategy_series", "to_csv", "tokenize", "word_frequencies",
]
