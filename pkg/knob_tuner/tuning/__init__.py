from .optimizer import TuneObjective, TuneReport, compare_configurations, load_tune_report, random_search, tune

__all__ = ["TuneObjective", "TuneReport", "compare_configurations", "load_tune_report", "random_search", "tune"]
