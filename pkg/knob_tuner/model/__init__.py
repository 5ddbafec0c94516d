"""Importance ranking (Lasso) and the Gaussian-process surrogate model."""

from .preprocess import encode
from .ranking import RankingResult, lasso_fit, load_ranking, rank, top_k

__all__ = ["encode", "RankingResult", "lasso_fit", "load_ranking", "rank", "top_k"]
