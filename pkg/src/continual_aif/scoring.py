"""Confidence score of learned concentrations against the ground truth."""

from dataclasses import dataclass

import numpy as np

from .maths import DomainError


def pair_score(column, correct):
    """Concentration on the correct outcome minus the largest concentration elsewhere."""
    column = np.asarray(column, dtype=float)
    if column.ndim != 1 or column.size < 2:
        raise DomainError("a score column needs at least two outcomes")
    if not 0 <= correct < column.size:
        raise DomainError(f"correct index {correct} out of range")
    return float(column[correct] - np.delete(column, correct).max())


def normalize_pair_score(score, column):
    """Divide a pair score by the column's total concentration."""
    total = float(np.sum(column))
    if not total > 0:
        raise DomainError("column concentrations must sum to a positive value")
    return score / total


def scope_pairs(num_industries, num_processes, industries=None):
    """All (industry, process) pairs, optionally restricted to some industries."""
    js = range(num_industries) if industries is None else industries
    return [(int(j), k) for j in js for k in range(num_processes)]


@dataclass(frozen=True)
class ScoreReport:
    raw: np.ndarray          # (industries, processes) pair scores
    norm: np.ndarray         # normalized pair scores
    scope: tuple             # included (industry, process) pairs
    total_raw: float
    total_norm: float

    @property
    def per_industry(self):
        """Normalized score summed over processes, for every industry (scope ignored)."""
        return self.norm.sum(axis=1)

    def industry_total(self, j):
        return float(self.per_industry[j])


def total_score(a, truth, scope=None):
    """Score a concentration array ``a[outcome, industry, process]``.

    Parameters
    ----------
    a : ndarray
        Outcome-modality concentrations.
    truth : GroundTruth
        Correct outcome per pair is the argmax of the true distribution.
    scope : sequence of (industry, process), optional
        Pairs summed into the totals; all pairs when omitted.
    """
    a = np.asarray(a, dtype=float)
    n_o, n_j, n_k = a.shape
    if truth.shape != (n_j, n_k, n_o):
        raise DomainError(f"truth shape {truth.shape} does not match concentrations {a.shape}")
    if scope is None:
        scope = scope_pairs(n_j, n_k)
    scope = tuple(sorted({(int(j), int(k)) for j, k in scope}))
    if not scope:
        raise DomainError("score scope is empty")
    for j, k in scope:
        if not (0 <= j < n_j and 0 <= k < n_k):
            raise DomainError(f"scope pair {(j, k)} out of range")
    correct = truth.correct_outcomes()
    raw = np.empty((n_j, n_k))
    norm = np.empty((n_j, n_k))
    for j in range(n_j):
        for k in range(n_k):
            col = a[:, j, k]
            raw[j, k] = pair_score(col, correct[j, k])
            norm[j, k] = normalize_pair_score(raw[j, k], col)
    total_raw = float(sum(raw[p] for p in scope))
    total_norm = float(sum(norm[p] for p in scope))
    return ScoreReport(raw, norm, scope, total_raw, total_norm)
