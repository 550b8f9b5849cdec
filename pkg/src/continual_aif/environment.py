"""Generative process: ground-truth outcome tables, cues and regime shifts."""

from dataclasses import dataclass, field

import numpy as np

from .maths import SUM_TOL, DomainError

ROUND_ROBIN = "round-robin"
UNIFORM_RANDOM = "uniform-random"
SCHEDULES = (ROUND_ROBIN, UNIFORM_RANDOM)


@dataclass
class GroundTruth:
    """Outcome distribution for every (industry, process) pair.

    ``mapping`` has shape ``(industries, processes, outcomes)``.
    """

    mapping: np.ndarray
    cue_noise: float = 0.0

    def __post_init__(self):
        self.mapping = np.asarray(self.mapping, dtype=float)
        if self.mapping.ndim != 3:
            raise DomainError("truth mapping must be industries x processes x outcomes")
        if np.any(self.mapping < 0) or np.any(np.abs(self.mapping.sum(axis=2) - 1) > SUM_TOL):
            raise DomainError("every truth cell must be a categorical distribution")
        if not 0 <= self.cue_noise < 1:
            raise DomainError("cue_noise must lie in [0, 1)")

    @classmethod
    def from_grid(cls, grid, outcomes, cue_noise=0.0):
        """Deterministic truth from an integer grid of outcome indices."""
        grid = np.asarray(grid, dtype=int)
        return cls(np.eye(outcomes)[grid], cue_noise)

    @property
    def shape(self):
        return self.mapping.shape

    def correct_outcomes(self):
        """Most probable outcome per pair (the unique one for deterministic cells)."""
        return self.mapping.argmax(axis=2)

    def copy(self):
        return GroundTruth(self.mapping.copy(), self.cue_noise)


@dataclass(frozen=True)
class ChangeEvent:
    """Replace some truth cells before iteration ``at_iteration`` starts.

    ``patch`` maps ``(industry, process)`` to a new outcome distribution.
    """

    at_iteration: int
    patch: dict

    def cells(self):
        return sorted(self.patch)


@dataclass
class Environment:
    truth: GroundTruth
    schedule: str = ROUND_ROBIN
    pending: list = field(default_factory=list)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    industry: int = 0

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise DomainError(f"unknown schedule {self.schedule!r}")
        self.truth = self.truth.copy()
        self.pending = sorted(self.pending, key=lambda ev: ev.at_iteration)

    @property
    def num_industries(self):
        return self.truth.shape[0]

    def set_industry(self, j):
        if not 0 <= j < self.num_industries:
            raise DomainError(f"industry {j} out of range")
        self.industry = int(j)

    def industry_order(self):
        """Industries visited in one iteration, one trial each."""
        n = self.num_industries
        if self.schedule == ROUND_ROBIN:
            return list(range(n))
        return [int(j) for j in self.rng.integers(0, n, size=n)]

    def emit_cue(self):
        """Current industry, or a uniformly chosen other industry with probability ``cue_noise``."""
        noise = self.truth.cue_noise
        if noise == 0 or self.num_industries == 1:
            return self.industry
        if self.rng.random() >= noise:
            return self.industry
        other = int(self.rng.integers(0, self.num_industries - 1))
        return other + (other >= self.industry)

    def emit_outcome(self, process):
        """Sample an outcome for ``process`` in the current industry."""
        if not 0 <= process < self.truth.shape[1]:
            raise DomainError(f"process {process} out of range")
        probs = self.truth.mapping[self.industry, process]
        return int(self.rng.choice(probs.size, p=probs))

    def apply_changes(self, iteration):
        """Apply every pending change scheduled for ``iteration``; return those applied."""
        due = [ev for ev in self.pending if ev.at_iteration == iteration]
        for ev in due:
            for (j, k), probs in ev.patch.items():
                self.truth.mapping[j, k] = probs
        self.pending = [ev for ev in self.pending if ev.at_iteration != iteration]
        return due


def generate_truth_grid(industries=16, processes=4, outcomes=5, seed=0):
    """Deterministic outcome grid with distinct outcomes within each industry.

    Industry 0 maps process 0 to outcome 0 (Excellent) and process 1 to
    outcome 1 (Good); every other cell is drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    distinct = processes <= outcomes
    grid = np.empty((industries, processes), dtype=int)
    for j in range(industries):
        grid[j] = rng.choice(outcomes, size=processes, replace=not distinct)
    fixed = [0, 1][: min(processes, outcomes)]
    rest = [o for o in range(outcomes) if o not in fixed]
    tail = rng.choice(rest, size=processes - len(fixed), replace=not distinct) if processes > len(fixed) else []
    grid[0] = list(fixed) + list(tail)
    return grid


def derangement(n, rng):
    """Uniformly random permutation of ``range(n)`` without fixed points (n >= 2)."""
    if n < 2:
        raise DomainError("a derangement needs at least two elements")
    while True:
        perm = rng.permutation(n)
        if np.all(perm != np.arange(n)):
            return perm


def derange_industries(grid, industries, rng):
    """Change event cells that shuffle each listed industry's outcomes across its processes.

    Returns a dict ``{(j, k): outcome}``. With distinct outcomes per
    industry no process keeps its old outcome.
    """
    cells = {}
    for j in industries:
        perm = derangement(grid.shape[1], rng)
        for k in range(grid.shape[1]):
            cells[(int(j), k)] = int(grid[j, perm[k]])
    return cells
