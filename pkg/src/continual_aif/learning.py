"""Dirichlet concentration learning for likelihood arrays."""

from dataclasses import dataclass, replace

import numpy as np

from .inference import BeliefState
from .maths import DomainError
from .model import refresh_A_from_a

CONCENTRATION_FLOOR = 1e-8


@dataclass(frozen=True)
class LearningEvent:
    """One observed outcome paired with the inferred joint state."""

    modality: int
    outcome: np.ndarray
    belief: BeliefState
    timestamp: int = 0

    def __post_init__(self):
        o = np.asarray(self.outcome, dtype=float)
        if o.ndim != 1 or np.count_nonzero(o) != 1 or o.max() != 1.0:
            raise DomainError("outcome must be a one-hot vector")
        object.__setattr__(self, "outcome", o)

    @classmethod
    def observed(cls, modality, index, num_outcomes, belief, timestamp=0):
        return cls(modality, np.eye(num_outcomes)[index], belief, timestamp)

    def counts(self):
        return np.multiply.outer(self.outcome, self.belief.joint)


def update_concentrations(a, events, eta, omega):
    """Decay ``a`` by ``omega`` then add ``eta`` times the summed outcome-state outer products.

    Entries are floored at ``CONCENTRATION_FLOOR`` after decay.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise DomainError("concentrations must be positive")
    if not 0 < omega <= 1:
        raise DomainError("omega must lie in (0, 1]")
    increment = np.zeros_like(a)
    for ev in events:
        c = ev.counts()
        if c.shape != a.shape:
            raise DomainError(f"event shape {c.shape} does not match concentrations {a.shape}")
        increment += c
    return np.maximum(omega * a, CONCENTRATION_FLOOR) + eta * increment


def learn_trial(model, events):
    """Apply one trial's events to every learnable modality and refresh ``A``."""
    by_modality = {m: [] for m in model.learnable}
    for ev in events:
        if ev.modality not in by_modality:
            raise DomainError(f"modality {ev.modality} is not learnable")
        by_modality[ev.modality].append(ev)
    a = list(model.a)
    for m, evs in by_modality.items():
        a[m] = update_concentrations(a[m], evs, model.eta, model.omega)
    return refresh_A_from_a(replace(model, a=a))
