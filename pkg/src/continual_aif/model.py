"""Generative model for one level of the hierarchy.

Array conventions follow the usual discrete active inference layout:

* ``A[m]`` has shape ``(num_obs[m], *num_states)``; ``A[m][o, s1, s2, ...]``
  is ``P(o | s1, s2, ...)``.
* ``a[m]`` is the Dirichlet concentration array shadowing ``A[m]``, or
  ``None`` for modalities that are not learned.
* ``B[f]`` has shape ``(num_states[f], num_states[f], num_controls[f])``;
  ``B[f][s', s, u]`` is ``P(s' | s, u)``.
* ``C[m]`` holds unnormalized log-preferences over outcomes.
* ``D[f]`` is the prior over the states of factor ``f``.
* ``policies`` has shape ``(num_policies, horizon, num_factors)`` and stores
  a control index for every factor (0 for uncontrolled factors).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .maths import SUM_TOL, DomainError, expected_log_likelihood, normalize

NORMALIZED_MEAN = "normalized-mean"
EXPECTED_LOG = "expected-log"
LIKELIHOOD_MODES = (EXPECTED_LOG, NORMALIZED_MEAN)

OUTCOME_LABELS = ("Excellent", "Good", "Neutral", "Poor", "Terrible")

# bottom-level layout
INDUSTRY, PROCESS = 0, 1
PROCESS_OBS, OUTCOME_OBS, CUE_OBS = 0, 1, 2


@dataclass(frozen=True)
class FactorSpec:
    name: str
    cardinality: int
    controllable: bool = False

    def __post_init__(self):
        if self.cardinality < 1:
            raise DomainError(f"factor {self.name!r} needs cardinality >= 1")


@dataclass(frozen=True)
class ModalitySpec:
    name: str
    cardinality: int

    def __post_init__(self):
        if self.cardinality < 1:
            raise DomainError(f"modality {self.name!r} needs cardinality >= 1")


@dataclass
class GenerativeModel:
    factors: list
    modalities: list
    A: list
    a: list
    B: list
    C: list
    D: list
    policies: np.ndarray
    gamma: float = 16.0
    eta: float = 1.0
    omega: float = 1.0
    likelihood_mode: str = EXPECTED_LOG
    name: str = field(default="", compare=False)

    @property
    def num_states(self):
        return tuple(f.cardinality for f in self.factors)

    @property
    def num_obs(self):
        return tuple(m.cardinality for m in self.modalities)

    @property
    def learnable(self):
        return [m for m, conc in enumerate(self.a) if conc is not None]

    def modality_index(self, name):
        for m, spec in enumerate(self.modalities):
            if spec.name == name:
                return m
        raise KeyError(name)

    def validate(self):
        """Check every structural invariant; raise ``DomainError`` on the first failure."""
        nf, nm = len(self.factors), len(self.modalities)
        for label, items, n in (("A", self.A, nm), ("a", self.a, nm), ("C", self.C, nm),
                                ("B", self.B, nf), ("D", self.D, nf)):
            if len(items) != n:
                raise DomainError(f"{label} has {len(items)} entries, expected {n}")
        for m, spec in enumerate(self.modalities):
            expected = (spec.cardinality,) + self.num_states
            if self.A[m].shape != expected:
                raise DomainError(f"A[{m}] shape {self.A[m].shape} != {expected}")
            if np.any(self.A[m] < 0) or np.any(np.abs(self.A[m].sum(axis=0) - 1) > SUM_TOL):
                raise DomainError(f"A[{m}] columns are not categorical")
            if self.a[m] is not None:
                if self.a[m].shape != expected:
                    raise DomainError(f"a[{m}] shape {self.a[m].shape} != {expected}")
                if np.any(self.a[m] <= 0):
                    raise DomainError(f"a[{m}] has non-positive concentrations")
            if np.asarray(self.C[m]).shape != (spec.cardinality,) or not np.all(np.isfinite(self.C[m])):
                raise DomainError(f"C[{m}] must be a finite vector of length {spec.cardinality}")
        for f, spec in enumerate(self.factors):
            n = spec.cardinality
            if self.B[f].ndim != 3 or self.B[f].shape[:2] != (n, n):
                raise DomainError(f"B[{f}] shape {self.B[f].shape} invalid for {n} states")
            if np.any(np.abs(self.B[f].sum(axis=0) - 1) > SUM_TOL):
                raise DomainError(f"B[{f}] columns are not categorical")
            if self.D[f].shape != (n,) or abs(self.D[f].sum() - 1) > SUM_TOL:
                raise DomainError(f"D[{f}] is not a categorical over {n} states")
        pol = np.asarray(self.policies)
        if pol.ndim != 3 or pol.shape[1] < 1 or pol.shape[2] != nf:
            raise DomainError(f"policies shape {pol.shape} invalid")
        for f in range(nf):
            if np.any(pol[:, :, f] < 0) or np.any(pol[:, :, f] >= self.B[f].shape[2]):
                raise DomainError(f"policy control out of range for factor {f}")
        if self.likelihood_mode not in LIKELIHOOD_MODES:
            raise DomainError(f"unknown likelihood_mode {self.likelihood_mode!r}")
        if not (self.gamma >= 0 and self.eta >= 0 and 0 < self.omega <= 1):
            raise DomainError("need gamma >= 0, eta >= 0 and 0 < omega <= 1")
        return self

    def copy(self):
        return replace(
            self,
            A=[x.copy() for x in self.A],
            a=[None if x is None else x.copy() for x in self.a],
            B=[x.copy() for x in self.B],
            C=[np.array(x, dtype=float) for x in self.C],
            D=[x.copy() for x in self.D],
            policies=np.array(self.policies),
        )


def likelihood_from_concentrations(conc, mode=EXPECTED_LOG):
    """Point estimate of a likelihood array from its Dirichlet counts."""
    if mode == NORMALIZED_MEAN:
        return normalize(conc, axis=0)
    if mode == EXPECTED_LOG:
        return normalize(np.exp(expected_log_likelihood(conc)), axis=0)
    raise DomainError(f"unknown likelihood_mode {mode!r}")


def refresh_A_from_a(model):
    """Return a model whose learnable ``A`` arrays are recomputed from ``a``."""
    A = list(model.A)
    for m in model.learnable:
        A[m] = likelihood_from_concentrations(model.a[m], model.likelihood_mode)
    return replace(model, A=A)


def with_concentrations(model, m, conc):
    """Swap in new concentrations for modality ``m`` and refresh its likelihood."""
    a = list(model.a)
    a[m] = conc
    A = list(model.A)
    A[m] = likelihood_from_concentrations(conc, model.likelihood_mode)
    return replace(model, a=a, A=A)


def projection_likelihood(num_states, factor):
    """Deterministic modality that reports the state of one factor."""
    n = num_states[factor]
    A = np.zeros((n,) + tuple(num_states))
    for s in range(n):
        idx = [slice(None)] * len(num_states)
        idx[factor] = s
        A[(s, *idx)] = 1.0
    return A


def cue_likelihood(n, accuracy=1.0):
    """Cue mapping with ``accuracy`` on the diagonal and the rest spread evenly."""
    if n == 1:
        return np.ones((1, 1))
    if not 0 <= accuracy <= 1:
        raise DomainError("cue accuracy must lie in [0, 1]")
    off = (1.0 - accuracy) / (n - 1)
    return np.full((n, n), off) + np.eye(n) * (accuracy - off)


def build_paper_model(industries=16, processes=4, outcomes=5, eta=1.0, omega=1.0,
                      gamma=16.0, a0=0.25, likelihood_mode=EXPECTED_LOG, cue_accuracy=1.0):
    """Build the two-level research-agent model.

    The top level infers the industry from a cue. The bottom level has an
    industry factor and a controllable research-process factor, observed
    through three modalities: the process in use, the outcome, and the
    industry cue. Only the outcome likelihood is learned.

    Returns
    -------
    (top, bottom) : tuple of GenerativeModel
    """
    for label, n in (("industries", industries), ("processes", processes), ("outcomes", outcomes)):
        if int(n) != n or n < 1:
            raise DomainError(f"{label} must be a positive integer, got {n!r}")
    if not a0 > 0:
        raise DomainError("a0 must be positive")

    top = GenerativeModel(
        factors=[FactorSpec("industry", industries)],
        modalities=[ModalitySpec("industry_cue", industries)],
        A=[cue_likelihood(industries, cue_accuracy)],
        a=[None],
        B=[np.eye(industries)[:, :, None]],
        C=[np.zeros(industries)],
        D=[np.full(industries, 1.0 / industries)],
        policies=np.zeros((1, 1, 1), dtype=int),
        gamma=gamma, eta=eta, omega=omega, likelihood_mode=likelihood_mode,
        name="top",
    )

    num_states = (industries, processes)
    cue = cue_likelihood(industries, cue_accuracy)
    conc = np.full((outcomes,) + num_states, float(a0))
    # the process factor is set directly by the chosen action
    b_process = np.zeros((processes, processes, processes))
    for u in range(processes):
        b_process[u, :, u] = 1.0
    policies = np.zeros((processes, 1, 2), dtype=int)
    policies[:, 0, PROCESS] = np.arange(processes)

    bottom = GenerativeModel(
        factors=[FactorSpec("industry", industries), FactorSpec("process", processes, True)],
        modalities=[ModalitySpec("process", processes), ModalitySpec("outcome", outcomes),
                    ModalitySpec("industry_cue", industries)],
        A=[
            projection_likelihood(num_states, PROCESS),
            likelihood_from_concentrations(conc, likelihood_mode),
            np.einsum("cj,k->cjk", cue, np.ones(processes)),
        ],
        a=[None, conc, None],
        B=[np.eye(industries)[:, :, None], b_process],
        C=[np.zeros(processes), np.zeros(outcomes), np.zeros(industries)],
        D=[np.full(industries, 1.0 / industries), np.full(processes, 1.0 / processes)],
        policies=policies,
        gamma=gamma, eta=eta, omega=omega, likelihood_mode=likelihood_mode,
        name="bottom",
    )
    return top.validate(), bottom.validate()
