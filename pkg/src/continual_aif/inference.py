"""State inference, free energy, and policy evaluation.

Beliefs are held over the full joint state space, so the posterior returned
by :func:`infer_states` is exact rather than a mean-field approximation.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .maths import (
    SUM_TOL,
    DomainError,
    entropy,
    kl_categorical,
    kl_dirichlet,
    log_stable,
    softmax,
)


class InferenceError(RuntimeError):
    """Raised when an observation has zero probability under the prior."""


@dataclass(frozen=True)
class BeliefState:
    """Categorical belief over the joint state space, shaped ``num_states``."""

    joint: np.ndarray

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=float)
        if np.any(joint < 0) or abs(joint.sum() - 1.0) > SUM_TOL:
            raise DomainError("joint belief must be a categorical distribution")
        object.__setattr__(self, "joint", joint)

    @classmethod
    def from_marginals(cls, marginals):
        return cls(reduce(np.multiply.outer, [np.asarray(m, dtype=float) for m in marginals]))

    @property
    def marginals(self):
        axes = range(self.joint.ndim)
        return [self.joint.sum(axis=tuple(a for a in axes if a != f)) for f in axes]


@dataclass(frozen=True)
class FreeEnergy:
    complexity: float
    accuracy: float

    @property
    def total(self):
        return self.complexity - self.accuracy


@dataclass(frozen=True)
class EfeBreakdown:
    risk: float
    ambiguity: float
    novelty: float

    @property
    def total(self):
        return self.risk + self.ambiguity - self.novelty

    def as_dict(self):
        return {"risk": self.risk, "ambiguity": self.ambiguity,
                "novelty": self.novelty, "total": self.total}


@dataclass(frozen=True)
class Prediction:
    qs: BeliefState
    qo: list


@dataclass(frozen=True)
class PolicyChoice:
    posterior: np.ndarray
    chosen: int


def _check_obs(model, obs):
    if len(obs) != len(model.modalities):
        raise DomainError(f"observation has {len(obs)} entries for {len(model.modalities)} modalities")
    for m, o in enumerate(obs):
        if o is not None and not 0 <= o < model.modalities[m].cardinality:
            raise DomainError(f"outcome {o} out of range for modality {model.modalities[m].name!r}")


def likelihood(model, obs):
    """Joint likelihood ``prod_m A[m][o_m, s]`` over present modalities."""
    _check_obs(model, obs)
    like = np.ones(model.num_states)
    for m, o in enumerate(obs):
        if o is not None:
            like = like * model.A[m][o]
    return like


def infer_states(model, obs, prior):
    """Exact posterior over hidden states given one observation.

    Parameters
    ----------
    model : GenerativeModel
    obs : sequence of int or None
        One outcome index per modality; ``None`` marks an absent modality.
    prior : BeliefState

    Returns
    -------
    BeliefState
    """
    _check_obs(model, obs)
    post = prior.joint
    for m, o in enumerate(obs):
        if o is None:
            continue
        post = post * model.A[m][o]
        if not post.sum() > 0:
            raise InferenceError(
                f"observation {o} on modality {model.modalities[m].name!r} "
                "has zero probability under the prior"
            )
    return BeliefState(post / post.sum())


def compute_vfe(model, q, obs, prior):
    """Variational free energy of belief ``q``: complexity minus accuracy."""
    _check_obs(model, obs)
    complexity = kl_categorical(q.joint.ravel(), prior.joint.ravel())
    log_like = np.zeros(model.num_states)
    for m, o in enumerate(obs):
        if o is not None:
            log_like += log_stable(model.A[m][o])
    accuracy = float(np.sum(q.joint * log_like))
    return FreeEnergy(complexity, accuracy)


def propagate(model, joint, controls):
    """Push a joint belief one step through ``B`` under per-factor controls."""
    for f, u in enumerate(controls):
        moved = np.tensordot(model.B[f][:, :, u], joint, axes=([1], [f]))
        joint = np.moveaxis(moved, 0, f)
    return joint


def predict_for_policy(model, q_now, policy):
    """Predicted states and outcomes at each step of ``policy``."""
    policy = np.asarray(policy)
    joint = q_now.joint
    out = []
    for controls in policy:
        joint = propagate(model, joint, controls)
        qo = [np.tensordot(A, joint, axes=joint.ndim) for A in model.A]
        out.append(Prediction(BeliefState(joint), qo))
    return out


def column_novelty(conc, A):
    """Expected information gain about each Dirichlet column from one more outcome.

    For every column ``s`` returns ``sum_o A[o, s] KL[Dir(a_s + e_o) || Dir(a_s)]``.
    ``conc`` and ``A`` are 2-D, outcomes by columns.
    """
    n_o, n_s = conc.shape
    prior = np.broadcast_to(conc[:, None, :], (n_o, n_o, n_s))
    post = prior + np.eye(n_o)[:, :, None]
    kl = kl_dirichlet(post.reshape(n_o, -1), prior.reshape(n_o, -1)).reshape(n_o, n_s)
    return np.sum(A * kl, axis=0)


def evaluate_policies(model, q_now, policies=None):
    """Expected free energy breakdown for each policy (all of the model's by default).

    Per-column ambiguity and novelty do not depend on the policy, so they are
    computed once and weighted by each policy's predicted states.
    """
    if policies is None:
        policies = model.policies
    n_s = int(np.prod(model.num_states))
    stats = []
    for m, spec in enumerate(model.modalities):
        A = model.A[m].reshape(spec.cardinality, n_s)
        nov = None
        if model.a[m] is not None:
            nov = column_novelty(model.a[m].reshape(spec.cardinality, n_s), A)
        stats.append((A, entropy(A), nov, softmax(model.C[m])))
    out = []
    for policy in policies:
        risk = ambiguity = novelty = 0.0
        joint = q_now.joint
        for controls in np.asarray(policy):
            joint = propagate(model, joint, controls)
            qs = joint.ravel()
            for A, amb, nov, pref in stats:
                risk += kl_categorical(A @ qs, pref)
                ambiguity += float(qs @ amb)
                if nov is not None:
                    novelty += float(qs @ nov)
        out.append(EfeBreakdown(risk, ambiguity, novelty))
    return out


def expected_free_energy(model, q_now, policy):
    """Risk + ambiguity - novelty of one policy, summed over steps and modalities."""
    return evaluate_policies(model, q_now, [policy])[0]


def select_policy(G, gamma, rng):
    """Sample a policy from ``softmax(-gamma * G)``.

    An infinite ``gamma`` picks the lowest-index minimizer without drawing.
    """
    G = np.asarray(G, dtype=float)
    if G.size == 0:
        raise DomainError("no policies to select from")
    if not np.all(np.isfinite(G)):
        raise DomainError("expected free energies must be finite")
    if np.isinf(gamma):
        chosen = int(np.argmin(G))
        posterior = np.zeros(G.size)
        posterior[chosen] = 1.0
        return PolicyChoice(posterior, chosen)
    posterior = softmax(-G, gamma)
    cdf = np.cumsum(posterior)
    chosen = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return PolicyChoice(posterior, min(chosen, G.size - 1))
