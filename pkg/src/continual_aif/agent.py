"""Two-level research agent.

The top level reads an industry cue and hands its posterior down as the
bottom level's industry prior. The bottom level picks research processes by
expected free energy, observes outcomes, and learns the outcome likelihood.
"""

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .inference import (
    BeliefState,
    compute_vfe,
    evaluate_policies,
    infer_states,
    predict_for_policy,
    select_policy,
)
from .learning import LearningEvent, learn_trial, update_concentrations
from .maths import DomainError
from .model import CUE_OBS, INDUSTRY, OUTCOME_OBS, PROCESS, PROCESS_OBS, build_paper_model, with_concentrations


class TrialError(RuntimeError):
    """A failure inside a trial, tagged with where it happened."""


@dataclass
class TrialRecord:
    iteration: int
    trial: int
    industry: int
    cue: int
    top_posterior: np.ndarray
    processes: list
    outcomes: list
    efe: list          # per step, one EfeBreakdown per policy
    vfe: list          # per step, free energy after inference
    a_hash: str


def link_down(top_posterior, bottom):
    """Bottom model whose industry prior is the top-level posterior."""
    top_posterior = np.asarray(top_posterior, dtype=float)
    n = bottom.factors[INDUSTRY].cardinality
    if top_posterior.shape != (n,):
        raise DomainError(f"top posterior has {top_posterior.size} states, bottom expects {n}")
    D = list(bottom.D)
    D[INDUSTRY] = top_posterior.copy()
    return replace(bottom, D=D)


def concentration_hash(a):
    return hashlib.sha256(np.ascontiguousarray(a, dtype=float).tobytes()).hexdigest()[:16]


class HierarchicalAgent:
    """Top/bottom pair with bottom-level concentrations persisting across trials."""

    def __init__(self, top, bottom, steps_per_trial=4):
        if top.factors[0].cardinality != bottom.factors[INDUSTRY].cardinality:
            raise DomainError("top and bottom industry cardinalities differ")
        self.top = top
        self.bottom = bottom
        self.steps_per_trial = steps_per_trial

    @classmethod
    def from_hyper(cls, steps_per_trial=4, **kwargs):
        top, bottom = build_paper_model(**kwargs)
        return cls(top, bottom, steps_per_trial)

    @property
    def concentrations(self):
        return self.bottom.a[OUTCOME_OBS]

    def load_concentrations(self, a):
        a = np.asarray(a, dtype=float)
        if a.shape != self.concentrations.shape:
            raise DomainError(f"carried concentrations {a.shape} != {self.concentrations.shape}")
        self.bottom = with_concentrations(self.bottom, OUTCOME_OBS, a.copy())

    def top_step(self, cue):
        q = infer_states(self.top, [cue], BeliefState(self.top.D[0]))
        return q.joint

    def run_trial(self, env, iteration, rng, trial=0):
        """One trial in the environment's current industry.

        Within the trial, policy evaluation sees the trial's accumulated
        evidence added to the concentrations; forgetting and the permanent
        update happen once at the end.
        """
        cue = env.emit_cue()
        q_top = self.top_step(cue)
        bottom = link_down(q_top, self.bottom)
        n_o = bottom.modalities[OUTCOME_OBS].cardinality
        q = BeliefState.from_marginals(bottom.D)
        events, processes, outcomes, efe, vfe = [], [], [], [], []
        try:
            for step in range(self.steps_per_trial):
                working = bottom
                if events:
                    counts = update_concentrations(bottom.a[OUTCOME_OBS], events, bottom.eta, 1.0)
                    working = with_concentrations(bottom, OUTCOME_OBS, counts)
                breakdown = evaluate_policies(working, q)
                choice = select_policy([g.total for g in breakdown], bottom.gamma, rng)
                policy = bottom.policies[choice.chosen]
                prior = predict_for_policy(bottom, q, policy[:1])[0].qs
                process = int(policy[0, PROCESS])
                outcome = env.emit_outcome(process)
                obs = [None] * len(bottom.modalities)
                obs[PROCESS_OBS], obs[OUTCOME_OBS], obs[CUE_OBS] = process, outcome, cue
                q = infer_states(bottom, obs, prior)
                vfe.append(compute_vfe(bottom, q, obs, prior).total)
                events.append(LearningEvent.observed(OUTCOME_OBS, outcome, n_o, q, step))
                processes.append(process)
                outcomes.append(outcome)
                efe.append(breakdown)
            self.bottom = learn_trial(self.bottom, events)
        except Exception as exc:
            raise TrialError(f"iteration {iteration}, trial {trial} (industry {env.industry}): {exc}") from exc
        return TrialRecord(
            iteration=iteration, trial=trial, industry=env.industry, cue=cue,
            top_posterior=q_top, processes=processes, outcomes=outcomes,
            efe=efe, vfe=vfe, a_hash=concentration_hash(self.concentrations),
        )
