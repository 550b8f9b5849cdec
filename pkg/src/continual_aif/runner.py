"""Seeded experiment execution and result files.

Randomness is drawn from per-iteration streams derived from
``(seed, iteration, stream)``, so a run resumed at iteration ``t`` with the
carried concentrations replays exactly what a continuous run would do.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import HierarchicalAgent
from .config import builtin_scenarios, dump_config
from .environment import Environment, GroundTruth
from .model import OUTCOME_OBS
from .scoring import scope_pairs, total_score

log = logging.getLogger(__name__)

ENV_STREAM, POLICY_STREAM = 0, 1


@dataclass
class RunResult:
    config: object
    iterations: list     # absolute iteration numbers
    reports: list        # one ScoreReport per iteration
    trials: list         # TrialRecords
    final_a: np.ndarray
    duration: float

    def score_series(self, which="scope"):
        """Normalized totals per iteration: "scope", "all", or an industry index."""
        if which == "scope":
            return [r.total_norm for r in self.reports]
        if which == "all":
            return [float(r.norm.sum()) for r in self.reports]
        return [r.industry_total(which) for r in self.reports]


def iteration_rngs(seed, iteration):
    return (np.random.default_rng([seed, iteration, ENV_STREAM]),
            np.random.default_rng([seed, iteration, POLICY_STREAM]))


def run_experiment(config, carry=None, seed=None):
    """Run every iteration of ``config``.

    Parameters
    ----------
    config : ScenarioConfig
    carry : ndarray, optional
        Outcome concentrations ``a[outcome, industry, process]`` from an
        earlier run; the agent starts from these instead of ``a0``.
    seed : int, optional
        Overrides ``config.seed``.
    """
    seed = config.seed if seed is None else seed
    started = time.perf_counter()
    agent = HierarchicalAgent.from_hyper(config.steps_per_trial, **config.model_kwargs())
    if carry is not None:
        agent.load_concentrations(carry)
    truth = GroundTruth.from_grid(config.truth, config.dims.outcomes, config.cue_noise)
    env = Environment(truth, config.schedule, pending=list(config.changes))
    scope = scope_pairs(config.dims.industries, config.dims.processes, config.score_industries)

    iterations, reports, trials = [], [], []
    for it in range(config.start_iteration, config.start_iteration + config.iterations):
        env.rng, policy_rng = iteration_rngs(seed, it)
        for ev in env.apply_changes(it):
            log.info("iteration %d: applied change to %d cells", it, len(ev.patch))
        for t, j in enumerate(env.industry_order()):
            env.set_industry(j)
            trials.append(agent.run_trial(env, it, policy_rng, t))
        report = total_score(agent.concentrations, env.truth, scope)
        iterations.append(it)
        reports.append(report)
        log.debug("iteration %d: %s score %.4f", it, config.scope_label, report.total_norm)
    return RunResult(config, iterations, reports, trials, agent.concentrations.copy(),
                     time.perf_counter() - started)


def paper_protocol(seed=0, scenarios=None):
    """env1, then env2 and env3 each continuing from env1's final concentrations."""
    scenarios = builtin_scenarios() if scenarios is None else scenarios
    env1 = run_experiment(scenarios["env1"], seed=seed)
    env2 = run_experiment(scenarios["env2"], carry=env1.final_a, seed=seed)
    env3 = run_experiment(scenarios["env3"], carry=env1.final_a, seed=seed)
    return {"env1": env1, "env2": env2, "env3": env3}


SCORES_HEADER = ["iteration", "scope", "total_raw", "total_norm"]
TRIALS_HEADER = ["iteration", "trial", "industry", "cue", "top_industry", "top_confidence",
                 "processes", "outcomes", "vfe", "efe", "a_hash"]


def _join(values):
    return ";".join(str(v) for v in values)


def write_results(result, out_dir):
    """Write scores.csv, trials.csv, plot_score.csv, final_a.json and config.toml."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        n_j = result.config.dims.industries
        with open(out / "scores.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCORES_HEADER + [f"industry_{j + 1}" for j in range(n_j)])
            for it, r in zip(result.iterations, result.reports):
                w.writerow([it, result.config.scope_label, repr(r.total_raw), repr(r.total_norm)]
                           + [repr(float(x)) for x in r.per_industry])

        with open(out / "plot_score.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "scope", "industry_1", "all"])
            for it, r in zip(result.iterations, result.reports):
                w.writerow([it, repr(r.total_norm), repr(r.industry_total(0)), repr(float(r.norm.sum()))])

        with open(out / "trials.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRIALS_HEADER)
            for rec in result.trials:
                efe = [[[g.risk, g.ambiguity, g.novelty, g.total] for g in step] for step in rec.efe]
                w.writerow([
                    rec.iteration, rec.trial, rec.industry, rec.cue,
                    int(np.argmax(rec.top_posterior)), repr(float(np.max(rec.top_posterior))),
                    _join(rec.processes), _join(rec.outcomes), _join(repr(v) for v in rec.vfe),
                    json.dumps(efe), rec.a_hash,
                ])

        (out / "final_a.json").write_text(json.dumps(concentration_dump(result.final_a)) + "\n")
        (out / "config.toml").write_text(dump_config(result.config))
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return out


def concentration_dump(a, num_modalities=3):
    """``final_a.json`` payload: a list indexed [modality][outcome][industry][process].

    Modalities without learned concentrations are ``null``.
    """
    dump = [None] * num_modalities
    dump[OUTCOME_OBS] = np.asarray(a).tolist()
    return dump


def load_carry(path):
    """Outcome concentrations from a ``final_a.json`` file."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list) or OUTCOME_OBS >= len(data) or data[OUTCOME_OBS] is None:
        raise ValueError(f"{path}: not a concentration dump")
    a = np.asarray(data[OUTCOME_OBS], dtype=float)
    if a.ndim != 3 or np.any(a <= 0):
        raise ValueError(f"{path}: concentrations must be a positive [outcome][industry][process] array")
    return a


def read_scores(path):
    """Parse scores.csv back into a list of row dicts with numeric fields."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {"iteration": int(row.pop("iteration")), "scope": row.pop("scope")}
            parsed.update({k: float(v) for k, v in row.items()})
            rows.append(parsed)
    return rows
