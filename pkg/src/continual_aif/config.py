"""Scenario configuration: TOML loading, validation, and the built-in scenarios.

Indices in configuration files are zero-based: industry 0 is "Industry 1"
and outcome 0 is "Excellent".
"""

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .environment import SCHEDULES, ChangeEvent, derange_industries, generate_truth_grid
from .model import LIKELIHOOD_MODES

SCENARIO_NAMES = ("env1", "env2", "env3")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors, path=None):
        self.errors = list(errors)
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(where + "; ".join(self.errors))


class ConfigParseError(ConfigError):
    pass


@dataclass(frozen=True)
class Dims:
    industries: int = 16
    processes: int = 4
    outcomes: int = 5


@dataclass(frozen=True)
class Hyper:
    eta: float = 1.0
    omega: float = 1.0
    gamma: float = 16.0
    a0: float = 0.25
    likelihood_mode: str = "expected-log"
    cue_accuracy: float = 1.0


@dataclass
class ScenarioConfig:
    name: str
    truth: np.ndarray                        # (industries, processes) outcome indices
    dims: Dims = field(default_factory=Dims)
    hyper: Hyper = field(default_factory=Hyper)
    changes: list = field(default_factory=list)
    iterations: int = 10
    start_iteration: int = 1
    steps_per_trial: int = 4
    schedule: str = "round-robin"
    cue_noise: float = 0.0
    score_industries: list = None            # None scores every industry
    seed: int = 0
    output: str = None

    def model_kwargs(self):
        d, h = self.dims, self.hyper
        return dict(industries=d.industries, processes=d.processes, outcomes=d.outcomes,
                    eta=h.eta, omega=h.omega, gamma=h.gamma, a0=h.a0,
                    likelihood_mode=h.likelihood_mode, cue_accuracy=h.cue_accuracy)

    @property
    def scope_label(self):
        if self.score_industries is None:
            return "all"
        return "+".join(f"industry_{j + 1}" for j in self.score_industries)


_TOP_KEYS = {"name", "seed", "iterations", "start_iteration", "steps_per_trial", "schedule",
             "output", "dims", "hyper", "environment", "scoring", "truth", "changes"}


def _check_keys(table, allowed, where, errors):
    for key in table:
        if key not in allowed:
            errors.append(f"{where}: unknown key {key!r}")


def _number(table, key, where, errors, default, kind=float, check=None, msg=""):
    value = table.get(key, default)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        errors.append(f"{where}.{key}: expected an integer, got {value!r}")
        return default
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        errors.append(f"{where}.{key}: expected a number, got {value!r}")
        return default
    if check is not None and not check(value):
        errors.append(f"{where}.{key}: {msg} (got {value!r})")
    return kind(value)


def config_from_dict(doc, errors=None):
    """Build a ``ScenarioConfig`` from a parsed document, collecting all errors."""
    errors = [] if errors is None else errors
    _check_keys(doc, _TOP_KEYS, "config", errors)

    raw_dims = doc.get("dims", {})
    _check_keys(raw_dims, {"industries", "processes", "outcomes"}, "dims", errors)
    pos = lambda v: v >= 1  # noqa: E731
    dims = Dims(*(
        _number(raw_dims, k, "dims", errors, getattr(Dims, k), int, pos, "must be >= 1")
        for k in ("industries", "processes", "outcomes")
    ))

    raw_hyper = doc.get("hyper", {})
    _check_keys(raw_hyper, set(Hyper.__dataclass_fields__), "hyper", errors)
    mode = raw_hyper.get("likelihood_mode", Hyper.likelihood_mode)
    if mode not in LIKELIHOOD_MODES:
        errors.append(f"hyper.likelihood_mode: must be one of {LIKELIHOOD_MODES} (got {mode!r})")
    hyper = Hyper(
        eta=_number(raw_hyper, "eta", "hyper", errors, Hyper.eta, float, lambda v: v >= 0, "must be >= 0"),
        omega=_number(raw_hyper, "omega", "hyper", errors, Hyper.omega, float, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        gamma=_number(raw_hyper, "gamma", "hyper", errors, Hyper.gamma, float, lambda v: v >= 0, "must be >= 0"),
        a0=_number(raw_hyper, "a0", "hyper", errors, Hyper.a0, float, lambda v: v > 0, "must be > 0"),
        likelihood_mode=mode,
        cue_accuracy=_number(raw_hyper, "cue_accuracy", "hyper", errors, Hyper.cue_accuracy, float,
                             lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    )

    raw_env = doc.get("environment", {})
    _check_keys(raw_env, {"cue_noise"}, "environment", errors)
    cue_noise = _number(raw_env, "cue_noise", "environment", errors, 0.0, float,
                        lambda v: 0 <= v < 1, "must lie in [0, 1)")

    iterations = _number(doc, "iterations", "config", errors, 10, int, pos, "must be >= 1")
    start = _number(doc, "start_iteration", "config", errors, 1, int, pos, "must be >= 1")
    steps = _number(doc, "steps_per_trial", "config", errors, 4, int, lambda v: v >= 0, "must be >= 0")
    seed = _number(doc, "seed", "config", errors, 0, int, lambda v: v >= 0, "must be >= 0")
    schedule = doc.get("schedule", "round-robin")
    if schedule not in SCHEDULES:
        errors.append(f"config.schedule: must be one of {SCHEDULES} (got {schedule!r})")
    name = str(doc.get("name", "scenario"))
    output = doc.get("output")

    truth = _parse_truth(doc.get("truth"), dims, errors)
    changes = _parse_changes(doc.get("changes", []), dims, start, errors)

    raw_scoring = doc.get("scoring", {})
    _check_keys(raw_scoring, {"industries"}, "scoring", errors)
    score = raw_scoring.get("industries", "all")
    score_industries = None
    if score != "all":
        if not isinstance(score, list) or not score:
            errors.append("scoring.industries: expected \"all\" or a non-empty list of industry indices")
        else:
            for j in score:
                if not isinstance(j, int) or not 0 <= j < dims.industries:
                    errors.append(f"scoring.industries: industry {j!r} out of range 0..{dims.industries - 1}")
            score_industries = sorted(set(j for j in score if isinstance(j, int)))

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(
        name=name, truth=truth, dims=dims, hyper=hyper, changes=changes,
        iterations=iterations, start_iteration=start, steps_per_trial=steps,
        schedule=schedule, cue_noise=cue_noise, score_industries=score_industries,
        seed=seed, output=output,
    )


def _parse_truth(raw, dims, errors):
    if raw is None:
        errors.append("truth: missing [truth] table with an 'outcomes' grid")
        return None
    _check_keys(raw, {"outcomes"}, "truth", errors)
    grid = raw.get("outcomes")
    if not isinstance(grid, list) or len(grid) != dims.industries:
        errors.append(f"truth.outcomes: expected {dims.industries} rows, one per industry")
        return None
    ok = True
    for j, row in enumerate(grid):
        if not isinstance(row, list) or len(row) != dims.processes:
            errors.append(f"truth.outcomes[{j}]: expected {dims.processes} entries, one per process")
            ok = False
            continue
        for k, o in enumerate(row):
            if isinstance(o, bool) or not isinstance(o, int) or not 0 <= o < dims.outcomes:
                errors.append(f"truth.outcomes[{j}][{k}]: outcome {o!r} out of range 0..{dims.outcomes - 1}")
                ok = False
    return np.array(grid, dtype=int) if ok else None


def _parse_changes(raw, dims, start, errors):
    if not isinstance(raw, list):
        errors.append("changes: expected an array of tables")
        return []
    events = []
    for n, ch in enumerate(raw):
        where = f"changes[{n}]"
        _check_keys(ch, {"at_iteration", "cells"}, where, errors)
        at = _number(ch, "at_iteration", where, errors, start, int, lambda v: v >= start,
                     f"must be >= start_iteration ({start})")
        patch = {}
        for c, cell in enumerate(ch.get("cells", [])):
            cw = f"{where}.cells[{c}]"
            _check_keys(cell, {"industry", "process", "outcome", "probs"}, cw, errors)
            j, k = cell.get("industry"), cell.get("process")
            bad = False
            if not isinstance(j, int) or not 0 <= j < dims.industries:
                errors.append(f"{cw}: industry {j!r} out of range 0..{dims.industries - 1}")
                bad = True
            if not isinstance(k, int) or not 0 <= k < dims.processes:
                errors.append(f"{cw}: process {k!r} out of range 0..{dims.processes - 1}")
                bad = True
            if ("outcome" in cell) == ("probs" in cell):
                errors.append(f"{cw}: give exactly one of 'outcome' or 'probs'")
                continue
            if "outcome" in cell:
                o = cell["outcome"]
                if not isinstance(o, int) or not 0 <= o < dims.outcomes:
                    errors.append(f"{cw}: outcome {o!r} out of range 0..{dims.outcomes - 1}")
                    continue
                probs = np.eye(dims.outcomes)[o]
            else:
                probs = np.asarray(cell["probs"], dtype=float)
                if probs.shape != (dims.outcomes,) or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-9:
                    errors.append(f"{cw}: probs must be a distribution over {dims.outcomes} outcomes")
                    continue
            if not bad:
                patch[(j, k)] = probs
        events.append(ChangeEvent(at, patch))
    return events


def parse_config(text, path=None):
    if not text.strip():
        raise ConfigParseError(["parse error: configuration file is empty"], path)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError([f"parse error: {exc}"], path) from exc
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(exc.errors, path) from None


def load_config(path):
    """Read and validate a scenario file.

    Raises ``ConfigParseError`` for malformed TOML (message carries the line)
    and ``ConfigError`` listing every validation problem otherwise.
    """
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def _fmt_float(x):
    return repr(float(x))


def dump_config(config):
    """Serialize a config to the TOML layout used by the shipped scenarios."""
    d, h = config.dims, config.hyper
    lines = [
        f'name = "{config.name}"',
        f"seed = {config.seed}",
        f"iterations = {config.iterations}",
        f"start_iteration = {config.start_iteration}",
        f"steps_per_trial = {config.steps_per_trial}",
        f'schedule = "{config.schedule}"',
    ]
    if config.output is not None:
        lines.append(f'output = "{config.output}"')
    lines += [
        "",
        "[dims]",
        f"industries = {d.industries}",
        f"processes = {d.processes}",
        f"outcomes = {d.outcomes}",
        "",
        "[hyper]",
        f"eta = {_fmt_float(h.eta)}",
        f"omega = {_fmt_float(h.omega)}",
        f"gamma = {_fmt_float(h.gamma)}",
        f"a0 = {_fmt_float(h.a0)}",
        f'likelihood_mode = "{h.likelihood_mode}"',
        f"cue_accuracy = {_fmt_float(h.cue_accuracy)}",
        "",
        "[environment]",
        f"cue_noise = {_fmt_float(config.cue_noise)}",
        "",
        "[scoring]",
        "industries = " + ('"all"' if config.score_industries is None
                           else "[" + ", ".join(str(j) for j in config.score_industries) + "]"),
        "",
        "# outcome index per (industry, process); 0 = Excellent ... 4 = Terrible",
        "[truth]",
        "outcomes = [",
    ]
    for j, row in enumerate(config.truth):
        lines.append("  [" + ", ".join(str(int(o)) for o in row) + f"],  # industry {j + 1}")
    lines.append("]")
    for ev in config.changes:
        lines += ["", "[[changes]]", f"at_iteration = {ev.at_iteration}", "cells = ["]
        for (j, k) in ev.cells():
            probs = ev.patch[(j, k)]
            if np.count_nonzero(probs) == 1 and probs.max() == 1.0:
                lines.append(f"  {{ industry = {j}, process = {k}, outcome = {int(probs.argmax())} }},")
            else:
                ps = ", ".join(_fmt_float(p) for p in probs)
                lines.append(f"  {{ industry = {j}, process = {k}, probs = [{ps}] }},")
        lines.append("]")
    return "\n".join(lines) + "\n"


# forgetting rate for the post-shift scenarios (applied once per trial)
SHIFT_OMEGA = 0.985
ENV3_INDUSTRIES = 10


def _derangement_event(grid, industries, outcomes, at_iteration, seed):
    cells = derange_industries(grid, industries, np.random.default_rng(seed))
    return ChangeEvent(at_iteration, {c: np.eye(outcomes)[o] for c, o in cells.items()})


def builtin_scenarios():
    """The three-environment relearning protocol as configs keyed by name."""
    dims = Dims()
    grid = generate_truth_grid(dims.industries, dims.processes, dims.outcomes, seed=0)
    env1 = ScenarioConfig(name="env1", truth=grid, dims=dims, iterations=10)
    shift = replace(Hyper(), omega=SHIFT_OMEGA)
    env2 = ScenarioConfig(
        name="env2", truth=grid.copy(), dims=dims, hyper=shift, iterations=20, start_iteration=11,
        changes=[_derangement_event(grid, [0], dims.outcomes, 11, seed=1)],
        score_industries=[0],
    )
    env3 = ScenarioConfig(
        name="env3", truth=grid.copy(), dims=dims, hyper=shift, iterations=20, start_iteration=11,
        changes=[_derangement_event(grid, range(ENV3_INDUSTRIES), dims.outcomes, 11, seed=2)],
    )
    return {"env1": env1, "env2": env2, "env3": env3}


def shipped_scenario_path(name):
    """Path of a scenario file bundled with the package."""
    return Path(str(resources.files(__package__) / "scenarios" / f"{name}.toml"))


def load_shipped(name):
    return load_config(shipped_scenario_path(name))
