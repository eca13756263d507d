"""Experiment configuration: JSON loading and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..dbgen import DEFAULT_MEMORY_BUDGET, check_budget
from ..errors import DBMatchError, GammaOutOfRange, ParseError, ValidationError
from ..markov_model import MarkovParams, validate_params
from ..matching import MatcherConfig, MatchMethod
from ..repetition import RepetitionDistribution

DETECTION_MODES = ("strict", "resolve")


@dataclass(frozen=True)
class Cell:
    """One sweep point: a database height and a repetition distribution."""

    m: int
    repetition: RepetitionDistribution

    @property
    def delta(self) -> float:
        return self.repetition.delta()


@dataclass(frozen=True)
class ExperimentConfig:
    markov: MarkovParams
    repetitions: tuple
    n: int
    m_values: tuple
    trials: int
    master_seed: int
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    marked_symbol: int = 1
    detection: str = "resolve"
    growth_rates: tuple | None = None
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    @property
    def repetition(self) -> RepetitionDistribution:
        return self.repetitions[0]

    def cells(self) -> list[Cell]:
        return [Cell(m, rep) for rep in self.repetitions for m in self.m_values]


def m_from_rate(rate: float, n: int) -> int:
    return int(round(2.0 ** (n * rate)))


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ValidationError(f"{path}{key}", "missing required field")
    return d[key]


def _int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(path, f"must be >= {minimum}, got {value}")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _number_list(value, path: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ValidationError(path, "expected a non-empty array of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _repetition(obj, path: str) -> RepetitionDistribution:
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object with 'probs'")
    probs = _number_list(_require(obj, "probs", f"{path}."), f"{path}.probs")
    try:
        return RepetitionDistribution(tuple(probs))
    except DBMatchError as exc:
        raise ValidationError(f"{path}.probs", str(exc)) from None


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ValidationError("<root>", "expected a JSON object")

    mk = _require(d, "markov", "")
    if not isinstance(mk, dict):
        raise ValidationError("markov", "expected an object")
    gamma = _number(_require(mk, "gamma", "markov."), "markov.gamma")
    u = _number_list(_require(mk, "u", "markov."), "markov.u")
    try:
        markov = validate_params(gamma, u)
    except DBMatchError as exc:
        field_name = "markov.gamma" if isinstance(exc, GammaOutOfRange) else "markov.u"
        raise ValidationError(field_name, str(exc)) from None

    rep = _require(d, "repetition", "")
    if isinstance(rep, list):
        if not rep:
            raise ValidationError("repetition", "expected at least one distribution")
        repetitions = tuple(_repetition(r, f"repetition[{i}]") for i, r in enumerate(rep))
    else:
        repetitions = (_repetition(rep, "repetition"),)

    n = _int(_require(d, "n", ""), "n", 1)
    if ("growth_rates" in d) == ("m_list" in d):
        raise ValidationError("growth_rates", "give exactly one of 'growth_rates' or 'm_list'")
    growth_rates = None
    if "growth_rates" in d:
        growth_rates = tuple(_number_list(d["growth_rates"], "growth_rates"))
        m_values = []
        for i, r in enumerate(growth_rates):
            if r < 0:
                raise ValidationError(f"growth_rates[{i}]", f"must be >= 0, got {r}")
            m_values.append(m_from_rate(r, n))
    else:
        ms = d["m_list"]
        if not isinstance(ms, list) or not ms:
            raise ValidationError("m_list", "expected a non-empty array of integers")
        m_values = [_int(v, f"m_list[{i}]", 1) for i, v in enumerate(ms)]

    budget = _int(d.get("memory_budget_bytes", DEFAULT_MEMORY_BUDGET), "memory_budget_bytes", 1)
    for i, m in enumerate(m_values):
        key = f"growth_rates[{i}]" if growth_rates else f"m_list[{i}]"
        if m < 1:
            raise ValidationError(key, f"derived m={m} is below 1")
        try:
            check_budget(m, n, budget)
        except DBMatchError as exc:
            raise ValidationError(key, str(exc)) from None

    trials = _int(_require(d, "trials", ""), "trials", 1)
    seed = _int(_require(d, "master_seed", ""), "master_seed", 0)
    if seed >= 1 << 64:
        raise ValidationError("master_seed", "must fit in 64 bits")

    mt = d.get("matcher", {})
    if not isinstance(mt, dict):
        raise ValidationError("matcher", "expected an object")
    method = mt.get("method", "consistency")
    if method not in {m.value for m in MatchMethod}:
        raise ValidationError("matcher.method", f"unknown method {method!r}")
    epsilon = _number(mt.get("epsilon", 0.1), "matcher.epsilon")
    if method == MatchMethod.TYPICALITY.value and not epsilon > 0:
        raise ValidationError("matcher.epsilon", "must be > 0")
    delta_t = mt.get("delta_for_typicality")
    if delta_t is not None:
        delta_t = _number(delta_t, "matcher.delta_for_typicality")
        if not 0 <= delta_t <= 1:
            raise ValidationError("matcher.delta_for_typicality", "must lie in [0, 1]")
    matcher = MatcherConfig(method, epsilon, delta_t)

    marked = _int(d.get("marked_symbol", 1), "marked_symbol", 1)
    if marked > markov.alphabet_size:
        raise ValidationError("marked_symbol", f"must be <= alphabet size {markov.alphabet_size}")
    detection = d.get("detection", "resolve")
    if detection not in DETECTION_MODES:
        raise ValidationError("detection", f"expected one of {DETECTION_MODES}, got {detection!r}")

    return ExperimentConfig(
        markov=markov,
        repetitions=repetitions,
        n=n,
        m_values=tuple(m_values),
        trials=trials,
        master_seed=seed,
        matcher=matcher,
        marked_symbol=marked,
        detection=detection,
        growth_rates=growth_rates,
        memory_budget=budget,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(data)
