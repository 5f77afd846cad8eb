"""Mamdani fuzzy inference.

Rules are pure conjunctions. Rule activation is the minimum of its antecedent
degrees, each consequent set is clipped at its activation, clipped sets are
combined by pointwise maximum on the output grid and the crisp result is the
discrete centroid ``sum(x * mu) / sum(mu)``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NoRuleFiredError

MF_KINDS = ("triangular", "trapezoidal")
CHUNK = 1024
# cache key lattice: levels per input universe (output sensitivity reaches ~20 per unit input)
CACHE_LEVELS = 10_000


@dataclass(frozen=True)
class MembershipFunction:
    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind not in MF_KINDS:
            raise ConfigError(f"unknown membership function kind {self.kind!r}")
        expected = 3 if self.kind == "triangular" else 4
        if len(params) != expected:
            raise ConfigError(f"{self.kind} membership function takes {expected} parameters, got {len(params)}")
        if any(b < a for a, b in zip(params, params[1:])):
            raise ConfigError(f"membership function parameters must be non-decreasing: {params}")

    @classmethod
    def triangular(cls, a, b, c) -> "MembershipFunction":
        return cls("triangular", (a, b, c))

    @classmethod
    def trapezoidal(cls, a, b, c, d) -> "MembershipFunction":
        return cls("trapezoidal", (a, b, c, d))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        p = self.params
        return (p[0], p[1], p[1], p[2]) if self.kind == "triangular" else p

    @property
    def support(self) -> tuple[float, float]:
        return self.params[0], self.params[-1]

    def __call__(self, x):
        a, b, c, d = self.corners
        x = np.asarray(x, dtype=float)
        y = np.where((x >= b) & (x <= c), 1.0, 0.0)
        if b > a:
            rise = (x > a) & (x < b)
            y = np.where(rise, (x - a) / (b - a), y)
        if d > c:
            fall = (x > c) & (x < d)
            y = np.where(fall, (d - x) / (d - c), y)
        return float(y) if y.ndim == 0 else y


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    universe: tuple[float, float]
    terms: Mapping[str, MembershipFunction]
    resolution: float = 0.01

    def __post_init__(self):
        lo, hi = (float(v) for v in self.universe)
        object.__setattr__(self, "universe", (lo, hi))
        object.__setattr__(self, "terms", dict(self.terms))
        if not hi > lo:
            raise ConfigError(f"variable {self.name!r}: universe must satisfy lo < hi")
        if not self.terms:
            raise ConfigError(f"variable {self.name!r}: no terms")
        if not 0 < self.resolution <= hi - lo:
            raise ConfigError(f"variable {self.name!r}: bad resolution {self.resolution}")
        probe = np.union1d(self.grid, [p for mf in self.terms.values() for p in mf.params if lo <= p <= hi])
        if np.any(self.degrees(probe).max(axis=1) <= 0):
            raise ConfigError(f"variable {self.name!r}: terms do not cover the whole universe")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.terms)

    @property
    def grid(self) -> np.ndarray:
        lo, hi = self.universe
        return np.linspace(lo, hi, int(round((hi - lo) / self.resolution)) + 1)

    def clamp(self, x):
        return np.clip(x, *self.universe)

    def degrees(self, x) -> np.ndarray:
        """Membership of each value in each term, shape ``(len(x), n_terms)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([mf(x) for mf in self.terms.values()], axis=1)

    def with_resolution(self, resolution: float) -> "LinguisticVariable":
        return LinguisticVariable(self.name, self.universe, self.terms, resolution)


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple((str(v), str(t)) for v, t in self.antecedent))
        object.__setattr__(self, "consequent", (str(self.consequent[0]), str(self.consequent[1])))
        if not self.antecedent:
            raise ConfigError("a rule needs at least one antecedent")
        names = [v for v, _ in self.antecedent]
        if len(set(names)) != len(names):
            raise ConfigError(f"rule mentions a variable twice: {self.antecedent}")

    def __str__(self) -> str:
        lhs = " & ".join(f"{v}[{t!r}]" for v, t in self.antecedent)
        return f"IF {lhs} THEN {self.consequent[0]}[{self.consequent[1]!r}]"


@dataclass(frozen=True)
class RuleBase:
    rules: tuple[FuzzyRule, ...]

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def without(self, index: int) -> "RuleBase":
        return RuleBase(self.rules[:index] + self.rules[index + 1:])


@dataclass
class RulebaseReport:
    total: int
    covered: int
    missing: list[tuple[str, ...]] = field(default_factory=list)
    duplicates: list[tuple[str, ...]] = field(default_factory=list)
    invalid: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.missing and not self.duplicates and not self.invalid

    def __str__(self) -> str:
        s = f"{self.covered}/{self.total} combinations covered, {len(self.missing)} missing, {len(self.duplicates)} duplicated"
        if self.invalid:
            s += f", {len(self.invalid)} invalid"
        return s


def validate_rulebase(rulebase: RuleBase, input_variables: Sequence[LinguisticVariable]) -> RulebaseReport:
    """Check that every combination of input labels is covered by exactly one rule.

    A rule that leaves a variable out covers all of that variable's labels.
    """
    by_name = {v.name: v for v in input_variables}
    invalid = []
    counts: Counter = Counter()
    for rule in rulebase:
        spec = dict(rule.antecedent)
        bad = [f"{v}[{t!r}]" for v, t in rule.antecedent if v not in by_name or t not in by_name[v].terms]
        if bad:
            invalid.append(f"{rule}: unknown {', '.join(bad)}")
            continue
        choices = [[spec[v.name]] if v.name in spec else list(v.labels) for v in input_variables]
        counts.update(itertools.product(*choices))
    everything = list(itertools.product(*(v.labels for v in input_variables)))
    missing = [c for c in everything if counts[c] == 0]
    duplicates = [c for c in everything if counts[c] > 1]
    return RulebaseReport(len(everything), len(everything) - len(missing), missing, duplicates, invalid)


class FuzzySystem:
    """A rule base bound to its input and output variables, ready for batch evaluation."""

    def __init__(self, inputs: Sequence[LinguisticVariable], output: LinguisticVariable, rulebase: RuleBase):
        self.inputs = tuple(inputs)
        self.output = output
        self.rulebase = rulebase
        names = [v.name for v in self.inputs]
        if len(set(names)) != len(names):
            raise ConfigError("input variable names must be unique")
        if not len(rulebase):
            raise ConfigError("rule base is empty")
        by_name = {v.name: v for v in self.inputs}
        # per input: the term column each rule reads (n_terms means "not mentioned": degree 1)
        self._term_idx = {v.name: np.full(len(rulebase), len(v.terms), dtype=np.int64) for v in self.inputs}
        self._consequent = np.empty(len(rulebase), dtype=np.int64)
        out_labels = list(output.labels)
        for r, rule in enumerate(rulebase):
            for var, label in rule.antecedent:
                if var not in by_name:
                    raise ConfigError(f"{rule}: unknown input variable {var!r}")
                if label not in by_name[var].terms:
                    raise ConfigError(f"{rule}: variable {var!r} has no term {label!r}")
                self._term_idx[var][r] = list(by_name[var].labels).index(label)
            cvar, clabel = rule.consequent
            if cvar != output.name or clabel not in output.terms:
                raise ConfigError(f"{rule}: consequent must be a term of output {output.name!r}")
            self._consequent[r] = out_labels.index(clabel)
        self._grid = output.grid
        self._out_mf = np.stack([mf(self._grid) for mf in output.terms.values()])

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.inputs)

    def activations(self, inputs: Mapping[str, np.ndarray]) -> np.ndarray:
        """Per-rule firing strength, shape ``(n, n_rules)``."""
        act = None
        for var in self.inputs:
            x = var.clamp(np.atleast_1d(np.asarray(inputs[var.name], dtype=float)))
            deg = var.degrees(x)
            deg = np.concatenate([deg, np.ones((deg.shape[0], 1))], axis=1)
            col = deg[:, self._term_idx[var.name]]
            act = col if act is None else np.minimum(act, col)
        return act

    def _evaluate_chunk(self, inputs: Mapping[str, np.ndarray]) -> np.ndarray:
        act = self.activations(inputs)
        n_out = self._out_mf.shape[0]
        term_act = np.zeros((act.shape[0], n_out))
        for t in range(n_out):
            mask = self._consequent == t
            if mask.any():
                term_act[:, t] = act[:, mask].max(axis=1)
        mu = np.zeros((act.shape[0], self._grid.size))
        for t in range(n_out):
            np.maximum(mu, np.minimum(term_act[:, t:t + 1], self._out_mf[t]), out=mu)
        area = mu.sum(axis=1)
        if np.any(area <= 0):
            bad = int(np.flatnonzero(area <= 0)[0])
            point = {k: float(np.asarray(v)[bad]) for k, v in inputs.items()}
            raise NoRuleFiredError(f"no rule fired for inputs {point}")
        return (mu * self._grid).sum(axis=1) / area

    def evaluate(self, inputs: Mapping[str, np.ndarray], *, workers: int = 1, cache: bool = False) -> np.ndarray:
        """Crisp outputs for arrays of inputs (one array per input variable).

        With ``cache`` each input is snapped to a lattice of ``CACHE_LEVELS``
        steps across its universe and each distinct tuple is evaluated once.
        Work is split into fixed-size chunks, so ``workers`` never changes the
        result.
        """
        missing = [n for n in self.input_names if n not in inputs]
        if missing:
            raise ConfigError(f"missing fuzzy input {missing[0]!r}")
        cols = [np.atleast_1d(np.asarray(inputs[n], dtype=float)) for n in self.input_names]
        n = cols[0].shape[0]
        if any(c.shape != (n,) for c in cols):
            raise ConfigError("fuzzy inputs must be equal-length 1-d arrays")
        if n == 0:
            return np.empty(0)
        inverse = None
        if cache:
            keys = []
            for var, c in zip(self.inputs, cols):
                lo, hi = var.universe
                step = (hi - lo) / CACHE_LEVELS
                keys.append(lo + np.round((var.clamp(c) - lo) / step) * step)
            stacked, inverse = np.unique(np.stack(keys, axis=1), axis=0, return_inverse=True)
            cols = list(stacked.T)
            n = stacked.shape[0]
        chunks = [
            {name: c[s:s + CHUNK] for name, c in zip(self.input_names, cols)} for s in range(0, n, CHUNK)
        ]
        if workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(self._evaluate_chunk, chunks))
        else:
            parts = [self._evaluate_chunk(c) for c in chunks]
        out = np.concatenate(parts)
        return out if inverse is None else out[inverse.reshape(-1)]

    def infer(self, inputs: Mapping[str, float]) -> float:
        return float(self.evaluate({k: [v] for k, v in inputs.items()})[0])


def infer(rulebase: RuleBase, inputs: Mapping[str, float], output: LinguisticVariable,
          input_variables: Sequence[LinguisticVariable]) -> float:
    """Crisp Mamdani output for a single set of input values."""
    return FuzzySystem(input_variables, output, rulebase).infer(inputs)
