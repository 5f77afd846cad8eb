"""TOML configuration: parsing, defaults and cross-field validation."""

from __future__ import annotations

import dataclasses
import sys
from collections.abc import Mapping
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .catalog import ItemCatalog
from .copula import OrdinalFeatureSpec
from .errors import ConfigError, FactorizationError
from .fuzzy import FuzzyRule, FuzzySystem, LinguisticVariable, MembershipFunction, RuleBase, validate_rulebase
from .mnl import BetaMatrix, design_columns
from .nominal import THETA_MODES, NominalFeatureSpec
from .primitives import cholesky, validate_correlation
from .ratings import default_rating_rules, default_rating_variables

FUZZY_INPUTS = ("preference", "spread", "bias", "quality")
FUZZY_OUTPUT = "rating"
RESERVED_COLUMNS = {"UserID", "bias", "spread"}


@dataclass(frozen=True)
class GenerationSpec:
    seed: int
    n_users: int
    ordinal_features: tuple[OrdinalFeatureSpec, ...]
    correlation: np.ndarray
    nominal_features: tuple[NominalFeatureSpec, ...]
    theta_mode: str
    preference_categories: tuple[str, ...]
    beta: BetaMatrix
    tau: float
    reference: int
    catalog: ItemCatalog
    noise_density: float
    noise_signed: bool
    ratings_density: float
    cache: bool
    fuzzy_variables: Mapping[str, LinguisticVariable]
    rulebase: RuleBase
    emit_affinity: bool = False
    emit_numeric: bool = False

    def replace(self, **changes) -> "GenerationSpec":
        spec = dataclasses.replace(self, **changes)
        if spec.n_users < 1:
            raise ConfigError("n_users must be at least 1")
        return spec

    def rating_system(self) -> FuzzySystem:
        v = self.fuzzy_variables
        return FuzzySystem([v[name] for name in FUZZY_INPUTS], v[FUZZY_OUTPUT], self.rulebase)

    @property
    def n_items(self) -> int:
        return len(self.catalog)

    def ordinal(self, name: str) -> OrdinalFeatureSpec:
        for spec in self.ordinal_features:
            if spec.name == name:
                return spec
        raise KeyError(name)


def default_config_text() -> str:
    return resources.files("recsynth").joinpath("data/default.toml").read_text(encoding="utf-8")


def load_config(path: str | Path | None = None) -> GenerationSpec:
    """Read and validate a config file; ``None`` or ``"default"`` loads the shipped case study."""
    if path is None or str(path) == "default":
        text, source = default_config_text(), "<default>"
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        source = str(path)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return parse_config(raw)


def load_and_validate_config(path) -> GenerationSpec:
    return load_config(path)


def _need(table: Mapping[str, Any], key: str, where: str):
    if key not in table:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return table[key]


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, FactorizationError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_ordinal(raw: Mapping) -> tuple[tuple[OrdinalFeatureSpec, ...], np.ndarray]:
    features = []
    for i, f in enumerate(_need(raw, "features", "ordinal")):
        where = f"ordinal.features[{i}]"
        features.append(_wrap(where, OrdinalFeatureSpec, str(_need(f, "name", where)),
                              tuple(_need(f, "labels", where)), tuple(_need(f, "cutoffs", where)),
                              f.get("value_ranges")))
    P = _wrap("ordinal.correlation", np.asarray, _need(raw, "correlation", "ordinal"), dtype=float)
    if P.shape != (len(features), len(features)):
        raise ConfigError(
            f"ordinal.correlation: shape {P.shape} does not match {len(features)} ordinal features"
        )
    _wrap("ordinal.correlation", validate_correlation, P)
    _wrap("ordinal.correlation", cholesky, P)
    return tuple(features), P


def _parse_nominal(raw: Mapping, ordinal: tuple[OrdinalFeatureSpec, ...]) -> tuple[tuple[NominalFeatureSpec, ...], str]:
    theta_mode = raw.get("theta_mode", "per_user")
    if theta_mode not in THETA_MODES:
        raise ConfigError(f"nominal.theta_mode: must be one of {THETA_MODES}, got {theta_mode!r}")
    known: dict[str, tuple[str, ...]] = {o.name: o.labels for o in ordinal}
    features = []
    for i, f in enumerate(_need(raw, "features", "nominal")):
        where = f"nominal.features[{i}]"
        name = str(_need(f, "name", where))
        spec = _wrap(where, NominalFeatureSpec, name, tuple(_need(f, "categories", where)),
                     f.get("alpha"), f.get("conditioning"), f.get("alpha_table"))
        if spec.conditioning is not None:
            # only earlier features qualify, which keeps the dependency graph acyclic
            if spec.conditioning not in known:
                raise ConfigError(
                    f"{where}: conditioning feature {spec.conditioning!r} is not an ordinal or earlier nominal feature"
                )
            expected = set(known[spec.conditioning])
            got = set(spec.alpha_table)
            if got != expected:
                gap = sorted(expected - got) or sorted(got - expected)
                raise ConfigError(
                    f"{where}: alpha_table keys must be exactly the categories of {spec.conditioning!r} (check {gap[0]!r})"
                )
        if name in known:
            raise ConfigError(f"{where}: duplicate feature name {name!r}")
        known[name] = spec.categories
        features.append(spec)
    return tuple(features), theta_mode


def _parse_mf(raw: Mapping, where: str) -> MembershipFunction:
    kind = str(_need(raw, "kind", where))
    kind = {"tri": "triangular", "trap": "trapezoidal"}.get(kind, kind)
    return _wrap(where, MembershipFunction, kind, tuple(_need(raw, "params", where)))


def _parse_fuzzy(raw: Mapping) -> tuple[dict[str, LinguisticVariable], RuleBase]:
    variables = default_rating_variables()
    for name, vraw in raw.get("variables", {}).items():
        where = f"fuzzy.variables.{name}"
        if name not in variables:
            raise ConfigError(f"{where}: unknown variable (expected one of {sorted(variables)})")
        base = variables[name]
        terms = {label: _parse_mf(t, f"{where}.terms.{label}") for label, t in vraw.get("terms", {}).items()}
        variables[name] = _wrap(where, LinguisticVariable, name, tuple(vraw.get("universe", base.universe)),
                                terms or base.terms, float(vraw.get("resolution", base.resolution)))
    rules_raw = raw.get("rules", "default")
    if rules_raw == "default":
        rulebase = default_rating_rules()
    else:
        if isinstance(rules_raw, str) or not isinstance(rules_raw, list):
            raise ConfigError('fuzzy.rules: expected "default" or an array of rule tables')
        rules = []
        for i, r in enumerate(rules_raw):
            where = f"fuzzy.rules[{i}]"
            when = _need(r, "when", where)
            rules.append(_wrap(where, FuzzyRule, tuple(when.items()), (FUZZY_OUTPUT, str(_need(r, "then", where)))))
        rulebase = RuleBase(tuple(rules))
    report = validate_rulebase(rulebase, [variables[n] for n in FUZZY_INPUTS])
    if not report.complete:
        detail = (report.invalid[:1] or [f"missing {c}" for c in report.missing[:1]]
                  or [f"duplicated {c}" for c in report.duplicates[:1]])
        raise ConfigError(f"fuzzy.rules: incomplete rule base ({report}); first problem: {detail[0]}")
    _wrap("fuzzy.rules", FuzzySystem, [variables[n] for n in FUZZY_INPUTS], variables[FUZZY_OUTPUT], rulebase)
    return variables, rulebase


def _fraction(value, where: str, *, allow_zero: bool) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    ok = (0.0 <= x <= 1.0) if allow_zero else (0.0 < x <= 1.0)
    if not ok:
        raise ConfigError(f"{where}: must lie in {'[0, 1]' if allow_zero else '(0, 1]'}, got {x}")
    return x


def parse_config(raw: Mapping[str, Any]) -> GenerationSpec:
    """Build a :class:`GenerationSpec` from a parsed TOML document, checking every invariant."""
    seed = int(raw.get("seed", 0))
    if seed < 0:
        raise ConfigError("seed: must be non-negative")
    n_users = int(raw.get("n_users", 100_000))
    if n_users < 1:
        raise ConfigError("n_users: must be at least 1")

    ordinal, P = _parse_ordinal(_need(raw, "ordinal", "config"))
    nominal, theta_mode = _parse_nominal(_need(raw, "nominal", "config"), ordinal)
    names = [f.name for f in ordinal] + [f.name for f in nominal]
    clash = RESERVED_COLUMNS.intersection(names)
    if clash:
        raise ConfigError(f"feature name {sorted(clash)[0]!r} is reserved")

    prefs = _need(raw, "preferences", "config")
    categories = tuple(str(c) for c in _need(prefs, "categories", "preferences"))
    if len(categories) < 2 or len(set(categories)) != len(categories):
        raise ConfigError("preferences.categories: need at least 2 unique categories")
    beta_raw = _need(prefs, "beta", "preferences")
    for row, grades in beta_raw.items():
        if len(grades) != len(categories):
            raise ConfigError(f"preferences.beta.{row}: has {len(grades)} grades for {len(categories)} categories")
    beta = _wrap("preferences.beta", BetaMatrix, tuple(beta_raw), categories, [beta_raw[r] for r in beta_raw])
    beta = _wrap("preferences.beta", beta.aligned_to, design_columns(ordinal, nominal))
    reference = prefs.get("reference", 0)
    if isinstance(reference, str):
        if reference not in categories:
            raise ConfigError(f"preferences.reference: unknown category {reference!r}")
        reference = categories.index(reference)
    if not 0 <= int(reference) < len(categories):
        raise ConfigError(f"preferences.reference: index {reference} out of range")
    tau = float(prefs.get("tau", 0.3))
    if not (np.isfinite(tau) and tau >= 0):
        raise ConfigError("preferences.tau: must be a non-negative number")

    items = _need(_need(raw, "catalog", "config"), "items", "catalog")
    catalog = _wrap("catalog.items", ItemCatalog.from_records,
                    [(_need(it, "id", f"catalog.items[{k}]"), _need(it, "name", f"catalog.items[{k}]"),
                      _need(it, "categories", f"catalog.items[{k}]")) for k, it in enumerate(items)])
    for item in catalog.items:
        unknown = [c for c in item.categories if c not in categories]
        if unknown:
            raise ConfigError(f"catalog.items[{item.item_id}]: category {unknown[0]!r} is not a preference category")

    noise = raw.get("noise", {})
    ratings = raw.get("ratings", {})
    output = raw.get("output", {})
    variables, rulebase = _parse_fuzzy(raw.get("fuzzy", {}))
    return GenerationSpec(
        seed=seed,
        n_users=n_users,
        ordinal_features=ordinal,
        correlation=P,
        nominal_features=nominal,
        theta_mode=theta_mode,
        preference_categories=categories,
        beta=beta,
        tau=tau,
        reference=int(reference),
        catalog=catalog,
        noise_density=_fraction(noise.get("density", 0.01), "noise.density", allow_zero=True),
        noise_signed=bool(noise.get("signed", False)),
        ratings_density=_fraction(ratings.get("density", 0.15), "ratings.density", allow_zero=False),
        cache=bool(ratings.get("cache", False)),
        fuzzy_variables=variables,
        rulebase=rulebase,
        emit_affinity=bool(output.get("emit_affinity", False)),
        emit_numeric=bool(output.get("emit_numeric", False)),
    )
