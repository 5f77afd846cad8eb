"""Descriptive statistics and self-consistency checks for a generated bundle on disk."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .catalog import cell_count
from .config import GenerationSpec
from .copula import bin_probabilities
from .errors import DataError

HIST_BINS = 20
HIST_RANGE = (1.0, 5.0)
CORR_TOL = 0.015
ORDINAL_FREQ_TOL = 0.006
ROW_SUM_TOL = 1e-9


def _read(in_dir: Path, name: str, **kwargs) -> pd.DataFrame:
    path = in_dir / name
    if not path.exists():
        raise DataError(f"missing bundle file {path}")
    try:
        return pd.read_csv(path, float_precision="round_trip", **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError, ValueError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc


def _read_users(in_dir: Path) -> pd.DataFrame:
    users = _read(in_dir, "users.csv", dtype=str, keep_default_na=False)
    if "UserID" not in users.columns:
        raise DataError(f"{in_dir / 'users.csv'} has no UserID column")
    return users


def _read_ratings(in_dir: Path) -> pd.DataFrame:
    ratings = _read(in_dir, "ratings.csv")
    missing = {"userId", "itemId", "rating"} - set(ratings.columns)
    if missing:
        raise DataError(f"ratings.csv lacks column(s) {sorted(missing)}")
    return ratings


@dataclass
class StatsReport:
    n_users: int
    n_items: int
    n_ratings: int
    density: float
    mean: float | None
    minimum: float | None
    maximum: float | None
    histogram: list[int]
    bin_edges: list[float]
    category_frequencies: dict[str, dict[str, float]]
    latent_names: list[str] = field(default_factory=list)
    latent_correlation: list[list[float]] | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        lines = [
            f"users {self.n_users}  items {self.n_items}  ratings {self.n_ratings}",
            f"density {self.density:.4f}",
        ]
        if self.n_ratings:
            lines.append(f"rating mean {self.mean:.2f}  min {self.minimum:.2f}  max {self.maximum:.2f}")
        lines.append("histogram:")
        peak = max(self.histogram) or 1
        for lo, hi, count in zip(self.bin_edges, self.bin_edges[1:], self.histogram):
            lines.append(f"  [{lo:.1f}, {hi:.1f})  {count:8d}  {'#' * round(40 * count / peak)}")
        for feature, freqs in self.category_frequencies.items():
            lines.append(f"{feature}: " + ", ".join(f"{k}={v:.3f}" for k, v in freqs.items()))
        if self.latent_correlation is not None:
            lines.append("latent correlation:")
            width = max(len(n) for n in self.latent_names)
            for name, row in zip(self.latent_names, self.latent_correlation):
                lines.append(f"  {name:>{width}}  " + "  ".join(f"{v:6.3f}" for v in row))
        return "\n".join(lines)


def stats(in_dir) -> StatsReport:
    in_dir = Path(in_dir)
    users = _read_users(in_dir)
    items = _read(in_dir, "items.csv")
    ratings = _read_ratings(in_dir)
    n_users, n_items = len(users), len(items)
    values = ratings["rating"].to_numpy(dtype=float)
    counts, edges = np.histogram(values, bins=HIST_BINS, range=HIST_RANGE)
    cells = n_users * n_items

    skip = {"UserID", "bias", "spread"}
    freqs = {}
    for col in users.columns:
        if col in skip or col.endswith("_value"):
            continue
        vc = users[col].value_counts(normalize=True, sort=False)
        freqs[col] = {str(k): float(vc[k]) for k in sorted(vc.index, key=_natural)}

    names, corr = [], None
    if (in_dir / "latents.csv").exists():
        latents = _read(in_dir, "latents.csv")
        names = [c for c in latents.columns if c != "UserID"]
        if len(latents) > 1:
            corr = np.corrcoef(latents[names].to_numpy(dtype=float), rowvar=False).round(12).tolist()

    return StatsReport(
        n_users=n_users,
        n_items=n_items,
        n_ratings=len(values),
        density=len(values) / cells if cells else 0.0,
        mean=float(values.mean()) if len(values) else None,
        minimum=float(values.min()) if len(values) else None,
        maximum=float(values.max()) if len(values) else None,
        histogram=counts.tolist(),
        bin_edges=edges.tolist(),
        category_frequencies=freqs,
        latent_names=names,
        latent_correlation=corr,
    )


def _natural(key: str):
    return (0, int(key)) if key.lstrip("-").isdigit() else (1, key)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self, prefix: str = "") -> list[Check]:
        return [c for c in self.checks if not c.passed and c.name.startswith(prefix)]

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in self.checks]
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def correlation_tolerance(rho: float, n: int) -> float:
    """±0.015, widened to four standard errors of Pearson's r for small samples."""
    return max(CORR_TOL, 4.0 * (1.0 - rho * rho) / math.sqrt(max(n - 1, 1)))


def proportion_tolerance(p: float, n: int, floor: float = 0.0, extra_var: float = 0.0) -> float:
    return max(floor, 4.0 * math.sqrt(p * (1.0 - p) / max(n, 1) + extra_var))


def validate(in_dir, spec: GenerationSpec) -> ValidationReport:
    """Check a bundle against the statistical contract of ``spec``.

    (a) latent correlations, (b) ordinal category frequencies, (c) nominal
    frequencies per conditioning cell, (d) preference rows on the simplex,
    (e) ratings envelope, exact density and referential integrity.
    """
    in_dir = Path(in_dir)
    checks: list[Check] = []
    users = _read_users(in_dir)
    n = len(users)

    # (a)
    names = [f.name for f in spec.ordinal_features]
    latents = _read(in_dir, "latents.csv")
    if list(latents.columns) != ["UserID", *names] or len(latents) != n:
        checks.append(Check("a:correlation", False, "latents.csv does not match the configured ordinal features"))
    elif n < 3:
        checks.append(Check("a:correlation", True, f"skipped for n={n}"))
    else:
        emp = np.corrcoef(latents[names].to_numpy(dtype=float), rowvar=False)
        worst, detail = 0.0, ""
        ok = True
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                rho = spec.correlation[i, j]
                dev = abs(emp[i, j] - rho)
                tol = correlation_tolerance(rho, n)
                if dev > tol:
                    ok = False
                if dev / tol > worst:
                    worst = dev / tol
                    detail = f"worst pair {names[i]}/{names[j]}: {emp[i, j]:.4f} vs {rho:.4f} (tol {tol:.4f})"
        checks.append(Check("a:correlation", ok, detail))

    # (b)
    for feature in spec.ordinal_features:
        name = f"b:ordinal:{feature.name}"
        if feature.name not in users:
            checks.append(Check(name, False, "column missing from users.csv"))
            continue
        codes = pd.to_numeric(users[feature.name], errors="coerce").to_numpy()
        expected = bin_probabilities(feature)
        observed = np.array([(codes == k).sum() for k in range(1, feature.cardinality + 1)]) / n
        tols = np.array([proportion_tolerance(p, n, ORDINAL_FREQ_TOL) for p in expected])
        dev = np.abs(observed - expected)
        k = int(np.argmax(dev / tols))
        ok = bool(np.all(dev <= tols)) and np.isin(codes, np.arange(1, feature.cardinality + 1)).all()
        checks.append(Check(name, ok, f"worst {feature.labels[k]}: {observed[k]:.4f} vs {expected[k]:.4f} (tol {tols[k]:.4f})"))

    # (c)
    for feature in spec.nominal_features:
        name = f"c:nominal:{feature.name}"
        if feature.name not in users:
            checks.append(Check(name, False, "column missing from users.csv"))
            continue
        labels = users[feature.name].to_numpy()
        unknown = sorted(set(labels) - set(feature.categories))
        if unknown:
            checks.append(Check(name, False, f"unknown label {unknown[0]!r}"))
            continue
        if feature.conditioning is None:
            cells = {None: np.ones(n, dtype=bool)}
        else:
            cond = users[feature.conditioning].to_numpy()
            if feature.conditioning in names:
                labels_of = spec.ordinal(feature.conditioning).labels
                cond = np.array([labels_of[int(c) - 1] for c in cond], dtype=object)
            cells = {v: cond == v for v in feature.alpha_table}
        ok, worst, detail = True, -1.0, "no users"
        for value, mask in cells.items():
            m = int(mask.sum())
            if m == 0:
                continue
            alpha = np.array(feature.resolve(value))
            expected = alpha / alpha.sum()
            # a shared Dirichlet draw adds its own variance around alpha / sum(alpha)
            extra = expected * (1 - expected) / (alpha.sum() + 1) if spec.theta_mode == "per_run" else np.zeros_like(expected)
            for cat, p, ev in zip(feature.categories, expected, extra):
                obs = float((labels[mask] == cat).mean())
                tol = proportion_tolerance(p, m, 0.0, ev)
                if abs(obs - p) > tol:
                    ok = False
                if abs(obs - p) / tol > worst:
                    worst = abs(obs - p) / tol
                    where = "" if value is None else f" | {feature.conditioning}={value}"
                    detail = f"worst {cat}{where}: {obs:.4f} vs {p:.4f} (tol {tol:.4f}, n={m})"
        checks.append(Check(name, ok, detail))

    # (d)
    prefs = _read(in_dir, "preferences.csv")
    cats = list(spec.preference_categories)
    if list(prefs.columns) != ["UserID", *cats] or len(prefs) != n:
        checks.append(Check("d:preferences", False, "preferences.csv does not match users and categories"))
    else:
        P = prefs[cats].to_numpy(dtype=float)
        err = np.abs(P.sum(axis=1) - 1.0)
        ok = bool(np.all(err <= ROW_SUM_TOL) and np.all(P >= 0))
        checks.append(Check("d:preferences", ok, f"max |row sum - 1| = {err.max() if n else 0.0:.2e}"))

    # (e)
    items = _read(in_dir, "items.csv")
    ratings = _read_ratings(in_dir)
    m = len(items)
    target = cell_count(spec.ratings_density, n, m)
    vals = ratings["rating"].to_numpy(dtype=float)
    in_range = bool(np.all((vals > 1.0) & (vals < 5.0)))
    dupes = int(ratings.duplicated(["userId", "itemId"]).sum())
    user_ids = set(pd.to_numeric(users["UserID"]).tolist())
    item_ids = set(items["itemID"].tolist())
    orphans = int((~ratings["userId"].isin(user_ids)).sum() + (~ratings["itemId"].isin(item_ids)).sum())
    ok = in_range and len(vals) == target and dupes == 0 and orphans == 0
    span = f"[{vals.min():.2f}, {vals.max():.2f}]" if len(vals) else "[]"
    checks.append(Check("e:ratings", ok, f"{len(vals)} ratings (target {target}), range {span}, "
                                         f"{dupes} duplicate cells, {orphans} dangling ids"))
    return ValidationReport(checks)
