"""End-to-end generation: config in, dataset bundle out, CSV files on disk."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import add_sparse_noise, user_item_affinity, vectorize_catalog
from .config import GenerationSpec
from .copula import discretize, numeric_values, sample_latents
from .errors import RecsynthError
from .mnl import BetaMatrix, compute_utilities, encode_users, normalize_beta, preference_probabilities
from .nominal import sample_nominal
from .primitives import RngStream
from .ratings import SparseRatings, assign_behaviors, assign_quality, generate_ratings, select_rated_cells
from .users import UserTable

log = logging.getLogger(__name__)

THREADS_ENV = "RECSYNTH_THREADS"


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise RecsynthError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


@dataclass
class DatasetBundle:
    spec: GenerationSpec
    users: UserTable
    latents: np.ndarray
    beta: BetaMatrix
    utilities: np.ndarray
    preferences: np.ndarray
    icat: np.ndarray
    affinity: np.ndarray
    noisy_affinity: np.ndarray
    noise_cells: np.ndarray
    quality: np.ndarray
    ratings: SparseRatings

    @property
    def n_users(self) -> int:
        return self.users.n_users


def run_pipeline(spec: GenerationSpec, *, workers: int | None = None) -> DatasetBundle:
    """Execute the ten generation steps in order.

    Each step draws from its own stream ``RngStream.for_step(seed, step, ...)``
    so the output depends only on the config and seed.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    seed, n = spec.seed, spec.n_users

    def stream(step, *index):
        return RngStream.for_step(seed, step, *index)

    log.info("sampling %d users", n)
    latents = sample_latents(spec.correlation, n, stream("latents"))
    users = UserTable(n)
    for j, feature in enumerate(spec.ordinal_features):
        users.add_ordinal(feature, discretize(latents[:, j], feature))
        if feature.value_ranges is not None:
            users.numeric[f"{feature.name}_value"] = numeric_values(
                users.ordinal[feature.name], feature, stream("numeric", feature.name))
    for feature in spec.nominal_features:
        users.add_nominal(feature.name, sample_nominal(feature, users, stream("nominal", feature.name), spec.theta_mode))
    behaviors = assign_behaviors(n, stream("behaviors"))
    users.bias, users.spread = behaviors.bias, behaviors.spread

    log.info("computing preferences")
    x = encode_users(users, spec.ordinal_features, spec.nominal_features)
    beta = normalize_beta(spec.beta, spec.reference, spec.tau)
    utilities = compute_utilities(x, beta, stream("gumbel"))
    preferences = preference_probabilities(utilities)

    icat = vectorize_catalog(spec.catalog, spec.preference_categories)
    affinity = user_item_affinity(preferences, icat)
    noisy, noise_cells = add_sparse_noise(affinity, spec.noise_density, stream("noise"), signed=spec.noise_signed)

    log.info("rating with %d worker(s)", workers)
    quality = assign_quality(spec.n_items, stream("quality"))
    cells = select_rated_cells(n, spec.n_items, spec.ratings_density, stream("rated_cells"))
    ratings = generate_ratings(noisy, behaviors, quality, cells, spec.rating_system(),
                               workers=workers, cache=spec.cache)
    return DatasetBundle(spec, users, latents, beta, utilities, preferences, icat, affinity,
                         noisy, noise_cells, quality, ratings)


def _writer(path: Path):
    fh = path.open("w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _floats(row) -> list[str]:
    return [repr(v) for v in row.tolist()]


def emit(bundle: DatasetBundle, out_dir, *, emit_affinity: bool | None = None) -> list[Path]:
    """Write the bundle as CSV files; output is byte-identical for a fixed config and seed."""
    out = Path(out_dir)
    spec = bundle.spec
    emit_affinity = spec.emit_affinity if emit_affinity is None else emit_affinity
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []

        users = bundle.users
        ordinals = [f.name for f in spec.ordinal_features]
        nominals = [f.name for f in spec.nominal_features]
        numeric = sorted(users.numeric) if spec.emit_numeric else []
        path = out / "users.csv"
        fh, w = _writer(path)
        with fh:
            w.writerow(["UserID", *ordinals, *nominals, "bias", "spread", *numeric])
            cols = ([users.ordinal[c].tolist() for c in ordinals] + [users.nominal[c].tolist() for c in nominals]
                    + [_floats(users.bias), _floats(users.spread)] + [_floats(users.numeric[c]) for c in numeric])
            w.writerows([i, *vals] for i, vals in enumerate(zip(*cols)))
        written.append(path)

        path = out / "latents.csv"
        fh, w = _writer(path)
        with fh:
            w.writerow(["UserID", *ordinals])
            w.writerows([i, *_floats(row)] for i, row in enumerate(bundle.latents))
        written.append(path)

        path = out / "items.csv"
        fh, w = _writer(path)
        with fh:
            w.writerow(["itemID", "name", "categories"])
            w.writerows([it.item_id, it.name, "|".join(it.categories)] for it in spec.catalog.items)
        written.append(path)

        path = out / "preferences.csv"
        fh, w = _writer(path)
        with fh:
            w.writerow(["UserID", *spec.preference_categories])
            w.writerows([i, *_floats(row)] for i, row in enumerate(bundle.preferences))
        written.append(path)

        path = out / "beta.csv"
        fh, w = _writer(path)
        with fh:
            w.writerow(["feature", *bundle.beta.columns])
            w.writerows([name, *_floats(row)] for name, row in zip(bundle.beta.rows, bundle.beta.values))
        written.append(path)

        path = out / "ratings.csv"
        r = bundle.ratings
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write("userId,itemId,rating\n")
            fh.writelines(f"{u},{i},{v:.2f}\n" for u, i, v in zip(r.user_ids.tolist(), r.item_ids.tolist(), r.ratings.tolist()))
        written.append(path)

        if emit_affinity:
            path = out / "affinity.csv"
            fh, w = _writer(path)
            with fh:
                w.writerow(["UserID", *(str(it.item_id) for it in spec.catalog.items)])
                w.writerows([i, *_floats(row)] for i, row in enumerate(bundle.noisy_affinity))
            written.append(path)
    except OSError as exc:
        raise RecsynthError(f"cannot write {exc.filename or out}: {exc.strerror or exc}") from exc
    return written
