import csv
import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest


def gbm_prices(n, seed, p0=100.0, mu=0.05, sigma=0.2, dt=1 / 252):
    """Geometric Brownian motion path, seeded and reproducible."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed,))))
    z = rng.standard_normal(n - 1)
    increments = (mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * z
    prices = np.empty(n)
    prices[0] = p0
    prices[1:] = p0 * np.exp(np.cumsum(increments))
    return prices


def ar1_series(n, phi, seed, sigma=1.0):
    """Seeded AR(1) path with standard-normal innovations."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed,))))
    x = np.empty(n)
    x[0] = rng.standard_normal() * sigma / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + sigma * rng.standard_normal()
    return x


def write_price_csv(path, values, start=date(2020, 1, 1), column="Close"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Date", column])
        for k, v in enumerate(values):
            w.writerow([(start + timedelta(days=k)).isoformat(), repr(float(v))])
    return path


@pytest.fixture
def gbm_csv(tmp_path):
    """Factory: a dated CSV of a seeded GBM path."""

    def make(n=120, seed=7, name="prices.csv", **kw):
        return write_price_csv(tmp_path / name, gbm_prices(n, seed, **kw))

    return make


def strip_volatile(tree_dir):
    """Canonical bytes of an artifact tree with run-dependent fields removed.

    Manifests lose their execution block (timings, jobs, creation time);
    reports lose runtime_seconds.  Everything else is compared raw.
    """
    out = {}
    for p in sorted(Path(tree_dir).rglob("*")):
        if not p.is_file():
            continue
        rel = p.relative_to(tree_dir).as_posix()
        if p.name == "manifest.json":
            doc = json.loads(p.read_text())
            doc.pop("execution", None)
            out[rel] = json.dumps(doc, sort_keys=True)
        elif p.suffix == ".json":
            doc = json.loads(p.read_text())
            doc.pop("runtime_seconds", None)
            out[rel] = json.dumps(doc, sort_keys=True)
        else:
            out[rel] = p.read_bytes()
    return out
