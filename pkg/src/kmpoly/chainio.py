"""Chain persistence: one CSV row per draw plus a JSON layout header.

Floats are written with repr, so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .core import KmpParams, MultiIndexSet, PartitionGrid
from .io_utils import atomic_write, write_json


def _columns(p, nb, n_s, q):
    cols = [f"beta_{j}" for j in range(q)]
    cols += ["K", "h"]
    cols += [f"mu_{i}" for i in range(nb * p)]
    cols += [f"xi_{i}" for i in range(nb * n_s)]
    cols += ["sigma", "loglik", "logpost"]
    return cols


def save_draws(draws, csv_path, json_path=None):
    """Persist a PosteriorDraws object to CSV + JSON header."""
    if json_path is None:
        json_path = str(csv_path) + ".json"
    first = draws.draws[0]
    grid = first.grid
    n_s = len(first.mindex)
    q = 0 if draws.beta is None else draws.beta.shape[1]
    cols = _columns(grid.p, grid.n_blocks, n_s, q)
    lines = [",".join(cols)]
    for t, d in enumerate(draws.draws):
        cells = []
        if q:
            cells += [repr(float(v)) for v in draws.beta[t]]
        cells += [str(grid.K), repr(float(d.h))]
        cells += [repr(float(v)) for v in d.mu.ravel()]
        cells += [repr(float(v)) for v in d.xi.ravel()]
        cells += [repr(float(d.sigma)), repr(float(draws.loglik[t])),
                  repr(float(draws.logpost[t]))]
        lines.append(",".join(cells))
    atomic_write(csv_path, "\n".join(lines) + "\n")
    header = {
        "K": grid.K,
        "p": grid.p,
        "m": first.m,
        "kernel": first.kernel,
        "n_blocks": grid.n_blocks,
        "n_coef_per_block": n_s,
        "q": q,
        "columns": cols,
        "accept": draws.accept,
        "meta": draws.meta,
    }
    write_json(json_path, header)


def load_draws(csv_path, json_path=None):
    """Inverse of :func:`save_draws`."""
    from .sampler import PosteriorDraws

    if json_path is None:
        json_path = str(csv_path) + ".json"
    with open(json_path, encoding="utf-8") as fh:
        header = json.load(fh)
    K, p, m = header["K"], header["p"], header["m"]
    nb, n_s, q = header["n_blocks"], header["n_coef_per_block"], header["q"]
    grid = PartitionGrid(K, p)
    draws, lls, lps, betas = [], [], [], []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        cols = next(reader)
        if cols != header["columns"]:
            raise ValueError("chain CSV does not match its JSON header")
        for row in reader:
            vals = [float(v) for v in row]
            i = 0
            if q:
                betas.append(vals[:q])
                i = q
            i += 1  # K column, already known
            h = vals[i]
            i += 1
            mu = np.array(vals[i:i + nb * p]).reshape(nb, p)
            i += nb * p
            xi = np.array(vals[i:i + nb * n_s]).reshape(nb, n_s)
            i += nb * n_s
            sigma, ll, lp = vals[i], vals[i + 1], vals[i + 2]
            draws.append(KmpParams(grid, h, mu, xi, sigma, m=m,
                                   kernel=header["kernel"]))
            lls.append(ll)
            lps.append(lp)
    return PosteriorDraws(
        draws, np.array(lls), np.array(lps), header.get("accept", {}), K,
        beta=np.array(betas) if q else None, meta=header.get("meta", {}),
    )
