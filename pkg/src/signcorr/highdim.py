"""Correlation matrices assembled from bivariate estimates, with an
eigenvalue-clipping repair to positive semidefiniteness."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validate import as_data
from .errors import SignCorrError
from .estimators import estimate, resolve_ids
from .estimators.batch import BATCH_IDS, batch_estimate

__all__ = ["CorrMatrix", "pairwise_corr_matrix", "psd_repair", "PSD_EPS", "PSD_TOL",
           "write_corr_matrix"]

PSD_EPS = 1e-8    # floor for clipped eigenvalues
PSD_TOL = -1e-10  # matrices with min eigenvalue above this count as PSD


@dataclass
class CorrMatrix:
    values: np.ndarray
    estimator_id: str = ""
    psd: bool = False
    warnings: list = field(default_factory=list)
    pairs_evaluated: int = 0
    min_eig_before: float = float("nan")
    min_eig_after: float = float("nan")

    @property
    def p(self) -> int:
        return self.values.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values)[0])


def _pair_chunks(pairs, k):
    step = max(1, -(-len(pairs) // k))
    return [pairs[i:i + step] for i in range(0, len(pairs), step)]


def pairwise_corr_matrix(data, estimator_id: str = "spatial_sign", parallel: bool = True,
                         workers: int | None = None, seed=None) -> CorrMatrix:
    """Entry (i, j) is the bivariate estimator on columns i and j.

    Each unordered pair is evaluated once. A pair whose estimate fails is
    set to 0 and listed in ``warnings``. With ``parallel`` the pairs are
    split over a thread pool; the numerical kernels release the GIL.
    """
    x = as_data(data, min_n=2)
    n, p = x.shape
    if p < 2:
        raise SignCorrError("need at least two columns")
    (ident,) = resolve_ids([estimator_id])
    iu, ju = np.triu_indices(p, k=1)
    pairs = list(zip(iu.tolist(), ju.tolist()))

    def run(chunk):
        if not chunk:
            return []
        if ident in BATCH_IDS:
            xs = np.stack([x[:, [i, j]] for i, j in chunk])
            v, st = batch_estimate(xs, ident)
            msg = {1: "degenerate input", 2: "iteration limit reached"}
            return [(i, j, float(v[k]) if st[k] == 0 else None, msg.get(int(st[k])))
                    for k, (i, j) in enumerate(chunk)]
        out = []
        for i, j in chunk:
            try:
                sub = None if seed is None else _pair_seed(seed, i, j)
                out.append((i, j, estimate(x[:, [i, j]], ident, seed=sub).value, None))
            except SignCorrError as exc:
                out.append((i, j, None, str(exc)))
        return out

    nw = (workers or os.cpu_count() or 1) if parallel else 1
    chunks = _pair_chunks(pairs, nw * 4 if nw > 1 else 1)
    if nw > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    r = np.eye(p)
    warnings = []
    count = 0
    for res in results:
        for i, j, v, msg in res:
            count += 1
            if v is None:
                warnings.append({"i": i, "j": j, "message": msg})
                v = 0.0
            r[i, j] = r[j, i] = v
    return CorrMatrix(r, ident, psd=False, warnings=warnings, pairs_evaluated=count,
                      min_eig_before=float(np.linalg.eigvalsh(r)[0]))


def _pair_seed(seed, i, j):
    from .distributions import SeedSpec
    base = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    return base.child("pair", i, j)


def psd_repair(r, eps: float = PSD_EPS) -> CorrMatrix:
    """Clip eigenvalues at ``eps`` and rescale to unit diagonal.

    Input whose smallest eigenvalue is already at least -1e-10 is returned
    unchanged, which makes the repair idempotent.
    """
    cm = r if isinstance(r, CorrMatrix) else CorrMatrix(np.asarray(r, dtype=float))
    a = np.array(cm.values, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SignCorrError("correlation matrix must be square")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
        raise SignCorrError("correlation matrix must be symmetric")
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    before = float(w[0])
    if before >= PSD_TOL:
        out = a
    else:
        b = (v * np.maximum(w, eps)) @ v.T
        d = 1.0 / np.sqrt(np.diag(b))
        out = b * d[:, None] * d[None, :]
        out = 0.5 * (out + out.T)
        np.clip(out, -1.0, 1.0, out=out)
        np.fill_diagonal(out, 1.0)
    after = float(np.linalg.eigvalsh(out)[0])
    return CorrMatrix(out, cm.estimator_id, psd=after >= PSD_TOL, warnings=list(cm.warnings),
                      pairs_evaluated=cm.pairs_evaluated, min_eig_before=before,
                      min_eig_after=after)


def write_corr_matrix(cm: CorrMatrix, path) -> str:
    """Write the matrix as CSV and a JSON sidecar (``<path>.json``)."""
    np.savetxt(path, cm.values, delimiter=",", fmt="%.17g")
    side = str(path) + ".json"
    with open(side, "w", encoding="utf-8") as fh:
        json.dump({"estimator": cm.estimator_id, "p": cm.p, "psd": cm.psd,
                   "pairs_evaluated": cm.pairs_evaluated, "warnings": cm.warnings,
                   "min_eigenvalue_before": cm.min_eig_before,
                   "min_eigenvalue_after": cm.min_eig_after}, fh, indent=2)
    return side
