"""Closed-form CCA and projection-weighted CCA with a split-based protocol.

Canonical correlations are the singular values of the whitened
cross-covariance. Whitening uses the symmetric inverse square root of each
view's covariance; conditioning is controlled by a relative ridge that adds
ridge * trace(S)/d to the covariance diagonal. The projection-weighted
score weights each correlation by how much its canonical direction accounts
for the representation view.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConditioningError,
    DegenerateInputError,
    InsufficientDataError,
    ValidationError,
)
from .featurestore import AttributeTable, SegmentSample

log = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-8
DEFAULT_RIDGE_GRID = (1e-8, 1e-6, 1e-4)

# relative eigenvalue threshold for the numerical rank of a covariance
_RANK_RTOL = 1e-10


@dataclass
class ViewPair:
    """Paired observations of two views; row i of x and y belong together."""

    x: np.ndarray  # (n, d1)
    y: np.ndarray  # (n, d2)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ValidationError("views must be 2-D matrices")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValidationError(
                f"views disagree on n: {self.x.shape[0]} vs {self.y.shape[0]}"
            )
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValidationError("non-finite values in view pair")

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass
class CcaResult:
    """Correlations, projection directions, and the projection-weighted score."""

    rho: np.ndarray            # (k,) descending in [0, 1]
    vx: np.ndarray             # (d1, k)
    vy: np.ndarray             # (d2, k)
    mean_x: np.ndarray         # (d1,)
    mean_y: np.ndarray         # (d2,)
    alpha: np.ndarray | None = None  # (k,) weights, filled by pwcca_score
    pwcca: float | None = None


def _inv_sqrt(cov: np.ndarray, ridge: float) -> tuple[np.ndarray, int]:
    """Symmetric inverse square root and numerical rank of a covariance."""
    evals, evecs = np.linalg.eigh(cov)
    top = max(float(evals[-1]), 0.0)
    if top <= 0:
        raise ConditioningError("covariance is zero; the view carries no signal")
    rank = int((evals > top * _RANK_RTOL).sum())
    if ridge > 0:
        scale = float(np.trace(cov)) / cov.shape[0]
        adjusted = np.maximum(evals, 0.0) + ridge * scale
    else:
        if rank < cov.shape[0]:
            raise ConditioningError(
                "singular covariance; refit with ridge > 0 to regularize whitening"
            )
        adjusted = evals
    inv_sqrt = (evecs / np.sqrt(adjusted)) @ evecs.T
    return inv_sqrt, rank


def _fix_signs(vx: np.ndarray, vy: np.ndarray) -> None:
    """Scale each direction so its first nonzero component is positive."""
    for i in range(vx.shape[1]):
        col = vx[:, i]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if nz.size and col[nz[0]] < 0:
            vx[:, i] = -col
            vy[:, i] = -vy[:, i]


def _principal_subspace(centered: np.ndarray, keep_fraction: float) -> np.ndarray:
    """Basis of the top principal components covering the variance fraction."""
    n = centered.shape[0]
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.maximum(evals[::-1], 0.0)
    evecs = evecs[:, ::-1]
    total = evals.sum()
    if total <= 0:
        raise DegenerateInputError("a view has zero variance")
    keep = int(np.searchsorted(np.cumsum(evals) / total, keep_fraction) + 1)
    keep = min(keep, evals.size)
    return evecs[:, :keep]


def fit_cca(
    view: ViewPair,
    ridge: float = DEFAULT_RIDGE,
    pre_reduce: float | None = None,
) -> CcaResult:
    """Fit CCA on a view pair.

    Returns the canonical correlations (clipped to [0, 1], descending) and
    the projection directions for both views; k = min(rank x, rank y).
    `pre_reduce`, off by default, truncates each view to the principal
    components covering that fraction of its variance before the fit;
    directions are mapped back to the original coordinates.
    """
    if ridge < 0:
        raise ValidationError(f"ridge must be >= 0, got {ridge}")
    n, d1 = view.x.shape
    d2 = view.y.shape[1]
    if n <= max(d1, d2):
        raise InsufficientDataError(
            f"need n > max(d1, d2) = {max(d1, d2)} samples, got {n}"
        )

    mean_x = view.x.mean(axis=0)
    mean_y = view.y.mean(axis=0)
    xc = view.x - mean_x
    yc = view.y - mean_y

    basis_x = basis_y = None
    if pre_reduce is not None:
        if not 0 < pre_reduce <= 1:
            raise ValidationError(f"pre_reduce must be in (0, 1], got {pre_reduce}")
        basis_x = _principal_subspace(xc, pre_reduce)
        basis_y = _principal_subspace(yc, pre_reduce)
        xc = xc @ basis_x
        yc = yc @ basis_y

    sxx = xc.T @ xc / (n - 1)
    syy = yc.T @ yc / (n - 1)
    sxy = xc.T @ yc / (n - 1)

    wx, rank_x = _inv_sqrt(sxx, ridge)
    wy, rank_y = _inv_sqrt(syy, ridge)
    k = min(rank_x, rank_y)
    if k == 0:
        raise DegenerateInputError("a view has rank 0 after centering")

    u, s, vt = np.linalg.svd(wx @ sxy @ wy, full_matrices=False)
    rho = np.clip(s[:k], 0.0, 1.0)
    vx = wx @ u[:, :k]
    vy = wy @ vt[:k].T
    if basis_x is not None:
        vx = basis_x @ vx
        vy = basis_y @ vy
    _fix_signs(vx, vy)
    return CcaResult(rho=rho, vx=vx, vy=vy, mean_x=mean_x, mean_y=mean_y)


def pwcca_score(result: CcaResult, x: np.ndarray) -> float:
    """Projection-weighted score of a fitted result w.r.t. the x view.

    Weights are the absolute inner products between canonical variates and
    the centered feature columns, normalized to sum to 1. Fills
    result.alpha and result.pwcca.
    """
    x = np.asarray(x, dtype=np.float64)
    xc = x - result.mean_x
    variates = xc @ result.vx                      # (n, k)
    raw = np.abs(variates.T @ xc).sum(axis=1)      # (k,)
    total = raw.sum()
    if total <= 0:
        raise DegenerateInputError("zero total projection weight (all-zero view?)")
    alpha = raw / total
    score = float(np.clip(alpha @ result.rho, 0.0, 1.0))
    result.alpha = alpha
    result.pwcca = score
    return score


def evaluate_cca(result: CcaResult, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Score held-out data under a fitted result.

    Correlations between projected views are clipped to [0, 1]; the
    projection weights are recomputed on the held-out x view.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc = x - result.mean_x
    yc = y - result.mean_y
    h = xc @ result.vx
    g = yc @ result.vy

    hd = h - h.mean(axis=0)
    gd = g - g.mean(axis=0)
    hn = np.sqrt((hd * hd).sum(axis=0))
    gn = np.sqrt((gd * gd).sum(axis=0))
    denom = hn * gn
    corr = np.zeros(h.shape[1])
    ok = denom > 0
    corr[ok] = (hd[:, ok] * gd[:, ok]).sum(axis=0) / denom[ok]
    rho = np.clip(corr, 0.0, 1.0)

    raw = np.abs(h.T @ xc).sum(axis=1)
    total = raw.sum()
    if total <= 0:
        raise DegenerateInputError("zero total projection weight on held-out view")
    alpha = raw / total
    return rho, float(np.clip(alpha @ rho, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Split protocol
# ---------------------------------------------------------------------------


@dataclass
class SplitOutcome:
    ridge: float
    val_pwcca: float
    test_pwcca: float


@dataclass
class ProtocolResult:
    """Mean/min/max projection-weighted scores over the splits."""

    splits: list[SplitOutcome]
    n_samples: int
    n_dropped: int  # samples whose word is absent from the attribute table

    def _agg(self, values):
        return float(np.mean(values)), float(np.min(values)), float(np.max(values))

    @property
    def test_stats(self) -> tuple[float, float, float]:
        return self._agg([s.test_pwcca for s in self.splits])

    @property
    def val_stats(self) -> tuple[float, float, float]:
        return self._agg([s.val_pwcca for s in self.splits])


def _split_indices(words, seed, train_frac=0.8, val_frac=0.1, min_stratify=5):
    """One train/val/test partition, stratified by word where counts allow."""
    rng = random.Random(seed)
    by_word: dict[str, list[int]] = {}
    for i, w in enumerate(words):
        by_word.setdefault(w, []).append(i)

    train, val, test = [], [], []
    pool = []
    few = 0
    for word in sorted(by_word):
        idxs = by_word[word]
        if len(idxs) < min_stratify:
            pool.extend(idxs)
            few += 1
            continue
        idxs = idxs[:]
        rng.shuffle(idxs)
        n = len(idxs)
        n_test = max(1, round(n * (1 - train_frac - val_frac)))
        n_val = max(1, round(n * val_frac))
        test.extend(idxs[:n_test])
        val.extend(idxs[n_test:n_test + n_val])
        train.extend(idxs[n_test + n_val:])
    if few:
        log.warning("split: %d words with < %d instances sampled without stratification",
                    few, min_stratify)
    if pool:
        rng.shuffle(pool)
        n = len(pool)
        n_test = round(n * (1 - train_frac - val_frac))
        n_val = round(n * val_frac)
        test.extend(pool[:n_test])
        val.extend(pool[n_test:n_test + n_val])
        train.extend(pool[n_test + n_val:])
    return sorted(train), sorted(val), sorted(test)


def cca_protocol(
    samples: list[SegmentSample],
    table: AttributeTable,
    n_splits: int = 5,
    seed: int = 0,
    ridge_grid=DEFAULT_RIDGE_GRID,
    train_frac: float = 0.8,
    val_frac: float = 0.1,
) -> ProtocolResult:
    """Evaluate pooled samples against an attribute table over several splits.

    Each split fits on train, picks the ridge with the best validation
    score, and reports the held-out test score. Samples must already carry
    pooled vectors; samples whose word is missing from the table are
    dropped and counted.
    """
    usable = [s for s in samples if s.word in table]
    n_dropped = len(samples) - len(usable)
    if n_dropped:
        log.info("cca_protocol: dropped %d samples not covered by %s",
                 n_dropped, table.name)
    if not usable:
        raise InsufficientDataError("no samples joinable with the attribute table")
    if any(s.pooled is None for s in usable):
        raise ValidationError("samples must be pooled before running the protocol")

    x = np.stack([s.pooled for s in usable]).astype(np.float64)
    y = np.stack([table.rows[s.word] for s in usable])
    words = [s.word for s in usable]

    outcomes = []
    for split_idx in range(n_splits):
        tr, va, te = _split_indices(words, seed=seed * 9973 + split_idx,
                                    train_frac=train_frac, val_frac=val_frac,
                                    min_stratify=max(n_splits, 2))
        if not (tr and va and te):
            raise InsufficientDataError(
                f"split {split_idx} produced an empty partition "
                f"({len(tr)}/{len(va)}/{len(te)})"
            )
        best = None
        for ridge in ridge_grid:
            try:
                fitted = fit_cca(ViewPair(x[tr], y[tr]), ridge=ridge)
                _, val_score = evaluate_cca(fitted, x[va], y[va])
            except (ConditioningError, DegenerateInputError) as exc:
                log.warning("split %d ridge %g failed: %s", split_idx, ridge, exc)
                continue
            if best is None or val_score > best[1]:
                best = (ridge, val_score, fitted)
        if best is None:
            raise ConditioningError(f"no ridge in {ridge_grid} produced a usable fit")
        ridge, val_score, fitted = best
        _, test_score = evaluate_cca(fitted, x[te], y[te])
        outcomes.append(SplitOutcome(ridge=ridge, val_pwcca=val_score,
                                     test_pwcca=test_score))
    return ProtocolResult(splits=outcomes, n_samples=len(usable), n_dropped=n_dropped)
