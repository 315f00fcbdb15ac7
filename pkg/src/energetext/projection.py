"""Exact 2-D t-SNE projection and scatter export.

O(N^2) reference implementation: per-point Gaussian bandwidths found by
binary search so each conditional distribution hits the target perplexity,
symmetrized affinities, student-t low-dimensional kernel, and gradient
descent with momentum and early exaggeration.  No tree approximations:
desk-scale inputs are a few hundred points and exactness buys testability.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

MACHINE_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 5.0
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    early_exaggeration: float = 12.0
    exaggeration_duration: int = 250  # also the momentum switch point
    seed: int = 42

    def __post_init__(self):
        if self.perplexity <= 0:
            raise ValueError("perplexity must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class Projection:
    ids: tuple[str, ...]
    coords: np.ndarray  # N x 2
    initial_kl: float
    final_kl: float


def _conditional_probabilities(sq_dists: np.ndarray, perplexity: float, tol: float = 1e-5):
    """Row-stochastic conditional affinities matching the target perplexity.

    For each point a binary search over the Gaussian precision beta drives
    the Shannon entropy of p_{j|i} to log2(perplexity) within ``tol``.
    """
    n = sq_dists.shape[0]
    target_entropy = np.log2(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        d = np.delete(sq_dists[i], i)
        for _ in range(200):
            w = np.exp(-d * beta)
            sum_w = w.sum()
            if sum_w <= 0:
                p = np.full_like(d, 1.0 / d.size)
            else:
                p = w / sum_w
            nz = p > 0
            entropy = -(p[nz] * np.log2(p[nz])).sum()
            diff = entropy - target_entropy
            if abs(diff) <= tol:
                break
            if diff > 0:  # entropy too high -> sharpen
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == 0.0 else (beta + beta_min) / 2.0
        row = np.insert(p, i, 0.0)
        P[i] = row
    return P


def _kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


def _q_matrix(Y: np.ndarray):
    """Student-t affinities in the embedding plus the unnormalized kernel."""
    d2 = np.square(Y[:, None, :] - Y[None, :, :]).sum(axis=-1)
    W = 1.0 / (1.0 + d2)
    np.fill_diagonal(W, 0.0)
    Q = np.maximum(W / W.sum(), MACHINE_EPS)
    return Q, W


def _kl_grad(P: np.ndarray, Y: np.ndarray):
    Q, W = _q_matrix(Y)
    PQ = (P - Q) * W
    grad = 4.0 * ((np.diag(PQ.sum(axis=1)) - PQ) @ Y)
    return grad, Q


def tsne_project(
    vectors: np.ndarray,
    labels: Sequence[str],
    config: TsneConfig,
) -> Projection:
    """Project N x d vectors to the plane.

    Requires N >= 4 and perplexity < (N - 1) / 3.  The output records the
    KL divergence at initialization and after the final step.
    """
    X = np.asarray(vectors, dtype=np.float64)
    n = X.shape[0]
    if n < 4:
        raise ValueError(f"need at least 4 points, got {n}")
    if len(labels) != n:
        raise ValueError("labels must align with vectors")
    if config.perplexity >= (n - 1) / 3:
        raise ValueError(
            f"perplexity {config.perplexity} too large for {n} points (must be < (N-1)/3)"
        )

    sq_dists = np.square(X[:, None, :] - X[None, :, :]).sum(axis=-1)
    cond = _conditional_probabilities(sq_dists, config.perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, MACHINE_EPS)

    rng = np.random.default_rng(config.seed)
    Y = rng.normal(0.0, 1.0, size=(n, 2)) * 1e-4
    velocity = np.zeros_like(Y)

    _, Q0 = _kl_grad(P, Y)
    initial_kl = _kl_divergence(P, Q0)

    final_kl = initial_kl
    for it in range(config.iterations):
        exaggerating = it < config.exaggeration_duration
        P_eff = P * config.early_exaggeration if exaggerating else P
        grad, _ = _kl_grad(P_eff, Y)
        momentum = config.momentum_initial if exaggerating else config.momentum_final
        velocity = momentum * velocity - config.learning_rate * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
    _, Q = _kl_grad(P, Y)
    final_kl = _kl_divergence(P, Q)

    return Projection(ids=tuple(labels), coords=Y, initial_kl=initial_kl, final_kl=final_kl)


def achieved_perplexities(vectors: np.ndarray, perplexity: float) -> np.ndarray:
    """Per-point 2^H(P_i) of the conditional distributions (diagnostic)."""
    X = np.asarray(vectors, dtype=np.float64)
    sq_dists = np.square(X[:, None, :] - X[None, :, :]).sum(axis=-1)
    cond = _conditional_probabilities(sq_dists, perplexity)
    out = np.empty(X.shape[0])
    for i, row in enumerate(cond):
        nz = row > 0
        out[i] = 2.0 ** (-(row[nz] * np.log2(row[nz])).sum())
    return out


# ---------------------------------------------------------------------------
# Export

_SVG_SIZE = 1000.0
_SVG_MARGIN = 10.0


def export_scatter(
    projection: Projection,
    out_base: str | Path,
    highlight: Optional[set[str]] = None,
) -> tuple[Path, Path]:
    """Write <out_base>.csv (label,x,y) and <out_base>.svg with text labels.

    Highlighted labels render in a distinct style.  Deterministic: the
    same projection always produces byte-identical files.
    """
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    highlight = highlight or set()

    csv_path = Path(str(out_base) + ".csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("label,x,y\n")
        for label, (x, y) in zip(projection.ids, projection.coords):
            fh.write(f"{label},{repr(float(x))},{repr(float(y))}\n")

    coords = projection.coords
    span = coords.max(axis=0) - coords.min(axis=0)
    span[span == 0] = 1.0
    scale = (_SVG_SIZE - 2 * _SVG_MARGIN) / span
    origin = coords.min(axis=0)

    def to_svg(pt):
        sx = _SVG_MARGIN + (pt[0] - origin[0]) * scale[0]
        sy = _SVG_SIZE - _SVG_MARGIN - (pt[1] - origin[1]) * scale[1]
        return sx, sy

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_SVG_SIZE:g} {_SVG_SIZE:g}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for label, pt in zip(projection.ids, coords):
        sx, sy = to_svg(pt)
        hot = label in highlight
        color = "#c0392b" if hot else "#2c3e50"
        weight = ' font-weight="bold"' if hot else ""
        lines.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="3" fill="{color}"/>')
        lines.append(
            f'<text x="{sx + 4:.2f}" y="{sy - 4:.2f}" font-size="10" fill="{color}"{weight}>'
            f"{escape(label)}</text>"
        )
    lines.append("</svg>")
    svg_path = Path(str(out_base) + ".svg")
    svg_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return csv_path, svg_path
