"""Slowly-Moving Bandit policy on an HST, and an Exp3 baseline with the same interface.

Both policies follow the contract ``select(t, rng) -> action`` then
``observe(t, loss, rng)``; given the rng stream every call is deterministic.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadEta, EstimateTooNegative, NotSelected, OutOfRangeLoss
from .hst import HstTree

log = logging.getLogger(__name__)

P_FLOOR = 1e-300


def mw_update(p: np.ndarray, c: np.ndarray, eta: float) -> np.ndarray:
    """Exponential-weights step p(i) * exp(-eta c(i)), renormalized.

    Requires c(i) >= -1/eta; the exponent is shifted by its max before exponentiation.
    """
    c = np.asarray(c, dtype=float)
    floor = -1.0 / eta
    if np.any(c < floor - 1e-12 * max(1.0, -floor)):
        i = int(np.argmin(c))
        raise EstimateTooNegative(f"c[{i}] = {c[i]:g} < -1/eta = {floor:g}")
    z = -eta * c
    w = p * np.exp(z - z.max())
    return w / w.sum()


def default_eta(depth: int, dim: float, horizon: int, scale: float = 1.0) -> float:
    """sqrt(2^-H ln(max(dim, 2)) / (dim T)); the log floor keeps eta > 0 at dim = 1."""
    return scale * math.sqrt(math.ldexp(1.0, -depth) * math.log(max(dim, 2.0)) / (dim * horizon))


def _sample(weights: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(weights)
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), len(weights) - 1)


@dataclass
class LevelEstimates:
    """Per-round estimator internals.

    ``bar[h]`` is the common value of the level-h estimate on A_h(i_t); the
    level-h vector is zero off that set.
    """
    action: int
    loss: float
    sigma: np.ndarray
    level: int
    bar: np.ndarray
    truncated: bool
    tilde: np.ndarray

    def bar_vectors(self, tree: HstTree) -> np.ndarray:
        """Dense (H, k) array of the level estimates."""
        lca = tree.lca_level[self.action]
        H = len(self.bar)
        on_path = lca[None, :] <= np.arange(H)[:, None]
        return np.where(on_path, self.bar[:, None], 0.0)


class SMB:
    def __init__(self, tree: HstTree, eta: float):
        if not eta > 0:
            raise BadEta(f"eta must be positive, got {eta}")
        self.tree = tree
        self.eta = float(eta)
        self.k = tree.k
        self.depth = tree.depth
        self.p = np.full(self.k, 1.0 / self.k)
        self.prev_action: int | None = None
        self.prev_level = self.depth
        self.round = 1
        self.events = {"zero_mass": 0, "clamped": 0}
        self._anc = tree.anc
        self._lca = tree.lca_level
        self._members = tree.members
        self._scales = np.ldexp(1.0, np.arange(self.depth)) * self.eta
        self._pending: int | None = None
        self._refresh_mass()

    def set_distribution(self, p) -> None:
        """Overwrite p_t (used by the exact-enumeration checks)."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.k,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("p must be a probability vector over the leaves")
        self.p = p.copy()
        self._refresh_mass()

    def _refresh_mass(self) -> None:
        self.mass = np.bincount(
            self._anc.ravel(), weights=np.tile(self.p, self.depth + 1),
            minlength=self.tree.n_nodes,
        )

    def select(self, t: int, rng: np.random.Generator) -> int:
        if self.prev_action is None or self.prev_level == self.depth:
            i = _sample(self.p, rng)
        else:
            node = self._anc[self.prev_level, self.prev_action]
            if self.mass[node] > 0:
                leaves = self._members[node]
                i = int(leaves[_sample(self.p[leaves], rng)])
            else:
                self.events["zero_mass"] += 1
                log.warning("round %d: conditioning subtree has zero mass, sampling from p", t)
                i = _sample(self.p, rng)
        self._pending = i
        return i

    def observe(self, t: int, loss: float, rng: np.random.Generator) -> LevelEstimates:
        if self._pending is None:
            raise NotSelected("observe() called before select() in this round")
        if not 0.0 <= loss <= 1.0:
            raise OutOfRangeLoss(f"loss {loss} outside [0, 1]")
        sigma = np.where(rng.random(self.depth) < 0.5, 1, -1)
        est = self.estimate(self._pending, loss, sigma)
        if not est.truncated:
            self.p = mw_update(self.p, est.tilde, self.eta)
            self._refresh_mass()
        self.prev_action = est.action
        self.prev_level = est.level
        self.round += 1
        self._pending = None
        return est

    def truncated(self, i: int) -> bool:
        """Whether i lies in the truncation set: p(A_h(i)) < 2^h eta for some h < H."""
        masses = self.mass[self._anc[: self.depth, i]]
        return bool(np.any(masses < self._scales))

    def estimate(self, i: int, loss: float, sigma: np.ndarray) -> LevelEstimates:
        """Loss estimate for played action i, observed loss and level signs sigma (length H).

        Does not modify the state.
        """
        H, eta = self.depth, self.eta
        neg = np.flatnonzero(sigma < 0)
        level = int(neg[0]) if neg.size else H
        masses = self.mass[self._anc[:, i]]
        pi = self.p[i]
        if pi < P_FLOOR:
            self.events["clamped"] += 1
            log.warning("p[%d] = %g clamped to %g", i, pi, P_FLOOR)
            pi = P_FLOOR
        bar = np.zeros(H)
        bar[0] = loss / pi
        for h in range(1, H):
            if sigma[h - 1] < 0:
                break
            q = masses[h - 1] / max(masses[h], P_FLOOR)
            # softmin over A_h(i): the level-(h-1) estimate is bar[h-1] on A_{h-1}(i), 0 elsewhere
            bar[h] = -math.log1p(q * math.expm1(-2.0 * eta * bar[h - 1])) / eta
        truncated = bool(np.any(masses[:H] < self._scales))
        if truncated:
            tilde = np.zeros(self.k)
        else:
            tail = np.zeros(H + 1)
            tail[:H] = np.cumsum((sigma * bar)[::-1])[::-1]
            tilde = tail[self._lca[i]]
            tilde[i] += bar[0]
        return LevelEstimates(i, loss, sigma, level, bar, truncated, tilde)


class Exp3:
    """Importance-weighted exponential weights over k arms with uniform exploration mix gamma."""

    def __init__(self, k: int, eta: float, gamma: float = 0.0):
        if not eta > 0:
            raise BadEta(f"eta must be positive, got {eta}")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        self.k = k
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.logw = np.zeros(k)
        self._pending: tuple[int, float] | None = None

    @property
    def p(self) -> np.ndarray:
        w = np.exp(self.logw - self.logw.max())
        return (1.0 - self.gamma) * w / w.sum() + self.gamma / self.k

    def select(self, t: int, rng: np.random.Generator) -> int:
        q = self.p
        i = _sample(q, rng)
        self._pending = (i, float(q[i]))
        return i

    def observe(self, t: int, loss: float, rng: np.random.Generator) -> None:
        if self._pending is None:
            raise NotSelected("observe() called before select() in this round")
        if not 0.0 <= loss <= 1.0:
            raise OutOfRangeLoss(f"loss {loss} outside [0, 1]")
        i, qi = self._pending
        self.logw[i] -= self.eta * loss / qi
        self._pending = None


def exp3_default_eta(k: int, horizon: int) -> float:
    return math.sqrt(2.0 * math.log(max(k, 2)) / (k * horizon))


def smb_init(tree: HstTree, eta: float) -> SMB:
    return SMB(tree, eta)
