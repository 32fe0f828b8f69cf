"""Exact GAN dynamics on a finite support.

The discriminator best response is ``D* = p_r / (p_r + p_g)``. Against a
frozen ``D*`` the generator objective is linear in ``p_g``, so its best
response puts all mass on the points of ``Supp(p_r)`` with the smallest
ratio ``alpha0 = p_g0 / p_r``. Alternating the two exhibits mode collapse
whenever ``alpha0`` is not constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SUM_TOL = 1e-12
TIE_TOL = 1e-12
IDENTITY_TOL = 1e-10
LOG4 = math.log(4.0)


class SupportMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteDensity:
    support: tuple
    probs: np.ndarray

    def __init__(self, probs, support=None):
        p = np.asarray(probs, dtype=np.float64).reshape(-1)
        sup = tuple(range(len(p))) if support is None else tuple(support)
        if len(sup) != len(p):
            raise ValueError("support and probs differ in length")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "support", sup)

    @classmethod
    def normalized(cls, weights, support=None):
        w = np.asarray(weights, dtype=np.float64)
        return cls(w / w.sum(), support)

    def supp(self):
        """Boolean mask of points with nonzero mass."""
        return self.probs > 0

    def __len__(self):
        return len(self.probs)

    def __eq__(self, other):
        return (isinstance(other, DiscreteDensity) and self.support == other.support
                and np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.support, self.probs.tobytes()))


def _pair(p_r, p_g):
    if not isinstance(p_r, DiscreteDensity):
        p_r = DiscreteDensity(p_r)
    if not isinstance(p_g, DiscreteDensity):
        p_g = DiscreteDensity(p_g)
    if p_r.support != p_g.support:
        raise SupportMismatch("densities are not defined on the same point set")
    return p_r, p_g


def union_support(p_r, p_g):
    p_r, p_g = _pair(p_r, p_g)
    return (p_r.probs + p_g.probs) > 0


def optimal_discriminator(p_r, p_g):
    """``D*(x) = p_r / (p_r + p_g)`` on ``Supp(p_r) | Supp(p_g)``, in support order."""
    p_r, p_g = _pair(p_r, p_g)
    m = union_support(p_r, p_g)
    return p_r.probs[m] / (p_r.probs[m] + p_g.probs[m])


def alpha_ratio(p_r, p_g):
    """``alpha(x) = p_g / p_r`` on ``Supp(p_r)``."""
    p_r, p_g = _pair(p_r, p_g)
    m = p_r.supp()
    return p_g.probs[m] / p_r.probs[m]


def discriminator_from_alpha(alpha):
    return 1.0 / (np.asarray(alpha) + 1.0)


def _alpha_constant(alpha):
    scale = max(1.0, float(np.max(np.abs(alpha))))
    return float(alpha.max() - alpha.min()) <= TIE_TOL * scale


def generator_best_response(p_r, p_g0):
    """Minimiser of ``sum p_g log(alpha0 / (alpha0 + 1))`` over the simplex on ``Supp(p_r)``.

    Mass is spread uniformly over the argmin set of ``alpha0``. When
    ``alpha0`` is constant every feasible point is optimal and ``p_g0`` is
    returned as is.
    """
    p_r, p_g0 = _pair(p_r, p_g0)
    sr = p_r.supp()
    if not sr.any():
        raise ValueError("Supp(p_r) is empty")
    alpha = alpha_ratio(p_r, p_g0)
    if _alpha_constant(alpha):
        return p_g0
    scale = max(1.0, float(np.max(np.abs(alpha))))
    ties = alpha <= alpha.min() + TIE_TOL * scale
    out = np.zeros(len(p_r))
    idx = np.flatnonzero(sr)[ties]
    out[idx] = 1.0 / len(idx)
    return DiscreteDensity(out, p_r.support)


def generator_objective(p_r, p_g0, p_g):
    """Value of the linearised generator objective at ``p_g`` (``-inf`` allowed)."""
    p_r, p_g0 = _pair(p_r, p_g0)
    p_g = np.asarray(p_g.probs if isinstance(p_g, DiscreteDensity) else p_g, dtype=np.float64)
    sr = p_r.supp()
    a = alpha_ratio(p_r, p_g0)
    with np.errstate(divide="ignore"):
        coef = np.log(a / (a + 1.0))
    w = p_g[sr]
    terms = np.where(w > 0, w * coef, 0.0)
    return float(terms.sum())


def _xlogy_ratio(x, y):
    """Elementwise ``x log(x / y)`` with ``0 log 0 = 0``."""
    out = np.zeros_like(x)
    m = x > 0
    out[m] = x[m] * np.log(x[m] / y[m])
    return out


def kl_divergence(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any((p > 0) & (q <= 0)):
        return math.inf
    return float(_xlogy_ratio(p, q).sum())


def gan_value_direct(p_r, p_g):
    p_r, p_g = _pair(p_r, p_g)
    s = p_r.probs + p_g.probs
    return float(_xlogy_ratio(p_r.probs, s).sum() + _xlogy_ratio(p_g.probs, s).sum())


def gan_value_decomposed(p_r, p_g):
    p_r, p_g = _pair(p_r, p_g)
    m = 0.5 * (p_r.probs + p_g.probs)
    return -LOG4 + kl_divergence(p_r.probs, m) + kl_divergence(p_g.probs, m)


def gan_value(p_r, p_g):
    """``C(G)`` at the optimal discriminator, i.e. ``-log 4 + 2 JSD(p_r, p_g)``.

    Evaluated directly and through the KL decomposition; raises if the two
    disagree by more than 1e-10.
    """
    direct = gan_value_direct(p_r, p_g)
    decomposed = gan_value_decomposed(p_r, p_g)
    if abs(direct - decomposed) > IDENTITY_TOL:
        raise ArithmeticError(f"value identity violated: {direct!r} vs {decomposed!r}")
    return direct


def collapse_metric(p_r, p_g):
    """p_r-weighted coefficient of variation of alpha over ``Supp(p_r)``."""
    p_r, p_g = _pair(p_r, p_g)
    sr = p_r.supp()
    if not sr.any():
        raise ValueError("Supp(p_r) is empty")
    w = p_r.probs[sr]
    a = p_g.probs[sr] / w
    mean = float((w * a).sum())
    if mean <= 0.0 or _alpha_constant(a):
        return 0.0
    var = float((w * (a - mean) ** 2).sum())
    return math.sqrt(var) / mean


@dataclass
class DynamicsStep:
    index: int
    p_g: DiscreteDensity
    alpha: np.ndarray
    d_star: np.ndarray
    collapse: float
    value: float

    def to_dict(self):
        return {
            "step": self.index,
            "p_g": self.p_g.probs.tolist(),
            "alpha": self.alpha.tolist(),
            "d_star": self.d_star.tolist(),
            "collapse": self.collapse,
            "value": self.value,
        }


@dataclass
class DynamicsTrajectory:
    p_r: DiscreteDensity
    steps: list[DynamicsStep] = field(default_factory=list)

    def supports(self):
        return [tuple(np.flatnonzero(s.p_g.probs > 0)) for s in self.steps]

    def to_jsonl(self):
        return "".join(json.dumps(s.to_dict()) + "\n" for s in self.steps)


def _snapshot(i, p_r, p_g):
    return DynamicsStep(
        index=i,
        p_g=p_g,
        alpha=alpha_ratio(p_r, p_g),
        d_star=optimal_discriminator(p_r, p_g),
        collapse=collapse_metric(p_r, p_g),
        value=gan_value(p_r, p_g),
    )


def run_dynamics(p_r, p_g_init, steps):
    """Alternate exact discriminator and generator best responses.

    Entry 0 of the trajectory is the initial state; entry ``k`` is the
    state after ``k`` rounds.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    p_r, p_g = _pair(p_r, p_g_init)
    traj = DynamicsTrajectory(p_r, [_snapshot(0, p_r, p_g)])
    for k in range(1, steps + 1):
        p_g = generator_best_response(p_r, p_g)
        traj.steps.append(_snapshot(k, p_r, p_g))
    return traj
