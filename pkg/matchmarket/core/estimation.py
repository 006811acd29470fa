"""
Per-agent least-squares state, parameter estimates and confidence bands.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from matchmarket.config import settings
from matchmarket.exceptions import SingularDesignError


@dataclass
class DesignState:
    """Running least-squares statistics of one agent.

    ``V`` accumulates ``x x^T`` over every observed matched round and ``b``
    accumulates ``r x``; ``exploration_count`` counts exploration rounds only.
    """

    dim: int
    V: np.ndarray = field(default=None)  # type: ignore[assignment]
    b: np.ndarray = field(default=None)  # type: ignore[assignment]
    exploration_count: int = 0

    def __post_init__(self) -> None:
        if self.V is None:
            self.V = np.zeros((self.dim, self.dim))
        if self.b is None:
            self.b = np.zeros(self.dim)

    def update(self, x: np.ndarray, r: float, is_exploration: bool) -> "DesignState":
        """Add one observation in place and return ``self``."""
        x = np.asarray(x, dtype=float)
        self.V += np.outer(x, x)
        self.b += r * x
        if is_exploration:
            self.exploration_count += 1
        return self

    def lambda_min(self) -> float:
        return float(np.linalg.eigvalsh(self.V)[0])

    def is_invertible(self, tolerance: Optional[float] = None) -> bool:
        tol = settings.singular_tolerance if tolerance is None else tolerance
        return self.lambda_min() > tol

    def reset(self) -> None:
        self.V = np.zeros((self.dim, self.dim))
        self.b = np.zeros(self.dim)
        self.exploration_count = 0


@dataclass
class ConfidenceBand:
    """Per-arm estimated means with symmetric confidence widths."""

    mu_hat: np.ndarray
    width: np.ndarray

    @property
    def ucb(self) -> np.ndarray:
        return self.mu_hat + self.width

    @property
    def lcb(self) -> np.ndarray:
        return self.mu_hat - self.width

    @property
    def n_arms(self) -> int:
        return int(self.mu_hat.size)

    @classmethod
    def from_intervals(cls, lower, upper) -> "ConfidenceBand":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        return cls(mu_hat=(lower + upper) / 2.0, width=(upper - lower) / 2.0)


def _factor(state: DesignState, tolerance: Optional[float]):
    tol = settings.singular_tolerance if tolerance is None else tolerance
    lam = state.lambda_min()
    if lam <= tol:
        raise SingularDesignError(lam, tol)
    try:
        return cho_factor(state.V, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularDesignError(lam, tol) from exc


def estimate_theta(state: DesignState, tolerance: Optional[float] = None) -> np.ndarray:
    """
    Least-squares estimate ``V^{-1} b`` via a Cholesky solve.

    Raises:
        SingularDesignError: if ``lambda_min(V) <= tolerance``
    """
    return cho_solve(_factor(state, tolerance), state.b, check_finite=False)


def _inverse_diagonal(state: DesignState, tolerance: Optional[float]) -> np.ndarray:
    inv = cho_solve(_factor(state, tolerance), np.eye(state.dim), check_finite=False)
    return np.clip(np.diag(inv), 0.0, None)


def _log_t_squared(t: int) -> float:
    return math.log(float(max(t, 2)) ** 2)


def confidence_width(
    state: DesignState, x: np.ndarray, t: int, tolerance: Optional[float] = None
) -> float:
    """
    Per-direction confidence width of feature ``x`` at round ``t``.

    ``w = sum_l |x_l| * sqrt(2 * (V^{-1})_{ll} * log(t^2))`` over the standard
    basis. ``t`` is clamped to at least 2.
    """
    diag = _inverse_diagonal(state, tolerance)
    scale = np.sqrt(2.0 * diag * _log_t_squared(t))
    return float(np.abs(np.asarray(x, dtype=float)) @ scale)


def width_upper_bound(
    dim: int, feature_bound: float, kappa: float, t: int, exploration_count: int
) -> float:
    """Analytic cap on any width once ``exploration_count >= dim``.

    Uses ``||x||^2_{V^-1} <= L^2 d / (kappa * floor(T/d))`` per direction.
    """
    blocks = exploration_count // dim
    if blocks == 0 or kappa <= 0:
        return float("inf")
    t = max(t, 2)
    return 2.0 * feature_bound * math.sqrt(dim) * math.sqrt(math.log(t) / (kappa * blocks))


def bands(
    state: DesignState,
    features: np.ndarray,
    t: int,
    tolerance: Optional[float] = None,
) -> ConfidenceBand:
    """
    Confidence band for every arm.

    Args:
        state: the agent's design state
        features: ``(K, d)`` feature vectors of the agent
        t: current round (local round for restarted agents)

    Returns:
        ConfidenceBand with ``mu_hat = <theta_hat, x>``

    Raises:
        SingularDesignError: before the design matrix is invertible
    """
    factor = _factor(state, tolerance)
    theta_hat = cho_solve(factor, state.b, check_finite=False)
    inv_diag = np.clip(
        np.diag(cho_solve(factor, np.eye(state.dim), check_finite=False)), 0.0, None
    )
    scale = np.sqrt(2.0 * inv_diag * _log_t_squared(t))
    features = np.asarray(features, dtype=float)
    return ConfidenceBand(mu_hat=features @ theta_hat, width=np.abs(features) @ scale)


def direction_widths(state: DesignState, t: int, tolerance: Optional[float] = None) -> np.ndarray:
    """Per-basis-direction widths ``sqrt(2 (V^{-1})_{ll} log(t^2))``."""
    return np.sqrt(2.0 * _inverse_diagonal(state, tolerance) * _log_t_squared(t))


def count_direction_violations(
    state: DesignState, theta: np.ndarray, t: int, tolerance: Optional[float] = None
) -> int:
    """Directions ``l`` with ``|theta_hat_l - theta_l|`` above their width."""
    if not state.is_invertible(tolerance):
        return 0
    error = np.abs(estimate_theta(state, tolerance) - np.asarray(theta, dtype=float))
    return int(np.count_nonzero(error > direction_widths(state, t, tolerance)))
