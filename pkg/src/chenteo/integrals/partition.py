"""The classical Maxwell partition function Z_c(tau) = sum_m exp(-i pi m Q m^T tau)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergentSum, ToleranceUnreachable
from .quadrature import pairwise_sum

M_CAP = 200


@dataclass(frozen=True)
class PartitionResult:
    tau: complex
    truncation: int
    value: complex
    tail_bound: float


def _tail_bound(beta: float, M: int) -> float:
    """Bound on sum over |m|_inf > M of exp(-beta |m|^2), m in Z^2."""
    q = math.exp(-beta)
    one_dim_all = 1.0 + 2.0 * q / (1.0 - q)
    # sum_{n > M} exp(-beta n^2) <= exp(-beta (M+1)^2) / (1 - exp(-beta (2M + 3)))
    one_dim_tail = 2.0 * math.exp(-beta * (M + 1) ** 2) / (1.0 - math.exp(-beta * (2 * M + 3)))
    return 2.0 * one_dim_tail * one_dim_all


def truncated_sum(Q, tau: complex, M: int) -> complex:
    n = np.arange(-M, M + 1)
    m1, m2 = np.meshgrid(n, n, indexing="ij")
    quad = Q[0, 0] * m1**2 + 2 * Q[0, 1] * m1 * m2 + Q[1, 1] * m2**2
    terms = np.exp(-1j * math.pi * quad * tau)
    return complex(pairwise_sum(terms.real), pairwise_sum(terms.imag))


def partition_classical(Q, tau: complex, tol: float = 1e-12) -> PartitionResult:
    Q = np.asarray(getattr(Q, "Q", Q), dtype=float)
    tau = complex(tau)
    if tau.imag <= 0:
        raise DivergentSum("Im(tau) must be positive")
    Q = 0.5 * (Q + Q.T)
    top = float(np.max(np.linalg.eigvalsh(Q)))
    if top >= 0:
        raise DivergentSum("Q is not negative definite; the lattice sum diverges")
    beta = math.pi * tau.imag * (-top)
    M = 0
    while _tail_bound(beta, M) >= tol:
        M += 1
        if M > M_CAP:
            raise ToleranceUnreachable(f"tail bound above {tol} at M = {M_CAP}")
    return PartitionResult(tau, M, truncated_sum(Q, tau, M), _tail_bound(beta, M))
