"""Transfer matrices, quasi-polynomial recursion, and wave reconstruction.

Vertex values psi_j := psi(j*pi) of any solution at energy E in a gap
satisfy the three-term relation

    psi_{j+1} + psi_{j-1} = 2 * xi_j(E) * psi_j,

propagated by the unimodular matrix N_j = [[2*xi_j, -1], [1, 0]] acting on
(psi_j, psi_{j-1}).  Products of N_j are evaluated through the P/Q
recursion, with a Chebyshev closed form when all vertices carry the same
coupling.  Reconstruction maps lattice data back to the continuum edge
functions; the gauge factors exp(+-iA(x - j*pi)) make those complex, but
all spectral logic stays real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ChainParams,
    c_kernel,
    cos_k,
    lambda_pair,
    lambda_small,
    on_flat_band,
    s_kernel,
    sin_k_over_k,
    xi,
)
from .errors import FlatBandPole


@dataclass(frozen=True)
class Transfer2:
    """Real 2x2 transfer matrix with unit determinant."""

    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def __matmul__(self, other: "Transfer2") -> "Transfer2":
        return Transfer2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def apply(self, v: Sequence[float]) -> np.ndarray:
        return np.array([self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])


@dataclass(frozen=True)
class PQState:
    """Quasi-polynomial quadruple (P_m, Q_m, P_{m-1}, Q_{m-1}).

    Seeds: P_0 = 1, Q_0 = 0 with (formal) P_{-1} = 0, Q_{-1} = -1 so the
    first advance reproduces P_1 = 2*xi_1, Q_1 = 1.  The unimodularity
    of the product reads Q_m * P_{m-1} - P_m * Q_{m-1} = 1 at every step.
    """

    P: float
    Q: float
    P_prev: float
    Q_prev: float
    m: int

    @classmethod
    def seed(cls) -> "PQState":
        return cls(P=1.0, Q=0.0, P_prev=0.0, Q_prev=-1.0, m=0)

    def det_defect(self) -> float:
        return self.Q * self.P_prev - self.P * self.Q_prev - 1.0


def pq_advance(state: PQState, xi_next: float) -> PQState:
    """One step of P_{m+1} = 2*xi_{m+1}*P_m - P_{m-1} (Q analogous)."""
    two_xi = 2.0 * xi_next
    return PQState(
        P=two_xi * state.P - state.P_prev,
        Q=two_xi * state.Q - state.Q_prev,
        P_prev=state.P,
        Q_prev=state.Q,
        m=state.m + 1,
    )


def local_matrix(E: float, gamma: float, params: ChainParams) -> Transfer2:
    """Single-vertex transfer matrix [[2*xi_j, -1], [1, 0]].

    gamma is the perturbation of the vertex coupling; the dispersion
    value uses alpha + gamma.
    """
    x = xi(E, params.alpha + gamma, params)
    return Transfer2(2.0 * x, -1.0, 1.0, 0.0)


def product_matrix(E: float, gammas: Sequence[float], params: ChainParams) -> Transfer2:
    """Ordered product N_m ... N_1 via the P/Q recursion."""
    if len(gammas) < 1:
        raise ValueError("need at least one vertex in the pattern")
    state = PQState.seed()
    for g in gammas:
        state = pq_advance(state, xi(E, params.alpha + g, params))
    return Transfer2(state.P, -state.Q, state.P_prev, -state.Q_prev)


def chebyshev_u(m: int, x: float) -> float:
    """Chebyshev polynomial of the second kind, stable on all of R.

    sin((m+1)phi)/sin(phi) with cos(phi) = x for |x| <= 1; the hyperbolic
    continuation sinh((m+1)t)/sinh(t), cosh(t) = |x|, with parity sign
    (-1)^m * U_m(|x|) for x < -1.
    """
    if m < 0:
        return 0.0
    ax = abs(x)
    sign = 1.0 if x >= 0 or m % 2 == 0 else -1.0
    if ax <= 1.0:
        phi = math.acos(ax)
        s = math.sin(phi)
        if s < 1e-12:
            return sign * (m + 1)
        return sign * math.sin((m + 1) * phi) / s
    t = math.acosh(ax)
    num = (m + 1) * t
    if num > 700.0:
        # would overflow; scale through exponentials
        return sign * math.exp(num - t) * (1.0 - math.exp(-2.0 * num)) / (1.0 - math.exp(-2.0 * t))
    return sign * math.sinh(num) / math.sinh(t)


def identical_closed_form(E: float, gamma: float, m: int, params: ChainParams) -> Transfer2:
    """Closed form of the m-fold product when every gamma_j equals gamma.

    Entries are Chebyshev polynomials of the second kind in xi_1; both
    the trigonometric (|xi_1| <= 1) and hyperbolic branches are covered.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    x1 = xi(E, params.alpha + gamma, params)
    return Transfer2(
        chebyshev_u(m, x1),
        -chebyshev_u(m - 1, x1),
        chebyshev_u(m - 1, x1),
        -chebyshev_u(m - 2, x1),
    )


def eigenvectors(E: float, params: ChainParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors u_1 = (1, lambda_2), u_2 = (1, lambda_1) of the
    unperturbed N(E); N u_i = lambda_i u_i.  Gap energies only."""
    l1, l2 = lambda_pair(E, params.alpha, params)
    return np.array([1.0, l2]), np.array([1.0, l1])


@dataclass(frozen=True)
class EdgeSamples:
    """Sampled continuum wave on one ring: upper component psi, lower phi."""

    j: int
    x: np.ndarray          # global coordinates in [j*pi, (j+1)*pi]
    psi: np.ndarray        # complex
    phi: np.ndarray        # complex

    def to_csv_rows(self) -> list[tuple[float, float, float, float, float]]:
        return [
            (float(xv), pv.real, pv.imag, fv.real, fv.imag)
            for xv, pv, fv in zip(self.x, self.psi, self.phi)
        ]


def _edge_coefficients(E, psi_j, psi_j1, params):
    """Slope coefficients of the reconstruction on edge I_j."""
    s = s_kernel(E)
    c = c_kernel(E)
    ph = params.flux_phase
    coef_psi = (psi_j1 * ph - psi_j * c) / s
    coef_phi = (psi_j1 * np.conj(ph) - psi_j * c) / s
    return coef_psi, coef_phi, c, s


def reconstruct_edge(
    E: float,
    psi_j: float,
    psi_j1: float,
    j: int,
    params: ChainParams,
    samples: int = 257,
) -> EdgeSamples:
    """Continuum wave on the ring I_j = (j*pi, (j+1)*pi) from the two
    neighboring vertex values; endpoints reproduce psi_j, psi_j1 exactly
    and upper/lower components share them."""
    if on_flat_band(E):
        raise FlatBandPole(f"reconstruction undefined at E = {E}")
    coef_psi, coef_phi, _, _ = _edge_coefficients(E, psi_j, psi_j1, params)
    u = np.linspace(0.0, math.pi, samples)
    cosk = np.array([cos_k(E, float(t)) for t in u])
    sink = np.array([sin_k_over_k(E, float(t)) for t in u])
    gauge = np.exp(-1j * params.A * u)
    psi = gauge * (psi_j * cosk + coef_psi * sink)
    phi = np.conj(gauge) * (psi_j * cosk + coef_phi * sink)
    return EdgeSamples(j=j, x=u + j * math.pi, psi=psi, phi=phi)


def edge_quasiderivatives(E: float, psi_j, psi_j1, params: ChainParams):
    """Covariant derivatives of the reconstructed edge at its endpoints.

    Returns (Dpsi_left, Dpsi_right, Dphi_left, Dphi_right) where left is
    the limit at (j*pi)+ and right at ((j+1)*pi)-.  D(e^{-iAu} g(u)) =
    e^{-iAu} g'(u) on the upper halfcircle and the conjugate phase below.
    """
    if on_flat_band(E):
        raise FlatBandPole(f"quasiderivatives undefined at E = {E}")
    coef_psi, coef_phi, c, s = _edge_coefficients(E, psi_j, psi_j1, params)
    ph = params.flux_phase
    dpsi_left = coef_psi
    dphi_left = coef_phi
    dpsi_right = np.conj(ph) * (-psi_j * E * s + coef_psi * c)
    dphi_right = ph * (-psi_j * E * s + coef_phi * c)
    return dpsi_left, dpsi_right, dphi_left, dphi_right


@dataclass(frozen=True)
class LatticeSolution:
    """Vertex values over a finite index window [j_start, j_start + len)."""

    E: float
    j_start: int
    values: np.ndarray

    @property
    def j_end(self) -> int:
        return self.j_start + len(self.values) - 1

    def value(self, j: int) -> float:
        return float(self.values[j - self.j_start])


def bound_state_lattice(
    E: float,
    gammas: Sequence[float],
    params: ChainParams,
    margin: int = 8,
) -> LatticeSolution:
    """Two-sided decaying lattice solution for a gap energy E.

    Geometric tails with ratio lambda(E) on both sides of the perturbed
    vertices 1..m (tails satisfy the unperturbed relation exactly), the
    perturbed recursion across the support.  At a characteristic-equation
    root the junction at vertex m+1 is seamless; otherwise the defect
    there measures the distance from the root.
    """
    lam = lambda_small(E, params.alpha, params)
    m = len(gammas)
    j_start = 1 - margin
    n_total = m + 1 + 2 * margin
    vals = np.zeros(n_total)
    # left tail: psi_{1-t} = lam^t, t = 0..margin
    for t in range(margin + 1):
        vals[margin - t] = lam**t
    # perturbed recursion across vertices 1..m gives psi_2..psi_{m+1}
    for j in range(1, m + 1):
        xi_j = xi(E, params.alpha + gammas[j - 1], params)
        idx = j - j_start
        vals[idx + 1] = 2.0 * xi_j * vals[idx] - vals[idx - 1]
    # right tail from psi_{m+1}
    top = m + 1 - j_start
    for t in range(1, margin + 1):
        vals[top + t] = vals[top] * lam**t
    return LatticeSolution(E=E, j_start=j_start, values=vals)


def vertex_condition_residual(
    E: float,
    lattice: LatticeSolution,
    gammas: Sequence[float],
    params: ChainParams,
) -> float:
    """Maximum violation of continuity and the delta-coupling condition.

    Reconstructs each pair of adjacent edges in the lattice window and
    evaluates, at every interior vertex j, the sum of outgoing covariant
    derivatives minus (alpha + gamma_j) * psi_j, plus the shared-value
    continuity defect.  gammas apply at vertices 1..m.
    """
    m = len(gammas)
    worst = 0.0
    for j in range(lattice.j_start + 1, lattice.j_end):
        psi_prev = lattice.value(j - 1)
        psi_here = lattice.value(j)
        psi_next = lattice.value(j + 1)
        # edge I_{j-1} ends at vertex j, edge I_j starts there
        _, dpsi_in, _, dphi_in = edge_quasiderivatives(E, psi_prev, psi_here, params)
        dpsi_out, _, dphi_out, _ = edge_quasiderivatives(E, psi_here, psi_next, params)
        coupling = params.alpha + (gammas[j - 1] if 1 <= j <= m else 0.0)
        delta = dpsi_out + dphi_out - dpsi_in - dphi_in - coupling * psi_here
        worst = max(worst, abs(delta))
        # continuity across the vertex (exact by construction; kept as a guard)
        left = reconstruct_edge(E, psi_prev, psi_here, j - 1, params, samples=2)
        right = reconstruct_edge(E, psi_here, psi_next, j, params, samples=2)
        worst = max(
            worst,
            abs(left.psi[-1] - right.psi[0]),
            abs(left.phi[-1] - right.phi[0]),
            abs(left.psi[-1] - left.phi[-1]),
        )
    return worst


def ring_l2_norm(
    E: float,
    psi_j: float,
    psi_j1: float,
    params: ChainParams,
    samples: int = 513,
) -> float:
    """L^2 norm (both components) of the reconstructed wave on ring I_j."""
    edge = reconstruct_edge(E, psi_j, psi_j1, params=params, j=0, samples=samples)
    density = np.abs(edge.psi) ** 2 + np.abs(edge.phi) ** 2
    return float(np.sqrt(np.trapezoid(density, edge.x)))
