"""Level-set truncation machinery certifying a positive temperature
lower bound on computed trajectories.

A ladder of levels C_k = exp(-M (1 - 2^{-k})) descends from 1 to
exp(-M).  For each level, a three-term energy over the sub-level set
{theta + omega <= C_k} is measured; if the sequence decays to zero the
temperature never reaches exp(-M) - omega.  An abstract superlinear
recursion (iterated with equality as the worst case) supplies the
analytic decay mechanism and a bisection locates its convergence
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import eval_conductivity, eval_viscosity
from .errors import DegenerateInputError
from .grid import grad_values, integrate_values
from .state import Trajectory

LADDER_DECAY_TOL = 1e-6
LEMMA_CONV_TOL = 1e-12


@dataclass
class DeGiorgiLadder:
    M: float
    omega: float = 0.0
    k_max: int = 8
    alpha: float = 2.0
    beta: float = 0.5
    levels: np.ndarray = field(init=False)
    start_times: np.ndarray = field(init=False)
    energies: list = field(default_factory=list)

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.alpha <= 1:
            raise ValueError("alpha must exceed 1")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        k = np.arange(self.k_max + 1)
        self.levels = np.exp(-self.M * (1.0 - 0.5 ** k))
        self.start_times = np.zeros(self.k_max + 1)

    @property
    def gamma(self) -> float:
        return min(0.5 * (self.alpha + self.beta), self.alpha)

    def check_floor(self, theta_floor: float) -> bool:
        """The bottom of the ladder must sit strictly below the initial
        temperature floor: exp(-M/2) < theta_floor."""
        return np.exp(-0.5 * self.M) < theta_floor


@dataclass
class Lemma62Params:
    C: float
    A: float
    beta1: float
    beta2: float
    K: float
    U0: float

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be non-negative")
        if self.A < 1:
            raise ValueError("A must be at least 1")
        if not (1.0 < self.beta1 < self.beta2):
            raise ValueError("exponents must satisfy 1 < beta1 < beta2")
        if self.K <= 0:
            raise ValueError("K must be positive")
        if self.U0 < 0:
            raise ValueError("U0 must be non-negative")


def truncation_phi(theta, C_k: float, omega: float = 0.0):
    """[ln(C_k / (theta + omega))]_+; zero once theta + omega >= C_k."""
    if C_k <= 0:
        raise ValueError("C_k must be positive")
    if omega < 0:
        raise ValueError("omega must be non-negative")
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError("theta must be non-negative")
    shifted = theta + omega
    if np.any(shifted == 0.0):
        raise DegenerateInputError(
            "truncation is infinite where theta + omega = 0")
    out = np.maximum(np.log(C_k / shifted), 0.0)
    return out if out.ndim else float(out)


def level_energy(traj: Trajectory, k: int, ladder: DeGiorgiLadder,
                 delta: float, laws) -> float:
    """Three-term level energy at ladder rung k:

        sup_t  int (delta + rho) phi_k
        + 2 (1 - delta) int_t int  mu(theta)/(theta+omega) 1_level |D(u)|^2
        + int_t int  kappa(theta)/(theta+omega)^2 1_level |grad theta|^2

    with trapezoid time quadrature from t = 0 to the final time.
    """
    if not traj.states:
        raise ValueError("empty trajectory")
    if k > ladder.k_max:
        raise ValueError("k exceeds the ladder length")
    grid = traj.grid
    C_k = float(ladder.levels[k])
    omega = ladder.omega

    sup_term = 0.0
    diss_series = []
    grad_series = []
    for s in traj.states:
        shifted = s.theta.values + omega
        if np.any(shifted == 0.0):
            raise DegenerateInputError(
                "truncation is infinite where theta + omega = 0")
        phi = np.maximum(np.log(C_k / shifted), 0.0)
        sup_term = max(sup_term,
                       integrate_values(grid, (delta + s.rho.values) * phi))
        mask = shifted <= C_k
        u = s.velocity(traj.basis)
        d12 = 0.5 * (u.du_dy + u.dv_dx)
        dsq = u.du_dx ** 2 + u.dv_dy ** 2 + 2.0 * d12 ** 2
        mu = np.asarray(eval_viscosity(traj.laws.viscosity, s.theta.values))
        diss_series.append(integrate_values(grid, mask * mu / shifted * dsq))
        tgx, tgy = grad_values(grid, s.theta.values)
        kap = np.asarray(eval_conductivity(traj.laws.conductivity, s.theta.values))
        grad_series.append(integrate_values(
            grid, mask * kap / shifted ** 2 * (tgx ** 2 + tgy ** 2)))

    times = traj.times
    if len(times) > 1:
        diss_int = float(np.trapezoid(diss_series, times))
        grad_int = float(np.trapezoid(grad_series, times))
    else:
        diss_int = grad_int = 0.0
    return sup_term + 2.0 * (1.0 - delta) * diss_int + grad_int


def ladder_run(traj: Trajectory, theta_floor: float, k_max: int = 8,
               omega: float = 0.0, delta: float = 0.0, laws=None,
               M: float | None = None) -> dict:
    """Measure the full ladder and certify the temperature lower bound.

    The default M = 2 ln(1/theta_floor) + ln 4 puts exp(-M/2) =
    theta_floor/2 strictly below the initial floor; pass M to override.
    """
    if theta_floor <= 0:
        raise ValueError("theta_floor must be positive")
    if M is None:
        M = 2.0 * float(np.log(1.0 / theta_floor)) + float(np.log(4.0))
    ladder = DeGiorgiLadder(M=M, omega=omega, k_max=k_max)
    U = [level_energy(traj, k, ladder, delta, laws) for k in range(k_max + 1)]
    ladder.energies = U
    nonincreasing = all(U[k + 1] <= U[k] * (1.0 + 1e-12) + 1e-300
                        for k in range(k_max))
    decay_ok = bool(nonincreasing
                    and U[-1] <= LADDER_DECAY_TOL * max(U[0], 1e-30))
    lower_bound = float(np.exp(-M) - omega)
    observed = traj.min_theta()
    if decay_ok and observed < lower_bound:
        raise AssertionError(
            f"certificate claims theta >= {lower_bound} but the trajectory "
            f"reaches {observed}")
    fit_C = _fit_recursion_constant(U, ladder)
    return {
        "M": M,
        "omega": omega,
        "k_max": k_max,
        "U_sequence": U,
        "decay_ok": decay_ok,
        "lower_bound": lower_bound,
        "observed_min_theta": observed,
        "fit_C": fit_C,
    }


def _fit_recursion_constant(U, ladder: DeGiorgiLadder):
    """Least-squares fit of C in U_k ~ C 2^{k alpha} U_{k-1}^gamma over
    the rungs with positive energy; purely diagnostic."""
    gamma = ladder.gamma
    samples = []
    for k in range(1, len(U)):
        if U[k] > 0 and U[k - 1] > 0:
            samples.append(U[k] / (2.0 ** (k * ladder.alpha) * U[k - 1] ** gamma))
    return float(np.mean(samples)) if samples else None


def certificate_text(cert: dict) -> str:
    """Structured text block for the diagnostics stream."""
    lines = [
        "[degiorgi-certificate]",
        f"M = {cert['M']!r}",
        f"omega = {cert['omega']!r}",
        f"k_max = {cert['k_max']}",
        "U_k = " + " ".join(repr(u) for u in cert["U_sequence"]),
        f"decay_ok = {str(cert['decay_ok']).lower()}",
        f"lower_bound = {cert['lower_bound']!r}",
        f"observed_min_theta = {cert['observed_min_theta']!r}",
    ]
    if cert.get("fit_C") is not None:
        lines.append(f"fit_C = {cert['fit_C']!r}")
    return "\n".join(lines) + "\n"


def lemma62_iterate(p: Lemma62Params, k_steps: int) -> dict:
    """Iterate U_k = C A^k / K (U_{k-1}^b1 + U_{k-1}^b2) with equality,
    the worst case the recursion inequality allows."""
    if k_steps < 1:
        raise ValueError("k_steps must be at least 1")
    seq = [p.U0]
    diverged = False
    for k in range(1, k_steps + 1):
        prev = seq[-1]
        try:
            with np.errstate(over="ignore"):
                nxt = p.C * p.A ** k / p.K * (prev ** p.beta1 + prev ** p.beta2)
        except OverflowError:
            nxt = float("inf")
        if not np.isfinite(nxt):
            diverged = True
            seq.append(float("inf"))
            break
        seq.append(float(nxt))
    converged = (not diverged) and seq[-1] < LEMMA_CONV_TOL
    return {"sequence": seq, "converged": converged, "diverged": diverged}


def lemma62_threshold(C: float, A: float, beta1: float, beta2: float,
                      U0: float, K_range=(1e-8, 1e8), k_steps: int = 200) -> float:
    """Bisect for the smallest K above which the recursion converges."""
    lo, hi = K_range
    if not (0 < lo < hi):
        raise ValueError("need 0 < K_range[0] < K_range[1]")

    def converges(K):
        return lemma62_iterate(
            Lemma62Params(C=C, A=A, beta1=beta1, beta2=beta2, K=K, U0=U0),
            k_steps)["converged"]

    if converges(lo):
        return lo
    if not converges(hi):
        raise ValueError("no convergence anywhere in the K range")
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
        if hi / lo < 1.0 + 1e-12:
            break
    return float(hi)
