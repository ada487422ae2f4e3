"""Benchmark models X' = A X + B with known exact solutions.

Four model families:

  oscillator   x'' + x + x^2 = 0 written as a 2d system; exact solution
               x(t) = x0 + a sn^2(omega t | m) in Jacobi elliptic functions.
  biomass      linear 3d cascade (young biomass, old biomass, dead trees)
               with triangular A and spectrum {-1, -3, -5}.
  trees        biomass plus a constant plantation term z_f.
  seasonal     biomass plus the periodic plantation z_f (1 + cos(omega t)).

The Jacobi functions and the complete elliptic integral are provided here
(arithmetic-geometric mean based) because the oscillator solution needs
them; the second argument is the parameter m (the squared modulus), the
convention with sn(u, 0) = sin(u).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_MODEL_KINDS = ("oscillator", "biomass", "trees", "seasonal")


# --------------------------------------------------------------------------
# elliptic integral and Jacobi functions
# --------------------------------------------------------------------------

def agm(a0: float, b0: float, tol: float = 1e-15, max_iter: int = 60):
    """Arithmetic-geometric mean of a0, b0 > 0.

    Returns (mean, iterations).  Quadratic convergence: well under 10
    iterations for the arguments arising from parameters m <= 0.99.
    """
    if a0 <= 0 or b0 <= 0:
        raise ValueError("agm needs positive arguments")
    a, b = float(a0), float(b0)
    for i in range(max_iter):
        if abs(a - b) <= tol * abs(a):
            return a, i
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a, max_iter


def elliptic_k(m: float) -> float:
    """Complete elliptic integral K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt.

    m is the parameter (squared modulus), 0 <= m < 1.  Computed as
    pi / (2 agm(1, sqrt(1 - m))).
    """
    if not 0.0 <= m < 1.0:
        raise ValueError(f"parameter m must be in [0, 1), got {m}")
    mean, _ = agm(1.0, math.sqrt(1.0 - m))
    return math.pi / (2.0 * mean)


def jacobi_sn_cn_dn(u: float, m: float) -> tuple[float, float, float]:
    """Jacobi elliptic sn, cn, dn of real u with parameter m in [0, 1].

    Descending Landen transformation: run the arithmetic-geometric mean up
    from (1, sqrt(1-m)), then recover the amplitude by the backward
    recurrence phi_{i-1} = (phi_i + asin((c_i/a_i) sin phi_i))/2.  The
    argument is first reduced to [0, K] with the quarter-period symmetries
    sn(u + 2K) = -sn(u), cn(u + 2K) = -cn(u), sn(2K - u) = sn(u),
    cn(2K - u) = -cn(u), dn unchanged, which keeps the principal arcsin
    branch valid for any real u.
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"parameter m must be in [0, 1], got {m}")
    u = float(u)
    if m == 0.0:
        return math.sin(u), math.cos(u), 1.0
    if m == 1.0:
        sech = 1.0 / math.cosh(u)
        return math.tanh(u), sech, sech
    period = 4.0 * elliptic_k(m)
    v = math.fmod(u, period)
    if v < 0.0:
        v += period
    sign_sn = 1.0
    sign_cn = 1.0
    if v >= 0.5 * period:
        v -= 0.5 * period
        sign_sn, sign_cn = -1.0, -1.0
    if v > 0.25 * period:
        v = 0.5 * period - v
        sign_cn = -sign_cn

    a_seq = [1.0]
    c_seq = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c_seq[-1]) > 1e-15 and len(a_seq) < 40:
        a = a_seq[-1]
        a_seq.append(0.5 * (a + b))
        c_seq.append(0.5 * (a - b))
        b = math.sqrt(a * b)
    levels = len(a_seq) - 1
    phi = (2.0 ** levels) * a_seq[-1] * v
    for i in range(levels, 0, -1):
        s = c_seq[i] / a_seq[i] * math.sin(phi)
        phi = 0.5 * (phi + math.asin(max(-1.0, min(1.0, s))))
    sn = math.sin(phi)
    cn = math.cos(phi)
    dn = math.sqrt(1.0 - m * sn * sn)
    return sign_sn * sn, sign_cn * cn, dn


def jacobi_sn(u: float, m: float) -> float:
    """sn(u | m); see jacobi_sn_cn_dn."""
    return jacobi_sn_cn_dn(u, m)[0]


# --------------------------------------------------------------------------
# oscillator closed form
# --------------------------------------------------------------------------

def oscillator_params(x0: float) -> tuple[float, float, float]:
    """Amplitude a, frequency omega, parameter m of the exact solution
    x(t) = x0 + a sn^2(omega t | m) of x'' + x + x^2 = 0 with x(0) = x0,
    x'(0) = 0.

    Valid for 0 < x0 < 1/2 (bounded oscillations); then a < 0, omega > 0
    and 0 < m < 1.  The three coefficient identities
    2 a omega^2 = -x0 (1 + x0), 4 omega^2 (1 + m) = 1 + 2 x0 and
    6 m omega^2 = -a make the ansatz solve the equation exactly.
    """
    if not 0.0 < x0 < 0.5:
        raise ValueError(f"x0 must lie in (0, 1/2), got {x0}")
    s = math.sqrt(3.0 * (1.0 - 2.0 * x0) * (3.0 + 2.0 * x0))
    a = -12.0 * x0 * (1.0 + x0) / (s + 3.0 * (1.0 + 2.0 * x0))
    omega = 0.5 * math.sqrt(0.5 + x0 + s / 6.0)
    m = 0.5 + 3.0 * (2.0 * x0 * x0 + 2.0 * x0 - 1.0) / (3.0 + (1.0 + 2.0 * x0) * s)
    return a, omega, m


def oscillator_period(x0: float) -> float:
    """Period of the exact oscillator solution, 2 K(m) / omega."""
    _, omega, m = oscillator_params(x0)
    return 2.0 * elliptic_k(m) / omega


def oscillator_energy(state) -> float:
    """Conserved energy E = y^2/2 + x^2/2 + x^3/3 of x'' + x + x^2 = 0."""
    x, y = float(state[0]), float(state[1])
    return 0.5 * y * y + 0.5 * x * x + x ** 3 / 3.0


# --------------------------------------------------------------------------
# model container
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Forcing:
    """Forcing term B of X' = A X + B.

    kind is one of "none", "constant", "time", "state".  For "time",
    antiderivative (if set) is the componentwise primitive of time_fn, used
    for the exact integral-mean approximation.  For "state",
    nonlocal_product(x_k, x_next) is the semi-implicit two-level form of
    the quadratic term and state_fn its plain one-level evaluation.
    """

    kind: str
    constant: np.ndarray | None = None
    time_fn: Callable[[float], np.ndarray] | None = None
    antiderivative: Callable[[float], np.ndarray] | None = None
    state_fn: Callable[[np.ndarray], np.ndarray] | None = None
    nonlocal_product: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def pointwise(self, t: float, x: np.ndarray) -> np.ndarray:
        """B evaluated at one time/state point."""
        if self.kind == "none":
            return np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "constant":
            return self.constant
        if self.kind == "time":
            return self.time_fn(t)
        return self.state_fn(x)


@dataclass(frozen=True)
class OdeModel:
    """A benchmark system X' = A X + B with its exact solution.

    spectrum lists (eigenvalue, multiplicity) pairs of a_matrix; exact(t)
    returns the analytic state; equilibrium, if not None, is a fixed point
    of the flow; energy, if not None, is a conserved quantity evaluator.
    """

    name: str
    n: int
    a_matrix: np.ndarray
    spectrum: tuple[tuple[complex, int], ...]
    forcing: Forcing
    initial_state: np.ndarray
    exact: Callable[[float], np.ndarray]
    params: dict = field(default_factory=dict)
    equilibrium: np.ndarray | None = None
    energy: Callable[[np.ndarray], float] | None = None

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        """The vector field A x + B(t, x)."""
        return self.a_matrix @ np.asarray(x, dtype=float) + self.forcing.pointwise(t, x)


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

def _make_oscillator(x0: float = 0.25) -> OdeModel:
    a_par, omega, m_par = oscillator_params(x0)

    def exact(t: float) -> np.ndarray:
        sn, cn, dn = jacobi_sn_cn_dn(omega * t, m_par)
        x = x0 + a_par * sn * sn
        y = 2.0 * a_par * omega * sn * cn * dn
        return np.array([x, y])

    def state_b(x: np.ndarray) -> np.ndarray:
        # multiply instead of ** so overflow yields inf (blow-up record)
        x0_val = float(x[0])
        return np.array([0.0, -(x0_val * x0_val)])

    def nonlocal_b(x_k: np.ndarray, x_next: np.ndarray) -> np.ndarray:
        # two-level product form -x_k x_{k+1}, linear in the unknown level
        return np.array([0.0, -float(x_k[0]) * float(x_next[0])])

    return OdeModel(
        name="oscillator",
        n=2,
        a_matrix=np.array([[0.0, 1.0], [-1.0, 0.0]]),
        spectrum=((1j, 1), (-1j, 1)),
        forcing=Forcing(kind="state", state_fn=state_b, nonlocal_product=nonlocal_b),
        initial_state=np.array([x0, 0.0]),
        exact=exact,
        params={"x0": x0, "a": a_par, "omega": omega, "m": m_par},
        equilibrium=np.array([0.0, 0.0]),
        energy=oscillator_energy,
    )


_BIOMASS_A = np.array(
    [
        [-1.0, 3.0, 0.0],
        [0.0, -3.0, 5.0],
        [0.0, 0.0, -5.0],
    ]
)
_BIOMASS_SPECTRUM = ((-1.0 + 0j, 1), (-3.0 + 0j, 1), (-5.0 + 0j, 1))


def _biomass_homogeneous(t: float, z0: float) -> np.ndarray:
    e1, e3, e5 = math.exp(-t), math.exp(-3.0 * t), math.exp(-5.0 * t)
    return np.array(
        [
            15.0 / 8.0 * (e1 - 2.0 * e3 + e5) * z0,
            5.0 / 2.0 * (e3 - e5) * z0,
            e5 * z0,
        ]
    )


def _trees_exact(t: float, z0: float, zf: float) -> np.ndarray:
    e1, e3, e5 = math.exp(-t), math.exp(-3.0 * t), math.exp(-5.0 * t)
    out = _biomass_homogeneous(t, z0)
    out[0] += (8.0 - 15.0 * e1 + 10.0 * e3 - 3.0 * e5) / 8.0 * zf
    out[1] += (2.0 - 5.0 * e3 + 3.0 * e5) / 6.0 * zf
    out[2] += (1.0 - e5) / 5.0 * zf
    return out


def _make_biomass(z0: float = 1.0) -> OdeModel:
    if z0 <= 0:
        raise ValueError(f"z0 must be positive, got {z0}")
    return OdeModel(
        name="biomass",
        n=3,
        a_matrix=_BIOMASS_A.copy(),
        spectrum=_BIOMASS_SPECTRUM,
        forcing=Forcing(kind="none"),
        initial_state=np.array([0.0, 0.0, z0]),
        exact=lambda t: _biomass_homogeneous(t, z0),
        params={"z0": z0},
        equilibrium=np.zeros(3),
    )


def _make_trees(z0: float = 1.0, zf: float = 0.5) -> OdeModel:
    if z0 <= 0:
        raise ValueError(f"z0 must be positive, got {z0}")
    if zf < 0:
        raise ValueError(f"zf must be nonnegative, got {zf}")
    return OdeModel(
        name="trees",
        n=3,
        a_matrix=_BIOMASS_A.copy(),
        spectrum=_BIOMASS_SPECTRUM,
        forcing=Forcing(kind="constant", constant=np.array([0.0, 0.0, zf])),
        initial_state=np.array([0.0, 0.0, z0]),
        exact=lambda t: _trees_exact(t, z0, zf),
        params={"z0": z0, "zf": zf},
        # A X + B vanishes at (zf, zf/3, zf/5): long-time limit of every orbit
        equilibrium=np.array([zf, zf / 3.0, zf / 5.0]),
    )


def _make_seasonal(z0: float = 1.0, zf: float = 0.5, omega: float = 2.0 * math.pi) -> OdeModel:
    if z0 <= 0:
        raise ValueError(f"z0 must be positive, got {z0}")
    if zf < 0:
        raise ValueError(f"zf must be nonnegative, got {zf}")
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    w2 = omega * omega
    d1, d3, d5 = 1.0 + w2, 9.0 + w2, 25.0 + w2

    def exact(t: float) -> np.ndarray:
        e1, e3, e5 = math.exp(-t), math.exp(-3.0 * t), math.exp(-5.0 * t)
        cw, sw = math.cos(omega * t), math.sin(omega * t)
        out = _trees_exact(t, z0, zf)
        out[0] += 15.0 * (3.0 * (5.0 - 3.0 * w2) * cw + omega * (23.0 - w2) * sw) / (d1 * d3 * d5) * zf
        out[0] += 15.0 / 8.0 * (-e1 / d1 + 6.0 * e3 / d3 - 5.0 * e5 / d5) * zf
        out[1] += 5.0 * ((15.0 - w2) * cw + 8.0 * omega * sw) / (d3 * d5) * zf
        out[1] += 5.0 / 2.0 * (-3.0 * e3 / d3 + 5.0 * e5 / d5) * zf
        out[2] += (5.0 * cw + omega * sw) / d5 * zf
        out[2] += -5.0 * e5 / d5 * zf
        return out

    def time_fn(t: float) -> np.ndarray:
        return np.array([0.0, 0.0, zf * (1.0 + math.cos(omega * t))])

    def antiderivative(t: float) -> np.ndarray:
        return np.array([0.0, 0.0, zf * (t + math.sin(omega * t) / omega)])

    return OdeModel(
        name="seasonal",
        n=3,
        a_matrix=_BIOMASS_A.copy(),
        spectrum=_BIOMASS_SPECTRUM,
        forcing=Forcing(kind="time", time_fn=time_fn, antiderivative=antiderivative),
        initial_state=np.array([0.0, 0.0, z0]),
        exact=exact,
        params={"z0": z0, "zf": zf, "omega": omega},
    )


_BUILDERS = {
    "oscillator": _make_oscillator,
    "biomass": _make_biomass,
    "trees": _make_trees,
    "seasonal": _make_seasonal,
}


def make_model(kind: str, **params) -> OdeModel:
    """Build a benchmark model by id.

    kind is one of "oscillator" (param x0), "biomass" (z0), "trees"
    (z0, zf), "seasonal" (z0, zf, omega).  Parameter domains are checked;
    defaults reproduce the reference configurations (x0 = 0.25; z0 = 1,
    zf = 0.5, omega = 2 pi).
    """
    if kind not in _BUILDERS:
        raise ValueError(f"unknown model {kind!r}; valid kinds: {', '.join(_MODEL_KINDS)}")
    return _BUILDERS[kind](**params)
