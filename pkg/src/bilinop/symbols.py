"""Bilinear symbols: representations, named constructors, class checks, decompositions.

Slot convention: the first argument's frequency is ``xi`` and the second's is
``eta`` throughout.  ``x``-dependent symbols that the operators evaluate
quickly are *separable*: a finite sum of ``a_t(x) * mu_t(xi, eta)`` where each
``a_t`` is a trigonometric polynomial on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .exceptions import BadCutoffSpec, CoverageGap, NotMultiplier, NyquistViolation
from .frames import BumpProfile, LPFrame, phi_hat, psi_hat
from .grid import GridSpec, SampledFunction, SpectralCoefficients, analyze

# --------------------------------------------------------------------------
# class parameters


@dataclass(frozen=True)
class SymbolClassParams:
    order: float = 0.0
    rho: float = 1.0
    delta: float = 0.0
    theta: float | None = None

    def __post_init__(self):
        if not (0 <= self.delta <= 1 and 0 <= self.rho <= 1):
            raise ValueError("rho and delta must lie in [0, 1]")
        if self.delta > self.rho:
            raise ValueError(f"delta={self.delta} exceeds rho={self.rho}")
        if self.theta is not None and not (-math.pi / 2 < self.theta <= math.pi / 2):
            raise ValueError("theta must lie in (-pi/2, pi/2]")

    def base(self, xi, eta):
        """The quantity raised to the class exponent: ``1 + |eta - tan(theta) xi|`` etc."""
        xi, eta = np.asarray(xi, dtype=float), np.asarray(eta, dtype=float)
        if self.theta is None:
            return 1.0 + np.abs(xi) + np.abs(eta)
        if math.isclose(self.theta, math.pi / 2):
            return 1.0 + np.abs(xi)
        return 1.0 + np.abs(eta - math.tan(self.theta) * xi)

    def exponent(self, alpha: int, beta: int, gamma: int) -> float:
        return self.order + self.delta * alpha - self.rho * (beta + gamma)

    def label(self) -> str:
        th = "" if self.theta is None else f";theta={self.theta:.6g}"
        return f"BS^{self.order:g}_{{{self.rho:g},{self.delta:g}{th}}}"


#: the class of every modulation invariant symbol built from a linear S^0_{1,1} symbol
BS0_11_DIAG = SymbolClassParams(0.0, 1.0, 1.0, math.pi / 4)


# --------------------------------------------------------------------------
# representations


class Symbol:
    """Base class.  ``evaluate`` broadcasts over ``x``, ``xi`` and ``eta``."""

    class_params: SymbolClassParams | None = None
    x_independent = False

    def evaluate(self, x, xi, eta):
        raise NotImplementedError

    def __call__(self, x, xi, eta):
        return self.evaluate(x, xi, eta)

    def scaled(self, c: complex) -> "Symbol":
        base = self
        return General(lambda x, xi, eta: c * base.evaluate(x, xi, eta), self.class_params)


class Multiplier(Symbol):
    """``x``-independent symbol ``sigma(xi, eta)``."""

    x_independent = True

    def __init__(self, func: Callable, class_params: SymbolClassParams | None = None):
        self.func = func
        self.class_params = class_params

    def multiplier(self, xi, eta):
        xi, eta = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
        return np.asarray(self.func(xi, eta), dtype=complex) * np.ones(xi.shape)

    def evaluate(self, x, xi, eta):
        x, xi, eta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, eta)))
        return self.multiplier(xi, eta)

    def scaled(self, c: complex) -> "Multiplier":
        func = self.func
        return Multiplier(lambda xi, eta: c * func(xi, eta), self.class_params)


class DiagonalKernel(Multiplier):
    """``sigma(xi, eta) = m(xi - eta)`` with ``m`` supported in ``[-radius, radius]``."""

    def __init__(self, m: Callable, radius: float, class_params: SymbolClassParams | None = None):
        super().__init__(lambda xi, eta: m(xi - eta), class_params)
        self.m = m
        self.radius = float(radius)


class General(Symbol):
    """Arbitrary ``sigma(x, xi, eta)``; evaluated point by point."""

    def __init__(self, func: Callable, class_params: SymbolClassParams | None = None):
        self.func = func
        self.class_params = class_params

    def evaluate(self, x, xi, eta):
        x, xi, eta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, eta)))
        return np.asarray(self.func(x, xi, eta), dtype=complex) * np.ones(x.shape)


@dataclass(frozen=True)
class SeparableTerm:
    """One term ``xfactor(x) * multiplier(xi, eta)``; ``xfactor=None`` means 1."""

    xfactor: SpectralCoefficients | None
    multiplier: Callable
    label: tuple = ()


class SeparableSymbol(Symbol):
    def __init__(self, grid: GridSpec, terms: Sequence[SeparableTerm], class_params=None):
        self.grid = grid
        self.terms = tuple(terms)
        self.class_params = class_params
        for t in self.terms:
            if t.xfactor is not None and t.xfactor.grid != grid:
                raise ValueError("x-factors must live on the symbol's grid")

    def evaluate(self, x, xi, eta):
        x, xi, eta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, eta)))
        out = np.zeros(x.shape, dtype=complex)
        for t in self.terms:
            mult = np.asarray(t.multiplier(xi, eta), dtype=complex)
            if t.xfactor is None:
                out += mult
            else:
                out += t.xfactor.evaluate_at(x) * mult
        return out


class ModulationInvariant(SeparableSymbol):
    """``sigma(x, xi, eta) = tau(x, u)`` with ``u = xi - eta`` or ``u = eta - xi``.

    ``tau`` is kept in closed form for pointwise evaluation; ``terms`` carry the
    same symbol in separable form for the operators.
    """

    def __init__(self, grid, tau: Callable, terms, orientation: str = "xi-eta", class_params=None):
        if orientation not in ("xi-eta", "eta-xi"):
            raise ValueError("orientation must be 'xi-eta' or 'eta-xi'")
        super().__init__(grid, terms, class_params)
        self.tau = tau
        self.orientation = orientation

    def difference(self, xi, eta):
        return xi - eta if self.orientation == "xi-eta" else eta - xi

    def evaluate(self, x, xi, eta):
        x, xi, eta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, eta)))
        return np.asarray(self.tau(x, self.difference(xi, eta)), dtype=complex)


class ElementarySum(SeparableSymbol):
    """``sum_{j,l} m_{j,l}(2^j x) w_j(xi - eta) chi(l + 2^-j (xi + eta))``.

    ``w_j`` are the dyadic level cutoffs of the frame and ``chi`` the unit
    translation partition (see :func:`translation_cutoff`).  Each
    ``m_{j,l}(2^j x)`` is stored as coefficients on the grid.
    """

    def __init__(self, grid, frame: LPFrame, cells, class_params=BS0_11_DIAG):
        terms = []
        for j, l, coeffs in cells:
            terms.append(
                SeparableTerm(coeffs, _elementary_multiplier(frame.profile, j, l), label=(j, l))
            )
        super().__init__(grid, terms, class_params)
        self.frame = frame

    @property
    def cells(self):
        return [t.label for t in self.terms]


def level_cutoff(profile: BumpProfile, j: int, u):
    """Dyadic cutoff in ``u = xi - eta``; level 0 absorbs the low-pass part."""
    u = np.asarray(u, dtype=float)
    if j == 0:
        return phi_hat(profile, u / 2.0)
    return psi_hat(profile, u * 2.0**-j)


def translation_cutoff(profile: BumpProfile, v):
    """``chi(v) = rho(1 - |v|)``: supported in ``[-1, 1]``, and ``sum_l chi(v + l) = 1``."""
    return profile(1.0 - np.abs(np.asarray(v, dtype=float)))


def _elementary_multiplier(profile, j, l):
    def mult(xi, eta):
        return level_cutoff(profile, j, xi - eta) * translation_cutoff(profile, l + (xi + eta) * 2.0**-j)

    return mult


# --------------------------------------------------------------------------
# named constructors

_CE_OUTER = (5.0 / 7.0, 5.0 / 3.0)
_CE_PLATEAU = (5.0 / 6.0, 4.0 / 3.0)


def counterexample_psi_hat(profile: BumpProfile | None = None) -> Callable:
    """Even cutoff: zero off ``5/7 < |xi| < 5/3``, one on ``5/6 <= |xi| <= 4/3``."""
    profile = profile or BumpProfile()
    (a, d), (b, c) = _CE_OUTER, _CE_PLATEAU

    def psi(xi):
        r = np.abs(np.asarray(xi, dtype=float))
        rise = profile((r - a) / (b - a))
        fall = 1.0 - profile((r - c) / (d - c))
        return np.where(r <= b, rise, fall)

    return psi


def validate_counterexample_cutoff(psi: Callable, samples: int = 40001) -> None:
    xi = np.linspace(-2.5, 2.5, samples)
    xi = np.concatenate([xi, [a * s for a in (*_CE_OUTER, *_CE_PLATEAU) for s in (1, -1)]])
    vals = np.asarray(psi(xi), dtype=complex)
    r = np.abs(xi)
    if np.any(np.abs(vals.imag) > 0) or np.any(vals.real < 0):
        raise BadCutoffSpec("cutoff must be real and nonnegative")
    outside = (r <= _CE_OUTER[0]) | (r >= _CE_OUTER[1])
    if np.any(vals[outside] != 0):
        raise BadCutoffSpec("cutoff must vanish outside 5/7 < |xi| < 5/3")
    plateau = (r >= _CE_PLATEAU[0]) & (r <= _CE_PLATEAU[1])
    if np.any(vals[plateau] != 1):
        raise BadCutoffSpec("cutoff must equal 1 on 5/6 <= |xi| <= 4/3")


def make_counterexample_symbol(
    grid: GridSpec, j_max: int, *, j_min: int = 4, psi: Callable | None = None
) -> ModulationInvariant:
    """``sigma(x, xi, eta) = sum_{j_min<=j<=j_max} exp(-i 2^j x) psi^(2^-j (eta - xi))``.

    Oriented as ``eta - xi``: this is the orientation for which
    ``T(f, psi1) = (sum a_j) psi1^2`` holds exactly.
    """
    psi = psi or counterexample_psi_hat()
    validate_counterexample_cutoff(psi)
    if j_max < j_min:
        raise ValueError("j_max must be >= j_min")
    grid.require_below_nyquist(2.0**j_max * _CE_OUTER[1], "2^j_max * 5/3")
    terms = []
    for j in range(j_min, j_max + 1):
        shift = 2.0**j * grid.L
        if abs(shift - round(shift)) > 1e-9:
            raise NyquistViolation(f"exp(-i 2^{j} x) is not a lattice harmonic for L={grid.L:g}")
        xf = SpectralCoefficients(grid, indices=[-int(round(shift))], values=[1.0])
        terms.append(SeparableTerm(xf, _dyadic_multiplier(psi, j, "eta-xi"), label=(j,)))
    js = np.arange(j_min, j_max + 1, dtype=float)

    def tau(x, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        for j in js:
            out += np.exp(-1j * 2.0**j * x) * psi(u * 2.0**-j)
        return out

    sym = ModulationInvariant(grid, tau, terms, orientation="eta-xi", class_params=BS0_11_DIAG)
    sym.j_min, sym.j_max, sym.psi = j_min, j_max, psi
    return sym


def _dyadic_multiplier(cutoff, j, orientation):
    scale = 2.0**-j
    if orientation == "eta-xi":
        return lambda xi, eta: cutoff((eta - xi) * scale)
    return lambda xi, eta: cutoff((xi - eta) * scale)


def counterexample_psi1(grid: GridSpec, profile: BumpProfile | None = None) -> SpectralCoefficients:
    """Band-limited bump with spectrum in ``[0, 1/3]`` (sparse coefficients)."""
    profile = profile or BumpProfile()
    top = int(math.floor(grid.L / 3.0 + 1e-12))
    if top < 1:
        raise BadCutoffSpec(f"[0, 1/3] holds no nonzero lattice frequency for L={grid.L:g}")
    m = np.arange(0, top + 1)
    u = 3.0 * m / grid.L
    vals = np.where(u <= 0.5, profile(2 * u), profile(2 - 2 * u))
    keep = vals > 0
    return SpectralCoefficients(grid, indices=m[keep], values=vals[keep])


def make_reduced_symbol(coeffs: Sequence[Callable], frame: LPFrame) -> ModulationInvariant:
    """``sigma(x, xi, eta) = sum_j m_j(2^j x) Psi^(2^-j (xi - eta))``.

    Each ``m_j`` is a vectorized callable; ``m_j(2^j x)`` must be periodic and
    resolved on the frame's grid.
    """
    grid = frame.grid
    if len(coeffs) > frame.k_max + 1:
        raise NyquistViolation(
            f"{len(coeffs)} levels requested but the grid resolves only 0..{frame.k_max}"
        )
    terms = []
    for j, m in enumerate(coeffs):
        samples = SampledFunction(grid, np.asarray(m(2.0**j * grid.x), dtype=complex) * np.ones(grid.N))
        c = analyze(samples)
        arr = c.to_array()
        total = np.sum(np.abs(arr) ** 2)
        high = np.sum(np.abs(arr[np.abs(grid.indices) >= grid.N // 4]) ** 2)
        if total > 0 and high > 1e-24 * total:
            raise NyquistViolation(f"m_{j}(2^{j} x) is not resolved on the grid (N={grid.N})")
        terms.append(SeparableTerm(c.to_sparse(1e-15), _dyadic_multiplier(frame.psi, j, "xi-eta"), label=(j,)))
    coeffs = list(coeffs)

    def tau(x, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        for j, m in enumerate(coeffs):
            out += m(2.0**j * x) * frame.psi(u * 2.0**-j)
        return out

    return ModulationInvariant(grid, tau, terms, orientation="xi-eta", class_params=BS0_11_DIAG)


def transpose_symbol(sigma: Symbol, which: int) -> Multiplier:
    """Symbol of ``T^{*1}`` (``which=1``) or ``T^{*2}`` (``which=2``).

    ``<T*1(h, g), f> = <T(f, g), h> = <T*2(f, h), g>`` under the unconjugated
    pairing; for ``x``-independent symbols this is a substitution.
    """
    if not isinstance(sigma, Multiplier):
        raise NotMultiplier("transposes are implemented for x-independent symbols only")
    func = sigma.func
    if which == 1:
        return Multiplier(lambda xi, eta: func(-xi - eta, eta), sigma.class_params)
    if which == 2:
        return Multiplier(lambda xi, eta: func(xi, -xi - eta), sigma.class_params)
    raise ValueError("which must be 1 or 2")


# --------------------------------------------------------------------------
# class estimate checking


def central_stencil(derivative: int, accuracy: int = 4):
    """Offsets and weights of the central finite difference of the given order."""
    if derivative == 0:
        return np.array([0]), np.array([1.0])
    half = (derivative + 1) // 2 + accuracy // 2 - 1
    offsets = np.arange(-half, half + 1)
    n = offsets.size
    vander = np.vander(offsets.astype(float), n, increasing=True).T
    rhs = np.zeros(n)
    rhs[derivative] = math.factorial(derivative)
    weights = np.linalg.solve(vander, rhs)
    weights[np.abs(weights) < 1e-13] = 0.0
    return offsets, weights


@dataclass
class SamplePlan:
    """Where class estimates are probed.

    Frequencies are drawn log-uniformly in dyadic shells ``2^k <= r < 2^(k+1)``
    for ``k`` in ``shells`` and rounded to multiples of ``freq_step``.  For
    diagonal classes (``theta = pi/4``) the shells are in ``eta - xi`` and extra
    points with ``|eta - xi| < 4`` refine the strip where the weight degenerates.
    """

    x: np.ndarray
    x_step: float
    freq_step: float
    shells: Sequence[int] = tuple(range(0, 8))
    per_shell: int = 24
    seed: int = 0
    diagonal_refine: int = 16

    @classmethod
    def for_grid(cls, grid: GridSpec, shells, n_x: int = 4, **kw) -> "SamplePlan":
        rng = np.random.default_rng(kw.get("seed", 0))
        x = grid.x[np.sort(rng.choice(grid.N, size=n_x, replace=False))]
        return cls(x=x, x_step=grid.h, freq_step=1.0 / grid.L, shells=tuple(shells), **kw)

    def points(self, params: SymbolClassParams):
        rng = np.random.default_rng(self.seed)
        xi_all, eta_all, shell_all = [], [], []
        for k in self.shells:
            r = 2.0 ** (k + rng.random(self.per_shell))
            s1 = rng.choice([-1.0, 1.0], self.per_shell)
            if params.theta is not None and math.isclose(params.theta, math.pi / 4):
                u = s1 * r
                xi = rng.uniform(-1, 1, self.per_shell) * 2.0 ** (k + 1)
                eta = xi + u
            else:
                s2 = rng.choice([-1.0, 1.0], self.per_shell)
                xi = s1 * r
                eta = s2 * 2.0 ** (k + rng.random(self.per_shell))
            xi_all.append(xi)
            eta_all.append(eta)
            shell_all.append(np.full(self.per_shell, k))
        if self.diagonal_refine and params.theta is not None and math.isclose(params.theta, math.pi / 4):
            xi = rng.uniform(-1, 1, self.diagonal_refine) * 2.0 ** (max(self.shells) + 1)
            xi_all.append(xi)
            eta_all.append(xi + rng.uniform(-4, 4, self.diagonal_refine))
            shell_all.append(np.full(self.diagonal_refine, -1))
        step = self.freq_step
        xi = np.round(np.concatenate(xi_all) / step) * step
        eta = np.round(np.concatenate(eta_all) / step) * step
        return xi, eta, np.concatenate(shell_all)


@dataclass
class ClassReport:
    params: SymbolClassParams
    constants: dict
    shell_constants: dict
    shell_slopes: dict
    max_violation_ratio: float
    unbounded_rows: list

    def to_json(self) -> dict:
        key = lambda abg: ".".join(str(i) for i in abg)  # noqa: E731
        return {
            "class": self.params.label(),
            "constants": {key(k): v for k, v in self.constants.items()},
            "shellConstants": {
                key(k): {str(s): c for s, c in v.items()} for k, v in self.shell_constants.items()
            },
            "shellSlopes": {key(k): v for k, v in self.shell_slopes.items()},
            "maxViolationRatio": self.max_violation_ratio,
            "unboundedRows": [key(k) for k in self.unbounded_rows],
        }


def check_class_estimate(
    sigma: Symbol, params: SymbolClassParams, max_order: int, plan: SamplePlan
) -> ClassReport:
    """Fit the smallest constants ``C_abg`` with ``|d_x^a d_xi^b d_eta^g sigma| <= C w^e``.

    Derivatives are 4th-order central differences with steps ``plan.x_step``
    and ``plan.freq_step``.  Reports only: for every row the fitted constant,
    its value restricted to each dyadic shell and the log2-slope of the shell
    constants (a slope near 1 per shell means the bound is off by a growing
    factor).  ``max_violation_ratio`` is the largest outermost/innermost shell
    constant ratio over rows with a non-negligible innermost constant.
    """
    if max_order > 4:
        raise ValueError("finite differences beyond order 4 are not reliable; use max_order <= 4")
    xi, eta, shell = plan.points(params)
    x = np.asarray(plan.x, dtype=float)
    X = x[:, None]
    XI, ETA = xi[None, :], eta[None, :]
    base = params.base(xi, eta)[None, :]
    orders = [
        (a, b, g)
        for a in range(max_order + 1)
        for b in range(max_order + 1 - a)
        for g in range(max_order + 1 - a - b)
    ]
    constants, shell_consts, slopes = {}, {}, {}
    for a, b, g in orders:
        oa, wa = central_stencil(a)
        ob, wb = central_stencil(b)
        og, wg = central_stencil(g)
        deriv = np.zeros((x.size, xi.size), dtype=complex)
        mass = np.zeros((x.size, xi.size))
        for (i, da), (k, db), (n, dg) in product(enumerate(oa), enumerate(ob), enumerate(og)):
            w = wa[i] * wb[k] * wg[n]
            if w == 0:
                continue
            vals = sigma.evaluate(X + da * plan.x_step, XI + db * plan.freq_step, ETA + dg * plan.freq_step)
            deriv += w * vals
            mass += abs(w) * np.abs(vals)
        # differences at the rounding level of the stencil are zero derivatives
        deriv[np.abs(deriv) <= 64 * np.finfo(float).eps * mass] = 0.0
        deriv /= plan.x_step**a * plan.freq_step ** (b + g)
        ratio = np.max(np.abs(deriv), axis=0) / base[0] ** params.exponent(a, b, g)
        constants[(a, b, g)] = float(ratio.max())
        per = {}
        for s in sorted(set(shell.tolist())):
            if s >= 0:
                per[int(s)] = float(ratio[shell == s].max())
        shell_consts[(a, b, g)] = per
        ks = np.array(sorted(per))
        vals = np.array([per[k] for k in ks])
        good = vals > 0
        if good.sum() >= 2:
            slopes[(a, b, g)] = float(np.polyfit(ks[good], np.log2(vals[good]), 1)[0])
        else:
            slopes[(a, b, g)] = 0.0
    ref = constants[(0, 0, 0)] if constants[(0, 0, 0)] > 0 else 1.0
    worst = 0.0
    for k, per in shell_consts.items():
        if not per:
            continue
        lo, hi = per[min(per)], per[max(per)]
        if lo > 1e-9 * ref:
            worst = max(worst, hi / lo)
    unbounded = [k for k, s in slopes.items() if s > 0.5]
    return ClassReport(params, constants, shell_consts, slopes, worst, unbounded)


# --------------------------------------------------------------------------
# elementary decomposition


@dataclass
class ElementaryTerm:
    j: int
    l: int
    center: float
    x: np.ndarray
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray  # shape (len(x), K, K), axes (x, a, b)

    def series(self, xi, eta):
        """Truncated Fourier series of the localized piece at ``(xi, eta)``, per ``x``."""
        p = np.asarray(xi, dtype=float) * 2.0**-self.j - self.center
        q = np.asarray(eta, dtype=float) * 2.0**-self.j - self.center
        ea = np.exp(1j * np.multiply.outer(p, self.a))
        eb = np.exp(1j * np.multiply.outer(q, self.b))
        return np.einsum("sa,xab,sb->xs", ea, self.gamma, eb)


@dataclass
class ElementaryDecomposition:
    """Localized pieces and their Fourier coefficients.

    ``residual`` is the largest gap between ``sigma`` and the sum of its exact
    pieces on the check samples (zero wherever the cells cover the sample);
    ``series_residual`` additionally includes the truncation of every piece's
    Fourier series to ``K x K`` modes.
    """

    terms: list
    residual: float
    series_residual: float
    coverage_min: float
    uncovered: list
    decay_order: int
    decay_exponent: float
    decay_constant: float
    decay_by_radius: dict
    doubling_factors: dict

    @property
    def decay_ok(self) -> bool:
        """Every doubling of ``|a| + |b|`` in the fitted range shrinks the ``|gamma|`` envelope by ``2^(M/2)``."""
        if not self.doubling_factors:
            return False
        return min(self.doubling_factors.values()) >= 2.0 ** (self.decay_order / 2)

    def reconstruct(self, xi, eta):
        """Sum of the truncated series of all pieces, shape ``(len(x), len(xi))``."""
        xi, eta = np.asarray(xi, dtype=float), np.asarray(eta, dtype=float)
        out = None
        for t in self.terms:
            vals = t.series(xi, eta) * _cell_mask(t.j, t.l, xi, eta)
            out = vals if out is None else out + vals
        return out

    def to_json(self) -> dict:
        terms = []
        for t in self.terms:
            gamma = {}
            for ia, a in enumerate(t.a):
                for ib, b in enumerate(t.b):
                    gamma[f"{int(a)},{int(b)}"] = [
                        [float(z.real), float(z.imag)] for z in t.gamma[:, ia, ib]
                    ]
            terms.append({"j": t.j, "l": t.l, "x": t.x.tolist(), "gamma": gamma})
        return {
            "terms": terms,
            "residual": self.residual,
            "seriesResidual": self.series_residual,
            "coverageMin": self.coverage_min,
            "uncovered": [list(map(float, u)) for u in self.uncovered],
            "decayOrder": self.decay_order,
            "decayExponent": self.decay_exponent,
            "decayConstant": self.decay_constant,
            "doublingFactors": {str(r): v for r, v in self.doubling_factors.items()},
        }


def _cell_mask(j, l, xi, eta):
    p, q = xi * 2.0**-j, eta * 2.0**-j
    return (np.abs(p - q) <= 2.0 + 1e-12) & (np.abs(l + p + q) <= 1.0 + 1e-12)


def cell_weight(profile: BumpProfile, j: int, l: int, xi, eta):
    return level_cutoff(profile, j, np.asarray(xi) - eta) * translation_cutoff(
        profile, l + (np.asarray(xi) + eta) * 2.0**-j
    )


def decompose_elementary(
    sigma: Symbol,
    frame: LPFrame,
    j_range: Sequence[int],
    l_range: Sequence[int] | Callable[[int], Sequence[int]],
    *,
    decay_order: int = 4,
    n_fourier: int = 64,
    x=None,
    samples=None,
    require_coverage: bool = True,
) -> ElementaryDecomposition:
    """Localize ``sigma`` to cells ``(j, l)`` and expand each piece in Fourier series.

    The piece for ``(j, l)`` is ``sigma * w_j(xi - eta) * chi(l + 2^-j (xi + eta))``;
    in the rescaled variables ``(p, q) = 2^-j (xi, eta)`` it lives in a square of
    side 3 centred at ``(-l/2, -l/2)`` and is expanded on the ``2 pi``-periodic
    box around it, giving coefficients ``gamma_{a,b}(x)``.

    ``samples`` is a pair of arrays ``(xi, eta)`` on which the reconstruction is
    checked; uncovered samples (cutoff weights summing to less than one) raise
    :class:`CoverageGap` unless ``require_coverage`` is false.  ``l_range`` may
    depend on ``j``.
    """
    profile = frame.profile
    x = np.asarray(frame.grid.x[:: max(1, frame.grid.N // 4)] if x is None else x, dtype=float)
    K = int(n_fourier)
    s = np.arange(K)
    freqs = np.fft.fftfreq(K, 1.0 / K)
    sign = (-1.0) ** freqs
    terms = []
    for j in j_range:
        ls = l_range(j) if callable(l_range) else l_range
        for l in ls:
            c = -l / 2.0
            grid_pts = c - math.pi + 2 * math.pi * s / K
            P, Q = np.meshgrid(grid_pts, grid_pts, indexing="ij")
            xi, eta = P * 2.0**j, Q * 2.0**j
            w = cell_weight(profile, j, l, xi, eta)
            vals = sigma.evaluate(x[:, None, None], xi[None], eta[None]) * w[None]
            gamma = np.fft.fft2(vals, axes=(1, 2)) / K**2 * sign[None, :, None] * sign[None, None, :]
            terms.append(ElementaryTerm(int(j), int(l), c, x, freqs, freqs, gamma))

    # decay of |gamma_{a,b}| in |a| + |b|, fitted on the asymptotic range [K/8, K/2)
    radius = np.abs(freqs)[:, None] + np.abs(freqs)[None, :]
    by_r = {}
    for t in terms:
        mag = np.max(np.abs(t.gamma), axis=0)
        for r in range(0, K // 2):
            by_r[r] = max(by_r.get(r, 0.0), float(mag[radius == r].max()))
    r0 = max(1, K // 8)
    rs = np.array([r for r in range(r0, K // 2) if by_r.get(r, 0) > 0])
    if rs.size >= 2:
        decay_exp = float(-np.polyfit(np.log(1 + rs), np.log([by_r[r] for r in rs]), 1)[0])
    else:
        decay_exp = float("inf")
    # doubling factors use the tail envelope sup_{r' >= r}, which is immune to
    # the oscillation of the raw anti-diagonal maxima
    envelope, run = {}, 0.0
    for r in range(K // 2 - 1, -1, -1):
        run = max(run, by_r.get(r, 0.0))
        envelope[r] = run
    doubling = {}
    r = r0
    while 2 * r < K // 2:
        if envelope[2 * r] > 0:
            doubling[r] = envelope[r] / envelope[2 * r]
        r *= 2
    decay_const = max((v * (1 + r) ** decay_order for r, v in by_r.items()), default=0.0)

    residual = series_residual = 0.0
    coverage_min, uncovered = 1.0, []
    if samples is not None:
        sxi, seta = (np.asarray(a, dtype=float) for a in samples)
        cover = np.zeros(sxi.shape)
        for t in terms:
            cover += cell_weight(profile, t.j, t.l, sxi, seta)
        coverage_min = float(cover.min()) if cover.size else 1.0
        bad = cover < 1 - 1e-12
        uncovered = list(zip(sxi[bad].tolist(), seta[bad].tolist()))
        if uncovered and require_coverage:
            raise CoverageGap(f"{len(uncovered)} sample(s) not covered by the requested cells", uncovered)
        exact = sigma.evaluate(x[:, None], sxi[None, :], seta[None, :])
        approx = np.zeros_like(exact)
        for t in terms:
            inside = _cell_mask(t.j, t.l, sxi, seta)
            if inside.any():
                approx[:, inside] += t.series(sxi[inside], seta[inside])
        if exact.size:
            residual = float(np.max(np.abs(exact * (1 - cover)[None, :])))
            series_residual = float(np.max(np.abs(exact - approx)))
    return ElementaryDecomposition(
        terms, residual, series_residual, coverage_min, uncovered, decay_order, decay_exp,
        decay_const, by_r, doubling,
    )
