"""Numerical probes of the fractional heat semigroup ``S(t) = exp(-t (-Delta)^alpha)``.

The probes check exponents, not constants:

* ``decay_exponent_fit`` measures the power of t in
  ``||(-Delta)^{nu/2} S(t) f||_p <= C t^{-nu/(2 alpha) - (3/(2 alpha))(1/r - 1/p)} ||f||_r``;
* ``duhamel_scaling_probe`` measures the power of T in the space-time bound
  for ``int_0^t (-Delta)^{nu/2} S(t-s) f(s) ds``;
* ``admissible_triplet_check`` evaluates the admissibility relations;
* ``hardy_probe`` evaluates ``sup_x (|.|^{-gamma} * |u|^2) / ||u||^2_{H-dot^{gamma/2}}``.

A bound of this kind is only attained by data with no intrinsic length
scale, so each probe uses scale-free ("critical") test data: the discrete
delta for r = 1, the spectrum ``|k|^{-3/r}`` for r > 1, and for p = r = 2
the L^2 operator norm of the multiplier itself. The periodic box limits
the power law at both ends. Fits therefore only use times whose diffusion
length ``ell = t^{1/(2 alpha)}`` is large against the grid spacing
(``exp(-t k_max^{2 alpha}) <= CUTOFF_SUPPRESSION``) and small against the
box (``t k_min^{2 alpha} <= BOX_MODE_LIMIT``).

Everything here works on half-spectrum (real-to-complex) transforms: the
test data and symbols are real and even.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma as gamma_fn

from .spectral import Grid3, Multiplier, apply_multiplier, make_grid

__all__ = [
    "heat_symbol",
    "heat_semigroup_apply",
    "DecayProbe",
    "DecayFit",
    "DegenerateFitError",
    "QuadratureError",
    "decay_exponent_fit",
    "standard_probe_matrix",
    "run_probe_matrix",
    "TripletVerdict",
    "admissible_triplet_check",
    "DuhamelConfig",
    "DuhamelResult",
    "duhamel_scaling_probe",
    "duhamel_integral_symbol",
    "critical_spectrum",
    "resolution_window",
    "riesz_potential",
    "hardy_probe",
    "fit_to_csv",
    "verdicts_to_json",
    "CUTOFF_SUPPRESSION",
    "BOX_MODE_LIMIT",
]

DIM = 3
CUTOFF_SUPPRESSION = 1e-4
BOX_MODE_LIMIT = 0.3
MIN_FIT_SAMPLES = 5


class DegenerateFitError(ValueError):
    """Too few samples survive the resolution window."""


class QuadratureError(RuntimeError):
    """Time quadrature did not converge."""


def heat_symbol(grid: Grid3, t: float, alpha: float) -> Multiplier:
    """``exp(-t |k|^{2 alpha})`` on the full spectrum."""
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return Multiplier(grid, np.exp(-t * grid.k_squared**alpha))


def heat_semigroup_apply(f: np.ndarray, grid: Grid3, t: float, alpha: float) -> np.ndarray:
    """Apply ``S_alpha(t)`` to a field (batch axes allowed)."""
    if t == 0:
        return np.array(f, dtype=np.complex128, copy=True)
    return apply_multiplier(f, heat_symbol(grid, t, alpha))


# ---------------------------------------------------------------------------
# half-spectrum helpers


def _half_k_abs(grid: Grid3) -> np.ndarray:
    k = grid.freq_axes[0]
    kz = np.abs(k[: grid.n // 2 + 1])
    return np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2 + kz[None, None, :] ** 2)


def _to_real(grid: Grid3, half: np.ndarray) -> np.ndarray:
    return sfft.irfftn(half, s=grid.shape) / grid.cell_volume


def _norm(grid: Grid3, g: np.ndarray, p: float) -> float:
    a = np.abs(g)
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))


def _power(kabs: np.ndarray, expo: float) -> np.ndarray:
    """``|k|^expo`` with ``0^0 = 1`` and the zero mode set to 0 for negative powers."""
    if expo == 0:
        return np.ones_like(kabs)
    out = np.zeros_like(kabs)
    nz = kabs > 0
    out[nz] = kabs[nz] ** expo
    return out


def critical_spectrum(grid: Grid3, r: float) -> np.ndarray:
    """Half spectrum of the scale-free L^r-critical profile ``|x|^{-3/r}``.

    r = 1 gives the unit-mass discrete delta. For 1 < r < inf the profile is
    ``F^{-1}|k|^{3/r - 3}``; the lattice sum differs from the continuum
    profile by an almost constant offset of order ``L^{-3/r}``, which is
    removed through the zero mode by matching the continuum profile on the
    shell ``L/8 <= |x| <= L/4``.
    """
    kabs = _half_k_abs(grid)
    if r == 1:
        return np.ones_like(kabs)
    a = DIM / r
    spectrum = _power(kabs, a - DIM)
    # continuum F^{-1}[|k|^{a-3}] = c |x|^{-a}
    c = gamma_fn(a / 2) / (2 ** (DIM - a) * np.pi ** (DIM / 2) * gamma_fn((DIM - a) / 2))
    f = _to_real(grid, spectrum)
    idx = np.arange(grid.n)
    d = np.minimum(idx, grid.n - idx) * grid.spacing
    rad = np.sqrt(d[:, None, None] ** 2 + d[None, :, None] ** 2 + d[None, None, :] ** 2)
    shell = (rad >= grid.box_length / 8) & (rad <= grid.box_length / 4)
    offset = float(np.median(f[shell] - c * rad[shell] ** -a))
    spectrum[0, 0, 0] = -offset * grid.box_length**DIM
    return spectrum


# ---------------------------------------------------------------------------
# decay exponents


@dataclass(frozen=True)
class DecayProbe:
    """One cell of the smoothing-estimate matrix.

    Parameters
    ----------
    alpha, nu : float
        Semigroup order and number of derivatives.
    p, r : float
        Target and source Lebesgue exponents, ``1 <= r <= p <= inf``.
    t_samples : tuple of float
        Strictly increasing sample times spanning at least two decades.
        ``None`` picks 64 geometric samples covering diffusion lengths from
        0.3 h to L/2.
    test_function : str
        ``"auto"`` (critical data, or the operator norm when p = r = 2),
        ``"delta"``, ``"critical"``, ``"operator_norm"`` or ``"gaussian"``
        (unit mass, width 4 h).
    """

    alpha: float
    nu: float
    p: float
    r: float
    t_samples: tuple | None = None
    test_function: str = "auto"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.nu < 0:
            raise ValueError("nu must be non-negative")
        if not (1 <= self.r <= self.p):
            raise ValueError(f"need 1 <= r <= p, got r={self.r}, p={self.p}")
        if self.test_function not in ("auto", "delta", "critical", "operator_norm", "gaussian"):
            raise ValueError(f"unknown test function {self.test_function!r}")
        if self.t_samples is not None:
            t = np.asarray(self.t_samples, dtype=float)
            if t.ndim != 1 or t.size < 2 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
                raise ValueError("t_samples must be positive and strictly increasing")
            if t[-1] / t[0] < 100.0 * (1 - 1e-12):
                raise ValueError("t_samples must span at least two decades")
            object.__setattr__(self, "t_samples", tuple(float(v) for v in t))

    @property
    def predicted_slope(self) -> float:
        inv_p = 0.0 if np.isinf(self.p) else 1.0 / self.p
        return -self.nu / (2 * self.alpha) - (DIM / (2 * self.alpha)) * (1.0 / self.r - inv_p)

    def resolved_test_function(self) -> str:
        if self.test_function != "auto":
            return self.test_function
        if self.p == 2 and self.r == 2:
            return "operator_norm"
        return "delta" if self.r == 1 else "critical"

    def times(self, grid: Grid3) -> np.ndarray:
        if self.t_samples is not None:
            return np.asarray(self.t_samples)
        return _default_times(grid, self.alpha)


def _default_times(grid: Grid3, alpha: float, count: int = 64) -> np.ndarray:
    ell_lo, ell_hi = 0.3 * grid.spacing, 0.5 * grid.box_length
    return np.geomspace(ell_lo ** (2 * alpha), ell_hi ** (2 * alpha), count)


@dataclass
class DecayFit:
    probe: DecayProbe
    fitted_slope: float
    predicted_slope: float
    relative_gap: float
    t: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)
    used: np.ndarray = field(repr=False)

    @property
    def window(self) -> tuple[float, float]:
        tu = self.t[self.used]
        return float(tu[0]), float(tu[-1])

    def passed(self, tol: float = 0.05, zero_tol: float = 0.02) -> bool:
        if self.predicted_slope == 0:
            return abs(self.fitted_slope) <= zero_tol
        return self.relative_gap <= tol

    def verdict(self, tol: float = 0.05, zero_tol: float = 0.02) -> dict:
        pr = self.probe
        return {
            "alpha": pr.alpha,
            "nu": pr.nu,
            "p": "inf" if np.isinf(pr.p) else pr.p,
            "r": pr.r,
            "test_function": pr.resolved_test_function(),
            "predicted": self.predicted_slope,
            "fitted": self.fitted_slope,
            "gap": self.relative_gap,
            "window": list(self.window),
            "samples_used": int(self.used.sum()),
            "pass": self.passed(tol, zero_tol),
        }


def resolution_window(grid: Grid3, alpha: float, t: np.ndarray,
                      cutoff: float = CUTOFF_SUPPRESSION, box_limit: float = BOX_MODE_LIMIT) -> np.ndarray:
    """Mask of times that are neither grid- nor box-limited."""
    t = np.asarray(t, dtype=float)
    k_max = grid.k_max
    k_min = grid.dk
    ok_grid = np.exp(-t * k_max ** (2 * alpha)) <= cutoff
    ok_box = t * k_min ** (2 * alpha) <= box_limit
    return ok_grid & ok_box


def _slope(t, y):
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


def relative_gap(fitted: float, predicted: float) -> float:
    """``|fitted - predicted| / |predicted|``; the absolute gap when the prediction is 0."""
    if predicted == 0:
        return abs(fitted)
    return abs(fitted - predicted) / abs(predicted)


def decay_norm_series(probe: DecayProbe, grid: Grid3) -> tuple[np.ndarray, np.ndarray]:
    """``||(-Delta)^{nu/2} S(t) f||_p`` at every sample time."""
    t = probe.times(grid)
    kabs = _half_k_abs(grid)
    kind = probe.resolved_test_function()
    deriv = _power(kabs, probe.nu)
    lam = kabs ** (2 * probe.alpha)
    if kind == "operator_norm":
        if not (probe.p == 2 and probe.r == 2):
            raise ValueError("operator_norm test function is only defined for p = r = 2")
        return t, np.array([float(np.max(deriv * np.exp(-ti * lam))) for ti in t])
    if kind == "delta":
        spectrum = np.ones_like(kabs)
    elif kind == "critical":
        spectrum = critical_spectrum(grid, probe.r)
    else:
        sigma = 4 * grid.spacing
        spectrum = np.exp(-0.5 * sigma * sigma * kabs * kabs)
    base = spectrum * deriv
    norms = np.array([_norm(grid, _to_real(grid, base * np.exp(-ti * lam)), probe.p) for ti in t])
    return t, norms


def decay_exponent_fit(probe: DecayProbe, grid: Grid3 | None = None,
                       cutoff: float = CUTOFF_SUPPRESSION, box_limit: float = BOX_MODE_LIMIT) -> DecayFit:
    """Least-squares log-log slope of the norm series over the resolved window.

    ``grid`` defaults to 128^3 points with unit spacing (only ratios of the
    diffusion length to h and L matter).

    Raises
    ------
    DegenerateFitError
        If fewer than five samples fall inside the window.
    """
    grid = make_grid(128, 128.0) if grid is None else grid
    t, norms = decay_norm_series(probe, grid)
    used = resolution_window(grid, probe.alpha, t, cutoff, box_limit) & (norms > 0)
    if used.sum() < MIN_FIT_SAMPLES:
        raise DegenerateFitError(
            f"only {int(used.sum())} samples inside the resolution window "
            f"(alpha={probe.alpha}, nu={probe.nu}, p={probe.p}, r={probe.r})"
        )
    fitted = _slope(t[used], norms[used])
    pred = probe.predicted_slope
    return DecayFit(probe, fitted, pred, relative_gap(fitted, pred), t, norms, used)


def standard_probe_matrix() -> list[DecayProbe]:
    """alpha in {1/2, 3/4, 1} x nu in {0, 1} x (r, p) in {(1, inf), (2, 2), (2, 6)}."""
    return [
        DecayProbe(alpha, nu, p, r)
        for alpha in (0.5, 0.75, 1.0)
        for nu in (0, 1)
        for r, p in ((1, np.inf), (2, 2), (2, 6))
    ]


def run_probe_matrix(probes=None, grid: Grid3 | None = None, workers: int = 4) -> list[DecayFit]:
    """Fit every probe; probes are independent and run on a thread pool."""
    probes = standard_probe_matrix() if probes is None else list(probes)
    grid = make_grid(128, 128.0) if grid is None else grid
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda pr: decay_exponent_fit(pr, grid), probes))


def fit_to_csv(fit: DecayFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "norm", "used"])
    for ti, ni, ui in zip(fit.t, fit.norms, fit.used):
        w.writerow([repr(float(ti)), repr(float(ni)), int(ui)])
    return buf.getvalue()


def verdicts_to_json(items) -> str:
    """JSON list of verdict dictionaries (objects with ``verdict()`` or plain dicts)."""
    return json.dumps([it.verdict() if hasattr(it, "verdict") else it for it in items], indent=2)


# ---------------------------------------------------------------------------
# admissible triplets


@dataclass(frozen=True)
class TripletVerdict:
    admissible: bool
    failed: tuple
    scaling_lhs: float
    scaling_rhs: float
    range_upper: float

    def __bool__(self):
        return self.admissible


def admissible_triplet_check(q: float, p: float, r: float, alpha: float,
                             rtol: float = 1e-9) -> TripletVerdict:
    """Check ``1/q = (3/(2 alpha))(1/r - 1/p)`` and ``1 < r <= p < 3r/(3 - 2 alpha)``.

    ``failed`` lists the tags ``"scaling"`` and/or ``"range"`` of the
    violated conditions. For ``alpha >= 3/2`` the range has no upper end.
    """
    inv = lambda v: 0.0 if np.isinf(v) else 1.0 / v  # noqa: E731
    lhs = inv(q)
    rhs = (DIM / (2 * alpha)) * (inv(r) - inv(p))
    failed = []
    if not math.isclose(lhs, rhs, rel_tol=rtol, abs_tol=rtol):
        failed.append("scaling")
    upper = DIM * r / (DIM - 2 * alpha) if DIM > 2 * alpha else np.inf
    if not (1 < r <= p < upper):
        failed.append("range")
    return TripletVerdict(not failed, tuple(failed), lhs, rhs, float(upper))


# ---------------------------------------------------------------------------
# Duhamel T-scaling


@dataclass(frozen=True)
class DuhamelConfig:
    """Parameters of the space-time probe.

    The forcing is constant in time, ``f(s) = f0``, with ``f0`` the
    critical profile in ``L^{p/(b+1)}``. The probe measures
    ``sup_{t <= T} ||int_0^t (-Delta)^{nu/2} S(t - s) f0 ds||_r`` divided by
    ``||f||_{L^{q/(b+1)}(0,T; L^{p/(b+1)})} = T^{(b+1)/q} ||f0||``, where q
    comes from the admissibility relation.
    """

    alpha: float
    nu: float
    b: float
    r: float
    p: float
    T_samples: tuple | None = None
    check_hypotheses: bool = True

    def __post_init__(self):
        if not self.alpha > 0 or self.nu < 0 or not self.b > 0:
            raise ValueError("need alpha > 0, nu >= 0, b > 0")
        if self.check_hypotheses:
            problems = self.hypothesis_violations()
            if problems:
                raise ValueError("probe outside the hypothesis set: " + "; ".join(problems))

    @property
    def q(self) -> float:
        inv_q = (DIM / (2 * self.alpha)) * (1 / self.r - 1 / self.p)
        return np.inf if inv_q == 0 else 1.0 / inv_q

    @property
    def r0(self) -> float:
        return DIM * self.b / (2 * self.alpha)

    @property
    def predicted_exponent(self) -> float:
        return 1 - DIM * self.b / (2 * self.r * self.alpha) - self.nu / (2 * self.alpha)

    def hypothesis_violations(self) -> list[str]:
        out = []
        tv = admissible_triplet_check(self.q, self.p, self.r, self.alpha)
        if not tv:
            out.append(f"(q, p, r) not admissible: {','.join(tv.failed)}")
        if not self.p > self.b + 1:
            out.append("need p > b + 1")
        if not self.p < self.r * (self.b + 1):
            out.append("need p < r (b + 1)")
        if not (self.r >= self.r0 > 1):
            out.append("need r >= r0 = 3b/(2 alpha) > 1")
        if not self.q >= self.b + 1:
            out.append("need q >= b + 1")
        if not self.predicted_exponent > 0:
            out.append("predicted exponent must be positive")
        return out


@dataclass
class DuhamelResult:
    config: DuhamelConfig
    fitted_exponent: float
    predicted_exponent: float
    relative_gap: float
    T: np.ndarray = field(repr=False)
    sup_norms: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    used: np.ndarray = field(repr=False)

    def passed(self, tol: float = 0.10) -> bool:
        return self.relative_gap <= tol

    def verdict(self, tol: float = 0.10) -> dict:
        c = self.config
        return {
            "alpha": c.alpha, "nu": c.nu, "b": c.b, "r": c.r, "p": c.p, "q": c.q,
            "predicted": self.predicted_exponent,
            "fitted": self.fitted_exponent,
            "gap": self.relative_gap,
            "pass": self.passed(tol),
        }


def _tau_nodes(t: float, lam_max: float, panels_per_octave: int):
    """Gauss-Legendre nodes on ``[0, t]`` in the lag variable, graded geometrically towards 0.

    Panels halve in length down to ``1/lam_max``, below which every mode is
    smooth in the lag; each panel carries 4 nodes.
    """
    x, w = np.polynomial.legendre.leggauss(4)
    edges = [t]
    floor = min(t, 1.0 / lam_max) / 4
    while edges[-1] > floor:
        edges.append(edges[-1] / 2)
    edges.append(0.0)
    edges = np.array(edges[::-1])
    # subdivide every octave
    fine = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        fine.extend(np.linspace(a, b, panels_per_octave + 1)[1:])
    fine = np.array(fine)
    nodes, weights = [], []
    for a, b in zip(fine[:-1], fine[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def duhamel_integral_symbol(lam: np.ndarray, t: float, panels_per_octave: int = 2) -> np.ndarray:
    """``int_0^t exp(-(t - s) lam) ds`` by graded Gauss-Legendre quadrature in the lag."""
    if t == 0:
        return np.zeros_like(lam)
    vals, inverse = np.unique(lam, return_inverse=True)
    tau, w = _tau_nodes(t, float(vals[-1]) or 1.0, panels_per_octave)
    out = np.exp(-np.outer(vals, tau)) @ w
    return out[inverse].reshape(lam.shape)


def duhamel_scaling_probe(config: DuhamelConfig, grid: Grid3 | None = None,
                          cutoff: float = CUTOFF_SUPPRESSION, box_limit: float = BOX_MODE_LIMIT,
                          quad_tol: float = 0.01) -> DuhamelResult:
    """Fitted T-exponent of the normalised Duhamel norm against the prediction.

    Each time integral is done by quadrature and redone with the panels
    halved; a relative change above ``quad_tol`` raises ``QuadratureError``.
    """
    grid = make_grid(128, 128.0) if grid is None else grid
    src_exp = config.p / (config.b + 1)
    kabs = _half_k_abs(grid)
    f0 = critical_spectrum(grid, src_exp)
    f0_norm = _norm(grid, _to_real(grid, f0), src_exp)
    lam = kabs ** (2 * config.alpha)
    base = f0 * _power(kabs, config.nu)
    if config.T_samples is None:
        T = _default_times(grid, config.alpha)
    else:
        T = np.asarray(config.T_samples, dtype=float)
    norms = []
    for Ti in T:
        coarse = _norm(grid, _to_real(grid, base * duhamel_integral_symbol(lam, Ti, 2)), config.r)
        fine = _norm(grid, _to_real(grid, base * duhamel_integral_symbol(lam, Ti, 4)), config.r)
        if abs(fine - coarse) > quad_tol * abs(fine):
            raise QuadratureError(f"time quadrature not converged at T={Ti:g}")
        norms.append(fine)
    sup = np.maximum.accumulate(np.array(norms))
    q = config.q
    forcing = f0_norm * (T ** ((config.b + 1) / q) if np.isfinite(q) else np.ones_like(T))
    ratios = sup / forcing
    used = resolution_window(grid, config.alpha, T, cutoff, box_limit)
    if used.sum() < MIN_FIT_SAMPLES:
        raise DegenerateFitError(f"only {int(used.sum())} T samples inside the resolution window")
    fitted = _slope(T[used], ratios[used])
    pred = config.predicted_exponent
    return DuhamelResult(config, fitted, pred, relative_gap(fitted, pred), T, sup, ratios, used)


# ---------------------------------------------------------------------------
# Hardy-type inequality


def _cell_average_singularity(h: float, gamma: float, samples: int = 64) -> float:
    """Mean of ``|x|^{-gamma}`` over the cube of side h centred at the origin (midpoint rule on a sub-grid, exact inner ball)."""
    # ball of radius h/2 analytically, the rest of the cube by a sub-grid midpoint rule
    rb = 0.5 * h
    ball = 4 * np.pi * rb ** (3 - gamma) / (3 - gamma)
    s = (np.arange(samples) + 0.5) / samples - 0.5
    x = s * h
    r = np.sqrt(x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)
    outside = r > rb
    rest = np.sum(r[outside] ** -gamma) * (h / samples) ** 3
    return float((ball + rest) / h**3)


def riesz_potential(grid: Grid3, density: np.ndarray, gamma: float) -> np.ndarray:
    """Free-space ``(|.|^{-gamma} * density)`` on the grid by zero-padded FFT convolution.

    The kernel is sampled on the doubled box, with its cell average at the
    origin; exact for densities supported in the box.
    """
    n, h = grid.n, grid.spacing
    m = 2 * n
    idx = np.arange(m)
    d = np.minimum(idx, m - idx) * h
    rad = np.sqrt(d[:, None, None] ** 2 + d[None, :, None] ** 2 + d[None, None, :] ** 2)
    kern = np.zeros_like(rad)
    nz = rad > 0
    kern[nz] = rad[nz] ** -gamma
    kern[0, 0, 0] = _cell_average_singularity(h, gamma)
    padded = np.zeros((m, m, m))
    padded[:n, :n, :n] = density
    conv = sfft.irfftn(sfft.rfftn(padded) * sfft.rfftn(kern), s=(m, m, m))
    return conv[:n, :n, :n] * h**3


def hardy_probe(u: np.ndarray, grid: Grid3, gamma: float) -> float:
    """``sup_x (|.|^{-gamma} * |u|^2)(x) / ||u||^2_{H-dot^{gamma/2}}``; 0 for u = 0."""
    if not 0 < gamma < DIM:
        raise ValueError("gamma must lie in (0, 3)")
    u = np.asarray(u)
    dens = np.abs(u) ** 2
    uh = sfft.fftn(u)
    hnorm = float(np.sum(grid.k_squared ** (gamma / 2) * np.abs(uh) ** 2)) * grid.cell_volume / grid.n**3
    if hnorm == 0:
        return 0.0
    return float(riesz_potential(grid, dens, gamma).max() / hnorm)

