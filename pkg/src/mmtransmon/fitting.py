"""Model fits and calibration arithmetic for the characterisation data.

All nonlinear fits go through one damped least-squares loop
(:func:`levenberg_marquardt`) with analytic Jacobians. Fits never fail
silently: a run that hits the iteration cap comes back with
``converged=False``, and degenerate inputs carry a ``"degenerate"`` flag.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks, peak_widths

MAX_ITER = 200
GTOL = 1e-10
XTOL = 1e-14
LN2 = math.log(2)


class FitError(ValueError):
    pass


class SamplingError(FitError):
    pass


class SeedingError(FitError):
    pass


class UnphysicalFitError(FitError):
    pass


class CalibrationWarning(UserWarning):
    pass


@dataclass
class FitResult:
    params: dict[str, float]
    errors: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    flags: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.params[name]

    @property
    def degenerate(self) -> bool:
        return "degenerate" in self.flags

    def summary(self) -> dict:
        out = {k: v for k, v in self.params.items()}
        out.update({f"{k}_err": v for k, v in self.errors.items()})
        out.update(residual_norm=self.residual_norm, converged=self.converged,
                   iterations=self.iterations, flags=list(self.flags))
        return out


def levenberg_marquardt(residual, jacobian, p0, max_iter=MAX_ITER, gtol=GTOL, xtol=XTOL):
    """Minimise ||residual(p)||^2.

    Marquardt scaling of the damping by diag(J^T J); the damping is relaxed
    after a successful step and raised after a rejected one. Convergence is
    declared on the scaled gradient max_i |J_i . r| / (|J_i| |r|) < gtol, on
    an exact fit, or when the relative step falls below ``xtol``.

    Returns (p, J, r, converged, iterations).
    """
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = r @ r
    lam = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jacobian(p)
        g = J.T @ r
        rn = math.sqrt(cost)
        col = np.linalg.norm(J, axis=0)
        col[col == 0] = 1.0
        if rn == 0 or np.max(np.abs(g) / col) <= gtol * rn:
            converged = True
            break
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        if lam is None:
            lam = 1e-3
        accepted = False
        while not accepted:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            p_new = p + step
            r_new = residual(p_new)
            cost_new = r_new @ r_new
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                small = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
                p, r, cost = p_new, r_new, cost_new
                lam = max(lam / 3, 1e-12)
                if small:
                    converged = True
            else:
                lam *= 4
                if lam > 1e16:
                    # No descent direction left at machine precision.
                    converged = True
                    break
        if converged:
            break
    J = jacobian(p)
    return p, J, r, converged, it


def _covariance(J, r):
    n, m = J.shape
    dof = max(n - m, 1)
    s2 = (r @ r) / dof
    return s2 * np.linalg.pinv(J.T @ J)


def _flat(y):
    y = np.asarray(y, dtype=float)
    return np.ptp(y) <= 1e-12 * max(1.0, np.max(np.abs(y)))


def _check_series(t, y, n_min):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("t and y must be 1-D arrays of equal length")
    if len(t) < n_min:
        raise FitError(f"need at least {n_min} points, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise FitError("t must be strictly increasing")
    return t, y


# --- exponential decay -------------------------------------------------------

def exponential_model(t, amplitude, T, offset):
    return amplitude * np.exp(-np.asarray(t) / T) + offset


def fit_exponential(t, y) -> FitResult:
    """Fit a exp(-t/T) + c. Internally the decay is parametrised by its rate."""
    t, y = _check_series(t, y, 4)
    if _flat(y):
        return FitResult({"amplitude": 0.0, "T": math.inf, "offset": float(np.mean(y))},
                         {"amplitude": 0.0, "T": math.inf, "offset": 0.0},
                         0.0, True, 0, ("degenerate",))

    # Seed: log-linear regression on the data shifted just below its minimum.
    # A rising curve is handled by flipping it first.
    sign = 1.0 if y[0] >= y[-1] else -1.0
    ys = sign * y
    c0 = ys.min() - 1e-3 * np.ptp(ys)
    slope, intercept = np.polyfit(t, np.log(ys - c0), 1)
    k0 = max(-slope, 1e-6 / (t[-1] - t[0]))
    a0 = sign * math.exp(intercept)
    p0 = [a0, k0, sign * c0]

    def residual(p):
        a, k, c = p
        return a * np.exp(-k * t) + c - y

    def jacobian(p):
        a, k, c = p
        e = np.exp(-k * t)
        return np.column_stack([e, -a * t * e, np.ones_like(t)])

    p, J, r, conv, it = levenberg_marquardt(residual, jacobian, p0)
    cov = _covariance(J, r)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    a, k, c = p
    flags = ()
    if k <= 1e-12 / (t[-1] - t[0]):
        flags = ("degenerate",)
        T, T_err = math.inf, math.inf
    else:
        T, T_err = 1 / k, err[1] / k**2
    return FitResult({"amplitude": a, "T": T, "offset": c},
                     {"amplitude": err[0], "T": T_err, "offset": err[2]},
                     float(np.linalg.norm(r)), conv, it, flags)


# --- damped cosine -----------------------------------------------------------

def damped_cosine_model(t, amplitude, T2s, freq, phase, offset):
    t = np.asarray(t)
    return amplitude * np.exp(-t / T2s) * np.cos(2 * np.pi * freq * t + phase) + offset


def _fft_seed(t, y):
    n = len(t)
    tu = np.linspace(t[0], t[-1], n)
    yu = np.interp(tu, t, y) - np.mean(y)
    dt = tu[1] - tu[0]
    nfft = 16 * n
    spec = np.fft.rfft(yu, nfft)
    freqs = np.fft.rfftfreq(nfft, dt)
    k = int(np.argmax(np.abs(spec[1:]))) + 1
    return freqs[k], k == len(freqs) - 1, dt


def fit_damped_cosine(t, y, freq_guess: float | None = None) -> FitResult:
    """Fit a exp(-t/T2s) cos(2 pi f t + phase) + c, with f seeded from the spectrum."""
    t, y = _check_series(t, y, 8)
    if _flat(y):
        return FitResult({"amplitude": 0.0, "T2s": math.inf, "freq": 0.0, "phase": 0.0,
                          "offset": float(np.mean(y))},
                         dict.fromkeys(("amplitude", "T2s", "freq", "phase", "offset"), 0.0),
                         0.0, True, 0, ("degenerate",))
    f_fft, at_edge, dt = _fft_seed(t, y)
    nyquist = 0.5 / np.median(np.diff(t))
    if freq_guess is not None and freq_guess > nyquist:
        raise SamplingError(f"frequency {freq_guess} exceeds the Nyquist limit {nyquist:.4g}")
    if freq_guess is None and at_edge:
        raise SamplingError("spectral peak at the Nyquist limit; the oscillation is under-sampled")
    f0 = f_fft if freq_guess is None else freq_guess
    span = t[-1] - t[0]
    if f0 * span < 1:
        raise SamplingError("data span less than one oscillation period")

    c0 = float(np.mean(y))
    # Linear least squares for the quadratures at fixed f0 and a mild decay.
    best = None
    for g0 in (0.0, 1 / span, 3 / span, 10 / span):
        e = np.exp(-g0 * (t - t[0]))
        X = np.column_stack([e * np.cos(2 * np.pi * f0 * t), e * np.sin(2 * np.pi * f0 * t),
                             np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        res = np.sum((X @ coef - y) ** 2)
        if best is None or res < best[0]:
            best = (res, g0, coef)
    _, g0, (ca, sa, c0) = best
    a0 = math.hypot(ca, sa) * math.exp(g0 * t[0])
    phi0 = math.atan2(-sa, ca)
    p0 = [a0, g0, f0, phi0, c0]

    def residual(p):
        a, g, f, ph, c = p
        return a * np.exp(-g * t) * np.cos(2 * np.pi * f * t + ph) + c - y

    def jacobian(p):
        a, g, f, ph, c = p
        e = np.exp(-g * t)
        arg = 2 * np.pi * f * t + ph
        cs, sn = np.cos(arg), np.sin(arg)
        return np.column_stack([e * cs, -a * t * e * cs, -a * e * sn * 2 * np.pi * t,
                                -a * e * sn, np.ones_like(t)])

    p, J, r, conv, it = levenberg_marquardt(residual, jacobian, p0)
    err = np.sqrt(np.clip(np.diag(_covariance(J, r)), 0, None))
    a, g, f, ph, c = p
    if a < 0:
        a, ph = -a, ph + np.pi
    if f < 0:
        f, ph = -f, -ph
    ph = float((ph + np.pi) % (2 * np.pi) - np.pi)
    flags = []
    if g > 0:
        T2s, T2s_err = 1 / g, err[1] / g**2
    else:
        T2s, T2s_err = math.inf, math.inf
        if g < -1e-9:
            flags.append("growing")
    if f > nyquist:
        raise SamplingError(f"fitted frequency {f:.4g} above Nyquist {nyquist:.4g}")
    return FitResult({"amplitude": a, "T2s": T2s, "freq": f, "phase": ph, "offset": c},
                     {"amplitude": err[0], "T2s": T2s_err, "freq": err[2], "phase": err[3],
                      "offset": err[4]},
                     float(np.linalg.norm(r)), conv, it, tuple(flags))


# --- Gaussian peaks ----------------------------------------------------------

def gaussian_peaks(f, centers, half_widths, amplitudes, offset=0.0):
    """Sum of Gaussians parametrised by half-width at half-maximum."""
    f = np.asarray(f, dtype=float)[..., None]
    x = (f - np.asarray(centers)) / np.asarray(half_widths)
    return np.sum(np.asarray(amplitudes) * np.exp(-LN2 * x**2), axis=-1) + offset


def fit_peaks(f, y, n_peaks: int = 1, shape: str = "gaussian", offset: bool = True,
              seeds=None) -> FitResult:
    """Joint least-squares fit of ``n_peaks`` Gaussian lines.

    Parameters come back as ``center_i``, ``sigma_i`` (half-width at half
    maximum) and ``amplitude_i``, ordered by centre, plus ``offset``.
    ``seeds`` may supply initial centres instead of the local-maximum search.
    """
    if shape != "gaussian":
        raise ValueError(f"unsupported line shape {shape!r}")
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    f, y = _check_series(f, y, 3 * n_peaks + 1)
    names = [f"{q}_{i}" for i in range(n_peaks) for q in ("center", "sigma", "amplitude")]
    if _flat(y):
        params = {n: 0.0 for n in names}
        params["offset"] = float(np.mean(y))
        return FitResult(params, dict.fromkeys(params, 0.0), 0.0, True, 0, ("degenerate",))

    base = float(np.min(y))
    df = float(np.median(np.diff(f)))
    if seeds is None:
        idx, props = find_peaks(y - base, prominence=0.02 * np.ptp(y))
        if len(idx) < n_peaks:
            raise SeedingError(f"found {len(idx)} resolvable maxima for {n_peaks} peaks")
        idx = np.sort(idx[np.argsort(props["prominences"])[::-1][:n_peaks]])
        widths = peak_widths(y - base, idx, rel_height=0.5)[0]
        c0 = f[idx]
        s0 = np.maximum(0.5 * widths * df, df)
        a0 = y[idx] - base
    else:
        c0 = np.asarray(seeds, dtype=float)
        idx = np.searchsorted(f, c0).clip(0, len(f) - 1)
        a0 = y[idx] - base
        s0 = np.full(n_peaks, 5 * df)
    p0 = []
    for c, s, a in zip(c0, s0, a0):
        p0 += [c, s, a]
    if offset:
        p0.append(base)

    def unpack(p):
        q = np.asarray(p[:3 * n_peaks]).reshape(n_peaks, 3)
        return q[:, 0], q[:, 1], q[:, 2], (p[-1] if offset else 0.0)

    def residual(p):
        c, s, a, off = unpack(p)
        return gaussian_peaks(f, c, s, a, off) - y

    def jacobian(p):
        c, s, a, _ = unpack(p)
        cols = []
        for ci, si, ai in zip(c, s, a):
            x = (f - ci) / si
            e = np.exp(-LN2 * x**2)
            cols += [ai * e * 2 * LN2 * x / si, ai * e * 2 * LN2 * x**2 / si, e]
        if offset:
            cols.append(np.ones_like(f))
        return np.column_stack(cols)

    p, J, r, conv, it = levenberg_marquardt(residual, jacobian, p0)
    err = np.sqrt(np.clip(np.diag(_covariance(J, r)), 0, None))
    c, s, a, off = unpack(p)
    s = np.abs(s)
    order = np.argsort(c)
    params, errors = {}, {}
    for i, k in enumerate(order):
        for j, q in enumerate(("center", "sigma", "amplitude")):
            params[f"{q}_{i}"] = float((c, s, a)[j][k])
            errors[f"{q}_{i}"] = float(err[3 * k + j])
    if offset:
        params["offset"], errors["offset"] = float(off), float(err[-1])
    flags = ("degenerate",) if np.all(np.abs(a) < 1e-12) else ()
    return FitResult(params, errors, float(np.linalg.norm(r)), conv, it, flags)


# --- calibrations ------------------------------------------------------------

@dataclass
class StarkCalibration:
    f_ge0: float                  # GHz
    chi_fit: float                # GHz
    photons_per_milliwatt: float  # 1/mW
    r_squared: float
    slope: float                  # GHz/mW
    slope_err: float
    flags: tuple[str, ...] = ()


def stark_calibration(powers, centers, chi_known: float) -> StarkCalibration:
    """Regress centre = f_ge0 - chi * k * P and return the photons-per-mW factor k."""
    P = np.asarray(powers, dtype=float)
    fc = np.asarray(centers, dtype=float)
    if len(P) < 3 or P.shape != fc.shape:
        raise FitError("need at least 3 (power, centre) pairs")
    if chi_known == 0:
        raise FitError("chi_known must be nonzero")
    (slope, f0), cov = np.polyfit(P, fc, 1, cov="unscaled")
    resid = fc - (slope * P + f0)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((fc - fc.mean()) ** 2))
    dof = max(len(P) - 2, 1)
    slope_err = math.sqrt(cov[0, 0] * ss_res / dof)
    flags = []
    if ss_tot <= 1e-30 * max(1.0, float(fc @ fc)):
        r2 = math.nan
        flags.append("r2-undefined")
        slope = 0.0
    else:
        r2 = 1 - ss_res / ss_tot
    k = -slope / chi_known
    if not flags and r2 < 0.9:
        warnings.warn(f"Stark shift is far from linear in power (R^2 = {r2:.3f})",
                      CalibrationWarning, stacklevel=2)
        flags.append("nonlinear")
    if k < 0:
        warnings.warn("fitted photon number per mW is negative; check the sign of chi",
                      CalibrationWarning, stacklevel=2)
        flags.append("negative-k")
    return StarkCalibration(float(f0), float(chi_known), float(k), r2, float(slope),
                            slope_err, tuple(flags))


def broadened_linewidth(n_s, T1: float, T2: float, g: float):
    """Half-width sigma (GHz) with 2 pi sigma = sqrt(1/T2^2 + n_s (2 pi g)^2 T1/T2)."""
    n_s = np.asarray(n_s, dtype=float)
    return np.sqrt(1 / T2**2 + n_s * (2 * np.pi * g) ** 2 * T1 / T2) / (2 * np.pi)


def power_broadening_fit(n_s, sigma, g: float) -> FitResult:
    """T2 from the intercept and T1 from the slope of (2 pi sigma)^2 against n_s.

    ``g`` is the bare coupling in GHz (ordinary frequency); the slope is
    (2 pi g)^2 T1 / T2.
    """
    n = np.asarray(n_s, dtype=float)
    s = np.asarray(sigma, dtype=float)
    if len(n) < 3 or n.shape != s.shape:
        raise FitError("need at least 3 drive points")
    if np.any(s <= 0):
        raise FitError("linewidths must be positive")
    w2 = (2 * np.pi * s) ** 2
    X = np.column_stack([np.ones_like(n), n])
    coef, *_ = np.linalg.lstsq(X, w2, rcond=None)
    b, m = (float(x) for x in coef)
    r = X @ coef - w2
    cov = _covariance(X, r)
    if b <= 0:
        raise UnphysicalFitError(f"negative intercept {b:.3e}: 1/T2^2 must be positive")
    T2 = 1 / math.sqrt(b)
    T2_err = 0.5 * b**-1.5 * math.sqrt(cov[0, 0])
    g2 = (2 * np.pi * g) ** 2
    flags = ()
    T1 = m * T2 / g2
    # dT1 = (T2 dm + m dT2)/g2 with dT2/db = -T2^3/2
    grad = np.array([-m * T2**3 / 2, T2]) / g2
    T1_err = math.sqrt(max(grad @ cov @ grad, 0.0))
    if abs(m) <= 1e-12 * max(abs(b), 1e-300):
        T1, flags = 0.0, ("degenerate",)
    return FitResult({"T2": T2, "T1": T1, "intercept": b, "slope": m},
                     {"T2": T2_err, "T1": T1_err, "intercept": math.sqrt(cov[0, 0]),
                      "slope": math.sqrt(cov[1, 1])},
                     float(np.linalg.norm(r)), True, 1, flags)


def dephasing_decomposition(T1: float, T2s: float) -> float:
    """Pure dephasing time from 1/T2* = 1/Tphi + 1/(2 T1)."""
    if T1 <= 0 or T2s <= 0:
        raise UnphysicalFitError("times must be positive")
    rate = 1 / T2s - 1 / (2 * T1)
    if rate < -1e-15 / T2s:
        raise UnphysicalFitError(f"T2*={T2s} exceeds 2 T1={2 * T1}")
    return math.inf if rate <= 1e-15 / T2s else 1 / rate


def ramsey_time(T1: float, Tphi: float) -> float:
    return 1 / (1 / Tphi + 1 / (2 * T1))


def quality_factor(f01: float, T1: float) -> float:
    if f01 <= 0 or T1 <= 0:
        raise ValueError("f01 and T1 must be positive")
    return 2 * np.pi * f01 * T1
