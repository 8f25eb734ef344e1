"""Equiripple linear-phase lowpass FIR design (Parks-McClellan).

Frequencies throughout are normalized to half the sampling rate, so the
band [0, 1] maps onto [0, pi] rad/sample.  The Remez exchange itself is
delegated to scipy's compiled Parks-McClellan implementation, run with a
bounded iteration count; everything around it (order policy, over-design,
measured-spec verification) lives here.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import remez as _remez_exchange

__all__ = [
    "DesignError",
    "estimate_order",
    "remez_lowpass",
    "measure_lowpass",
    "amplitude_response",
    "db_to_passband_delta",
    "db_to_stopband_delta",
]

MAX_EXCHANGE_ITERATIONS = 250


class DesignError(RuntimeError):
    """Raised when the exchange fails; carries the last error ripple if known."""

    def __init__(self, message: str, last_ripple: float | None = None):
        super().__init__(message)
        self.last_ripple = last_ripple


def db_to_passband_delta(ripple_db: float) -> float:
    """Peak passband deviation for a ripple spec of ``ripple_db`` dB."""
    r = 10.0 ** (ripple_db / 20.0)
    return (r - 1.0) / (r + 1.0)


def db_to_stopband_delta(attenuation_db: float) -> float:
    return 10.0 ** (-attenuation_db / 20.0)


def estimate_order(
    passband_edge: float,
    stopband_edge: float,
    passband_ripple_db: float,
    stopband_attenuation_db: float,
) -> int:
    """Herrmann-formula order estimate for an equiripple lowpass."""
    dp = db_to_passband_delta(passband_ripple_db)
    ds = db_to_stopband_delta(stopband_attenuation_db)
    lp, ls = np.log10(dp), np.log10(ds)
    d_inf = (0.005309 * lp**2 + 0.07114 * lp - 0.4761) * ls - (
        -0.00266 * lp**2 - 0.5941 * lp - 0.4278
    )
    f_coef = 11.01217 + 0.51244 * (lp - ls)
    # transition in cycles/sample; edges are fractions of Nyquist
    df = (stopband_edge - passband_edge) / 2.0
    n = d_inf / df - f_coef * df + 1.0
    return max(2, int(np.ceil(n)))


def remez_lowpass(
    numtaps: int,
    passband_edge: float,
    stopband_edge: float,
    weight_ratio: float = 1.0,
    max_iterations: int = MAX_EXCHANGE_ITERATIONS,
    grid_density: int = 16,
) -> np.ndarray:
    """Design a type-I equiripple lowpass filter.

    Parameters
    ----------
    numtaps:
        Filter length; must be odd (even order, integer group delay).
    passband_edge, stopband_edge:
        Band edges as fractions of Nyquist, 0 < pass < stop < 1.
    weight_ratio:
        Desired delta_p/delta_s; the stopband is weighted by this factor
        so its ripple lands ``weight_ratio`` times below the passband's.

    Raises
    ------
    DesignError
        If the exchange fails to converge within ``max_iterations``.
    """
    if numtaps % 2 == 0:
        raise ValueError("numtaps must be odd for a type-I design")
    if numtaps == 1:
        return np.array([1.0])
    if not 0.0 < passband_edge < stopband_edge < 1.0:
        raise ValueError("need 0 < passband_edge < stopband_edge < 1")
    try:
        taps = _remez_exchange(
            numtaps,
            [0.0, passband_edge / 2.0, stopband_edge / 2.0, 0.5],
            [1.0, 0.0],
            weight=[1.0, weight_ratio],
            maxiter=max_iterations,
            grid_density=grid_density,
        )
    except Exception as exc:  # scipy signals non-convergence via an exception
        raise DesignError(
            f"Remez exchange did not converge within {max_iterations} iterations: {exc}"
        ) from exc
    if not np.all(np.isfinite(taps)):
        raise DesignError("Remez exchange returned non-finite coefficients")
    return 0.5 * (taps + taps[::-1])  # enforce exact symmetry


def amplitude_response(taps: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """Zero-phase amplitude of a symmetric odd-length filter."""
    taps = np.asarray(taps, dtype=float)
    n = (taps.size - 1) // 2
    a = np.concatenate([[taps[n]], 2.0 * taps[n + 1 :]])
    return np.cos(np.pi * np.outer(np.asarray(freqs, dtype=float), np.arange(n + 1))) @ a


def measure_lowpass(
    taps: np.ndarray,
    passband_edge: float,
    stopband_edge: float,
    n_grid: int = 8192,
) -> tuple[float, float]:
    """Measured (passband ripple dB, stopband attenuation dB) on a dense grid."""
    freqs = np.linspace(0.0, 1.0, n_grid)
    amp = amplitude_response(taps, freqs)
    pb = amp[freqs <= passband_edge]
    sb = amp[freqs >= stopband_edge]
    ripple_db = 20.0 * np.log10(pb.max() / pb.min()) if pb.min() > 0 else np.inf
    atten_db = -20.0 * np.log10(np.abs(sb).max())
    return float(ripple_db), float(atten_db)
