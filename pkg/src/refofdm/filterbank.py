"""Reconfigurable multi-band FIR filtering by coefficient decimation.

One fixed-coefficient equiripple prototype serves all eight supported
transmission bandwidths.  Keeping every D-th coefficient (CDM) stretches
the baseband response by D; doing so with alternating signs (MCDM) yields
a bandstop branch whose complement against a delayed input realizes the
wide bandpass responses.  A polyphase DFT bank modulates the realized
filter onto uniformly spaced centers for multi-band transmission.

Normalized frequencies are fractions of Nyquist at the 1.249280 MHz base
rate (128 subcarriers times 9.76 kHz), i.e. 1.0 corresponds to 624.64 kHz.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum
from math import ceil, gcd
from pathlib import Path

import numpy as np

from .firdesign import (
    DesignError,
    amplitude_response,
    db_to_passband_delta,
    db_to_stopband_delta,
    estimate_order,
    measure_lowpass,
    remez_lowpass,
)
from .signals import ComplexSignal

__all__ = [
    "FilterMethod",
    "FilterDesignSpec",
    "PrototypeFilter",
    "DecimationConfig",
    "ReconfigFilter",
    "MultibandFilterBank",
    "UnsupportedBandwidthError",
    "UnsupportedDecimationError",
    "SUPPORTED_BANDWIDTHS_KHZ",
    "FILTER_TABLE",
    "BASE_RATE_HZ",
    "design_prototype",
    "ldacs_prototype",
    "select_config",
    "apply_cdm",
    "apply_mcdm",
    "realize_bandwidth",
    "build_dftfb",
    "filter_signal",
    "frequency_response",
    "measure_bandwidth_3db_hz",
    "zero_interleaved",
    "masking_sequence",
    "masking_fourier_coefficients",
    "export_coefficients",
    "import_coefficients",
]

SUBCARRIER_SPACING_HZ = 9760.0
FFT_SIZE = 128
BASE_RATE_HZ = SUBCARRIER_SPACING_HZ * FFT_SIZE  # 1.24928 MHz OFDM base rate
D_MAX = 7

SUPPORTED_BANDWIDTHS_KHZ = (186, 264, 342, 420, 498, 576, 654, 732)


class FilterMethod(Enum):
    CDM = "cdm"
    MCDM = "mcdm"


# bandwidth_khz -> (normalized cutoff target, decimation factor, method)
FILTER_TABLE: dict[int, tuple[float, int, FilterMethod]] = {
    186: (0.16, 7, FilterMethod.MCDM),
    264: (0.22, 2, FilterMethod.CDM),
    342: (0.28, 6, FilterMethod.MCDM),
    420: (0.34, 3, FilterMethod.CDM),
    498: (0.40, 5, FilterMethod.MCDM),
    576: (0.46, 4, FilterMethod.CDM),
    654: (0.52, 4, FilterMethod.MCDM),
    732: (0.58, 5, FilterMethod.CDM),
}

# Protocol prototype constants.  The passband edge is calibrated so the
# measured -3 dB bandwidths of all eight realized filters land as close
# as a single fixed-coefficient prototype allows to the nominal values;
# see demos/filter_table.py for the measurement.
PROTO_PASSBAND_EDGE = 0.1095
PROTO_STOPBAND_DB = 70.0
PROTO_RIPPLE_DB = 0.1
PROTO_TRANSITION = 0.1

DIRECT_CONV_LIMIT = 4096  # inputs at least this long use overlap-save


class UnsupportedBandwidthError(ValueError):
    def __init__(self, bandwidth_khz):
        super().__init__(
            f"unsupported bandwidth {bandwidth_khz} kHz; "
            f"supported values are {', '.join(str(b) for b in SUPPORTED_BANDWIDTHS_KHZ)} kHz"
        )


class UnsupportedDecimationError(ValueError):
    def __init__(self, factor):
        super().__init__(f"decimation factor {factor} outside supported range 1..{D_MAX}")


@dataclass(frozen=True)
class FilterDesignSpec:
    """End-user lowpass spec; the over-design factor tightens it for decimation."""

    passband_edge: float
    stopband_attenuation_db: float = PROTO_STOPBAND_DB
    passband_ripple_db: float = PROTO_RIPPLE_DB
    transition_bandwidth: float = PROTO_TRANSITION
    over_design: int = D_MAX

    def tightened(self) -> tuple[float, float, float]:
        """(stopband dB, ripple dB, transition) the prototype must meet.

        Decimation by D deteriorates ripples by roughly a factor D and
        stretches the transition by exactly D, so every spec is tightened
        by the largest supported factor.
        """
        k = self.over_design
        return (
            self.stopband_attenuation_db + 20.0 * np.log10(k),
            self.passband_ripple_db / k,
            self.transition_bandwidth / k,
        )


@dataclass(frozen=True)
class PrototypeFilter:
    """Fixed real-coefficient equiripple prototype shared by all bandwidths."""

    coefficients: np.ndarray
    passband_edge: float
    design_spec: tuple[float, float, float]  # (stopband dB, ripple dB, transition)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs.size % 2 == 0 and coeffs.size > 1:
            raise ValueError("prototype must have even order (odd length)")
        if not np.allclose(coeffs, coeffs[::-1], atol=1e-12):
            raise ValueError("prototype coefficients must be symmetric")


@dataclass(frozen=True)
class DecimationConfig:
    """How the prototype is decimated to realize one bandwidth."""

    factor: int
    method: FilterMethod
    complement_delay: int = 0  # input-branch delay for MCDM, zero for CDM

    def __post_init__(self):
        if not 1 <= self.factor <= D_MAX:
            raise UnsupportedDecimationError(self.factor)


def _compacted_length(order: int, factor: int) -> int:
    return ceil((order + 1) / factor)


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // gcd(out, v)
    return out


def _compatible_order(minimum: int, d_max: int) -> int:
    """Round an order up so every compacted branch keeps linear phase.

    Symmetry of the kept coefficients needs D | N, and an integer branch
    group delay needs N/D even, so N must be a multiple of 2D for every
    supported factor.
    """
    if d_max <= 1:
        return minimum + (minimum % 2)
    modulus = _lcm(2 * d for d in range(2, d_max + 1))
    return max(modulus, ceil(minimum / modulus) * modulus)


def design_prototype(spec: FilterDesignSpec) -> PrototypeFilter:
    """Design the over-designed prototype and verify it on a dense grid."""
    if min(
        spec.stopband_attenuation_db, spec.passband_ripple_db, spec.transition_bandwidth
    ) <= 0:
        raise ValueError("stopband attenuation, ripple and transition must be positive")
    atten_db, ripple_db, transition = spec.tightened()
    if spec.passband_edge + transition >= 1.0:
        # passband covers the whole band: the identity filter
        return PrototypeFilter(np.array([1.0]), spec.passband_edge, (atten_db, ripple_db, transition))
    if not 0.0 < spec.passband_edge < 1.0 - transition:
        raise ValueError("passband_edge must lie in (0, 1 - transition)")

    stop_edge = spec.passband_edge + transition
    weight_ratio = db_to_passband_delta(ripple_db) / db_to_stopband_delta(atten_db)
    order = _compatible_order(
        estimate_order(spec.passband_edge, stop_edge, ripple_db, atten_db),
        spec.over_design,
    )
    last_ripple = None
    for _ in range(3):
        taps = remez_lowpass(order + 1, spec.passband_edge, stop_edge, weight_ratio)
        got_ripple, got_atten = measure_lowpass(taps, spec.passband_edge, stop_edge)
        # the dense-grid measurement must meet the tightened spec within 1 dB
        if got_atten >= atten_db - 1.0 and got_ripple <= ripple_db + 1.0:
            return PrototypeFilter(taps, spec.passband_edge, (atten_db, ripple_db, transition))
        last_ripple = got_ripple
        order = _compatible_order(order + 1, spec.over_design)
    raise DesignError(
        f"designed filter missed spec after order escalation to {order}",
        last_ripple=last_ripple,
    )


@functools.lru_cache(maxsize=1)
def ldacs_prototype() -> PrototypeFilter:
    """The protocol's calibrated prototype (designed once, then cached)."""
    return design_prototype(FilterDesignSpec(passband_edge=PROTO_PASSBAND_EDGE))


def select_config(bandwidth_khz: int, prototype_order: int | None = None) -> DecimationConfig:
    """Look up the (D, method) pair realizing a supported bandwidth."""
    try:
        _, factor, method = FILTER_TABLE[int(bandwidth_khz)]
    except (KeyError, TypeError, ValueError):
        raise UnsupportedBandwidthError(bandwidth_khz) from None
    delay = 0
    if method is FilterMethod.MCDM:
        order = ldacs_prototype().order if prototype_order is None else prototype_order
        delay = (_compacted_length(order, factor) - 1) // 2
    return DecimationConfig(factor=factor, method=method, complement_delay=delay)


@dataclass
class ReconfigFilter:
    """A decimation configuration applied to the prototype.

    ``realized_coefficients`` holds the kept prototype coefficients (sign
    reversed on alternate entries for MCDM).  The emitted response is the
    compacted filter itself for CDM and the delayed-input-minus-branch
    complement for MCDM; both are normalized to unit DC gain before use.
    """

    source: PrototypeFilter
    config: DecimationConfig
    realized_coefficients: np.ndarray
    target_bandwidth_khz: int | None = None
    _response_cache: dict = field(default_factory=dict, repr=False)

    @property
    def group_delay_samples(self) -> int:
        return (self.effective_impulse_response().size - 1) // 2

    def effective_impulse_response(self) -> np.ndarray:
        """Unit-DC-gain impulse response the filter applies to a signal.

        Compaction scales the branch gain by 1/D, so the MCDM bandstop is
        rescaled by D before it is subtracted from the delayed input;
        otherwise the complement would not null the branch passband.
        """
        key = "effective"
        if key not in self._response_cache:
            if self.config.method is FilterMethod.CDM:
                eff = self.realized_coefficients.copy()
            else:
                eff = -self.config.factor * self.realized_coefficients
                eff[self.config.complement_delay] += 1.0
            eff = eff / eff.sum()
            self._response_cache[key] = eff
        return self._response_cache[key]

    def realized_response(self, grid_points: int = FFT_SIZE) -> np.ndarray:
        """Complex spectrum of the emitted filter on a K-point grid.

        The impulse response is zero padded to the grid length, so entry k
        is the response at subcarrier k of a K-point FFT.
        """
        key = ("response", grid_points)
        if key not in self._response_cache:
            eff = self.effective_impulse_response()
            if grid_points < eff.size:
                raise ValueError("grid_points must be at least the filter length")
            self._response_cache[key] = np.fft.fft(eff, grid_points)
        return self._response_cache[key]


def apply_cdm(proto: PrototypeFilter, factor: int) -> ReconfigFilter:
    """Keep every ``factor``-th coefficient; bandwidth stretches by ``factor``."""
    config = DecimationConfig(factor=factor, method=FilterMethod.CDM)
    kept = proto.coefficients[::factor].copy()
    return ReconfigFilter(source=proto, config=config, realized_coefficients=kept)


def apply_mcdm(proto: PrototypeFilter, factor: int) -> ReconfigFilter:
    """Keep every ``factor``-th coefficient with alternating signs.

    The compacted branch is a bandstop; the filter's output is the input
    delayed by the branch group delay minus the branch output, which
    yields the wide bandpass complement.
    """
    kept = proto.coefficients[::factor].copy()
    kept[1::2] *= -1.0
    delay = (kept.size - 1) // 2
    if (kept.size - 1) % 2:
        # fractional branch delay: floor it and record the residual
        config = DecimationConfig(factor=factor, method=FilterMethod.MCDM, complement_delay=delay)
        filt = ReconfigFilter(source=proto, config=config, realized_coefficients=kept)
        filt._response_cache["half_sample_residual"] = 0.5
        return filt
    config = DecimationConfig(factor=factor, method=FilterMethod.MCDM, complement_delay=delay)
    return ReconfigFilter(source=proto, config=config, realized_coefficients=kept)


def realize_bandwidth(
    bandwidth_khz: int, proto: PrototypeFilter | None = None
) -> ReconfigFilter:
    """Realize one of the eight supported bandwidths from the prototype."""
    if proto is None:
        proto = ldacs_prototype()
    config = select_config(bandwidth_khz, prototype_order=proto.order)
    if config.method is FilterMethod.CDM:
        filt = apply_cdm(proto, config.factor)
    else:
        filt = apply_mcdm(proto, config.factor)
    filt.target_bandwidth_khz = int(bandwidth_khz)
    return filt


def zero_interleaved(proto: PrototypeFilter, factor: int, method: FilterMethod) -> np.ndarray:
    """Full-length coefficient set with zeros at the discarded positions."""
    if not 1 <= factor <= D_MAX:
        raise UnsupportedDecimationError(factor)
    out = np.zeros_like(proto.coefficients)
    kept = proto.coefficients[::factor]
    if method is FilterMethod.MCDM:
        kept = kept.copy()
        kept[1::2] *= -1.0
    out[::factor] = kept
    return out


def masking_sequence(factor: int, length: int) -> np.ndarray:
    """The periodic mask b[n]: one at multiples of the decimation factor."""
    out = np.zeros(length)
    out[::factor] = 1.0
    return out


def masking_fourier_coefficients(factor: int) -> np.ndarray:
    """Fourier series coefficients B(i) of the mask over one period."""
    b = masking_sequence(factor, factor)
    i = np.arange(factor)
    return np.exp(-2j * np.pi * np.outer(i, np.arange(factor)) / factor) @ b


@dataclass
class MultibandFilterBank:
    """DFT-modulated copies of one realized filter on uniform centers."""

    base: ReconfigFilter
    branches: int
    active_bands: frozenset[int]
    polyphase_components: list[np.ndarray]

    @property
    def branch_centers(self) -> np.ndarray:
        """Normalized centers; 1.0 is Nyquist.  A single-branch bank is baseband."""
        if self.branches == 1:
            return np.array([0.0])
        return 2.0 * np.arange(self.branches) / self.branches - 1.0

    @property
    def group_delay_samples(self) -> int:
        return self.base.group_delay_samples

    def composite_impulse_response(self) -> np.ndarray:
        """Sum of the active branches, built from the polyphase components.

        With the effective response split into K polyphase branches, the
        modulation to center 2k/K - 1 multiplies polyphase branch p by a
        constant twiddle, so the composite is the padded base response
        times a K-periodic twiddle sum taken over the active bands.
        """
        base = self.base.effective_impulse_response()
        if self.branches == 1:
            return base.astype(np.complex128)
        k_active = np.fromiter(self.active_bands, dtype=int)
        p = np.arange(self.branches)
        twiddle = np.exp(
            1j * np.pi * np.outer(2.0 * k_active / self.branches - 1.0, p)
        ).sum(axis=0)
        padded = np.concatenate(
            [base, np.zeros(len(self.polyphase_components[0]) * self.branches - base.size)]
        )
        composite = padded * np.tile(twiddle, len(self.polyphase_components[0]))
        return composite[: base.size]


def build_dftfb(
    filt: ReconfigFilter, k_branches: int, active: set[int] | frozenset[int]
) -> MultibandFilterBank:
    """Assemble a DFT filter bank around a realized filter."""
    if k_branches < 1 or (k_branches & (k_branches - 1)) != 0:
        raise ValueError("k_branches must be a power of two >= 1")
    active = frozenset(int(a) for a in active)
    if not active:
        raise ValueError("active band set must not be empty")
    if not active <= set(range(k_branches)):
        raise ValueError(f"active bands must be within 0..{k_branches - 1}")
    base = filt.effective_impulse_response()
    pad = (-base.size) % k_branches
    padded = np.concatenate([base, np.zeros(pad)])
    components = [padded[p::k_branches].copy() for p in range(k_branches)]
    return MultibandFilterBank(
        base=filt, branches=k_branches, active_bands=active, polyphase_components=components
    )


def _impulse_of(obj) -> np.ndarray:
    if isinstance(obj, MultibandFilterBank):
        return obj.composite_impulse_response()
    if isinstance(obj, ReconfigFilter):
        return obj.effective_impulse_response()
    if isinstance(obj, PrototypeFilter):
        return obj.coefficients
    return np.asarray(obj)


def overlap_save(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full linear convolution via frequency-domain overlap-save blocks."""
    m = h.size
    nfft = 1
    while nfft < 8 * m:
        nfft *= 2
    hop = nfft - (m - 1)
    h_f = np.fft.fft(h, nfft)
    total = x.size + m - 1
    x_pad = np.concatenate([np.zeros(m - 1, dtype=complex), x, np.zeros(nfft, dtype=complex)])
    out = np.empty(total, dtype=complex)
    pos = 0
    while pos < total:
        block = x_pad[pos : pos + nfft]
        if block.size < nfft:
            block = np.concatenate([block, np.zeros(nfft - block.size, dtype=complex)])
        y = np.fft.ifft(np.fft.fft(block) * h_f)
        n_keep = min(hop, total - pos)
        out[pos : pos + n_keep] = y[m - 1 : m - 1 + n_keep]
        pos += hop
    return out


def filter_signal(filter_obj, signal: ComplexSignal) -> ComplexSignal:
    """Convolve a signal with a filter, bank or raw coefficient vector.

    Output length is input length + filter length - 1; the linear-phase
    group delay is accumulated into the signal metadata.
    """
    if len(signal) == 0:
        raise ValueError("cannot filter an empty signal")
    h = _impulse_of(filter_obj)
    if len(signal) >= DIRECT_CONV_LIMIT:
        y = overlap_save(signal.samples, h.astype(np.complex128))
    else:
        y = np.convolve(signal.samples, h)
    return signal.with_samples(y, extra_delay=(h.size - 1) // 2)


def frequency_response(filter_obj, grid_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Complex response on a uniform grid of normalized frequencies.

    Returns (frequencies, response) with frequencies in [-1, 1) as
    fractions of Nyquist, zero-centered.
    """
    h = _impulse_of(filter_obj)
    if grid_points < h.size:
        raise ValueError("grid_points must be at least the filter length")
    resp = np.fft.fftshift(np.fft.fft(h, grid_points))
    freqs = np.fft.fftshift(np.fft.fftfreq(grid_points)) * 2.0
    return freqs, resp


def magnitude_db(response: np.ndarray, floor_db: float = -400.0) -> np.ndarray:
    mag = np.abs(response)
    out = np.full_like(mag, floor_db, dtype=float)
    nz = mag > 10.0 ** (floor_db / 20.0)
    out[nz] = 20.0 * np.log10(mag[nz])
    return out


def measure_bandwidth_3db_hz(
    filt: ReconfigFilter, sample_rate_hz: float = BASE_RATE_HZ
) -> float:
    """Two-sided -3 dB bandwidth of the emitted response, by bisection."""
    h = filt.effective_impulse_response()
    target = amplitude_response(h, np.array([0.0]))[0] / np.sqrt(2.0)

    def above(nu: float) -> bool:
        return amplitude_response(h, np.array([nu]))[0] >= target

    # bracket the crossing on a coarse grid, then bisect
    grid = np.linspace(0.0, 1.0, 2048)
    amp = amplitude_response(h, grid)
    below = np.nonzero(amp < target)[0]
    if below.size == 0:
        return sample_rate_hz  # filter wider than the whole band
    lo, hi = grid[below[0] - 1], grid[below[0]]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
    crossing = 0.5 * (lo + hi)
    return crossing * sample_rate_hz  # one-sided fraction of Nyquist = two-sided Hz share


def export_coefficients(filter_obj, path: str | Path) -> None:
    """One real coefficient per line, 17 significant digits."""
    h = _impulse_of(filter_obj)
    if np.iscomplexobj(h) and np.abs(h.imag).max() > 0:
        raise ValueError("coefficient export is defined for real-coefficient filters")
    Path(path).write_text("".join(f"{c:.17g}\n" for c in np.real(h)))


def import_coefficients(path: str | Path) -> np.ndarray:
    return np.array([float(line) for line in Path(path).read_text().split()])
