"""Complex baseband signal container and IQ file I/O.

Signals are uniformly sampled complex vectors with sample-rate metadata.
The linear-phase group delay accumulated by filtering stages is carried
along so receivers can realign without re-deriving it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = ["ComplexSignal", "write_iq", "read_iq"]


@dataclass
class ComplexSignal:
    """Uniformly sampled complex baseband samples plus metadata."""

    samples: np.ndarray
    sample_rate_hz: float
    group_delay_samples: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.group_delay_samples < 0:
            raise ValueError("group_delay_samples must be non-negative")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def power(self) -> float:
        """Mean sample power, zero for an empty signal."""
        if self.samples.size == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples: np.ndarray, extra_delay: int = 0) -> "ComplexSignal":
        return replace(
            self,
            samples=np.asarray(samples, dtype=np.complex128),
            group_delay_samples=self.group_delay_samples + extra_delay,
        )

    def time_axis(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


def write_iq(signal: ComplexSignal, path: str | Path) -> None:
    """Write interleaved float64 little-endian IQ plus a JSON sidecar."""
    path = Path(path)
    inter = np.empty(2 * signal.samples.size, dtype="<f8")
    inter[0::2] = signal.samples.real
    inter[1::2] = signal.samples.imag
    inter.tofile(path)
    sidecar = {
        "sample_rate_hz": signal.sample_rate_hz,
        "group_delay_samples": signal.group_delay_samples,
        "sample_count": int(signal.samples.size),
        "format": "float64-le interleaved I,Q",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def read_iq(path: str | Path) -> ComplexSignal:
    """Read a signal written by :func:`write_iq`."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    inter = np.fromfile(path, dtype="<f8")
    samples = inter[0::2] + 1j * inter[1::2]
    return ComplexSignal(
        samples=samples,
        sample_rate_hz=float(sidecar["sample_rate_hz"]),
        group_delay_samples=int(sidecar["group_delay_samples"]),
    )
