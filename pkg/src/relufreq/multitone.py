"""Multi-tone signal model, synthesis to sampled signals, and dataset generation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import AliasingError, EmptyToneError


@dataclass(frozen=True)
class CosineComponent:
    """One cosine oscillation: amplitude * cos(2*pi*frequency*t + phase)."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.frequency < 0:
            raise ValueError(f"frequency must be >= 0, got {self.frequency}")


@dataclass(frozen=True)
class MultiTone:
    """Finite sum of cosine components with pairwise distinct frequencies.

    Components sharing a frequency are merged at construction by phasor
    addition, so downstream closed forms can assume distinct frequencies.
    """

    components: tuple = ()

    def __init__(self, components: Sequence[CosineComponent]):
        merged: dict = {}
        order: list = []
        for comp in components:
            if comp.frequency not in merged:
                merged[comp.frequency] = complex(0.0)
                order.append(comp.frequency)
            merged[comp.frequency] += comp.amplitude * complex(
                math.cos(comp.phase), math.sin(comp.phase)
            )
        out = []
        for freq in order:
            phasor = merged[freq]
            amplitude = abs(phasor)
            phase = math.atan2(phasor.imag, phasor.real) if amplitude > 0 else 0.0
            out.append(CosineComponent(amplitude, freq, phase))
        object.__setattr__(self, "components", tuple(out))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=float)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.frequency for c in self.components], dtype=float)

    @property
    def phases(self) -> np.ndarray:
        return np.array([c.phase for c in self.components], dtype=float)

    @property
    def max_frequency(self) -> float:
        if not self.components:
            return 0.0
        return max(c.frequency for c in self.components)

    def all_zero_phase(self) -> bool:
        return all(c.phase == 0.0 for c in self.components)


@dataclass
class Signal:
    """Uniformly sampled real-valued sequence."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True)
class DatasetSpec:
    """Geometry of a labeled single-tone dataset.

    Each sample of class ``c`` is cos(2*pi*f*t) with f drawn from a normal
    distribution centered on ``class_means[c]``; ``dc_map`` optionally adds a
    per-class constant offset to every sample of the signal.
    """

    class_means: tuple
    freq_std: float
    samples_per_class: int
    sample_rate: float
    duration: float
    dc_map: Optional[Mapping[int, float]] = None

    def __post_init__(self) -> None:
        means = tuple(float(m) for m in self.class_means)
        object.__setattr__(self, "class_means", means)
        if not means:
            raise ValueError("class_means must be non-empty")
        if any(b <= a for a, b in zip(means, means[1:])):
            raise ValueError("class_means must be strictly increasing")
        if self.freq_std < 0:
            raise ValueError("freq_std must be >= 0")
        nyquist = self.sample_rate / 2.0
        if any(m + 3.0 * self.freq_std >= nyquist for m in means):
            raise ValueError("class means within 3 sigma of Nyquist; reduce means or raise sample_rate")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")

    @property
    def n_classes(self) -> int:
        return len(self.class_means)


@dataclass
class LabeledSet:
    """Signals with class labels; optionally carries each sample's drawn frequency."""

    inputs: list
    labels: list
    frequencies: Optional[list] = None

    def __post_init__(self) -> None:
        if len(self.inputs) != len(self.labels):
            raise ValueError("inputs and labels must have equal length")
        if self.frequencies is not None and len(self.frequencies) != len(self.inputs):
            raise ValueError("frequencies must match inputs in length")
        if self.labels:
            n_classes = max(self.labels) + 1
            if any(lab < 0 or lab >= n_classes for lab in self.labels):
                raise ValueError("labels must lie in [0, number of classes)")

    def __len__(self) -> int:
        return len(self.inputs)


def synthesize(tones: MultiTone, sample_rate: float, duration: float) -> Signal:
    """Render a multi-tone on a uniform grid of round(duration*sample_rate) samples."""
    if not tones.components:
        raise EmptyToneError("cannot synthesize a multi-tone with no components")
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    nyquist = sample_rate / 2.0
    for comp in tones.components:
        if comp.frequency >= nyquist:
            raise AliasingError(
                f"tone at {comp.frequency} Hz is at or above Nyquist ({nyquist} Hz)"
            )
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for comp in tones.components:
        out += comp.amplitude * np.cos(2.0 * math.pi * comp.frequency * t + comp.phase)
    return Signal(out, sample_rate)


def harmonic_stack(f0: float, n_harmonics: int, amplitudes: Sequence[float]) -> MultiTone:
    """Zero-phase tones at integer multiples of f0: i*f0 for i = 1..n_harmonics."""
    if f0 <= 0:
        raise ValueError(f"f0 must be > 0, got {f0}")
    if n_harmonics < 1:
        raise ValueError(f"n_harmonics must be >= 1, got {n_harmonics}")
    if len(amplitudes) != n_harmonics:
        raise ValueError(
            f"expected {n_harmonics} amplitudes, got {len(amplitudes)}"
        )
    comps = [
        CosineComponent(float(a), (i + 1) * f0, 0.0) for i, a in enumerate(amplitudes)
    ]
    return MultiTone(comps)


def _standard_normal(rng: np.random.Generator) -> float:
    # Box-Muller on two uniform draws; fixed transform so draws are
    # reproducible from the PCG64 bit stream alone.
    u1 = 1.0 - rng.random()  # (0, 1]
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def sample_dataset(spec: DatasetSpec, seed: int) -> LabeledSet:
    """Draw a labeled set per the dataset geometry; deterministic given seed.

    Draw order is class-major then sample-major, one normal frequency draw per
    sample (two uniforms each via Box-Muller).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    inputs: list = []
    labels: list = []
    freqs: list = []
    for c, mean in enumerate(spec.class_means):
        offset = float(spec.dc_map[c]) if spec.dc_map is not None else 0.0
        for _ in range(spec.samples_per_class):
            f = mean + spec.freq_std * _standard_normal(rng)
            tone = MultiTone([CosineComponent(1.0, f, 0.0)])
            sig = synthesize(tone, spec.sample_rate, spec.duration)
            if offset != 0.0:
                sig = Signal(sig.samples + offset, spec.sample_rate)
            inputs.append(sig)
            labels.append(c)
            freqs.append(f)
    return LabeledSet(inputs, labels, freqs)
