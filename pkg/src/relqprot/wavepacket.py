"""Light-cone amplitude profiles and two-hump stretched states.

All geometry lives on the retarded coordinate tau = t - x with c = 1, so a
freely propagating packet is a fixed function of tau and a measuring party
simply sees a growing window of it.  Two unit-mass profile families are
provided: a raised-cosine bump vanishing identically outside
(center - width, center + width), and a Gaussian whose squared-amplitude
mass outside that nominal interval equals exp(-tail_exponent).  Only window
masses and amplitude overlaps of these profiles enter the protocol
statistics, which is why the family choice is free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import erfcinv, ndtr, ndtri

__all__ = [
    "Waveform",
    "StretchedState",
    "Window",
    "window_mass",
    "translate",
    "delayed_overlap",
]

_QUAD_KW = {"epsabs": 1e-13, "epsrel": 1e-13, "limit": 400}


def _bump_cdf_std(u):
    """Cumulative mass of the standardized raised-cosine bump on (-1, 1)."""
    v = 0.5 * np.pi * np.clip(u, -1.0, 1.0)
    return (8.0 / (3.0 * np.pi)) * (
        3.0 * v / 8.0
        + np.sin(2.0 * v) / 4.0
        + np.sin(4.0 * v) / 32.0
        + 3.0 * np.pi / 16.0
    )


def _bump_pdf_std(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, (4.0 / 3.0) * np.cos(0.5 * np.pi * u) ** 4, 0.0)


# Cumulative table used to seed inverse-CDF sampling; two Newton polish steps
# bring the inversion error far below the statistical tolerances.
_BUMP_GRID = np.linspace(-1.0, 1.0, 4097)
_BUMP_CDF_GRID = _bump_cdf_std(_BUMP_GRID)


def _bump_ppf_std(q):
    q = np.asarray(q, dtype=float)
    u = np.interp(q, _BUMP_CDF_GRID, _BUMP_GRID)
    for _ in range(2):
        pdf = _bump_pdf_std(u)
        step = np.where(pdf > 1e-9, (_bump_cdf_std(u) - q) / np.maximum(pdf, 1e-9), 0.0)
        u = np.clip(u - step, -1.0, 1.0)
    return u


@lru_cache(maxsize=None)
def _gaussian_sigma(width: float, tail_exponent: float) -> float:
    return width / (math.sqrt(2.0) * float(erfcinv(math.exp(-tail_exponent))))


@dataclass(frozen=True)
class Waveform:
    """Unit-mass amplitude profile on the light cone.

    ``tail_exponent is None`` selects the compact raised-cosine bump whose
    support is exactly (center - width, center + width).  Otherwise the
    profile is a Gaussian scaled so that the mass outside that same nominal
    interval equals ``exp(-tail_exponent)``; the interval then acts as the
    agreed localization window rather than a hard support.
    """

    width: float
    center: float = 0.0
    tail_exponent: float | None = None

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.tail_exponent is not None and not self.tail_exponent > 0:
            raise ValueError("tail_exponent must be positive")

    @property
    def is_compact(self) -> bool:
        return self.tail_exponent is None

    @property
    def sigma(self) -> float:
        """Gaussian scale realizing the prescribed nominal tail mass."""
        if self.tail_exponent is None:
            raise ValueError("compact profiles have no Gaussian scale")
        return _gaussian_sigma(self.width, self.tail_exponent)

    @property
    def tail_mass(self) -> float:
        """Mass outside the nominal interval (exactly zero when compact)."""
        return 0.0 if self.tail_exponent is None else math.exp(-self.tail_exponent)

    @property
    def support(self) -> tuple[float, float]:
        if self.is_compact:
            return (self.center - self.width, self.center + self.width)
        return (-math.inf, math.inf)

    @property
    def nominal_interval(self) -> tuple[float, float]:
        return (self.center - self.width, self.center + self.width)

    def density(self, tau):
        """Squared amplitude, a probability density in tau."""
        tau = np.asarray(tau, dtype=float)
        if self.is_compact:
            u = (tau - self.center) / self.width
            out = (4.0 / (3.0 * self.width)) * np.cos(0.5 * np.pi * np.clip(u, -1, 1)) ** 4
            return np.where(np.abs(u) < 1.0, out, 0.0)
        s = self.sigma
        z = (tau - self.center) / s
        return np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi))

    def amplitude(self, tau):
        """Real non-negative amplitude (both families are phase-free)."""
        return np.sqrt(self.density(tau))

    def cdf(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.is_compact:
            return _bump_cdf_std((tau - self.center) / self.width)
        return ndtr((tau - self.center) / self.sigma)

    def mass(self, lo: float, hi: float) -> float:
        """Probability mass carried between light-cone coordinates lo < hi."""
        if not hi > lo:
            raise ValueError("mass window must satisfy hi > lo")
        return float(self.cdf(hi) - self.cdf(lo))

    def ppf(self, q):
        """Inverse of the cumulative mass, used for one-draw sampling."""
        if self.is_compact:
            return self.center + self.width * _bump_ppf_std(q)
        # a uniform draw can be exactly 0, which ndtri maps to -inf
        return self.center + self.sigma * ndtri(np.maximum(q, 1e-300))

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))

    def translated(self, delta: float) -> "Waveform":
        return replace(self, center=self.center + delta)


@dataclass(frozen=True)
class Window:
    """Accessible interval on the light cone; either edge may be infinite."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("window edges must be numbers")
        if not self.hi > self.lo:
            raise ValueError("window must satisfy hi > lo")

    def shifted(self, delta: float) -> "Window":
        return Window(self.lo + delta, self.hi + delta)

    def contains(self, tau: float) -> bool:
        return self.lo < tau < self.hi


@dataclass(frozen=True)
class StretchedState:
    """Two separated copies of one profile sharing a single internal bit.

    The equal-weight combination puts mass 1/2 in each hump, so a window
    covering only the front hump yields an outcome with probability 1/2 while
    the internal bit stays perfectly readable whenever an outcome occurs.
    """

    front: Waveform
    rear: Waveform
    bit: int

    def __post_init__(self) -> None:
        if self.bit not in (0, 1):
            raise ValueError("internal bit must be 0 or 1")
        if self.front.width != self.rear.width or self.front.tail_exponent != self.rear.tail_exponent:
            raise ValueError("both humps must share one profile family")
        if not self.separation > 0:
            raise ValueError("rear hump must trail the front hump")
        if self.front.is_compact and not self.separation > 2.0 * self.front.width:
            raise ValueError("compact humps require separation > 2 * width")

    @classmethod
    def create(
        cls,
        width: float,
        separation: float,
        bit: int,
        tail_exponent: float | None = None,
        translation: float = 0.0,
    ) -> "StretchedState":
        front = Waveform(width, translation, tail_exponent)
        return cls(front, front.translated(separation), bit)

    @property
    def width(self) -> float:
        return self.front.width

    @property
    def separation(self) -> float:
        return self.rear.center - self.front.center

    @property
    def translation(self) -> float:
        return self.front.center

    @property
    def is_compact(self) -> bool:
        return self.front.is_compact

    @property
    def tail_exponent(self) -> float | None:
        return self.front.tail_exponent

    def density(self, tau):
        return 0.5 * (self.front.density(tau) + self.rear.density(tau))

    def window_mass(self, window: Window) -> float:
        return 0.5 * (
            self.front.mass(window.lo, window.hi) + self.rear.mass(window.lo, window.hi)
        )

    def hump_windows(self) -> tuple[Window, Window]:
        """Nominal per-hump localization windows used by the verification."""
        return (Window(*self.front.nominal_interval), Window(*self.rear.nominal_interval))

    def translated(self, delta: float) -> "StretchedState":
        return StretchedState(self.front.translated(delta), self.rear.translated(delta), self.bit)

    def sample_fire_time(self, rng, size=None):
        """Draw outcome coordinates from the two-hump density (hump first)."""
        pick_rear = rng.random(size) < 0.5
        u = rng.random(size)
        if size is None:
            hump = self.rear if pick_rear else self.front
            return float(hump.ppf(u))
        return np.where(pick_rear, self.rear.ppf(u), self.front.ppf(u))


def window_mass(state: StretchedState, window: Window) -> float:
    """Probability that a detector confined to ``window`` obtains an outcome."""
    return state.window_mass(window)


def translate(state: StretchedState, delta: float) -> StretchedState:
    """Shift all amplitude along the light cone; the internal bit is untouched."""
    return state.translated(delta)


def _amplitude_parts(state) -> list[tuple[float, Waveform]]:
    if isinstance(state, Waveform):
        return [(1.0, state)]
    if isinstance(state, StretchedState):
        w = 1.0 / math.sqrt(2.0)
        return [(w, state.front), (w, state.rear)]
    raise TypeError(f"expected Waveform or StretchedState, got {type(state)!r}")


def _intervals_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def delayed_overlap(delayed, honest: StretchedState) -> float:
    """Probability that a late replacement state passes the honest projector.

    ``delayed`` is the pure state a sender injects after postponing the
    choice (a single hump or a full two-hump state); ``honest`` is the agreed
    reference.  The value is the squared amplitude overlap with the reference
    profile restricted to its nominal hump windows.  It cannot exceed 1/2 (up
    to the Gaussian tail allowance) because the reference keeps half its mass
    in the front hump that the delayed state is forbidden to cover.
    """
    front_iv = honest.front.nominal_interval
    parts_d = _amplitude_parts(delayed)
    for _, hump in parts_d:
        if _intervals_overlap(hump.nominal_interval, front_iv):
            raise ValueError("delayed state support covers the front hump")

    parts_h = _amplitude_parts(honest)

    def integrand(tau):
        gd = sum(c * h.amplitude(tau) for c, h in parts_d)
        gh = sum(c * h.amplitude(tau) for c, h in parts_h)
        return gd * gh

    total = 0.0
    for win in honest.hump_windows():
        lo = max(win.lo, min(h.support[0] for _, h in parts_d))
        hi = min(win.hi, max(h.support[1] for _, h in parts_d))
        if hi > lo:
            total += integrate.quad(integrand, lo, hi, **_QUAD_KW)[0]
    return float(min(max(total * total, 0.0), 1.0))
