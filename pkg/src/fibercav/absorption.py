"""Overtone absorption bands and transparency checks.

Hydroxyl-type impurities absorb at a molecular stretch fundamental; the
k-th overtone of a fundamental at ``λ_f`` sits near ``λ_f / (k + 1)``.
Each band is modeled as a Gaussian in wavelength with a configurable
full width at half maximum and peak single-pass loss, which is enough to
decide whether a probe wavelength sits clear of the impurity bands and by
what margin.  Absolute peak losses depend on processing history and are
scenario inputs, not predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

#: Default band full width at half maximum [nm].
DEFAULT_BAND_FWHM_NM = 60.0

#: Default peak single-pass loss assigned to a freshly implanted band.
DEFAULT_PEAK_LOSS = 0.08

#: Center-frequency tolerance for the overtone relation (anharmonicity).
_CENTER_RTOL = 0.01

_LN2_4 = 4.0 * math.log(2.0)


def overtone_center(fundamental_nm: float, order: int) -> float:
    """Wavelength [nm] of the ``order``-th overtone of a stretch fundamental.

    Order zero returns the fundamental itself; order one the first
    overtone at half the wavelength, and so on (harmonic approximation).
    """
    if fundamental_nm <= 0.0:
        raise DomainError("fundamental wavelength must be > 0 nm")
    if order < 0:
        raise DomainError(f"overtone order must be >= 0, got {order!r}")
    return fundamental_nm / (order + 1)


@dataclass(frozen=True)
class AbsorptionBand:
    """One Gaussian impurity absorption band.

    Attributes
    ----------
    species : str
        Label for the impurity bond (free-form).
    fundamental_nm : float
        Stretch fundamental wavelength [nm].
    overtone_order : int
        Which overtone this band represents (0 = the fundamental).
    center_nm : float
        Band center [nm]; must match the harmonic overtone relation to
        within 1% (anharmonic shifts are within that tolerance).
    fwhm_nm : float
        Full width at half maximum [nm].
    peak_loss : float
        Single-pass fractional loss at band center, in [0, 1].
    """

    species: str
    fundamental_nm: float
    overtone_order: int
    center_nm: float
    fwhm_nm: float = DEFAULT_BAND_FWHM_NM
    peak_loss: float = DEFAULT_PEAK_LOSS

    def __post_init__(self):
        if self.fundamental_nm <= 0.0 or self.center_nm <= 0.0:
            raise DomainError("band wavelengths must be > 0 nm")
        if self.overtone_order < 0:
            raise DomainError("overtone order must be >= 0")
        if self.fwhm_nm <= 0.0:
            raise DomainError("band width must be > 0 nm")
        if not 0.0 <= self.peak_loss <= 1.0:
            raise DomainError("peak loss must lie in [0, 1]")
        harmonic = overtone_center(self.fundamental_nm, self.overtone_order)
        if abs(self.center_nm - harmonic) > _CENTER_RTOL * harmonic:
            raise DomainError(
                f"band center {self.center_nm!r} nm is more than 1% away from the "
                f"order-{self.overtone_order} overtone at {harmonic!r} nm"
            )

    @classmethod
    def first_overtone(
        cls,
        species: str,
        fundamental_nm: float,
        fwhm_nm: float = DEFAULT_BAND_FWHM_NM,
        peak_loss: float = DEFAULT_PEAK_LOSS,
    ) -> "AbsorptionBand":
        """Convenience constructor placing the center at the harmonic value."""
        return cls(
            species=species,
            fundamental_nm=fundamental_nm,
            overtone_order=1,
            center_nm=overtone_center(fundamental_nm, 1),
            fwhm_nm=fwhm_nm,
            peak_loss=peak_loss,
        )


def hydroxyl_band(peak_loss: float = DEFAULT_PEAK_LOSS) -> AbsorptionBand:
    """First overtone of the Si-OH stretch (fundamental 2760 nm -> 1380 nm)."""
    return AbsorptionBand.first_overtone("Si-OH", 2760.0, peak_loss=peak_loss)


def deuteroxyl_band(peak_loss: float = DEFAULT_PEAK_LOSS) -> AbsorptionBand:
    """First overtone of the Si-OD stretch (fundamental 3720 nm -> 1860 nm)."""
    return AbsorptionBand.first_overtone("Si-OD", 3720.0, peak_loss=peak_loss)


def default_bands() -> tuple[AbsorptionBand, ...]:
    """Both impurity bands with default widths and peak losses."""
    return (hydroxyl_band(), deuteroxyl_band())


def band_absorption(bands, wavelength_nm: float) -> float:
    """Total single-pass fractional loss at a wavelength.

    Bands add linearly:
    ``loss = Σ peak_loss · exp(-4 ln2 ((λ - center)/fwhm)²)``.
    """
    if wavelength_nm <= 0.0:
        raise DomainError("wavelength must be > 0 nm")
    total = 0.0
    for band in bands:
        detune = (wavelength_nm - band.center_nm) / band.fwhm_nm
        total += band.peak_loss * math.exp(-_LN2_4 * detune * detune)
    return total


@dataclass(frozen=True)
class TransparencyResult:
    """Outcome of a transparency check at one probe wavelength."""

    clear: bool
    margin: float
    window_nm: tuple[float, float] | None

    def as_dict(self) -> dict:
        return {
            "clear": self.clear,
            "margin": self.margin,
            "window_nm": list(self.window_nm) if self.window_nm else None,
        }


def transparency_check(
    bands,
    wavelength_nm: float,
    threshold: float = 1e-3,
    scan_nm: tuple[float, float] = (800.0, 2400.0),
) -> TransparencyResult:
    """Decide whether a probe wavelength sits clear of the impurity bands.

    Parameters
    ----------
    bands : iterable of AbsorptionBand
    wavelength_nm : float
        Probe wavelength [nm].
    threshold : float
        Single-pass loss above which the wavelength counts as absorbing.
    scan_nm : (lo, hi)
        Search range for the clear window's edges.

    Returns
    -------
    TransparencyResult
        ``margin`` is ``threshold - loss`` (positive when clear).  When
        clear, ``window_nm`` is the contiguous interval around the probe
        wavelength over which the summed band loss stays below threshold,
        clipped to the scan range; edges are refined by bisection to
        0.01 nm.
    """
    if threshold <= 0.0:
        raise DomainError("threshold must be > 0")
    lo_scan, hi_scan = scan_nm
    if not lo_scan < hi_scan:
        raise DomainError("scan range must be a non-empty interval")
    if not lo_scan <= wavelength_nm <= hi_scan:
        raise DomainError(
            f"wavelength {wavelength_nm!r} nm outside scan range {scan_nm!r}"
        )
    loss = band_absorption(bands, wavelength_nm)
    margin = threshold - loss
    if loss >= threshold:
        return TransparencyResult(clear=False, margin=margin, window_nm=None)

    def crossing(inside: float, outside: float) -> float:
        # bisection for band_absorption == threshold between a clear and an
        # absorbing wavelength, to 0.01 nm
        a, b = inside, outside
        while abs(b - a) > 0.01:
            mid = 0.5 * (a + b)
            if band_absorption(bands, mid) < threshold:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    step = 1.0
    low_edge = lo_scan
    probe = wavelength_nm
    while probe - step >= lo_scan:
        if band_absorption(bands, probe - step) >= threshold:
            low_edge = crossing(probe, probe - step)
            break
        probe -= step
    high_edge = hi_scan
    probe = wavelength_nm
    while probe + step <= hi_scan:
        if band_absorption(bands, probe + step) >= threshold:
            high_edge = crossing(probe, probe + step)
            break
        probe += step
    return TransparencyResult(clear=True, margin=margin, window_nm=(low_edge, high_edge))
