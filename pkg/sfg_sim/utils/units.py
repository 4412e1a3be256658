"""Unit conversions between wavelength, frequency, flux and optical power.

Everything inside the package works in SI units with bandwidths in Hz;
nanometre widths are only accepted at the boundary.
"""
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK

NM = 1e-9


def bandwidth_nm_to_hz(center_wavelength: float, width: float) -> float:
    """Convert a spectral width around a centre wavelength into Hz.

    Both arguments are lengths in metres. Uses the first-order relation
    Δν = c·Δλ/λ², valid while the width is small against the centre.
    """
    if center_wavelength <= 0:
        raise ValueError("center_wavelength must be positive")
    if width < 0:
        raise ValueError("width must be non-negative")
    if width >= center_wavelength / 2:
        raise ValueError(
            f"width {width} m is not small against the centre wavelength {center_wavelength} m"
        )
    return SPEED_OF_LIGHT * width / center_wavelength**2


def photon_energy(wavelength: float) -> float:
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return PLANCK * SPEED_OF_LIGHT / wavelength


def flux_to_power(flux: float, wavelength: float) -> float:
    """Optical power (W) carried by a photon flux (photons/s)"""
    if flux < 0:
        raise ValueError("flux must be non-negative")
    return flux * photon_energy(wavelength)


def power_to_flux(power: float, wavelength: float) -> float:
    """Photon flux (photons/s) carried by an optical power (W)"""
    if power < 0:
        raise ValueError("power must be non-negative")
    return power / photon_energy(wavelength)


def photons_to_pairs(flux: float) -> float:
    """Pair rate for a down-converted photon flux; each pair is two photons"""
    return flux / 2.0


def nm_to_m(length_nm: float) -> float:
    """Nanometres to metres; exact to the last bit for integral inputs"""
    return length_nm / 1e9
