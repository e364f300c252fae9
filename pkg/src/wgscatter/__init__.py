"""Two-dimensional scattering by a finite waveguide via the pseudo-Hermitian
transfer-matrix construction, including its exceptional points."""

__version__ = "0.1.0"
