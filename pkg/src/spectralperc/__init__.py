"""spectralperc: exact Fourier-Walsh spectra and Monte Carlo estimators for
critical planar percolation."""

from ._backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
