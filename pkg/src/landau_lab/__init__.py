"""Numerical laboratory for the linearized and perturbative Landau equation with
Coulomb interaction on a periodic box.

Set ``LANDAU_NUMBA=0`` to run the pure-numpy fallbacks instead of the numba
kernels, and ``LANDAU_THREADS`` to choose the FFT worker count.
"""
__version__ = "0.1.0"
