"""Spectral toolkit for strong delta-prime interactions supported by surfaces.

The package splits into the natural layers of the problem:

``geometry``
    Parametrized surfaces, curvature jets, and the tube (layer)
    neighborhood quantities that drive everything else.
``transverse``
    Exact 1D interface operators on ``(-d, d) \\ {0}`` with the
    delta-prime matching conditions, their secular equations, and a
    finite-difference oracle.
``sphere_oracle``
    Exact eigenvalues of the full 3D operator for a spherical
    interaction support, by separation of variables.
``effective``
    Discretization of the comparison operator ``-Lap_G + K - M^2`` and
    of its layer-scaled variants on tensor meshes.
``asymptotics``
    Assembly of the two-sided spectral brackets, the ``d(beta)``
    selection, threshold formulas, and residual/envelope reports.
``cli`` / ``runner``
    Configuration-driven experiment runner with CSV/JSON artifacts and
    rendered figures.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
