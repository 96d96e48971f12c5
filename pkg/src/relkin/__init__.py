"""relkin: a desk-scale numerical laboratory for relativistic stochastic
kinetics.

Subpackages cover the zero-point random field and its two-point statistics,
relativistic transport along characteristics, spectral wave synthesis with
energy-sign bookkeeping, hydrodynamic (density/velocity) decomposition of
complex waves, joint position-momentum product distributions, and positive
moving-lump distributions.  Everything runs in natural units (hbar = c = 1)
with metric signature (+,-,-,-); masses carry units of inverse length.
"""

__version__ = "0.1.0"
