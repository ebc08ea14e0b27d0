"""Spectral tools for 2D MHD perturbations of Couette flow with a constant field.

Subpackages:
    spectral  - Fourier grids and moving-frame operator symbols
    linear    - per-mode linear dynamics, growth and envelope statistics
    weights   - time-dependent Fourier multiplier weights and their inequalities
    sim       - pseudo-spectral nonlinear simulation with exact dissipation factors
    harness   - run configuration, sweeps, threshold search, CSV/JSON artifacts
    cli       - command-line interface
"""

__version__ = "0.1.0"
