"""ssflab: a desk-scale laboratory for spectral shift functions of
Schrodinger operators on Dirichlet boxes.

Counting routes go through exact matrix inertia, trace identities through
dense spectra, and Laplace transforms through Brownian bridge Monte Carlo,
so every quantity has at least two independent numerical realizations.
"""

__version__ = "0.1.0"
