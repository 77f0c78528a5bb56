"""Tight-binding spectra of slowly strained honeycomb lattices.

Submodules
----------
geometry     lattice, dual lattice, bonds and Dirac points
deformation  displacement fields, bond strains, pseudo-magnetic fields
hamiltonian  bulk Bloch matrix and AC/ZZ supercell Hamiltonians
spectra      eigensolver front end, q-sweeps, boundary-mode classification
dirac1d      effective one-dimensional Dirac operator
validation   two-scale ansatz, residuals, second-order eigenvalue corrector
cli          command line entry point
"""

__version__ = "0.1.0"
