"""Discrete q-ultraspherical polynomials on the two-sided geometric grid +-a q^{k+1}."""

from .params import FamilyParams, RepParams
from .qseries import qpoch, qpoch_inf, phi32_terminating
from .ultraspherical import ctilde, dual_dtilde, special_value
from .repops import build_operator, build_frame, eigenvector
from .spectral import eigenvalues, spectral_measure, match_spectrum
from .verify import certify

__version__ = "0.1.0"
