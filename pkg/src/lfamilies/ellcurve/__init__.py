"""Elliptic curves y^2 = x^3 + a x + b: local and global arithmetic, families."""

from .curve import Curve, ap_good, ap_naive, discriminant
from .families import (enumerate_family, family_F1, family_F2, family_F4,
                       partition_by_sign)
from .lseries import (GammaFactor, LData, conductor, dirichlet_coefficients,
                      gamma_factor, is_semistable, ldata, reduction_type,
                      refined_conductor, root_number)
from .tate import Reduction, tate

__all__ = [
    "Curve", "ap_good", "ap_naive", "discriminant", "enumerate_family",
    "family_F1", "family_F2", "family_F4", "partition_by_sign", "GammaFactor",
    "LData", "conductor", "dirichlet_coefficients", "gamma_factor",
    "is_semistable", "ldata", "reduction_type", "refined_conductor",
    "root_number", "Reduction", "tate",
]
