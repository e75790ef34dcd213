"""Kernel and linear regression for graph-smooth targets.

Library layout:
  graphs      adjacency/Laplacian algebra, random generators, products
  kernels     Gram matrices and test-point kernel vectors
  solver      LR/LRG/KR/KRG fits via the spectral Sylvester solve
  graphlearn  joint Laplacian + coefficient estimation
  synthdata   seeded synthetic-experiment data generation
  evaluation  NMSE, cross-validation, KRR baseline, benchmark harness
  cli         config-driven command-line front end
"""

from .graphs import (
    Graph,
    Laplacian,
    build_laplacian,
    barabasi_albert,
    cartesian_product,
    erdos_renyi,
    geodesic_adjacency,
    quadratic_form,
    spectral_rescale,
)
from .kernels import GramMatrix, KernelSpec, gram_matrix, kernel_vector
from .solver import (
    Hyperparams,
    KrgModel,
    LrgModel,
    SpectralCache,
    fit_krg,
    fit_lrg,
    fitted_smoother,
    kr_fitted_shrinkage,
    predict_krg,
    predict_lrg,
    shrinkage_factors,
    solve_sylvester_spectral,
)
from .graphlearn import GraphLearnConfig, alternating_fit, joint_cost, laplacian_step
from .synthdata import Dataset, SynthConfig, make_synthetic_dataset, smooth_projection
from .evaluation import CvGrid, cross_validate, krr_baseline, nmse_db, run_benchmark

__version__ = "0.1.0"
