"""Block-based compressive sensing of grayscale images, with recovery by
iterative shrinkage/thresholding over nonlocal patch groups (adaptive
per-group SVD dictionaries, hard thresholding of singular values) and a
fixed-basis block-DCT baseline."""

from sgsr.image import load_pgm, save_pgm, psnr
from sgsr.sampling import (
    MeasurementOperator,
    MeasurementVector,
    build_operator,
    forward,
    adjoint,
    save_measurements,
    load_measurements,
)
from sgsr.grouping import (
    PatchLayout,
    GroupIndex,
    build_layout,
    match_patches,
    match_all_patches,
    gather_group,
    scatter_average,
)
from sgsr.dictionary import GroupSVD, thin_svd, reconstruct_group
from sgsr.shrinkage import (
    ShrinkageParams,
    shrinkage_params,
    hard_threshold,
    solve_group_subproblem,
    brute_force_oracle,
)
from sgsr.solver import (
    RecoveryConfig,
    ConvergenceTrace,
    initialize,
    gradient_step,
    proximal_group_step,
    recover_sgsr,
    recover_dct,
)

__version__ = "0.1.0"
