"""Haar tight framelets on an equal-area quadtree partition of the sphere."""

from .filterbank import (
    FilterBank,
    PartitionSchema,
    build_from_permutations,
    build_from_uv,
    check_orthonormal_basis,
    dyadic_haar_bank,
    quad_haar_bank,
    read_bank_document,
    shipped_banks,
    simplex_bank,
    spherical_bank,
    unequal_area_bank,
    validate_left_inverse,
    validate_tight,
    write_bank_document,
)
from .sphere import (
    FACE_AREA,
    ParamRect,
    PartitionTree,
    build_partition,
    cached_partition,
    locate,
    patch_area,
    read_partition,
    split_equal_area,
    square_to_sphere,
    write_partition,
)
from .signals import (
    SphericalSignal,
    derasterize,
    export_faces,
    rasterize,
    read_signal,
    sample_equirect,
    write_signal,
)
from .transform import (
    FrameletCoefficients,
    count_ops,
    decompose,
    decompose_signal,
    read_coefficients,
    reconstruct,
    reconstruct_signal,
    write_coefficients,
)
from .denoise import (
    ExperimentReport,
    NoiseSpec,
    ShrinkageParams,
    add_noise,
    bivariate,
    default_soft_lambda,
    denoise_signal,
    local_soft,
    psnr,
    run_experiment,
    soft_threshold,
)

__version__ = "0.1.0"
