"""roughlab: truncated-signature algebra, non-standard approximations of
rough drivers, and RDE solvers with iterated-Lie-bracket drift."""

from .tensor import (
    ATOL_ALGEBRA,
    ATOL_LIE,
    GroupElement,
    LieElement,
    TensorShape,
    TruncatedTensor,
    bracket_word_tensor,
    dilate,
    dynkin_project,
    group_inverse,
    homogeneous_norm,
    is_central,
    is_lie,
    lie_bracket,
    tensor_exp,
    tensor_log,
    tensor_mul,
)
from .paths import (
    Dissection,
    GridRoughPath,
    PiecewisePath,
    cc_distance,
    chen_signature,
    d_holder,
    d_inf,
    grid_p_variation,
    holder_norm,
    levy_area,
    lift_on_grid,
    path_concat,
    path_reverse,
    path_run_at_speed,
    path_sample_at,
    path_scale,
    read_path_csv,
    write_path_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
