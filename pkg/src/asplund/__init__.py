"""p-th means, sup-convolutions and symmetrisations of grid functions.

The package works with non-negative functions sampled on uniform grids in
dimension 1 or 2 and checks Prekopa-Leindler and Borell-Brascamp-Lieb type
integral inequalities, together with their linear refinements under
projection and section hypotheses.
"""

from .convolution import (
    inf_convolution,
    minkowski_combine,
    sup_convolution,
    sup_convolution_bruteforce,
)
from .generators import (
    FamilySpec,
    gen_convex_body,
    gen_log_concave,
    gen_p_concave,
    generate,
    make_equal_max_section_pair,
    make_equal_projection_integral_pair,
    make_equal_projection_pair,
)
from .gridfn import (
    Grid,
    GridFn,
    GridSet,
    Potential,
    box_set,
    integrate,
    layer_cake_integrate,
    load_gridfn,
    dump_gridfn,
    refine,
    sample,
    slice_fn,
    slice_integral,
    sup_value,
    superlevel_measure_1d,
)
from .means import dual_exponent, mp_mean
from .transform import project, project_set, schwarz_fn, steiner_fn, steiner_set, truncate_infinite
from .verify import (
    Report,
    ScanReport,
    check_bbl,
    check_linear_refinement,
    check_pl,
    check_symmetrization_props,
    lambda_scan,
    tol_policy,
)

__version__ = "0.1.0"
