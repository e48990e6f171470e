"""Component-count distributions, pivot masses and explicit no-pivot
couplings for assemblies, multisets and selections."""

from .coupling import (
    CouplingTable,
    CutCertificate,
    construct_coupling,
    sample_coupled_pair,
    sample_coupled_pairs,
    strassen_check,
    verify_coupling,
)
from .pivot import (
    find_threshold_x,
    is_pivot,
    pivot_mass_closed_form,
    pivot_mass_oracle,
    pivot_mass_report,
    pivot_mass_subset_bound,
)
from .processes import ProcessFamily, verify_conditioning, weighted_sum_pmf, z_cdf, z_pmf
from .rowclasses import build_row_classes
from .special import regularized_incomplete_beta, upper_incomplete_gamma
from .structures import (
    ColumnLabel,
    StructureSpec,
    column_multiplicity,
    component_distribution,
    count_structures,
    enumerate_column_labels,
)

__version__ = "0.1.0"
