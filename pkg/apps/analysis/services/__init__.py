from .population import (
    case_density_C,
    effective_mortality_m1star,
    survival_healthy_S,
    survivor_function_M,
    total_cases_Cstar,
)
from .prevalence import (
    convolution_factors,
    damping_Y,
    prevalence,
    prevalence_curve,
    prevalence_odds_cohort,
    prevalence_odds_convolution_special,
    prevalence_odds_keiding,
    prevalence_odds_pseudo,
    separable_factors,
)
from .pde import (
    general_mortality,
    pde_residual_odds,
    pde_residual_prevalence,
    pde_residual_prevalence_general,
    relative_mortality,
    richardson_ratio,
)
from .reconstruction import (
    cross_section_grid,
    pair_characteristics,
    reconstruct_from_model,
    reconstruct_incidence,
)
from .crosscheck import crosscheck_report, formula_triangle
