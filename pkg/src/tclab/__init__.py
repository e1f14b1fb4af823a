"""Markets with proportional transaction costs on finite scenario trees.

Solvency cones, price systems, no-arbitrage checks and superhedging, all
reduced to linear programs that run in float (HiGHS) or exact rational
arithmetic.
"""
from .cones import (
    ConeCertificate,
    ConeError,
    ConeSpec,
    check_ef_conditions,
    classify,
    dual_boundary_distance,
    extreme_rays_dual,
    in_dual_cone,
    in_solvency_cone,
    interior_margin,
    liquidation_bound_alpha,
    normal_cone_constant,
    stress_score,
)
from .lp import LpProblem, LpSolution, feasible_point, make_problem, solve
from .market import (
    Claim,
    MarketValidationError,
    ScenarioTree,
    Strategy,
    is_admissible,
    load_claim,
    load_market,
    market_from_dict,
    portfolio_value,
)
from .numeric import InputError
from .pricing import PriceSystem, find_cps, verify_supermartingale
from .arbitrage import (
    Witness,
    check_condition_b,
    check_na2,
    check_na2_dual,
    check_na2_primal,
    is_na2_witness,
    validate_witness,
)
from .superhedging import attainability, superhedge_price

__version__ = "0.1.0"
