"""rmcert: multiparticle entanglement certification from locally
randomized measurements.

The toolkit covers the full workflow: exact moment bounds for
separability and producibility classes (rational arithmetic), shot-noise
simulation of randomized local measurements, unbiased moment estimators
with rigorous concentration-inequality error bars, measurement-budget
planning, and an end-to-end certification pipeline.
"""

__version__ = "0.1.0"

from .bounds import (
    Criterion,
    CriterionBound,
    FULLSEP,
    WCLASS,
    depth_implication,
    fullsep_bounds,
    ksep,
    ksep_bound_r2,
    ksep_bound_r4,
    mprod_bound_r2,
    mproducible,
    noise_threshold,
    wclass_bound_r2,
)
from .certify import (
    CertificationReport,
    Verdict,
    certify_all,
    estimate_from_records,
    test_criterion,
)
from .confidence import (
    ErrorBar,
    bernstein_error_bar,
    bernstein_variance_error_bar,
    cantelli_one_sided_tail,
    cantelli_two_sided,
    chernoff_error_bar,
)
from .errors import (
    IngestionError,
    InfeasiblePlanError,
    ResourceLimitError,
    RmcertError,
    ValidationError,
)
from .estimation import (
    MomentEstimate,
    SettingStats,
    correlation_sample,
    e_hat_t,
    moment_estimate,
    p_hat_k,
    variance_coefficients,
    variance_r2_estimator,
    variance_upper_bound,
)
from .moments import (
    SphericalDesign,
    bell_product_r4,
    correlation,
    ghz_moment_closed,
    icosahedron_design,
    moment_design,
    monte_carlo_moment,
    noisy_ghz_r2,
    pauli_axes_design,
)
from .planner import (
    BudgetPlan,
    certification_budget,
    min_total_budget,
    optimal_k,
    required_m,
)
from .sampling import (
    MeasurementSetting,
    ShotRecord,
    read_records,
    run_experiment,
    sample_setting,
    sample_shots,
    simulate_to_file,
    write_records,
)
from .states import (
    BlockProduct,
    DenseState,
    NoisyGhz,
    densify,
    fidelity_to_p,
    make_noisy_ghz,
)
