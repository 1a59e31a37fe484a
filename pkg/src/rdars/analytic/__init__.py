from rdars.analytic.moments import (
    c3_closed,
    c4_closed,
    gamma1_moments,
    gamma2_moments,
    gamma3_moments,
    sum_moment_combinatorial,
)
from rdars.analytic.simo import (
    SimoRateInputs,
    fourth_moment_terms,
    e_noise,
    e_signal,
    ergodic_rate_simo_approx,
)
from rdars.analytic.siso import (
    GammaApprox,
    QuadratureError,
    SisoMomentInputs,
    ergodic_rate_gamma,
    ergodic_rate_gamma_laguerre,
    ergodic_rate_siso,
    gamma_match,
    mean_snrs_by_system,
    rate_upper_bound_siso,
    ris_crossover_n,
    snr_moments_composed,
    snr_moments_expanded,
    snr_moments_siso,
)
