"""Replica-symmetric theory and AMP experiments for semi-supervised
perceptron learning with margin-structured data."""

from ._core import (  # noqa: F401
    AmpConfig,
    AmpResult,
    Dataset,
    LearningSetup,
    McmcConfig,
    OrderParams,
    QuadratureRule,
    Teacher,
    UpdateRule,
    __version__,
    channel_c,
    channel_d,
    find_all_roots,
    fine_tune_protocol,
    free_energy,
    g_marginal,
    g_marginal_prime,
    generalization_error,
    h_prime,
    h_tail,
    load_dataset,
    log_h_tail,
    make_dataset,
    measure_overlap,
    mills_ratio_neg,
    posterior_sample_overlap,
    rhs_single,
    run_amp,
    sample_teacher,
    save_dataset,
    solve_fixed_point,
    spinodal_scan,
)
