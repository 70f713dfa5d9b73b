"""Python bindings for the nagflow C++ core."""

from ._nagflow import (
    LinearField,
    NagflowError,
    NotCommensurate,
    NotPositiveDefinite,
    WindowViolation,
    BetaOutOfRange,
    average_closed_form,
    average_quadrature,
    exp_drift,
    helmholtz_split,
    instability_certificate,
    integrate_nesterov,
    lyapunov_constants,
    optimal_restart,
    optimal_restart_auto,
    period,
    run_config,
    simulate_hybrid,
)

__all__ = [
    "LinearField",
    "NagflowError",
    "NotCommensurate",
    "NotPositiveDefinite",
    "WindowViolation",
    "BetaOutOfRange",
    "average_closed_form",
    "average_quadrature",
    "exp_drift",
    "helmholtz_split",
    "instability_certificate",
    "integrate_nesterov",
    "lyapunov_constants",
    "optimal_restart",
    "optimal_restart_auto",
    "period",
    "run_config",
    "simulate_hybrid",
]
