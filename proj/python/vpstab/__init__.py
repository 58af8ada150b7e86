"""Python access to the vpstab core (norms, envelopes, transport, CLI)."""

from ._vpstab import (
    AccuracyError,
    ConfigError,
    DomainError,
    Error,
    PreconditionError,
    SizeError,
    __version__,
    envelope_w1,
    envelope_x,
    g_closed,
    g_ode,
    inf,
    kernel_lemma_ratio,
    lp_sup_norm,
    luxemburg_norm,
    phi,
    psi,
    run_cli,
    t_star,
    w1_exact,
    w1_sinkhorn,
)

__all__ = [
    "AccuracyError",
    "ConfigError",
    "DomainError",
    "Error",
    "PreconditionError",
    "SizeError",
    "__version__",
    "envelope_w1",
    "envelope_x",
    "g_closed",
    "g_ode",
    "inf",
    "kernel_lemma_ratio",
    "lp_sup_norm",
    "luxemburg_norm",
    "phi",
    "psi",
    "run_cli",
    "t_star",
    "w1_exact",
    "w1_sinkhorn",
]
