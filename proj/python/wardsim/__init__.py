"""Ward patient-monitoring simulator (C++ core)."""

from ._wardsim import (
    ConfigError,
    CorruptLog,
    Scenario,
    Server,
    UnknownPatient,
    compute_bpm,
    eventual_delivery_prob,
    replay_trace,
    run_scenario,
)

__all__ = [
    "ConfigError",
    "CorruptLog",
    "Scenario",
    "Server",
    "UnknownPatient",
    "compute_bpm",
    "eventual_delivery_prob",
    "replay_trace",
    "run_scenario",
]
