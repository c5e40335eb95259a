"""Validity-aware adversarial scenario generation for highway driving.

Thin wrapper over the C++ core; see the project README for the full CLI.
"""

from ._dynasto import (  # noqa: F401
    SafeDistanceParams,
    adjusted_rand_index,
    classify_trace,
    cliffs_delta,
    cluster_event_vectors,
    collision_likelihood,
    decode_scenario,
    episode_reward,
    extract_events,
    levenshtein,
    mann_whitney_u,
    polynomial_mutation,
    safe_lat_distance,
    safe_lon_distance,
    sbx_crossover,
    simulate_json,
    __version__,
)
