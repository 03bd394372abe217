"""Shared generators and helpers for the test suite.

Random scenarios keep the reflecting surfaces at well-spread bearings
around the user cluster. That keeps every surface-to-user link away from
the horizontal axis (where the arrival-angle derivative degenerates) and
keeps the measurement blocks well conditioned, so the information walk
contracts and the coupling identities can be checked at tight tolerances.
"""

import math

import numpy as np
import pytest

from loctrack.scenario import (
    PRIOR_L2,
    AlignedPhases,
    RandomPhases,
    ScenarioConfig,
    random_walk_trajectory,
    uniform_spatial_prior,
    validate,
)

# Links this far (in sine terms) off the horizontal keep the angle
# derivative well defined even after a few random-walk steps.
_BEARING_SINE_FLOOR = 0.3


def spread_bearings(rng: np.random.Generator, count: int) -> np.ndarray:
    """Roughly evenly spaced bearings, nudged off the horizontal axis."""
    base = rng.uniform(0.0, 2.0 * math.pi)
    bearings = base + np.arange(count) * (2.0 * math.pi / max(count, 1))
    bearings = bearings + rng.uniform(-0.2, 0.2, size=count)
    for idx in range(count):
        while abs(math.sin(bearings[idx])) < _BEARING_SINE_FLOOR:
            bearings[idx] += 0.35
    return np.mod(bearings, 2.0 * math.pi)


def random_scenario(
    rng: np.random.Generator,
    num_users: int | None = None,
    num_steps: int | None = None,
    num_ris: int | None = None,
    noise_variance: float | None = None,
    prior_kind: str = PRIOR_L2,
    phase_style: str = "aligned",
):
    """Random small deployment plus a random-walk trajectory on it.

    Users sit on a small circle around a random centre, surfaces 30-60 m
    out at spread bearings, the base station 80-120 m away. Returns the
    validated config and a seeded trajectory.
    """
    K = int(num_users if num_users is not None else rng.integers(1, 4))
    T = int(num_steps if num_steps is not None else rng.integers(2, 5))
    R = int(num_ris if num_ris is not None else rng.integers(2, 5))

    centre = rng.uniform(-20.0, 20.0, size=2)
    user_radius = rng.uniform(2.5, 4.0)
    user_angles = rng.uniform(0.0, 2.0 * math.pi) + np.arange(K) * (
        2.0 * math.pi / max(K, 1)
    )
    users = centre + user_radius * np.stack(
        [np.cos(user_angles), np.sin(user_angles)], axis=1
    )
    users = users + rng.uniform(-0.3, 0.3, size=(K, 2))

    bearings = spread_bearings(rng, R)
    ris_dists = rng.uniform(30.0, 60.0, size=R)
    surfaces = centre + ris_dists[:, None] * np.stack(
        [np.cos(bearings), np.sin(bearings)], axis=1
    )

    bs_bearing = rng.uniform(0.0, 2.0 * math.pi)
    bs = centre + rng.uniform(80.0, 120.0) * np.array(
        [math.cos(bs_bearing), math.sin(bs_bearing)]
    )

    if noise_variance is None:
        noise_variance = float(10.0 ** rng.uniform(-9.0, -7.0))
    spatial = float(10.0 ** rng.uniform(0.0, 1.3))
    walk_var = float(10.0 ** rng.uniform(-1.3, -0.5))
    edges, prec = uniform_spatial_prior(T, K, spatial)

    if phase_style == "aligned":
        phases = AlignedPhases()
    elif phase_style == "random":
        phases = RandomPhases(seed=int(rng.integers(2**31)))
    else:
        raise ValueError(f"unknown phase style {phase_style!r}")

    config = ScenarioConfig(
        bs_position=bs,
        ris_positions=surfaces,
        user_initial_positions=users,
        num_users=K,
        num_ris=R,
        num_steps=T,
        n_bs_antennas=16,
        n_ris_elements=16,
        carrier_frequency_hz=28e9,
        path_loss_exponent=-2.08,
        rician_factor_br=100.0,
        rician_factor_ru=100.0,
        noise_variance=noise_variance,
        transmit_power=0.01,
        pilot_length=8,
        ris_phase_profiles=phases,
        spatial_edges=edges,
        spatial_precision=prec,
        temporal_covariance=np.broadcast_to(
            walk_var * np.eye(2), (max(T - 1, 0), K, 2, 2)
        ).copy(),
        first_step_anchor_variance=float(rng.uniform(0.5, 2.0)),
        prior_kind=prior_kind,
    )
    report = validate(config)
    assert report.ok, str(report)
    trajectory = random_walk_trajectory(config, seed=int(rng.integers(2**31)))
    return config, trajectory


def rel_frobenius(actual: np.ndarray, expected: np.ndarray) -> float:
    """Relative Frobenius distance, guarded against a zero reference."""
    denom = max(float(np.linalg.norm(expected)), 1e-300)
    return float(np.linalg.norm(np.asarray(actual) - np.asarray(expected))) / denom


def central_difference(f, x: np.ndarray, h: float) -> np.ndarray:
    """Columnwise central differences of a vector-valued function."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        hi = np.zeros_like(x)
        hi[i] = h
        cols.append((np.asarray(f(x + hi)) - np.asarray(f(x - hi))) / (2.0 * h))
    return np.stack(cols, axis=-1)


@pytest.fixture
def rng():
    """Fresh deterministic generator per test."""
    return np.random.default_rng(20240824)
