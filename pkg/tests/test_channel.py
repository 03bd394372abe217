"""Cascaded channel model, steering vectors, and analytic derivatives."""

import dataclasses
import math

import numpy as np
import pytest

from conftest import random_scenario
from loctrack.channel import (
    cascade_from_parameters,
    cascaded_channel,
    channel_jacobian,
    effective_noise_variance,
    geometry_params,
    resolve_phases,
    steering_derivative,
    steering_vector,
)
from loctrack.errors import DegenerateGeometry, DimensionMismatch
from loctrack.scenario import (
    ExplicitPhases,
    RandomPhases,
    static_trajectory,
    toy_scenario,
)


def test_steering_vector_structure():
    vec = steering_vector("bs", 0.7, 12)
    assert vec.shape == (12,)
    assert vec[0] == 1.0 + 0.0j
    assert np.allclose(np.abs(vec), 1.0)
    assert np.vdot(vec, vec).real == pytest.approx(12.0)
    m = np.arange(12)
    assert np.allclose(vec, np.exp(1j * np.pi * m * math.cos(0.7)))


def test_steering_vector_rejects_unknown_kind():
    with pytest.raises(DimensionMismatch):
        steering_vector("satellite", 0.3, 4)


def test_steering_derivative_matches_finite_difference():
    h = 1e-7
    for angle in (0.4, 1.0, 2.2):
        fd = (steering_vector("ris", angle + h, 16) - steering_vector("ris", angle - h, 16)) / (2 * h)
        analytic = steering_derivative(angle, 16)
        assert np.linalg.norm(analytic - fd) / np.linalg.norm(fd) < 1e-6


def test_geometry_params_hand_computed():
    geo = geometry_params([0.0, 0.0], [3.0, 4.0], -2.0)
    assert geo.distance == pytest.approx(5.0)
    assert geo.angle == pytest.approx(math.acos(3.0 / 5.0))
    assert geo.gain == pytest.approx(5.0 ** (-1.0))
    # the attenuating reading ignores the exponent sign
    assert geometry_params([0.0, 0.0], [3.0, 4.0], 2.0).gain == geo.gain


def test_geometry_params_guards_coincidence():
    with pytest.raises(DegenerateGeometry):
        geometry_params([1.0, 1.0], [1.0, 1.0], -2.0)


def test_effective_noise_variance_formula():
    config = toy_scenario()
    kb, ku = config.rician_factor_br, config.rician_factor_ru
    br = np.array([0.5, 0.25])
    ru = np.array([0.1, 0.2])
    frac = (1.0 + kb + ku) / ((1.0 + kb) * (1.0 + ku))
    want = config.noise_variance + config.transmit_power * frac * float(
        np.sum((br * ru) ** 2)
    )
    assert effective_noise_variance(config, br, ru) == pytest.approx(want)


def test_cascade_consistency_with_parameters():
    """Rebuilding the cascade from its own reported parameters reproduces it."""
    config = toy_scenario()
    traj = static_trajectory(config)
    for t in range(config.num_steps):
        for k in range(config.num_users):
            chan = cascaded_channel(config, traj, t, k)
            rebuilt = cascade_from_parameters(
                config, traj, t, k, chan.ru_angles, chan.ru_gains
            )
            assert np.allclose(rebuilt, chan.vector, rtol=1e-12, atol=1e-15)


def test_cascade_linear_in_gains():
    config = toy_scenario()
    traj = static_trajectory(config)
    chan = cascaded_channel(config, traj, 0, 0)
    doubled = cascade_from_parameters(
        config, traj, 0, 0, chan.ru_angles, 2.0 * chan.ru_gains
    )
    assert np.allclose(doubled, 2.0 * chan.vector, rtol=1e-12)


def test_channel_jacobian_matches_finite_difference(rng):
    config, traj = random_scenario(rng, num_steps=2)
    for k in range(config.num_users):
        chan = cascaded_channel(config, traj, 1, k)
        jac = channel_jacobian(config, traj, 1, k)
        R = config.num_ris
        params = np.concatenate([chan.ru_angles, chan.ru_gains])
        fd = np.zeros((config.n_bs_antennas, 2 * R), dtype=complex)
        for i in range(2 * R):
            h = 1e-7 * max(1.0, abs(params[i]))
            up, dn = params.copy(), params.copy()
            up[i] += h
            dn[i] -= h
            fd[:, i] = (
                cascade_from_parameters(config, traj, 1, k, up[:R], up[R:])
                - cascade_from_parameters(config, traj, 1, k, dn[:R], dn[R:])
            ) / (2 * h)
        err = np.linalg.norm(jac.matrix - fd) / np.linalg.norm(fd)
        assert err < 1e-6


def test_aligned_phases_maximise_served_reflection(rng):
    """The aligned policy should beat any random phase draw for its user."""
    config = toy_scenario(num_users=2, num_ris=4)
    traj = static_trajectory(config)
    aligned = cascaded_channel(config, traj, 0, 0)
    n_r = config.n_ris_elements
    # surfaces 0 and 2 serve user 0 (round robin), so their responses peak
    for i in (0, 2):
        assert abs(aligned.reflection[i]) == pytest.approx(math.sqrt(n_r), rel=1e-9)
    for seed in range(30):
        shuffled = dataclasses.replace(
            config, ris_phase_profiles=RandomPhases(seed=seed)
        )
        rand = cascaded_channel(shuffled, traj, 0, 0)
        for i in (0, 2):
            assert abs(rand.reflection[i]) <= abs(aligned.reflection[i]) + 1e-9


def test_resolve_phases_explicit_passthrough():
    base = toy_scenario()
    values = np.random.default_rng(1).uniform(
        0.0, 2 * math.pi, size=(base.num_steps, base.num_ris, base.n_ris_elements)
    )
    config = dataclasses.replace(base, ris_phase_profiles=ExplicitPhases(values))
    traj = static_trajectory(config)
    got = resolve_phases(config, traj, 1, 2)
    assert np.array_equal(got, values[1, 2])


def test_resolve_phases_random_deterministic():
    config = dataclasses.replace(
        toy_scenario(), ris_phase_profiles=RandomPhases(seed=42)
    )
    traj = static_trajectory(config)
    a = resolve_phases(config, traj, 0, 1)
    b = resolve_phases(config, traj, 0, 1)
    c = resolve_phases(config, traj, 1, 1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_scenario_jacobians_stay_regular(rng):
    """The spread-bearing generator must keep every link differentiable."""
    for _ in range(10):
        config, traj = random_scenario(rng)
        for t in range(config.num_steps):
            for k in range(config.num_users):
                jac = channel_jacobian(config, traj, t, k)
                assert np.all(np.isfinite(jac.matrix))
                assert np.linalg.norm(jac.matrix) > 0.0
