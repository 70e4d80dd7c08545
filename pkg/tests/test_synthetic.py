import math
from dataclasses import replace

import numpy as np
import pytest

from amsal import (
    InvalidInput,
    LatentSpec,
    as_records,
    concentration_diagnostic,
    generate_latent,
    proposition1_check,
    random_permutation_assignment,
    reference_records_spec,
    reference_spec,
    singular_value_sum,
    uniform_permutation,
    weyl_check,
)
from amsal.synthetic import fixed_point_set, restricted_cross_covariance


def test_generator_deterministic():
    spec = reference_spec(n=50, rng_seed=5)
    a, b = generate_latent(spec), generate_latent(spec)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.states, b.states)


def test_generator_respects_clip_bound():
    spec = replace(reference_spec(n=200, rng_seed=1), bound_b=0.5)
    data = generate_latent(spec)
    assert np.abs(data.x).max() <= 0.5
    assert np.abs(data.z).max() <= 0.5


def test_zero_noise_gives_distinct_state_rows():
    spec = LatentSpec(n=40, d=5, d_prime=2, num_states=2, state_priors=(0.5, 0.5),
                      x_noise=0.0, z_noise=0.0, separation=2.0, rng_seed=3)
    data = generate_latent(spec)
    assert np.unique(data.x, axis=0).shape[0] == 2
    assert np.unique(data.z, axis=0).shape[0] == 2


def test_state_means_prior_centered():
    spec = reference_spec(n=10, rng_seed=2)
    data = generate_latent(spec)
    p = np.asarray(spec.state_priors)
    np.testing.assert_allclose(p @ data.state_means_x, 0.0, atol=1e-12)
    np.testing.assert_allclose(p @ data.state_means_z, 0.0, atol=1e-12)


def test_spec_validation():
    with pytest.raises(InvalidInput):
        LatentSpec(n=0, d=2, d_prime=1)
    with pytest.raises(InvalidInput):
        LatentSpec(n=5, d=2, d_prime=1, state_priors=(0.7, 0.7))
    with pytest.raises(InvalidInput):
        LatentSpec(n=5, d=2, d_prime=1, separation=-1.0)


def test_as_records_consistency():
    data = generate_latent(reference_records_spec(n=80, rng_seed=4))
    records, truth = as_records(data, slack=0.2)
    assert records.m == 2
    np.testing.assert_allclose(records.z[truth.map], data.z)
    assert truth.satisfies(records)


def test_permutation_fixed_point_extremes():
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(
        random_permutation_assignment(6, 6, rng).map, np.arange(6)
    )
    swap = random_permutation_assignment(2, 0, rng)
    np.testing.assert_array_equal(swap.map, [1, 0])


def test_permutation_fixed_point_counts():
    rng = np.random.default_rng(1)
    for k in (0, 1, 3, 5):
        pi = random_permutation_assignment(12, k, rng)
        assert fixed_point_set(pi).size == k
    # n - 1 fixed points is impossible; rounds up to the identity
    np.testing.assert_array_equal(random_permutation_assignment(5, 4, rng).map, np.arange(5))


def test_uniform_permutation_fixed_point_rarity():
    # P(#fixed >= k) <= 1/k! for uniform permutations
    rng = np.random.default_rng(2)
    n, draws = 20, 4000
    counts = np.zeros(5)
    for _ in range(draws):
        pi = uniform_permutation(n, rng)
        fixed = fixed_point_set(pi).size
        for k in range(1, 5):
            counts[k] += fixed >= k
    for k in range(2, 5):
        assert counts[k] / draws <= 1.3 / math.factorial(k)


def test_proposition1_two_sample_exhaustive():
    data = generate_latent(reference_spec(n=2, rng_seed=6))
    x = data.x - data.x.mean(axis=0)
    z = data.z - data.z.mean(axis=0)
    ident = singular_value_sum(x.T @ z)
    swapped = singular_value_sum(x.T @ z[[1, 0]])
    frac = proposition1_check(data, 400, np.random.default_rng(7))
    expected = 1.0 if swapped < ident else 0.0
    # trials draw uniform permutations, half of which are the identity
    assert abs(frac - 0.5 * expected) <= 0.1


def test_proposition1_strong_signal():
    data = generate_latent(reference_spec(n=300, rng_seed=8))
    assert proposition1_check(data, 50, np.random.default_rng(9)) >= 0.98


def test_proposition1_null_is_symmetric():
    rng = np.random.default_rng(10)
    wins = 0.0
    trials = 60
    for t in range(trials):
        spec = replace(reference_spec(n=200, rng_seed=3000 + t), separation=0.0)
        wins += proposition1_check(generate_latent(spec), 1, rng)
    assert 0.3 <= wins / trials <= 0.7


def test_restricted_cross_covariance_identity_has_empty_complement():
    data = generate_latent(reference_spec(n=30, rng_seed=11))
    pi = data.truth
    complement = np.setdiff1d(np.arange(data.n), fixed_point_set(pi))
    out = restricted_cross_covariance(data.x, data.z, pi, complement)
    np.testing.assert_array_equal(out, np.zeros((data.spec.d, data.spec.d_prime)))


def test_concentration_diagnostic_lln():
    devs = []
    for n in (200, 800):
        data = generate_latent(reference_spec(n=n, rng_seed=12))
        dev, _ = concentration_diagnostic(data, data.truth)
        devs.append(dev / n)
    assert devs[1] < devs[0]


def test_concentration_bound_monotone_in_n():
    probs = []
    for n in (20, 40, 80):
        data = generate_latent(reference_spec(n=n, rng_seed=13))
        _, prob = concentration_diagnostic(data, data.truth)
        assert np.isfinite(prob)
        probs.append(prob)
    assert probs[0] >= probs[1] >= probs[2]


def test_weyl_check_zero_perturbation():
    rng = np.random.default_rng(14)
    a = rng.standard_normal((5, 3))
    sa = np.linalg.svd(a, compute_uv=False)
    assert np.all(np.abs(sa - sa) <= 0.0)
    assert weyl_check(50, (6, 4), rng) <= 1e-9


def test_singular_value_sum_grows_linearly():
    sums, sizes = [], (100, 200, 400)
    for n in sizes:
        data = generate_latent(reference_spec(n=n, rng_seed=15))
        x = data.x - data.x.mean(axis=0)
        z = data.z - data.z.mean(axis=0)
        sums.append(singular_value_sum(x.T @ z))
    slope, _ = np.polyfit(sizes, sums, 1)
    assert slope > 0
    r2 = np.corrcoef(sizes, sums)[0, 1] ** 2
    assert r2 >= 0.99
