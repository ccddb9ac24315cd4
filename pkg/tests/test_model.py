import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbdetect import (
    CbmInstance,
    CbmParams,
    InstanceFormatError,
    Labeling,
    alpha_detect,
    alpha_exact,
    beta0,
    empirical_alpha,
    generate,
    overlap,
    read_instance,
    sign_pm1,
    write_instance,
)
from cbdetect.model import _decode_pair_indices, _sample_pair_indices
from cbdetect.rng import substream


class TestParams:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            CbmParams(n=0, alpha=1, epsilon=0.1, seed=0)
        with pytest.raises(ValueError):
            CbmParams(n=10, alpha=0.0, epsilon=0.1, seed=0)
        with pytest.raises(ValueError):
            CbmParams(n=10, alpha=1, epsilon=0.6, seed=0)
        with pytest.raises(ValueError):
            CbmParams(n=10, alpha=1, epsilon=-0.1, seed=0)
        with pytest.raises(ValueError):
            CbmParams(n=10, alpha=20, epsilon=0.1, seed=0)  # alpha/n > 1
        with pytest.raises(ValueError):
            CbmParams(n=10, alpha=1, epsilon=0.1, seed=2**64)

    def test_accepts_boundaries(self):
        CbmParams(n=1, alpha=1e-30, epsilon=0.0, seed=0)
        CbmParams(n=10, alpha=10, epsilon=0.5, seed=2**64 - 1)


class TestGenerate:
    def test_vanishing_alpha_gives_no_edges(self):
        inst = generate(CbmParams(n=4, alpha=1e-30, epsilon=0.3, seed=5))
        assert inst.m == 0

    def test_noiseless_weights_equal_sign_products(self):
        inst = generate(CbmParams(n=1000, alpha=5, epsilon=0.0, seed=2))
        i, j, w = inst.edges[:, 0], inst.edges[:, 1], inst.edges[:, 2]
        assert np.array_equal(w, inst.sigma[i] * inst.sigma[j])

    def test_edge_count_concentration_large_n(self):
        # Binomial(C(n,2), alpha/n): mean ~ n*alpha/2, sd = sqrt(mean*(1-p))
        n, alpha = 100_000, 8.0
        mean = n * alpha / 2
        sd = math.sqrt((n * (n - 1) / 2) * (alpha / n) * (1 - alpha / n))
        for seed in range(20):
            inst = generate(CbmParams(n=n, alpha=alpha, epsilon=0.25, seed=seed))
            assert abs(inst.m - mean) < 3 * sd

    def test_deterministic_regeneration(self):
        p = CbmParams(n=500, alpha=6, epsilon=0.2, seed=99)
        a, b = generate(p), generate(p)
        assert np.array_equal(a.sigma, b.sigma)
        assert np.array_equal(a.edges, b.edges)

    def test_edges_sorted_unique_in_range(self):
        inst = generate(CbmParams(n=300, alpha=7, epsilon=0.4, seed=3))
        i, j = inst.edges[:, 0], inst.edges[:, 1]
        assert np.all(i < j)
        assert np.all((i >= 0) & (j < 300))
        keys = i * 300 + j
        assert np.all(np.diff(keys) > 0)

    def test_full_density_gives_complete_graph(self):
        inst = generate(CbmParams(n=12, alpha=12, epsilon=0.1, seed=4))
        assert inst.m == 12 * 11 // 2

    def test_mean_and_noise_statistics(self):
        # over >= 100 seeds at n=1e4: mean edge count within 4 SE of n*alpha/2,
        # pooled flip fraction within 4 SE of epsilon
        n, alpha, eps, k = 10_000, 5.0, 0.25, 100
        counts, flips, total = [], 0, 0
        for seed in range(k):
            inst = generate(CbmParams(n=n, alpha=alpha, epsilon=eps, seed=seed))
            counts.append(inst.m)
            i, j, w = inst.edges[:, 0], inst.edges[:, 1], inst.edges[:, 2]
            flips += int(np.sum(w != inst.sigma[i] * inst.sigma[j]))
            total += inst.m
        mean_th = n * alpha / 2
        se_mean = math.sqrt(mean_th) / math.sqrt(k)
        assert abs(np.mean(counts) - mean_th) < 4 * se_mean
        se_eps = math.sqrt(eps * (1 - eps) / total)
        assert abs(flips / total - eps) < 4 * se_eps


class TestPairSampling:
    def test_decode_matches_enumeration(self):
        for n in (2, 3, 5, 17):
            total = n * (n - 1) // 2
            i, j = _decode_pair_indices(np.arange(total, dtype=np.int64), n)
            expected = [(a, b) for a in range(n) for b in range(a + 1, n)]
            assert list(zip(i.tolist(), j.tolist())) == expected

    def test_skip_sampling_statistics(self):
        n, p = 2000, 0.004
        total = n * (n - 1) // 2
        pos = _sample_pair_indices(n, p, substream(1, "t"))
        assert np.all(np.diff(pos) > 0) and pos.min() >= 0 and pos.max() < total
        assert abs(len(pos) - total * p) < 4 * math.sqrt(total * p)


class TestOverlap:
    def test_identity_and_global_flip(self):
        t = Labeling(np.array([1, 1, -1, -1]))
        assert overlap(t, t) == 1.0
        assert overlap(t, Labeling(-t.values)) == 1.0

    def test_direct_value(self):
        t = np.array([1, 1, -1, -1])
        g = np.array([1, -1, -1, -1])
        assert overlap(t, g) == pytest.approx(0.5)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            overlap(np.array([1, -1]), np.array([1, -1, 1]))

    def test_random_guess_vanishes(self):
        n = 100_000
        t = sign_pm1(substream(8, "t").standard_normal(n) )
        g = sign_pm1(substream(9, "g").standard_normal(n))
        assert overlap(t, g) < 0.01

    @given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=200, ), st.data())
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_flip_invariance(self, tvals, data):
        gvals = data.draw(
            st.lists(st.sampled_from([-1, 1]), min_size=len(tvals), max_size=len(tvals))
        )
        t, g = np.array(tvals), np.array(gvals)
        ov = overlap(t, g)
        assert 0.0 <= ov <= 1.0
        assert ov == overlap(g, t)
        assert ov == overlap(-t, g)
        assert ov == overlap(t, -g)


class TestThresholds:
    def test_alpha_detect_values(self):
        assert alpha_detect(0.25) == pytest.approx(4.0)  # the reference noise level
        assert alpha_detect(0.0) == 1.0
        assert alpha_detect(0.4) == pytest.approx(25.0)

    def test_alpha_detect_identity_exact_on_dyadic_eps(self):
        for eps in (0.0, 0.125, 0.25, 0.375):
            assert alpha_detect(eps) * (1 - 2 * eps) ** 2 == 1.0

    def test_alpha_detect_rejects_half(self):
        with pytest.raises(ValueError):
            alpha_detect(0.5)

    def test_alpha_exact_values(self):
        assert alpha_exact(0.0, math.e**2) == pytest.approx(4.0)
        assert alpha_exact(0.25, 1e5) == pytest.approx(8 * math.log(1e5))
        assert alpha_exact(0.25, 1e5) == pytest.approx(92.10340371976183)
        with pytest.raises(ValueError):
            alpha_exact(0.5, 100)
        with pytest.raises(ValueError):
            alpha_exact(0.1, 1)

    def test_beta0_values(self):
        assert beta0(0.5) == 0.0
        assert beta0(0.25) == pytest.approx(0.5 * math.log(3))
        assert beta0(0.1) == pytest.approx(0.5 * math.log(9))
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                beta0(bad)

    def test_empirical_alpha(self, triangle):
        empty = CbmInstance(
            params=CbmParams(n=5, alpha=0.1, epsilon=0.2, seed=0),
            sigma=np.ones(5, dtype=np.int64),
            edges=np.empty((0, 3), dtype=np.int64),
        )
        assert empirical_alpha(empty) == 0.0
        assert empirical_alpha(triangle) == 2.0
        inst = generate(CbmParams(n=100_000, alpha=8, epsilon=0.25, seed=1))
        assert abs(empirical_alpha(inst) - 8.0) / 8.0 < 0.01


class TestInstanceValidation:
    def test_rejects_self_loop_and_reversed(self):
        with pytest.raises(ValueError):
            CbmInstance(
                params=CbmParams(n=3, alpha=1, epsilon=0.1, seed=0),
                sigma=np.ones(3, dtype=np.int64),
                edges=np.array([[1, 1, 1]]),
            )
        with pytest.raises(ValueError):
            CbmInstance(
                params=CbmParams(n=3, alpha=1, epsilon=0.1, seed=0),
                sigma=np.ones(3, dtype=np.int64),
                edges=np.array([[2, 1, 1]]),
            )

    def test_rejects_duplicates_and_bad_weight(self):
        params = CbmParams(n=3, alpha=1, epsilon=0.1, seed=0)
        with pytest.raises(ValueError):
            CbmInstance(params=params, sigma=np.ones(3, dtype=np.int64),
                        edges=np.array([[0, 1, 1], [0, 1, -1]]))
        with pytest.raises(ValueError):
            CbmInstance(params=params, sigma=np.ones(3, dtype=np.int64),
                        edges=np.array([[0, 1, 2]]))

    def test_immutable_arrays(self, triangle):
        with pytest.raises(ValueError):
            triangle.sigma[0] = -1


class TestInstanceFile:
    def test_empty_edge_roundtrip(self, tmp_path):
        inst = CbmInstance(
            params=CbmParams(n=4, alpha=0.25, epsilon=0.125, seed=17),
            sigma=np.array([1, -1, 1, -1]),
            edges=np.empty((0, 3), dtype=np.int64),
        )
        path = tmp_path / "empty.cbm"
        write_instance(inst, path)
        back = read_instance(path)
        assert back.n == 4 and back.m == 0
        assert np.array_equal(back.sigma, inst.sigma)
        assert back.params.epsilon == 0.125 and back.params.seed == 17

    def test_triangle_roundtrip_preserves_sigma(self, tmp_path):
        inst = CbmInstance(
            params=CbmParams(n=3, alpha=2.0, epsilon=0.25, seed=5),
            sigma=np.array([1, -1, 1]),
            edges=np.array([[0, 1, -1], [0, 2, 1], [1, 2, -1]]),
        )
        path = tmp_path / "tri.cbm"
        write_instance(inst, path)
        back = read_instance(path)
        assert np.array_equal(back.sigma, inst.sigma)
        assert np.array_equal(back.edges, inst.edges)
        assert back.params.epsilon == inst.params.epsilon
        assert back.params.seed == inst.params.seed

    def test_generated_roundtrip_and_stable_bytes(self, tmp_path):
        inst = generate(CbmParams(n=1000, alpha=6, epsilon=0.3, seed=12345))
        p1, p2, p3 = (tmp_path / f"g{k}.cbm" for k in range(3))
        write_instance(inst, p1)
        write_instance(generate(inst.params), p2)
        assert p1.read_bytes() == p2.read_bytes()
        back = read_instance(p1)
        write_instance(back, p3)
        assert p3.read_bytes() == p1.read_bytes()
        assert np.array_equal(back.edges, inst.edges)
        assert np.array_equal(back.sigma, inst.sigma)

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "c.cbm"
        path.write_text("# a comment\n%cbm 1\n2 1 0.25 3\nsigma\n1 -1\n# mid comment\n0 1 -1\n")
        inst = read_instance(path)
        assert inst.m == 1 and inst.edges[0, 2] == -1

    @pytest.mark.parametrize(
        "body",
        [
            "%cbm 2\n2 1 0.25 3\nsigma\n1 -1\n0 1 -1\n",  # bad header
            "%cbm 1\n2 1 0.25 3\nsigma\n1 -1\n0 5 -1\n",  # index out of range
            "%cbm 1\n2 1 0.25 3\nsigma\n1 -1\n0 1 2\n",  # weight not +-1
            "%cbm 1\n3 2 0.25 3\nsigma\n1 -1 1\n0 1 1\n0 1 -1\n",  # duplicate edge
            "%cbm 1\n2 2 0.25 3\nsigma\n1 -1\n0 1 1\n",  # edge count mismatch
            "%cbm 1\n2 1 0.25 3\nsigma\n1 -1 1\n0 1 1\n",  # sigma length
            "%cbm 1\n2 1 0.9 3\nsigma\n1 -1\n0 1 1\n",  # epsilon out of range
        ],
    )
    def test_malformed_files_rejected(self, tmp_path, body):
        path = tmp_path / "bad.cbm"
        path.write_text(body)
        with pytest.raises(InstanceFormatError):
            read_instance(path)

    @given(
        n=st.integers(min_value=2, max_value=40),
        alpha=st.floats(min_value=0.2, max_value=5.0),
        eps=st.sampled_from([0.0, 0.1, 0.25, 0.5]),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    @settings(max_examples=40, deadline=None)
    def test_roundtrip_property(self, n, alpha, eps, seed):
        inst = generate(CbmParams(n=n, alpha=min(alpha, n / 2), epsilon=eps, seed=seed))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "x.cbm"
            write_instance(inst, path)
            back = read_instance(path)
        assert np.array_equal(back.sigma, inst.sigma)
        assert np.array_equal(back.edges, inst.edges)
        assert back.params.epsilon == inst.params.epsilon
        assert back.params.seed == inst.params.seed


def test_sign_convention_zero_is_positive():
    assert np.array_equal(sign_pm1(np.array([-0.0, 0.0, 1.5, -2.0])), [1, 1, 1, -1])
