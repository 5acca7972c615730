import numpy as np
import pytest

from sepprob import stats as st


def rand_hist(rng, axis=None, n=5000):
    axis = axis or st.Axis.default("r_A")
    h = st.HistogramPair(axis=axis)
    h.accumulate_many(rng.random(n) * 1.2 - 0.1, rng.random(n) < 0.3)
    return h


class TestAxis:
    def test_defaults(self):
        assert st.Axis.default("r_A") == st.Axis("r_A", 0.0, 1.0, 100)
        assert st.Axis.default("c3_B") == st.Axis("c3_B", -1.0, 1.0, 100)
        assert st.Axis.default("C002") == st.Axis("C002", 0.0, 3.0, 100)

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            st.Axis("x", 1.0, 0.0, 10)

    def test_bin_examples(self):
        ax = st.Axis.default("r_A")
        idx, ok = ax.indices(np.array([0.0, 1.0, 0.505]))
        assert ok.all()
        assert list(idx) == [0, 99, 50]

    def test_out_of_range(self):
        ax = st.Axis.default("r_A")
        _, ok = ax.indices(np.array([-0.01, 1.01, 0.5]))
        assert list(ok) == [False, False, True]


class TestHistogramPair:
    def test_accumulate_and_conservation(self, rng):
        h = rand_hist(rng, n=5000)
        assert h.n_accumulated() == 5000

    def test_hits_bounded_by_total(self, rng):
        h = rand_hist(rng)
        assert np.all(h.hits <= h.total)
        assert np.all(h.hits >= 0)

    def test_merge_identity(self, rng):
        h = rand_hist(rng)
        empty = st.HistogramPair(axis=h.axis)
        m = h.merge(empty)
        assert np.array_equal(m.total, h.total)
        assert np.array_equal(m.hits, h.hits)
        assert m.out_total == h.out_total

    def test_merge_commutative_associative(self, rng):
        h1, h2, h3 = (rand_hist(rng) for _ in range(3))
        ab = h1.merge(h2)
        ba = h2.merge(h1)
        assert np.array_equal(ab.total, ba.total)
        assert np.array_equal(ab.hits, ba.hits)
        left = h1.merge(h2).merge(h3)
        right = h1.merge(h2.merge(h3))
        assert np.array_equal(left.total, right.total)
        assert left.n_accumulated() == 3 * h1.n_accumulated()

    def test_axis_mismatch(self, rng):
        h = rand_hist(rng)
        other = st.HistogramPair(axis=st.Axis.default("C002"))
        with pytest.raises(st.AxisMismatch):
            h.merge(other)

    def test_csv_roundtrip(self, rng, tmp_path):
        h = rand_hist(rng)
        path = tmp_path / "h.csv"
        h.to_csv(path)
        back = st.HistogramPair.from_csv(path)
        assert back.axis == h.axis
        assert np.array_equal(back.total, h.total)
        assert np.array_equal(back.hits, h.hits)
        assert back.out_total == h.out_total


class TestRatioWithCi:
    def test_paper_interval_qubit_qutrit(self):
        est = st.ratio_with_ci(2_699_590, 10 ** 8, 0.999, "wald")
        assert abs(est.p_hat - 0.0269959) < 1e-12
        assert abs(est.ci_lo - 0.0269426) < 1e-6
        assert abs(est.ci_hi - 0.0270492) < 1e-6

    def test_paper_interval_two_qutrit(self):
        est = st.ratio_with_ci(10_218, 10 ** 8, 0.95, "wald")
        assert abs(est.ci_lo - 0.000100199) < 1e-7
        assert abs(est.ci_hi - 0.000104161) < 1e-7

    def test_wilson_zero_count(self):
        est = st.ratio_with_ci(0, 100, 0.95, "wilson")
        assert est.p_hat == 0.0
        assert est.ci_lo == 0.0
        assert est.ci_hi > 0.0

    def test_wilson_brackets_estimate(self, rng):
        for _ in range(50):
            total = int(rng.integers(1, 10_000))
            hits = int(rng.integers(0, total + 1))
            est = st.ratio_with_ci(hits, total, 0.95, "wilson")
            assert 0.0 <= est.ci_lo <= est.p_hat + 1e-12
            assert est.p_hat - 1e-12 <= est.ci_hi <= 1.0

    def test_empty_cell(self):
        with pytest.raises(st.EmptyCell):
            st.ratio_with_ci(0, 0)


class TestChi2:
    def test_against_mpmath_oracle(self):
        mp = pytest.importorskip("mpmath")
        for dof in (1, 2, 5, 17, 60, 120, 200):
            for x in (0.5 * dof, 1.0 * dof, 1.7 * dof):
                want = float(mp.gammainc(dof / 2, x / 2, mp.inf, regularized=True))
                assert abs(st.chi2_sf(x, dof) - want) < 1e-10


class TestFlatnessTest:
    def test_null_distribution(self):
        # equal proportions: chi2/dof near 1 on average, p not extreme
        rng = np.random.default_rng(5)
        ratios, ps = [], []
        for _ in range(50):
            ax = st.Axis("x", 0, 1, 40)
            h = st.HistogramPair(axis=ax,
                                 total=np.full(40, 20_000, dtype=np.int64),
                                 hits=rng.binomial(20_000, 0.25, 40).astype(np.int64))
            chi2, dof, p = st.flatness_test(h, min_total=1000)
            ratios.append(chi2 / dof)
            ps.append(p)
        assert 0.7 < np.mean(ratios) < 1.3
        assert min(ps) > 1e-6 or sorted(ps)[1] > 1e-4

    def test_two_bin_pearson(self):
        # closed-form 2x2 Pearson: N(ad-bc)^2 / row/col products = 380.95
        ax = st.Axis("x", 0, 1, 2)
        h = st.HistogramPair(axis=ax,
                             total=np.array([1000, 1000], dtype=np.int64),
                             hits=np.array([500, 900], dtype=np.int64))
        chi2, dof, p = st.flatness_test(h, min_total=100, exclude_last_bin=False)
        want = 2000 * (500 * 100 - 500 * 900) ** 2 / (1000 * 1000 * 1400 * 600)
        assert abs(chi2 - want) < 1e-9
        assert dof == 1
        assert p < 1e-10

    def test_rejects_nonuniform(self):
        rng = np.random.default_rng(6)
        ax = st.Axis("x", 0, 1, 50)
        probs = np.linspace(0.1, 0.4, 50)
        h = st.HistogramPair(axis=ax,
                             total=np.full(50, 10_000, dtype=np.int64),
                             hits=rng.binomial(10_000, probs).astype(np.int64))
        _, _, p = st.flatness_test(h, min_total=1000)
        assert p < 1e-10

    def test_min_total_filter_and_insufficient(self):
        ax = st.Axis("x", 0, 1, 4)
        h = st.HistogramPair(axis=ax,
                             total=np.array([5, 5, 5, 5], dtype=np.int64),
                             hits=np.array([1, 2, 3, 4], dtype=np.int64))
        with pytest.raises(st.InsufficientData):
            st.flatness_test(h, min_total=1000)


class TestFitScale:
    def test_self_fit(self):
        ax = st.Axis.default("r_A")
        x = ax.midpoints()
        model = x ** 2 * (1 - x ** 2) ** 16
        h = st.HistogramPair(axis=ax, total=np.round(7e7 * model).astype(np.int64),
                             hits=np.zeros(100, dtype=np.int64))
        # residual threshold at 1e6 counts keeps integer rounding below 1e-6
        scale, resid = st.fit_scale(h, 2, 16, min_total=10 ** 6)
        assert abs(scale - 7e7) / 7e7 < 1e-6
        assert resid < 1e-6

    def test_scaled_with_noise(self, rng):
        ax = st.Axis.default("r_A")
        x = ax.midpoints()
        model = x ** 2 * (1 - x ** 2) ** 16
        lam = 5e6 * model
        h = st.HistogramPair(axis=ax, total=rng.poisson(lam).astype(np.int64),
                             hits=np.zeros(100, dtype=np.int64))
        scale, resid = st.fit_scale(h, 2, 16, min_total=10_000)
        assert abs(scale - 5e6) / 5e6 < 0.01
        assert resid < 0.05

    def test_restricted_range(self):
        ax = st.Axis.default("R_B")
        x = ax.midpoints()
        model = np.where(x <= 0.5, x ** 7 * (1 - x ** 2) ** 32, 0.0)
        h = st.HistogramPair(axis=ax, total=np.round(1e9 * model).astype(np.int64),
                             hits=np.zeros(100, dtype=np.int64))
        scale, resid = st.fit_scale(h, 7, 32, fit_range=(0.0, 0.5))
        assert abs(scale - 1e9) / 1e9 < 1e-4

    def test_insufficient(self):
        ax = st.Axis.default("r_A")
        h = st.HistogramPair(axis=ax)
        with pytest.raises(st.InsufficientData):
            st.fit_scale(h, 2, 16)


class TestJointHistogram:
    def make(self, rng, n=20_000):
        j = st.JointHistogram(axis_x=st.Axis.default("r_A"),
                              axis_y=st.Axis.default("R_B"))
        xs = rng.random(n)
        ys = rng.random(n)
        ppt = rng.random(n) < 0.2
        j.accumulate_many(xs, ys, ppt)
        return j, xs, ys, ppt

    def test_marginals_match_1d(self, rng):
        j, xs, ys, ppt = self.make(rng)
        hx = st.HistogramPair(axis=j.axis_x)
        hx.accumulate_many(xs, ppt)
        mx = j.marginal("x")
        assert np.array_equal(mx.total, hx.total)
        assert np.array_equal(mx.hits, hx.hits)

    def test_symmetrize_doubles_counts(self, rng):
        j, *_ = self.make(rng)
        s = j.symmetrize()
        assert s.total.sum() == 2 * j.total.sum()
        assert np.array_equal(s.total, s.total.T)
        sym_again = s.symmetrize()
        assert np.array_equal(sym_again.total, 2 * s.total)

    def test_symmetric_input_ratios_unchanged(self):
        j = st.JointHistogram(axis_x=st.Axis.default("r_A"),
                              axis_y=st.Axis.default("R_B"))
        j.total[3, 3] = 100
        j.hits[3, 3] = 25
        s = j.symmetrize()
        assert s.cell_ratio(3, 3).p_hat == j.cell_ratio(3, 3).p_hat

    def test_empty_cells(self):
        j = st.JointHistogram(axis_x=st.Axis.default("r_A"),
                              axis_y=st.Axis.default("R_B"))
        with pytest.raises(st.EmptyCell):
            j.cell_ratio(0, 0)

    def test_point_mass(self):
        j = st.JointHistogram(axis_x=st.Axis.default("r_A"),
                              axis_y=st.Axis.default("R_B"))
        j.accumulate_many(np.zeros(10), np.zeros(10), np.ones(10, dtype=bool))
        assert j.total[0, 0] == 10 and j.total.sum() == 10

    def test_merge_and_mismatch(self, rng):
        j1, *_ = self.make(rng)
        j2, *_ = self.make(rng)
        m = j1.merge(j2)
        assert m.total.sum() == j1.total.sum() + j2.total.sum()
        other = st.JointHistogram(axis_x=st.Axis.default("C002"),
                                  axis_y=st.Axis.default("R_B"))
        with pytest.raises(st.AxisMismatch):
            j1.merge(other)

    def test_csv(self, rng, tmp_path):
        j, *_ = self.make(rng, n=500)
        path = tmp_path / "joint.csv"
        j.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[2] == "xbin,ybin,total,hits"
        rows = [ln.split(",") for ln in lines[3:]]
        assert sum(int(r[2]) for r in rows) == 500
