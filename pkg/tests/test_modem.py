import itertools

import numpy as np
import pytest

from shapedpolar.modem import (
    LLR_CLIP,
    Labeling,
    ask_symbols,
    bit_llr_multistage,
    bit_llrs_independent,
    demap_hard,
    export_labeling_csv,
    gray_labeling,
    inner_indicator_level,
    make_labeling,
    map_symbols,
    mb_pmf,
    nbc_labeling,
    pmf_from_levels,
    sbs_pmf,
    shifted_nbc_label,
    shifted_nbc_labeling,
    uniform_pmf,
)
from shapedpolar.modem import _log_weights, _masked_lse


class TestAlphabet:
    def test_symbols(self):
        assert ask_symbols(2).tolist() == [-3, -1, 1, 3]
        s = ask_symbols(4)
        assert len(s) == 16 and s.sum() == 0 and np.all(np.abs(s) % 2 == 1)


class TestShiftedNbcLabel:
    @pytest.mark.parametrize("x,word", [
        (7, [1, 0, 0, 0]),
        (9, [0, 1, 1, 1]),
        (-15, [0, 0, 1, 1]),
    ])
    def test_formula_examples(self, x, word):
        assert shifted_nbc_label(x, 4).tolist() == word

    def test_invalid_symbol(self):
        with pytest.raises(ValueError):
            shifted_nbc_label(2, 4)

    def test_consistent_with_labeling_table(self):
        lab = shifted_nbc_labeling(4)
        for a, x in enumerate(lab.symbols):
            word = shifted_nbc_label(int(x), 4)
            msb_first = lab.bits[a][::-1]
            assert np.array_equal(word, msb_first)


class TestLabelingInvariants:
    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    @pytest.mark.parametrize("kind", ["nbc", "shifted_nbc", "gray"])
    def test_bijection(self, m, kind):
        lab = make_labeling(kind, m)
        assert sorted(lab.labels.tolist()) == list(range(2 ** m))

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_shifted_nbc_msb_flags_low_energy(self, m):
        lab = shifted_nbc_labeling(m)
        inner = np.abs(lab.symbols) < 2 ** (m - 1)
        assert np.array_equal(lab.level_bits(m).astype(bool), inner)
        assert inner_indicator_level(lab) == m

    def test_gray_has_inner_indicator_nbc_does_not(self):
        assert inner_indicator_level(gray_labeling(4)) == 3
        assert inner_indicator_level(nbc_labeling(4)) is None

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_shift_preserves_per_level_distances(self, m):
        """The circular shift must not change any bit-level's minimum
        Euclidean distance (exhaustive pairwise check)."""

        def level_min_distances(lab):
            dists = []
            for level in range(1, m + 1):
                low = lab.labels & ((1 << (level - 1)) - 1)
                bit = lab.level_bits(level)
                best = np.inf
                for a, b in itertools.combinations(range(2 ** m), 2):
                    if low[a] == low[b] and bit[a] != bit[b]:
                        best = min(best, abs(int(lab.symbols[a]) - int(lab.symbols[b])))
                dists.append(best)
            return dists

        assert level_min_distances(nbc_labeling(m)) == level_min_distances(
            shifted_nbc_labeling(m))

    def test_nbc_distances_non_decreasing(self):
        lab = nbc_labeling(4)
        dists = []
        for level in range(1, 5):
            low = lab.labels & ((1 << (level - 1)) - 1)
            bit = lab.level_bits(level)
            best = np.inf
            for a, b in itertools.combinations(range(16), 2):
                if low[a] == low[b] and bit[a] != bit[b]:
                    best = min(best, abs(int(lab.symbols[a]) - int(lab.symbols[b])))
            dists.append(best)
        assert dists == sorted(dists)

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            make_labeling("octal", 4)
        with pytest.raises(ValueError):
            Labeling(2, "nbc", np.array([0, 1, 2, 2]))


class TestMapping:
    def test_all_zero_frames_shifted_nbc(self):
        # inverting the labeling formula: label 0000 belongs to x = -9
        lab = shifted_nbc_labeling(4)
        x = map_symbols(np.zeros((4, 3), dtype=np.uint8), lab)
        assert np.all(x == -9)

    def test_map_demap_identity(self, gen):
        for kind in ("nbc", "shifted_nbc", "gray"):
            lab = make_labeling(kind, 4)
            frames = gen.integers(0, 2, (4, 64)).astype(np.uint8)
            assert np.array_equal(demap_hard(map_symbols(frames, lab), lab), frames)

    def test_two_ask(self):
        lab = nbc_labeling(1)
        x0 = map_symbols(np.array([[0]], dtype=np.uint8), lab)[0]
        x1 = map_symbols(np.array([[1]], dtype=np.uint8), lab)[0]
        assert {int(x0), int(x1)} == {-1, 1}
        assert x0 == -x1

    def test_frame_count_mismatch(self):
        with pytest.raises(ValueError):
            map_symbols(np.zeros((3, 5), dtype=np.uint8), shifted_nbc_labeling(4))


class TestPmfs:
    def test_uniform(self):
        pmf = uniform_pmf(4)
        assert np.allclose(pmf.probs, 1 / 16)
        assert abs(pmf.second_moment() - 85.0) < 1e-9

    def test_two_ring_pmf_matches_level_construction(self):
        lab = shifted_nbc_labeling(4)
        via_levels = pmf_from_levels([0.5, 0.5, 0.5, 0.75], lab)
        direct = sbs_pmf(4, 0.75)
        assert np.allclose(via_levels.probs, direct.probs, atol=1e-15)
        inner = np.abs(direct.symbols) < 8
        assert np.allclose(direct.probs[inner], 0.75 / 8)
        assert np.allclose(direct.probs[~inner], 0.25 / 8)

    def test_shaped_second_moment(self):
        assert abs(sbs_pmf(4, 0.75).second_moment() - 53.0) < 1e-9

    def test_gray_level_construction_matches_two_ring(self):
        lab = gray_labeling(4)
        priors = [0.5] * 4
        priors[inner_indicator_level(lab) - 1] = 0.78
        assert np.allclose(pmf_from_levels(priors, lab).probs, sbs_pmf(4, 0.78).probs)

    def test_level_pmf_sums_and_symmetry(self, gen):
        lab = shifted_nbc_labeling(4)
        pmf = pmf_from_levels([0.5, 0.5, 0.5, float(gen.uniform(0.5, 0.95))], lab)
        assert abs(pmf.probs.sum() - 1.0) < 1e-12
        assert np.allclose(pmf.probs, pmf.probs[::-1])

    def test_mb_family(self):
        assert np.allclose(mb_pmf(4, 0.0).probs, uniform_pmf(4).probs)
        nu = 0.05
        pmf = mb_pmf(4, nu)
        x = pmf.symbols.astype(float)
        expect = np.exp(-nu * x ** 2)
        expect /= expect.sum()
        assert np.allclose(pmf.probs, expect)
        with pytest.raises(ValueError):
            mb_pmf(4, -0.1)

    def test_entropy(self):
        assert abs(uniform_pmf(4).entropy_bits() - 4.0) < 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            sbs_pmf(4, 0.4)
        with pytest.raises(ValueError):
            pmf_from_levels([0.5, 0.5], shifted_nbc_labeling(4))


class TestIndependentDemapping:
    def test_two_ask_closed_form(self):
        lab = nbc_labeling(1)
        pmf = uniform_pmf(1)
        for y, h, var in ((0.37, 1.3, 0.8), (-0.9, 0.4, 2.0)):
            llr = bit_llrs_independent(y, h, var, lab, pmf)[0]
            assert abs(llr - 2 * h * y / var) < 1e-9

    def test_sixteen_term_oracle_at_zero_observation(self):
        lab = shifted_nbc_labeling(4)
        pmf = sbs_pmf(4, 0.75)
        y, h, var = 0.0, 1.0, 2.0
        llrs = bit_llrs_independent(y, h, var, lab, pmf)
        x = lab.symbols.astype(float)
        w = pmf.probs * np.exp(-((y - h * x) ** 2) / (2 * var))
        for level in range(1, 5):
            one = lab.level_bits(level).astype(bool)
            oracle = np.log(w[~one].sum()) - np.log(w[one].sum())
            assert abs(llrs[level - 1] - np.clip(oracle, -LLR_CLIP, LLR_CLIP)) < 1e-9

    def test_high_snr_hard_decision(self):
        lab = shifted_nbc_labeling(4)
        pmf = uniform_pmf(4)
        for x0 in lab.symbols:
            llrs = bit_llrs_independent(float(x0), 1.0, 1e-3, lab, pmf)
            bits = demap_hard(np.array([x0]), lab)[:, 0]
            assert np.array_equal((llrs < 0).astype(np.uint8), bits)

    def test_clipping(self):
        lab = shifted_nbc_labeling(4)
        llrs = bit_llrs_independent(15.0, 1.0, 1e-6, lab, uniform_pmf(4))
        assert np.all(np.abs(llrs) <= LLR_CLIP)

    def test_bad_noise_var(self):
        with pytest.raises(ValueError):
            bit_llrs_independent(0.0, 1.0, 0.0, nbc_labeling(1), uniform_pmf(1))


class TestMultistageDemapping:
    def test_level_one_equals_independent(self, gen):
        lab = shifted_nbc_labeling(4)
        pmf = sbs_pmf(4, 0.75)
        y = gen.normal(0, 5, 9)
        h = np.abs(gen.normal(1, 0.4, 9)) + 1e-3
        ind = bit_llrs_independent(y, h, 1.1, lab, pmf)[0]
        ms = bit_llr_multistage(y, h, 1.1, lab, pmf, np.empty((0, 9)), 1)
        assert np.allclose(ind, ms)

    def test_last_level_two_term_closed_form(self, gen):
        lab = shifted_nbc_labeling(4)
        pmf = sbs_pmf(4, 0.75)
        var = 3.0
        for _ in range(10):
            frames = gen.integers(0, 2, (4, 1)).astype(np.uint8)
            y = gen.normal(0, 6, 1)
            h = np.abs(gen.normal(1, 0.3, 1)) + 1e-3
            llr = bit_llr_multistage(y, h, var, lab, pmf, frames[:3], 4)[0]
            cons = np.all(lab.bits[:, :3] == frames[:3, 0], axis=1)
            xs = lab.symbols[cons].astype(float)
            ps = pmf.probs[cons]
            b4 = lab.level_bits(4)[cons]
            x0, x1 = xs[b4 == 0][0], xs[b4 == 1][0]
            p0, p1 = ps[b4 == 0][0], ps[b4 == 1][0]
            expect = (np.log(p0 / p1)
                      + ((y[0] - h[0] * x1) ** 2 - (y[0] - h[0] * x0) ** 2) / (2 * var))
            assert abs(llr - np.clip(expect, -LLR_CLIP, LLR_CLIP)) < 1e-9

    def test_noiseless_with_correct_prefix(self, gen):
        lab = shifted_nbc_labeling(4)
        pmf = uniform_pmf(4)
        for x0 in lab.symbols[:6]:
            bits = demap_hard(np.array([x0]), lab)
            for level in (2, 3, 4):
                llr = bit_llr_multistage(float(x0), 1.0, 1e-3, lab, pmf,
                                         bits[:level - 1, :1].reshape(level - 1),
                                         level)
                assert (llr < 0) == bool(bits[level - 1, 0])


def test_lse_consistency(gen):
    """Combining cohort log-sums must reproduce the full mixture likelihood."""
    pmf = sbs_pmf(4, 0.8)
    y = gen.normal(0, 5, 50)
    h = np.abs(gen.normal(1, 0.3, 50))
    logw = _log_weights(y, h, 1.7, pmf)
    one = shifted_nbc_labeling(4).level_bits(4).astype(bool)
    combined = np.logaddexp(_masked_lse(logw, ~one, False),
                            _masked_lse(logw, one, False))
    assert np.allclose(combined, _masked_lse(logw, np.ones(16, bool), False),
                       atol=1e-9)


def test_labeling_csv_export(tmp_path):
    path = tmp_path / "lab.csv"
    export_labeling_csv(shifted_nbc_labeling(4), path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "symbol,label"
    assert len(lines) == 17
    assert lines[1].split(",") == ["-15", "0011"]
