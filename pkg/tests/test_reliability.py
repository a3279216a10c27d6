import numpy as np
import pytest

from shapedpolar import rng
from shapedpolar.polar import PolarCodeSpec
from shapedpolar.reliability import (
    SEQUENCE_FILE_ENV,
    ReliabilityOrder,
    SequenceFormatError,
    build_reliability_order,
    default_order,
    gaussian_approximation_order,
    load_order,
    load_sequence_file,
    polarization_weight_order,
)
from shapedpolar.scl import SclDecoder


def test_ga_n2_good_channel_first():
    for snr in (-5.0, 0.0, 5.0):
        assert gaussian_approximation_order(2, snr).order.tolist() == [1, 0]


def test_ga_n8_extremes_match_genie_mc():
    """Rank the n=8 bit-channels by genie-aided SC error counts at 0 dB and
    check the density-evolution extremes against that oracle."""
    order = gaussian_approximation_order(8, 0.0)
    assert order.order[0] == 7 and order.order[-1] == 0

    trials = 3000
    gen = rng.stream(42, "ga-oracle")
    var = 1.0  # 0 dB with unit symbols
    err = np.zeros(8)
    for pos in range(8):
        free = np.zeros(8, dtype=bool)
        free[pos] = True
        u = gen.integers(0, 2, (trials, 8)).astype(np.uint8)
        from shapedpolar.polar import polar_transform

        c = polar_transform(u)
        y = (1.0 - 2.0 * c) + np.sqrt(var) * gen.standard_normal((trials, 8))
        llr = 2.0 * y / var
        dec = SclDecoder(8, 1)
        frozen_vals = np.delete(u, pos, axis=1)
        got, _ = dec.decode(llr, free, frozen_vals)
        err[pos] = np.mean(got[:, 0, pos] != u[:, pos])
    assert err[7] == err.min()
    assert err[0] == err.max()


def test_ga_is_permutation():
    for n in (2, 16, 256, 1024):
        o = gaussian_approximation_order(n, 2.0)
        assert sorted(o.order.tolist()) == list(range(n))


def test_pw_order_properties():
    o = polarization_weight_order(1024)
    assert o.order[0] == 1023 and o.order[-1] == 0
    assert sorted(o.order.tolist()) == list(range(1024))


def test_sub_order_preserves_rank(tmp_path):
    full = polarization_weight_order(1024)
    sub = full.sub_order(256)
    assert sorted(sub.order.tolist()) == list(range(256))
    kept = [v for v in full.order if v < 256]
    assert sub.order.tolist() == kept


def test_loaded_sub_order(tmp_path):
    gen = np.random.default_rng(3)
    perm = gen.permutation(1024)
    path = tmp_path / "seq.txt"
    path.write_text("n=1024\n" + "\n".join(str(v) for v in perm) + "\n")
    sub = load_order(path, 256)
    assert sorted(sub.order.tolist()) == list(range(256))
    assert sub.order.tolist() == [v for v in perm if v < 256]


def test_ga_and_default_agree_for_n2():
    assert default_order(2).order.tolist() == gaussian_approximation_order(2, 1.0).order.tolist()


def test_missing_file_raises_oserror():
    with pytest.raises(OSError):
        load_order("/nonexistent/seq.txt", 256)


@pytest.mark.parametrize("body", [
    "256\n0\n1\n",                        # missing header
    "n=4\n0\n1\n2\n",                     # too few entries
    "n=4\n0\n1\n2\n2\n",                  # duplicate
    "n=4\n0\n1\n2\n9\n",                  # out of range
    "n=4\n0\n1\nx\n3\n",                  # non-integer
])
def test_malformed_files(tmp_path, body):
    path = tmp_path / "bad.txt"
    path.write_text(body)
    with pytest.raises(SequenceFormatError):
        load_sequence_file(path)


def test_short_file_rejected(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("n=4\n3\n2\n1\n0\n")
    with pytest.raises(SequenceFormatError):
        load_order(path, 8)
    assert load_order(path, 4).order.tolist() == [3, 2, 1, 0]


def test_env_override(tmp_path, monkeypatch):
    path = tmp_path / "seq.txt"
    path.write_text("n=4\n3\n1\n2\n0\n")
    monkeypatch.setenv(SEQUENCE_FILE_ENV, str(path))
    assert default_order(4).order.tolist() == [3, 1, 2, 0]


def test_build_dispatcher(tmp_path):
    assert build_reliability_order(64, "pw").source == "polarization_weight"
    assert "gaussian" in build_reliability_order(64, "ga:2.5").source
    assert build_reliability_order(256, "default").n == 256
    path = tmp_path / "seq.txt"
    path.write_text("n=2\n1\n0\n")
    assert build_reliability_order(2, f"file:{path}").order.tolist() == [1, 0]
    with pytest.raises(ValueError):
        build_reliability_order(64, "bogus")


def test_order_validation():
    with pytest.raises(ValueError):
        ReliabilityOrder(4, np.array([0, 1, 2, 2]), "x")


def test_packaged_default_composes_with_specs():
    order = default_order(256)
    spec = PolarCodeSpec.from_order(order.order, k=128)
    assert spec.k == 128
