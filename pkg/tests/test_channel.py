import math

import numpy as np
import pytest

from covertbeam import channel
from covertbeam.channel import (
    ChannelSet,
    CsiErrorEllipsoid,
    ScenarioParams,
    apply_error,
    make_cover_beam,
    sample_channels,
    sample_error,
    to_db,
    to_linear,
)
from covertbeam.exceptions import InvalidInputError

from helpers import rand_herm


def test_db_conversions_bijective():
    for x in (1e-6, 0.5, 1.0, 10.0, 123.456):
        assert abs(to_linear(to_db(x)) - x) < 1e-12 * x
    assert to_linear(10.0) == pytest.approx(10.0)
    assert to_db(1.0) == 0.0
    with pytest.raises(InvalidInputError):
        to_db(0.0)


def test_params_validation():
    with pytest.raises(InvalidInputError):
        ScenarioParams(n=0)
    with pytest.raises(InvalidInputError):
        ScenarioParams(n=4, sigma1=0.0)
    with pytest.raises(InvalidInputError):
        ScenarioParams(n=4, p_c0=11.0, p_total=10.0)
    with pytest.raises(InvalidInputError):
        ScenarioParams(n=4, epsilon=1.5)
    with pytest.raises(InvalidInputError):
        ScenarioParams(n=2).require_zf_capable()
    ScenarioParams(n=3).require_zf_capable()


def test_sample_channels_deterministic():
    params = ScenarioParams(n=5)
    a = sample_channels(params, 1234)
    b = sample_channels(params, 1234)
    assert np.array_equal(a.h_b, b.h_b)
    assert np.array_equal(a.h_c, b.h_c)
    assert np.array_equal(a.h_w, b.h_w)
    c = sample_channels(params, 1235)
    assert not np.array_equal(a.h_b, c.h_b)


def test_sample_channels_split_invariant_and_default_perfect():
    ch = sample_channels(ScenarioParams(n=4), 7)
    assert np.array_equal(ch.h_w, ch.h_w_hat)
    assert np.all(ch.dh_w == 0)
    assert np.max(np.abs(ch.h_w - ch.h_w_hat - ch.dh_w)) == 0.0


def test_channel_set_rejects_broken_split():
    z = np.zeros(3, dtype=complex)
    with pytest.raises(InvalidInputError):
        ChannelSet(h_b=z, h_c=z, h_w=np.ones(3, dtype=complex), h_w_hat=z, dh_w=z)


def test_sample_channels_moment_oracle():
    # 1e5 draws, per-entry variance within 2% for each channel variance.
    params = ScenarioParams(n=5, sigma1=1.0, sigma2=1.3, sigma3=0.7)
    draws = 100_000
    acc_b = acc_w = acc_c = 0.0
    cross = 0.0
    for seed in range(draws):
        ch = sample_channels(params, seed)
        acc_b += float(np.mean(np.abs(ch.h_b) ** 2))
        acc_w += float(np.mean(np.abs(ch.h_w) ** 2))
        acc_c += float(np.mean(np.abs(ch.h_c) ** 2))
        cross += float(np.mean((ch.h_b * ch.h_w.conj()).real))
    assert abs(acc_b / draws - params.sigma1 ** 2) < 0.02 * params.sigma1 ** 2
    assert abs(acc_w / draws - params.sigma2 ** 2) < 0.02 * params.sigma2 ** 2
    assert abs(acc_c / draws - params.sigma3 ** 2) < 0.02 * params.sigma3 ** 2
    # independence across users: normalized cross-correlation near zero
    assert abs(cross / draws) < 0.02


def test_ellipsoid_validation():
    with pytest.raises(InvalidInputError):
        CsiErrorEllipsoid(c_w=np.eye(3), v_w=0.0)
    with pytest.raises(InvalidInputError):
        CsiErrorEllipsoid(c_w=np.diag([1.0, -1.0]), v_w=1.0)
    with pytest.raises(InvalidInputError):
        CsiErrorEllipsoid(c_w=np.array([[0.0, 1.0], [0.0, 0.0]]), v_w=1.0)


def test_sample_error_membership_and_shrink():
    ell = CsiErrorEllipsoid(c_w=np.eye(4, dtype=complex), v_w=0.005)
    for seed in range(10_000):
        dh = sample_error(ell, seed)
        assert float(np.vdot(dh, dh).real) <= 0.005 * (1 + 1e-12)
    tiny = CsiErrorEllipsoid(c_w=np.eye(4, dtype=complex), v_w=1e-30)
    assert np.linalg.norm(sample_error(tiny, 0)) <= 1e-14


def test_sample_error_boundary_coverage_oracle():
    rng = np.random.default_rng(0)
    c_w = rand_herm(rng, 3)
    c_w = c_w @ c_w.conj().T + 0.5 * np.eye(3)
    ell = CsiErrorEllipsoid(c_w=c_w, v_w=0.37)
    worst = 0.0
    for seed in range(100_000):
        dh = sample_error(ell, seed)
        worst = max(worst, float(np.vdot(dh, c_w @ dh).real))
    assert 0.99 * ell.v_w <= worst <= ell.v_w * (1 + 1e-9)


def test_sample_error_nested_under_volume_scaling():
    big = CsiErrorEllipsoid(c_w=np.eye(3, dtype=complex), v_w=0.02)
    small = CsiErrorEllipsoid(c_w=np.eye(3, dtype=complex), v_w=0.005)
    a = sample_error(big, 5)
    b = sample_error(small, 5)
    assert np.allclose(a / math.sqrt(0.02), b / math.sqrt(0.005))


def test_apply_error():
    params = ScenarioParams(n=3)
    ch = sample_channels(params, 0)
    ell = CsiErrorEllipsoid(c_w=np.eye(3, dtype=complex), v_w=0.005)
    dh = sample_error(ell, 1)
    ch2 = apply_error(ch, dh)
    assert np.array_equal(ch2.h_w_hat, ch.h_w_hat)
    assert np.allclose(ch2.h_w, ch.h_w_hat + dh)
    with pytest.raises(InvalidInputError):
        apply_error(ch, np.zeros(4))


def test_make_cover_beam():
    params = ScenarioParams(n=4, p_c0=2.5)
    ch = sample_channels(params, 3)
    cover = make_cover_beam(params, ch)
    assert abs(np.linalg.norm(cover.w_c0) ** 2 - 2.5) < 1e-12
    # maximum-ratio alignment: tau1 = p_c0 ||h_c||^2
    assert abs(cover.tau1 - 2.5 * np.linalg.norm(ch.h_c) ** 2) < 1e-10
    # tau2 against a direct inner product
    assert abs(cover.tau2 - abs(np.vdot(ch.h_w_hat, cover.w_c0)) ** 2) < 1e-12
    zero = ChannelSet(h_b=ch.h_b, h_c=np.zeros(4, dtype=complex), h_w=ch.h_w,
                      h_w_hat=ch.h_w_hat, dh_w=ch.dh_w)
    with pytest.raises(InvalidInputError):
        make_cover_beam(params, zero)


def test_scenario_file_roundtrip(tmp_path):
    path = tmp_path / "scenario.txt"
    params = ScenarioParams(n=4, sigma_b2=0.5, p_total=12.0, p_c0=2.0, epsilon=0.2)
    channel.save_scenario(path, params, seed=77, v_w=0.01, c_w_diag=np.array([1.0, 2.0, 3.0, 4.0]))
    loaded = channel.load_scenario(path)
    assert loaded["params"] == params
    assert loaded["seed"] == 77
    assert loaded["ellipsoid"].v_w == 0.01
    assert np.allclose(np.diag(loaded["ellipsoid"].c_w).real, [1, 2, 3, 4])


def test_scenario_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("n = 4\nwhatever = 3\n")
    with pytest.raises(InvalidInputError):
        channel.load_scenario(p)
    p.write_text("sigma1 = 1.0\n")
    with pytest.raises(InvalidInputError):
        channel.load_scenario(p)
    p.write_text("n 4\n")
    with pytest.raises(InvalidInputError):
        channel.load_scenario(p)
