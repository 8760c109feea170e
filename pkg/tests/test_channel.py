import numpy as np
import pytest
from hypothesis import given, strategies as st

from nbadmm import channel as ch


def test_sigma_values():
    assert ch.sigma_from_esn0(4.0, 0.6) == pytest.approx(0.5760, abs=5e-5)
    assert ch.sigma_from_esn0(0.0, 0.5) == pytest.approx(1.0)
    # independent evaluation of sqrt(1 / (2 * 10^0.5 * 424/1055))
    assert ch.sigma_from_esn0(5.0, 424 / 1055) == pytest.approx(0.6272321396531532, rel=1e-12)
    with pytest.raises(ValueError):
        ch.sigma_from_esn0(1.0, 0.0)


def test_constellations_unit_energy():
    for mod in (ch.qpsk(), ch.psk8()):
        assert np.allclose(np.linalg.norm(mod.points, axis=1), 1.0)
    assert ch.qpsk().points.tolist() == [[1, 0], [0, 1], [-1, 0], [0, -1]]
    with pytest.raises(ValueError):
        ch.psk8([0, 1, 2, 3, 4, 5, 6, 6])
    with pytest.raises(ValueError):
        ch.modulation_for(16)


def test_transmit_noiseless_and_reproducible():
    mod = ch.qpsk()
    c = np.array([0, 1, 2, 3])
    assert np.array_equal(ch.transmit(mod, c, 0.0, 1), mod.points[c])
    a = ch.transmit(mod, c, 0.5, ch.trial_rng(3, 7))
    b = ch.transmit(mod, c, 0.5, ch.trial_rng(3, 7))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, ch.transmit(mod, c, 0.5, ch.trial_rng(3, 8)))


def test_noise_variance():
    y = ch.transmit(ch.qpsk(), np.zeros(50_000, dtype=int), 0.7, 0)
    var = (y - [1.0, 0.0]).var()
    assert abs(var / 0.49 - 1) < 0.02


def test_llr_examples():
    mod = ch.qpsk()
    fl = ch.llr(mod, [[1.0, 0.0]], 0.5, "flanagan")
    assert np.all(fl > 0)
    assert np.allclose(ch.llr(mod, [[0.0, 0.0]], 0.5, "flanagan"), 0.0)
    cw = ch.llr(mod, [[0.0, 0.0]], 0.5, "cw")
    assert np.allclose(cw, cw[0, 0])
    big = ch.llr(mod, [[100.0, 0.0]], 0.01, "flanagan")
    assert big.max() == 50.0
    with pytest.raises(ValueError):
        ch.llr(mod, [[0.0, 0.0]], 0.0, "cw")


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 2.0))
def test_flanagan_cw_consistency(a, b, sigma):
    mod = ch.qpsk()
    y = [[a, b]]
    fl = ch.llr(mod, y, sigma, "flanagan", clip=False)
    cw = ch.llr(mod, y, sigma, "cw", clip=False)
    assert np.allclose(cw[:, 1:] - cw[:, :1], fl, atol=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cw_argmin_is_map_decision(a, b):
    for mod in (ch.qpsk(), ch.psk8()):
        y = np.array([[a, b]])
        dens = [ch.gaussian_density(mod, y, d, 0.8)[0] for d in range(mod.q)]
        cw = ch.llr(mod, y, 0.8, "cw", clip=False)[0]
        assert np.isclose(dens[int(np.argmin(cw))], max(dens), rtol=1e-12)


def test_tau_relative_qpsk():
    mod = ch.qpsk()
    assert ch.supports_relative_symmetry(mod)
    for beta in range(4):
        for a in range(4):
            moved = ch.tau_relative(mod, mod.points[a], beta)
            assert np.allclose(moved, mod.points[a ^ beta])
    rng = np.random.default_rng(0)
    y = rng.normal(size=(20, 2))
    for beta in range(4):
        ty = ch.tau_relative(mod, y, beta)
        for a in range(4):
            assert np.allclose(ch.gaussian_density(mod, y, a, 0.7),
                               ch.gaussian_density(mod, ty, a ^ beta, 0.7), rtol=1e-12)
    assert np.allclose(ch.tau_relative(mod, y, 0), y)


def test_natural_8psk_has_no_additive_isometry():
    mod = ch.psk8()
    assert not ch.supports_relative_symmetry(mod)
    with pytest.raises(ValueError, match="no isometry"):
        ch.tau_relative(mod, [[1.0, 0.0]], 1)
    # xor 4 is the half turn, which is an isometry
    assert ch.relative_isometry(mod, 4) is not None
