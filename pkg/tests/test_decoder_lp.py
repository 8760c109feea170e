import copy

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nbadmm import channel as ch
from nbadmm import code_model as cm
from nbadmm.decoder_lp import (DecodeStatus, LpDecoder, LpDecoderParams, decode_lp,
                               x_update_closed_form, xupdate_coefficients)
from nbadmm.embedding import EmbeddingKind, embed_word
from nbadmm.oracle import dense_xupdate_oracle, lp_oracle, phi_matrix
from nbadmm.projections import distance_to_parity_polytope, project_simplex


@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("dv", range(2, 7))
def test_closed_form_matches_dense(m, dv):
    rng = np.random.default_rng(m * 100 + dv)
    a, b = xupdate_coefficients(m, dv)
    for _ in range(20):
        t = rng.normal(size=2 ** m - 1)
        assert np.abs((a - b) * t + b * t.sum() - dense_xupdate_oracle(m, dv, t)).max() < 1e-10


def test_closed_form_constants_gf4_degree3():
    a, b = xupdate_coefficients(2, 3)
    assert a == pytest.approx(5 / 26) and b == pytest.approx(-3 / 52)
    M = (a - b) * np.eye(3) + b
    assert np.allclose((3 * phi_matrix(2) + np.eye(3)) @ M, np.eye(3))


@given(st.integers(2, 3), st.floats(0.5, 8), st.floats(0.1, 3))
def test_closed_form_general_shift(m, dv, c):
    a, b = xupdate_coefficients(m, dv, c)
    n = 2 ** m - 1
    M = (a - b) * np.eye(n) + b
    assert np.allclose((dv * phi_matrix(m) + c * np.eye(n)) @ M, np.eye(n), atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        LpDecoderParams(mu=0)
    with pytest.raises(ValueError):
        LpDecoderParams(rho=2.0)
    with pytest.raises(ValueError):
        LpDecoderParams(t_max=0)
    assert LpDecoderParams(kind="cw").kind is EmbeddingKind.CONSTANT_WEIGHT
    code = cm.builtin_code("toy")
    with pytest.raises(ValueError, match="constant-weight"):
        LpDecoder(code, LpDecoderParams(), alpha=0.5)
    with pytest.raises(ValueError, match="positive"):
        LpDecoder(code, LpDecoderParams(kind="cw", mu=1.0), alpha=0.6)


def _noisy_llr(code, c, snr, seed, kind):
    mod = ch.modulation_for(code.q)
    sigma = ch.sigma_from_esn0(snr, cm.code_rate(code))
    y = ch.transmit(mod, c, sigma, seed)
    return ch.llr(mod, y, sigma, kind)


@pytest.mark.parametrize("kind", ["flanagan", "cw"])
def test_noiseless_toy(toy, kind):
    rng = np.random.default_rng(0)
    dec = LpDecoder(toy, LpDecoderParams(kind=kind))
    for t in range(10):
        c = cm.random_codeword(toy, rng)
        out = dec.decode(_noisy_llr(toy, c, 15.0, t, kind))
        assert out.status.is_codeword
        assert np.array_equal(out.word, c)


def test_decode_is_deterministic(toy):
    llr = _noisy_llr(toy, np.zeros(4, int), 1.0, 5, "flanagan")
    a = decode_lp(toy.field(), toy, None, llr)
    b = decode_lp(toy.field(), toy, None, llr)
    assert np.array_equal(a.word, b.word) and a.iterations == b.iterations
    assert np.array_equal(a.solution, b.solution)


def test_uniform_state_rounds_to_zero(toy):
    dec = LpDecoder(toy, LpDecoderParams(kind="cw"))
    st_ = dec.init_state()
    assert dec.hard_decision(st_).tolist() == [0, 0, 0, 0]


def test_perturbed_embedding_rounds_back(toy):
    dec = LpDecoder(toy, LpDecoderParams(kind="flanagan"))
    c = cm.random_codeword(toy, np.random.default_rng(4))
    st_ = dec.init_state()
    s = embed_word(toy.field(), EmbeddingKind.FLANAGAN, c).data.reshape(4, 3)
    st_.s = np.clip(s + np.random.default_rng(1).uniform(-0.1, 0.1, s.shape), 0, None) * 0.9
    assert np.array_equal(dec.hard_decision(st_), c)


def test_kernel_x_update_matches_numpy(toy):
    params = LpDecoderParams(kind="flanagan")
    dec = LpDecoder(toy, params)
    llr = _noisy_llr(toy, np.zeros(4, int), 2.0, 9, "flanagan")
    st_ = dec.init_state()
    dec.run(st_, llr, 3, early_term=False, check_stop=False)
    before = copy.deepcopy(st_)
    dec.run(st_, llr, 1, early_term=False, check_stop=False)
    ctxs = cm.build_check_contexts(toy.field(), toy, params.kind)
    assert np.allclose(st_.x, x_update_closed_form(toy, ctxs, before, llr, params), atol=1e-12)


def test_rho_one_is_plain_admm(toy):
    llr = _noisy_llr(toy, np.zeros(4, int), 1.0, 3, "flanagan")
    out = LpDecoder(toy, LpDecoderParams(rho=1.0, early_term=False)).decode(llr)
    assert out.iterations >= 1


@pytest.mark.parametrize("kind", ["flanagan", "cw"])
def test_single_check_optimum_matches_lp(gf4, kind):
    # one check of degree 3 with a fractional optimum in general
    code = cm.NonbinaryCode.from_dense([[1, 2, 3]], 4)
    rng = np.random.default_rng(7)
    params = LpDecoderParams(kind=kind, eps=1e-9, t_max=20000, early_term=False)
    dec = LpDecoder(code, params)
    for _ in range(5):
        L = 3 if kind == "flanagan" else 4
        llr = rng.normal(size=3 * L)
        st_ = dec.init_state()
        dec.run(st_, llr, params.t_max, early_term=False)
        _, best = lp_oracle(code, llr, kind, return_value=True)
        assert llr @ st_.x == pytest.approx(best, abs=1e-5)


def test_feasible_at_tolerance(toy):
    params = LpDecoderParams(eps=1e-6, t_max=5000, early_term=False)
    dec = LpDecoder(toy, params)
    llr = _noisy_llr(toy, np.zeros(4, int), 0.0, 1, "flanagan")
    st_ = dec.init_state()
    done, reason, _ = dec.run(st_, llr, params.t_max)
    assert reason == 1
    x = st_.x.reshape(4, 3)
    for i in range(4):
        assert np.linalg.norm(x[i] - project_simplex("leq", x[i])) < 10 * params.eps
    g = cm.code_graph(toy)
    for j in range(toy.n_checks):
        for K in range(3):
            gvec = [st_.x[dec.gather[e, K]].sum() for e in range(g.check_ptr[j], g.check_ptr[j + 1])]
            assert distance_to_parity_polytope(gvec) < 10 * params.eps


def test_status_flags():
    assert DecodeStatus.CODEWORD_EARLY.is_codeword
    assert not DecodeStatus.FRACTIONAL_AT_TMAX.is_codeword
    assert not DecodeStatus.TOLERANCE_REACHED.is_codeword


def test_bad_llr_length(toy):
    with pytest.raises(ValueError, match="expected"):
        LpDecoder(toy).decode(np.zeros(5))
