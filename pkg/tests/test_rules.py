"""Certificate container and mode-selection rules."""

import numpy as np
import pytest

from minjump import (
    ImpulsiveSpec,
    MinJumpCertificate,
    ModeWeights,
    SwitchedSpec,
    augment_impulsive,
    augment_switched,
    select_impulsive,
    select_switched,
)
from minjump.errors import CertificateError

import oracles
from conftest import EX3_A, EX3_B, EX3_J, EX3_K, EX3_UPDATES, EX3_PI


def _cert(P_list, N=None):
    N = N or len(P_list)
    pi = np.full((N, N), 1.0 / N)
    return MinJumpCertificate(P_list, ModeWeights(pi))


def test_certificate_validation():
    with pytest.raises(CertificateError):
        _cert([np.eye(2), np.diag([1.0, -1.0])])  # not positive definite
    with pytest.raises(CertificateError):
        MinJumpCertificate([np.eye(2)], ModeWeights(np.eye(2)))  # count mismatch
    with pytest.raises(CertificateError):
        _cert([np.eye(2), np.eye(3)])  # mixed dimensions


def test_certificate_scaling():
    cert = _cert([np.eye(2), 2.0 * np.eye(2)])
    doubled = cert.scaled(2.0)
    assert np.allclose(doubled.P[1], 4.0 * np.eye(2))
    with pytest.raises(CertificateError):
        cert.scaled(-1.0)


def test_select_impulsive_matches_brute_force():
    rng = np.random.default_rng(17)
    P = []
    for _ in range(3):
        W = rng.standard_normal((3, 3))
        P.append(W @ W.T + np.eye(3))
    cert = _cert(P)
    for _ in range(200):
        chi = rng.standard_normal(3)
        want, _ = oracles.brute_min_mode(P, chi)
        assert select_impulsive(chi, cert) == want


def test_select_impulsive_tie_goes_low():
    cert = _cert([np.eye(2), np.eye(2)])
    assert select_impulsive(np.array([1.0, -2.0]), cert) == 0
    assert select_impulsive(np.zeros(2), cert) == 0


def test_select_invariant_under_positive_scaling():
    rng = np.random.default_rng(23)
    P = [np.eye(2) + 0.5 * np.outer(v, v) for v in rng.standard_normal((3, 2))]
    cert = _cert(P)
    for _ in range(100):
        chi = rng.standard_normal(2)
        alpha = float(rng.uniform(1e-6, 1e6))
        assert select_impulsive(chi, cert) == select_impulsive(chi, cert.scaled(alpha))


def test_select_switched_scores_post_jump_forms():
    model = augment_switched(
        SwitchedSpec(EX3_A, EX3_B, EX3_J, updates=EX3_UPDATES), gains=EX3_K)
    rng = np.random.default_rng(5)
    P = []
    for _ in range(2):
        W = rng.standard_normal((4, 4))
        P.append(W @ W.T + np.eye(4))
    cert = MinJumpCertificate(P, ModeWeights(EX3_PI))
    for _ in range(100):
        chi = rng.standard_normal(4)
        i = int(rng.integers(0, 2))
        scores = [oracles.quad_form(P[j], model.jump(j, i) @ chi) for j in range(2)]
        want = int(np.argmin(scores))
        # break ties the same way the rule does
        if scores[0] <= scores[1]:
            want = 0
        assert select_switched(chi, i, cert, model) == want


def test_select_switched_depends_on_current_mode():
    # jump maps differ per source mode, so the winner can too
    spec = SwitchedSpec(
        A=[[[0.0]], [[0.0]]],
        J=[[[[1.0]], [[0.1]]], [[[0.1]], [[1.0]]]],
    )
    model = augment_switched(spec)
    cert = MinJumpCertificate([np.eye(1), np.eye(1)], ModeWeights([[0.5, 0.5], [0.5, 0.5]]))
    chi = np.array([1.0])
    # from mode 0, staying costs 1.0 but jumping to 1 costs 0.01
    assert select_switched(chi, 0, cert, model) == 1
    assert select_switched(chi, 1, cert, model) == 0
