"""Min-jumping mode selection.

At each sample the controller measures chi = (x, u) and picks the next mode
as the argmin of mode-indexed quadratic forms.  For the impulsive loop the
forms are chi' P_i chi; for the switched loop each candidate's jump map is
folded in first, chi' Jbar_{j,i}' P_j Jbar_{j,i} chi, so the score is the
post-jump value of the candidate's own storage function.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import CertificateError, ModelError, NumericError
from .model import ModeWeights, validate_weights


@dataclass(frozen=True, eq=False)
class MinJumpCertificate:
    """Rule data: positive definite matrices P_i plus the mode weights.

    eps records the margin the certificate was verified or synthesized
    with; it does not enter mode selection.
    """

    P: tuple
    weights: ModeWeights
    eps: float = 0.0

    def __init__(self, P, weights, eps=0.0):
        if not isinstance(weights, ModeWeights):
            weights = ModeWeights(weights)
        diag = validate_weights(weights)
        if not diag:
            raise CertificateError(f"invalid mode weights: {diag.message}")
        mats = []
        for i, Pi in enumerate(P):
            Pi = np.array(Pi, dtype=float)
            if not linalg.is_pd(Pi, 0.0):
                raise CertificateError(f"P[{i}] is not positive definite")
            Pi.setflags(write=False)
            mats.append(Pi)
        if len(mats) != weights.modes:
            raise CertificateError(
                f"{len(mats)} rule matrices for {weights.modes} weight columns"
            )
        dims = {M.shape[0] for M in mats}
        if len(dims) > 1:
            raise CertificateError(f"rule matrices mix dimensions {sorted(dims)}")
        if eps < 0.0:
            raise CertificateError("eps must be nonnegative")
        object.__setattr__(self, "P", tuple(mats))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "eps", float(eps))

    @property
    def modes(self):
        return len(self.P)

    @property
    def dim(self):
        return self.P[0].shape[0]

    def scaled(self, alpha):
        """Same rule with every P_i multiplied by alpha > 0."""
        if alpha <= 0.0:
            raise CertificateError("scale must be positive")
        return MinJumpCertificate([alpha * Pi for Pi in self.P], self.weights, self.eps * alpha)


def _check_state(chi, dim):
    chi = np.asarray(chi, dtype=float).reshape(-1)
    if chi.shape[0] != dim:
        raise ModelError(f"state has length {chi.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(chi)):
        raise NumericError("state contains non-finite entries")
    return chi


def select_impulsive(chi, cert):
    """argmin_i chi' P_i chi, smallest index on ties."""
    chi = _check_state(chi, cert.dim)
    best, best_val = 0, float(chi @ cert.P[0] @ chi)
    for i in range(1, cert.modes):
        val = float(chi @ cert.P[i] @ chi)
        if val < best_val:
            best, best_val = i, val
    return best


def select_switched(chi, current_mode, cert, model):
    """argmin_j of the post-jump forms from the current mode, ties to smallest j."""
    if model.kind != "switched":
        raise ModelError("select_switched requires a switched model")
    if not 0 <= current_mode < model.modes:
        raise ModelError(f"current mode {current_mode} out of range")
    chi = _check_state(chi, cert.dim)
    best, best_val = 0, None
    for j in range(model.modes):
        w = model.jump(j, current_mode) @ chi
        val = float(w @ cert.P[j] @ w)
        if best_val is None or val < best_val:
            best, best_val = j, val
    return best
