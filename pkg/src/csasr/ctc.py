"""Reference CTC / cross-entropy loss math.

All recursions run in log space. The blank symbol is id 0, shared with the
tokenizer's reserved id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import log_softmax, logsumexp

BLANK_ID = 0
DEFAULT_ALPHA = 0.3


class CTCError(ValueError):
    pass


class InfeasibleAlignment(CTCError):
    pass


@dataclass(frozen=True)
class LossBreakdown:
    ctc_loss: float
    ce_loss: float
    alpha: float
    combined: float

    @classmethod
    def build(cls, ctc: float, ce: float, alpha: float = DEFAULT_ALPHA) -> "LossBreakdown":
        return cls(float(ctc), float(ce), float(alpha), combine_losses(ctc, ce, alpha))

    def to_json(self) -> dict:
        return {"ctc_loss": self.ctc_loss, "ce_loss": self.ce_loss,
                "alpha": self.alpha, "combined": self.combined}


def check_logp(logp, tol: float = 1e-6) -> np.ndarray:
    logp = np.asarray(logp, dtype=np.float64)
    if logp.ndim != 2:
        raise CTCError(f"log-prob matrix must be 2-d, got shape {logp.shape}")
    t, v = logp.shape
    if t < 1 or v < 2:
        raise CTCError(f"log-prob matrix needs T >= 1 and V >= 2, got {logp.shape}")
    if np.any(np.isnan(logp)) or np.any(logp == np.inf):
        raise CTCError("log-prob matrix contains NaN or +inf")
    row_sums = np.exp(logsumexp(logp, axis=1))
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > tol)
    if bad.size:
        raise CTCError(f"row {bad[0]} is not normalized (probability mass {row_sums[bad[0]]:.8g})")
    return logp


def check_labels(labels: Sequence[int], vocab_size: int) -> np.ndarray:
    ids = np.asarray(list(labels), dtype=np.int64)
    if ids.size and (ids.min() < 1 or ids.max() >= vocab_size):
        raise CTCError(f"labels must lie in [1, {vocab_size}); blank ({BLANK_ID}) is not a label")
    return ids


def min_frames(labels: Sequence[int]) -> int:
    labels = list(labels)
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return len(labels) + repeats


def _extend(labels: np.ndarray) -> np.ndarray:
    ext = np.full(2 * len(labels) + 1, BLANK_ID, dtype=np.int64)
    ext[1::2] = labels
    return ext


def _skip_allowed(ext: np.ndarray) -> np.ndarray:
    # s may be reached from s-2 when ext[s] is a label differing from ext[s-2]
    allowed = np.zeros(len(ext), dtype=bool)
    allowed[2:] = (ext[2:] != BLANK_ID) & (ext[2:] != ext[:-2])
    return allowed


def _prepare(logp, labels):
    logp = check_logp(logp)
    ids = check_labels(labels, logp.shape[1])
    need = min_frames(ids.tolist())
    if logp.shape[0] < need:
        raise InfeasibleAlignment(
            f"{len(ids)} labels need at least {need} frames, got {logp.shape[0]}"
        )
    return logp, ids


def _shift(a: np.ndarray, k: int) -> np.ndarray:
    """``out[s] = a[s - k]`` (negative ``k`` shifts left), padded with -inf."""
    out = np.full_like(a, -np.inf)
    if k > 0:
        out[k:] = a[:-k]
    else:
        out[:k] = a[-k:]
    return out


def _forward(logp: np.ndarray, ext: np.ndarray) -> np.ndarray:
    t_len, s_len = logp.shape[0], len(ext)
    skip = _skip_allowed(ext)
    alpha = np.full((t_len, s_len), -np.inf)
    alpha[0, 0] = logp[0, ext[0]]
    if s_len > 1:
        alpha[0, 1] = logp[0, ext[1]]
    for t in range(1, t_len):
        prev = alpha[t - 1]
        jump = np.where(skip, _shift(prev, 2), -np.inf)
        alpha[t] = np.logaddexp(np.logaddexp(prev, _shift(prev, 1)), jump) + logp[t, ext]
    return alpha


def _backward(logp: np.ndarray, ext: np.ndarray) -> np.ndarray:
    t_len, s_len = logp.shape[0], len(ext)
    skip = _skip_allowed(ext)
    # from s, a jump lands on s+2, allowed when skip[s+2]
    jump_from = np.zeros_like(skip)
    jump_from[:-2] = skip[2:]
    beta = np.full((t_len, s_len), -np.inf)
    beta[-1, -1] = logp[-1, ext[-1]]
    if s_len > 1:
        beta[-1, -2] = logp[-1, ext[-2]]
    for t in range(t_len - 2, -1, -1):
        nxt = beta[t + 1]
        jump = np.where(jump_from, _shift(nxt, -2), -np.inf)
        beta[t] = np.logaddexp(np.logaddexp(nxt, _shift(nxt, -1)), jump) + logp[t, ext]
    return beta


def _loss_from_alpha(alpha: np.ndarray) -> float:
    last = alpha[-1]
    tail = last[-2:] if len(last) > 1 else last
    return float(-logsumexp(tail))


def ctc_loss(logp, labels: Sequence[int]) -> float:
    """Negative log-probability of ``labels`` summed over all CTC alignments."""
    logp, ids = _prepare(logp, labels)
    return max(0.0, _loss_from_alpha(_forward(logp, _extend(ids))))


def ctc_grad(logp, labels: Sequence[int]) -> np.ndarray:
    """Gradient of :func:`ctc_loss` w.r.t. the logits ``z`` with ``logp = log_softmax(z)``.

    ``grad[t, k] = y[t, k] - (1/P) * sum_{s: ext[s] = k} alpha[t, s] * beta[t, s] / y[t, k]``
    where alpha and beta both include the emission at ``t``.
    """
    logp, ids = _prepare(logp, labels)
    ext = _extend(ids)
    alpha = _forward(logp, ext)
    beta = _backward(logp, ext)
    log_total = -_loss_from_alpha(alpha)
    ab = alpha + beta
    with np.errstate(invalid="ignore"):
        # log state posteriors, (T, S); unreachable states stay -inf
        occ = np.where(np.isneginf(ab), -np.inf, ab - logp[:, ext] - log_total)

    t_len, v = logp.shape
    post = np.full((t_len, v), -np.inf)
    for k in np.unique(ext):
        post[:, k] = logsumexp(occ[:, ext == k], axis=1)
    return np.exp(logp) - np.exp(post)


def ce_loss(logp, labels: Sequence[int]) -> float:
    """Mean token-level cross entropy, one distribution per target position."""
    logp = check_logp(logp)
    ids = np.asarray(list(labels), dtype=np.int64)
    if logp.shape[0] != len(ids):
        raise CTCError(f"cross entropy needs one row per label: {logp.shape[0]} rows, {len(ids)} labels")
    if ids.min() < 0 or ids.max() >= logp.shape[1]:
        raise CTCError(f"labels must lie in [0, {logp.shape[1]})")
    return max(0.0, float(-logp[np.arange(len(ids)), ids].mean()))


def combine_losses(ctc: float, ce: float, alpha: float = DEFAULT_ALPHA) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise CTCError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * ctc + (1.0 - alpha) * ce


def greedy_decode(logp) -> list[int]:
    """Best-path decoding: frame argmax, collapse repeats, drop blanks."""
    logp = np.asarray(logp, dtype=np.float64)
    if logp.ndim != 2 or logp.shape[0] == 0:
        return []
    best = np.argmax(logp, axis=1)
    out, prev = [], None
    for k in best.tolist():
        if k != prev and k != BLANK_ID:
            out.append(k)
        prev = k
    return out


def normalize_logits(logits) -> np.ndarray:
    return log_softmax(np.asarray(logits, dtype=np.float64), axis=1)
