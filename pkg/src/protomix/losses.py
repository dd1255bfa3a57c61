"""Metric-learning losses over speaker prototypes.

A training batch holds M utterances from each of N speakers; the first M-1
embeddings per speaker form its prototype (centroid), the last one is the
query.  Queries are scored against every centroid with a scaled-and-shifted
cosine, and the loss family below turns that score matrix into a training
objective:

- `ap_loss`: softmax over centroids per query row, pulling each query toward
  its own prototype (the baseline objective).
- `ce_mixup_loss`: interpolates two cross-entropy terms, one for the query's
  own speaker and one for its mixing partner's.
- `contrastive_mixup_loss`: rewrites the softmax numerator as a weighted sum
  `sum_k d[j,k] * exp(S[j,k])`, where the virtual label weights `d` place
  mass `lam` on the query's own speaker and `1-lam` on its partner.  With
  `d = identity` this reduces exactly to `ap_loss`.

All losses are differentiable Tensors; exponentiated scores only ever pass
through stabilized (weighted) log-sum-exp ops.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError, ShapeError

# Keeps the trainable cosine scale positive so row-wise score ordering is
# preserved through training.
W_MIN = 1e-6


@dataclass
class SimilarityParams:
    """Trainable scale and bias applied to raw cosine similarities."""

    w: Tensor
    b: Tensor

    @classmethod
    def init(cls, w=10.0, b=-5.0):
        return cls(Tensor(w, requires_grad=True), Tensor(b, requires_grad=True))

    def clamp_(self):
        """Clamp the scale to >= W_MIN; call after every optimizer step."""
        if float(self.w.data) < W_MIN:
            self.w.data = np.asarray(W_MIN, dtype=np.float64)


@dataclass
class BatchEmbeddings:
    """Support/query split of one batch's embeddings.

    support: (N, M-1, D); query: (N, D).
    """

    support: Tensor
    query: Tensor

    def __post_init__(self):
        if self.support.data.ndim != 3 or self.query.data.ndim != 2:
            raise ShapeError(
                f"expected support (N,M-1,D) and query (N,D), got "
                f"{self.support.data.shape} and {self.query.data.shape}"
            )
        n, m1, d = self.support.data.shape
        if self.query.data.shape != (n, d):
            raise ShapeError(
                f"query shape {self.query.data.shape} inconsistent with support "
                f"{self.support.data.shape}"
            )
        if n < 2 or m1 < 1:
            raise ContractError(f"need N >= 2 speakers and M >= 2 utterances, got N={n}, M={m1 + 1}")

    @property
    def speaker_count(self):
        return self.support.data.shape[0]


@dataclass
class LabelWeights:
    """Virtual label weights for the mixed-query objective.

    Row j places mass `lam` on column j and `1-lam` on column shuffle[j]
    (a coinciding fixed point gets the full mass 1).  Rows sum to exactly 1.
    """

    d: np.ndarray
    lam: float
    shuffle: np.ndarray


def _validate_permutation(shuffle, n):
    perm = np.asarray(shuffle, dtype=np.intp)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ContractError(f"shuffle must be a permutation of 0..{n - 1}, got {shuffle!r}")
    return perm


def _validate_lambda(lam):
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ContractError(f"lambda must be in [0, 1], got {lam}")
    return lam


def compute_centroids(support):
    """Per-speaker prototype: mean of the M-1 support embeddings.

    support: (N, M-1, D) tensor -> (N, D) tensor.
    """
    support = support if isinstance(support, Tensor) else Tensor(support)
    if support.data.ndim != 3:
        raise ShapeError(f"support must be (N, M-1, D), got {support.data.shape}")
    if support.data.shape[1] < 1:
        raise ContractError("need at least one support utterance per speaker (M >= 2)")
    return ad.mean(support, axis=1)


def compute_similarity_matrix(query, centroids, params):
    """Scaled cosine score matrix: S[j,k] = w * cos(query_j, centroid_k) + b."""
    cos = ad.cosine_rows(query, centroids)
    return ad.add(ad.multiply(params.w, cos), params.b)


def ap_loss(similarity):
    """Prototype softmax loss: -(1/N) sum_j log softmax(S)[j, j].

    Computed as mean_j(logsumexp(S_j) - S[j,j]); the exponentiation lives
    inside the stabilized logsumexp.
    """
    similarity = similarity if isinstance(similarity, Tensor) else Tensor(similarity)
    _require_square(similarity, "ap_loss")
    return ad.mean(ad.subtract(ad.logsumexp_rows(similarity), ad.diagonal(similarity)))


def mixup_classification_loss(logits, labels, shuffled_labels, lam):
    """Interpolated cross-entropy for closed-set classification.

    lam * CE(logits, labels) + (1-lam) * CE(logits, shuffled_labels).  This is
    the closed-set reference form; the verification path uses the metric
    losses below.
    """
    logits = logits if isinstance(logits, Tensor) else Tensor(logits)
    if logits.data.ndim != 2:
        raise ShapeError(f"logits must be (B, C), got {logits.data.shape}")
    b, c = logits.data.shape
    lam = _validate_lambda(lam)
    labels = np.asarray(labels, dtype=np.intp)
    shuffled = np.asarray(shuffled_labels, dtype=np.intp)
    for name, idx in (("labels", labels), ("shuffled_labels", shuffled)):
        if idx.shape != (b,):
            raise ShapeError(f"{name} must have one entry per row, got {idx.shape}")
        if np.any(idx < 0) or np.any(idx >= c):
            raise ContractError(f"{name} contain out-of-range class indices")
    lse = ad.logsumexp_rows(logits)
    ce_own = ad.mean(ad.subtract(lse, ad.gather_columns(logits, labels)))
    ce_shuffled = ad.mean(ad.subtract(lse, ad.gather_columns(logits, shuffled)))
    return ad.add(ad.multiply(Tensor(lam), ce_own), ad.multiply(Tensor(1.0 - lam), ce_shuffled))


def ce_mixup_loss(similarity, shuffle, lam):
    """Interpolated prototype softmax loss over a mixed-query score matrix.

    -(1/N) sum_i [ lam * log softmax(S)[i, i]
                   + (1-lam) * log softmax(S)[i, shuffle[i]] ]

    With lam=1 or shuffle=identity this equals ap_loss on the same matrix.
    """
    similarity = similarity if isinstance(similarity, Tensor) else Tensor(similarity)
    n = _require_square(similarity, "ce_mixup_loss")
    lam = _validate_lambda(lam)
    perm = _validate_permutation(shuffle, n)
    lse = ad.logsumexp_rows(similarity)
    own = ad.mean(ad.subtract(lse, ad.diagonal(similarity)))
    partner = ad.mean(ad.subtract(lse, ad.gather_columns(similarity, perm)))
    return ad.add(ad.multiply(Tensor(lam), own), ad.multiply(Tensor(1.0 - lam), partner))


def build_label_weights(n, shuffle, lam):
    """Virtual label weight matrix d for the mixed-query objective.

    d[j, j] = lam, d[j, shuffle[j]] = 1 - lam, zero elsewhere; when
    shuffle[j] == j the two masses coincide and d[j, j] = 1.  Row sums are
    exactly 1 for every lam in [0, 1].
    """
    lam = _validate_lambda(lam)
    perm = _validate_permutation(shuffle, int(n))
    d = np.zeros((n, n))
    d[np.arange(n), np.arange(n)] = lam
    d[np.arange(n), perm] += 1.0 - lam
    return LabelWeights(d=d, lam=lam, shuffle=perm)


def contrastive_mixup_loss(similarity, label_weights):
    """Mixed-query prototype loss with virtual label weights.

    L = -(1/N) sum_j log( sum_k d[j,k] e^{S[j,k]} / sum_k e^{S[j,k]} )

    Both the weighted numerator and the denominator run through stabilized
    log-sum-exp.  With d = identity this is ap_loss exactly.
    """
    similarity = similarity if isinstance(similarity, Tensor) else Tensor(similarity)
    n = _require_square(similarity, "contrastive_mixup_loss")
    d = label_weights.d if isinstance(label_weights, LabelWeights) else np.asarray(label_weights)
    if d.shape != (n, n):
        raise ShapeError(f"label weights {d.shape} must match similarity {similarity.data.shape}")
    if np.any(d < 0.0) or np.any(d > 1.0):
        raise ContractError("label weights must lie in [0, 1]")
    if np.any(np.all(d == 0.0, axis=1)):
        raise ContractError("a label-weight row is all zero (log 0)")
    row_sums = d.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-12):
        raise ContractError(
            f"label-weight rows must sum to 1 within 1e-12, got sums {row_sums!r}"
        )
    numerator = ad.weighted_logsumexp_rows(similarity, d)
    denominator = ad.logsumexp_rows(similarity)
    return ad.mean(ad.subtract(denominator, numerator))


def _require_square(similarity, op):
    if similarity.data.ndim != 2 or similarity.data.shape[0] != similarity.data.shape[1]:
        raise ShapeError(f"{op}: similarity matrix must be square, got {similarity.data.shape}")
    return similarity.data.shape[0]
