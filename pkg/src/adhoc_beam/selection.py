"""
Channel-selection rules mapping per-channel weights q (and, for the
clustering rule, synchronized spectrograms) to a selection vector p.

Ties always go to the lowest channel index.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import linkage

Q_EPS = 1e-9
ALGORITHMS = ("1best", "all", "fixedN", "autoN", "softN", "learningN")


@dataclass
class SelectionVector:
    p: np.ndarray
    algorithm: str = ""
    params: dict = field(default_factory=dict)
    clusters: np.ndarray | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0) or np.any(self.p > 1):
            raise ValueError("selection entries must lie in [0, 1]")
        if not np.any(self.p > 0):
            raise ValueError("selection must keep at least one channel")

    @property
    def support(self):
        return np.flatnonzero(self.p > 0)

    @property
    def n_selected(self):
        return int(np.count_nonzero(self.p))

    def to_json(self, q=None):
        d = {"algorithm": self.algorithm, "params": self.params,
             "q": None if q is None else np.asarray(q, dtype=float).tolist(),
             "p": self.p.tolist()}
        if self.clusters is not None:
            d["clusters"] = np.asarray(self.clusters).tolist()
        return json.dumps(d)


def _q(q):
    q = np.asarray(q, dtype=float).ravel()
    if q.size < 1:
        raise ValueError("need at least one channel weight")
    return q


def best_channel(q):
    return int(np.argmax(_q(q)))


def select_1best(q):
    q = _q(q)
    p = np.zeros(q.size)
    p[np.argmax(q)] = 1.0
    return SelectionVector(p, "1best")


def select_all(n_channels):
    if n_channels < 1:
        raise ValueError("need at least one channel")
    return SelectionVector(np.ones(n_channels), "all")


def default_n(n_channels):
    return max(1, int(round(np.sqrt(n_channels))))


def select_fixed_n(q, n=None):
    q = _q(q)
    n = default_n(q.size) if n is None else int(n)
    if not 1 <= n <= q.size:
        raise ValueError(f"N must be in [1, {q.size}], got {n}")
    order = np.lexsort((np.arange(q.size), -q))
    p = np.zeros(q.size)
    p[order[:n]] = 1.0
    return SelectionVector(p, "fixedN", {"N": n})


def odds_ratio(q, q_star=None):
    """(q_i / q*) * ((1 - q*) / (1 - q_i)), with q clamped to [eps, 1 - eps]."""
    q = np.clip(_q(q), Q_EPS, 1 - Q_EPS)
    if q_star is None:
        q_star = q.max()
    q_star = float(np.clip(q_star, Q_EPS, 1 - Q_EPS))
    return (q / q_star) * ((1 - q_star) / (1 - q))


def _auto_support(q, gamma):
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    q = _q(q)
    keep = odds_ratio(q) > gamma
    # the argmax has ratio 1 and survives for any gamma < 1; keep it at gamma = 1 too
    keep[np.argmax(q)] = True
    return keep


def select_auto_n(q, gamma=0.5):
    keep = _auto_support(q, gamma)
    return SelectionVector(keep.astype(float), "autoN", {"gamma": gamma})


def select_soft_n(q, gamma=0.5):
    q = _q(q)
    keep = _auto_support(q, gamma)
    # same clamp as the odds ratio, so the support always matches auto-N
    p = np.where(keep, np.clip(q, Q_EPS, 1), 0.0)
    return SelectionVector(p, "softN", {"gamma": gamma})


# ---------------------------------------------------------------------------
# clustering-based selection

@dataclass
class ClusterEmbedding:
    U: np.ndarray                       # J x M, column i embeds channel i
    labels: np.ndarray | None = None    # cluster id per channel
    cluster_max_q: np.ndarray | None = None


def channel_affinity(y, sigma=1.0):
    """Coherence kernel K and affinity A from synchronized spectrograms.

    ``y`` is (M, T, F). Per frequency, the normalized squared cross-power
    |Phi_ij|^2 / (Phi_ii Phi_jj) is averaged over frequencies at which every
    channel has nonzero energy; A = exp(-(K - I)^2 / (2 sigma^2)).
    """
    y = np.asarray(y)
    M = y.shape[0]
    phi = np.einsum("itf,jtf->fij", y, y.conj())
    power = np.real(np.einsum("fii->fi", phi))
    valid = np.all(power > 0, axis=1)
    if not valid.any():
        raise ValueError("no frequency with nonzero energy on all channels")
    phi, power = phi[valid], power[valid]
    norm = np.abs(phi)**2 / (power[:, :, None] * power[:, None, :])
    K = norm.mean(axis=0)
    K = np.clip(0.5 * (K + K.T), 0.0, 1.0)
    np.fill_diagonal(K, 1.0)
    A = np.exp(-(K - np.eye(M))**2 / (2 * sigma**2))
    return K, A


def default_j(n_channels):
    return max(1, n_channels // 2)


def spectral_embed(A, J=None):
    """Ng-Jordan-Weiss embedding: top-J eigenvectors of D^-1/2 A D^-1/2,
    rows normalized to unit length; returned as J x M."""
    A = np.asarray(A, dtype=float)
    M = A.shape[0]
    J = default_j(M) if J is None else int(J)
    if not 1 <= J <= M:
        raise ValueError(f"J must be in [1, {M}], got {J}")
    d = A.sum(axis=1)
    if np.any(d <= 0):
        raise ValueError("affinity has a row with nonpositive degree")
    dm = 1 / np.sqrt(d)
    L = dm[:, None] * A * dm[None, :]
    w, V = np.linalg.eigh(0.5 * (L + L.T))
    X = V[:, ::-1][:, :J]
    # sign convention independent of channel order: positive entry sum,
    # else positive largest-magnitude entry
    for k in range(J):
        s = X[:, k].sum()
        ref = s if abs(s) > 1e-9 else X[np.argmax(np.abs(X[:, k])), k]
        if ref < 0:
            X[:, k] = -X[:, k]
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    Y = X / np.maximum(norms, 1e-300)
    return ClusterEmbedding(Y.T)


def lifetime_cut(heights):
    """Number of clusters from sorted merge heights h_1 <= ... <= h_{M-1}.

    Cutting between merges k and k+1 (h_0 = 0) leaves M - k clusters and has
    lifetime h_{k+1} - h_k; the longest lifetime wins, ties to the first.
    All lifetimes zero gives one cluster.
    """
    h = np.concatenate([[0.0], np.sort(np.asarray(heights, dtype=float))])
    M = h.size
    if M == 1:
        return 1
    gaps = np.diff(h)
    if not np.any(gaps > 0):
        return 1
    k = int(np.argmax(gaps))
    return M - k


def lifetime_cluster(emb):
    """Average-linkage agglomerative clustering of the embedded channels,
    cut at the maximal dendrogram lifetime. Returns labels 0..B-1 ordered by
    first appearance."""
    U = emb.U if isinstance(emb, ClusterEmbedding) else np.asarray(emb)
    pts = U.T
    M = pts.shape[0]
    if M == 1:
        return np.zeros(1, dtype=int)
    Z = linkage(pts, method="average", metric="euclidean")
    n_clusters = lifetime_cut(Z[:, 2])
    # replay merges until n_clusters remain
    members = {i: [i] for i in range(M)}
    for step in range(M - n_clusters):
        a, b = int(Z[step, 0]), int(Z[step, 1])
        members[M + step] = members.pop(a) + members.pop(b)
    labels = np.empty(M, dtype=int)
    for lab, grp in enumerate(sorted(members.values(), key=min)):
        labels[grp] = lab
    return labels


def select_learning_n(y, q, gamma=0.5, sigma=1.0, J=None):
    """Cluster channels on coherence, then keep every cluster whose best
    weight passes the auto-N rule against the best cluster."""
    q = _q(q)
    y = np.asarray(y)
    if y.shape[0] != q.size:
        raise ValueError("number of spectrograms and weights differ")
    if q.size == 1:
        return SelectionVector(np.ones(1), "learningN",
                               {"gamma": gamma, "sigma": sigma, "J": 1}, np.zeros(1, int))
    J = default_j(q.size) if J is None else J
    _, A = channel_affinity(y, sigma)
    emb = spectral_embed(A, J)
    labels = lifetime_cluster(emb)
    return select_by_clusters(q, labels, gamma, params={"sigma": sigma, "J": J}, emb=emb)


def select_by_clusters(q, labels, gamma=0.5, params=None, emb=None):
    q = _q(q)
    labels = np.asarray(labels)
    n_clusters = labels.max() + 1
    cmax = np.array([q[labels == b].max() for b in range(n_clusters)])
    keep_cluster = _auto_support(cmax, gamma)
    # the cluster holding the global argmax must survive
    keep_cluster[labels[np.argmax(q)]] = True
    p = keep_cluster[labels].astype(float)
    if emb is not None:
        emb.labels = labels
        emb.cluster_max_q = cmax
    return SelectionVector(p, "learningN", {"gamma": gamma, **(params or {})}, labels)


def select(algorithm, q, gamma=0.5, n=None, sigma=1.0, J=None, y=None):
    """Dispatch by algorithm name."""
    if algorithm == "1best":
        return select_1best(q)
    if algorithm == "all":
        return select_all(len(_q(q)))
    if algorithm == "fixedN":
        return select_fixed_n(q, n)
    if algorithm == "autoN":
        return select_auto_n(q, gamma)
    if algorithm == "softN":
        return select_soft_n(q, gamma)
    if algorithm == "learningN":
        if y is None:
            raise ValueError("learningN needs synchronized spectrograms")
        return select_learning_n(y, q, gamma, sigma, J)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
