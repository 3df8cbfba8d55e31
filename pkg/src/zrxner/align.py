"""Unsupervised linear mapping between two embedding spaces.

An adversarial game (a two-layer discriminator against a linear mapper,
trained with plain SGD and an orthogonality pull-back after every mapper
update) produces an initial map; CSLS retrieval induces a mutual-top-1 seed
dictionary; the orthogonal Procrustes solution then refines the map
iteratively. Model selection is by a dictionary-free criterion: the mean
CSLS score of top-1 matches for the most frequent target words.

The Procrustes orientation used here, W = U V^T with U S V^T = SVD(X^T Y),
maps target rows onto source rows (row @ W.T); it is pinned by the
rotation-recovery tests rather than taken on faith.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, NumericalError, UsageError
from .numeric import gaussian_init, svd_square

T_TO_S = "t_to_s"
S_TO_T = "s_to_t"
DIRECTIONS = (T_TO_S, S_TO_T)


@dataclass
class LinearMapper:
    w: np.ndarray
    direction: str = T_TO_S

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2 or self.w.shape[0] != self.w.shape[1]:
            raise UsageError("mapper must be a square matrix")
        if self.direction not in DIRECTIONS:
            raise UsageError(f"direction must be one of {DIRECTIONS}")

    @property
    def dim(self):
        return self.w.shape[0]

    def orthogonality_error(self):
        return float(np.abs(self.w.T @ self.w - np.eye(self.dim)).max())


@dataclass
class SeedDictionary:
    pairs: list  # (target word index, source word index)

    def __post_init__(self):
        targets = [t for t, _ in self.pairs]
        if len(set(targets)) != len(targets):
            raise UsageError("duplicate target entries in seed dictionary")

    @property
    def size(self):
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)


@dataclass
class AlignConfig:
    w_steps: int = 30000
    disc_steps: int = 5
    batch_size: int = 32
    lr_disc: float = 0.1
    lr_map: float = 0.1
    disc_hidden: int = 512
    input_dropout: float = 0.1
    label_smoothing: float = 0.2
    vocab_cap: int = 50000
    beta: float = 0.01
    csls_k: int = 10
    dict_top_n: int = 10000
    refine_iterations: int = 5
    criterion_sample_n: int = 2500
    select_every: int = 500  # criterion-based mapper snapshots; 0 disables
    restarts: int = 3  # max adversarial games; stops early once one converges
    restart_disc_acc: float = 0.7  # end-of-game disc accuracy above this = failed game


def _leaky(z, slope=0.2):
    return np.maximum(z, slope * z)


def _leaky_grad(z, slope=0.2):
    return slope + (1.0 - slope) * (z > 0)


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Discriminator:
    """Two affine layers with a leaky rectifier between and a sigmoid output."""

    def __init__(self, dim, hidden, rng):
        self.w1 = gaussian_init(rng, hidden, dim, 1.0 / np.sqrt(dim))
        self.b1 = np.zeros(hidden)
        self.w2 = gaussian_init(rng, 1, hidden, 1.0 / np.sqrt(hidden)).ravel()
        self.b2 = 0.0

    def logits(self, x):
        z1 = x @ self.w1.T + self.b1
        return _leaky(z1) @ self.w2 + self.b2

    def prob_source(self, x):
        """P(src=1 | x), strictly inside (0, 1)."""
        p = _sigmoid(self.logits(x))
        return np.clip(p, 1e-12, 1.0 - 1e-12)

    def _forward_cache(self, x):
        z1 = x @ self.w1.T + self.b1
        a1 = _leaky(z1)
        z2 = a1 @ self.w2 + self.b2
        return z1, a1, z2

    def backward(self, x, dz2, cache=None, need_input_grad=True):
        """Backprop dL/dz2 through the net; returns (param grads, dL/dx)."""
        z1, a1, _ = cache if cache is not None else self._forward_cache(x)
        dw2 = a1.T @ dz2
        db2 = float(dz2.sum())
        dz1 = (dz2[:, None] * self.w2) * _leaky_grad(z1)
        grads = {
            "w1": dz1.T @ x,
            "b1": dz1.sum(axis=0),
            "w2": dw2,
            "b2": db2,
        }
        return grads, (dz1 @ self.w1 if need_input_grad else None)

    # kept as the test-facing name
    grads_and_input_grad = backward

    def sgd(self, grads, lr):
        self.w1 -= lr * grads["w1"]
        self.b1 -= lr * grads["b1"]
        self.w2 -= lr * grads["w2"]
        self.b2 -= lr * grads["b2"]


def discriminator_loss(disc, w, source_batch, target_batch, smoothing=0.0):
    """Mean BCE of the discriminator: mapped targets labeled src=0 (smoothed
    to s), true source vectors labeled src=1 (smoothed to 1-s)."""
    source_batch = np.atleast_2d(source_batch)
    target_batch = np.atleast_2d(target_batch)
    if source_batch.size == 0 or target_batch.size == 0:
        raise UsageError("batches must be non-empty")
    s = smoothing
    z_tgt = disc.logits(target_batch @ w.T)
    z_src = disc.logits(source_batch)
    tgt_term = (s * _softplus(-z_tgt) + (1 - s) * _softplus(z_tgt)).mean()
    src_term = ((1 - s) * _softplus(-z_src) + s * _softplus(z_src)).mean()
    return float(tgt_term + src_term)


def adversary_loss(disc, w, source_batch, target_batch):
    """Mean BCE with flipped labels; only the mapper is trained on this."""
    source_batch = np.atleast_2d(source_batch)
    target_batch = np.atleast_2d(target_batch)
    if source_batch.size == 0 or target_batch.size == 0:
        raise UsageError("batches must be non-empty")
    z_tgt = disc.logits(target_batch @ w.T)
    z_src = disc.logits(source_batch)
    return float(_softplus(-z_tgt).mean() + _softplus(z_src).mean())


def orthogonalize(w, beta):
    """One pull-back step toward the orthogonal manifold (fixed point there)."""
    return (1 + beta) * w - beta * (w @ w.T) @ w


def _dropout_mask(rng, shape, rate):
    if rate <= 0:
        return None
    return (rng.uniform(shape) >= rate) / (1.0 - rate)


def _play_game(x_rows, y_rows, rng, config, criterion, log):
    """One full adversarial game; returns (best W of the game, discriminator)."""
    dim = x_rows.shape[1]
    w = np.eye(dim)
    disc = Discriminator(dim, config.disc_hidden, rng)
    s = config.label_smoothing
    rate = config.input_dropout
    b = config.batch_size
    targets = np.concatenate([np.full(b, s), np.full(b, 1 - s)])
    batch = np.empty((2 * b, dim))
    best_w, best_score = None, -np.inf
    for step in range(config.w_steps):
        for _ in range(config.disc_steps):
            idx_y = rng.integers(len(y_rows), b)
            idx_x = rng.integers(len(x_rows), b)
            np.matmul(y_rows[idx_y], w.T, out=batch[:b])
            batch[b:] = x_rows[idx_x]
            mask = _dropout_mask(rng, batch.shape, rate)
            if mask is not None:
                batch *= mask
            cache = disc._forward_cache(batch)
            dz = (_sigmoid(cache[2]) - targets) / b
            grads, _ = disc.backward(batch, dz, cache, need_input_grad=False)
            disc.sgd(grads, config.lr_disc)
        by = y_rows[rng.integers(len(y_rows), b)]
        mapped = by @ w.T
        mask_t = _dropout_mask(rng, mapped.shape, rate)
        in_t = mapped * mask_t if mask_t is not None else mapped
        cache = disc._forward_cache(in_t)
        dz_t = (_sigmoid(cache[2]) - 1.0) / b
        _, d_input = disc.backward(in_t, dz_t, cache)
        if mask_t is not None:
            d_input = d_input * mask_t
        w -= config.lr_map * (d_input.T @ by)
        w = orthogonalize(w, config.beta)
        if not np.isfinite(w).all():
            raise NumericalError(f"mapper became non-finite at step {step}")
        if config.select_every and (step + 1) % config.select_every == 0:
            score = criterion(w)
            if score > best_score:
                best_w, best_score = w.copy(), score
        if log is not None and (step % 100 == 0 or step == config.w_steps - 1):
            bx = x_rows[rng.integers(len(x_rows), b)]
            d_loss = discriminator_loss(disc, w, bx, by, s)
            a_loss = adversary_loss(disc, w, bx, by)
            if not (np.isfinite(d_loss) and np.isfinite(a_loss)):
                raise NumericalError(f"non-finite loss at step {step}")
            log.append((step, d_loss, a_loss))
    if best_w is not None and criterion(w) < best_score:
        return best_w, disc
    return w, disc


def _disc_accuracy(disc, w, x_rows, y_rows, rng, sample=256):
    """Balanced accuracy of the discriminator on fresh dropout-free samples."""
    idx_y = rng.integers(len(y_rows), min(sample, len(y_rows)))
    idx_x = rng.integers(len(x_rows), min(sample, len(x_rows)))
    p_t = _sigmoid(disc.logits(y_rows[idx_y] @ w.T))
    p_s = _sigmoid(disc.logits(x_rows[idx_x]))
    return 0.5 * (float((p_t < 0.5).mean()) + float((p_s >= 0.5).mean()))


def adversarial_train(space_table, moving_table, rng, config, log=None):
    """Learn W mapping rows of moving_table into the space of space_table.

    One game alternates config.disc_steps discriminator SGD updates with one
    adversary update of W; after each adversary update the orthogonality
    pull-back with config.beta is applied. W starts at the identity. Every
    config.select_every steps the mapper is scored with the dictionary-free
    criterion and the game returns its best-scoring snapshot (the game
    oscillates once converged; the criterion picks a converged state).

    The game is all-or-nothing: it either aligns the spaces (end-of-game
    discriminator accuracy falls to chance) or stalls with the discriminator
    winning. Up to config.restarts games are played, stopping at the first
    whose discriminator accuracy is at most config.restart_disc_acc; the
    best W across games by the criterion is returned.

    Appends (step, disc_loss, adv_loss) tuples to `log` every 100 steps.
    """
    if space_table.dim != moving_table.dim:
        raise UsageError("embedding dimensions differ")
    x_rows = np.ascontiguousarray(space_table.vectors[: config.vocab_cap])
    y_rows = np.ascontiguousarray(moving_table.vectors[: config.vocab_cap])

    def criterion(candidate):
        return unsupervised_criterion(
            space_table, moving_table, LinearMapper(candidate),
            config.criterion_sample_n, config.csls_k,
        )

    best_w, best_score = None, -np.inf
    for _ in range(max(1, config.restarts)):
        w, disc = _play_game(x_rows, y_rows, rng, config, criterion, log)
        if config.w_steps == 0:
            return LinearMapper(w, T_TO_S)
        score = criterion(w)
        if score > best_score:
            best_w, best_score = w, score
        if _disc_accuracy(disc, w, x_rows, y_rows, rng) <= config.restart_disc_acc:
            break
    return LinearMapper(best_w, T_TO_S)


def _unit_rows(rows):
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return rows / norms


def csls(queries, keys, k):
    """Full CSLS score matrix: 2 cos(q, key) - r_keys(q) - r_queries(key).

    r is the mean cosine of a point's k nearest neighbors in the other set;
    k larger than a set is clamped to the set size.
    """
    if k < 1:
        raise UsageError("k must be >= 1")
    qn = _unit_rows(np.atleast_2d(np.asarray(queries, dtype=np.float64)))
    kn = _unit_rows(np.atleast_2d(np.asarray(keys, dtype=np.float64)))
    cos = qn @ kn.T
    k_row = min(k, kn.shape[0])
    k_col = min(k, qn.shape[0])
    r_q = np.partition(cos, cos.shape[1] - k_row, axis=1)[:, -k_row:].mean(axis=1)
    r_k = np.partition(cos, cos.shape[0] - k_col, axis=0)[-k_col:, :].mean(axis=0)
    return 2 * cos - r_q[:, None] - r_k[None, :]


def csls_top1(queries, keys, k, block=2048):
    """Row-wise argmax of the CSLS scores, computed blockwise over queries."""
    qn = _unit_rows(np.atleast_2d(np.asarray(queries, dtype=np.float64)))
    kn = _unit_rows(np.atleast_2d(np.asarray(keys, dtype=np.float64)))
    nq, nk = qn.shape[0], kn.shape[0]
    k_row = min(k, nk)
    k_col = min(k, nq)
    # streaming column top-k for r_keys (each key's nearest queries)
    top_buffer = np.full((0, nk), -np.inf)
    for lo in range(0, nq, block):
        cos_block = qn[lo : lo + block] @ kn.T
        stacked = np.vstack([top_buffer, cos_block])
        keep = min(k_col, stacked.shape[0])
        top_buffer = np.partition(stacked, stacked.shape[0] - keep, axis=0)[-keep:, :]
    r_k = top_buffer.mean(axis=0)
    best_idx = np.zeros(nq, dtype=np.int64)
    best_score = np.full(nq, -np.inf)
    for lo in range(0, nq, block):
        cos_block = qn[lo : lo + block] @ kn.T
        r_q = np.partition(cos_block, cos_block.shape[1] - k_row, axis=1)[
            :, -k_row:
        ].mean(axis=1)
        scores = 2 * cos_block - r_q[:, None] - r_k[None, :]
        best_idx[lo : lo + block] = scores.argmax(axis=1)
        best_score[lo : lo + block] = scores.max(axis=1)
    return best_idx, best_score


def induce_dictionary(source_table, target_table, mapper, k=10, top_n=10000):
    """Mutual CSLS top-1 pairs between the top_n most frequent words.

    Pairs are (target index, source index); one-directional matches are
    dropped. An empty result raises AlignmentError (failed alignment).
    """
    n_t = min(top_n, len(target_table))
    n_s = min(top_n, len(source_table))
    if n_t == 0 or n_s == 0:
        raise AlignmentError("empty vocabulary")
    mapped_t = target_table.vectors[:n_t] @ mapper.w.T
    src = source_table.vectors[:n_s]
    fwd, _ = csls_top1(mapped_t, src, k)
    bwd, _ = csls_top1(src, mapped_t, k)
    pairs = [(t, int(s)) for t, s in enumerate(fwd) if bwd[s] == t]
    if not pairs:
        raise AlignmentError("induced dictionary is empty")
    return SeedDictionary(pairs)


def procrustes(x_dict, y_dict, direction=T_TO_S):
    """Closed-form orthogonal map W minimizing sum ||W y_i - x_i||^2.

    x_dict and y_dict hold dictionary-aligned rows (source and target side).
    """
    x_dict = np.atleast_2d(np.asarray(x_dict, dtype=np.float64))
    y_dict = np.atleast_2d(np.asarray(y_dict, dtype=np.float64))
    if x_dict.shape != y_dict.shape:
        raise UsageError("dictionary sides differ in shape")
    p, d = x_dict.shape
    if p < d:
        warnings.warn(f"procrustes with {p} pairs for dimension {d} (p >= d recommended)")
    m = x_dict.T @ y_dict
    u, s, v = svd_square(m)
    if s[-1] < 1e-12 * max(s[0], 1e-300):
        warnings.warn("rank-deficient cross-covariance in procrustes")
    return LinearMapper(u @ v.T, direction)


def unsupervised_criterion(source_table, target_table, mapper, sample_n=2500, k=10):
    """Mean CSLS score of the top-1 source match for the sample_n most
    frequent target words; higher is better. Deterministic."""
    n = min(sample_n, len(target_table))
    mapped = target_table.vectors[:n] @ mapper.w.T
    _, scores = csls_top1(mapped, source_table.vectors, k)
    return float(scores.mean())


def refine(source_table, target_table, w0, iterations, k=10, top_n=10000,
           criterion_sample_n=2500, history=None):
    """Alternate dictionary induction and Procrustes; keep the best iterate.

    Best is judged by unsupervised_criterion. If the dictionary collapses
    (fewer pairs than the dimension) the loop stops early and the best
    mapper so far (w0 if none) is returned. history, when given, collects
    (iteration, criterion, dictionary size) rows.
    """
    if iterations < 1:
        raise UsageError("iterations must be >= 1")
    mapper = w0 if isinstance(w0, LinearMapper) else LinearMapper(w0)
    direction = mapper.direction
    dim = mapper.dim
    best = None
    best_score = -np.inf
    current = mapper
    for it in range(1, iterations + 1):
        try:
            dico = induce_dictionary(source_table, target_table, current, k, top_n)
        except AlignmentError:
            break
        if dico.size < dim:
            break
        t_idx = [t for t, _ in dico.pairs]
        s_idx = [s for _, s in dico.pairs]
        current = procrustes(
            source_table.vectors[s_idx], target_table.vectors[t_idx], direction
        )
        score = unsupervised_criterion(
            source_table, target_table, current, criterion_sample_n, k
        )
        if history is not None:
            history.append((it, score, dico.size))
        if score > best_score:
            best, best_score = LinearMapper(current.w.copy(), direction), score
    return best if best is not None else mapper
