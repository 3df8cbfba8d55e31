"""The NER model: a shared character table, character-level and word-level
bidirectional gated recurrent encoders, a point-wise tanh dense head scored
against a per-tag matrix, and a linear-chain CRF with exact inference.

Gradients are derived analytically: CRF node/edge gradients come from
forward-backward marginals, the rest is back-propagation through time. All
math is float64; the finite-difference suite checks every tensor.

Parameters live in plain float64 arrays shared by reference: the source and
target encoders of a cross-lingual model reference one character table and
one head, and a direction-tied encoder references one cell for both
directions. In-place SGD updates keep that aliasing intact.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import IOB1, IOBES, UNK_CHAR, split_label
from .errors import NumericalError, UsageError
from .numeric import gaussian_init, log_sum_exp

MASK_VALUE = -1e4  # disallowed-transition penalty; finite by contract


# ---------------------------------------------------------------------------
# Linear-chain CRF with BOS row K and EOS column K+1 of the transition matrix


def crf_forward(scores, trans):
    """Forward recursion in the log domain; returns (alpha, log_partition)."""
    m, k = scores.shape
    bos, eos = k, k + 1
    alpha = np.empty((m, k))
    alpha[0] = scores[0] + trans[bos, :k]
    for i in range(1, m):
        prev = alpha[i - 1][:, None] + trans[:k, :k]
        mx = prev.max(axis=0)
        alpha[i] = scores[i] + mx + np.log(np.exp(prev - mx).sum(axis=0))
    return alpha, log_sum_exp(alpha[m - 1] + trans[:k, eos])


def crf_backward_pass(scores, trans):
    m, k = scores.shape
    eos = k + 1
    beta = np.empty((m, k))
    beta[m - 1] = trans[:k, eos]
    for i in range(m - 2, -1, -1):
        nxt = trans[:k, :k] + (scores[i + 1] + beta[i + 1])[None, :]
        mx = nxt.max(axis=1)
        beta[i] = mx + np.log(np.exp(nxt - mx[:, None]).sum(axis=1))
    return beta


def crf_log_partition(scores, trans):
    """log sum over all tag paths of exp(node + edge scores), boundaries
    included."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all() or not np.isfinite(trans).all():
        raise UsageError("non-finite CRF inputs")
    _, logz = crf_forward(scores, trans)
    return logz


def crf_marginals(scores, trans):
    """Per-position tag marginals p(y_i = j | X); rows sum to 1."""
    alpha, logz = crf_forward(scores, trans)
    beta = crf_backward_pass(scores, trans)
    return np.exp(alpha + beta - logz), logz


def crf_nll(scores, trans, path):
    """Negative log-probability of the gold path (cross-entropy loss)."""
    m, k = scores.shape
    path = list(path)
    if len(path) != m or any(not 0 <= y < k for y in path):
        raise UsageError("gold path does not match the score table")
    bos, eos = k, k + 1
    gold = trans[bos, path[0]] + scores[0, path[0]]
    for i in range(1, m):
        gold += trans[path[i - 1], path[i]] + scores[i, path[i]]
    gold += trans[path[-1], eos]
    _, logz = crf_forward(scores, trans)
    return float(logz - gold)


def crf_nll_grads(scores, trans, path):
    """(nll, d nll/d scores, d nll/d trans): marginals minus observed counts."""
    m, k = scores.shape
    bos, eos = k, k + 1
    alpha, logz = crf_forward(scores, trans)
    beta = crf_backward_pass(scores, trans)
    marg = np.exp(alpha + beta - logz)
    dscores = marg.copy()
    dtrans = np.zeros_like(trans)
    dtrans[bos, :k] += marg[0]
    dtrans[:k, eos] += marg[m - 1]
    for i in range(m - 1):
        pair = np.exp(
            alpha[i][:, None]
            + trans[:k, :k]
            + (scores[i + 1] + beta[i + 1])[None, :]
            - logz
        )
        dtrans[:k, :k] += pair
    gold = trans[bos, path[0]] + scores[0, path[0]]
    dscores[0, path[0]] -= 1.0
    dtrans[bos, path[0]] -= 1.0
    for i in range(1, m):
        gold += trans[path[i - 1], path[i]] + scores[i, path[i]]
        dscores[i, path[i]] -= 1.0
        dtrans[path[i - 1], path[i]] -= 1.0
    gold += trans[path[-1], eos]
    dtrans[path[-1], eos] -= 1.0
    return float(logz - gold), dscores, dtrans


def viterbi(scores, trans):
    """Highest-scoring tag path, boundary transitions included.

    Ties break toward the lowest tag index, applied left to right.
    """
    scores = np.asarray(scores, dtype=np.float64)
    m, k = scores.shape
    bos, eos = k, k + 1
    delta = scores[0] + trans[bos, :k]
    back = np.zeros((m, k), dtype=np.int64)
    for i in range(1, m):
        cand = delta[:, None] + trans[:k, :k]
        back[i] = cand.argmax(axis=0)  # argmax favors the lowest index
        delta = scores[i] + cand[back[i], np.arange(k)]
    last = int((delta + trans[:k, eos]).argmax())
    path = [last]
    for i in range(m - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    return path[::-1]


# ---------------------------------------------------------------------------
# Gated recurrent cell (input / forget / output / candidate), manual BPTT


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LstmCell:
    """One direction's parameters: w (4H, I), u (4H, H), b (4H,)."""

    def __init__(self, input_dim, hidden_dim, rng):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.w = gaussian_init(rng, 4 * hidden_dim, input_dim,
                               1.0 / np.sqrt(input_dim))
        self.u = gaussian_init(rng, 4 * hidden_dim, hidden_dim,
                               1.0 / np.sqrt(hidden_dim))
        self.b = np.zeros(4 * hidden_dim)

    def tensors(self):
        return {"w": self.w, "u": self.u, "b": self.b}


def lstm_forward(cell, xs):
    """Run the cell over xs (m, I); returns (hs (m, H), cache)."""
    m = xs.shape[0]
    hdim = cell.hidden_dim
    zx = xs @ cell.w.T + cell.b
    gates = np.empty((m, 4 * hdim))
    cs = np.empty((m, hdim))
    hs = np.empty((m, hdim))
    h = np.zeros(hdim)
    c = np.zeros(hdim)
    for t in range(m):
        z = zx[t] + cell.u @ h
        i = _sigmoid(z[:hdim])
        f = _sigmoid(z[hdim : 2 * hdim])
        o = _sigmoid(z[2 * hdim : 3 * hdim])
        g = np.tanh(z[3 * hdim :])
        gates[t, :hdim] = i
        gates[t, hdim : 2 * hdim] = f
        gates[t, 2 * hdim : 3 * hdim] = o
        gates[t, 3 * hdim :] = g
        c = f * c + i * g
        cs[t] = c
        h = o * np.tanh(c)
        hs[t] = h
    return hs, (xs, gates, cs, hs)


def lstm_backward(cell, cache, dhs):
    """BPTT through a cached forward run.

    dhs (m, H) is the upstream gradient on every output state. Returns
    (dxs (m, I), grads {w, u, b}).
    """
    xs, gates, cs, hs = cache
    m = xs.shape[0]
    hdim = cell.hidden_dim
    dz_all = np.empty((m, 4 * hdim))
    dh_next = np.zeros(hdim)
    dc_next = np.zeros(hdim)
    for t in range(m - 1, -1, -1):
        i = gates[t, :hdim]
        f = gates[t, hdim : 2 * hdim]
        o = gates[t, 2 * hdim : 3 * hdim]
        g = gates[t, 3 * hdim :]
        c_prev = cs[t - 1] if t > 0 else np.zeros(hdim)
        tc = np.tanh(cs[t])
        dh = dhs[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f
        dz = dz_all[t]
        dz[:hdim] = di * i * (1.0 - i)
        dz[hdim : 2 * hdim] = df * f * (1.0 - f)
        dz[2 * hdim : 3 * hdim] = do * o * (1.0 - o)
        dz[3 * hdim :] = dg * (1.0 - g * g)
        dh_next = cell.u.T @ dz
    h_prev = np.vstack([np.zeros(hdim), hs[:-1]])
    grads = {
        "w": dz_all.T @ xs,
        "u": dz_all.T @ h_prev,
        "b": dz_all.sum(axis=0),
    }
    return dz_all @ cell.w, grads


class BiLstm:
    """Forward and backward cells; one shared cell object when tied."""

    def __init__(self, input_dim, hidden_dim, rng, tied=False):
        self.fwd = LstmCell(input_dim, hidden_dim, rng)
        self.bwd = self.fwd if tied else LstmCell(input_dim, hidden_dim, rng)

    @property
    def tied(self):
        return self.bwd is self.fwd

    @property
    def hidden_dim(self):
        return self.fwd.hidden_dim

    def directions(self):
        if self.tied:
            return [("f", self.fwd)]
        return [("f", self.fwd), ("b", self.bwd)]


def bilstm_states(bi, xs):
    """Per-position concatenation of forward and backward states (m, 2H)."""
    hs_f, cache_f = lstm_forward(bi.fwd, xs)
    hs_b_rev, cache_b = lstm_forward(bi.bwd, xs[::-1])
    return np.hstack([hs_f, hs_b_rev[::-1]]), (cache_f, cache_b)


def bilstm_states_backward(bi, cache, dout):
    cache_f, cache_b = cache
    hdim = bi.hidden_dim
    dxs_f, grads_f = lstm_backward(bi.fwd, cache_f, dout[:, :hdim])
    dxs_b, grads_b = lstm_backward(bi.bwd, cache_b, dout[::-1, hdim:])
    return dxs_f + dxs_b[::-1], grads_f, grads_b


def bilstm_final(bi, xs):
    """Concatenated final forward and final backward states (2H,)."""
    hs_f, cache_f = lstm_forward(bi.fwd, xs)
    hs_b_rev, cache_b = lstm_forward(bi.bwd, xs[::-1])
    return np.concatenate([hs_f[-1], hs_b_rev[-1]]), (cache_f, cache_b)


def bilstm_final_backward(bi, cache, dfinal, m):
    cache_f, cache_b = cache
    hdim = bi.hidden_dim
    dh_f = np.zeros((m, hdim))
    dh_f[-1] = dfinal[:hdim]
    dh_b = np.zeros((m, hdim))
    dh_b[-1] = dfinal[hdim:]
    dxs_f, grads_f = lstm_backward(bi.fwd, cache_f, dh_f)
    dxs_b, grads_b = lstm_backward(bi.bwd, cache_b, dh_b)
    return dxs_f + dxs_b[::-1], grads_f, grads_b


# ---------------------------------------------------------------------------
# Model


@dataclass
class TaggerConfig:
    word_dim: int
    tags: list
    scheme: str = IOBES
    char_dim: int = 25
    char_hidden: int = 25
    word_hidden: int = 100
    head_hidden: int = 100
    use_char: bool = True
    tied: bool = False
    dropout: float = 0.5
    constrained_decoding: bool = False

    @property
    def n_tags(self):
        return len(self.tags)

    @property
    def input_dim(self):
        return self.word_dim + (2 * self.char_hidden if self.use_char else 0)


class Encoder:
    def __init__(self, cfg, rng):
        self.char = (
            BiLstm(cfg.char_dim, cfg.char_hidden, rng, cfg.tied)
            if cfg.use_char else None
        )
        self.word = BiLstm(cfg.input_dim, cfg.word_hidden, rng, cfg.tied)

    def copy_from(self, other):
        """Overwrite this encoder's tensors with deep copies of another's."""
        for mine, theirs in ((self.char, other.char), (self.word, other.word)):
            if mine is None:
                continue
            for (_, cell), (_, src_cell) in zip(mine.directions(),
                                                theirs.directions()):
                cell.w = src_cell.w.copy()
                cell.u = src_cell.u.copy()
                cell.b = src_cell.b.copy()


class Tagger:
    """Cross-lingual CRF tagger. One char table and one head exist per model;
    every encoder references them."""

    def __init__(self, cfg, char_vocab, rng, languages=("src",)):
        self.cfg = cfg
        self.char_vocab = dict(char_vocab)
        self.char_emb = (
            gaussian_init(rng, len(self.char_vocab), cfg.char_dim, 0.1)
            if cfg.use_char else None
        )
        self.encoders = {lang: Encoder(cfg, rng) for lang in languages}
        self.head = {
            "dense_w": gaussian_init(rng, cfg.head_hidden, 2 * cfg.word_hidden,
                                     1.0 / np.sqrt(2 * cfg.word_hidden)),
            "dense_b": np.zeros(cfg.head_hidden),
            "tag_w": gaussian_init(rng, cfg.n_tags, cfg.head_hidden,
                               1.0 / np.sqrt(cfg.head_hidden)),
            "trans": np.zeros((cfg.n_tags + 2, cfg.n_tags + 2)),
        }
        self.tag_index = {t: i for i, t in enumerate(cfg.tags)}
        self.trans_mask = (
            transition_mask(cfg.tags, cfg.scheme)
            if cfg.constrained_decoding
            else np.zeros((cfg.n_tags + 2, cfg.n_tags + 2))
        )
        self._char_id_cache = {}

    # -- parameters -------------------------------------------------------

    def add_target_encoder(self, rng, init_from="src"):
        enc = Encoder(self.cfg, rng)
        if init_from is not None:
            enc.copy_from(self.encoders[init_from])
        self.encoders["tgt"] = enc
        return enc

    def effective_trans(self):
        return self.head["trans"] + self.trans_mask

    def named_parameters(self, lang):
        """Trainable tensors of one language's model view (theta_lang).

        The shared char table and head appear in every view; tied recurrent
        directions appear once.
        """
        if lang not in self.encoders:
            raise UsageError(f"no encoder for language {lang!r}")
        params = {}
        if self.char_emb is not None:
            params["char_emb"] = self.char_emb
        enc = self.encoders[lang]
        levels = [("word", enc.word)]
        if enc.char is not None:
            levels.append(("char", enc.char))
        for level_name, bi in levels:
            for tag, cell in bi.directions():
                for tname, tensor in cell.tensors().items():
                    params[f"enc.{lang}.{level_name}.{tag}.{tname}"] = tensor
        for name, tensor in self.head.items():
            params[f"head.{name}"] = tensor
        return params

    def all_parameters(self):
        params = {}
        for lang in self.encoders:
            params.update(self.named_parameters(lang))
        return params

    def parameter_counts(self):
        """Per-section trainable parameter counts.

        recurrent_and_head excludes the char table; total includes it.
        """
        counts = {"char_level": 0, "word_level": 0, "head": 0, "char_table": 0}
        for name, tensor in self.all_parameters().items():
            if name == "char_emb":
                counts["char_table"] += tensor.size
            elif ".char." in name:
                counts["char_level"] += tensor.size
            elif ".word." in name:
                counts["word_level"] += tensor.size
            else:
                counts["head"] += tensor.size
        counts["recurrent_and_head"] = (
            counts["char_level"] + counts["word_level"] + counts["head"]
        )
        counts["total"] = counts["recurrent_and_head"] + counts["char_table"]
        return counts

    # -- input preparation --------------------------------------------------

    def char_ids(self, token):
        cached = self._char_id_cache.get(token)
        if cached is None:
            unk = self.char_vocab[UNK_CHAR]
            cached = np.array(
                [self.char_vocab.get(ch, unk) for ch in token], dtype=np.int64
            )
            self._char_id_cache[token] = cached
        return cached

    def prepare(self, table, tokens, tags=None):
        """Bind a sentence to word vectors, char ids, and tag ids."""
        vecs = np.vstack([table.lookup(t) for t in tokens])
        tag_ids = None
        if tags is not None:
            try:
                tag_ids = [self.tag_index[t] for t in tags]
            except KeyError as exc:
                raise UsageError(f"tag {exc.args[0]!r} not in the inventory")
        return PreparedSentence(list(tokens), vecs, tag_ids)


@dataclass
class PreparedSentence:
    tokens: list
    word_vecs: np.ndarray
    tag_ids: list = None

    def __len__(self):
        return len(self.tokens)


def transition_mask(tags, scheme):
    """Additive mask (0 or MASK_VALUE) forbidding scheme-invalid transitions."""
    k = len(tags)
    bos, eos = k, k + 1
    mask = np.zeros((k + 2, k + 2))
    parsed = [split_label(t, scheme) for t in tags]

    def start_ok(prefix, typ):
        if prefix in ("O", "B", "S"):
            return True
        return scheme == IOB1 and prefix == "I"

    def follows_ok(p1, t1, p2, t2):
        if scheme == IOB1:
            if p2 == "B":
                return p1 in "BI" and t1 == t2
            return True
        if p2 == "I":
            return p1 in "BI" and t1 == t2
        if p2 == "E":
            return p1 in "BI" and t1 == t2
        if scheme == IOBES and p1 in "BI":
            return p2 in "IE" and t1 == t2
        return True

    def end_ok(prefix):
        return not (scheme == IOBES and prefix in "BI")

    for j, (p2, t2) in enumerate(parsed):
        if not start_ok(p2, t2):
            mask[bos, j] = MASK_VALUE
    for i, (p1, t1) in enumerate(parsed):
        if not end_ok(p1):
            mask[i, eos] = MASK_VALUE
        for j, (p2, t2) in enumerate(parsed):
            if not follows_ok(p1, t1, p2, t2):
                mask[i, j] = MASK_VALUE
    return mask


# ---------------------------------------------------------------------------
# Forward / backward through the whole pipeline


def encode_token_chars(model, lang, token):
    """Character bi-encoder representation of one token (2 * char_hidden)."""
    enc = model.encoders[lang]
    if enc.char is None:
        raise UsageError("model variant has no character encoder")
    xs = model.char_emb[model.char_ids(token)]
    final, _ = bilstm_final(enc.char, xs)
    return final


def embed_sentence(model, lang, table, tokens, train=False, rng=None,
                   mask=None):
    """Per-token concat of the char representation and the word vector.

    Training mode applies an inverted dropout mask on the rows; pass `mask`
    to fix it (gradient checks), or `rng` to draw one.
    """
    prep = model.prepare(table, tokens)
    x, _ = _embed_forward(model, lang, prep)
    if train and model.cfg.dropout > 0:
        if mask is None:
            mask = dropout_mask(rng, x.shape, model.cfg.dropout)
        x = x * mask
    return x


def dropout_mask(rng, shape, rate):
    return (rng.uniform(shape) >= rate) / (1.0 - rate)


def _embed_forward(model, lang, prep):
    """(m, input_dim) rows plus the char caches needed for backward."""
    enc = model.encoders[lang]
    if enc.char is None:
        return prep.word_vecs.copy(), None
    reprs = {}
    for token in prep.tokens:
        if token not in reprs:
            ids = model.char_ids(token)
            final, cache = bilstm_final(enc.char, model.char_emb[ids])
            reprs[token] = (final, cache, ids)
    x = np.empty((len(prep), model.cfg.input_dim))
    for t, token in enumerate(prep.tokens):
        x[t, : 2 * model.cfg.char_hidden] = reprs[token][0]
        x[t, 2 * model.cfg.char_hidden :] = prep.word_vecs[t]
    return x, reprs


def word_context(model, lang, x):
    """Contextual states from the word-level bi-encoder (m, 2 * word_hidden)."""
    states, _ = bilstm_states(model.encoders[lang].word, x)
    return states


def emission_scores(model, states):
    """Log-domain node potentials: the per-tag scoring matrix applied to
    tanh(dense(state)), one row per position (m, K)."""
    t = np.tanh(states @ model.head["dense_w"].T + model.head["dense_b"])
    return t @ model.head["tag_w"].T


def sentence_forward(model, lang, prep, mask=None):
    """Full pipeline forward; returns (scores, cache) for one sentence."""
    x, char_reprs = _embed_forward(model, lang, prep)
    if mask is not None:
        x = x * mask
    enc = model.encoders[lang]
    states, word_cache = bilstm_states(enc.word, x)
    t = np.tanh(states @ model.head["dense_w"].T + model.head["dense_b"])
    scores = t @ model.head["tag_w"].T
    cache = (prep, x, char_reprs, word_cache, states, t, mask)
    return scores, cache


def sentence_nll(model, lang, table, tokens, tags, mask=None):
    """Loss of one labeled sentence; pure given parameters and mask."""
    prep = model.prepare(table, tokens, tags)
    scores, _ = sentence_forward(model, lang, prep, mask)
    return crf_nll(scores, model.effective_trans(), prep.tag_ids)


def _accumulate(grads, name, value):
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value.copy() if isinstance(value, np.ndarray) else value


def _cell_grads_into(grads, prefix, bi, grads_f, grads_b):
    directions = [("f", grads_f)]
    if bi.tied:
        for name, val in grads_b.items():
            grads_f[name] = grads_f[name] + val
    else:
        directions.append(("b", grads_b))
    for tag, cell_grads in directions:
        for name, val in cell_grads.items():
            _accumulate(grads, f"{prefix}.{tag}.{name}", val)


def sentence_backward(model, lang, scores, cache, dscores, dtrans, grads):
    """Backprop one sentence's dscores/dtrans into the grads dict."""
    prep, x, char_reprs, word_cache, states, t, mask = cache
    enc = model.encoders[lang]
    _accumulate(grads, "head.trans", dtrans)
    _accumulate(grads, "head.tag_w", dscores.T @ t)
    dt = dscores @ model.head["tag_w"]
    dzh = dt * (1.0 - t * t)
    _accumulate(grads, "head.dense_w", dzh.T @ states)
    _accumulate(grads, "head.dense_b", dzh.sum(axis=0))
    dstates = dzh @ model.head["dense_w"]
    dx, grads_f, grads_b = bilstm_states_backward(enc.word, word_cache, dstates)
    _cell_grads_into(grads, f"enc.{lang}.word", enc.word, grads_f, grads_b)
    if mask is not None:
        dx = dx * mask
    if enc.char is None:
        return
    cdim = 2 * model.cfg.char_hidden
    dchar = {}
    for pos, token in enumerate(prep.tokens):
        if token in dchar:
            dchar[token] += dx[pos, :cdim]
        else:
            dchar[token] = dx[pos, :cdim].copy()
    demb = np.zeros_like(model.char_emb)
    touched = False
    for token, dfinal in dchar.items():
        _, char_cache, ids = char_reprs[token]
        dxs, grads_f, grads_b = bilstm_final_backward(
            enc.char, char_cache, dfinal, len(ids)
        )
        _cell_grads_into(grads, f"enc.{lang}.char", enc.char, grads_f, grads_b)
        np.add.at(demb, ids, dxs)
        touched = True
    if touched:
        _accumulate(grads, "char_emb", demb)


def backward_pass(model, lang, table, batch, masks=None):
    """Mean-batch loss and its gradient for every trainable tensor of
    theta_lang.

    batch is a list of (tokens, tags) pairs or PreparedSentence objects with
    tag_ids; masks, when given, fixes the per-sentence dropout masks.
    """
    if not batch:
        raise UsageError("empty batch")
    grads = {}
    total = 0.0
    trans = model.effective_trans()
    scale = 1.0 / len(batch)
    for idx, item in enumerate(batch):
        if isinstance(item, PreparedSentence):
            prep = item
        else:
            tokens, tags = item
            prep = model.prepare(table, tokens, tags)
        if prep.tag_ids is None:
            raise UsageError("backward_pass needs labeled sentences")
        mask = masks[idx] if masks is not None else None
        scores, cache = sentence_forward(model, lang, prep, mask)
        nll, dscores, dtrans = crf_nll_grads(scores, trans, prep.tag_ids)
        total += nll
        sentence_backward(
            model, lang, scores, cache, dscores * scale, dtrans * scale, grads
        )
    loss = total * scale
    if not np.isfinite(loss):
        raise NumericalError("non-finite training loss")
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericalError(f"non-finite gradient for {name}")
    return loss, grads


def batch_nll(model, lang, table, batch, masks=None):
    """Mean-batch loss only (the finite-difference oracle calls this)."""
    total = 0.0
    trans = model.effective_trans()
    for idx, item in enumerate(batch):
        tokens, tags = item
        mask = masks[idx] if masks is not None else None
        total += sentence_nll(model, lang, table, tokens, tags, mask)
    return total / len(batch)


def predict(model, lang, table, tokens):
    """Viterbi tags for one sentence, evaluation mode (no dropout)."""
    prep = model.prepare(table, tokens)
    scores, _ = sentence_forward(model, lang, prep)
    path = viterbi(scores, model.effective_trans())
    return [model.cfg.tags[i] for i in path]
