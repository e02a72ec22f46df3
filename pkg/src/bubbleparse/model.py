"""Greedy neural scorer for the Bubble-Hybrid parser.

Everything is plain numpy in float64 with hand-written backpropagation.

Token vectors are ``[word; pos; mean of words in a 3-token window]`` (the
root gets its own learned vector).  A singleton bubble uses its token
vector; a non-singleton bubble uses ``tanh(W_g . mean(conj children))`` or
the plain mean.  Each bubble vector fed to a scorer is its base vector with
a singleton/open/closed state embedding appended.

Three one-hidden-layer ReLU MLPs score transitions (softmax over valid
kinds), labels, and boundary re-attachments (logistic).

Under teacher forcing the computation graph of a sentence depends only on
its gold tree, so each training tree is compiled once into a
:class:`_Program` (node wiring plus decision tables) and every epoch just
re-evaluates the numbers.
"""
from __future__ import annotations

import copy
import dataclasses
import logging
import math
import struct
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .bubbles import ROOT, Arc, Bubble, BubbleTree, Sentence
from .errors import (
    ContractError,
    DimensionError,
    FormatError,
    PreconditionError,
    StateError,
    TrainingDataError,
    UnsupportedStructureError,
)
from .evaluation import score_coordinations
from .oracle import check_supported, derive_oracle
from .transitions import (
    FIRST_CONJUNCT,
    LABELED,
    Configuration,
    Kind,
    Transition,
    apply,
    extract_tree,
    initial_config,
    is_terminal,
    valid_kinds,
)
from .validation import is_projective, validate_projective

log = logging.getLogger(__name__)

SINGLETON, OPEN, CLOSED = 0, 1, 2
STATE_NAMES = ("singleton", "open", "closed")
N_KINDS = len(Kind)
UNK, BOUNDARY = 0, 1
MAGIC = b"BBLPARSE"
FORMAT_VERSION = 1


@dataclass
class HyperParams:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    minibatch_size: int = 8
    grad_clip_norm: float = 5.0
    mlp_hidden: int = 400
    dropout: float = 0.3
    d_w: int = 100
    d_p: int = 32
    d_state: int = 16
    seed: int = 0
    epochs: int = 30
    stack_feature_count: int = 3
    composition_mode: str = "parameterized"
    rescoring_enabled: bool = True
    warmup_steps: int = 800
    lr_decay: float = 0.1
    patience: int = 5
    max_decays: int = 3
    init_scale: float = 0.1

    def __post_init__(self):
        if self.stack_feature_count not in (1, 2, 3):
            raise ValueError("stack_feature_count must be 1, 2 or 3")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.composition_mode not in ("parameterized", "mean"):
            raise ValueError("composition_mode must be 'parameterized' or 'mean'")
        for name in ("minibatch_size", "mlp_hidden", "d_w", "d_p", "d_state"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0 or self.warmup_steps < 0 or self.patience < 1 or self.max_decays < 0:
            raise ValueError("epochs/warmup_steps/max_decays must be >= 0 and patience >= 1")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0:
            raise ValueError("learning_rate and grad_clip_norm must be positive")

    @property
    def d(self) -> int:
        return 2 * self.d_w + self.d_p

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping[str, object]) -> "HyperParams":
        """Build from (possibly string-valued) settings; unknown keys are an error."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in fields:
                raise ValueError(f"unknown hyperparameter {key!r}")
            default = getattr(cls, key)
            kwargs[key] = _coerce(raw, type(default), key)
        return cls(**kwargs)

    def replace(self, **changes) -> "HyperParams":
        return dataclasses.replace(self, **changes)


def _coerce(raw, typ, key):
    if isinstance(raw, typ) and not (typ is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if typ is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ValueError(f"bad value {raw!r} for {key} (expected {typ.__name__})") from None


# ---------------------------------------------------------------------------
# parameters


class Model:
    """Parameters plus the vocabularies they are indexed by."""

    def __init__(self, hyper: HyperParams, words, tags, labels, params: dict[str, np.ndarray]):
        self.hyper = hyper
        self.words = tuple(words)
        self.tags = tuple(tags)
        self.labels = tuple(labels)
        self.params = params
        self.word_index = {w: i + 2 for i, w in enumerate(self.words)}
        self.tag_index = {t: i + 1 for i, t in enumerate(self.tags)}
        self.label_index = {l: i for i, l in enumerate(self.labels)}
        self.history: list[dict] = []
        self._check_shapes()

    @property
    def width(self) -> int:
        """Width of a full bubble vector (base + state embedding)."""
        return self.hyper.d + self.hyper.d_state

    def shapes(self) -> dict[str, tuple[int, ...]]:
        hp = self.hyper
        d, D, H, k = hp.d, self.width, hp.mlp_hidden, hp.stack_feature_count
        return {
            "word_emb": (len(self.words) + 2, hp.d_w),
            "pos_emb": (len(self.tags) + 1, hp.d_p),
            "root_vec": (d,),
            "state_emb": (3, hp.d_state),
            "W_g": (d, d),
            "pad": (k + 1, D),
            "trans_W1": ((k + 1) * D, H),
            "trans_b1": (H,),
            "trans_W2": (H, N_KINDS),
            "trans_b2": (N_KINDS,),
            "lbl_W1": (2 * D, H),
            "lbl_b1": (H,),
            "lbl_W2": (H, len(self.labels)),
            "lbl_b2": (len(self.labels),),
            "re_W1": (3 * D, H),
            "re_b1": (H,),
            "re_W2": (H, 1),
            "re_b2": (1,),
        }

    def _check_shapes(self) -> None:
        want = self.shapes()
        if set(want) != set(self.params):
            raise DimensionError(f"parameter blocks {sorted(self.params)} do not match {sorted(want)}")
        for name, shape in want.items():
            if self.params[name].shape != shape:
                raise DimensionError(f"{name} has shape {self.params[name].shape}, expected {shape}")

    @classmethod
    def initialize(cls, hyper: HyperParams, words, tags, labels) -> "Model":
        if not labels:
            raise ContractError("label vocabulary is empty")
        rng = np.random.default_rng(hyper.seed)
        dummy = cls.__new__(cls)
        dummy.hyper, dummy.words, dummy.tags, dummy.labels = hyper, tuple(words), tuple(tags), tuple(labels)
        params = {}
        s = hyper.init_scale
        for name, shape in cls.shapes(dummy).items():
            if name in ("word_emb", "pos_emb", "root_vec", "state_emb", "pad"):
                params[name] = rng.normal(0.0, s, size=shape)
            elif name == "W_g" or name.endswith(("W1", "W2")):
                limit = math.sqrt(6.0 / (shape[0] + shape[1]))
                params[name] = rng.uniform(-limit, limit, size=shape)
            else:
                params[name] = np.zeros(shape)
        return cls(hyper, words, tags, labels, params)

    def copy(self) -> "Model":
        m = Model(self.hyper, self.words, self.tags, self.labels, {k: v.copy() for k, v in self.params.items()})
        m.history = copy.deepcopy(self.history)
        return m

    def word_ids(self, sentence: Sentence) -> np.ndarray:
        return np.array([self.word_index.get(t.form, UNK) for t in sentence.tokens], dtype=np.int64)

    def tag_ids(self, sentence: Sentence) -> np.ndarray:
        return np.array([self.tag_index.get(t.upos, UNK) for t in sentence.tokens], dtype=np.int64)


def vocabularies(trees: Iterable[BubbleTree]) -> tuple[list[str], list[str], list[str]]:
    words, tags, labels = set(), set(), set()
    for t in trees:
        for tok in t.sentence.tokens:
            words.add(tok.form)
            tags.add(tok.upos)
        labels.update(a.label for a in t.arcs)
    labels.add(FIRST_CONJUNCT)
    return sorted(words), sorted(tags), sorted(labels)


# ---------------------------------------------------------------------------
# forward pieces


def _encode_ids(P: dict, words: np.ndarray, tags: np.ndarray) -> np.ndarray:
    E = P["word_emb"][words]
    b = P["word_emb"][BOUNDARY][None, :]
    padded = np.vstack([b, E, b])
    window = (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0
    X = np.hstack([E, P["pos_emb"][tags], window])
    return np.vstack([P["root_vec"][None, :], X])


def encode(sentence: Sentence, model: Model) -> np.ndarray:
    """Token vectors, shape (n + 1, 2*d_w + d_p); row 0 is the root."""
    return _encode_ids(model.params, model.word_ids(sentence), model.tag_ids(sentence))


def compose(child_vectors: Sequence[np.ndarray], W_g: np.ndarray | None, mode: str = "parameterized") -> np.ndarray:
    if len(child_vectors) == 0:
        raise ContractError("compose needs at least one child vector")
    widths = {np.shape(v) for v in child_vectors}
    if len(widths) != 1:
        raise DimensionError(f"child vectors have different shapes: {sorted(widths)}")
    m = np.mean(np.asarray(child_vectors, dtype=np.float64), axis=0)
    if mode == "mean":
        return m
    if W_g is None or W_g.shape != (m.shape[0], m.shape[0]):
        raise DimensionError(f"W_g must be square of size {m.shape[0]}")
    return np.tanh(W_g @ m)


def _mlp(P: dict, prefix: str, X: np.ndarray, dropout: float = 0.0, rng=None, signs: list | None = None):
    a = X @ P[prefix + "_W1"] + P[prefix + "_b1"]
    if signs is not None:
        signs.append(a > 0)
    h = np.maximum(a, 0.0)
    mask = None
    if dropout > 0.0:
        mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
        h = h * mask
    out = h @ P[prefix + "_W2"] + P[prefix + "_b2"]
    return out, (X, a, h, mask)


def _mlp_backward(P: dict, prefix: str, cache, dout: np.ndarray, G: dict) -> np.ndarray:
    X, a, h, mask = cache
    G[prefix + "_W2"] += h.T @ dout
    G[prefix + "_b2"] += dout.sum(axis=0)
    dh = dout @ P[prefix + "_W2"].T
    if mask is not None:
        dh *= mask
    da = dh * (a > 0)
    G[prefix + "_W1"] += X.T @ da
    G[prefix + "_b1"] += da.sum(axis=0)
    return da @ P[prefix + "_W1"].T


def _masked_softmax(logits: np.ndarray, valid: np.ndarray) -> np.ndarray:
    z = np.where(valid, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.where(valid, np.exp(z), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def full_vector(model: Model, base: np.ndarray, state: int) -> np.ndarray:
    return np.concatenate([base, model.params["state_emb"][state]])


# ---------------------------------------------------------------------------
# bubble vectors for a configuration or tree


def _conj_children(arcs: Iterable[Arc], bid) -> list:
    kids = [a.dependent for a in arcs if a.head == bid and a.label == FIRST_CONJUNCT]
    return kids


def _base_vectors(model: Model, X: np.ndarray, contents: Sequence, arcs: Sequence[Arc], ids: Iterable) -> dict:
    """Base vectors for bubble ids; composites compose their conj children."""
    P, mode = model.params, model.hyper.composition_mode
    cache: dict = {}
    n = X.shape[0] - 1

    def base(bid):
        if bid in cache:
            return cache[bid]
        if isinstance(bid, int) and bid <= n:
            v = X[bid]
        else:
            kids = _conj_children(arcs, bid)
            if not kids:
                raise UnsupportedStructureError(f"bubble {bid!r} has no conj child to compose")
            v = compose([base(k) for k in kids], P["W_g"], mode)
        cache[bid] = v
        return v

    for bid in ids:
        base(bid)
    return cache


def config_vectors(config: Configuration, model: Model, X: np.ndarray | None = None) -> dict[int, np.ndarray]:
    """Full vectors (base + state) for every bubble of a configuration."""
    if X is None:
        X = encode(config.sentence, model)
    ids = range(len(config.contents))
    bases = _base_vectors(model, X, config.contents, config.arcs, ids)
    out = {}
    for bid in ids:
        if len(config.contents[bid]) == 1:
            st = SINGLETON
        else:
            st = OPEN if bid in config.open else CLOSED
        out[bid] = full_vector(model, bases[bid], st)
    return out


def tree_vectors(tree: BubbleTree, model: Model, X: np.ndarray | None = None) -> dict:
    """Full vectors for every bubble of a finished tree (composites closed)."""
    if X is None:
        X = encode(tree.sentence, model)
    ids = [b.id for b in tree.bubbles]
    singles = {bid: node for node, bid in tree.singleton_ids.items()}
    P, mode = model.params, model.hyper.composition_mode
    cache = {bid: X[node] for bid, node in singles.items()}

    def base(bid):
        if bid not in cache:
            kids = tree.conjuncts(bid)
            if not kids:
                raise UnsupportedStructureError(f"bubble {bid!r} has no conj child to compose")
            cache[bid] = compose([base(a.dependent) for a in kids], P["W_g"], mode)
        return cache[bid]

    out = {}
    for bid in ids:
        out[bid] = full_vector(model, base(bid), SINGLETON if bid in singles else CLOSED)
    return out


def _slots(c: Configuration, k: int) -> list:
    st = c.stack
    out = [st[-i] if len(st) >= i else None for i in range(k, 0, -1)]
    out.append(c.buffer[0] if c.buffer else None)
    return out


def _transition_features(c: Configuration, vectors: Mapping, model: Model) -> np.ndarray:
    pad = model.params["pad"]
    parts = []
    for j, bid in enumerate(_slots(c, model.hyper.stack_feature_count)):
        parts.append(pad[j] if bid is None else vectors[bid])
    return np.concatenate(parts)


def _label_pair(c: Configuration, kind: Kind, vectors: Mapping, model: Model) -> tuple[np.ndarray, np.ndarray]:
    st, buf = c.stack, c.buffer
    if kind == Kind.LEFT_ARC:
        return vectors[buf[0]], vectors[st[-1]]
    if kind in (Kind.RIGHT_ARC, Kind.BUBBLE_ATTACH):
        return vectors[st[-2]], vectors[st[-1]]
    if kind == Kind.BUBBLE_OPEN:
        d = model.hyper.d
        head = compose([vectors[st[-2]][:d], vectors[st[-1]][:d]], model.params["W_g"], model.hyper.composition_mode)
        return full_vector(model, head, OPEN), vectors[st[-1]]
    raise ContractError(f"{Kind(kind).name} carries no label")


def score_transitions(config: Configuration, vectors: Mapping, model: Model) -> dict[Kind, float]:
    """Probabilities of the valid transition kinds (invalid kinds get 0)."""
    kinds = valid_kinds(config)
    if not kinds:
        raise StateError("no valid transition in this configuration")
    valid = np.zeros(N_KINDS, dtype=bool)
    valid[[int(k) for k in kinds]] = True
    logits, _ = _mlp(model.params, "trans", _transition_features(config, vectors, model)[None, :])
    p = _masked_softmax(logits, valid[None, :])[0]
    return {Kind(i): float(p[i]) for i in range(N_KINDS)}


def score_labels(config: Configuration, kind: Kind, vectors: Mapping, model: Model) -> dict[str, float]:
    if Kind(kind) not in LABELED:
        raise ContractError(f"{Kind(kind).name} carries no label")
    h, d = _label_pair(config, Kind(kind), vectors, model)
    logits, _ = _mlp(model.params, "lbl", np.concatenate([h, d])[None, :])
    p = _softmax(logits)[0]
    return {l: float(p[i]) for i, l in enumerate(model.labels)}


# ---------------------------------------------------------------------------
# boundary rescoring


def _depth_order(tree: BubbleTree) -> list:
    depth = {}
    for bid in tree.composite_ids():
        k, v = 0, bid
        while v in tree.head_arc:
            v = tree.head_arc[v].head
            k += 1
        depth[bid] = k
    return sorted(depth, key=lambda b: (depth[b], min(tree.content(b))))


def boundary_candidates(tree: BubbleTree, alpha) -> list[tuple[object, object, bool]]:
    """At most one (dependent, conjunct, currently_shared) candidate per side.

    Left side: the first conjunct's dependent whose projection starts at the
    bubble's left edge (private), else the bubble's external dependent ending
    just before it (shared).  The right side mirrors this with the last
    conjunct.
    """
    internal = tree.internal_children(alpha)
    if len(internal) < 2:
        return []
    content = tree.content(alpha)
    lo, hi = min(content), max(content)
    ext = tree.external_children(alpha)
    out = []
    sides = (
        (internal[0], lambda p: min(p) == lo, lambda p: max(p) == lo - 1),
        (internal[-1], lambda p: max(p) == hi, lambda p: min(p) == hi + 1),
    )
    for arc, at_edge, adjacent in sides:
        if arc.label != FIRST_CONJUNCT:
            continue
        f = arc.dependent
        priv = [a.dependent for a in tree.external_children(f) if at_edge(tree.projection(a.dependent))]
        if priv:
            out.append((priv[0], f, False))
            continue
        shared = [a.dependent for a in ext if adjacent(tree.projection(a.dependent))]
        if shared:
            out.append((shared[0], f, True))
    return out


def reattach(tree: BubbleTree, alpha, dep, new_head) -> BubbleTree | None:
    """Move ``dep`` under ``new_head`` and refit ``alpha``'s content; None if invalid."""
    internal = [a.dependent for a in tree.internal_children(alpha)]
    old = tree.head_arc[dep]
    arcs = tuple(Arc(new_head, old.label, dep) if a.dependent == dep else a for a in tree.arcs)
    tmp = BubbleTree(tree.sentence, tree.bubbles, arcs)
    content = frozenset().union(*(tmp.projection(x) for x in internal))
    bubbles = tuple(Bubble(b.id, content) if b.id == alpha else b for b in tree.bubbles)
    new = BubbleTree(tree.sentence, bubbles, arcs)
    if not is_projective(new):
        return None
    if [a.dependent for a in new.internal_children(alpha)] != internal:
        return None
    return new


def rescore_boundaries(
    tree: BubbleTree,
    vectors: Mapping,
    model: Model | None = None,
    scorer: Callable[[np.ndarray, np.ndarray, np.ndarray], float] | None = None,
) -> BubbleTree:
    """Re-decide shared vs private attachment at each bubble boundary.

    Bubbles are visited top-down; a candidate moves to the bubble when the
    probability is >= 0.5 and to the conjunct otherwise.  Moves that break
    well-formedness or projectivity are skipped.
    """
    if scorer is None:
        if model is None:
            raise ContractError("rescore_boundaries needs a model or a scorer")

        def scorer(vd, va, vf):
            z, _ = _mlp(model.params, "re", np.concatenate([vd, va, vf])[None, :])
            return float(_sigmoid(z[0, 0]))

    for alpha in _depth_order(tree):
        for dep, conj, shared in boundary_candidates(tree, alpha):
            p = scorer(vectors[dep], vectors[alpha], vectors[conj])
            want_shared = p >= 0.5
            if want_shared == shared:
                continue
            moved = reattach(tree, alpha, dep, alpha if want_shared else conj)
            if moved is not None:
                tree = moved
    return tree


# ---------------------------------------------------------------------------
# greedy inference


def greedy_decode(
    sentence: Sentence, choose: Callable[[Configuration, list[Kind]], Transition]
) -> BubbleTree:
    """Run ``choose`` from the initial configuration to a terminal one."""
    c = initial_config(sentence)
    step = 0
    while not is_terminal(c):
        kinds = valid_kinds(c)
        if not kinds:
            raise StateError("stuck in a non-terminal configuration with no valid transition")
        c = apply(c, choose(c, kinds), step)
        step += 1
    return extract_tree(c)


class _Decoder:
    """Incremental bubble vectors for one sentence during greedy parsing."""

    def __init__(self, model: Model, sentence: Sentence):
        self.model = model
        self.X = encode(sentence, model)
        n = len(sentence)
        self.base = {i: self.X[i] for i in range(n + 1)}
        self.state = {i: SINGLETON for i in range(n + 1)}
        self.conj: dict[int, list[int]] = {}

    def vectors(self, ids) -> dict:
        S = self.model.params["state_emb"]
        return {b: np.concatenate([self.base[b], S[self.state[b]]]) for b in ids if b is not None}

    def choose(self, c: Configuration, kinds: list[Kind]) -> Transition:
        model = self.model
        k = model.hyper.stack_feature_count
        slots = _slots(c, k)
        wanted = set(slots) | set(c.stack[-2:]) | set(c.buffer[:1])
        vec = self.vectors(wanted)
        valid = np.zeros(N_KINDS, dtype=bool)
        valid[[int(x) for x in kinds]] = True
        logits, _ = _mlp(model.params, "trans", _transition_features(c, vec, model)[None, :])
        logits = np.where(valid, logits[0], -np.inf)
        kind = Kind(int(np.argmax(logits)))
        label = None
        if kind in LABELED:
            h, d = _label_pair(c, kind, vec, model)
            lg, _ = _mlp(model.params, "lbl", np.concatenate([h, d])[None, :])
            label = model.labels[int(np.argmax(lg[0]))]
        t = Transition(kind, label)
        self._update(c, t)
        return t

    def _update(self, c: Configuration, t: Transition) -> None:
        P, mode = self.model.params, self.model.hyper.composition_mode
        st = c.stack
        if t.kind == Kind.BUBBLE_OPEN:
            alpha = len(c.contents)
            kids = [st[-2]] + ([st[-1]] if t.label == FIRST_CONJUNCT else [])
            self.conj[alpha] = kids
            self.base[alpha] = compose([self.base[x] for x in kids], P["W_g"], mode)
            self.state[alpha] = OPEN
        elif t.kind == Kind.BUBBLE_ATTACH and t.label == FIRST_CONJUNCT:
            self.conj[st[-2]].append(st[-1])
            self.base[st[-2]] = compose([self.base[x] for x in self.conj[st[-2]]], P["W_g"], mode)
        elif t.kind == Kind.BUBBLE_CLOSE:
            self.state[st[-1]] = CLOSED

    def final_vectors(self) -> dict:
        return self.vectors(list(self.base))


def parse(sentence: Sentence, model: Model, rescoring: bool | None = None) -> BubbleTree:
    """Greedy parse; boundary rescoring runs afterwards unless disabled."""
    dec = _Decoder(model, sentence)
    tree = greedy_decode(sentence, dec.choose)
    if rescoring is None:
        rescoring = model.hyper.rescoring_enabled
    if rescoring:
        tree = rescore_boundaries(tree, dec.final_vectors(), model)
    return tree


# ---------------------------------------------------------------------------
# compiled training programs


@dataclass
class _Program:
    sent_id: str
    words: np.ndarray
    tags: np.ndarray
    comps: list[tuple[int, ...]]
    t_nodes: np.ndarray
    t_states: np.ndarray
    t_valid: np.ndarray
    t_gold: np.ndarray
    l_nodes: np.ndarray
    l_states: np.ndarray
    l_gold: np.ndarray
    r_nodes: np.ndarray
    r_states: np.ndarray
    r_gold: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.words) + 1 + len(self.comps)


def compile_program(model: Model, tree: BubbleTree) -> _Program:
    """Trace the oracle path of ``tree`` into node wiring and decision tables."""
    sent = tree.sentence
    n = len(sent)
    k = model.hyper.stack_feature_count
    oracle = derive_oracle(tree)
    comps: list[tuple[int, ...]] = []

    def new_comp(children) -> int:
        comps.append(tuple(children))
        return n + len(comps)

    node = {i: i for i in range(n + 1)}
    state = {i: SINGLETON for i in range(n + 1)}
    conj: dict[int, list[int]] = {}
    T_nodes, T_states, T_valid, T_gold = [], [], [], []
    L_nodes, L_states, L_gold = [], [], []
    c = initial_config(sent)
    for t in oracle.transitions:
        slots = _slots(c, k)
        T_nodes.append([-1 if b is None else node[b] for b in slots])
        T_states.append([0 if b is None else state[b] for b in slots])
        mask = [False] * N_KINDS
        for kind in valid_kinds(c):
            mask[int(kind)] = True
        T_valid.append(mask)
        T_gold.append(int(t.kind))
        st, buf = c.stack, c.buffer
        placeholder = None
        if t.kind in LABELED:
            if t.label not in model.label_index:
                raise TrainingDataError(f"{sent.sent_id}: label {t.label!r} is not in the label vocabulary")
            if t.kind == Kind.LEFT_ARC:
                h, d = buf[0], st[-1]
                L_nodes.append([node[h], node[d]])
                L_states.append([state[h], state[d]])
            elif t.kind == Kind.BUBBLE_OPEN:
                placeholder = new_comp([node[st[-2]], node[st[-1]]])
                L_nodes.append([placeholder, node[st[-1]]])
                L_states.append([OPEN, state[st[-1]]])
            else:
                h, d = st[-2], st[-1]
                L_nodes.append([node[h], node[d]])
                L_states.append([state[h], state[d]])
            L_gold.append(model.label_index[t.label])
        if t.kind == Kind.BUBBLE_OPEN:
            alpha = len(c.contents)
            if t.label == FIRST_CONJUNCT:
                conj[alpha] = [node[st[-2]], node[st[-1]]]
                node[alpha] = placeholder
            else:
                conj[alpha] = [node[st[-2]]]
                node[alpha] = new_comp(conj[alpha])
            state[alpha] = OPEN
        elif t.kind == Kind.BUBBLE_ATTACH and t.label == FIRST_CONJUNCT:
            conj[st[-2]].append(node[st[-1]])
            node[st[-2]] = new_comp(conj[st[-2]])
        elif t.kind == Kind.BUBBLE_CLOSE:
            state[st[-1]] = CLOSED
        c = apply(c, t)
    built = extract_tree(c)
    R_nodes, R_states, R_gold = [], [], []
    for alpha in _depth_order(built):
        for dep, f, shared in boundary_candidates(built, alpha):
            R_nodes.append([node[dep], node[alpha], node[f]])
            R_states.append([state[dep], CLOSED, state[f]])
            R_gold.append(1.0 if shared else 0.0)
    as_int = lambda rows, w: np.array(rows, dtype=np.int64).reshape(-1, w)  # noqa: E731
    return _Program(
        sent.sent_id,
        model.word_ids(sent),
        model.tag_ids(sent),
        comps,
        as_int(T_nodes, k + 1),
        as_int(T_states, k + 1),
        np.array(T_valid, dtype=bool).reshape(-1, N_KINDS),
        np.array(T_gold, dtype=np.int64),
        as_int(L_nodes, 2),
        as_int(L_states, 2),
        np.array(L_gold, dtype=np.int64),
        as_int(R_nodes, 3),
        as_int(R_states, 3),
        np.array(R_gold, dtype=np.float64),
    )


def _gather(V, S, pad, nodes, states, d):
    m, s = nodes.shape
    D = d + S.shape[1]
    F = np.empty((m, s * D))
    for j in range(s):
        idx = nodes[:, j]
        ok = idx >= 0
        F[ok, j * D : j * D + d] = V[idx[ok]]
        F[ok, j * D + d : (j + 1) * D] = S[states[ok, j]]
        if pad is not None and not ok.all():
            F[~ok, j * D : (j + 1) * D] = pad[j]
    return F


def _scatter(dF, nodes, states, d, dV, dS, dpad):
    m, s = nodes.shape
    D = dF.shape[1] // s
    for j in range(s):
        idx = nodes[:, j]
        ok = idx >= 0
        np.add.at(dV, idx[ok], dF[ok, j * D : j * D + d])
        np.add.at(dS, states[ok, j], dF[ok, j * D + d : (j + 1) * D])
        if dpad is not None and not ok.all():
            dpad[j] += dF[~ok, j * D : (j + 1) * D].sum(axis=0)


@dataclass
class BatchResult:
    loss: float
    grads: dict | None
    trans_correct: int = 0
    trans_total: int = 0
    label_correct: int = 0
    label_total: int = 0
    decisions_correct: int = 0


def batch_loss(
    model: Model,
    programs: Sequence[_Program],
    train: bool = False,
    rng=None,
    grads: bool = True,
    signs: list | None = None,
) -> BatchResult:
    """Summed transition/label cross-entropy plus rescoring log-loss, over the batch size.

    With ``train`` set, hidden-layer dropout is applied using ``rng``.
    ``signs`` collects the ReLU activation patterns when given a list.
    """
    P, hp = model.params, model.hyper
    d = hp.d
    dropout = hp.dropout if train else 0.0
    parameterized = hp.composition_mode == "parameterized"
    W_g = P["W_g"]

    # forward: node values
    offsets, blocks, comp_cache = [], [], []
    off = 0
    for prog in programs:
        n1 = len(prog.words) + 1
        V = np.empty((prog.n_nodes, d))
        V[:n1] = _encode_ids(P, prog.words, prog.tags)
        means = np.empty((len(prog.comps), d))
        for j, kids in enumerate(prog.comps):
            m = V[list(kids)].mean(axis=0)
            means[j] = m
            V[n1 + j] = np.tanh(W_g @ m) if parameterized else m
        comp_cache.append(means)
        blocks.append(V)
        offsets.append(off)
        off += prog.n_nodes
    V = np.vstack(blocks)

    def stack(attr, shift):
        arrs = []
        for o, prog in zip(offsets, programs):
            a = getattr(prog, attr)
            arrs.append(np.where(a >= 0, a + o, -1) if shift else a)
        return np.concatenate(arrs) if arrs else None

    tn, ts = stack("t_nodes", True), stack("t_states", False)
    tv, tg = stack("t_valid", False), stack("t_gold", False)
    ln, ls, lg = stack("l_nodes", True), stack("l_states", False), stack("l_gold", False)
    rn, rs, rg = stack("r_nodes", True), stack("r_states", False), stack("r_gold", False)
    S, pad = P["state_emb"], P["pad"]
    B = max(len(programs), 1)
    res = BatchResult(0.0, None)
    G = {k: np.zeros_like(v) for k, v in P.items()} if grads else None
    dV = np.zeros_like(V) if grads else None
    loss = 0.0

    trans_ok = np.zeros(0, dtype=bool)
    if len(tg):
        Ft = _gather(V, S, pad, tn, ts, d)
        logits, cache = _mlp(P, "trans", Ft, dropout, rng, signs)
        p = _masked_softmax(logits, tv)
        rows = np.arange(len(tg))
        loss -= np.log(p[rows, tg]).sum()
        pred = np.argmax(np.where(tv, logits, -np.inf), axis=1)
        trans_ok = pred == tg
        res.trans_correct, res.trans_total = int(trans_ok.sum()), len(tg)
        if grads:
            dlog = p.copy()
            dlog[rows, tg] -= 1.0
            dF = _mlp_backward(P, "trans", cache, dlog / B, G)
            _scatter(dF, tn, ts, d, dV, G["state_emb"], G["pad"])
    label_ok = np.zeros(0, dtype=bool)
    if len(lg):
        Fl = _gather(V, S, None, ln, ls, d)
        logits, cache = _mlp(P, "lbl", Fl, dropout, rng, signs)
        p = _softmax(logits)
        rows = np.arange(len(lg))
        loss -= np.log(p[rows, lg]).sum()
        label_ok = np.argmax(logits, axis=1) == lg
        res.label_correct, res.label_total = int(label_ok.sum()), len(lg)
        if grads:
            dlog = p.copy()
            dlog[rows, lg] -= 1.0
            dF = _mlp_backward(P, "lbl", cache, dlog / B, G)
            _scatter(dF, ln, ls, d, dV, G["state_emb"], None)
    if len(rg):
        Fr = _gather(V, S, None, rn, rs, d)
        z, cache = _mlp(P, "re", Fr, dropout, rng, signs)
        z = z[:, 0]
        loss += (np.logaddexp(0.0, z) - rg * z).sum()
        if grads:
            dz = (_sigmoid(z) - rg)[:, None] / B
            dF = _mlp_backward(P, "re", cache, dz, G)
            _scatter(dF, rn, rs, d, dV, G["state_emb"], None)

    # whole-decision accuracy: kind right and, for labeled kinds, label right
    if len(tg):
        labeled = np.isin(tg, [int(k) for k in LABELED])
        ok = trans_ok.copy()
        ok[np.flatnonzero(labeled)] &= label_ok
        res.decisions_correct = int(ok.sum())

    res.loss = float(loss / B)
    if not grads:
        return res

    # backward: compositions then encoder
    for o, prog, means in zip(offsets, programs, comp_cache):
        n1 = len(prog.words) + 1
        for j in range(len(prog.comps) - 1, -1, -1):
            g = dV[o + n1 + j]
            if not g.any():
                continue
            if parameterized:
                h = V[o + n1 + j]
                a = g * (1.0 - h * h)
                G["W_g"] += np.outer(a, means[j])
                dm = W_g.T @ a
            else:
                dm = g
            kids = prog.comps[j]
            dm = dm / len(kids)
            for kid in kids:
                dV[o + kid] += dm
        dX = dV[o : o + n1]
        G["root_vec"] += dX[0]
        dE = dX[1:]
        dw, dp = hp.d_w, hp.d_p
        np.add.at(G["word_emb"], prog.words, dE[:, :dw])
        np.add.at(G["pos_emb"], prog.tags, dE[:, dw : dw + dp])
        dwin = dE[:, dw + dp :] / 3.0
        padded = np.concatenate([[BOUNDARY], prog.words, [BOUNDARY]])
        np.add.at(G["word_emb"], padded[:-2], dwin)
        np.add.at(G["word_emb"], padded[1:-1], dwin)
        np.add.at(G["word_emb"], padded[2:], dwin)
    res.grads = G
    return res


# ---------------------------------------------------------------------------
# training


class _Adam:
    def __init__(self, params: dict, hp: HyperParams):
        self.hp = hp
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float) -> None:
        hp = self.hp
        self.t += 1
        b1, b2 = hp.adam_beta1, hp.adam_beta2
        c1, c2 = 1 - b1**self.t, 1 - b2**self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            params[k] -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + hp.adam_epsilon)


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale gradients in place to global L2 norm <= max_norm; returns the pre-clip norm."""
    norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def _check_training_tree(tree: BubbleTree) -> None:
    sid = tree.sentence.sent_id
    try:
        report = validate_projective(tree)
    except PreconditionError as exc:
        raise TrainingDataError(f"{sid}: tree is not well-formed ({exc})") from None
    if not report.ok:
        raise TrainingDataError(f"{sid}: tree is not projective ({report.first_condition})")
    try:
        check_supported(tree)
    except UnsupportedStructureError as exc:
        raise TrainingDataError(f"{sid}: {exc}") from None


def exact_f1(model: Model, trees: Sequence[BubbleTree]) -> float:
    pred = [parse(t.sentence, model) for t in trees]
    return score_coordinations(pred, trees, "exact").f1


def transition_accuracy(model: Model, trees: Sequence[BubbleTree], programs=None) -> float:
    """Teacher-forced share of oracle decisions predicted exactly (kind and label)."""
    programs = programs if programs is not None else [compile_program(model, t) for t in trees]
    ok = total = 0
    for i in range(0, len(programs), 64):
        r = batch_loss(model, programs[i : i + 64], grads=False)
        ok += r.decisions_correct
        total += r.trans_total
    return ok / total if total else 1.0


def train(
    train_trees: Sequence[BubbleTree],
    dev_trees: Sequence[BubbleTree] | None = None,
    hyper: HyperParams | None = None,
    on_round: Callable[[dict], None] | None = None,
) -> Model:
    """Teacher-forced training with Adam; returns the best dev exact-F1 checkpoint.

    Without dev trees the last epoch's parameters are returned.  The learning
    rate decays by ``lr_decay`` after ``patience`` rounds without a dev
    improvement, and training stops after ``max_decays`` decays.
    """
    hp = hyper or HyperParams()
    train_trees = list(train_trees)
    for t in train_trees:
        _check_training_tree(t)
    words, tags, labels = vocabularies(train_trees)
    model = Model.initialize(hp, words, tags, labels)
    if hp.epochs == 0 or not train_trees:
        return model
    programs = [compile_program(model, t) for t in train_trees]
    dev_trees = list(dev_trees or [])
    rng = np.random.default_rng(hp.seed + 1)
    opt = _Adam(model.params, hp)
    lr = hp.learning_rate
    best = None
    best_f1 = -1.0
    stale = decays = 0
    for epoch in range(1, hp.epochs + 1):
        order = rng.permutation(len(programs))
        total = 0.0
        for i in range(0, len(order), hp.minibatch_size):
            batch = [programs[j] for j in order[i : i + hp.minibatch_size]]
            r = batch_loss(model, batch, train=True, rng=rng)
            total += r.loss * len(batch)
            clip_gradients(r.grads, hp.grad_clip_norm)
            warm = min(1.0, (opt.t + 1) / hp.warmup_steps) if hp.warmup_steps else 1.0
            opt.step(model.params, r.grads, lr * warm)
        if not all(np.isfinite(v).all() for v in model.params.values()):
            raise FloatingPointError(f"non-finite parameters after epoch {epoch}")
        record = {"epoch": epoch, "loss": total / len(programs), "lr": lr}
        if dev_trees:
            f1 = exact_f1(model, dev_trees)
            record["dev_exact_f1"] = f1
            if f1 > best_f1:
                best_f1, best, stale = f1, {k: v.copy() for k, v in model.params.items()}, 0
            else:
                stale += 1
                if stale >= hp.patience:
                    decays += 1
                    stale = 0
                    lr *= hp.lr_decay
                    record["decayed"] = True
        model.history.append(record)
        log.debug("epoch %d %s", epoch, " ".join(f"{k}={v:.6g}" for k, v in record.items() if k != "epoch"))
        if on_round is not None:
            on_round(record)
        if dev_trees and decays > hp.max_decays:
            break
    if best is not None:
        model.params = best
    return model


# ---------------------------------------------------------------------------
# gradient checking


def relative_error(ga: np.ndarray, gn: np.ndarray) -> float:
    ga, gn = np.asarray(ga, dtype=np.float64), np.asarray(gn, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(ga), np.abs(gn)))
    return float(np.max(np.abs(ga - gn) / denom)) if ga.size else 0.0


@dataclass
class GradCheckResult:
    errors: dict[str, float]
    one_sided: int = 0
    skipped: int = 0

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0


def check_gradients(
    loss_fn: Callable[[], float | tuple[float, object]],
    params: dict[str, np.ndarray],
    analytic: dict[str, np.ndarray],
    h: float = 1e-5,
    samples: int | None = None,
    rng=None,
) -> GradCheckResult:
    """Central-difference check; max relative error per block.

    ``loss_fn`` must read ``params`` in place.  It may return
    ``(loss, signature)`` where the signature identifies the piecewise-linear
    region (e.g. ReLU patterns).  A probe that leaves the region on one side
    uses the one-sided difference from the other side; if both sides leave
    it the entry is counted in ``skipped``.  With ``samples`` set only that
    many random entries per block are probed.
    """
    rng = rng if rng is not None else np.random.default_rng(0)

    def call():
        r = loss_fn()
        return r if isinstance(r, tuple) else (r, None)

    def same(a, b) -> bool:
        if a is None or b is None:
            return True
        return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))

    base_loss, base_sig = call()
    res = GradCheckResult({})
    for name in sorted(params):
        flat = params[name].reshape(-1)
        idx = np.arange(flat.size)
        if samples is not None and flat.size > samples:
            idx = np.sort(rng.choice(flat.size, size=samples, replace=False))
        keep, num = [], []
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            up, sig_up = call()
            flat[i] = old - h
            down, sig_down = call()
            flat[i] = old
            ok_up, ok_down = same(sig_up, base_sig), same(sig_down, base_sig)
            if ok_up and ok_down:
                num.append((up - down) / (2 * h))
            elif ok_up:
                num.append((up - base_loss) / h)
                res.one_sided += 1
            elif ok_down:
                num.append((base_loss - down) / h)
                res.one_sided += 1
            else:
                res.skipped += 1
                continue
            keep.append(i)
        ga = analytic[name].reshape(-1)[np.array(keep, dtype=np.int64)]
        res.errors[name] = relative_error(ga, np.array(num))
    return res


def grad_check(model: Model, trees: Sequence[BubbleTree], samples: int | None = 30, seed: int = 0) -> GradCheckResult:
    """Backprop against finite differences (h = 1e-5) for every parameter block.

    Dropout is off so the forward pass is deterministic.
    """
    programs = [compile_program(model, t) for t in trees]
    analytic = batch_loss(model, programs, train=False).grads

    def loss_fn():
        signs: list = []
        loss = batch_loss(model, programs, grads=False, signs=signs).loss
        return loss, signs

    return check_gradients(loss_fn, model.params, analytic, samples=samples, rng=np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# serialization


def _put_str(out: list, s: str) -> None:
    b = s.encode("utf-8")
    out.append(struct.pack("<I", len(b)))
    out.append(b)


def dumps_model(model: Model) -> bytes:
    out: list[bytes] = [MAGIC, bytes([FORMAT_VERSION])]
    names = sorted(model.params)
    out.append(struct.pack("<I", len(names)))
    for name in names:
        arr = np.ascontiguousarray(model.params[name], dtype="<f8")
        _put_str(out, name)
        out.append(struct.pack("<I", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.append(arr.tobytes())
    hyper = [f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in model.hyper.to_dict().items()]
    tables = [("hyper", hyper), ("labels", model.labels), ("tags", model.tags), ("words", model.words)]
    out.append(struct.pack("<I", len(tables)))
    for name, entries in tables:
        _put_str(out, name)
        out.append(struct.pack("<I", len(entries)))
        for e in entries:
            _put_str(out, e)
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("model file is truncated")
        b = self.data[self.pos : self.pos + n]
        self.pos += n
        return b

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def loads_model(data: bytes) -> Model:
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError("not a model file (bad magic)")
    version = r.take(1)[0]
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version}")
    params = {}
    for _ in range(r.u32()):
        name = r.string()
        rank = r.u32()
        shape = struct.unpack(f"<{rank}Q", r.take(8 * rank))
        count = int(np.prod(shape)) if rank else 1
        params[name] = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
    tables = {}
    for _ in range(r.u32()):
        name = r.string()
        tables[name] = [r.string() for _ in range(r.u32())]
    if r.pos != len(data):
        raise FormatError("trailing bytes after model data")
    hyper = HyperParams.from_dict(dict(e.split("=", 1) for e in tables["hyper"]))
    return Model(hyper, tables["words"], tables["tags"], tables["labels"], params)


def save_model(model: Model, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        return loads_model(fh.read())


__all__ = [
    "HyperParams",
    "Model",
    "BatchResult",
    "encode",
    "compose",
    "config_vectors",
    "tree_vectors",
    "score_transitions",
    "score_labels",
    "boundary_candidates",
    "reattach",
    "rescore_boundaries",
    "greedy_decode",
    "parse",
    "compile_program",
    "batch_loss",
    "train",
    "transition_accuracy",
    "exact_f1",
    "clip_gradients",
    "relative_error",
    "check_gradients",
    "GradCheckResult",
    "grad_check",
    "dumps_model",
    "loads_model",
    "save_model",
    "load_model",
    "vocabularies",
    "ROOT",
]
