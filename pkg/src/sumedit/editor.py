"""The editing network: per-sentence keep/abstract/reject decisions.

Per step the network sees [e, a, g_prev, d] (extracted and abstracted
sentence vectors, running summary state, document vector), produces a
three-way softmax over {E, A, R} through two fully-connected layers, and
updates the additive summary state through tanh(W_g @ h) where h follows the
chosen sentence version. Training minimizes a soft cross-entropy against
enumeration-derived label distributions; gradients are exact and analytic
(the base sentence encoder is frozen).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoder import DocParams, EncoderConfig, encode_abstracted, encode_sentences
from .summarizers import Abstractor, ExtractResult, make_chunk
from .text import Document, Example

LOG_CLAMP = 1e-12


class Decision(enum.Enum):
    EXTRACT = "E"
    ABSTRACT = "A"
    REJECT = "R"

    @property
    def label(self) -> str:
        return self.value


# Fixed index order; argmax ties therefore break E > A > R.
DECISIONS = (Decision.EXTRACT, Decision.ABSTRACT, Decision.REJECT)
DECISION_INDEX = {d: i for i, d in enumerate(DECISIONS)}

PARAM_NAMES = ("W_c", "b_c", "V", "b", "W_g", "W_d", "b_d")


@dataclass
class EditorParams:
    W_c: np.ndarray  # (m, 4n)
    b_c: np.ndarray  # (m,)
    V: np.ndarray  # (3, m)
    b: np.ndarray  # (3,)
    W_g: np.ndarray  # (n, n)
    W_d: np.ndarray  # (n, n)
    b_d: np.ndarray  # (n,)

    @property
    def m(self) -> int:
        return self.W_c.shape[0]

    @property
    def n(self) -> int:
        return self.W_g.shape[0]

    @property
    def doc_params(self) -> DocParams:
        return DocParams(W_d=self.W_d, b_d=self.b_d)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "EditorParams":
        return EditorParams(**{k: v.copy() for k, v in self.arrays().items()})

    def validate(self) -> None:
        m, n = self.m, self.n
        expected = {
            "W_c": (m, 4 * n), "b_c": (m,), "V": (3, m), "b": (3,),
            "W_g": (n, n), "W_d": (n, n), "b_d": (n,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


def init_params(m: int, n: int, rng: np.random.Generator) -> EditorParams:
    """Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] matrices, zero biases."""

    def mat(rows: int, cols: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(cols)
        return rng.uniform(-bound, bound, size=(rows, cols))

    return EditorParams(
        W_c=mat(m, 4 * n),
        b_c=np.zeros(m),
        V=mat(3, m),
        b=np.zeros(3),
        W_g=mat(n, n),
        W_d=mat(n, n),
        b_d=np.zeros(n),
    )


def zero_grads(params: EditorParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.arrays().items()}


@dataclass(frozen=True)
class StepInput:
    e: np.ndarray
    a: np.ndarray
    g_prev: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class DecisionDistribution:
    p_e: float
    p_a: float
    p_r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_e, self.p_a, self.p_r])

    def argmax(self) -> Decision:
        return DECISIONS[int(np.argmax(self.as_array()))]


@dataclass(frozen=True)
class EditStep:
    sentence_index: int
    decision: Decision
    tokens: tuple[str, ...] | None
    distribution: DecisionDistribution


@dataclass(frozen=True)
class MixedSummary:
    steps: tuple[EditStep, ...]

    @property
    def text(self) -> tuple[tuple[str, ...], ...]:
        return tuple(s.tokens for s in self.steps if s.tokens is not None)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def decision_distribution(step: StepInput, params: EditorParams) -> DecisionDistribution:
    """softmax(V tanh(W_c [e, a, g_prev, d] + b_c) + b)."""
    x = np.concatenate([step.e, step.a, step.g_prev, step.d])
    if x.shape[0] != params.W_c.shape[1]:
        raise ValueError("step input size does not match W_c")
    t = np.tanh(params.W_c @ x + params.b_c)
    p = _softmax(params.V @ t + params.b)
    return DecisionDistribution(float(p[0]), float(p[1]), float(p[2]))


def update_state(
    g_prev: np.ndarray,
    decision: Decision,
    e: np.ndarray,
    a: np.ndarray,
    W_g: np.ndarray,
) -> np.ndarray:
    """g = g_prev + tanh(W_g @ h), h in {e, a, 0} by decision."""
    if decision is Decision.REJECT:
        return g_prev.copy()
    h = e if decision is Decision.EXTRACT else a
    if W_g.shape[1] != h.shape[0]:
        raise ValueError("state shapes do not match")
    return g_prev + np.tanh(W_g @ h)


@dataclass
class EditContext:
    """Frozen-encoder quantities for one example, precomputable once."""

    example_id: str
    extract: ExtractResult
    e: np.ndarray  # (l, n) extracted-sentence vectors, in extract order
    a: np.ndarray  # (l, n) abstracted-sentence vectors, in extract order
    e_bar: np.ndarray  # (n,) document mean sentence vector
    extracted_tokens: tuple[tuple[str, ...], ...]
    abstractions: tuple[tuple[str, ...], ...]

    @property
    def l(self) -> int:
        return len(self.extract.order)


def abstractions_for(
    document: Document, extract: ExtractResult, abstractor: Abstractor
) -> tuple[tuple[str, ...], ...]:
    """Abstracted version of every extracted sentence, in extract order."""
    out = []
    for idx in extract.order:
        chunk = make_chunk(document, idx)
        member_p = {s.index: extract.likelihood[s.index] for s in chunk.members}
        out.append(tuple(abstractor(chunk, member_p).tokens))
    return tuple(out)


def prepare_context(
    document: Document,
    extract: ExtractResult,
    abstractor: Abstractor,
    config: EncoderConfig,
) -> EditContext:
    abstractions = abstractions_for(document, extract, abstractor)
    return context_from_abstractions(document, extract, abstractions, config)


def context_from_abstractions(
    document: Document,
    extract: ExtractResult,
    abstractions: Sequence[Sequence[str]],
    config: EncoderConfig,
) -> EditContext:
    doc = document
    vecs = encode_sentences(doc, config)
    e = np.stack([vecs[i] for i in extract.order])
    a = np.stack(
        [
            encode_abstracted(doc, idx, list(toks), config)
            for idx, toks in zip(extract.order, abstractions)
        ]
    )
    return EditContext(
        example_id=doc.id,
        extract=extract,
        e=e,
        a=a,
        e_bar=vecs.mean(axis=0),
        extracted_tokens=tuple(doc.tokens_at(i) for i in extract.order),
        abstractions=tuple(tuple(t) for t in abstractions),
    )


def decode(ctx: EditContext, params: EditorParams) -> MixedSummary:
    """Greedy free-running decode: argmax decision per step (ties E > A > R)."""
    n = params.n
    d = np.tanh(params.W_d @ ctx.e_bar + params.b_d)
    g = np.zeros(n)
    steps = []
    for i, idx in enumerate(ctx.extract.order):
        dist = decision_distribution(StepInput(ctx.e[i], ctx.a[i], g, d), params)
        decision = dist.argmax()
        if decision is Decision.EXTRACT:
            tokens = ctx.extracted_tokens[i]
        elif decision is Decision.ABSTRACT:
            tokens = ctx.abstractions[i]
        else:
            tokens = None
        g = update_state(g, decision, ctx.e[i], ctx.a[i], params.W_g)
        steps.append(EditStep(idx, decision, tokens, dist))
    return MixedSummary(steps=tuple(steps))


def edit(
    example: Example,
    extract: ExtractResult,
    abstractor: Abstractor,
    config: EncoderConfig,
    params: EditorParams,
) -> MixedSummary:
    """Run the editor over an extract, emitting the mixed summary."""
    return decode(prepare_context(example.document, extract, abstractor, config), params)


def soft_cross_entropy(
    distributions: Sequence[DecisionDistribution | np.ndarray],
    labels: Sequence[Sequence[float]],
) -> float:
    """-(1/l) sum_i sum_k y_ik log p_ik, with p clamped below for finiteness."""
    if len(distributions) != len(labels):
        raise ValueError("distributions and labels differ in length")
    if not distributions:
        raise ValueError("need at least one step")
    total = 0.0
    for dist, y in zip(distributions, labels):
        p = dist.as_array() if isinstance(dist, DecisionDistribution) else np.asarray(dist)
        total += float(np.dot(np.asarray(y), np.log(np.maximum(p, LOG_CLAMP))))
    return -total / len(distributions)


def loss_and_gradients(
    ctx: EditContext,
    labels: np.ndarray,
    params: EditorParams,
    teacher_forcing: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Soft cross-entropy loss and its exact gradient for every parameter.

    With teacher forcing the state recurrence follows the label argmax; without
    it, the model's own argmax decision. The discrete decisions are treated as
    constants of the backward pass; sentence vectors are frozen.
    """
    labels = np.asarray(labels, dtype=float)
    l = ctx.l
    if labels.shape != (l, 3):
        raise ValueError(f"labels must have shape ({l}, 3)")
    n = params.n

    d_pre = params.W_d @ ctx.e_bar + params.b_d
    d = np.tanh(d_pre)

    xs, ts, ps, qs, hs, decisions = [], [], [], [], [], []
    g = np.zeros(n)
    for i in range(l):
        x = np.concatenate([ctx.e[i], ctx.a[i], g, d])
        t = np.tanh(params.W_c @ x + params.b_c)
        p = _softmax(params.V @ t + params.b)
        decision = DECISIONS[int(np.argmax(labels[i] if teacher_forcing else p))]
        if decision is Decision.REJECT:
            h, q = None, None
        else:
            h = ctx.e[i] if decision is Decision.EXTRACT else ctx.a[i]
            q = np.tanh(params.W_g @ h)
            g = g + q
        xs.append(x); ts.append(t); ps.append(p); qs.append(q); hs.append(h)
        decisions.append(decision)

    loss = soft_cross_entropy(ps, labels)

    grads = zero_grads(params)
    G = np.zeros(n)  # dL/dg_i flowing back from later steps
    dd = np.zeros(n)
    for i in reversed(range(l)):
        if qs[i] is not None:
            dq = G * (1 - qs[i] ** 2)
            grads["W_g"] += np.outer(dq, hs[i])
        du = (ps[i] - labels[i]) / l
        grads["V"] += np.outer(du, ts[i])
        grads["b"] += du
        dz = (params.V.T @ du) * (1 - ts[i] ** 2)
        grads["W_c"] += np.outer(dz, xs[i])
        grads["b_c"] += dz
        dx = params.W_c.T @ dz
        G = G + dx[2 * n : 3 * n]
        dd += dx[3 * n : 4 * n]
    dzd = dd * (1 - d**2)
    grads["W_d"] += np.outer(dzd, ctx.e_bar)
    grads["b_d"] += dzd
    return loss, grads


def gradients(
    example: Example,
    extract: ExtractResult,
    labels,
    abstractor: Abstractor,
    config: EncoderConfig,
    params: EditorParams,
    teacher_forcing: bool = True,
) -> dict[str, np.ndarray]:
    """Gradient of the training loss for one example (see loss_and_gradients).

    `labels` is an (l, 3) array-like or any object exposing a `.labels` field.
    """
    y = np.asarray(getattr(labels, "labels", labels), dtype=float)
    ctx = prepare_context(example.document, extract, abstractor, config)
    _, grads = loss_and_gradients(ctx, y, params, teacher_forcing)
    return grads


CHECKPOINT_VERSION = 1


def save_checkpoint(params: EditorParams, encoder_config: EncoderConfig, path) -> None:
    payload: dict = {"version": CHECKPOINT_VERSION, "m": params.m, "n": params.n}
    for name, arr in params.arrays().items():
        payload[name] = arr.tolist()
    payload["encoder"] = {
        "n": encoder_config.n,
        "hash_seed": encoder_config.hash_seed,
        "context_window": encoder_config.context_window,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> tuple[EditorParams, EncoderConfig]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    params = EditorParams(**{name: np.array(payload[name], dtype=float) for name in PARAM_NAMES})
    params.validate()
    if params.m != payload["m"] or params.n != payload["n"]:
        raise ValueError("checkpoint dims disagree with stored arrays")
    enc = payload["encoder"]
    config = EncoderConfig(
        n=enc["n"], hash_seed=enc["hash_seed"], context_window=enc["context_window"]
    )
    if config.n != params.n:
        raise ValueError("encoder width disagrees with editor n")
    return params, config
