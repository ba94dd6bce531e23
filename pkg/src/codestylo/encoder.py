"""Trainable-from-scratch transformer encoder in numpy, with exact gradients.

Pre-norm architecture: token + learned positional embeddings, then per
layer x += Attn(LN(x)) and x += MLP(LN(x)) with GELU, a final LayerNorm,
and a classification head (linear, ReLU, dropout, linear) reading ONLY the
position-0 representation. The backward pass is hand-derived; the gradient
test checks it against central finite differences.

All math is float64: slower than float32 but exactly reproducible and
robust under finite-difference checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

NEG_INF = -1e30


class EncoderError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder hyperparameters.

    ``variant`` is ``small_scratch`` (this module) or ``pretrained_checkpoint``
    (torch-backed adapter in the pretrained module). ``head_dim`` defaults to
    ``hidden_dim``; ``mlp_dim`` to ``4 * hidden_dim``.
    """

    variant: str = "small_scratch"
    layers: int = 4
    hidden_dim: int = 256
    heads: int = 4
    max_len: int = 512
    vocab_size: int = 4096
    head_dim: int | None = None
    mlp_dim: int | None = None
    dropout_rate: float = 0.2
    pretrained_path: str | None = None
    init_scale: float = 0.02

    def __post_init__(self) -> None:
        if self.variant not in ("small_scratch", "pretrained_checkpoint"):
            raise EncoderError(f"unknown encoder variant {self.variant!r}")
        if self.hidden_dim % self.heads != 0:
            raise EncoderError(
                f"hidden_dim {self.hidden_dim} not divisible by heads {self.heads}"
            )
        if self.max_len < 2:
            raise EncoderError("max_len must be >= 2")

    @property
    def resolved_head_dim(self) -> int:
        return self.head_dim if self.head_dim is not None else self.hidden_dim

    @property
    def resolved_mlp_dim(self) -> int:
        return self.mlp_dim if self.mlp_dim is not None else 4 * self.hidden_dim


def init_params(cfg: EncoderConfig, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xE0])))
    s = cfg.init_scale
    H, D, M = cfg.hidden_dim, cfg.resolved_head_dim, cfg.resolved_mlp_dim

    def w(*shape):
        return rng.normal(0.0, s, size=shape)

    params: dict[str, np.ndarray] = {
        "tok_emb": w(cfg.vocab_size, H),
        "pos_emb": w(cfg.max_len, H),
        "lnf.g": np.ones(H),
        "lnf.b": np.zeros(H),
        "head.w1": w(H, D),
        "head.b1": np.zeros(D),
        "head.w2": w(D, 2),
        "head.b2": np.zeros(2),
    }
    for i in range(cfg.layers):
        params.update({
            f"l{i}.ln1.g": np.ones(H), f"l{i}.ln1.b": np.zeros(H),
            f"l{i}.wq": w(H, H), f"l{i}.bq": np.zeros(H),
            f"l{i}.wk": w(H, H), f"l{i}.bk": np.zeros(H),
            f"l{i}.wv": w(H, H), f"l{i}.bv": np.zeros(H),
            f"l{i}.wo": w(H, H), f"l{i}.bo": np.zeros(H),
            f"l{i}.ln2.g": np.ones(H), f"l{i}.ln2.b": np.zeros(H),
            f"l{i}.w1": w(H, M), f"l{i}.b1": np.zeros(M),
            f"l{i}.w2": w(M, H), f"l{i}.b2": np.zeros(H),
        })
    return params


def _layernorm(x, g, b, eps=1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * invstd
    return xhat * g + b, (xhat, invstd)

def _layernorm_backward(dy, cache, g):
    xhat, invstd = cache
    dg = np.sum(dy * xhat, axis=tuple(range(dy.ndim - 1)))
    db = np.sum(dy, axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = invstd * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _gelu(u):
    phi = 0.5 * (1.0 + special.erf(u / math.sqrt(2.0)))
    return u * phi, phi

def _gelu_backward(du_out, u, phi):
    pdf = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    return du_out * (phi + u * pdf)


def _softmax(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x, nh):
    B, L, H = x.shape
    return x.reshape(B, L, nh, H // nh).transpose(0, 2, 1, 3)

def _merge_heads(x):
    B, nh, L, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, L, nh * dh)


def forward(
    params: dict[str, np.ndarray],
    ids: np.ndarray,
    lengths: np.ndarray,
    cfg: EncoderConfig,
    train: bool = False,
    dropout_rng: np.random.Generator | None = None,
    encoder_output_hook=None,
):
    """Run the encoder and head; returns (logits, cache) with cache=None-free.

    ``encoder_output_hook`` may rewrite the final (B, L, H) encoder output
    before the head reads position 0 (used to verify first-token-only
    dependence); training with a hook is unsupported.
    """
    B, L = ids.shape
    if L > cfg.max_len:
        raise EncoderError(f"sequence length {L} exceeds max_len {cfg.max_len}")
    nh = cfg.heads
    scale = 1.0 / math.sqrt(cfg.hidden_dim // nh)

    key_bias = np.where(
        np.arange(L)[None, :] < lengths[:, None], 0.0, NEG_INF
    )[:, None, None, :]

    x = params["tok_emb"][ids] + params["pos_emb"][:L]
    layer_caches = []
    for i in range(cfg.layers):
        a, ln1_cache = _layernorm(x, params[f"l{i}.ln1.g"], params[f"l{i}.ln1.b"])
        q = _split_heads(a @ params[f"l{i}.wq"] + params[f"l{i}.bq"], nh)
        k = _split_heads(a @ params[f"l{i}.wk"] + params[f"l{i}.bk"], nh)
        v = _split_heads(a @ params[f"l{i}.wv"] + params[f"l{i}.bv"], nh)
        scores = q @ k.transpose(0, 1, 3, 2) * scale + key_bias
        attn = _softmax(scores)
        ctx = _merge_heads(attn @ v)
        o = ctx @ params[f"l{i}.wo"] + params[f"l{i}.bo"]
        x = x + o

        m, ln2_cache = _layernorm(x, params[f"l{i}.ln2.g"], params[f"l{i}.ln2.b"])
        u = m @ params[f"l{i}.w1"] + params[f"l{i}.b1"]
        act, phi = _gelu(u)
        f = act @ params[f"l{i}.w2"] + params[f"l{i}.b2"]
        x = x + f
        layer_caches.append((a, ln1_cache, q, k, v, attn, ctx, m, ln2_cache, u, phi, act))

    xf, lnf_cache = _layernorm(x, params["lnf.g"], params["lnf.b"])
    if encoder_output_hook is not None:
        xf = encoder_output_hook(xf)
    h0 = xf[:, 0, :]

    z1 = h0 @ params["head.w1"] + params["head.b1"]
    r = np.maximum(z1, 0.0)
    if train and cfg.dropout_rate > 0.0:
        if dropout_rng is None:
            raise EncoderError("training forward needs a dropout rng")
        keep = 1.0 - cfg.dropout_rate
        drop_mask = (dropout_rng.random(r.shape) < keep) / keep
    else:
        drop_mask = None
    rd = r * drop_mask if drop_mask is not None else r
    logits = rd @ params["head.w2"] + params["head.b2"]

    cache = {
        "ids": ids, "L": L, "scale": scale,
        "layers": layer_caches, "lnf_cache": lnf_cache, "xf": xf,
        "h0": h0, "z1": z1, "r": r, "rd": rd, "drop_mask": drop_mask,
        "hook": encoder_output_hook is not None,
    }
    return logits, cache


def loss_and_grads(
    params: dict[str, np.ndarray],
    ids: np.ndarray,
    lengths: np.ndarray,
    labels: np.ndarray,
    cfg: EncoderConfig,
    train: bool = True,
    dropout_rng: np.random.Generator | None = None,
):
    """Mean cross-entropy over the batch plus gradients for every parameter."""
    logits, cache = forward(params, ids, lengths, cfg, train=train, dropout_rng=dropout_rng)
    if cache["hook"]:
        raise EncoderError("cannot backpropagate through an output hook")
    B = ids.shape[0]

    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.sum(np.exp(shifted), axis=1))
    logp = shifted[np.arange(B), labels] - logz
    loss = float(-np.mean(logp))

    probs = np.exp(shifted - logz[:, None])
    dlogits = probs
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B

    grads: dict[str, np.ndarray] = {}

    grads["head.w2"] = cache["rd"].T @ dlogits
    grads["head.b2"] = dlogits.sum(axis=0)
    drd = dlogits @ params["head.w2"].T
    dr = drd * cache["drop_mask"] if cache["drop_mask"] is not None else drd
    dz1 = dr * (cache["z1"] > 0.0)
    grads["head.w1"] = cache["h0"].T @ dz1
    grads["head.b1"] = dz1.sum(axis=0)
    dh0 = dz1 @ params["head.w1"].T

    dxf = np.zeros_like(cache["xf"])
    dxf[:, 0, :] = dh0
    dx, grads["lnf.g"], grads["lnf.b"] = _layernorm_backward(
        dxf, cache["lnf_cache"], params["lnf.g"]
    )

    nh = cfg.heads
    scale = cache["scale"]
    for i in reversed(range(cfg.layers)):
        (a, ln1_cache, q, k, v, attn, ctx, m, ln2_cache, u, phi, act) = cache["layers"][i]

        # MLP block: x_out = x_in + (gelu(LN(x_in) @ w1 + b1) @ w2 + b2)
        df = dx
        B_, L_, M_ = act.shape
        grads[f"l{i}.w2"] = act.reshape(-1, M_).T @ df.reshape(-1, df.shape[-1])
        grads[f"l{i}.b2"] = df.sum(axis=(0, 1))
        dact = df @ params[f"l{i}.w2"].T
        du = _gelu_backward(dact, u, phi)
        grads[f"l{i}.w1"] = m.reshape(-1, m.shape[-1]).T @ du.reshape(-1, M_)
        grads[f"l{i}.b1"] = du.sum(axis=(0, 1))
        dm = du @ params[f"l{i}.w1"].T
        dx_ln2, grads[f"l{i}.ln2.g"], grads[f"l{i}.ln2.b"] = _layernorm_backward(
            dm, ln2_cache, params[f"l{i}.ln2.g"]
        )
        dx = dx + dx_ln2

        # Attention block: x_out = x_in + (merge(softmax(qk)v) @ wo + bo)
        do = dx
        H_ = ctx.shape[-1]
        grads[f"l{i}.wo"] = ctx.reshape(-1, H_).T @ do.reshape(-1, H_)
        grads[f"l{i}.bo"] = do.sum(axis=(0, 1))
        dctx = _split_heads(do @ params[f"l{i}.wo"].T, nh)
        dattn = dctx @ v.transpose(0, 1, 3, 2)
        dv = attn.transpose(0, 1, 3, 2) @ dctx
        dscores = attn * (dattn - np.sum(dattn * attn, axis=-1, keepdims=True))
        dq = dscores @ k * scale
        dk = dscores.transpose(0, 1, 3, 2) @ q * scale
        dq, dk, dv = _merge_heads(dq), _merge_heads(dk), _merge_heads(dv)
        da = np.zeros_like(a)
        for name, d in (("wq", dq), ("wk", dk), ("wv", dv)):
            grads[f"l{i}.{name}"] = a.reshape(-1, H_).T @ d.reshape(-1, H_)
            grads[f"l{i}.b{name[1]}"] = d.sum(axis=(0, 1))
            da += d @ params[f"l{i}.{name}"].T
        dx_ln1, grads[f"l{i}.ln1.g"], grads[f"l{i}.ln1.b"] = _layernorm_backward(
            da, ln1_cache, params[f"l{i}.ln1.g"]
        )
        dx = dx + dx_ln1

    grads["tok_emb"] = np.zeros_like(params["tok_emb"])
    np.add.at(grads["tok_emb"], cache["ids"], dx)
    dpos = np.zeros_like(params["pos_emb"])
    dpos[: cache["L"]] = dx.sum(axis=0)
    grads["pos_emb"] = dpos

    return loss, grads, logits


@dataclass
class AdamW:
    """Decoupled weight-decay Adam; lr is supplied per step."""

    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, g in grads.items():
            if key not in self.m:
                self.m[key] = np.zeros_like(g)
                self.v[key] = np.zeros_like(g)
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * g * g
            mhat = self.m[key] / bc1
            vhat = self.v[key] / bc2
            params[key] -= lr * (mhat / (np.sqrt(vhat) + self.eps) + self.weight_decay * params[key])
