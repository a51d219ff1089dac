"""Score and composition functions for the four embedding families.

Every function operates on "canonical" embedding vectors:

* entity vectors of width ``entity_width(dim)``,
* relation vectors of width ``relation_width(dim)``.

For HAKE the relation table stores an unconstrained pre-activation for the
modulus half; :func:`relation_raw_to_emb` maps storage to the canonical
(strictly positive modulus) form and :func:`relation_emb_grad_to_raw` chains
gradients back.  For the other families storage and canonical form coincide.

All array arguments broadcast over leading axes and reduce over the last
axis, so batched calls are bitwise identical to scalar calls.
"""

import enum
import math

import numpy as np


class ModelFamily(str, enum.Enum):
    TRANSE = "TransE"
    ROTATE = "RotatE"
    HAKE = "HAKE"
    PAIRRE = "PairRE"


def _l1(d):
    return np.sum(np.abs(d), axis=-1)


def _l2(d):
    return np.sqrt(np.sum(d * d, axis=-1))


def _safe_unit(d, norm):
    """d / norm with zero gradient where the norm vanishes."""
    denom = np.where(norm > 0.0, norm, 1.0)
    scale = np.where(norm > 0.0, 1.0 / denom, 0.0)
    return d * scale[..., None]


def softplus(x):
    return np.logaddexp(0.0, x)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


class KGEFamily:
    """Interface for one embedding family.

    ``dim`` is the semantic dimension k; physical widths derive from it.
    """

    name: ModelFamily
    uses_mix = False

    def entity_width(self, dim: int) -> int:
        raise NotImplementedError

    def relation_width(self, dim: int) -> int:
        raise NotImplementedError

    def compose_width(self, dim: int) -> int:
        raise NotImplementedError

    def score(self, h, r, t, mix=None):
        raise NotImplementedError

    def score_grads(self, h, r, t, mix=None):
        """Returns (f, df/dh, df/dr, df/dt, df/dmix or None).

        Inputs must share leading shape; gradients match input shapes.
        """
        raise NotImplementedError

    def compose(self, h, r, mix=None):
        raise NotImplementedError

    def compose_grads(self, h, r, gz, mix=None):
        """Backpropagates gz through compose; returns (dh, dr)."""
        raise NotImplementedError

    def init_entity(self, rng, count, dim, bound=None):
        raise NotImplementedError

    def init_relation_raw(self, rng, count, dim, bound=None):
        raise NotImplementedError

    def init_mix(self, rng, dim):
        return None

    def relation_raw_to_emb(self, raw):
        return raw

    def relation_emb_grad_to_raw(self, raw, grad_emb):
        return grad_emb


def _uniform_bound(dim, bound=None):
    if bound is not None:
        return float(bound)
    return 6.0 / math.sqrt(dim)


class TransEFamily(KGEFamily):
    """f = -|h + r - t|_1, compose(h, r) = h + r."""

    name = ModelFamily.TRANSE

    def entity_width(self, dim):
        return dim

    def relation_width(self, dim):
        return dim

    def compose_width(self, dim):
        return dim

    def score(self, h, r, t, mix=None):
        return -_l1(h + r - t)

    def score_grads(self, h, r, t, mix=None):
        d = h + r - t
        f = -_l1(d)
        s = np.sign(d)
        return f, -s, -s.copy(), s.copy(), None

    def compose(self, h, r, mix=None):
        return h + r

    def compose_grads(self, h, r, gz, mix=None):
        return gz.copy(), gz.copy()

    def init_entity(self, rng, count, dim, bound=None):
        b = _uniform_bound(dim, bound)
        return rng.uniform(-b, b, size=(count, dim))

    def init_relation_raw(self, rng, count, dim, bound=None):
        b = _uniform_bound(dim, bound)
        return rng.uniform(-b, b, size=(count, dim))


class RotatEFamily(KGEFamily):
    """Complex rotation model.

    Entities are complex vectors stored as [re | im] (width 2k).  Relations
    are stored as k phase angles, so every relation coefficient has unit
    modulus by construction.  f = -|h o r - t|_2 with the Euclidean norm
    taken over all real and imaginary components.
    """

    name = ModelFamily.ROTATE

    def entity_width(self, dim):
        return 2 * dim

    def relation_width(self, dim):
        return dim

    def compose_width(self, dim):
        return 2 * dim

    def _rotate(self, h, r):
        k = r.shape[-1]
        hre, him = h[..., :k], h[..., k:]
        c, s = np.cos(r), np.sin(r)
        zre = hre * c - him * s
        zim = hre * s + him * c
        return np.concatenate([zre, zim], axis=-1)

    def score(self, h, r, t, mix=None):
        d = self._rotate(h, r) - t
        return -_l2(d)

    def score_grads(self, h, r, t, mix=None):
        k = r.shape[-1]
        z = self._rotate(h, r)
        d = z - t
        norm = _l2(d)
        gd = -_safe_unit(d, norm)
        gt = -gd
        gh, gr = self.compose_grads(h, r, gd)
        return -norm, gh, gr, gt, None

    def compose(self, h, r, mix=None):
        return self._rotate(h, r)

    def compose_grads(self, h, r, gz, mix=None):
        k = r.shape[-1]
        c, s = np.cos(r), np.sin(r)
        gzre, gzim = gz[..., :k], gz[..., k:]
        ghre = gzre * c + gzim * s
        ghim = -gzre * s + gzim * c
        z = self._rotate(h, r)
        zre, zim = z[..., :k], z[..., k:]
        gr = -gzre * zim + gzim * zre
        return np.concatenate([ghre, ghim], axis=-1), gr

    def init_entity(self, rng, count, dim, bound=None):
        b = _uniform_bound(dim, bound)
        return rng.uniform(-b, b, size=(count, 2 * dim))

    def init_relation_raw(self, rng, count, dim, bound=None):
        return rng.uniform(0.0, 2.0 * math.pi, size=(count, dim))


class HAKEFamily(KGEFamily):
    """Modulus-plus-phase model.

    Entities and relations are stored as [modulus | phase] (width 2k).  The
    relation modulus half is kept strictly positive by storing a softplus
    pre-activation.  The per-dimension phase weight ``mix`` is a model
    parameter.

    f = -|h_m o r_m - t_m|_2 - sum_j |mix_j * sin((h_p + r_p - t_p)_j / 2)|
    compose = [h_m o r_m | mix o sin((h_p + r_p) / 2)]
    """

    name = ModelFamily.HAKE
    uses_mix = True

    def entity_width(self, dim):
        return 2 * dim

    def relation_width(self, dim):
        return 2 * dim

    def compose_width(self, dim):
        return 2 * dim

    def score(self, h, r, t, mix=None):
        k = h.shape[-1] // 2
        hm, hp = h[..., :k], h[..., k:]
        rm, rp = r[..., :k], r[..., k:]
        tm, tp = t[..., :k], t[..., k:]
        mod = _l2(hm * rm - tm)
        phase = _l1(mix * np.sin((hp + rp - tp) / 2.0))
        return -mod - phase

    def score_grads(self, h, r, t, mix=None):
        k = h.shape[-1] // 2
        hm, hp = h[..., :k], h[..., k:]
        rm, rp = r[..., :k], r[..., k:]
        tm, tp = t[..., :k], t[..., k:]

        u = hm * rm - tm
        norm = _l2(u)
        gu = _safe_unit(u, norm)

        half = (hp + rp - tp) / 2.0
        sn = np.sin(half)
        w = mix * sn
        f = -norm - np.sum(np.abs(w), axis=-1)

        sw = np.sign(w)
        gphase = -0.5 * sw * mix * np.cos(half)

        gh = np.concatenate([-gu * rm, gphase], axis=-1)
        gr = np.concatenate([-gu * hm, gphase.copy()], axis=-1)
        gt = np.concatenate([gu, -gphase], axis=-1)
        gmix = -sw * sn
        return f, gh, gr, gt, gmix

    def compose(self, h, r, mix=None):
        k = h.shape[-1] // 2
        hm, hp = h[..., :k], h[..., k:]
        rm, rp = r[..., :k], r[..., k:]
        return np.concatenate([hm * rm, mix * np.sin((hp + rp) / 2.0)], axis=-1)

    def compose_grads(self, h, r, gz, mix=None):
        k = h.shape[-1] // 2
        hm, hp = h[..., :k], h[..., k:]
        rm, rp = r[..., :k], r[..., k:]
        gzm, gzp = gz[..., :k], gz[..., k:]
        gp = gzp * mix * 0.5 * np.cos((hp + rp) / 2.0)
        gh = np.concatenate([gzm * rm, gp], axis=-1)
        gr = np.concatenate([gzm * hm, gp.copy()], axis=-1)
        return gh, gr

    def init_entity(self, rng, count, dim, bound=None):
        b = _uniform_bound(dim, bound)
        mod = rng.uniform(-b, b, size=(count, dim))
        phase = rng.uniform(0.0, 2.0 * math.pi, size=(count, dim))
        return np.concatenate([mod, phase], axis=-1)

    def init_relation_raw(self, rng, count, dim, bound=None):
        # softplus of U(-1, 1) keeps the effective modulus in (0.31, 1.31)
        mod_raw = rng.uniform(-1.0, 1.0, size=(count, dim))
        phase = rng.uniform(0.0, 2.0 * math.pi, size=(count, dim))
        return np.concatenate([mod_raw, phase], axis=-1)

    def init_mix(self, rng, dim):
        return rng.uniform(0.0, 1.0, size=dim)

    def relation_raw_to_emb(self, raw):
        k = raw.shape[-1] // 2
        out = raw.copy()
        out[..., :k] = softplus(raw[..., :k])
        return out

    def relation_emb_grad_to_raw(self, raw, grad_emb):
        k = raw.shape[-1] // 2
        out = grad_emb.copy()
        out[..., :k] = grad_emb[..., :k] * sigmoid(raw[..., :k])
        return out


class PairREFamily(KGEFamily):
    """Paired-relation model.

    Relations store [r_H | r_T] (width 2k).
    f = -|h o r_H - t o r_T|_1, compose(h, r) = h o r_H.
    """

    name = ModelFamily.PAIRRE

    def entity_width(self, dim):
        return dim

    def relation_width(self, dim):
        return 2 * dim

    def compose_width(self, dim):
        return dim

    def score(self, h, r, t, mix=None):
        k = h.shape[-1]
        return -_l1(h * r[..., :k] - t * r[..., k:])

    def score_grads(self, h, r, t, mix=None):
        k = h.shape[-1]
        rh, rt = r[..., :k], r[..., k:]
        d = h * rh - t * rt
        f = -_l1(d)
        s = np.sign(d)
        gh = -s * rh
        gt = s * rt
        gr = np.concatenate([-s * h, s * t], axis=-1)
        return f, gh, gr, gt, None

    def compose(self, h, r, mix=None):
        k = h.shape[-1]
        return h * r[..., :k]

    def compose_grads(self, h, r, gz, mix=None):
        k = h.shape[-1]
        gh = gz * r[..., :k]
        gr = np.concatenate([gz * h, np.zeros_like(gz)], axis=-1)
        return gh, gr

    def init_entity(self, rng, count, dim, bound=None):
        b = _uniform_bound(dim, bound)
        return rng.uniform(-b, b, size=(count, dim))

    def init_relation_raw(self, rng, count, dim, bound=None):
        b = _uniform_bound(dim, bound)
        return rng.uniform(-b, b, size=(count, 2 * dim))


FAMILIES: dict[ModelFamily, KGEFamily] = {
    ModelFamily.TRANSE: TransEFamily(),
    ModelFamily.ROTATE: RotatEFamily(),
    ModelFamily.HAKE: HAKEFamily(),
    ModelFamily.PAIRRE: PairREFamily(),
}


def get_family(family) -> KGEFamily:
    """Looks up a family by enum member or case-insensitive name."""
    if isinstance(family, ModelFamily):
        return FAMILIES[family]
    lowered = str(family).lower()
    for member in ModelFamily:
        if member.value.lower() == lowered:
            return FAMILIES[member]
    names = ", ".join(f.value for f in ModelFamily)
    raise ValueError(f"unknown model family {family!r} (choose from {names})")
