"""Signed feature hashing of observation/action text."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

SEP = "[sep]"
_TOKEN = re.compile(r"[a-z0-9_]+")


@dataclass(frozen=True)
class FeaturizerSpec:
    dim: int = 2048
    hash_seed: int = 0
    ngram_orders: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("feature dimension must be >= 1")
        if not self.ngram_orders or min(self.ngram_orders) < 1:
            raise ValueError("n-gram orders must be positive")

    def to_dict(self) -> dict:
        return {"dim": self.dim, "hash_seed": self.hash_seed, "ngram_orders": list(self.ngram_orders)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturizerSpec":
        return cls(int(d["dim"]), int(d["hash_seed"]), tuple(int(n) for n in d["ngram_orders"]))


def tokens(obs_text: str, action_text: str) -> list[str]:
    return _TOKEN.findall(obs_text.lower()) + [SEP] + _TOKEN.findall(action_text.lower())


@lru_cache(maxsize=1 << 16)
def _bucket(gram: str, dim: int, seed: int) -> tuple[int, float]:
    h = int.from_bytes(hashlib.blake2b(gram.encode(), digest_size=8, salt=seed.to_bytes(8, "little")).digest(), "little")
    return h % dim, (1.0 if (h >> 63) & 1 else -1.0)


def grams(obs_text: str, action_text: str, orders=(1, 2)) -> tuple[list[str], list[str]]:
    """n-grams of the joined token stream, split into observation and action sides.

    Grams touching the action part (including those spanning the separator)
    get an ``a:`` prefix so that, say, an object id named by the action does
    not share a bucket with the same id merely listed in the observation.
    """
    toks = tokens(obs_text, action_text)
    sep = toks.index(SEP)
    obs_side, act_side = [], []
    for n in orders:
        for i in range(len(toks) - n + 1):
            g = " ".join(toks[i:i + n])
            if i + n - 1 >= sep:
                act_side.append("a:" + g)
            else:
                obs_side.append(g)
    return obs_side, act_side


def _signed(grams_: list[str], spec: FeaturizerSpec) -> dict[int, float]:
    out: dict[int, float] = {}
    for g in grams_:
        j, s = _bucket(g, spec.dim, spec.hash_seed)
        out[j] = out.get(j, 0.0) + s
    norm = float(np.sqrt(sum(v * v for v in out.values())))
    return {j: v / norm for j, v in out.items()} if norm else {}


def hashed_counts(obs_text: str, action_text: str, spec: FeaturizerSpec) -> dict[int, float]:
    """Sparse feature map with unit L2 norm.

    The two sides are normalised separately before being summed, so a long
    observation cannot drown out the few tokens that name the action.
    """
    obs_side, act_side = grams(obs_text, action_text, spec.ngram_orders)
    out: dict[int, float] = {}
    for part in (_signed(obs_side, spec), _signed(act_side, spec)):
        for j, v in part.items():
            out[j] = out.get(j, 0.0) + v
    norm = float(np.sqrt(sum(v * v for v in out.values())))
    if norm == 0.0:
        return {}
    return {j: v / norm for j, v in out.items() if v != 0.0}


def featurize(obs_text: str, action_text: str, spec: FeaturizerSpec = FeaturizerSpec()) -> np.ndarray:
    """Dense, L2-normalised feature vector of length ``spec.dim``."""
    if not obs_text or not action_text:
        raise ValueError("texts must be nonempty")
    x = np.zeros(spec.dim)
    for j, v in hashed_counts(obs_text, action_text, spec).items():
        x[j] = v
    return x


def featurize_batch(pairs: Sequence[tuple[str, str]], spec: FeaturizerSpec) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for r, (o, a) in enumerate(pairs):
        for j, v in sorted(hashed_counts(o, a, spec).items()):
            rows.append(r)
            cols.append(j)
            vals.append(v)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(pairs), spec.dim))
