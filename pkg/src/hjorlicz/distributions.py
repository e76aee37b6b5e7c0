"""Finite-support distributions, the testing families, exact max/sum laws and
a counter-based sampler.

Probabilities are carried as natural logs throughout so that tower-growth
regimes (atom probabilities like (2 N Psi(u))^{-N}) stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numutil import counter_uniforms, log1mexp, logsumexp

VALUE_MERGE_TOL = 1e-12  # absolute tolerance for treating atom values as equal

NORM_TAGS = ("abs", "sup", "euclidean", "l1")


class InvalidParameterError(ValueError):
    pass


class ResourceError(RuntimeError):
    pass


def _vector_norm(values, tag):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.abs(values)
    if tag == "sup":
        return np.max(np.abs(values), axis=1)
    if tag == "euclidean":
        return np.sqrt(np.sum(values * values, axis=1))
    if tag == "l1":
        return np.sum(np.abs(values), axis=1)
    raise InvalidParameterError(f"norm tag {tag!r} needs vector atoms" if tag == "abs" else f"unknown norm tag {tag!r}")


@dataclass(frozen=True)
class FiniteDist:
    values: np.ndarray  # (m,) scalars or (m, d) vectors
    log_probs: np.ndarray
    norm_tag: str = "abs"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        lp = np.asarray(self.log_probs, dtype=float)
        if values.shape[0] != lp.shape[0] or values.shape[0] == 0:
            raise InvalidParameterError("values and log_probs must align and be nonempty")
        if self.norm_tag not in NORM_TAGS:
            raise InvalidParameterError(f"unknown norm tag {self.norm_tag!r}")
        if values.ndim == 1 and self.norm_tag != "abs":
            raise InvalidParameterError("scalar atoms use the 'abs' norm tag")
        total = logsumexp(lp)
        if abs(total) > 1e-10:
            raise InvalidParameterError(f"probabilities sum to exp({total:g}) != 1")
        order = np.lexsort(values.T[::-1]) if values.ndim == 2 else np.argsort(values)
        values, lp = values[order], lp[order]
        flat = values if values.ndim == 2 else values[:, None]
        if np.any(np.all(np.abs(np.diff(flat, axis=0)) <= VALUE_MERGE_TOL, axis=1)):
            raise InvalidParameterError("atom values must be distinct")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "log_probs", lp - total)

    @classmethod
    def from_probs(cls, values, probs, norm_tag="abs"):
        probs = np.asarray(probs, dtype=float)
        if np.any(probs <= 0) or np.any(probs > 1):
            raise InvalidParameterError("probabilities must lie in (0, 1]")
        return cls(np.asarray(values, dtype=float), np.log(probs), norm_tag)

    @classmethod
    def point_mass(cls, value, norm_tag="abs"):
        return cls(np.asarray([value], dtype=float), np.zeros(1), norm_tag)

    @property
    def probs(self):
        return np.exp(self.log_probs)

    @property
    def is_scalar(self):
        return self.values.ndim == 1

    @property
    def dim(self):
        return 1 if self.is_scalar else self.values.shape[1]

    def norms(self):
        return _vector_norm(self.values, self.norm_tag)

    def mean(self):
        w = self.probs
        return float(w @ self.values) if self.is_scalar else w @ self.values

    def scaled(self, c):
        return FiniteDist(self.values * float(c), self.log_probs.copy(), self.norm_tag)

    def symmetrized(self):
        """Law of eps * X for an independent Rademacher eps."""
        values = np.concatenate([self.values, -self.values])
        lp = np.concatenate([self.log_probs, self.log_probs]) - math.log(2.0)
        return _merge_atoms(values, lp, self.norm_tag)

    def to_record(self):
        return {
            "values": self.values.tolist(),
            "log_probs": self.log_probs.tolist(),
            "norm_tag": self.norm_tag,
        }

    @classmethod
    def from_record(cls, rec):
        return cls(np.asarray(rec["values"], dtype=float), np.asarray(rec["log_probs"], dtype=float), rec.get("norm_tag", "abs"))


def _merge_atoms(values, log_probs, norm_tag):
    """Sort atoms and merge values equal within VALUE_MERGE_TOL (log-domain sum)."""
    values = np.asarray(values, dtype=float)
    flat = values if values.ndim == 2 else values[:, None]
    order = np.lexsort(flat.T[::-1])
    values, flat, lp = values[order], flat[order], np.asarray(log_probs)[order]
    new_group = np.ones(len(lp), dtype=bool)
    new_group[1:] = np.any(np.abs(np.diff(flat, axis=0)) > VALUE_MERGE_TOL, axis=1)
    idx = np.cumsum(new_group) - 1
    starts = np.flatnonzero(new_group)
    merged_lp = np.array([logsumexp(lp[idx == g]) for g in range(len(starts))])
    return FiniteDist(values[starts], merged_lp, norm_tag)


@dataclass(frozen=True)
class Family:
    """N independent members, stored as (dist, count) runs; shared norm tag."""

    dists: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.dists) != len(self.counts) or not self.dists:
            raise InvalidParameterError("family needs matching dists and counts")
        if any(c < 1 for c in self.counts):
            raise InvalidParameterError("counts must be positive")
        tags = {d.norm_tag for d in self.dists}
        dims = {d.dim for d in self.dists}
        if len(tags) > 1 or len(dims) > 1:
            raise InvalidParameterError("family members must share norm tag and dimension")

    @classmethod
    def iid(cls, dist, n):
        return cls((dist,), (int(n),))

    @classmethod
    def of(cls, *dists):
        return cls(tuple(dists), (1,) * len(dists))

    @property
    def n_members(self):
        return int(sum(self.counts))

    @property
    def norm_tag(self):
        return self.dists[0].norm_tag

    @property
    def is_iid(self):
        return len(self.dists) == 1

    def members(self):
        for d, c in zip(self.dists, self.counts):
            for _ in range(c):
                yield d

    def to_record(self):
        return {"dists": [d.to_record() for d in self.dists], "counts": list(self.counts)}


@dataclass(frozen=True)
class SeriesSpec:
    """Per-block (u_k, N_k) schedule; block variables are scaled by 1/k^2."""

    blocks: tuple  # ((u_1, N_1), (u_2, N_2), ...)

    def __post_init__(self):
        if not self.blocks:
            raise InvalidParameterError("series spec needs at least one block")
        object.__setattr__(self, "blocks", tuple((float(u), int(n)) for u, n in self.blocks))

    @property
    def k_max(self):
        return len(self.blocks)

    def offsets(self):
        """m_k = N_1 + ... + N_{k-1} for k = 1..k_max+1."""
        out = [0]
        for _, n in self.blocks:
            out.append(out[-1] + n)
        return out


# ---------------------------------------------------------------------------
# Testing families from the necessity proofs


def make_three_point(fn, u, n_members):
    """Symmetric atoms at +-u with probability (2 N Psi(u))^{-1} each."""
    u = float(u)
    log_psi_u = fn.log_value(u)
    log_n_psi = math.log(n_members) + log_psi_u
    if log_n_psi <= 0:
        raise InvalidParameterError("need N * Psi(u) > 1 for valid probabilities")
    lp_side = -math.log(2.0) - log_n_psi
    lp_zero = log1mexp(-log_n_psi)
    return FiniteDist(
        np.array([-u, 0.0, u]),
        np.array([lp_side, lp_zero, lp_side]),
    )


def make_centered_bernoulli(fn, u, n_members):
    """Two atoms {1 - p, -p} with p = 1/(N Psi(u)); mean exactly zero."""
    log_n_psi = math.log(n_members) + fn.log_value(float(u))
    if log_n_psi <= 0:
        raise InvalidParameterError("need N * Psi(u) > 1 for valid probabilities")
    p = math.exp(-log_n_psi)
    return FiniteDist(
        np.array([-p, 1.0 - p]),
        np.array([log1mexp(-log_n_psi), -log_n_psi]),
    )


# ---------------------------------------------------------------------------
# Exact max and sum laws


def max_distribution(family, budget=4096):
    """Exact law of max_i ||X_i|| via per-member survival products at each level.

    Works in log survival space so atoms with astronomically small
    probabilities survive (the CDF product would round them away).
    """
    vals = np.sort(np.concatenate([d.norms() for d in family.dists]))
    keep = np.ones(vals.size, dtype=bool)
    keep[1:] = np.diff(vals) > VALUE_MERGE_TOL
    levels = vals[keep]
    if levels.size > budget:
        raise ResourceError(
            f"{levels.size} distinct norm levels exceed budget {budget}; use the Monte Carlo path"
        )

    # B[k] = ln P(max > levels[k]); two branches depending on whether the
    # complement product is representable
    log_b = np.full(levels.size, -math.inf)
    log_a0 = 0.0  # ln P(max <= levels[0]), the bottom atom, kept exactly
    for k, t in enumerate(levels[:-1]):
        log_comp = 0.0  # ln Prod (1 - P(||X_i|| > t))^{c_i}
        log_union = []
        for d, c in zip(family.dists, family.counts):
            s = logsumexp(d.log_probs[d.norms() > t + VALUE_MERGE_TOL])
            if s == -math.inf:
                continue
            log_comp += -math.inf if s >= -1e-15 else c * log1mexp(s)
            log_union.append(math.log(c) + s)
        if k == 0:
            log_a0 = log_comp
        if log_comp < -1e-9:
            log_b[k] = log1mexp(log_comp)
        elif log_union:
            # complement rounds to 1; the union bound is exact to double precision
            log_b[k] = logsumexp(log_union)
    # atom probabilities are survival differences, bottom atom is the complement
    lp = np.empty(levels.size)
    lp[0] = log_a0 if levels.size > 1 else 0.0
    for k in range(1, levels.size):
        b_prev, b_cur = log_b[k - 1], log_b[k]
        if b_prev == -math.inf or b_cur >= b_prev:
            lp[k] = -math.inf
        else:
            lp[k] = b_prev + log1mexp(b_cur - b_prev) if b_cur > -math.inf else b_prev
    keep = lp > -math.inf
    return FiniteDist(levels[keep], lp[keep])


def _lattice_decompose(dist):
    v = dist.values
    if v.size == 1:
        return float(v[0]), 1.0, np.array([0])
    diffs = np.diff(v)
    h = float(np.min(diffs))
    idx = (v - v[0]) / h
    if np.any(np.abs(idx - np.round(idx)) > 1e-9):
        raise InvalidParameterError("atoms do not lie on an arithmetic lattice")
    return float(v[0]), h, np.round(idx).astype(int)


def _convolve_log(a, b):
    """Log-domain convolution of two dense log-pmf index arrays."""
    out = np.empty(a.size + b.size - 1)
    for k in range(out.size):
        i_lo, i_hi = max(0, k - b.size + 1), min(a.size - 1, k)
        seg = a[i_lo : i_hi + 1] + b[k - i_hi : k - i_lo + 1][::-1]
        out[k] = logsumexp(seg)
    return out


def sum_distribution_iid_lattice(dist, n):
    """Exact law of the N-fold iid sum for a scalar lattice-supported law.

    Log-domain binary-power convolution; the extreme atom accumulates as a
    plain sum of log-probabilities, so single-path probabilities are exact.
    """
    if not dist.is_scalar:
        raise InvalidParameterError("lattice path requires scalar atoms")
    n = int(n)
    if n < 1:
        raise InvalidParameterError("n must be positive")
    base, h, idx = _lattice_decompose(dist)
    dense = np.full(int(idx[-1]) + 1, -math.inf)
    dense[idx] = dist.log_probs

    result, count = None, 0
    power, power_count = dense, 1
    m = n
    while m:
        if m & 1:
            result = power if result is None else _convolve_log(result, power)
            count += power_count
        m >>= 1
        if m:
            power = _convolve_log(power, power)
            power_count *= 2
    values = count * base + h * np.arange(result.size)
    keep = result > -math.inf
    return FiniteDist(values[keep], result[keep])


def sum_distribution_general(family, atom_budget=200_000):
    """Exact law of the sum by iterated pairwise merge; vectors add coordinatewise."""
    acc = None
    for d, c in zip(family.dists, family.counts):
        for _ in range(c):
            if acc is None:
                acc = d
                continue
            if acc.values.shape[0] * d.values.shape[0] > 4 * atom_budget:
                raise ResourceError(
                    f"convolution product {acc.values.shape[0]}x{d.values.shape[0]} exceeds "
                    f"atom budget {atom_budget}; raise the budget or use Monte Carlo"
                )
            if acc.is_scalar:
                vals = (acc.values[:, None] + d.values[None, :]).ravel()
            else:
                vals = (acc.values[:, None, :] + d.values[None, :, :]).reshape(-1, acc.dim)
            lps = (acc.log_probs[:, None] + d.log_probs[None, :]).ravel()
            acc = _merge_atoms(vals, lps, family.norm_tag)
            if acc.values.shape[0] > atom_budget:
                raise ResourceError(
                    f"{acc.values.shape[0]} atoms exceed budget {atom_budget}"
                )
    return acc


# ---------------------------------------------------------------------------
# Sampling


def sample(family, n, seed, row_lo=0, row_hi=None):
    """Realization matrix with one row per draw and one column per member.

    Row r is a pure function of (seed, r), so any row-range partition across
    workers reproduces the same matrix.
    """
    if n < 1:
        raise InvalidParameterError("n must be positive")
    row_hi = n if row_hi is None else row_hi
    u = counter_uniforms(seed, row_lo, row_hi, family.n_members)
    rows = row_hi - row_lo
    if family.dists[0].is_scalar:
        out = np.empty((rows, family.n_members))
    else:
        out = np.empty((rows, family.n_members, family.dists[0].dim))
    col = 0
    for d, c in zip(family.dists, family.counts):
        cdf = np.cumsum(d.probs)
        cdf[-1] = 1.0
        pick = np.searchsorted(cdf, u[:, col : col + c], side="right")
        pick = np.minimum(pick, d.values.shape[0] - 1)
        out[:, col : col + c] = d.values[pick]
        col += c
    return out
