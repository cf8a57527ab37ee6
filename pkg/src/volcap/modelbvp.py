"""Closed-form spectra of the constant-coefficient model problems.

The building blocks of the variable-coefficient analysis are forms
int a |v_k|^2 (even order 2k) and their skew companions (odd order 2k-1)
with periodic boundary conditions on an interval of length l.  Their
eigenvalues are explicit, each with multiplicity two:

    even:  lambda_r = mu l^(2k)   / (2 pi ceil(r/2))^(2k),    r = 1, 2, ...
    odd:   lambda_r = |mu| l^(2k-1) / (2 pi ceil(r/2))^(2k-1), two-sided.

Even spectra are one-sided in sign(mu); odd spectra are symmetric,
lambda_{-r} = -lambda_r.  (The literal closed form for negative odd indices
would use floor(r/2), which divides by zero at r = 1; we index the negative
side symmetrically to the positive one instead.)

Sequences are generated lazily so capacity fits can consume thousands of
entries cheaply.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .galerkin import SpectrumResult

__all__ = ["ModelSpectrum", "exact_spectrum", "merge_direct_sum", "shift_bounds"]


@dataclass(frozen=True)
class ModelSpectrum:
    """Constant-coefficient model: coefficient mu, half-order k, length l."""

    mu: float
    k: int
    length: float = 1.0
    parity: str = "even"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("half-order k must be >= 1")
        if not 0.0 < self.length <= 1.0:
            raise ValueError("length must lie in (0, 1]")
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")

    @property
    def order(self):
        """Decay exponent j of the eigenvalues."""
        return 2 * self.k if self.parity == "even" else 2 * self.k - 1

    @property
    def capacity(self):
        """|mu| * l^j, the leading coefficient of |lambda_r| ~ xi/(pi r)^j."""
        return abs(self.mu) * self.length ** self.order

    def _magnitudes(self):
        j = self.order
        xi = self.capacity
        for r in itertools.count(1):
            yield xi / (2.0 * math.pi * math.ceil(r / 2)) ** j

    def positive_iter(self):
        """Nonincreasing positive eigenvalues (may be empty)."""
        if self.mu == 0.0:
            return iter(())
        if self.parity == "even" and self.mu < 0.0:
            return iter(())
        return self._magnitudes()

    def negative_iter(self):
        """Nondecreasing negative eigenvalues, most negative first."""
        if self.mu == 0.0:
            return iter(())
        if self.parity == "even" and self.mu > 0.0:
            return iter(())
        return (-v for v in self._magnitudes())


def exact_spectrum(model: ModelSpectrum, count: int) -> SpectrumResult:
    """First ``count`` entries of each monotone arrangement."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pos = np.array(list(itertools.islice(model.positive_iter(), count)))
    neg = np.array(list(itertools.islice(model.negative_iter(), count)))
    return SpectrumResult(positive=pos, negative=neg)


def _iter_from(spectrum_or_model, side):
    if isinstance(spectrum_or_model, ModelSpectrum):
        return (spectrum_or_model.positive_iter() if side == "+"
                else spectrum_or_model.negative_iter())
    arr = (spectrum_or_model.positive if side == "+"
           else spectrum_or_model.negative)
    return iter(arr)


def merge_direct_sum(spectra, count: int) -> SpectrumResult:
    """Monotone arrangement of the multiset union, truncated to ``count``.

    Counting functions add under direct sums, so the merged sequence is just
    the sorted union of the inputs.  Accepts SpectrumResult values and lazy
    ModelSpectrum generators alike.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    pos = heapq.merge(*[_iter_from(s, "+") for s in spectra], reverse=True)
    neg = heapq.merge(*[_iter_from(s, "-") for s in spectra])
    return SpectrumResult(
        positive=np.array(list(itertools.islice(pos, count))),
        negative=np.array(list(itertools.islice(neg, count))))


def shift_bounds(model: ModelSpectrum, m: int, r: int):
    """Two-sided sandwich for the r-th eigenvalue of a direct sum of m forms.

    For |r| >= m*k,

        xi / (pi (|r| - 2mk - p))^j  >=  |lambda_r|  >=  xi / (pi (|r| + 2mk + p))^j

    with parity correction p = 0 for even |r|, 1 for odd |r|.  The upper
    bound degenerates to +inf when |r| - 2mk - p is not positive.  Returns
    (lower, upper); for negative r of an odd model the bounds are mirrored.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rr = abs(r)
    if rr < m * model.k:
        raise ValueError(f"index |r|={rr} below validity threshold m*k={m * model.k}")
    if r < 0 and model.parity == "even" and model.mu > 0:
        raise ValueError("even model with mu > 0 has no negative eigenvalues")
    j = model.order
    xi = model.capacity
    p = rr % 2
    lower = xi / (math.pi * (rr + 2 * m * model.k + p)) ** j
    denom = rr - 2 * m * model.k - p
    upper = math.inf if denom <= 0 else xi / (math.pi * denom) ** j
    if r < 0 or (model.parity == "even" and model.mu < 0):
        return (-upper, -lower)
    return (lower, upper)
