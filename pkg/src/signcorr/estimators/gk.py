"""Gnanadesikan-Kettenring correlation from a robust scale estimator."""

from __future__ import annotations

from .._validate import as_data
from ..errors import DegeneracyError
from ..types import CorrEstimate
from .scale import scale_by_name

__all__ = ["gk_corr"]


def _scale_or_zero(v, scale):
    # a sum or difference concentrated at one value has scale zero
    try:
        return scale_by_name(v, scale).value
    except DegeneracyError:
        return 0.0


def gk_corr(data, scale: str = "qn") -> CorrEstimate:
    """rho = (s^2(u) - s^2(v)) / (s^2(u) + s^2(v)) with u, v the sum and
    difference of the standardised margins."""
    x = as_data(data, p=2)
    alpha = scale_by_name(x[:, 0], scale).value
    beta = scale_by_name(x[:, 1], scale).value
    if not (alpha > 0.0 and beta > 0.0):
        raise DegeneracyError("zero scale in a margin")
    zx = x[:, 0] / alpha
    zy = x[:, 1] / beta
    su = _scale_or_zero(zx + zy, scale) ** 2
    sv = _scale_or_zero(zx - zy, scale) ** 2
    if su + sv == 0.0:
        raise DegeneracyError("zero scale of both sum and difference")
    rho = (su - sv) / (su + sv)
    ident = "gk_qn" if scale.lower() == "qn" else "gk_tau"
    return CorrEstimate(ident, min(1.0, max(-1.0, rho)), n_used=x.shape[0],
                        diagnostics={"scale_x": alpha, "scale_y": beta})
