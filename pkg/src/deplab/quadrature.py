"""Composite Gauss-Legendre rules on [0, 1].

The unit interval is split into equal panels with a fixed number of
Legendre nodes each. Densities that are smooth inside panels (including
checkerboard densities whose breakpoints fall on panel edges) are then
integrated to machine precision.
"""

from functools import lru_cache

import numpy as np

NODES_PER_PANEL = 16


@lru_cache(maxsize=16)
def rule(order=256, per_panel=NODES_PER_PANEL):
    """Nodes, weights and panel index of each node for ``order`` points."""
    if order % per_panel:
        raise ValueError(f"order must be a multiple of {per_panel}")
    panels = order // per_panel
    x, w = np.polynomial.legendre.leggauss(per_panel)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    h = 1.0 / panels
    starts = np.arange(panels) * h
    nodes = (starts[:, None] + h * x[None, :]).ravel()
    weights = np.tile(h * w, panels)
    panel = np.repeat(np.arange(panels), per_panel)
    for a in (nodes, weights, panel):
        a.flags.writeable = False
    return nodes, weights, panel


def partial_rule(order=256, per_panel=NODES_PER_PANEL):
    """Rules for ``int_0^{t_m}`` at every node ``t_m`` of :func:`rule`.

    Returns ``(starts, sub_nodes, sub_weights)`` where ``sub_nodes[m]`` and
    ``sub_weights[m]`` integrate over ``[panel_start(t_m), t_m]``; whole
    panels below that are covered by the base rule.
    """
    nodes, _, panel = rule(order, per_panel)
    x, w = np.polynomial.legendre.leggauss(per_panel)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    starts = panel / (order // per_panel)
    length = nodes - starts
    sub_nodes = starts[:, None] + length[:, None] * x[None, :]
    sub_weights = length[:, None] * w[None, :]
    return starts, sub_nodes, sub_weights


def cumulative(values_fn, order=256, per_panel=NODES_PER_PANEL):
    """``int_0^{t_m} f(s) ds`` at each node, for a vectorised ``f`` of one argument.

    ``values_fn`` receives an array of abscissae and may return an array with
    extra leading axes (e.g. one row per conditioning value); integration is
    along the last axis.
    """
    nodes, weights, panel = rule(order, per_panel)
    panels = order // per_panel
    full = values_fn(nodes) * weights
    # integral over each complete panel
    per = full.reshape(full.shape[:-1] + (panels, per_panel)).sum(axis=-1)
    below = np.concatenate([np.zeros(per.shape[:-1] + (1,)), np.cumsum(per, axis=-1)[..., :-1]],
                           axis=-1)
    _, sub_nodes, sub_weights = partial_rule(order, per_panel)
    part = (values_fn(sub_nodes.ravel()).reshape(full.shape[:-1] + sub_nodes.shape)
            * sub_weights).sum(axis=-1)
    return below[..., panel] + part
