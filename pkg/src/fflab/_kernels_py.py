"""Numpy fallback for the transform-evaluation kernel.

Mirrors fflab._kernels.eval_batch: same DAG walk, vectorised over the
frequency axis instead of compiled per-frequency loops.
"""

import numpy as np


def eval_batch(lams, node_r, children, letter_p, letter_t, center, width, tol):
    lams = np.asarray(lams, dtype=np.float64)
    m = lams.size
    nodes = len(node_r)
    nlet = len(letter_p)
    two_pi_i = 2j * np.pi

    W = np.zeros((nodes, m), dtype=np.complex128)
    W[0] = 1.0
    out = np.zeros(m, dtype=np.complex128)
    for u in range(nodes):
        w = W[u]
        active = w != 0
        if not active.any():
            continue
        r = node_r[u]
        if children[u, 0] < 0:
            leaf = active
        else:
            leaf = active & (np.pi * np.abs(r * lams) * width <= tol)
        if leaf.any():
            out[leaf] += w[leaf] * np.exp(two_pi_i * lams[leaf] * (r * center))
        grow = active & ~leaf
        if grow.any():
            lg = lams[grow]
            wg = w[grow]
            for i in range(nlet):
                W[children[u, i], grow] += (
                    wg * letter_p[i] * np.exp(two_pi_i * lg * (r * letter_t[i]))
                )
    return out
