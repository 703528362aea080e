"""Numpy implementation of the interpolation kernels.

Used when the compiled ``rnss._kernels`` extension is unavailable, and as the
reference the compiled kernels are tested against. All routines use the first
(modified Lagrange) barycentric form::

    f(x) = l(x) * sum_j w_j v_j / (x - x_j),   l(x) = prod_j (x - x_j)

and return node values verbatim when ``x`` coincides with a node.
"""
import numpy as np

_CHUNK = 16384


def bary_weights(nodes):
    nodes = np.asarray(nodes, dtype=np.float64)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def interp_eval(nodes, values, x):
    """Evaluate the interpolant through ``(nodes, values[:, k])`` at ``x``.

    ``values`` has shape (m, K); the result has shape (K,).
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    d = x - nodes
    hit = np.flatnonzero(d == 0.0)
    if hit.size:
        return values[hit[0]].copy()
    w = bary_weights(nodes)
    ell = np.prod(d)
    return ell * ((w / d) @ values)


def basis_matrix(nodes, points):
    """Lagrange basis values: ``out[i, j] = L_j(points[i])``."""
    nodes = np.asarray(nodes, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    w = bary_weights(nodes)
    d = points[:, None] - nodes[None, :]
    hit = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.prod(d, axis=1)[:, None] * w[None, :] / d
    rows = hit.any(axis=1)
    out[rows] = hit[rows].astype(np.float64)
    return out


def share_eval(secrets, witness, ys, points):
    """Batch evaluation of sharing polynomials.

    Row ``i`` interpolates ``(0, secrets[i])`` and ``(witness[i, j], ys[i, j])``
    and is evaluated at every entry of ``points``. Returns shape (N, P).
    """
    secrets = np.asarray(secrets, dtype=np.float64)
    witness = np.asarray(witness, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    n_rows = secrets.shape[0]
    out = np.empty((n_rows, points.shape[0]))
    for lo in range(0, n_rows, _CHUNK):
        hi = min(lo + _CHUNK, n_rows)
        out[lo:hi] = _share_chunk(secrets[lo:hi], witness[lo:hi], ys[lo:hi], points)
    return out


def _share_chunk(secrets, witness, ys, points):
    m = witness.shape[1] + 1
    nodes = np.concatenate([np.zeros((secrets.shape[0], 1)), witness], axis=1)
    vals = np.concatenate([secrets[:, None], ys], axis=1)
    diff = nodes[:, :, None] - nodes[:, None, :]
    idx = np.arange(m)
    diff[:, idx, idx] = 1.0
    w = 1.0 / np.prod(diff, axis=2)

    d = points[None, :, None] - nodes[:, None, :]
    hit = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = np.sum((w * vals)[:, None, :] / d, axis=2)
        out = np.prod(d, axis=2) * acc
    at_node = hit.any(axis=2)
    if at_node.any():
        which = np.argmax(hit, axis=2)
        exact = np.take_along_axis(vals[:, None, :], which[:, :, None], axis=2)[..., 0]
        out = np.where(at_node, exact, out)
    return out
