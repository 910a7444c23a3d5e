"""Compiled inner loop of the block-wise greedy Fourier model.

For one support window with real samples ``f`` and weights ``w`` the model
is built in the DFT domain.  ``P = DFT(w * r)`` is the weighted residual
spectrum and ``Wt = DFT(w)``.  Subtracting ``c * phi_k`` from the residual
shifts ``Wt`` by ``k`` in the spectrum::

    P[u] -= c * Wt[u - k]

so no transform is needed inside the loop.  Bins ``k`` and ``-k`` are
always updated together, which keeps the residual and the model real.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_TWO_PI = 2.0 * np.pi


@njit(cache=True, nogil=True)
def _twiddles(n):
    # e[k, m] = exp(-2j*pi*k*m/n); reduce k*m mod n first for accuracy
    e = np.empty((n, n), dtype=np.complex128)
    for k in range(n):
        for m in range(n):
            e[k, m] = np.exp(-1j * _TWO_PI * ((k * m) % n) / n)
    return e


@njit(cache=True, nogil=True)
def _twiddle_table(max_n):
    # table[n, :n, :n] holds the twiddles for transform length n
    table = np.zeros((max_n + 1, max_n, max_n), dtype=np.complex128)
    for n in range(1, max_n + 1):
        table[n, :n, :n] = _twiddles(n)
    return table


@njit(cache=True, nogil=True)
def _rdft2(a, ey, ex):
    """2-D DFT of real ``a``, filled in full from the half spectrum."""
    rows, cols = a.shape
    half = cols // 2 + 1
    tmp = np.zeros((rows, half), dtype=np.complex128)
    for m in range(rows):
        for l in range(half):
            acc = 0j
            for n in range(cols):
                acc += a[m, n] * ex[l, n]
            tmp[m, l] = acc
    out = np.empty((rows, cols), dtype=np.complex128)
    for k in range(rows):
        for l in range(half):
            acc = 0j
            for m in range(rows):
                acc += ey[k, m] * tmp[m, l]
            out[k, l] = acc
    for k in range(rows):
        for l in range(half, cols):
            out[k, l] = out[(rows - k) % rows, cols - l].conjugate()
    return out


@njit(cache=True, nogil=True)
def _argmax_bin(p):
    rows, cols = p.shape[0], p.shape[1]
    best_k, best_l, best_mag = 0, 0, -1.0
    for k in range(rows):
        for l in range(cols):
            v = p[k, l]
            mag = v.real * v.real + v.imag * v.imag
            if mag > best_mag:
                best_mag = mag
                best_k, best_l = k, l
    return best_k, best_l


@njit(cache=True, nogil=True)
def model_window(f, w, by0, by1, bx0, bx1, iterations, gamma, energies):
    """Greedy model of ``f`` under weights ``w``; returns it on the block.

    ``[by0, by1) x [bx0, bx1)`` is the block in window coordinates.  When
    ``energies`` has ``iterations + 1`` entries it receives the weighted
    residual energy before the first and after every iteration.
    """
    rows, cols = f.shape
    return _model_window(f, w, _twiddles(rows), _twiddles(cols), by0, by1, bx0, bx1, iterations, gamma, energies)


@njit(cache=True, nogil=True)
def _model_window(f, w, ey, ex, by0, by1, bx0, bx1, iterations, gamma, energies):
    rows, cols = f.shape
    p = _rdft2(w * f, ey, ex)
    wt = _rdft2(w, ey, ex)
    wsum = wt[0, 0].real

    bh, bw = by1 - by0, bx1 - bx0
    block = np.zeros((bh, bw), dtype=np.float64)
    trace = energies.shape[0] == iterations + 1
    full = np.zeros((rows, cols), dtype=np.float64)
    if trace:
        energies[0] = np.sum(w * f * f)

    # wt tiled 2x2 so shifted reads need no modulo
    wt2 = np.empty((2 * rows, 2 * cols), dtype=np.complex128)
    for u in range(2 * rows):
        for v in range(2 * cols):
            wt2[u, v] = wt[u % rows, v % cols]

    # w * r is real, so P[-u] == conj(P[u]): track only columns 0..cols//2
    half = cols // 2 + 1
    best_k, best_l = _argmax_bin(p[:, :half])
    for it in range(iterations):
        k, l = best_k, best_l
        self_conj = (rows - k) % rows == k and (cols - l) % cols == l
        if self_conj:
            c = complex(p[k, l].real / wsum, 0.0)
        else:
            c = p[k, l] / wsum
        gc = gamma * c
        gcc = gc.conjugate()
        # update the residual spectrum and find the next bin in one pass
        best_mag = -1.0
        for u in range(rows):
            row_a = u - k + rows
            row_b = u + k
            for v in range(half):
                if self_conj:
                    val = p[u, v] - gc * wt2[row_a, v - l + cols]
                else:
                    val = p[u, v] - gc * wt2[row_a, v - l + cols] - gcc * wt2[row_b, v + l]
                p[u, v] = val
                mag = val.real * val.real + val.imag * val.imag
                if mag > best_mag:
                    best_mag = mag
                    best_k, best_l = u, v
        # basis value phi_k(m, n) = conj(ey[k, m]) * conj(ex[l, n])
        scale = 1.0 if self_conj else 2.0
        for m in range(by0, by1):
            for n in range(bx0, bx1):
                phi = (ey[k, m] * ex[l, n]).conjugate()
                block[m - by0, n - bx0] += scale * (gc * phi).real
        if trace:
            energy = 0.0
            for m in range(rows):
                for n in range(cols):
                    phi = (ey[k, m] * ex[l, n]).conjugate()
                    full[m, n] += scale * (gc * phi).real
                    r = f[m, n] - full[m, n]
                    energy += w[m, n] * r * r
            energies[it + 1] = energy
    return block


@njit(cache=True, nogil=True)
def fse_image(values, known, block_size, margin, iterations, gamma, rho, fallback):
    """Reconstruct every block that holds unknown pixels, in raster order.

    Only originally known pixels carry weight, so blocks do not feed each
    other and the output at a pixel depends on the input within
    ``block_size + margin`` of it.
    """
    height, width = values.shape
    out = values.copy()
    no_trace = np.zeros(0, dtype=np.float64)
    table = _twiddle_table(min(max(height, width), block_size + 2 * margin))
    for by in range(0, height, block_size):
        by_end = min(by + block_size, height)
        for bx in range(0, width, block_size):
            bx_end = min(bx + block_size, width)
            todo = False
            for y in range(by, by_end):
                for x in range(bx, bx_end):
                    if not known[y, x]:
                        todo = True
            if not todo:
                continue
            y0, y1 = max(0, by - margin), min(height, by_end + margin)
            x0, x1 = max(0, bx - margin), min(width, bx_end + margin)
            f = np.zeros((y1 - y0, x1 - x0), dtype=np.float64)
            w = np.zeros((y1 - y0, x1 - x0), dtype=np.float64)
            wsum = 0.0
            for y in range(y0, y1):
                dy = max(by - y, 0, y - (by_end - 1))
                for x in range(x0, x1):
                    if known[y, x]:
                        dx = max(bx - x, 0, x - (bx_end - 1))
                        wv = rho ** max(dy, dx)
                        w[y - y0, x - x0] = wv
                        f[y - y0, x - x0] = values[y, x]
                        wsum += wv
            if wsum <= 0.0:
                for y in range(by, by_end):
                    for x in range(bx, bx_end):
                        if not known[y, x]:
                            out[y, x] = fallback
                continue
            rows, cols = y1 - y0, x1 - x0
            model = _model_window(
                f, w, table[rows, :rows, :rows], table[cols, :cols, :cols],
                by - y0, by_end - y0, bx - x0, bx_end - x0, iterations, gamma, no_trace,
            )
            for y in range(by, by_end):
                for x in range(bx, bx_end):
                    if not known[y, x]:
                        out[y, x] = model[y - by, x - bx]
    return out
