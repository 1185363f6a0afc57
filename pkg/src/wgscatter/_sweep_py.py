"""Pure numpy implementation of the amplitude sweep kernel.

See kernels.sweep for the contract.  Work is vectorized over items: all
items whose start edge has been reached are advanced together bin by bin.
"""
import numpy as np


def sweep(states, start, U, uidx, E, eidx):
    n, d = states.shape
    B = uidx.shape[0]
    M, r = E.shape[1], E.shape[2]
    empty = (np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0, np.intp),
             np.empty((0, r), complex))
    if n == 0:
        return empty
    order = np.argsort(start, kind="stable")
    st = start[order]
    S = np.array(states[order], dtype=complex)
    Et = np.swapaxes(E, 2, 3)
    Ut = np.swapaxes(U, 1, 2)
    out_i, out_k, out_c, out_v = [], [], [], []
    k0 = int(st[0])
    for k in range(k0, B):
        na = int(np.searchsorted(st, k, side="right"))
        act = S[:na]
        e = eidx[k]
        for c in range(M):
            V = act @ Et[e, c]
            nz = np.flatnonzero(np.any(V != 0, axis=1))
            if nz.size:
                out_i.append(order[nz])
                out_k.append(np.full(nz.size, k, np.intp))
                out_c.append(np.full(nz.size, c, np.intp))
                out_v.append(V[nz])
        S[:na] = act @ Ut[uidx[k]]
    if not out_i:
        return empty
    items = np.concatenate(out_i)
    bins = np.concatenate(out_k)
    chans = np.concatenate(out_c)
    vecs = np.concatenate(out_v)
    perm = np.lexsort((chans, bins, items))
    return items[perm], bins[perm], chans[perm], vecs[perm]
