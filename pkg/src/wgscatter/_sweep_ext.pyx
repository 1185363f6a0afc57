# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled amplitude sweep kernel; same contract as _sweep_py.sweep."""
import numpy as np
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy

ctypedef double complex cplx


cdef int _grow(Py_ssize_t need, Py_ssize_t *cap, Py_ssize_t r,
               Py_ssize_t **items, Py_ssize_t **bins, Py_ssize_t **chans,
               cplx **vecs) noexcept nogil:
    cdef Py_ssize_t new_cap = cap[0]
    cdef void *p
    if need <= new_cap:
        return 0
    while new_cap < need:
        new_cap = 2 * new_cap + 1024
    p = realloc(items[0], new_cap * sizeof(Py_ssize_t))
    if p == NULL:
        return -1
    items[0] = <Py_ssize_t *> p
    p = realloc(bins[0], new_cap * sizeof(Py_ssize_t))
    if p == NULL:
        return -1
    bins[0] = <Py_ssize_t *> p
    p = realloc(chans[0], new_cap * sizeof(Py_ssize_t))
    if p == NULL:
        return -1
    chans[0] = <Py_ssize_t *> p
    p = realloc(vecs[0], new_cap * r * sizeof(cplx))
    if p == NULL:
        return -1
    vecs[0] = <cplx *> p
    cap[0] = new_cap
    return 0


def _csr(mats):
    """Row-compressed nonzeros of a stack of matrices (..., rows, cols)."""
    # wraparound is off module-wide, so index shapes from the front
    flat = mats.reshape(mats.size // mats.shape[mats.ndim - 1], mats.shape[mats.ndim - 1])
    nz = flat != 0
    ptr = np.zeros(flat.shape[0] + 1, dtype=np.intp)
    np.cumsum(nz.sum(axis=1), out=ptr[1:])
    rows, cols = np.nonzero(nz)
    return ptr, np.ascontiguousarray(cols, dtype=np.intp), np.ascontiguousarray(flat[rows, cols])


cdef inline int _matvec(const Py_ssize_t *ptr, const Py_ssize_t *col, const double *val,
                        Py_ssize_t row0, Py_ssize_t nrows, const double *x,
                        double *y) noexcept nogil:
    # y = A x over the stored nonzeros of rows row0 .. row0+nrows; returns 1 if y != 0
    cdef Py_ssize_t a, j, b
    cdef double re, im, vr, vi
    cdef int nz = 0
    for a in range(nrows):
        re = 0.0
        im = 0.0
        for j in range(ptr[row0 + a], ptr[row0 + a + 1]):
            b = col[j]
            vr = val[2 * j]
            vi = val[2 * j + 1]
            re = re + vr * x[2 * b] - vi * x[2 * b + 1]
            im = im + vr * x[2 * b + 1] + vi * x[2 * b]
        y[2 * a] = re
        y[2 * a + 1] = im
        if re != 0 or im != 0:
            nz = 1
    return nz


def sweep(const cplx[:, ::1] states, const Py_ssize_t[::1] start,
          U, const Py_ssize_t[::1] uidx, E, const Py_ssize_t[::1] eidx):
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t d = states.shape[1]
    cdef Py_ssize_t B = uidx.shape[0]
    cdef Py_ssize_t M = E.shape[1]
    cdef Py_ssize_t r = E.shape[2]
    u_ptr_a, u_col_a, u_val_a = _csr(np.asarray(U))
    e_ptr_a, e_col_a, e_val_a = _csr(np.asarray(E))
    cdef const Py_ssize_t[::1] u_ptr = u_ptr_a, u_col = u_col_a
    cdef const Py_ssize_t[::1] e_ptr = e_ptr_a, e_col = e_col_a
    cdef const double[::1] u_val = u_val_a.view(np.float64)
    cdef const double[::1] e_val = e_val_a.view(np.float64)
    cdef const Py_ssize_t *up = &u_ptr[0]
    cdef const Py_ssize_t *ep = &e_ptr[0]
    # keep valid pointers even when a matrix stack has no nonzeros at all
    cdef const Py_ssize_t *uc = &u_col[0] if u_col.shape[0] else NULL
    cdef const Py_ssize_t *ec = &e_col[0] if e_col.shape[0] else NULL
    cdef const double *uv = &u_val[0] if u_val.shape[0] else NULL
    cdef const double *ev = &e_val[0] if e_val.shape[0] else NULL
    cdef Py_ssize_t cap = 0, count = 0
    cdef Py_ssize_t *items = NULL
    cdef Py_ssize_t *bins = NULL
    cdef Py_ssize_t *chans = NULL
    cdef cplx *vecs = NULL
    cdef double *s = <double *> malloc(2 * d * sizeof(double))
    cdef double *tmp = <double *> malloc(2 * d * sizeof(double))
    cdef double *v = <double *> malloc(2 * r * sizeof(double))
    cdef double *swap
    cdef Py_ssize_t i, k, c, a, e, u
    cdef int failed = 0
    if s == NULL or tmp == NULL or v == NULL:
        free(s); free(tmp); free(v)
        raise MemoryError()
    with nogil:
        for i in range(n):
            for a in range(d):
                s[2 * a] = states[i, a].real
                s[2 * a + 1] = states[i, a].imag
            for k in range(start[i], B):
                e = eidx[k]
                for c in range(M):
                    if _matvec(ep, ec, ev, (e * M + c) * r, r, s, v):
                        if _grow(count + 1, &cap, r, &items, &bins, &chans, &vecs) != 0:
                            failed = 1
                            break
                        items[count] = i
                        bins[count] = k
                        chans[count] = c
                        memcpy(&vecs[count * r], v, r * sizeof(cplx))
                        count += 1
                if failed:
                    break
                u = uidx[k]
                _matvec(up, uc, uv, u * d, d, s, tmp)
                swap = s
                s = tmp
                tmp = swap
            if failed:
                break
    free(s)
    free(tmp)
    free(v)
    if failed:
        free(items); free(bins); free(chans); free(vecs)
        raise MemoryError("sweep output buffer allocation failed")
    out_i = np.empty(count, dtype=np.intp)
    out_k = np.empty(count, dtype=np.intp)
    out_c = np.empty(count, dtype=np.intp)
    out_v = np.empty((count, r), dtype=complex)
    cdef Py_ssize_t[::1] oi = out_i, ok = out_k, oc = out_c
    cdef cplx[:, ::1] ov = out_v
    for i in range(count):
        oi[i] = items[i]
        ok[i] = bins[i]
        oc[i] = chans[i]
        for a in range(r):
            ov[i, a] = vecs[i * r + a]
    free(items); free(bins); free(chans); free(vecs)
    return out_i, out_k, out_c, out_v
