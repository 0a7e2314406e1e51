# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled engine kernels (fast path).

These replay exactly the decision sequence of the pure backend: same
candidate scan order, same floating-point expression shapes, and the same
random-stream contract (each transmission consumes exactly N uniform
doubles drawn straight from the generator's bit stream, one per node in
node order).  Any observable difference between the two backends is a bug.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport sqrt
from libc.stdint cimport int32_t, int64_t, uint8_t
from numpy.random cimport bitgen_t

import numpy as np

NAME = "cython"

# Heuristic codes shared with the backend dispatcher.
KIND_ORIGINAL = 0
KIND_SCORE = 1
KIND_EXPECTED = 2
KIND_THRESHOLD = 3


cdef bitgen_t* _bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("rng does not expose a BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef int _select(int kind, double tau, int ego,
                 const int64_t[::1] indptr, const int32_t[::1] indices,
                 const double[:, ::1] P,
                 uint8_t[::1] in_one, uint8_t[::1] selected, uint8_t[::1] unc,
                 double[::1] q, int32_t[::1] cover, int32_t[::1] targets,
                 int32_t[::1] relays,
                 int* n_mandatory, int* n_residual) except -1:
    """Relay selection for ``ego``; writes relays in selection order.

    ``in_one``/``selected``/``unc`` must be all-zero on entry and are
    restored to all-zero before returning; the other buffers are scratch.
    The residual uncovered set (ascending) is compacted into the front of
    ``targets``.
    """
    cdef int64_t a = indptr[ego]
    cdef int64_t b = indptr[ego + 1]
    cdef int64_t i, j
    cdef int v, w, c, deg, take, tmp
    cdef int k = 0, nt = 0, nunc = 0, nres = 0
    cdef int best_v, best_deg
    cdef double s, p_sum, best_s

    for i in range(a, b):
        in_one[indices[i]] = 1

    # Coverage targets: advertised nodes that are neither ego nor one-hop.
    for i in range(a, b):
        v = indices[i]
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if w == ego or in_one[w]:
                continue
            if not unc[w]:
                unc[w] = 1
                cover[w] = 1
                q[w] = 1.0
                targets[nt] = w
                nt += 1
            else:
                cover[w] += 1

    # Step 1: every sole coverer of some target is mandatory.
    for i in range(a, b):
        v = indices[i]
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if unc[w] and cover[w] == 1:
                relays[k] = v
                k += 1
                selected[v] = 1
                break
    n_mandatory[0] = k

    # Apply mandatory coverage (threshold mode only accumulates q here;
    # the first threshold check runs after all mandatory relays).
    for i in range(k):
        v = relays[i]
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if w == ego or in_one[w]:
                continue
            if kind == KIND_THRESHOLD:
                q[w] = q[w] * (1.0 - P[v, w])
            else:
                unc[w] = 0
    if kind == KIND_THRESHOLD:
        for i in range(nt):
            w = targets[i]
            if unc[w] and 1.0 - q[w] >= tau:
                unc[w] = 0

    for i in range(nt):
        if unc[targets[i]]:
            nunc += 1

    # Step 2: greedy picks until nothing is uncovered (or nothing helps).
    while nunc > 0:
        best_v = -1
        best_s = 0.0
        best_deg = -1
        for i in range(a, b):
            v = indices[i]
            if selected[v]:
                continue
            c = 0
            p_sum = 0.0
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if unc[w]:
                    c += 1
                    p_sum += P[v, w]
            if c == 0:
                continue
            if kind == KIND_ORIGINAL:
                s = <double> c
            elif kind == KIND_SCORE:
                s = (<double> c) * P[ego, v]
            else:
                # Expected ranking; the threshold heuristic reuses it and
                # differs only in how nodes leave the uncovered set.
                s = P[ego, v] * (p_sum / <double> c)
            deg = <int> (indptr[v + 1] - indptr[v])
            take = 0
            if best_v < 0:
                take = 1
            elif s > best_s:
                take = 1
            elif s == best_s:
                if deg > best_deg:
                    take = 1
                elif deg == best_deg and v < best_v:
                    take = 1
            if take:
                best_v = v
                best_s = s
                best_deg = deg
        if best_v < 0:
            break
        relays[k] = best_v
        k += 1
        selected[best_v] = 1
        for j in range(indptr[best_v], indptr[best_v + 1]):
            w = indices[j]
            if unc[w]:
                if kind == KIND_THRESHOLD:
                    q[w] = q[w] * (1.0 - P[best_v, w])
                    if 1.0 - q[w] >= tau:
                        unc[w] = 0
                        nunc -= 1
                else:
                    unc[w] = 0
                    nunc -= 1

    # Reset one-hop marks; compact + sort the residual into targets[0:nres].
    for i in range(a, b):
        v = indices[i]
        in_one[v] = 0
        selected[v] = 0
    for i in range(nt):
        w = targets[i]
        if unc[w]:
            unc[w] = 0
            targets[nres] = w
            nres += 1
    for i in range(1, nres):
        tmp = targets[i]
        j = i - 1
        while j >= 0 and targets[j] > tmp:
            targets[j + 1] = targets[j]
            j -= 1
        targets[j + 1] = tmp
    n_residual[0] = nres
    return k


cdef class _Workspace:
    """Per-call scratch buffers, reused across selections within a trial."""
    cdef object in_one_a, selected_a, unc_a, q_a, cover_a, targets_a, relays_a
    cdef uint8_t[::1] in_one, selected, unc
    cdef double[::1] q
    cdef int32_t[::1] cover, targets, relays

    def __cinit__(self, int n):
        self.in_one_a = np.zeros(n, dtype=np.uint8)
        self.selected_a = np.zeros(n, dtype=np.uint8)
        self.unc_a = np.zeros(n, dtype=np.uint8)
        self.q_a = np.empty(n, dtype=np.float64)
        self.cover_a = np.empty(n, dtype=np.int32)
        self.targets_a = np.empty(n, dtype=np.int32)
        self.relays_a = np.empty(n, dtype=np.int32)
        self.in_one = self.in_one_a
        self.selected = self.selected_a
        self.unc = self.unc_a
        self.q = self.q_a
        self.cover = self.cover_a
        self.targets = self.targets_a
        self.relays = self.relays_a


def select_relays(const int64_t[::1] indptr, const int32_t[::1] indices,
                  const double[:, ::1] link_prob, int ego, int kind, double tau):
    """Standalone selection: returns (relays, n_mandatory, residual)."""
    cdef int n = <int> link_prob.shape[0]
    cdef _Workspace ws = _Workspace(n)
    cdef int nm = 0, nres = 0
    cdef int k = _select(kind, tau, ego, indptr, indices, link_prob,
                         ws.in_one, ws.selected, ws.unc, ws.q, ws.cover,
                         ws.targets, ws.relays, &nm, &nres)
    return (ws.relays_a[:k].copy(), nm, ws.targets_a[:nres].copy())


def run_trial(const int64_t[::1] indptr, const int32_t[::1] indices,
              const double[:, ::1] link_prob, const double[:, ::1] positions,
              int source, int kind, double tau, object rng):
    """One broadcast cascade; see the pure backend for the contract."""
    cdef int n = <int> link_prob.shape[0]
    cdef bitgen_t* bg = _bitgen(rng)
    cdef _Workspace ws = _Workspace(n)

    received_a = np.zeros(n, dtype=np.uint8)
    queue_a = np.empty(n, dtype=np.int32)
    tx_a = np.empty(n, dtype=np.int32)
    sizes_a = np.empty(n, dtype=np.int32)
    desig_a = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] received = received_a
    cdef int32_t[::1] queue = queue_a
    cdef int32_t[::1] tx = tx_a
    cdef int32_t[::1] sizes = sizes_a
    cdef uint8_t[::1] desig = desig_a
    dists = []

    cdef int qh = 0, qt = 0, ntx = 0
    cdef int s, w, k, i, nm, nres
    cdef double u, dx, dy

    received[source] = 1
    queue[qt] = source
    qt += 1
    while qh < qt:
        s = queue[qh]
        qh += 1
        k = _select(kind, tau, s, indptr, indices, link_prob,
                    ws.in_one, ws.selected, ws.unc, ws.q, ws.cover,
                    ws.targets, ws.relays, &nm, &nres)
        tx[ntx] = s
        sizes[ntx] = k
        ntx += 1
        for i in range(k):
            w = ws.relays[i]
            dx = positions[s, 0] - positions[w, 0]
            dy = positions[s, 1] - positions[w, 1]
            dists.append(sqrt(dx * dx + dy * dy))
            desig[w] = 1
        for w in range(n):
            u = bg.next_double(bg.state)
            if u < link_prob[s, w] and not received[w]:
                received[w] = 1
                if desig[w]:
                    queue[qt] = w
                    qt += 1
        for i in range(k):
            desig[ws.relays[i]] = 0
    return (
        received_a,
        tx_a[:ntx].copy(),
        sizes_a[:ntx].copy(),
        np.asarray(dists, dtype=np.float64),
    )


def batch_delivery(const int64_t[::1] indptr, const int32_t[::1] indices,
                   const double[:, ::1] link_prob, int source, int kind,
                   double tau, int n_trials, object rng):
    """Received-node counts for repeated cascades on one fixed instance."""
    cdef int n = <int> link_prob.shape[0]
    cdef bitgen_t* bg = _bitgen(rng)
    cdef _Workspace ws = _Workspace(n)

    desig_all_a = np.zeros((n, n), dtype=np.uint8)
    cdef uint8_t[:, ::1] desig_all = desig_all_a
    cdef int s, w, k, i, nm, nres
    for s in range(n):
        k = _select(kind, tau, s, indptr, indices, link_prob,
                    ws.in_one, ws.selected, ws.unc, ws.q, ws.cover,
                    ws.targets, ws.relays, &nm, &nres)
        for i in range(k):
            desig_all[s, ws.relays[i]] = 1

    counts_a = np.empty(n_trials, dtype=np.int64)
    cdef int64_t[::1] counts = counts_a
    received_a = np.zeros(n, dtype=np.uint8)
    queue_a = np.empty(n, dtype=np.int32)
    cdef uint8_t[::1] received = received_a
    cdef int32_t[::1] queue = queue_a
    cdef int qh, qt, t, got
    cdef double u

    for t in range(n_trials):
        for w in range(n):
            received[w] = 0
        received[source] = 1
        queue[0] = source
        qh = 0
        qt = 1
        got = 1
        while qh < qt:
            s = queue[qh]
            qh += 1
            for w in range(n):
                u = bg.next_double(bg.state)
                if u < link_prob[s, w] and not received[w]:
                    received[w] = 1
                    got += 1
                    if desig_all[s, w]:
                        queue[qt] = w
                        qt += 1
        counts[t] = got
    return counts_a
