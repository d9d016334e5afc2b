# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Mirrors _core_py operation for operation: swap descent for k-medoids
and the per-device minimum-power rate solver.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log2, pow
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef double _IMPROVEMENT_EPS = 1e-12


def pam(dist_in, medoids, int max_sweeps=512):
    """Best-improvement swap descent; same contract as the python backend."""
    dist_arr = np.ascontiguousarray(dist_in, dtype=np.float64)
    cdef double[:, ::1] dist = dist_arr
    cdef Py_ssize_t n_points = dist.shape[0]
    med_arr = np.sort(np.asarray(medoids, dtype=np.intp))
    cdef Py_ssize_t[::1] med = med_arr
    cdef Py_ssize_t n_med = med.shape[0]

    labels_arr = np.zeros(n_points, dtype=np.intp)
    cdef Py_ssize_t[::1] labels = labels_arr
    d1_arr = np.zeros(n_points)
    d2_arr = np.zeros(n_points)
    is_med_arr = np.zeros(n_points, dtype=np.uint8)
    cdef double[::1] d1 = d1_arr
    cdef double[::1] d2 = d2_arr
    cdef unsigned char[::1] is_med = is_med_arr

    cdef Py_ssize_t sweep, j, slot, h, best_slot, best_h
    cdef double cost, best_delta, delta, dj, nd, tmp
    cdef bint finished = False

    for sweep in range(max_sweeps):
        cost = 0.0
        for j in range(n_points):
            d1[j] = INFINITY
            d2[j] = INFINITY
            labels[j] = 0
            for slot in range(n_med):
                tmp = dist[j, med[slot]]
                if tmp < d1[j]:
                    d2[j] = d1[j]
                    d1[j] = tmp
                    labels[j] = slot
                elif tmp < d2[j]:
                    d2[j] = tmp
            cost += d1[j]

        for j in range(n_points):
            is_med[j] = 0
        for slot in range(n_med):
            is_med[med[slot]] = 1

        best_delta = 0.0
        best_slot = -1
        best_h = -1
        for slot in range(n_med):
            for h in range(n_points):
                if is_med[h]:
                    continue
                delta = 0.0
                for j in range(n_points):
                    dj = dist[j, h]
                    if labels[j] == slot:
                        nd = d2[j] if d2[j] < dj else dj
                    else:
                        nd = d1[j] if d1[j] < dj else dj
                    delta += nd - d1[j]
                if best_slot < 0 or delta < best_delta:
                    best_delta = delta
                    best_slot = slot
                    best_h = h
        if best_slot < 0 or best_delta >= -_IMPROVEMENT_EPS:
            finished = True
            break
        med[best_slot] = best_h
        med_arr.sort()
    if not finished:
        raise RuntimeError("swap descent did not terminate")

    cost = 0.0
    for j in range(n_points):
        d1[j] = INFINITY
        labels[j] = 0
        for slot in range(n_med):
            tmp = dist[j, med[slot]]
            if tmp < d1[j]:
                d1[j] = tmp
                labels[j] = slot
        cost += d1[j]
    return med_arr, labels_arr, cost


cdef double _level_for_target(double* y, Py_ssize_t m, double target):
    cdef double acc = 0.0
    cdef double level
    cdef Py_ssize_t i
    for i in range(m):
        acc += y[i]
        level = (target + acc) / (i + 1)
        if i + 1 == m or level <= y[i + 1]:
            return level
    return (target + acc) / m


cdef double _level_for_budget(double* c, Py_ssize_t m, double budget):
    cdef double acc = 0.0
    cdef double chi
    cdef Py_ssize_t i
    for i in range(m):
        acc += c[i]
        chi = (budget + acc) / (i + 1)
        if i + 1 == m or chi <= c[i + 1]:
            return log2(chi)
    return log2((budget + acc) / m)


def solve_rates(c_in, double target, floors_in, double p_max):
    """Minimum-power rate split for one device; see the python backend."""
    c_arr = np.ascontiguousarray(c_in, dtype=np.float64)
    f_arr = np.ascontiguousarray(floors_in, dtype=np.float64)
    cdef double[::1] c = c_arr
    cdef double[::1] fl = f_arr
    cdef Py_ssize_t m = c.shape[0]

    cdef double* y = <double*> malloc(m * sizeof(double))
    cdef double* rates = <double*> malloc(m * sizeof(double))
    cdef double* buf = <double*> malloc(m * sizeof(double))
    cdef Py_ssize_t* order = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    cdef unsigned char* pinned = <unsigned char*> malloc(m)
    if y == NULL or rates == NULL or buf == NULL or order == NULL or pinned == NULL:
        free(y); free(rates); free(buf); free(order); free(pinned)
        raise MemoryError()

    cdef Py_ssize_t i, j, it, cnt
    cdef double level, power, floor_power, pinned_sum, pinned_power, remaining
    cdef Py_ssize_t swap
    cdef bint changed
    cdef int mode
    try:
        for i in range(m):
            y[i] = log2(c[i])
            rates[i] = 0.0
            pinned[i] = 0
            order[i] = i
        for i in range(1, m):
            j = i
            while j > 0 and (
                y[order[j - 1]] > y[order[j]]
                or (y[order[j - 1]] == y[order[j]] and order[j - 1] > order[j])
            ):
                swap = order[j - 1]
                order[j - 1] = order[j]
                order[j] = swap
                j -= 1

        level = 0.0
        for it in range(m + 1):
            pinned_sum = 0.0
            for i in range(m):
                if pinned[i]:
                    pinned_sum += fl[i]
            remaining = target - pinned_sum
            cnt = 0
            for i in range(m):
                if not pinned[order[i]]:
                    buf[cnt] = y[order[i]]
                    cnt += 1
            if remaining > 0.0 and cnt > 0:
                level = _level_for_target(buf, cnt, remaining)
            else:
                level = -INFINITY
            changed = False
            for i in range(m):
                if pinned[i]:
                    rates[i] = fl[i]
                    continue
                rates[i] = level - y[i] if level > y[i] else 0.0
                if rates[i] < fl[i] - 1e-15:
                    pinned[i] = 1
                    rates[i] = fl[i]
                    changed = True
            if not changed:
                break

        power = 0.0
        for i in range(m):
            power += c[i] * (pow(2.0, rates[i]) - 1.0)
        if power <= p_max * (1.0 + 1e-12):
            mode = 0
            return [rates[i] for i in range(m)], level, mode

        floor_power = 0.0
        for i in range(m):
            floor_power += c[i] * (pow(2.0, fl[i]) - 1.0)
        if floor_power > p_max:
            for i in range(m):
                buf[i] = c[order[i]]
            level = _level_for_budget(buf, m, p_max)
            for i in range(m):
                rates[i] = level - y[i] if level > y[i] else 0.0
            mode = 2
            return [rates[i] for i in range(m)], level, mode

        for i in range(m):
            pinned[i] = 0
        for it in range(m + 1):
            pinned_power = 0.0
            for i in range(m):
                if pinned[i]:
                    pinned_power += c[i] * (pow(2.0, fl[i]) - 1.0)
            cnt = 0
            for i in range(m):
                if not pinned[order[i]]:
                    buf[cnt] = c[order[i]]
                    cnt += 1
            if cnt > 0:
                level = _level_for_budget(buf, cnt, p_max - pinned_power)
            else:
                level = -INFINITY
            changed = False
            for i in range(m):
                if pinned[i]:
                    rates[i] = fl[i]
                    continue
                rates[i] = level - y[i] if level > y[i] else 0.0
                if rates[i] < fl[i] - 1e-15:
                    pinned[i] = 1
                    rates[i] = fl[i]
                    changed = True
            if not changed:
                break
        mode = 1
        return [rates[i] for i in range(m)], level, mode
    finally:
        free(y)
        free(rates)
        free(buf)
        free(order)
        free(pinned)
