# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled sampler kernels.

Operation-for-operation mirror of ``_pykernels.py``; see that module for the
array conventions.  Random numbers come from the numpy ``Generator`` passed
in, through its C-level bit generator, so both backends consume the stream
identically.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, INFINITY
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_gamma, random_standard_uniform
from scipy.special.cython_special cimport gammaln

NAME = "cython"

cdef double EPS_REL = 1e-12


cdef bitgen_t *_bitgen(rng) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(rng.bit_generator.capsule, "BitGenerator")


cdef inline double _aug(double x, double y, double logy, double mu, double g, double a,
                        double b, double lgg, double lga, double logb) noexcept nogil:
    cdef double d = x - mu
    cdef double eps
    if d < 0.0:
        return -INFINITY
    eps = EPS_REL * b if b > 1.0 else EPS_REL
    if d < eps:
        d = eps
    return (g * logy - lgg + (g - 1.0) * log(d) - y * d
            + a * logb - lga + (a - 1.0) * logy - b * y)


def aug_loglik(const double[::1] x, const double[::1] y, const int64_t[::1] z,
               const double[:, ::1] theta, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef int64_t j
    cdef double g, a, b
    for i in range(n):
        j = z[i]
        g = theta[j, 1]
        a = theta[j, 2]
        b = theta[j, 3]
        out[i] = _aug(x[i], y[i], log(y[i]), theta[j, 0], g, a, b,
                      gammaln(g), gammaln(a), log(b))


def sweep_latents(const double[::1] x, double[::1] y, const int64_t[::1] z,
                  const double[:, ::1] theta, rng):
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef int64_t j
    cdef double shape, rate
    with rng.bit_generator.lock:
        with nogil:
            for i in range(n):
                j = z[i]
                shape = theta[j, 1] + theta[j, 2]
                rate = x[i] - theta[j, 0] + theta[j, 3]
                y[i] = random_standard_gamma(bg, shape) / rate


cdef inline void _draw_base(const double *prior, bitgen_t *bg, double *out) noexcept nogil:
    out[0] = random_standard_gamma(bg, prior[0]) / prior[1]
    out[1] = random_standard_gamma(bg, prior[2]) / prior[3]
    out[2] = random_standard_gamma(bg, prior[4]) / prior[5]
    out[3] = random_standard_gamma(bg, prior[6]) / prior[7]


def sweep_assignments(const double[::1] x, const double[::1] y, int64_t[::1] z,
                      double[:, ::1] theta, int64_t[::1] sizes, Py_ssize_t m,
                      double nu, Py_ssize_t r, bint reuse, const double[::1] prior, rng):
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k, q, old, m_i, pick, new, last, last_pick
    cdef bint emptied, fresh = True
    cdef double xi, yi, logyi, top, ll, lnew, total, u, accum, w
    cdef long zero_events = 0
    cdef double pr[8]
    cdef double *lgg = <double *> malloc(n * sizeof(double))
    cdef double *lga = <double *> malloc(n * sizeof(double))
    cdef double *lb = <double *> malloc(n * sizeof(double))
    cdef double *aux = <double *> malloc(4 * r * sizeof(double))
    cdef double *aux_lgg = <double *> malloc(r * sizeof(double))
    cdef double *aux_lga = <double *> malloc(r * sizeof(double))
    cdef double *aux_lb = <double *> malloc(r * sizeof(double))
    cdef double *logw = <double *> malloc((n + r) * sizeof(double))
    if (lgg == NULL or lga == NULL or lb == NULL or aux == NULL or aux_lgg == NULL
            or aux_lga == NULL or aux_lb == NULL or logw == NULL):
        free(lgg); free(lga); free(lb); free(aux)
        free(aux_lgg); free(aux_lga); free(aux_lb); free(logw)
        raise MemoryError()
    for k in range(8):
        pr[k] = prior[k]
    last_pick = -1
    try:
        with rng.bit_generator.lock:
            with nogil:
                for j in range(m):
                    lgg[j] = gammaln(theta[j, 1])
                    lga[j] = gammaln(theta[j, 2])
                    lb[j] = log(theta[j, 3])
                for i in range(n):
                    xi = x[i]
                    yi = y[i]
                    logyi = log(yi)
                    old = z[i]
                    sizes[old] -= 1
                    emptied = sizes[old] == 0
                    m_i = m - 1 if emptied else m

                    for k in range(r):
                        if emptied and k == 0:
                            for q in range(4):
                                aux[q] = theta[old, q]
                            aux_lgg[0] = lgg[old]
                            aux_lga[0] = lga[old]
                            aux_lb[0] = lb[old]
                        elif fresh or not reuse or k == last_pick:
                            _draw_base(pr, bg, &aux[4 * k])
                            aux_lgg[k] = gammaln(aux[4 * k + 1])
                            aux_lga[k] = gammaln(aux[4 * k + 2])
                            aux_lb[k] = log(aux[4 * k + 3])
                    fresh = emptied
                    last_pick = -1

                    top = -INFINITY
                    for j in range(m):
                        if sizes[j] == 0:
                            logw[j] = -INFINITY
                            continue
                        ll = _aug(xi, yi, logyi, theta[j, 0], theta[j, 1], theta[j, 2],
                                  theta[j, 3], lgg[j], lga[j], lb[j])
                        logw[j] = log(sizes[j] - nu) + ll
                        if logw[j] > top:
                            top = logw[j]
                    if m_i > 0:
                        lnew = log(nu * m_i / r)
                        for k in range(r):
                            ll = _aug(xi, yi, logyi, aux[4 * k], aux[4 * k + 1], aux[4 * k + 2],
                                      aux[4 * k + 3], aux_lgg[k], aux_lga[k], aux_lb[k])
                            logw[m + k] = lnew + ll
                            if logw[m + k] > top:
                                top = logw[m + k]
                    else:
                        for k in range(r):
                            logw[m + k] = -INFINITY

                    if top == -INFINITY:
                        sizes[old] += 1
                        if n > 1:
                            zero_events += 1
                        continue

                    total = 0.0
                    for j in range(m + r):
                        w = exp(logw[j] - top) if logw[j] != -INFINITY else 0.0
                        logw[j] = w
                        total += w
                    u = random_standard_uniform(bg) * total
                    pick = m + r - 1
                    accum = 0.0
                    for j in range(m + r):
                        accum += logw[j]
                        if u < accum and logw[j] > 0.0:
                            pick = j
                            break
                    while logw[pick] == 0.0:
                        pick -= 1

                    if pick >= m:
                        k = pick - m
                        new = old if emptied else m
                        for q in range(4):
                            theta[new, q] = aux[4 * k + q]
                        lgg[new] = aux_lgg[k]
                        lga[new] = aux_lga[k]
                        lb[new] = aux_lb[k]
                        sizes[new] = 1
                        if not emptied:
                            m += 1
                        z[i] = new
                        last_pick = k
                    else:
                        z[i] = pick
                        sizes[pick] += 1

                    if emptied and sizes[old] == 0:
                        last = m - 1
                        if last != old:
                            for q in range(4):
                                theta[old, q] = theta[last, q]
                            lgg[old] = lgg[last]
                            lga[old] = lga[last]
                            lb[old] = lb[last]
                            sizes[old] = sizes[last]
                            for q in range(n):
                                if z[q] == last:
                                    z[q] = old
                        for q in range(4):
                            theta[last, q] = 0.0
                        sizes[last] = 0
                        m -= 1
    finally:
        free(lgg); free(lga); free(lb); free(aux)
        free(aux_lgg); free(aux_lga); free(aux_lb); free(logw)
    return m, zero_events


cdef double _coord_target(int k, double v, const double *t, Py_ssize_t cnt, double sum_y,
                          double sum_logy, double sum_logd, const double *xs,
                          const double *ys, const double *prior) noexcept nogil:
    cdef double lp = (prior[2 * k] - 1.0) * log(v) - prior[2 * k + 1] * v
    cdef double gm1, b, eps, s, d
    cdef Py_ssize_t q
    if k == 0:
        gm1 = t[1] - 1.0
        b = t[3]
        eps = EPS_REL * b if b > 1.0 else EPS_REL
        s = 0.0
        for q in range(cnt):
            d = xs[q] - v
            if d < 0.0:
                return -INFINITY
            if d < eps:
                d = eps
            s += gm1 * log(d) - ys[q] * d
        return lp + s
    if k == 1:
        return lp + v * sum_logy - cnt * gammaln(v) + (v - 1.0) * sum_logd
    if k == 2:
        return lp + cnt * (v * log(t[3]) - gammaln(v)) + (v - 1.0) * sum_logy
    return lp + cnt * t[2] * log(v) - v * sum_y


def sweep_unique(const double[::1] x, const double[::1] y, const int64_t[::1] z,
                 double[:, ::1] theta, const int64_t[::1] sizes, Py_ssize_t m,
                 const double[::1] delta, const double[::1] prior, bint hastings,
                 double floor, int64_t[::1] acc, int64_t[::1] prop, rng):
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k, q, cnt
    cdef double pr[8]
    cdef double dl[4]
    cdef double t[4]
    cdef double sum_y, sum_logy, sum_logd, xmin, v, lo, hi, lo2, hi2, u, vp, ua, diff, b, eps, d
    cdef Py_ssize_t *start = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *fill = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *order = <Py_ssize_t *> malloc(n * sizeof(Py_ssize_t))
    cdef double *xs = <double *> malloc(n * sizeof(double))
    cdef double *ys = <double *> malloc(n * sizeof(double))
    if start == NULL or fill == NULL or order == NULL or xs == NULL or ys == NULL:
        free(start); free(fill); free(order); free(xs); free(ys)
        raise MemoryError()
    for k in range(8):
        pr[k] = prior[k]
    for k in range(4):
        dl[k] = delta[k]
    try:
        with rng.bit_generator.lock:
            with nogil:
                for j in range(m + 1):
                    start[j] = 0
                for i in range(n):
                    start[z[i] + 1] += 1
                for j in range(m):
                    start[j + 1] += start[j]
                for j in range(m):
                    fill[j] = start[j]
                for i in range(n):
                    j = z[i]
                    order[fill[j]] = i
                    fill[j] += 1

                for j in range(m):
                    cnt = start[j + 1] - start[j]
                    for q in range(cnt):
                        xs[q] = x[order[start[j] + q]]
                        ys[q] = y[order[start[j] + q]]
                    for k in range(4):
                        t[k] = theta[j, k]
                    sum_y = 0.0
                    sum_logy = 0.0
                    xmin = INFINITY
                    for q in range(cnt):
                        sum_y += ys[q]
                        sum_logy += log(ys[q])
                        if xs[q] < xmin:
                            xmin = xs[q]
                    sum_logd = 0.0
                    for k in range(4):
                        if k == 1:
                            b = t[3]
                            eps = EPS_REL * b if b > 1.0 else EPS_REL
                            sum_logd = 0.0
                            for q in range(cnt):
                                d = xs[q] - t[0]
                                if d < eps:
                                    d = eps
                                sum_logd += log(d)
                        v = t[k]
                        lo = v - dl[k]
                        if lo < 0.0:
                            lo = 0.0
                        hi = v + dl[k]
                        if k == 0 and hi > xmin:
                            hi = xmin
                        u = random_standard_uniform(bg)
                        vp = lo + u * (hi - lo)
                        if vp < floor:
                            vp = floor
                        if k == 0 and vp > xmin:
                            vp = xmin
                        ua = random_standard_uniform(bg)
                        prop[k] += 1
                        if vp == v:
                            acc[k] += 1
                            continue
                        diff = (_coord_target(k, vp, t, cnt, sum_y, sum_logy, sum_logd, xs, ys, pr)
                                - _coord_target(k, v, t, cnt, sum_y, sum_logy, sum_logd, xs, ys, pr))
                        if hastings:
                            lo2 = vp - dl[k]
                            if lo2 < 0.0:
                                lo2 = 0.0
                            hi2 = vp + dl[k]
                            if k == 0 and hi2 > xmin:
                                hi2 = xmin
                            diff += log(hi - lo) - log(hi2 - lo2)
                        if diff >= 0.0 or ua < exp(diff):
                            t[k] = vp
                            acc[k] += 1
                    for k in range(4):
                        theta[j, k] = t[k]
    finally:
        free(start); free(fill); free(order); free(xs); free(ys)
