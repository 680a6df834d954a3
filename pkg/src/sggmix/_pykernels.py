"""Pure-Python sampler kernels.

Reference implementation and import-time fallback for ``_kernels.pyx``.
Both files perform the same floating-point operations in the same order
and consume the random stream identically, so a chain run on either
backend is bit-for-bit the same.  Keep them in lockstep when editing.

Array conventions shared with the compiled module:

* ``theta`` has shape ``(n, 4)`` with columns ``mu, gamma, alpha, beta``;
  only the first ``m`` rows are live clusters.
* ``z`` holds the cluster index of every observation, ``sizes`` the
  cluster sizes (first ``m`` entries live).
* ``prior`` is ``[a_mu, b_mu, a_gamma, b_gamma, a_alpha, b_alpha, a_beta, b_beta]``.
"""

from math import exp, inf, log

from scipy.special import gammaln as _gammaln

NAME = "python"

EPS_REL = 1e-12


def _lg(v):
    return float(_gammaln(v))


def _aug(x, y, logy, mu, g, a, b, lgg, lga, logb):
    # log Ga(x - mu | g, y) + log Ga(y | a, b)
    d = x - mu
    if d < 0.0:
        return -inf
    eps = EPS_REL * b if b > 1.0 else EPS_REL
    if d < eps:
        d = eps
    return (g * logy - lgg + (g - 1.0) * log(d) - y * d
            + a * logb - lga + (a - 1.0) * logy - b * y)


def aug_loglik(x, y, z, theta, out):
    """Augmented log-likelihood ``log f(x_i, y_i | theta_{z_i})`` for every i."""
    for i in range(len(x)):
        j = z[i]
        mu = theta[j, 0]
        g = theta[j, 1]
        a = theta[j, 2]
        b = theta[j, 3]
        out[i] = _aug(float(x[i]), float(y[i]), log(y[i]), float(mu), float(g),
                      float(a), float(b), _lg(g), _lg(a), log(b))


def sweep_latents(x, y, z, theta, rng):
    """Refresh every latent rate: ``y_i ~ Ga(gamma + alpha, x - mu + beta)``."""
    for i in range(len(x)):
        j = z[i]
        shape = float(theta[j, 1]) + float(theta[j, 2])
        rate = float(x[i]) - float(theta[j, 0]) + float(theta[j, 3])
        y[i] = float(rng.standard_gamma(shape)) / rate


def _draw_base(prior, rng, out):
    out[0] = float(rng.standard_gamma(prior[0])) / prior[1]
    out[1] = float(rng.standard_gamma(prior[2])) / prior[3]
    out[2] = float(rng.standard_gamma(prior[4])) / prior[5]
    out[3] = float(rng.standard_gamma(prior[6])) / prior[7]


def sweep_assignments(x, y, z, theta, sizes, m, nu, r, reuse, prior, rng):
    """One pass of auxiliary-value cluster reassignment over all observations.

    When observation ``i`` is alone in its cluster, that cluster's value
    fills the first auxiliary slot and only ``r - 1`` values are drawn
    from the base measure, as the auxiliary-variable scheme requires for
    the chain to leave the posterior invariant.

    Returns ``(m, zero_events)`` where ``zero_events`` counts observations
    for which every candidate had zero likelihood (assignment kept).
    """
    n = len(x)
    prior = [float(v) for v in prior]
    nu = float(nu)
    # per-cluster caches: gammaln(gamma), gammaln(alpha), log(beta)
    th = [[float(theta[j, k]) for k in range(4)] for j in range(n)]
    lgg = [0.0] * n
    lga = [0.0] * n
    lb = [0.0] * n
    for j in range(m):
        lgg[j] = _lg(th[j][1])
        lga[j] = _lg(th[j][2])
        lb[j] = log(th[j][3])
    sz = [int(sizes[j]) for j in range(n)]
    zz = [int(z[i]) for i in range(n)]
    aux = [[0.0] * 4 for _ in range(r)]
    aux_lgg = [0.0] * r
    aux_lga = [0.0] * r
    aux_lb = [0.0] * r
    logw = [0.0] * (n + r)
    zero_events = 0
    last_pick = -1  # aux slot taken by the previous observation, -1 if none
    fresh = True

    for i in range(n):
        xi = float(x[i])
        yi = float(y[i])
        logyi = log(yi)
        old = zz[i]
        sz[old] -= 1
        emptied = sz[old] == 0
        m_i = m - 1 if emptied else m

        for k in range(r):
            if emptied and k == 0:
                # a singleton's current value is one of the auxiliaries
                aux[0] = list(th[old])
                aux_lgg[0] = lgg[old]
                aux_lga[0] = lga[old]
                aux_lb[0] = lb[old]
            elif fresh or not reuse or k == last_pick:
                _draw_base(prior, rng, aux[k])
                aux_lgg[k] = _lg(aux[k][1])
                aux_lga[k] = _lg(aux[k][2])
                aux_lb[k] = log(aux[k][3])
        # the singleton's value must not be offered to the next observation
        fresh = emptied
        last_pick = -1

        top = -inf
        for j in range(m):
            if sz[j] == 0:
                logw[j] = -inf
                continue
            t = th[j]
            ll = _aug(xi, yi, logyi, t[0], t[1], t[2], t[3], lgg[j], lga[j], lb[j])
            logw[j] = log(sz[j] - nu) + ll
            if logw[j] > top:
                top = logw[j]
        if m_i > 0:
            lnew = log(nu * m_i / r)
            for k in range(r):
                t = aux[k]
                ll = _aug(xi, yi, logyi, t[0], t[1], t[2], t[3], aux_lgg[k], aux_lga[k], aux_lb[k])
                logw[m + k] = lnew + ll
                if logw[m + k] > top:
                    top = logw[m + k]
        else:
            for k in range(r):
                logw[m + k] = -inf

        if top == -inf:
            sz[old] += 1
            if n > 1:
                zero_events += 1
            continue

        total = 0.0
        for j in range(m + r):
            w = exp(logw[j] - top) if logw[j] != -inf else 0.0
            logw[j] = w
            total += w
        u = float(rng.random()) * total
        pick = m + r - 1
        acc = 0.0
        for j in range(m + r):
            acc += logw[j]
            if u < acc and logw[j] > 0.0:
                pick = j
                break
        while logw[pick] == 0.0:  # rounding left u past the last positive weight
            pick -= 1

        if pick >= m:
            k = pick - m
            # an emptied slot is recycled, otherwise append
            new = old if emptied else m
            th[new] = list(aux[k])
            lgg[new] = aux_lgg[k]
            lga[new] = aux_lga[k]
            lb[new] = aux_lb[k]
            sz[new] = 1
            if not emptied:
                m += 1
            zz[i] = new
            last_pick = k
        else:
            zz[i] = pick
            sz[pick] += 1

        if emptied and sz[old] == 0:
            last = m - 1
            if last != old:
                th[old] = th[last]
                lgg[old] = lgg[last]
                lga[old] = lga[last]
                lb[old] = lb[last]
                sz[old] = sz[last]
                for q in range(n):
                    if zz[q] == last:
                        zz[q] = old
            th[last] = [0.0, 0.0, 0.0, 0.0]
            sz[last] = 0
            m -= 1

    for j in range(n):
        sizes[j] = sz[j]
        for k in range(4):
            theta[j, k] = th[j][k]
    for i in range(n):
        z[i] = zz[i]
    return m, zero_events


def _coord_target(k, v, t, cnt, sum_y, sum_logy, sum_logd, xs, ys, prior):
    """Log full conditional of coordinate ``k`` of one cluster, up to a constant.

    ``t`` is the current ``[mu, gamma, alpha, beta]``; coordinate ``k`` is
    replaced by ``v``.  ``xs``/``ys`` are only read for the location.
    """
    lp = (prior[2 * k] - 1.0) * log(v) - prior[2 * k + 1] * v
    if k == 0:
        gm1 = t[1] - 1.0
        b = t[3]
        eps = EPS_REL * b if b > 1.0 else EPS_REL
        s = 0.0
        for q in range(len(xs)):
            d = xs[q] - v
            if d < 0.0:
                return -inf
            if d < eps:
                d = eps
            s += gm1 * log(d) - ys[q] * d
        return lp + s
    if k == 1:
        return lp + v * sum_logy - cnt * _lg(v) + (v - 1.0) * sum_logd
    if k == 2:
        return lp + cnt * (v * log(t[3]) - _lg(v)) + (v - 1.0) * sum_logy
    return lp + cnt * t[2] * log(v) - v * sum_y


def sweep_unique(x, y, z, theta, sizes, m, delta, prior, hastings, floor, acc, prop, rng):
    """Random-walk MH refresh of every cluster's four parameters.

    Proposals are uniform on ``[max(v - d, 0), min(v + d, B)]`` with
    ``B`` the cluster's smallest observation for the location and no upper
    bound otherwise.  ``acc``/``prop`` are per-coordinate counters.
    """
    n = len(x)
    prior = [float(v) for v in prior]
    delta = [float(v) for v in delta]
    # group members by cluster (stable counting sort)
    start = [0] * (m + 1)
    for i in range(n):
        start[int(z[i]) + 1] += 1
    for j in range(m):
        start[j + 1] += start[j]
    fill = list(start[:m])
    order = [0] * n
    for i in range(n):
        j = int(z[i])
        order[fill[j]] = i
        fill[j] += 1

    for j in range(m):
        members = order[start[j]:start[j + 1]]
        cnt = len(members)
        xs = [float(x[i]) for i in members]
        ys = [float(y[i]) for i in members]
        t = [float(theta[j, k]) for k in range(4)]
        sum_y = 0.0
        sum_logy = 0.0
        xmin = inf
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
            lo = v - delta[k]
            if lo < 0.0:
                lo = 0.0
            hi = v + delta[k]
            if k == 0 and hi > xmin:
                hi = xmin
            u = float(rng.random())
            vp = lo + u * (hi - lo)
            if vp < floor:
                vp = floor
            if k == 0 and vp > xmin:
                vp = xmin
            ua = float(rng.random())
            prop[k] += 1
            if vp == v:
                acc[k] += 1
                continue
            diff = (_coord_target(k, vp, t, cnt, sum_y, sum_logy, sum_logd, xs, ys, prior)
                    - _coord_target(k, v, t, cnt, sum_y, sum_logy, sum_logd, xs, ys, prior))
            if hastings:
                lo2 = vp - delta[k]
                if lo2 < 0.0:
                    lo2 = 0.0
                hi2 = vp + delta[k]
                if k == 0 and hi2 > xmin:
                    hi2 = xmin
                diff += log(hi - lo) - log(hi2 - lo2)
            if diff >= 0.0 or ua < exp(diff):
                t[k] = vp
                acc[k] += 1
        for k in range(4):
            theta[j, k] = t[k]
