"""Low-level numba kernels shared by the public modules.

Polynomial data travels in a packed monomial layout: a polynomial
sum_k c[k] * x**e[k,0] * y**e[k,1] is a pair of arrays
(e: int64 of shape (m,2), c: complex128 of shape (m,)).  The two
bracket polynomials of the family are

    A(x,y) = 1 + (q+1)x + ry + extras      (multiplies x^2 + eps^2)
    B(x,y) = 1 + rho x + extras            (multiplies y)

so one step of the family is

    x' = x + (x^2 + eps^2) * (A(x,y) + e2a*eps^2)
    y' = y * (B(x,y) + e2b*eps^2)

Inversion is damped Newton with the analytic Jacobian, seeded with the
second-order inverse expansion.  The convergence test is *relative* to
the target magnitude: petal orbits decay like 1/n, and an absolute
tolerance freezes deep backward orbits at a noise floor whose chart
image (delta w ~ delta x / x^2) then grows without bound as x -> 0.

The coordinate series use compensated (Kahan) summation of the
per-step increments and a measured-majorant stopping rule: the n-th
increment is bounded by c * ((2/(n+m))^2 + |y_n|) with c calibrated on
the first ten terms and m the harmonic depth of the starting point.
"""

import cmath

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _ipow(z, k):
    r = 1.0 + 0.0j
    for _ in range(k):
        r *= z
    return r


@njit(cache=True, nogil=True)
def poly_eval(e, c, x, y):
    s = 0.0 + 0.0j
    for k in range(e.shape[0]):
        s += c[k] * _ipow(x, e[k, 0]) * _ipow(y, e[k, 1])
    return s


@njit(cache=True, nogil=True)
def poly_dx(e, c, x, y):
    s = 0.0 + 0.0j
    for k in range(e.shape[0]):
        i = e[k, 0]
        if i > 0:
            s += c[k] * i * _ipow(x, i - 1) * _ipow(y, e[k, 1])
    return s


@njit(cache=True, nogil=True)
def poly_dy(e, c, x, y):
    s = 0.0 + 0.0j
    for k in range(e.shape[0]):
        j = e[k, 1]
        if j > 0:
            s += c[k] * j * _ipow(x, e[k, 0]) * _ipow(y, j - 1)
    return s


@njit(cache=True, nogil=True, inline="always")
def f_step(ae, ac, be, bc, e2a, e2b, eps, x, y):
    e2 = eps * eps
    a = poly_eval(ae, ac, x, y) + e2a * e2
    b = poly_eval(be, bc, x, y) + e2b * e2
    return x + (x * x + e2) * a, y * b


@njit(cache=True, nogil=True)
def forward_n(ae, ac, be, bc, e2a, e2b, eps, x, y, n):
    for _ in range(n):
        x, y = f_step(ae, ac, be, bc, e2a, e2b, eps, x, y)
    return x, y


@njit(cache=True, nogil=True)
def forward_orbit(ae, ac, be, bc, e2a, e2b, eps, x, y, xs, ys):
    """Fill xs, ys (length n+1) with the orbit starting at (x, y)."""
    xs[0] = x
    ys[0] = y
    for j in range(1, xs.shape[0]):
        x, y = f_step(ae, ac, be, bc, e2a, e2b, eps, x, y)
        xs[j] = x
        ys[j] = y


@njit(cache=True, nogil=True)
def forward_escape(ae, ac, be, bc, e2a, e2b, eps, x, y, n, r2):
    """Run n steps; bail out early at the first k with |p_k|^2 > r2.

    Returns (x, y, k) where k = -1 if the orbit never left the ball.
    """
    for k in range(n):
        if x.real * x.real + x.imag * x.imag + y.real * y.real + y.imag * y.imag > r2:
            return x, y, k
        x, y = f_step(ae, ac, be, bc, e2a, e2b, eps, x, y)
    if x.real * x.real + x.imag * x.imag + y.real * y.real + y.imag * y.imag > r2:
        return x, y, n
    return x, y, -1


@njit(cache=True, nogil=True)
def orbit_escape(ae, ac, be, bc, e2a, e2b, eps, x, y, max_iter, r2):
    """First k <= max_iter with |F^k(p)|^2 > r2, or -1 if bounded."""
    for k in range(max_iter + 1):
        nx2 = x.real * x.real + x.imag * x.imag + y.real * y.real + y.imag * y.imag
        if nx2 != nx2 or nx2 > r2:
            return k
        x, y = f_step(ae, ac, be, bc, e2a, e2b, eps, x, y)
    return -1


@njit(cache=True, nogil=True)
def f_inv(ae, ac, be, bc, e2a, e2b, eps, xt, yt, rtol, max_iter):
    """Solve F(x, y) = (xt, yt) by damped Newton.

    Stops when |F(x,y) - (xt,yt)|_1 < rtol * (|xt| + |yt|) + 1e-300.
    Returns (x, y, ok).
    """
    e2 = eps * eps
    # second-order inverse expansion as the seed:
    # x - (x^2+eps^2)(1 + (q-1)x + ry) = x - (x^2+eps^2)(A(x,y) - 2x) + h.o.t.
    a0 = poly_eval(ae, ac, xt, yt) + e2a * e2
    b0 = poly_eval(be, bc, xt, yt) + e2b * e2
    x = xt - (xt * xt + e2) * (a0 - 2.0 * xt)
    y = yt * (2.0 - b0)
    fx, fy = f_step(ae, ac, be, bc, e2a, e2b, eps, x, y)
    res = abs(fx - xt) + abs(fy - yt)
    tol = rtol * (abs(xt) + abs(yt)) + 1e-300
    it = 0
    while res > tol and it < max_iter:
        a = poly_eval(ae, ac, x, y) + e2a * e2
        b = poly_eval(be, bc, x, y) + e2b * e2
        w = x * x + e2
        j11 = 1.0 + 2.0 * x * a + w * poly_dx(ae, ac, x, y)
        j12 = w * poly_dy(ae, ac, x, y)
        j21 = y * poly_dx(be, bc, x, y)
        j22 = b + y * poly_dy(be, bc, x, y)
        det = j11 * j22 - j12 * j21
        if det == 0:
            return x, y, False
        rx = fx - xt
        ry = fy - yt
        dx = (j22 * rx - j12 * ry) / det
        dy = (j11 * ry - j21 * rx) / det
        lam = 1.0
        improved = False
        for _ in range(25):
            xn = x - lam * dx
            yn = y - lam * dy
            fxn, fyn = f_step(ae, ac, be, bc, e2a, e2b, eps, xn, yn)
            rn = abs(fxn - xt) + abs(fyn - yt)
            if rn < res:
                x = xn
                y = yn
                fx = fxn
                fy = fyn
                res = rn
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
        it += 1
    return x, y, res <= tol


@njit(cache=True, nogil=True)
def backward_n(ae, ac, be, bc, e2a, e2b, eps, x, y, n, rtol):
    """n steps of the inverse map.  Returns (x, y, failed_step or -1)."""
    for j in range(n):
        x, y, ok = f_inv(ae, ac, be, bc, e2a, e2b, eps, x, y, rtol, 80)
        if not ok:
            return x, y, j
    return x, y, -1


@njit(cache=True, nogil=True)
def backward_orbit(ae, ac, be, bc, e2a, e2b, eps, x, y, xs, ys, rtol):
    """Fill xs, ys (length n+1) with the backward orbit; -1 on success."""
    xs[0] = x
    ys[0] = y
    for j in range(1, xs.shape[0]):
        x, y, ok = f_inv(ae, ac, be, bc, e2a, e2b, eps, x, y, rtol, 80)
        if not ok:
            return j
        xs[j] = x
        ys[j] = y
    return -1


@njit(cache=True, nogil=True)
def phi_in_series(ae, ac, be, bc, q, x, y, tol, max_terms, min_terms):
    """Incoming coordinate of the unperturbed map by increment summation.

    value = w(p) + sum_n [w(F(p_n)) - w(p_n) - 1]  with  w = -1/x - q log(-x).

    Returns (value, n_terms, c_first, c_tail, y_last, m, status) with
    status 0 converged, 1 budget exhausted, -1 left the basin.
    c_first is the majorant constant measured on the first ten terms
    (used for stopping), c_tail the same ratio over the last ten terms
    (a tighter ingredient for the reported tail bound).

    On convergence the truncated tail is compensated: late increments
    behave like c/k^2 (the vertical part decays at least as fast up to
    a bounded factor), so c is fitted over the most recent doubling
    window and the remainder c * psi'(N + m) is added back.  This
    turns the O(1/N) truncation bias into an O(log N / N^2) one at no
    extra orbit cost.
    """
    w = -1.0 / x - q * cmath.log(-x)
    w0 = w
    m = w.real
    if m < 1.0:
        m = 1.0
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    c_first = 0.0
    ring = np.zeros(10, dtype=np.float64)
    n = 0
    y_abs = abs(y)
    fit_prev = 0.0 + 0.0j
    fit_cur = 0.0 + 0.0j
    cnt_prev = 0
    cnt_cur = 0
    bucket_end = 64
    while n < max_terms:
        xn, yn = f_step(ae, ac, be, bc, 0.0j, 0.0j, 0.0j, x, y)
        if xn != xn or xn == 0.0 or abs(xn) > 1.0:
            return total, n, c_first, 0.0, y_abs, m, -1
        wn = -1.0 / xn - q * cmath.log(-xn)
        a = wn - w - 1.0
        t1 = a - comp
        t2 = total + t1
        comp = (t2 - total) - t1
        total = t2
        k = n + m
        shape = (2.0 / k) ** 2 + y_abs
        ratio = abs(a) / shape
        ring[n % 10] = ratio
        if n < 10 and ratio > c_first:
            c_first = ratio
        if n >= 20:
            if n >= bucket_end:
                fit_prev = fit_cur
                cnt_prev = cnt_cur
                fit_cur = 0.0 + 0.0j
                cnt_cur = 0
                bucket_end = 2 * n
            fit_cur = fit_cur + a * (k * k)
            cnt_cur = cnt_cur + 1
        x = xn
        y = yn
        w = wn
        y_abs = abs(yn)
        n += 1
        if n > 20 and n >= min_terms and \
                c_first * ((2.0 / (n + m)) ** 2 + y_abs) < tol:
            c_tail = 0.0
            for k2 in range(10):
                if ring[k2] > c_tail:
                    c_tail = ring[k2]
            corr = 0.0 + 0.0j
            if cnt_prev + cnt_cur > 0:
                c_hat = (fit_prev + fit_cur) / (cnt_prev + cnt_cur)
                kn = n + m
                corr = c_hat * (1.0 / kn + 0.5 / (kn * kn))
            return w0 + total + corr, n, c_first, c_tail, y_abs, m, 0
    return w0 + total, n, c_first, 0.0, y_abs, m, 1


@njit(cache=True, nogil=True)
def phi_out_series(ae, ac, be, bc, q, x, y, tol, max_terms, min_terms, rtol):
    """Outgoing coordinate by backward-increment summation.

    value = w(p) + sum_n [w(F^{-1}(p_n)) - w(p_n) + 1], w = -1/x - q log x.

    Returns (value, n_terms, c_first, c_tail, y_last, m, status) with
    status 0 converged, 1 budget exhausted, -1 left the repelling
    region, -2 inverse Newton failure.

    The truncated tail is compensated the same way as in
    phi_in_series: fit c over the latest doubling window of increments
    and add back c * psi'(N + m).
    """
    w = -1.0 / x - q * cmath.log(x)
    w0 = w
    m = -w.real
    if m < 1.0:
        m = 1.0
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    c_first = 0.0
    ring = np.zeros(10, dtype=np.float64)
    n = 0
    y_abs = abs(y)
    fit_prev = 0.0 + 0.0j
    fit_cur = 0.0 + 0.0j
    cnt_prev = 0
    cnt_cur = 0
    bucket_end = 64
    while n < max_terms:
        xn, yn, ok = f_inv(ae, ac, be, bc, 0.0j, 0.0j, 0.0j, x, y, rtol, 80)
        if not ok:
            return total, n, c_first, 0.0, y_abs, m, -2
        if xn != xn or xn == 0.0 or abs(xn) > 1.0:
            return total, n, c_first, 0.0, y_abs, m, -1
        wn = -1.0 / xn - q * cmath.log(xn)
        a = wn - w + 1.0
        t1 = a - comp
        t2 = total + t1
        comp = (t2 - total) - t1
        total = t2
        k = n + m
        shape = (2.0 / k) ** 2 + y_abs
        ratio = abs(a) / shape
        ring[n % 10] = ratio
        if n < 10 and ratio > c_first:
            c_first = ratio
        if n >= 20:
            if n >= bucket_end:
                fit_prev = fit_cur
                cnt_prev = cnt_cur
                fit_cur = 0.0 + 0.0j
                cnt_cur = 0
                bucket_end = 2 * n
            fit_cur = fit_cur + a * (k * k)
            cnt_cur = cnt_cur + 1
        x = xn
        y = yn
        w = wn
        y_abs = abs(yn)
        n += 1
        if n > 20 and n >= min_terms and \
                c_first * ((2.0 / (n + m)) ** 2 + y_abs) < tol:
            c_tail = 0.0
            for k2 in range(10):
                if ring[k2] > c_tail:
                    c_tail = ring[k2]
            corr = 0.0 + 0.0j
            if cnt_prev + cnt_cur > 0:
                c_hat = (fit_prev + fit_cur) / (cnt_prev + cnt_cur)
                kn = n + m
                corr = c_hat * (1.0 / kn + 0.5 / (kn * kn))
            return w0 + total + corr, n, c_first, c_tail, y_abs, m, 0
    return w0 + total, n, c_first, 0.0, y_abs, m, 1


@njit(cache=True, nogil=True)
def raster_block(ae, ac, be, bc, e2a, e2b, eps,
                 ox, oy, e1x, e1y, e2x, e2y,
                 nx, ny, iy0, iy1, max_iter, r2, out):
    """Classify the pixel rows [iy0, iy1): escape step, or -1 if bounded.

    Pixels sample the slice at cell centers:
    p(ix, iy) = origin + ((ix+0.5)/nx) e1 + ((iy+0.5)/ny) e2.
    """
    for iy in range(iy0, iy1):
        v = (iy + 0.5) / ny
        for ix in range(nx):
            u = (ix + 0.5) / nx
            x = ox + u * e1x + v * e2x
            y = oy + u * e1y + v * e2y
            out[iy, ix] = orbit_escape(ae, ac, be, bc, e2a, e2b, eps,
                                       x, y, max_iter, r2)
