# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled explicit time-stepping driver.

Mirrors rdch.kernels.pure.advance_explicit: same update formulas, same
controller, same record layout.  All inner loops run on C doubles; the
Helmholtz solve is an in-house Thomas factorization of the mirror-ghost
Neumann tridiagonal system.
"""

import numpy as np

from libc.math cimport fabs, isfinite, log, log1p, sqrt

STATUS_OK = 0
STATUS_FP_FAIL = 1
STATUS_DT_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_DOMAIN = 4

cdef double END_SLOP = 1.0 - 1.0e-15


# ---------------------------------------------------------------------------
# closed forms (must match rdch.potentials exactly)

cdef inline double _psip_v(double x, double beta) noexcept nogil:
    return -beta * log1p(-x) - x * x * x / 3.0

cdef inline double _psip_d1(double x, double beta) noexcept nogil:
    return beta / (1.0 - x) - x * x

cdef inline double _psip_d2(double x, double beta) noexcept nogil:
    cdef double om = 1.0 - x
    return beta / (om * om) - 2.0 * x


cdef struct PsiPlusReg:
    double beta, eps
    double va, d1a, d2a   # frozen quadratic below eps
    double vb, d1b, d2b   # frozen quadratic above 1 - eps
    int regularize


cdef inline void _psip_reg_init(PsiPlusReg* pp, double beta, double eps, int regularize) noexcept nogil:
    pp.beta = beta
    pp.eps = eps
    pp.regularize = regularize
    pp.va = _psip_v(eps, beta)
    pp.d1a = _psip_d1(eps, beta)
    pp.d2a = _psip_d2(eps, beta)
    pp.vb = _psip_v(1.0 - eps, beta)
    pp.d1b = _psip_d1(1.0 - eps, beta)
    pp.d2b = _psip_d2(1.0 - eps, beta)


cdef inline double psip_value(PsiPlusReg* pp, double x) noexcept nogil:
    cdef double dn
    if pp.regularize:
        if x < pp.eps:
            dn = x - pp.eps
            return pp.va + pp.d1a * dn + 0.5 * pp.d2a * dn * dn
        elif x > 1.0 - pp.eps:
            dn = x - (1.0 - pp.eps)
            return pp.vb + pp.d1b * dn + 0.5 * pp.d2b * dn * dn
    return _psip_v(x, pp.beta)


cdef inline double psip_deriv(PsiPlusReg* pp, double x) noexcept nogil:
    cdef double dn
    if pp.regularize:
        if x < pp.eps:
            return pp.d1a + pp.d2a * (x - pp.eps)
        elif x > 1.0 - pp.eps:
            return pp.d1b + pp.d2b * (x - (1.0 - pp.eps))
    return _psip_d1(x, pp.beta)


cdef inline double psip_curv(PsiPlusReg* pp, double x) noexcept nogil:
    if pp.regularize:
        if x < pp.eps:
            return pp.d2a
        elif x > 1.0 - pp.eps:
            return pp.d2b
    return _psip_d2(x, pp.beta)


cdef inline double psim_value(double x, double beta, double k) noexcept nogil:
    cdef double s, s2
    if 0.0 <= x <= 1.0:
        return k - beta * (0.5 * x * x + x)
    elif 1.0 < x <= 2.0:
        s = x - 1.0
        s2 = s * s
        return (k - 1.5 * beta) - 2.0 * beta * s - beta * (
            0.5 * s2 - 0.25 * s2 * s2 + 0.1 * s2 * s2 * s)
    elif x > 2.0:
        return (k - 3.85 * beta) - 2.5 * beta * (x - 2.0)
    elif x >= -1.0:
        s = -x
        s2 = s * s
        return k + beta * s - beta * (0.5 * s2 - 0.25 * s2 * s2 + 0.1 * s2 * s2 * s)
    else:
        return (k + 0.65 * beta) - 0.5 * beta * (x + 1.0)


cdef inline double psim_deriv(double x, double beta) noexcept nogil:
    cdef double s, s2
    if 0.0 <= x <= 1.0:
        return -beta * (x + 1.0)
    elif 1.0 < x <= 2.0:
        s = x - 1.0
        s2 = s * s
        return -2.0 * beta - beta * (s - s2 * s + 0.5 * s2 * s2)
    elif x > 2.0:
        return -2.5 * beta
    elif x >= -1.0:
        s = -x
        s2 = s * s
        return -beta + beta * (s - s2 * s + 0.5 * s2 * s2)
    else:
        return -0.5 * beta


cdef inline double mob_raw(double x) noexcept nogil:
    cdef double om = 1.0 - x
    return x * om * om


cdef inline double mob_eval(double x, double eps, int regularize) noexcept nogil:
    if regularize:
        if x < eps:
            return mob_raw(eps)
        elif x > 1.0 - eps:
            return mob_raw(1.0 - eps)
    return mob_raw(x)


cdef struct EntropyCoeffs:
    double eps, c_lo, c_hi, alpha, delta, v_hi, s_hi


cdef inline double _ent_F(double x) noexcept nogil:
    return x * log(x) + (1.0 - x) * log1p(-x) - log1p(-x)

cdef inline double _ent_Fp(double x) noexcept nogil:
    return log(x) - log1p(-x) + 1.0 / (1.0 - x)


cdef inline void _ent_init(EntropyCoeffs* ec, double eps) noexcept nogil:
    ec.eps = eps
    ec.c_lo = 1.0 / mob_raw(eps)
    ec.c_hi = 1.0 / mob_raw(1.0 - eps)
    ec.alpha = ec.c_lo * eps - _ent_Fp(eps)
    ec.delta = 0.5 * ec.c_lo * eps * eps - _ent_F(eps)
    ec.v_hi = _ent_F(1.0 - eps) + ec.alpha * (1.0 - 2.0 * eps) + ec.delta
    ec.s_hi = _ent_Fp(1.0 - eps) + ec.alpha


cdef inline double ent_value(EntropyCoeffs* ec, double x) noexcept nogil:
    cdef double dn
    if x <= ec.eps:
        return 0.5 * ec.c_lo * x * x
    elif x >= 1.0 - ec.eps:
        dn = x - (1.0 - ec.eps)
        return ec.v_hi + ec.s_hi * dn + 0.5 * ec.c_hi * dn * dn
    return _ent_F(x) + ec.alpha * (x - ec.eps) + ec.delta


# ---------------------------------------------------------------------------
# Thomas factorization of (I - sigma*Lap) with mirror-ghost Neumann closure

cdef void _thomas_factor(double sigma, double h, Py_ssize_t m,
                         double[::1] cp, double[::1] inv_den) noexcept nogil:
    cdef double r = sigma / (h * h)
    cdef double a = -r
    cdef double den
    cdef Py_ssize_t i
    den = 1.0 + r
    inv_den[0] = 1.0 / den
    cp[0] = a * inv_den[0]
    for i in range(1, m - 1):
        den = (1.0 + 2.0 * r) - a * cp[i - 1]
        inv_den[i] = 1.0 / den
        cp[i] = a * inv_den[i]
    den = (1.0 + r) - a * cp[m - 2]
    inv_den[m - 1] = 1.0 / den


cdef inline void _thomas_solve(double sigma, double h, Py_ssize_t m,
                               double[::1] cp, double[::1] inv_den,
                               double[::1] rhs, double[::1] out) noexcept nogil:
    cdef double a = -sigma / (h * h)
    cdef Py_ssize_t i
    out[0] = rhs[0] * inv_den[0]
    for i in range(1, m):
        out[i] = (rhs[i] - a * out[i - 1]) * inv_den[i]
    for i in range(m - 2, -1, -1):
        out[i] = out[i] - cp[i] * out[i + 1]


# ---------------------------------------------------------------------------
# driver


def advance_explicit(
    n_in,
    phi_in,
    *,
    double t,
    double dt,
    long step_index,
    long accept_streak,
    dict params,
    long max_accepted,
    double t_end,
    long record_every,
    records,
    double diss_accum=0.0,
    double pos_accum=0.0,
    double nmin_traj=np.inf,
    double nmax_traj=-np.inf,
):
    cdef double h = params["h"]
    cdef double gamma = params["gamma"]
    cdef double sigma = params["sigma"]
    cdef double eps = params["eps"]
    cdef double nstar = params["nstar"]
    cdef double kconst = params["kconst"]
    cdef double fp_tol = params["fp_tol"]
    cdef long fp_maxiter = int(params["fp_maxiter"])
    cdef double slack = params["energy_slack"]
    cdef double dt_min = params["dt_min"]
    cdef double dt_max = params["dt_max"]
    cdef int regularize = 1 if params["regularize"] else 0
    cdef long growth_every = 20
    cdef double beta = 1.0 - nstar
    cdef double ratio = sigma / gamma

    n_arr = np.array(n_in, dtype=np.float64, copy=True)
    phi_arr = np.array(phi_in, dtype=np.float64, copy=True)
    cdef double[::1] n = n_arr
    cdef double[::1] phi = phi_arr
    cdef Py_ssize_t m = n.shape[0]
    cdef double[:, ::1] rec = records

    work = {name: np.empty(m, dtype=np.float64) for name in
            ("g", "b", "rhs", "ntr", "ptr", "base", "fr", "cp", "inv_den", "w")}
    cdef double[::1] g = work["g"]
    cdef double[::1] bv = work["b"]
    cdef double[::1] rhs = work["rhs"]
    cdef double[::1] n_tr = work["ntr"]
    cdef double[::1] phi_tr = work["ptr"]
    cdef double[::1] base = work["base"]
    cdef double[::1] fp_rhs = work["fr"]
    cdef double[::1] cp = work["cp"]
    cdef double[::1] inv_den = work["inv_den"]
    cdef double[::1] wbuf = work["w"]

    cdef PsiPlusReg pp
    _psip_reg_init(&pp, beta, eps, regularize)
    cdef EntropyCoeffs ec
    _ent_init(&ec, eps)
    _thomas_factor(sigma, h, m, cp, inv_den)

    cdef int status = STATUS_OK
    cdef long accepted = 0, rejected = 0, nrec = 0, fp_last = 0
    cdef long iters
    cdef double energy, e_trial, dt_eff, delta, x, dgf, bf, dmin, dmax
    cdef double diss_pre, pos_pre, fluxsq, entv, mass
    cdef Py_ssize_t i
    cdef bint domain_bad = 0

    # --- initial caches -----------------------------------------------------
    domain_bad = _refresh(&pp, n, phi, g, bv, rhs, m, h, eps, regularize)
    if domain_bad:
        status = STATUS_DOMAIN
    else:
        energy = _energy(&pp, n, phi, m, h, gamma, sigma, ratio, beta, kconst, wbuf)
        dmin, dmax = _minmax(n, m)
        if dmin < nmin_traj:
            nmin_traj = dmin
        if dmax > nmax_traj:
            nmax_traj = dmax

    while status == STATUS_OK and accepted < max_accepted and t < t_end * END_SLOP:
        dt_eff = t_end - t
        if dt_eff > dt * (1.0 + 1.0e-8):
            dt_eff = dt
        for i in range(m):
            n_tr[i] = n[i] + dt_eff * rhs[i]
        if not regularize:
            for i in range(m):
                if n_tr[i] >= 1.0 or n_tr[i] < 0.0:
                    status = STATUS_DOMAIN
                    break
            if status != STATUS_OK:
                break
        # Picard solve for the trial potential, warm-started from phi
        for i in range(m):
            phi_tr[i] = phi[i]
        _lap(n_tr, base, m, h)
        for i in range(m):
            base[i] = -gamma * base[i]
        iters = 0
        while iters < fp_maxiter:
            iters += 1
            for i in range(m):
                fp_rhs[i] = base[i] + psim_deriv(n_tr[i] - ratio * phi_tr[i], beta)
            _thomas_solve(sigma, h, m, cp, inv_den, fp_rhs, wbuf)
            delta = 0.0
            for i in range(m):
                x = fabs(wbuf[i] - phi_tr[i])
                if x > delta:
                    delta = x
                phi_tr[i] = wbuf[i]
            if delta < fp_tol:
                break
        if delta >= fp_tol:
            status = STATUS_FP_FAIL
            break
        e_trial = _energy(&pp, n_tr, phi_tr, m, h, gamma, sigma, ratio, beta, kconst, wbuf)
        if not isfinite(e_trial):
            status = STATUS_NONFINITE
            break
        if e_trial <= energy + slack:
            # accumulate pre-state dissipation and positive entropy terms
            diss_pre = 0.0
            for i in range(m - 1):
                dgf = (g[i + 1] - g[i]) / h
                bf = 0.5 * (bv[i] + bv[i + 1])
                diss_pre += bf * dgf * dgf
            diss_accum += dt_eff * h * diss_pre
            pos_accum += dt_eff * _pos_terms(&pp, n, phi, m, h, gamma, sigma, ratio, wbuf)
            for i in range(m):
                n[i] = n_tr[i]
                phi[i] = phi_tr[i]
            energy = e_trial
            t += dt_eff
            step_index += 1
            accepted += 1
            fp_last = iters
            accept_streak += 1
            if accept_streak >= growth_every:
                dt = dt * 1.2
                if dt > dt_max:
                    dt = dt_max
                accept_streak = 0
            domain_bad = _refresh(&pp, n, phi, g, bv, rhs, m, h, eps, regularize)
            if domain_bad:
                status = STATUS_DOMAIN
                break
            dmin, dmax = _minmax(n, m)
            if dmin < nmin_traj:
                nmin_traj = dmin
            if dmax > nmax_traj:
                nmax_traj = dmax
            if record_every > 0 and (step_index % record_every == 0 or t >= t_end * END_SLOP):
                diss_pre = 0.0
                fluxsq = 0.0
                for i in range(m - 1):
                    dgf = (g[i + 1] - g[i]) / h
                    bf = 0.5 * (bv[i] + bv[i + 1])
                    diss_pre += bf * dgf * dgf
                    fluxsq += (bf * dgf) * (bf * dgf)
                entv = 0.0
                mass = 0.0
                for i in range(m):
                    entv += ent_value(&ec, n[i])
                    mass += n[i]
                rec[nrec, 0] = t
                rec[nrec, 1] = h * mass
                rec[nrec, 2] = energy
                rec[nrec, 3] = h * diss_pre
                rec[nrec, 4] = h * entv
                rec[nrec, 5] = sqrt(h * fluxsq)
                rec[nrec, 6] = dmin
                rec[nrec, 7] = dmax
                rec[nrec, 8] = iters
                rec[nrec, 9] = dt_eff
                nrec += 1
        else:
            rejected += 1
            accept_streak = 0
            if dt * 0.5 < dt_min:
                status = STATUS_DT_UNDERFLOW
                break
            dt = dt * 0.5

    return {
        "n": n_arr,
        "phi": phi_arr,
        "t": t,
        "dt": dt,
        "step_index": step_index,
        "accept_streak": accept_streak,
        "nrec": nrec,
        "accepted": accepted,
        "rejected": rejected,
        "status": status,
        "fp_last": fp_last,
        "diss_accum": diss_accum,
        "pos_accum": pos_accum,
        "nmin": nmin_traj,
        "nmax": nmax_traj,
    }


cdef void _lap(double[::1] v, double[::1] out, Py_ssize_t m, double h) noexcept nogil:
    cdef Py_ssize_t i
    cdef double left, right
    right = (v[1] - v[0]) / h
    out[0] = right / h
    for i in range(1, m - 1):
        left = right
        right = (v[i + 1] - v[i]) / h
        out[i] = (right - left) / h
    out[m - 1] = -right / h


cdef bint _refresh(PsiPlusReg* pp, double[::1] n, double[::1] phi,
                   double[::1] g, double[::1] bv, double[::1] rhs,
                   Py_ssize_t m, double h, double eps, int regularize) noexcept nogil:
    cdef Py_ssize_t i
    cdef double left, right, bfl, bfr
    for i in range(m):
        if not regularize and (n[i] >= 1.0 or n[i] < 0.0):
            return 1
        g[i] = phi[i] + psip_deriv(pp, n[i])
        bv[i] = mob_eval(n[i], eps, regularize)
    bfr = 0.5 * (bv[0] + bv[1])
    right = bfr * (g[1] - g[0]) / h
    rhs[0] = right / h
    for i in range(1, m - 1):
        left = right
        bfr = 0.5 * (bv[i] + bv[i + 1])
        right = bfr * (g[i + 1] - g[i]) / h
        rhs[i] = (right - left) / h
    rhs[m - 1] = -right / h
    return 0


cdef double _energy(PsiPlusReg* pp, double[::1] n, double[::1] phi, Py_ssize_t m,
                    double h, double gamma, double sigma, double ratio,
                    double beta, double kconst, double[::1] w) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, grad = 0.0, phisq = 0.0, dw
    for i in range(m):
        w[i] = n[i] - ratio * phi[i]
        acc += psip_value(pp, n[i]) + psim_value(w[i], beta, kconst)
        phisq += phi[i] * phi[i]
    for i in range(m - 1):
        dw = (w[i + 1] - w[i]) / h
        grad += dw * dw
    return h * acc + 0.5 * gamma * h * grad + 0.5 * ratio * h * phisq


cdef double _pos_terms(PsiPlusReg* pp, double[::1] n, double[::1] phi, Py_ssize_t m,
                       double h, double gamma, double sigma, double ratio,
                       double[::1] w) noexcept nogil:
    """gamma*||lap w||^2 + (sigma/gamma)*||grad phi||^2 + psi_plus''(n)|grad n|^2."""
    cdef Py_ssize_t i
    cdef double lap_acc = 0.0, gphi = 0.0, gplus = 0.0
    cdef double left, right, lw, dphi, dn, cf
    for i in range(m):
        w[i] = n[i] - ratio * phi[i]
    right = (w[1] - w[0]) / h
    lw = right / h
    lap_acc += lw * lw
    for i in range(1, m - 1):
        left = right
        right = (w[i + 1] - w[i]) / h
        lw = (right - left) / h
        lap_acc += lw * lw
    lw = -right / h
    lap_acc += lw * lw
    for i in range(m - 1):
        dphi = (phi[i + 1] - phi[i]) / h
        gphi += dphi * dphi
        dn = (n[i + 1] - n[i]) / h
        cf = 0.5 * (psip_curv(pp, n[i]) + psip_curv(pp, n[i + 1]))
        gplus += cf * dn * dn
    return gamma * h * lap_acc + ratio * h * gphi + h * gplus


cdef (double, double) _minmax(double[::1] v, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    cdef double lo = v[0], hi = v[0]
    for i in range(1, m):
        if v[i] < lo:
            lo = v[i]
        if v[i] > hi:
            hi = v[i]
    return lo, hi


def helmholtz_solve_array(double sigma, double h, rhs):
    """Standalone Thomas solve of (I - sigma*Lap) u = rhs (test hook)."""
    rhs_arr = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef double[::1] r = rhs_arr
    cdef Py_ssize_t m = r.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cp_arr = np.empty(m, dtype=np.float64)
    den_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] cp = cp_arr
    cdef double[::1] inv_den = den_arr
    _thomas_factor(sigma, h, m, cp, inv_den)
    _thomas_solve(sigma, h, m, cp, inv_den, r, out)
    return out_arr
