"""Compiled inner loops for the trajectory engines.

The kernels consume pre-drawn noise in chunks so that the random streams stay
in numpy (and stay reproducible); they advance the state in place and write
samples into caller-provided buffers.  Status codes: 0 ok, 1 zero norm,
2 non-finite state.
"""

import numpy as np
from numba import njit

OK, ZERO_NORM, NON_FINITE = 0, 1, 2


@njit(cache=True)
def _populations(psi, uh, use_ref, pops):
    d = psi.shape[0]
    if use_ref:
        for i in range(d):
            acc = 0j
            for j in range(d):
                acc += uh[i, j] * psi[j]
            pops[i] = acc.real * acc.real + acc.imag * acc.imag
    else:
        for i in range(d):
            pops[i] = psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    pmax = 0.0
    for i in range(d):
        if pops[i] > pmax:
            pmax = pops[i]
    return pmax


@njit(cache=True)
def qsd_chunk_dense(psi, ham, ops, rates, dw, dt, s0, n_total, stride,
                    uh, use_ref, threshold, rec_states, rec_pops, rec_norms,
                    counters, drift):
    """Advance ``psi`` through ``dw.shape[0]`` Euler-Maruyama steps (dense operators).

    ``counters`` = [next record slot, collapse step or -1];
    ``drift`` = [max |pre_norm - 1| so far].
    """
    d = psi.shape[0]
    k = ops.shape[0]
    hpsi = np.empty(d, dtype=np.complex128)
    u = np.empty((k, d), dtype=np.complex128)
    g = np.empty((k, d), dtype=np.complex128)
    mean = np.empty(k)
    new = np.empty(d, dtype=np.complex128)
    pops = np.empty(d)
    for t in range(dw.shape[0]):
        s = s0 + t
        for i in range(d):
            acc = 0j
            for j in range(d):
                acc += ham[i, j] * psi[j]
            hpsi[i] = acc
        for n in range(k):
            m = 0.0
            for i in range(d):
                acc = 0j
                for j in range(d):
                    acc += ops[n, i, j] * psi[j]
                u[n, i] = acc
                m += (psi[i].conjugate() * acc).real
            mean[n] = m
            for i in range(d):
                u[n, i] -= m * psi[i]
        for n in range(k):
            for i in range(d):
                acc = 0j
                for l in range(k):
                    acc += rates[n, l] * u[l, i]
                g[n, i] = acc
        for i in range(d):
            noise = 0j
            for n in range(k):
                noise += u[n, i] * dw[t, n]
            sec = 0j
            for n in range(k):
                acc = 0j
                for j in range(d):
                    acc += ops[n, i, j] * g[n, j]
                sec += acc - mean[n] * g[n, i]
            new[i] = psi[i] - 1j * dt * hpsi[i] + noise - 0.5 * dt * sec
        nrm = 0.0
        for i in range(d):
            nrm += new[i].real * new[i].real + new[i].imag * new[i].imag
        nrm = np.sqrt(nrm)
        if not np.isfinite(nrm):
            return NON_FINITE
        if nrm < 1e-14:
            return ZERO_NORM
        for i in range(d):
            psi[i] = new[i] / nrm
        dev = abs(nrm - 1.0)
        if dev > drift[0]:
            drift[0] = dev
        pmax = _populations(psi, uh, use_ref, pops)
        if counters[1] < 0 and pmax >= threshold:
            counters[1] = s + 1
        if (s + 1) % stride == 0 or s + 1 == n_total:
            r = counters[0]
            for i in range(d):
                rec_states[r, i] = psi[i]
                rec_pops[r, i] = pops[i]
            rec_norms[r] = nrm
            counters[0] = r + 1
    return OK


@njit(cache=True)
def qsd_chunk_diag(psi, h, a, rates, dw, dt, s0, n_total, stride,
                   uh, use_ref, threshold, rec_states, rec_pops, rec_norms,
                   counters, drift):
    """Same contract as :func:`qsd_chunk_dense` for diagonal ``H`` and ``A_n``."""
    d = psi.shape[0]
    k = a.shape[0]
    mean = np.empty(k)
    x = np.empty(k)
    pops = np.empty(d)
    for t in range(dw.shape[0]):
        s = s0 + t
        for n in range(k):
            m = 0.0
            for i in range(d):
                m += a[n, i] * (psi[i].real * psi[i].real + psi[i].imag * psi[i].imag)
            mean[n] = m
        nrm = 0.0
        for i in range(d):
            noise = 0.0
            for n in range(k):
                x[n] = a[n, i] - mean[n]
                noise += x[n] * dw[t, n]
            sec = 0.0
            for n in range(k):
                for l in range(k):
                    sec += rates[n, l] * x[n] * x[l]
            c = psi[i] * (1.0 - 1j * h[i] * dt + noise - 0.5 * dt * sec)
            psi[i] = c
            nrm += c.real * c.real + c.imag * c.imag
        nrm = np.sqrt(nrm)
        if not np.isfinite(nrm):
            return NON_FINITE
        if nrm < 1e-14:
            return ZERO_NORM
        for i in range(d):
            psi[i] = psi[i] / nrm
        dev = abs(nrm - 1.0)
        if dev > drift[0]:
            drift[0] = dev
        pmax = _populations(psi, uh, use_ref, pops)
        if counters[1] < 0 and pmax >= threshold:
            counters[1] = s + 1
        if (s + 1) % stride == 0 or s + 1 == n_total:
            r = counters[0]
            for i in range(d):
                rec_states[r, i] = psi[i]
                rec_pops[r, i] = pops[i]
            rec_norms[r] = nrm
            counters[0] = r + 1
    return OK


@njit(cache=True)
def cq_chunk(amp, cl, u, s0, coupling, mass, omega, dt, p_jump,
             labels, rec_pops, rec_q, rec_p, rec_jump, state):
    """Advance the qubit/particle pair through ``u.shape[0]`` steps.

    ``cl`` = [q, p]; ``state`` = [outcome (-1 before the first jump),
    jump count].  Each step draws two uniforms: ``u[t, 0]`` decides whether a
    jump fires and ``u[t, 1]`` picks the Born outcome.
    """
    for t in range(u.shape[0]):
        s = s0 + t
        outcome = state[0]
        force = 0.0
        if outcome >= 0:
            force = labels[outcome] * coupling * omega
        # symplectic Euler: kick then drift
        cl[1] += (-mass * omega * omega * cl[0] + force) * dt
        cl[0] += cl[1] / mass * dt
        jumped = 0
        if u[t, 0] < p_jump:
            p0 = amp[0].real * amp[0].real + amp[0].imag * amp[0].imag
            k = 0 if u[t, 1] < p0 else 1
            amp[0] = 1.0 if k == 0 else 0.0
            amp[1] = 1.0 if k == 1 else 0.0
            cl[1] += labels[k] * coupling
            if state[0] < 0:
                state[0] = k
            state[1] += 1
            jumped = 1
        r = s + 1
        rec_pops[r, 0] = amp[0].real * amp[0].real + amp[0].imag * amp[0].imag
        rec_pops[r, 1] = amp[1].real * amp[1].real + amp[1].imag * amp[1].imag
        rec_q[r] = cl[0]
        rec_p[r] = cl[1]
        rec_jump[r] = jumped
