"""Pure-Python eigenvalue kernel (fallback for the compiled ``_eig_ext``).

Balancing, Householder reduction to upper Hessenberg form and the Francis
double-shift QR iteration. Works on nested lists so it runs without the
compiled extension; the Cython module implements the identical algorithm.
"""

from math import copysign, fabs, sqrt

RADIX = 2.0
MAX_ITS_PER_EIG = 30


def balance(a):
    """Diagonal similarity scaling that equalizes row and column norms (in place)."""
    n = len(a)
    sqrdx = RADIX * RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            r = 0.0
            c = 0.0
            for j in range(n):
                if j != i:
                    c += fabs(a[j][i])
                    r += fabs(a[i][j])
            if c != 0.0 and r != 0.0:
                g = r / RADIX
                f = 1.0
                s = c + r
                while c < g:
                    f *= RADIX
                    c *= sqrdx
                g = r * RADIX
                while c > g:
                    f /= RADIX
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        a[i][j] *= g
                    for j in range(n):
                        a[j][i] *= f
    return a


def hessenberg(a):
    """Householder reduction to upper Hessenberg form (in place)."""
    n = len(a)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += a[i][k] * a[i][k]
        alpha = sqrt(alpha)
        if alpha == 0.0:
            continue
        x0 = a[k + 1][k]
        alpha = -copysign(alpha, x0)
        v = [0.0] * n
        v[k + 1] = x0 - alpha
        for i in range(k + 2, n):
            v[i] = a[i][k]
        vnorm2 = 0.0
        for i in range(k + 1, n):
            vnorm2 += v[i] * v[i]
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        # left reflection on rows k+1..n-1
        for j in range(k, n):
            s = 0.0
            for i in range(k + 1, n):
                s += v[i] * a[i][j]
            s *= beta
            for i in range(k + 1, n):
                a[i][j] -= s * v[i]
        # right reflection on columns k+1..n-1
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += a[i][j] * v[j]
            s *= beta
            for j in range(k + 1, n):
                a[i][j] -= s * v[j]
        for i in range(k + 2, n):
            a[i][k] = 0.0
    return a


ULP = 2.220446049250313e-16
SMALL = 2.2250738585072014e-308 / ULP


def _negligible(a, k, anorm):
    """Small-subdiagonal test of Ahues and Tisseur for ``a[k][k-1]``."""
    h = fabs(a[k][k - 1])
    if h <= SMALL:
        return True
    tst = fabs(a[k - 1][k - 1]) + fabs(a[k][k])
    if tst == 0.0:
        tst = anorm
    if h > ULP * tst:
        return False
    ab = max(h, fabs(a[k - 1][k]))
    ba = min(h, fabs(a[k - 1][k]))
    d = fabs(a[k - 1][k - 1] - a[k][k])
    aa = max(fabs(a[k][k]), d)
    bb = min(fabs(a[k][k]), d)
    s = aa + ab
    return ba * (ab / s) <= max(SMALL, ULP * (bb * (aa / s)))


def hqr(a):
    """Eigenvalues of an upper Hessenberg matrix by double-shift QR (in place).

    Returns
    -------
    wr, wi : list of float
        Real and imaginary parts; complex eigenvalues appear as adjacent
        conjugate pairs.
    """
    n = len(a)
    wr = [0.0] * n
    wi = [0.0] * n
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += fabs(a[i][j])
    nn = n - 1
    p = q = r = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                if _negligible(a, l, anorm):
                    a[l][l - 1] = 0.0
                    break
                l -= 1
            x = a[nn][nn]
            if l == nn:
                wr[nn] = x
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1][nn - 1]
            w = a[nn][nn - 1] * a[nn - 1][nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = sqrt(fabs(q))
                if q >= 0.0:
                    z = p + copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn] = z
                    wi[nn - 1] = -z
                nn -= 2
                break
            if its == MAX_ITS_PER_EIG * max(10, n):
                raise ArithmeticError("QR iteration did not converge")
            if its > 0 and its % 10 == 0:
                # exceptional shift, anchored alternately at the bottom and top
                if its % 20 == 10:
                    s = fabs(a[nn][nn - 1]) + fabs(a[nn - 1][nn - 2])
                    x = a[nn][nn] + 0.75 * s
                else:
                    s = fabs(a[l + 1][l]) + fabs(a[l + 2][l + 1])
                    x = a[l][l] + 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m][m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1]
                q = a[m + 1][m + 1] - z - r - s
                r = a[m + 2][m + 1]
                s = fabs(p) + fabs(q) + fabs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = fabs(a[m][m - 1]) * (fabs(q) + fabs(r))
                v = fabs(p) * (fabs(a[m - 1][m - 1]) + fabs(z) + fabs(a[m + 1][m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i][i - 2] = 0.0
                if i != m + 2:
                    a[i][i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k][k - 1]
                    q = a[k + 1][k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2][k - 1]
                    x = fabs(p) + fabs(q) + fabs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = copysign(sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            a[k][k - 1] = -a[k][k - 1]
                    else:
                        a[k][k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = a[k][j] + q * a[k + 1][j]
                        if k != nn - 1:
                            p += r * a[k + 2][j]
                            a[k + 2][j] -= p * z
                        a[k + 1][j] -= p * y
                        a[k][j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i][k] + y * a[i][k + 1]
                        if k != nn - 1:
                            p += z * a[i][k + 2]
                            a[i][k + 2] -= p * r
                        a[i][k + 1] -= p * q
                        a[i][k] -= p
    return wr, wi


def real_eigvals(matrix):
    """Eigenvalues of a real square matrix given as a 2-D sequence.

    Returns
    -------
    wr, wi : list of float
    """
    a = [[float(v) for v in row] for row in matrix]
    if not a:
        return [], []
    balance(a)
    hessenberg(a)
    return hqr(a)
