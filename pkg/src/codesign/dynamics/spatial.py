"""Small 3-vector / 3x3 algebra that works on floats and Exprs alike.

Vectors are 3-tuples and matrices are 3-tuples of row 3-tuples. Spatial
quantities are kept in split form: a motion vector is ``(w, v)``, a force
vector ``(n, f)``, a rigid-body inertia ``(m, h, I)`` with ``h = m*c`` and
``I`` the rotational inertia about the frame origin, and a Plucker transform
``(E, r)``: the coordinate rotation from frame A to frame B together with the
position of B's origin in A coordinates.
"""

from ..diff import cos, sin

ZERO3 = (0.0, 0.0, 0.0)
EYE3 = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
ZERO33 = (ZERO3, ZERO3, ZERO3)


def vadd(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vsub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vscale(s, a):
    return (s * a[0], s * a[1], s * a[2])


def vneg(a):
    return (-a[0], -a[1], -a[2])


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def matvec(M, a):
    return (dot(M[0], a), dot(M[1], a), dot(M[2], a))


def transpose(M):
    return tuple(tuple(M[r][c] for r in range(3)) for c in range(3))


def mat_t_vec(M, a):
    return (
        M[0][0] * a[0] + M[1][0] * a[1] + M[2][0] * a[2],
        M[0][1] * a[0] + M[1][1] * a[1] + M[2][1] * a[2],
        M[0][2] * a[0] + M[1][2] * a[1] + M[2][2] * a[2],
    )


def matmul(A, B):
    Bt = transpose(B)
    return tuple(tuple(dot(A[r], Bt[c]) for c in range(3)) for r in range(3))


def madd(A, B):
    return tuple(vadd(A[r], B[r]) for r in range(3))


def msub(A, B):
    return tuple(vsub(A[r], B[r]) for r in range(3))


def outer(a, b):
    return tuple(tuple(a[r] * b[c] for c in range(3)) for r in range(3))


def diag(d):
    return ((d[0], 0.0, 0.0), (0.0, d[1], 0.0), (0.0, 0.0, d[2]))


def rotation(axis, angle):
    """Rotation matrix for ``angle`` about a unit ``axis`` of float components."""
    c, s = cos(angle), sin(angle)
    ax = tuple(float(v) for v in axis)
    principal = [i for i in range(3) if ax[i] != 0.0]
    if len(principal) == 1 and abs(ax[principal[0]]) == 1.0:
        i = principal[0]
        s = s if ax[i] > 0 else -s
        j, k = (i + 1) % 3, (i + 2) % 3
        R = [[0.0] * 3 for _ in range(3)]
        R[i][i] = 1.0
        R[j][j] = c
        R[k][k] = c
        R[k][j] = s
        R[j][k] = -s
        return tuple(tuple(row) for row in R)
    x, y, z = ax
    t = 1.0 - c
    return (
        (c + t * x * x, t * x * y - s * z, t * x * z + s * y),
        (t * x * y + s * z, c + t * y * y, t * y * z - s * x),
        (t * x * z - s * y, t * y * z + s * x, c + t * z * z),
    )


def rpy_matrix(rpy):
    """Fixed rotation Rz(yaw) @ Ry(pitch) @ Rx(roll) from float angles."""
    r = rotation((1, 0, 0), rpy[0])
    p = rotation((0, 1, 0), rpy[1])
    y = rotation((0, 0, 1), rpy[2])
    return matmul(y, matmul(p, r))


# -- spatial operations ---------------------------------------------------
def xform_motion(X, m):
    E, r = X
    w, v = m
    return (matvec(E, w), matvec(E, vsub(v, cross(r, w))))


def xform_force_to_parent(X, f):
    """Apply X^T: a force in child (B) coordinates expressed in parent (A)."""
    E, r = X
    n, fl = f
    fa = mat_t_vec(E, fl)
    return (vadd(mat_t_vec(E, n), cross(r, fa)), fa)


def cross_motion(a, b):
    w, v = a
    w2, v2 = b
    return (cross(w, w2), vadd(cross(w, v2), cross(v, w2)))


def cross_force(a, f):
    w, v = a
    n, fl = f
    return (vadd(cross(w, n), cross(v, fl)), cross(w, fl))


def inertia_apply(inertia, m):
    mass, h, I = inertia
    w, v = m
    return (vadd(matvec(I, w), cross(h, v)), vsub(vscale(mass, v), cross(h, w)))


def inertia_add(a, b):
    return (a[0] + b[0], vadd(a[1], b[1]), madd(a[2], b[2]))


def inertia_to_parent(X, inertia):
    """X^T I X for X = (E, r): a child-frame inertia in parent coordinates."""
    E, r = X
    mass, h, I = inertia
    Et = transpose(E)
    hp = matvec(Et, h)
    Ip = matmul(Et, matmul(I, E))
    hr = dot(r, hp)
    rr = dot(r, r)
    shift = 2.0 * hr + mass * rr
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            val = Ip[i][j] - hp[i] * r[j] - r[i] * hp[j] - mass * r[i] * r[j]
            if i == j:
                val = val + shift
            row.append(val)
        out.append(tuple(row))
    return (mass, vadd(hp, vscale(mass, r)), tuple(out))


def inertia_about_origin(mass, com, inertia_com):
    """(m, h, I_origin) from mass, centre of mass and inertia about the COM."""
    cc = dot(com, com)
    I = []
    for i in range(3):
        row = []
        for j in range(3):
            val = inertia_com[i][j] - mass * com[i] * com[j]
            if i == j:
                val = val + mass * cc
            row.append(val)
        I.append(tuple(row))
    return (mass, vscale(mass, com), tuple(I))
