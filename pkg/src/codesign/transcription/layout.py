"""Index bookkeeping for the flattened decision vector."""

from dataclasses import dataclass

import numpy as np

#: per-contact force components, in storage order
LAMBDA_NAMES = ("lz", "lx+", "lx-", "ly+", "ly-", "gamma")
#: per-contact complementarity slacks per interval
N_SLACK = 5


@dataclass(frozen=True)
class DecisionLayout:
    """Knot-major layout ``[q, qd, u, lambda] * K, [slacks, dt] * (K-1), rho, xi``.

    Knot and interval indices are 0-based here.
    """

    K: int
    n: int
    m: int
    l: int  # noqa: E741
    p: int

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("at least two knots are required")
        if min(self.n, self.m, self.l, self.p) < 0:
            raise ValueError("dimensions must be non-negative")

    @property
    def knot_size(self):
        return 2 * self.n + self.m + 6 * self.l

    @property
    def interval_size(self):
        return N_SLACK * self.l + 1

    @property
    def interval_start(self):
        return self.K * self.knot_size

    @property
    def rho_start(self):
        return self.interval_start + (self.K - 1) * self.interval_size

    @property
    def xi_index(self):
        return self.rho_start + self.p

    @property
    def total(self):
        return self.xi_index + 1

    @staticmethod
    def formula(K, n, m, l, p):  # noqa: E741
        return (2 * n + m + 6 * l) * K + p + 1 + (K - 1) * (5 * l + 1)

    def _knot(self, k, offset, size):
        if not 0 <= k < self.K:
            raise IndexError(f"knot {k} outside [0, {self.K})")
        s = k * self.knot_size + offset
        return np.arange(s, s + size)

    def q(self, k):
        return self._knot(k, 0, self.n)

    def qd(self, k):
        return self._knot(k, self.n, self.n)

    def u(self, k):
        return self._knot(k, 2 * self.n, self.m)

    def lam(self, k, contact=None):
        idx = self._knot(k, 2 * self.n + self.m, 6 * self.l)
        return idx if contact is None else idx[6 * contact : 6 * contact + 6]

    def _interval(self, k, offset, size):
        if not 0 <= k < self.K - 1:
            raise IndexError(f"interval {k} outside [0, {self.K - 1})")
        s = self.interval_start + k * self.interval_size + offset
        return np.arange(s, s + size)

    def slack(self, k, contact=None):
        idx = self._interval(k, 0, N_SLACK * self.l)
        return idx if contact is None else idx[N_SLACK * contact : N_SLACK * contact + N_SLACK]

    def dt(self, k):
        return int(self._interval(k, N_SLACK * self.l, 1)[0])

    @property
    def rho(self):
        return np.arange(self.rho_start, self.rho_start + self.p)

    @property
    def xi(self):
        return self.xi_index

    def all_of(self, part):
        """Every index of one kind: q, qd, u, lam, slack, dt, rho or xi."""
        if part in ("q", "qd", "u", "lam"):
            f = getattr(self, part)
            return np.concatenate([f(k) for k in range(self.K)]).astype(np.int64)
        if part == "slack":
            return np.concatenate([self.slack(k) for k in range(self.K - 1)]).astype(np.int64)
        if part == "dt":
            return np.array([self.dt(k) for k in range(self.K - 1)], dtype=np.int64)
        if part == "rho":
            return self.rho
        if part == "xi":
            return np.array([self.xi_index])
        raise KeyError(part)

    def ranges(self):
        """Named index arrays that partition ``[0, total)``."""
        return {part: self.all_of(part) for part in ("q", "qd", "u", "lam", "slack", "dt", "rho", "xi")}

    def unpack(self, x):
        """Per-part arrays: q/qd/u (K x ...), lam (K x l x 6), slack (K-1 x l x 5), dt, rho, xi."""
        x = np.asarray(x, dtype=float)
        K = self.K
        return {
            "q": x[self.all_of("q")].reshape(K, self.n),
            "qd": x[self.all_of("qd")].reshape(K, self.n),
            "u": x[self.all_of("u")].reshape(K, self.m),
            "lam": x[self.all_of("lam")].reshape(K, self.l, 6),
            "slack": x[self.all_of("slack")].reshape(K - 1, self.l, N_SLACK),
            "dt": x[self.all_of("dt")],
            "rho": x[self.rho],
            "xi": float(x[self.xi_index]),
        }

    def times(self, x):
        dt = np.asarray(x, dtype=float)[self.all_of("dt")]
        return np.concatenate([[0.0], np.cumsum(dt)])
