"""A small conic modelling layer over complex matrix variables.

Programs are stated with complex affine expressions and lowered to a real
cone program (zero, nonnegative, second-order and PSD cones) which is handed to
an interior-point solver.  A Hermitian ``n x n`` matrix enters a PSD cone
through its real embedding ``[[Re X, -Im X], [Im X, Re X]]``.

Example
-------
>>> prog = ConicProgram()
>>> X = prog.hermitian("X", 1, psd=True)
>>> prog.add_eq(X[0, 0] - 1)
>>> prog.minimize(X.trace().real())
>>> round(solve(prog).objective, 6)
1.0
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class MalformedProgramError(ValueError):
    pass


def _as_csr(A, ncols):
    A = sp.csr_matrix(A, dtype=complex)
    if A.shape[1] < ncols:
        A = sp.csr_matrix((A.data, A.indices, A.indptr), shape=(A.shape[0], ncols))
    return A


def _vec(C):
    return np.asarray(C, dtype=complex).reshape(-1, order="F")


class Affine:
    """Complex array valued affine function ``vec(E) = A @ x + c`` of the real vector ``x``.

    Arrays are vectorised column-major.  ``A`` may have fewer columns than the
    program it belongs to; missing columns are zero.
    """

    __array_priority__ = 100

    def __init__(self, A, c, shape):
        self.shape = tuple(shape)
        self.size = int(np.prod(self.shape)) if self.shape else 1
        self.A = sp.csr_matrix(A, dtype=complex)
        self.c = np.asarray(c, dtype=complex).reshape(-1)
        if self.A.shape[0] != self.size or self.c.size != self.size:
            raise MalformedProgramError("affine expression dimensions are inconsistent")

    @classmethod
    def constant(cls, C):
        C = np.asarray(C, dtype=complex)
        shape = C.shape if C.ndim else (1, 1)
        return cls(sp.csr_matrix((C.size, 0)), _vec(C), shape)

    @property
    def ncols(self):
        return self.A.shape[1]

    def _lift(self, other):
        if isinstance(other, Affine):
            return other
        C = np.asarray(other, dtype=complex)
        if C.ndim == 0:
            C = np.full(self.shape, complex(C))
        if C.size != self.size or (C.ndim == 2 and C.shape != self.shape):
            raise MalformedProgramError(f"shape mismatch {C.shape} vs {self.shape}")
        return Affine(sp.csr_matrix((self.size, 0)), _vec(C.reshape(self.shape, order="F")), self.shape)

    def __add__(self, other):
        other = self._lift(other)
        if other.shape != self.shape:
            raise MalformedProgramError(f"shape mismatch {other.shape} vs {self.shape}")
        n = max(self.ncols, other.ncols)
        return Affine(_as_csr(self.A, n) + _as_csr(other.A, n), self.c + other.c, self.shape)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.A, -self.c, self.shape)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if np.ndim(other) == 0:
            return Affine(self.A * complex(other), self.c * complex(other), self.shape)
        C = _vec(other)
        if C.size != self.size:
            raise MalformedProgramError("elementwise product needs equal shapes")
        return Affine(sp.diags(C) @ self.A, C * self.c, self.shape)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, C):
        C = np.atleast_2d(np.asarray(C, dtype=complex))
        m, k = self._matrix_shape()
        if C.shape[0] != k:
            raise MalformedProgramError("inner dimensions do not match")
        op = sp.kron(sp.csr_matrix(C.T), sp.identity(m, format="csr"), format="csr")
        return Affine(op @ self.A, op @ self.c, (m, C.shape[1]))

    def __rmatmul__(self, C):
        C = np.atleast_2d(np.asarray(C, dtype=complex))
        m, k = self._matrix_shape()
        if C.shape[1] != m:
            raise MalformedProgramError("inner dimensions do not match")
        op = sp.kron(sp.identity(k, format="csr"), sp.csr_matrix(C), format="csr")
        return Affine(op @ self.A, op @ self.c, (C.shape[0], k))

    def _matrix_shape(self):
        if len(self.shape) == 1:
            return self.shape[0], 1
        return self.shape

    def _select(self, idx, shape):
        idx = np.asarray(idx).reshape(-1)
        return Affine(self.A[idx], self.c[idx], shape)

    def __getitem__(self, key):
        m, k = self._matrix_shape()
        grid = np.arange(m * k).reshape((m, k), order="F")[key]
        grid = np.asarray(grid)
        shape = grid.shape if grid.ndim == 2 else ((grid.size, 1) if grid.ndim == 1 else (1, 1))
        return self._select(grid.reshape(-1, order="F"), shape)

    @property
    def T(self):
        m, k = self._matrix_shape()
        perm = np.arange(m * k).reshape((m, k), order="F").T.reshape(-1, order="F")
        return self._select(perm, (k, m))

    @property
    def H(self):
        t = self.T
        return Affine(t.A.conj(), t.c.conj(), t.shape)

    def real(self):
        return Affine(self.A.real.astype(complex), self.c.real, self.shape)

    def imag(self):
        return Affine(self.A.imag.astype(complex), self.c.imag, self.shape)

    def diag(self):
        m, k = self._matrix_shape()
        n = min(m, k)
        return self._select(np.arange(n) * (m + 1), (n, 1))

    def trace(self):
        d = self.diag()
        return Affine(sp.csr_matrix(d.A.sum(axis=0)), [d.c.sum()], (1, 1))

    def sum(self):
        return Affine(sp.csr_matrix(self.A.sum(axis=0)), [self.c.sum()], (1, 1))

    def inner(self, C):
        """``Tr(C^H E)`` for a constant ``C`` of the same shape."""
        w = _vec(C).conj()
        return Affine(sp.csr_matrix(w) @ self.A, [w @ self.c], (1, 1))

    def vec(self):
        return Affine(self.A, self.c, (self.size, 1))

    def broadcast(self, C):
        """Scalar expression times a constant matrix ``C``."""
        if self.size != 1:
            raise MalformedProgramError("broadcast needs a scalar expression")
        C = np.asarray(C, dtype=complex)
        col = sp.csr_matrix(_vec(C)[:, None])
        return Affine(col @ self.A, _vec(C) * self.c[0], C.shape)

    def is_real(self, tol=0.0):
        imag = np.abs(self.A.imag.data).max(initial=0.0)
        return imag <= tol and np.abs(self.c.imag).max(initial=0.0) <= tol

    def value(self, x):
        x = np.asarray(x, dtype=float)
        v = _as_csr(self.A, x.size) @ x + self.c
        return v.reshape(self.shape, order="F")


def bmat(blocks):
    """Assemble a block matrix of :class:`Affine` or constant blocks (``None`` means zero)."""
    rows = [[b for b in row] for row in blocks]
    heights, widths = [], []
    for row in rows:
        h = {(_shape_of(b)[0]) for b in row if b is not None}
        if len(h) != 1:
            raise MalformedProgramError("block row heights differ")
        heights.append(h.pop())
    for j in range(len(rows[0])):
        w = {(_shape_of(row[j])[1]) for row in rows if row[j] is not None}
        if len(w) != 1:
            raise MalformedProgramError("block column widths differ")
        widths.append(w.pop())
    m, k = sum(heights), sum(widths)
    ncols = max((b.ncols for row in rows for b in row if isinstance(b, Affine)), default=0)
    A_rows, A_cols, A_vals = [], [], []
    c = np.zeros(m * k, dtype=complex)
    r0 = 0
    for i, row in enumerate(rows):
        c0 = 0
        for j, b in enumerate(row):
            if b is not None:
                b = b if isinstance(b, Affine) else Affine.constant(b)
                bm, bk = b._matrix_shape()
                local = np.arange(bm * bk)
                li, lj = local % bm, local // bm
                target = (r0 + li) + (c0 + lj) * m
                c[target] = b.c
                coo = b.A.tocoo()
                A_rows.append(target[coo.row])
                A_cols.append(coo.col)
                A_vals.append(coo.data)
            c0 += widths[j]
        r0 += heights[i]
    if A_rows:
        A = sp.csr_matrix((np.concatenate(A_vals), (np.concatenate(A_rows), np.concatenate(A_cols))),
                          shape=(m * k, ncols))
    else:
        A = sp.csr_matrix((m * k, ncols))
    return Affine(A, c, (m, k))


def _shape_of(b):
    if isinstance(b, Affine):
        return b._matrix_shape()
    return np.atleast_2d(np.asarray(b)).shape


def hermitian_param_map(n):
    """Sparse map from ``n**2`` real parameters to ``vec`` of a Hermitian ``n x n`` matrix."""
    rows, cols, vals = [], [], []
    p = 0
    for j in range(n):
        rows.append(j + j * n)
        cols.append(p)
        vals.append(1.0)
        p += 1
    for j in range(n):
        for i in range(j):
            re, im = p, p + 1
            rows += [i + j * n, i + j * n, j + i * n, j + i * n]
            cols += [re, im, re, im]
            vals += [1.0, 1j, 1.0, -1j]
            p += 2
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, p), dtype=complex)


def symmetric_param_map(n):
    rows, cols, vals = [], [], []
    p = 0
    for j in range(n):
        for i in range(j + 1):
            rows.append(i + j * n)
            cols.append(p)
            vals.append(1.0)
            if i != j:
                rows.append(j + i * n)
                cols.append(p)
                vals.append(1.0)
            p += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, p), dtype=complex)


def embed_hermitian(X):
    """Real symmetric ``2n x 2n`` embedding of a Hermitian matrix."""
    X = np.asarray(X)
    return np.block([[X.real, -X.imag], [X.imag, X.real]])


def unembed_hermitian(Y):
    """Inverse of :func:`embed_hermitian` (averaging the redundant blocks)."""
    n = Y.shape[0] // 2
    re = 0.5 * (Y[:n, :n] + Y[n:, n:])
    im = 0.5 * (Y[n:, :n] - Y[:n, n:])
    return re + 1j * im


@dataclass
class _Variable:
    name: str
    kind: str
    shape: tuple
    offset: int
    expr: Affine


@dataclass
class SolverTolerances:
    eq_feas: float = 1e-8
    psd_feas: float = 1e-8
    gap: float = 1e-8
    max_iter: int = 200
    backend: str = "auto"
    # "auto" hands programs whose largest real PSD block exceeds this size to the
    # first-order backend; the interior-point KKT system is dense in every PSD block
    dense_limit: int = 40
    # the splitting backend stalls for tens of thousands of iterations at 1e-8 on
    # ill-conditioned penalty programs; it gets its own, looser stopping rule
    first_order_eps: float = 1e-6
    first_order_max_iter: int = 20000


@dataclass
class ConicSolution:
    status: str
    objective: float
    values: dict
    iterations: int
    residuals: dict
    certificate: np.ndarray | None = None

    def __getitem__(self, name):
        return self.values[name]

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal")


@dataclass
class ConicProgram:
    """Linear objective, affine equalities and cone memberships over named variables."""

    variables: dict = field(default_factory=dict)
    equalities: list = field(default_factory=list)
    nonnegs: list = field(default_factory=list)
    socs: list = field(default_factory=list)
    lmis: list = field(default_factory=list)
    objective: Affine | None = None
    num_params: int = 0

    def _declare(self, name, kind, shape, pmap):
        if name in self.variables:
            raise MalformedProgramError(f"variable {name!r} declared twice")
        npar = pmap.shape[1]
        A = sp.hstack([sp.csr_matrix((pmap.shape[0], self.num_params)), pmap], format="csr")
        expr = Affine(A, np.zeros(pmap.shape[0]), shape)
        self.variables[name] = _Variable(name, kind, shape, self.num_params, expr)
        self.num_params += npar
        return expr

    def hermitian(self, name, n, psd=False):
        X = self._declare(name, "hermitian-psd" if psd else "hermitian", (n, n), hermitian_param_map(n))
        if psd:
            self.add_psd(X)
        return X

    def symmetric(self, name, n, psd=False):
        X = self._declare(name, "symmetric-psd" if psd else "symmetric", (n, n), symmetric_param_map(n))
        if psd:
            self.add_psd(X)
        return X

    def complex_matrix(self, name, m, k):
        n = m * k
        pmap = sp.hstack([sp.identity(n), 1j * sp.identity(n)], format="csr")
        return self._declare(name, "complex", (m, k), pmap)

    def scalar(self, name, nonneg=False):
        s = self._declare(name, "nonneg" if nonneg else "free", (1, 1), sp.csr_matrix([[1.0]]))
        if nonneg:
            self.add_nonneg(s)
        return s

    def add_eq(self, expr):
        self.equalities.append(expr if isinstance(expr, Affine) else Affine.constant(expr))

    def add_nonneg(self, expr):
        if not expr.is_real(1e-12):
            raise MalformedProgramError("inequality expressions must be real")
        self.nonnegs.append(expr)

    def add_soc(self, vector, bound):
        """Require ``||vector||_2 <= bound`` (``vector`` may be complex)."""
        if bound.size != 1 or not bound.is_real(1e-12):
            raise MalformedProgramError("second-order cone bound must be a real scalar")
        self.socs.append((vector.vec(), bound))

    def add_psd(self, expr):
        m, k = expr._matrix_shape()
        if m != k:
            raise MalformedProgramError("PSD constraint needs a square expression")
        self.lmis.append(expr)

    def minimize(self, expr):
        if expr.size != 1 or not expr.is_real(1e-12):
            raise MalformedProgramError("objective must be a real scalar")
        self.objective = expr


def trace_inverse_epigraph(prog: ConicProgram, U: Affine, name="W_trinv"):
    """Add ``W`` with ``[[W, I], [I, U]] >= 0``; at the optimum ``Tr(W) = Tr(U^-1)``."""
    n = U.shape[0]
    W = prog.symmetric(name, n) if U.is_real() else prog.hermitian(name, n)
    prog.add_psd(bmat([[W, np.eye(n)], [np.eye(n), U]]))
    return W


def squared_norm_epigraph(prog: ConicProgram, residual: Affine, name="s_sq"):
    """Add a scalar ``s`` with ``||residual||^2 <= s`` (rotated cone as an SOC)."""
    s = prog.scalar(name, nonneg=True)
    v = residual.vec()
    stacked = bmat([[2.0 * v], [s - 1.0]])
    prog.add_soc(stacked, s + 1.0)
    return s


# --- lowering to a real cone program ---------------------------------------

def _real_rows(expr, n, keep_imag=True):
    A = _as_csr(expr.A, n)
    F = [A.real]
    g = [expr.c.real]
    if keep_imag:
        F.append(A.imag)
        g.append(expr.c.imag)
    F = sp.vstack(F, format="csr")
    F.eliminate_zeros()
    return F, np.concatenate(g)


def _prune_zero_rows(F, g):
    nz = np.diff(F.indptr) > 0
    keep = nz | (np.abs(g) > 0)
    return F[keep], g[keep]


def _psd_real_matrix(expr, n):
    """Real symmetric matrix expression (full column-major vec) for ``expr >= 0``."""
    m = expr.shape[0]
    A = _as_csr(expr.A, n)
    if expr.is_real(1e-14):
        F, g = A.real.tocsr(), expr.c.real
        size = m
    else:
        size = 2 * m
        grid = np.arange(size * size).reshape((size, size), order="F")
        rows, cols, vals, g = [], [], [], np.zeros(size * size)
        blocks = [((0, 0), A.real, expr.c.real, 1.0), ((m, m), A.real, expr.c.real, 1.0),
                  ((m, 0), A.imag, expr.c.imag, 1.0), ((0, m), A.imag, expr.c.imag, -1.0)]
        for (r0, c0), B, cb, sign in blocks:
            target = grid[r0:r0 + m, c0:c0 + m].reshape(-1, order="F")
            coo = B.tocoo()
            rows.append(target[coo.row])
            cols.append(coo.col)
            vals.append(sign * coo.data)
            g[target] += sign * cb
        F = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(size * size, n))
    # symmetrise
    grid = np.arange(size * size).reshape((size, size), order="F")
    perm = grid.T.reshape(-1, order="F")
    F = 0.5 * (F + F[perm])
    g = 0.5 * (g + g[perm])
    return F.tocsr(), g, size


def _svec_select(size):
    rows, scale = [], []
    for j in range(size):
        for i in range(j + 1):
            rows.append(i + j * size)
            scale.append(1.0 if i == j else math.sqrt(2.0))
    return np.array(rows), np.array(scale)


@dataclass
class _RealProgram:
    c: np.ndarray
    c0: float
    zero: tuple
    nonneg: tuple
    socs: list
    psds: list
    n: int
    hermitian: list = field(default_factory=list)   # per psd block: embedded from a complex LMI


def _lower(prog: ConicProgram) -> _RealProgram:
    if prog.objective is None:
        raise MalformedProgramError("program has no objective")
    n = prog.num_params
    for e in [*prog.equalities, *prog.nonnegs, *prog.lmis, prog.objective,
              *(v for pair in prog.socs for v in pair)]:
        if e.ncols > n:
            raise MalformedProgramError("expression references undeclared variables")
    obj = prog.objective
    c = np.asarray(_as_csr(obj.A, n).real.todense()).reshape(-1)
    c0 = float(obj.c.real[0])

    if prog.equalities:
        F, g = zip(*[_real_rows(e, n) for e in prog.equalities])
        zero = _prune_zero_rows(sp.vstack(F, format="csr"), np.concatenate(g))
    else:
        zero = (sp.csr_matrix((0, n)), np.zeros(0))
    if prog.nonnegs:
        F, g = zip(*[_real_rows(e, n, keep_imag=False) for e in prog.nonnegs])
        nonneg = (sp.vstack(F, format="csr"), np.concatenate(g))
    else:
        nonneg = (sp.csr_matrix((0, n)), np.zeros(0))
    socs = []
    for v, t in prog.socs:
        Ft, gt = _real_rows(t, n, keep_imag=False)
        Fv, gv = _prune_zero_rows(*_real_rows(v, n))
        socs.append((sp.vstack([Ft, Fv], format="csr"), np.concatenate([gt, gv])))
    psds = [_psd_real_matrix(e, n) for e in prog.lmis]
    hermitian = [size == 2 * e.shape[0] for e, (_, _, size) in zip(prog.lmis, psds)]
    return _RealProgram(c, c0, zero, nonneg, socs, psds, n, hermitian)


def _solve_clarabel(rp: _RealProgram, tol: SolverTolerances):
    import clarabel

    A_blocks, b_blocks, cones = [], [], []
    Fz, gz = rp.zero
    if Fz.shape[0]:
        A_blocks.append(-Fz)
        b_blocks.append(gz)
        cones.append(clarabel.ZeroConeT(Fz.shape[0]))
    Fl, gl = rp.nonneg
    if Fl.shape[0]:
        A_blocks.append(-Fl)
        b_blocks.append(gl)
        cones.append(clarabel.NonnegativeConeT(Fl.shape[0]))
    for F, g in rp.socs:
        A_blocks.append(-F)
        b_blocks.append(g)
        cones.append(clarabel.SecondOrderConeT(F.shape[0]))
    for F, g, size in rp.psds:
        rows, scale = _svec_select(size)
        A_blocks.append(-(sp.diags(scale) @ F[rows]))
        b_blocks.append(scale * g[rows])
        cones.append(clarabel.PSDTriangleConeT(size))
    A = sp.vstack(A_blocks, format="csc")
    b = np.concatenate(b_blocks)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = tol.max_iter
    settings.tol_feas = tol.eq_feas
    settings.tol_gap_abs = tol.gap
    settings.tol_gap_rel = tol.gap
    # faer's blocked LDL is several times faster than qdldl on the dense PSD blocks
    settings.direct_solve_method = "faer"
    solver = clarabel.DefaultSolver(sp.csc_matrix((rp.n, rp.n)), rp.c, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    mapping = {"Solved": "optimal", "AlmostSolved": "near-optimal",
               "PrimalInfeasible": "infeasible", "AlmostPrimalInfeasible": "infeasible",
               "DualInfeasible": "unbounded", "AlmostDualInfeasible": "unbounded"}
    status = mapping.get(status, "numerical-failure")
    x = np.asarray(sol.x)
    info = {"gap": abs(sol.obj_val - sol.obj_val_dual), "solver_primal": sol.r_prim,
            "solver_dual": sol.r_dual}
    cert = np.asarray(sol.z) if status == "infeasible" else None
    return status, x, int(sol.iterations), info, cert


def _independent_rows(F, g):
    # the interior-point code here needs a full-row-rank equality block
    if F.shape[0] == 0:
        return F, g
    import scipy.linalg as sla

    M = np.column_stack([F.toarray(), g]).T
    _, R, piv = sla.qr(M, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > 1e-10 * max(d.max(initial=0.0), 1.0)))
    keep = np.sort(piv[:rank])
    return F[keep], g[keep]


def _solve_cvxopt(rp: _RealProgram, tol: SolverTolerances):
    import cvxopt
    from cvxopt import solvers

    def spm(F):
        coo = sp.coo_matrix(F)
        return cvxopt.spmatrix(coo.data.tolist(), coo.row.tolist(), coo.col.tolist(), size=F.shape)

    G_blocks, h_blocks = [], []
    Fl, gl = rp.nonneg
    G_blocks.append(-Fl)
    h_blocks.append(gl)
    dims = {"l": Fl.shape[0], "q": [], "s": []}
    for F, g in rp.socs:
        G_blocks.append(-F)
        h_blocks.append(g)
        dims["q"].append(F.shape[0])
    for F, g, size in rp.psds:
        G_blocks.append(-F)
        h_blocks.append(g)
        dims["s"].append(size)
    G = sp.vstack(G_blocks, format="csr")
    h = cvxopt.matrix(np.concatenate(h_blocks))
    Fz, gz = _independent_rows(*rp.zero)
    A = spm(Fz) if Fz.shape[0] else cvxopt.spmatrix([], [], [], (0, rp.n))
    b = cvxopt.matrix(-gz) if Fz.shape[0] else cvxopt.matrix(0.0, (0, 1))
    opts = {"show_progress": False, "maxiters": tol.max_iter, "feastol": tol.eq_feas,
            "abstol": tol.gap, "reltol": tol.gap}
    try:
        sol = solvers.conelp(cvxopt.matrix(rp.c), spm(G), h, dims, A, b, options=opts)
    except (ValueError, ArithmeticError) as exc:
        return "numerical-failure", np.zeros(rp.n), 0, {"error": str(exc)}, None
    mapping = {"optimal": "optimal", "primal infeasible": "infeasible", "dual infeasible": "unbounded"}
    status = mapping.get(sol["status"], "numerical-failure")
    if status == "numerical-failure" and sol["x"] is not None and sol["relative gap"] is not None \
            and sol["relative gap"] < 1e-5 and sol["primal infeasibility"] < 1e-6:
        status = "near-optimal"
    x = np.array(sol["x"]).reshape(-1) if sol["x"] is not None else np.zeros(rp.n)
    gap = sol["gap"] if sol["gap"] is not None else float("nan")
    info = {"gap": gap, "solver_primal": sol["primal infeasibility"],
            "solver_dual": sol["dual infeasibility"]}
    cert = np.array(sol["z"]).reshape(-1) if status == "infeasible" and sol["z"] is not None else None
    return status, x, int(sol["iterations"]), info, cert


def _svec_lower(size):
    rows, scale = [], []
    for j in range(size):
        for i in range(j, size):
            rows.append(i + j * size)
            scale.append(1.0 if i == j else math.sqrt(2.0))
    return np.array(rows), np.array(scale)


def _hvec_lower(m):
    """Rows of the ``2m x 2m`` real embedding forming SCS's complex svec of the ``m x m`` block.

    Lower triangle column by column; each off-diagonal entry contributes its
    real part (top-left block) then its imaginary part (bottom-left block).
    """
    size = 2 * m
    rows, scale = [], []
    for j in range(m):
        for i in range(j, m):
            if i == j:
                rows.append(i + j * size)
                scale.append(1.0)
            else:
                rows += [i + j * size, (m + i) + j * size]
                scale += [math.sqrt(2.0), math.sqrt(2.0)]
    return np.array(rows), np.array(scale)


def _solve_scs(rp: _RealProgram, tol: SolverTolerances):
    import scs

    A_blocks, b_blocks = [], []
    cone = {}
    Fz, gz = rp.zero
    if Fz.shape[0]:
        A_blocks.append(-Fz)
        b_blocks.append(gz)
        cone["z"] = Fz.shape[0]
    Fl, gl = rp.nonneg
    if Fl.shape[0]:
        A_blocks.append(-Fl)
        b_blocks.append(gl)
        cone["l"] = Fl.shape[0]
    if rp.socs:
        cone["q"] = []
    for F, g in rp.socs:
        A_blocks.append(-F)
        b_blocks.append(g)
        cone["q"].append(F.shape[0])
    # SCS orders the real PSD cones before the complex ones
    real = [p for p, h in zip(rp.psds, rp.hermitian) if not h]
    cplx = [p for p, h in zip(rp.psds, rp.hermitian) if h]
    if real:
        cone["s"] = []
    for F, g, size in real:
        rows, scale = _svec_lower(size)
        A_blocks.append(-(sp.diags(scale) @ F[rows]))
        b_blocks.append(scale * g[rows])
        cone["s"].append(size)
    if cplx:
        cone["cs"] = []
    for F, g, size in cplx:
        rows, scale = _hvec_lower(size // 2)
        A_blocks.append(-(sp.diags(scale) @ F[rows]))
        b_blocks.append(scale * g[rows])
        cone["cs"].append(size // 2)
    data = {"A": sp.vstack(A_blocks, format="csc"), "b": np.concatenate(b_blocks), "c": rp.c}
    solver = scs.SCS(data, cone, verbose=False, eps_abs=tol.first_order_eps, eps_rel=tol.first_order_eps,
                     max_iters=tol.first_order_max_iter)
    sol = solver.solve()
    info = sol["info"]
    # e.g. "solved", "solved (inaccurate - reached max_iters)", "infeasible_inaccurate"
    raw = info["status"].lower()
    if raw == "solved":
        status = "optimal"
    elif raw.startswith("solved"):
        status = "near-optimal"
    elif raw.startswith("infeasible"):
        status = "infeasible"
    elif raw.startswith("unbounded"):
        status = "unbounded"
    else:
        status = "numerical-failure"
    x = np.asarray(sol["x"])
    if not np.all(np.isfinite(x)):
        status, x = "numerical-failure", np.zeros(rp.n)
    res = {"gap": abs(info["gap"]), "solver_primal": info["res_pri"], "solver_dual": info["res_dual"],
           "raw_status": info["status"]}
    cert = np.asarray(sol["y"]) if status == "infeasible" else None
    return status, x, int(info["iter"]), res, cert


_BACKENDS = {"clarabel": _solve_clarabel, "cvxopt": _solve_cvxopt, "scs": _solve_scs}


def _residuals(rp: _RealProgram, x):
    res = {"eq": 0.0, "nonneg": 0.0, "soc": 0.0, "psd": 0.0}
    Fz, gz = rp.zero
    if Fz.shape[0]:
        res["eq"] = float(np.abs(Fz @ x + gz).max())
    Fl, gl = rp.nonneg
    if Fl.shape[0]:
        res["nonneg"] = float(max(0.0, -(Fl @ x + gl).min()))
    for F, g in rp.socs:
        v = F @ x + g
        res["soc"] = max(res["soc"], float(max(0.0, np.linalg.norm(v[1:]) - v[0])))
    for F, g, size in rp.psds:
        S = (F @ x + g).reshape((size, size), order="F")
        res["psd"] = max(res["psd"], float(max(0.0, -np.linalg.eigvalsh(S).min())))
    return res


def solve(prog: ConicProgram, tol: SolverTolerances | None = None) -> ConicSolution:
    """Lower ``prog`` to a real cone program and solve it with the configured backend."""
    tol = tol or SolverTolerances()
    if tol.backend not in _BACKENDS and tol.backend != "auto":
        raise MalformedProgramError(f"unknown backend {tol.backend!r}")
    rp = _lower(prog)
    if tol.backend == "auto":
        largest = max((size for _, _, size in rp.psds), default=0)
        # later entries only run when the earlier ones stop without an answer
        chain = ("scs", "clarabel") if largest > tol.dense_limit else ("clarabel", "cvxopt", "scs")
    else:
        chain = (tol.backend,)
    for backend in chain:
        try:
            status, x, iters, info, cert = _BACKENDS[backend](rp, tol)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            status, x, iters, info, cert = "numerical-failure", np.zeros(rp.n), 0, {"error": str(exc)}, None
        if status != "numerical-failure":
            break
        log.debug("%s backend failed (%s)", backend, info.get("error", info.get("raw_status", "")))
    info["backend"] = backend
    values = {name: var.expr.value(x) for name, var in prog.variables.items()}
    residuals = {**_residuals(rp, x), **info}
    objective = float(rp.c @ x + rp.c0)
    if status == "optimal" and (residuals["eq"] > 10 * tol.eq_feas or residuals["psd"] > 10 * tol.psd_feas):
        status = "near-optimal"
    return ConicSolution(status, objective, values, iters, residuals, cert)
