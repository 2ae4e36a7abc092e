"""Per-mode spectral problem for the Laplacian on the flat slab T^6 x [0, L].

After a Fourier transform in the torus directions each frequency ``k`` gives
a two-point problem for ``-d^2/dt^2 + |k|^2`` acting on the chart
coordinates ``(a, Theta)`` of a section of Lambda^2_14. The boundary
conditions are

* ``Theta = 0`` at both faces (Dirichlet on the 8-block),
* ``2 a' - M(k) a = 0`` at both faces, where ``M(k)`` is the symbol of
  ``a -> d*_6 chi6(a)`` at ``k`` (Robin on the 6-block).

The t direction uses a uniform grid with centred second differences. The
Robin rows are closed with a ghost node, which keeps each row second-order
accurate and makes the operator symmetric for trapezoid weights.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .g2 import standard_point_float
from .slab import CHART_WEIGHTS, chart_matrix
from .symbol import _contraction_tensor
from .torus import wedge_stack

N_A, N_THETA = 6, 8
KERNEL_RTOL = 1e-8


class SpectrumError(RuntimeError):
    """Raised when an eigenvalue solve fails; carries conditioning data."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@lru_cache(maxsize=None)
def _robin_tensor() -> np.ndarray:
    return np.array(_contraction_tensor(), dtype=float)


def robin_matrix(k) -> np.ndarray:
    """``M(k) = Sigma(k)``, Hermitian with eigenvalues ``0, +|k|, -|k|`` (twice each)."""
    k = np.asarray(k, dtype=float)
    if k.shape != (6,):
        raise ValueError("frequency must have 6 components")
    return -1j * np.einsum("j,jrc->rc", k, _robin_tensor())


def _check_grid(length: float, n_t: int):
    if not n_t >= 8:
        raise ValueError(f"n_t must be at least 8, got {n_t}")
    if not length > 0:
        raise ValueError(f"slab length must be positive, got {length}")


def _neumann_like(n_t: int, h: float, k2: float) -> sps.csr_matrix:
    """Second difference with ghost-node end rows, plus ``|k|^2``."""
    main = np.full(n_t, 2.0 / h ** 2 + k2)
    upper = np.full(n_t - 1, -1.0 / h ** 2)
    lower = upper.copy()
    upper[0] = lower[-1] = -2.0 / h ** 2
    return sps.diags([lower, main, upper], [-1, 0, 1], format="csr")


def _dirichlet(n: int, h: float, k2: float) -> sps.csr_matrix:
    off = np.full(n - 1, -1.0 / h ** 2)
    return sps.diags([off, np.full(n, 2.0 / h ** 2 + k2), off], [-1, 0, 1], format="csr")


def trapezoid_weights(n_t: int, h: float) -> np.ndarray:
    w = np.full(n_t, h)
    w[0] = w[-1] = h / 2
    return w


@dataclass(frozen=True, eq=False)
class ModeProblem:
    """Discrete ``-d^2/dt^2 + |k|^2`` with the slab boundary conditions at one frequency.

    Unknowns are ordered component-major: the six a-components on all
    ``n_t`` nodes, then the eight Theta-components on the ``n_t - 2``
    interior nodes (boundary values are zero and eliminated).

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
        The operator ``A``; eigenvalues of ``-Delta`` are those of ``-A``.
    weights : ndarray
        Diagonal of the discrete inner product, including the chart weights.
    robin : ndarray
        ``M(k)``, 6 x 6 Hermitian.
    """

    k: tuple
    length: float
    n_t: int
    h: float
    robin: np.ndarray
    matrix: sps.csr_matrix
    weights: np.ndarray

    @property
    def k2(self) -> int:
        return int(sum(x * x for x in self.k))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def a_slice(self) -> slice:
        return slice(0, N_A * self.n_t)

    @property
    def theta_slice(self) -> slice:
        return slice(N_A * self.n_t, self.size)

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_t)

    def weighted(self) -> sps.csr_matrix:
        """``W A``; symmetric exactly when ``A`` is self-adjoint for the weights."""
        return (sps.diags(self.weights) @ self.matrix).tocsr()

    def symmetry_defect(self) -> float:
        wa = self.weighted()
        diff = wa - wa.conj().T
        scale = abs(wa).max()
        return float(abs(diff).max() / scale) if diff.nnz else 0.0

    def split(self, vec: np.ndarray):
        """Block coordinates ``(a (6, n_t), Theta (8, n_t))`` with Theta padded by the zero ends."""
        a = vec[self.a_slice].reshape(N_A, self.n_t)
        th = np.zeros((N_THETA, self.n_t), dtype=vec.dtype)
        th[:, 1:-1] = vec[self.theta_slice].reshape(N_THETA, self.n_t - 2)
        return a, th


def assemble_mode(k, length: float, n_t: int) -> ModeProblem:
    """Assemble the per-mode operator on a uniform grid of ``n_t`` nodes.

    Each Robin end row comes from the ghost value fixed by
    ``2 (a_1 - a_{-1}) / (2h) = M a_0`` (and its mirror at ``t = L``), which
    adds ``+M/h`` to the first row and ``-M/h`` to the last.
    """
    _check_grid(length, n_t)
    k = tuple(int(x) for x in k)
    if len(k) != 6:
        raise ValueError("frequency must have 6 components")
    h = length / (n_t - 1)
    k2 = float(sum(x * x for x in k))
    M = robin_matrix(k)
    ends = np.zeros(n_t)
    ends[0], ends[-1] = 1.0 / h, -1.0 / h
    a_block = sps.kron(sps.identity(N_A), _neumann_like(n_t, h, k2)) + sps.kron(sps.csr_matrix(M),
                                                                                 sps.diags(ends))
    th_block = sps.kron(sps.identity(N_THETA), _dirichlet(n_t - 2, h, k2))
    matrix = sps.block_diag([a_block, th_block], format="csr")
    w = trapezoid_weights(n_t, h)
    weights = np.concatenate([np.kron(CHART_WEIGHTS[:N_A], w),
                              np.kron(CHART_WEIGHTS[N_A:], np.full(n_t - 2, h))])
    return ModeProblem(k, float(length), n_t, h, M, matrix, weights)


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenvalues of ``-Delta`` at one frequency, ascending.

    ``a_blocks`` holds ``(mu, eigenvalues)`` for each eigenvalue ``mu`` of
    ``M(k)`` counted with multiplicity; ``theta`` is one copy of the
    Dirichlet spectrum (it appears eight times in ``eigenvalues``).
    """

    k: tuple
    eigenvalues: np.ndarray
    theta: np.ndarray
    a_blocks: tuple
    threshold: float
    kernel: tuple = field(default=())

    @property
    def zero_count(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= self.threshold))

    @property
    def positive_count(self) -> int:
        return int(np.sum(self.eigenvalues > self.threshold))


def _scalar_robin(n_t: int, h: float, k2: float, mu: float, vectors: bool):
    """Symmetrised scalar problem ``W^(1/2) A W^(-1/2)`` solved as a tridiagonal."""
    d = np.full(n_t, 2.0 / h ** 2 + k2)
    d[0] += mu / h
    d[-1] -= mu / h
    e = np.full(n_t - 1, -1.0 / h ** 2)
    e[0] = e[-1] = -np.sqrt(2.0) / h ** 2
    try:
        out = sla.eigh_tridiagonal(d, e, eigvals_only=not vectors)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError("tridiagonal eigensolver failed",
                            {"n_t": n_t, "h": h, "k2": k2, "mu": mu, "error": str(exc)}) from exc
    if not vectors:
        return out, None
    vals, vecs = out
    # undo the symmetrisation: v = W^(-1/2) u
    s = np.ones(n_t)
    s[0] = s[-1] = np.sqrt(2.0)
    return vals, vecs * s[:, None]


def _threshold(lmax: float) -> float:
    return KERNEL_RTOL * (1.0 + abs(lmax))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v * (abs(v[i]) / v[i])


def mode_spectrum(mp: ModeProblem, method: str = "decoupled", kernel_vectors: bool = False) -> ModeSpectrum:
    """Eigenvalues of ``-Delta`` under the slab boundary conditions at one frequency.

    Parameters
    ----------
    mp : ModeProblem
    method : {"decoupled", "dense"}
        ``decoupled`` diagonalises ``M(k)`` and solves one tridiagonal problem
        per eigenvalue of ``M(k)`` plus the Dirichlet block; ``dense`` runs a
        Hermitian solver on the full symmetrised matrix (for cross-checks).
    kernel_vectors : bool
        Also return the kernel in block coordinates (decoupled only).
    """
    if method == "dense":
        s = np.sqrt(mp.weights)
        sym = (sps.diags(s) @ mp.matrix @ sps.diags(1.0 / s)).toarray()
        sym = (sym + sym.conj().T) / 2
        try:
            vals = -sla.eigvalsh(sym)[::-1]
        except np.linalg.LinAlgError as exc:
            raise SpectrumError("dense eigensolver failed",
                                {"k": mp.k, "size": mp.size, "cond_weights": float(s.max() / s.min())}) from exc
        return ModeSpectrum(mp.k, np.sort(vals), np.array([]), (), _threshold(np.abs(vals).max()))
    if method != "decoupled":
        raise ValueError(f"unknown method {method!r}")

    mus, U = np.linalg.eigh(mp.robin)
    k2 = float(mp.k2)
    tvals, tvecs = sla.eigh_tridiagonal(np.full(mp.n_t - 2, 2.0 / mp.h ** 2 + k2),
                                        np.full(mp.n_t - 3, -1.0 / mp.h ** 2))
    theta = -tvals
    blocks, raw = [], []
    for mu in mus:
        vals, vecs = _scalar_robin(mp.n_t, mp.h, k2, float(mu), kernel_vectors)
        blocks.append((float(mu), np.sort(-vals)))
        raw.append((vals, vecs))
    allv = np.sort(np.concatenate([b for _, b in blocks] + [theta] * N_THETA))
    thr = _threshold(np.abs(allv).max())
    kernel = []
    if kernel_vectors:
        for c, (vals, vecs) in enumerate(raw):
            for j in np.flatnonzero(np.abs(vals) <= thr):
                a = np.outer(U[:, c], vecs[:, j])
                full = np.concatenate([a.ravel(), np.zeros(N_THETA * (mp.n_t - 2))])
                full = _fix_phase(full / np.sqrt(np.sum(mp.weights * np.abs(full) ** 2)))
                kernel.append(full)
        n_in = mp.n_t - 2
        for j in np.flatnonzero(np.abs(tvals) <= thr):
            for c in range(N_THETA):
                full = np.zeros(mp.size, dtype=complex)
                full[N_A * mp.n_t + c * n_in:N_A * mp.n_t + (c + 1) * n_in] = tvecs[:, j]
                kernel.append(_fix_phase(full / np.sqrt(np.sum(mp.weights * np.abs(full) ** 2))))
    return ModeSpectrum(mp.k, allv, np.sort(theta), tuple(blocks), thr, tuple(kernel))


def theta_analytic(k2: float, length: float, count: int) -> np.ndarray:
    """``-(|k|^2 + (m pi / L)^2)`` for ``m = 1 .. count``, descending."""
    m = np.arange(1, count + 1)
    return -(k2 + (m * np.pi / length) ** 2)


def theta_relative_errors(spec: ModeSpectrum, length: float, count: int = 3) -> np.ndarray:
    k2 = float(sum(x * x for x in spec.k))
    exact = theta_analytic(k2, length, count)
    return np.abs(spec.theta[::-1][:count] - exact) / np.abs(exact)


def exponential_mode(k2: float) -> float:
    """The boundary-channel eigenvalue ``-(3/4)|k|^2``.

    With ``mu = +-|k|`` the function ``exp(mu t / 2)`` satisfies the same
    Robin condition at both faces, so this value is exact for every ``L``.
    """
    return -0.75 * k2


# ---------------------------------------------------------------------------
# mode sets


def ball_modes(K: int) -> np.ndarray:
    """All ``k`` in Z^6 with ``|k| <= K``, lexicographic order."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    r = np.arange(-K, K + 1)
    grid = np.array(np.meshgrid(*[r] * 6, indexing="ij")).reshape(6, -1).T
    keep = (grid ** 2).sum(axis=1) <= K * K
    return grid[keep]


@dataclass(frozen=True)
class ModeClass:
    """Frequencies sharing ``|k|^2``; SU(3) carries each to the representative."""

    k2: int
    representative: tuple
    members: np.ndarray

    @property
    def multiplicity(self) -> int:
        return len(self.members)


def mode_classes(K: int) -> list[ModeClass]:
    modes = ball_modes(K)
    k2 = (modes ** 2).sum(axis=1)
    out = []
    for v in np.unique(k2):
        members = modes[k2 == v]
        rep = tuple(int(x) for x in max(members, key=lambda m: tuple(m)))
        out.append(ModeClass(int(v), rep, members))
    return out


def _check_members(cls: ModeClass, rep_spec: ModeSpectrum, length: float, n_t: int, samples: int) -> float:
    """Largest eigenvalue discrepancy between the representative and a few members."""
    if cls.multiplicity == 1:
        return 0.0
    picks = sorted({0, cls.multiplicity // 2, cls.multiplicity - 1})[:samples]
    worst = 0.0
    scale = 1.0 + np.abs(rep_spec.eigenvalues).max()
    for i in picks:
        other = mode_spectrum(assemble_mode(cls.members[i], length, n_t))
        worst = max(worst, float(np.abs(other.eigenvalues - rep_spec.eigenvalues).max() / scale))
    return worst


def symmetry_defects(K: int, length: float, n_t: int, workers: int = 1) -> np.ndarray:
    """Weighted symmetry defect of every assembled mode operator with ``|k| <= K``."""
    modes = ball_modes(K)

    def one(k):
        return assemble_mode(k, length, n_t).symmetry_defect()

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return np.array(list(pool.map(one, modes)))


# ---------------------------------------------------------------------------
# kernel


def kernel_dstar(mp: ModeProblem, vec: np.ndarray) -> float:
    """``max |d* alpha| / max |alpha|`` for a block vector, second-order differences in t."""
    a, th = mp.split(vec)
    C = chart_matrix()
    alpha = (C @ np.vstack([a, th])).T  # (n_t, 21)
    w = wedge_stack(7, 1)
    dalpha = np.gradient(alpha, mp.h, axis=0, edge_order=2)
    k = np.asarray(mp.k, dtype=float)
    tang = -1j * np.einsum("j,jba,tb->ta", k, w[:6], alpha)
    normal = -np.einsum("ba,tb->ta", w[6], dalpha)
    return float(np.abs(tang + normal).max() / max(np.abs(alpha).max(), 1e-300))


def robin_residual(mp: ModeProblem, vec: np.ndarray) -> float:
    """Residual of ``2 a' - M a`` at both faces with one-sided second-order stencils."""
    a, _ = mp.split(vec)
    h = mp.h
    d0 = (-3 * a[:, 0] + 4 * a[:, 1] - a[:, 2]) / (2 * h)
    dN = (3 * a[:, -1] - 4 * a[:, -2] + a[:, -3]) / (2 * h)
    r0 = 2 * d0 - mp.robin @ a[:, 0]
    rN = 2 * dN - mp.robin @ a[:, -1]
    return float(max(np.abs(r0).max(), np.abs(rN).max()) / max(np.abs(a).max(), 1e-300))


@dataclass(frozen=True)
class ClassResult:
    cls: ModeClass
    spectrum: ModeSpectrum
    member_discrepancy: float


@dataclass(frozen=True)
class KernelReport:
    """Discrete kernel of the boundary value problem over ``|k| <= K``."""

    length: float
    K: int
    n_t: int
    dimension: int
    by_mode: dict
    basis: tuple
    theta_zero: bool
    dstar_residual: float
    robin_residual: float

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "K": self.K,
            "n_t": self.n_t,
            "dimension": self.dimension,
            "by_k2": {str(k): v for k, v in sorted(self.by_mode.items())},
            "theta_zero": self.theta_zero,
            "dstar_residual": self.dstar_residual,
            "robin_residual": self.robin_residual,
            "basis": [{"k": list(k), "a": [[[float(z.real), float(z.imag)] for z in row] for row in a]}
                      for k, a in self.basis],
        }


def _solve_classes(length: float, K: int, n_t: int, workers: int, member_samples: int) -> list[ClassResult]:
    _check_grid(length, n_t)
    if K < 1:
        raise ValueError("K must be at least 1")
    classes = mode_classes(K)

    def one(cls):
        mp = assemble_mode(cls.representative, length, n_t)
        spec = mode_spectrum(mp, kernel_vectors=True)
        return ClassResult(cls, spec, _check_members(cls, spec, length, n_t, member_samples))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, classes))


def _kernel_from(results: list[ClassResult], length: float, K: int, n_t: int) -> KernelReport:
    dim, by_mode, basis = 0, {}, []
    dres = rres = 0.0
    theta_zero = True
    for r in results:
        z = r.spectrum.zero_count * r.cls.multiplicity
        if z:
            by_mode[r.cls.k2] = z
        dim += z
        mp = assemble_mode(r.cls.representative, length, n_t)
        for vec in r.spectrum.kernel:
            a, th = mp.split(vec)
            theta_zero &= bool(np.abs(th).max() == 0.0)
            dres = max(dres, kernel_dstar(mp, vec))
            rres = max(rres, robin_residual(mp, vec))
            basis.append((r.cls.representative, a))
    return KernelReport(float(length), K, n_t, dim, by_mode, tuple(basis), theta_zero, dres, rres)


def total_kernel(length: float, K: int, n_t: int, workers: int = 1) -> KernelReport:
    """Dimension and basis of the discrete kernel over all modes ``|k| <= K``."""
    return _kernel_from(_solve_classes(length, K, n_t, workers, 0), length, K, n_t)


# ---------------------------------------------------------------------------
# aggregate report


@dataclass(frozen=True)
class SpectrumReport:
    """Spectrum of ``-Delta`` under the slab boundary conditions, all modes ``|k| <= K``."""

    length: float
    K: int
    n_t: int
    classes: tuple
    kernel: KernelReport
    theta_error: float
    member_discrepancy: float
    max_eigenvalue: float
    positive_count: int
    nonnegative_count: int
    verdicts: tuple = ()

    @property
    def kernel_dim(self) -> int:
        return self.kernel.dimension

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "geometry": {"torus": "flat T^6", "length": self.length, "n_t": self.n_t,
                         "discretization": "uniform centred differences, ghost-node Robin rows"},
            "truncation": {"K": self.K, "modes": int(sum(r.cls.multiplicity for r in self.classes)),
                           "classes": len(self.classes)},
            "modes": [{
                "k2": r.cls.k2,
                "representative": list(r.cls.representative),
                "multiplicity": r.cls.multiplicity,
                "max_eigenvalue": float(r.spectrum.eigenvalues[-1]),
                "zero_count": r.spectrum.zero_count,
                "eigenvalues": [float(x) for x in r.spectrum.eigenvalues],
            } for r in self.classes],
            "kernel": self.kernel.to_json(),
            "kernel_dim": self.kernel_dim,
            "max_eigenvalue": self.max_eigenvalue,
            "positive_count": self.positive_count,
            "nonnegative_count": self.nonnegative_count,
            "theta_relative_error": self.theta_error,
            "orbit_member_discrepancy": self.member_discrepancy,
            "verdicts": [dict(v) for v in self.verdicts],
        }

    def csv_rows(self):
        yield ("mode_k", "eig_index", "eigenvalue")
        for r in self.classes:
            key = ";".join(str(x) for x in r.cls.representative)
            for i, v in enumerate(r.spectrum.eigenvalues):
                yield (key, str(i), repr(float(v)))


def spectrum_report(length: float, K: int, n_t: int, workers: int = 1, member_samples: int = 3,
                    theta_count: int = 3) -> SpectrumReport:
    """Solve every orbit representative, spot-check other orbit members, aggregate."""
    results = _solve_classes(length, K, n_t, workers, member_samples)
    kernel = _kernel_from(results, length, K, n_t)
    theta_err = max(float(theta_relative_errors(r.spectrum, length, theta_count).max()) for r in results)
    member = max(r.member_discrepancy for r in results)
    top = max(float(r.spectrum.eigenvalues[-1]) for r in results)
    pos = sum(r.spectrum.positive_count * r.cls.multiplicity for r in results)
    nonneg = pos + kernel.dimension
    return SpectrumReport(float(length), K, n_t, tuple(results), kernel, theta_err, member, top, pos, nonneg)


def theta_convergence(k, length: float, grids=(50, 100, 200, 400), count: int = 3) -> np.ndarray:
    """Observed orders of the lowest Theta-block eigenvalues as the grid spacing halves."""
    errs = []
    for n in grids:
        spec = mode_spectrum(assemble_mode(k, length, n))
        errs.append(theta_relative_errors(spec, length, count))
    errs = np.array(errs)
    hs = np.array([length / (n - 1) for n in grids])
    return np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])[:, None]


# ---------------------------------------------------------------------------
# cohomological prediction


@dataclass(frozen=True)
class HodgeData:
    """Hodge numbers of the Calabi-Yau cross-section ``N``."""

    h11: int
    h20: int
    b1: int

    def __post_init__(self):
        if min(self.h11, self.h20, self.b1) < 0:
            raise ValueError("Hodge numbers must be nonnegative")


TORUS_T6 = HodgeData(h11=9, h20=3, b1=6)


def predict_slab_kernel(hodge: HodgeData = TORUS_T6) -> dict:
    """Predicted dimensions for the product slab over ``N``.

    ``V`` is spanned by ``[omega]`` and the real parts of ``H^{2,0}``, so
    ``dim V = 1 + 2 h^{2,0}``. The boundary data space is ``V + V`` (one copy
    per face), the kernel of the difference map ``p`` is the diagonal copy of
    ``V``, and for a slab both ``K_phi`` and ``H_phi`` vanish. The kernel of the
    discrete problem then consists of relative-cohomology classes only, whose
    count is ``b^1(N)``.
    """
    v = 1 + 2 * hodge.h20
    return {
        "dim_V": v,
        "dim_V_phi": 2 * v,
        "dim_ker_p": v,
        "dim_im_iota": v,
        "dim_K_phi": 0,
        "dim_H_phi": 0,
        "relative_cohomology": hodge.b1,
        "expected_kernel": 0 + hodge.b1,
    }


# ---------------------------------------------------------------------------
# open question probe


@lru_cache(maxsize=None)
def _probe_tensors():
    g = standard_point_float()
    G = np.asarray(g.proj3_7, dtype=float) - np.asarray(g.proj3_27, dtype=float)
    G = (G + G.T) / 2
    w2 = wedge_stack(7, 2)
    C = chart_matrix()
    tang = np.einsum("jab,bc->jac", w2[:6], C)  # (6, 35, 14)
    normal = w2[6] @ C
    return G, tang, normal


def _probe_blocks(k, h: float):
    G, tang, normal = _probe_tensors()
    kc = 1j * np.einsum("j,jac->ac", np.asarray(k, dtype=float), tang)
    A0 = kc / 2 - normal / h
    A1 = kc / 2 + normal / h
    diag = h * (A0.conj().T @ G @ A0 + A1.conj().T @ G @ A1)
    off = h * (A0.conj().T @ G @ A1)
    return diag, off


def _probe_matrix(k, length: float, n_t: int) -> tuple[sps.csr_matrix, np.ndarray, float]:
    """Numerator (midpoint rule) and mass diagonal for interior nodes of a zero-ended field."""
    h = length / (n_t - 1)
    n = n_t - 2
    diag, off = _probe_blocks(k, h)
    H = sps.kron(sps.identity(n), diag) + sps.kron(sps.eye(n, k=1), off) + sps.kron(sps.eye(n, k=-1),
                                                                                   off.conj().T)
    mass = np.tile(h * CHART_WEIGHTS, n)
    return H.tocsr(), mass, h


def _extremes(H: sps.csr_matrix, mass: np.ndarray) -> tuple[float, float]:
    """Smallest and largest generalised eigenvalues of ``(H, diag(mass))``."""
    s = 1.0 / np.sqrt(mass)
    B = (sps.diags(s) @ H @ sps.diags(s)).tocsr()
    u = 2 * 14 - 1
    band = np.zeros((u + 1, B.shape[0]), dtype=complex)
    for d in range(u + 1):
        band[u - d, d:] = B.diagonal(d)
    n = B.shape[0]
    lo = sla.eig_banded(band, lower=False, eigvals_only=True, select="i", select_range=(0, 0))
    hi = sla.eig_banded(band, lower=False, eigvals_only=True, select="i", select_range=(n - 1, n - 1))
    return float(lo[0]), float(hi[0])


@dataclass(frozen=True)
class ProbeResult:
    length: float
    K: int
    n_t: int
    value: float
    argmax_k: tuple
    per_k2: dict
    scale: float

    @property
    def relative(self) -> float:
        """``value`` divided by the largest eigenvalue modulus of the form."""
        return self.value / self.scale

    def to_json(self) -> dict:
        return {"length": self.length, "K": self.K, "n_t": self.n_t, "value": self.value,
                "relative_value": self.relative, "scale": self.scale,
                "argmax_k": list(self.argmax_k),
                "per_k2": {str(k): v for k, v in sorted(self.per_k2.items())},
                "note": "experimental evidence only; no sign is asserted"}


def question2_probe(length: float, K: int, n_t: int) -> ProbeResult:
    """Largest value of ``(|d7 a|^2 - |d27 a|^2) / |a|^2`` over discrete fields in Lambda^2_14.

    Fields vanish at both ends (both blocks). Derivatives in t are one-sided
    differences evaluated at cell midpoints; the torus dependence is a single
    Fourier mode per orbit representative.
    """
    _check_grid(length, n_t)
    best, arg, per, scale = -np.inf, None, {}, 0.0
    for cls in mode_classes(K):
        H, mass, _ = _probe_matrix(cls.representative, length, n_t)
        lo, val = _extremes(H, mass)
        per[cls.k2] = val
        scale = max(scale, abs(lo), abs(val))
        if val > best:
            best, arg = val, cls.representative
    return ProbeResult(float(length), K, n_t, float(best), arg, per, scale)


def probe_trial_quotient(k, length: float, n_t: int, component: int = 0) -> tuple[float, float]:
    """Quotient for ``Theta = sin(pi t / L) e_c`` by the discrete form and by direct quadrature."""
    if not 0 <= component < N_THETA:
        raise ValueError("component indexes the 8-block")
    H, mass, h = _probe_matrix(k, length, n_t)
    t = np.linspace(0, length, n_t)[1:-1]
    x = np.zeros((n_t - 2, 14))
    x[:, N_A + component] = np.sin(np.pi * t / length)
    x = x.ravel()
    discrete = float((x @ (H @ x)).real / (x @ (mass * x)))

    G, tang, normal = _probe_tensors()
    e = np.zeros(14)
    e[N_A + component] = 1.0
    kc = 1j * np.einsum("j,jac->ac", np.asarray(k, dtype=float), tang) @ e
    nc = normal @ e
    nodes, wts = np.polynomial.legendre.leggauss(64)
    s = length * (nodes + 1) / 2
    dal = (np.sin(np.pi * s / length)[:, None] * kc[None, :]
           + (np.pi / length) * np.cos(np.pi * s / length)[:, None] * nc[None, :])
    num = (length / 2) * np.einsum("s,sa,ab,sb->", wts, dal.conj(), G, dal).real
    den = CHART_WEIGHTS[N_A + component] * length / 2
    return discrete, float(num / den)


def probe_refinement(length: float, K: int, grids=(50, 100, 200)) -> list[ProbeResult]:
    return [question2_probe(length, K, n) for n in grids]
