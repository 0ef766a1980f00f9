"""Small-dimension ground truth: witness validity, PPT robustness, BSA search.

Everything here is exact or independently certified at oracle scale (total
dimension <= 4096, robustness solvers on 2x2 and 2x3 where PPT coincides
with separability). All randomness is seed-parameterized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as sp_optimize

from .errors import ConvergenceError, DimensionError, ValidationError
from .operators import (
    HermitianOperator,
    partial_transpose_array,
)

ORACLE_DIM_GUARD = 4096


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix (Hermitian, unit trace, PSD up to 1e-10)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValidationError(f"trace is {np.trace(m).real}, expected 1")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -1e-10:
            raise ValidationError(f"minimum eigenvalue {min_eig} below -1e-10")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ProductStateSample:
    """Bloch angles (theta, phi) per qubit site of a pure product state."""

    angles: tuple[tuple[float, float], ...]

    def vectors(self) -> list[np.ndarray]:
        out = []
        for theta, phi in self.angles:
            out.append(
                np.array(
                    [math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)],
                    dtype=complex,
                )
            )
        return out


def symmetric_embedding(n: int) -> np.ndarray:
    """Isometry from the Dicke sector (descending m) into the 2^n qubit space.

    Column k is the normalized symmetrization of all bitstrings with k
    excitations (k spins down), matching the simulator's basis order.
    """
    dim = 2**n
    iso = np.zeros((dim, n + 1))
    for basis_state in range(dim):
        k = bin(basis_state).count("1")
        iso[basis_state, k] = 1.0
    iso /= np.linalg.norm(iso, axis=0, keepdims=True)
    return iso


def embed_symmetric_state(amplitudes: np.ndarray) -> np.ndarray:
    """Dicke amplitudes -> full 2^n state vector."""
    n = len(amplitudes) - 1
    return symmetric_embedding(n) @ np.asarray(amplitudes, dtype=complex)


# ---------------------------------------------------------------------------
# Minimum of a witness over pure product states


def _random_local_states(rng, dims, batch: int) -> list[np.ndarray]:
    locals_ = []
    for d in dims:
        v = rng.normal(size=(batch, d)) + 1j * rng.normal(size=(batch, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        locals_.append(v)
    return locals_


def _product_vectors(locals_: list[np.ndarray]) -> np.ndarray:
    out = locals_[0]
    for v in locals_[1:]:
        out = (out[:, :, None] * v[:, None, :]).reshape(out.shape[0], -1)
    return out


def _site_effective_operators(w_tensor, locals_, site, dims):
    """Batched effective operator at `site` after contracting all other sites."""
    n = len(dims)
    others = [k for k in range(n) if k != site]
    perm = others + [site] + [n + k for k in others] + [n + site]
    d_site = dims[site]
    d_other = int(np.prod([dims[k] for k in others])) if others else 1
    w_k = w_tensor.transpose(perm).reshape(d_other, d_site, d_other, d_site)
    if others:
        u = _product_vectors([locals_[k] for k in others])
    else:
        u = np.ones((locals_[site].shape[0], 1), dtype=complex)
    # E[b, i, j] = conj(u)[b, a] W[a, i, a', j] u[b, a']
    tmp = np.tensordot(u, w_k, axes=([1], [2]))  # (B, a, i, j)
    eff = np.einsum("ba,baij->bij", u.conj(), tmp)
    return eff


def min_over_product_states(
    w: HermitianOperator,
    dims,
    n_starts: int = 200,
    seed: int = 0,
    tol: float = 1e-12,
    max_sweeps: int = 200,
) -> float:
    """Minimum of <W> over pure product states across the cut given by dims.

    Random starts refined by exact coordinate updates: with all sites but one
    fixed, the optimal local state is the lowest eigenvector of the effective
    local operator. All starts are swept in a single vectorized batch until
    the best value stalls below `tol`.
    """
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != w.dim:
        raise DimensionError(f"dims {dims} do not factor dimension {w.dim}")
    if w.dim > ORACLE_DIM_GUARD:
        raise DimensionError(f"dimension {w.dim} exceeds oracle guard {ORACLE_DIM_GUARD}")
    rng = np.random.default_rng(seed)
    locals_ = _random_local_states(rng, dims, n_starts)
    w_mat = w.entries
    w_tensor = w_mat.reshape(dims + dims)

    def values(loc) -> np.ndarray:
        v = _product_vectors(loc)
        return np.einsum("bi,ij,bj->b", v.conj(), w_mat, v).real

    best = math.inf
    prev = values(locals_)
    active = np.ones(n_starts, dtype=bool)
    for _ in range(max_sweeps):
        sub = [loc[active] for loc in locals_]
        for site in range(len(dims)):
            eff = _site_effective_operators(w_tensor, sub, site, dims)
            eff = 0.5 * (eff + np.conj(np.transpose(eff, (0, 2, 1))))
            _, vecs = np.linalg.eigh(eff)
            sub[site] = vecs[:, :, 0]
        for site in range(len(dims)):
            locals_[site][active] = sub[site]
        cur = values(sub)
        moved = np.abs(cur - prev[active]) >= tol
        prev[active] = cur
        best = float(np.min(prev))
        active[active] = moved  # freeze converged starts
        if not np.any(active):
            break
    return best


def membership_check(
    w: HermitianOperator,
    c: float,
    k: HermitianOperator | None = None,
    sign: int = 1,
    tol: float = 1e-9,
) -> bool:
    """True iff K + sign * W/c >= -tol (eigenvalue check); K defaults to identity."""
    if c <= 0:
        raise ValidationError("normalization constant must be positive")
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    k_mat = np.eye(w.dim) if k is None else k.entries
    if k_mat.shape[0] != w.dim:
        raise DimensionError("K and W dimensions differ")
    min_eig = float(np.linalg.eigvalsh(k_mat + sign * w.entries / c)[0])
    return min_eig >= -tol


# ---------------------------------------------------------------------------
# PPT robustness (exact GR on 2x2 and 2x3)


def _project_psd(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def _project_simplex_scaled(values: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of a real vector onto {v >= 0, sum v = total}."""
    u = np.sort(values)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.clip(values - theta, 0.0, None)


def _project_psd_trace(matrix: np.ndarray, total: float) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    w = _project_simplex_scaled(w, total)
    return (v * w) @ v.conj().T


def _validate_feasible(x, rho, dims, s, tol) -> bool:
    if x is None:
        return False
    min_x = float(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[0])
    ppt = float(np.linalg.eigvalsh(partial_transpose_array(rho + x, dims))[0])
    return min_x > -tol and ppt > -tol and abs(np.trace(x).real - s) < tol * max(1.0, s)


def _feasible_ppt(
    rho: np.ndarray,
    dims,
    s: float,
    max_iter: int,
    residual_tol: float,
    val_tol: float,
    dykstra: bool = True,
    x0: np.ndarray | None = None,
):
    """Search for X >= 0 with Tr X = s and (rho + X)^TB >= 0.

    Dykstra-corrected alternating projections between the two convex sets
    (PSD cone with fixed trace; PSD cone in the partially transposed frame).
    Returns a certificate X validated to `val_tol` (early exit once the
    current iterate already validates), or None when the residual stalls at
    a positive gap or the budget runs out without a valid certificate.
    """
    dim = rho.shape[0]
    rho_tb = partial_transpose_array(rho, dims)

    def project_ppt_shift(x):
        y = _project_psd(partial_transpose_array(x, dims) + rho_tb)
        return partial_transpose_array(y - rho_tb, dims)

    if x0 is not None and np.trace(x0).real > 0:
        x = x0 * (s / np.trace(x0).real)
    else:
        x = np.eye(dim, dtype=complex) * (s / dim)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    residual = math.inf
    history: list[float] = []
    for it in range(max_iter):
        y = _project_psd_trace(x + p, s)
        if dykstra:
            p = x + p - y
        x_new = project_ppt_shift(y + q)
        if dykstra:
            q = y + q - x_new
        residual = float(np.linalg.norm(y - x_new))
        x = x_new
        if residual <= residual_tol:
            return x
        if it % 50 == 49:
            # x_new satisfies the PPT shift exactly; PSD/trace errors ~ residual.
            if _validate_feasible(x, rho, dims, s, val_tol):
                return x
            # Disjoint sets leave the residual pinned at the positive gap;
            # a flat residual without a valid certificate means infeasible.
            history.append(residual)
            if len(history) >= 7 and residual > 0.999 * history[-7]:
                return None
    return x if _validate_feasible(x, rho, dims, s, val_tol) else None


def gr_ppt(
    rho: DensityMatrix,
    dims: tuple[int, int],
    s_tol: float = 1e-8,
    max_inner: int = 100_000,
    residual_tol: float = 1e-9,
    val_tol: float = 1e-8,
) -> float:
    """PPT robustness: min Tr X with X >= 0 and (rho + X) PPT.

    Bisection over the trace budget s; each feasibility probe runs the
    Dykstra alternating-projection solver and the accepted s is always
    backed by a validated feasible X. On 2x2 and 2x3 this equals the
    generalized robustness because PPT = separable there.
    """
    da, db = dims
    if da * db != rho.dim:
        raise DimensionError(f"dims {dims} do not factor dimension {rho.dim}")
    if (da, db) not in ((2, 2), (2, 3), (3, 2)):
        raise DimensionError("PPT robustness is exact only on 2x2 and 2x3 systems")
    rho_m = rho.entries
    min_pt = float(np.linalg.eigvalsh(partial_transpose_array(rho_m, dims))[0])
    if min_pt >= -1e-12:
        return 0.0

    s_hi = rho.dim * abs(min_pt)
    x = _feasible_ppt(rho_m, dims, s_hi, max_inner, residual_tol, val_tol)
    if x is None:
        raise ConvergenceError(
            f"upper feasibility bracket s = {s_hi:.6g} failed to validate "
            f"after {max_inner} iterations"
        )
    s_lo = 0.0
    x_feasible = x
    while s_hi - s_lo > s_tol:
        mid = 0.5 * (s_lo + s_hi)
        x = _feasible_ppt(
            rho_m, dims, mid, max_inner, residual_tol, val_tol, x0=x_feasible
        )
        if x is not None:
            s_hi = mid
            x_feasible = x
        else:
            s_lo = mid
    return s_hi


def gr_ppt_bisect(
    rho: DensityMatrix,
    dims: tuple[int, int],
    s_tol: float = 1e-7,
    max_inner: int = 100_000,
) -> float:
    """Cross-check path: same bisection, plain alternating projections inside."""
    rho_m = rho.entries
    min_pt = float(np.linalg.eigvalsh(partial_transpose_array(rho_m, dims))[0])
    if min_pt >= -1e-12:
        return 0.0
    s_hi = rho.dim * abs(min_pt)
    s_lo = 0.0
    x_feasible = None
    while s_hi - s_lo > s_tol:
        mid = 0.5 * (s_lo + s_hi)
        x = _feasible_ppt(
            rho_m, dims, mid, max_inner, 1e-9, 1e-8, dykstra=False, x0=x_feasible
        )
        if x is not None:
            s_hi = mid
            x_feasible = x
        else:
            s_lo = mid
    return s_hi


def schmidt_robustness(psi: np.ndarray, dims: tuple[int, int]) -> float:
    """GR of a bipartite pure state: (sum of Schmidt coefficients)^2 - 1."""
    da, db = dims
    mat = np.asarray(psi, dtype=complex).reshape(da, db)
    sv = np.linalg.svd(mat, compute_uv=False)
    return float(np.sum(sv) ** 2 - 1.0)


# ---------------------------------------------------------------------------
# BSA upper bound by separable-decomposition search


def _max_separable_weight(rho: np.ndarray, sigma: np.ndarray, tol: float = 1e-11) -> float:
    """max lambda in [0,1] with rho - lambda sigma >= 0, by eigenvalue bisection."""
    def feasible(lam: float) -> bool:
        return float(np.linalg.eigvalsh(rho - lam * sigma)[0]) >= -1e-12

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _productized_eigenvectors(rho: np.ndarray, dims, count: int) -> list[np.ndarray]:
    """Closest product states to the top eigenvectors (via Schmidt truncation)."""
    da, db = dims
    _, vecs = np.linalg.eigh(rho)
    out = []
    for k in range(1, min(count, rho.shape[0]) + 1):
        psi = vecs[:, -k].reshape(da, db)
        u, _, vh = np.linalg.svd(psi)
        # psi = sum_k s_k U[:,k] (x) Vh[k,:], so the top product is u0 (x) vh0
        out.append(np.kron(u[:, 0], vh[0, :]))
    return out


def _qubit_vector(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)], dtype=complex
    )


def _angles_of(vec: np.ndarray) -> tuple[float, float]:
    v = vec / np.linalg.norm(vec)
    v = v * np.exp(-1j * np.angle(v[0])) if abs(v[0]) > 1e-12 else v
    theta = 2 * math.acos(min(1.0, max(0.0, abs(v[0]))))
    phi = float(np.angle(v[1])) if abs(v[1]) > 1e-12 else 0.0
    return theta, phi


def bsa_upper(
    rho: DensityMatrix,
    dims: tuple[int, int] = (2, 2),
    n_products: int = 16,
    seed: int = 0,
    nm_max_fev: int = 4000,
    polish: bool = True,
) -> float:
    """Upper bound on the BSA: 1 - (best found separable weight).

    sigma is a mixture of up to n_products pure product states (16 suffices
    for two qubits by Caratheodory); the outer derivative-free search runs
    over Bloch angles and weight logits, the inner weight over eigenvalue
    bisection. Any search outcome is a valid upper bound; `polish` adds
    block-coordinate refinement passes that tighten mixed-state results.
    """
    if dims != (2, 2):
        raise DimensionError("the decomposition search is implemented for 2 qubits")
    rho_m = rho.entries
    rng = np.random.default_rng(seed)

    def products_of(angles: np.ndarray) -> np.ndarray:
        vs = np.empty((len(angles), 4), dtype=complex)
        for k, (ta, pa, tb, pb) in enumerate(angles):
            vs[k] = np.kron(_qubit_vector(ta, pa), _qubit_vector(tb, pb))
        return vs

    def sigma_of(params: np.ndarray) -> np.ndarray:
        ang = params[: 4 * n_products].reshape(n_products, 4)
        logits = params[4 * n_products:]
        weights = np.exp(logits - np.max(logits))
        weights /= weights.sum()
        vs = products_of(ang)
        return (vs.T * weights) @ vs.conj()

    def objective(params: np.ndarray) -> float:
        return -_max_separable_weight(rho_m, sigma_of(params))

    seeds = _productized_eigenvectors(rho_m, dims, 4)
    init_angles = []
    for k in range(n_products):
        if k < len(seeds):
            v = seeds[k].reshape(2, 2)
            u, _, vh = np.linalg.svd(v)
            ta, pa = _angles_of(u[:, 0])
            tb, pb = _angles_of(vh[0, :])
            init_angles.append([ta, pa, tb, pb])
        else:
            init_angles.append(
                [math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi),
                 math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi)]
            )
    x0 = np.concatenate([np.ravel(init_angles), np.zeros(n_products)])

    # Near-pure targets need a single product, out of reach of soft weights.
    best = 0.0
    for v in products_of(np.asarray(init_angles)):
        best = max(best, _max_separable_weight(rho_m, np.outer(v, v.conj())))
    best = max(best, -objective(x0))

    res = sp_optimize.minimize(
        objective, x0, method="Nelder-Mead",
        options={"maxfev": nm_max_fev, "xatol": 1e-8, "fatol": 1e-12},
    )
    best = max(best, -res.fun)
    if not polish:
        return 1.0 - best
    params = res.x.copy()

    # block-coordinate polish: the joint search space is too stiff for
    # Nelder-Mead, so refine one product's angles (4-dim) or the weight
    # logits (n_products-dim) at a time
    def block_objective(block_values, sl):
        trial = params.copy()
        trial[sl] = block_values
        return objective(trial)

    blocks = [slice(4 * k, 4 * k + 4) for k in range(n_products)]
    blocks.append(slice(4 * n_products, None))
    for sl in blocks:
        res_b = sp_optimize.minimize(
            block_objective, params[sl], args=(sl,), method="Nelder-Mead",
            options={"maxfev": 100, "xatol": 1e-9, "fatol": 1e-13},
        )
        if -res_b.fun > best:
            best = -res_b.fun
            params[sl] = res_b.x
    return 1.0 - best
