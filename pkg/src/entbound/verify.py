"""Built-in verification suite: fast ground-truth checks behind `verify`.

Each check raises CheckFailure with a short reason; the runner reports one
line per check and the first failing property by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import (
    bsa_from_product,
    gr_from_product,
    gr_tangent_ratio,
    wineland_bounds,
    wineland_moment_data,
)
from .criteria import (
    WitnessParams,
    optimal_shifts,
    qubit_context,
    spectral_constants,
    wineland_criterion,
    witness_product,
)
from .operators import (
    collective_spectral_bounds,
    collective_spin,
    commutator,
    eigen_bounds,
    partial_transpose,
    HermitianOperator,
)
from .oracle import (
    DensityMatrix,
    bsa_upper,
    embed_symmetric_state,
    gr_ppt,
    membership_check,
    min_over_product_states,
    schmidt_robustness,
)
from .simulator import (
    SplitConfig,
    css_x,
    exact_moments,
    oat_evolve,
    optimal_squeezing_rotation,
    rotate_x,
    split_state_moments,
)


class CheckFailure(Exception):
    pass


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CheckFailure(message)


def _squeezed(n, mu):
    s = oat_evolve(css_x(n), mu)
    return rotate_x(s, optimal_squeezing_rotation(s))


def check_su2_algebra():
    for n in range(1, 11):
        ops = {a: collective_spin(n, a) for a in "xyz"}
        for a, b, c in (("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")):
            err = np.max(np.abs(commutator(ops[a], ops[b]) - 1j * ops[c].entries))
            _require(err < 1e-10, f"[J_{a},J_{b}] != i J_{c} at N={n} (err {err:.1e})")
        j = n / 2
        total = sum(op.entries @ op.entries for op in ops.values())
        err = np.max(np.abs(total - j * (j + 1) * np.eye(n + 1)))
        _require(err < 1e-9, f"Casimir mismatch at N={n} (err {err:.1e})")


def check_spectral_bounds():
    for n in (1, 5, 12, 20):
        for axis in "xyz":
            analytic = collective_spectral_bounds(n, axis)
            numeric = eigen_bounds(collective_spin(n, axis))
            _require(
                abs(analytic.lambda_min - numeric.lambda_min) < 1e-10
                and abs(analytic.lambda_max - numeric.lambda_max) < 1e-10,
                f"analytic vs numeric bounds differ at N={n}, axis {axis}",
            )


def check_partial_transpose():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = HermitianOperator(0.5 * (a + a.conj().T))
    twice = partial_transpose(partial_transpose(h, (2, 2)), (2, 2))
    _require(np.allclose(twice.entries, h.entries), "partial transpose is not an involution")
    bell = np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2
    for p, ppt in ((0.2, True), (1 / 3, True), (0.5, False)):
        rho = HermitianOperator(p * bell + (1 - p) * np.eye(4) / 4)
        min_eig = np.linalg.eigvalsh(partial_transpose(rho, (2, 2)).entries)[0]
        _require(
            (min_eig >= -1e-12) == ppt, f"Werner PPT threshold wrong at p={p}"
        )


def check_simulator_brute_force():
    n = 4
    state = _squeezed(n, 0.3)
    md = exact_moments(state)
    psi = embed_symmetric_state(state.amplitudes)
    from .operators import collective_spin_embedded

    ops = [collective_spin_embedded(n, a).entries for a in "xyz"]
    for i in range(3):
        mean_i = np.real(np.vdot(psi, ops[i] @ psi))
        _require(
            abs(mean_i - md.mean[i]) < 1e-10,
            f"mean J_{'xyz'[i]} differs from full-tensor value",
        )
        for j in range(3):
            sym = 0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])
            cov_ij = np.real(np.vdot(psi, sym @ psi)) - mean_i * np.real(
                np.vdot(psi, ops[j] @ psi)
            )
            _require(
                abs(cov_ij - md.covariance[i, j]) < 1e-10,
                f"covariance ({i},{j}) differs from full-tensor value",
            )


def check_split_moments():
    state = _squeezed(4, 0.3)
    bp = split_state_moments(state, SplitConfig(0.5))
    md = exact_moments(state)
    for i in range(3):
        total_mean = bp.mean[i] + bp.mean[i + 3]
        _require(
            abs(total_mean - md.mean[i]) < 1e-10,
            "regional means do not add to the parent mean",
        )
        var_sum = (
            bp.covariance[i, i]
            + bp.covariance[i + 3, i + 3]
            + 2 * bp.covariance[i, i + 3]
        )
        _require(
            abs(var_sum - md.covariance[i, i]) < 1e-10,
            "Var(J^A + J^B) does not reproduce the parent variance",
        )


def check_witness_validity():
    n = 4
    state = _squeezed(n, 0.3)
    md = exact_moments(state)
    crit = wineland_criterion(n)
    t = math.sqrt(md.covariance[2, 2] / (4 * n))
    w = witness_product(crit, WitnessParams(optimal_shifts(crit, md).s, t), qubit_context(n))
    val = min_over_product_states(w, (2,) * n, n_starts=300, seed=0)
    _require(val >= -1e-6, f"witness goes negative on product states ({val:.2e})")


def check_witness_membership():
    for n in (4, 6):
        state = _squeezed(n, 0.3)
        md = exact_moments(state)
        crit = wineland_criterion(n)
        t = math.sqrt(md.covariance[2, 2] / (4 * n))
        w = witness_product(crit, WitnessParams(optimal_shifts(crit, md).s, t), qubit_context(n))
        consts = spectral_constants(crit, t=t)
        _require(
            membership_check(w, 4 * t * consts.n, sign=1),
            f"BSA witness-set membership fails at N={n}",
        )
        _require(
            membership_check(w, consts.m_t, sign=-1),
            f"GR witness-set membership fails at N={n}",
        )


def check_gr_ppt_known_values():
    bell_vec = np.array([1, 0, 0, 1]) / math.sqrt(2)
    bell = DensityMatrix(np.outer(bell_vec, bell_vec.conj()))
    val = gr_ppt(bell, (2, 2))
    _require(abs(val - 1.0) < 1e-6, f"gr_ppt(Bell) = {val}, expected 1")
    _require(
        abs(schmidt_robustness(bell_vec, (2, 2)) - 1.0) < 1e-12,
        "Schmidt robustness of Bell differs from 1",
    )
    mixed = DensityMatrix(np.eye(4) / 4)
    _require(gr_ppt(mixed, (2, 2)) == 0.0, "gr_ppt of the maximally mixed state is nonzero")


def check_soundness_sandwich():
    from .operators import collective_spin_embedded

    ops = [collective_spin_embedded(2, a).entries for a in "xyz"]
    rng = np.random.default_rng(1)
    for k in range(6):
        psi = embed_symmetric_state(_squeezed(2, float(rng.uniform(0.2, 1.2))).amplitudes)
        mix = float(rng.uniform(0.0, 0.3))
        rho = (1 - mix) * np.outer(psi, psi.conj()) + mix * np.eye(4) / 4
        dm = DensityMatrix(rho)
        mean = np.array([np.real(np.trace(rho @ op)) for op in ops])
        cov = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                sym = 0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])
                cov[i, j] = np.real(np.trace(rho @ sym)) - mean[i] * mean[j]
        from .moments import MomentData

        md = MomentData(2.0, mean, cov)
        crit = wineland_criterion(2)
        bsa = bsa_from_product(crit, md).value
        gr = gr_from_product(crit, md).value
        upper = bsa_upper(dm, (2, 2), seed=k, nm_max_fev=400, polish=False)
        ppt = gr_ppt(dm, (2, 2))
        _require(bsa <= upper + 1e-6, f"BSA bound {bsa:.4f} exceeds oracle {upper:.4f}")
        _require(gr <= ppt + 1e-6, f"GR bound {gr:.6f} exceeds oracle {ppt:.6f}")


def check_paper_regression():
    md = wineland_moment_data(476, 32.0, 0.980)
    rep = wineland_bounds(md)
    _require(abs(rep.xi2 - 0.280) < 1e-3, f"xi^2 = {rep.xi2}")
    _require(abs(rep.bsa.value - 0.461) < 5e-3, f"BSA = {rep.bsa.value}")
    _require(abs(rep.gr_first_order - 1.453e-3) < 2e-5, f"GR first order = {rep.gr_first_order}")
    fixed = gr_tangent_ratio(wineland_criterion(476), md, 0.245)
    _require(rep.gr.value >= fixed - 1e-15, "optimized GR below the fixed-tangent value")


ALL_CHECKS = [
    ("su2_algebra_and_casimir", check_su2_algebra),
    ("spectral_bounds_analytic_vs_numeric", check_spectral_bounds),
    ("partial_transpose_and_werner_ppt", check_partial_transpose),
    ("simulator_vs_full_tensor", check_simulator_brute_force),
    ("split_moment_consistency", check_split_moments),
    ("witness_validity_on_product_states", check_witness_validity),
    ("witness_set_membership", check_witness_membership),
    ("gr_ppt_known_values", check_gr_ppt_known_values),
    ("soundness_sandwich_two_qubits", check_soundness_sandwich),
    ("published_working_point_regression", check_paper_regression),
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def run_checks(names=None) -> list[CheckResult]:
    results = []
    for name, fn in ALL_CHECKS:
        if names and name not in names:
            continue
        try:
            fn()
        except CheckFailure as exc:
            results.append(CheckResult(name, False, str(exc)))
        except Exception as exc:  # unexpected breakage is also a failure
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
        else:
            results.append(CheckResult(name, True))
    return results
