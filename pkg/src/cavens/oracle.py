"""Independent truncated-Fock-space master-equation reference for the model.

Evolves the full three-mode density matrix under the Lindblad generator

    drho/dtau = -i[H, rho]
                + sum_x Gamma_x [ (nbar_x + 1) D[x] rho + nbar_x D[xd] rho ],

with H the interaction-picture Hamiltonian (detunings, beam-splitter
couplings to the cavity, classical drive on mode A) and
D[L]rho = L rho Ld - {Ld L, rho}/2.  Because the Hamiltonian is quadratic,
the moment equations integrated by ``dynamics`` are exact consequences of
this generator; the oracle therefore validates them up to truncation
leakage, and quantifies the error of the higher-order decoupling rules
which are *not* exact.

Everything is dense-vector/sparse-operator arithmetic; the basis dimension
is capped (default 512 = three modes at seven levels each) so superoperator
application stays trivially affordable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, sqrt
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .closure import (
    OperatorFactor,
    annihilator,
    creator,
    decouple3,
    decouple4,
    number_triple_product,
)
from .dynamics import IntegrationError, integrate
from .model import MOMENT_NAMES, Moment, MomentState, Scenario, SystemParams
from .witnesses import (
    MODE_KEYS,
    PAIR_KEYS,
    PARTITION_KEYS,
    WitnessRecord,
    evaluate,
)
from . import witnesses as _wit

__all__ = [
    "FockBasisSpec",
    "DensityMatrix",
    "Liouvillian",
    "PositivityError",
    "build_generator",
    "evolve",
    "evolve_path",
    "expectation",
    "moments_from_density",
    "exact_witnesses",
    "thermal_state",
    "fock_state",
    "coherent_state",
    "ClosureReport",
    "closure_report",
]

_MODE_INDEX = {"A": 0, "B": 1, "C": 2}


class PositivityError(RuntimeError):
    """Evolved state lost positivity beyond tolerance; truncation too small."""


@dataclass(frozen=True)
class FockBasisSpec:
    """Per-mode Fock truncation; levels 0..n_max are kept on all three modes."""

    n_max: int
    dim_cap: int = 512

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.dim > self.dim_cap:
            raise ValueError(
                f"basis dimension {self.dim} exceeds cap {self.dim_cap}"
            )

    @property
    def local_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return (self.n_max + 1) ** 3


@lru_cache(maxsize=8)
def _mode_ops(spec: FockBasisSpec):
    """Sparse annihilators and creators of the three modes on the full basis."""
    d = spec.local_dim
    a1 = sparse.diags(np.sqrt(np.arange(1, d)), 1, format="csr")
    eye = sparse.identity(d, format="csr")
    factors = [(a1, eye, eye), (eye, a1, eye), (eye, eye, a1)]
    lowering = [
        sparse.kron(sparse.kron(x, y), z).tocsr() for x, y, z in factors
    ]
    raising = [op.conj().T.tocsr() for op in lowering]
    return lowering, raising


def _op_for_factor(spec: FockBasisSpec, f: OperatorFactor) -> sparse.csr_matrix:
    lowering, raising = _mode_ops(spec)
    table = raising if f.daggered else lowering
    return table[_MODE_INDEX[f.mode]]


@dataclass(frozen=True)
class DensityMatrix:
    """Three-mode state on the truncated basis.

    A valid state is Hermitian (defect below 1e-10), unit trace (within
    1e-8) and positive up to a small numerical floor; ``validate`` checks
    those bounds and is called with looser floors on integrator output.
    """

    matrix: np.ndarray
    spec: FockBasisSpec

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.spec.dim, self.spec.dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match basis dim {self.spec.dim}"
            )
        object.__setattr__(self, "matrix", m)

    def validate(
        self,
        herm_tol: float = 1e-10,
        trace_tol: float = 1e-8,
        eig_floor: float = 1e-8,
    ) -> None:
        m = self.matrix
        herm = np.abs(m - m.conj().T).max()
        if herm > herm_tol:
            raise ValueError(f"hermiticity defect {herm:.3e} exceeds {herm_tol:g}")
        tr = np.trace(m)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace defect {abs(tr - 1.0):.3e} exceeds {trace_tol:g}")
        lowest = np.linalg.eigvalsh((m + m.conj().T) / 2.0).min()
        if lowest < -eig_floor:
            raise PositivityError(
                f"negative eigenvalue {lowest:.3e} below floor -{eig_floor:g}"
            )


def thermal_state(spec: FockBasisSpec, nbars: Sequence[float]) -> DensityMatrix:
    """Product of single-mode thermal states, renormalized after truncation."""
    rho = None
    for nbar in nbars:
        if nbar < 0:
            raise ValueError("thermal occupation must be >= 0")
        n = np.arange(spec.local_dim, dtype=float)
        if nbar == 0:
            p = np.zeros(spec.local_dim)
            p[0] = 1.0
        else:
            p = (nbar / (1.0 + nbar)) ** n
            p /= p.sum()
        rho = p if rho is None else np.kron(rho, p)
    state = DensityMatrix(np.diag(rho.astype(complex)), spec)
    state.validate()
    return state


def fock_state(spec: FockBasisSpec, occupations: Sequence[int]) -> DensityMatrix:
    """Projector onto a product number state |na, nb, nc>."""
    idx = 0
    for n in occupations:
        if not 0 <= n <= spec.n_max:
            raise ValueError(f"occupation {n} outside truncation 0..{spec.n_max}")
        idx = idx * spec.local_dim + int(n)
    m = np.zeros((spec.dim, spec.dim), dtype=complex)
    m[idx, idx] = 1.0
    return DensityMatrix(m, spec)


def coherent_state(spec: FockBasisSpec, alphas: Sequence[complex]) -> DensityMatrix:
    """Projector onto a product of truncated, renormalized coherent states."""
    vec = None
    for alpha in alphas:
        n = np.arange(spec.local_dim)
        c = np.array(
            [complex(alpha) ** k / sqrt(factorial(k)) for k in n], dtype=complex
        )
        c /= np.linalg.norm(c)
        vec = c if vec is None else np.kron(vec, c)
    m = np.outer(vec, vec.conj())
    return DensityMatrix(m, spec)


class Liouvillian:
    """The generator's action rho -> L(rho), kept in operator (matmul) form."""

    def __init__(self, spec: FockBasisSpec, params: SystemParams):
        self.spec = spec
        self.params = params
        lowering, raising = _mode_ops(spec)
        deltas = (params.delta_a, params.delta_b, params.delta_c)
        H = sum(
            delta * (ad @ a)
            for delta, a, ad in zip(deltas, lowering, raising)
        )
        a_A, a_B, a_C = lowering
        ad_A, ad_B, ad_C = raising
        H = H + params.g_a * (a_C @ ad_A + ad_C @ a_A)
        H = H + params.g_b * (a_C @ ad_B + ad_C @ a_B)
        H = H + params.chi * (ad_A + a_A)
        self._H = H.tocsr()
        self._H_T = self._H.T.tocsr()

        rates = (params.gamma_a, params.gamma_b, params.gamma_c)
        nbars = (params.n_a, params.n_b, params.n_c)
        self._channels = []
        for gamma, nbar, a, ad in zip(rates, nbars, lowering, raising):
            if gamma == 0.0:
                continue
            n_op = (ad @ a).tocsr()
            m_op = (a @ ad).tocsr()
            self._channels.append(
                (
                    gamma, nbar,
                    a, a.T.tocsr(), ad, ad.T.tocsr(),
                    n_op, n_op.T.tocsr(), m_op, m_op.T.tocsr(),
                )
            )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Evaluate -i[H, rho] plus all damping dissipators."""
        # right multiplication rho @ X computed as (X^T rho^T)^T to keep the
        # sparse operator on the left
        out = -1j * (self._H @ rho - (self._H_T @ rho.T).T)
        for gamma, nbar, a, aT, ad, adT, n_op, nT, m_op, mT in self._channels:
            down = a @ (adT @ rho.T).T - 0.5 * (n_op @ rho + (nT @ rho.T).T)
            out = out + gamma * (nbar + 1.0) * down
            if nbar > 0.0:
                up = ad @ (aT @ rho.T).T - 0.5 * (m_op @ rho + (mT @ rho.T).T)
                out = out + gamma * nbar * up
        return out


def build_generator(p: SystemParams, basis: FockBasisSpec) -> Liouvillian:
    """Lindblad generator of the model on the truncated basis."""
    return Liouvillian(basis, p)


def _integrate_rho(
    rho0: DensityMatrix,
    L: Liouvillian,
    t_eval: np.ndarray,
    abs_tol: float,
    rel_tol: float,
) -> np.ndarray:
    d = rho0.spec.dim
    sol = solve_ivp(
        lambda _t, y: L.apply(y.reshape(d, d)).ravel(),
        (0.0, float(t_eval[-1])),
        rho0.matrix.ravel(),
        method="RK45",
        t_eval=t_eval,
        rtol=rel_tol,
        atol=abs_tol,
    )
    if not sol.success:
        last = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"density-matrix integration failed: {sol.message}", last)
    return sol.y.T.reshape(len(t_eval), d, d)


def evolve(
    rho0: DensityMatrix,
    L: Liouvillian,
    t: float,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-8,
) -> DensityMatrix:
    """Propagate a state to time t and validate the result.

    Raises ``PositivityError`` when the evolved state has an eigenvalue
    below -1e-6, the signature of a too-small truncation.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return rho0
    raw = _integrate_rho(rho0, L, np.array([0.0, t]), abs_tol, rel_tol)[-1]
    state = DensityMatrix(raw, rho0.spec)
    state.validate(herm_tol=1e-8, trace_tol=1e-7, eig_floor=1e-6)
    return state


def evolve_path(
    rho0: DensityMatrix,
    L: Liouvillian,
    taus: np.ndarray,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-8,
) -> np.ndarray:
    """Raw density matrices sampled along a grid starting at 0."""
    taus = np.asarray(taus, dtype=float)
    if taus[0] != 0.0:
        raise ValueError("sample grid must start at 0")
    return _integrate_rho(rho0, L, taus, abs_tol, rel_tol)


@lru_cache(maxsize=4096)
def _word_op_entries(spec: FockBasisSpec, word: tuple):
    """COO entries of the operator product, cached per basis and word."""
    op = _op_for_factor(spec, word[0])
    for f in word[1:]:
        op = op @ _op_for_factor(spec, f)
    coo = op.tocoo()
    return coo.row.copy(), coo.col.copy(), coo.data.copy()


def expectation(
    rho: "DensityMatrix | np.ndarray",
    word: Sequence[OperatorFactor],
    spec: FockBasisSpec | None = None,
) -> complex:
    """Tr[rho * product(word)], exact on the truncated basis."""
    if isinstance(rho, DensityMatrix):
        spec = rho.spec
        rho = rho.matrix
    if spec is None:
        raise ValueError("spec is required when rho is a bare array")
    if len(word) > 6:
        raise ValueError("operator words longer than 6 are not supported")
    if not word:
        return complex(np.trace(rho))
    # Tr[rho O] = sum over stored entries O[r, c] * rho[c, r]
    rows, cols, data = _word_op_entries(spec, tuple(word))
    return complex(np.dot(data, rho[cols, rows]))


def _word_for_name(name: str) -> tuple[OperatorFactor, ...]:
    factors: list[OperatorFactor] = []
    for ch in name:
        if ch in "ABC":
            factors.append(OperatorFactor(ch, False))
        elif ch == "d":
            factors[-1] = factors[-1].conjugate
        else:
            raise ValueError(f"cannot parse moment name {name!r}")
    return tuple(factors)


_SLOT_WORDS = {Moment[name]: _word_for_name(name) for name in MOMENT_NAMES}


def moments_from_density(
    rho: "DensityMatrix | np.ndarray", spec: FockBasisSpec | None = None
) -> MomentState:
    """All 27 stored moments of a density matrix, for oracle cross-checks."""
    values = np.empty(27, dtype=complex)
    for slot, word in _SLOT_WORDS.items():
        values[slot] = expectation(rho, word, spec)
    return MomentState(values)


def _w(text: str) -> tuple[OperatorFactor, ...]:
    return _word_for_name(text)


def exact_witnesses(
    rho: "DensityMatrix | np.ndarray", spec: FockBasisSpec | None = None
) -> WitnessRecord:
    """The witness catalog computed from exact truncated-basis correlators.

    Second-moment-only witnesses (quadratures, the product inseparability
    witness, their combinations) are evaluated on the exact moments; the
    fourth- and sixth-order correlators are taken directly from rho instead
    of being decoupled.
    """
    if isinstance(rho, DensityMatrix):
        spec = rho.spec
        rho = rho.matrix
    # discard the integrator's antisymmetric noise so the moments are
    # conjugate-consistent at machine precision
    rho = (rho + rho.conj().T) / 2.0
    state = moments_from_density(rho, spec)
    base = evaluate(state)

    occ = {m: state[s].real for m, s in zip(MODE_KEYS, (Moment.AdA, Moment.BdB, Moment.CdC))}
    antibunch, mandel = {}, {}
    for m in MODE_KEYS:
        fourth = expectation(rho, _w(f"{m}d{m}d{m}{m}"), spec).real
        antibunch[m] = fourth - occ[m] ** 2
        mandel[m] = antibunch[m] / occ[m] if occ[m] >= _wit.OCCUPATION_FLOOR else float("nan")

    antibunch_pair, hz_e, hz_etilde, steering = {}, {}, {}, {}
    nn_exact = {}
    for key in PAIR_KEYS:
        a, b = key[0], key[1]
        nn = expectation(rho, _w(f"{a}d{a}{b}d{b}"), spec).real
        nn_exact[key] = nn
        antibunch_pair[key] = nn - occ[a] * occ[b]
        abd = expectation(rho, _w(f"{a}{b}d"), spec)
        ab = expectation(rho, _w(f"{a}{b}"), spec)
        hz_e[key] = nn - abs(abd) ** 2
        hz_etilde[key] = occ[a] * occ[b] - abs(ab) ** 2
    for key in _wit.ORDERED_PAIR_KEYS:
        x, y = key[0], key[1]
        pair = key if key in PAIR_KEYS else key[::-1]
        steering[key] = hz_e[pair] + occ[x] / 2.0

    nnn = expectation(rho, _w("AdABdBCdC"), spec).real
    bisep_e, bisep_eprime = {}, {}
    for part in PARTITION_KEYS:
        a, b = part[0], part[1]
        c = part[-1]
        pair = a + b if a + b in PAIR_KEYS else b + a
        abc_dag = expectation(rho, _w(f"{a}{b}{c}d"), spec)
        abc = expectation(rho, _w(f"{a}{b}{c}"), spec)
        bisep_e[part] = nnn - abs(abc_dag) ** 2
        bisep_eprime[part] = nn_exact[pair] * occ[c] - abs(abc) ** 2

    return WitnessRecord(
        mandel=mandel,
        antibunch=antibunch,
        antibunch_pair=antibunch_pair,
        var_x=base.var_x,
        var_y=base.var_y,
        var_x_pair=base.var_x_pair,
        var_y_pair=base.var_y_pair,
        duan=base.duan,
        hz_e=hz_e,
        hz_etilde=hz_etilde,
        steering=steering,
        bisep_e=bisep_e,
        bisep_eprime=bisep_eprime,
    )


@dataclass(frozen=True)
class ClosureReport:
    """Exact versus decoupled correlators along one scenario.

    ``exact`` holds oracle correlators, ``closed`` the same quantities from
    the moment pipeline with decoupling; witness records are carried both
    ways.  ``max_abs_error`` summarizes the largest discrepancy per
    quantity over the whole grid.
    """

    taus: np.ndarray
    correlator_names: tuple
    exact: dict
    closed: dict
    witness_exact: list
    witness_closed: list
    max_abs_error: dict

    def witness_error(self, column: str) -> float:
        names = WitnessRecord.column_names()
        i = names.index(column)
        diffs = [
            abs(we.column_values()[i] - wc.column_values()[i])
            for we, wc in zip(self.witness_exact, self.witness_closed)
        ]
        diffs = [d for d in diffs if np.isfinite(d)]
        return max(diffs) if diffs else float("nan")


_REPORT_CORRELATORS = ("nn_AB", "nn_BC", "nn_AC", "ABCd", "nnn")


def closure_report(scenario: Scenario, basis: FockBasisSpec) -> ClosureReport:
    """Quantify the decoupling error of the moment pipeline against the oracle.

    Runs the moment integration and the master-equation evolution on the
    same scenario (which must have phase-insensitive initial data, i.e.
    occupations only, so the oracle can start from the matching thermal
    product) and tabulates the pipeline's decoupled fourth/sixth-order
    correlators and witnesses against exact oracle values.
    """
    init = scenario.initial.values.copy()
    occs = [init[s].real for s in (Moment.AdA, Moment.BdB, Moment.CdC)]
    rest = init.copy()
    for s in (Moment.AdA, Moment.BdB, Moment.CdC):
        rest[s] = 0.0
    if np.abs(rest).max() > 0.0:
        raise ValueError(
            "closure_report needs phase-insensitive initial data (occupations only)"
        )

    traj = integrate(scenario)
    rho0 = thermal_state(basis, occs)
    L = build_generator(scenario.params, basis)
    rhos = evolve_path(rho0, L, traj.taus, abs_tol=1e-12, rel_tol=max(scenario.rel_tol, 1e-9))

    exact = {name: np.empty(len(traj), dtype=complex) for name in _REPORT_CORRELATORS}
    closed = {name: np.empty(len(traj), dtype=complex) for name in _REPORT_CORRELATORS}
    wit_exact, wit_closed = [], []
    for i in range(len(traj)):
        state = traj.state_at(i)
        rho = rhos[i]
        for key in PAIR_KEYS:
            a, b = key[0], key[1]
            closed[f"nn_{key}"][i] = decouple4(
                state, creator(a), annihilator(a), creator(b), annihilator(b)
            )
            exact[f"nn_{key}"][i] = expectation(rho, _w(f"{a}d{a}{b}d{b}"), basis)
        closed["ABCd"][i] = decouple3(
            state, annihilator("A"), annihilator("B"), creator("C")
        )
        exact["ABCd"][i] = expectation(rho, _w("ABCd"), basis)
        closed["nnn"][i] = number_triple_product(state)
        exact["nnn"][i] = expectation(rho, _w("AdABdBCdC"), basis)
        wit_closed.append(evaluate(state))
        wit_exact.append(exact_witnesses(rho, basis))

    max_err = {
        name: float(np.abs(exact[name] - closed[name]).max())
        for name in _REPORT_CORRELATORS
    }
    return ClosureReport(
        taus=traj.taus,
        correlator_names=_REPORT_CORRELATORS,
        exact=exact,
        closed=closed,
        witness_exact=wit_exact,
        witness_closed=wit_closed,
        max_abs_error=max_err,
    )
