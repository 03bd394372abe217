"""Information-coupling analysis of the assembled EFIM.

The assembled information J splits as J = D - A: D keeps each state's own
(nominal) information — measurement block plus the diagonal blocks of both
prior parts — and A carries the nonnegative couplings between states (zero
diagonal). Left-normalising by D gives a transition operator Q = D^{-1} A
whose rows, together with the absorption column R = D^{-1} (measurement +
anchor) blocks, sum to identity: the information flow behaves like an
absorbing random walk over (step, user) states.

Three quantities per state follow:

* the coupling excess Delta = sum_{n>=1} [Q^n] restricted to the state,
  so that the marginal EFIM is D (I + Delta)^{-1};
* the efficiency-of-coupling matrix E = (I + Delta)^{-1}, whose half-trace
  in [0, 1] scores how much nominal information survives marginalisation;
* first-passage probabilities of the walk: F (return to the state before
  absorption) and F_to_B (absorption first), with F + F_to_B = I and
  F_to_B = E.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

import numpy.linalg as npl

from .blocks import (
    BlockMatrix,
    block_index,
    block_slice,
    spd_sqrt_and_inv_sqrt,
    spectral_radius,
    symmetrize,
)
from .errors import (
    DimensionMismatch,
    SeriesDiverged,
    SingularBlock,
    SingularEfim,
    SingularInner,
)
from .fim import MeasurementFim, PriorFim

__all__ = [
    "DASplit",
    "EocReport",
    "HittingProbabilities",
    "Ptpm",
    "SeriesResult",
    "build_ptpm",
    "delta_direct",
    "delta_series",
    "eoc_report",
    "hitting_probabilities",
    "split_d_a",
]

# Default truncation of the coupling Neumann series.
SERIES_MAX_TERMS = 10_000
SERIES_TOL = 1e-10


@dataclass(frozen=True)
class DASplit:
    """Diagonal/coupling split J = D - A of an assembled EFIM.

    ``nominal_blocks`` holds the (T, K, 2, 2) diagonal D; ``coupling`` the
    full matrix A with zero diagonal blocks and +precision couplings off it.
    ``absorb_extra`` carries prior information that acts like a measurement
    for the walk (the step-0 anchor), needed so absorption rows balance.
    """

    nominal_blocks: np.ndarray
    coupling: BlockMatrix
    absorb_extra: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.nominal_blocks.shape[0]

    @property
    def n_users(self) -> int:
        return self.nominal_blocks.shape[1]

    def nominal(self, t: int, k: int) -> np.ndarray:
        return self.nominal_blocks[t, k]


def split_d_a(efim: BlockMatrix, mfim: MeasurementFim, pfim: PriorFim) -> DASplit:
    """Split the EFIM into nominal diagonal and coupling off-diagonal parts."""
    T, K = efim.n_steps, efim.n_users
    if (mfim.n_steps, mfim.n_users) != (T, K) or (pfim.n_steps, pfim.n_users) != (
        T,
        K,
    ):
        raise DimensionMismatch("EFIM, measurement, and prior grids disagree")

    nominal = np.zeros((T, K, 2, 2))
    for t in range(T):
        spatial_diag = pfim.spatial_diag(t)
        for k in range(K):
            block = mfim.lambda_d[t, k] + spatial_diag[k]
            if t > 0:
                block = block + pfim.temporal[t - 1, k]
            if t < T - 1:
                block = block + pfim.temporal[t, k]
            nominal[t, k] = block

    diag = np.zeros_like(efim.data)
    for t in range(T):
        for k in range(K):
            g = block_index(t, k, K)
            diag[block_slice(g), block_slice(g)] = nominal[t, k]
    coupling = BlockMatrix(diag - efim.data, T, K)

    absorb_extra = np.zeros((T, K, 2, 2))
    if pfim.include_anchor:
        absorb_extra[0, :] = pfim.anchor_precision * np.eye(2)

    return DASplit(nominal_blocks=nominal, coupling=coupling, absorb_extra=absorb_extra)


@dataclass(frozen=True)
class Ptpm:
    """Pseudo transition probability matrix of the information walk.

    ``transient`` is the (2TK, 2TK) operator Q = D^{-1} A between transient
    states; ``absorption`` the (2TK, 2) column R into the absorbing state;
    ``matrix`` the assembled [[Q, R], [0, I]]. Every block row of [Q, R]
    sums to the 2x2 identity.
    """

    transient: np.ndarray
    absorption: np.ndarray
    matrix: np.ndarray
    n_steps: int
    n_users: int

    def row_sum_residual(self) -> float:
        """Largest block-row deviation from the identity row sum."""
        stacked = np.tile(np.eye(2), (self.n_steps * self.n_users, 1))
        resid = self.transient @ stacked + self.absorption - stacked
        return float(np.max(np.abs(resid)))

    def to_csv(self, path: str) -> None:
        """Dense dump of the full transition matrix (debug aid)."""
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.matrix:
                fh.write(",".join(repr(float(x)) for x in row))
                fh.write("\n")


def _solve_nominal(split: DASplit, t: int, k: int, rhs: np.ndarray) -> np.ndarray:
    try:
        return npl.solve(split.nominal_blocks[t, k], rhs)
    except npl.LinAlgError as exc:
        raise SingularBlock(
            f"nominal information block ({t}, {k}) is singular"
        ) from exc


def build_ptpm(split: DASplit, mfim: MeasurementFim) -> Ptpm:
    """Left-normalise the split by D into walk operators Q and R.

    The absorption column collects the truly external information of each
    state: its measurement block plus, at step 0, the anchor block — both
    tie the state to something outside the (step, user) grid, which is
    exactly what absorption means for the walk.
    """
    T, K = split.n_steps, split.n_users
    side = 2 * T * K
    transient = np.zeros((side, side))
    absorption = np.zeros((side, 2))
    for t in range(T):
        for k in range(K):
            g = block_index(t, k, K)
            rows = block_slice(g)
            transient[rows, :] = _solve_nominal(
                split, t, k, split.coupling.data[rows, :]
            )
            absorption[rows, :] = _solve_nominal(
                split, t, k, mfim.lambda_d[t, k] + split.absorb_extra[t, k]
            )

    matrix = np.zeros((side + 2, side + 2))
    matrix[:side, :side] = transient
    matrix[:side, side:] = absorption
    matrix[side:, side:] = np.eye(2)
    return Ptpm(
        transient=transient,
        absorption=absorption,
        matrix=matrix,
        n_steps=T,
        n_users=K,
    )


@dataclass(frozen=True)
class SeriesResult:
    """Truncated Neumann sum of the coupling excess for one state.

    ``value`` is the raw (possibly asymmetric) 2x2 sum; ``terms_used`` how
    many powers were accumulated; ``converged`` whether the block-Frobenius
    increment fell below tolerance before the term budget ran out.
    """

    value: np.ndarray
    terms_used: int
    converged: bool
    spectral_radius: float


def coupling_spectral_radius(split: DASplit) -> float:
    """Spectral radius of Q = D^{-1} A via its symmetric similar form.

    D^{1/2} Q D^{-1/2} = D^{-1/2} A D^{-1/2} shares Q's (real) spectrum and
    is symmetric, which keeps power iteration well behaved.
    """
    T, K = split.n_steps, split.n_users
    side = 2 * T * K
    inv_roots = np.zeros((side, side))
    for t in range(T):
        for k in range(K):
            g = block_index(t, k, K)
            _, inv_root = spd_sqrt_and_inv_sqrt(split.nominal_blocks[t, k])
            inv_roots[block_slice(g), block_slice(g)] = inv_root
    similar = inv_roots @ split.coupling.data @ inv_roots
    return spectral_radius(similar)


def delta_series(
    split: DASplit,
    t: int,
    k: int,
    max_terms: int = SERIES_MAX_TERMS,
    tol: float = SERIES_TOL,
) -> SeriesResult:
    """Coupling excess of state (t, k) by explicit Neumann summation.

    Accumulates the (t, k) diagonal blocks of Q^n for n >= 1, propagating a
    (2TK, 2) slab so no full matrix power is ever formed. Raises
    SeriesDiverged when the walk operator has spectral radius >= 1.
    """
    radius = coupling_spectral_radius(split)
    if radius >= 1.0:
        raise SeriesDiverged(
            f"coupling operator has spectral radius {radius:.6f} >= 1; "
            "the Neumann series has no sum"
        )
    T, K = split.n_steps, split.n_users
    side = 2 * T * K
    g = block_index(t, k, K)
    rows = block_slice(g)

    slab = np.zeros((side, 2))
    slab[rows, :] = np.eye(2)
    total = np.zeros((2, 2))
    converged = False
    terms = 0
    coupling = split.coupling.data
    previous_increment = np.inf
    for n in range(1, max_terms + 1):
        # one walk step: left-multiply by Q = D^{-1} A, block row by block row
        slab = coupling @ slab
        for tt in range(T):
            for kk in range(K):
                r = block_slice(block_index(tt, kk, K))
                slab[r, :] = _solve_nominal(split, tt, kk, slab[r, :])
        term = slab[rows, :]
        total = total + term
        terms = n
        increment = float(np.linalg.norm(term))
        # walks with no self loop contribute only on even/odd powers, so a
        # single vanishing increment proves nothing; require two in a row
        if increment < tol and previous_increment < tol:
            converged = True
            break
        previous_increment = increment
    return SeriesResult(
        value=total, terms_used=terms, converged=converged, spectral_radius=radius
    )


def delta_direct(efim: BlockMatrix, split: DASplit, t: int, k: int) -> np.ndarray:
    """Coupling excess from the full inverse: [J^{-1}]_gg D_g - I.

    Returns the raw matrix; it is generally not symmetric (D and the inverse
    block need not commute), and symmetrising it would break the exact
    identity D (I + Delta)^{-1} = marginal EFIM that consumers rely on.
    """
    g = block_index(t, k, efim.n_users)
    rows = block_slice(g)
    try:
        chol = cho_factor(efim.data, lower=True)
    except npl.LinAlgError as exc:
        raise SingularEfim("EFIM is not positive definite") from exc
    rhs = np.zeros((efim.side, 2))
    rhs[rows, :] = np.eye(2)
    inv_cols = cho_solve(chol, rhs)
    inv_block = inv_cols[rows, :]
    return inv_block @ split.nominal_blocks[t, k] - np.eye(2)


@dataclass(frozen=True)
class HittingProbabilities:
    """First-passage split of the information walk started at one state.

    ``return_before_absorb`` is F (come back to the start before hitting
    the absorbing state); ``absorb_first`` is F_to_B. They sum to identity,
    and F_to_B equals the efficiency matrix (I + Delta)^{-1}.
    """

    return_before_absorb: np.ndarray
    absorb_first: np.ndarray

    def identity_residual(self) -> float:
        return float(
            np.max(np.abs(self.return_before_absorb + self.absorb_first - np.eye(2)))
        )


def hitting_probabilities(ptpm: Ptpm, t: int, k: int) -> HittingProbabilities:
    """First-passage probabilities by eliminating the other transient states.

    With the start state's rows/columns removed from Q, one linear solve
    yields both where the walk goes first: back to the start
    (F = Q_{g,-g} (I - Q_{-g})^{-1} Q_{-g,g}, the start has no self loop)
    or into absorption (F_to_B = R_g + Q_{g,-g} (I - Q_{-g})^{-1} R_{-g}).
    """
    K = ptpm.n_users
    side = 2 * ptpm.n_steps * K
    g = block_index(t, k, K)
    own = np.arange(2 * g, 2 * g + 2)
    rest = np.setdiff1d(np.arange(side), own)

    q_or = ptpm.transient[np.ix_(own, rest)]
    q_ro = ptpm.transient[np.ix_(rest, own)]
    q_rr = ptpm.transient[np.ix_(rest, rest)]
    rhs = np.concatenate([q_ro, ptpm.absorption[rest, :]], axis=1)
    try:
        solved = npl.solve(np.eye(rest.size) - q_rr, rhs)
    except npl.LinAlgError as exc:
        raise SingularInner(
            f"taboo system for state ({t}, {k}) is singular"
        ) from exc
    ret = q_or @ solved[:, :2]
    absorb = ptpm.absorption[own, :] + q_or @ solved[:, 2:]
    return HittingProbabilities(return_before_absorb=ret, absorb_first=absorb)


@dataclass(frozen=True)
class EocReport:
    """Per-state efficiency-of-coupling summary of one EFIM.

    Scalar fields are (T, K) arrays: ``eoc`` = half-trace of the efficiency
    matrix, ``delta_trace`` the trace of the coupling excess,
    ``f_to_b_trace`` the trace of the absorption-first probability, and
    ``bcrb`` the per-state trace bound. Matrix fields keep symmetrised
    copies for inspection; traces are unaffected by the symmetrisation.
    """

    eoc: np.ndarray
    delta_trace: np.ndarray
    f_to_b_trace: np.ndarray
    bcrb: np.ndarray
    efficiency_matrices: np.ndarray
    absorb_matrices: np.ndarray
    mean_eoc: float
    mean_bcrb: float
    total_bcrb: float

    @property
    def n_steps(self) -> int:
        return self.eoc.shape[0]

    @property
    def n_users(self) -> int:
        return self.eoc.shape[1]

    def to_csv(self, path: str) -> None:
        """Write ``t,k,eoc,delta_trace,f_to_b_trace,bcrb`` (1-based ids)."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,k,eoc,delta_trace,f_to_b_trace,bcrb\n")
            for t in range(self.n_steps):
                for k in range(self.n_users):
                    fh.write(
                        f"{t + 1},{k + 1},{self.eoc[t, k]!r},"
                        f"{self.delta_trace[t, k]!r},"
                        f"{self.f_to_b_trace[t, k]!r},{self.bcrb[t, k]!r}\n"
                    )


def eoc_report(efim: BlockMatrix, split: DASplit, ptpm: Ptpm) -> EocReport:
    """Efficiency, coupling excess, hitting probabilities, and bounds."""
    T, K = efim.n_steps, efim.n_users
    try:
        chol = cho_factor(efim.data, lower=True)
    except npl.LinAlgError as exc:
        raise SingularEfim("EFIM is not positive definite") from exc
    inverse = cho_solve(chol, np.eye(efim.side))

    eoc = np.zeros((T, K))
    delta_tr = np.zeros((T, K))
    f_to_b_tr = np.zeros((T, K))
    per_bcrb = np.zeros((T, K))
    eff_mats = np.zeros((T, K, 2, 2))
    absorb_mats = np.zeros((T, K, 2, 2))
    for t in range(T):
        for k in range(K):
            g = block_index(t, k, K)
            rows = block_slice(g)
            inv_block = inverse[rows, rows]
            delta = inv_block @ split.nominal_blocks[t, k] - np.eye(2)
            eff = npl.inv(np.eye(2) + delta)
            hit = hitting_probabilities(ptpm, t, k)
            eoc[t, k] = 0.5 * float(np.trace(eff))
            delta_tr[t, k] = float(np.trace(delta))
            f_to_b_tr[t, k] = float(np.trace(hit.absorb_first))
            per_bcrb[t, k] = float(np.trace(inv_block))
            eff_mats[t, k] = symmetrize(eff)
            absorb_mats[t, k] = symmetrize(hit.absorb_first)

    return EocReport(
        eoc=eoc,
        delta_trace=delta_tr,
        f_to_b_trace=f_to_b_tr,
        bcrb=per_bcrb,
        efficiency_matrices=eff_mats,
        absorb_matrices=absorb_mats,
        mean_eoc=float(np.mean(eoc)),
        mean_bcrb=float(np.mean(per_bcrb)),
        total_bcrb=float(np.trace(inverse)),
    )
