"""Step-recursive EFIM filtering and its stationary (Riccati) analysis.

Marginalising all past steps out of the joint information matrix leaves a
per-step recursion over (2K x 2K) slices:

    J_t = D_t - O_t - G_{t-1},   G_{t-1} = Gamma (J_{t-1} + Gamma)^{-1} Gamma

where D_t stacks each user's own information (measurement + spatial diagonal
+ transition precision), O_t the positive spatial couplings of the slice,
and G_{t-1} the information loss carried over the temporal link. The
matching efficiency slice is E_t = I - D_t^{-1} (O_t + G_{t-1}).

Under constant inputs the recursion J <- M + T - T (J + T)^{-1} T has a
closed-form fixed point

    J* = ( (1/2) T^{-1/2} (I + 4 T^{1/2} M^{-1} T^{1/2})^{1/2} T^{-1/2}
           - (1/2) T^{-1} )^{-1}

whose defining residual M + T - T (J* + T)^{-1} T - J* vanishes; the
residual is what this module verifies, scalar sanity check
j = (m + sqrt(m^2 + 4 m tau)) / 2.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import numpy.linalg as npl
from scipy.linalg import cho_factor, cho_solve

from .blocks import require_spd, spd_sqrt_and_inv_sqrt, symmetrize
from .errors import DimensionMismatch, SingularState
from .fim import measurement_blocks_at, prior_fim
from .scenario import ScenarioConfig, Trajectory, prior_model

__all__ = [
    "ConstantInputs",
    "ConvergenceCheck",
    "IterationResult",
    "PerUserState",
    "RecursiveState",
    "StationaryPoint",
    "check_convergence",
    "constant_inputs",
    "inject_disturbance",
    "iterate_to_convergence",
    "per_user_recursive",
    "recursive_step",
    "run_recursion",
    "states_to_csv",
    "stationary_point",
]

# Loewner comparisons tolerate eigenvalues this far below zero (relative to
# the spectral norm of the compared difference).
LOEWNER_SLACK = 1e-10


def _block_diag(blocks: np.ndarray) -> np.ndarray:
    """(K, 2, 2) stack -> (2K, 2K) block diagonal."""
    K = blocks.shape[0]
    out = np.zeros((2 * K, 2 * K))
    for k in range(K):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = blocks[k]
    return out


def _diag_blocks(mat: np.ndarray) -> np.ndarray:
    K = mat.shape[0] // 2
    return np.stack([mat[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] for k in range(K)])


def _off_part(mat: np.ndarray) -> np.ndarray:
    """Positive coupling part: minus the slice with its diagonal blocks zeroed."""
    out = -np.asarray(mat, dtype=float).copy()
    K = mat.shape[0] // 2
    for k in range(K):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = 0.0
    return out


@dataclass(frozen=True)
class PerUserState:
    """Marginal quantities of one user within a recursive slice."""

    efim: np.ndarray
    nominal: np.ndarray
    efficiency: np.ndarray
    bcrb: float


@dataclass(frozen=True)
class ConvergenceCheck:
    """Loewner condition D_t >= J_{t-1} + O_t + G_{t-1} and its margin.

    When it holds, the recursion cannot lose information at this step
    (J_t >= J_{t-1}); ``slack`` is the smallest eigenvalue of the
    difference, negative when the condition fails.
    """

    satisfied: bool
    slack: float


@dataclass(frozen=True)
class RecursiveState:
    """One step of the information recursion.

    ``efim`` is the (2K, 2K) per-step equivalent information; ``nominal``
    the (K, 2, 2) own-information blocks; ``spatial_off`` and
    ``temporal_carry`` the two subtracted couplings; ``efficiency`` the raw
    slice E = I - D^{-1}(O + G) and ``eoc_mean`` its normalised trace.
    The slice trace only sees block-diagonal coupling (the temporal carry),
    which is the dominant loss channel while tracking; the per-user
    marginal efficiencies in ``per_user`` capture the spatial part as
    well. ``next_measurement_scale`` lets a caller scale the following
    step's measurement blocks (disturbance injection).
    """

    t: int
    efim: np.ndarray
    nominal: np.ndarray
    spatial_off: np.ndarray
    temporal_carry: np.ndarray
    efficiency: np.ndarray
    per_user: tuple
    bcrb_mean: float
    eoc_mean: float
    condition_satisfied: bool
    slack: float
    next_measurement_scale: float = 1.0

    @property
    def n_users(self) -> int:
        return self.nominal.shape[0]


def check_convergence(
    prev_efim: np.ndarray,
    lambda_d_t: np.ndarray,
    lambda_ps_t: np.ndarray,
    gamma_prev: np.ndarray,
) -> ConvergenceCheck:
    """Evaluate the monotone-information condition for one prospective step."""
    gamma = _block_diag(np.asarray(gamma_prev, dtype=float))
    carry = _temporal_carry(np.asarray(prev_efim, dtype=float), gamma)
    nominal = _block_diag(
        np.asarray(lambda_d_t, dtype=float)
        + _diag_blocks(np.asarray(lambda_ps_t, dtype=float))
        + np.asarray(gamma_prev, dtype=float)
    )
    diff = nominal - (
        np.asarray(prev_efim, dtype=float) + _off_part(lambda_ps_t) + carry
    )
    diff = symmetrize(diff)
    eigs = npl.eigvalsh(diff)
    slack = float(eigs[0])
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    return ConvergenceCheck(
        satisfied=slack >= -LOEWNER_SLACK * max(scale, 1.0), slack=slack
    )


def _temporal_carry(prev_efim: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    inner = prev_efim + gamma
    try:
        solved = npl.solve(inner, gamma)
    except npl.LinAlgError as exc:
        raise SingularState(
            "previous EFIM plus transition precision is singular"
        ) from exc
    return symmetrize(gamma @ solved)


def recursive_step(
    prev: RecursiveState | None,
    lambda_d_t: np.ndarray,
    lambda_ps_t: np.ndarray,
    gamma_prev: np.ndarray | None,
) -> RecursiveState:
    """Advance the per-step EFIM recursion by one step.

    ``prev`` is None for the first step (no temporal carry). ``lambda_d_t``
    holds the (K, 2, 2) measurement blocks, ``lambda_ps_t`` the full
    (2K, 2K) spatial slice, and ``gamma_prev`` the (K, 2, 2) precisions of
    the transition into this step (ignored when ``prev`` is None).
    """
    lam = np.asarray(lambda_d_t, dtype=float)
    K = lam.shape[0]
    slice_ps = np.asarray(lambda_ps_t, dtype=float)
    if lam.shape != (K, 2, 2) or slice_ps.shape != (2 * K, 2 * K):
        raise DimensionMismatch(
            f"measurement blocks {lam.shape} and spatial slice {slice_ps.shape} "
            f"disagree about the user count"
        )

    if prev is None:
        t = 0
        scale = 1.0
        gamma_blocks = np.zeros((K, 2, 2))
        carry = np.zeros((2 * K, 2 * K))
        condition = ConvergenceCheck(satisfied=True, slack=float("inf"))
    else:
        if gamma_prev is None:
            raise DimensionMismatch("gamma_prev is required when prev is given")
        t = prev.t + 1
        scale = prev.next_measurement_scale
        gamma_blocks = np.asarray(gamma_prev, dtype=float)
        condition = check_convergence(prev.efim, scale * lam, slice_ps, gamma_blocks)
        carry = _temporal_carry(prev.efim, _block_diag(gamma_blocks))

    lam = scale * lam
    off = _off_part(slice_ps)
    nominal = lam + _diag_blocks(slice_ps) + gamma_blocks
    nominal_full = _block_diag(nominal)
    efim = symmetrize(nominal_full - off - carry)

    try:
        nominal_inv = np.stack([npl.inv(nominal[k]) for k in range(K)])
    except npl.LinAlgError as exc:
        raise SingularState(f"nominal block at step {t} is singular") from exc
    efficiency = np.eye(2 * K) - _block_diag(nominal_inv) @ (off + carry)

    try:
        chol = cho_factor(efim, lower=True)
    except npl.LinAlgError as exc:
        raise SingularState(f"recursive EFIM at step {t} lost positivity") from exc
    inverse = cho_solve(chol, np.eye(2 * K))

    users = []
    for k in range(K):
        sl = slice(2 * k, 2 * k + 2)
        marg = npl.inv(inverse[sl, sl])
        users.append(
            PerUserState(
                efim=symmetrize(marg),
                nominal=nominal[k],
                efficiency=nominal_inv[k] @ symmetrize(marg),
                bcrb=float(np.trace(inverse[sl, sl])),
            )
        )

    return RecursiveState(
        t=t,
        efim=efim,
        nominal=nominal,
        spatial_off=off,
        temporal_carry=carry,
        efficiency=efficiency,
        per_user=tuple(users),
        bcrb_mean=float(np.trace(inverse)) / (2 * K),
        eoc_mean=float(np.trace(efficiency)) / (2 * K),
        condition_satisfied=condition.satisfied,
        slack=condition.slack,
    )


def per_user_recursive(state: RecursiveState, k: int) -> PerUserState:
    """Marginal slice quantities of user k at this step."""
    if not (0 <= k < state.n_users):
        raise DimensionMismatch(f"user {k} outside 0..{state.n_users - 1}")
    return state.per_user[k]


def per_user_series(
    state: RecursiveState, k: int, max_terms: int = 10_000, tol: float = 1e-10
) -> np.ndarray:
    """User-k efficiency via the slice Neumann series (check route).

    E_k = (I + sum_{n>=1} [X^n]_kk)^{-1} with X = D^{-1}(O + G); agrees
    with the direct marginal D_k^{-1} ([J^{-1}]_kk)^{-1}.
    """
    K = state.n_users
    coupling = state.spatial_off + state.temporal_carry
    nominal_inv = _block_diag(
        np.stack([npl.inv(state.nominal[j]) for j in range(K)])
    )
    x = nominal_inv @ coupling
    sl = slice(2 * k, 2 * k + 2)
    slab = np.zeros((2 * K, 2))
    slab[sl, :] = np.eye(2)
    total = np.zeros((2, 2))
    for _ in range(max_terms):
        slab = x @ slab
        total = total + slab[sl, :]
        # stop on the whole slab: individual diagonal terms can vanish
        # structurally (odd powers of a hollow walk) long before the tail does
        if np.linalg.norm(slab) < tol:
            break
    return npl.inv(np.eye(2) + total)


def inject_disturbance(state: RecursiveState, scale: float) -> RecursiveState:
    """Scale the next step's measurement information (e.g. an SNR drop)."""
    if scale < 0.0:
        raise DimensionMismatch(f"measurement scale must be >= 0, got {scale}")
    return dataclasses.replace(state, next_measurement_scale=float(scale))


# ---------------------------------------------------------------------------
# constant inputs and the stationary point


@dataclass(frozen=True)
class ConstantInputs:
    """Per-step system inputs frozen at one slice.

    ``m_full`` = measurement blocks + full spatial slice (the constant
    per-step information gain); ``t_full`` the block-diagonal transition
    precision. The pieces are kept separately for efficiency bookkeeping.
    """

    lambda_d: np.ndarray
    spatial_slice: np.ndarray
    gamma: np.ndarray

    @property
    def n_users(self) -> int:
        return self.lambda_d.shape[0]

    @property
    def m_full(self) -> np.ndarray:
        return _block_diag(self.lambda_d) + self.spatial_slice

    @property
    def t_full(self) -> np.ndarray:
        return _block_diag(self.gamma)

    @property
    def spatial_off(self) -> np.ndarray:
        return _off_part(self.spatial_slice)

    @property
    def nominal_diag(self) -> np.ndarray:
        """(K, 2, 2) own-information blocks D_k = Lambda_D_k + Xi_kk + Gamma_k."""
        return self.lambda_d + _diag_blocks(self.spatial_slice) + self.gamma


def constant_inputs(
    config: ScenarioConfig,
    trajectory: Trajectory,
    step: int = 1,
    include_anchor: bool = False,
    trajectory_ensemble=None,
) -> ConstantInputs:
    """Freeze the recursion inputs at one step of a trajectory.

    Uses the measurement blocks and spatial slice of ``step`` and the
    precision of the transition into it. The default step 1 (second step)
    is the first one carrying temporal information.
    """
    if config.num_steps < 2:
        raise DimensionMismatch(
            "constant inputs need at least two steps for a transition"
        )
    step = int(step)
    if not (0 <= step < config.num_steps):
        raise DimensionMismatch(f"step {step} outside 0..{config.num_steps - 1}")
    lam = measurement_blocks_at(config, trajectory, step)
    pfim = prior_fim(
        config, prior_model(config, include_anchor=include_anchor), trajectory_ensemble
    )
    gamma_index = min(max(step - 1, 0), config.num_steps - 2)
    return ConstantInputs(
        lambda_d=lam,
        spatial_slice=np.asarray(pfim.spatial_slices[step]),
        gamma=config.transition_precision(gamma_index),
    )


@dataclass(frozen=True)
class StationaryPoint:
    """Closed-form fixed point of the constant-input recursion."""

    measurement_info: np.ndarray
    transition_info: np.ndarray
    j_star: np.ndarray
    residual: float

    def to_json(self) -> dict:
        return {
            "m": self.measurement_info.tolist(),
            "t": self.transition_info.tolist(),
            "j-star": self.j_star.tolist(),
            "residual": self.residual,
        }


def _riccati_residual(m: np.ndarray, t_mat: np.ndarray, j: np.ndarray) -> float:
    inner = npl.solve(j + t_mat, t_mat)
    resid = m + t_mat - t_mat @ inner - j
    return float(np.linalg.norm(resid) / max(np.linalg.norm(j), 1e-300))


def stationary_point(m: np.ndarray, t_mat: np.ndarray) -> StationaryPoint:
    """Solve J = M + T - T (J + T)^{-1} T in closed form.

    Both inputs must be SPD. The returned residual is the relative Frobenius
    defect of the fixed-point equation at the computed J*.
    """
    m = symmetrize(np.asarray(m, dtype=float))
    t_mat = symmetrize(np.asarray(t_mat, dtype=float))
    require_spd(m, "per-step information M")
    require_spd(t_mat, "transition precision T")

    t_root, t_inv_root = spd_sqrt_and_inv_sqrt(t_mat)
    core = np.eye(m.shape[0]) + 4.0 * t_root @ npl.solve(m, t_root)
    core_root, _ = spd_sqrt_and_inv_sqrt(symmetrize(core))
    inv_j = 0.5 * t_inv_root @ core_root @ t_inv_root - 0.5 * npl.inv(t_mat)
    j_star = symmetrize(npl.inv(symmetrize(inv_j)))
    return StationaryPoint(
        measurement_info=m,
        transition_info=t_mat,
        j_star=j_star,
        residual=_riccati_residual(m, t_mat, j_star),
    )


@dataclass(frozen=True)
class IterationResult:
    """Outcome of iterating the constant-input recursion.

    ``converged`` is False when the step budget ran out; the best iterate is
    still returned. Histories are per-step means (trace-based).
    """

    j_limit: np.ndarray
    steps: int
    converged: bool
    bcrb_history: np.ndarray
    eoc_history: np.ndarray | None


def iterate_to_convergence(
    m: np.ndarray,
    t_mat: np.ndarray,
    j_init: np.ndarray | None = None,
    max_steps: int = 500,
    tol: float = 1e-6,
    spatial_off: np.ndarray | None = None,
) -> IterationResult:
    """Iterate J <- M + T - T (J + T)^{-1} T until relative stagnation.

    Starting from ``j_init`` (default M, the carry-free first step). When
    ``spatial_off`` is given, an efficiency history is tracked using
    D = M + spatial_off + T as the nominal information.
    """
    m = symmetrize(np.asarray(m, dtype=float))
    t_mat = symmetrize(np.asarray(t_mat, dtype=float))
    side = m.shape[0]
    j = m.copy() if j_init is None else symmetrize(np.asarray(j_init, dtype=float))

    bcrb_hist = []
    eoc_hist = [] if spatial_off is not None else None
    nominal = m + t_mat + (spatial_off if spatial_off is not None else 0.0)
    converged = False
    steps = 0
    for n in range(1, max_steps + 1):
        carry = _temporal_carry(j, t_mat)
        j_next = symmetrize(m + t_mat - carry)
        bcrb_hist.append(float(np.trace(npl.inv(j_next))) / side)
        if eoc_hist is not None:
            coupling = spatial_off + carry
            eff = np.eye(side) - npl.solve(nominal, coupling)
            eoc_hist.append(float(np.trace(eff)) / side)
        delta = np.linalg.norm(j_next - j) / max(np.linalg.norm(j), 1e-300)
        j = j_next
        steps = n
        if delta < tol:
            converged = True
            break
    return IterationResult(
        j_limit=j,
        steps=steps,
        converged=converged,
        bcrb_history=np.asarray(bcrb_hist),
        eoc_history=None if eoc_hist is None else np.asarray(eoc_hist),
    )


# ---------------------------------------------------------------------------
# trajectory-driven recursion


def run_recursion(
    config: ScenarioConfig,
    trajectory: Trajectory,
    constant_from_step: int | None = None,
    disturbance_steps=(),
    disturbance_scale: float = 1.0,
    include_anchor: bool = False,
    trajectory_ensemble=None,
) -> list[RecursiveState]:
    """Drive the per-step recursion along a trajectory.

    With ``constant_from_step`` set, every step reuses that step's
    measurement blocks, spatial slice, and transition precision (the
    constant-input regime of the stationary analysis). ``disturbance_steps``
    lists 0-based steps whose measurement information is scaled by
    ``disturbance_scale``; all other steps run at scale 1.
    """
    T, K = config.num_steps, config.num_users
    disturbed = {int(s) for s in disturbance_steps}

    if constant_from_step is not None:
        inputs = constant_inputs(
            config,
            trajectory,
            step=constant_from_step,
            include_anchor=include_anchor,
            trajectory_ensemble=trajectory_ensemble,
        )

        def lam_at(t):
            return inputs.lambda_d

        def slice_at(t):
            return inputs.spatial_slice

        def gamma_at(t):
            return inputs.gamma

    else:
        pfim = prior_fim(
            config,
            prior_model(config, include_anchor=include_anchor),
            trajectory_ensemble,
        )

        def lam_at(t):
            return measurement_blocks_at(config, trajectory, t)

        def slice_at(t):
            return np.asarray(pfim.spatial_slices[t])

        def gamma_at(t):
            return config.transition_precision(t - 1)

    states: list[RecursiveState] = []
    prev: RecursiveState | None = None
    for t in range(T):
        lam = lam_at(t)
        if t == 0:
            if 0 in disturbed:
                lam = disturbance_scale * lam
            state = recursive_step(None, lam, slice_at(0), None)
        else:
            scale = disturbance_scale if t in disturbed else 1.0
            prev = inject_disturbance(prev, scale)
            state = recursive_step(prev, lam, slice_at(t), gamma_at(t))
        states.append(state)
        prev = state
    return states


def states_to_csv(states, path: str) -> None:
    """Write ``t,bcrb_mean,eoc_mean,condition_satisfied,slack`` (1-based t)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,bcrb_mean,eoc_mean,condition_satisfied,slack\n")
        for state in states:
            flag = "true" if state.condition_satisfied else "false"
            fh.write(
                f"{state.t + 1},{state.bcrb_mean!r},{state.eoc_mean!r},"
                f"{flag},{state.slack!r}\n"
            )
