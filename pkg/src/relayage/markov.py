"""Induced Markov chains on the truncated space and their stationary analysis.

Any deterministic policy induces a sparse chain with at most two successors
per state. The stationary distribution is obtained by a direct sparse solve
with one state pinned, after restricting to the unique recurrent class;
transient states carry zero mass. Residuals are reported so callers can
certify accuracy rather than trust the solver.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
from scipy.sparse.linalg import spsolve

from .model import Action, LinkParams, TruncatedStateSpace
from .policies import DeterministicPolicy, MixedPolicy


class StationaryError(RuntimeError):
    """No unique stationary distribution, or the solve failed to certify."""


def transition_matrix(
    space: TruncatedStateSpace, actions: np.ndarray, lp: LinkParams
) -> sp.csr_matrix:
    """Row-stochastic chain matrix induced by a per-state action array."""
    n = space.n_states
    recv_stay, recv_jump, fwd_stay, fwd_sync = space.successor_indices(lp)
    forward = np.asarray(actions, dtype=bool)

    stay_idx = np.where(forward, fwd_stay, recv_stay)
    hit_idx = np.where(forward, fwd_sync, recv_jump)
    hit_p = np.where(forward, lp.q, lp.p)

    rows = np.concatenate([np.arange(n), np.arange(n)])
    cols = np.concatenate([stay_idx, hit_idx])
    data = np.concatenate([1.0 - hit_p, hit_p])
    # coo -> csr sums duplicate entries, which the saturated corner needs
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def mixed_transition_matrix(
    space: TruncatedStateSpace, mp: MixedPolicy, lp: LinkParams
) -> sp.csr_matrix:
    """Chain of the per-visit randomized mixture.

    Identical to the theta2 chain except at the single differing state,
    whose row is the alpha-blend of the two action rows.
    """
    P2 = transition_matrix(space, mp.theta2.actions, lp)
    if not mp.differing or mp.alpha == 0.0:
        return P2
    P1 = transition_matrix(space, mp.theta1.actions, lp)
    if mp.alpha == 1.0:
        return P1
    s = mp.differing[0]
    i = space.index_of(s.k, s.d)
    blend = P2.tolil()
    blend[i] = mp.alpha * P1[i].toarray() + (1.0 - mp.alpha) * P2[i].toarray()
    return blend.tocsr()


def stationary_distribution(P: sp.csr_matrix, residual_tol: float = 1e-10):
    """Stationary probability vector of a row-stochastic sparse matrix.

    Requires exactly one recurrent class; transient states get zero mass.
    Returns (pi, residual) where residual = max |pi P - pi|.
    """
    n = P.shape[0]
    n_comp, labels = csgraph.connected_components(P, directed=True, connection="strong")
    # a class is recurrent iff it has no edge leaving it
    rows, cols = P.nonzero()
    leaves = labels[rows] != labels[cols]
    open_classes = np.zeros(n_comp, dtype=bool)
    np.logical_or.at(open_classes, labels[rows[leaves]], True)
    recurrent = np.nonzero(~open_classes)[0]
    if len(recurrent) != 1:
        raise StationaryError(
            f"{len(recurrent)} recurrent classes; stationary distribution not unique"
        )
    members = np.nonzero(labels == recurrent[0])[0]

    pi = np.zeros(n)
    if len(members) == 1:
        pi[members[0]] = 1.0
    else:
        Q = P if len(members) == n else P[members][:, members]
        Q = Q.tocsc()
        m = len(members)
        M = (sp.identity(m, format="csc") - Q.T).tocsc()
        # pin the first member's mass to 1, solve for the rest, renormalize
        y = spsolve(M[1:, 1:], -M[1:, [0]].toarray().ravel())
        unnorm = np.concatenate([[1.0], np.asarray(y).ravel()])
        unnorm = np.maximum(unnorm, 0.0)
        pi[members] = unnorm / unnorm.sum()

    residual = float(np.abs(pi @ P - pi).max())
    if residual > residual_tol:
        raise StationaryError(f"stationary residual {residual:.3e} above {residual_tol:.1e}")
    return pi, residual


def policy_long_run_metrics(
    policy: DeterministicPolicy | MixedPolicy,
    lp: LinkParams,
    space: TruncatedStateSpace | None = None,
) -> tuple[float, float]:
    """(average destination age, forwarding rate) of a policy's chain.

    Accepts a deterministic policy or a mixture; the mixture uses per-visit
    randomization at its single differing state.
    """
    if isinstance(policy, MixedPolicy):
        space = space or policy.theta1.space
        P = mixed_transition_matrix(space, policy, lp)
        fwd_mass_weights = policy.alpha * (policy.theta1.actions == Action.FORWARD) + (
            1.0 - policy.alpha
        ) * (policy.theta2.actions == Action.FORWARD)
    else:
        space = space or policy.space
        P = transition_matrix(space, policy.actions, lp)
        fwd_mass_weights = (policy.actions == Action.FORWARD).astype(float)

    pi, _ = stationary_distribution(P)
    avg_aoi = float(((space.ks + space.ds) * pi).sum())
    rate = float((fwd_mass_weights * pi).sum())
    return avg_aoi, rate
