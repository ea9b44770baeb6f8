# see LICENSE
"""
Iterated error-state Kalman update

Each iterate x_j is written as x_prior [+] e_j. The prior of the error
around x_j then has mean -J^-1 e_j and covariance P_J = J^-1 P J^-T,
where J is block diagonal with the first-order inverse right Jacobian
I + 1/2 [e_theta]x on every rotation block and identity elsewhere. The
step is::

    d = -K r - (I - K H) J^-1 e_j
    K = P_J H^T (H P_J H^T + R)^-1

which is one Gauss-Newton step on the MAP objective. The posterior
covariance is (I - K0 H) P with H taken at the last iterate and K0 the
gain against the prior itself, so fusing a measurement never raises the
trace of P.

Frozen blocks take no correction; their rows of the covariance are left
as they are apart from the cross terms with active blocks.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import linalg

from liuw.errors import NumericalFailure, SingularInnovation
from liuw.estimation import consts
from liuw.estimation.manifold import boxminus, boxplus
from liuw.utils import skew, symmetrize

logger = logging.getLogger(__name__)

DEFAULT_FROZEN = ('gravity', 'extr_L', 'extr_U', 'extr_W')


@dataclass(frozen=True)
class UpdateConfig:
    """
    :ivar max_iters: iteration limit
    :ivar converge_eps: stop once the step norm falls below this
    :ivar freeze: names of tangent blocks (see
                  :data:`liuw.estimation.consts.BLOCKS`) kept fixed
    """
    max_iters: int = 4
    converge_eps: float = 1e-6
    freeze: tuple = DEFAULT_FROZEN

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

        if not self.converge_eps > 0:
            raise ValueError("converge_eps must be positive")

        unknown = set(self.freeze) - set(consts.BLOCKS)
        if unknown:
            raise ValueError("unknown frozen blocks: %s"
                             % ", ".join(sorted(unknown)))

        object.__setattr__(self, 'freeze', tuple(self.freeze))

    def active_indices(self):
        """Tangent indices the update may correct"""
        mask = np.ones(consts.STATE_DIM, dtype=bool)
        for name in self.freeze:
            mask[consts.BLOCKS[name]] = False

        return np.flatnonzero(mask)


@dataclass(frozen=True)
class UpdateResult:
    """
    :ivar iters: iterations run (0 when nothing was fused)
    :ivar residual_stats: source -> {'count': rows, 'mean_abs': mean |r|}
                          at the final linearization
    :ivar converged: the last step was below ``converge_eps``
    :ivar step_norm: norm of the last step
    """
    x_post: object
    P_post: np.ndarray
    iters: int
    residual_stats: dict = field(default_factory=dict)
    converged: bool = True
    step_norm: float = 0.0


def _pullback(e):
    """J^-1 to first order: I - 1/2 [theta]x on the rotation blocks"""
    Jinv = np.eye(consts.STATE_DIM)
    rot_slices = [consts.SLICE_ROT] + \
        [rot for rot, _ in consts.EXTRINSIC_SLICES.values()]
    for s in rot_slices:
        Jinv[s, s] -= 0.5 * skew(e[s])

    return Jinv


def _collect(providers, x):
    blocks = []
    for provider in providers:
        out = provider(x)
        if out is None:
            continue

        if isinstance(out, (list, tuple)):
            blocks.extend(b for b in out if b is not None and len(b))
        elif len(out):
            blocks.append(out)

    return blocks


def _stack(blocks):
    rs, Hs = [], []
    for block in blocks:
        r, H = block.whitened()
        rs.append(r)
        Hs.append(H)

    return np.concatenate(rs), np.vstack(Hs)


def _stats(blocks):
    stats = {}
    for block in blocks:
        entry = stats.setdefault(block.source, {'count': 0, 'sum_abs': 0.0})
        entry['count'] += len(block)
        entry['sum_abs'] += float(np.abs(block.r).sum())

    return dict((src, {'count': e['count'],
                       'mean_abs': e['sum_abs'] / e['count']})
                for src, e in stats.items())


def _gain(P_aa, H_a):
    """Kalman gain for whitened rows (unit measurement noise)"""
    n, dim = H_a.shape
    if n > dim:
        try:
            info = linalg.cho_factor(P_aa)
            A = H_a.T @ H_a + linalg.cho_solve(info, np.eye(dim))
            return linalg.cho_solve(linalg.cho_factor(A), H_a.T)
        except linalg.LinAlgError:
            logger.debug("information form failed, using the plain gain")

    S = H_a @ P_aa @ H_a.T + np.eye(n)
    try:
        factor = linalg.cho_factor(S)
    except linalg.LinAlgError:
        raise SingularInnovation("stacked innovation covariance is singular")

    return linalg.cho_solve(factor, H_a @ P_aa).T


def update(x_prior, P_prior, providers, cfg=None):
    """
    Fuses the measurements produced by ``providers`` into the prior

    :type x_prior: NavState
    :param P_prior: 36x36 covariance
    :param providers: callables taking the current iterate and returning
                      a :class:`ResidualBlock`, a list of them or None
    :type cfg: UpdateConfig

    :raise NumericalFailure: an iterate became non-finite
    :raise SingularInnovation: the innovation covariance is singular

    :rtype: UpdateResult
    """
    cfg = cfg or UpdateConfig()
    P_prior = np.asarray(P_prior, dtype=float)
    if not providers:
        return UpdateResult(x_prior, P_prior, 0)

    act = cfg.active_indices()
    frz = np.setdiff1d(np.arange(consts.STATE_DIM), act)
    x = x_prior
    blocks, H_a = None, None
    iters, step, converged = 0, 0.0, False

    for iters in range(1, cfg.max_iters + 1):
        current = _collect(providers, x)
        if not current:
            if blocks is None:
                return UpdateResult(x_prior, P_prior, 0)
            iters -= 1
            break

        blocks = current
        r, H = _stack(blocks)
        e = boxminus(x, x_prior)
        Jinv = _pullback(e)
        P_J = Jinv @ P_prior @ Jinv.T
        H_a = H[:, act]
        K = _gain(P_J[np.ix_(act, act)], H_a)

        pull = (Jinv @ e)[act]
        delta = np.zeros(consts.STATE_DIM)
        delta[act] = -K @ r - pull + K @ (H_a @ pull)
        if not np.all(np.isfinite(delta)):
            raise NumericalFailure("non-finite step at iteration %d" % iters)

        x = boxplus(x, delta)
        step = float(np.linalg.norm(delta))
        if step < cfg.converge_eps:
            converged = True
            break

    if blocks is None:
        return UpdateResult(x_prior, P_prior, 0)

    P_aa = P_prior[np.ix_(act, act)]
    IKH = np.eye(len(act)) - _gain(P_aa, H_a) @ H_a
    P_post = P_prior.copy()
    P_post[np.ix_(act, act)] = IKH @ P_aa
    if len(frz):
        cross = IKH @ P_prior[np.ix_(act, frz)]
        P_post[np.ix_(act, frz)] = cross
        P_post[np.ix_(frz, act)] = cross.T

    P_post = symmetrize(P_post)
    if not np.all(np.isfinite(P_post)):
        raise NumericalFailure("non-finite posterior covariance")

    stats = _stats(blocks)
    logger.debug("update: %d iterations, step %.3g, rows %s"
                 % (iters, step, dict((k, v['count'])
                                      for k, v in stats.items())))
    return UpdateResult(x, P_post, iters, stats, converged, step)
