import numpy as np
from scipy.spatial.transform import Rotation

from liuw.estimation import consts
from liuw.estimation.manifold import Extrinsic, NavState, boxminus, boxplus
from liuw.sim.config import SimConfig


def random_rotation(rng, scale=np.pi):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return Rotation.from_rotvec(axis * rng.uniform(0, scale))


def random_state(rng):
    def extr():
        return Extrinsic(random_rotation(rng, 0.3), rng.normal(size=3) * 0.3)

    return NavState(random_rotation(rng), rng.normal(size=3) * 5,
                    rng.normal(size=3), rng.normal(size=3) * 0.01,
                    rng.normal(size=3) * 0.05,
                    (0.0, 0.0, -consts.STANDARD_GRAVITY) +
                    rng.normal(size=3) * 0.01,
                    extr(), extr(), extr())


def random_covariance(rng, scale=0.1):
    A = rng.normal(size=(consts.STATE_DIM, consts.STATE_DIM)) * scale
    return A @ A.T + 0.01 * np.eye(consts.STATE_DIM)


def numeric_jacobian(fun, x, eps=1e-6):
    """Central differences of ``fun`` through boxplus at ``x``"""
    cols = []
    for j in range(consts.STATE_DIM):
        d = np.zeros(consts.STATE_DIM)
        d[j] = eps
        cols.append((np.asarray(fun(boxplus(x, d))) -
                     np.asarray(fun(boxplus(x, -d)))) / (2 * eps))

    return np.column_stack(cols)


def numeric_state_jacobian(fun, x, eps=1e-6):
    """Central differences of a state-valued ``fun``, read through boxminus"""
    ref = fun(x)
    return numeric_jacobian(lambda y: boxminus(fun(y), ref), x, eps)


def short_sim(**changes):
    """A few seconds inside UWB coverage with a coarse LiDAR"""
    params = dict(duration=4.0, lidar_columns=45, lidar_rings=16)
    params.update(changes)
    return SimConfig(**params)
