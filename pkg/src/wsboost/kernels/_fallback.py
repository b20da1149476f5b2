"""Pure numpy/scipy implementations of the distance kernels."""

import numpy as np
from scipy.spatial.distance import pdist


def mean_pairwise_distance(x):
    if x.shape[0] < 2:
        raise ValueError("need at least two rows")
    return float(pdist(x).mean())


def mean_indexed_distance(x, ii, jj):
    if len(ii) == 0:
        raise ValueError("no pairs given")
    return float(np.linalg.norm(x[ii] - x[jj], axis=1).mean())


def point_distances(x, center):
    return np.linalg.norm(x - center[None, :], axis=1)
