from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from config.exceptions import ParameterError


@dataclass
class RegionCluster:
    """
    Geographically proximate patches that must share a partition.

    Attributes:
      cluster_id (int): 0-based, ordered by the cluster's smallest bin.
      patch_ids (list of int): Member patches.
      bins (list of tuple): Occupied (x_bin, y_bin) cells, 8-connected.
      segment_count (int): Dead-tree segments in the member patches.
    """
    cluster_id: int
    patch_ids: list = field(default_factory=list)
    bins: list = field(default_factory=list)
    segment_count: int = 0


def bin_and_cluster(patch_centroids, bin_size, segment_counts=None):
    """
    Hashes patches to square geographic bins and merges 8-adjacent occupied bins into clusters.

    Parameters:
      patch_centroids (list): (x, y) map coordinates, one per patch; the list index is the patch id.
      bin_size (float): Bin edge in map units (> 0).
      segment_counts (list of int, optional): Segments per patch; defaults to 0.

    Returns:
      list of RegionCluster: Every patch in exactly one cluster.
    """
    if not bin_size > 0:
        raise ParameterError(f"bin_size must be positive, got {bin_size}")
    if not len(patch_centroids):
        return []
    points = np.asarray(patch_centroids, dtype=np.float64)
    counts = np.zeros(len(points), dtype=np.int64) if segment_counts is None else np.asarray(segment_counts)
    patch_bins = np.floor(points / bin_size).astype(np.int64)
    bins, patch_to_bin = np.unique(patch_bins, axis=0, return_inverse=True)
    patch_to_bin = patch_to_bin.ravel()

    pairs = cKDTree(bins.astype(np.float64)).query_pairs(r=1.0, p=np.inf, output_type="ndarray").reshape(-1, 2)
    adjacency = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(bins), len(bins)))
    n_clusters, bin_to_cluster = connected_components(adjacency, directed=False)

    clusters = [RegionCluster(cluster_id=i) for i in range(n_clusters)]
    for bin_index, cluster_index in enumerate(bin_to_cluster):
        clusters[cluster_index].bins.append((int(bins[bin_index][0]), int(bins[bin_index][1])))
    for patch_id, bin_index in enumerate(patch_to_bin):
        cluster = clusters[bin_to_cluster[bin_index]]
        cluster.patch_ids.append(patch_id)
        cluster.segment_count += int(counts[patch_id])
    return clusters
