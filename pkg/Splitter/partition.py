from dataclasses import dataclass, field

import numpy as np

from Splitter.split_config import check_ratios
from config.constants import DEFAULT_RATIOS, PARTITIONS, TRAIN
from config.logger import get_logger

logger = get_logger(__name__)

# Relative tolerance when comparing partition deficits.
DEFICIT_TOLERANCE = 1e-9


@dataclass
class SplitAssignment:
    """
    Partition of every cluster into train, validation or test.

    Attributes:
      assignment (dict): cluster_id -> partition name.
      segment_totals (dict): partition -> dead-tree segments.
      patch_counts (dict): partition -> patches.
      ratios (tuple): Target (train, validation, test) fractions.
      fractions (dict): partition -> achieved segment fraction.
      warning (str | None): Set when the split is best-effort.
    """
    assignment: dict = field(default_factory=dict)
    segment_totals: dict = field(default_factory=dict)
    patch_counts: dict = field(default_factory=dict)
    ratios: tuple = DEFAULT_RATIOS
    fractions: dict = field(default_factory=dict)
    warning: str = None

    def members(self, partition):
        return sorted(cid for cid, name in self.assignment.items() if name == partition)

    def to_dict(self):
        return {
            "assignment": {str(cid): name for cid, name in sorted(self.assignment.items())},
            "segment_totals": self.segment_totals,
            "patch_counts": self.patch_counts,
            "ratios": list(self.ratios),
            "fractions": self.fractions,
            "warning": self.warning,
        }


def assign_partitions(clusters, ratios=DEFAULT_RATIOS, seed=0):
    """
    Greedy deficit assignment of whole clusters to partitions.

    Clusters are taken by segment count descending (equal counts in a seeded random order) and each
    goes to the partition with the largest deficit, target_fraction * grand_total - current_total.
    Equal deficits favour train, then validation, then test.

    Parameters:
      clusters (list of RegionCluster): Clusters with segment counts.
      ratios (tuple): Target (train, validation, test) fractions summing to 1.
      seed (int): Seed of the tie-breaking shuffle.

    Returns:
      SplitAssignment: The assignment with totals and achieved fractions. A single cluster goes
                       to train with a warning; fewer than three clusters also warn.
    """
    check_ratios(ratios)
    result = SplitAssignment(ratios=tuple(ratios),
                             segment_totals={name: 0 for name in PARTITIONS},
                             patch_counts={name: 0 for name in PARTITIONS})
    if len(clusters) == 1:
        result.warning = "single cluster: everything assigned to train"
    elif 0 < len(clusters) < len(PARTITIONS):
        result.warning = f"only {len(clusters)} clusters: split is best-effort"
    if result.warning:
        logger.warning(result.warning)

    rng = np.random.default_rng(seed)
    shuffle = rng.permutation(len(clusters))
    order = sorted(range(len(clusters)), key=lambda i: (-clusters[i].segment_count, shuffle[i]))
    grand_total = sum(cluster.segment_count for cluster in clusters)
    targets = np.array(ratios, dtype=np.float64) * grand_total
    current = np.zeros(len(PARTITIONS), dtype=np.float64)
    tolerance = DEFICIT_TOLERANCE * max(grand_total, 1)

    for i in order:
        cluster = clusters[i]
        if len(clusters) == 1:
            choice = PARTITIONS.index(TRAIN)
        else:
            deficits = targets - current
            choice = int(np.flatnonzero(deficits >= deficits.max() - tolerance)[0])
        name = PARTITIONS[choice]
        current[choice] += cluster.segment_count
        result.assignment[cluster.cluster_id] = name
        result.segment_totals[name] += cluster.segment_count
        result.patch_counts[name] += len(cluster.patch_ids)

    result.fractions = {name: (result.segment_totals[name] / grand_total if grand_total else 0.0)
                        for name in PARTITIONS}
    return result
