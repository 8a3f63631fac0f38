from Splitter.clustering import bin_and_cluster
from Splitter.partition import assign_partitions
from Splitter.patches import count_segments_per_patch, extract_patches
from Splitter.split_config import SplitConfig
from config.logger import get_logger

logger = get_logger(__name__)


def plan_split(images, annotations, cfg=None):
    """
    Patches every image, clusters the patches geographically and assigns clusters to partitions.

    Parameters:
      images (list): (name, MultiChannelRaster) pairs.
      annotations (list of Annotation): Dead-tree annotations in the images' map CRS.
      cfg (SplitConfig, optional): Split parameters.

    Returns:
      dict: JSON-ready split description with the patch table, the clusters, the assignment and
            the achieved fractions.
    """
    cfg = cfg or SplitConfig()
    centroids = [annotation.centroid for annotation in annotations]
    patch_rows = []
    for name, image in images:
        patches = extract_patches(image, cfg.patch_size, cfg.overlap_fraction, cfg.pad)
        counts = count_segments_per_patch(patches, centroids)
        for patch, count in zip(patches, counts):
            patch_rows.append({
                "image": name,
                "row0": patch.row0,
                "col0": patch.col0,
                "centroid_map": list(patch.centroid_map()),
                "segments": count,
            })
    logger.info("extracted %d patch(es) from %d image(s)", len(patch_rows), len(images))

    clusters = bin_and_cluster([row["centroid_map"] for row in patch_rows], cfg.bin_size,
                               [row["segments"] for row in patch_rows])
    split = assign_partitions(clusters, cfg.ratios, cfg.seed)
    for cluster in clusters:
        for patch_id in cluster.patch_ids:
            patch_rows[patch_id]["cluster"] = cluster.cluster_id
            patch_rows[patch_id]["partition"] = split.assignment[cluster.cluster_id]
    for patch_id, row in enumerate(patch_rows):
        row["id"] = patch_id

    return {
        "config": cfg.to_dict(),
        "patches": patch_rows,
        "clusters": [
            {"cluster_id": c.cluster_id, "patch_ids": c.patch_ids, "bins": [list(b) for b in c.bins],
             "segment_count": c.segment_count, "partition": split.assignment[c.cluster_id]}
            for c in clusters
        ],
        **split.to_dict(),
    }
